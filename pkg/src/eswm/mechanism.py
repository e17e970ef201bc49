"""H-ESWM double auction and the depreciation/punctuality-blind benchmark.

Pipeline: greedy winner selection on each side, trimming to equal sizes with
critical-value temporary prices, a budget-balance check with rank-order
matching, and finally scaling each pair's prices by the fraction of value that
survived until the worker's submission.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .model import RequesterProfile, WorkerProfile, sample_submission_times, task_valuation

# stand-in for a zero depreciation speed in ratio and price arithmetic
ALPHA_FLOOR = 1e-9


@dataclass(frozen=True)
class MechanismParams:
    capacity: int
    beta_alpha: float = 0.5
    beta_lambda: float = 0.5

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        if self.beta_alpha < 0 or self.beta_lambda < 0:
            raise ValueError("beta exponents must be nonnegative")


@dataclass
class AuctionOutcome:
    winners_r: list = field(default_factory=list)
    winners_w: list = field(default_factory=list)
    threshold_r: RequesterProfile | None = None
    threshold_w: WorkerProfile | None = None
    matches: list = field(default_factory=list)
    temp_fees: dict = field(default_factory=dict)
    temp_payments: dict = field(default_factory=dict)
    effective_fees: dict = field(default_factory=dict)
    effective_payments: dict = field(default_factory=dict)
    submissions: dict = field(default_factory=dict)
    revoked: bool = False

    @property
    def platform_utility_pre(self) -> float:
        return sum(self.temp_fees.values()) - sum(self.temp_payments.values())

    @property
    def platform_utility_post(self) -> float:
        return sum(self.effective_fees.values()) - sum(self.effective_payments.values())


class OpCounter:
    """Tally of pairwise ratio comparisons made during winner selection."""

    def __init__(self):
        self.comparisons = 0


def requester_ratio(req: RequesterProfile, beta_alpha: float) -> float:
    return req.max_valuation / (max(req.alpha, ALPHA_FLOOR) ** beta_alpha * req.task_size)


def worker_ratio(w: WorkerProfile, beta_lambda: float) -> float:
    return w.cost / w.lam ** beta_lambda


def _greedy_select(agents, scores, capacity, counter):
    """Repeatedly take the highest-scoring agent until ``capacity + 1`` are taken.

    Ties go to the lexicographically smallest id.  The last one taken has the
    lowest score of the selection and is split off as the threshold agent.
    """
    order = sorted(range(len(agents)), key=lambda k: agents[k].id)
    pool = np.array([scores[k] for k in order], dtype=float)
    chosen = []
    while len(chosen) != capacity + 1:
        remaining = len(agents) - len(chosen)
        k = int(np.argmax(pool))
        if counter is not None:
            counter.comparisons += remaining - 1
        chosen.append(order[k])
        pool[k] = -np.inf
        if remaining == 1:
            break
    if counter is not None:
        counter.comparisons += len(chosen) - 1
    selected = [agents[k] for k in chosen]
    # greedy order is already monotone, so the minimum of the selection is its tail
    return selected[:-1], selected[-1]


def wrsa(R: Sequence[RequesterProfile], params: MechanismParams, counter: OpCounter | None = None):
    """Winning requester selection: highest ``v / (alpha^beta * |task|)`` first."""
    if not R:
        return [], None
    scores = [requester_ratio(r, params.beta_alpha) for r in R]
    return _greedy_select(list(R), scores, params.capacity, counter)


def wwsa(W: Sequence[WorkerProfile], params: MechanismParams, counter: OpCounter | None = None):
    """Winning worker selection: lowest ``c / lambda^beta`` first."""
    if not W:
        return [], None
    scores = [-worker_ratio(w, params.beta_lambda) for w in W]
    return _greedy_select(list(W), scores, params.capacity, counter)


def trim(R_s, W_s, r_th, w_th, params: MechanismParams):
    """Equalise both winner lists and compute critical-value temporary prices.

    Returns ``(R_s, W_s, r_th, w_th, Q, P)`` with ``Q``/``P`` keyed by agent id.
    """
    R_s, W_s = list(R_s), list(W_s)
    if not R_s or not W_s:
        return [], [], r_th, w_th, {}, {}
    if len(R_s) < len(W_s):
        w_th = W_s[len(R_s)]
        W_s = W_s[:len(R_s)]
    elif len(R_s) > len(W_s):
        r_th = R_s[len(W_s)]
        R_s = R_s[:len(W_s)]

    ba, bl = params.beta_alpha, params.beta_lambda
    unit_th = r_th.max_valuation / (max(r_th.alpha, ALPHA_FLOOR) ** ba * r_th.task_size)
    Q = {r.id: max(r.alpha, ALPHA_FLOOR) ** ba * unit_th * r.task_size for r in R_s}
    cost_th = w_th.cost / w_th.lam ** bl
    P = {w.id: cost_th * w.lam ** bl for w in W_s}
    return R_s, W_s, r_th, w_th, Q, P


def match(R_s, W_s, r_th, w_th, params: MechanismParams):
    """Trim, check budget balance, and pair winners by rank.

    Returns ``(matches, Q, P, revoked, R_s, W_s, r_th, w_th)``.  An auction that
    cannot form a single pair is reported as revoked, like one that fails the
    budget check.
    """
    R_s, W_s, r_th, w_th, Q, P = trim(R_s, W_s, r_th, w_th, params)
    if not R_s or sum(P.values()) > sum(Q.values()):
        return [], {}, {}, True, [], [], r_th, w_th
    matches = [(r.id, w.id) for r, w in zip(R_s, W_s)]
    return matches, Q, P, False, R_s, W_s, r_th, w_th


def price(matches, Q, P, submissions: Mapping[str, float], requesters: Mapping[str, RequesterProfile]):
    """Scale each pair's temporary prices by the surviving share of the task's value."""
    Q_eff, P_eff = {}, {}
    for rid, wid in matches:
        if wid not in submissions:
            raise KeyError(f"no submission time recorded for matched worker {wid}")
        req = requesters[rid]
        share = task_valuation(req, submissions[wid]) / req.max_valuation
        Q_eff[rid] = share * Q[rid]
        P_eff[wid] = share * P[wid]
    return Q_eff, P_eff


def sample_for_matches(R_s, W_s, rng: np.random.Generator, true_workers: Mapping[str, WorkerProfile] | None = None):
    """Draw a submission time for every matched worker.

    ``true_workers`` maps worker id to the profile that actually drives behaviour;
    when omitted the profile the platform saw is used.
    """
    if not R_s:
        return {}
    ws = [true_workers[w.id] if true_workers is not None else w for w in W_s]
    t = sample_submission_times(
        [w.mu for w in ws], [w.sigma for w in ws],
        [r.deadline for r in R_s], [r.expiry for r in R_s], rng)
    return {w.id: float(x) for w, x in zip(W_s, t)}


def run_eswm(R, W, params: MechanismParams, submissions: Mapping[str, float] | None = None,
             rng: np.random.Generator | None = None, true_workers=None,
             counter: OpCounter | None = None, effective_pricing: bool = True) -> AuctionOutcome:
    """Run one full auction.

    Submission times are either given (``submissions``) or drawn from ``rng``.
    With ``effective_pricing=False`` the temporary prices are final.
    """
    R_s, r_th = wrsa(R, params, counter)
    W_s, w_th = wwsa(W, params, counter)
    matches, Q, P, revoked, R_s, W_s, r_th, w_th = match(R_s, W_s, r_th, w_th, params)
    out = AuctionOutcome(threshold_r=r_th, threshold_w=w_th, revoked=revoked)
    if revoked:
        return out
    if submissions is None:
        if rng is None:
            raise ValueError("either submissions or rng is required")
        subs = sample_for_matches(R_s, W_s, rng, true_workers)
    else:
        subs = {w.id: float(submissions[w.id]) for w in W_s if w.id in submissions}
    if effective_pricing:
        Q_eff, P_eff = price(matches, Q, P, subs, {r.id: r for r in R_s})
    else:
        Q_eff, P_eff = dict(Q), dict(P)
    out.winners_r, out.winners_w, out.matches = R_s, W_s, matches
    out.temp_fees, out.temp_payments = Q, P
    out.effective_fees, out.effective_payments = Q_eff, P_eff
    out.submissions = subs
    return out


def run_benchmark(R, W, params: MechanismParams, submissions=None, rng=None, true_workers=None,
                  counter=None, effective_pricing: bool = True) -> AuctionOutcome:
    """Same pipeline with both exponents at zero: ranks by ``v/|task|`` and by cost alone."""
    flat = MechanismParams(params.capacity, 0.0, 0.0)
    return run_eswm(R, W, flat, submissions, rng, true_workers, counter, effective_pricing)


MECHANISMS = {"eswm": run_eswm, "benchmark": run_benchmark}
