"""Ground-truth engines the mechanism is checked against.

* optimal capacity-limited assignment via the Hungarian method, plus a brute
  force enumerator for small instances;
* a Monte-Carlo estimate of the expected task value;
* a misreport probe for truthfulness, monotonicity and critical values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import permutations, combinations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .mechanism import run_eswm
from .model import expected_valuation_array, sample_submission_times, valuation_array

# matchings enumerated by exhaustive_optimal before it refuses
MAX_ENUMERATION = 2_000_000


def score_matrix(R, W) -> np.ndarray:
    """Entry (j, i) is worker i's expected value for requester j's task minus i's cost."""
    if not R or not W:
        return np.zeros((len(R), len(W)))
    col = lambda xs: np.asarray(xs, float)[:, None]
    row = lambda xs: np.asarray(xs, float)[None, :]
    ev = expected_valuation_array(
        col([r.max_valuation for r in R]), col([r.alpha for r in R]),
        col([r.deadline for r in R]), col([r.expiry for r in R]),
        row([w.mu for w in W]), row([w.sigma for w in W]))
    return ev - row([w.cost for w in W])


def _as_scores(R, W=None):
    if W is None:
        return np.asarray(R, dtype=float)
    return score_matrix(R, W)


def _selection(pairs, shape):
    L = np.zeros(shape, dtype=int)
    for j, i in pairs:
        L[j, i] = 1
    return L


def hungarian_optimal(R, W=None, K: int = 1, method: str = "exact"):
    """Best selection of at most ``K`` disjoint requester/worker pairs.

    ``R`` and ``W`` are agent lists, or ``R`` alone is a precomputed score matrix.
    Returns ``(L, welfare)`` with ``L`` a 0/1 matrix.

    ``method="exact"`` solves the capacity-limited problem optimally: dummy rows
    and columns absorb all but ``K`` requesters and workers, and pairs worth less
    than nothing are clipped to zero so that leaving them out is free.
    ``method="top_k"`` instead solves the unconstrained assignment and keeps its
    ``K`` best nonnegative pairs, which can fall short of the optimum.
    """
    S = _as_scores(R, W)
    m, n = S.shape
    k = min(K, m, n)
    if k <= 0:
        return np.zeros((m, n), dtype=int), 0.0
    gain = np.maximum(S, 0.0)

    if method == "top_k":
        rows, cols = linear_sum_assignment(gain, maximize=True)
        pairs = sorted(zip(rows, cols), key=lambda p: (-S[p], p))[:k]
    elif method == "exact":
        size = m + n - k
        big = np.zeros((size, size))
        big[:m, :n] = gain
        # dummy requesters may not take dummy workers, forcing exactly k real pairs
        big[m:, n:] = -(gain.sum() + 1.0) * size
        rows, cols = linear_sum_assignment(big, maximize=True)
        pairs = [(j, i) for j, i in zip(rows, cols) if j < m and i < n]
    else:
        raise ValueError(f"unknown method {method!r}")

    pairs = [(int(j), int(i)) for j, i in pairs if S[j, i] > 0]
    return _selection(pairs, (m, n)), float(sum(S[p] for p in pairs))


def count_matchings(m: int, n: int, K: int) -> int:
    return sum(math.comb(m, s) * math.comb(n, s) * math.factorial(s) for s in range(min(m, n, K) + 1))


def exhaustive_optimal(R, W=None, K: int = 1):
    """Enumerate every matching with at most ``K`` pairs and return the best."""
    S = _as_scores(R, W)
    m, n = S.shape
    if count_matchings(m, n, max(K, 0)) > MAX_ENUMERATION:
        raise ValueError(f"{m}x{n} with K={K} is too large to enumerate")
    best, best_pairs = 0.0, []
    for s in range(1, min(m, n, K) + 1):
        for rows in combinations(range(m), s):
            for cols in permutations(range(n), s):
                total = sum(S[j, i] for j, i in zip(rows, cols))
                if total > best:
                    best, best_pairs = total, list(zip(rows, cols))
    return _selection(best_pairs, (m, n)), float(best)


def mc_expected_valuation(req, w, n_samples: int, rng: np.random.Generator):
    """Sample-mean estimate of the expected task value and its standard error."""
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    t = sample_submission_times(w.mu, w.sigma, req.deadline, req.expiry, rng, size=n_samples)
    v = valuation_array(req.max_valuation, req.alpha, req.deadline, req.expiry, t)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(n_samples))


@dataclass
class ProbePoint:
    report: float
    wins: bool
    utility: float
    delta: float


@dataclass
class ProbeReport:
    agent_id: str
    side: str
    truth: float
    truthful_wins: bool
    truthful_utility: float
    price: float | None
    points: list = field(default_factory=list)

    @property
    def violations(self):
        return [p for p in self.points if p.delta > 1e-9]

    @property
    def flips(self):
        return [p for p in self.points if p.wins != self.truthful_wins]


def _pre_submission_utility(outcome, agent_id, side, truth):
    if outcome.revoked:
        return False, 0.0, None
    if side == "requester":
        if agent_id in outcome.temp_fees:
            q = outcome.temp_fees[agent_id]
            return True, truth - q, q
    elif agent_id in outcome.temp_payments:
        p = outcome.temp_payments[agent_id]
        return True, p - truth, p
    return False, 0.0, None


def truthfulness_probe(instance, agent_id: str, misreport_grid, mechanism=run_eswm) -> ProbeReport:
    """Rerun the auction once per misreported value of ``agent_id``.

    ``instance`` is ``(R, W, params)``.  Requesters misreport their maximum
    valuation, workers their cost; utility is measured against the true value
    before any submission happens.
    """
    R, W, params = instance
    R, W = list(R), list(W)
    side = "requester" if any(r.id == agent_id for r in R) else "worker"
    if side == "worker" and not any(w.id == agent_id for w in W):
        raise KeyError(agent_id)
    if side == "requester":
        idx = next(k for k, r in enumerate(R) if r.id == agent_id)
        truth = R[idx].max_valuation
    else:
        idx = next(k for k, w in enumerate(W) if w.id == agent_id)
        truth = W[idx].cost

    def run(value):
        if side == "requester":
            R2 = R.copy()
            R2[idx] = replace(R[idx], max_valuation=value)
            out = mechanism(R2, W, params, submissions={}, effective_pricing=False)
        else:
            W2 = W.copy()
            W2[idx] = replace(W[idx], cost=value)
            out = mechanism(R, W2, params, submissions={}, effective_pricing=False)
        return _pre_submission_utility(out, agent_id, side, truth)

    wins, u_truth, price_ = run(truth)
    report = ProbeReport(agent_id, side, truth, wins, u_truth, price_)
    for value in misreport_grid:
        w, u, _ = run(float(value))
        report.points.append(ProbePoint(float(value), w, u, u - u_truth))
    return report
