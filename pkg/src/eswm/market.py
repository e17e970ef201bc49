"""Two platforms competing for one population over repeated rounds.

Every round each participant picks a platform with probability proportional to
the square root of the average utility that platform's participants earned in
the previous round.  Platforms only see punctuality they have estimated from
their own past matches; true punctuality drives the submission times.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mechanism import MECHANISMS, MechanismParams
from .model import WorkerProfile
from .population import Distributions, draw_requesters, draw_workers
from .report import compute_metrics

PLATFORMS = ("A", "B")


def participation_probabilities(u_a: float, u_b: float) -> tuple[float, float]:
    if u_a < 0 or u_b < 0:
        raise ValueError(f"average utilities must be nonnegative, got {u_a}, {u_b}")
    sa, sb = math.sqrt(u_a), math.sqrt(u_b)
    if sa + sb == 0:
        return 0.5, 0.5
    return sa / (sa + sb), sb / (sa + sb)


@dataclass
class PunctualityEstimate:
    """Running estimate of a worker's ``t_sub / t_d``.

    With ``decay`` unset it is the plain mean of all observations; otherwise an
    exponentially weighted mean where each new observation gets weight ``decay``.
    """

    mu: float = 1.0
    n: int = 0


def observe_punctuality(estimates: dict, worker_id: str, t_sub: float, t_d: float,
                        decay: float | None = None) -> PunctualityEstimate:
    est = estimates.get(worker_id, PunctualityEstimate())
    ratio = t_sub / t_d
    if est.n == 0:
        mu = ratio
    elif decay is None:
        mu = est.mu + (ratio - est.mu) / (est.n + 1)
    else:
        mu = (1.0 - decay) * est.mu + decay * ratio
    new = PunctualityEstimate(mu, est.n + 1)
    estimates[worker_id] = new
    return new


@dataclass
class MarketState:
    population_r: list
    population_w: list
    rosters: dict = field(default_factory=dict)
    avg_utils: dict = field(default_factory=dict)
    estimates: dict = field(default_factory=lambda: {p: {} for p in PLATFORMS})
    round: int = 0

    def platform_view(self, platform: str, workers) -> list[WorkerProfile]:
        """Workers as ``platform`` sees them: true cost, estimated punctuality."""
        est = self.estimates[platform]
        out = []
        for w in workers:
            mu = est[w.id].mu if w.id in est else 1.0
            # estimated mu can be ~0 for a worker who submitted at time ~0
            mu = max(mu, 1e-9)
            out.append(WorkerProfile(w.id, w.cost, mu, 2.0 * mu))
        return out


def reselect(state: MarketState, rng: np.random.Generator):
    """Assign every participant to platform A or B for the coming round."""
    if state.avg_utils:
        # tardy workers can push an average below zero; such a platform is as
        # unattractive as one that paid nothing
        (ur_a, up_a), (ur_b, up_b) = ((max(u, 0.0) for u in state.avg_utils[p]) for p in PLATFORMS)
        p_r, _ = participation_probabilities(ur_a, ur_b)
        p_w, _ = participation_probabilities(up_a, up_b)
    else:
        p_r = p_w = 0.5
    join_r = rng.random(len(state.population_r)) < p_r
    join_w = rng.random(len(state.population_w)) < p_w
    roster_a = ([r for r, j in zip(state.population_r, join_r) if j],
                [w for w, j in zip(state.population_w, join_w) if j])
    roster_b = ([r for r, j in zip(state.population_r, join_r) if not j],
                [w for w, j in zip(state.population_w, join_w) if not j])
    state.rosters = {"A": roster_a, "B": roster_b}
    return roster_a, roster_b


def run_round(state: MarketState, mech_a, mech_b, params_a: MechanismParams, params_b: MechanismParams,
              rng: np.random.Generator, decay: float | None = None, seed: int = 0):
    """Run both platforms' auctions on the current rosters and update the state.

    ``mech_a``/``mech_b`` are mechanism names or callables.  Returns
    ``(record_a, record_b, state)``.
    """
    true_w = {w.id: w for w in state.population_w}
    streams = dict(zip(PLATFORMS, rng.spawn(2)))
    records = {}
    for platform, mech, params in (("A", mech_a, params_a), ("B", mech_b, params_b)):
        run = MECHANISMS[mech] if isinstance(mech, str) else mech
        reqs, workers = state.rosters[platform]
        seen = state.platform_view(platform, workers)
        out = run(reqs, seen, params, rng=streams[platform], true_workers=true_w)
        rec = compute_metrics(out, reqs, workers, true_workers=true_w,
                              capacity=params.capacity, beta_alpha=params.beta_alpha,
                              beta_lambda=params.beta_lambda, seed=seed,
                              mechanism=getattr(run, "__name__", str(mech)).replace("run_", ""),
                              round=state.round + 1)
        for r, w in zip(out.winners_r, out.winners_w):
            observe_punctuality(state.estimates[platform], w.id, out.submissions[w.id], r.deadline, decay)
        records[platform] = rec
    state.avg_utils = {p: (records[p].avg_requester_utility, records[p].avg_worker_utility) for p in PLATFORMS}
    state.round += 1
    return records["A"], records["B"], state


@dataclass
class CompetitionConfig:
    n_requesters: int = 2000
    n_workers: int = 4000
    capacity: int = 500
    rounds: int = 2
    mechanism_a: str = "eswm"
    mechanism_b: str = "benchmark"
    beta_alpha: float = 0.5
    beta_lambda: float = 0.5
    decay: float | None = None
    seed: int = 0
    distributions: Distributions = field(default_factory=Distributions)


def run_competition(config: CompetitionConfig):
    """Return one ``(record_a, record_b)`` pair per round.

    Each record's ``n_requesters``/``n_workers`` give that platform's roster size
    in the round.  The population is drawn once and persists across rounds.
    """
    root = np.random.SeedSequence(config.seed)
    pop_seq, assign_seq, sub_seq = root.spawn(3)
    pop_rng = np.random.default_rng(pop_seq)
    state = MarketState(draw_requesters(config.n_requesters, pop_rng, config.distributions),
                        draw_workers(config.n_workers, pop_rng, config.distributions))
    assign_rng = np.random.default_rng(assign_seq)
    sub_rng = np.random.default_rng(sub_seq)
    params = MechanismParams(config.capacity, config.beta_alpha, config.beta_lambda)
    series = []
    for _ in range(config.rounds):
        reselect(state, assign_rng)
        rec_a, rec_b, state = run_round(state, config.mechanism_a, config.mechanism_b, params, params,
                                        sub_rng, config.decay, config.seed)
        series.append((rec_a, rec_b))
    return series
