"""Experiment families: single auction, re-selection, beta sweep, oracle comparison.

Every run derives its own seed from the master seed, so any single row of an
output CSV can be regenerated from its ``seed`` column.
"""
from __future__ import annotations

import time

import numpy as np

from .market import CompetitionConfig, run_competition
from .mechanism import MECHANISMS, MechanismParams, run_eswm
from .oracle import hungarian_optimal, score_matrix
from .population import draw_requesters, draw_workers
from .report import MetricsRecord, compute_metrics


def run_seed(master_seed: int, run: int) -> int:
    return int(np.random.SeedSequence((master_seed, run)).generate_state(1)[0])


def _population(seed, n_r, n_w, dist):
    rng = np.random.default_rng(seed)
    return draw_requesters(n_r, rng, dist), draw_workers(n_w, rng, dist)


def single_auction(cfg, on_run=None) -> list[MetricsRecord]:
    """Both mechanisms on the same population, over the capacity grid."""
    records = []
    for run in range(cfg.n_runs):
        seed = run_seed(cfg.master_seed, run)
        R, W = _population(seed, cfg.n_requesters, cfg.n_workers, cfg.dist)
        for K in cfg.capacity_grid:
            for ba in cfg.beta_alpha_grid:
                for bl in cfg.beta_lambda_grid:
                    params = MechanismParams(K, ba, bl)
                    for m, (name, mech) in enumerate(MECHANISMS.items()):
                        out = mech(R, W, params, rng=np.random.default_rng((seed, K, m)))
                        shown = (0.0, 0.0) if name == "benchmark" else (ba, bl)
                        records.append(compute_metrics(
                            out, R, W, capacity=K, beta_alpha=shown[0], beta_lambda=shown[1],
                            seed=seed, mechanism=name, round=1))
        if on_run:
            on_run(run)
    return records


def reselection(cfg, on_run=None) -> list[MetricsRecord]:
    """ESWM (platform A) against the benchmark (platform B) over ``cfg.rounds`` rounds."""
    records = []
    ba, bl = cfg.beta_alpha_grid[0], cfg.beta_lambda_grid[0]
    for run in range(cfg.n_runs):
        seed = run_seed(cfg.master_seed, run)
        for K in cfg.capacity_grid:
            comp = CompetitionConfig(cfg.n_requesters, cfg.n_workers, K, cfg.rounds, beta_alpha=ba,
                                     beta_lambda=bl, decay=cfg.decay, seed=(seed, K),
                                     distributions=cfg.dist)
            for rec_a, rec_b in run_competition(comp):
                rec_b.beta_alpha = rec_b.beta_lambda = 0.0
                for rec in (rec_a, rec_b):
                    rec.seed = seed
                    records.append(rec)
        if on_run:
            on_run(run)
    return records


def sweep_points(cfg) -> list[tuple[float, float]]:
    """(beta_alpha, beta_lambda) pairs visited by the beta sweep.

    ``marginal`` varies each exponent with the other held at ``beta_fixed`` and
    adds the diagonal; ``grid`` takes the full product.
    """
    if cfg.sweep == "grid":
        return [(a, b) for a in cfg.beta_alpha_grid for b in cfg.beta_lambda_grid]
    pts = [(a, cfg.beta_fixed) for a in cfg.beta_alpha_grid]
    pts += [(cfg.beta_fixed, b) for b in cfg.beta_lambda_grid]
    pts += [(b, b) for b in cfg.beta_alpha_grid]
    return list(dict.fromkeys(pts))


def beta_sweep(cfg, on_run=None) -> list[MetricsRecord]:
    records = []
    points = sweep_points(cfg)
    for run in range(cfg.n_runs):
        seed = run_seed(cfg.master_seed, run)
        R, W = _population(seed, cfg.n_requesters, cfg.n_workers, cfg.dist)
        for K in cfg.capacity_grid:
            for ba, bl in points:
                out = run_eswm(R, W, MechanismParams(K, ba, bl), rng=np.random.default_rng((seed, K)))
                records.append(compute_metrics(out, R, W, capacity=K, beta_alpha=ba, beta_lambda=bl,
                                               seed=seed, mechanism="eswm", round=1))
        if on_run:
            on_run(run)
    return records


def _selection_record(R, W, L, S, **context):
    j, i = np.nonzero(L)
    v = np.array([R[k].max_valuation for k in j])
    c = np.array([W[k].cost for k in i])
    return MetricsRecord(nsw=float(v.sum() - c.sum()), esw=float(S[j, i].sum()), n_matches=len(j),
                         n_requesters=len(R), n_workers=len(W), **context)


def oracle_compare(cfg, on_run=None, timings=None) -> list[MetricsRecord]:
    """Greedy mechanism against the optimal assignment for growing populations.

    Wall-clock times go to ``timings`` (a dict of lists) rather than the records,
    keeping the CSV output reproducible.
    """
    records = []
    K = cfg.capacity_grid[0]
    ba, bl = cfg.beta_alpha_grid[0], cfg.beta_lambda_grid[0]
    for run in range(cfg.n_runs):
        seed = run_seed(cfg.master_seed, run)
        for n_r in cfg.requester_grid:
            n_w = cfg.worker_factor * n_r
            R, W = _population((seed, n_r), n_r, n_w, cfg.dist)
            ctx = dict(capacity=K, seed=seed, round=1)

            t0 = time.perf_counter()
            out = run_eswm(R, W, MechanismParams(K, ba, bl), rng=np.random.default_rng((seed, n_r)))
            t_greedy = time.perf_counter() - t0
            records.append(compute_metrics(out, R, W, beta_alpha=ba, beta_lambda=bl,
                                           mechanism="eswm", **ctx))

            t0 = time.perf_counter()
            S = score_matrix(R, W)
            L, _ = hungarian_optimal(S, K=K)
            t_hung = time.perf_counter() - t0
            records.append(_selection_record(R, W, L, S, mechanism="hungarian", **ctx))
            L_top, _ = hungarian_optimal(S, K=K, method="top_k")
            records.append(_selection_record(R, W, L_top, S, mechanism="hungarian_top_k", **ctx))
            if timings is not None:
                timings.setdefault(("eswm", n_r), []).append(t_greedy)
                timings.setdefault(("hungarian", n_r), []).append(t_hung)
        if on_run:
            on_run(run)
    return records


FAMILIES = {
    "single_auction": single_auction,
    "reselection": reselection,
    "beta_sweep": beta_sweep,
    "oracle_compare": oracle_compare,
}
