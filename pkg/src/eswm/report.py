"""Per-auction welfare and utility metrics, and their CSV serialisation."""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .mechanism import AuctionOutcome
from .model import WorkerProfile, expected_valuation_array, task_valuation


@dataclass
class MetricsRecord:
    nsw: float = 0.0
    esw: float = 0.0
    platform_utility_pre: float = 0.0
    platform_utility_post: float = 0.0
    avg_requester_utility: float = 0.0
    avg_worker_utility: float = 0.0
    n_matches: int = 0
    revoked: bool = False
    capacity: int = 0
    beta_alpha: float = 0.0
    beta_lambda: float = 0.0
    seed: int = 0
    # experiment context, appended after the metric columns
    mechanism: str = ""
    round: int = 0
    n_requesters: int = 0
    n_workers: int = 0


FIELDS = [f.name for f in dataclasses.fields(MetricsRecord)]


def compute_metrics(outcome: AuctionOutcome, roster_r, roster_w,
                    true_workers: Mapping[str, WorkerProfile] | None = None, **context) -> MetricsRecord:
    """Summarise one auction.

    Expected welfare is evaluated with ``true_workers`` when given, so that a
    platform working from estimated punctuality is scored on actual behaviour.
    Averages divide by the full roster sizes; losers contribute zero.
    """
    rec = MetricsRecord(n_requesters=len(roster_r), n_workers=len(roster_w), revoked=outcome.revoked, **context)
    if outcome.revoked or not outcome.matches:
        return rec
    R_s, W_s = outcome.winners_r, outcome.winners_w
    ws = [true_workers[w.id] if true_workers is not None else w for w in W_s]
    v_max = np.array([r.max_valuation for r in R_s])
    costs = np.array([w.cost for w in W_s])
    ev = expected_valuation_array(
        v_max, [r.alpha for r in R_s], [r.deadline for r in R_s], [r.expiry for r in R_s],
        [w.mu for w in ws], [w.sigma for w in ws])
    rec.nsw = float(v_max.sum() - costs.sum())
    rec.esw = float(np.sum(ev) - costs.sum())
    rec.platform_utility_pre = outcome.platform_utility_pre
    rec.platform_utility_post = outcome.platform_utility_post
    u_r, u_p = agent_utilities(outcome)
    rec.avg_requester_utility = sum(u_r.values()) / len(roster_r)
    rec.avg_worker_utility = sum(u_p.values()) / len(roster_w)
    rec.n_matches = len(outcome.matches)
    return rec


def agent_utilities(outcome: AuctionOutcome):
    """Realised utilities of the winners, keyed by id (everyone else gets zero)."""
    reqs = {r.id: r for r in outcome.winners_r}
    workers = {w.id: w for w in outcome.winners_w}
    u_r, u_p = {}, {}
    for rid, wid in outcome.matches:
        v = task_valuation(reqs[rid], outcome.submissions[wid])
        u_r[rid] = v - outcome.effective_fees[rid]
        u_p[wid] = outcome.effective_payments[wid] - workers[wid].cost
    return u_r, u_p


def realized_welfare(outcome: AuctionOutcome) -> float:
    reqs = {r.id: r for r in outcome.winners_r}
    costs = {w.id: w.cost for w in outcome.winners_w}
    return sum(task_valuation(reqs[rid], outcome.submissions[wid]) - costs[wid]
               for rid, wid in outcome.matches)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def emit_csv(records: Iterable[MetricsRecord], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FIELDS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, name)) for name in FIELDS])
    return path


def read_csv(path) -> list[MetricsRecord]:
    types = {f.name: f.type for f in dataclasses.fields(MetricsRecord)}
    casts = {"float": float, "int": int, "str": str, "bool": lambda s: bool(int(s))}
    out = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(MetricsRecord(**{k: casts[types[k]](v) for k, v in row.items()}))
    return out
