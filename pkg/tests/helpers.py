"""Shared instance generators and the economic-property checker."""
from __future__ import annotations

import numpy as np

from eswm.mechanism import MechanismParams, run_eswm
from eswm.model import task_valuation
from eswm.oracle import truthfulness_probe
from eswm.population import draw_requesters, draw_workers

TOL = 1e-9
CRITICAL_STEPS = (0.5, 0.9, 0.999, 1.001, 1.1, 2.0)
TRUTH_STEPS = (0.25, 0.8, 1.25, 4.0)


def random_instance(rng, K):
    n_r, n_w = (int(x) for x in rng.integers(2, 3 * K + 2, size=2))
    return draw_requesters(n_r, rng), draw_workers(n_w, rng), MechanismParams(K)


def check_instance(R, W, params, rng, n_probe=2, mechanism=run_eswm):
    """Return a list of human-readable property violations (empty when all hold)."""
    bad = []
    out = mechanism(R, W, params, rng=rng)
    if not out.revoked and out.platform_utility_pre < -TOL:
        bad.append(f"budget: pre-submission utility {out.platform_utility_pre}")
    for r, w in zip(out.winners_r, out.winners_w):
        q, p = out.temp_fees[r.id], out.temp_payments[w.id]
        share_q = q / r.max_valuation
        times = np.append(np.linspace(0, 1.2 * r.expiry, 25), out.submissions[w.id])
        slack = task_valuation(r, times) * (1 - share_q)
        if slack.min() < -TOL * r.max_valuation:
            bad.append(f"requester IR: {r.id} q={q} v={r.max_valuation}")
        if p < w.cost * (1 - 1e-12):
            bad.append(f"worker IR: {w.id} p={p} c={w.cost}")
        if out.submissions[w.id] <= r.deadline and out.effective_payments[w.id] < w.cost * (1 - 1e-12):
            bad.append(f"worker IR (punctual): {w.id}")

    winners = [a.id for a in out.winners_r[:n_probe]] + [a.id for a in out.winners_w[:n_probe]]
    win_set = {a.id for a in out.winners_r} | {a.id for a in out.winners_w}
    losers = [a.id for a in R if a.id not in win_set][:n_probe // 2 + 1]
    losers += [a.id for a in W if a.id not in win_set][:n_probe // 2 + 1]
    by_id = {a.id: a for a in list(R) + list(W)}
    for aid in winners + losers:
        truth = getattr(by_id[aid], "max_valuation", None) or by_id[aid].cost
        grid = [truth * s for s in TRUTH_STEPS]
        base = truthfulness_probe((R, W, params), aid, [], mechanism)
        if base.truthful_wins:
            grid += [base.price * s for s in CRITICAL_STEPS]
        rep = truthfulness_probe((R, W, params), aid, grid, mechanism)
        bad += [f"truthfulness: {aid} report {p.report} gains {p.delta}" for p in rep.violations]
        if not rep.truthful_wins:
            continue
        better = (lambda x: x >= truth) if rep.side == "requester" else (lambda x: x <= truth)
        for pt in rep.points:
            if better(pt.report) and not pt.wins:
                bad.append(f"monotonicity: {aid} loses with better report {pt.report}")
            # the critical value separates winning reports from losing ones
            above = pt.report > rep.price if rep.side == "requester" else pt.report < rep.price
            near = abs(pt.report - rep.price) <= 1e-12 * rep.price
            if not near and pt.wins != above:
                bad.append(f"critical value: {aid} report {pt.report} price {rep.price} wins={pt.wins}")
    return bad
