import numpy as np
import pytest

from eswm.mechanism import (
    MechanismParams,
    OpCounter,
    match,
    price,
    run_benchmark,
    run_eswm,
    trim,
    wrsa,
    wwsa,
)
from eswm.model import RequesterProfile, WorkerProfile, task_valuation
from eswm.oracle import truthfulness_probe
from eswm.population import draw_requesters, draw_workers
from helpers import check_instance, random_instance


def req(id, v, alpha=1.0, size=1.0, t_d=10.0, t_ex=15.0):
    return RequesterProfile(id, size, t_d, t_ex, v, alpha)


def wkr(id, c, lam=1.0):
    return WorkerProfile(id, c, mu=1.0 / lam)


R3 = [req("r1", 100), req("r2", 90, alpha=10), req("r3", 50)]
W3 = [wkr("w1", 1), wkr("w2", 4), wkr("w3", 2)]
K1 = MechanismParams(1, beta_alpha=1, beta_lambda=1)


def ids(agents):
    return [a.id for a in agents]


class TestWinnerSelection:
    def test_wrsa_running_example(self):
        R_s, r_th = wrsa(R3, K1)
        assert ids(R_s) == ["r1"] and r_th.id == "r3"

    def test_wrsa_exhausts_roster(self):
        R_s, r_th = wrsa(R3, MechanismParams(5, 1, 1))
        assert ids(R_s) == ["r1", "r3"] and r_th.id == "r2"

    def test_wrsa_beta_zero_ignores_alpha(self):
        R_s, r_th = wrsa(R3, MechanismParams(1, 0, 1))
        assert ids(R_s) == ["r1"] and r_th.id == "r2"

    def test_wrsa_single_requester(self):
        R_s, r_th = wrsa(R3[:1], K1)
        assert R_s == [] and r_th.id == "r1"

    def test_wwsa_running_example(self):
        W_s, w_th = wwsa(W3, K1)
        assert ids(W_s) == ["w1"] and w_th.id == "w3"

    def test_wwsa_equal_costs_prefers_punctual(self):
        W = [wkr("a", 2, lam=0.8), wkr("b", 2, lam=1.5), wkr("c", 2, lam=1.1), wkr("d", 2, lam=0.5)]
        W_s, w_th = wwsa(W, MechanismParams(3, 1, 1))
        assert ids(W_s) == ["b", "c", "a"] and w_th.id == "d"

    def test_wwsa_beta_zero_orders_by_cost(self):
        W = [wkr("a", 3, lam=5), wkr("b", 1, lam=0.5), wkr("c", 2, lam=1)]
        W_s, w_th = wwsa(W, MechanismParams(2, 1, 0))
        assert ids(W_s) == ["b", "c"] and w_th.id == "a"

    def test_ties_broken_by_id(self):
        W = [wkr("z", 1), wkr("a", 1), wkr("m", 1)]
        W_s, w_th = wwsa(W, MechanismParams(2, 1, 1))
        assert ids(W_s) == ["a", "m"] and w_th.id == "z"

    def test_empty_roster(self):
        assert wrsa([], K1) == ([], None)


class TestTrimAndPrice:
    def test_running_example_prices(self):
        R_s, r_th = wrsa(R3, K1)
        W_s, w_th = wwsa(W3, K1)
        R_s, W_s, r_th2, w_th2, Q, P = trim(R_s, W_s, r_th, w_th, K1)
        assert (r_th2, w_th2) == (r_th, w_th)
        assert Q == {"r1": pytest.approx(50)}
        assert P == {"w1": pytest.approx(2)}

    def test_trim_promotes_requester(self):
        R = [req(f"r{k}", 100 - k) for k in range(5)]
        W = [wkr("w0", 1), wkr("w1", 2), wkr("w2", 3)]
        p = MechanismParams(4, 1, 1)
        R_s, r_th = wrsa(R, p)
        W_s, w_th = wwsa(W, p)
        assert len(R_s) == 4 and len(W_s) == 2
        R_s, W_s, r_th, w_th, Q, P = trim(R_s, W_s, r_th, w_th, p)
        assert ids(R_s) == ["r0", "r1"] and r_th.id == "r2" and w_th.id == "w2"
        assert Q == {"r0": pytest.approx(98), "r1": pytest.approx(98)}
        assert P == {"w0": pytest.approx(3), "w1": pytest.approx(3)}

    def test_trim_promotes_worker(self):
        R = [req("r0", 100), req("r1", 80), req("r2", 60)]
        W = [wkr(f"w{k}", k + 1) for k in range(5)]
        p = MechanismParams(4, 1, 1)
        (R_s, r_th), (W_s, w_th) = wrsa(R, p), wwsa(W, p)
        R_s, W_s, r_th, w_th, Q, P = trim(R_s, W_s, r_th, w_th, p)
        assert ids(W_s) == ["w0", "w1"] and w_th.id == "w2" and r_th.id == "r2"
        assert P == {"w0": pytest.approx(3), "w1": pytest.approx(3)}

    def test_trim_empty_side(self):
        assert trim([], [wkr("w", 1)], req("r", 1), wkr("x", 2), K1)[4:] == ({}, {})

    def test_price_scales_by_surviving_value(self):
        r = req("r", 100, alpha=4)
        Q_eff, P_eff = price([("r", "w")], {"r": 50}, {"w": 2}, {"w": 12.0}, {"r": r})
        assert Q_eff["r"] == pytest.approx(42) and P_eff["w"] == pytest.approx(1.68)

    def test_price_punctual_and_expired(self):
        r = req("r", 100, alpha=4)
        assert price([("r", "w")], {"r": 50}, {"w": 2}, {"w": 9.0}, {"r": r}) == ({"r": 50}, {"w": 2})
        assert price([("r", "w")], {"r": 50}, {"w": 2}, {"w": 16.0}, {"r": r}) == ({"r": 0}, {"w": 0})

    def test_price_missing_submission(self):
        with pytest.raises(KeyError):
            price([("r", "w")], {"r": 50}, {"w": 2}, {}, {"r": req("r", 100)})


class TestMatch:
    def test_running_example(self):
        R_s, r_th = wrsa(R3, K1)
        W_s, w_th = wwsa(W3, K1)
        matches, Q, P, revoked, *_ = match(R_s, W_s, r_th, w_th, K1)
        assert matches == [("r1", "w1")] and not revoked

    def test_revocation(self):
        # q_1 = 1 (threshold requester worth 1), p_1 = 5 (threshold worker asks 5)
        R = [req("a", 10), req("b", 1)]
        W = [wkr("x", 0.5), wkr("y", 5)]
        out = run_eswm(R, W, K1, submissions={"x": 1.0})
        assert out.revoked and out.matches == [] and out.temp_fees == {} and out.effective_payments == {}
        assert out.platform_utility_post == 0

    def test_rank_order_pairing(self):
        R = [req("b", 50), req("a", 100), req("t", 10)]
        W = [wkr("y", 2), wkr("x", 1), wkr("u", 3)]
        out = run_eswm(R, W, MechanismParams(2, 1, 1), submissions={"x": 0, "y": 0})
        assert out.matches == [("a", "x"), ("b", "y")]


class TestPipeline:
    def test_running_example(self):
        out = run_eswm(R3, W3, K1, submissions={"w1": 5.0})
        assert out.matches == [("r1", "w1")]
        assert out.temp_fees["r1"] == pytest.approx(50) and out.temp_payments["w1"] == pytest.approx(2)
        assert out.effective_fees == out.temp_fees

    def test_capacity_beyond_rosters(self):
        R = [req(f"r{k}", 100 - k) for k in range(6)]
        W = [wkr(f"w{k}", 1 + 0.1 * k) for k in range(4)]
        out = run_eswm(R, W, MechanismParams(50, 1, 1), submissions={w.id: 0 for w in W})
        assert len(out.matches) == min(len(R), len(W)) - 1

    def test_sampling_is_deterministic(self):
        rng = np.random.default_rng(4)
        R, W = draw_requesters(60, rng), draw_workers(120, rng)
        p = MechanismParams(20)
        a = run_eswm(R, W, p, rng=np.random.default_rng(9))
        b = run_eswm(R, W, p, rng=np.random.default_rng(9))
        assert a == b

    def test_needs_submissions_or_rng(self):
        with pytest.raises(ValueError):
            run_eswm(R3, W3, K1)

    def test_benchmark_equals_flat_eswm(self):
        rng = np.random.default_rng(1)
        R, W = draw_requesters(50, rng), draw_workers(100, rng)
        p = MechanismParams(20, 0.7, 1.3)
        a = run_benchmark(R, W, p, rng=np.random.default_rng(2))
        b = run_eswm(R, W, MechanismParams(20, 0, 0), rng=np.random.default_rng(2))
        assert a == b

    def test_benchmark_running_example_fee(self):
        out = run_benchmark(R3, W3, K1, submissions={"w1": 0})
        # ratios v/|task| are 100, 90, 50 -> r2 is the threshold once alpha is ignored
        assert out.temp_fees == {"r1": pytest.approx(90)}
        assert run_benchmark([req("r1", 100, alpha=1), req("r3", 50, alpha=30)], W3, K1,
                             submissions={"w1": 0}).temp_fees == {"r1": pytest.approx(50)}

    def test_benchmark_ignores_lambda(self):
        W = [wkr("a", 1, lam=0.5), wkr("b", 2, lam=3), wkr("c", 3, lam=1)]
        swapped = [wkr("a", 1, lam=3), wkr("b", 2, lam=0.5), wkr("c", 3, lam=1)]
        p = MechanismParams(1, 1, 1)
        one = run_benchmark(R3, W, p, submissions={"a": 0})
        two = run_benchmark(R3, swapped, p, submissions={"a": 0})
        assert one.matches == two.matches and one.temp_payments == two.temp_payments


def _instances(n, seed, capacities=(10, 100)):
    rng = np.random.default_rng(seed)
    for k in range(n):
        K = capacities[k % len(capacities)]
        n_r, n_w = rng.integers(2, 3 * K + 2, size=2)
        yield draw_requesters(int(n_r), rng), draw_workers(int(n_w), rng), MechanismParams(K), rng


class TestEconomicProperties:
    @pytest.mark.parametrize("mech", [run_eswm, run_benchmark])
    def test_individual_rationality_and_budget_balance(self, mech):
        for R, W, p, rng in _instances(40, 0):
            out = mech(R, W, p, rng=rng)
            if out.revoked:
                assert not out.matches and out.platform_utility_post == 0
                continue
            assert len(out.matches) <= p.capacity
            assert out.platform_utility_pre >= 0
            costs = {w.id: w.cost for w in out.winners_w}
            for r, w in zip(out.winners_r, out.winners_w):
                q, q_eff = out.temp_fees[r.id], out.effective_fees[r.id]
                assert 0 <= q_eff <= q <= r.max_valuation * (1 + 1e-12)
                assert 0 <= out.effective_payments[w.id] <= out.temp_payments[w.id]
                assert out.temp_payments[w.id] >= costs[w.id] * (1 - 1e-12)
                if out.submissions[w.id] <= r.deadline:
                    assert out.effective_payments[w.id] >= costs[w.id] * (1 - 1e-12)

    def test_post_submission_utility_can_go_negative(self):
        # pair margins 80 - 9 and 8 - 9; the profitable pair's worker misses the expiry
        R = [req("a", 100, size=10, alpha=1), req("b", 9), req("t", 8)]
        W = [wkr("x", 1), wkr("y", 2), wkr("u", 9)]
        out = run_eswm(R, W, MechanismParams(2, 1, 1), submissions={"x": 16.0, "y": 0.0})
        assert out.matches == [("a", "x"), ("b", "y")]
        assert out.platform_utility_pre == pytest.approx(70)
        assert out.platform_utility_post == pytest.approx(-1)

    def test_requester_ir_for_any_submission_time(self):
        rng = np.random.default_rng(5)
        R, W = draw_requesters(80, rng), draw_workers(160, rng)
        base = run_eswm(R, W, MechanismParams(30), submissions={}, effective_pricing=False)
        reqs = {r.id: r for r in base.winners_r}
        for t in np.linspace(0, 160, 33):
            q_eff, _ = price(base.matches, base.temp_fees, base.temp_payments,
                             {wid: t for _, wid in base.matches}, reqs)
            for rid, _ in base.matches:
                assert task_valuation(reqs[rid], t) - q_eff[rid] >= -1e-9

    def test_operation_count_linear_in_roster(self):
        counts = []
        rng = np.random.default_rng(0)
        for n in (500, 1000, 2000, 4000):
            c = OpCounter()
            wrsa(draw_requesters(n, rng), MechanismParams(10), c)
            wwsa(draw_workers(n, rng), MechanismParams(10), c)
            counts.append(c.comparisons)
        for small, big in zip(counts, counts[1:]):
            assert big / small == pytest.approx(2, rel=0.2)

    def test_operation_count_linear_in_capacity(self):
        rng = np.random.default_rng(0)
        R = draw_requesters(4000, rng)
        counts = []
        for K in (10, 20, 40):
            c = OpCounter()
            wrsa(R, MechanismParams(K), c)
            counts.append(c.comparisons)
        for small, big in zip(counts, counts[1:]):
            assert big / small == pytest.approx(2, rel=0.2)


class TestIncentives:
    def test_property_suite_on_random_instances(self):
        rng = np.random.default_rng(42)
        for k in range(60):
            R, W, p = random_instance(rng, (10, 100)[k % 2])
            assert check_instance(R, W, p, rng) == []

    def test_benchmark_satisfies_the_same_properties(self):
        rng = np.random.default_rng(43)
        for _ in range(30):
            R, W, p = random_instance(rng, 10)
            assert check_instance(R, W, p, rng, mechanism=run_benchmark) == []

    def test_checker_flags_pay_as_bid(self):
        def pay_as_bid(R, W, params, **kw):
            out = run_eswm(R, W, params, **kw)
            reqs = {r.id: r for r in R}
            out.temp_fees = {rid: 0.9 * reqs[rid].max_valuation for rid in out.temp_fees}
            out.effective_fees = dict(out.temp_fees)
            return out

        rng = np.random.default_rng(0)
        R, W, p = random_instance(rng, 10)
        bad = check_instance(R, W, p, rng, mechanism=pay_as_bid)
        assert any(b.startswith("truthfulness") for b in bad)
        assert any(b.startswith("critical value") for b in bad)

    def test_winner_price_is_independent_of_own_report(self):
        rng = np.random.default_rng(8)
        R, W = draw_requesters(40, rng), draw_workers(80, rng)
        p = MechanismParams(10)
        base = run_eswm(R, W, p, submissions={}, effective_pricing=False)
        rep = truthfulness_probe((R, W, p), base.winners_w[0].id, [base.winners_w[0].cost * 0.5])
        assert rep.points[0].wins and rep.points[0].utility == pytest.approx(rep.truthful_utility)
