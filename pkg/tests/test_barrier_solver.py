import numpy as np
import pytest

from secrecap import (
    BarrierObjective,
    ChannelPair,
    SolverConfig,
    extract_certificate,
    gap_bound,
    initial_point,
    minimax_objective,
    secrecy_rate,
    solve_degraded,
    solve_minimax,
)
from secrecap.kkt_newton import newton_solve
from secrecap.matcalc import sym

from conftest import DEMO_H1, DEMO_H2, random_channel, random_spd

TIGHT = SolverConfig(t_max=1e8, eps_newton=1e-9)


def water_filling_capacity(gains, power):
    """Classical water-filling over parallel channel gains; rate in nats."""
    g = np.sort(np.asarray(gains, dtype=float))[::-1]
    g = g[g > 1e-15]
    for k in range(g.size, 0, -1):
        level = (power + np.sum(1.0 / g[:k])) / k
        p = level - 1.0 / g[:k]
        if p[-1] >= 0:
            return 0.5 * float(np.sum(np.log1p(g[:k] * p)))
    return 0.0


def degraded_channel(rng, m, n2, rank):
    """Random channel with W1 = W2 + L L' by stacking extra receiver rows."""
    h2 = rng.standard_normal((n2, m))
    l = rng.standard_normal((rank, m))
    h1 = np.vstack([h2, l])
    return ChannelPair(h1, h2)


class TestGapBound:
    def test_formula_values(self):
        assert gap_bound(5, 10, 10, 1e5) == pytest.approx(2e-4)
        assert gap_bound(1, 1, 1, 1.0) == pytest.approx(2.0)
        assert gap_bound(3, 1, 1, 10.0) == pytest.approx(0.3)

    def test_degraded_uses_m_over_t(self):
        ch = ChannelPair(DEMO_H1, np.zeros((1, 2)))
        sol = solve_degraded(ch, 10.0, SolverConfig(t_max=100.0))
        assert sol.gap_bound == pytest.approx(2.0 / 100.0)

    def test_rejects_nonpositive_t(self):
        with pytest.raises(ValueError):
            gap_bound(2, 2, 2, 0.0)


class TestSolverConfig:
    def test_defaults_match_reference_protocol(self):
        cfg = SolverConfig()
        assert (cfg.alpha, cfg.beta) == (0.3, 0.5)
        assert (cfg.t0, cfg.mu, cfg.t_max) == (100.0, 10.0, 1e5)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"alpha": 0.6},
            {"alpha": 0.0},
            {"beta": 1.0},
            {"t0": 0.0},
            {"mu": 1.0},
            {"t_max": 1.0},
            {"eps_newton": 0.0},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)


class TestSolveMinimax:
    def test_scalar_closed_form(self):
        ch = ChannelPair(np.array([[2.0]]), np.array([[1.0]]))
        sol = solve_minimax(ch, 1.0)
        assert sol.capacity_achievable == pytest.approx(0.5 * np.log(2.5), abs=1e-4)
        assert sol.converged

    def test_identical_channels_zero_capacity(self):
        # worst-case noise for identical channels sits on the feasibility
        # boundary (|K21| -> 1), so deep schedules cannot reach 1e-10
        # residuals in floating point; a short schedule already certifies
        # the zero capacity (C(R) is identically zero here for every R)
        rng = np.random.default_rng(60)
        h = rng.standard_normal((2, 2))
        sol = solve_minimax(ChannelPair(h, h), 10.0, SolverConfig(t_max=1e3))
        assert sol.capacity_achievable <= 1e-6

    def test_reversely_degraded_short_circuit(self):
        sol = solve_minimax(ChannelPair(DEMO_H1, 2.0 * DEMO_H1), 10.0)
        assert sol.mode == "zero"
        assert sol.capacity_achievable == 0.0
        assert sol.capacity_upper == 0.0
        assert sol.newton_steps_total == 0
        np.testing.assert_array_equal(sol.R_star.R, 0.0)

    def test_demo_channel_full_run(self, demo_channel):
        sol = solve_minimax(demo_channel, 10.0)
        assert sol.converged
        assert sol.t_final == 1e5
        assert sol.gap_bound == pytest.approx(4.0 / 1e5)
        assert np.trace(sol.R_star.R) == pytest.approx(10.0, abs=1e-9)
        assert sol.capacity_achievable <= sol.capacity_upper + 1e-9
        # dual variable of the power constraint is nonnegative at optimum
        assert sol.lambda_star >= -1e-10

    def test_rate_and_bound_approach_each_other(self, demo_channel):
        # the upper bound converges quickly; the achievable rate approaches
        # it as t grows, roughly one decade of agreement per decade of t
        sol5 = solve_minimax(demo_channel, 10.0, SolverConfig(t_max=1e5))
        sol6 = solve_minimax(demo_channel, 10.0, SolverConfig(t_max=1e6))
        d5 = abs(sol5.capacity_achievable - sol5.capacity_upper)
        d6 = abs(sol6.capacity_achievable - sol6.capacity_upper)
        assert d5 <= 2e-3
        assert d6 <= 0.2 * d5

    def test_eps_gap_stops_schedule_early(self, demo_channel):
        sol = solve_minimax(demo_channel, 10.0,
                            SolverConfig(eps_gap=1e-2, t_max=1e5))
        assert sol.t_final == 1000.0  # max(2, 4)/t <= 1e-2 first at t = 1e3
        assert sol.gap_met

    def test_trace_rows_complete(self, demo_channel):
        sol = solve_minimax(demo_channel, 10.0)
        assert len(sol.trace) == sol.newton_steps_total
        stage_ts = [t for t, _ in sol.stage_reports]
        assert stage_ts == [100.0, 1000.0, 10000.0, 100000.0]
        for t, rep in sol.stage_reports:
            rows = [r for r in sol.trace if r.t == t]
            assert [r.iteration for r in rows] == list(range(1, rep.iterations + 1))
            # residual strictly decreasing within the stage
            res = [r.residual for r in rows]
            assert all(b < a for a, b in zip(res, res[1:]))

    def test_capacity_monotone_in_power(self):
        # small budgets push the optimum toward rank deficiency where the
        # aggressive mu=10 schedule crawls; mu=5 handles every instance
        cfg = SolverConfig(mu=5.0)
        rng = np.random.default_rng(61)
        for _ in range(3):
            ch = random_channel(rng, 2, 2, 2)
            caps = [solve_minimax(ch, p, cfg).capacity_achievable
                    for p in (0.5, 2.0, 8.0, 32.0)]
            for lo, hi in zip(caps, caps[1:]):
                assert lo <= hi + 1e-8

    def test_saddle_inequalities(self, demo_channel):
        rng = np.random.default_rng(62)
        sol = solve_minimax(demo_channel, 10.0, TIGHT)
        f_star = sol.capacity_upper
        k_star = sol.K21_star
        r_star = sol.R_star.R
        for _ in range(30):
            r = random_spd(rng, 2, trace=10.0)
            assert minimax_objective(demo_channel, r, k_star) <= f_star + 1e-6
        for _ in range(30):
            b = rng.standard_normal((2, 2))
            k = b * (0.9 * rng.uniform(0.05, 1.0) / np.linalg.norm(b, 2))
            assert minimax_objective(demo_channel, r_star, k) >= f_star - 1e-6

    def test_rank_matches_positive_difference_directions(self, demo_channel):
        # one positive eigenvalue in W1 - W2: optimal covariance is rank one
        sol = solve_minimax(demo_channel, 10.0, TIGHT)
        eigs = np.linalg.eigvalsh(sol.R_star.R)
        significant = np.sum(eigs > 1e-6 * 10.0)
        positive = np.sum(np.linalg.eigvalsh(demo_channel.W1 - demo_channel.W2) > 0)
        assert significant <= positive

    def test_small_eigenvalue_truncation_preserves_rate(self, demo_channel):
        # rounding eigenvalues below 1e-9 P off to zero moves C by < 1e-7
        p = 10.0
        eps = 0.4e-9 * p
        w, v = np.linalg.eigh(sym(random_spd(np.random.default_rng(63), 2, trace=p)))
        w = np.array([eps, p - eps])
        r = (v * w) @ v.T
        r_trunc = (v * np.where(w < 1e-9 * p, 0.0, w)) @ v.T
        c1 = secrecy_rate(demo_channel, r)
        c2 = secrecy_rate(demo_channel, r_trunc)
        assert abs(c1 - c2) <= 1e-7

    def test_large_system_per_stage_step_counts(self):
        # m=5, n1=n2=10 at residual 1e-8: every stage should need few Newton
        # steps (at most 15 in at least 80% of all stages), all converging
        rng = np.random.default_rng(66)
        cfg = SolverConfig(eps_newton=1e-8)
        counts = []
        for _ in range(10):
            ch = random_channel(rng, 5, 10, 10)
            sol = solve_minimax(ch, 10.0, cfg)
            assert sol.converged
            counts.extend(rep.iterations for _, rep in sol.stage_reports)
        counts = np.array(counts)
        assert np.mean(counts <= 15) >= 0.8

    def test_warm_start_cheaper_than_cold_large_t(self):
        # at the batch-experiment size the schedule needs fewer total steps
        # than a cold solve at the final t (median over random channels)
        rng = np.random.default_rng(64)
        sched, single = [], []
        for _ in range(20):
            ch = random_channel(rng, 4, 3, 3)
            sched.append(solve_minimax(ch, 10.0).newton_steps_total)
            obj = BarrierObjective(ch, 1e5, 10.0)
            _, rep = newton_solve(obj, initial_point(ch, 10.0), eps=1e-10,
                                  max_iter=400)
            single.append(rep.iterations if rep.converged else 400)
        assert np.median(sched) <= np.median(single)

    def test_rejects_nonpositive_power(self, demo_channel):
        with pytest.raises(ValueError):
            solve_minimax(demo_channel, -1.0)


class TestSolveDegraded:
    def test_requires_degraded_channel(self, demo_channel):
        with pytest.raises(ValueError, match="degraded"):
            solve_degraded(demo_channel, 10.0)

    def test_no_eavesdropper_matches_water_filling(self):
        ch = ChannelPair(np.array([[1.0, 0.2], [0.1, 0.8]]), np.zeros((1, 2)))
        sol = solve_degraded(ch, 10.0, SolverConfig(t_max=1e8, eps_newton=1e-9))
        oracle = water_filling_capacity(np.linalg.eigvalsh(ch.W1), 10.0)
        assert sol.capacity_achievable == pytest.approx(oracle, abs=1e-6)
        np.testing.assert_array_equal(sol.K21_star, np.zeros((1, 2)))

    def test_agrees_with_minimax_solver(self):
        rng = np.random.default_rng(65)
        cfg = SolverConfig(t_max=1e7, eps_newton=1e-10)
        for _ in range(2):
            ch = degraded_channel(rng, m=2, n2=2, rank=1)
            a = solve_degraded(ch, 5.0, cfg)
            b = solve_minimax(ch, 5.0, cfg)
            assert a.capacity_achievable == pytest.approx(
                b.capacity_achievable, abs=1e-5
            )

    def test_equal_channels_give_uniform_covariance(self):
        ch = ChannelPair(DEMO_H1, DEMO_H1)
        sol = solve_degraded(ch, 10.0)
        assert sol.capacity_achievable <= 1e-9
        np.testing.assert_allclose(sol.R_star.R, 5.0 * np.eye(2), atol=1e-6)


class TestCertificate:
    def test_certificate_at_converged_solution(self, demo_channel):
        sol = solve_minimax(demo_channel, 10.0)
        obj = BarrierObjective(demo_channel, sol.t_final, 10.0)
        cert = extract_certificate(sol, obj)
        assert cert.lam >= -1e-10
        assert cert.stationarity_residual_R <= 1e-8 * (1 + cert.lam)
        assert cert.stationarity_residual_K <= 1e-8
        assert cert.complementarity_R == 2 / sol.t_final
        np.testing.assert_allclose(
            cert.M2_approx,
            np.linalg.inv(sol.R_star.R) / sol.t_final,
            rtol=1e-8,
        )
