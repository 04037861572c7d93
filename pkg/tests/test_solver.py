"""Projection, knapsack oracle, both solve algorithms, KKT certificates."""

import numpy as np
import pytest

from vequil import (
    Condenser,
    InfeasibleProblem,
    KernelSpec,
    NotPositiveDefinite,
    SolverConfig,
    condenser_gram,
    make_plate,
    project_plate,
    semimetric_distance,
    solve,
    verify_kkt,
    weighted_energy,
    zero_field,
)
from vequil.condenser import CASE1, FieldSpec, r_map
from vequil.solver import _knapsack_vertex

from instances import random_case1_field, two_plate_signed


def random_feasible_point(rng, g, sigma, a):
    """Rejection-free feasible point via projection of random coordinates."""
    return project_plate(rng.uniform(0.0, 1.0, g.shape[0]) * sigma, g, sigma, a)


class TestProjectPlate:
    def test_already_feasible(self):
        w = project_plate([0.9, 0.1], [1.0, 1.0], [1.0, 1.0], 1.0)
        np.testing.assert_allclose(w, [0.9, 0.1], atol=1e-12)

    def test_box_cap_binds(self):
        w = project_plate([2.0, 0.0], [1.0, 1.0], [1.0, 1.0], 1.0)
        np.testing.assert_allclose(w, [1.0, 0.0], atol=1e-12)

    def test_symmetric_split(self):
        w = project_plate([0.0, 0.0], [1.0, 1.0], [1.0, 1.0], 1.0)
        np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-12)

    def test_infeasible_mass_raises(self):
        with pytest.raises(InfeasibleProblem):
            project_plate([0.0, 0.0], [1.0, 1.0], [0.3, 0.3], 1.0)

    def test_degenerate_returns_sigma(self):
        w = project_plate([5.0, -3.0], [1.0, 2.0], [0.2, 0.4], 1.0)
        np.testing.assert_allclose(w, [0.2, 0.4], atol=1e-14)

    def test_variational_inequality(self):
        # w* is the projection of v iff (v - w*) . (u - w*) <= 0 for feasible u
        rng = np.random.default_rng(0)
        for _ in range(50):
            m = int(rng.integers(2, 12))
            g = rng.uniform(0.5, 2.0, m)
            sigma = rng.uniform(0.1, 1.0, m)
            a = float(rng.uniform(0.1, 0.95)) * float(g @ sigma)
            v = rng.normal(0.0, 1.0, m)
            w = project_plate(v, g, sigma, a)
            assert np.all(w >= -1e-14) and np.all(w <= sigma + 1e-14)
            assert abs(float(g @ w) - a) <= 1e-10 * max(1.0, a)
            for _ in range(10):
                u = random_feasible_point(rng, g, sigma, a)
                assert float((v - w) @ (u - w)) <= 1e-9


class TestKnapsackOracle:
    def test_minimizes_over_random_feasible_points(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            m = int(rng.integers(2, 12))
            g = rng.uniform(0.5, 2.0, m)
            sigma = rng.uniform(0.1, 1.0, m)
            a = float(rng.uniform(0.1, 0.95)) * float(g @ sigma)
            cost = rng.normal(0.0, 1.0, m)
            v = _knapsack_vertex(cost, g, sigma, a)
            assert np.all(v >= 0.0) and np.all(v <= sigma + 1e-14)
            assert abs(float(g @ v) - a) <= 1e-10 * max(1.0, a)
            best = float(cost @ v)
            for _ in range(20):
                u = random_feasible_point(rng, g, sigma, a)
                assert best <= float(cost @ u) + 1e-9

    def test_ties_break_by_node_index(self):
        v = _knapsack_vertex(np.zeros(3), np.ones(3), np.full(3, 0.5), 0.8)
        np.testing.assert_allclose(v, [0.5, 0.3, 0.0], atol=1e-14)


def pinned_single_node():
    c = Condenser(plates=(make_plate(0, 1, [[0.0, 0.0, 0.0]], sigma=1.0, mass=1.0),))
    K = condenser_gram(KernelSpec("riesz", alpha=2.0, epsilon=0.4), c)
    return c, K


class TestSolve:
    def test_pinned_single_node(self):
        c, K = pinned_single_node()
        rep = solve(c, K, zero_field(c))
        assert rep.minimizer.weights[0][0] == pytest.approx(1.0, abs=1e-12)
        assert rep.value == pytest.approx(K.entries[0, 0], rel=1e-13)
        assert rep.converged

    def test_two_symmetric_nodes(self):
        c = Condenser(
            plates=(make_plate(0, 1, [[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0]], sigma=1.0),)
        )
        K = condenser_gram(KernelSpec("riesz", alpha=2.0, epsilon=0.3), c)
        rep = solve(c, K, zero_field(c), SolverConfig(grad_tol=1e-12))
        np.testing.assert_allclose(rep.minimizer.weights[0], [0.5, 0.5], atol=1e-10)

    def test_infeasible_raises_with_plate_name(self):
        c = Condenser(plates=(make_plate(0, 1, [[0.0, 0.0]], sigma=0.0, mass=1.0),))
        K = condenser_gram(KernelSpec("riesz", alpha=1.0, epsilon=0.3), c)
        with pytest.raises(InfeasibleProblem, match="plate 0"):
            solve(c, K, zero_field(c))

    def test_non_pd_gram_refused(self):
        table = np.array([[1.0, 2.0], [2.0, 1.0]])
        c = Condenser(plates=(make_plate(0, 1, [[0.0], [1.0]], sigma=1.0),))
        K = condenser_gram(KernelSpec("custom_table", table=table), c)
        with pytest.raises(NotPositiveDefinite):
            solve(c, K, zero_field(c))

    @pytest.mark.parametrize("algorithm", ["projected_gradient", "frank_wolfe"])
    @pytest.mark.parametrize("step_rule", ["fixed_lipschitz", "backtracking"])
    def test_trace_monotone_and_constraints(self, algorithm, step_rule):
        rng = np.random.default_rng(2)
        c = two_plate_signed(rng, n_per=10)
        K = condenser_gram(KernelSpec("riesz", alpha=2.0), c)
        f = random_case1_field(rng, c)
        rep = solve(c, K, f, SolverConfig(algorithm=algorithm, step_rule=step_rule,
                                          grad_tol=1e-9))
        assert rep.converged
        tr = rep.objective_trace
        assert np.all(tr[1:] <= tr[:-1] + 1e-12 * (1.0 + np.abs(tr[:-1])))
        for p, w in zip(c.plates, rep.minimizer.weights):
            assert np.all(w >= 0.0) and np.all(w <= p.sigma + 1e-12)
            assert abs(float(p.g @ w) - p.mass) <= 1e-10 * p.mass
        recomputed = weighted_energy(c, K, f, rep.minimizer)
        assert abs(rep.value - recomputed) <= 1e-12 * (1.0 + abs(rep.value))

    def test_algorithms_agree(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            c = two_plate_signed(rng, n_per=10)
            K = condenser_gram(KernelSpec("riesz", alpha=2.0), c)
            f = random_case1_field(rng, c)
            rp = solve(c, K, f, SolverConfig(algorithm="projected_gradient", grad_tol=1e-10))
            rf = solve(c, K, f, SolverConfig(algorithm="frank_wolfe", grad_tol=1e-10))
            assert abs(rp.value - rf.value) <= 1e-6
            assert semimetric_distance(c, K, rp.minimizer, rf.minimizer) <= 1e-4

    def test_infinite_field_nodes_clamped(self):
        c = Condenser(
            plates=(make_plate(0, 1, [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], sigma=1.0),)
        )
        K = condenser_gram(KernelSpec("riesz", alpha=2.0, epsilon=0.4), c)
        f = FieldSpec(case=CASE1, case1_values=(np.array([np.inf, 0.0]),))
        rep = solve(c, K, f)
        np.testing.assert_allclose(rep.minimizer.weights[0], [0.0, 1.0], atol=1e-12)
        assert np.isfinite(rep.value)

    def test_lower_bound_case1(self):
        # value >= -2 sum_i a_i max|f_i| / min g_i for finite case-1 fields
        rng = np.random.default_rng(4)
        for _ in range(10):
            c = two_plate_signed(rng, n_per=8)
            K = condenser_gram(KernelSpec("riesz", alpha=2.0), c)
            f = random_case1_field(rng, c, scale=2.0)
            rep = solve(c, K, f, SolverConfig(grad_tol=1e-9))
            bound = -2.0 * sum(
                p.mass * float(np.abs(v).max()) / float(p.g.min())
                for p, v in zip(c.plates, f.case1_values)
            )
            assert rep.value >= bound - 1e-9
            assert np.isfinite(rep.value)

    def test_convexity_certificate_between_minimizers(self):
        rng = np.random.default_rng(5)
        c = two_plate_signed(rng, n_per=8)
        K = condenser_gram(KernelSpec("riesz", alpha=2.0), c)
        f = random_case1_field(rng, c)
        r1 = solve(c, K, f, SolverConfig(grad_tol=1e-11, seed=1))
        r2 = solve(c, K, f, SolverConfig(grad_tol=1e-11, seed=2))
        mid = c.measure(
            [0.5 * (a + b) for a, b in zip(r1.minimizer.weights, r2.minimizer.weights)]
        )
        assert weighted_energy(c, K, f, mid) <= max(r1.value, r2.value) + 1e-10

    def test_monotonicity_in_nodes_and_sigma(self):
        rng = np.random.default_rng(6)
        for _ in range(5):
            c = two_plate_signed(rng, n_per=12)
            K = condenser_gram(KernelSpec("riesz", alpha=2.0), c)
            f = zero_field(c)
            full = solve(c, K, f, SolverConfig(grad_tol=1e-10))
            keep = 9
            factor = 0.95
            plates, idx = [], []
            feasible = True
            for p, sl in zip(c.plates, c.slices()):
                sig = factor * p.sigma[:keep]
                if float(p.g[:keep] @ sig) < p.mass:
                    feasible = False
                plates.append(
                    make_plate(p.id, p.sign, p.nodes[:keep], g=p.g[:keep],
                               mass=p.mass, sigma=sig)
                )
                idx.extend(range(sl.start, sl.start + keep))
            if not feasible:
                continue
            c_sub = Condenser(plates=tuple(plates))
            from vequil.analysis import _sub_gram

            K_sub = _sub_gram(K, np.asarray(idx), c_sub)
            sub = solve(c_sub, K_sub, zero_field(c_sub), SolverConfig(grad_tol=1e-10))
            assert sub.value >= full.value - 1e-8


class TestVerifyKKT:
    def test_pinned_solution_residual_zero(self):
        c, K = pinned_single_node()
        rep = solve(c, K, zero_field(c))
        cert = verify_kkt(c, K, zero_field(c), rep.minimizer, tol=1e-10)
        assert cert.ok
        assert cert.max_residual == 0.0

    def test_perturbed_minimizer_flagged(self):
        rng = np.random.default_rng(7)
        c = two_plate_signed(rng, n_per=10)
        K = condenser_gram(KernelSpec("riesz", alpha=2.0), c)
        f = zero_field(c)
        rep = solve(c, K, f, SolverConfig(grad_tol=1e-10))
        w = [v.copy() for v in rep.minimizer.weights]
        sl = np.flatnonzero((w[0] > 0.01) & (w[0] < c.plates[0].sigma - 0.01))
        if sl.size < 2:  # move mass between two interior coordinates
            pytest.skip("no interior pair to perturb")
        g = c.plates[0].g
        w[0][sl[0]] += 0.01 / g[sl[0]]
        w[0][sl[1]] -= 0.01 / g[sl[1]]
        cert = verify_kkt(c, K, f, c.measure(w), tol=1e-6)
        assert not cert.ok

    def test_certificate_independent_of_solver(self):
        rng = np.random.default_rng(8)
        c = two_plate_signed(rng, n_per=10)
        K = condenser_gram(KernelSpec("riesz", alpha=2.0), c)
        f = random_case1_field(rng, c)
        for algorithm in ("projected_gradient", "frank_wolfe"):
            rep = solve(c, K, f, SolverConfig(algorithm=algorithm, grad_tol=1e-8))
            cert = verify_kkt(c, K, f, rep.minimizer, tol=1e-6)
            assert cert.ok
            assert len(cert.multipliers) == 2

    def test_uniqueness_across_starts(self):
        rng = np.random.default_rng(9)
        c = two_plate_signed(rng, n_per=8)
        K = condenser_gram(KernelSpec("riesz", alpha=2.0), c)
        f = zero_field(c)
        sols = [solve(c, K, f, SolverConfig(grad_tol=1e-12, seed=s)) for s in range(4)]
        for i in range(len(sols)):
            for j in range(i + 1, len(sols)):
                assert semimetric_distance(c, K, sols[i].minimizer, sols[j].minimizer) <= 1e-5
                ri = r_map(c, sols[i].minimizer)
                rj = r_map(c, sols[j].minimizer)
                assert np.max(np.abs(ri.weights - rj.weights)) <= 1e-5
