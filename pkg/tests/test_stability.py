"""Stability reduction: test matrices, minimum eigenvalues, gain solving."""

import numpy as np
import pytest

from pinnet.network import generate_adjacency, laplacian, make_network
from pinnet.stability import (
    FeasibilityResult,
    PinningPlan,
    StabilityParams,
    check_gain,
    infeasibility_multi,
    joint_stability_margin,
    min_eigenvalue,
    solve_min_gain,
    stability_matrix,
    violation_norm,
)
from test_network import char_poly_roots


def eig2x2_min(m: np.ndarray) -> float:
    """Closed-form smallest eigenvalue of a symmetric 2x2 matrix."""
    a, b, d = m[0, 0], m[0, 1], m[1, 1]
    return (a + d) / 2.0 - np.sqrt(((a - d) / 2.0) ** 2 + b * b)


def hinge_norm(m: np.ndarray, delta: float, q: float = 1.0) -> float:
    """Independent recomputation of the violation norm from raw eigenvalues."""
    lam = np.linalg.eigvalsh(m)
    short = np.maximum(0.0, delta - q * lam)
    return float(np.sqrt((short**2).sum()))


class TestStabilityMatrix:
    def test_empty_graph_all_pinned(self):
        m = stability_matrix(np.zeros((2, 2)), np.ones(2), 1.0, 1.0, 1.0)
        assert np.array_equal(m, 2.0 * np.eye(2))
        assert min_eigenvalue(m) == 2.0

    def test_two_node_worked_example(self):
        l_sym = np.array([[0.5, -0.5], [-0.5, 0.5]])
        m = stability_matrix(l_sym, np.array([1.0, 0.0]), 0.8, 2.0, 1.0)
        assert np.allclose(m, [[4.8, -0.8], [-0.8, 0.8]], atol=1e-15)
        assert abs(min_eigenvalue(m) - eig2x2_min(m)) <= 1e-12

    def test_zero_gain_drops_pin_term(self):
        g = generate_adjacency(5, 0.4, 3)
        l_sym = laplacian(g).symmetric_part
        m = stability_matrix(l_sym, np.ones(5), 0.7, 0.0, 1.3)
        assert np.allclose(m, 2.0 * 0.7 * 1.3 * l_sym, atol=1e-15)

    def test_accepts_diagonal_matrix_form(self):
        l_sym = np.zeros((3, 3))
        m_vec = stability_matrix(l_sym, np.array([1.0, 0.0, 1.0]), 1.0, 2.0, 1.0)
        m_mat = stability_matrix(l_sym, np.diag([1.0, 0.0, 1.0]), 1.0, 2.0, 1.0)
        assert np.array_equal(m_vec, m_mat)

    def test_validation(self):
        with pytest.raises(ValueError, match="does not match"):
            stability_matrix(np.zeros((3, 3)), np.ones(2), 1.0, 1.0, 1.0)
        with pytest.raises(ValueError, match="symmetric"):
            stability_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]), np.ones(2), 1.0, 1.0, 1.0)
        with pytest.raises(ValueError, match="0 or 1"):
            stability_matrix(np.zeros((2, 2)), np.array([0.5, 1.0]), 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            stability_matrix(np.zeros((2, 2)), np.ones(2), -1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            stability_matrix(np.zeros((2, 2)), np.ones(2), 1.0, -0.1, 1.0)


class TestMinEigenvalue:
    def test_diagonal(self):
        assert min_eigenvalue(np.diag([3.0, 5.0])) == 3.0

    def test_symmetric_2x2(self):
        assert abs(min_eigenvalue(np.array([[2.0, 1.0], [1.0, 2.0]])) - 1.0) <= 1e-12

    def test_matches_char_poly_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            a = rng.normal(size=(6, 6))
            m = (a + a.T) / 2.0
            oracle = np.min(char_poly_roots(m).real)
            assert abs(min_eigenvalue(m) - oracle) <= 1e-8

    def test_rejects_asymmetric(self):
        m = np.array([[1.0, 2.0], [2.0 + 1e-6, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            min_eigenvalue(m)


class TestSolveMinGain:
    def test_scalar_node_needs_half_delta(self):
        res = solve_min_gain(
            np.zeros((1, 1)), np.ones(1), 1.0, 1.0, StabilityParams(delta=1.0)
        )
        assert res.feasible and res.xi == 0.0
        assert abs(res.gain - 0.5) <= 1e-4
        assert res.margin >= 0.0

    def test_no_control_authority_is_infeasible(self):
        for n, delta in ((2, 1.0), (5, 0.7), (9, 2.5)):
            res = solve_min_gain(
                np.zeros((n, n)), np.zeros(n), 1.0, 1.0, StabilityParams(delta=delta)
            )
            assert not res.feasible
            assert res.gain is None
            assert abs(res.xi - delta * np.sqrt(n)) <= 1e-12

    def test_matches_linear_scan_oracle(self):
        params = StabilityParams(delta=1.0, c_max=50.0)
        for seed in range(6):
            g = generate_adjacency(5, 0.5, seed)
            l_sym = laplacian(g).symmetric_part
            pins = np.ones(5)
            res = solve_min_gain(l_sym, pins, 0.8, 1.0, params)
            assert res.feasible
            # independent oracle: march c upward in 1e-4 steps
            c = 0.0
            while c <= params.c_max:
                m = 2.0 * 0.8 * l_sym + 2.0 * c * np.diag(pins)
                if np.linalg.eigvalsh(m)[0] >= params.delta:
                    break
                c += 1e-4
            assert abs(res.gain - c) <= 1e-3

    def test_zero_gain_when_unneeded(self):
        # strongly diagonally dominant symmetric part certifies itself
        l_sym = np.diag([5.0, 6.0, 7.0])
        res = solve_min_gain(l_sym, np.zeros(3), 1.0, 1.0, StabilityParams(delta=1.0))
        assert res.feasible and res.gain == 0.0

    def test_feasible_iff_xi_zero(self):
        rng = np.random.default_rng(5)
        params = StabilityParams(delta=1.2, c_max=8.0)
        seen = {True: 0, False: 0}
        for seed in range(60):
            g = generate_adjacency(4, 0.6, seed)
            l_sym = laplacian(g).symmetric_part
            pins = (rng.random(4) < 0.4).astype(float)
            res = solve_min_gain(l_sym, pins, 0.8, 1.0, params)
            assert res.feasible == (res.xi == 0.0)
            if res.feasible:
                assert 0.0 <= res.gain <= params.c_max
                assert res.margin >= 0.0
            seen[res.feasible] += 1
        assert seen[True] > 0 and seen[False] > 0


class TestCheckGain:
    def test_fixed_gain_feasibility(self):
        l_sym = np.zeros((1, 1))
        params = StabilityParams(delta=1.0)
        ok = check_gain(l_sym, np.ones(1), 1.0, 1.0, 0.6, params)
        assert ok.feasible and ok.gain == 0.6 and ok.xi == 0.0
        bad = check_gain(l_sym, np.ones(1), 1.0, 1.0, 0.4, params)
        assert not bad.feasible and bad.gain is None
        assert abs(bad.xi - hinge_norm(np.array([[0.8]]), 1.0)) <= 1e-15


class TestInfeasibilityMulti:
    def _mk(self, xi: float) -> FeasibilityResult:
        feasible = xi == 0.0
        return FeasibilityResult(
            feasible=feasible, gain=1.0 if feasible else None, margin=0.0, xi=xi
        )

    def test_all_feasible_sums_to_zero(self):
        assert infeasibility_multi([self._mk(0.0)] * 3) == 0.0

    def test_arithmetic_sum(self):
        assert infeasibility_multi([self._mk(0.0), self._mk(1.5), self._mk(2.5)]) == 4.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            infeasibility_multi([])

    def test_matches_direct_recomputation(self):
        params = StabilityParams(delta=1.0, c_max=2.0)
        rng = np.random.default_rng(2)
        results, expected = [], 0.0
        for seed in range(3):
            g = generate_adjacency(4, 0.3, seed)
            l_sym = laplacian(g).symmetric_part
            pins = (rng.random(4) < 0.3).astype(float)
            res = solve_min_gain(l_sym, pins, 0.8, 1.0, params)
            results.append(res)
            m_top = 2.0 * 0.8 * l_sym + 2.0 * params.c_max * np.diag(pins)
            if np.linalg.eigvalsh(m_top)[0] < params.delta:
                expected += hinge_norm(m_top, params.delta)
        assert abs(infeasibility_multi(results) - expected) <= 1e-12
        assert expected > 0.0  # the case mix exercises the infeasible branch


class TestViolationNorm:
    def test_zero_on_certified_matrix(self):
        assert violation_norm(3.0 * np.eye(4), delta=1.0) == 0.0

    def test_uncontrolled_zero_matrix(self):
        assert abs(violation_norm(np.zeros((4, 4)), delta=2.0) - 2.0 * 2.0) <= 1e-15


class TestJointMargin:
    def test_nonnegative_when_all_networks_certified(self):
        from pinnet.network import build_multinetwork, DirectedNetwork

        params = StabilityParams(delta=1.0)
        nets, genes, gains = [], [], []
        rng = np.random.default_rng(0)
        for k in range(2):
            g = generate_adjacency(4, 0.4, k)
            ids = np.arange(4) if k == 0 else np.array([1, 2, 3])
            if k == 1:
                g = g[:3, :3]
            net = DirectedNetwork(
                adjacency=g,
                coupling_strength=0.8,
                gamma=1.0,
                target=np.array([float(10 * (k + 1))]),
                node_ids=ids,
            )
            nets.append(net)
            pins = np.ones(net.n)
            res = solve_min_gain(
                net.lap.symmetric_part, pins, 0.8, 1.0, params
            )
            assert res.feasible
            genes.append(pins)
            gains.append(res.gain)
        memberships = [frozenset({0}), frozenset({0, 1}), frozenset({0, 1}), frozenset({0, 1})]
        sys = build_multinetwork(nets, memberships)
        plan = PinningPlan.from_genes(sys, genes, gains)
        assert joint_stability_margin(sys, plan, params) >= -1e-9
