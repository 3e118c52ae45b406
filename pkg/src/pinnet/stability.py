"""Eigenvalue-reduced stability tests and minimal-gain solving.

With internal coupling gamma * I and Lyapunov weight Q = q * I, the Kronecker
matrix inequality certifying pinning consensus collapses to an N x N symmetric
test: the network is certified stable when

    q * lambda_min(2*C*gamma*L_s + 2*c*gamma*D_hat) >= delta,

where L_s is the symmetric Laplacian part, D_hat the 0/1 pinning diagonal and
c the control gain.  lambda_min is nondecreasing in c (adding 2*c*gamma*D_hat
is a PSD perturbation), so the minimal certifying gain is found by bisection.
When no gain up to c_max certifies the set, the infeasibility measure xi is
the Frobenius norm of the violating part of the shifted matrix, i.e.
sqrt(sum_i max(0, delta - q*lambda_i)^2) at c = c_max; xi is zero exactly on
feasible sets, which is what makes it usable as a search penalty.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .network import MultiNetworkSystem

SYMMETRY_TOL = 1e-9


@dataclass(frozen=True)
class StabilityParams:
    """Constants of the stability test and the gain search."""

    delta: float = 1.0
    q: float = 1.0
    c_max: float = 50.0
    bisection_tol: float = 1e-6
    max_bisection_iters: int = 60

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError("delta must be > 0")
        if self.q <= 0.0:
            raise ValueError("q must be > 0")
        if self.c_max <= 0.0:
            raise ValueError("c_max must be > 0")
        if self.bisection_tol <= 0.0:
            raise ValueError("bisection_tol must be > 0")


@dataclass(frozen=True)
class FeasibilityResult:
    """Outcome of a gain search: solved gain when feasible, violation size otherwise.

    ``margin`` is q * lambda_min(M) - delta at the reported gain (c_max when
    infeasible); ``xi`` is zero iff feasible.
    """

    feasible: bool
    gain: Optional[float]
    margin: float
    xi: float


def _as_pin_vector(d_hat: np.ndarray, n: int) -> np.ndarray:
    """Accept a 0/1 vector or diagonal matrix of pin indicators."""
    d = np.asarray(d_hat, dtype=np.float64)
    if d.ndim == 2:
        if d.shape != (n, n):
            raise ValueError(f"pin matrix shape {d.shape} does not match n={n}")
        if np.any(d != np.diag(np.diagonal(d))):
            raise ValueError("pin matrix must be diagonal")
        d = np.diagonal(d).copy()
    if d.shape != (n,):
        raise ValueError(f"pin vector length {d.shape} does not match n={n}")
    if np.any((d != 0.0) & (d != 1.0)):
        raise ValueError("pin indicators must be 0 or 1")
    return d


def _check_symmetric(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if m.size and np.max(np.abs(m - m.T)) > SYMMETRY_TOL:
        raise ValueError("matrix is not symmetric within tolerance 1e-9")
    return m


def stability_matrix(
    l_sym: np.ndarray,
    d_hat: np.ndarray,
    coupling: float,
    gain: float,
    gamma: float,
) -> np.ndarray:
    """Form M = 2*C*gamma*L_s + 2*c*gamma*D_hat, the reduced test matrix."""
    l_sym = _check_symmetric(l_sym)
    n = l_sym.shape[0]
    pins = _as_pin_vector(d_hat, n)
    if coupling <= 0.0 or gamma <= 0.0:
        raise ValueError("coupling and gamma must be > 0")
    if gain < 0.0:
        raise ValueError("gain must be >= 0")
    m = 2.0 * coupling * gamma * l_sym + 2.0 * gain * gamma * np.diag(pins)
    return m


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix (symmetry enforced)."""
    m = _check_symmetric(m)
    return float(np.linalg.eigvalsh(m)[0])


def violation_norm(m: np.ndarray, delta: float, q: float = 1.0) -> float:
    """Frobenius norm of the part of q*M falling below delta*I.

    Zero exactly when q*M >= delta*I; otherwise sqrt of the summed squared
    eigenvalue shortfalls.
    """
    lam = np.linalg.eigvalsh(_check_symmetric(m))
    short = np.clip(delta - q * lam, 0.0, None)
    return float(np.sqrt(np.sum(short * short)))


def check_gain(
    l_sym: np.ndarray,
    d_hat: np.ndarray,
    coupling: float,
    gamma: float,
    gain: float,
    params: StabilityParams,
) -> FeasibilityResult:
    """Test the stability condition at one fixed gain (no search)."""
    m = stability_matrix(l_sym, d_hat, coupling, gain, gamma)
    lam = np.linalg.eigvalsh(m)
    margin = params.q * float(lam[0]) - params.delta
    if margin >= 0.0:
        return FeasibilityResult(feasible=True, gain=float(gain), margin=margin, xi=0.0)
    short = np.clip(params.delta - params.q * lam, 0.0, None)
    xi = float(np.sqrt(np.sum(short * short)))
    return FeasibilityResult(feasible=False, gain=None, margin=margin, xi=xi)


def solve_min_gain(
    l_sym: np.ndarray,
    d_hat: np.ndarray,
    coupling: float,
    gamma: float,
    params: StabilityParams,
) -> FeasibilityResult:
    """Find the minimal gain in [0, c_max] certifying stability, by bisection.

    lambda_min of the test matrix is nondecreasing in the gain, so feasibility
    is decided at c_max: if even that fails, the set is infeasible and xi
    measures its irreducible violation at c_max.  Otherwise bisection shrinks
    to the smallest certifying gain within the relative tolerance.
    """
    l_sym = _check_symmetric(l_sym)
    n = l_sym.shape[0]
    pins = _as_pin_vector(d_hat, n)
    if coupling <= 0.0 or gamma <= 0.0:
        raise ValueError("coupling and gamma must be > 0")

    base = 2.0 * coupling * gamma * l_sym
    lift = 2.0 * gamma * pins  # diagonal increment per unit gain

    def eigmin(c: float) -> float:
        m = base.copy()
        m[np.diag_indices(n)] += c * lift
        return float(np.linalg.eigvalsh(m)[0])

    top = eigmin(params.c_max)
    if params.q * top < params.delta:
        m_top = base.copy()
        m_top[np.diag_indices(n)] += params.c_max * lift
        lam = np.linalg.eigvalsh(m_top)
        short = np.clip(params.delta - params.q * lam, 0.0, None)
        xi = float(np.sqrt(np.sum(short * short)))
        return FeasibilityResult(
            feasible=False,
            gain=None,
            margin=params.q * top - params.delta,
            xi=xi,
        )

    if params.q * eigmin(0.0) >= params.delta:
        return FeasibilityResult(
            feasible=True,
            gain=0.0,
            margin=params.q * eigmin(0.0) - params.delta,
            xi=0.0,
        )

    lo, hi = 0.0, params.c_max
    for _ in range(params.max_bisection_iters):
        mid = 0.5 * (lo + hi)
        if params.q * eigmin(mid) >= params.delta:
            hi = mid
        else:
            lo = mid
        if hi - lo <= params.bisection_tol * max(1.0, hi):
            break
    return FeasibilityResult(
        feasible=True,
        gain=hi,
        margin=params.q * eigmin(hi) - params.delta,
        xi=0.0,
    )


def infeasibility_multi(results: Sequence[FeasibilityResult]) -> float:
    """Aggregate infeasibility over networks: the sum of per-network xi."""
    if len(results) == 0:
        raise ValueError("need at least one per-network result")
    return float(sum(r.xi for r in results))


@dataclass(frozen=True)
class PinningPlan:
    """A concrete control plan: per-network pin indicators and solved gains.

    ``pins[k]`` is aligned with network k's node order; ``aggregated`` is the
    global indicator max_k d_i^(k) so an overlap node counts once.
    """

    pins: tuple[np.ndarray, ...]
    gains: tuple[float, ...]
    aggregated: np.ndarray

    @property
    def pinned_count(self) -> int:
        return int(self.aggregated.sum())

    @staticmethod
    def from_genes(
        sys: MultiNetworkSystem,
        genes: Sequence[np.ndarray],
        gains: Sequence[float],
    ) -> "PinningPlan":
        if len(genes) != sys.num_networks or len(gains) != sys.num_networks:
            raise ValueError("need one gene vector and one gain per network")
        pins = []
        agg = np.zeros(sys.total_nodes)
        for net, g in zip(sys.networks, genes):
            vec = np.asarray(g, dtype=np.float64)
            if vec.shape != (net.n,):
                raise ValueError("gene vector length must match network size")
            pins.append(vec)
            agg[net.node_ids] = np.maximum(agg[net.node_ids], vec)
        return PinningPlan(
            pins=tuple(pins),
            gains=tuple(float(c) for c in gains),
            aggregated=agg,
        )


def joint_stability_margin(
    sys: MultiNetworkSystem, plan: PinningPlan, params: StabilityParams
) -> float:
    """Diagnostic margin of the summed (whole-system) stability inequality.

    Embeds every network's test matrix into global coordinates, sums them and
    returns q * lambda_min - delta.  Per-network feasibility at the plan's
    gains implies this margin is nonnegative.
    """
    n = sys.total_nodes
    joint = np.zeros((n, n))
    for net, pins, gain in zip(sys.networks, plan.pins, plan.gains):
        m = stability_matrix(net.lap.symmetric_part, pins, net.coupling_strength, gain, net.gamma)
        idx = net.node_ids
        joint[np.ix_(idx, idx)] += m
    return params.q * float(np.linalg.eigvalsh(joint)[0]) - params.delta
