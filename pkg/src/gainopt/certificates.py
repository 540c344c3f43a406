"""Stability and rate certificates via positive realness and the circle criterion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularTransformError, UncertifiableError
from .synthesis import RateBudget
from .transfer import Polynomial, TransferFunction, TransferMatrix

_PD_RTOL = 1e-10


@dataclass(frozen=True)
class SPRConfig:
    """Unit-circle sampling density and Hermitian-part floor for SPR checks."""

    grid_points: int = 4096
    epsilon: float = 1e-9

    def __post_init__(self):
        if self.grid_points < 64:
            raise ValueError("grid_points must be at least 64")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class SectorBound:
    """Gain sector [k1, k2]; k2 = inf allowed."""

    k1: float
    k2: float

    def __post_init__(self):
        if self.k1 < 0.0 or not self.k2 > self.k1:
            raise ValueError("need 0 <= k1 < k2")


def loop_transform(G: TransferFunction, budget: RateBudget) -> TransferFunction:
    """Map a [mu, ell]-sector loop to a [0, inf) one: Psi = (1 + ell G)/(1 + mu G)."""
    if not budget.finite:
        raise ValueError("loop transform needs a finite budget")
    num = G.den + budget.ell * G.num
    den = G.den + budget.mu * G.num
    if Polynomial(den.coeffs).is_zero:
        raise SingularTransformError("1 + mu*G vanishes identically")
    return TransferFunction(num, den)


def inverse_loop_transform(Psi: TransferFunction, budget: RateBudget) -> TransferFunction:
    """Invert the sector transform: G = (Psi - 1)/(ell - mu*Psi)."""
    num = Psi.num - Psi.den
    den = budget.ell * Psi.den - budget.mu * Psi.num
    if Polynomial(den.coeffs).is_zero:
        raise SingularTransformError("ell - mu*Psi vanishes identically")
    return TransferFunction(num, den)


def _split_matrices(budget):
    one = TransferFunction([1.0])
    zero = TransferFunction([0.0])
    E1 = TransferMatrix([[one, zero], [zero, zero]])
    L = TransferMatrix([[budget.ell * one, zero], [zero, one]])
    M = TransferMatrix([[budget.mu * one, zero], [zero, zero]])
    return E1, L, M


def loop_transform_split(G: TransferMatrix, budget: RateBudget) -> TransferMatrix:
    """2x2 sector transform for split objectives: (E1 + L G)(I + M G)^-1."""
    E1, L, M = _split_matrices(budget)
    inner = TransferMatrix.identity(2) + (M @ G)
    if inner.det().is_zero:
        raise SingularTransformError("I + M*G is singular")
    return (E1 + (L @ G)) @ inner.inverse()


def inverse_loop_transform_split(Psi: TransferMatrix, budget: RateBudget) -> TransferMatrix:
    """Invert the split transform: G = (L - Psi M)^-1 (Psi - E1)."""
    E1, L, M = _split_matrices(budget)
    lead = L - (Psi @ M)
    if lead.det().is_zero:
        raise SingularTransformError("L - Psi*M is singular")
    return lead.inverse() @ (Psi - E1)


def _hermitian_floor(Psi, gamma, grid_points):
    """Smallest Hermitian-part value of Psi on the circle |z| = gamma."""
    zs = gamma * np.exp(2j * np.pi * np.arange(grid_points) / grid_points)
    if isinstance(Psi, TransferFunction):
        return float(np.min(Psi.eval_many(zs).real) * 2.0)
    n = Psi.rows
    vals = np.empty((len(zs), n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            vals[:, i, j] = Psi[i, j].eval_many(zs)
    herm = vals + np.conj(np.swapaxes(vals, 1, 2))
    return float(np.min(np.linalg.eigvalsh(herm)))


def spr_check(Psi, gamma: float, config: SPRConfig = SPRConfig()) -> bool:
    """Strict positive realness of Psi(gamma * z) outside the closed unit disk.

    Requires every pole of Psi inside |z| < gamma and a Hermitian part of at
    least epsilon on the sampled circle |z| = gamma.  The grid is doubled
    once when the verdict is within a factor of ten of the floor.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    if any(abs(p) >= gamma for p in Psi.poles()):
        return False
    m = _hermitian_floor(Psi, gamma, config.grid_points)
    if config.epsilon / 10.0 < m < config.epsilon * 10.0:
        m = _hermitian_floor(Psi, gamma, 2 * config.grid_points)
    return m >= config.epsilon


def rate_certificate(
    G: TransferFunction,
    budget: RateBudget,
    config: SPRConfig = SPRConfig(),
    tol: float = 1e-4,
) -> float:
    """Smallest rho with Psi(gamma z) strictly positive real on gamma in (rho, 1).

    Certifies rho-convergence of the sector-bounded loop around G for every
    objective with gradient increments in the [mu, ell] sector.
    """
    psi = loop_transform(G, budget)
    if not spr_check(psi, 1.0, config):
        raise UncertifiableError("positive realness fails at unit radius")

    def feasible(rho):
        gammas = np.geomspace(max(rho, 1e-6), 1.0 - 1e-12, 32)
        return all(spr_check(psi, g, config) for g in gammas[::-1])

    lo, hi = 0.0, 1.0 - 1e-12
    if feasible(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def scale_matrix(Psi: TransferMatrix, w: float) -> TransferMatrix:
    """Similarity scaling diag(w, 1) Psi diag(1/w, 1)."""
    return TransferMatrix(
        [
            [Psi[0, 0], w * Psi[0, 1]],
            [(1.0 / w) * Psi[1, 0], Psi[1, 1]],
        ]
    )


def scaled_spr_search(
    Psi: TransferMatrix,
    gamma: float,
    w_grid,
    config: SPRConfig = SPRConfig(),
):
    """First scaling weight w making diag(w,1) Psi diag(1/w,1) pass the SPR check."""
    if not len(w_grid):
        raise ValueError("w_grid must be nonempty")
    for w in w_grid:
        if w == 0.0:
            raise ValueError("scaling weights must be nonzero")
        if spr_check(scale_matrix(Psi, float(w)), gamma, config):
            return True, float(w)
    return False, float("nan")


def caratheodory_pick(P1: np.ndarray, Pinf: np.ndarray, gamma: float):
    """Feasibility matrix for positive-real interpolation at z = 1 and infinity."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    P1 = np.asarray(P1, dtype=float)
    Pinf = np.asarray(Pinf, dtype=float)
    top = np.hstack([(P1 + P1.T) / (1.0 - gamma**2), P1 + Pinf.T])
    bot = np.hstack([P1.T + Pinf, Pinf + Pinf.T])
    L = np.vstack([top, bot])
    L = 0.5 * (L + L.T)
    eig = np.linalg.eigvalsh(L)
    feasible = bool(eig[0] > _PD_RTOL * max(eig[-1], 0.0) and eig[-1] > 0.0)
    return L, feasible


def verify_sector(
    delta_map,
    bound: SectorBound,
    samples: int = 10000,
    dim: int = 1,
    seed: int = 0,
) -> bool:
    """Sampled check of <phi(x) - k1 x, phi(x) - k2 x> <= 0.

    Gaussian samples at several radii; one-dimensional maps additionally get
    a dense grid sweep, which is what catches boundary-touching violations.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    radii = (0.01, 0.1, 1.0, 10.0, 100.0)
    points = []
    per = max(1, samples // (2 * len(radii)) if dim == 1 else samples // len(radii))
    for r in radii:
        points.append(r * rng.standard_normal((per, dim)))
    if dim == 1:
        n_grid = max(samples - len(radii) * per, 2)
        points.append(np.linspace(-10.0, 10.0, n_grid).reshape(-1, 1))
    X = np.vstack(points)

    k1, k2 = bound.k1, bound.k2
    for x in X:
        y = np.atleast_1d(np.asarray(delta_map(x if dim > 1 else float(x[0])), dtype=float))
        n2 = float(np.dot(x, x))
        if math.isinf(k2):
            # sector [k1, inf): need <phi(x) - k1 x, x> >= 0
            val = float(np.dot(y - k1 * x, x))
            if val < -1e-9 * (1.0 + k1) * (1.0 + n2):
                return False
        else:
            val = float(np.dot(y - k1 * x, y - k2 * x))
            if val > 1e-9 * (1.0 + k1) * (1.0 + k2) * (1.0 + n2):
                return False
    return True
