"""Gain-margin optimization via conformal maps and Nevanlinna-Pick interpolation.

The plant family is k*P0 for k in [k1, k2].  Robust stabilization is recast
as interpolation of a contractive function on the exterior of the unit disk;
the conformal map phi carries complementary-sensitivity values into the disk
and exposes the closed-form feasibility boundary.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadIntervalError,
    DegenerateError,
    DuplicateNodeError,
    ForbiddenValueError,
    InfeasibleError,
    NominalUnstableError,
    OutsideDiskError,
)
from .transfer import TransferFunction, feedback

_PD_RTOL = 1e-10  # Pick positive-definiteness threshold, relative to largest eigenvalue


@dataclass(frozen=True)
class MarginSpec:
    """One unstable pole p, gain interval [k1, k2], strict-causality flag."""

    p: complex
    k1: float
    k2: float
    zero_at_infinity: bool = True

    def __post_init__(self):
        if abs(self.p) <= 1.0:
            raise ValueError("nominal pole must lie outside the closed unit disk")
        if not 0.0 < self.k1 < 1.0 < self.k2:
            raise BadIntervalError("gain interval must satisfy 0 < k1 < 1 < k2")


@dataclass(frozen=True)
class InterpolationNode:
    """Constraint T(node) = value with |node| >= 1 (node=None means infinity)."""

    node: complex | None
    value: complex

    def __post_init__(self):
        if self.node is not None:
            node = complex(self.node)
            if node in (complex("inf"),) or abs(node) == float("inf"):
                object.__setattr__(self, "node", None)
            elif abs(node) < 1.0:
                raise ValueError("node must lie outside the open unit disk")
        if abs(self.value) >= 1.0:
            raise ValueError("value must lie in the open unit disk")

    @property
    def is_infinite(self) -> bool:
        return self.node is None

    @property
    def disk_point(self) -> complex:
        """Image of the node under z -> 1/z."""
        return 0.0 if self.node is None else 1.0 / complex(self.node)

    @staticmethod
    def at_infinity(value) -> "InterpolationNode":
        return InterpolationNode(None, value)


def g_of(k1: float, k2: float) -> float:
    """Disk image of the nominal closed loop: (sqrt(k2/k1)-1)/(sqrt(k2/k1)+1)."""
    if k1 <= 0.0 or k2 <= k1:
        raise BadIntervalError("need 0 < k1 < k2")
    r = np.sqrt(k2 / k1)
    return (r - 1.0) / (r + 1.0)


def _forbidden(zeta: complex, k1: float, k2: float, tol=1e-12) -> bool:
    if abs(zeta.imag) > tol * (1.0 + abs(zeta)):
        return False
    x = zeta.real
    return x <= -1.0 / (k2 - 1.0) + tol or x >= 1.0 / (1.0 - k1) - tol


def phi_forward(zeta, k1: float, k2: float) -> complex:
    """Composite conformal map sending the admissible set into the unit disk."""
    if not 0.0 < k1 < 1.0 < k2:
        raise BadIntervalError("need 0 < k1 < 1 < k2")
    zeta = complex(zeta)
    if _forbidden(zeta, k1, k2):
        raise ForbiddenValueError(f"{zeta} lies in the excluded real set")
    a = cmath.sqrt(1.0 + (k2 - 1.0) * zeta)
    b = cmath.sqrt(1.0 + (k1 - 1.0) * zeta)
    return (a - b) / (a + b)


def phi_inverse(u, k1: float, k2: float) -> complex:
    """Inverse of phi_forward on the open unit disk; u = 0 maps to 0 by continuity."""
    if not 0.0 < k1 < 1.0 < k2:
        raise BadIntervalError("need 0 < k1 < 1 < k2")
    u = complex(u)
    if abs(u) >= 1.0:
        raise OutsideDiskError("argument must lie in the open unit disk")
    if u == 0.0:
        return 0.0
    w = 0.25 * (k2 - k1) * (u + 1.0 / u) - 0.5 * (k1 + k2) + 1.0
    return 1.0 / w


def phi_inverse_tf(T: TransferFunction, k1: float, k2: float) -> TransferFunction:
    """Apply the inverse conformal map to a rational T with |T| < 1 on |z| >= 1.

    zeta = 1 / ((k2-k1)/4 * (T + 1/T) - (k1+k2)/2 + 1), carried out in exact
    rational arithmetic.
    """
    c1 = 0.25 * (k2 - k1)
    c0 = 1.0 - 0.5 * (k1 + k2)
    # w = c1*(T + 1/T) + c0 as a single fraction: (c1*(num^2+den^2) + c0*num*den)/(num*den)
    num, den = T.num, T.den
    w_num = c1 * (num * num + den * den) + c0 * (num * den)
    w_den = num * den
    return TransferFunction(w_den, w_num)


def margin_feasible(spec: MarginSpec) -> bool:
    """Whether a single stabilizing controller covers the whole gain interval."""
    if not spec.zero_at_infinity:
        return True  # no zero at infinity: margin unbounded
    return g_of(spec.k1, spec.k2) < 1.0 / abs(spec.p)


def optimal_margin(p) -> float:
    """Supremum of achievable k2/k1 for a strictly causal plant with pole p."""
    m = abs(complex(p))
    if m <= 1.0:
        raise ValueError("pole must lie outside the closed unit disk")
    return ((m + 1.0) / (m - 1.0)) ** 2


def pick_matrix(nodes) -> np.ndarray:
    pts = [n.disk_point for n in nodes]
    vals = [complex(n.value) for n in nodes]
    k = len(nodes)
    for i in range(k):
        for j in range(i + 1, k):
            if abs(pts[i] - pts[j]) < 1e-12:
                raise DuplicateNodeError("interpolation nodes must be distinct")
    A = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            A[i, j] = (1.0 - vals[i] * np.conj(vals[j])) / (
                1.0 - pts[i] * np.conj(pts[j])
            )
    return A


def pick_feasible(nodes):
    """Pick matrix for the node set and whether it is positive definite."""
    A = pick_matrix(nodes)
    eig = np.linalg.eigvalsh(A)
    feasible = bool(eig[0] > _PD_RTOL * max(eig[-1], 0.0) and eig[-1] > 0.0)
    return A, feasible


def np_solve(nodes) -> TransferFunction:
    """Interpolant analytic outside the unit disk with modulus below one.

    Schur recursion in the disk variable zeta = 1/z, taking the central
    (zero) parameter once all constraints are peeled off.
    """
    _, feasible = pick_feasible(nodes)
    if not feasible:
        raise InfeasibleError("Pick matrix is not positive definite")

    zetas = [complex(n.disk_point) for n in nodes]
    vals = [complex(n.value) for n in nodes]
    k = len(nodes)

    # forward sweep: peel one constraint per level, updating the rest
    levels = []
    for i in range(k):
        zi, vi = zetas[i], vals[i]
        levels.append((zi, vi))
        for j in range(i + 1, k):
            b = (zetas[j] - zi) / (1.0 - np.conj(zi) * zetas[j])
            vals[j] = (vals[j] - vi) / (1.0 - np.conj(vi) * vals[j]) / b
            if abs(vals[j]) >= 1.0:
                raise InfeasibleError("Schur parameter left the unit disk")

    # backward substitution starting from the central parameter F = 0
    f_num = np.array([0j])
    f_den = np.array([1.0 + 0j])
    for zi, vi in reversed(levels):
        b_num = np.array([-zi, 1.0 + 0j])
        b_den = np.array([1.0 + 0j, -np.conj(zi)])
        bn = np.convolve(b_num, f_num)
        bd = np.convolve(b_den, f_den)
        n = max(len(bn), len(bd))
        bn = np.pad(bn, (0, n - len(bn)))
        bd = np.pad(bd, (0, n - len(bd)))
        f_num = bn + vi * bd
        f_den = bd + np.conj(vi) * bn

    # back to the variable z via T(z) = F(1/z)
    L = max(len(f_num), len(f_den)) - 1
    num_z = np.zeros(L + 1, dtype=complex)
    den_z = np.zeros(L + 1, dtype=complex)
    num_z[L - (len(f_num) - 1) :] = f_num[::-1]
    den_z[L - (len(f_den) - 1) :] = f_den[::-1]
    scale = max(1.0, np.max(np.abs(num_z)), np.max(np.abs(den_z)))
    if max(np.max(np.abs(num_z.imag)), np.max(np.abs(den_z.imag))) > 1e-9 * scale:
        raise ValueError("interpolation data produced complex coefficients")
    T = TransferFunction(num_z.real, den_z.real)

    for node in nodes:
        got = T.feedthrough() if node.is_infinite else T.eval(node.node)
        if abs(got - node.value) > 1e-9 * (1.0 + abs(node.value)):
            raise InfeasibleError("constructed interpolant misses a node")
    grid = np.exp(1j * np.linspace(0.0, 2.0 * np.pi, 512, endpoint=False))
    if np.max(np.abs(T.eval_many(grid))) >= 1.0:
        raise InfeasibleError("interpolant is not contractive on the unit circle")
    return T


def recover_controller(T: TransferFunction, P0: TransferFunction) -> TransferFunction:
    """Controller with complementary sensitivity T for the plant P0."""
    one_minus_T = TransferFunction(T.den - T.num, T.den)
    if one_minus_T.is_zero:
        raise DegenerateError("T is identically one")
    if P0.is_zero:
        raise ValueError("plant must be nonzero")
    return T / (P0 * one_minus_T)


def _charpoly_roots(P0, C, k):
    return (P0.den * C.den + k * (P0.num * C.num)).roots()


def margin_verify(
    P0: TransferFunction,
    C: TransferFunction,
    k1: float,
    k2: float,
    grid: int = 25,
) -> bool:
    """Root-locus check of closed-loop stability over a log-spaced gain grid."""
    if grid < 1:
        raise ValueError("grid must be positive")
    nominal = _charpoly_roots(P0, C, 1.0)
    if not all(abs(r) < 1.0 - 1e-9 for r in nominal):
        raise NominalUnstableError("closed loop unstable at the nominal gain")
    for k in np.geomspace(k1, k2, grid):
        roots = _charpoly_roots(P0, C, k)
        if not all(abs(r) < 1.0 - 1e-9 for r in roots):
            return False
    return True
