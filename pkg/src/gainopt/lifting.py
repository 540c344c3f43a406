"""Lifting of LTI and periodic algorithms to time-invariant MIMO form.

An n-periodic scalar algorithm becomes an n x n transfer matrix in a slowed
time index; causality shows up as a strictly lower triangular value at
infinity and the accumulator as a simple pole at z = 1 acting along the
all-ones direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import HigherOrderPoleError, ImproperEntryError
from .margin import g_of
from .transfer import (
    TransferFunction,
    TransferMatrix,
    realize_matrix,
)


@dataclass(frozen=True)
class LiftedSystem:
    period: int
    G: TransferMatrix

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("period must be at least 1")
        if self.G.shape != (self.period, self.period):
            raise ValueError("lifted matrix must be period x period")


@dataclass(frozen=True)
class PeriodicGDSchedule:
    """Cyclic gradient-descent steps; steps[i] produces phase i+1 of each block."""

    steps: tuple

    def __post_init__(self):
        steps = tuple(float(s) for s in self.steps)
        if not steps or any(s <= 0.0 for s in steps):
            raise ValueError("steps must be positive")
        object.__setattr__(self, "steps", steps)

    @property
    def period(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class Momentum2Schedule:
    """2-periodic momentum parameters (alpha, beta, eta pairs)."""

    alpha: tuple
    beta: tuple
    eta: tuple

    def __post_init__(self):
        for name in ("alpha", "beta", "eta"):
            pair = tuple(float(v) for v in getattr(self, name))
            if len(pair) != 2:
                raise ValueError(f"{name} must have two phases")
            object.__setattr__(self, name, pair)
        if abs(self.beta[0] * self.beta[1]) >= 1.0:
            raise ValueError("need |beta1*beta2| < 1 for a well-posed lift")


def polyphase(G: TransferFunction, n: int):
    """Components P_1..P_n with G(z) = sum_i z^{-(i-1)} P_i(z^n)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not G.is_proper:
        raise ValueError("G must be proper")
    if n == 1:
        return [G]
    om = np.exp(2j * np.pi / n)
    num = G.num.coeffs.astype(complex)
    den = G.den.coeffs.astype(complex)
    for k in range(1, n):
        rot = om**k
        dk = G.den.coeffs * rot ** np.arange(len(G.den.coeffs))
        num = np.convolve(num, dk)
        den = np.convolve(den, dk)
    scale = max(1.0, np.max(np.abs(num)), np.max(np.abs(den)))
    if max(np.max(np.abs(num.imag)), np.max(np.abs(den.imag))) > 1e-8 * scale:
        raise ValueError("polyphase expansion produced complex coefficients")
    num = num.real
    den = den.real
    # den now only has powers that are multiples of n
    d0 = den[::n]
    comps = []
    for i in range(1, n + 1):
        r = 0 if i == 1 else n - i + 1
        q = num[r::n] if r < len(num) else np.zeros(1)
        if q.size == 0:
            q = np.zeros(1)
        if i == 1:
            comps.append(TransferFunction(q, d0))
        else:
            comps.append(TransferFunction(np.concatenate(([0.0], q)), d0))
    return comps


def lift_lti(G: TransferFunction, n: int) -> LiftedSystem:
    """Block lift of a scalar LTI system viewed as trivially n-periodic."""
    comps = polyphase(G, n)
    zinv = TransferFunction([1.0], [0.0, 1.0])
    entries = []
    for i in range(1, n + 1):
        row = []
        for j in range(1, n + 1):
            if i >= j:
                row.append(comps[i - j])
            else:
                row.append(zinv * comps[n + i - j])
        entries.append(row)
    return LiftedSystem(n, TransferMatrix(entries))


def lift_periodic_gd(schedule: PeriodicGDSchedule) -> LiftedSystem:
    """Lift of gradient descent with a cyclic step schedule."""
    n = schedule.period
    steps = schedule.steps
    pole = TransferFunction([1.0], [-1.0, 1.0])
    z = TransferFunction([0.0, 1.0])
    entries = []
    for i in range(1, n + 1):
        row = []
        for j in range(1, n + 1):
            a = steps[j % n]  # column j carries alpha_{j+1}, last column alpha_1
            e = a * pole
            if j < i:
                e = z * e
            row.append(e)
        entries.append(row)
    return LiftedSystem(n, TransferMatrix(entries))


def lift_momentum2(schedule: Momentum2Schedule) -> LiftedSystem:
    """Lift of the 2-periodic momentum iteration."""
    a1, a2 = schedule.alpha
    b1, b2 = schedule.beta
    e1, e2 = schedule.eta
    den = TransferFunction([1.0], [b1 * b2, -(1.0 + b1 * b2), 1.0])  # 1/((z-1)(z-b1b2))
    z = TransferFunction([0.0, 1.0])
    left = TransferMatrix(
        [
            [z + b2, TransferFunction([1.0 + b1])],
            [(1.0 + b2) * z, z + b1],
        ]
    )
    right = TransferMatrix(
        [
            [TransferFunction([e1]), TransferFunction([a1])],
            [a2 * z, TransferFunction([e2])],
        ]
    )
    prod = left @ right
    return LiftedSystem(2, prod.map(lambda e: e * den))


def check_causal_structure(sys: LiftedSystem) -> bool:
    """Strictly lower triangular feedthrough means no circular dependence."""
    ft = sys.G.feedthrough()  # raises ImproperEntryError on improper entries
    n = sys.period
    for i in range(n):
        for j in range(i, n):
            if abs(ft[i, j]) >= 1e-12:
                return False
    return True


def accumulator_residues(sys: LiftedSystem) -> np.ndarray:
    """Residue at z = 1 of each coordinate of G(z) @ ones."""
    zmin1 = TransferFunction([-1.0, 1.0])
    out = np.empty(sys.period)
    for i in range(sys.period):
        acc = TransferFunction([0.0])
        for j in range(sys.period):
            acc = acc + sys.G[i, j]
        h = zmin1 * acc
        if abs(h.den(1.0)) < 1e-9 * max(1.0, np.max(np.abs(h.den.coeffs))):
            raise HigherOrderPoleError(
                f"row {i}: pole at z = 1 of multiplicity above one"
            )
        out[i] = complex(h.eval(1.0)).real
    return out


def check_accumulator_direction(sys: LiftedSystem) -> bool:
    """True when the step-reference direction sees exactly a simple accumulator."""
    res = accumulator_residues(sys)
    return bool(np.all(np.abs(res) > 1e-12))


def periodic_margin_condition(p, k1: float, k2: float, n: int) -> bool:
    """Period-n feasibility |p|^(-2n) > g^(2n); equivalent to the n = 1 test."""
    if n < 1:
        raise ValueError("n must be at least 1")
    m = abs(complex(p))
    if m <= 1.0:
        raise ValueError("pole must lie outside the closed unit disk")
    g = g_of(k1, k2)
    return m ** (-2 * n) > g ** (2 * n)


def closed_loop_poles(sys: LiftedSystem, lam: float):
    """Poles of the closed lifted loop: zeros of det(I + lam*G).

    Works over the entries' common denominator D so the determinant is pure
    polynomial arithmetic; the open-loop factor D^(n-1) is deflated exactly.
    """
    from .transfer import Polynomial, _match_roots, poly_det, poly_divmod

    n = sys.period
    d_roots = []
    for i in range(n):
        for j in range(n):
            _, new, _ = _match_roots(sys.G[i, j].den.roots(), d_roots)
            d_roots.extend(new)
    D = Polynomial.from_roots(d_roots)
    grid = []
    for i in range(n):
        row = []
        for j in range(n):
            e = sys.G[i, j]
            _, extra, _ = _match_roots(d_roots, e.den.roots())
            num = lam * (e.num * Polynomial.from_roots(extra))
            row.append(num + D if i == j else num)
        grid.append(row)
    P = poly_det(grid)
    for _ in range(n - 1):
        q, r = poly_divmod(P, D)
        scale = max(1.0, np.max(np.abs(P.coeffs)))
        if not (r.is_zero or np.max(np.abs(r.coeffs)) <= 1e-7 * scale):
            break  # deeper cancellation than expected; keep what we have
        P = q
    return P.roots()


def simulate_lifted(sys: LiftedSystem, problem, x0, outer_steps: int) -> np.ndarray:
    """Run the lifted feedback loop; returns blocks of shape (outer, n, d).

    The realization state starts on the accumulator eigenspace so that all
    pre-run outputs equal x0 with zero past inputs.  The strictly lower
    triangular feedthrough lets each phase output be resolved in order.
    """
    if not check_causal_structure(sys):
        raise ImproperEntryError("lifted system is not strictly causal")
    A, B, C, D = realize_matrix(sys.G)
    n = sys.period
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    d = x0.size

    V = scipy.linalg.null_space(A - np.eye(A.shape[0]))
    if V.size == 0:
        raise ValueError("lifted system has no accumulator mode")
    target = np.tile(x0, (n, 1))  # (n, d)
    coeff, *_ = np.linalg.lstsq(C @ V, target, rcond=None)
    if np.max(np.abs((C @ V) @ coeff - target)) > 1e-8 * (1.0 + np.max(np.abs(x0))):
        raise ValueError("cannot initialize the lifted state to hold x0")
    s = V @ coeff  # (n_states, d)

    blocks = np.empty((outer_steps, n, d))
    for t in range(outer_steps):
        y = C @ s
        u = np.zeros((n, d))
        for i in range(n):
            xi = y[i] + D[i, :i] @ u[:i] if i else y[i]
            u[i] = -problem.gradient(xi)
            blocks[t, i] = xi
        s = A @ s + B @ u
    return blocks


def simulate_periodic_gd(
    schedule: PeriodicGDSchedule, problem, x0, outer_steps: int
) -> np.ndarray:
    """Direct time-varying recursion grouped into blocks of shape (outer, n, d)."""
    n = schedule.period
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    blocks = np.empty((outer_steps, n, x0.size))
    x = x0.copy()
    for t in range(outer_steps):
        for i in range(n):
            if t == 0 and i == 0:
                pass  # first phase is the initial point itself
            else:
                x = x - schedule.steps[i] * problem.gradient(x)
            blocks[t, i] = x
    return blocks


def simulate_momentum2(
    schedule: Momentum2Schedule, problem, x0, outer_steps: int
) -> np.ndarray:
    """Direct 2-periodic momentum recursion grouped into blocks (outer, 2, d).

    Prehistory: values held at x0, gradient inputs at zero, so the very first
    step is a plain implicit-free step with the phase-2 parameters.
    """
    a, b, e = schedule.alpha, schedule.beta, schedule.eta
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    total = 2 * outer_steps
    ys = np.empty((total, x0.size))
    gs = np.empty((total, x0.size))
    ys[0] = x0
    gs[0] = problem.gradient(x0)
    for s in range(1, total):
        i = s % 2
        if s >= 2:
            y2, g2 = ys[s - 2], gs[s - 2]
        else:
            y2, g2 = x0, np.zeros_like(x0)
        ys[s] = ys[s - 1] - a[i] * gs[s - 1] - e[i] * g2 + b[i] * (ys[s - 1] - y2)
        gs[s] = problem.gradient(ys[s])
    return ys.reshape(outer_steps, 2, x0.size)
