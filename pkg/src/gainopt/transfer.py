"""Rational transfer functions in the complex variable z.

Polynomials store real coefficients in ascending degree order.  Transfer
functions keep their denominator monic and cancel common numerator and
denominator roots on construction, so two equal transfer functions compare
equal coefficient-wise.  All types are immutable and safe to share.
"""

from __future__ import annotations

from collections import namedtuple

import numpy as np

from .errors import (
    ImproperEntryError,
    ImproperError,
    PoleEvaluationError,
    SingularLoopError,
)

MAX_DEGREE = 32
CANCEL_TOL = 1e-9
_TRIM_TOL = 1e-12


def _trim(coeffs):
    """Drop trailing coefficients that are negligible next to the largest."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if c.ndim != 1 or c.size == 0:
        raise ValueError("coefficients must form a nonempty 1-d sequence")
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return np.zeros(1)
    keep = np.nonzero(np.abs(c) > _TRIM_TOL * scale)[0]
    if keep.size == 0:
        return np.zeros(1)
    return c[: keep[-1] + 1].copy()


def _realify(coeffs, tol=1e-8):
    c = np.asarray(coeffs)
    scale = max(1.0, np.max(np.abs(c)))
    if np.max(np.abs(c.imag)) > tol * scale:
        raise ValueError("coefficients have a non-negligible imaginary part")
    return c.real.copy()


class Polynomial:
    """Real polynomial with ascending coefficients."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        object.__setattr__(self, "coeffs", _trim(coeffs))
        self.coeffs.flags.writeable = False

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    def __call__(self, z):
        """Evaluate by Horner's rule; supports scalars and arrays."""
        z = np.asarray(z)
        out = np.zeros_like(z, dtype=complex)
        for c in self.coeffs[::-1]:
            out = out * z + c
        return out if out.ndim else complex(out)

    def roots(self):
        """Roots with multiplicity, via companion-matrix eigenvalues."""
        c = self.coeffs
        n = self.degree
        if n == 0:
            return []
        monic = c / c[-1]
        comp = np.zeros((n, n))
        comp[1:, :-1] = np.eye(n - 1)
        comp[:, -1] = -monic[:-1]
        return list(np.linalg.eigvals(comp))

    @staticmethod
    def from_roots(roots, leading=1.0):
        """Rebuild leading * prod (z - r); conjugate-paired roots give real coefficients."""
        c = np.array([1.0 + 0j])
        for r in roots:
            c = np.convolve(c, np.array([-r, 1.0 + 0j]))
        return Polynomial(_realify(leading * c))

    def _binop(self, other, op):
        a = self.coeffs
        b = _as_poly(other).coeffs
        n = max(len(a), len(b))
        out = np.zeros(n)
        out[: len(a)] += a
        if op == "+":
            out[: len(b)] += b
        else:
            out[: len(b)] -= b
        return Polynomial(out)

    def __add__(self, other):
        return self._binop(other, "+")

    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, "-")

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Polynomial(self.coeffs * other)
        return Polynomial(np.convolve(self.coeffs, _as_poly(other).coeffs))

    __rmul__ = __mul__

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)})"


def _as_poly(p) -> Polynomial:
    if isinstance(p, Polynomial):
        return p
    if isinstance(p, (int, float)):
        return Polynomial([float(p)])
    return Polynomial(p)


def poly_divmod(p: Polynomial, d: Polynomial):
    """Polynomial division p = q*d + r."""
    if d.is_zero:
        raise ZeroDivisionError("division by the zero polynomial")
    q, r = np.polydiv(p.coeffs[::-1], d.coeffs[::-1])
    return Polynomial(np.atleast_1d(q)[::-1]), Polynomial(np.atleast_1d(r)[::-1])


def poly_det(grid):
    """Determinant of a square grid of Polynomial entries."""
    n = len(grid)
    if n == 1:
        return grid[0][0]
    if n == 2:
        return grid[0][0] * grid[1][1] - grid[0][1] * grid[1][0]
    acc = Polynomial([0.0])
    for j in range(n):
        minor = [[row[k] for k in range(n) if k != j] for row in grid[1:]]
        term = grid[0][j] * poly_det(minor)
        acc = acc + term if j % 2 == 0 else acc - term
    return acc


def poly_close(p: Polynomial, q: Polynomial, tol=CANCEL_TOL) -> bool:
    n = max(len(p.coeffs), len(q.coeffs))
    a = np.zeros(n)
    b = np.zeros(n)
    a[: len(p.coeffs)] = p.coeffs
    b[: len(q.coeffs)] = q.coeffs
    scale = max(1.0, np.max(np.abs(a)), np.max(np.abs(b)))
    return bool(np.max(np.abs(a - b)) <= tol * scale)


def _match_roots(r1, r2, tol=CANCEL_TOL):
    """Greedy pairing of two root lists; returns (pairs, only1, only2)."""
    only2 = list(r2)
    pairs = []
    only1 = []
    for r in r1:
        hit = None
        for i, s in enumerate(only2):
            if abs(r - s) <= tol * (1.0 + max(abs(r), abs(s))):
                hit = i
                break
        if hit is None:
            only1.append(r)
        else:
            pairs.append((r, only2.pop(hit)))
    return pairs, only1, only2


def _cancel_common_roots(num: Polynomial, den: Polynomial):
    """Remove num/den root pairs closer than the cancellation tolerance."""
    rn = num.roots()
    rd = den.roots()
    if not rn or not rd:
        return num, den
    pairs, kept_n, keep_d = _match_roots(rn, rd)
    if not pairs:
        return num, den
    num2 = Polynomial.from_roots(kept_n, leading=num.coeffs[-1])
    den2 = Polynomial.from_roots(keep_d, leading=den.coeffs[-1])
    return num2, den2


class TransferFunction:
    """Reduced rational function num(z)/den(z) with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=(1.0,)):
        num = _as_poly(num)
        den = _as_poly(den)
        if den.is_zero:
            raise ZeroDivisionError("denominator is the zero polynomial")
        if num.is_zero:
            num, den = Polynomial([0.0]), Polynomial([1.0])
        else:
            num, den = _cancel_common_roots(num, den)
        lead = den.coeffs[-1]
        object.__setattr__(self, "num", Polynomial(num.coeffs / lead))
        object.__setattr__(self, "den", Polynomial(den.coeffs / lead))
        if self.num.degree > MAX_DEGREE or self.den.degree > MAX_DEGREE:
            raise ValueError(f"degree exceeds the supported cap of {MAX_DEGREE}")

    def __setattr__(self, name, value):
        raise AttributeError("TransferFunction is immutable")

    # -- queries ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_proper(self) -> bool:
        return self.num.degree <= self.den.degree

    @property
    def is_strictly_proper(self) -> bool:
        return self.is_zero or self.num.degree < self.den.degree

    def eval(self, z) -> complex:
        d = self.den(z)
        tol = 1e-12 * max(1.0, abs(z)) ** self.den.degree
        if abs(d) < tol:
            raise PoleEvaluationError(f"evaluation at z={z} hits a pole")
        return self.num(z) / d

    __call__ = eval

    def eval_many(self, z):
        """Vectorized evaluation without pole guarding."""
        z = np.asarray(z, dtype=complex)
        return self.num(z) / self.den(z)

    def poles(self):
        return self.den.roots()

    def zeros(self):
        return self.num.roots()

    def poles_zeros(self):
        return self.poles(), self.zeros()

    def feedthrough(self) -> float:
        """Value at z = infinity: zero when strictly proper."""
        if not self.is_proper:
            raise ImproperError("transfer function is improper")
        if self.is_strictly_proper:
            return 0.0
        return float(self.num.coeffs[-1])  # den is monic

    def scale_z(self, c: float) -> "TransferFunction":
        """Return G(c*z)."""
        powers = c ** np.arange(len(self.num.coeffs))
        num = self.num.coeffs * powers
        powers = c ** np.arange(len(self.den.coeffs))
        den = self.den.coeffs * powers
        return TransferFunction(num, den)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = as_tf(other)
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        # sum over the least common denominator: matching shared poles keeps
        # them simple, where blind cross-multiplication would square them and
        # the squared root would split beyond the cancellation tolerance
        pairs, only1, only2 = _match_roots(self.den.roots(), other.den.roots())
        if not pairs:
            return TransferFunction(
                self.num * other.den + other.num * self.den, self.den * other.den
            )
        extra1 = Polynomial.from_roots(only1)
        extra2 = Polynomial.from_roots(only2)
        return TransferFunction(
            self.num * extra2 + other.num * extra1, self.den * extra2
        )

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-as_tf(other))

    def __rsub__(self, other):
        return as_tf(other) - self

    def __neg__(self):
        return TransferFunction(-self.num, self.den)

    def __mul__(self, other):
        other = as_tf(other)
        return TransferFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tf(other)
        if other.is_zero:
            raise ZeroDivisionError("division by the zero transfer function")
        return TransferFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return as_tf(other) / self

    def __eq__(self, other):
        if not isinstance(other, TransferFunction):
            return NotImplemented
        return tf_close(self, other)

    def __hash__(self):
        return hash((self.num.degree, self.den.degree))

    def __repr__(self):
        return f"TransferFunction({list(self.num.coeffs)}, {list(self.den.coeffs)})"

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {"num": list(self.num.coeffs), "den": list(self.den.coeffs)}

    @staticmethod
    def from_json(obj) -> "TransferFunction":
        return TransferFunction(obj["num"], obj["den"])


def as_tf(x) -> TransferFunction:
    if isinstance(x, TransferFunction):
        return x
    if isinstance(x, (int, float)):
        return TransferFunction([float(x)])
    raise TypeError(f"cannot interpret {x!r} as a transfer function")


def tf_close(a: TransferFunction, b: TransferFunction, tol=CANCEL_TOL) -> bool:
    """Coefficient-wise equality after reduction and monic normalization."""
    return poly_close(a.num, b.num, tol) and poly_close(a.den, b.den, tol)


FeedbackLoop = namedtuple("FeedbackLoop", ["T", "S"])


def feedback(P: TransferFunction, C: TransferFunction) -> FeedbackLoop:
    """Close the loop: T = PC/(1+PC), S = 1/(1+PC); T + S = 1 identically."""
    open_num = P.num * C.num
    open_den = P.den * C.den
    char = open_den + open_num
    if Polynomial(char.coeffs).is_zero:
        raise SingularLoopError("1 + P*C vanishes identically")
    return FeedbackLoop(
        T=TransferFunction(open_num, char), S=TransferFunction(open_den, char)
    )


def closed_loop_charpoly(G: TransferFunction, lam: float) -> Polynomial:
    """Monic characteristic polynomial den_G + lam * num_G of the loop gain lam*G."""
    p = G.den + lam * G.num
    if p.is_zero:
        raise SingularLoopError("characteristic polynomial vanishes identically")
    return Polynomial(p.coeffs / p.coeffs[-1])


def is_rho_stable(tf: TransferFunction, radius: float, tol=1e-9) -> bool:
    """True when every pole has modulus below the given radius."""
    if not 0.0 < radius <= 1.0:
        raise ValueError("radius must lie in (0, 1]")
    return all(abs(p) < radius - tol for p in tf.poles())


# -- state-space realizations ---------------------------------------------


def realize(tf: TransferFunction):
    """Controllable canonical realization (A, B, C, D) with C(zI-A)^-1 B + D = tf."""
    if not tf.is_proper:
        raise ImproperError("only proper transfer functions have realizations")
    n = tf.den.degree
    D = tf.feedthrough()
    if n == 0:
        return (
            np.zeros((0, 0)),
            np.zeros((0, 1)),
            np.zeros((1, 0)),
            np.array([[D]]),
        )
    den = tf.den.coeffs  # monic, length n+1
    rem = tf.num - D * tf.den  # strictly proper remainder
    b = np.zeros(n)
    b[: len(rem.coeffs)] = rem.coeffs
    if rem.is_zero:
        b[:] = 0.0
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:-1]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = b.reshape(1, n)
    return A, B, C, np.array([[D]])


class TransferMatrix:
    """Rectangular grid of transfer functions sharing the variable z."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries):
        grid = tuple(
            tuple(e if isinstance(e, TransferFunction) else as_tf(e) for e in row)
            for row in entries
        )
        if not grid or not grid[0]:
            raise ValueError("entries must form a nonempty grid")
        cols = len(grid[0])
        if any(len(row) != cols for row in grid):
            raise ValueError("ragged entry grid")
        object.__setattr__(self, "rows", len(grid))
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", grid)

    def __setattr__(self, name, value):
        raise AttributeError("TransferMatrix is immutable")

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i][j]

    @property
    def shape(self):
        return (self.rows, self.cols)

    @staticmethod
    def identity(n: int) -> "TransferMatrix":
        one = TransferFunction([1.0])
        zero = TransferFunction([0.0])
        return TransferMatrix(
            [[one if i == j else zero for j in range(n)] for i in range(n)]
        )

    def map(self, fn) -> "TransferMatrix":
        return TransferMatrix([[fn(e) for e in row] for row in self.entries])

    def eval(self, z) -> np.ndarray:
        return np.array([[e.eval(z) for e in row] for row in self.entries])

    def feedthrough(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for i, row in enumerate(self.entries):
            for j, e in enumerate(row):
                if not e.is_proper:
                    raise ImproperEntryError(f"entry ({i}, {j}) is improper")
                out[i, j] = e.feedthrough()
        return out

    def poles(self):
        out = []
        for row in self.entries:
            for e in row:
                out.extend(e.poles())
        return out

    def __add__(self, other):
        if self.shape != other.shape:
            raise ValueError("shape mismatch")
        return TransferMatrix(
            [
                [self[i, j] + other[i, j] for j in range(self.cols)]
                for i in range(self.rows)
            ]
        )

    def __sub__(self, other):
        return self + other.map(lambda e: -e)

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        zero = TransferFunction([0.0])
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = zero
                for k in range(self.cols):
                    acc = acc + self[i, k] * other[k, j]
                row.append(acc)
            out.append(row)
        return TransferMatrix(out)

    def __rmul__(self, scalar):
        return self.map(lambda e: scalar * e)

    def det(self) -> TransferFunction:
        if self.rows != self.cols:
            raise ValueError("determinant needs a square matrix")
        n = self.rows
        if n == 1:
            return self[0, 0]
        if n == 2:
            return self[0, 0] * self[1, 1] - self[0, 1] * self[1, 0]
        acc = TransferFunction([0.0])
        for j in range(n):
            minor = TransferMatrix(
                [
                    [self[i, k] for k in range(n) if k != j]
                    for i in range(1, n)
                ]
            )
            term = self[0, j] * minor.det()
            acc = acc + (term if j % 2 == 0 else -term)
        return acc

    def inverse(self) -> "TransferMatrix":
        if self.rows != self.cols:
            raise ValueError("inverse needs a square matrix")
        d = self.det()
        if d.is_zero:
            raise ZeroDivisionError("matrix of transfer functions is singular")
        if self.rows == 1:
            return TransferMatrix([[as_tf(1.0) / self[0, 0]]])
        if self.rows == 2:
            a, b = self[0, 0], self[0, 1]
            c, e = self[1, 0], self[1, 1]
            return TransferMatrix(
                [[e / d, (-b) / d], [(-c) / d, a / d]]
            )
        raise NotImplementedError("inverse implemented for sizes 1 and 2")

    def to_json(self):
        return [[e.to_json() for e in row] for row in self.entries]

    @staticmethod
    def from_json(obj) -> "TransferMatrix":
        return TransferMatrix(
            [[TransferFunction.from_json(e) for e in row] for row in obj]
        )

    def __repr__(self):
        return f"TransferMatrix({self.rows}x{self.cols})"


def realize_matrix(tm: TransferMatrix):
    """Stacked realization of a transfer matrix, one canonical block per entry."""
    blocks = [[realize(tm[i, j]) for j in range(tm.cols)] for i in range(tm.rows)]
    n_states = sum(b[0].shape[0] for row in blocks for b in row)
    A = np.zeros((n_states, n_states))
    B = np.zeros((n_states, tm.cols))
    C = np.zeros((tm.rows, n_states))
    D = np.zeros((tm.rows, tm.cols))
    offset = 0
    for i in range(tm.rows):
        for j in range(tm.cols):
            Ae, Be, Ce, De = blocks[i][j]
            k = Ae.shape[0]
            A[offset : offset + k, offset : offset + k] = Ae
            B[offset : offset + k, j] = Be[:, 0]
            C[i, offset : offset + k] = Ce[0, :]
            D[i, j] = De[0, 0]
            offset += k
    return A, B, C, D
