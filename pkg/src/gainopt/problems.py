"""Test problems: quadratics, a piecewise-quadratic family, a 1-d sector
example, and l1-composite objectives, with gradients and proximal operators.

Generators are deterministic under a fixed seed.  Each problem owns a
gradient-evaluation counter; clone a problem before running it concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InnerNotConvergedError
from .synthesis import RateBudget

INNER_CAP = 10**6


def _orthogonal(rng, d):
    """Haar-ish orthogonal matrix: QR of a Gaussian with sign-fixed R diagonal."""
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


class _Counted:
    """Gradient-evaluation tally shared by all problem classes."""

    def __init__(self):
        self.grad_evals = 0

    def gradient(self, x):
        self.grad_evals += 1
        return self._grad(x)

    def gradient_raw(self, x):
        """Gradient without touching the counter (for instrumentation)."""
        return self._grad(x)

    def reset_counter(self):
        self.grad_evals = 0


class QuadraticProblem(_Counted):
    """f(x) = x'Qx/2 - q'x with spectrum of Q inside [mu, ell]."""

    def __init__(self, Q, q, mu, ell, seed=None):
        super().__init__()
        self.Q = np.asarray(Q, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.mu = float(mu)
        self.ell = float(ell)
        self.seed = seed
        eig = np.linalg.eigvalsh(self.Q)
        if eig[0] < mu - 1e-9 or eig[-1] > ell + 1e-9:
            raise ValueError("spectrum leaves [mu, ell]")
        self.x_star = np.linalg.solve(self.Q, self.q)
        self._prox_cache = {}

    @property
    def dim(self):
        return self.q.size

    def value(self, x):
        return 0.5 * float(x @ self.Q @ x) - float(self.q @ x)

    def _grad(self, x):
        return self.Q @ x - self.q

    def prox(self, alpha, x):
        """Closed form (I + alpha Q)^-1 (x + alpha q), factorization cached."""
        key = float(alpha)
        if key not in self._prox_cache:
            self._prox_cache[key] = scipy.linalg.cho_factor(
                np.eye(self.dim) + alpha * self.Q
            )
        return scipy.linalg.cho_solve(self._prox_cache[key], x + alpha * self.q)

    def clone(self):
        return QuadraticProblem(self.Q, self.q, self.mu, self.ell, self.seed)

    def to_spec(self):
        return {
            "type": "quadratic",
            "seed": self.seed,
            "d": self.dim,
            "mu": self.mu,
            "ell": self.ell,
        }


def random_quadratic(d: int, budget: RateBudget, seed: int) -> QuadraticProblem:
    """Seeded quadratic with both spectral endpoints attained."""
    if d < 2:
        raise ValueError("d must be at least 2")
    if not budget.finite:
        raise ValueError("quadratic generator needs a finite budget")
    rng = np.random.default_rng(seed)
    mu, ell = budget.mu, budget.ell
    if d == 2:
        eig = np.array([mu, ell])
    else:
        interior = np.exp(rng.uniform(math.log(mu), math.log(ell), d - 2))
        eig = np.concatenate(([mu, ell], interior))
    U = _orthogonal(rng, d)
    Q = (U * eig) @ U.T
    Q = 0.5 * (Q + Q.T)
    q = rng.standard_normal(d)
    return QuadraticProblem(Q, q, mu, ell, seed=seed)


class PiecewiseQuadraticProblem(_Counted):
    """h(x) = sum_i phi(a_i'x - b_i) with an asymmetric quadratic kink phi.

    phi'(v) = ell*v for v >= 0 and mu*v for v < 0; the columns a_i form an
    orthogonal matrix, so the minimizer is A b exactly.
    """

    def __init__(self, A, b, mu, ell, seed=None):
        super().__init__()
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.mu = float(mu)
        self.ell = float(ell)
        self.seed = seed
        if np.max(np.abs(self.A.T @ self.A - np.eye(self.b.size))) > 1e-10:
            raise ValueError("A must be orthogonal")
        self.x_star = self.A @ self.b

    @classmethod
    def random(cls, d, mu, ell, seed):
        rng = np.random.default_rng(seed)
        A = _orthogonal(rng, d)
        b = rng.standard_normal(d)
        return cls(A, b, mu, ell, seed=seed)

    @property
    def dim(self):
        return self.b.size

    def value(self, x):
        v = self.A.T @ x - self.b
        w = np.where(v >= 0.0, self.ell, self.mu)
        return 0.5 * float(w @ v**2)

    def _grad(self, x):
        v = self.A.T @ x - self.b
        w = np.where(v >= 0.0, self.ell, self.mu)
        return self.A @ (w * v)

    def clone(self):
        return PiecewiseQuadraticProblem(self.A, self.b, self.mu, self.ell, self.seed)

    def to_spec(self):
        return {
            "type": "piecewise_quadratic",
            "seed": self.seed,
            "d": self.dim,
            "mu": self.mu,
            "ell": self.ell,
        }


class Sector1DProblem(_Counted):
    """f(x) = a x^2 / 2 + b sin(x|x|) / 2 with a > |b|; minimizer at 0.

    The gradient increment delta(e) = a e - b |e| cos(e|e|) is sector-bounded
    in [a - |b|, a + |b|] but the function is not Lipschitz smooth.
    """

    def __init__(self, a, b):
        super().__init__()
        if not a > abs(b):
            raise ValueError("need a > |b|")
        self.a = float(a)
        self.b = float(b)
        self.x_star = np.zeros(1)
        self.mu = self.a - abs(self.b)
        self.ell = self.a + abs(self.b)

    @property
    def dim(self):
        return 1

    def value(self, x):
        x = float(np.asarray(x).ravel()[0])
        return 0.5 * self.a * x * x + 0.5 * self.b * math.sin(x * abs(x))

    def _grad(self, x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        g = self.a * arr + self.b * np.abs(arr) * np.cos(arr * np.abs(arr))
        return g if np.ndim(x) else g

    def delta(self, e):
        """Gradient increment around the minimizer: -f'(x_star - e)."""
        e = np.asarray(e, dtype=float)
        return self.a * e - self.b * np.abs(e) * np.cos(e * np.abs(e))

    def clone(self):
        return Sector1DProblem(self.a, self.b)


@dataclass(frozen=True)
class L1Term:
    """g(x) = weight * ||x||_1."""

    weight: float

    def __post_init__(self):
        if self.weight <= 0.0:
            raise ValueError("weight must be positive")

    def value(self, x):
        return self.weight * float(np.sum(np.abs(x)))


def soft_threshold(x, t):
    """Componentwise max(x - t, 0) - max(-x - t, 0)."""
    x = np.asarray(x, dtype=float)
    return np.maximum(x - t, 0.0) - np.maximum(-x - t, 0.0)


def prox(problem, alpha: float, x, cap: int = INNER_CAP):
    """Proximal map of alpha * f at x.

    Quadratics use the cached closed form; the l1 term soft-thresholds; smooth
    problems run an inner gradient descent with step 2/(mu_sub + ell_sub),
    stopping once successive iterates move by at most 0.01 * ||x||.
    """
    if alpha < 0.0:
        raise ValueError("alpha must be nonnegative")
    x = np.asarray(x, dtype=float)
    if isinstance(problem, QuadraticProblem):
        return problem.prox(alpha, x)
    if isinstance(problem, L1Term):
        return soft_threshold(x, problem.weight * alpha)
    if not isinstance(problem, PiecewiseQuadraticProblem):
        raise TypeError(f"no proximal rule for {type(problem).__name__}")

    mu_sub = 1.0 + alpha * problem.mu
    ell_sub = 1.0 + alpha * problem.ell
    step = 2.0 / (mu_sub + ell_sub)
    thresh = 0.01 * float(np.linalg.norm(x))
    xi_prev = np.zeros_like(x)
    xi = x.copy()
    it = 0
    while np.linalg.norm(xi - xi_prev) > thresh:
        if it >= cap:
            raise InnerNotConvergedError(f"inner solver hit the {cap} iteration cap")
        g = alpha * problem.gradient(xi) + (xi - x)
        xi_prev = xi
        xi = xi - step * g
        it += 1
    return xi


class CompositeProblem:
    """f = h + weight * ||.||_1 with h a piecewise-quadratic smooth part."""

    def __init__(self, h: PiecewiseQuadraticProblem, lam: float):
        self.h = h
        self.g = L1Term(lam)
        self.lam = float(lam)
        self._x_star = None

    @classmethod
    def random(cls, d, mu, ell, lam, seed):
        return cls(PiecewiseQuadraticProblem.random(d, mu, ell, seed), lam)

    @property
    def dim(self):
        return self.h.dim

    @property
    def mu(self):
        return self.h.mu

    @property
    def ell(self):
        return self.h.ell

    @property
    def seed(self):
        return self.h.seed

    def value(self, x):
        return self.h.value(x) + self.g.value(x)

    def residual_norm(self, x) -> float:
        """Distance of -grad h(x) from the l1 subdifferential at x."""
        x = np.asarray(x, dtype=float)
        g = self.h.gradient_raw(x)
        lam = self.lam
        on = x != 0.0
        r = np.where(on, g + lam * np.sign(x), np.maximum(np.abs(g) - lam, 0.0))
        return float(np.linalg.norm(r))

    @property
    def x_star(self):
        """Numeric minimizer: proximal-gradient warm start plus an exact
        active-set polish on the locally linear pieces."""
        if self._x_star is None:
            self._x_star = self._solve()
        return self._x_star

    def _solve(self):
        h, lam = self.h, self.lam
        eta = 2.0 / (h.mu + h.ell)
        x = np.zeros(self.dim)
        for _ in range(200000):
            x_new = soft_threshold(x - eta * h.gradient_raw(x), lam * eta)
            delta = np.linalg.norm(x_new - x)
            x = x_new
            if delta < 1e-8:
                break
        for _ in range(100):
            polished = self._polish(x)
            if polished is None:
                x = soft_threshold(x - eta * h.gradient_raw(x), lam * eta)
                continue
            if np.linalg.norm(polished - x) < 1e-14 * (1.0 + np.linalg.norm(x)):
                return polished
            x = polished
        return x

    def _polish(self, x):
        """Solve the stationarity system exactly on the current active set."""
        h, lam = self.h, self.lam
        v = h.A.T @ x - h.b
        w = np.where(v >= 0.0, h.ell, h.mu)
        M = (h.A * w) @ h.A.T  # local Hessian
        c = (h.A * w) @ h.b  # local linear term: grad h(x) = M x - c
        support = x != 0.0
        signs = np.sign(x)
        if not np.any(support):
            return None
        xs = np.zeros_like(x)
        Ms = M[np.ix_(support, support)]
        rhs = c[support] - lam * signs[support]
        try:
            xs[support] = np.linalg.solve(Ms, rhs)
        except np.linalg.LinAlgError:
            return None
        # consistency: same kink regions, same support signs, off-support in sector
        v2 = h.A.T @ xs - h.b
        if np.any((v2 >= 0.0) != (v >= 0.0)):
            return None
        if np.any(np.sign(xs[support]) != signs[support]):
            return None
        g = h.gradient_raw(xs)
        if np.any(np.abs(g[~support]) > lam):
            return None
        return xs

    def clone(self):
        return CompositeProblem(self.h.clone(), self.lam)

    def to_spec(self):
        spec = self.h.to_spec()
        spec.update({"type": "composite_l1", "lambda": self.lam})
        return spec


def residual_norm(problem: CompositeProblem, x) -> float:
    return problem.residual_norm(x)
