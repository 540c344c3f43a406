"""Closed-form synthesis of first-order optimization algorithms.

Every synthesizer maps a rate budget (mu, ell) to an AlgorithmSpec holding
the algorithm's transfer function, direct feedthrough, a state-space
realization, and the named iteration coefficients.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadSolverLimitError,
    DegenerateBudgetWarning,
    FeedthroughClampedWarning,
    NegativeFeedthroughError,
    RateTooSlowError,
)
from .transfer import TransferFunction, TransferMatrix, realize, realize_matrix


@dataclass(frozen=True)
class RateBudget:
    """Strong-convexity / smoothness pair; ell may be math.inf."""

    mu: float
    ell: float

    def __post_init__(self):
        if not self.mu > 0.0:
            raise ValueError("mu must be positive")
        if not self.ell >= self.mu:
            raise ValueError("ell must be at least mu")

    @property
    def kappa(self) -> float:
        return self.ell / self.mu

    @property
    def finite(self) -> bool:
        return math.isfinite(self.ell)


@dataclass(frozen=True)
class Realization:
    """State-space quadruple with C (zI - A)^-1 B + D equal to the transfer function."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def eval(self, z) -> np.ndarray:
        n = self.A.shape[0]
        if n == 0:
            return self.D.astype(complex)
        M = np.linalg.solve(z * np.eye(n) - self.A, self.B)
        return self.C @ M + self.D


@dataclass(frozen=True)
class AlgorithmSpec:
    """A synthesized algorithm: dynamics, feedthrough, realization, iteration."""

    name: str
    G: TransferFunction | TransferMatrix
    feedthrough: float | np.ndarray
    realization: Realization
    iteration: dict = field(default_factory=dict)
    rate: float | None = None

    @property
    def is_strictly_causal(self) -> bool:
        ft = self.feedthrough
        if isinstance(ft, np.ndarray):
            return bool(np.all(ft == 0.0))
        return ft == 0.0


def _scalar_spec(name, G, iteration, rate):
    return AlgorithmSpec(
        name=name,
        G=G,
        feedthrough=G.feedthrough(),
        realization=Realization(*realize(G)),
        iteration=iteration,
        rate=rate,
    )


def rho_min(budget: RateBudget) -> float:
    """Fastest rate reachable without feedthrough: (sqrt(k)-1)/(sqrt(k)+1)."""
    s = math.sqrt(budget.kappa)
    return (s - 1.0) / (s + 1.0)


def rho_gd(budget: RateBudget) -> float:
    """Optimal gradient-descent rate (k-1)/(k+1)."""
    if not budget.finite:
        return 1.0
    return (budget.kappa - 1.0) / (budget.kappa + 1.0)


def heavy_ball(budget: RateBudget) -> AlgorithmSpec:
    """Two-term momentum method with the optimal quadratic rate."""
    mu, ell = budget.mu, budget.ell
    if mu == ell:
        warnings.warn(
            "mu == ell: heavy ball degenerates to one-step gradient descent",
            DegenerateBudgetWarning,
            stacklevel=2,
        )
        step = 1.0 / ell
        G = TransferFunction([step], [-1.0, 1.0])
        return _scalar_spec("gradient_descent", G, {"step": step, "momentum": 0.0}, 0.0)
    rho = rho_min(budget)
    momentum = rho * rho
    step = 4.0 / (math.sqrt(ell) + math.sqrt(mu)) ** 2
    gain = 4.0 * rho / (ell - mu)
    # gain * z / ((z - 1)(z - rho^2))
    G = TransferFunction([0.0, gain], [momentum, -(1.0 + momentum), 1.0])
    return _scalar_spec(
        "heavy_ball", G, {"momentum": momentum, "step": step}, rho
    )


def implicit_rate_bound(delta: float, budget: RateBudget) -> float:
    """Fastest quadratic rate achievable with direct feedthrough delta."""
    if delta < 0.0:
        raise NegativeFeedthroughError("feedthrough must be nonnegative")
    k, ell = budget.kappa, budget.ell
    hi = math.sqrt(k + ell * delta)
    lo = math.sqrt(1.0 + ell * delta)
    return (hi - lo) / (hi + lo)


def delta_for_rate(rho: float, budget: RateBudget) -> float:
    """Minimum feedthrough for a target quadratic rate; clamped at zero."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    k, ell = budget.kappa, budget.ell
    val = ((1.0 - rho) ** 2 * k - (1.0 + rho) ** 2) / (4.0 * rho * ell)
    if val < 0.0:
        if val < -1e-12:
            warnings.warn(
                "rate slower than the zero-feedthrough optimum; clamping to 0",
                FeedthroughClampedWarning,
                stacklevel=2,
            )
        return 0.0
    return val


def _implicit_hb_coeffs(rho, budget):
    mu, ell = budget.mu, budget.ell
    delta = delta_for_rate(rho, budget)
    beta = (4.0 + 2.0 * delta * (ell + mu)) / (
        math.sqrt(ell + mu * ell * delta) + math.sqrt(mu + mu * ell * delta)
    ) ** 2
    return delta, beta


def implicit_heavy_ball(budget: RateBudget, rho: float) -> AlgorithmSpec:
    """Momentum method with feedthrough, reaching any rate rho <= rho_min."""
    r_free = rho_min(budget)
    if rho > r_free:
        warnings.warn(
            "requested rate needs no feedthrough; returning heavy ball",
            FeedthroughClampedWarning,
            stacklevel=2,
        )
        return heavy_ball(budget)
    delta, beta = _implicit_hb_coeffs(rho, budget)
    r2 = rho * rho
    G = TransferFunction(
        [delta * r2, beta, delta], [r2, -(1.0 + r2), 1.0]
    )
    iteration = {
        "momentum": r2,
        "gain": delta + delta * r2 + beta,
        "regularizer": delta,
        "beta": beta,
    }
    return _scalar_spec("implicit_heavy_ball", G, iteration, rho)


def ill_conditioned_plan(budget: RateBudget, kappa_m: float):
    """Largest safe feedthrough and fastest rate under a solver conditioning cap."""
    if kappa_m < 1.0:
        raise BadSolverLimitError("kappa_m must be at least 1")
    k, mu = budget.kappa, budget.mu
    if kappa_m >= k:
        return math.inf, 0.0  # Newton regime: solver handles the full problem
    delta_max = (kappa_m - 1.0) / (mu * (k - kappa_m))
    s = math.sqrt(k / kappa_m)
    return delta_max, max(0.0, (s - 1.0) / (s + 1.0))


def rho_circle(alpha: float, budget: RateBudget) -> float:
    """Circle-criterion rate for sector-bounded problems at feedthrough alpha."""
    if alpha < 0.0:
        raise NegativeFeedthroughError("feedthrough must be nonnegative")
    if not budget.finite:
        return 1.0 / (1.0 + 2.0 * budget.mu * alpha)
    k, ell = budget.kappa, budget.ell
    return (k - 1.0) / (k + 1.0 + 2.0 * ell * alpha)


def alpha_for_rate(rho: float, budget: RateBudget) -> float:
    """Minimum feedthrough certifying rate rho by the circle criterion."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    if not budget.finite:
        return (1.0 - rho) / (2.0 * rho * budget.mu)
    k, ell = budget.kappa, budget.ell
    val = ((1.0 - rho) * k - (1.0 + rho)) / (2.0 * rho * ell)
    if val < 0.0:
        if val < -1e-12:
            warnings.warn(
                "rate slower than the zero-feedthrough optimum; clamping to 0",
                FeedthroughClampedWarning,
                stacklevel=2,
            )
        return 0.0
    return val


def implicit_gd(budget: RateBudget, rho: float) -> AlgorithmSpec:
    """First-order implicit scheme x+ = prox_{alpha f}(x - beta grad f(x))."""
    mu, ell = budget.mu, budget.ell
    if budget.finite:
        r_free = rho_gd(budget)
        if rho > r_free + 1e-15:
            raise RateTooSlowError(
                f"rho={rho} exceeds the zero-feedthrough rate {r_free}"
            )
        alpha = alpha_for_rate(rho, budget)
        beta = (2.0 + alpha * (ell + mu)) / (ell + mu + 2.0 * mu * ell * alpha)
        G = TransferFunction([beta, alpha], [-1.0, 1.0])
        iteration = {"alpha": alpha, "beta": beta}
        name = "gradient_descent" if alpha == 0.0 else "implicit_gradient"
    else:
        if not 0.0 < rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        alpha = alpha_for_rate(rho, budget)
        G = TransferFunction([alpha * rho, alpha], [-1.0, 1.0])
        iteration = {"alpha": alpha, "beta": alpha * rho, "variant": "mu_only"}
        name = "implicit_proximal"
    return _scalar_spec(name, G, iteration, rho)


def gradient_descent(budget: RateBudget) -> AlgorithmSpec:
    """Optimal-step gradient descent, step 2/(mu+ell)."""
    return implicit_gd(budget, rho_gd(budget))


def splitting_eta2_feasible(budget: RateBudget, eta2: float) -> bool:
    """Admissibility of the proximal step eta2 at the rate rho_gd."""
    return 1.0 / budget.ell <= eta2 <= 1.0 / budget.mu


def splitting_synthesis(budget: RateBudget) -> AlgorithmSpec:
    """Proximal gradient for f = h + g as a 2x2 feedback synthesis."""
    mu, ell = budget.mu, budget.ell
    if not budget.finite:
        raise ValueError("splitting synthesis needs a finite budget")
    eta1 = 2.0 / (mu + ell)
    if mu == ell:
        warnings.warn(
            "mu == ell: scaling weight singular, falling back to eta2 = 1/ell",
            DegenerateBudgetWarning,
            stacklevel=2,
        )
        eta2 = 1.0 / ell
        w2 = math.inf
    else:
        eta2 = eta1
        w2 = (ell + mu) / (ell - mu) ** 2
    pole = TransferFunction([1.0], [-1.0, 1.0])  # 1/(z-1)
    z = TransferFunction([0.0, 1.0])
    G = TransferMatrix(
        [
            [eta1 * pole, eta1 * (z * pole)],
            [eta2 * pole, eta2 * (z * pole)],
        ]
    )
    rho = rho_gd(budget)
    # single shared accumulator state: x+ = x + eta*(u1 + u2_next)
    A = np.array([[1.0]])
    B = np.array([[eta1, eta2]])
    C = np.array([[1.0], [1.0]])
    D = np.array([[0.0, eta1], [0.0, eta2]])
    iteration = {
        "eta1": eta1,
        "eta2": eta2,
        "eta2_interval": (1.0 / ell, 1.0 / mu),
        "w2": w2,
        "step": eta1,
    }
    return AlgorithmSpec(
        name="proximal_gradient",
        G=G,
        feedthrough=G.feedthrough(),
        realization=Realization(A, B, C, D),
        iteration=iteration,
        rate=rho,
    )


def sub_condition(alpha: float, budget: RateBudget) -> float:
    """Condition number (1 + alpha*ell)/(1 + alpha*mu) of the proximal sub-problem."""
    if alpha < 0.0:
        raise NegativeFeedthroughError("feedthrough must be nonnegative")
    if not budget.finite:
        return math.inf if alpha > 0.0 else 1.0
    return (1.0 + alpha * budget.ell) / (1.0 + alpha * budget.mu)


def matrix_realization(tm: TransferMatrix) -> Realization:
    """Stacked per-entry realization of a transfer matrix."""
    return Realization(*realize_matrix(tm))
