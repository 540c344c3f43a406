"""Empirical and worst-case convergence-rate measurement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TooShortError
from .runtime import RATE_FLOOR, Trace
from .synthesis import RateBudget
from .transfer import TransferFunction, closed_loop_charpoly


@dataclass(frozen=True)
class RateEstimate:
    """Tail decay estimate from a trace; ratio method, root cross-check."""

    rho_hat: float
    window: tuple
    method: str
    cross_check: float
    flagged: bool


def empirical_rate(trace: Trace, min_steps: int = 20) -> RateEstimate:
    """Geometric-mean tail ratio over the last quartile of usable steps.

    Steps below RATE_FLOOR * ||e0|| are round-off noise and are excluded.
    The estimate is cross-checked against ||e[T]||^(1/T); a discrepancy
    above 0.02 flags the estimate.
    """
    e = np.asarray(trace.err_norms, dtype=float)
    if e.size == 0 or e[0] <= 0.0:
        raise TooShortError("trace has no usable decay")
    floor = RATE_FLOOR * e[0]
    below = np.nonzero(e <= floor)[0]
    end = below[0] if below.size else e.size
    e = e[:end]
    if e.size < min_steps:
        raise TooShortError(f"only {e.size} usable steps, need {min_steps}")
    T = e.size - 1
    t0 = (3 * T) // 4
    if t0 >= T:
        t0 = T - 1
    ratio = float((e[T] / e[t0]) ** (1.0 / (T - t0)))
    root = float(e[T] ** (1.0 / T))
    return RateEstimate(
        rho_hat=ratio,
        window=(t0, T),
        method="ratio",
        cross_check=root,
        flagged=bool(abs(ratio - root) > 0.02),
    )


def spectral_rate(G: TransferFunction, lam: float) -> float:
    """Largest closed-loop pole modulus for the loop gain lam * G."""
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    roots = closed_loop_charpoly(G, lam).roots()
    return max((abs(r) for r in roots), default=0.0)


def _golden_max(f, a, b, tol):
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return max(fc, fd)


def worst_case_rate(G: TransferFunction, budget: RateBudget, grid: int = 129) -> float:
    """Worst spectral rate over curvatures lam in [mu, ell].

    Log-spaced grid with both endpoints, then golden-section refinement
    around the grid maximizer.
    """
    if grid < 3:
        raise ValueError("grid must be at least 3")
    if not budget.finite:
        raise ValueError("worst-case rate needs a finite budget")
    lams = np.geomspace(budget.mu, budget.ell, grid)
    vals = np.array([spectral_rate(G, lam) for lam in lams])
    i = int(np.argmax(vals))
    lo = lams[max(i - 1, 0)]
    hi = lams[min(i + 1, grid - 1)]
    refined = _golden_max(
        lambda lam: spectral_rate(G, lam), lo, hi, 1e-8 * max(1.0, hi)
    )
    return max(float(vals[i]), refined)
