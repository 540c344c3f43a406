"""Runners: execute synthesized and named algorithms on problems, producing traces."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DivergenceError, FactorizationFailureError
from .problems import CompositeProblem, QuadraticProblem, prox, soft_threshold
from .synthesis import (
    AlgorithmSpec,
    RateBudget,
    alpha_for_rate,
    delta_for_rate,
    implicit_gd,
    _implicit_hb_coeffs,
    rho_min,
)

DIVERGENCE_FACTOR = 1e12
RATE_FLOOR = 1e-12  # errors below floor * ||e0|| sit in the round-off regime


@dataclass
class Trace:
    """Per-iteration record of an optimizer run."""

    err_norms: list = field(default_factory=list)
    residual_norms: list | None = None
    grad_evals: list = field(default_factory=list)
    iterates: list | None = None
    terminated_at: int = 0
    stop_reason: str = "max_iter"

    def record(self, err, evals, residual=None, iterate=None):
        self.err_norms.append(float(err))
        self.grad_evals.append(int(evals))
        if residual is not None:
            if self.residual_norms is None:
                self.residual_norms = []
            self.residual_norms.append(float(residual))
        if iterate is not None:
            if self.iterates is None:
                self.iterates = []
            self.iterates.append(np.array(iterate))

    def finish(self, reason):
        self.terminated_at = len(self.err_norms) - 1
        self.stop_reason = reason
        return self

    def to_csv(self, path, meta=None, subsample=1):
        lines = []
        tags = dict(meta or {})
        tags["subsample"] = subsample
        lines.append("# " + " ".join(f"{k}={v}" for k, v in sorted(tags.items())))
        lines.append("t,err_norm,residual_norm,grad_evals")
        res = self.residual_norms
        for t, e in enumerate(self.err_norms):
            if t % subsample and t != self.terminated_at:
                continue
            r = "" if res is None or t >= len(res) else repr(res[t])
            lines.append(f"{t},{e!r},{r},{self.grad_evals[t]}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


class _Run:
    """Shared record/stop/diverge logic for all runners."""

    def __init__(self, problem, x0, tol, max_iter, x_star=None, keep_iterates=None):
        self.problem = problem
        self.x_star = problem.x_star if x_star is None else x_star
        self.tol = tol
        self.max_iter = max_iter
        d = np.asarray(x0).size
        keep = d <= 64 if keep_iterates is None else keep_iterates
        self.trace = Trace(iterates=[] if keep else None)
        self.e0 = float(np.linalg.norm(self.x_star - np.asarray(x0, dtype=float)))
        self.start_evals = problem.grad_evals if hasattr(problem, "grad_evals") else 0

    def record(self, x, residual=None):
        err = float(np.linalg.norm(self.x_star - x))
        evals = (
            self.problem.grad_evals - self.start_evals
            if hasattr(self.problem, "grad_evals")
            else 0
        )
        keep = self.trace.iterates is not None
        self.trace.record(err, evals, residual, x if keep else None)
        if err <= self.tol:
            return "tolerance"
        if self.e0 > 0.0 and err > DIVERGENCE_FACTOR * self.e0:
            self.trace.finish("divergence")
            raise DivergenceError(
                f"error norm {err:.3e} exceeded the divergence guard", self.trace
            )
        return None


def run_lti(spec: AlgorithmSpec, problem, x0, tol=1e-10, max_iter=100000) -> Trace:
    """Simulate a strictly causal spec via its realization, driven by -grad f.

    The state starts on the accumulator eigenspace so the output history is
    held at x0 with zero past inputs.
    """
    if not spec.is_strictly_causal:
        raise ValueError("run_lti needs a strictly causal spec (zero feedthrough)")
    R = spec.realization
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = R.A.shape[0]
    V = scipy.linalg.null_space(R.A - np.eye(n))
    if V.shape[1] != 1:
        raise ValueError("spec realization must have a simple accumulator")
    gain = float((R.C @ V)[0, 0])
    if abs(gain) < 1e-14:
        raise ValueError("accumulator mode is unobservable")
    s = V @ (x0 / gain)[None, :]

    run = _Run(problem, x0, tol, max_iter)
    for _ in range(max_iter + 1):
        x = (R.C @ s)[0]
        if run.record(x) == "tolerance":
            return run.trace.finish("tolerance")
        u = -problem.gradient(x)
        s = R.A @ s + R.B @ u[None, :]
    return run.trace.finish("max_iter")


def run_difference(spec: AlgorithmSpec, problem: QuadraticProblem, x0,
                   tol=1e-10, max_iter=100000) -> Trace:
    """Simulate a (possibly implicit) scalar spec on a quadratic problem via
    its transfer-function difference equation, solving the feedthrough
    coupling with one linear solve per step.

    Prehistory: iterates held at x0 and inputs at -grad f(x0).
    """
    G = spec.G
    n = G.den.degree
    dcf = np.zeros(n + 1)
    dcf[: len(G.den.coeffs)] = G.den.coeffs
    ncf = np.zeros(n + 1)
    ncf[: len(G.num.coeffs)] = G.num.coeffs
    Q, q = problem.Q, problem.q
    d = q.size
    try:
        lead = scipy.linalg.lu_factor(dcf[n] * np.eye(d) + ncf[n] * Q)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise FactorizationFailureError(str(exc)) from exc

    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    run = _Run(problem, x0, tol, max_iter)
    u0 = -problem.gradient(x0)
    xs = [x0.copy() for _ in range(n)]
    us = [u0.copy() for _ in range(n)]
    for _ in range(max_iter + 1):
        x = xs[-1]
        if run.record(x) == "tolerance":
            return run.trace.finish("tolerance")
        rhs = ncf[n] * q
        for j in range(n):
            rhs = rhs + ncf[j] * us[j] - dcf[j] * xs[j]
        x_next = scipy.linalg.lu_solve(lead, rhs)
        xs = xs[1:] + [x_next]
        us = us[1:] + [-problem.gradient(x_next)]
    return run.trace.finish("max_iter")


def run_implicit_hb(budget: RateBudget, rho: float, problem: QuadraticProblem,
                    x0, tol=1e-10, max_iter=100000) -> Trace:
    """Implicit heavy ball: momentum plus a regularized linear solve per step."""
    if not 0.0 < rho <= rho_min(budget) + 1e-15:
        raise ValueError("rho must lie in (0, rho_min]")
    delta, beta = _implicit_hb_coeffs(rho, budget)
    gain = delta + delta * rho**2 + beta
    momentum = rho**2
    try:
        fac = scipy.linalg.cho_factor(np.eye(problem.dim) + delta * problem.Q)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise FactorizationFailureError(str(exc)) from exc

    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    x_prev = x0.copy()
    x = x0.copy()
    run = _Run(problem, x0, tol, max_iter)
    for _ in range(max_iter + 1):
        if run.record(x) == "tolerance":
            return run.trace.finish("tolerance")
        g = problem.gradient(x)
        x_next = x + momentum * (x - x_prev) - gain * scipy.linalg.cho_solve(fac, g)
        x_prev, x = x, x_next
    return run.trace.finish("max_iter")


def run_implicit_prox(budget: RateBudget, rho: float, problem, x0,
                      tol=1e-10, max_iter=100000) -> Trace:
    """Implicit gradient via the proximal form x+ = prox_{alpha f}(x - beta grad f(x))."""
    alpha = alpha_for_rate(rho, budget)
    beta = implicit_gd(budget, rho).iteration["beta"]
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    x = x0.copy()
    run = _Run(problem, x0, tol, max_iter)
    for _ in range(max_iter + 1):
        if run.record(x) == "tolerance":
            return run.trace.finish("tolerance")
        v = x - beta * problem.gradient(x)
        x = prox(problem, alpha, v)
    return run.trace.finish("max_iter")


def run_prox_grad(budget: RateBudget, composite: CompositeProblem, x0,
                  tol=1e-10, max_iter=100000) -> Trace:
    """Proximal gradient on f = h + lam*||.||_1 with step 2/(mu+ell)."""
    eta = 2.0 / (budget.mu + budget.ell)
    thresh = composite.lam * eta
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    x = x0.copy()
    run = _Run(composite.h, x0, tol, max_iter, x_star=composite.x_star)
    for _ in range(max_iter + 1):
        if run.record(x, residual=composite.residual_norm(x)) == "tolerance":
            return run.trace.finish("tolerance")
        x = soft_threshold(x - eta * composite.h.gradient(x), thresh)
    return run.trace.finish("max_iter")
