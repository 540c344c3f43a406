"""Command-line front end: synthesis, margin analysis, lifting, certification,
runs, and the two benchmark sweeps.  Emits JSON verdicts and CSV traces."""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import certificates, lifting, margin, problems, rates, runtime, synthesis
from .errors import (
    DivergenceError,
    GainoptError,
    InfeasibleError,
    InnerNotConvergedError,
    UncertifiableError,
)
from .transfer import TransferFunction, TransferMatrix

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

_NUMERICAL = (DivergenceError, InfeasibleError, InnerNotConvergedError, UncertifiableError)


class ValidationError(Exception):
    pass


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _emit(report: dict, out_dir, name: str):
    text = json.dumps(report, indent=2, default=_jsonify)
    if out_dir:
        path = Path(out_dir) / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text + "\n")
    print(text)


def _jsonify(obj):
    if isinstance(obj, (TransferFunction, TransferMatrix)):
        return obj.to_json()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _budget(args) -> synthesis.RateBudget:
    ell = math.inf if args.ell in (None, "inf") else float(args.ell)
    return synthesis.RateBudget(float(args.mu), ell)


def _spec_report(spec: synthesis.AlgorithmSpec, config: dict) -> dict:
    R = spec.realization
    return {
        "config": config,
        "config_hash": _config_hash(config),
        "name": spec.name,
        "transfer_function": spec.G,
        "feedthrough": spec.feedthrough,
        "realization": {"A": R.A, "B": R.B, "C": R.C, "D": R.D},
        "iteration": {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in spec.iteration.items()
        },
        "rate": spec.rate,
    }


def cmd_synth(args) -> int:
    budget = _budget(args)
    method = args.method
    if method == "heavy-ball":
        spec = synthesis.heavy_ball(budget)
    elif method == "implicit-hb":
        rho = args.rho if args.rho is not None else synthesis.rho_min(budget)
        spec = synthesis.implicit_heavy_ball(budget, rho)
    elif method == "implicit-gd":
        rho = args.rho if args.rho is not None else synthesis.rho_gd(budget)
        spec = synthesis.implicit_gd(budget, rho)
    elif method == "gd":
        spec = synthesis.gradient_descent(budget)
    elif method == "splitting":
        spec = synthesis.splitting_synthesis(budget)
    else:
        raise ValidationError(f"unknown method {method!r}")
    config = {"command": "synth", "method": method, "mu": budget.mu,
              "ell": budget.ell, "rho": args.rho, "seed": args.seed}
    _emit(_spec_report(spec, config), args.out, "synth.json")
    return EXIT_OK


def cmd_margin(args) -> int:
    if args.ratio is not None:
        k2 = math.sqrt(args.ratio)
        k1 = 1.0 / k2
    elif args.k1 is not None and args.k2 is not None:
        k1, k2 = args.k1, args.k2
    else:
        raise ValidationError("provide --ratio or both --k1 and --k2")
    p = complex(args.pole)
    spec = margin.MarginSpec(p, k1, k2)
    feasible = margin.margin_feasible(spec)
    report = {
        "config": {"command": "margin", "pole": str(p), "k1": k1, "k2": k2,
                   "grid": args.grid, "seed": args.seed},
        "feasible": feasible,
        "optimal_ratio": margin.optimal_margin(p),
        "g": margin.g_of(k1, k2),
    }
    report["config_hash"] = _config_hash(report["config"])
    if feasible:
        g = margin.g_of(k1, k2)
        nodes = [
            margin.InterpolationNode.at_infinity(0.0),
            margin.InterpolationNode(p, g),
        ]
        T_disk = margin.np_solve(nodes)
        T = margin.phi_inverse_tf(T_disk, k1, k2)
        P0 = TransferFunction([1.0], [-p.real, 1.0])
        C = margin.recover_controller(T, P0)
        report.update(
            {
                "plant": P0,
                "T": T,
                "controller": C,
                "verified": margin.margin_verify(P0, C, k1, k2, args.grid),
            }
        )
    _emit(report, args.out, "margin.json")
    return EXIT_OK


def _load_config_file(args) -> dict:
    if args.config is None:
        return {}
    return json.loads(Path(args.config).read_text())


def cmd_lift(args) -> int:
    cfg = _load_config_file(args)
    if args.steps:
        cfg = {"type": "gd", "steps": [float(s) for s in args.steps.split(",")]}
    if not cfg:
        raise ValidationError("lift needs --config or --steps")
    kind = cfg.get("type")
    if kind == "gd":
        sys_ = lifting.lift_periodic_gd(lifting.PeriodicGDSchedule(tuple(cfg["steps"])))
    elif kind == "momentum2":
        sched = lifting.Momentum2Schedule(
            tuple(cfg["alpha"]), tuple(cfg["beta"]), tuple(cfg["eta"])
        )
        sys_ = lifting.lift_momentum2(sched)
    elif kind == "lti":
        G = TransferFunction(cfg["num"], cfg["den"])
        sys_ = lifting.lift_lti(G, int(cfg["period"]))
    else:
        raise ValidationError(f"unknown lift type {kind!r}")
    report = {
        "config": {"command": "lift", **cfg, "seed": args.seed},
        "period": sys_.period,
        "lifted": sys_.G,
        "strictly_causal": lifting.check_causal_structure(sys_),
        "accumulator_direction": lifting.check_accumulator_direction(sys_),
        "residues": lifting.accumulator_residues(sys_),
    }
    report["config_hash"] = _config_hash(report["config"])
    _emit(report, args.out, "lift.json")
    return EXIT_OK


def cmd_certify(args) -> int:
    budget = _budget(args)
    if args.spec:
        obj = json.loads(Path(args.spec).read_text())
        tf_obj = obj.get("transfer_function", obj)
        G = TransferFunction.from_json(tf_obj)
    elif args.method:
        ns = argparse.Namespace(**vars(args), method=args.method)
        G = {
            "heavy-ball": lambda: synthesis.heavy_ball(budget),
            "gd": lambda: synthesis.gradient_descent(budget),
            "implicit-gd": lambda: synthesis.implicit_gd(
                budget, args.rho if args.rho is not None else synthesis.rho_gd(budget)
            ),
        }[args.method]().G
    else:
        raise ValidationError("certify needs --spec or --method")
    config = certificates.SPRConfig(grid_points=args.grid_points)
    rho = certificates.rate_certificate(G, budget, config)
    report = {
        "config": {"command": "certify", "mu": budget.mu, "ell": budget.ell,
                   "grid_points": args.grid_points, "seed": args.seed},
        "certificate_rho": rho,
        "method": "circle",
        "details": {
            "epsilon": config.epsilon,
            "rho_gd": synthesis.rho_gd(budget),
            "rho_min": synthesis.rho_min(budget),
        },
    }
    report["config_hash"] = _config_hash(report["config"])
    _emit(report, args.out, "certify.json")
    return EXIT_OK


def cmd_run(args) -> int:
    budget = _budget(args)
    config = {
        "command": "run", "method": args.method, "mu": budget.mu, "ell": budget.ell,
        "rho": args.rho, "d": args.d, "seed": args.seed, "tol": args.tol,
        "max_iter": args.max_iter, "lambda": getattr(args, "lam", None),
    }
    if args.method == "prox-grad":
        prob = problems.CompositeProblem.random(
            args.d, budget.mu, budget.ell, args.lam, args.seed
        )
        trace = runtime.run_prox_grad(budget, prob, np.zeros(args.d),
                                      tol=args.tol, max_iter=args.max_iter)
    else:
        prob = problems.random_quadratic(args.d, budget, args.seed)
        x0 = np.zeros(args.d)
        if args.method == "heavy-ball":
            trace = runtime.run_lti(synthesis.heavy_ball(budget), prob, x0,
                                    tol=args.tol, max_iter=args.max_iter)
        elif args.method == "gd":
            trace = runtime.run_lti(synthesis.gradient_descent(budget), prob, x0,
                                    tol=args.tol, max_iter=args.max_iter)
        elif args.method == "implicit-hb":
            rho = args.rho if args.rho is not None else synthesis.rho_min(budget)
            trace = runtime.run_implicit_hb(budget, rho, prob, x0,
                                            tol=args.tol, max_iter=args.max_iter)
        elif args.method == "implicit-gd":
            rho = args.rho if args.rho is not None else synthesis.rho_gd(budget)
            trace = runtime.run_implicit_prox(budget, rho, prob, x0,
                                              tol=args.tol, max_iter=args.max_iter)
        else:
            raise ValidationError(f"unknown method {args.method!r}")
    report = {
        "config": config,
        "config_hash": _config_hash(config),
        "terminated_at": trace.terminated_at,
        "stop_reason": trace.stop_reason,
        "final_err": trace.err_norms[-1],
        "grad_evals": trace.grad_evals[-1],
    }
    try:
        est = rates.empirical_rate(trace)
        report["empirical_rate"] = est.rho_hat
    except GainoptError:
        pass
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        meta = {"config_hash": report["config_hash"], "seed": args.seed}
        sub = max(1, len(trace.err_norms) // args.max_rows)
        trace.to_csv(Path(args.out) / "trace.csv", meta=meta, subsample=sub)
    _emit(report, args.out, "run.json")
    return EXIT_OK


def bench_fig4(seed=0, d=100, mu=0.01, ell=100.0, tol=1e-10,
               alphas=None, max_iter=10**6):
    """Sweep the implicit feedthrough and count gradient evaluations.

    Defaults reproduce the ill-conditioned piecewise-quadratic study:
    d=100, mu=0.01, ell=100, stop at ||x - x*|| <= 1e-10 from x0 = 0.
    """
    budget = synthesis.RateBudget(mu, ell)
    if alphas is None:
        alphas = [0.0] + list(np.geomspace(0.1, 10.0, 19))
    base = problems.PiecewiseQuadraticProblem.random(d, mu, ell, seed)
    rows = []
    for alpha in alphas:
        rho = synthesis.rho_circle(alpha, budget)
        prob = base.clone()
        row = {"alpha": float(alpha), "rho": rho,
               "kappa_sub": synthesis.sub_condition(alpha, budget)}
        try:
            trace = runtime.run_implicit_prox(
                budget, rho, prob, np.zeros(d), tol=tol, max_iter=max_iter
            )
            row["grad_evals"] = trace.grad_evals[-1]
            row["stop_reason"] = trace.stop_reason
        except InnerNotConvergedError as exc:
            row["grad_evals"] = None
            row["stop_reason"] = f"inner_not_converged: {exc}"
        rows.append(row)
    # theory curves share one constant anchored at the alpha = 0 count
    anchor = next((r for r in rows if r["alpha"] == 0.0 and r["grad_evals"]), None)
    c = anchor["grad_evals"] * math.log(anchor["rho"]) if anchor else None
    for row in rows:
        row["theory_main"] = c / math.log(row["rho"]) if c else None
        ks = row["kappa_sub"]
        rho_sub = (ks - 1.0) / (ks + 1.0)
        row["theory_sub"] = c / math.log(rho_sub) if c and rho_sub > 0.0 else None
    return rows


def bench_fig5(seed=0, d=1000, mu=0.1, ell=100.0, lam=1.0,
               tol=1e-10, max_iter=20000):
    """Proximal gradient on the l1 composite; envelope and residual report."""
    budget = synthesis.RateBudget(mu, ell)
    comp = problems.CompositeProblem.random(d, mu, ell, lam, seed)
    trace = runtime.run_prox_grad(budget, comp, np.zeros(d),
                                  tol=tol, max_iter=max_iter)
    rho = synthesis.rho_gd(budget)
    e = np.asarray(trace.err_norms)
    env = e[0] * rho ** np.arange(e.size)
    check = env >= tol
    slack = float(np.max(e[check] / env[check])) if np.any(check) else 0.0
    report = {
        "rho_gd": rho,
        "e0": float(e[0]),
        "envelope_max_slack": slack,
        "envelope_violations": int(np.sum(e[check] > 1.05 * env[check])),
        "terminated_at": trace.terminated_at,
        "stop_reason": trace.stop_reason,
        "final_err": float(e[-1]),
        "final_residual": trace.residual_norms[-1],
    }
    return report, trace, env


def cmd_bench(args) -> int:
    if args.which == "fig4":
        rows = bench_fig4(seed=args.seed, d=args.d or 100, mu=args.mu or 0.01,
                          ell=args.ell or 100.0, tol=args.tol)
        config = {"command": "bench", "which": "fig4", "seed": args.seed,
                  "d": args.d or 100, "mu": args.mu or 0.01,
                  "ell": args.ell or 100.0, "tol": args.tol}
        report = {"config": config, "config_hash": _config_hash(config), "rows": rows}
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            lines = [f"# config_hash={report['config_hash']} seed={args.seed}",
                     "alpha,grad_evals,rho,kappa_sub,theory_main,theory_sub"]
            for r in rows:
                lines.append(
                    ",".join(
                        "" if r[k] is None else repr(r[k])
                        for k in ("alpha", "grad_evals", "rho",
                                  "kappa_sub", "theory_main", "theory_sub")
                    )
                )
            (out / "fig4.csv").write_text("\n".join(lines) + "\n")
        _emit(report, args.out, "fig4.json")
        return EXIT_OK
    if args.which == "fig5":
        report, trace, env = bench_fig5(
            seed=args.seed, d=args.d or 1000, mu=args.mu or 0.1,
            ell=args.ell or 100.0, lam=args.lam, tol=args.tol,
        )
        config = {"command": "bench", "which": "fig5", "seed": args.seed,
                  "d": args.d or 1000, "mu": args.mu or 0.1,
                  "ell": args.ell or 100.0, "lambda": args.lam, "tol": args.tol}
        report = {"config": config, "config_hash": _config_hash(config), **report}
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            meta = {"config_hash": report["config_hash"], "seed": args.seed}
            sub = max(1, len(trace.err_norms) // args.max_rows)
            trace.to_csv(out / "fig5.csv", meta=meta, subsample=sub)
        _emit(report, args.out, "fig5.json")
        return EXIT_OK
    raise ValidationError(f"unknown benchmark {args.which!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gainopt", description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=str, default=None)
    parser.add_argument("--config", type=str, default=None,
                        help="JSON file with command parameters")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize an algorithm from (mu, ell)")
    p.add_argument("--method", required=True,
                   choices=["heavy-ball", "implicit-hb", "implicit-gd", "gd", "splitting"])
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--ell", default=None)
    p.add_argument("--rho", type=float, default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("margin", help="gain-margin feasibility and controller")
    p.add_argument("--pole", required=True)
    p.add_argument("--ratio", type=float, default=None)
    p.add_argument("--k1", type=float, default=None)
    p.add_argument("--k2", type=float, default=None)
    p.add_argument("--grid", type=int, default=25)
    p.set_defaults(func=cmd_margin)

    p = sub.add_parser("lift", help="lift a periodic schedule to MIMO form")
    p.add_argument("--steps", type=str, default=None,
                   help="comma-separated periodic gradient steps")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("certify", help="circle-criterion rate certificate")
    p.add_argument("--spec", type=str, default=None,
                   help="JSON file with a transfer function")
    p.add_argument("--method", choices=["heavy-ball", "gd", "implicit-gd"],
                   default=None)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--ell", default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--grid-points", type=int, default=4096)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("run", help="run an algorithm on a seeded problem")
    p.add_argument("--method", required=True,
                   choices=["heavy-ball", "gd", "implicit-hb", "implicit-gd", "prox-grad"])
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--ell", default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--d", type=int, default=20)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100000)
    p.add_argument("--max-rows", type=int, default=10000)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="benchmark sweeps")
    p.add_argument("which", choices=["fig4", "fig5"])
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--ell", type=float, default=None)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-rows", type=int, default=10000)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ValidationError, ValueError, KeyError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_VALIDATION
    except _NUMERICAL as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
