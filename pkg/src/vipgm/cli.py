"""Command-line front end: reproducible solves, studies and sweeps.

Every subcommand accepts --config, --output-dir and --seed, writes its
artifacts (CSV traces, JSON summaries) under the output directory, and prints
a single machine-parsable JSON line on stdout.

Exit status of ``solve``: 0 converged, 2 iteration cap reached, 3 diverged,
1 on any error.  Study subcommands exit 0 when their checks pass, 1 otherwise.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments
from .config import (
    ConfigError,
    RunConfig,
    parse_config,
    parse_problem_document,
    serialize_config,
)
from .operators import (
    estimate_lipschitz,
    estimate_strong_monotonicity,
    estimate_strong_pseudomonotonicity,
    value_bound,
)
from .solvers import SolveReport, gpm_constant, gpm_unbounded, gpm_variable, write_trace_csv
from .vi import (
    ViProblem,
    error_bound_interior,
    error_bound_natural,
    error_bound_normal,
    natural_map,
    normal_map,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MAX_ITERS = 2
EXIT_DIVERGED = 3


def _certificate_dict(cert) -> dict:
    return {
        "kind": cert.kind,
        "evaluation_point": [float(v) for v in cert.evaluation_point],
        "residual_norm": cert.residual_norm,
        "radius": cert.radius,
        "anchor": [float(v) for v in cert.anchor],
        "gamma": cert.gamma,
        "lipschitz": cert.lipschitz,
        "constants_source": cert.constants_source,
    }


def _final_residuals(problem: ViProblem, point: np.ndarray, gamma: float | None) -> dict:
    residuals: dict = {
        "natural_map": float(np.linalg.norm(natural_map(problem, point))),
        "normal_map": float(np.linalg.norm(normal_map(problem, point))),
    }
    if gamma is not None:
        residuals["interior_radius"] = float(
            np.linalg.norm(problem.operator.evaluate(point))
        ) / gamma
    else:
        residuals["interior_radius"] = None
    return residuals


def _certificates(problem: ViProblem, point: np.ndarray) -> list[dict]:
    constants = problem.operator.constants
    certs = []
    if constants.gamma is not None:
        certs.append(_certificate_dict(error_bound_normal(problem, point)))
        certs.append(_certificate_dict(error_bound_interior(problem, point)))
        if constants.lipschitz is not None:
            certs.append(_certificate_dict(error_bound_natural(problem, point)))
    return certs


def build_summary(config: RunConfig, report: SolveReport, rate_result=None) -> dict:
    problem = config.problem
    gamma = problem.operator.constants.gamma
    final = report.final_point
    diverged = report.termination.kind == "diverged"
    summary = {
        "config": serialize_config(config),
        "termination": report.termination.label,
        "termination_detail": {"by": report.termination.by, "reason": report.termination.reason},
        "iterations": report.iterations,
        "final_point": [float(v) for v in final],
        # residuals and certificates are meaningless at a diverged iterate
        "final_residuals": None if diverged else _final_residuals(problem, final, gamma),
        "certificates": [] if diverged else _certificates(problem, final),
    }
    if report.restriction_radius is not None:
        summary["restriction_radius"] = report.restriction_radius
    if rate_result is not None:
        summary["rate_result"] = rate_result
    summary["wall_time"] = report.wall_time
    return summary


def execute_run(config: RunConfig, output_dir: Path) -> tuple[SolveReport, dict]:
    """Run the configured method and write the trace and summary artifacts."""
    problem, stop, start = config.problem, config.stop, config.start
    trace_every = config.output.trace_every
    if config.method == "gpm_constant":
        report = gpm_constant(problem, start, config.schedule.value, stop, trace_every=trace_every)
    elif config.method == "gpm_variable":
        report = gpm_variable(problem, start, config.schedule, stop, trace_every=trace_every)
    else:
        report = gpm_unbounded(
            problem,
            start,
            problem.operator.constants.gamma,
            config.schedule,
            stop,
            trace_every=trace_every,
        )
    summary = build_summary(config, report)
    output_dir.mkdir(parents=True, exist_ok=True)
    write_trace_csv(report, output_dir / config.output.trace)
    _write_json(summary, output_dir / config.output.summary)
    return report, summary


def _write_json(payload: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def _emit(line: dict) -> None:
    print(json.dumps(line))


def _exit_code(report: SolveReport) -> int:
    kind = report.termination.kind
    if kind == "converged":
        return EXIT_OK
    if kind == "max-iters":
        return EXIT_MAX_ITERS
    return EXIT_DIVERGED


# ---------------------------------------------------------------------------
# Subcommand handlers.
# ---------------------------------------------------------------------------


def _cmd_solve(args) -> int:
    if args.config is None:
        raise ConfigError("solve needs --config")
    config = parse_config(Path(args.config).read_text())
    report, summary = execute_run(config, Path(args.output_dir))
    _emit(
        {
            "command": "solve",
            "termination": summary["termination"],
            "iterations": summary["iterations"],
            "final_point": summary["final_point"],
            "summary": str(Path(args.output_dir) / config.output.summary),
            "trace": str(Path(args.output_dir) / config.output.trace),
        }
    )
    return _exit_code(report)


def _cmd_repro_ex41(args) -> int:
    verdict = experiments.counterexample_constant_step(args.lam, args.x1, args.iters)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(verdict.report, out / "repro-ex41-trace.csv")
    payload = {
        "command": "repro-ex41",
        "passed": verdict.passed,
        "checks": verdict.checks,
        "lam": args.lam,
        "x1": args.x1,
        "iterations": verdict.report.iterations,
        "final_odd_iterate": float(verdict.odd_iterates[-1]),
        "saturation_index": verdict.saturation_index,
    }
    _write_json(payload, out / "repro-ex41-summary.json")
    _emit(payload)
    return EXIT_OK if verdict.passed else EXIT_ERROR


def _cmd_repro_ex42(args) -> int:
    verdict = experiments.counterexample_unbounded(args.iters)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(verdict.report, out / "repro-ex42-trace.csv")
    payload = {
        "command": "repro-ex42",
        "passed": verdict.passed,
        "checks": verdict.checks,
        "termination": verdict.report.termination.label,
        "diverged_at": verdict.diverged_at,
        "iterates": [float(v) for v in verdict.iterate_values[:3]],
    }
    _write_json(payload, out / "repro-ex42-summary.json")
    _emit(payload)
    return EXIT_OK if verdict.passed else EXIT_ERROR


def _cmd_verify_bounds(args) -> int:
    results = experiments.bound_validity_sweep(points_per_problem=args.points, seed=args.seed)
    tolerance = 1e-9
    rows = [dataclasses.asdict(r) for r in results]
    worst = max(
        max(r.max_violation_normal, r.max_violation_interior, r.max_violation_natural or 0.0)
        for r in results
    )
    passed = worst <= tolerance
    payload = {
        "command": "verify-bounds",
        "passed": passed,
        "max_violation": worst,
        "tolerance": tolerance,
        "problems": rows,
    }
    out = Path(args.output_dir)
    _write_json(payload, out / "verify-bounds-summary.json")
    _emit({k: payload[k] for k in ("command", "passed", "max_violation", "tolerance")})
    return EXIT_OK if passed else EXIT_ERROR


def _cmd_rate_study(args) -> int:
    problem, start = experiments.rate_benchmark()
    result = experiments.rate_study(
        problem, start, args.p, args.iters, tail_fraction=args.tail_fraction
    )
    payload = {
        "command": "rate-study",
        "p": result.p,
        "theoretical_rate": result.theoretical_rate,
        "fitted_slope": result.fitted_slope,
        "bound_constant": result.bound_constant,
        "converged_exactly": result.converged_exactly,
        "iterations": int(result.ks[-1]),
        "final_error": float(result.errors[-1]),
    }
    if not result.converged_exactly:
        payload["tail_ratio_max_last_half"] = experiments.tail_ratio_max(result, 0.5)
        payload["tail_ratio_max_last_tenth"] = experiments.tail_ratio_max(result, 0.1)
    out = Path(args.output_dir)
    _write_json(payload, out / f"rate-study-p{args.p}.json")
    _emit(payload)
    return EXIT_OK


def _cmd_estimate_constants(args) -> int:
    if args.config is None:
        raise ConfigError("estimate-constants needs --config")
    problem = parse_problem_document(Path(args.config).read_text())
    op, region = problem.operator, problem.set
    payload = {
        "command": "estimate-constants",
        "samples": args.samples,
        "seed": args.seed,
        "strong_monotonicity": estimate_strong_monotonicity(op, region, args.samples, args.seed),
        "strong_pseudomonotonicity": estimate_strong_pseudomonotonicity(
            op, region, args.samples, args.seed
        ),
        "lipschitz": estimate_lipschitz(op, region, args.samples, args.seed),
        "lipschitz_is_finite": bool(op.lipschitz_is_finite),
        "value_bound": value_bound(op, region, args.samples, args.seed),
    }
    out = Path(args.output_dir)
    _write_json(payload, out / "estimate-constants-summary.json")
    _emit(payload)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vipgm",
        description="Gradient projection methods for variational inequalities",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="path to a JSON config document")
    common.add_argument("--output-dir", default=".", help="directory for traces and summaries")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled estimates")

    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("solve", parents=[common], help="run the configured solve")

    p41 = sub.add_parser(
        "repro-ex41",
        parents=[common],
        help="constant-stepsize non-convergence study (square-root operator)",
    )
    p41.add_argument("--lam", type=float, default=0.5, help="constant stepsize in (0, 1)")
    p41.add_argument("--x1", type=float, default=0.2, help="starting point in (0, lam^2)")
    p41.add_argument("--iters", type=int, default=10_000)

    p42 = sub.add_parser(
        "repro-ex42",
        parents=[common],
        help="divergence study on an unbounded domain (exponential-growth operator)",
    )
    p42.add_argument("--iters", type=int, default=100)

    pv = sub.add_parser(
        "verify-bounds", parents=[common], help="error-bound validity sweep over the catalog"
    )
    pv.add_argument("--points", type=int, default=1000)

    pr = sub.add_parser(
        "rate-study", parents=[common], help="tail-decay study on the rate benchmark"
    )
    pr.add_argument("--p", type=float, default=1.0, help="stepsize exponent in (0, 1]")
    pr.add_argument("--iters", type=int, default=100_000)
    pr.add_argument("--tail-fraction", type=float, default=0.5)

    sub.add_parser(
        "estimate-constants",
        parents=[common],
        help="sampled modulus / Lipschitz / value-bound estimates for a problem",
    )
    return parser


_HANDLERS = {
    "solve": _cmd_solve,
    "repro-ex41": _cmd_repro_ex41,
    "repro-ex42": _cmd_repro_ex42,
    "verify-bounds": _cmd_verify_bounds,
    "rate-study": _cmd_rate_study,
    "estimate-constants": _cmd_estimate_constants,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(json.dumps({"command": args.command, "error": str(exc)}), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
