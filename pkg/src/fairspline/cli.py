"""Command-line front end.

Subcommands: fair (run a fairing job), fit (the same job with all
smoothing weights forced to zero), compare (fairing iteration versus the
direct energy-minimization solve), report (re-render a saved report as
Markdown, a trace CSV, and a convergence figure), and serve (start the
HTTP session service).

Exit codes: 0 converged, 1 config or I/O error, 2 iteration budget
exhausted, 3 diverged, 4 singular system in compare without
--pseudoinverse.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .assembly import NonContractiveError
from .datasets import PointFormatError
from .iteration import relative_metric
from .jobs import JobConfig, JobConfigError, RunReport, run_job
from .metrics import curvature_comb
from .oracle import SingularMatrixError, direct_solve, pseudo_inverse_solution
from .splines import DegenerateDataError, DomainError, InvalidSizeError
from .svg import export_svg

__all__ = ["main"]

_EXIT_BY_REASON = {"converged": 0, "max_iters": 2, "diverged": 3}
_CONFIG_ERRORS = (
    JobConfigError,
    PointFormatError,
    InvalidSizeError,
    DegenerateDataError,
    DomainError,
    NonContractiveError,
    ValueError,
    OSError,
)


def _add_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", help="job config JSON path")
    parser.add_argument("--omega", type=float, help="uniform smoothing weight")
    parser.add_argument("--r", type=int, help="smoothing order (1, 2 or 3)")
    parser.add_argument("--n", type=int, help="control point count")
    parser.add_argument("--seed", type=int, help="noise seed for analytic models")
    parser.add_argument("--max-iters", type=int, help="iteration budget")
    parser.add_argument("--tol", type=float, help="stopping tolerance")
    parser.add_argument("--out", help="report output path")
    parser.add_argument(
        "--no-timestamp",
        action="store_true",
        help="omit timestamp and wall time for reproducible reports",
    )


def _load_config(args: argparse.Namespace) -> JobConfig:
    try:
        body = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise JobConfigError(f"{args.config}:{exc.lineno}: {exc.msg}") from None
    if not isinstance(body, dict):
        raise JobConfigError("job config must be a JSON object")
    if args.omega is not None:
        body["weights"] = {"omega": args.omega}
    if args.r is not None:
        body["r"] = args.r
    if args.n is not None:
        body["n"] = args.n
    if args.seed is not None:
        body.setdefault("input", {})["seed"] = args.seed
    if args.max_iters is not None or args.tol is not None:
        stop = dict(body.get("stop") or {})
        if args.max_iters is not None:
            stop["max_iters"] = args.max_iters
        if args.tol is not None:
            stop["tol"] = args.tol
        body["stop"] = stop
    if args.out is not None:
        outputs = dict(body.get("outputs") or {})
        outputs["report"] = args.out
        body["outputs"] = outputs
    return JobConfig.from_dict(body)


def _emit_report(report: RunReport, outputs: dict) -> None:
    path = outputs.get("report")
    if path:
        report.save(path)
    else:
        sys.stdout.write(report.to_json())


def _maybe_svg(result, outputs: dict) -> None:
    path = outputs.get("svg")
    if not path or result.curve is None or result.curve.dim != 2:
        return
    samples = int(outputs.get("comb_samples", 200))
    scale = outputs.get("comb_scale")
    comb = curvature_comb(result.curve, samples, 1.0)
    if scale is None:
        # Scale teeth to a tenth of the bounding box unless the curve is flat.
        box = result.data.points.max(axis=0) - result.data.points.min(axis=0)
        peak = comb.max_curvature()
        scale = 0.1 * float(box.max()) / peak if peak > 0 else 1.0
    comb = curvature_comb(result.curve, samples, float(scale))
    export_svg(result.curve, comb, result.data, path)


def _cmd_fair(args: argparse.Namespace) -> int:
    config = _load_config(args)
    result = run_job(config, no_timestamp=args.no_timestamp)
    _emit_report(result.report, config.outputs)
    _maybe_svg(result, config.outputs)
    return _EXIT_BY_REASON[result.report.stop_reason]


def _cmd_fit(args: argparse.Namespace) -> int:
    args.omega = 0.0
    return _cmd_fair(args)


def _cmd_compare(args: argparse.Namespace) -> int:
    config = _load_config(args)
    result = run_job(config, no_timestamp=args.no_timestamp)
    omega = result.state.config.omega
    if float(np.ptp(omega)) != 0.0:
        raise JobConfigError("compare needs a constant smoothing weight")
    bundle = result.state.bundle
    ntq = bundle.colloc.dense.T @ bundle.points
    began = time.perf_counter()
    consistent = True
    try:
        direct = direct_solve(bundle.a, (1.0 - float(omega[0])) * ntq)
    except SingularMatrixError:
        if not args.pseudoinverse:
            print(
                "error: singular system; rerun with --pseudoinverse",
                file=sys.stderr,
            )
            return 4
        direct, consistent = pseudo_inverse_solution(
            bundle.a, ntq, float(omega[0])
        )
    direct_time = time.perf_counter() - began
    gap = relative_metric(
        float(np.max(np.abs(result.state.control - direct))),
        float(np.max(np.abs(direct))),
    )
    body = {
        "gap": gap,
        "consistent": consistent,
        "iterations": result.report.iterations,
        "stop_reason": result.report.stop_reason,
    }
    if not args.no_timestamp:
        body["pia_runtime"] = result.report.wall_time
        body["direct_runtime"] = direct_time
    text = json.dumps(body, sort_keys=True, indent=1) + "\n"
    if config.outputs.get("report"):
        Path(config.outputs["report"]).write_text(text)
    else:
        sys.stdout.write(text)
    return _EXIT_BY_REASON[result.report.stop_reason]


def _format_cell(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _markdown_table(headers: list[str], row: list) -> str:
    return (
        "| " + " | ".join(headers) + " |\n"
        "|" + "|".join(" --- " for _ in headers) + "|\n"
        "| " + " | ".join(_format_cell(v) for v in row) + " |\n"
    )


def render_markdown(report: RunReport) -> str:
    src = report.config.get("input", {})
    model = src.get("model") or Path(src.get("path", "points")).stem
    run_row = [
        model,
        report.m,
        report.n,
        report.dim,
        report.config.get("degree", 3),
        report.config.get("r", 2),
        report.iterations,
        report.stop_reason,
    ]
    run_headers = [
        "model", "m", "n", "dim", "degree", "r", "iterations", "stopped",
    ]
    if report.wall_time is not None:
        run_headers.append("wall time (s)")
        run_row.append(report.wall_time)
    parts = [
        "# Fairing run\n\n",
        _markdown_table(run_headers, run_row),
        "\n",
        _markdown_table(
            [
                "initial fitting error",
                "final fitting error",
                "initial energy",
                "final energy",
            ],
            [
                report.initial_fit_abs,
                report.final_fit_abs,
                report.initial_energy_abs,
                report.final_energy_abs,
            ],
        ),
    ]
    return "".join(parts)


def _cmd_report(args: argparse.Namespace) -> int:
    from .figures import save_convergence_figure, save_trace_csv

    try:
        report = RunReport.load(args.report)
    except (json.JSONDecodeError, KeyError) as exc:
        raise JobConfigError(f"unreadable report {args.report}: {exc}") from None
    out = Path(args.out) if args.out else Path(args.report).with_suffix(".md")
    out.write_text(render_markdown(report))
    trace = np.asarray(report.trace)
    save_trace_csv(trace, out.with_suffix(".trace.csv"))
    save_convergence_figure(trace, out.with_suffix(".png"))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import socket

    import uvicorn

    from .service import create_app

    port = args.port
    if port is None:
        port = int(os.environ.get("PORT", "8000"))
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((args.host, port))
    # listen before announcing so early clients queue instead of failing
    # while uvicorn finishes starting up
    sock.listen(128)
    print(f"serving on {args.host}:{sock.getsockname()[1]}", flush=True)
    config = uvicorn.Config(create_app(), log_level="warning")
    uvicorn.Server(config).run(sockets=[sock])
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairspline",
        description="Fit and fair B-spline curves and surfaces.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    fair = sub.add_parser("fair", help="run a fairing job")
    _add_overrides(fair)
    fair.set_defaults(func=_cmd_fair)

    fit = sub.add_parser("fit", help="run the job as pure fitting (omega = 0)")
    _add_overrides(fit)
    fit.set_defaults(func=_cmd_fit)

    compare = sub.add_parser(
        "compare", help="fairing iteration versus the direct solve"
    )
    _add_overrides(compare)
    compare.add_argument(
        "--pseudoinverse",
        action="store_true",
        help="fall back to the pseudoinverse when the system is singular",
    )
    compare.set_defaults(func=_cmd_compare)

    report = sub.add_parser(
        "report", help="render a saved report as Markdown, CSV and PNG"
    )
    report.add_argument("report", help="run report JSON path")
    report.add_argument("--out", help="Markdown output path")
    report.set_defaults(func=_cmd_report)

    serve = sub.add_parser("serve", help="start the HTTP session service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument(
        "--port", type=int, default=None, help="port (0 = ephemeral; PORT env)"
    )
    serve.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
