"""Command-line front end.

Every subcommand produces a list of VerificationReport values. The first
entry of each run is the curvature-convention calibration (unit sphere
R_1221 = +1), so numbers stay interpretable across versions. Exit status is
0 when every report passes, 1 on a tolerance failure, 2 on bad input (any
diagnosed library error: unreadable or malformed spec, expression syntax,
degenerate metric) and 3 on an unexpected internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from .catalog import ManifoldSpec, load_spec
from .errors import CurvlabError
from .geometry import MetricChart, evaluate_geometry
from .invariants import dimension_row, format_dimension_table
from .tensor_core import Signature
from .verification import (
    DEFAULT_FD_STEP,
    QuadratureRule,
    VerificationReport,
    gauss_bonnet_boundary,
    gauss_bonnet_closed,
    identity_check,
    restriction_product_check,
    total_variation_check,
    variational_check_boundary,
    variational_check_interior,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3
ORDER_ENV = "CURVLAB_ORDER"
DEFAULT_ORDER = 24


class InputError(CurvlabError):
    """Command-line input that cannot be acted on."""


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def calibration_report() -> VerificationReport:
    """Orthonormal R_1221 of the unit round sphere, which the convention fixes at +1."""
    start = time.perf_counter()
    chart = MetricChart.from_entries(
        ("th", "ph"), ((0.0, math.pi), (0.0, 2 * math.pi)), {(1, 1): "1", (2, 2): "sin(th)^2"},
        Signature.euclidean(2), name="unit-sphere",
    )
    geo = evaluate_geometry(chart, np.array([[1.0, 0.5]]))
    value = float(geo.riemann[0, 0, 1, 1, 0])
    return VerificationReport("calibration:sphere-R1221", value, 1.0, 1e-10, "abs", time.perf_counter() - start)


def resolve_order(cli_order: int | None, spec: ManifoldSpec | None = None) -> int:
    if cli_order is not None:
        return cli_order
    env = os.environ.get(ORDER_ENV)
    if env:
        try:
            order = int(env)
        except ValueError as exc:
            raise InputError(f"{ORDER_ENV} must be an integer, got {env!r}") from exc
        if order < 1:
            raise InputError(f"{ORDER_ENV} must be positive")
        return order
    if spec is not None and spec.quadrature_order:
        return spec.quadrature_order
    return DEFAULT_ORDER


def parse_signature(text: str | None, dim: int) -> tuple[int, ...]:
    """Named signature ("riemannian", "lorentzian", "split") or an explicit +/- string."""
    if text is None or text == "riemannian":
        return (1,) * dim
    if text == "lorentzian":
        return (-1,) + (1,) * (dim - 1)
    if text == "split":
        p = dim // 2
        return (-1,) * p + (1,) * (dim - p)
    if set(text) <= {"+", "-"} and len(text) == dim:
        return tuple(1 if c == "+" else -1 for c in text)
    raise InputError(f"signature {text!r} is not riemannian, lorentzian, split or a +/- string of length {dim}")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


# --------------------------------------------------------------------------
# subcommands; each returns (reports, extra text lines)
# --------------------------------------------------------------------------


def cmd_gauss_bonnet(args) -> tuple[list[VerificationReport], list[str]]:
    spec = load_spec(args.spec)
    chart = spec.to_chart()
    rule = QuadratureRule(resolve_order(args.order, spec))
    if spec.boundary:
        report = gauss_bonnet_boundary(chart, rule, tol=args.tol)
    else:
        report = gauss_bonnet_closed(chart, rule, tol=args.tol)
    return [report], []


def cmd_euler_lagrange(args) -> tuple[list[VerificationReport], list[str]]:
    spec = load_spec(args.spec)
    chart = spec.to_chart()
    h = spec.perturbation_entries()
    rule = QuadratureRule(resolve_order(args.order, spec))
    n, m = args.n, chart.dim
    if n < 0 or n > m:
        raise InputError(f"--n must lie in 0..{m}")
    if args.boundary and not spec.boundary:
        raise InputError(f"--boundary given but {spec.name} has no boundary face")
    reports = []
    if spec.boundary:
        if n == m:
            reports.append(total_variation_check(chart, h, rule, args.fd_step, tol=args.tol or 1e-6))
        else:
            reports.append(variational_check_boundary(chart, h, n, rule, args.fd_step, tol=args.tol or 1e-3))
    elif n == m:
        reports.append(variational_check_interior(chart, h, n, rule, args.fd_step, tol=args.tol or 1e-6, mode="abs"))
    else:
        reports.append(variational_check_interior(chart, h, n, rule, args.fd_step, tol=args.tol or 1e-4))
    lines = []
    for r in reports:
        parts = ", ".join(f"{k}={v:.6g}" for k, v in r.details.items() if isinstance(v, float))
        lines.append(f"    {parts}")
    return reports, lines


def cmd_identities(args) -> tuple[list[VerificationReport], list[str]]:
    signs = parse_signature(args.signature, args.dim)
    which = "3-as-printed" if args.as_printed else None
    if args.as_printed and args.dim not in (5, 6):
        raise InputError("--as-printed applies to dimensions 5 and 6")
    return [identity_check(args.dim, args.samples, args.seed, signs=signs, which=which)], []


def cmd_invariant_dims(args) -> tuple[list[VerificationReport], list[str]]:
    reports, rows = [], []
    for dim in range(1, args.max_dim + 1):
        signs = parse_signature(args.signature, dim)
        start = time.perf_counter()
        row = dimension_row(dim, signs)
        seconds = time.perf_counter() - start
        rows.append(row)
        details = {"flag": row.printed_formula_flag, "printed_formula": row.printed_formula}
        reports.append(VerificationReport(f"invariant-dims:m={dim}:kernel", row.kernel_dim, row.q_count, 0.0,
                                          "abs", seconds, details))
        reports.append(VerificationReport(f"invariant-dims:m={dim}:q-rank", row.q_rank, row.q_count, 0.0, "abs"))
        reports.append(VerificationReport(f"invariant-dims:m={dim}:q-in-kernel", float(row.q_in_kernel), 1.0, 0.0,
                                          "abs"))
    lines = format_dimension_table(rows).splitlines()
    flagged = [r.dim for r in rows if r.printed_formula_flag]
    if flagged:
        lines.append(f"printed dimension formula disagrees with the exact kernel for m = {flagged} (flagged, not adopted)")
    return reports, lines


def cmd_restriction(args) -> tuple[list[VerificationReport], list[str]]:
    spec = load_spec(args.spec)
    chart = spec.to_chart()
    rule = QuadratureRule(resolve_order(args.order, spec))
    sign = 1 if args.sign == "+" else -1
    report = restriction_product_check(chart, sign, rule, tol=args.tol)
    per_nu = report.details.get("per_nu", {})
    lines = [f"    nu={k}: max deviation {v:.3g}" for k, v in sorted(per_nu.items())]
    return [report], lines


# --------------------------------------------------------------------------
# argument parsing and output
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--report", type=Path, help="write the JSON report array to this file")
    common.add_argument("--json", action="store_true", help="print the JSON report array instead of text")
    common.add_argument("--no-timing", action="store_true", help="omit wall-clock seconds (byte-stable reports)")

    parser = argparse.ArgumentParser(prog="curvlab", description="Curvature functional verification tools.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gauss-bonnet", parents=[common], help="integrate the Euler form and compare with chi")
    p.add_argument("--spec", required=True, help="spec file or catalog name")
    p.add_argument("--order", type=_positive_int)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_gauss_bonnet)

    p = sub.add_parser("euler-lagrange", parents=[common], help="finite-difference check of the variational identity")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--fd-step", type=float, default=DEFAULT_FD_STEP)
    p.add_argument("--boundary", action="store_true", help="require the boundary form of the identity")
    p.add_argument("--order", type=_positive_int)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_euler_lagrange)

    p = sub.add_parser("identities", parents=[common], help="universal curvature identities on random tensors")
    p.add_argument("--dim", type=int, required=True, choices=range(1, 7))
    p.add_argument("--samples", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--signature", help="riemannian, lorentzian, split or a +/- string")
    p.add_argument("--as-printed", action="store_true", help="use the dimension-5 coefficients as printed")
    p.set_defaults(func=cmd_identities)

    p = sub.add_parser("invariant-dims", parents=[common], help="exact invariant kernel dimensions")
    p.add_argument("--max-dim", type=int, required=True, choices=range(1, 7))
    p.add_argument("--signature", default="riemannian", help="riemannian, lorentzian or split")
    p.set_defaults(func=cmd_invariant_dims)

    p = sub.add_parser("restriction-check", parents=[common], help="product-with-circle restriction property")
    p.add_argument("--spec", required=True)
    p.add_argument("--sign", choices=("+", "-"), default="+")
    p.add_argument("--order", type=_positive_int)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_restriction)
    return parser


def _report_entry(report: VerificationReport, timing: bool) -> dict:
    entry = report.to_dict(timing=timing)
    flag = report.details.get("flag")
    if flag:
        entry["flag"] = flag
    return entry


def render_json(reports: Sequence[VerificationReport], timing: bool) -> str:
    return json.dumps([_report_entry(r, timing) for r in reports], indent=2, allow_nan=False) + "\n"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        reports, lines = args.func(args)
        reports = [calibration_report()] + reports
    except (CurvlabError, OSError) as exc:
        print(f"curvlab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001 - any other failure is internal by contract
        print(f"curvlab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL

    timing = not args.no_timing
    text = render_json(reports, timing)
    if args.report is not None:
        try:
            args.report.write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"curvlab: error: cannot write report: {exc}", file=sys.stderr)
            return EXIT_INPUT
    if args.json:
        sys.stdout.write(text)
    else:
        for r in reports:
            print(r.summary() + (f"  [{r.details['flag']}]" if r.details.get("flag") else ""))
        for line in lines:
            print(line)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
