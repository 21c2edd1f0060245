"""Command-line front end.

Subcommands::

    walkersym tensors MANIFEST
    walkersym classify MANIFEST --field NAME
    walkersym verify-paper [--family Nb|Pc|CW|cflat] [--self-test]
    walkersym oracle-check MANIFEST [--points N]

Shared flags: ``--format text|records``, ``--seed N``, ``--tol-override T``.
Exit codes: 0 ok, 2 input error, 3 undecided verdict, 4 verification failure.
"""

from __future__ import annotations

import argparse
import contextlib
import shlex
import sys
from typing import Iterable, Sequence

from . import symexpr
from .classifier import classify
from .families import FamilyError
from .manifest import Manifest, ManifestError, load_manifest
from .numeric_oracle import REL_TOL, OracleError, oracle_check
from .symexpr import Trilean
from .verification import verify_theorems
from .walker_geometry import (
    GeometryError, curvature_tensors, is_conformally_flat, metric_and_inverse, christoffel, ricci_and_scalar,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_UNDECIDED = 3
EXIT_FAILED = 4

FAMILY_CHOICES = ("Nb", "Pc", "CW", "cflat")


def format_record(rec: dict) -> str:
    """One ``key=value`` line; values with spaces or quotes are shell-quoted."""
    return " ".join(f"{k}={shlex.quote(str(v))}" for k, v in rec.items())


def parse_record(line: str) -> dict[str, str]:
    out = {}
    for token in shlex.split(line):
        key, _, value = token.partition("=")
        out[key] = value
    return out


class Output:
    """Collects text lines and machine records for one run."""

    def __init__(self):
        self.lines: list[str] = []
        self.records: list[dict] = []

    def text(self, line: str = ""):
        self.lines.append(line)

    def record(self, **fields):
        self.records.append({k: v for k, v in fields.items() if v is not None})

    def extend_records(self, recs: Iterable[dict]):
        self.records.extend(recs)

    def render(self, fmt: str) -> str:
        if fmt == "records":
            return "".join(format_record(r) + "\n" for r in self.records)
        return "".join(line + "\n" for line in self.lines)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def run_tensors(manifest: Manifest, seed: int = 0) -> tuple[Output, int]:
    W = manifest.manifold(seed)
    out = Output()
    out.text(f"f = {symexpr.render(W.f)}")
    out.record(kind="manifold", f=symexpr.render(W.f))
    for a in W.assumptions:
        out.text(f"assumption: {a}")
        out.record(kind="assumption", text=a)
    for w in W.warnings:
        out.text(f"warning: {w}")
        out.record(kind="warning", text=w)
    g, ginv = metric_and_inverse(W)
    R, nR, omega = curvature_tensors(W, seed)
    rho, tau = ricci_and_scalar(W)
    for T in (g, ginv, christoffel(W), R, nR, omega, rho):
        out.text(f"[{T.name}]" + (f" (defined where {T.guard})" if T.guard else ""))
        for line in T.format():
            out.text(line)
        for idx, e in T.nonzero():
            out.record(kind="component", tensor=T.name, label=T.label(idx), value=symexpr.render(e))
    out.text(f"tau = {symexpr.render(tau)}")
    out.record(kind="scalar", name="tau", value=symexpr.render(tau))
    cf = is_conformally_flat(W, seed)
    verdict = {Trilean.ZERO: "yes", Trilean.NONZERO: "no", Trilean.UNKNOWN: "unknown"}[cf]
    out.text(f"conformally_flat: {verdict}")
    out.record(kind="conformal_flatness", value=verdict)
    return out, EXIT_OK


def run_classify(manifest: Manifest, field_name: str, seed: int = 0) -> tuple[Output, int]:
    W = manifest.manifold(seed)
    X = manifest.field(field_name)
    report = classify(W, X, manifest.rules, seed)
    out = Output()
    out.text(f"f = {symexpr.render(W.f)}")
    for line in report.text_lines():
        out.text(line)
    out.record(kind="field", name=field_name, components=X.render(), f=symexpr.render(W.f))
    out.extend_records(report.records())
    return out, EXIT_OK if report.decided else EXIT_UNDECIDED


def run_verify_paper(seed: int = 0, family: str | None = None, self_test: bool = False) -> tuple[Output, int]:
    report = verify_theorems(seed=seed, family=family, inject_fault=self_test)
    out = Output()
    for line in report.text_lines():
        out.text(line)
    out.extend_records(report.records())
    return out, report.exit_code


def run_oracle_check(manifest: Manifest, points: int | None = None, seed: int | None = None,
                     tol: float = REL_TOL) -> tuple[Output, int]:
    W = manifest.manifold(seed or 0)
    plan = manifest.sample_plan(seed, points)
    report = oracle_check(W, manifest.all_fields(), plan, tol=tol, label=symexpr.render(W.f))
    out = Output()
    out.text(f"f = {report.label}")
    out.text(f"points: {report.n_points} (seed {plan.seed}, box [-{plan.box:g},{plan.box:g}]^3, "
             f"|f_xx| >= {plan.fxx_min:g})")
    if report.realization.params or report.realization.functions:
        out.text(f"realization: {report.realization.describe()}")
    out.record(kind="oracle", f=report.label, points=report.n_points, seed=plan.seed, tol=f"{tol:g}")
    for c in report.comparisons:
        rec = c.record()
        out.text(f"{rec['verdict'].upper()} {c.subject}: error {rec['error']} "
                 f"(half step {rec['error_half_h']}, ratio {rec['ratio']}) worst at (t,x,y)=({rec['point']})")
        out.record(kind="comparison", **rec)
    ok = report.passed
    out.text(f"summary: {sum(c.passed for c in report.comparisons)}/{len(report.comparisons)} comparisons passed")
    out.record(kind="summary", result="pass" if ok else "fail")
    return out, EXIT_OK if ok else EXIT_FAILED


# --------------------------------------------------------------------------
# argument handling
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "records"), default="text")
    common.add_argument("--seed", type=int, default=None, help="seed for numeric probing and sampling")
    common.add_argument("--tol-override", type=float, default=None, metavar="TOL",
                        help="numeric tolerance (oracle relative tolerance for oracle-check)")

    parser = argparse.ArgumentParser(prog="walkersym", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("tensors", parents=[common], help="print metric, connection and curvature")
    p.add_argument("manifest")
    p = sub.add_parser("classify", parents=[common], help="classify a named field of the manifest")
    p.add_argument("manifest")
    p.add_argument("--field", required=True)
    p = sub.add_parser("verify-paper", parents=[common], help="check every classification claim")
    p.add_argument("--family", choices=FAMILY_CHOICES)
    p.add_argument("--self-test", action="store_true",
                   help="flip the sign of one generator; the run must then fail")
    p = sub.add_parser("oracle-check", parents=[common], help="compare symbolic and finite-difference tensors")
    p.add_argument("manifest")
    p.add_argument("--points", type=int, default=None)
    return parser


def _dispatch(args) -> tuple[Output, int]:
    seed = 0 if args.seed is None else args.seed
    if args.command == "verify-paper":
        return run_verify_paper(seed, args.family, args.self_test)
    manifest = load_manifest(args.manifest)
    if args.command == "tensors":
        return run_tensors(manifest, seed)
    if args.command == "classify":
        return run_classify(manifest, args.field, seed)
    tol = REL_TOL if args.tol_override is None else args.tol_override
    if args.points is not None and args.points < 1:
        raise ManifestError("--points must be positive")
    return run_oracle_check(manifest, args.points, args.seed, tol)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol_override is not None and not args.tol_override > 0:
        parser.error("--tol-override must be positive")
    scope = contextlib.nullcontext()
    if args.tol_override is not None and args.command != "oracle-check":
        scope = symexpr.probe_tolerance(args.tol_override)
    try:
        with scope:
            out, code = _dispatch(args)
    except (ManifestError, symexpr.SymExprError, GeometryError, FamilyError, OracleError,
            symexpr.EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(out.render(args.format))
    sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
