"""Command-line front end.

Exit codes: 0 pass, 1 config/parse error, 2 unsupported model or failed
verdict, 3 numerical failure.  Output is a pure function of the config file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .asymptotics import approx_moments
from .config import ConfigError, RunConfig, load_config
from .diagnostics import assemble_report, condition_trends
from .expression import DomainError, ExpressionSyntaxError
from .karamata import classify
from .model import validate_model
from .oracle import exact_moments
from .quadrature import QuadratureError
from .tilt import InversionError, tilt_point

__all__ = ["main", "main_exit", "to_json", "EXIT_OK", "EXIT_CONFIG", "EXIT_UNSUPPORTED", "EXIT_NUMERICAL"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_UNSUPPORTED = 2
EXIT_NUMERICAL = 3


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def to_json(obj) -> str:
    """Deterministic JSON: shortest round-trip floats, non-finite values as null."""
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _emit(doc, out: Path | None, name: str):
    text = to_json(doc)
    sys.stdout.write(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")


def cmd_classify(cfg: RunConfig, out: Path | None) -> int:
    cls = classify(cfg.model, cfg.diagnostics.karamata)
    _emit(cls.to_dict(), out, "classify.json")
    return EXIT_OK if cls.supported else EXIT_UNSUPPORTED


def cmd_verify(cfg: RunConfig, out: Path | None) -> int:
    validation = validate_model(cfg.model)
    cls = classify(cfg.model, cfg.diagnostics.karamata)
    trends = list(cls.evidence)
    if validation.passed and cls.supported:
        trends.extend(condition_trends(cfg.model, cls, cfg.diagnostics))
    passed = validation.passed and cls.supported and all(r.passed for r in trends)
    doc = {
        "model": cfg.model.to_dict(),
        "validation": validation.to_dict(),
        "variation": cls.to_dict(),
        "trends": [r.to_dict() for r in trends],
        "passed": passed,
    }
    _emit(doc, out, "verify.json")
    return EXIT_OK if passed else EXIT_UNSUPPORTED


def cmd_evaluate(cfg: RunConfig, t: float, out: Path | None) -> int:
    validation = validate_model(cfg.model)
    if not validation.passed:
        _emit({"t": t, "validation": validation.to_dict(), "notes": ["model failed validation"]},
              out, "evaluate.json")
        return EXIT_UNSUPPORTED
    diag = cfg.diagnostics
    notes = []
    exact = exact_moments(cfg.model, t, diag.j_max, diag.quadrature_tol)
    try:
        tp = tilt_point(cfg.model, t)
    except InversionError as exc:
        tp = None
        notes.append(f"no saddlepoint: {exc}")
    asym = None
    if tp is None or not t > diag.t_min:
        notes.append(f"asymptotic side omitted: t={t!r} is not above t_min={diag.t_min!r}")
    else:
        asym = approx_moments(cfg.model, t, diag.j_max, diag.t_min, tp)
    doc = {
        "t": t,
        "exact": exact.to_dict(),
        "asymptotic": asym.to_dict() if asym is not None else None,
        "tilt_point": tp.to_dict() if tp is not None else None,
        "notes": notes,
    }
    _emit(doc, out, "evaluate.json")
    return EXIT_OK


def cmd_report(cfg: RunConfig, out: Path) -> int:
    report = assemble_report(cfg.model, cfg.diagnostics)
    out.mkdir(parents=True, exist_ok=True)
    (out / cfg.report_name).write_text(to_json(report.to_dict()), encoding="utf-8")
    if cfg.write_csv:
        for s in report.ratio_series:
            (out / f"{cfg.csv_prefix}{s.label}.csv").write_text(s.to_csv(), encoding="utf-8")
    sys.stdout.write(f"{report.label}: {report.verdict}\n")
    for note in report.notes:
        sys.stdout.write(f"  {note}\n")
    return EXIT_OK if report.verdict == "PASS" else EXIT_UNSUPPORTED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tiltmoments",
                                description="Exact and asymptotic moments of exponentially tilted laws.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("classify", "classify h = g' as regularly or rapidly varying"),
        ("verify", "model validation and hypothesis checks only"),
        ("evaluate", "exact and asymptotic moments at one tilt"),
        ("report", "full diagnostics report (JSON + CSV)"),
    ]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="path to the JSON run configuration")
        sp.add_argument("--out", default=None if name != "report" else "out",
                        help="output directory" + (" (default: out)" if name == "report" else ""))
        if name == "evaluate":
            sp.add_argument("--t", required=True, type=float, help="tilt parameter")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    out = Path(args.out) if args.out is not None else None
    try:
        cfg = load_config(args.config)
    except ExpressionSyntaxError as exc:
        sys.stderr.write(f"error: invalid expression: {exc}\n")
        return EXIT_CONFIG
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    try:
        if args.command == "classify":
            return cmd_classify(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, out)
        if args.command == "evaluate":
            if not math.isfinite(args.t) or args.t < 0:
                sys.stderr.write("error: --t must be a finite number >= 0\n")
                return EXIT_CONFIG
            return cmd_evaluate(cfg, args.t, out)
        return cmd_report(cfg, out)
    except (QuadratureError, InversionError, DomainError, ArithmeticError) as exc:
        sys.stderr.write(f"numerical failure: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERICAL


def main_exit():
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
