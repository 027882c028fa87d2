"""Run configuration: a single JSON document, validated against CONFIG_SCHEMA."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .asymptotics import T_MIN
from .expression import ExpressionSyntaxError
from .diagnostics import DEFAULT_THRESHOLDS, DiagnosticsConfig
from .karamata import KaramataConfig
from .model import TailModel, builtin_model, model_from_strings

__all__ = ["CONFIG_SCHEMA", "ConfigError", "RunConfig", "load_config", "parse_config"]

MAX_J = 10


class ConfigError(ValueError):
    """The configuration is malformed or violates an invariant."""


_GRID = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "start": {"type": "number", "exclusiveMinimum": 0},
                "stop": {"type": "number", "exclusiveMinimum": 0},
                "points": {"type": "integer", "minimum": 1},
                "geometric": {"type": "boolean", "default": True},
            },
            "required": ["start", "stop", "points"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"values": {"type": "array", "items": {"type": "number"}, "minItems": 1}},
            "required": ["values"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "tiltmoments run configuration",
    "type": "object",
    "properties": {
        "model": {
            "oneOf": [
                {
                    "type": "object",
                    "properties": {
                        "builtin": {"enum": ["weibull", "expexp"]},
                        "params": {"type": "array", "items": {"type": "number"}},
                    },
                    "required": ["builtin"],
                    "additionalProperties": False,
                },
                {
                    "type": "object",
                    "properties": {
                        "g": {"type": "string"},
                        "q": {"type": "string", "default": "0"},
                        "domain_low": {"type": "number", "minimum": 0, "default": 0},
                        "label": {"type": "string"},
                    },
                    "required": ["g"],
                    "additionalProperties": False,
                },
            ]
        },
        "t_grid": _GRID,
        "j_max": {"type": "integer", "minimum": 2, "maximum": MAX_J, "default": 6},
        "t_min": {"type": "number", "minimum": 1},
        "tolerances": {
            "type": "object",
            "properties": {
                "quadrature": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "pass_thresholds": {
                    "type": "object",
                    "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in DEFAULT_THRESHOLDS},
                    "additionalProperties": False,
                },
                "noise_factor": {"type": "number", "minimum": 0},
                "ks_noise": {"type": "number", "minimum": 0},
                "ks_threshold": {"type": "number", "exclusiveMinimum": 0},
                "mgf_threshold": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "gaussian": {
            "type": "object",
            "properties": {"t_grid": _GRID, "lambda_grid": _GRID},
            "additionalProperties": False,
        },
        "karamata": {
            "type": "object",
            "properties": {
                "points_per_decade": {"type": "integer", "minimum": 4},
                "x_low": {"type": "number", "exclusiveMinimum": 0},
                "x_high": {"type": "number", "exclusiveMinimum": 0},
                "trend_epsilon": {"type": "number", "exclusiveMinimum": 0},
                "slope_cap": {"type": "number", "exclusiveMinimum": 0},
                "slope_growth": {"type": "number", "exclusiveMinimum": 0},
                "theta_tol": {"type": "number", "minimum": 0},
                "t2_low": {"type": "number", "exclusiveMinimum": 0},
                "t2_high": {"type": "number", "exclusiveMinimum": 0},
                "t2_points_per_decade": {"type": "integer", "minimum": 1},
                "identity_tol": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "lemma": {
            "type": "object",
            "properties": {
                "alphas": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "t_high": {"type": "number", "exclusiveMinimum": 1},
                "points_per_decade": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "outputs": {
            "type": "object",
            "properties": {
                "report": {"type": "string", "default": "report.json"},
                "csv": {"type": "boolean", "default": True},
                "csv_prefix": {"type": "string", "default": "series_"},
            },
            "additionalProperties": False,
        },
    },
    "required": ["model"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class RunConfig:
    model: TailModel
    diagnostics: DiagnosticsConfig
    report_name: str = "report.json"
    write_csv: bool = True
    csv_prefix: str = "series_"
    raw: dict = field(default_factory=dict, compare=False)


def _grid(spec: dict, what: str) -> tuple:
    if "values" in spec:
        vals = [float(v) for v in spec["values"]]
    else:
        a, b, n = float(spec["start"]), float(spec["stop"]), int(spec["points"])
        if n > 1 and not b > a:
            raise ConfigError(f"{what}: stop must exceed start")
        if spec.get("geometric", True):
            vals = np.geomspace(a, b, n).tolist() if n > 1 else [a]
        else:
            vals = np.linspace(a, b, n).tolist() if n > 1 else [a]
    if any(not math.isfinite(v) for v in vals):
        raise ConfigError(f"{what}: values must be finite")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ConfigError(f"{what}: values must be strictly increasing")
    return tuple(vals)


def _model(spec: dict) -> TailModel:
    if "builtin" in spec:
        return builtin_model(spec["builtin"], spec.get("params", []))
    return model_from_strings(spec["g"], spec.get("q", "0"), spec.get("domain_low", 0.0),
                              spec.get("label", ""))


def parse_config(doc: dict) -> RunConfig:
    """Validate ``doc`` and build the model and diagnostics settings.

    Raises ConfigError for schema violations and invalid builtin parameters;
    expression syntax errors propagate as ExpressionSyntaxError (with position).
    """
    try:
        jsonschema.validate(doc, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    try:
        model = _model(doc["model"])
    except ExpressionSyntaxError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    base = DiagnosticsConfig()
    kw: dict = {}
    if "t_grid" in doc:
        kw["t_grid"] = _grid(doc["t_grid"], "t_grid")
        if kw["t_grid"][0] <= 1.0:
            raise ConfigError("t_grid start must be > 1 (L(t) = (log t)^3 checks are enabled)")
    if "j_max" in doc:
        kw["j_max"] = int(doc["j_max"])
    if "t_min" in doc:
        kw["t_min"] = float(doc["t_min"])
    tol = doc.get("tolerances", {})
    if "quadrature" in tol:
        kw["quadrature_tol"] = tol["quadrature"]
    if "pass_thresholds" in tol:
        kw["thresholds"] = {**DEFAULT_THRESHOLDS, **{k: float(v) for k, v in tol["pass_thresholds"].items()}}
    for key in ("noise_factor", "ks_noise", "ks_threshold", "mgf_threshold"):
        if key in tol:
            kw[key] = float(tol[key])
    gauss = doc.get("gaussian", {})
    if "t_grid" in gauss:
        kw["gaussian_t_grid"] = _grid(gauss["t_grid"], "gaussian.t_grid")
    if "lambda_grid" in gauss:
        kw["lambda_grid"] = _grid(gauss["lambda_grid"], "gaussian.lambda_grid")
    lemma = doc.get("lemma", {})
    if "alphas" in lemma:
        kw["alphas"] = tuple(int(a) for a in lemma["alphas"])
    if "t_high" in lemma:
        kw["lemma_t_high"] = float(lemma["t_high"])
    if "points_per_decade" in lemma:
        kw["lemma_points_per_decade"] = int(lemma["points_per_decade"])
    if "karamata" in doc:
        kc = KaramataConfig(**doc["karamata"])
        if not kc.x_high >= 1e4 * kc.x_low:
            raise ConfigError("karamata: the x window must span at least 4 decades")
        kw["karamata"] = kc
    diag = DiagnosticsConfig(**{**base.__dict__, **kw})

    out = doc.get("outputs", {})
    return RunConfig(model, diag, out.get("report", "report.json"), out.get("csv", True),
                     out.get("csv_prefix", "series_"), doc)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(doc)
