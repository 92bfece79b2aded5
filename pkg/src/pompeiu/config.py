"""Problem files: JSON schema, defaults and builders for the command line."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .contour import Contour, build_distance_field, extract_level_set
from .errors import ConfigError
from .functions import FunctionSpec, make
from .matrix import (Spectrum, as_matrix, from_eigenstructure, matrix_from_json,
                     random_conditioned, random_unitary)

DEFAULT_QUADRATURE = {"contour_nodes": 512, "grid_resolution": 512, "patch_radius_cells": 3.0}

DEFAULT_TOLERANCES = {
    "holomorphic": 1e-8,        # holomorphic_fc vs oracle, relative
    "trajectory": 1e-6,         # circle vs level-set contour
    "smooth": 1e-3,             # smooth_fc vs oracle and cross-validation
    "identity": 1e-8,           # sum of projectors
    "idempotence": 1e-6,
    "reconstruction": 1e-6,
    "spectral_identity": 1e-8,  # int lambda dmu = Lambda(A x)
    "bilinearity": 1e-12,
    "measure": 1e-12,           # mu(E) = Lambda(nu(E) x), relative
    "multiplicativity": 1e-6,
    "continuous": 5e-2,         # Cauchy tolerance of mollified iterates
    "cauchy_noise": 1e-9,
}

_complex = {"oneOf": [
    {"type": "number"},
    {"type": "object", "properties": {"re": {"type": "number"}, "im": {"type": "number"}},
     "required": ["re"], "additionalProperties": False},
]}

_matrix_json = {
    "type": "object",
    "properties": {"dim": {"type": "integer", "minimum": 1},
                   "re": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                   "im": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}},
    "required": ["dim", "re"],
    "additionalProperties": False,
}

_set = {"type": "object", "minProperties": 1, "maxProperties": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "matrix": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "inline": _matrix_json,
                "eigenvalues": {"type": "array", "items": _complex, "minItems": 1},
                "V": _matrix_json,
                "basis": {"enum": ["identity", "unitary", "conditioned"]},
                "condition": {"type": "number", "minimum": 1},
            },
            "required": ["eigenvalues"],
        },
        "function": {
            "type": "object", "additionalProperties": False,
            "properties": {"name": {"type": "string"}, "params": {"type": "object"}},
            "required": ["name"],
        },
        "quadrature": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "contour_nodes": {"type": "integer", "minimum": 8},
                "grid_resolution": {"type": "integer", "minimum": 16},
                "patch_radius_cells": {"type": "number", "exclusiveMinimum": 0},
                "levels": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
            },
        },
        "contour": {
            "type": "object", "additionalProperties": False,
            "properties": {"kind": {"enum": ["level", "circles"]},
                           "level": {"type": "number", "exclusiveMinimum": 0}},
        },
        "tolerances": {
            "type": "object", "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in DEFAULT_TOLERANCES},
        },
        "eval": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "calculus": {"enum": ["auto", "holomorphic", "smooth", "continuous"]},
                "mollifier": {
                    "type": "object", "additionalProperties": False,
                    "properties": {"widths": {"type": "array", "minItems": 1,
                                              "items": {"type": "number", "exclusiveMinimum": 0}},
                                   "resolution": {"type": "integer", "minimum": 16}},
                },
            },
        },
        "converge": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "study": {"enum": ["boundary_limit", "truncation"]},
                "epsilons": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "top": {"type": "number", "exclusiveMinimum": 0},
                "order": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "measure": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "radius": {"type": "number", "exclusiveMinimum": 0},
                "trials": {"type": "integer", "minimum": 1},
                "sets": {"type": "array", "items": _set},
                "functional": {"type": "array", "items": _complex},
                "vector": {"type": "array", "items": _complex},
            },
        },
        "verify": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "checks": {"type": "array", "items": {"type": "string"}},
                "fixtures": {"type": "array", "items": {"type": "string"}},
                "trials": {"type": "integer", "minimum": 1},
            },
        },
    },
}


def parse_complex(v) -> complex:
    if isinstance(v, dict):
        return complex(v.get("re", 0.0), v.get("im", 0.0))
    return complex(v)


def load_config(path: Optional[str]) -> dict:
    """Read and validate a problem file; ``None`` gives an empty config."""
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None


def tolerances(cfg: dict) -> dict:
    return DEFAULT_TOLERANCES | cfg.get("tolerances", {})


def quadrature(cfg: dict) -> dict:
    return DEFAULT_QUADRATURE | cfg.get("quadrature", {})


@dataclass
class Problem:
    a: np.ndarray
    spec: Spectrum


def build_matrix(cfg: dict, rng: np.random.Generator) -> Problem:
    """Inline matrices need their eigenvalues; recipes also carry the oracle."""
    m = cfg.get("matrix")
    if m is None:
        raise ConfigError("config has no matrix block")
    lam = [parse_complex(v) for v in m["eigenvalues"]]
    n = len(lam)
    try:
        if "inline" in m:
            if "V" in m or "basis" in m:
                raise ConfigError("an inline matrix takes no V or basis")
            a = matrix_from_json(m["inline"])
            if a.shape[0] != n:
                raise ConfigError(f"{n} eigenvalues given for a {a.shape[0]}x{a.shape[0]} matrix")
            return Problem(a, Spectrum.from_values(lam))
        if "V" in m:
            v = matrix_from_json(m["V"])
        else:
            basis = m.get("basis", "identity")
            if basis == "identity":
                v = np.eye(n, dtype=complex)
            elif basis == "unitary":
                v = random_unitary(n, rng)
            else:
                v = random_conditioned(n, float(m.get("condition", 10.0)), rng)
        if v.shape != (n, n):
            raise ConfigError(f"V must be {n}x{n}")
        a, spec = from_eigenstructure(lam, v)
        return Problem(as_matrix(a), spec)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad matrix: {exc}") from exc


def build_function(cfg: dict) -> FunctionSpec:
    f = cfg.get("function")
    if f is None:
        raise ConfigError("config has no function block")
    params = dict(f.get("params", {}))
    for k, v in list(params.items()):
        if isinstance(v, dict):
            params[k] = parse_complex(v)
        elif isinstance(v, list):
            params[k] = [parse_complex(x) for x in v]
    try:
        return make(f["name"], **params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def default_level(spec: Spectrum) -> float:
    gap = spec.min_gap()
    return 0.5 if not np.isfinite(gap) else min(0.5, 0.4 * gap)


def build_contour(cfg: dict, spec: Spectrum, level: Optional[float] = None) -> Contour:
    quad = quadrature(cfg)
    block = cfg.get("contour", {})
    t = level if level is not None else block.get("level", default_level(spec))
    if block.get("kind", "level") == "circles":
        return Contour.circles(spec.eigenvalues, t, quad["contour_nodes"])
    fld = build_distance_field(spec, resolution=quad["grid_resolution"], max_level=t)
    return extract_level_set(fld, t, quad["contour_nodes"])
