"""Experiment configuration: TOML file, schema validation, CGAS_* overrides."""
from __future__ import annotations

import copy
import hashlib
import json
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Optional

import jsonschema

try:
    import tomllib as tomli
except ModuleNotFoundError:  # Python < 3.11
    import tomli

from .potential import PERTURBATIONS, Potential, make_builtin, perturb

ENV_PREFIX = "CGAS_"

DEFAULTS = {
    "output": "runs/default",
    "potential": {"name": "ginibre", "params": {}},
    "grid": {"half_width": 2.0, "resolution": 256, "method": "auto", "tol": 1e-7},
    "sampler": {
        "n": [32],
        "beta": 1.0,
        "sweeps": 20000,
        "burn_in": 2000,
        "thin": 1,
        "seed": 12345,
        "chains": 2,
        "step_scale": 1.0,
        "check_every": 1000,
        "snapshots": True,
    },
    "analysis": {
        "c_fraction": 0.9,
        "mu": 0.0,
        "t_grid": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
        "r_grid": [0.5, 0.75, 1.0],
        "test_functions": ["one", "abs2_clipped", "re_clipped", "im_clipped",
                           "bump_center", "bump_offset", "bump_edge"],
        "decay_window": [0.02, 0.08],
        "radial_bins": 8,
        "partition_n": [1, 2],
    },
    "exact": {"n": [64, 256, 1024], "draws": 20000, "seed": 7, "loglog_coeff": 1.0,
              "profile_points": 200},
}

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "output": {"type": "string"},
        "potential": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": ["ginibre", "power", "elliptic"]},
                "params": {"type": "object", "additionalProperties": _num},
                "perturbation": {
                    "type": "object",
                    "required": ["name"],
                    "properties": {
                        "name": {"enum": sorted(PERTURBATIONS)},
                        "params": {"type": "object"},
                    },
                },
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "half_width": _pos,
                "resolution": {"type": "integer", "minimum": 128},
                "method": {"enum": ["auto", "grid", "radial"]},
                "tol": _pos,
            },
        },
        "sampler": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "array", "items": _posint, "minItems": 1},
                "beta": {"oneOf": [_pos, {"type": "object", "additionalProperties": _pos}]},
                "sweeps": _posint,
                "burn_in": {"type": "integer", "minimum": 0},
                "thin": _posint,
                "seed": {"type": "integer", "minimum": 0},
                "chains": _posint,
                "step_scale": _pos,
                "check_every": _posint,
                "snapshots": {"type": "boolean"},
            },
        },
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "c_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "mu": {"type": "number", "minimum": 0},
                "t_grid": {"type": "array", "items": _num, "minItems": 1},
                "r_grid": {"type": "array", "items": _pos},
                "test_functions": {"type": "array", "items": {"type": "string"}},
                "decay_window": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
                "radial_bins": _posint,
                "partition_n": {"type": "array", "items": {"enum": [1, 2, 3]}},
            },
        },
        "exact": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "array", "items": _posint},
                "draws": _posint,
                "seed": {"type": "integer", "minimum": 0},
                "loglog_coeff": _num,
                "profile_points": _posint,
            },
        },
    },
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "params":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_scalar(text: str):
    try:
        return tomli.loads(f"v = {text}")["v"]
    except tomli.TOMLDecodeError:
        return text


def env_overrides(environ=None) -> dict:
    """CGAS_SECTION__KEY=value pairs as a nested dict (values parsed as TOML)."""
    environ = os.environ if environ is None else environ
    out: dict = {}
    for key, val in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        path = [p.lower() for p in key[len(ENV_PREFIX):].split("__") if p]
        if not path:
            continue
        node = out
        for p in path[:-1]:
            node = node.setdefault(p, {})
        node[path[-1]] = _parse_scalar(val)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    source: Optional[str] = None
    notes: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def hash(self) -> str:
        return config_hash(self.raw)

    def beta_for(self, n: int) -> float:
        b = self.raw["sampler"]["beta"]
        if isinstance(b, dict):
            if str(n) not in b:
                raise ConfigError(f"sampler.beta has no entry for n={n}")
            return float(b[str(n)])
        return float(b)

    def potential(self, n: Optional[int] = None) -> Potential:
        entry = self.raw["potential"]
        p = make_builtin(entry["name"], **entry.get("params", {}))
        pert = entry.get("perturbation")
        if pert is not None:
            if n is None:
                raise ConfigError("perturbed potential requires the particle count")
            u = PERTURBATIONS[pert["name"]](**pert.get("params", {}))
            p = perturb(p, u, n=n)
        return p

    def base_potential(self) -> Potential:
        entry = self.raw["potential"]
        return make_builtin(entry["name"], **entry.get("params", {}))


def config_hash(raw: dict) -> str:
    return hashlib.sha256(json.dumps(raw, sort_keys=True).encode()).hexdigest()


def validate(raw: dict) -> None:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config field {where}: {exc.message}") from None


def regime_notes(raw: dict) -> list:
    """beta n / log n for each sampled n; warn when it is small."""
    notes = []
    s = raw["sampler"]
    for n in s["n"]:
        b = s["beta"][str(n)] if isinstance(s["beta"], dict) else s["beta"]
        if n < 2:
            continue
        ratio = b * n / math.log(n)
        notes.append(f"n={n}: beta n / log n = {ratio:.3g}")
        if ratio < 5:
            warnings.warn(f"n={n}: beta n / log n = {ratio:.3g} is small for localization tests",
                          stacklevel=3)
    return notes


def load_config(path: Optional[str] = None, environ=None, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Defaults, then the TOML file, then CGAS_* variables, then ``overrides``."""
    raw = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = _merge(raw, tomli.load(fh))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    raw = _merge(raw, env_overrides(environ))
    if overrides:
        raw = _merge(raw, overrides)
    validate(raw)
    b = raw["sampler"]["beta"]
    if isinstance(b, dict):
        missing = [n for n in raw["sampler"]["n"] if str(n) not in b]
        if missing:
            raise ConfigError(f"config field sampler/beta: no entry for n={missing}")
    return ExperimentConfig(raw, path, regime_notes(raw))
