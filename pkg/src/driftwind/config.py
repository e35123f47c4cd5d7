"""Run configuration: a single JSON document that pins every knob and seed.

The canonical form fills all defaults and sorts keys, so
parse(serialize(config)) round-trips exactly and the content hash names
the run directory (identical configs reuse cached fields).
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .arrows import (
    IID,
    Arrow,
    ArrowFieldSpec,
    Constant,
    ProductSystem,
    RunSchedule,
    double_exponential_lengths,
)
from .flow import IntegratorSpec
from .maps import Rotation

__all__ = [
    "ConfigError",
    "DEFAULT_CONFIG",
    "load_config",
    "parse_config",
    "serialize_config",
    "config_hash",
    "make_arrow_spec",
    "make_integrator_spec",
]


class ConfigError(ValueError):
    """User-facing configuration problem (exit code 1)."""


DEFAULT_CONFIG = {
    "delta": 0.0625,
    "seed": 20240808,
    "arrows": {"kind": "run_schedule", "lengths": "double_exponential", "phase": -20},
    "kernel": {"tolerance": 1e-8},
    "grid": {"resolution": 512, "mode": "cached"},
    "warp": {
        "enabled": False,
        "intensity": 1.0,
        "seed_x": 101,
        "seed_y": 102,
        "lattice_hook": False,
    },
    "integrator": {
        "step": 1e-3,
        "crossing_tol": 1e-10,
        "max_time": 50.0,
        "sample_stride": 10,
    },
    "spacetime": {"u0": 0.0, "u1": 1.0},
    "output_dir": "runs",
}


_FREE_FORM_SECTIONS = {"arrows"}  # variant-shaped; validated by make_arrow_spec


def _merge_defaults(user: dict, defaults: dict, free_form: frozenset = frozenset()) -> dict:
    out = {}
    for key, dv in defaults.items():
        if key in user:
            uv = user[key]
            if isinstance(dv, dict) and key not in free_form:
                out[key] = _merge_defaults(uv, dv)
            else:
                out[key] = json.loads(json.dumps(uv))
        else:
            out[key] = json.loads(json.dumps(dv))  # deep copy
    for key in user:
        if key not in defaults:
            raise ConfigError(f"unknown config key: {key!r}")
    return out


def parse_config(doc: dict) -> dict:
    """Fill defaults and validate; returns the canonical config dict."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    cfg = _merge_defaults(doc, DEFAULT_CONFIG, frozenset(_FREE_FORM_SECTIONS))
    if not 0.0 < cfg["delta"] < 0.1:
        raise ConfigError(f"delta must satisfy 0 < delta < 1/10, got {cfg['delta']}")
    g = cfg["grid"]
    if g["mode"] not in ("cached", "quadrature"):
        raise ConfigError(f"grid.mode must be 'cached' or 'quadrature', got {g['mode']!r}")
    if not 16 <= int(g["resolution"]) <= 4096:
        raise ConfigError("grid.resolution must be in [16, 4096]")
    if cfg["kernel"]["tolerance"] <= 0:
        raise ConfigError("kernel.tolerance must be positive")
    st = cfg["spacetime"]
    if not 0.0 <= st["u0"] < st["u1"]:
        raise ConfigError("spacetime needs 0 <= u0 < u1")
    w = cfg["warp"]
    if w["intensity"] <= 0:
        raise ConfigError("warp.intensity must be positive")
    it = cfg["integrator"]
    if it["step"] <= 0 or it["crossing_tol"] <= 0 or it["max_time"] <= 0:
        raise ConfigError("integrator step, crossing_tol and max_time must be positive")
    make_arrow_spec(cfg)  # validates the arrows section
    return cfg


def load_config(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    return parse_config(doc)


def serialize_config(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, indent=2) + "\n"


def config_hash(cfg: dict) -> str:
    """Content hash of the physics config; where outputs land is excluded."""
    body = {k: v for k, v in cfg.items() if k != "output_dir"}
    canon = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


_LENGTH_RULES = {
    "double_exponential": double_exponential_lengths,
}


def make_arrow_spec(cfg: dict) -> ArrowFieldSpec:
    a = cfg["arrows"]
    kind = a.get("kind")
    if kind == "constant":
        arrow = a.get("arrow", "right")
        if arrow not in ("right", "up"):
            raise ConfigError(f"arrows.arrow must be 'right' or 'up', got {arrow!r}")
        return Constant(Arrow.RIGHT if arrow == "right" else Arrow.UP)
    if kind == "iid":
        p = a.get("p_right", 0.5)
        if not 0.0 <= p <= 1.0:
            raise ConfigError("arrows.p_right must be in [0, 1]")
        return IID(p_right=p, seed=int(a.get("seed", cfg["seed"])))
    if kind == "run_schedule":
        rule = a.get("lengths", "double_exponential")
        if rule not in _LENGTH_RULES:
            raise ConfigError(
                f"arrows.lengths must be one of {sorted(_LENGTH_RULES)}, got {rule!r}"
            )
        return RunSchedule(_LENGTH_RULES[rule], phase=int(a.get("phase", 0)))
    if kind == "product":
        theta1 = a.get("theta1", 0.381966011250105)
        theta2 = a.get("theta2", 0.267949192431123)
        threshold = a.get("threshold", 0.5)
        return ProductSystem(
            point_x=float(a.get("point_x", 0.0)),
            point_y=float(a.get("point_y", 0.0)),
            map1=Rotation(float(theta1)),
            map2=Rotation(float(theta2)),
            classifier=lambda x, y, _c=float(threshold): (
                Arrow.RIGHT if (x + y) % 1.0 < _c else Arrow.UP
            ),
        )
    raise ConfigError(f"arrows.kind must be one of constant/iid/run_schedule/product, got {kind!r}")


def make_integrator_spec(cfg: dict, max_time: float | None = None) -> IntegratorSpec:
    it = cfg["integrator"]
    return IntegratorSpec(
        step=float(it["step"]),
        crossing_tol=float(it["crossing_tol"]),
        max_time=float(max_time if max_time is not None else it["max_time"]),
        sample_stride=int(it["sample_stride"]),
    )
