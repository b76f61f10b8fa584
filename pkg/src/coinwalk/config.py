"""Experiment configuration: JSON schema, validation, walk construction."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import GeneralizedWalk, ShiftTable, WalkChannel, compose
from .ensembles import build_ensemble
from .errors import ConfigError

TASKS = (
    "certify",
    "drift",
    "diffusion",
    "simulate",
    "montecarlo",
    "figure1",
    "figure2",
    "figure3",
    "figure4",
)


@dataclass
class ExperimentConfig:
    task: str
    walk: dict | None = None
    composition: list | None = None
    t: int = 100
    n_traj: int = 10_000
    seed: int = 0
    tol: float = 1e-10
    tol_explicit: bool = False
    coherence_tol: float = 1e-12
    block_cap: int = 2_000_000
    initial_coin: list | None = None
    grid: dict = field(default_factory=dict)
    out: str = "results"


def _fail(field_name: str, message: str) -> None:
    raise ConfigError(f"{field_name}: {message}")


def parse_config(data: dict, path: str = "<config>") -> ExperimentConfig:
    if not isinstance(data, dict):
        _fail(path, "configuration must be a JSON object")
    task = data.get("task")
    if task not in TASKS:
        _fail("task", f"must be one of {', '.join(TASKS)}; got {task!r}")
    cfg = ExperimentConfig(task=task)
    if "walk" in data:
        cfg.walk = _check_walk_spec(data["walk"], "walk")
    if "composition" in data:
        comp = data["composition"]
        if not isinstance(comp, list) or not comp:
            _fail("composition", "must be a nonempty list of walk objects")
        cfg.composition = [
            _check_walk_spec(w, f"composition[{i}]") for i, w in enumerate(comp)
        ]
    for key, caster, cond, desc in (
        ("t", int, lambda v: v >= 0, "a nonnegative integer"),
        ("n_traj", int, lambda v: v >= 1, "a positive integer"),
        ("seed", int, lambda v: True, "an integer"),
        ("tol", float, lambda v: 0 < v < 1, "a float in (0, 1)"),
        ("coherence_tol", float, lambda v: 0 <= v < 1, "a float in [0, 1)"),
        ("block_cap", int, lambda v: v >= 1, "a positive integer"),
    ):
        if key in data:
            try:
                val = caster(data[key])
            except (TypeError, ValueError):
                _fail(key, f"must be {desc}; got {data[key]!r}")
            if not cond(val):
                _fail(key, f"must be {desc}; got {data[key]!r}")
            setattr(cfg, key, val)
            if key == "tol":
                cfg.tol_explicit = True
    if "initial_coin" in data:
        cfg.initial_coin = data["initial_coin"]
    if "grid" in data:
        if not isinstance(data["grid"], dict):
            _fail("grid", "must be an object of named grids")
        for k, v in data["grid"].items():
            if isinstance(v, list) and not v:
                _fail(f"grid.{k}", "grids must be nonempty")
        cfg.grid = dict(data["grid"])
    if "out" in data:
        cfg.out = str(data["out"])
    return cfg


def _check_walk_spec(spec, where: str) -> dict:
    if not isinstance(spec, dict):
        _fail(where, "must be an object with 'shift' and 'ensemble'")
    if "shift" not in spec:
        _fail(f"{where}.shift", "missing shift table")
    if "ensemble" not in spec:
        _fail(f"{where}.ensemble", "missing ensemble descriptor")
    return spec


def load_config(path: str) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(data, path)


def build_walk_from_spec(spec: dict, where: str = "walk"):
    try:
        shift = ShiftTable.make(spec["shift"])
    except (ValueError, TypeError) as exc:
        _fail(f"{where}.shift", str(exc))
    try:
        ensemble = build_ensemble(spec["ensemble"])
    except (KeyError, ValueError, TypeError) as exc:
        _fail(f"{where}.ensemble", str(exc))
    try:
        return WalkChannel(shift, ensemble)
    except ValueError as exc:
        _fail(where, str(exc))


def build_walk(cfg: ExperimentConfig):
    """WalkChannel or GeneralizedWalk from the config."""
    if cfg.composition:
        factors = [
            build_walk_from_spec(w, f"composition[{i}]")
            for i, w in enumerate(cfg.composition)
        ]
        try:
            return compose(factors)
        except ValueError as exc:
            _fail("composition", str(exc))
    if cfg.walk is None:
        _fail("walk", "task requires a walk (or composition)")
    return build_walk_from_spec(cfg.walk, "walk")


def initial_coin_vector(cfg: ExperimentConfig, coin_dim: int) -> np.ndarray:
    """Pure initial coin vector; defaults to the uniform superposition."""
    if cfg.initial_coin is None:
        vec = np.ones(coin_dim, dtype=complex)
    else:
        raw = cfg.initial_coin
        if len(raw) != coin_dim:
            _fail(
                "initial_coin",
                f"needs {coin_dim} [re, im] pairs; got {len(raw)}",
            )
        try:
            vec = np.array([complex(re, im) for re, im in raw])
        except (TypeError, ValueError):
            _fail("initial_coin", "entries must be [re, im] pairs")
    nrm = np.linalg.norm(vec)
    if nrm < 1e-12:
        _fail("initial_coin", "must be a nonzero vector")
    return vec / nrm


def parse_grid_flag(text: str) -> tuple[str, object]:
    """Parse ``key=a:b:n`` (linspace), ``key=v1,v2,...`` (list) or ``key=n``."""
    if "=" not in text:
        raise ConfigError(f"grid: expected key=spec; got {text!r}")
    key, _, spec = text.partition("=")
    key = key.strip()
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid.{key}: expected start:stop:count")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"grid.{key}: {exc}") from exc
        if count < 1:
            raise ConfigError(f"grid.{key}: count must be >= 1")
        return key, np.linspace(start, stop, count).tolist()
    if "," in spec:
        try:
            return key, [float(v) for v in spec.split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"grid.{key}: {exc}") from exc
    try:
        return key, int(spec)
    except ValueError:
        pass
    try:
        return key, float(spec)
    except ValueError as exc:
        raise ConfigError(f"grid.{key}: not a number, list or range") from exc
