"""Run configuration: flat JSON documents, presets, dB conversion and validation.

dB/dBm quantities are converted to linear values here and nowhere else.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .model import Duplex, SystemParams, db_to_linear
from .schemes import SchemeConfig
from .simulator import MeasureMode


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    lam: float
    alpha: float
    theta: float
    d: float
    beta: float
    duplex: str = "FULL"
    schemes: tuple[str, ...] = ("MAX_TX", "PC_TX", "RANDOM_TX/SOLVER", "CSMA_CA")
    tx_power_dbm: float = 23.0
    csma_sense_dbm: float = -30.0
    csma_backoff_window: int = 16
    csma_contention_overhead: float = 0.0
    interference_floor: float = 1e-12
    window: float | None = None
    target_nodes: int = 1000
    slots: int = 200
    warmup: int = 20
    replications: int = 10
    seed: int = 0
    workers: int = 1
    measure_mode: str = "INSTANT"
    sweep_kind: str = "simulation"
    sweep_axis: str = "lambda"
    sweep_values: tuple[float, ...] | None = None
    interference: float = 0.01
    out_dir: str | None = None

    @property
    def params(self) -> SystemParams:
        return SystemParams(lam=self.lam, alpha=self.alpha, theta=self.theta, d=self.d,
                            beta=self.beta, duplex=Duplex(self.duplex))

    @property
    def csma_threshold(self) -> float:
        return db_to_linear(self.csma_sense_dbm - self.tx_power_dbm)

    def scheme_configs(self) -> list[SchemeConfig]:
        return [SchemeConfig.from_label(s, csma_sense_threshold=self.csma_threshold,
                                        csma_backoff_window=self.csma_backoff_window,
                                        csma_contention_overhead=self.csma_contention_overhead,
                                        interference_floor=self.interference_floor)
                for s in self.schemes]

    def grid(self) -> list[float]:
        return list(self.sweep_values) if self.sweep_values is not None else [self._axis_value()]

    def _axis_value(self) -> float:
        if self.sweep_axis == "interference":
            return self.interference
        return getattr(self.params, {"lambda": "lam"}.get(self.sweep_axis, self.sweep_axis))


# config-file keys that differ from field names
_KEY_TO_FIELD = {"lambda": "lam"}
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}
_DB_KEYS = {"theta_db": "theta", "beta_db": "beta"}
_REQUIRED = ("lam", "alpha", "theta", "d", "beta")
SWEEP_AXES = ("lambda", "alpha", "theta", "d", "beta", "interference")


PRESETS: dict[str, dict] = {
    "fig1a": {"lambda": 0.001, "alpha": 4, "theta_db": 0, "d": 2, "beta_db": -110,
              "demo_gains": [0.04, 0.04, 0.05, 0.05], "demo_ops": [0.8, 0.5], "demo_external": 0.01},
    "fig1b": {"lambda": 0.001, "alpha": 4, "theta_db": 0, "d": 2, "beta_db": -110,
              "demo_gains": [0.04, 0.04, 0.15, 0.15], "demo_ops": [0.8, 0.5], "demo_external": 0.01},
    "fig2": {"lambda": 0.001, "alpha": 4, "theta_db": 0, "d": 2, "beta_db": -110,
             "sweep_kind": "optimizer", "sweep_axis": "interference",
             "sweep_values": [float(x) for x in np.logspace(-4, 2, 25)]},
    "fig3": {"lambda": 0.001, "alpha": 4, "theta_db": 3, "d": 3, "beta_db": -110,
             "schemes": ["MAX_TX", "PC_TX", "RANDOM_TX/SOLVER", "CSMA_CA", "RANDOM_TX/SOLVER@HALF"],
             "sweep_kind": "simulation", "sweep_axis": "lambda",
             "sweep_values": [0.001, 0.002, 0.003, 0.004, 0.005, 0.006, 0.007, 0.008],
             "slots": 100, "warmup": 10, "replications": 30, "target_nodes": 1000},
    "fig4a": {"lambda": 0.001, "alpha": 4, "theta_db": 0, "d": 2, "beta_db": -110,
              "sweep_kind": "optimizer", "sweep_axis": "theta", "interference": 0.01,
              "sweep_values": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0]},
    "fig4b": {"lambda": 0.001, "alpha": 4, "theta_db": 0, "d": 2, "beta_db": -110,
              "sweep_kind": "optimizer", "sweep_axis": "lambda", "interference": 0.1,
              "sweep_values": [float(x) for x in np.logspace(-4, -2, 9)]},
}

# demo-only keys live in presets but are not RunConfig fields
_DEMO_KEYS = ("demo_gains", "demo_ops", "demo_external")


def _normalise(raw: dict, source: str) -> dict:
    out = {}
    names = {f.name for f in fields(RunConfig)}
    for key, value in raw.items():
        if key in _DEMO_KEYS:
            continue
        if key in _DB_KEYS:
            target = _DB_KEYS[key]
            if target in raw:
                raise ConfigError(f"{source}: give either {key!r} or {target!r}, not both")
            if value is None:
                continue
            out[target] = db_to_linear(float(value))
            continue
        name = _KEY_TO_FIELD.get(key, key)
        if name not in names or key in _FIELD_TO_KEY:
            raise ConfigError(f"{source}: unknown key {key!r}")
        out[name] = value
    return out


def _validate(values: dict) -> RunConfig:
    missing = [_FIELD_TO_KEY.get(k, k) for k in _REQUIRED if values.get(k) is None]
    if missing:
        raise ConfigError(f"missing required field {missing[0]!r}")
    for key in ("schemes", "sweep_values"):
        if values.get(key) is not None:
            values[key] = tuple(values[key])
    for key in ("lam", "alpha", "theta", "d", "beta", "tx_power_dbm", "csma_sense_dbm",
                "csma_contention_overhead", "interference_floor", "interference"):
        if key in values and values[key] is not None:
            values[key] = float(values[key])
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    try:
        cfg.params
    except ValueError as exc:
        raise ConfigError(f"{_range_key(str(exc))}: {exc}") from None
    checks = [
        ("slots", cfg.slots > cfg.warmup >= 1, "need slots > warmup >= 1"),
        ("warmup", cfg.warmup >= 1, "warmup must be at least 1"),
        ("replications", cfg.replications >= 1, "replications must be at least 1"),
        ("workers", cfg.workers >= 1, "workers must be at least 1"),
        ("target_nodes", cfg.target_nodes >= 1, "target_nodes must be positive"),
        ("window", cfg.window is None or cfg.window > 10 * cfg.d, "window must exceed 10*d"),
        ("interference", cfg.interference >= 0, "interference must be non-negative"),
        ("sweep_kind", cfg.sweep_kind in ("simulation", "optimizer"), "must be 'simulation' or 'optimizer'"),
        ("sweep_axis", cfg.sweep_axis in SWEEP_AXES, f"must be one of {SWEEP_AXES}"),
        ("sweep_values", cfg.sweep_values is None or len(cfg.sweep_values) > 0, "grid is empty"),
        ("measure_mode", cfg.measure_mode in MeasureMode.__members__, "must be INSTANT or FADING_AVERAGED"),
    ]
    for key, ok, msg in checks:
        if not ok:
            raise ConfigError(f"{key}: {msg}")
    try:
        cfg.scheme_configs()
    except ValueError as exc:
        raise ConfigError(f"schemes: {exc}") from None
    return cfg


def _range_key(msg: str) -> str:
    for key in ("alpha", "theta", "lambda", "beta", "d "):
        if msg.startswith(key):
            return key.strip()
    return "params"


def parse_config(path: str | Path | None = None, *, preset: str | None = None,
                 overrides: dict | None = None) -> RunConfig:
    """Merge preset < file < overrides, convert dB keys, validate."""
    values: dict = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        values.update(_normalise(PRESETS[preset], f"preset {preset}"))
    if path is not None:
        text = Path(path).read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        values.update(_normalise(raw, str(path)))
    if overrides:
        values.update(_normalise({k: v for k, v in overrides.items() if v is not None}, "flags"))
    return _validate(values)


def emit(cfg: RunConfig) -> dict:
    """Canonical JSON-ready mapping; ``parse_config`` of its dump reproduces ``cfg``."""
    out = {}
    for k, v in asdict(cfg).items():
        out[_FIELD_TO_KEY.get(k, k)] = list(v) if isinstance(v, tuple) else v
    return out


def dump(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(emit(cfg), indent=2, sort_keys=True) + "\n")


def demo_inputs(preset: str) -> tuple[dict, float, tuple[float, float]]:
    entry = PRESETS[preset]
    if "demo_gains" not in entry:
        raise ConfigError(f"preset {preset!r} has no demo inputs")
    h11, h22, h12, h21 = entry["demo_gains"]
    return ({"h11": h11, "h22": h22, "h12": h12, "h21": h21}, entry["demo_external"],
            tuple(entry["demo_ops"]))
