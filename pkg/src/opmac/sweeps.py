"""Parameter sweeps over simulation and optimizer outputs."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

from .model import SystemParams
from .opportunity import opportunistic_probability
from .optimizer import SolverError, Variant, closed_form_p, solve_optimal_p
from .schemes import SchemeConfig
from .simulator import MeasureMode, ThroughputReport, replicate

log = logging.getLogger(__name__)

PARAM_AXES = {"lambda": "lam", "alpha": "alpha", "theta": "theta", "d": "d", "beta": "beta"}


@dataclass
class SweepPoint:
    value: float
    reports: list[ThroughputReport] = field(default_factory=list)
    solver: dict = field(default_factory=dict)
    error: str | None = None


def _apply(params: SystemParams, axis: str, value: float) -> SystemParams:
    if axis not in PARAM_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return params.replace(**{PARAM_AXES[axis]: value})


def auto_window(params: SystemParams, target_nodes: int, min_ratio: float = 10.0) -> float:
    """Torus side giving about ``target_nodes`` expected nodes, never below the 10 d guard."""
    floor = min_ratio * params.d * 1.01
    if params.lam <= 0:
        return floor
    return max(math.sqrt(target_nodes / (2 * params.lam)), floor)


def sweep_throughput(axis: str, values: Sequence[float], params: SystemParams,
                     schemes: Sequence[SchemeConfig], *, slots: int, warmup: int, replications: int,
                     seed: int, window_side: float | None = None, target_nodes: int = 1000,
                     mode: MeasureMode = MeasureMode.INSTANT, workers: int = 1) -> list[SweepPoint]:
    if len(values) == 0:
        raise ValueError("sweep grid is empty")
    points = []
    for i, v in enumerate(values):
        pt = SweepPoint(float(v))
        try:
            p = _apply(params, axis, v)
            L = window_side if window_side is not None else auto_window(p, target_nodes)
            pt.reports = replicate(p, schemes, L, slots, warmup, replications, seed + i,
                                   mode=mode, workers=workers)
        except (ValueError, SolverError) as exc:
            log.warning("sweep point %s=%s failed: %s", axis, v, exc)
            pt.error = str(exc)
        points.append(pt)
    return points


def optimizer_record(I: float, params: SystemParams) -> dict:
    """Optimum under every applicable variant, the closed form and its error."""
    rec = {}
    variants = list(Variant) if params.alpha == 4 else [Variant.NUMERIC_INTEGRAL]
    for var in variants:
        rec[var.value] = solve_optimal_p(I, params, var).p_star
    try:
        rec["closed_form"] = closed_form_p(I, params) if params.alpha == 4 else math.nan
    except SolverError as exc:
        rec["closed_form"] = math.nan
        rec["closed_form_error"] = str(exc)
    rec["abs_err"] = abs(rec["closed_form"] - rec[Variant.NUMERIC_INTEGRAL.value])
    rec["op"] = opportunistic_probability(I, params, params.full_duplex)
    return rec


def sweep_optimizer(axis: str, values: Sequence[float], params: SystemParams,
                    interference: float) -> list[SweepPoint]:
    if len(values) == 0:
        raise ValueError("sweep grid is empty")
    points = []
    for v in values:
        pt = SweepPoint(float(v))
        try:
            if axis == "interference":
                pt.solver = optimizer_record(float(v), params)
            else:
                pt.solver = optimizer_record(interference, _apply(params, axis, v))
        except (ValueError, SolverError) as exc:
            pt.error = str(exc)
        points.append(pt)
    return points
