"""Medium-access policies: Max TX, PC TX, Random TX and a carrier-sensing baseline."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .model import ChannelRealization, Deployment, Duplex, PolicyDecision, SystemParams
from .opportunity import DEFAULT_INTERFERENCE_FLOOR, opportunistic_probability
from .optimizer import Variant, closed_form_p, solve_optimal_p_many

# -30 dBm sensing threshold at 23 dBm transmit power, normalised to unit power
DEFAULT_CSMA_THRESHOLD = 10 ** ((-30.0 - 23.0) / 10.0)


class SchemeKind(str, Enum):
    MAX_TX = "MAX_TX"
    PC_TX = "PC_TX"
    RANDOM_TX = "RANDOM_TX"
    CSMA_CA = "CSMA_CA"


class RandomRule(str, Enum):
    SOLVER = "SOLVER"
    CLOSED_FORM = "CLOSED_FORM"
    LINEAR_OP = "LINEAR_OP"


@dataclass(frozen=True)
class SchemeConfig:
    kind: SchemeKind = SchemeKind.RANDOM_TX
    random_tx_rule: RandomRule = RandomRule.SOLVER
    csma_sense_threshold: float = DEFAULT_CSMA_THRESHOLD
    csma_backoff_window: int = 16
    # fraction of each slot lost to contention; scales CSMA successes
    csma_contention_overhead: float = 0.0
    # overrides the Random TX rule with one global probability
    fixed_p: float | None = None
    solver_variant: Variant | None = None
    interference_floor: float = DEFAULT_INTERFERENCE_FLOOR
    # run this scheme under another duplex mode than the base parameters
    duplex: Duplex | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SchemeKind(self.kind))
        if self.duplex is not None:
            object.__setattr__(self, "duplex", Duplex(self.duplex))
        object.__setattr__(self, "random_tx_rule", RandomRule(self.random_tx_rule))
        if self.solver_variant is not None:
            object.__setattr__(self, "solver_variant", Variant(self.solver_variant))
        if not self.csma_sense_threshold > 0:
            raise ValueError("csma_sense_threshold must be positive")
        if int(self.csma_backoff_window) < 1:
            raise ValueError("csma_backoff_window must be at least 1")
        if not 0 <= self.csma_contention_overhead < 1:
            raise ValueError("csma_contention_overhead must lie in [0, 1)")
        if self.fixed_p is not None and not 0 <= self.fixed_p <= 1:
            raise ValueError("fixed_p must lie in [0, 1]")
        if not self.interference_floor > 0:
            raise ValueError("interference_floor must be positive")

    @property
    def label(self) -> str:
        if self.kind is SchemeKind.RANDOM_TX:
            if self.fixed_p is not None:
                name = f"RANDOM_TX/p={self.fixed_p:g}"
            else:
                name = f"RANDOM_TX/{self.random_tx_rule.value}"
        else:
            name = self.kind.value
        return name if self.duplex is None else f"{name}@{self.duplex.value}"

    def params_for(self, params: SystemParams) -> SystemParams:
        return params if self.duplex is None else params.replace(duplex=self.duplex)

    @classmethod
    def from_label(cls, label: str, **kwargs) -> "SchemeConfig":
        """Parse ``KIND[/RULE][@DUPLEX]``, e.g. ``RANDOM_TX/SOLVER@HALF``."""
        name, _, duplex = label.strip().partition("@")
        kind, _, rule = name.partition("/")
        if duplex:
            kwargs["duplex"] = Duplex(duplex.upper())
        kind = SchemeKind(kind.upper())
        if rule:
            if kind is not SchemeKind.RANDOM_TX:
                raise ValueError(f"only RANDOM_TX takes a rule, got {label!r}")
            if rule.lower().startswith("p="):
                kwargs["fixed_p"] = float(rule[2:])
            else:
                kwargs["random_tx_rule"] = RandomRule(rule.upper())
        return cls(kind=kind, **kwargs)

    @property
    def needs_measurement(self) -> bool:
        if self.kind in (SchemeKind.MAX_TX, SchemeKind.CSMA_CA):
            return False
        return not (self.kind is SchemeKind.RANDOM_TX and self.fixed_p is not None)

    def variant_for(self, params: SystemParams) -> Variant:
        if self.solver_variant is not None:
            return self.solver_variant
        return Variant.DERIVED_ARCCOT if params.alpha == 4 else Variant.NUMERIC_INTEGRAL


class Decisions(NamedTuple):
    delta: np.ndarray
    power: np.ndarray
    p: np.ndarray


def transmission_probability(scheme: SchemeConfig, I, params: SystemParams) -> np.ndarray:
    """Random TX probability for each measured interference value."""
    I = np.maximum(np.asarray(I, dtype=float), scheme.interference_floor)
    if scheme.fixed_p is not None:
        return np.full(I.shape, scheme.fixed_p)
    rule = scheme.random_tx_rule
    if rule is RandomRule.LINEAR_OP:
        return np.asarray(opportunistic_probability(I, params, params.full_duplex), dtype=float)
    if rule is RandomRule.SOLVER:
        return solve_optimal_p_many(I, params, scheme.variant_for(params))
    return np.array([closed_form_p(float(x), params) for x in I.ravel()]).reshape(I.shape)


def decide_many(scheme: SchemeConfig, I, params: SystemParams, rng: np.random.Generator) -> Decisions:
    """Vectorised policy over nodes; ``I`` holds each node's measured interference.

    For CSMA_CA every node contends (delta=1); admission is settled by :func:`csma_schedule`.
    """
    I = np.maximum(np.asarray(I, dtype=float), scheme.interference_floor)
    ones = np.ones(I.shape)
    kind = scheme.kind
    if kind in (SchemeKind.MAX_TX, SchemeKind.CSMA_CA):
        return Decisions(np.ones(I.shape, dtype=bool), ones, ones)
    if kind is SchemeKind.PC_TX:
        op = np.asarray(opportunistic_probability(I, params, params.full_duplex), dtype=float)
        # zero power means no transmission
        return Decisions(op > 0, op, ones)
    p = transmission_probability(scheme, I, params)
    delta = rng.random(I.shape) < p
    return Decisions(delta, ones, p)


def decide(scheme: SchemeConfig, I: float, params: SystemParams, rng: np.random.Generator):
    """Single-node decision. For CSMA_CA the node's contention mark is returned instead."""
    if scheme.kind is SchemeKind.CSMA_CA:
        return draw_marks(1, scheme, rng)[0]
    dec = decide_many(scheme, np.array([I]), params, rng)
    delta = int(dec.delta[0])
    return PolicyDecision(delta=delta, power=float(dec.power[0]), p=float(dec.p[0]))


def draw_marks(n: int, scheme: SchemeConfig, rng: np.random.Generator) -> np.ndarray:
    # integer backoff slot, ties broken uniformly
    return rng.integers(0, int(scheme.csma_backoff_window), size=n) + rng.random(n)


def csma_schedule(deployment: Deployment, channel: ChannelRealization, cfg: SchemeConfig,
                  rng: np.random.Generator | None, params: SystemParams, *,
                  contenders=None, marks=None, path_loss: np.ndarray | None = None,
                  exclude_partner: bool = True) -> np.ndarray:
    """Indices admitted by mark-ordered carrier sensing.

    In increasing mark order a contender transmits iff the faded power it
    senses from already admitted transmitters is below the threshold.
    ``channel.gains`` may cover all nodes (N x N). The partner's own signal is
    not counted when ``exclude_partner`` is set.
    """
    n = deployment.n_nodes
    if contenders is None:
        contenders = np.arange(n)
    contenders = np.asarray(contenders, dtype=int)
    if marks is None:
        marks = draw_marks(len(contenders), cfg, rng)
    marks = np.asarray(marks, dtype=float)
    if len(contenders) == 0:
        return contenders
    if path_loss is None:
        dist = deployment.distance_matrix()
        with np.errstate(divide="ignore"):
            path_loss = np.where(dist > 0, dist ** (-params.alpha), 0.0)
    partner = deployment.partner
    sensed = np.zeros(n)
    admitted = np.zeros(n, dtype=bool)
    thr = cfg.csma_sense_threshold
    for idx in np.argsort(marks, kind="stable"):
        node = contenders[idx]
        level = sensed[node]
        mate = partner[node]
        if exclude_partner and admitted[mate]:
            level -= channel.gains[mate, node] * path_loss[mate, node]
        if level < thr:
            admitted[node] = True
            sensed += channel.gains[node] * path_loss[node]
    return np.flatnonzero(admitted)
