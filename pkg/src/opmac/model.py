"""Physical-layer primitives: parameters, Poisson bipolar deployments, fading and SIR."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np


class Duplex(str, Enum):
    HALF = "HALF"
    FULL = "FULL"


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0) if np.ndim(x_db) else 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    if np.any(np.asarray(x) <= 0):
        raise ValueError(f"linear_to_db needs a positive value, got {x!r}")
    return 10.0 * np.log10(x) if np.ndim(x) else 10.0 * math.log10(x)


@dataclass(frozen=True)
class SystemParams:
    """Model constants.

    ``lam`` is the density of each half of the bipolar network (transmitter
    half and receiver half), so the total node density is ``2 * lam``.
    All powers are linear and normalised to unit transmit power.
    """

    lam: float
    alpha: float = 4.0
    theta: float = 1.0
    d: float = 2.0
    beta: float = 1e-11
    duplex: Duplex = Duplex.FULL

    def __post_init__(self):
        if not self.alpha > 2:
            raise ValueError(f"alpha must exceed 2, got {self.alpha}")
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not self.d > 0:
            raise ValueError(f"d must be positive, got {self.d}")
        if not self.lam >= 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")
        if not 0 <= self.beta <= 1:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        object.__setattr__(self, "duplex", Duplex(self.duplex))

    @property
    def full_duplex(self) -> bool:
        return self.duplex is Duplex.FULL

    @property
    def fd_factor(self) -> float:
        """Success-probability penalty exp(-theta d^alpha beta) of residual self-interference."""
        return math.exp(-self.theta * self.d**self.alpha * self.beta)

    def replace(self, **changes) -> "SystemParams":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class Deployment:
    """Realised Poisson bipolar network on a square torus.

    Nodes ``0..n-1`` are the A ends (Phi_1) and ``n..2n-1`` the B ends, so the
    partner of node ``i`` is ``(i + n) % 2n`` and both belong to pair ``i % n``.
    """

    window_side: float
    positions: np.ndarray
    d: float

    @property
    def n_pairs(self) -> int:
        return len(self.positions) // 2

    @property
    def n_nodes(self) -> int:
        return len(self.positions)

    @property
    def partner(self) -> np.ndarray:
        n = self.n_pairs
        return (np.arange(2 * n) + n) % (2 * n) if n else np.zeros(0, dtype=int)

    @property
    def pair_id(self) -> np.ndarray:
        return np.arange(self.n_nodes) % max(self.n_pairs, 1)

    @property
    def role(self) -> np.ndarray:
        return np.where(np.arange(self.n_nodes) < self.n_pairs, "A", "B")

    def distance_matrix(self) -> np.ndarray:
        return pairwise_toroidal_distance(self.positions, self.window_side)


def sample_deployment(params: SystemParams, window_side: float, seed: int,
                      min_window_ratio: float = 10.0) -> Deployment:
    if window_side <= 0:
        raise ValueError("window_side must be positive")
    if window_side <= min_window_ratio * params.d:
        raise ValueError(
            f"window_side={window_side} must exceed {min_window_ratio}*d={min_window_ratio * params.d}")
    rng = np.random.default_rng(seed)
    n = rng.poisson(params.lam * window_side**2)
    a = rng.uniform(0.0, window_side, size=(n, 2))
    phi = rng.uniform(0.0, 2 * np.pi, size=n)
    b = np.mod(a + params.d * np.column_stack((np.cos(phi), np.sin(phi))), window_side)
    return Deployment(window_side=float(window_side), positions=np.vstack((a, b)), d=params.d)


def toroidal_distance(a, b, window_side: float) -> float:
    delta = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    delta = np.minimum(delta, window_side - delta)
    return float(np.hypot(delta[0], delta[1]))


def pairwise_toroidal_distance(positions: np.ndarray, window_side: float) -> np.ndarray:
    delta = np.abs(positions[:, None, :] - positions[None, :, :])
    delta = np.minimum(delta, window_side - delta)
    return np.hypot(delta[..., 0], delta[..., 1])


@dataclass(frozen=True)
class ChannelRealization:
    """Rayleigh block fading, ``gains[m, k]`` is the power gain from node m to node k."""

    gains: np.ndarray

    @classmethod
    def draw(cls, n_nodes: int, rng: np.random.Generator) -> "ChannelRealization":
        return cls(rng.exponential(1.0, size=(n_nodes, n_nodes)))


@dataclass(frozen=True)
class PolicyDecision:
    delta: int = 1
    power: float = 1.0
    p: float = 1.0

    def __post_init__(self):
        if self.delta not in (0, 1):
            raise ValueError("delta must be 0 or 1")
        if not 0 <= self.p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if not 0 <= self.power <= 1:
            raise ValueError(f"power must lie in [0, 1], got {self.power}")
        if self.delta == 1 and self.power <= 0:
            raise ValueError("a transmitting node needs positive power")


SILENT = PolicyDecision(delta=0, power=0.0, p=0.0)


def sir(rx: int, decisions: Mapping[int, PolicyDecision], channel: ChannelRealization,
        deployment: Deployment, params: SystemParams, *, external_interference: float = 0.0,
        gains_include_path_loss: bool = False) -> float:
    """SIR at ``rx`` for the signal sent by its partner.

    Nodes missing from ``decisions`` are silent. With ``gains_include_path_loss``
    the channel gains are used as effective received-power factors.
    Returns ``inf`` when the denominator is exactly zero.
    """
    tx = int(deployment.partner[rx])
    dec_tx = decisions.get(tx, SILENT)
    if dec_tx.delta != 1:
        raise ValueError(f"partner {tx} of receiver {rx} is not transmitting")

    def received(m: int) -> float:
        g = channel.gains[m, rx]
        if gains_include_path_loss:
            return g
        r = toroidal_distance(deployment.positions[m], deployment.positions[rx], deployment.window_side)
        return g * r ** (-params.alpha)

    signal = dec_tx.power * received(tx)
    denom = external_interference
    dec_rx = decisions.get(rx, SILENT)
    if params.full_duplex and dec_rx.delta == 1:
        denom += dec_rx.power * params.beta
    for m, dec in decisions.items():
        if m in (tx, rx) or dec.delta != 1:
            continue
        denom += dec.power * received(m)
    if denom == 0.0:
        return math.inf
    return signal / denom
