"""Two-pair illustration of Max TX, PC TX and Random TX operating points."""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ModeRow:
    mode: str
    sir1: float
    sir2: float
    resource1: float
    resource2: float

    @property
    def sir_sum(self) -> float:
        return self.sir1 + self.sir2

    @property
    def resource_sum(self) -> float:
        return self.resource1 + self.resource2

    def as_dict(self) -> dict:
        return {"mode": self.mode, "sir1": self.sir1, "sir2": self.sir2, "sir_sum": self.sir_sum,
                "resource1": self.resource1, "resource2": self.resource2,
                "resource_sum": self.resource_sum}


def two_pair_demo(gains: dict, external_I: float, op_values: tuple[float, float]) -> list[ModeRow]:
    """SIR operating points of two interfering pairs under a constant background ``external_I``.

    ``gains`` holds effective received-power factors h11, h22 (direct) and
    h12, h21 (cross; h21 is TX2 into RX1). Random TX SIRs are time averages
    over the four joint activity states, counting 0 when a node is silent.
    Resource use is transmit-time fraction times transmit power.
    """
    h11, h22, h12, h21 = (float(gains[k]) for k in ("h11", "h22", "h12", "h21"))
    if min(h11, h22, h12, h21) < 0:
        raise ValueError("gains must be non-negative")
    op1, op2 = op_values
    if not (0 <= op1 <= 1 and 0 <= op2 <= 1):
        raise ValueError("OP values must lie in [0, 1]")

    def ratio(num: float, den: float) -> float:
        if num == 0:
            return 0.0
        return math.inf if den == 0 else num / den

    def sirs(p1: float, p2: float):
        return ratio(p1 * h11, p2 * h21 + external_I), ratio(p2 * h22, p1 * h12 + external_I)

    rows = [ModeRow("MAX_TX", *sirs(1.0, 1.0), 1.0, 1.0)]
    rows.append(ModeRow("PC_TX", *sirs(op1, op2), op1, op2))

    avg1 = avg2 = 0.0
    for d1, w1 in ((1, op1), (0, 1 - op1)):
        for d2, w2 in ((1, op2), (0, 1 - op2)):
            if w1 * w2 == 0:
                continue
            s1, s2 = sirs(float(d1), float(d2))
            avg1 += w1 * w2 * s1
            avg2 += w1 * w2 * s2
    rows.append(ModeRow("RANDOM_TX", avg1, avg2, op1, op2))
    return rows
