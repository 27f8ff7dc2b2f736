"""Slotted Monte Carlo engine for Poisson bipolar networks."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
from scipy import stats

from .model import ChannelRealization, Deployment, SystemParams, sample_deployment
from .schemes import SchemeConfig, SchemeKind, csma_schedule, decide_many, draw_marks


class MeasureMode(str, Enum):
    INSTANT = "INSTANT"
    FADING_AVERAGED = "FADING_AVERAGED"


def path_loss_matrix(deployment: Deployment, alpha: float) -> np.ndarray:
    dist = deployment.distance_matrix()
    with np.errstate(divide="ignore"):
        return np.where(dist > 0, dist ** (-alpha), 0.0)


def measure_interference(node: int, active: np.ndarray, channel: ChannelRealization | None,
                         deployment: Deployment, params: SystemParams,
                         mode: MeasureMode = MeasureMode.INSTANT, power: np.ndarray | None = None,
                         exclude_partner: bool = True) -> float:
    """Energy-detected interference at ``node`` from the transmitters in ``active``.

    ``active`` is a boolean mask or an index array; ``power`` defaults to unit power.
    """
    mode = MeasureMode(mode)
    n = deployment.n_nodes
    mask = np.zeros(n, dtype=bool)
    active = np.asarray(active)
    if active.dtype == bool:
        mask |= active
    else:
        mask[active.astype(int)] = True
    mask[node] = False
    if exclude_partner and n:
        mask[deployment.partner[node]] = False
    if not mask.any():
        return 0.0
    pw = np.ones(n) if power is None else np.asarray(power, dtype=float)
    pos = deployment.positions
    delta = np.abs(pos[mask] - pos[node])
    delta = np.minimum(delta, deployment.window_side - delta)
    r = np.hypot(delta[:, 0], delta[:, 1])
    g = channel.gains[mask, node] if mode is MeasureMode.INSTANT else 1.0
    return float(np.sum(pw[mask] * g * r ** (-params.alpha)))


def sensed_interference(power: np.ndarray, faded: np.ndarray, nodes: np.ndarray, partner: np.ndarray,
                        exclude_partner: bool = True) -> np.ndarray:
    """Vectorised sensing: ``faded[m, k]`` is the received-power factor from m to k."""
    I = power @ faded[:, nodes]
    if exclude_partner:
        mate = partner[nodes]
        I = I - power[mate] * faded[mate, nodes]
    return np.maximum(I, 0.0)


@dataclass
class RunResult:
    """Per-link counters of one replication. Link i is transmitter ``tx[i]`` to its partner."""

    tx: np.ndarray
    attempts: np.ndarray
    successes: np.ndarray
    counted_slots: int
    n_pairs: int
    # usable fraction of a slot after contention overhead
    efficiency: float = 1.0

    @property
    def throughput(self) -> np.ndarray:
        return self.efficiency * self.successes / self.counted_slots

    @property
    def success_rate(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.successes / self.attempts


@dataclass
class ThroughputReport:
    scheme: str
    params: SystemParams
    slots: int
    warmup: int
    replications: int
    eps_log: float
    mean_link_throughput: float
    mean_pair_throughput: float
    pf_utility: float
    ci_halfwidth: float = math.nan
    pair_ci_halfwidth: float = math.nan
    pf_ci_halfwidth: float = math.nan
    per_replication: list[dict] = field(default_factory=list)
    link_throughput: np.ndarray | None = None
    runs: list[RunResult] = field(default_factory=list, repr=False)

    def ci(self, metric: str = "pf_utility") -> tuple[float, float]:
        mean = getattr(self, metric)
        half = {"pf_utility": self.pf_ci_halfwidth, "mean_link_throughput": self.ci_halfwidth,
                "mean_pair_throughput": self.pair_ci_halfwidth}[metric]
        return mean - half, mean + half


def _potential_transmitters(deployment: Deployment, params: SystemParams) -> np.ndarray:
    # half duplex keeps the B ends silent
    if params.full_duplex:
        return np.arange(deployment.n_nodes)
    return np.arange(deployment.n_pairs)


def simulate(deployment: Deployment, params: SystemParams, scheme: SchemeConfig, slots: int,
             warmup: int, seed, *, mode: MeasureMode = MeasureMode.INSTANT,
             exclude_partner: bool = True, observe: Sequence[int] | None = None,
             path_loss: np.ndarray | None = None) -> RunResult:
    """One replication of the slot loop on a fixed deployment.

    Each slot: measure interference of the previous slot's transmissions,
    decide, redraw fading, score every attempted link by its SIR.
    ``observe`` restricts scoring to links whose transmitter is listed, which
    lets schemes that need no measurement skip most fading draws.
    """
    if not slots > warmup >= 1:
        raise ValueError(f"need slots > warmup >= 1, got slots={slots}, warmup={warmup}")
    mode = MeasureMode(mode)
    params = scheme.params_for(params)
    rng = np.random.default_rng(seed)
    n = deployment.n_nodes
    tx = _potential_transmitters(deployment, params)
    if observe is not None:
        tx_obs = np.asarray(observe, dtype=int)
        if not np.isin(tx_obs, tx).all():
            raise ValueError("observed links must start at potential transmitters")
    else:
        tx_obs = tx
    partner = deployment.partner
    attempts = np.zeros(len(tx_obs), dtype=np.int64)
    successes = np.zeros(len(tx_obs), dtype=np.int64)
    if n == 0 or len(tx) == 0:
        return RunResult(tx_obs, attempts, successes, slots - warmup, deployment.n_pairs)

    pl = path_loss_matrix(deployment, params.alpha) if path_loss is None else path_loss
    full_channel = observe is None or scheme.needs_measurement or scheme.kind is SchemeKind.CSMA_CA
    rx_obs = partner[tx_obs]
    cols = np.arange(n) if full_channel else rx_obs
    pl_cols = pl if full_channel else pl[:, rx_obs]
    # column of each observed receiver inside the drawn gain block
    rx_col = rx_obs if full_channel else np.arange(len(rx_obs))
    sensing = scheme.needs_measurement
    instant = mode is MeasureMode.INSTANT

    # bootstrap: every potential transmitter active with unit power
    prev_power = np.zeros(n)
    prev_power[tx] = 1.0
    prev_faded = rng.exponential(1.0, size=(n, n)) * pl if (sensing and instant) else None
    fd = params.full_duplex
    theta = params.theta
    csma_overhead = scheme.csma_contention_overhead if scheme.kind is SchemeKind.CSMA_CA else 0.0

    for t in range(slots):
        if sensing:
            I = sensed_interference(prev_power, prev_faded if instant else pl, tx, partner, exclude_partner)
        else:
            I = np.zeros(len(tx))
        dec = decide_many(scheme, I, params, rng)
        faded = rng.exponential(1.0, size=(n, len(cols))) * pl_cols

        power = np.zeros(n)
        if scheme.kind is SchemeKind.CSMA_CA:
            marks = draw_marks(len(tx), scheme, rng)
            chosen = csma_schedule(deployment, ChannelRealization(faded), scheme, None, params,
                                   contenders=tx, marks=marks, path_loss=np.ones_like(faded),
                                   exclude_partner=exclude_partner)
            power[chosen] = 1.0
        else:
            power[tx] = np.where(dec.delta, dec.power, 0.0)

        total = power @ faded[:, rx_col]
        signal = power[tx_obs] * faded[tx_obs, rx_col]
        interference = np.maximum(total - signal, 0.0)
        if fd:
            interference = interference + power[rx_obs] * params.beta
        attempted = power[tx_obs] > 0
        ok = attempted & (signal >= theta * interference)
        if t >= warmup:
            attempts += attempted
            successes += ok
        prev_power = power
        if sensing and instant:
            prev_faded = faded

    return RunResult(tx_obs, attempts, successes, slots - warmup, deployment.n_pairs,
                     efficiency=1.0 - csma_overhead)


def summarize(result: RunResult, eps_log: float) -> dict:
    thr = result.throughput
    pair = np.zeros(result.n_pairs)
    np.add.at(pair, result.tx % max(result.n_pairs, 1), thr)
    return {
        "mean_link_throughput": float(thr.mean()) if len(thr) else math.nan,
        "mean_pair_throughput": float(pair.mean()) if len(pair) else math.nan,
        "pf_utility": float(np.mean(np.log(np.maximum(thr, eps_log)))) if len(thr) else math.nan,
        "n_links": int(len(thr)),
    }


def _halfwidth(values: np.ndarray, level: float = 0.95) -> float:
    values = np.asarray(values, dtype=float)
    k = len(values)
    if k < 2:
        return math.nan
    return float(stats.t.ppf(0.5 + level / 2, k - 1) * values.std(ddof=1) / math.sqrt(k))


def run(deployment: Deployment, params: SystemParams, scheme: SchemeConfig, slots: int,
        warmup: int, seed, **kwargs) -> ThroughputReport:
    """Single-replication throughput report on a given deployment."""
    res = simulate(deployment, params, scheme, slots, warmup, seed, **kwargs)
    eps = 1.0 / (10 * (slots - warmup))
    s = summarize(res, eps)
    return ThroughputReport(scheme=scheme.label, params=params, slots=slots, warmup=warmup,
                            replications=1, eps_log=eps, mean_link_throughput=s["mean_link_throughput"],
                            mean_pair_throughput=s["mean_pair_throughput"], pf_utility=s["pf_utility"],
                            per_replication=[s], link_throughput=res.throughput, runs=[res])


def _replicate_one(args):
    params, schemes, window, slots, warmup, seed_seq, mode = args
    dep_seed, run_seed = seed_seq.spawn(2)
    dep = sample_deployment(params, window, dep_seed)
    pl = path_loss_matrix(dep, params.alpha)
    eps = 1.0 / (10 * (slots - warmup))
    out = []
    for scheme in schemes:
        # common random numbers across schemes within a replication
        res = simulate(dep, params, scheme, slots, warmup, run_seed, mode=mode, path_loss=pl)
        s = summarize(res, eps)
        s["n_nodes"] = dep.n_nodes
        out.append(s)
    return out


def replicate(params: SystemParams, schemes: Sequence[SchemeConfig], window_side: float, slots: int,
              warmup: int, replications: int, seed: int, *, mode: MeasureMode = MeasureMode.INSTANT,
              workers: int = 1) -> list[ThroughputReport]:
    """Independent replications (fresh deployment each) for every scheme, with 95% CIs."""
    if replications < 1:
        raise ValueError("replications must be at least 1")
    children = np.random.SeedSequence(seed).spawn(replications)
    jobs = [(params, list(schemes), window_side, slots, warmup, c, MeasureMode(mode)) for c in children]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            per_rep = list(ex.map(_replicate_one, jobs))
    else:
        per_rep = [_replicate_one(j) for j in jobs]
    eps = 1.0 / (10 * (slots - warmup))
    reports = []
    for i, scheme in enumerate(schemes):
        rows = [rep[i] for rep in per_rep]
        link = np.array([r["mean_link_throughput"] for r in rows])
        pair = np.array([r["mean_pair_throughput"] for r in rows])
        pf = np.array([r["pf_utility"] for r in rows])
        reports.append(ThroughputReport(
            scheme=scheme.label, params=params, slots=slots, warmup=warmup, replications=replications,
            eps_log=eps, mean_link_throughput=float(np.nanmean(link)),
            mean_pair_throughput=float(np.nanmean(pair)), pf_utility=float(np.nanmean(pf)),
            ci_halfwidth=_halfwidth(link), pair_ci_halfwidth=_halfwidth(pair),
            pf_ci_halfwidth=_halfwidth(pf), per_replication=rows))
    return reports
