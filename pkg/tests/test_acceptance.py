"""Acceptance checks. Each test prints one PASS/FAIL line, then asserts."""
import math
import time

import mpmath
import numpy as np
import pytest

from opmac.cli import main
from opmac.config import parse_config
from opmac.model import Deployment, SystemParams, sample_deployment
from opmac.opportunity import empty_ball_radius, opportunistic_probability
from opmac.optimizer import (Variant, arctan_approx, fixed_point_rhs, solve_for_radius,
                             solve_optimal_p)
from opmac.schemes import SchemeConfig
from opmac.simulator import path_loss_matrix, replicate, simulate
from opmac.sweeps import auto_window, sweep_optimizer


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")
    return emit


def exact_ball_residual(R, I, lam, alpha):
    mpmath.mp.dps = 60
    R, I, lam, a = (mpmath.mpf(float(v)) for v in (R, I, lam, alpha))
    return float(abs(I * R**a - 4 * mpmath.pi * lam / (a - 2) * R**2 - 1))


def test_criterion_1_empty_ball(report):
    Is = np.logspace(-6, 2, 13)
    lams = np.logspace(-4, -1, 10)
    t0 = time.perf_counter()
    radii = {a: [(I, lam, empty_ball_radius(I, SystemParams(lam=lam, alpha=a))) for lam in lams for I in Is]
             for a in (4.0, 3.0, 3.5, 5.0)}
    elapsed = time.perf_counter() - t0
    worst = {a: max(exact_ball_residual(R, I, lam, a) for I, lam, R in rows) for a, rows in radii.items()}
    fails = {a: sum(exact_ball_residual(R, I, lam, a) >= 1e-12 for I, lam, R in rows)
             for a, rows in radii.items() if a != 4.0}
    # failures where an adjacent double would do better (0 means float64 cannot reach the bound)
    improvable = 0
    for a in (3.0, 3.5, 5.0):
        for I, lam, R in radii[a]:
            r = exact_ball_residual(R, I, lam, a)
            if r >= 1e-12:
                improvable += min(exact_ball_residual(np.nextafter(R, x), I, lam, a) for x in (0, np.inf)) < r
    ok = worst[4.0] < 1e-10 and all(worst[a] < 1e-12 for a in (3.0, 3.5, 5.0)) and elapsed < 1.0
    report(1, ok, f"alpha=4 max residual {worst[4.0]:.2e} (<1e-10); "
                  + "; ".join(f"alpha={a:g} max {worst[a]:.2e}, {fails[a]}/130 >= 1e-12" for a in (3.0, 3.5, 5.0))
                  + f"; failures improvable by an adjacent double: {improvable}; {elapsed:.3f}s")
    assert ok


def test_criterion_2_arctan(report):
    t0 = time.perf_counter()
    x = np.linspace(0, 10, 10_000)
    rmse = math.sqrt(np.mean((arctan_approx(x) - np.arctan(x)) ** 2))
    elapsed = time.perf_counter() - t0
    ok = abs(rmse - 0.018) <= 0.005 and elapsed < 1.0
    report(2, ok, f"RMSE {rmse:.6f} (target 0.018 +- 0.005); {elapsed:.3f}s")
    assert ok


def test_criterion_3_well_posed(report):
    rng = np.random.default_rng(3)
    grid = np.linspace(0, 1, 1002)[1:-1]
    t0 = time.perf_counter()
    non_mono = bad_residual = 0
    max_gap = 0.0
    interior = 0
    for _ in range(1000):
        params = SystemParams(lam=10 ** rng.uniform(-4, -2), alpha=4, theta=rng.uniform(0.5, 5),
                              d=rng.uniform(1, 4), beta=10 ** rng.uniform(-13, -9))
        R = empty_ball_radius(10 ** rng.uniform(-4, 2), params)
        arccot = fixed_point_rhs(grid, R, params, Variant.DERIVED_ARCCOT)
        numeric = fixed_point_rhs(grid, R, params, Variant.NUMERIC_INTEGRAL)
        max_gap = max(max_gap, float(np.max(np.abs(arccot - numeric))))
        if not np.all(np.diff(arccot - 1 / grid) > 0):
            non_mono += 1
        res = solve_for_radius(R, params, Variant.DERIVED_ARCCOT)
        if not res.clamped:
            interior += 1
            bad_residual += res.residual >= 1e-9
    elapsed = time.perf_counter() - t0
    ok = non_mono == 0 and bad_residual == 0 and max_gap <= 1e-8 and elapsed < 30
    report(3, ok, f"non-monotone {non_mono}/1000; interior roots {interior}, residual violations "
                  f"{bad_residual}; max |ARCCOT-NUMERIC| {max_gap:.2e}; {elapsed:.1f}s")
    assert ok


def test_criterion_4_monotonicity(report):
    base = SystemParams(lam=0.001, alpha=4, theta=1, d=2, beta=1e-11)
    I0 = 0.3
    sweeps = {
        "lambda": [base.replace(lam=v) for v in (5e-4, 7.5e-4, 1e-3, 1.5e-3, 2e-3)],
        "d": [base.replace(d=v) for v in (1.5, 1.75, 2.0, 2.25, 2.5)],
        "theta": [base.replace(theta=v) for v in (0.5, 0.75, 1.0, 1.5, 2.0)],
    }
    curves = {k: [solve_optimal_p(I0, p).p_star for p in ps] for k, ps in sweeps.items()}
    curves["I"] = [solve_optimal_p(I, base).p_star for I in (0.1, 0.2, 0.3, 0.5, 1.0)]
    # beta decreasing: p* must not go down
    beta_curve = [solve_optimal_p(I0, base.replace(beta=b)).p_star for b in (1e-3, 1e-5, 1e-7, 1e-9, 1e-11)]
    violations = sum(int(np.sum(np.diff(c) > 0)) for c in curves.values())
    violations += int(np.sum(np.diff(beta_curve) < 0))
    interior = all(0 < v < 1 for c in list(curves.values()) + [beta_curve] for v in c)
    ok = violations == 0 and interior
    report(4, ok, f"{violations} violations; all p* interior: {interior}; "
                  + ", ".join(f"{k}: {c[0]:.4f}->{c[-1]:.4f}" for k, c in curves.items())
                  + f", beta: {beta_curve[0]:.6f}->{beta_curve[-1]:.6f}")
    assert ok


def test_criterion_5_closed_form(report):
    t0 = time.perf_counter()
    errors = {v: [] for v in Variant}
    failed_points = 0
    for preset in ("fig4a", "fig4b"):
        cfg = parse_config(preset=preset)
        for pt in sweep_optimizer(cfg.sweep_axis, cfg.grid(), cfg.params, cfg.interference):
            cf = pt.solver["closed_form"]
            if math.isnan(cf):
                failed_points += 1
            for v in Variant:
                errors[v].append(abs(cf - pt.solver[v.value]))
    elapsed = time.perf_counter() - t0
    # a closed form that cannot be evaluated counts as unbounded error
    stats = {v: (np.mean(np.nan_to_num(e, nan=np.inf)), np.max(np.nan_to_num(e, nan=np.inf)),
                 np.nanmean(e), np.nanmax(e)) for v, e in errors.items()}
    best = min(Variant, key=lambda v: (stats[v][0], stats[v][2]))
    mean_err, max_err = stats[best][0], stats[best][1]
    ok = mean_err <= 0.025 and max_err <= 0.05 and elapsed < 60
    detail = "; ".join(f"{v.value} mean {100 * s[2]:.2f}% max {100 * s[3]:.2f}% (finite points)"
                       for v, s in stats.items())
    report(5, ok, f"best {best.value}; {failed_points}/19 points with negative discriminant; {detail}; "
                  f"{elapsed:.1f}s")
    assert ok


def test_criterion_6_analytic_consistency(report):
    params = SystemParams(lam=0.002, alpha=4, theta=2, d=3, beta=0.0, duplex="HALF")
    L = math.sqrt(1000 / (2 * params.lam))
    dep = sample_deployment(params, L, 6)
    pl = path_loss_matrix(dep, params.alpha)
    p = 0.5
    td = params.theta * params.d**params.alpha
    n_pairs = dep.n_pairs
    q = np.array([np.prod(1 - p + p / (1 + td * pl[np.delete(np.arange(n_pairs), i), dep.partner[i]]))
                  for i in range(n_pairs)])
    tag = int(np.argmin(np.abs(q - 0.6)))
    slots = 100_000
    res = simulate(dep, params, SchemeConfig.from_label(f"RANDOM_TX/p={p}"), slots + 1, 1, 66,
                   observe=[tag], path_loss=pl)
    att, suc = int(res.attempts[0]), int(res.successes[0])
    emp = suc / att
    z_hd = (emp - q[tag]) / math.sqrt(q[tag] * (1 - q[tag]) / att)

    fd = SystemParams(lam=0.001, alpha=4, theta=1, d=2, beta=math.log(4 / 3) / 16)
    pair = Deployment(100.0, np.array([[5.0, 5.0], [7.0, 5.0]]), 2.0)
    fres = simulate(pair, fd, SchemeConfig(kind="MAX_TX"), slots + 1, 1, 67)
    trials = int(fres.attempts.sum())
    target = math.exp(-fd.theta * fd.d**4 * fd.beta)
    z_fd = (fres.successes.sum() / trials - target) / math.sqrt(target * (1 - target) / trials)
    ok = abs(z_hd) < 3 and abs(z_fd) < 3
    report(6, ok, f"{dep.n_nodes} nodes, tagged q={q[tag]:.4f}, empirical {emp:.4f} over {att} attempts "
                  f"(z={z_hd:+.2f}); FD pair target {target:.4f} (z={z_fd:+.2f})")
    assert ok


@pytest.mark.slow
def test_criterion_7_scheme_ordering(report):
    cfg = parse_config(preset="fig3")
    lam = max(cfg.grid())
    params = cfg.params.replace(lam=lam)
    L = auto_window(params, cfg.target_nodes)
    t0 = time.perf_counter()
    reps = replicate(params, cfg.scheme_configs(), L, cfg.slots, cfg.warmup, cfg.replications, cfg.seed,
                     workers=cfg.workers)
    elapsed = time.perf_counter() - t0
    by = {r.scheme: r for r in reps}
    rnd = by["RANDOM_TX/SOLVER"]
    lo_rnd = rnd.ci("pf_utility")[0]
    ordering = {s: lo_rnd > by[s].ci("pf_utility")[1] for s in ("MAX_TX", "PC_TX", "CSMA_CA")}
    hd = by["RANDOM_TX/SOLVER@HALF"]
    fd_gain = rnd.ci("mean_pair_throughput")[0] > hd.ci("mean_pair_throughput")[1]
    gain = rnd.mean_pair_throughput / hd.mean_pair_throughput - 1
    ok = all(ordering.values()) and fd_gain and elapsed < 600
    pf = ", ".join(f"{r.scheme} {r.pf_utility:.3f}+-{r.pf_ci_halfwidth:.3f}" for r in reps)
    report(7, ok, f"lambda={lam}, {cfg.replications} reps, {elapsed:.0f}s; PF: {pf}; "
                  f"FD/HD pair throughput {rnd.mean_pair_throughput:.4f}+-{rnd.pair_ci_halfwidth:.4f} vs "
                  f"{hd.mean_pair_throughput:.4f}+-{hd.pair_ci_halfwidth:.4f} (gain {100 * gain:.1f}%); "
                  f"per-link {rnd.mean_link_throughput:.4f} vs {hd.mean_link_throughput:.4f}")
    assert ok


def test_criterion_8_fig2_shape(report):
    cfg = parse_config(preset="fig2")
    t0 = time.perf_counter()
    pts = [(opportunistic_probability(I, cfg.params, cfg.params.full_duplex), solve_optimal_p(I, cfg.params).p_star)
           for I in cfg.grid()]
    elapsed = time.perf_counter() - t0
    pts.sort()
    ops, ps = zip(*pts)
    violations = int(np.sum(np.diff(ps) < 0))
    ok = violations == 0 and ps[0] > 0 and elapsed < 10
    report(8, ok, f"{violations} decreases in p*(OP); lowest OP {ops[0]:.2e} gives p*={ps[0]:.4f}; "
                  f"p* range [{ps[0]:.4f}, {ps[-1]:.4f}]; {elapsed:.2f}s")
    assert ok


def test_criterion_9_determinism(report, tmp_path, capsys):
    args = ["simulate", "--preset", "fig3", "--sweep-values", "0.002,0.004", "--replications", "2",
            "--slots", "20", "--warmup", "2", "--window", "100", "--seed", "9"]
    codes = [main(args + ["--out", str(tmp_path / sub)]) for sub in ("a", "b")]
    capsys.readouterr()
    a = (tmp_path / "a" / "fig3.csv").read_bytes()
    b = (tmp_path / "b" / "fig3.csv").read_bytes()
    ok = codes == [0, 0] and a == b
    report(9, ok, f"exit codes {codes}; {len(a)} bytes, identical: {a == b}")
    assert ok
