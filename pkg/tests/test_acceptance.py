"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run ``pytest tests/test_acceptance.py -v``; the summary section lists every
criterion with the measured value next to its tolerance.
"""

import time
from math import pi, sqrt

import numpy as np
from conftest import record

from wignerkin import cli
from wignerkin import estimate_lab as lab
from wignerkin.collision import AngularQuadrature, Constant, collide, q_gain_oracle, q_loss_oracle, q_oracle
from wignerkin.functionals import (
    SobolevIndex,
    apply_physical,
    continuity_probe,
    observables,
    plus_weight,
    sobolev_norm,
    verify_weight_identities,
)
from wignerkin.initial_data import gaussian, maxwellian, random_band_limited
from wignerkin.phase_grid import make_grid
from wignerkin.propagator import free_flow_dm, free_transport_kinetic
from wignerkin.solver import (
    SolverConfig,
    solve_duhamel,
    solve_moment_system_plus,
    solve_splitting,
    time_derivative,
)
from wignerkin.wigner import KineticState, wigner_forward, wigner_forward_complex, wigner_inverse

QUAD = AngularQuadrature(2, 32)
KERNEL = Constant(1.0)


def _rel(a, b):
    return float(np.linalg.norm(np.ravel(a - b)) / np.linalg.norm(np.ravel(b)))


def _finish(number, checks, elapsed, budget):
    """checks: list of (label, value, tolerance, ok)."""
    ok = all(c[3] for c in checks) and elapsed < budget
    detail = "; ".join(f"{label}={value:.3g} (tol {tol:.3g}){'' if good else ' FAIL'}"
                       for label, value, tol, good in checks)
    record(number, ok, f"{detail}; runtime {elapsed:.1f}s < {budget:g}s")
    for label, value, tol, good in checks:
        assert good, f"{label}: {value:.6g} vs tolerance {tol:.6g}"
    assert elapsed < budget


def _le(label, value, tol):
    return (label, float(value), float(tol), bool(value <= tol))


def _ge(label, value, tol):
    return (label, float(value), float(tol), bool(value >= tol))


def test_01_wigner_unitarity():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    checks = []
    for n in (9, 15):
        grid = make_grid(2, n, 3.5)
        f = KineticState(rng.standard_normal(grid.pair_shape), grid)
        g = wigner_inverse(f)
        iso = abs(np.linalg.norm(g.values) - np.linalg.norm(f.values)) / np.linalg.norm(f.values)
        checks.append(_le(f"isometry N={n}", iso, 1e-12))
        checks.append(_le(f"inverse N={n}", _rel(wigner_forward(g).values, f.values), 1e-12))
    _finish(1, checks, time.perf_counter() - start, 1.0)


def test_02_propagator_intertwining():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    grid = make_grid(2, 9, 3.5)
    worst = 0.0
    for _ in range(10):
        f = KineticState(rng.standard_normal(grid.pair_shape), grid)
        t = float(rng.uniform(0.0, 3.0))
        lhs = wigner_forward(free_flow_dm(wigner_inverse(f), t)).values
        worst = max(worst, _rel(lhs, free_transport_kinetic(f, t).values))
    _finish(2, [_le("intertwining", worst, 1e-12)], time.perf_counter() - start, 1.0)


def test_03_collision_invariants():
    start = time.perf_counter()
    grid = make_grid(2, 9, 4.0)
    x, v = grid.x()[:, :, :, None, None], grid.v()[:, None, None, :, :]
    f = KineticState(np.exp(-(x ** 2).sum(0) / 2 - ((v - 0.3) ** 2).sum(0) / 1.5)
                     * (1 + 0.3 * np.cos(x[0])), grid)
    gain, loss = q_gain_oracle(f, f, KERNEL, QUAD).values, q_loss_oracle(f, f, KERNEL, QUAD).values
    q = gain - loss
    energy = (v ** 2).sum(0)
    checks = [_le("mass", abs(q.sum()) / loss.sum(), 1e-8)]
    for a in range(2):
        checks.append(_le(f"momentum_{a}", abs((q * v[a]).sum()) / np.abs(loss * v[a]).sum(), 1e-8))
    checks.append(_le("energy", abs((q * energy).sum()) / (loss * energy).sum(), 1e-8))
    # grid-resolved Maxwellian: velocity period matched to the Gaussian width
    mgrid = make_grid(2, 9, sqrt(pi * 8 / 2))
    m = maxwellian(mgrid)
    m_loss = q_loss_oracle(m, m, KERNEL, QUAD).values
    m_q = q_gain_oracle(m, m, KERNEL, QUAD).values - m_loss
    checks.append(_le("Q(M,M)/loss", np.linalg.norm(m_q) / np.linalg.norm(m_loss), 1e-6))
    _finish(3, checks, time.perf_counter() - start, 30.0)


def test_04_representation_equivalence():
    start = time.perf_counter()
    grid = make_grid(2, 9, 4.0)
    x, v = grid.x()[:, :, :, None, None], grid.v()[:, None, None, :, :]
    f = KineticState(np.exp(-(x ** 2).sum(0) / 2 - ((v - 0.3) ** 2).sum(0) / 1.5)
                     * (1 + 0.3 * np.cos(x[0])), grid)
    lhs = wigner_forward_complex(collide(wigner_inverse(f), KERNEL, QUAD))
    err = _rel(lhs, 1j * q_oracle(f, KERNEL, QUAD).values)
    _finish(4, [_le("W[B]-iQ", err, 1e-6)], time.perf_counter() - start, 60.0)


LOSS_FORMS = ("plus_weight_loss", "minus_weight_loss", "separation_loss", "leibniz_loss",
              "difference_gradient_loss")


def test_05_operator_identities():
    start = time.perf_counter()
    n = 19
    grid = make_grid(2, n, sqrt(pi * (n - 1) / 2))
    g1, g2 = random_band_limited(grid, seed=1), random_band_limited(grid, seed=2)
    res = verify_weight_identities(g1, g2, 1, 1, 1, KERNEL, QUAD)
    checks = [_le(name, value, 1e-10 if name in LOSS_FORMS else 1e-6) for name, value in res.items()]
    _finish(5, checks, time.perf_counter() - start, 60.0)


def test_06_duhamel_solver():
    start = time.perf_counter()
    grid = make_grid(2, 9, 3.5)
    f0 = gaussian(grid, 0.1, 1.0, 1.0)
    g0 = wigner_inverse(f0)
    cfg = SolverConfig(T=0.1, dt=0.005, picard_tol=1e-13)
    traj = solve_duhamel(g0, KERNEL, QUAD, cfg)
    ratios = []
    for diag in traj.diagnostics[1:]:
        h = diag["residualHistory"]
        ratios += [h[i + 1] / h[i] for i in range(len(h) - 1) if h[i] > 1e-14]
    finals = [solve_duhamel(g0, KERNEL, QUAD, SolverConfig(T=0.1, dt=dt, picard_tol=1e-14)).final.values
              for dt in (0.01, 0.005, 0.0025)]
    order = np.log2(np.linalg.norm(finals[0] - finals[1]) / np.linalg.norm(finals[1] - finals[2]))
    fs = [wigner_forward(s) for s in traj.states]
    split = solve_splitting(f0, KERNEL, QUAD, cfg).final.values
    obs = [observables(f) for f in fs]
    o0, o1 = obs[0], obs[-1]
    mom_scale = np.abs(fs[0].values).sum() * grid.cell_x * grid.cell_v
    entropy = [o.entropyH for o in obs]
    fmin = min(o.minValue for o in obs)
    checks = [
        _le("picard ratio", max(ratios), 0.5 - 1e-12),
        _ge("order", order, 1.9),
        _le("vs splitting", _rel(fs[-1].values, split), 1e-4),
        _le("mass drift", abs(o1.mass - o0.mass) / o0.mass, 1e-6),
        _le("momentum drift", max(abs(a - b) for a, b in zip(o1.momentum, o0.momentum)) / mom_scale, 1e-6),
        _le("energy drift", abs(o1.kineticEnergy - o0.kineticEnergy) / o0.kineticEnergy, 1e-6),
        _le("entropy increase", max(np.diff(entropy).max(), 0.0), 1e-6 * abs(entropy[0])),
        _ge("min f / max f", fmin / np.abs(fs[0].values).max(), -1e-8),
    ]
    _finish(6, checks, time.perf_counter() - start, 600.0)


def test_07_half_power_scaling():
    start = time.perf_counter()
    grid = make_grid(2, 9, 3.5)
    g0 = wigner_inverse(gaussian(grid, 0.1, 1.0, 1.0))
    dt = 0.003125
    traj = solve_duhamel(g0, KERNEL, QUAD, SolverConfig(T=0.1, dt=dt, picard_tol=1e-13))
    norms = np.array([sobolev_norm(collide(s, KERNEL, QUAD), SobolevIndex(1, 1)) for s in traj.states])
    times = np.asarray(traj.times)
    horizons = (0.0125, 0.025, 0.05, 0.1)
    integrals = []
    for horizon in horizons:
        keep = times <= horizon + 1e-12
        integrals.append(np.trapezoid(norms[keep], times[keep]))
    slope = np.polyfit(np.log(horizons), np.log(integrals), 1)[0]
    _finish(7, [_ge("log-log slope", slope, 0.4)], time.perf_counter() - start, 600.0)


def test_08_moment_system():
    start = time.perf_counter()
    grid = make_grid(2, 9, 3.5)
    g0 = wigner_inverse(gaussian(grid, 0.1, 1.0, 1.0))
    cfg = SolverConfig(T=0.05, dt=0.005, picard_tol=1e-13)
    coupled = solve_moment_system_plus(g0, KERNEL, QUAD, cfg)
    direct = apply_physical(solve_duhamel(g0, KERNEL, QUAD, cfg).final, plus_weight(grid, 1))
    err = _rel(coupled.final.values, direct.values)
    _finish(8, [_le("coupled vs weighted", err, 1e-4)], time.perf_counter() - start, 600.0)


def test_09_estimates_above_threshold():
    start = time.perf_counter()
    target = pi ** 3 / 16
    origin = lab.eval_loss_K(0.0, 0.0, 0.0, 1.0, 1.0)
    sweep = lab.loss_K_sweep(1.0, 1.0)
    sweep_ratio = max(p.value for p in sweep) / origin.value
    ws = (0.0, 4.0, 16.0, 64.0)
    i20 = [lab.eval_I20((w, 0.0), 1.25).value for w in ws]
    i2 = [p.value for p in lab.gain_I2_sweep(1.25, 0.0, (1.0, 4.0, 16.0, 64.0))]
    checks = [
        _le("K origin rel err", abs(origin.value - target) / target, 0.02),
        _le("K sweep sup/origin", sweep_ratio, 3.0),
        _le("I2 sup/first", max(i2) / i2[0], 2.0),
        _le("I20 sup/first", max(i20) / i20[0], 2.0),
    ]
    _finish(9, checks, time.perf_counter() - start, 300.0)


def test_10_estimates_below_threshold():
    start = time.perf_counter()
    slope, _ = lab.plane_growth_slope(0.25)
    ws = (1.0, 4.0, 16.0, 64.0)
    i2_slope = lab.growth_slope(ws, [p.value for p in lab.gain_I2_sweep(0.4, 0.0, ws)])
    mismatches, bound_violations = 0, 0
    for beta in (0.4, 0.6, 1.0, 1.5, 2.0):
        for eps in (0.0, 0.05, 0.2):
            for which in ("I", "Iprime"):
                r = lab.dyadic_check((30.0, 1.0), beta, eps, 40, which)
                mismatches += lab.series_diverges(r.partial_sums) != (r.exponent >= 0)
                bound_violations += not r.direct <= r.bound
    checks = [
        _le("|slope - 0.5|", abs(slope - 0.5), 0.05),
        _ge("I2 growth slope", i2_slope, 0.1),
        _le("dyadic divergence mismatches", mismatches, 0),
        _le("dyadic bound violations", bound_violations, 0),
    ]
    _finish(10, checks, time.perf_counter() - start, 300.0)


def test_11_continuity():
    start = time.perf_counter()
    grid = make_grid(2, 9, 3.5)
    g0 = wigner_inverse(gaussian(grid, 0.1, 1.0, 1.0))
    cfg = SolverConfig(T=0.1, dt=0.005, picard_tol=1e-13)
    rows = continuity_probe(g0, (1e-2, 1e-3, 1e-4), KERNEL, QUAD, cfg, seed=3)
    ratios = [r["ratio"] for r in rows]
    spread = max(ratios) / min(ratios) - 1.0
    _finish(11, [_le("ratio spread", spread, 0.10)], time.perf_counter() - start, 600.0)


def test_12_time_regularity():
    start = time.perf_counter()
    grid = make_grid(2, 9, 3.5)
    g0 = wigner_inverse(gaussian(grid, 0.1, 1.0, 1.0))
    base = 0.0025
    traj = solve_duhamel(g0, KERNEL, QUAD, SolverConfig(T=0.04, dt=base, picard_tol=1e-14))
    mid = round(0.02 / base)
    exact = time_derivative(traj.states[mid], KERNEL, QUAD).values
    errs = []
    for h in (0.01, 0.005, 0.0025):
        j = round(h / base)
        fd = (traj.states[mid + j].values - traj.states[mid - j].values) / (2 * h)
        errs.append(_rel(fd, exact))
    order = min(np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2]))
    _finish(12, [_ge("observed order", order, 1.9)], time.perf_counter() - start, 120.0)


def test_13_determinism(tmp_path):
    start = time.perf_counter()
    config = tmp_path / "run.ini"
    config.write_text("[initial]\ngenerator = random-seeded\n[solver]\nT = 0.02\n")
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        assert cli.main(["simulate", "--config", str(config), "--out", str(out), "--seed", "42",
                         "--quiet"]) == 0
        outputs.append((out / "trajectory.csv").read_bytes())
    identical = outputs[0] == outputs[1]
    _finish(13, [("byte-identical CSV", float(identical), 1.0, identical)],
            time.perf_counter() - start, 600.0)
