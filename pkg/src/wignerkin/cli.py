"""Configuration-driven experiment runner.

Usage: ``wignerkin <command> --config run.ini [--out DIR] [--seed N] [--threads N] [--quiet]``

Commands: simulate, verify-identities, verify-estimates, probe, roundtrip, sweep.
The configuration is sectioned ``key = value`` text; see README.md for the schema.
Every CSV is written atomically (temp file then rename) with 17 significant digits.

Exit codes: 0 success, 1 failed check, 2 configuration error, 3 solver
non-convergence, 4 non-finite values.
"""

import argparse
import configparser
import csv
import io
import os
import sys
import tempfile
from dataclasses import dataclass, field
from math import pi, sqrt

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_NONFINITE = 0, 1, 2, 3, 4

SIMULATE_COLUMNS = (
    "time", "mass", "momentum_x", "momentum_y", "momentum_z", "energy", "entropyH",
    "minValue", "negativityMass", "H_alpha_beta", "Hp1_beta", "H_alpha_bp1",
    "moment_plus_1", "moment_minus_2", "picardIters", "picardResidual", "zeta_L1_accum",
)
CHECK_COLUMNS = ("name", "parameters", "value", "tolerance", "pass")

DEFAULTS = {
    "grid": {"d": "2", "N": "9", "L": "3.5"},
    "kernel": {"variant": "constant", "amplitude": "1.0", "table": "", "quadrature": "32"},
    "solver": {"scheme": "duhamel", "T": "0.1", "dt": "0.005", "picard_tol": "1e-12",
               "max_iter": "50", "t_quad_nodes": "2", "alpha": "1.0", "beta": "1.0"},
    "initial": {"generator": "gaussian", "seed": "0"},
    "output": {"directory": "out", "trajectory_csv": "true", "snapshots": "false"},
    "identities": {"N": "19", "L": "", "a": "1", "b": "1", "k": "1", "quadrature": "32"},
    "estimates": {"resolution": "8", "gain_sweeps": "false"},
    "probe": {"kind": "continuity", "eps": "1e-2, 1e-3, 1e-4", "T": "0.05", "dt": "0.005"},
    "roundtrip": {"sizes": "9, 15", "L": "3.5"},
    "sweep": {"target": "K_loss", "alpha": "1.0", "beta": "1.0", "delta": "0.0",
              "W": "0, 4, 16, 64", "resolution": "8", "n_omega": "256", "kmax": "40"},
}


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- formatting


def fmt(value):
    """17-significant-digit, locale-free rendering used for every CSV cell."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value + 0.0, ".17g")
    if isinstance(value, (tuple, list)):
        return " ".join(fmt(v) for v in value)
    try:
        return format(float(value), ".17g")
    except (TypeError, ValueError):
        return str(value)


def write_csv_atomic(path, columns, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c, "")) for c in columns])
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", encoding="ascii", newline="") as fh:
            fh.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _params(**kw):
    return ";".join(f"{k}={fmt(v)}" for k, v in kw.items())


# ---------------------------------------------------------------- configuration


@dataclass
class Experiment:
    parser: configparser.ConfigParser
    out: str
    seed: int
    quiet: bool = False
    log: list = field(default_factory=list)

    def get(self, section, key, kind=str):
        raw = self.parser.get(section, key, fallback=DEFAULTS.get(section, {}).get(key))
        if raw is None:
            raise ConfigError(f"missing [{section}] {key}")
        try:
            if kind is bool:
                low = raw.strip().lower()
                if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                    raise ValueError(raw)
                return low in ("true", "yes", "1", "on")
            if kind == "floats":
                return [float(x) for x in raw.replace(",", " ").split()]
            if kind == "ints":
                return [int(x) for x in raw.replace(",", " ").split()]
            return kind(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc

    def say(self, msg):
        if not self.quiet:
            print(msg)


def load_config(path, out=None, seed=None, quiet=False):
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"unknown section [{section}]")
    exp = Experiment(parser, out or "", 0, quiet)
    exp.out = out or exp.get("output", "directory")
    exp.seed = seed if seed is not None else exp.get("initial", "seed", int)
    table = exp.get("kernel", "table")
    if table and not os.path.exists(table):
        raise ConfigError(f"kernel table not found: {table}")
    return exp


def _grid(exp):
    from .phase_grid import make_grid

    try:
        return make_grid(exp.get("grid", "d", int), exp.get("grid", "N", int),
                         exp.get("grid", "L", float))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _kernel(exp):
    import numpy as np

    from .collision import AngularQuadrature, Constant, Tabulated

    d = exp.get("grid", "d", int)
    quad = AngularQuadrature(d, exp.get("kernel", "quadrature", int))
    variant = exp.get("kernel", "variant")
    if variant == "constant":
        return Constant(exp.get("kernel", "amplitude", float)), quad
    if variant == "tabulated":
        path = exp.get("kernel", "table")
        if not path:
            raise ConfigError("tabulated kernel needs [kernel] table")
        data = np.load(path)
        sup = float(data["sup_norm"]) if "sup_norm" in data else None
        try:
            return Tabulated(data["radii"], data["cosines"], data["samples"], sup), quad
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad kernel table: {exc}") from exc
    raise ConfigError(f"unknown kernel variant {variant!r}")


def _solver_config(exp, section="solver", **override):
    from .solver import SolverConfig

    vals = dict(
        T=exp.get("solver", "T", float), dt=exp.get("solver", "dt", float),
        picard_tol=exp.get("solver", "picard_tol", float),
        max_iter=exp.get("solver", "max_iter", int),
        t_quad_nodes=exp.get("solver", "t_quad_nodes", int),
        alpha=exp.get("solver", "alpha", float), beta=exp.get("solver", "beta", float),
    )
    vals.update(override)
    try:
        return SolverConfig(**vals)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _initial_state(exp, grid):
    from . import initial_data

    name = exp.get("initial", "generator")
    if name not in initial_data.GENERATORS:
        raise ConfigError(f"unknown generator {name!r}")
    kwargs = {}
    if exp.parser.has_section("initial"):
        for key, raw in exp.parser.items("initial"):
            if key in ("generator", "seed"):
                continue
            try:
                parts = [float(x) for x in raw.replace(",", " ").split()]
            except ValueError as exc:
                raise ConfigError(f"bad value for [initial] {key}: {raw!r}") from exc
            kwargs[key] = parts[0] if len(parts) == 1 else tuple(parts)
    if name == "random-seeded":
        kwargs["seed"] = exp.seed
    try:
        return initial_data.GENERATORS[name](grid, **kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for generator {name!r}: {exc}") from exc


def _write_resolved(exp, command):
    """Record the fully resolved configuration (including the seed) beside the outputs."""
    lines = [f"# command = {command}"]
    for section, keys in DEFAULTS.items():
        lines.append(f"[{section}]")
        names = list(keys)
        if exp.parser.has_section(section):
            names += [k for k in exp.parser.options(section) if k not in keys]
        for key in names:
            value = exp.parser.get(section, key, fallback=keys.get(key, ""))
            if section == "initial" and key == "seed":
                value = str(exp.seed)
            lines.append(f"{key} = {value}")
        lines.append("")
    path = os.path.join(exp.out, f"{command}.resolved.ini")
    os.makedirs(exp.out, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=exp.out, prefix=".tmp-")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
    os.replace(tmp, path)


# ---------------------------------------------------------------- commands


def _trajectory_row(t, gamma, f, diag, idx):
    from .functionals import SobolevIndex, moment_norm_unchecked, observables, sobolev_norm

    obs = observables(f)
    mom = list(obs.momentum) + [""] * (3 - len(obs.momentum))
    return {
        "time": float(t), "mass": obs.mass, "momentum_x": mom[0], "momentum_y": mom[1],
        "momentum_z": mom[2], "energy": obs.kineticEnergy, "entropyH": obs.entropyH,
        "minValue": obs.minValue, "negativityMass": obs.negativityMass,
        "H_alpha_beta": sobolev_norm(gamma, idx),
        "Hp1_beta": sobolev_norm(gamma, SobolevIndex(idx.alpha + 1, idx.beta)),
        "H_alpha_bp1": sobolev_norm(gamma, SobolevIndex(idx.alpha, idx.beta + 1)),
        "moment_plus_1": moment_norm_unchecked(gamma, 1, "plus", idx),
        "moment_minus_2": moment_norm_unchecked(gamma, 1, "minus", idx),
        "picardIters": int(diag.get("picardIters", 0)),
        "picardResidual": float(diag.get("picardResidual", 0.0)),
        "zeta_L1_accum": float(diag.get("zetaIntegral", 0.0)),
    }


def cmd_simulate(exp):
    from .phase_grid import write_field
    from .solver import solve_duhamel, solve_splitting
    from .wigner import wigner_forward, wigner_inverse

    grid = _grid(exp)
    kernel, quad = _kernel(exp)
    cfg = _solver_config(exp)
    f0 = _initial_state(exp, grid)
    scheme = exp.get("solver", "scheme")
    idx = cfg.index
    if scheme == "duhamel":
        traj = solve_duhamel(wigner_inverse(f0), kernel, quad, cfg)
        pairs = [(g, wigner_forward(g)) for g in traj.states]
    elif scheme == "splitting":
        traj = solve_splitting(f0, kernel, quad, cfg)
        pairs = [(wigner_inverse(f), f) for f in traj.states]
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")
    columns = [c for c in SIMULATE_COLUMNS if c != "momentum_z" or grid.d == 3]
    rows = [_trajectory_row(t, g, f, diag, idx)
            for t, (g, f), diag in zip(traj.times, pairs, traj.diagnostics)]
    _write_resolved(exp, "simulate")
    if exp.get("output", "trajectory_csv", bool):
        write_csv_atomic(os.path.join(exp.out, "trajectory.csv"), columns, rows)
    if exp.get("output", "snapshots", bool):
        snap_dir = os.path.join(exp.out, "snapshots")
        os.makedirs(snap_dir, exist_ok=True)
        for n, (g, _) in enumerate(pairs):
            write_field(os.path.join(snap_dir, f"step_{n:05d}.field"), g.values, grid, "fourier")
    exp.say(f"simulate: {len(rows)} snapshots written to {exp.out}")
    return EXIT_OK


def _finish_checks(exp, name, rows):
    _write_resolved(exp, name)
    write_csv_atomic(os.path.join(exp.out, f"{name}.csv"), CHECK_COLUMNS, rows)
    failed = [r for r in rows if not r["pass"]]
    for r in rows:
        exp.say(f"{'PASS' if r['pass'] else 'FAIL'}  {r['name']}  value={fmt(r['value'])}  "
                f"tol={fmt(r['tolerance'])}")
    if failed:
        print("failed checks: " + ", ".join(r["name"] for r in failed), file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def _check(name, value, tol, ok=None, **params):
    passed = bool(value <= tol) if ok is None else bool(ok)
    return {"name": name, "parameters": _params(**params), "value": float(value),
            "tolerance": float(tol), "pass": passed}


LOSS_IDENTITIES = ("plus_weight_loss", "minus_weight_loss", "separation_loss", "leibniz_loss",
                   "difference_gradient_loss")


def cmd_verify_identities(exp):
    from .collision import AngularQuadrature, Constant
    from .functionals import verify_weight_identities
    from .initial_data import random_band_limited
    from .phase_grid import make_grid

    n = exp.get("identities", "N", int)
    raw_l = exp.parser.get("identities", "L", fallback="")
    L = float(raw_l) if raw_l.strip() else sqrt(pi * (n - 1) / 2)
    grid = make_grid(exp.get("grid", "d", int), n, L)
    quad = AngularQuadrature(grid.d, exp.get("identities", "quadrature", int))
    a, b, k = (exp.get("identities", key, int) for key in ("a", "b", "k"))
    g1 = random_band_limited(grid, seed=exp.seed)
    g2 = random_band_limited(grid, seed=exp.seed + 1)
    res = verify_weight_identities(g1, g2, a, b, k, Constant(1.0), quad)
    rows = []
    for name, value in res.items():
        tol = 1e-10 if name in LOSS_IDENTITIES else 1e-6
        rows.append(_check(name, value, tol, N=n, L=L, a=a, b=b, k=k, seed=exp.seed))
    return _finish_checks(exp, "identities", rows)


def _ratio_span(values):
    return max(values) / min(values)


def cmd_verify_estimates(exp):
    from . import estimate_lab as lab

    res = exp.get("estimates", "resolution", int)
    rows = []
    target = pi ** 3 / 16
    k0 = lab.eval_loss_K(0.0, 0.0, 0.0, 1.0, 1.0, resolution=res)
    rows.append(_check("loss_K_origin", k0.value, 0.02 * target,
                       ok=abs(k0.value - target) <= 0.02 * target,
                       alpha=1.0, beta=1.0, target=target, convergence=k0.convergence))
    kb = lab.eval_loss_K(0.0, 0.0, 0.0, 1.0, 3.0, resolution=res)
    fac = float(__import__("numpy").prod(lab.loss_K_origin_factors(1.0, 3.0)))
    rows.append(_check("loss_K_factorized", abs(kb.value - fac) / fac, 1e-4, alpha=1.0, beta=3.0))
    sweep = lab.loss_K_sweep(1.0, 1.0, resolution=res)
    ratio = max(p.value for p in sweep) / k0.value
    rows.append(_check("loss_K_sweep_sup_over_origin", ratio, 3.0, alpha=1.0, beta=1.0,
                       samples=len(sweep)))
    slope, _ = lab.plane_growth_slope(0.25)
    rows.append(_check("plane_growth_slope", abs(slope - 0.5), 0.05, beta=0.25,
                       slope=slope, exponent=0.5))
    i1 = lab.eval_gain_I1((0.0, 0.0), 1.0, resolution=res)
    ref = lab.gain_I1_origin(1.0)
    rows.append(_check("gain_I1_origin", abs(i1.value - ref) / ref, 1e-6, alpha=1.0))
    z = lab.radial_power_integral(1.25)
    zc = lab.radial_power_closed(1.25)
    rows.append(_check("lossA_z_factor", abs(z - zc) / zc, 1e-6, beta=1.25))
    ws = (0.0, 4.0, 16.0, 64.0)
    i20 = [lab.eval_I20((w, 0.0), 1.25, res).value for w in ws]
    rows.append(_check("I20_sup_over_W0_alpha_1.25", max(i20) / i20[0], 2.0, alpha=1.25))
    i20b = [lab.eval_I20((w, 0.0), 0.9, res).value for w in ws[1:]]
    s20 = lab.growth_slope(ws[1:], i20b)
    rows.append(_check("I20_growth_alpha_0.9", s20, 0.0, ok=s20 > 0.05, alpha=0.9, slope=s20))
    for beta, eps in ((1.5, 0.05), (1.5, 0.0), (0.6, 0.05)):
        for which in ("I", "Iprime"):
            r = lab.dyadic_check((30.0, 1.0), beta, eps, 40, which)
            grows = lab.series_diverges(r.partial_sums)
            rows.append(_check(f"dyadic_{which}_beta{beta}_eps{eps}", r.exponent, 0.0,
                               ok=(grows == r.divergent) and r.direct <= r.bound,
                               beta=beta, eps=eps, direct=r.direct, bound=r.bound,
                               constant=r.constant, divergent=r.divergent))
    if exp.get("estimates", "gain_sweeps", bool):
        wg = (1.0, 4.0, 16.0, 64.0)
        i2 = [p.value for p in lab.gain_I2_sweep(1.25, 0.0, wg)]
        rows.append(_check("I2_sup_over_W1_beta_1.25", max(i2) / i2[0], 2.0, beta=1.25))
        i2b = [p.value for p in lab.gain_I2_sweep(0.4, 0.0, wg)]
        s2 = lab.growth_slope(wg, i2b)
        rows.append(_check("I2_growth_beta_0.4", s2, 0.1, ok=s2 > 0.1, beta=0.4, slope=s2))
    return _finish_checks(exp, "estimates", rows)


def cmd_probe(exp):
    from .functionals import continuity_probe
    from .wigner import wigner_inverse

    grid = _grid(exp)
    kernel, quad = _kernel(exp)
    cfg = _solver_config(exp, T=exp.get("probe", "T", float), dt=exp.get("probe", "dt", float))
    kind = exp.get("probe", "kind")
    if kind != "continuity":
        raise ConfigError(f"unknown probe kind {kind!r}")
    gamma0 = wigner_inverse(_initial_state(exp, grid))
    eps = exp.get("probe", "eps", "floats")
    table = continuity_probe(gamma0, eps, kernel, quad, cfg, seed=exp.seed)
    ratios = [r["ratio"] for r in table if r["eps"] != 0]
    rows = [_check(f"continuity_ratio_eps_{fmt(r['eps'])}", r["ratio"], float("inf"),
                   eps=r["eps"], T=cfg.T, dt=cfg.dt) for r in table]
    if len(ratios) > 1:
        spread = _ratio_span(ratios) - 1.0
        rows.append(_check("continuity_ratio_spread", spread, 0.10, count=len(ratios)))
    return _finish_checks(exp, "probe", rows)


def cmd_roundtrip(exp):
    import numpy as np

    from .phase_grid import make_grid
    from .propagator import free_flow_dm, free_transport_kinetic
    from .wigner import KineticState, wigner_forward, wigner_inverse

    rng = np.random.default_rng(exp.seed)
    rows = []
    for n in exp.get("roundtrip", "sizes", "ints"):
        grid = make_grid(exp.get("grid", "d", int), n, exp.get("roundtrip", "L", float))
        f = KineticState(rng.standard_normal(grid.pair_shape), grid)
        g = wigner_inverse(f)
        iso = abs(np.linalg.norm(g.values) - np.linalg.norm(f.values)) / np.linalg.norm(f.values)
        back = wigner_forward(g)
        inv = np.linalg.norm(back.values - f.values) / np.linalg.norm(f.values)
        t = float(rng.uniform(0.1, 2.0))
        lhs = wigner_forward(free_flow_dm(g, t)).values
        rhs = free_transport_kinetic(f, t).values
        inter = np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs)
        rows.append(_check("isometry", iso, 1e-12, N=n, seed=exp.seed))
        rows.append(_check("inverse", inv, 1e-12, N=n, seed=exp.seed))
        rows.append(_check("intertwining", inter, 1e-12, N=n, t=t, seed=exp.seed))
    return _finish_checks(exp, "roundtrip", rows)


def cmd_sweep(exp):
    from . import estimate_lab as lab

    target = exp.get("sweep", "target")
    alpha = exp.get("sweep", "alpha", float)
    beta = exp.get("sweep", "beta", float)
    delta = exp.get("sweep", "delta", float)
    res = exp.get("sweep", "resolution", int)
    ws = exp.get("sweep", "W", "floats")
    if target == "K_loss":
        probes = lab.loss_K_sweep(alpha, beta, resolution=res)
    elif target == "I1_gain":
        probes = [lab.eval_gain_I1((w, 0.0), alpha, resolution=res) for w in ws]
    elif target == "I2_gain":
        probes = lab.gain_I2_sweep(beta, delta, ws, n_omega=exp.get("sweep", "n_omega", int))
    elif target == "I20":
        probes = [lab.eval_I20((w, 0.0), alpha, res) for w in ws]
    elif target == "I21":
        probes = [lab.eval_I21((w, 0.0), beta, delta, resolution=res) for w in ws]
    elif target == "I_lossA":
        probes = lab.eval_lossy_bounds([(w, 0.0) for w in ws], alpha, beta, delta, res)["I_lossA"][1]
    elif target in ("Idyadic", "IdyadicPrime"):
        which = "I" if target == "Idyadic" else "Iprime"
        kmax = exp.get("sweep", "kmax", int)
        probes = []
        for w in ws:
            r = lab.dyadic_check((w, 0.0), beta, delta, kmax, which)
            probes.append(lab.BoundProbe(target, dict(W=w, beta=beta, eps=delta), 0.0, kmax,
                                         r.direct, 0.0,
                                         "divergent" if r.divergent else "finite",
                                         extra={"bound": r.bound}))
    else:
        raise ConfigError(f"unknown sweep target {target!r}")
    rows = [p.row() for p in probes]
    columns = list(rows[0].keys()) if rows else ["target"]
    _write_resolved(exp, "sweep")
    write_csv_atomic(os.path.join(exp.out, "sweep.csv"), columns, rows)
    exp.say(f"sweep: {len(rows)} probes of {target} written to {exp.out}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "verify-identities": cmd_verify_identities,
    "verify-estimates": cmd_verify_estimates,
    "probe": cmd_probe,
    "roundtrip": cmd_roundtrip,
    "sweep": cmd_sweep,
}


def _set_threads(n):
    if n is None:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def build_parser():
    p = argparse.ArgumentParser(prog="wignerkin", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", help="sectioned key = value configuration file")
    p.add_argument("--out", help="output directory (overrides [output] directory)")
    p.add_argument("--seed", type=int, help="random seed (overrides [initial] seed)")
    p.add_argument("--threads", type=int, help="worker threads (fallback: WIGNERKIN_THREADS)")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is None and os.environ.get("WIGNERKIN_THREADS"):
        try:
            threads = int(os.environ["WIGNERKIN_THREADS"])
        except ValueError:
            print("WIGNERKIN_THREADS must be an integer", file=sys.stderr)
            return EXIT_CONFIG
    _set_threads(threads)
    try:
        exp = load_config(args.config, args.out, args.seed, args.quiet)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    from .solver import NonConvergenceError, NonFiniteError

    try:
        return COMMANDS[args.command](exp)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (NonFiniteError, FloatingPointError) as exc:
        print(f"non-finite values: {exc}", file=sys.stderr)
        return EXIT_NONFINITE


if __name__ == "__main__":
    sys.exit(main())
