"""Time integration: Picard iteration of the Duhamel formula, Strang splitting
reference, the k = 1 moment system and the time-derivative operator.

The density-matrix equation is written as

    d_t gamma = -i S gamma - i B(gamma, gamma),    S = flow symbol (see propagator),

whose Duhamel form on a subinterval [t0, t0 + dt] is iterated to a fixed point
with the time integral replaced by the composite trapezoid rule on
``t_quad_nodes`` equispaced nodes.  Iterates are kept in the interaction
picture psi(tau) = exp(i tau S) gamma(t0 + tau), where the free flow drops out.
"""

from dataclasses import dataclass, field

import numpy as np

from . import collision as col
from .functionals import (
    SobolevIndex,
    apply_physical,
    commutator_source,
    plus_weight,
    sobolev_norm,
)
from .propagator import flow_symbol, free_transport_kinetic
from .wigner import KineticState


class SolverError(RuntimeError):
    pass


class NonConvergenceError(SolverError):
    def __init__(self, time, residual, iterations):
        super().__init__(
            f"Picard iteration did not converge at t={time:.6g}: residual {residual:.3e} "
            f"after {iterations} iterations (reduce dt)"
        )
        self.time = time
        self.residual = residual
        self.iterations = iterations


class NonFiniteError(SolverError, FloatingPointError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    T: float = 0.1
    dt: float = 0.005
    picard_tol: float = 1e-12
    max_iter: int = 50
    t_quad_nodes: int = 2
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.T > 0 and self.dt > 0) or self.dt > self.T * (1 + 1e-12):
            raise ValueError("need 0 < dt <= T")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.t_quad_nodes < 2:
            raise ValueError("t_quad_nodes must be at least 2")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")

    def check_dimension(self, d):
        if min(self.alpha, self.beta) <= (d - 1) / 2:
            raise ValueError(f"alpha and beta must exceed (d-1)/2 = {(d - 1) / 2}")

    @property
    def steps(self):
        return max(1, int(round(self.T / self.dt)))

    @property
    def index(self):
        return SobolevIndex(self.alpha, self.beta)


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def append(self, t, state, diag):
        if self.times and not t > self.times[-1]:
            raise ValueError("trajectory times must increase")
        self.times.append(float(t))
        self.states.append(state)
        self.diagnostics.append(diag)

    @property
    def final(self):
        return self.states[-1]


def _check_finite(arrays, t):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteError(f"non-finite values in solution at t={t:.6g}")


def _picard_interval(start, rhs, symbol, t0, cfg, idx, grid):
    """One subinterval of the Duhamel fixed point for a tuple of fields.

    ``rhs`` maps a tuple of Fourier-side arrays to the tuple of nonlinear terms
    N so that d_t u = -i S u - i N(u).  Returns the end values, the iteration
    count, the residual history and the node-wise nonlinear terms.
    """
    n = cfg.t_quad_nodes
    taus = np.linspace(0.0, cfg.dt, n)
    h = taus[1] - taus[0]
    fwd = [np.exp(-1j * tau * symbol) for tau in taus]
    bwd = [np.conj(p) for p in fwd]
    wnorm = lambda a: sobolev_norm(_Wrap(a, grid), idx)
    scales = [max(wnorm(s), 1e-300) for s in start]

    psi = [list(start) for _ in range(n)]
    nonlin = [None] * n
    history = []
    iterations = 0
    while True:
        iterations += 1
        for i in range(n):
            if i == 0 and nonlin[0] is not None:
                continue
            gam = tuple(fwd[i] * p for p in psi[i])
            nonlin[i] = tuple(bwd[i] * z for z in rhs(gam))
        new = [list(start)]
        run = [np.zeros_like(s) for s in start]
        for i in range(1, n):
            run = [r + 0.5 * h * (a + b) for r, a, b in zip(run, nonlin[i - 1], nonlin[i])]
            new.append([s - 1j * r for s, r in zip(start, run)])
        res = 0.0
        for i in range(1, n):
            for c, (a, b) in enumerate(zip(new[i], psi[i])):
                res = max(res, wnorm(fwd[i] * (a - b)) / scales[c])
        _check_finite([a for row in new for a in row], t0 + cfg.dt)
        psi = new
        history.append(res)
        if res < cfg.picard_tol:
            break
        if iterations >= cfg.max_iter:
            raise NonConvergenceError(t0 + cfg.dt, res, iterations)
    end = tuple(fwd[-1] * p for p in psi[-1])
    nodes = [tuple(fwd[i] * z for z in nonlin[i]) for i in range(n)]
    return end, iterations, history, nodes, taus


class _Wrap:
    """Minimal density-matrix stand-in so norms can act on raw arrays."""

    def __init__(self, values, grid):
        self.values = values
        self.grid = grid


def _zeta_integral(nodes, taus, idx, grid, component=0):
    norms = [sobolev_norm(_Wrap(z[component], grid), idx) for z in nodes]
    return float(np.trapezoid(norms, taus))


def _bilinear(kernel, quad):
    if isinstance(kernel, col.Constant) and kernel.c == 0:
        return lambda g1, g2: g1.with_values(np.zeros_like(g1.values))
    return lambda g1, g2: col.b_plus(g1, g2, kernel, quad) - col.b_minus(g1, g2, kernel)


def solve_duhamel(gamma0, kernel, quad, cfg, monitor=None):
    grid = gamma0.grid
    cfg.check_dimension(grid.d)
    idx = cfg.index
    symbol = flow_symbol(grid)
    B = _bilinear(kernel, quad)
    _check_finite([gamma0.values], gamma0.time)

    def rhs(u):
        g = gamma0.with_values(u[0])
        return (B(g, g).values,)

    traj = Trajectory()
    traj.append(gamma0.time, gamma0, {"picardIters": 0, "picardResidual": 0.0,
                                      "residualHistory": [], "zetaIntegral": 0.0})
    state = gamma0.values
    t = gamma0.time
    acc = 0.0
    for _ in range(cfg.steps):
        (state,), iters, hist, nodes, taus = _picard_interval(
            (state,), rhs, symbol, t, cfg, idx, grid
        )
        acc += _zeta_integral(nodes, taus, idx, grid)
        t = t + cfg.dt
        snap = gamma0.with_values(state, t)
        diag = {"picardIters": iters, "picardResidual": hist[-1],
                "residualHistory": hist, "zetaIntegral": acc}
        traj.append(t, snap, diag)
        if monitor is not None:
            monitor(snap, diag)
    return traj


def time_derivative(gamma, kernel, quad):
    """d_t gamma = (i/2)(Lap_x - Lap_x') gamma - i B(gamma, gamma)."""
    free = -1j * flow_symbol(gamma.grid) * gamma.values
    if isinstance(kernel, col.Constant) and kernel.c == 0:
        return gamma.with_values(free)
    return gamma.with_values(free - 1j * col.collide(gamma, kernel, quad).values)


def kinetic_collision(kernel, quad):
    """Q(f, f) on the kinetic side, matching -i W[B(gamma, gamma)] for constant kernels."""
    if isinstance(kernel, col.Constant):
        if kernel.c == 0:
            return lambda f: np.zeros_like(f.values)

        def q(f):
            gain = col.spectral_gain_kinetic(f, kernel, quad).values
            return gain - col.q_loss_oracle(f, f, kernel, quad).values

        return q
    return lambda f: col.q_oracle(f, kernel, quad).values


def solve_splitting(f0, kernel, quad, cfg, collision_op=None, monitor=None):
    """Strang splitting: half transport, Heun collision step, half transport."""
    grid = f0.grid
    q = collision_op or kinetic_collision(kernel, quad)
    traj = Trajectory()
    f = f0
    traj.append(f.time, f, _negativity(f))
    for _ in range(cfg.steps):
        t_end = f.time + cfg.dt
        f = free_transport_kinetic(f, 0.5 * cfg.dt)
        k1 = q(f)
        k2 = q(f.with_values(f.values + cfg.dt * k1))
        f = f.with_values(f.values + 0.5 * cfg.dt * (k1 + k2))
        f = free_transport_kinetic(f, 0.5 * cfg.dt)
        f = KineticState(f.values, grid, t_end)
        _check_finite([f.values], t_end)
        diag = _negativity(f)
        traj.append(t_end, f, diag)
        if monitor is not None:
            monitor(f, diag)
    return traj


def _negativity(f):
    peak = float(np.abs(f.values).max()) if f.values.size else 0.0
    low = float(f.values.min()) if f.values.size else 0.0
    return {"minValue": low, "negativeRelative": 0.0 if peak == 0 else max(-low, 0.0) / peak}


def solve_moment_system_plus(gamma0, kernel, quad, cfg, k=1, monitor=None, source="lattice"):
    """Coupled Duhamel system for gamma_{1,+} = <x+x'> gamma and zeta_{1,+}.

    The pair (gamma, gamma_1) is iterated jointly:
        d_t gamma   = -i S gamma   - i B(gamma, gamma)
        d_t gamma_1 = -i S gamma_1 - i B(gamma_1, gamma) - i source(gamma)
    with source = (x+x')/<x+x'> . (grad_x - grad_x') gamma, evaluated in the
    form selected by ``source`` (see functionals.commutator_source).
    ``states`` holds gamma_{1,+}; ``extra['base']`` holds gamma.
    """
    if k != 1:
        raise NotImplementedError("only the first moment system is solved")
    grid = gamma0.grid
    cfg.check_dimension(grid.d)
    idx = cfg.index
    symbol = flow_symbol(grid)
    B = _bilinear(kernel, quad)
    g1_0 = apply_physical(gamma0, plus_weight(grid, 1.0))

    def rhs(u):
        g = gamma0.with_values(u[0])
        g1 = gamma0.with_values(u[1])
        zeta = B(g, g).values
        zeta1 = B(g1, g).values
        return zeta, zeta1 + commutator_source(g, 1, source).values

    traj = Trajectory(extra={"base": [gamma0], "zeta1": []})
    traj.append(gamma0.time, g1_0, {"picardIters": 0, "picardResidual": 0.0,
                                    "residualHistory": [], "zetaIntegral": 0.0})
    state = (gamma0.values, g1_0.values)
    t = gamma0.time
    acc = 0.0
    for _ in range(cfg.steps):
        state, iters, hist, nodes, taus = _picard_interval(state, rhs, symbol, t, cfg, idx, grid)
        acc += _zeta_integral(nodes, taus, idx, grid, component=1)
        t = t + cfg.dt
        snap = gamma0.with_values(state[1], t)
        traj.extra["base"].append(gamma0.with_values(state[0], t))
        diag = {"picardIters": iters, "picardResidual": hist[-1],
                "residualHistory": hist, "zetaIntegral": acc}
        traj.append(t, snap, diag)
        if monitor is not None:
            monitor(snap, diag)
    return traj
