"""Gain and loss collision operators in the kinetic and density-matrix pictures.

Scale convention: with scale = c * dv^d * N^(d/2) the density-matrix operators
satisfy W[B+-(gamma, gamma)] = i * Q+-(f, f) for f = W[gamma], so the
density-matrix equation  i d_t gamma = -(1/2)(Lap_x - Lap_x') gamma + B(gamma, gamma)
is the Wigner image of  d_t f + v . grad_x f = Q(f, f).

Density-matrix path, rotated coordinates g(u, y) = gamma(u + y/2, u - y/2):

    B-(u, y) = i scale |S| g1(u, y) g2(u, 0)
    B+(u, y) = i scale sum_j w_j g1(u, (I - P_j) y) g2(u, P_j y)

with off-lattice y evaluated by the band-limited interpolant of g(u, .).

Kinetic path: the brute-force oracle sums over the (v, v*) lattice and the
omega nodes.  The default ``form="deposit"`` spreads each product f(v) f(v*)
onto the lattice at the post-collision velocity v' with the periodic Dirichlet
kernel (the band-limited delta).  ``form="pointwise"`` instead evaluates the
band-limited interpolant of f at v', v*' for each lattice (v, v*).  Both
converge to the same continuum operator; only the deposit form is the exact
Wigner image of the density-matrix B+ on a finite lattice.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import math
import warnings

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .wigner import (
    KineticState,
    from_rotated,
    kinetic_to_rotated,
    rotated,
    rotated_to_kinetic,
)

ORACLE_SIZE_BOUND = 9 ** 4


def sphere_measure(d):
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True)
class Constant:
    c: float = 1.0

    def __post_init__(self):
        if not self.c >= 0:
            raise ValueError("kernel amplitude must be nonnegative")

    @property
    def sup_norm(self):
        return float(self.c)


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Bounded kernel b(r, cos theta) sampled on a (radius x cosine) table."""

    radii: np.ndarray
    cosines: np.ndarray
    samples: np.ndarray
    sup_norm: float = field(default=None)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.shape != (len(self.radii), len(self.cosines)):
            raise ValueError("kernel table shape does not match its axes")
        if not np.all(np.isfinite(samples)) or samples.min() < 0:
            raise ValueError("kernel samples must be finite and nonnegative")
        sup = float(samples.max()) if self.sup_norm is None else float(self.sup_norm)
        if sup < samples.max():
            raise ValueError("recorded sup norm is below a stored sample")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sup_norm", sup)

    def __call__(self, r, cos_theta):
        interp = RegularGridInterpolator(
            (np.asarray(self.radii, float), np.asarray(self.cosines, float)),
            self.samples,
            bounds_error=False,
            fill_value=None,
        )
        r = np.clip(r, self.radii[0], self.radii[-1])
        cos_theta = np.clip(cos_theta, self.cosines[0], self.cosines[-1])
        return np.clip(interp(np.stack([r, cos_theta], axis=-1)), 0.0, self.sup_norm)


def _require_constant(kernel):
    if not isinstance(kernel, Constant):
        raise TypeError("density-matrix collision operators accept only a constant kernel")


@dataclass(frozen=True)
class AngularQuadrature:
    """Nodes on S^{d-1}: uniform trapezoid for d = 2, Gauss-Legendre x uniform for d = 3."""

    d: int = 2
    count: int = 32

    def __post_init__(self):
        if self.d not in (2, 3) or self.count < 1:
            raise ValueError("unsupported angular quadrature")

    @property
    def nodes(self):
        return _quad_nodes(self.d, self.count)[0]

    @property
    def weights(self):
        return _quad_nodes(self.d, self.count)[1]

    def __len__(self):
        return len(self.weights)


@lru_cache(maxsize=None)
def _quad_nodes(d, count):
    if d == 2:
        theta = 2.0 * np.pi * np.arange(count) / count
        nodes = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        weights = np.full(count, 2.0 * np.pi / count)
    else:
        n_polar = max(2, int(round(math.sqrt(count / 2.0))))
        n_azim = 2 * n_polar
        z, wz = np.polynomial.legendre.leggauss(n_polar)
        phi = 2.0 * np.pi * np.arange(n_azim) / n_azim
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        rr = np.sqrt(1.0 - zz ** 2)
        nodes = np.stack([rr * np.cos(pp), rr * np.sin(pp), zz], axis=-1).reshape(-1, 3)
        weights = (wz[:, None] * np.full(n_azim, 2.0 * np.pi / n_azim)).ravel()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def post_collision(v, v_star, omega):
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if np.any(np.abs(np.linalg.norm(omega, axis=-1) - 1.0) > 1e-12):
        raise ValueError("omega must be a unit vector")
    shift = np.sum(omega * (v_star - v), axis=-1, keepdims=True) * omega
    return v + shift, v_star - shift


def operator_scale(grid, kernel):
    """Density-matrix operator scale that makes W[B] = i Q on the lattice."""
    return kernel.c * grid.cell_v * grid.N ** (grid.d / 2)


# ---------------------------------------------------------------------------
# band-limited evaluation helpers


def dirichlet(z, grid):
    """Periodic Dirichlet kernel in velocity, D(0) = 1, D(v_m) = 0 for m != 0.

    ``z`` has the velocity components on its last axis.
    """
    theta = 0.5 * grid.hx * np.asarray(z, dtype=float)
    num = np.sin(grid.N * theta)
    den = grid.N * np.sin(theta)
    small = np.abs(den) < 1e-12
    out = np.where(small, 1.0, num / np.where(small, 1.0, den))
    # at theta = pi multiples the limit is +-1 depending on parity of N
    out = np.where(small, np.cos(theta * (grid.N - 1)) if grid.N % 2 else 1.0, out)
    return np.prod(out, axis=-1)


def _lattice_v(grid):
    return grid.v().reshape(grid.d, -1).T


def _lattice_y(grid):
    return grid.x().reshape(grid.d, -1).T


@lru_cache(maxsize=32)
def _gain_matrices(grid, quad):
    """Per omega: matrices evaluating g(u, (I-P) y_b) and g(u, P y_b) from f(u, v_m)."""
    v = _lattice_v(grid)
    y = _lattice_y(grid)
    scale = grid.N ** (-grid.d / 2)
    out = []
    for w in quad.nodes:
        py = (y @ w)[:, None] * w[None, :]
        e_perp = scale * np.exp(1j * (y - py) @ v.T)
        e_par = scale * np.exp(1j * py @ v.T)
        out.append((e_perp, e_par))
    return tuple(out)


def _flat_kinetic(values, grid):
    n = grid.N ** grid.d
    return values.reshape(n, n)


def _gain_from_kinetic(f1, f2, grid, quad, c):
    """Band-limited gain in y-space: returns the rotated array of B+/(i)."""
    a1 = _flat_kinetic(f1, grid)
    a2 = _flat_kinetic(f2, grid)
    acc = np.zeros_like(a1, dtype=complex)
    for (e_perp, e_par), w in zip(_gain_matrices(grid, quad), quad.weights):
        acc += w * (a1 @ e_perp.T) * (a2 @ e_par.T)
    acc *= operator_scale(grid, Constant(c))
    return acc.reshape(grid.pair_shape)


# ---------------------------------------------------------------------------
# density-matrix path


def b_minus(gamma1, gamma2, kernel):
    _require_constant(kernel)
    grid = gamma1.grid
    g1 = rotated(gamma1)
    g2 = rotated(gamma2)
    origin = (slice(None),) * grid.d + (0,) * grid.d
    rho2 = g2[origin][(...,) + (None,) * grid.d]
    k = 1j * operator_scale(grid, kernel) * sphere_measure(grid.d)
    return from_rotated(k * g1 * rho2, grid, gamma1.time)


def b_plus(gamma1, gamma2, kernel, quad, check_support=False):
    _require_constant(kernel)
    grid = gamma1.grid
    if quad.d != grid.d:
        raise ValueError("quadrature dimension does not match grid")
    if check_support:
        for gm in (gamma1, gamma2):
            frac = boundary_fraction(gm)
            if frac > 1e-6:
                warnings.warn(
                    f"density matrix not interior-supported (edge fraction {frac:.2e}); "
                    "band-limited interpolation degrades",
                    RuntimeWarning,
                    stacklevel=2,
                )
    f1 = rotated_to_kinetic(rotated(gamma1), grid)
    f2 = rotated_to_kinetic(rotated(gamma2), grid)
    g = 1j * _gain_from_kinetic(f1, f2, grid, quad, kernel.c)
    return from_rotated(g, grid, gamma1.time)


def collide(gamma, kernel, quad, parts=False):
    """zeta = B(gamma, gamma) = B+ - B-."""
    gain = b_plus(gamma, gamma, kernel, quad)
    loss = b_minus(gamma, gamma, kernel)
    zeta = gain - loss
    if parts:
        return zeta, gain, loss
    return zeta


def boundary_fraction(gamma, radius_fraction=0.5):
    """Share of the norm of g(u, y) located at |u| or |y| beyond radius_fraction * L."""
    grid = gamma.grid
    g = np.abs(rotated(gamma)) ** 2
    r = np.sqrt((grid.x() ** 2).sum(axis=0))
    outside = r > radius_fraction * grid.L
    d = grid.d
    sel = outside[(...,) + (None,) * d] | outside[(None,) * d + (...,)]
    total = g.sum()
    return 0.0 if total == 0 else float(np.sqrt(g[sel].sum() / total))


# ---------------------------------------------------------------------------
# kinetic path


def _kernel_weights(kernel, rel, omega):
    if isinstance(kernel, Constant):
        return kernel.c
    r = np.linalg.norm(rel, axis=-1)
    cos_t = np.where(r > 0, rel @ omega / np.where(r > 0, r, 1.0), 0.0)
    return kernel(r, cos_t)


def _check_oracle_size(f):
    n = f.values.size
    if n > ORACLE_SIZE_BOUND:
        warnings.warn(
            f"brute-force collision oracle on {n} unknowns is expensive",
            RuntimeWarning,
            stacklevel=3,
        )


def _check_pair(f1, f2):
    if f1.grid != f2.grid or f1.values.shape != f2.values.shape:
        raise ValueError("shape mismatch between collision arguments")
    if f1.values.shape != f1.grid.pair_shape:
        raise ValueError("kinetic state shape does not match its grid")


def q_gain_oracle(f1, f2, kernel, quad, form="deposit"):
    """Brute-force gain term Q+(f1, f2) on the lattice."""
    _check_pair(f1, f2)
    _check_oracle_size(f1)
    grid = f1.grid
    v = _lattice_v(grid)
    M = len(v)
    a1 = _flat_kinetic(f1.values, grid)
    a2 = _flat_kinetic(f2.values, grid)
    out = np.zeros(a1.shape, dtype=np.result_type(a1, a2, float))
    vv = np.repeat(v, M, axis=0)  # first velocity of each pair
    vs = np.tile(v, (M, 1))  # partner velocity
    if form == "deposit":
        prod = (a1[:, :, None] * a2[:, None, :]).reshape(a1.shape[0], M * M)
        for w, om in zip(quad.weights, quad.nodes):
            vp, _ = post_collision(vv, vs, om)
            dep = dirichlet(v[None, :, :] - vp[:, None, :], grid)
            b = _kernel_weights(kernel, vs - vv, om)
            out += w * ((prod * b) @ dep)
    elif form == "pointwise":
        for w, om in zip(quad.weights, quad.nodes):
            vp, vsp = post_collision(vv, vs, om)
            e1 = dirichlet(vp[:, None, :] - v[None, :, :], grid)
            e2 = dirichlet(vsp[:, None, :] - v[None, :, :], grid)
            b = _kernel_weights(kernel, vs - vv, om)
            vals = (a1 @ e1.T) * (a2 @ e2.T) * b
            out += w * vals.reshape(a1.shape[0], M, M).sum(axis=2)
    else:
        raise ValueError(f"unknown oracle form {form!r}")
    out *= grid.cell_v
    return KineticState(out.reshape(grid.pair_shape), grid, f1.time)


def q_loss_oracle(f1, f2, kernel, quad):
    """Brute-force loss term Q-(f1, f2) = f1(v) * sum over v*, omega of b f2(v*)."""
    _check_pair(f1, f2)
    grid = f1.grid
    a1 = _flat_kinetic(f1.values, grid)
    a2 = _flat_kinetic(f2.values, grid)
    if isinstance(kernel, Constant):
        rate = kernel.c * np.sum(quad.weights) * a2.sum(axis=1, keepdims=True)
        out = a1 * rate
    else:
        v = _lattice_v(grid)
        rel = v[None, :, :] - v[:, None, :]  # [m, m*] -> v* - v
        bw = sum(w * _kernel_weights(kernel, rel, om) for w, om in zip(quad.weights, quad.nodes))
        out = a1 * (a2 @ bw.T)
    out = out * grid.cell_v
    return KineticState(out.reshape(grid.pair_shape), grid, f1.time)


def q_oracle(f, kernel, quad, form="deposit"):
    gain = q_gain_oracle(f, f, kernel, quad, form)
    loss = q_loss_oracle(f, f, kernel, quad)
    return gain.with_values(gain.values - loss.values)


def spectral_gain_kinetic(f, kernel, quad, f2=None):
    """Gain term via the velocity-Fourier (Bobylev) representation.

    At each spatial point the velocity transform g(y) of f is evaluated at the
    Bobylev pair ((y + |y| s)/2, (y - |y| s)/2), s = R_omega(y/|y|), and the
    products are averaged over the omega nodes.
    """
    _require_constant(kernel)
    f2 = f if f2 is None else f2
    _check_pair(f, f2)
    grid = f.grid
    g1 = _flat_kinetic(kinetic_to_rotated(f.values, grid), grid)
    g2 = _flat_kinetic(kinetic_to_rotated(f2.values, grid), grid)
    coef1, coef2 = _bobylev_matrices(grid, quad)
    acc = np.zeros(g1.shape, dtype=complex)
    for e1, e2, w in zip(coef1, coef2, quad.weights):
        acc += w * (g1 @ e1.T) * (g2 @ e2.T)
    acc *= operator_scale(grid, kernel)
    out = rotated_to_kinetic(acc.reshape(grid.pair_shape), grid)
    if np.isrealobj(f.values) and np.isrealobj(f2.values):
        out = out.real
    return KineticState(out, grid, f.time)


@lru_cache(maxsize=32)
def _bobylev_matrices(grid, quad):
    """Interpolation matrices from lattice g(y_b) to g at the Bobylev points."""
    y = _lattice_y(grid)
    r = np.linalg.norm(y, axis=1)
    yhat = np.where(r[:, None] > 0, y / np.where(r > 0, r, 1.0)[:, None], 0.0)
    e1s, e2s = [], []
    for om in quad.nodes:
        sigma = yhat - 2.0 * (yhat @ om)[:, None] * om[None, :]
        plus = 0.5 * (y + r[:, None] * sigma)
        minus = 0.5 * (y - r[:, None] * sigma)
        e1s.append(_trig_interp_matrix(plus, y, grid))
        e2s.append(_trig_interp_matrix(minus, y, grid))
    return tuple(e1s), tuple(e2s)


def _trig_interp_matrix(points, lattice, grid):
    """Rows interpolate lattice samples (period 2L per axis) at ``points``."""
    theta = (points[:, None, :] - lattice[None, :, :]) * (grid.xi_step / 2.0)
    num = np.sin(grid.N * theta)
    den = grid.N * np.sin(theta)
    small = np.abs(den) < 1e-12
    vals = np.where(small, np.cos(theta * (grid.N - 1)), num / np.where(small, 1.0, den))
    return np.prod(vals, axis=-1)
