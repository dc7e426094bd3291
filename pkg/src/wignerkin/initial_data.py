"""Named initial-data generators on a phase grid."""

import numpy as np

from .phase_grid import centered
from .wigner import KineticState, wigner_inverse


def _pair_mesh(grid):
    x = grid.x()[(slice(None),) + (Ellipsis,) + (None,) * grid.d]
    v = grid.v()[(slice(None),) + (None,) * grid.d + (Ellipsis,)]
    return x, v


def _vec(value, d):
    arr = np.zeros(d) + np.asarray(value, dtype=float)
    return arr.reshape((d,) + (1,) * (2 * d))


def gaussian(grid, amplitude=1.0, x_width=1.0, v_width=1.0, x_center=0.0, v_center=0.0):
    x, v = _pair_mesh(grid)
    dx = x - _vec(x_center, grid.d)
    dv = v - _vec(v_center, grid.d)
    expo = -(dx ** 2).sum(axis=0) / (2 * x_width ** 2) - (dv ** 2).sum(axis=0) / (2 * v_width ** 2)
    return KineticState(amplitude * np.exp(expo), grid)


def maxwellian(grid, density=1.0, temperature=1.0, drift=0.0):
    """Spatially uniform Maxwellian density * (2 pi T)^(-d/2) exp(-|v-u|^2 / 2T)."""
    _, v = _pair_mesh(grid)
    dv = v - _vec(drift, grid.d)
    vals = density * (2 * np.pi * temperature) ** (-grid.d / 2) * np.exp(
        -(dv ** 2).sum(axis=0) / (2 * temperature)
    )
    return KineticState(np.broadcast_to(vals, grid.pair_shape).copy(), grid)


def two_bump(grid, amplitude=1.0, separation=1.5, x_width=0.7, v_width=1.0, drift=0.5):
    """Two Gaussian bumps on the first axis moving towards each other."""
    e = np.zeros(grid.d)
    e[0] = 1.0
    a = gaussian(grid, amplitude, x_width, v_width, -0.5 * separation * e, drift * e)
    b = gaussian(grid, amplitude, x_width, v_width, 0.5 * separation * e, -drift * e)
    return KineticState(a.values + b.values, grid)


def random_kinetic(grid, seed=0, amplitude=1.0, x_width=1.0, v_width=1.0, modes=2, strength=0.3):
    """Nonnegative Gaussian envelope modulated by a seeded smooth random field."""
    rng = np.random.default_rng(seed)
    x, v = _pair_mesh(grid)
    field = 0.0
    for _ in range(modes * grid.d):
        kx = rng.normal(size=grid.d) / x_width
        kv = rng.normal(size=grid.d) / v_width
        phase = rng.uniform(0, 2 * np.pi)
        arg = np.tensordot(kx, x, axes=(0, 0)) + np.tensordot(kv, v, axes=(0, 0)) + phase
        field = field + rng.normal() * np.cos(arg)
    env = gaussian(grid, amplitude, x_width, v_width).values
    return KineticState(env * np.exp(strength * field), grid)


def random_smooth(grid, seed=0, **kw):
    """Hermitian density matrix image of :func:`random_kinetic`."""
    return wigner_inverse(random_kinetic(grid, seed=seed, **kw))


def half_band(f):
    """Drop spatial Fourier modes outside the inner half of the lattice band.

    Products of two such states are alias-free in x, so spectral product rules
    hold to round-off.
    """
    grid = f.grid
    axes = grid.axes_first()
    keep = np.abs(centered(grid.N)) <= (grid.N - 1) // 4
    mask = np.ones((1,) * (2 * grid.d), dtype=bool)
    for a in axes:
        shape = [1] * (2 * grid.d)
        shape[a] = grid.N
        mask = mask & keep.reshape(shape)
    F = np.fft.fftn(f.values, axes=axes) * mask
    out = np.fft.ifftn(F, axes=axes)
    if np.isrealobj(f.values):
        out = out.real
    return f.with_values(out)


def random_band_limited(grid, seed=0, bumps=3, x_spread=0.5, v_spread=0.15):
    """Seeded sum of unit-width Gaussian bumps, restricted to the inner half band.

    Centres are drawn with standard deviations x_spread and v_spread so the
    state stays well inside the box; the density matrix image is returned.
    """
    rng = np.random.default_rng(seed)
    total = 0.0
    for _ in range(bumps):
        weight = rng.uniform(0.5, 1.0)
        xc = rng.normal(scale=x_spread, size=grid.d)
        vc = rng.normal(scale=v_spread, size=grid.d)
        total = total + gaussian(grid, weight, 1.0, 1.0, xc, vc).values
    return wigner_inverse(half_band(KineticState(total, grid)))


GENERATORS = {
    "gaussian": gaussian,
    "maxwellian": maxwellian,
    "two-bump": two_bump,
    "random-seeded": random_kinetic,
}

