"""Free evolution in the density-matrix and kinetic pictures.

Kinetic free transport is the exact spectral shear
f_hat(eta, v) -> exp(-i t eta . v) f_hat(eta, v) (Fourier in x only).

The density-matrix flow multiplies gamma_hat(xi, xi') by exp(-i t S) where,
by default, S is eta . v pulled back through the Wigner index bijection.  On
every index pair where neither xi nor xi' wraps around the lattice this equals
(|xi|^2 - |xi'|^2) / 2, the symbol of (Lap_x - Lap_x') / 2; on wrapped pairs the
lattice difference of squares would alias and is replaced by eta . v so that
both pictures stay exactly intertwined.  ``kind="schrodinger"`` selects the
unmodified difference of squares.
"""

import numpy as np

from .wigner import _open_indices, mixed_to_dm


def _axis_sum(grid, table):
    total = 0.0
    for arr in _open_indices(grid, table):
        total = total + arr
    return total


def transport_symbol(grid):
    """eta_s . v_m on the mixed (x-Fourier, velocity) lattice."""
    return _axis_sum(grid, np.outer(grid.xi1, grid.v1))


def flow_symbol(grid, kind="wigner"):
    """Phase rate S of the density-matrix free flow on the (xi, xi') lattice."""
    if kind == "wigner":
        return mixed_to_dm(np.broadcast_to(transport_symbol(grid), grid.pair_shape), grid)
    if kind == "schrodinger":
        xi = grid.xi1
        return _axis_sum(grid, 0.5 * (xi[:, None] ** 2 - xi[None, :] ** 2))
    raise ValueError(f"unknown flow symbol {kind!r}")


def free_flow_dm(gamma, t, kind="wigner"):
    phase = np.exp(-1j * t * flow_symbol(gamma.grid, kind))
    return gamma.with_values(gamma.values * phase, gamma.time + t)


def free_transport_kinetic(f, t):
    g = f.grid
    axes = g.axes_first()
    F = np.fft.fftn(f.values, axes=axes, norm="ortho")
    F *= np.exp(-1j * t * transport_symbol(g))
    out = np.fft.ifftn(F, axes=axes, norm="ortho")
    if np.isrealobj(f.values):
        out = out.real.copy()
    return f.with_values(out, f.time + t)


def support_radius(values, grid, rel_tol=1e-10):
    """Largest |x| over the first d axes carrying modulus above rel_tol * peak."""
    a = np.abs(values)
    peak = a.max() if a.size else 0.0
    if peak == 0.0:
        return 0.0
    mask = (a > rel_tol * peak).reshape(grid.shape + (-1,)).any(axis=-1)
    r = np.sqrt((grid.x() ** 2).sum(axis=0))
    return float(r[mask].max(initial=0.0))
