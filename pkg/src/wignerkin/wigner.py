"""Discrete Wigner transform on the odd-N torus.

A kinetic state f(x, v) is taken to its x-Fourier transform F(eta_s, v_m) and
the density matrix is read off through the index bijection

    gamma_hat(k, k') = F(s, m),   s = k + k',   m = (k - k') * inv2   (mod N),

so ``eta = xi + xi'`` and ``v = (xi - xi') / 2`` hold modulo the lattice.  The
map is a permutation of a unitary DFT, hence an exact isometry.

In the rotated coordinates u = (x + x')/2, y = x - x' the physical density
matrix becomes g(u, y) = ifft_v f(u, .)(y); :func:`rotated` and
:func:`from_rotated` expose that picture for the collision operators.
"""

from dataclasses import dataclass, replace

import numpy as np

from .phase_grid import PhaseGrid, pair_bijection, pair_bijection_inverse


@dataclass(frozen=True)
class KineticState:
    values: np.ndarray
    grid: PhaseGrid
    time: float = 0.0

    def with_values(self, values, time=None):
        return replace(self, values=values, time=self.time if time is None else time)


@dataclass(frozen=True)
class DensityMatrix:
    """Fourier-side density matrix gamma_hat(xi, xi')."""

    values: np.ndarray
    grid: PhaseGrid
    time: float = 0.0

    def with_values(self, values, time=None):
        return replace(self, values=values, time=self.time if time is None else time)

    def physical(self):
        """gamma(x, x') on the lattice."""
        return np.fft.ifftn(self.values, norm="ortho")

    @classmethod
    def from_physical(cls, values, grid, time=0.0):
        return cls(np.fft.fftn(values, norm="ortho"), grid, time)

    def __add__(self, other):
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        return self.with_values(self.values - other.values)

    def __mul__(self, a):
        return self.with_values(a * self.values)

    __rmul__ = __mul__


def _open_indices(grid, table):
    """Broadcast a per-axis (N, N) index table over d axes of a 2d-index array."""
    d = grid.d
    out = []
    for a in range(d):
        shape = [1] * (2 * d)
        shape[a] = grid.N
        shape[d + a] = grid.N
        out.append(table.reshape(shape))
    return out


def _check_grid(obj, grid):
    if grid is not None and obj.grid != grid:
        raise ValueError("grid mismatch")
    shape = obj.values.shape
    if shape != obj.grid.pair_shape:
        raise ValueError(f"array shape {shape} does not match grid {obj.grid.pair_shape}")


def mixed_to_dm(F, grid):
    """Reindex F(s, m) to gamma_hat(k, k')."""
    s, m = pair_bijection(grid.N)
    idx = _open_indices(grid, s) + _open_indices(grid, m)
    return F[tuple(idx)]


def dm_to_mixed(G, grid):
    """Reindex gamma_hat(k, k') to F(s, m)."""
    k, kp = pair_bijection_inverse(grid.N)
    idx = _open_indices(grid, k) + _open_indices(grid, kp)
    return G[tuple(idx)]


def wigner_inverse(f, grid=None):
    """gamma = W^{-1}[f] as a Fourier-side density matrix."""
    _check_grid(f, grid)
    g = f.grid
    F = np.fft.fftn(f.values, axes=g.axes_first(), norm="ortho")
    return DensityMatrix(mixed_to_dm(F, g), g, f.time)


def wigner_forward_complex(gamma, grid=None):
    """W[gamma] without discarding the imaginary part."""
    _check_grid(gamma, grid)
    g = gamma.grid
    F = dm_to_mixed(gamma.values, g)
    return np.fft.ifftn(F, axes=g.axes_first(), norm="ortho")


def wigner_forward(gamma, grid=None, return_residue=False):
    """f = W[gamma].

    The real part is returned as the kinetic state.  With ``return_residue`` the
    relative size of the discarded imaginary part is returned as well; it is
    nonzero exactly when gamma_hat fails the Hermitian symmetry.
    """
    fc = wigner_forward_complex(gamma, grid)
    f = KineticState(fc.real.copy(), gamma.grid, gamma.time)
    if not return_residue:
        return f
    return f, imaginary_residue(fc)


def imaginary_residue(fc):
    total = np.linalg.norm(fc.ravel())
    if total == 0.0:
        return 0.0
    return float(np.linalg.norm(fc.imag.ravel()) / total)


def hermitian_defect(gamma):
    """Norm of the part of gamma_hat violating gamma_hat(k,k') = conj(gamma_hat(-k',-k)),
    relative to the norm of gamma_hat."""
    G = gamma.values
    d = gamma.grid.d
    total = np.linalg.norm(G.ravel())
    if total == 0.0:
        return 0.0
    return float(np.linalg.norm((G - adjoint(G, d)).ravel()) / (2.0 * total))


def adjoint(G, d):
    """conj(G(-k', -k)) for a Fourier-side density matrix array."""
    swapped = np.transpose(G, tuple(range(d, 2 * d)) + tuple(range(d)))
    flipped = np.roll(np.flip(swapped, axis=tuple(range(2 * d))), 1, axis=tuple(range(2 * d)))
    return np.conj(flipped)


def rotated(gamma):
    """g(u, y) = gamma(u + y/2, u - y/2) on the lattice, axes (u..., y...)."""
    F = dm_to_mixed(gamma.values, gamma.grid)
    return np.fft.ifftn(F, norm="ortho")


def from_rotated(g, grid, time=0.0):
    F = np.fft.fftn(g, norm="ortho")
    return DensityMatrix(mixed_to_dm(F, grid), grid, time)


def rotated_to_kinetic(g, grid):
    """Complex W[.] of a rotated-coordinate array: FFT over the y axes."""
    return np.fft.fftn(g, axes=grid.axes_second(), norm="ortho")


def kinetic_to_rotated(fvals, grid):
    return np.fft.ifftn(fvals, axes=grid.axes_second(), norm="ortho")
