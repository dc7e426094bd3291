"""Periodic phase-space lattice and the unitary DFT used by every other module.

All arrays are stored in FFT index order (index ``i`` stands for the integer
``i mod N``); the centered representative of each index is available through
:func:`centered`.  Because N is odd, ``2`` is invertible modulo N and the map
``(k, k') -> (k + k', (k - k') * inv2)`` is a bijection of the index square.
"""

from dataclasses import dataclass, field
from pathlib import Path
import os
import tempfile

import numpy as np


def centered(N):
    """Centered integer representatives of 0..N-1 in FFT order."""
    return np.fft.fftfreq(N, 1.0 / N).round().astype(np.int64)


@dataclass(frozen=True)
class PhaseGrid:
    d: int
    N: int
    L: float
    hx: float = field(init=False)
    xi_step: float = field(init=False)
    inv2: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "hx", 2.0 * self.L / self.N)
        object.__setattr__(self, "xi_step", np.pi / self.L)
        object.__setattr__(self, "inv2", (self.N + 1) // 2)

    @property
    def index_set(self):
        """K = {-(N-1)/2, ..., (N-1)/2} in increasing order."""
        h = (self.N - 1) // 2
        return np.arange(-h, h + 1)

    @property
    def ints(self):
        return centered(self.N)

    @property
    def x1(self):
        """Spatial nodes of one axis (FFT order)."""
        return self.hx * self.ints

    @property
    def xi1(self):
        """Fourier nodes of one axis, also the velocity nodes v_m."""
        return self.xi_step * self.ints

    v1 = xi1

    @property
    def dv(self):
        return self.xi_step

    @property
    def cell_x(self):
        return self.hx ** self.d

    @property
    def cell_v(self):
        return self.xi_step ** self.d

    @property
    def shape(self):
        return (self.N,) * self.d

    @property
    def pair_shape(self):
        return (self.N,) * (2 * self.d)

    def mesh(self, axis_values):
        """Stack of d broadcast coordinate arrays on the d-dimensional lattice."""
        return np.stack(np.meshgrid(*([axis_values] * self.d), indexing="ij"))

    def x(self):
        return self.mesh(self.x1)

    def v(self):
        return self.mesh(self.v1)

    def xi(self):
        return self.mesh(self.xi1)

    def axes_first(self):
        return tuple(range(self.d))

    def axes_second(self):
        return tuple(range(self.d, 2 * self.d))

    def axes_all(self):
        return tuple(range(2 * self.d))


def make_grid(d=2, N=9, L=4.0):
    if d not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if int(N) != N or N % 2 == 0:
        raise ValueError("grid size must be odd")
    if N < 5:
        raise ValueError("grid size must be at least 5")
    if not L > 0:
        raise ValueError("box half-width must be positive")
    return PhaseGrid(int(d), int(N), float(L))


def pair_bijection(N):
    """Index maps s[k, k'] = k + k' mod N and m[k, k'] = (k - k') * inv2 mod N."""
    inv2 = (N + 1) // 2
    k = np.arange(N)
    s = (k[:, None] + k[None, :]) % N
    m = ((k[:, None] - k[None, :]) * inv2) % N
    return s, m


def pair_bijection_inverse(N):
    """Index maps k[s, m] = s * inv2 + m and k'[s, m] = s * inv2 - m (mod N)."""
    inv2 = (N + 1) // 2
    i = np.arange(N)
    k = (i[:, None] * inv2 + i[None, :]) % N
    kp = (i[:, None] * inv2 - i[None, :]) % N
    return k, kp


PHYSICAL = "physical"
FOURIER = "fourier"


@dataclass(frozen=True)
class SpectralField:
    values: np.ndarray
    representation: str = PHYSICAL

    def norm(self):
        return float(np.linalg.norm(self.values.ravel()))


def _check_shape(field, grid):
    n = field.values.ndim
    if n not in (grid.d, 2 * grid.d) or any(s != grid.N for s in field.values.shape):
        raise ValueError(
            f"field shape {field.values.shape} does not match grid (d={grid.d}, N={grid.N})"
        )


def to_fourier(field, grid):
    _check_shape(field, grid)
    if field.representation == FOURIER:
        return field
    return SpectralField(np.fft.fftn(field.values, norm="ortho"), FOURIER)


def to_physical(field, grid):
    _check_shape(field, grid)
    if field.representation == PHYSICAL:
        return field
    return SpectralField(np.fft.ifftn(field.values, norm="ortho"), PHYSICAL)


def write_field(path, values, grid, representation):
    """Binary dump: one text header line, then little-endian complex128 values."""
    path = Path(path)
    header = f"d={grid.d} N={grid.N} L={grid.L!r} representation={representation}\n"
    data = np.ascontiguousarray(values, dtype="<c16")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(data.tobytes(order="C"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_field(path):
    """Inverse of :func:`write_field`; returns (values, grid, representation)."""
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        meta = dict(item.split("=", 1) for item in header)
        raw = fh.read()
    grid = make_grid(int(meta["d"]), int(meta["N"]), float(meta["L"]))
    values = np.frombuffer(raw, dtype="<c16")
    n = values.size
    ndim = round(np.log(n) / np.log(grid.N)) if n > 1 else 0
    return values.reshape((grid.N,) * ndim), grid, meta["representation"]
