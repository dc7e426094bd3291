import numpy as np
import pytest

from wignerkin.initial_data import GENERATORS, half_band, random_band_limited
from wignerkin.phase_grid import centered, make_grid
from wignerkin.wigner import hermitian_defect, wigner_forward


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_generators_produce_real_finite_states(name):
    g = make_grid(2, 7, 3.0)
    f = GENERATORS[name](g)
    assert f.values.shape == g.pair_shape
    assert np.all(np.isfinite(f.values)) and np.isrealobj(f.values)


def test_random_band_limited_is_seeded_and_band_limited():
    g = make_grid(2, 11, 4.0)
    a, b = random_band_limited(g, seed=5), random_band_limited(g, seed=5)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.allclose(a.values, random_band_limited(g, seed=6).values)
    assert hermitian_defect(a) < 1e-13
    f = wigner_forward(a).values
    spectrum = np.abs(np.fft.fftn(f, axes=(0, 1))).max(axis=(2, 3))
    c = np.abs(centered(11))
    outside = (c[:, None] > 2) | (c[None, :] > 2)
    assert spectrum[outside].max() < 1e-12 * spectrum.max()


def test_half_band_is_a_projection():
    g = make_grid(2, 9, 3.0)
    f = GENERATORS["two-bump"](g)
    once = half_band(f)
    np.testing.assert_allclose(half_band(once).values, once.values, atol=1e-14)
