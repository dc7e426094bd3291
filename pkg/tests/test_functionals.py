import numpy as np
import pytest

from wignerkin.collision import AngularQuadrature, Constant
from wignerkin.functionals import (
    SobolevIndex,
    apply_physical,
    bilinear_estimate_probe,
    commutator_source,
    moment_norm_unchecked,
    observables,
    plus_weight,
    sobolev_norm,
    weighted_moment_norm,
)
from wignerkin.initial_data import gaussian, maxwellian
from wignerkin.phase_grid import make_grid
from wignerkin.propagator import flow_symbol
from wignerkin.wigner import wigner_inverse


@pytest.fixture(scope="module")
def gamma():
    return wigner_inverse(gaussian(make_grid(2, 9, 3.5), 0.1, 1.0, 1.0))


def test_index_validation_and_threshold():
    with pytest.raises(ValueError):
        SobolevIndex(-1.0, 1.0)
    assert SobolevIndex(1.0, 1.0).above_threshold(2)
    assert not SobolevIndex(0.5, 1.0).above_threshold(2)


def test_zero_index_norm_is_l2(gamma):
    np.testing.assert_allclose(sobolev_norm(gamma, SobolevIndex(0, 0)), np.linalg.norm(gamma.values))


def test_norm_is_monotone_in_indices(gamma):
    base = sobolev_norm(gamma, SobolevIndex(1, 1))
    assert sobolev_norm(gamma, SobolevIndex(2, 1)) >= base
    assert sobolev_norm(gamma, SobolevIndex(1, 2)) >= base


def test_moment_norm_guards_index_range(gamma):
    idx = SobolevIndex(1.0, 1.0)
    with pytest.raises(ValueError):
        weighted_moment_norm(gamma, 1, "plus", idx)
    with pytest.raises(ValueError):
        weighted_moment_norm(gamma, 1, "minus", idx)
    assert moment_norm_unchecked(gamma, 1, "plus", idx) > 0
    big = SobolevIndex(3.0, 2.0)
    np.testing.assert_allclose(weighted_moment_norm(gamma, 1, "plus", big),
                               moment_norm_unchecked(gamma, 1, "plus", big))


def test_maxwellian_observables():
    g = make_grid(2, 9, np.sqrt(4 * np.pi))
    f = maxwellian(g, density=1.0, temperature=1.0)
    obs = observables(f)
    volume = (2 * g.L) ** 2
    np.testing.assert_allclose(obs.mass, volume, rtol=1e-3)
    np.testing.assert_allclose(obs.momentum, (0.0, 0.0), atol=1e-12)
    np.testing.assert_allclose(obs.kineticEnergy, volume, rtol=1e-2)
    assert obs.negativityMass == 0.0 and obs.minValue > 0


def test_lattice_source_is_exact_commutator(gamma):
    symbol = flow_symbol(gamma.grid)
    w = plus_weight(gamma.grid, 1)
    lhs = apply_physical(gamma.with_values(symbol * gamma.values), w).values
    rhs = symbol * apply_physical(gamma, w).values + commutator_source(gamma).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12 * np.abs(lhs).max())


def test_analytic_source_approximates_lattice_source(gamma):
    lattice = commutator_source(gamma, form="lattice").values
    analytic = commutator_source(gamma, form="analytic").values
    assert np.linalg.norm(lattice - analytic) < 0.2 * np.linalg.norm(lattice)
    with pytest.raises(ValueError):
        commutator_source(gamma, form="other")


def test_bilinear_probe_reports_finite_constants(gamma):
    out = bilinear_estimate_probe(gamma, gamma, SobolevIndex(1, 1), 0.0, Constant(1.0),
                                  AngularQuadrature(2, 16), t_window=0.2, nodes=3)
    assert np.isfinite(out["C_minus"]) and np.isfinite(out["C_plus"])
    assert out["C_minus"] > 0 and out["C_plus"] > 0
