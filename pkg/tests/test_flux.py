import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from mgrit_conslaw.flux import (
    DissipationSpec,
    buckley_leverett_flux,
    burgers_flux,
    critical_points,
    dissipation,
    glf_coefficient,
    lf_flux,
    linear_flux,
    linear_lf_flux,
    llf_coefficient,
)

unit = st.floats(0.0, 1.0)
# frozen from tests/oracles/generate_golden.py (dense sampling + bounded scalar minimisation)
BL_MAX_SPEED = 2.33203037585427
BL_ARGMAX = 0.287140728010861


def test_bl_derivative_matches_symbolic_derivative():
    u = sp.symbols("u")
    symbolic = sp.lambdify(u, sp.diff(4 * u**2 / (4 * u**2 + (1 - u) ** 2), u))
    samples = np.linspace(0.0, 1.0, 100)
    np.testing.assert_allclose(buckley_leverett_flux().fprime(samples), symbolic(samples), rtol=1e-12, atol=1e-14)


def test_bl_derivative_frozen_samples():
    np.testing.assert_allclose(buckley_leverett_flux().fprime(np.array([0.1, 0.37, 0.9])),
                               [0.9965397923875432, 2.09039489440552, 0.06816568047337279], rtol=1e-13)


def test_bl_speed_extremum():
    flux = buckley_leverett_flux()
    assert min(abs(c - BL_ARGMAX) for c in flux.critical_points_of_fprime) < 1e-8
    assert glf_coefficient(flux, (0.0, 1.0)) == pytest.approx(BL_MAX_SPEED, rel=1e-12)


def test_bl_courant_number_on_coarsest_mesh():
    h, dt = 2.0 / 64, 2.0 / 187
    assert glf_coefficient(buckley_leverett_flux(), (0.0, 1.0)) * dt / h == pytest.approx(0.7981280430731185, rel=1e-10)


def test_llf_bl_interval_containing_extremum():
    assert llf_coefficient(buckley_leverett_flux(), 0.1, 0.6) == pytest.approx(BL_MAX_SPEED, rel=1e-12)


def test_llf_bl_interval_without_extremum():
    flux = buckley_leverett_flux()
    assert llf_coefficient(flux, 0.8, 0.9) == pytest.approx(float(flux.fprime(0.8)))


def test_burgers_coefficients():
    flux = burgers_flux()
    assert glf_coefficient(flux, (0.0, 1.0)) == 1.0
    np.testing.assert_allclose(llf_coefficient(flux, [-0.3, 0.2], [0.1, 0.7]), [0.3, 0.7])


def test_glf_rejects_invalid_range():
    with pytest.raises(ValueError):
        glf_coefficient(burgers_flux(), (1.0, 0.0))
    with pytest.raises(ValueError):
        glf_coefficient(burgers_flux(), (0.0, np.inf))


def test_dissipation_spec_validation():
    with pytest.raises(ValueError):
        DissipationSpec("upwind")
    with pytest.raises(ValueError):
        DissipationSpec("global", -1.0)


def test_critical_points_of_cubic():
    roots = critical_points(lambda u: (u - 0.25) * (u - 0.75) * (u + 2.0))
    np.testing.assert_allclose(roots, [0.25, 0.75], atol=1e-12)


@given(unit, st.sampled_from(["burgers", "bl"]), st.sampled_from(["global", "local"]))
def test_numerical_flux_is_consistent(u, name, mode):
    flux = burgers_flux() if name == "burgers" else buckley_leverett_flux()
    spec = DissipationSpec(mode, glf_coefficient(flux, (0.0, 1.0)))
    nu = dissipation(flux, spec, np.array([u]), np.array([u]))
    assert lf_flux(np.array([u]), np.array([u]), nu, flux)[0] == pytest.approx(float(flux.f(u)), abs=1e-15)


@given(unit, unit)
def test_llf_never_exceeds_glf(a, b):
    flux = buckley_leverett_flux()
    assert llf_coefficient(flux, a, b) <= glf_coefficient(flux, (0.0, 1.0)) + 1e-12


@given(unit, unit)
def test_llf_dominates_endpoint_speeds(a, b):
    flux = buckley_leverett_flux()
    assert llf_coefficient(flux, a, b) >= max(abs(flux.fprime(a)), abs(flux.fprime(b))) - 1e-15


def test_linear_flux_matches_lf_for_constant_speed():
    flux = linear_flux(0.7)
    a, b = np.array([0.2, 1.0]), np.array([0.5, -1.0])
    expected = lf_flux(a, b, 0.7, flux)
    np.testing.assert_allclose(linear_lf_flux(0.7, a, 0.7, b, 0.7), expected, rtol=1e-14)
