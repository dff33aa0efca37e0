import numpy as np
import pytest

from sdde_stab.config import IntegratorConfig, ReductionConfig
from sdde_stab.errors import DegenerateProjectionError, FitError, PreconditionError
from sdde_stab.integrator import integrate
from sdde_stab.model import make_admissible
from sdde_stab.projection import CenterBasis
from sdde_stab.reduction import (
    analytic_coefficient,
    analytic_reduced_field,
    center_curve,
    fit_reduced_field,
    integrate_reduced,
    leading_term_verdict,
    lyapunov_check,
)


@pytest.fixture(scope="module")
def decaying_trajectory(stable_model):
    phi = make_admissible(stable_model, 0.1)
    return integrate(stable_model, phi, 60.0, IntegratorConfig(step=1e-2))


@pytest.mark.parametrize("a, c", [(0.25, 4 / 3), (0.5, 2.0), (2.0, -1.0)])
def test_analytic_coefficient(a, c):
    assert analytic_coefficient(a) == pytest.approx(c)
    assert analytic_reduced_field(a, 0.1) == pytest.approx(-c * 0.01)
    assert analytic_reduced_field(a, -0.1) == pytest.approx(c * 0.01)


def test_analytic_coefficient_double_root():
    with pytest.raises(DegenerateProjectionError):
        analytic_coefficient(1.0)


@pytest.mark.parametrize("z0", [0.1, -0.1])
def test_integrate_reduced(z0):
    curve = integrate_reduced(0.5, z0, 10.0)
    assert not curve.escaped
    assert curve.t[-1] == 10.0
    # z' = -2 |z| z has the solution z0 / (1 + 2 |z0| t)
    exact = z0 / (1 + 2 * abs(z0) * curve.t)
    assert np.allclose(curve.z, exact, rtol=0, atol=1e-9)


def test_integrate_reduced_escapes():
    # c = -1 blows up at t = 1 / z0
    curve = integrate_reduced(2.0, 0.1, 100.0)
    assert curve.escaped
    assert curve.t[-1] < 10.0
    assert abs(curve.z[-1]) >= 10.0


def test_integrate_reduced_with_fitted_coefficient():
    curve = integrate_reduced(0.5, 0.1, 5.0, coefficient=0.0)
    assert np.all(curve.z == 0.1)
    with pytest.raises(PreconditionError):
        integrate_reduced(0.5, 0.1, 0.0)


def test_lyapunov_check():
    assert lyapunov_check(lambda z: -abs(z) * z, (1e-3, 0.1)) == "STRICT_STABLE"
    assert lyapunov_check(lambda z: abs(z) * z, (1e-3, 0.1)) == "STRICT_UNSTABLE"
    # z f(z) = -z^2 + 2 z^4 changes sign at |z| = 1 / sqrt(2)
    assert lyapunov_check(lambda z: -z + 2 * z**3, (0.1, 1.0)) == "INDEFINITE"
    with pytest.raises(PreconditionError):
        lyapunov_check(lambda z: -z, (0.0, 0.1))
    with pytest.raises(PreconditionError):
        lyapunov_check(lambda z: -z, (0.2, 0.1))


@pytest.mark.parametrize("c, verdict", [(2.0, "STRICT_STABLE"), (-1.0, "STRICT_UNSTABLE"), (0.0, "INDEFINITE")])
def test_leading_term_verdict(c, verdict):
    assert leading_term_verdict(c) == verdict


def test_center_curve_decays(decaying_trajectory):
    basis = CenterBasis.from_a(0.5)
    z = center_curve(decaying_trajectory, basis, np.array([10.0, 20.0, 40.0, 60.0]))
    assert np.all(z > 0)
    assert np.all(np.diff(z) < 0)
    # Close to the reduced solution z0 / (1 + 2 z0 (t - 10))
    assert z[-1] == pytest.approx(z[0] / (1 + 2 * z[0] * 50.0), rel=0.05)


def test_fit_reduced_field(decaying_trajectory):
    basis = CenterBasis.from_a(0.5)
    field = fit_reduced_field([decaying_trajectory], basis)
    assert field.c_analytic == pytest.approx(2.0)
    assert field.c_fitted == pytest.approx(2.0, rel=0.1)
    assert field.n_samples >= 50
    assert 1e-4 <= field.z_window[0] < field.z_window[1] <= 1e-2
    assert field.t_window[0] >= 5.0 / abs(-1.2564) - 1e-3
    assert field(0.01) == pytest.approx(-field.c_fitted * 1e-4)
    data = field.to_dict()
    assert data["window"] == list(field.z_window)
    assert "z_window" not in data


def test_fit_reduced_field_errors(stable_model, decaying_trajectory):
    basis = CenterBasis.from_a(0.5)
    short = integrate(stable_model, make_admissible(stable_model, 0.1), 2.0, IntegratorConfig(step=1e-2))
    with pytest.raises(FitError):
        fit_reduced_field([short], basis)
    with pytest.raises(FitError):
        fit_reduced_field([decaying_trajectory], basis, ReductionConfig(z_min=0.5, z_max=0.9))
    with pytest.raises(FitError):
        fit_reduced_field([decaying_trajectory], basis, ReductionConfig(min_samples=100_000))
