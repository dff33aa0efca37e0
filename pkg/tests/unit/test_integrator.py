import numpy as np
import pytest

from sdde_stab.config import IntegratorConfig
from sdde_stab.errors import DomainError, InadmissibleError, ModelViolationError, PreconditionError
from sdde_stab.integrator import integrate, integrate_linear, residual
from sdde_stab.model import Model, make_admissible
from sdde_stab.segment import Segment
from sdde_stab.spectrum import LinearCoefficients, real_root_kappa


def test_zero_solution(stable_model):
    traj = integrate(stable_model, Segment.zero(), 5.0)
    assert traj.completed
    assert traj.end_time == 5.0
    assert np.all(traj.values == 0.0)
    assert np.all(traj.derivatives == 0.0)


def test_grid_ends_on_horizon(stable_model):
    traj = integrate(stable_model, make_admissible(stable_model, 0.05), 1.2345, IntegratorConfig(step=0.1))
    assert traj.end_time == 1.2345
    assert np.all(np.diff(traj.times[traj.times >= 0]) > 0)


def test_rejects_bad_horizon(stable_model):
    with pytest.raises(PreconditionError):
        integrate(stable_model, Segment.zero(), 0.0)
    with pytest.raises(PreconditionError):
        integrate(stable_model, Segment.zero(h=2.0), 1.0)


def test_rejects_segment_outside_neighborhood(stable_model):
    with pytest.raises(ModelViolationError):
        integrate(stable_model, Segment.constant(11.0), 1.0)


def test_rejects_inadmissible_segment(stable_model):
    # phi = 0.1 is constant, but f(phi) = -0.01
    with pytest.raises(InadmissibleError):
        integrate(stable_model, Segment.constant(0.1), 1.0)


def test_admissible_solution_is_c1(stable_model):
    phi = make_admissible(stable_model, 0.1)
    traj = integrate(stable_model, phi, 3.0)
    assert traj.completed
    # No derivative jump is recorded at t = 0
    assert np.count_nonzero(traj.times == 0.0) == 1
    assert traj.value(0.0) == pytest.approx(0.1)
    for t in (0.5, 1.0, 2.2, 3.0):
        assert residual(traj, t) < 1e-8


def test_stable_solution_decays(stable_model):
    traj = integrate(stable_model, make_admissible(stable_model, 0.1), 20.0, IntegratorConfig(step=1e-2))
    assert traj.completed
    assert 0 < traj.value(20.0) < 0.1


def test_blowup_stops_integration(unstable_model):
    config = IntegratorConfig(blowup_bound=0.05, step=1e-2)
    traj = integrate(unstable_model, make_admissible(unstable_model, 1e-3), 20.0, config)
    assert traj.status == "blowup_stopped"
    assert not traj.completed
    assert traj.end_time < 20.0
    assert abs(traj.values[-1]) >= 0.05


@pytest.mark.parametrize("max_halvings", [0, 2])
def test_step_failure(stable_model, max_halvings):
    config = IntegratorConfig(step=0.1, residual_tol=1e-14, max_halvings=max_halvings)
    traj = integrate(stable_model, make_admissible(stable_model, 0.1), 1.0, config)
    assert traj.status == "step_failure"
    assert traj.end_time == 0.0


def test_linear_constant_solution():
    traj = integrate_linear(0.5, Segment.constant(1.0), 3.0)
    assert np.allclose(traj.values, 1.0, rtol=0, atol=1e-15)


def test_linear_eigensolution():
    kappa = real_root_kappa(2.0)
    psi = Segment.from_function(lambda t: np.exp(kappa * t), lambda t: kappa * np.exp(kappa * t))
    traj = integrate_linear(2.0, psi, 2.0)
    t = np.array([0.5, 1.0, 1.7, 2.0])
    assert np.allclose(traj.value(t), np.exp(kappa * t), rtol=1e-6, atol=0)


def test_linear_eigensolution_past_blowup_bound():
    # exp(kappa t) passes the blowup bound near t = 1.01
    kappa = real_root_kappa(2.0)
    psi = Segment.from_function(lambda t: np.exp(kappa * t), lambda t: kappa * np.exp(kappa * t))
    traj = integrate_linear(2.0, psi, 3.0)
    assert traj.completed
    assert traj.end_time == 3.0
    t = np.array([1.0, 2.0, 2.5, 3.0])
    assert np.allclose(traj.value(t), np.exp(kappa * t), rtol=1e-6, atol=0)


def test_linear_derivative_jump():
    coefficients = LinearCoefficients(A=-1.0, B=0.25)
    traj = integrate_linear(coefficients, Segment.constant(1.0), 2.0)
    assert np.count_nonzero(traj.times == 0.0) == 2
    # Left derivative at 0 is that of the initial data, the right one is A + B
    assert traj.derivative(0.0) == 0.0
    assert traj.derivative(1e-9) == pytest.approx(-0.75, abs=1e-6)
    # v(t - 1) = 1 on [0, 1], so v = 0.25 + 0.75 exp(-t) there
    assert traj.value(1.0) == pytest.approx(0.25 + 0.75 * np.exp(-1.0), rel=1e-6)


def test_dense_output_order(constant_delay):
    # Residuals at step midpoints shrink like step^4
    model = Model(a=0.5, delay=constant_delay)
    phi = make_admissible(model, 0.1)
    errors = []
    for step in (0.1, 0.05):
        traj = integrate(model, phi, 5.0, IntegratorConfig(step=step, residual_check=False))
        midpoints = np.arange(1.0 + 0.5 * step, 5.0, step)
        errors.append(max(residual(traj, float(t)) for t in midpoints))
    assert 10.0 < errors[0] / errors[1] < 24.0


def test_trajectory_sampling(stable_model):
    traj = integrate(stable_model, make_admissible(stable_model, 0.05), 1.05, IntegratorConfig(step=0.05))
    t = traj.sample_times(0.1)
    assert t[0] == 0.0
    assert t[-1] == 1.05
    assert np.allclose(np.diff(t[:-1]), 0.1)
    df = traj.to_frame(stride=0.1)
    assert list(df.columns) == ["t", "x", "xprime"]
    assert len(df) == len(t)


def test_trajectory_domain(stable_model):
    traj = integrate(stable_model, make_admissible(stable_model, 0.05), 2.0)
    assert traj.value(-1.0) == pytest.approx(traj.initial.values[0])
    with pytest.raises(DomainError):
        traj.value(2.5)
    with pytest.raises(DomainError):
        traj.derivative(-1.5)
