import math

import numpy as np
import pytest

from sdde_stab.classifier import (
    REDUCED_VERDICTS,
    classify,
    decay_report,
    fit_growth_rate,
    verify_attraction,
)
from sdde_stab.config import (
    AttractionConfig,
    ClassifierConfig,
    IntegratorConfig,
    ReductionConfig,
    SpectrumConfig,
    WindowConfig,
)
from sdde_stab.errors import FitError, PreconditionError
from sdde_stab.integrator import Trajectory, integrate
from sdde_stab.model import LinearModel, Model, make_admissible, perturb_stable
from sdde_stab.projection import CenterBasis, center_coordinate
from sdde_stab.segment import Segment
from sdde_stab.spectrum import LinearCoefficients, real_root_kappa

FAST = IntegratorConfig(step=1e-2)


def test_reduced_verdicts():
    assert REDUCED_VERDICTS["STRICT_STABLE"] == "ASYMPTOTICALLY_STABLE_REDUCED"
    assert REDUCED_VERDICTS["STRICT_UNSTABLE"] == "UNSTABLE_REDUCED"
    assert REDUCED_VERDICTS["INDEFINITE"] == "INCONCLUSIVE"


def test_classify_unstable(unstable_model):
    verdict = classify(unstable_model)
    assert verdict.verdict == "UNSTABLE_LINEAR"
    assert verdict.theorem == "linearized-instability"
    assert verdict.kappa == pytest.approx(1.5936, abs=1e-4)
    assert verdict.reduced is None
    data = verdict.to_dict()
    assert data["a"] == 2.0
    assert data["sigma_u"][0]["re"] == pytest.approx(1.5936, abs=1e-4)
    assert data["sigma_u"][0]["multiplicity"] == 1
    assert len(data["sigma_c"]) == 1
    assert data["rightmost_stable_re"] < 0
    assert "UNSTABLE_LINEAR" in verdict.summary()


def test_classify_linear_stable():
    model = LinearModel(LinearCoefficients(A=-1.0, B=0.25))
    config = ClassifierConfig(spectrum=SpectrumConfig(window=WindowConfig.from_list([-2.0, 2.0, -20.0, 20.0])))
    verdict = classify(model, config)
    assert verdict.verdict == "ASYMPTOTICALLY_STABLE_LINEAR"
    assert verdict.theorem == "linearized-stability"
    assert verdict.kappa is None
    assert verdict.a is None
    assert verdict.to_dict()["sigma_c"] == []


def test_classify_double_root(constant_delay):
    model = Model(a=1.0, delay=constant_delay)
    config = ClassifierConfig(spectrum=SpectrumConfig(window=WindowConfig.from_list([-0.5, 0.5, -0.5, 0.5])))
    verdict = classify(model, config)
    assert verdict.verdict == "INCONCLUSIVE"
    assert verdict.theorem == "center-manifold-reduction"
    assert verdict.reason == "center space is not a simple zero root"
    assert verdict.to_dict()["sigma_c"][0]["multiplicity"] == 2


def test_classify_double_root_default_window(constant_delay):
    verdict = classify(Model(a=1.0, delay=constant_delay))
    assert verdict.verdict == "INCONCLUSIVE"
    assert verdict.reason == "center space is not a simple zero root"
    assert [root["multiplicity"] for root in verdict.to_dict()["sigma_c"]] == [2]


def test_classify_critical(stable_model):
    config = ClassifierConfig(reduction=ReductionConfig(eps_values=[0.1], horizon=60.0), integrator=FAST)
    verdict = classify(stable_model, config)
    assert verdict.verdict == "ASYMPTOTICALLY_STABLE_REDUCED"
    assert verdict.theorem == "center-manifold-reduction"
    assert verdict.lyapunov == "STRICT_STABLE"
    assert verdict.cross_check == "STRICT_STABLE"
    assert verdict.reduced.c_fitted == pytest.approx(2.0, rel=0.1)
    assert verdict.decay is not None
    assert (verdict.decay.t0, verdict.decay.t1) == (30.0, 60.0)
    assert verdict.to_dict()["reduced"]["c_analytic"] == pytest.approx(2.0)


def test_classify_critical_fit_failure(stable_model):
    config = ClassifierConfig(reduction=ReductionConfig(eps_values=[0.1], horizon=3.0), integrator=FAST)
    verdict = classify(stable_model, config)
    assert verdict.verdict == "INCONCLUSIVE"
    assert verdict.reason.startswith("reduced field fit failed")


def test_decay_report_zero_solution(stable_model):
    traj = integrate(stable_model, Segment.zero(), 10.0, FAST)
    report = decay_report(traj, 5.0, 10.0)
    assert report.mean_tx == 0.0
    assert math.isnan(report.exp_rate)
    assert not report.is_exponential()
    with pytest.raises(PreconditionError):
        decay_report(traj, 0.0, 10.0)
    with pytest.raises(PreconditionError):
        decay_report(traj, 5.0, 11.0)


def test_decay_report_exponential():
    # The linear solution decays like exp(-0.56 t)
    model = LinearModel(LinearCoefficients(A=-1.0, B=0.25))
    traj = integrate(model, make_admissible(model, 0.1), 30.0, FAST)
    report = decay_report(traj, 10.0, 30.0)
    assert report.exp_rate == pytest.approx(0.5616, abs=2e-3)
    assert report.is_exponential()
    assert not report.is_algebraic(kappa=-0.5616)


def test_fit_growth_rate(unstable_model):
    traj = integrate(unstable_model, make_admissible(unstable_model, 1e-4), 5.0, FAST)
    fit = fit_growth_rate(traj)
    assert fit.rate == pytest.approx(real_root_kappa(2.0), rel=0.02)
    assert fit.r2 > 0.999
    assert fit.n_samples > 100
    with pytest.raises(FitError):
        fit_growth_rate(traj, amp_lo=0.5, amp_hi=0.9)


def test_fit_growth_rate_ignores_saturated_regime(unstable_model):
    traj = integrate(unstable_model, make_admissible(unstable_model, 1e-4), 20.0, FAST)
    fit = fit_growth_rate(traj)
    crossing = traj.times[np.flatnonzero((traj.times >= 0) & (np.abs(traj.values) > 1e-2))[0]]
    assert fit.t_window[1] < crossing
    assert fit.rate == pytest.approx(real_root_kappa(2.0), rel=0.02)


def test_fit_growth_rate_stops_at_first_exit(unstable_model):
    # Growth at rate 1 up to |x| = 0.3, then decay at rate 3 back through the band
    t = np.linspace(0.0, 20.0, 2001)
    x = np.where(t <= 8.0, 1e-4 * np.exp(t), 1e-4 * np.exp(8.0) * np.exp(-3.0 * (t - 8.0)))
    traj = Trajectory(
        model=unstable_model,
        initial=Segment.zero(),
        times=t,
        values=x,
        derivatives=np.gradient(x, t),
        status="completed",
    )
    fit = fit_growth_rate(traj)
    assert fit.rate == pytest.approx(1.0, rel=1e-9)
    assert fit.t_window[1] < np.log(100.0)


def test_attraction_preconditions(stable_model, unstable_model, constant_delay):
    with pytest.raises(PreconditionError):
        verify_attraction(stable_model, make_admissible(stable_model, 0.3))
    with pytest.raises(PreconditionError):
        verify_attraction(unstable_model, make_admissible(unstable_model, 1e-3))
    with pytest.raises(PreconditionError):
        verify_attraction(Model(a=1.0, delay=constant_delay), Segment.zero())


def test_attraction_trivial(stable_model):
    report = verify_attraction(stable_model, Segment.zero(), AttractionConfig(horizon=5.0), FAST)
    assert report.trivial
    assert report.z0 == 0.0
    assert np.all(report.distances == 0.0)
    assert report.to_dict()["rate"] is None


def test_attraction_phase_matched(stable_model):
    phi = perturb_stable(stable_model, make_admissible(stable_model, 0.05), 0.01)
    report = verify_attraction(stable_model, phi, AttractionConfig(horizon=10.0), FAST)
    assert not report.trivial
    assert report.shadow == "phase_matched"
    assert report.rate == pytest.approx(abs(report.kappa), rel=0.25)
    assert report.r2 > 0.95
    df = report.to_frame()
    assert list(df.columns) == ["t", "distance"]
    assert df["t"].iloc[0] == 2.5


def test_attraction_coordinate_shadow(stable_model):
    phi = perturb_stable(stable_model, make_admissible(stable_model, 0.05), 0.01)
    report = verify_attraction(stable_model, phi, AttractionConfig(horizon=10.0, shadow="coordinate"), FAST)
    assert report.shadow == "coordinate"
    # The coordinate shadow starts with the same center coordinate
    shadow = make_admissible(stable_model, report.shadow_eps, branch="affine")
    assert center_coordinate(CenterBasis.from_a(0.5), shadow) == pytest.approx(report.z0, abs=1e-12)
