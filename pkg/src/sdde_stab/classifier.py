import math
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np
import pandas as pd
from scipy.optimize import newton
from scipy.stats import linregress

from sdde_stab.config import AttractionConfig, ClassifierConfig, IntegratorConfig, SpectrumConfig
from sdde_stab.errors import AttractionError, FitError, PreconditionError
from sdde_stab.integrator import Trajectory, integrate
from sdde_stab.model import DelayEquation, Model, make_admissible
from sdde_stab.projection import CenterBasis, center_coordinate
from sdde_stab.reduction import LyapunovVerdict, ReducedField, fit_reduced_field, leading_term_verdict, lyapunov_check
from sdde_stab.segment import Segment, segment_at
from sdde_stab.spectrum import Root, SpectrumSplit, find_roots, real_root_kappa
from sdde_stab.utils.logger import get_logger

Verdict = Literal[
    "UNSTABLE_LINEAR",
    "ASYMPTOTICALLY_STABLE_LINEAR",
    "UNSTABLE_REDUCED",
    "ASYMPTOTICALLY_STABLE_REDUCED",
    "STABLE_REDUCED",
    "INCONCLUSIVE",
]

Theorem = Literal["linearized-instability", "linearized-stability", "center-manifold-reduction"]

REDUCED_VERDICTS: dict[LyapunovVerdict, Verdict] = {
    "STRICT_STABLE": "ASYMPTOTICALLY_STABLE_REDUCED",
    "STRICT_UNSTABLE": "UNSTABLE_REDUCED",
    "INDEFINITE": "INCONCLUSIVE",
}


@dataclass
class DecayReport:
    """Exponential and power-law fits of |x(t)| over a time window."""

    t0: float
    t1: float
    mean_tx: float
    exp_rate: float
    exp_r2: float
    power_exponent: float
    power_r2: float

    def is_algebraic(self, kappa: float) -> bool:
        """Decay like 1/t: power law of exponent about -1 that fits better than any exponential."""
        return (
            -1.1 <= self.power_exponent <= -0.9
            and self.power_r2 > self.exp_r2
            and self.exp_rate < 0.1 * abs(kappa)
        )

    def is_exponential(self, min_r2: float = 0.99) -> bool:
        return self.exp_rate > 0 and self.exp_r2 > min_r2

    def to_dict(self) -> dict:
        return asdict(self)


def decay_report(traj: Trajectory, t0: float, t1: float, samples: int = 201) -> DecayReport:
    if not 0 < t0 < t1 <= traj.end_time:
        raise PreconditionError(f"Decay window [{t0}, {t1}] must lie in (0, {traj.end_time}]")
    t = np.linspace(t0, t1, samples)
    x = traj.value(t)
    nonzero = x != 0
    mean_tx = float(np.mean(t * x))
    if np.count_nonzero(nonzero) < 3:
        return DecayReport(t0, t1, mean_tx, math.nan, math.nan, math.nan, math.nan)
    log_x = np.log(np.abs(x[nonzero]))
    exponential = linregress(t[nonzero], log_x)
    power = linregress(np.log(t[nonzero]), log_x)
    return DecayReport(
        t0=t0,
        t1=t1,
        mean_tx=mean_tx,
        exp_rate=float(-exponential.slope),
        exp_r2=float(exponential.rvalue**2),
        power_exponent=float(power.slope),
        power_r2=float(power.rvalue**2),
    )


@dataclass
class GrowthFit:
    rate: float
    r2: float
    n_samples: int
    t_window: tuple[float, float]


def fit_growth_rate(traj: Trajectory, amp_lo: float = 1e-4, amp_hi: float = 1e-2) -> GrowthFit:
    """Log-linear fit of |x(t)| on the knots with amp_lo <= |x(t)| <= amp_hi, t >= 0.

    Only knots before |x| first exceeds amp_hi count, so the saturated regime and any
    later return into the band stay out of the fit.
    """
    t, x = traj.times, np.abs(traj.values)
    forward = t >= 0
    above = np.flatnonzero(forward & (x > amp_hi))
    if above.size:
        forward &= np.arange(t.size) < above[0]
    keep = forward & (x >= amp_lo)
    if np.count_nonzero(keep) < 3:
        raise FitError(f"Fewer than 3 samples with {amp_lo} <= |x| <= {amp_hi}")
    fit = linregress(t[keep], np.log(x[keep]))
    return GrowthFit(float(fit.slope), float(fit.rvalue**2), int(np.count_nonzero(keep)), (float(t[keep][0]), float(t[keep][-1])))


def _roots_to_list(roots: list[Root]) -> list[dict]:
    return [{"re": root.lam.real, "im": root.lam.imag, "multiplicity": root.multiplicity} for root in roots]


@dataclass
class StabilityVerdict:
    """A verdict on the stability of the zero solution with the evidence it rests on."""

    verdict: Verdict
    theorem: Theorem
    split: SpectrumSplit
    a: float | None = None
    kappa: float | None = None
    reduced: ReducedField | None = None
    lyapunov: LyapunovVerdict | None = None
    cross_check: LyapunovVerdict | None = None
    decay: DecayReport | None = None
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "verdict": self.verdict,
            "theorem": self.theorem,
            "sigma_u": _roots_to_list(self.split.sigma_u),
            "sigma_c": _roots_to_list(self.split.sigma_c),
            "rightmost_stable_re": self.split.rightmost_stable_re,
            "kappa": self.kappa,
            "reduced": None if self.reduced is None else self.reduced.to_dict(),
            "lyapunov": self.lyapunov,
            "cross_check": self.cross_check,
            "decay": None if self.decay is None else self.decay.to_dict(),
            "reason": self.reason,
        }

    def summary(self) -> str:
        line = f"{self.verdict} ({self.theorem})"
        if self.kappa is not None:
            line += f", kappa={self.kappa:.6g}"
        if self.reduced is not None:
            line += f", c_fitted={self.reduced.c_fitted:.6g} (analytic {self.reduced.c_analytic:.6g})"
        if self.reason is not None:
            line += f": {self.reason}"
        return line


def _reduce(model: DelayEquation, verdict: StabilityVerdict, config: ClassifierConfig) -> StabilityVerdict:
    logger = get_logger()
    split = verdict.split
    if not split.center_is_simple_zero:
        verdict.reason = "center space is not a simple zero root"
        return verdict

    basis = CenterBasis(split.coefficients)
    reduction = config.reduction
    trajectories = []
    for eps in reduction.eps_values:
        phi = make_admissible(model, eps)
        traj = integrate(model, phi, reduction.horizon, config.integrator)
        if not traj.completed:
            verdict.reason = f"trajectory from eps={eps} stopped with status {traj.status} at t={traj.end_time:.6g}"
            return verdict
        trajectories.append(traj)
        logger.debug(f"Simulated eps={eps} to t={reduction.horizon}")

    try:
        field = fit_reduced_field(trajectories, basis, reduction)
    except FitError as e:
        verdict.reason = f"reduced field fit failed: {e}"
        return verdict

    verdict.reduced = field
    verdict.lyapunov = lyapunov_check(field, field.z_window)
    verdict.cross_check = leading_term_verdict(field.c_analytic)
    verdict.verdict = REDUCED_VERDICTS[verdict.lyapunov]
    if verdict.lyapunov == "INDEFINITE":
        verdict.reason = "orbital derivative of z^2/2 changes sign"
    elif verdict.lyapunov != verdict.cross_check:
        logger.warning(f"Fitted reduced field gives {verdict.lyapunov}, its analytic leading term {verdict.cross_check}")

    if verdict.verdict == "ASYMPTOTICALLY_STABLE_REDUCED":
        verdict.decay = decay_report(trajectories[-1], 0.5 * reduction.horizon, reduction.horizon)
    return verdict


def classify(model: DelayEquation, config: ClassifierConfig = ClassifierConfig()) -> StabilityVerdict:
    """
    Decide the stability of the zero solution: spectral instability if any root has
    positive real part, spectral stability if all roots have negative real part, and
    otherwise the sign of the reduced field on the center manifold.
    """
    logger = get_logger()
    split = find_roots(config.spectrum.window, model.coefficients, config.spectrum)
    a = model.a if isinstance(model, Model) else None
    kappa = real_root_kappa(split.coefficients) if split.coefficients.has_zero_root else None

    if split.sigma_u:
        verdict = StabilityVerdict("UNSTABLE_LINEAR", "linearized-instability", split, a=a, kappa=kappa)
    elif not split.sigma_c:
        verdict = StabilityVerdict("ASYMPTOTICALLY_STABLE_LINEAR", "linearized-stability", split, a=a, kappa=kappa)
    else:
        verdict = StabilityVerdict("INCONCLUSIVE", "center-manifold-reduction", split, a=a, kappa=kappa)
        verdict = _reduce(model, verdict, config)
    logger.debug(f"Classified {model}: {verdict.summary()}")
    return verdict


@dataclass
class AttractionReport:
    """Decay of the C1 distance between a solution and its shadow on the center manifold."""

    rate: float
    r2: float | None
    kappa: float | None
    shadow: Literal["phase_matched", "coordinate"]
    shadow_eps: float
    z0: float
    n_samples: int
    times: np.ndarray
    distances: np.ndarray

    @property
    def trivial(self) -> bool:
        return math.isinf(self.rate)

    def to_dict(self) -> dict:
        return {
            "rate": None if self.trivial else self.rate,
            "r2": self.r2,
            "kappa": self.kappa,
            "shadow": self.shadow,
            "shadow_eps": self.shadow_eps,
            "z0": self.z0,
            "n_samples": self.n_samples,
            "trivial": self.trivial,
        }

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.times, "distance": self.distances})


def _shadow_family(model: DelayEquation, eps: float) -> Segment:
    return make_admissible(model, eps, branch="affine")


def verify_attraction(
    model: DelayEquation,
    phi: Segment,
    config: AttractionConfig = AttractionConfig(),
    integrator: IntegratorConfig = IntegratorConfig(),
    spectrum: SpectrumConfig = SpectrumConfig(),
) -> AttractionReport:
    """
    Measure the exponential attraction of the solution from `phi` towards a shadow
    solution on the center manifold. The shadow starts from admissible affine data
    with the center coordinate of `phi` (`coordinate`), or with the center coordinate
    that makes both solutions agree in center coordinate at the end time
    (`phase_matched`). The rate is a log-linear fit of the C1 distance of the
    segments on [T/4, T].
    """
    logger = get_logger()
    norm = phi.norm_c1()
    if norm > config.max_initial_norm:
        raise PreconditionError(f"Initial segment has C1 norm {norm:.6g} > {config.max_initial_norm}")
    split = find_roots(spectrum.window, model.coefficients, spectrum)
    if split.sigma_u:
        raise PreconditionError("Attraction towards the center manifold needs an empty unstable spectrum")
    if not split.center_is_simple_zero:
        raise PreconditionError("Attraction towards the center manifold needs a simple zero root")

    T = config.horizon
    basis = CenterBasis(split.coefficients)
    kappa = real_root_kappa(split.coefficients)
    traj = integrate(model, phi, T, integrator)
    if not traj.completed:
        raise AttractionError(f"Solution stopped with status {traj.status} at t={traj.end_time:.6g}")

    z0 = center_coordinate(basis, phi)
    eps = 0.0
    if z0 != 0.0:
        eps = float(
            newton(lambda e: center_coordinate(basis, _shadow_family(model, e)) - z0, z0, tol=1e-15, maxiter=50, disp=False)
        )
    shadow = integrate(model, _shadow_family(model, eps), T, integrator)

    if config.shadow == "phase_matched" and z0 != 0.0:
        target = center_coordinate(basis, segment_at(traj, T))

        def mismatch(e: float) -> float:
            return center_coordinate(basis, segment_at(integrate(model, _shadow_family(model, e), T, integrator), T)) - target

        if abs(center_coordinate(basis, segment_at(shadow, T)) - target) > 1e-15:
            eps = float(newton(mismatch, eps, tol=1e-15, maxiter=20, disp=False))
            shadow = integrate(model, _shadow_family(model, eps), T, integrator)
        logger.debug(f"Phase-matched shadow amplitude {eps:.12g} (center coordinate {z0:.12g})")

    if not shadow.completed:
        raise AttractionError(f"Shadow solution stopped with status {shadow.status} at t={shadow.end_time:.6g}")

    times = np.linspace(0.25 * T, T, config.samples)
    distances = np.array([(segment_at(traj, t) - segment_at(shadow, t)).norm_c1() for t in times])
    keep = distances > config.noise_floor
    rate, r2 = math.inf, None
    if np.count_nonzero(keep) >= 3:
        fit = linregress(times[keep], np.log(distances[keep]))
        rate, r2 = float(-fit.slope), float(fit.rvalue**2)
    logger.debug(f"Attraction rate {rate:.6g} (R^2={r2}) from {np.count_nonzero(keep)} samples, kappa={kappa}")
    return AttractionReport(
        rate=rate,
        r2=r2,
        kappa=kappa,
        shadow=config.shadow,
        shadow_eps=eps,
        z0=z0,
        n_samples=int(np.count_nonzero(keep)),
        times=times,
        distances=distances,
    )
