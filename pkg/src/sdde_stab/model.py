import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import newton

from sdde_stab.config import ConstantDelayConfig, DelayConfig, RationalBumpDelayConfig, TableDelayConfig
from sdde_stab.errors import ConstructionError, ModelViolationError, PreconditionError
from sdde_stab.segment import Segment
from sdde_stab.spectrum import LinearCoefficients, real_root_kappa
from sdde_stab.utils.logger import get_logger

Branch = Literal["auto", "affine", "exponential"]


class DelayFunction(ABC):
    """An even delay function r(s) of the current state s = x(t)."""

    kind: str

    @abstractmethod
    def __call__(self, s: float) -> float: ...

    @abstractmethod
    def derivative(self, s: float) -> float: ...

    def evaluate(self, s: np.ndarray) -> np.ndarray:
        return np.array([self(float(x)) for x in np.asarray(s)])

    @property
    def r0(self) -> float:
        return self(0.0)


class ConstantDelay(DelayFunction):
    kind = "constant"

    def __init__(self, config: ConstantDelayConfig):
        self.config = config
        self._r0 = config.r0

    def __call__(self, s: float) -> float:
        return self._r0

    def derivative(self, s: float) -> float:
        return 0.0

    def __repr__(self) -> str:
        return f"ConstantDelay(r0={self._r0})"


class RationalBumpDelay(DelayFunction):
    """r(s) = 1 / (1 + c s^2)"""

    kind = "rational_bump"

    def __init__(self, config: RationalBumpDelayConfig):
        self.config = config
        self._c = config.c

    def __call__(self, s: float) -> float:
        return 1.0 / (1.0 + self._c * s * s)

    def derivative(self, s: float) -> float:
        return -2.0 * self._c * s / (1.0 + self._c * s * s) ** 2

    def __repr__(self) -> str:
        return f"RationalBumpDelay(c={self._c})"


class TableDelay(DelayFunction):
    """
    Tabulated delay, interpolated in |s| by a cubic spline with zero slope at both
    table ends. The even extension is C1 at 0 and the constant extension beyond the
    table is C1 at the last abscissa.
    """

    kind = "user_table"

    def __init__(self, config: TableDelayConfig):
        self.config = config
        self._s_max = config.s[-1]
        self._spline = CubicSpline(config.s, config.r, bc_type=((1, 0.0), (1, 0.0)))

    def __call__(self, s: float) -> float:
        return float(self._spline(min(abs(s), self._s_max)))

    def derivative(self, s: float) -> float:
        if abs(s) >= self._s_max:
            return 0.0
        return math.copysign(1.0, s) * float(self._spline(abs(s), 1))

    def evaluate(self, s: np.ndarray) -> np.ndarray:
        return self._spline(np.minimum(np.abs(np.asarray(s, dtype=np.float64)), self._s_max))

    def __repr__(self) -> str:
        return f"TableDelay(points={len(self.config.s)}, r0={self.r0})"


def setup_delay(config: DelayConfig) -> DelayFunction:
    if config.kind == "constant":
        return ConstantDelay(config)
    elif config.kind == "rational_bump":
        return RationalBumpDelay(config)
    elif config.kind == "user_table":
        return TableDelay(config)
    raise ValueError(f"Unknown delay kind {config.kind}")


@dataclass
class HypothesisCheck:
    passed: bool
    message: str
    worst_s: float | None = None
    enforced: bool = True


@dataclass
class ValidationReport:
    """Pass/fail per delay hypothesis, with the worst violating sample."""

    checks: dict[str, HypothesisCheck] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks.values() if check.enforced)

    @property
    def failures(self) -> list[str]:
        return [f"{name}: {check.message}" for name, check in self.checks.items() if check.enforced and not check.passed]

    def __str__(self) -> str:
        return ", ".join(f"{name}={'pass' if check.passed else 'fail'}" for name, check in self.checks.items())


def validate_delay(
    delay: DelayFunction, grid_span: float, grid_points: int, a: float | None = None
) -> ValidationReport:
    """
    Check the delay hypotheses on the grid [-grid_span, grid_span] (0 always included):
    DF1 r is C1, DF2 0 < r(s) <= r(0), DF3 r is even, DF4 r(0) = 1. If `a` is given,
    DF5 |r'(s)| < 1/(4a^2) on [-2a, 2a] is reported as well, but never enforced.
    """
    if grid_points < 3:
        raise PreconditionError(f"Delay validation needs at least 3 grid points, got {grid_points}")
    s = np.union1d(np.linspace(-grid_span, grid_span, grid_points), [0.0])
    r = delay.evaluate(s)
    r_mirror = delay.evaluate(-s)
    dr = np.array([delay.derivative(float(x)) for x in s])
    r0 = delay.r0
    report = ValidationReport()

    # DF1: finite values and a derivative consistent with central differences
    step = 1e-6
    central = (delay.evaluate(s + step) - delay.evaluate(s - step)) / (2 * step)
    mismatch = np.abs(central - dr) / np.maximum(1.0, np.abs(dr))
    finite = np.all(np.isfinite(r)) and np.all(np.isfinite(dr))
    worst = int(np.argmax(mismatch))
    passed = bool(finite and mismatch[worst] < 1e-4)
    report.checks["DF1"] = HypothesisCheck(
        passed, f"max derivative mismatch {mismatch[worst]:.3e} at s={s[worst]:.6g}", float(s[worst])
    )

    # DF2: 0 < r(s) <= r(0)
    excess = np.maximum(r - r0, -r)
    worst = int(np.argmax(excess))
    passed = bool(np.all(r > 0) and np.all(r <= r0 + 1e-12))
    report.checks["DF2"] = HypothesisCheck(passed, f"r({s[worst]:.6g})={r[worst]:.6g}, r(0)={r0:.6g}", float(s[worst]))

    # DF3: r(s) = r(-s)
    asymmetry = np.abs(r - r_mirror)
    worst = int(np.argmax(asymmetry))
    passed = bool(asymmetry[worst] <= 1e-12)
    report.checks["DF3"] = HypothesisCheck(passed, f"|r(s)-r(-s)|={asymmetry[worst]:.3e} at s={s[worst]:.6g}", float(s[worst]))

    # DF4: r(0) = 1
    report.checks["DF4"] = HypothesisCheck(bool(abs(r0 - 1.0) <= 1e-12), f"r(0)={r0:.6g}", 0.0)

    if a is not None:
        s5 = np.linspace(-2 * a, 2 * a, grid_points)
        slopes = np.abs([delay.derivative(float(x)) for x in s5])
        worst = int(np.argmax(slopes))
        bound = 1.0 / (4 * a * a)
        report.checks["DF5"] = HypothesisCheck(
            bool(slopes[worst] < bound),
            f"max |r'(s)|={slopes[worst]:.6g} at s={s5[worst]:.6g}, bound 1/(4a^2)={bound:.6g}",
            float(s5[worst]),
            enforced=False,
        )

    return report


class DelayEquation(ABC):
    """
    A scalar equation x'(t) = f(x_t) with a single discrete, possibly state-dependent,
    delay: f(phi) = combine(phi(0), phi(-lag(phi(0)))).
    """

    h: float

    @abstractmethod
    def lag(self, y: float) -> float:
        """The delay at the current state y, in (0, h]."""
        ...

    @abstractmethod
    def combine(self, y: float, lagged: float) -> float:
        """The right-hand side from the current and the delayed value."""
        ...

    @property
    @abstractmethod
    def coefficients(self) -> LinearCoefficients: ...

    def rhs_f(self, phi: Segment) -> float:
        y = float(phi.values[-1])
        return self.combine(y, phi.eval(-self.lag(y)))

    def linear_part(self, phi: Segment) -> float:
        c = self.coefficients
        return c.A * float(phi.values[-1]) + c.B * phi.eval(-c.h)

    def nonlinear_part(self, phi: Segment) -> float:
        return self.rhs_f(phi) - self.linear_part(phi)

    def compatibility_residual(self, phi: Segment) -> float:
        """phi'(0) - f(phi), which vanishes exactly on the solution manifold."""
        return float(phi.derivatives[-1]) - self.rhs_f(phi)


@dataclass(frozen=True)
class Model(DelayEquation):
    """The exchange-rate model x'(t) = a [x(t) - x(t - r(x(t)))] - |x(t)| x(t)."""

    a: float
    delay: DelayFunction
    h: float = 1.0
    validation_span: float = 10.0
    validation_points: int = 2001

    def __post_init__(self):
        if not self.a > 0:
            raise ModelViolationError(f"The model parameter must be positive, got a={self.a}")
        if self.h != 1.0:
            raise ModelViolationError(f"The exchange-rate model has delay horizon h = r(0) = 1, got h={self.h}")
        report = validate_delay(self.delay, self.validation_span, self.validation_points)
        if not report.passed:
            raise ModelViolationError(f"Delay {self.delay} violates {'; '.join(report.failures)}")

    def lag(self, y: float) -> float:
        r = self.delay(y)
        if not 0.0 < r <= self.h:
            raise ModelViolationError(f"Delay r({y})={r} outside (0, {self.h}]")
        return r

    def combine(self, y: float, lagged: float) -> float:
        return self.a * (y - lagged) - abs(y) * y

    @property
    def coefficients(self) -> LinearCoefficients:
        return LinearCoefficients.from_a(self.a)

    def linear_part(self, phi: Segment) -> float:
        return self.a * (float(phi.values[-1]) - phi.eval(-1.0))

    def nonlinear_part(self, phi: Segment) -> float:
        y = float(phi.values[-1])
        return self.a * (phi.eval(-1.0) - phi.eval(-self.lag(y))) - abs(y) * y

    def linearization(self) -> "LinearModel":
        return LinearModel(self.coefficients)


@dataclass(frozen=True)
class LinearModel(DelayEquation):
    """The linear equation v'(t) = A v(t) + B v(t - h); its nonlinear part vanishes."""

    linear: LinearCoefficients

    @classmethod
    def from_a(cls, a: float) -> "LinearModel":
        return cls(LinearCoefficients.from_a(a))

    @property
    def h(self) -> float:
        return self.linear.h

    @property
    def coefficients(self) -> LinearCoefficients:
        return self.linear

    def lag(self, y: float) -> float:
        return self.linear.h

    def combine(self, y: float, lagged: float) -> float:
        return self.linear.A * y + self.linear.B * lagged

    def nonlinear_part(self, phi: Segment) -> float:
        return 0.0


def correct_admissible(model: DelayEquation, base: Segment, beta0: float = 0.0) -> Segment:
    """
    Move `base` onto the solution manifold by adding a linear term beta * theta,
    with beta the root of the compatibility residual (secant iteration).
    """

    def shifted(beta: float) -> Segment:
        return Segment(base.theta, base.values + beta * base.theta, base.derivatives + beta, base.h)

    def residual(beta: float) -> float:
        return model.compatibility_residual(shifted(beta))

    beta, result = newton(residual, beta0, tol=1e-16, maxiter=50, full_output=True, disp=False)
    phi = shifted(float(beta))
    defect = abs(model.compatibility_residual(phi))
    if not result.converged and defect > 1e-12:
        raise ConstructionError(f"Compatibility correction did not converge in 50 iterations ({result.flag})")
    if defect > 1e-12:
        raise ConstructionError(f"Compatibility correction left a residual of {defect:.3e}")
    get_logger().debug(f"Corrected segment onto the solution manifold with beta={float(beta):.6e} ({result.iterations} iterations)")
    return phi


def make_admissible(model: DelayEquation, eps: float, branch: Branch = "auto", n: int = 256) -> Segment:
    """
    Initial data of amplitude `eps` on the solution manifold.

    The affine branch is phi(theta) = eps + beta theta with beta in closed form. The
    exponential branch is phi(theta) = eps exp(kappa theta) + beta theta, aligned with
    the real eigendirection kappa, with beta found numerically. `auto` uses the
    exponential branch for a > 1 or when the affine branch is singular.
    """
    h = model.h
    if eps == 0.0:
        return Segment.zero(h=h, n=n)

    if isinstance(model, LinearModel):
        if branch == "exponential":
            raise PreconditionError("The exponential branch is only defined for the exchange-rate model")
        c = model.coefficients
        if abs(1.0 + c.B * c.h) < 1e-12:
            raise ConstructionError("The affine branch is singular for 1 + B h = 0")
        beta = (c.A + c.B) * eps / (1.0 + c.B * c.h)
        return Segment.from_function(lambda theta: eps + beta * theta, lambda theta: beta, h=h, n=n)

    if not isinstance(model, Model):
        raise PreconditionError(f"Cannot construct admissible data for {type(model).__name__}")

    denominator = 1.0 - model.a * model.lag(eps)
    if branch == "auto":
        branch = "exponential" if model.a > 1 or abs(denominator) < 1e-12 else "affine"

    if branch == "affine":
        if abs(denominator) < 1e-12:
            raise ConstructionError(f"The affine branch is singular for a r(eps) = 1 (a={model.a}, eps={eps})")
        beta = -eps * abs(eps) / denominator
        return Segment.from_function(lambda theta: eps + beta * theta, lambda theta: beta, h=h, n=n)

    kappa = real_root_kappa(model.a)
    if kappa is None:
        raise ConstructionError("The exponential branch needs a simple nonzero real root, but a = 1")
    base = Segment.from_function(
        lambda theta: eps * np.exp(kappa * theta), lambda theta: eps * kappa * np.exp(kappa * theta), h=h, n=n
    )
    guess = -eps * abs(eps) / denominator if abs(denominator) >= 1e-12 else 0.0
    return correct_admissible(model, base, guess)


def perturb_stable(model: DelayEquation, phi: Segment, amplitude: float) -> Segment:
    """
    Add `amplitude * exp(kappa theta)`, the eigenfunction of the nonzero real root,
    to `phi` on its own knots and correct the sum back onto the solution manifold.
    """
    kappa = real_root_kappa(model.coefficients)
    if kappa is None:
        raise ConstructionError("The stable eigenfunction needs a simple nonzero real root")
    bump = amplitude * np.exp(kappa * phi.theta)
    return correct_admissible(model, Segment(phi.theta, phi.values + bump, phi.derivatives + kappa * bump, phi.h))
