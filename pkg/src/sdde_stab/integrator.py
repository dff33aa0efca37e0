import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Literal

import numpy as np
import pandas as pd
from jaxtyping import Float

from sdde_stab.config import IntegratorConfig
from sdde_stab.errors import DomainError, InadmissibleError, ModelViolationError, PreconditionError
from sdde_stab.hermite import interpolate, interpolate_slope, locate, slope_at, value_at
from sdde_stab.model import DelayEquation, LinearModel
from sdde_stab.segment import DOMAIN_SLACK, Segment, segment_at
from sdde_stab.spectrum import Coefficients, as_coefficients
from sdde_stab.utils.logger import get_logger

Status = Literal["completed", "blowup_stopped", "step_failure"]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    A solution on [-h, T'] as cubic Hermite knots (t_i, x_i, x'_i). The knots on
    [-h, 0] are the initial segment's. T' is the requested horizon unless the
    integration stopped early, which `status` records.
    """

    model: DelayEquation
    initial: Segment
    times: Float[np.ndarray, "knots"]
    values: Float[np.ndarray, "knots"]
    derivatives: Float[np.ndarray, "knots"]
    status: Status

    @property
    def h(self) -> float:
        return self.model.h

    @property
    def end_time(self) -> float:
        return float(self.times[-1])

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    def _pieces(self, t: float | np.ndarray) -> tuple[np.ndarray, ...]:
        points = np.atleast_1d(np.asarray(t, dtype=np.float64))
        slack = DOMAIN_SLACK * max(1.0, self.end_time)
        if np.any(points < -self.h - slack) or np.any(points > self.end_time + slack):
            raise DomainError(f"Cannot evaluate a trajectory on [-{self.h}, {self.end_time}] at t={t}")
        points = np.clip(points, -self.h, self.end_time)
        k = locate(self.times, points, "left")
        pieces = (self.times[k - 1], self.times[k], self.values[k - 1], self.values[k])
        return pieces + (self.derivatives[k - 1], self.derivatives[k], points)

    def value(self, t: float | np.ndarray) -> float | np.ndarray:
        """Dense output x(t). At a repeated knot the left piece is used."""
        result = interpolate(*self._pieces(t))
        return float(result[0]) if np.ndim(t) == 0 else result

    def derivative(self, t: float | np.ndarray) -> float | np.ndarray:
        """Dense output x'(t). At a repeated knot this is the left derivative."""
        result = interpolate_slope(*self._pieces(t))
        return float(result[0]) if np.ndim(t) == 0 else result

    def sample_times(self, stride: float, start: float = 0.0) -> np.ndarray:
        """Times start, start + stride, ... up to and including the end time."""
        n = int(math.floor((self.end_time - start) / stride * (1 + 1e-12)))
        t = np.minimum(start + np.arange(n + 1) * stride, self.end_time)
        if t[-1] < self.end_time:
            t = np.append(t, self.end_time)
        return t

    def to_frame(self, stride: float = 1e-2) -> pd.DataFrame:
        t = self.sample_times(stride)
        return pd.DataFrame({"t": t, "x": self.value(t), "xprime": self.derivative(t)})

    def __repr__(self) -> str:
        return f"Trajectory(status={self.status}, end_time={self.end_time:.6g}, knots={len(self.times)})"


class _History:
    """Knots computed so far plus the Hermite piece of the step in progress."""

    def __init__(self, times: list[float], values: list[float], derivatives: list[float]):
        self.times = times
        self.values = values
        self.derivatives = derivatives
        self.piece: tuple[float, ...] | None = None
        self.overlapped = False

    def __call__(self, s: float) -> float:
        times = self.times
        if s > times[-1]:
            # The delayed time falls inside the current step
            self.overlapped = True
            return value_at(*self.piece, s)
        k = max(bisect_left(times, s), 1)
        values, derivatives = self.values, self.derivatives
        return value_at(times[k - 1], times[k], values[k - 1], values[k], derivatives[k - 1], derivatives[k], s)

    def append(self, t: float, y: float, d: float) -> None:
        self.times.append(t)
        self.values.append(y)
        self.derivatives.append(d)

    def truncate(self, length: int) -> None:
        del self.times[length:], self.values[length:], self.derivatives[length:]


class _Stepper:
    """One RK4 step with Hermite dense output for x'(t) = combine(x(t), x(t - lag(x(t))))."""

    def __init__(self, model: DelayEquation, history: _History, config: IntegratorConfig):
        self.lag = model.lag
        self.combine = model.combine
        self.history = history
        self.config = config
        self.sweeps = 0

    def rhs(self, s: float, x: float) -> float:
        return self.combine(x, self.history(s - self.lag(x)))

    def step(self, t0: float, t1: float) -> tuple[float, float]:
        history, rhs = self.history, self.rhs
        y0, d0 = history.values[-1], history.derivatives[-1]
        dt = t1 - t0
        half = t0 + 0.5 * dt

        # Euler predictor for delayed times inside the step, improved by fixed-point sweeps
        history.piece = (t0, t1, y0, y0 + dt * d0, d0, d0)
        history.overlapped = False
        for sweep in range(self.config.overlap_sweeps):
            k2 = rhs(half, y0 + 0.5 * dt * d0)
            k3 = rhs(half, y0 + 0.5 * dt * k2)
            k4 = rhs(t1, y0 + dt * k3)
            y1 = y0 + dt / 6.0 * (d0 + 2.0 * k2 + 2.0 * k3 + k4)
            previous = history.piece
            history.piece = (t0, t1, y0, y1, d0, previous[5])
            d1 = rhs(t1, y1)
            if not history.overlapped:
                return y1, d1
            self.sweeps += 1
            change = max(abs(y1 - previous[3]), dt * abs(d1 - previous[5]))
            history.piece = (t0, t1, y0, y1, d0, d1)
            if change <= self.config.overlap_tol:
                break
        return y1, d1

    def midpoint_residual(self, t0: float, t1: float, y1: float, d1: float) -> float:
        history = self.history
        piece = (t0, t1, history.values[-1], y1, history.derivatives[-1], d1)
        history.piece = piece
        m = 0.5 * (t0 + t1)
        return abs(slope_at(*piece, m) - self.rhs(m, value_at(*piece, m)))

    def accept(self, t0: float, t1: float, y1: float, d1: float, check: bool) -> bool:
        if not (math.isfinite(y1) and math.isfinite(d1)):
            return False
        return not check or self.midpoint_residual(t0, t1, y1, d1) <= self.config.residual_tol


def _history_from(model: DelayEquation, phi0: Segment) -> _History:
    history = _History(list(phi0.theta), list(phi0.values), list(phi0.derivatives))
    start = model.rhs_f(phi0)
    # The derivative of the solution at 0+ is f(phi0); record a kink if it differs from phi0'(0)
    if abs(start - history.derivatives[-1]) > 1e-15 * max(1.0, abs(start)):
        history.append(0.0, history.values[-1], start)
    return history


def _run(
    model: DelayEquation, phi0: Segment, T: float, config: IntegratorConfig, check: bool, blowup: bool = True
) -> Trajectory:
    logger = get_logger()
    history = _history_from(model, phi0)
    stepper = _Stepper(model, history, config)
    n_steps = max(1, math.ceil(T / config.step - 1e-9))
    status: Status = "completed"
    halvings = 0

    for n in range(1, n_steps + 1):
        t0 = history.times[-1]
        t1 = T if n == n_steps else n * config.step
        y1, d1 = stepper.step(t0, t1)
        if stepper.accept(t0, t1, y1, d1, check):
            history.append(t1, y1, d1)
        else:
            mark = len(history.times)
            accepted = False
            for k in range(1, config.max_halvings + 1):
                m = 2**k
                for j in range(1, m + 1):
                    s0 = history.times[-1]
                    s1 = t1 if j == m else t0 + j * (t1 - t0) / m
                    y1, d1 = stepper.step(s0, s1)
                    if not stepper.accept(s0, s1, y1, d1, check):
                        break
                    history.append(s1, y1, d1)
                else:
                    accepted = True
                    halvings += 1
                    logger.debug(f"Subdivided the step at t={t0:.6g} into {m} substeps")
                    break
                history.truncate(mark)
            if not accepted:
                status = "step_failure"
                logger.warning(f"Step failure at t={t0:.6g} after {config.max_halvings} halvings")
                break

        if blowup and abs(history.values[-1]) >= config.blowup_bound:
            status = "blowup_stopped"
            logger.warning(f"Solution reached |x|={abs(history.values[-1]):.6g} at t={history.times[-1]:.6g}, stopping")
            break

    logger.debug(
        f"Integrated {type(model).__name__} to t={history.times[-1]:.6g} "
        f"({len(history.times)} knots, {halvings} subdivided steps, {stepper.sweeps} overlap sweeps, status={status})"
    )
    return Trajectory(
        model=model,
        initial=phi0,
        times=np.array(history.times),
        values=np.array(history.values),
        derivatives=np.array(history.derivatives),
        status=status,
    )


def _check_horizon(model: DelayEquation, phi0: Segment, T: float) -> None:
    if not T > 0:
        raise PreconditionError(f"Integration horizon must be positive, got T={T}")
    if phi0.h != model.h:
        raise PreconditionError(f"Initial segment horizon {phi0.h} does not match the model's delay horizon {model.h}")


def integrate(
    model: DelayEquation, phi0: Segment, T: float, config: IntegratorConfig = IntegratorConfig()
) -> Trajectory:
    """
    Integrate x'(t) = f(x_t) on [0, T] from initial data on the solution manifold.

    Fixed-step RK4 on the grid t_n = n * step with cubic Hermite dense output. A step
    whose midpoint residual exceeds the tolerance is subdivided into 2, 4, ... substeps.
    Integration stops early once |x(t)| reaches the blowup bound.
    """
    _check_horizon(model, phi0, T)
    norm = phi0.norm_c1()
    if not norm < config.neighborhood_radius:
        raise ModelViolationError(f"Initial segment has C1 norm {norm:.6g}, outside the radius {config.neighborhood_radius}")
    defect = abs(model.compatibility_residual(phi0))
    if defect > config.admissibility_tol:
        raise InadmissibleError(
            f"Initial segment is not on the solution manifold: |phi'(0) - f(phi)| = {defect:.3e} "
            f"> {config.admissibility_tol:.1e}"
        )
    return _run(model, phi0, T, config, check=config.residual_check)


def integrate_linear(
    a: float | Coefficients, psi0: Segment, T: float, config: IntegratorConfig = IntegratorConfig()
) -> Trajectory:
    """
    Integrate the linear equation v'(t) = A v(t) + B v(t - h) on [0, T] from any
    continuous initial segment. The derivative may jump at t = 0. The linear flow has
    no neighborhood to leave, so the blowup bound does not apply.
    """
    model = LinearModel(as_coefficients(a))
    _check_horizon(model, psi0, T)
    return _run(model, psi0, T, config, check=False, blowup=False)


def residual(traj: Trajectory, t: float) -> float:
    """The defect |x'(t) - f(x_t)| of the dense output at time t."""
    return abs(traj.derivative(t) - traj.model.rhs_f(segment_at(traj, t)))
