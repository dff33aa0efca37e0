from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Callable, Literal

import numpy as np
import pandas as pd
from jaxtyping import Float
from scipy.optimize import minimize_scalar

from sdde_stab.errors import DomainError, PreconditionError
from sdde_stab.hermite import interpolate, interpolate_slope, locate, slope_at, value_at

if TYPE_CHECKING:
    from sdde_stab.integrator import Trajectory

# Relative slack for points that should lie on [-h, 0] but picked up rounding error
DOMAIN_SLACK = 1e-13

# Knots closer than this (relative to max(1, |t|)) to a window boundary are snapped onto it
SNAP_TOL = 1e-12

GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(32)

Side = Literal["left", "right"]


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64)
    array.flags.writeable = False
    return array


@dataclass(frozen=True, eq=False)
class Segment:
    """
    A C1 function on [-h, 0], stored as cubic Hermite data (theta_i, value_i, derivative_i).

    The knots are non-decreasing and cover [-h, 0] exactly. A knot may appear
    twice in the interior, with the same value, to record a jump of the
    derivative; such segments only arise from the linear flow started from
    data that is not C1-compatible at 0.
    """

    theta: Float[np.ndarray, "knots"]
    values: Float[np.ndarray, "knots"]
    derivatives: Float[np.ndarray, "knots"]
    h: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "theta", _frozen(self.theta))
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "derivatives", _frozen(self.derivatives))
        object.__setattr__(self, "h", float(self.h))

        theta, values = self.theta, self.values
        if self.h <= 0:
            raise PreconditionError(f"Segment horizon must be positive, got h={self.h}")
        if not (theta.ndim == 1 and theta.shape == values.shape == self.derivatives.shape):
            raise PreconditionError("Segment knots, values and derivatives must be 1-D arrays of the same length")
        if len(theta) < 2:
            raise PreconditionError("A segment needs at least two knots")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(self.derivatives))):
            raise PreconditionError("Segment values and derivatives must be finite")
        if theta[0] != -self.h or theta[-1] != 0.0:
            raise PreconditionError(f"Segment knots must span exactly [-h, 0], got [{theta[0]}, {theta[-1]}]")

        gaps = np.diff(theta)
        if np.any(gaps < 0):
            raise PreconditionError("Segment knots must be non-decreasing")
        repeated = gaps == 0
        if repeated[0] or repeated[-1]:
            raise PreconditionError("Segment end knots cannot be repeated")
        if np.any(repeated[1:] & repeated[:-1]):
            raise PreconditionError("A segment knot can appear at most twice")
        jumps = np.abs(np.diff(values))[repeated]
        if np.any(jumps > 1e-12 * np.maximum(1.0, np.abs(values[:-1][repeated]))):
            raise PreconditionError("Repeated segment knots must carry the same value")

    @property
    def num_knots(self) -> int:
        return len(self.theta)

    @property
    def is_smooth(self) -> bool:
        """Whether the segment has no repeated knots, i.e. no derivative jumps."""
        return bool(np.all(np.diff(self.theta) > 0))

    def _check_domain(self, theta: np.ndarray) -> np.ndarray:
        slack = DOMAIN_SLACK * self.h
        if np.any(theta < -self.h - slack) or np.any(theta > slack):
            bad = theta[(theta < -self.h - slack) | (theta > slack)][0]
            raise DomainError(f"Cannot evaluate segment on [-{self.h}, 0] at theta={bad}")
        return np.clip(theta, -self.h, 0.0)

    def _pieces(self, theta: np.ndarray, side: Side) -> tuple[np.ndarray, ...]:
        k = locate(self.theta, theta, side)
        return (
            self.theta[k - 1],
            self.theta[k],
            self.values[k - 1],
            self.values[k],
            self.derivatives[k - 1],
            self.derivatives[k],
        )

    def eval(self, theta: float | np.ndarray, side: Side = "left") -> float | np.ndarray:
        """Value at `theta` in [-h, 0]. Exact at the knots."""
        points = self._check_domain(np.atleast_1d(np.asarray(theta, dtype=np.float64)))
        result = interpolate(*self._pieces(points, side), points)
        return float(result[0]) if np.ndim(theta) == 0 else result

    def eval_derivative(self, theta: float | np.ndarray, side: Side = "left") -> float | np.ndarray:
        """
        Derivative at `theta` in [-h, 0]. At a repeated knot `side` selects the
        one-sided derivative; the left one is the default.
        """
        points = self._check_domain(np.atleast_1d(np.asarray(theta, dtype=np.float64)))
        result = interpolate_slope(*self._pieces(points, side), points)
        return float(result[0]) if np.ndim(theta) == 0 else result

    def _sup(self, derivative: bool, polished: int = 3) -> float:
        """
        Sup norm of the values (or derivatives) on [-h, 0]: maximum over knots and
        piece midpoints, then a bounded scalar search on the pieces holding the
        best `polished` candidates.
        """
        lo, hi = self.theta[:-1], self.theta[1:]
        proper = hi > lo
        lo, hi = lo[proper], hi[proper]
        pieces = (lo, hi, self.values[:-1][proper], self.values[1:][proper])
        pieces += (self.derivatives[:-1][proper], self.derivatives[1:][proper])
        evaluate = interpolate_slope if derivative else interpolate

        mid = 0.5 * (lo + hi)
        at_ends = np.abs(self.derivatives if derivative else self.values)
        at_mid = np.abs(evaluate(*pieces, mid))
        best = max(float(at_ends.max()), float(at_mid.max()))

        # Score each piece by its largest sample and polish the most promising ones
        scores = np.maximum(at_mid, np.maximum(np.abs(evaluate(*pieces, lo)), np.abs(evaluate(*pieces, hi))))
        scalar = slope_at if derivative else value_at
        for i in np.argsort(scores)[::-1][:polished]:
            piece = tuple(float(p[i]) for p in pieces)

            def objective(s: float) -> float:
                return -abs(scalar(*piece, s))

            result = minimize_scalar(objective, bounds=(lo[i], hi[i]), method="bounded", options={"xatol": 1e-12})
            best = max(best, -float(result.fun))
        return best

    def norm_c(self) -> float:
        """Sup norm of the segment on [-h, 0]."""
        return self._sup(derivative=False)

    def norm_c1(self) -> float:
        """C1 norm, i.e. the sup norm of the segment plus the sup norm of its derivative."""
        return self._sup(derivative=False) + self._sup(derivative=True)

    def integral(self) -> float:
        """Integral over [-h, 0], by Gauss-Legendre quadrature of order 32 on every piece."""
        lo, hi = self.theta[:-1], self.theta[1:]
        proper = hi > lo
        lo, hi = lo[proper], hi[proper]
        half = 0.5 * (hi - lo)
        points = (0.5 * (hi + lo))[:, None] + half[:, None] * GAUSS_NODES[None, :]
        pieces = (lo, hi, self.values[:-1][proper], self.values[1:][proper])
        pieces += (self.derivatives[:-1][proper], self.derivatives[1:][proper])
        order = len(GAUSS_NODES)
        values = interpolate(*(np.repeat(p, order) for p in pieces), points.ravel()).reshape(points.shape)
        return float(np.sum(half * (values @ GAUSS_WEIGHTS)))

    def _kinks(self) -> np.ndarray:
        return self.theta[1:][np.diff(self.theta) == 0]

    def _combine(self, other: "Segment", sign: float) -> "Segment":
        if not isinstance(other, Segment):
            return NotImplemented
        if other.h != self.h:
            raise PreconditionError(f"Cannot combine segments with horizons {self.h} and {other.h}")
        kinks = np.union1d(self._kinks(), other._kinks())
        theta = np.sort(np.concatenate([np.union1d(self.theta, other.theta), kinks]))
        # The second copy of a repeated knot carries the right-sided derivative
        right = np.concatenate([[False], theta[1:] == theta[:-1]])

        def one_sided(segment: "Segment") -> tuple[np.ndarray, np.ndarray]:
            left_d = segment.eval_derivative(theta, side="left")
            right_d = segment.eval_derivative(theta, side="right")
            return segment.eval(theta), np.where(right, right_d, left_d)

        values_a, derivatives_a = one_sided(self)
        values_b, derivatives_b = one_sided(other)
        return Segment(theta, values_a + sign * values_b, derivatives_a + sign * derivatives_b, self.h)

    def __add__(self, other: "Segment") -> "Segment":
        return self._combine(other, 1.0)

    def __sub__(self, other: "Segment") -> "Segment":
        return self._combine(other, -1.0)

    def __mul__(self, alpha: float) -> "Segment":
        if not isinstance(alpha, (int, float, np.floating)):
            return NotImplemented
        return Segment(self.theta, alpha * self.values, alpha * self.derivatives, self.h)

    __rmul__ = __mul__

    def __neg__(self) -> "Segment":
        return -1.0 * self

    def __repr__(self) -> str:
        return f"Segment(h={self.h}, knots={self.num_knots}, value(0)={self.values[-1]:.6g})"

    @classmethod
    def from_function(
        cls,
        f: Callable[[np.ndarray], np.ndarray],
        df: Callable[[np.ndarray], np.ndarray],
        h: float = 1.0,
        n: int = 256,
    ) -> "Segment":
        """Samples a C1 function and its derivative on `n` uniformly spaced knots."""
        if n < 2:
            raise PreconditionError(f"A segment needs at least two knots, got n={n}")
        theta = np.linspace(-h, 0.0, n)
        values = np.broadcast_to(np.asarray(f(theta), dtype=np.float64), theta.shape)
        derivatives = np.broadcast_to(np.asarray(df(theta), dtype=np.float64), theta.shape)
        return cls(theta, values, derivatives, h)

    @classmethod
    def constant(cls, c: float, h: float = 1.0, n: int = 2) -> "Segment":
        return cls.from_function(lambda theta: c, lambda theta: 0.0, h=h, n=n)

    @classmethod
    def zero(cls, h: float = 1.0, n: int = 2) -> "Segment":
        return cls.constant(0.0, h=h, n=n)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"theta": self.theta, "value": self.values, "derivative": self.derivatives})

    def to_csv(self, path: Path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def from_csv(cls, path: Path) -> "Segment":
        df = pd.read_csv(path, float_precision="round_trip")
        missing = {"theta", "value", "derivative"} - set(df.columns)
        if missing:
            raise PreconditionError(f"Segment CSV {path} is missing columns {sorted(missing)}")
        theta = df["theta"].to_numpy(dtype=np.float64)
        return cls(theta, df["value"].to_numpy(dtype=np.float64), df["derivative"].to_numpy(dtype=np.float64), -theta[0])


def segment_at(traj: "Trajectory", t: float) -> Segment:
    """
    The segment x_t(theta) = x(t + theta) of a trajectory, for 0 <= t <= end time.

    The result is the exact restriction of the trajectory's dense output: the
    trajectory's own knots inside (t - h, t), plus end knots at t - h and t.
    A knot at t - h contributes its right-sided data, a knot at t its left-sided data.
    """
    h = traj.h
    snap = SNAP_TOL * max(1.0, abs(t))
    if t < -snap or t > traj.end_time + snap:
        raise DomainError(f"Cannot extract the segment at t={t} from a trajectory on [0, {traj.end_time}]")
    t = min(max(t, 0.0), traj.end_time)
    times, values, derivatives = traj.times, traj.values, traj.derivatives
    lo = t - h

    # Left end: last knot at t - h, or an interpolated knot
    j = int(np.searchsorted(times, lo + snap, side="right")) - 1
    if j >= 0 and times[j] >= lo - snap:
        left = (values[j], derivatives[j])
    else:
        left = (traj.value(lo), traj.derivative(lo))

    # Right end: first knot at t, or an interpolated knot
    k = int(np.searchsorted(times, t - snap, side="left"))
    if k < len(times) and times[k] <= t + snap:
        right = (values[k], derivatives[k])
    else:
        right = (traj.value(t), traj.derivative(t))

    inner = slice(j + 1, k)
    theta = np.concatenate([[-h], times[inner] - t, [0.0]])
    return Segment(
        theta,
        np.concatenate([[left[0]], values[inner], [right[0]]]),
        np.concatenate([[left[1]], derivatives[inner], [right[1]]]),
        h,
    )
