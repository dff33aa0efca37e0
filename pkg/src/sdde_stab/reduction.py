import math
from dataclasses import asdict, dataclass
from typing import Callable, Literal

import numpy as np
from jaxtyping import Float
from scipy.stats import linregress

from sdde_stab.config import ReductionConfig
from sdde_stab.errors import DegenerateProjectionError, FitError, PreconditionError
from sdde_stab.integrator import Trajectory
from sdde_stab.projection import CenterBasis, center_coordinate
from sdde_stab.segment import segment_at
from sdde_stab.spectrum import real_root_kappa
from sdde_stab.utils.logger import get_logger

LyapunovVerdict = Literal["STRICT_STABLE", "STRICT_UNSTABLE", "INDEFINITE"]

# Integration of the reduced equation stops once |z| reaches this bound
ESCAPE_BOUND = 10.0


def analytic_coefficient(a: float) -> float:
    if abs(1.0 - a) < 1e-9:
        raise DegenerateProjectionError("The reduced equation is undefined at a = 1, where 0 is a double root")
    return 1.0 / (1.0 - a)


def analytic_reduced_field(a: float, z: float | np.ndarray) -> float | np.ndarray:
    """Leading term of the reduced vector field on the center manifold, -|z| z / (1 - a)."""
    return -analytic_coefficient(a) * np.abs(z) * z


@dataclass
class ReducedCurve:
    t: Float[np.ndarray, "n"]
    z: Float[np.ndarray, "n"]
    escaped: bool


def integrate_reduced(
    a: float, z0: float, T: float, coefficient: float | None = None, step: float = 1e-2
) -> ReducedCurve:
    """
    RK4 solution of z' = -c |z| z on [0, T], with c = 1 / (1 - a) unless a fitted
    `coefficient` is given. For c < 0 solutions blow up in finite time; the curve
    then stops at |z| >= 10 and is flagged as escaped.
    """
    if not T > 0:
        raise PreconditionError(f"Integration horizon must be positive, got T={T}")
    c = analytic_coefficient(a) if coefficient is None else coefficient

    def field(z: float) -> float:
        return -c * abs(z) * z

    n_steps = max(1, math.ceil(T / step - 1e-9))
    t, z = [0.0], [float(z0)]
    escaped = False
    for n in range(1, n_steps + 1):
        t1 = T if n == n_steps else n * step
        dt = t1 - t[-1]
        y = z[-1]
        k1 = field(y)
        k2 = field(y + 0.5 * dt * k1)
        k3 = field(y + 0.5 * dt * k2)
        k4 = field(y + dt * k3)
        t.append(t1)
        z.append(y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        if not abs(z[-1]) < ESCAPE_BOUND:
            escaped = True
            get_logger().debug(f"Reduced solution escaped at t={t1:.6g}")
            break
    return ReducedCurve(np.array(t), np.array(z), escaped)


@dataclass
class ReducedField:
    """The reduced field z' = -c |z| z fitted from center coordinates of simulated trajectories."""

    a: float
    c_analytic: float
    c_fitted: float
    stderr: float
    n_samples: int
    z_window: tuple[float, float]
    t_window: tuple[float, float]
    residual_max: float
    residual_exponent: float | None

    def __call__(self, z: float | np.ndarray) -> float | np.ndarray:
        return -self.c_fitted * np.abs(z) * z

    def to_dict(self) -> dict:
        data = asdict(self)
        data["window"] = list(data.pop("z_window"))
        data["t_window"] = list(data["t_window"])
        return data


def center_curve(traj: Trajectory, basis: CenterBasis, times: np.ndarray) -> np.ndarray:
    """The center coordinate z(t) of the segments x_t at the given times."""
    return np.array([center_coordinate(basis, segment_at(traj, float(t))) for t in times])


def fit_reduced_field(
    trajectories: list[Trajectory], basis: CenterBasis, config: ReductionConfig = ReductionConfig()
) -> ReducedField:
    """
    Least-squares fit of z' = -c |z| z through the origin. The center coordinate is
    sampled along each trajectory after the transient, differentiated by central
    differences, and restricted to the amplitude window [z_min, z_max].
    """
    logger = get_logger()
    kappa = real_root_kappa(basis.coefficients)
    t_cut = config.transient_factor / abs(kappa)

    zs, slopes, ts = [], [], []
    for traj in trajectories:
        first = math.ceil(t_cut / config.stride - 1e-9)
        last = math.floor(traj.end_time / config.stride + 1e-9)
        if last - first < 2:
            continue
        times = np.arange(first, last + 1) * config.stride
        z = center_curve(traj, basis, times)
        zs.append(z[1:-1])
        slopes.append((z[2:] - z[:-2]) / (2 * config.stride))
        ts.append(times[1:-1])
    if not zs:
        raise FitError(f"No trajectory extends beyond the transient cut t={t_cut:.3g}")

    z, dz, t = np.concatenate(zs), np.concatenate(slopes), np.concatenate(ts)
    keep = (np.abs(z) >= config.z_min) & (np.abs(z) <= config.z_max)
    if not keep.any():
        raise FitError(f"No samples with {config.z_min} <= |z| <= {config.z_max} after the transient cut t={t_cut:.3g}")
    z, dz, t = z[keep], dz[keep], t[keep]
    n = len(z)
    if n < config.min_samples:
        raise FitError(f"Only {n} usable samples, need at least {config.min_samples}")

    x = -np.abs(z) * z
    c_fitted = float(np.dot(x, dz) / np.dot(x, x))
    residuals = dz - c_fitted * x
    stderr = float(math.sqrt(np.dot(residuals, residuals) / (n - 1) / np.dot(x, x)))

    nonzero = residuals != 0
    residual_exponent = None
    if np.count_nonzero(nonzero) >= 3 and np.ptp(np.log(np.abs(z[nonzero]))) > 0:
        residual_exponent = float(linregress(np.log(np.abs(z[nonzero])), np.log(np.abs(residuals[nonzero]))).slope)

    field = ReducedField(
        a=basis.coefficients.A,
        c_analytic=1.0 / basis.normalization,
        c_fitted=c_fitted,
        stderr=stderr,
        n_samples=n,
        z_window=(float(np.abs(z).min()), float(np.abs(z).max())),
        t_window=(float(t.min()), float(t.max())),
        residual_max=float(np.max(np.abs(residuals) / z**2)),
        residual_exponent=residual_exponent,
    )
    logger.debug(
        f"Fitted reduced coefficient {field.c_fitted:.6g} +- {field.stderr:.2g} from {n} samples "
        f"(analytic {field.c_analytic:.6g})"
    )
    return field


def lyapunov_check(
    field: Callable[[float], float], interval: tuple[float, float], points: int = 10_000
) -> LyapunovVerdict:
    """
    Sign of the orbital derivative of V(z) = z^2 / 2, i.e. of z * field(z), on
    z_lo <= |z| <= z_hi. Negative throughout means V is a strict Lyapunov function.
    """
    z_lo, z_hi = interval
    if not 0 < z_lo < z_hi:
        raise PreconditionError(f"Lyapunov interval must satisfy 0 < z_lo < z_hi, got {interval}")
    half = np.linspace(z_lo, z_hi, points // 2)
    z = np.concatenate([-half[::-1], half])
    orbital = z * np.array([field(float(s)) for s in z])
    if np.all(orbital < 0):
        return "STRICT_STABLE"
    if np.all(orbital > 0):
        return "STRICT_UNSTABLE"
    return "INDEFINITE"


def leading_term_verdict(coefficient: float) -> LyapunovVerdict:
    """Classify z' = -c |z| z + o(z^2) by the sign of c alone."""
    if coefficient > 0:
        return "STRICT_STABLE"
    if coefficient < 0:
        return "STRICT_UNSTABLE"
    return "INDEFINITE"
