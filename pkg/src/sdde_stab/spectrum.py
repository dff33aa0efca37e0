import math
from dataclasses import dataclass
from typing import Literal, TypeAlias

import numpy as np
import pandas as pd
from beartype import beartype as typechecker
from jaxtyping import Complex, Int, jaxtyped
from scipy.optimize import bisect, newton
from scipy.special import lambertw

from sdde_stab.config import SpectrumConfig, WindowConfig
from sdde_stab.errors import (
    ContourError,
    DomainError,
    IncompleteSearchError,
    PreconditionError,
    RootSearchError,
)
from sdde_stab.utils.logger import get_logger


@dataclass(frozen=True)
class LinearCoefficients:
    """
    Coefficients of the linear delay equation v'(t) = A v(t) + B v(t - h), with
    characteristic function Delta(lambda) = lambda - A - B exp(-lambda h).
    The exchange-rate model linearizes to A = a, B = -a, h = 1.
    """

    A: float
    B: float
    h: float = 1.0

    @classmethod
    def from_a(cls, a: float) -> "LinearCoefficients":
        return cls(A=float(a), B=-float(a), h=1.0)

    @property
    def has_zero_root(self) -> bool:
        return abs(self.A + self.B) <= 1e-12 * max(1.0, abs(self.A), abs(self.B))


Coefficients: TypeAlias = float | LinearCoefficients

RootClass = Literal["unstable", "center", "stable"]


def as_coefficients(a: Coefficients) -> LinearCoefficients:
    if isinstance(a, LinearCoefficients):
        return a
    return LinearCoefficients.from_a(a)


def char_value(lam: complex | np.ndarray, a: Coefficients) -> complex | np.ndarray:
    """Delta(lambda), written with expm1 so that Delta(0) = -(A + B) holds to rounding."""
    c = as_coefficients(a)
    z = np.asarray(lam, dtype=np.complex128)
    result = z - (c.A + c.B) - c.B * np.expm1(-z * c.h)
    return complex(result) if result.ndim == 0 else result


def char_derivative(lam: complex | np.ndarray, a: Coefficients, order: int = 1) -> complex | np.ndarray:
    """The `order`-th derivative of Delta, e.g. Delta'(lambda) = 1 + B h exp(-lambda h)."""
    if order == 0:
        return char_value(lam, a)
    c = as_coefficients(a)
    z = np.asarray(lam, dtype=np.complex128)
    result = -c.B * (-c.h) ** order * np.exp(-z * c.h)
    if order == 1:
        result = 1.0 + result
    return complex(result) if result.ndim == 0 else result


@jaxtyped(typechecker=typechecker)
def lambert_roots(a: Coefficients, branches: Int[np.ndarray, "k"]) -> Complex[np.ndarray, "m"]:
    """
    Roots of Delta in closed form, lambda_k = A + W_k(B h exp(-A h)) / h, one per
    Lambert W branch. Without a delay term the only root is A.
    """
    c = as_coefficients(a)
    if c.B == 0.0:
        return np.array([complex(c.A)])
    z = c.B * c.h * math.exp(-c.A * c.h)
    return np.array([c.A + complex(lambertw(z, int(k))) / c.h for k in branches], dtype=np.complex128)


def real_root_kappa(a: Coefficients) -> float | None:
    """
    The unique nonzero real root of Delta when zero is a root (A + B = 0), found by
    bisection on Delta(lambda) / lambda and polished by Newton. Returns None at the
    double root 1 + B h = 0 (a = 1 for the exchange-rate model).
    """
    c = as_coefficients(a)
    if not c.has_zero_root:
        raise PreconditionError(f"kappa is defined only when 0 is a characteristic root, got A={c.A}, B={c.B}")
    g0 = 1.0 + c.B * c.h
    if abs(g0) < 1e-12:
        return None

    def g(lam: float) -> float:
        # Delta(lambda) / lambda, continuously extended by 1 + B h at 0
        if lam == 0.0:
            return g0
        return 1.0 - c.B * math.expm1(-lam * c.h) / lam

    lo, hi = (-50.0, 0.0) if g0 > 0 else (0.0, 50.0)
    far = lo if g0 > 0 else hi
    if g(far) * g0 >= 0:
        raise RootSearchError(f"No sign change of Delta(lambda)/lambda on [{lo}, {hi}] (A={c.A}, B={c.B})")
    kappa = bisect(g, lo, hi, xtol=1e-12, maxiter=200)
    kappa = newton(
        lambda lam: char_value(lam, c).real,
        kappa,
        fprime=lambda lam: char_derivative(lam, c).real,
        tol=1e-15,
        maxiter=20,
        disp=False,
    )
    get_logger().debug(f"kappa({c.A}, {c.B}) = {kappa:.15g}")
    return float(kappa)


@dataclass(frozen=True)
class Rectangle:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    @classmethod
    def from_config(cls, config: WindowConfig) -> "Rectangle":
        return cls(config.re_min, config.re_max, config.im_min, config.im_max)

    @property
    def perimeter(self) -> float:
        return 2.0 * ((self.re_max - self.re_min) + (self.im_max - self.im_min))

    def point(self, s: np.ndarray) -> np.ndarray:
        """Counterclockwise boundary, parametrized by arc length fraction s in [0, 1]."""
        w, hgt = self.re_max - self.re_min, self.im_max - self.im_min
        d = np.asarray(s) * self.perimeter
        corners = np.cumsum([0.0, w, hgt, w])
        return np.select(
            [d <= corners[1], d <= corners[2], d <= corners[3]],
            [
                complex(self.re_min, self.im_min) + d,
                complex(self.re_max, self.im_min) + 1j * (d - corners[1]),
                complex(self.re_max, self.im_max) - (d - corners[2]),
            ],
            complex(self.re_min, self.im_max) - 1j * (d - corners[3]),
        )

    def inflate(self, amount: float) -> "Rectangle":
        return Rectangle(self.re_min - amount, self.re_max + amount, self.im_min - amount, self.im_max + amount)

    def contains(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z)
        return (self.re_min < z.real) & (z.real < self.re_max) & (self.im_min < z.imag) & (z.imag < self.im_max)


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    @property
    def perimeter(self) -> float:
        return 2.0 * math.pi * self.radius

    def point(self, s: np.ndarray) -> np.ndarray:
        return self.center + self.radius * np.exp(2j * math.pi * np.asarray(s))

    def inflate(self, amount: float) -> "Circle":
        return Circle(self.center, self.radius + amount)

    def contains(self, z: np.ndarray) -> np.ndarray:
        return np.abs(np.asarray(z) - self.center) < self.radius


Contour: TypeAlias = Rectangle | Circle


def _track_phase(
    contour: Contour, c: LinearCoefficients, tol: float = 0.0, spacing: float = 0.05, max_rounds: int = 60
) -> tuple[float, float]:
    """
    Winding number of Delta along the contour by adaptive phase tracking: pieces
    whose phase increment reaches pi/2 are bisected until none remains.
    Returns the (real-valued) winding number and the smallest |Delta| seen. The
    winding number is NaN when refinement meets |Delta| <= tol or does not resolve.
    """
    n = max(64, int(math.ceil(contour.perimeter / spacing)))
    s = np.linspace(0.0, 1.0, n + 1)
    values = char_value(contour.point(s), c)
    for _ in range(max_rounds):
        smallest = float(np.abs(values).min())
        if smallest <= tol:
            return math.nan, smallest
        steps = np.angle(values[1:] / values[:-1])
        coarse = np.abs(steps) >= math.pi / 2
        if not coarse.any():
            return float(steps.sum() / (2 * math.pi)), smallest
        mids = 0.5 * (s[:-1][coarse] + s[1:][coarse])
        s = np.concatenate([s, mids])
        values = np.concatenate([values, char_value(contour.point(mids), c)])
        order = np.argsort(s, kind="stable")
        s, values = s[order], values[order]
    get_logger().debug(f"Phase tracking along {contour} did not resolve after {max_rounds} refinements")
    return math.nan, float(np.abs(values).min())


def _count(contour: Contour, c: LinearCoefficients, config: SpectrumConfig) -> tuple[int, Contour]:
    logger = get_logger()
    current = contour
    for attempt in range(config.max_inflations + 1):
        with np.errstate(all="ignore"):
            winding, smallest = _track_phase(current, c, tol=config.contour_tol)
        if math.isfinite(winding):
            count = round(winding)
            if abs(winding - count) > 0.05:
                raise ContourError(f"Winding number {winding:.6f} along {current} is not close to an integer")
            return count, current
        logger.debug(f"|Delta| = {smallest:.3e} on {current}, inflating by {config.inflation} (attempt {attempt + 1})")
        current = current.inflate(config.inflation)
    raise ContourError(f"Contour {contour} passes through a root after {config.max_inflations} inflations")


def count_roots(contour: Contour, a: Coefficients, config: SpectrumConfig = SpectrumConfig()) -> int:
    """Number of roots of Delta inside the contour, counted with multiplicity (argument principle)."""
    count, _ = _count(contour, as_coefficients(a), config)
    return count


def _multiplicity(lam: complex, c: LinearCoefficients, radius: float) -> int:
    with np.errstate(all="ignore"):
        winding, smallest = _track_phase(Circle(lam, radius), c)
    if smallest == 0.0 or not math.isfinite(winding):
        raise ContourError(f"Cannot determine the multiplicity of the root {lam}")
    return max(1, round(winding))


def _newton(seeds: np.ndarray, c: LinearCoefficients, iterations: int, order: int = 0) -> np.ndarray:
    """Vectorized Newton iteration on the `order`-th derivative of Delta."""
    lam = seeds.astype(np.complex128)
    with np.errstate(all="ignore"):
        for _ in range(iterations):
            step = char_derivative(lam, c, order) / char_derivative(lam, c, order + 1)
            lam = lam - step
            done = ~np.isfinite(step) | (np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(lam)))
            if done.all():
                break
    return lam


@dataclass(frozen=True)
class Root:
    lam: complex
    multiplicity: int
    klass: RootClass


@dataclass
class SpectrumSplit:
    """The roots inside a window, split into unstable, center and stable parts."""

    sigma_u: list[Root]
    sigma_c: list[Root]
    sigma_s: list[Root]
    window: Contour
    counted: int
    found: int
    coefficients: LinearCoefficients

    @property
    def roots(self) -> list[Root]:
        return self.sigma_u + self.sigma_c + self.sigma_s

    @property
    def is_complete(self) -> bool:
        return self.found == self.counted

    @property
    def rightmost_stable_re(self) -> float | None:
        return max((root.lam.real for root in self.sigma_s), default=None)

    @property
    def center_is_simple_zero(self) -> bool:
        return (
            len(self.sigma_c) == 1 and self.sigma_c[0].multiplicity == 1 and abs(self.sigma_c[0].lam) <= 1e-9
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "re": [root.lam.real for root in self.roots],
                "im": [root.lam.imag for root in self.roots],
                "multiplicity": [root.multiplicity for root in self.roots],
                "class": [root.klass for root in self.roots],
            }
        )


def _dedup(candidates: np.ndarray, c: LinearCoefficients, tol: float) -> list[complex]:
    """Greedy clustering at distance `tol`, keeping the candidate with the smallest residual."""
    residuals = np.abs(char_value(candidates, c))
    kept: list[complex] = []
    for lam in candidates[np.argsort(residuals)]:
        if not kept or np.min(np.abs(np.asarray(kept) - lam)) > tol:
            kept.append(complex(lam))
    return kept


def _classify(lam: complex, center_tol: float) -> RootClass:
    if lam.real > center_tol:
        return "unstable"
    if lam.real < -center_tol:
        return "stable"
    return "center"


def find_roots(
    window: Rectangle | WindowConfig, a: Coefficients, config: SpectrumConfig = SpectrumConfig()
) -> SpectrumSplit:
    """
    All roots of Delta inside a window, each with its multiplicity, split by the sign
    of the real part. Roots are found by Newton from a seed grid (plus the Lambert W
    roots) and certified against the argument-principle count of the window.
    """
    logger = get_logger()
    c = as_coefficients(a)
    rect = Rectangle.from_config(window) if isinstance(window, WindowConfig) else window
    if not (rect.re_min < 0 < rect.re_max and rect.im_min < 0 < rect.im_max):
        raise DomainError(f"The search window {rect} must contain a neighborhood of 0")

    # Seeds
    spacing = config.seed_spacing
    re = np.arange(rect.re_min, rect.re_max + 0.5 * spacing, spacing)
    im = np.arange(rect.im_min, rect.im_max + 0.5 * spacing, spacing)
    seeds = (re[:, None] + 1j * im[None, :]).ravel()
    if config.lambert_seeds:
        k_max = math.ceil(max(abs(rect.im_min), abs(rect.im_max)) * c.h / (2 * math.pi)) + 2
        seeds = np.concatenate([seeds, lambert_roots(c, np.arange(-k_max, k_max + 1))])
    logger.debug(f"Running Newton from {len(seeds)} seeds in {rect}")

    # Newton, then keep converged roots inside the window
    lam = _newton(seeds, c, config.newton_iterations)
    with np.errstate(all="ignore"):
        residuals = np.abs(char_value(lam, c))
    ok = np.isfinite(lam) & (residuals <= 1e-10 * np.maximum(1.0, np.abs(lam))) & rect.inflate(1e-9).contains(lam)
    candidates = _dedup(lam[ok], c, config.dedup_tol)

    # Multiplicity, polish multiple roots on the derivative of matching order
    roots: dict[complex, int] = {}
    for lam in candidates:
        m = _multiplicity(lam, c, config.multiplicity_radius)
        if m > 1:
            lam = complex(_newton(np.array([lam]), c, config.newton_iterations, order=m - 1)[0])
        if abs(lam.imag) <= 1e-10 * max(1.0, abs(lam)):
            lam = complex(lam.real, 0.0)
        # Candidates around a multiple root polish to the same point
        if any(abs(lam - other) <= config.multiplicity_radius for other in roots):
            continue
        roots[lam] = m

    # Conjugate closure
    upper = {lam: m for lam, m in roots.items() if lam.imag > 0}
    for lam, m in roots.items():
        if lam.imag < 0 and not any(abs(u - lam.conjugate()) <= config.dedup_tol for u in upper):
            upper[lam.conjugate()] = m
    closed = {lam: m for lam, m in roots.items() if lam.imag == 0}
    closed.update(upper)
    closed.update({lam.conjugate(): m for lam, m in upper.items()})

    counted, contour = _count(rect, c, config)
    inside = {lam: m for lam, m in closed.items() if contour.contains(np.array([lam]))[0]}
    found = sum(inside.values())
    if found != counted:
        raise IncompleteSearchError(found, counted)

    ordered = sorted(inside.items(), key=lambda item: (-item[0].real, -item[0].imag))
    split = SpectrumSplit([], [], [], window=rect, counted=counted, found=found, coefficients=c)
    for lam, m in ordered:
        root = Root(lam=lam, multiplicity=m, klass=_classify(lam, config.center_tol))
        {"unstable": split.sigma_u, "center": split.sigma_c, "stable": split.sigma_s}[root.klass].append(root)
    logger.debug(
        f"Found {found} roots in {rect}: |sigma_u|={len(split.sigma_u)}, |sigma_c|={len(split.sigma_c)}, |sigma_s|={len(split.sigma_s)}"
    )
    return split
