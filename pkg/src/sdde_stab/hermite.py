"""
Cubic Hermite pieces. A piece on [t0, t1] is determined by the values y0, y1
and the slopes d0, d1 at its ends. The scalar functions are used in the
integrator's inner loop, the vectorized ones by segments and trajectories.
"""

import numpy as np
from beartype import beartype as typechecker
from jaxtyping import Float, jaxtyped


def value_at(t0: float, t1: float, y0: float, y1: float, d0: float, d1: float, s: float) -> float:
    dt = t1 - t0
    u = (s - t0) / dt
    v = 1.0 - u
    return (1.0 + 2.0 * u) * v * v * y0 + u * v * v * dt * d0 + u * u * (3.0 - 2.0 * u) * y1 - u * u * v * dt * d1


def slope_at(t0: float, t1: float, y0: float, y1: float, d0: float, d1: float, s: float) -> float:
    dt = t1 - t0
    u = (s - t0) / dt
    return 6.0 * u * (u - 1.0) * (y0 - y1) / dt + (1.0 - 4.0 * u + 3.0 * u * u) * d0 + (3.0 * u * u - 2.0 * u) * d1


@jaxtyped(typechecker=typechecker)
def interpolate(
    t0: Float[np.ndarray, "n"],
    t1: Float[np.ndarray, "n"],
    y0: Float[np.ndarray, "n"],
    y1: Float[np.ndarray, "n"],
    d0: Float[np.ndarray, "n"],
    d1: Float[np.ndarray, "n"],
    s: Float[np.ndarray, "n"],
) -> Float[np.ndarray, "n"]:
    """Values of the Hermite pieces at the points `s`, one point per piece."""
    dt = t1 - t0
    u = (s - t0) / dt
    v = 1.0 - u
    return (1.0 + 2.0 * u) * v**2 * y0 + u * v**2 * dt * d0 + u**2 * (3.0 - 2.0 * u) * y1 - u**2 * v * dt * d1


@jaxtyped(typechecker=typechecker)
def interpolate_slope(
    t0: Float[np.ndarray, "n"],
    t1: Float[np.ndarray, "n"],
    y0: Float[np.ndarray, "n"],
    y1: Float[np.ndarray, "n"],
    d0: Float[np.ndarray, "n"],
    d1: Float[np.ndarray, "n"],
    s: Float[np.ndarray, "n"],
) -> Float[np.ndarray, "n"]:
    """Derivatives of the Hermite pieces at the points `s`, one point per piece."""
    dt = t1 - t0
    u = (s - t0) / dt
    return 6.0 * u * (u - 1.0) * (y0 - y1) / dt + (1.0 - 4.0 * u + 3.0 * u**2) * d0 + (3.0 * u**2 - 2.0 * u) * d1


def locate(knots: Float[np.ndarray, "knots"], s: Float[np.ndarray, "n"], side: str = "left") -> np.ndarray:
    """
    Index k of the piece [knots[k-1], knots[k]] used to evaluate at `s`.

    With side="left" a point on a knot is evaluated on the piece to its left,
    with side="right" on the piece to its right. Zero-length pieces (repeated
    knots marking a derivative jump) are never selected for points in range.
    """
    k = np.searchsorted(knots, s, side=side)
    return np.clip(k, 1, len(knots) - 1)
