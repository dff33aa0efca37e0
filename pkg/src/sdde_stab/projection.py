"""
Center space of v'(t) = A v(t) + B v(t - h) at a simple zero root (A + B = 0).

The center space is spanned by the constant function 1. The spectral projection
along the complementary invariant subspace is given by the adjoint pairing

    z(phi) = [phi(0) + B * integral_{-h}^{0} phi(xi) dxi] / (1 + B h),

which for the exchange-rate model (A = a, B = -a, h = 1) reads
[phi(0) - a * integral phi] / (1 - a).
"""

from dataclasses import dataclass

from sdde_stab.errors import DegenerateProjectionError, PreconditionError
from sdde_stab.segment import Segment
from sdde_stab.spectrum import Coefficients, LinearCoefficients, as_coefficients


@dataclass(frozen=True)
class CenterBasis:
    coefficients: LinearCoefficients

    def __post_init__(self):
        c = self.coefficients
        if not c.has_zero_root:
            raise PreconditionError(f"0 is not a characteristic root for A={c.A}, B={c.B}")
        if abs(self.normalization) < 1e-9:
            raise DegenerateProjectionError(
                f"0 is a double characteristic root (1 + B h = {self.normalization:.3e}), the center space is not one-dimensional"
            )

    @classmethod
    def from_a(cls, a: Coefficients) -> "CenterBasis":
        return cls(as_coefficients(a))

    @property
    def h(self) -> float:
        return self.coefficients.h

    @property
    def normalization(self) -> float:
        """The pairing of the constant eigenfunction with itself before scaling, 1 + B h."""
        return 1.0 + self.coefficients.B * self.coefficients.h

    def eigenfunction(self) -> Segment:
        return Segment.constant(1.0, h=self.h)


def center_coordinate(basis: CenterBasis, phi: Segment) -> float:
    if phi.h != basis.h:
        raise PreconditionError(f"Segment horizon {phi.h} does not match the center basis horizon {basis.h}")
    return (float(phi.values[-1]) + basis.coefficients.B * phi.integral()) / basis.normalization


def project_center(basis: CenterBasis, phi: Segment) -> Segment:
    return lift_center(basis, center_coordinate(basis, phi))


def lift_center(basis: CenterBasis, z: float) -> Segment:
    """The center part z * 1 of a segment. The center manifold correction is not represented."""
    return Segment.constant(z, h=basis.h)
