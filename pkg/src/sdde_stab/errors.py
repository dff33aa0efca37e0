class StabilityError(Exception):
    """Base class for all errors raised by sdde-stab."""


class PreconditionError(StabilityError, ValueError):
    """The caller violated a documented precondition. Maps to exit code 2."""


class DomainError(PreconditionError):
    """Evaluation outside the interval on which a segment or trajectory is defined."""


class ModelViolationError(PreconditionError):
    """The model left its admissible region, e.g. a delay outside (0, h] or a segment outside U."""


class InadmissibleError(PreconditionError):
    """Initial data does not lie on the solution manifold, i.e. phi'(0) != f(phi)."""


class DegenerateProjectionError(PreconditionError):
    """The center projection is undefined (no simple zero root, e.g. a = 1)."""


class NumericalError(StabilityError, RuntimeError):
    """A numerical procedure failed. Maps to exit code 3."""


class ConstructionError(NumericalError):
    pass


class RootSearchError(NumericalError):
    pass


class ContourError(NumericalError):
    pass


class IncompleteSearchError(NumericalError):
    def __init__(self, found: int, counted: int):
        super().__init__(f"Root search incomplete: found {found} roots (with multiplicity), contour counts {counted}")
        self.found = found
        self.counted = counted


class FitError(NumericalError):
    pass


class AttractionError(NumericalError):
    pass
