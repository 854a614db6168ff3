"""Exception types shared across the package."""


class NewtonAtlasError(Exception):
    """Base class for all package-specific errors."""


class InvalidDegree(NewtonAtlasError):
    """Degree outside the supported range (grids need d >= 2)."""


class InvalidPolynomial(NewtonAtlasError):
    """Polynomial data violates a structural invariant."""


class EvaluationOverflow(NewtonAtlasError):
    """Coefficient-form evaluation overflowed double precision.

    Callers holding the roots should switch to root-form evaluation,
    which is overflow-safe.
    """


class CriticalPointError(NewtonAtlasError):
    """Newton step undefined: derivative vanishes at a non-root.

    The orbit engine responds with a one-shot seeded jitter; direct
    callers of :func:`newton_step` decide their own policy.
    """

    def __init__(self, z: complex):
        super().__init__(f"derivative vanishes at {z!r} (non-root)")
        self.z = z


class NotClassifiable(NewtonAtlasError):
    """A point coincides exactly with a root, so no dyadic shell index
    exists; orbit callers treat this as convergence."""


class OutOfValidityRange(NewtonAtlasError):
    """Arguments outside the region where a certified bound is proven."""


class AmbiguousClusteringWarning(UserWarning):
    """Single-linkage chain grew wider than the resolution allows;
    distinct roots may have been merged."""
