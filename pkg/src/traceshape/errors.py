"""Exception hierarchy shared by all solver and geometry modules.

``ValidationError`` subclasses signal rejected input (bad exponents,
geometry, tolerances, configs); ``SolverError`` subclasses signal runtime
numerical failure.  The CLI maps the former to exit code 2 and the latter
to exit code 3.
"""


class TraceShapeError(Exception):
    """Base class for all package errors."""


class ValidationError(TraceShapeError):
    """Input rejected before any computation started."""


class ExponentOutOfRange(ValidationError):
    """p or q outside the admissible range (1 < p, 1 < q < p*)."""


class GeometryInvalid(ValidationError):
    """Hole/domain geometry inconsistent (r >= R, hole not inside, ...)."""


class BadTolerance(ValidationError):
    """A tolerance field is nonpositive or out of range."""


class BadConfig(ValidationError):
    """Malformed JSON configuration (unknown keys, missing blocks, ...)."""


class OutOfRange(ValidationError):
    """Evaluation point outside the sampled curve range."""


class SolverError(TraceShapeError):
    """A numerical routine failed at runtime."""


class NoConvergence(SolverError):
    """Iteration budget exhausted before meeting the tolerances."""


class ZeroTrace(SolverError):
    """Candidate function vanishes on the outer boundary."""


class OdeFailure(SolverError):
    """Adaptive ODE integration failed (step underflow or solver error)."""


class InitFailure(SolverError):
    """Could not produce the initial value for the S_p curve integration."""


class MeshInverted(SolverError):
    """A triangle acquired nonpositive signed area after transport."""


class QualityFailure(SolverError):
    """Generated mesh violates the minimum-angle quality threshold."""


class NotNormalized(SolverError):
    """Extremal lacks the unit outer-trace normalization."""


class NotVolumePreserving(SolverError):
    """Deformation field has nonzero mean normal component on the hole."""


class Infeasible(SolverError):
    """Hole center violates the feasibility margin."""
