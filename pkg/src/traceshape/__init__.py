"""Sobolev trace constants on a ball with a spherical hole.

Computes the best trace constant S_q for the embedding into L^q of the
outer boundary over functions vanishing on the hole, its first variation
under hole deformations, and the symmetry/criticality phenomenology of the
centered-hole configuration (critical for q <= p, suboptimal past an
explicit threshold Q(R)).
"""

from .errors import (
    BadConfig,
    BadTolerance,
    ExponentOutOfRange,
    GeometryInvalid,
    Infeasible,
    InitFailure,
    MeshInverted,
    NoConvergence,
    NotNormalized,
    NotVolumePreserving,
    OdeFailure,
    OutOfRange,
    QualityFailure,
    SolverError,
    TraceShapeError,
    ValidationError,
    ZeroTrace,
)
from .problem import (
    Tolerances,
    TraceProblem,
    TraceResult,
    ValidatedProblem,
    critical_exponent,
    problem_from_json,
    problem_to_json,
    sphere_measure,
    validate_problem,
)
from .radial import (
    RadialProfile,
    geometric_nodes,
    rayleigh_quotient_radial,
    shoot_radial_ivp,
    solve_radial_extremal,
    solve_radial_richardson,
    sp_from_shooting,
)

__version__ = "0.1.0"
