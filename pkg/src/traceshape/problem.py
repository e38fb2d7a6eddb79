"""Problem descriptions, exponent arithmetic, and shared numeric conventions.

A :class:`TraceProblem` describes the domain ``B_R`` with a spherical hole
``B_r(c)`` removed, together with the exponents ``(p, q)`` of the trace
quotient

    S_q = inf  ( int |grad u|^p + |u|^p dx ) / ( int_{|x|=R} |u|^q dS )^(p/q)

over functions vanishing on the hole.  :func:`validate_problem` checks the
admissibility conditions (``1 < q < p*``, hole strictly inside the domain)
and returns a :class:`ValidatedProblem`, which is the only type the solver
modules accept.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BadConfig, BadTolerance, ExponentOutOfRange, GeometryInvalid

__all__ = [
    "Tolerances",
    "TraceProblem",
    "ValidatedProblem",
    "TraceResult",
    "critical_exponent",
    "validate_problem",
    "sphere_measure",
    "problem_from_json",
    "problem_to_json",
]


@dataclass(frozen=True)
class Tolerances:
    """Numeric tolerances shared by the solvers.

    ``fd_step_min``/``fd_step_max`` are fractions of the annular gap
    ``R - r`` and bound the default finite-difference step schedule.
    """

    solver_rel_tol: float = 1e-8
    residual_tol: float = 1e-6
    ode_tol: float = 1e-10
    fd_step_min: float = 1e-3
    fd_step_max: float = 4e-3
    max_iterations: int = 10000

    def __post_init__(self) -> None:
        for name in ("solver_rel_tol", "residual_tol", "ode_tol"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise BadTolerance(f"{name} must lie in (0, 1), got {v}")
        if not (0.0 < self.fd_step_min <= self.fd_step_max):
            raise BadTolerance(
                f"need 0 < fd_step_min <= fd_step_max, got "
                f"({self.fd_step_min}, {self.fd_step_max})"
            )
        if self.max_iterations < 1:
            raise BadTolerance("max_iterations must be >= 1")


def critical_exponent(p: float, N: int) -> float:
    """Trace-embedding critical exponent: p(N-1)/(N-p) for p < N, else inf."""
    if p <= 1.0:
        raise ExponentOutOfRange(f"p must exceed 1, got {p}")
    if N < 2:
        raise ExponentOutOfRange(f"dimension must be >= 2, got {N}")
    if p < N:
        return p * (N - 1) / (N - p)
    return math.inf


def sphere_measure(N: int, radius: float) -> float:
    """Surface measure of the sphere of the given radius in dimension N.

    Uses N pi^(N/2) / Gamma(N/2 + 1) * radius^(N-1); for N=2 this is the
    circumference 2 pi radius, for N=3 the area 4 pi radius^2.
    """
    if N < 1:
        raise GeometryInvalid(f"dimension must be >= 1, got {N}")
    if radius <= 0.0:
        raise GeometryInvalid(f"radius must be positive, got {radius}")
    return N * math.pi ** (N / 2.0) / math.gamma(N / 2.0 + 1.0) * radius ** (N - 1)


@dataclass(frozen=True)
class TraceProblem:
    """Ball of radius R with a spherical hole of radius r centered at c."""

    N: int
    p: float
    q: float
    R: float
    r: float
    c: tuple[float, ...] = ()
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self) -> None:
        c = self.c if self.c else (0.0,) * self.N
        object.__setattr__(self, "c", tuple(float(x) for x in c))

    @property
    def center_norm(self) -> float:
        return math.hypot(*self.c)

    @property
    def critical(self) -> float:
        """Critical trace exponent p* for this (p, N)."""
        return critical_exponent(self.p, self.N)

    @property
    def gap(self) -> float:
        """Annular gap R - r."""
        return self.R - self.r

    def with_center(self, c) -> "TraceProblem":
        """Copy of the problem with the hole moved to center c (revalidate!)."""
        return replace(TraceProblem(**_base_fields(self)), c=tuple(float(x) for x in c))


def _base_fields(problem: TraceProblem) -> dict:
    return {
        "N": problem.N,
        "p": problem.p,
        "q": problem.q,
        "R": problem.R,
        "r": problem.r,
        "c": problem.c,
        "tolerances": problem.tolerances,
    }


@dataclass(frozen=True)
class ValidatedProblem(TraceProblem):
    """A :class:`TraceProblem` that passed :func:`validate_problem`.

    Solvers accept only this type; construct it through
    :func:`validate_problem`, never directly.
    """


def validate_problem(raw: TraceProblem) -> ValidatedProblem:
    """Check all problem invariants and return the validated problem.

    Idempotent: validating a :class:`ValidatedProblem` returns it unchanged.

    Raises ``ExponentOutOfRange`` when p <= 1, q <= 1 or q >= p*;
    ``GeometryInvalid`` when the hole is not strictly inside the domain;
    ``BadTolerance`` when a tolerance field is out of range.
    """
    if isinstance(raw, ValidatedProblem):
        return raw
    if raw.N < 2:
        raise GeometryInvalid(f"dimension must be >= 2, got {raw.N}")
    if raw.p <= 1.0 or not math.isfinite(raw.p):
        raise ExponentOutOfRange(f"need 1 < p < inf, got p={raw.p}")
    pstar = critical_exponent(raw.p, raw.N)
    if raw.q <= 1.0 or raw.q >= pstar:
        raise ExponentOutOfRange(
            f"need 1 < q < p* = {pstar:g}, got q={raw.q} (p={raw.p}, N={raw.N})"
        )
    if math.isfinite(pstar) and raw.q > 0.9 * pstar:
        # Extremals concentrate near the boundary as q -> p*; meshes at the
        # default resolutions become unreliable there.
        warnings.warn(
            f"q={raw.q} exceeds 0.9 p* = {0.9 * pstar:g}; results may be "
            "mesh-sensitive",
            stacklevel=2,
        )
    if not (0.0 < raw.r < raw.R):
        raise GeometryInvalid(f"need 0 < r < R, got r={raw.r}, R={raw.R}")
    if len(raw.c) != raw.N:
        raise GeometryInvalid(
            f"center has {len(raw.c)} components, expected N={raw.N}"
        )
    if raw.center_norm + raw.r >= raw.R:
        raise GeometryInvalid(
            f"hole not strictly inside the domain: |c| + r = "
            f"{raw.center_norm + raw.r:g} >= R = {raw.R:g}"
        )
    if not isinstance(raw.tolerances, Tolerances):
        raise BadTolerance("tolerances must be a Tolerances instance")
    return ValidatedProblem(**_base_fields(raw))


@dataclass(frozen=True)
class TraceResult:
    """Outcome of a trace-constant minimization.

    ``constant`` is the computed S_q; ``multiplier`` the natural-boundary
    multiplier (equal to ``constant`` under the unit-trace normalization);
    ``extremal`` the minimizer (a RadialProfile or ScalarField).
    """

    constant: float
    multiplier: float
    iterations: int
    residual: float
    extremal: object


_PROBLEM_KEYS = {"N", "p", "q", "R", "r", "center", "tolerances"}
_TOLERANCE_KEYS = {
    "solver_rel_tol",
    "residual_tol",
    "ode_tol",
    "fd_step_min",
    "fd_step_max",
    "max_iterations",
}


def problem_from_json(doc: dict | str) -> ValidatedProblem:
    """Build and validate a problem from its JSON document.

    Accepted keys: ``N, p, q, R, r, center, tolerances``; ``center`` is an
    array of N reals (defaults to the origin) and ``tolerances`` a
    subdocument with the :class:`Tolerances` field names.  Unknown keys are
    rejected.
    """
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise BadConfig(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise BadConfig("problem document must be a JSON object")
    unknown = set(doc) - _PROBLEM_KEYS
    if unknown:
        raise BadConfig(f"unknown problem keys: {sorted(unknown)}")
    missing = {"N", "p", "q", "R", "r"} - set(doc)
    if missing:
        raise BadConfig(f"missing problem keys: {sorted(missing)}")

    tol_doc = doc.get("tolerances", {})
    if not isinstance(tol_doc, dict):
        raise BadConfig("'tolerances' must be a JSON object")
    unknown = set(tol_doc) - _TOLERANCE_KEYS
    if unknown:
        raise BadConfig(f"unknown tolerance keys: {sorted(unknown)}")
    tolerances = Tolerances(**tol_doc)

    center = doc.get("center", [0.0] * int(doc["N"]))
    if np.ndim(center) != 1:
        raise BadConfig("'center' must be a flat array of N reals")
    problem = TraceProblem(
        N=int(doc["N"]),
        p=float(doc["p"]),
        q=float(doc["q"]),
        R=float(doc["R"]),
        r=float(doc["r"]),
        c=tuple(float(x) for x in center),
        tolerances=tolerances,
    )
    return validate_problem(problem)


def problem_to_json(problem: TraceProblem) -> dict:
    """Inverse of :func:`problem_from_json` (always emits all keys)."""
    t = problem.tolerances
    return {
        "N": problem.N,
        "p": problem.p,
        "q": problem.q,
        "R": problem.R,
        "r": problem.r,
        "center": list(problem.c),
        "tolerances": {
            "solver_rel_tol": t.solver_rel_tol,
            "residual_tol": t.residual_tol,
            "ode_tol": t.ode_tol,
            "fd_step_min": t.fd_step_min,
            "fd_step_max": t.fd_step_max,
            "max_iterations": t.max_iterations,
        },
    }
