"""The q = p trace constant as a function of the outer radius.

S_p(R, r) obeys the Riccati-type equation

    dS/dR = -(N-1) S / R + 1 - (p-1) S^(p/(p-1)),

blowing up like (R-r)^-(p-1) as R -> r.  :func:`integrate_sp_ode` starts
just off the singularity from a shooting-derived value and integrates
outward; the sampled curve feeds the hole-placement threshold
:func:`q_threshold` and the closed-form second derivative
:func:`h2_closed_form` of the centered-hole sweep.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from .errors import GeometryInvalid, InitFailure, OdeFailure, OutOfRange, SolverError
from .problem import Tolerances, TraceProblem, sphere_measure, validate_problem
from .radial import sp_from_shooting

__all__ = [
    "SpCurve",
    "integrate_sp_ode",
    "sp_ode_rhs",
    "q_threshold",
    "h2_closed_form",
    "curve_to_csv",
    "threshold_to_csv",
]

START_OFFSET = 1e-2  # (R_0 - r)/r for the integration start


def sp_ode_rhs(R: float, S: float, p: float, N: int) -> float:
    """Right-hand side of the S_p evolution in the outer radius."""
    return -(N - 1) * S / R + 1.0 - (p - 1.0) * S ** (p / (p - 1.0))


@dataclass(frozen=True)
class SpCurve:
    """Sampled curve R -> S_p(R, r), strictly increasing in R."""

    r: float
    p: float
    N: int
    samples: np.ndarray  # shape (n, 2): columns R, S_p
    error_estimate: float | None = None

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 2 or samples.shape[0] < 2:
            raise GeometryInvalid("samples must be an (n, 2) array with n >= 2")
        if not np.all(np.diff(samples[:, 0]) > 0.0):
            raise GeometryInvalid("sample radii must be strictly increasing")
        if not np.all(samples[:, 1] > 0.0):
            raise SolverError("curve contains nonpositive S_p values")
        if (samples[0, 0] - self.r) / self.r > START_OFFSET * (1 + 1e-12):
            raise GeometryInvalid("first sample must sit within 1e-2 of the hole radius")
        object.__setattr__(self, "samples", samples)

    @cached_property
    def _interp(self) -> PchipInterpolator:
        # Monotone cubic keeps the single-minimum structure of the curve.
        return PchipInterpolator(self.samples[:, 0], self.samples[:, 1])

    @property
    def R_min(self) -> float:
        return float(self.samples[0, 0])

    @property
    def R_max(self) -> float:
        return float(self.samples[-1, 0])

    def __call__(self, R: float) -> float:
        if not (self.R_min <= R <= self.R_max):
            raise OutOfRange(
                f"R={R:g} outside the sampled range [{self.R_min:g}, {self.R_max:g}]"
            )
        return float(self._interp(R))

    def interior_minima(self, rel_tol: float = 1e-9) -> int:
        """Count strict local minima over the sample grid.

        Differences below ``rel_tol`` (relative to the local value) count
        as flat, so integration noise does not create spurious minima.
        """
        S = self.samples[:, 1]
        d = np.diff(S)
        signs = np.where(np.abs(d) <= rel_tol * S[:-1], 0, np.sign(d)).astype(int)
        signs = signs[signs != 0]
        flips = np.diff(signs)
        return int(np.sum(flips > 0))


def integrate_sp_ode(
    p: float,
    N: int,
    r: float,
    R_end: float,
    tolerances: Tolerances | None = None,
    n_samples: int = 1200,
) -> SpCurve:
    """Integrate the S_p evolution from R_0 = r(1 + 1e-2) out to R_end.

    The singular condition S -> +inf at R = r is replaced by a shooting
    value at R_0; samples are log-spaced in R - r to resolve the initial
    layer.  ``error_estimate`` on the result is the change of S(R_end)
    under a 10x looser integration tolerance.
    """
    tol = tolerances or Tolerances()
    R0 = r * (1.0 + START_OFFSET)
    if R_end <= R0:
        raise GeometryInvalid(f"R_end must exceed r(1+{START_OFFSET:g}) = {R0:g}")
    problem = validate_problem(
        TraceProblem(N=N, p=p, q=p, R=R_end, r=r, tolerances=tol)
    )
    try:
        S0 = sp_from_shooting(problem, R0)
    except (OdeFailure, SolverError) as exc:
        raise InitFailure(f"shooting start value failed: {exc}") from exc

    grid = r + np.geomspace(R0 - r, R_end - r, n_samples)
    grid[0], grid[-1] = R0, R_end

    def run(scale: float) -> np.ndarray:
        sol = solve_ivp(
            sp_ode_rhs,
            (R0, R_end),
            [S0],
            args=(p, N),
            method="LSODA",
            t_eval=grid,
            rtol=scale * tol.ode_tol,
            atol=scale * tol.ode_tol,
        )
        if not sol.success or not np.all(np.isfinite(sol.y)):
            raise OdeFailure(f"S_p integration failed: {sol.message}")
        return sol.y[0]

    S = run(1.0)
    S_coarse = run(10.0)
    err = float(abs(S[-1] - S_coarse[-1]))
    return SpCurve(
        r=r, p=p, N=N, samples=np.column_stack([grid, S]), error_estimate=err
    )


def q_threshold(curve: SpCurve, R: float) -> float:
    """Exponent threshold Q(R) above which the centered hole is suboptimal.

    Q(R) = S^(-p/(p-1)) (1 - (N-1) S / R) + 1 with S = S_p(R) interpolated
    from the curve.  Q - p carries the sign of dS/dR.
    """
    S = curve(R)
    p, N = curve.p, curve.N
    return S ** (-p / (p - 1.0)) * (1.0 - (N - 1) * S / R) + 1.0


def h2_closed_form(curve: SpCurve, problem: TraceProblem) -> float:
    """Closed-form second derivative of the centered-hole translation sweep.

    Evaluated at the problem's outer radius; negative exactly when
    q > Q(R), which is the symmetry-breaking condition.
    """
    problem = validate_problem(problem)
    if (curve.p, curve.N) != (problem.p, problem.N) or curve.r != problem.r:
        raise GeometryInvalid("curve was built for a different (p, N, r)")
    p, q, N, R = problem.p, problem.q, problem.N, problem.R
    S = curve(R)
    area = sphere_measure(N, R)
    bracket = 1.0 - (q - 1.0) * S ** (p / (p - 1.0)) - (N - 1) * S / R
    return p * S ** (1.0 / (p - 1.0)) / (N * area ** (p / q - 1.0)) * bracket


def curve_to_csv(curve: SpCurve) -> str:
    """Serialize to CSV with header ``R,S_p`` at 17 significant digits."""
    buf = io.StringIO()
    buf.write("R,S_p\n")
    for R, S in curve.samples:
        buf.write(f"{R:.17g},{S:.17g}\n")
    return buf.getvalue()


def threshold_to_csv(curve: SpCurve) -> str:
    """Serialize the threshold sweep to CSV ``R,S_p,Q``."""
    buf = io.StringIO()
    buf.write("R,S_p,Q\n")
    for R, S in curve.samples:
        Q = S ** (-curve.p / (curve.p - 1.0)) * (1.0 - (curve.N - 1) * S / R) + 1.0
        buf.write(f"{R:.17g},{S:.17g},{Q:.17g}\n")
    return buf.getvalue()
