"""Internal projected-gradient driver for trace-quotient minimization.

Both the radial and the 2-D solver minimize a p-homogeneous quotient
Num(u) / D(u)^(p/q) over a linear subspace (Dirichlet values pinned to
zero) with the iterate kept on the manifold D(u) = 1.  The kinked
|grad u|^p term is smoothed as (|grad u|^2 + eps^2)^(p/2) and eps is
driven down a halving schedule, re-converging at each stage.

Steps are Barzilai-Borwein with monotone Armijo backtracking.  An
objective may expose a ``precondition`` method mapping the Euclidean
gradient to a descent direction in an SPD metric (the radial solver uses
a tridiagonal H1 metric; the 2-D solver runs unpreconditioned).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import NoConvergence, ZeroTrace

ARMIJO_C = 1e-4
BACKTRACK = 0.5
STEP_CLIP = (1e-8, 1e2)
MAX_BACKTRACKS = 60
DECREASE_WINDOW = 10


class QuotientObjective(Protocol):
    p: float
    q: float

    def numerator(self, u: np.ndarray, eps: float) -> float: ...

    def numerator_grad(self, u: np.ndarray, eps: float) -> tuple[float, np.ndarray]: ...

    def trace_integral(self, u: np.ndarray) -> float: ...

    def trace_grad(self, u: np.ndarray) -> tuple[float, np.ndarray]: ...

    def residual(self, u: np.ndarray, multiplier: float) -> float: ...

    def free_mask(self) -> np.ndarray: ...


@dataclass
class MinimizeInfo:
    value: float          # unregularized quotient at the minimizer
    iterations: int       # accepted steps, all stages
    residual: float       # scaled Euler-Lagrange residual at exit


def eps_schedule(eps0: float, eps_min: float) -> list[float]:
    """Halving continuation schedule from eps0 down to (at most) eps_min."""
    if eps0 <= eps_min:
        return [eps_min]
    out = []
    eps = eps0
    while eps > eps_min:
        out.append(eps)
        eps *= 0.5
    out.append(eps_min)
    return out


def normalize_trace(obj: QuotientObjective, u: np.ndarray) -> np.ndarray:
    """Rescale u by a positive factor so the boundary q-integral equals 1."""
    d = obj.trace_integral(u)
    if not np.isfinite(d) or d <= 0.0:
        raise ZeroTrace("candidate has zero trace on the outer boundary")
    return u / d ** (1.0 / obj.q)


def minimize_quotient(
    obj: QuotientObjective,
    u0: np.ndarray,
    schedule: list[float],
    rel_tol: float,
    residual_tol: float,
    max_iterations: int,
) -> tuple[np.ndarray, MinimizeInfo]:
    """Minimize the regularized quotient along the eps continuation schedule.

    A stage ends when the relative decrease of the quotient over the last
    ``DECREASE_WINDOW`` accepted steps drops below ``rel_tol``; the final
    stage additionally requires the unregularized Euler-Lagrange residual
    (scaled by the numerator magnitude) to meet ``residual_tol``.

    Raises ``NoConvergence`` when the accepted-step budget runs out or the
    line search stalls before the residual target.
    """
    mask = obj.free_mask()
    ratio = obj.p / obj.q
    precondition = getattr(obj, "precondition", lambda v: v)

    def quotient_grad(u: np.ndarray, eps: float) -> tuple[float, np.ndarray]:
        # Gradient of Num / D^(p/q) evaluated on the manifold D(u) = 1.
        num, dnum = obj.numerator_grad(u, eps)
        _, dd = obj.trace_grad(u)
        g = dnum - ratio * num * dd
        g[~mask] = 0.0
        return num, g

    u = normalize_trace(obj, np.array(u0, dtype=float))
    total = 0

    for stage, eps in enumerate(schedule):
        last = stage == len(schedule) - 1
        f, g = quotient_grad(u, eps)
        z = precondition(g)
        window: list[float] = [f]
        du_prev = None
        dg_prev = None
        dz_prev = None
        alpha = None

        while True:
            if total >= max_iterations:
                raise NoConvergence(
                    f"budget of {max_iterations} iterations exhausted "
                    f"(quotient {f:.6g}, eps {eps:.2g})"
                )
            slope = float(g @ z)
            if slope <= 0.0:
                break

            if du_prev is not None:
                sy = float(du_prev @ dg_prev)
                yy = float(dg_prev @ dz_prev)
                alpha = sy / yy if (sy > 0.0 and yy > 0.0) else None
            if alpha is None:
                alpha = min(1.0, 0.1 * float(np.linalg.norm(u)) / np.sqrt(slope))
            alpha = float(np.clip(alpha, *STEP_CLIP))

            accepted = False
            for _ in range(MAX_BACKTRACKS):
                try:
                    trial = normalize_trace(obj, u - alpha * z)
                except ZeroTrace:
                    alpha *= BACKTRACK  # step overshot through the zero-trace set
                    continue
                f_trial = obj.numerator(trial, eps)
                if f_trial <= f - ARMIJO_C * alpha * slope:
                    accepted = True
                    break
                alpha *= BACKTRACK
            if not accepted:
                break  # stationary to line-search precision at this eps

            f_new, g_new = quotient_grad(trial, eps)
            z_new = precondition(g_new)
            du_prev = trial - u
            dg_prev = g_new - g
            dz_prev = z_new - z
            u, f, g, z = trial, f_new, g_new, z_new
            total += 1
            window.append(f)
            if len(window) > DECREASE_WINDOW:
                window.pop(0)
                decrease = (window[0] - f) / max(abs(f), 1e-300)
                if decrease < rel_tol:
                    if not last:
                        break
                    if obj.residual(u, obj.numerator(u, 0.0)) <= residual_tol:
                        break
                    window = [f]  # keep polishing toward the residual target

    value = obj.numerator(u, 0.0)
    res = obj.residual(u, value)
    if res > residual_tol:
        raise NoConvergence(
            f"stalled with scaled EL residual {res:.3g} > {residual_tol:.3g}"
        )
    return u, MinimizeInfo(value=value, iterations=total, residual=res)
