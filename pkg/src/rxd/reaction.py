"""Reaction stage: implicit cellwise solve of the reaction-trajectory equation.

One reaction step for A + B <=> C advances each cell by the number of net
forward reactions R over the step, found as the root of the monotone scalar
function

    G(R) = ln(1 + R / (k- c dt)) - ln((a - R)/a_inf) - ln((b - R)/b_inf)
                                 + ln((c + R)/c_inf)

on the open bracket (-k- c dt, min(a, b)).  G decreases to -inf at the left
end and grows to +inf at the right end, so the root exists, is unique, and
automatically keeps a - R, b - R, c + R and R + k- c dt strictly positive.
The trajectory counter resets to zero at the start of every step.

The root is found by safeguarded Newton iteration: a Newton candidate is
accepted only while it stays strictly inside the current sign-change
bracket, otherwise the step falls back to bisection.  Starting from R = 0
(the equilibrium value) the iteration is quadratically convergent away from
the bracket endpoints and never evaluates a logarithm outside its domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, PositivityError
from .grid import Field, ModelParams, State

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100

# Shrink factor keeping bracket endpoints strictly inside the singularities.
_EDGE = 1.0 - 1e-15
_EPS = float(np.finfo(float).eps)


def _residual(r, a, b, c, cdt, p: ModelParams):
    """G(R); accepts scalars or ndarrays, all strictly inside the bracket."""
    return (
        np.log1p(r / cdt)
        - np.log((a - r) / p.a_inf)
        - np.log((b - r) / p.b_inf)
        + np.log((c + r) / p.c_inf)
    )


def _slope(r, a, b, c, cdt):
    """G'(R) > 0 on the bracket."""
    return 1.0 / (r + cdt) + 1.0 / (a - r) + 1.0 / (b - r) + 1.0 / (c + r)


def solve_reaction_cell(
    a: float,
    b: float,
    c: float,
    dt: float,
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Solve one cell's trajectory equation; returns the increment R.

    Converges when |G(R)| <= tol, or when the sign-change bracket has
    collapsed to machine width (near the logarithmic singularities the
    residual cannot be evaluated below roundoff, but the root itself is
    then resolved to the last ulp).
    """
    for name, v in (("a", a), ("b", b), ("c", c), ("dt", dt), ("tol", tol)):
        if not v > 0.0:
            raise PositivityError(f"solve_reaction_cell: {name} must be positive, got {v}")
    cdt = params.k_minus * c * dt
    lo = -cdt * _EDGE
    hi = min(a, b) * _EDGE
    r = 0.0
    g = float(_residual(r, a, b, c, cdt, params))
    for _ in range(max_iter):
        if abs(g) <= tol or (hi - lo) <= 4.0 * _EPS * max(abs(lo), abs(hi)):
            return r
        if g < 0.0:
            lo = r
        else:
            hi = r
        cand = r - g / float(_slope(r, a, b, c, cdt))
        r = cand if lo < cand < hi else 0.5 * (lo + hi)
        g = float(_residual(r, a, b, c, cdt, params))
    raise ConvergenceError(
        f"reaction solve stalled after {max_iter} iterations at "
        f"a={a!r} b={b!r} c={c!r} dt={dt!r}: residual {g!r} > tol {tol!r}"
    )


def _solve_field(
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    dt: float,
    params: ModelParams,
    tol: float,
    max_iter: int,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Vectorized safeguarded Newton over all cells.

    Identical update rule as :func:`solve_reaction_cell`, applied per cell
    with converged cells frozen, so the two paths agree bitwise.
    Returns (r, iterations, max_residual).
    """
    cdt = params.k_minus * c * dt
    lo = -cdt * _EDGE
    hi = np.minimum(a, b) * _EDGE
    r = np.zeros_like(a)
    g = _residual(r, a, b, c, cdt, params)
    iterations = np.zeros(a.shape, dtype=np.int64)
    active = np.ones(a.shape, dtype=bool)
    for _ in range(max_iter):
        width_ok = (hi - lo) <= 4.0 * _EPS * np.maximum(np.abs(lo), np.abs(hi))
        active &= ~((np.abs(g) <= tol) | width_ok)
        if not active.any():
            break
        go_lo = active & (g < 0.0)
        lo = np.where(go_lo, r, lo)
        hi = np.where(active & (g >= 0.0), r, hi)
        cand = r - g / _slope(r, a, b, c, cdt)
        step = np.where((cand > lo) & (cand < hi), cand, 0.5 * (lo + hi))
        r = np.where(active, step, r)
        iterations += active
        g = np.where(active, _residual(r, a, b, c, cdt, params), g)
    if active.any():
        cell = int(np.flatnonzero(active.ravel())[0])
        flat = lambda arr: float(arr.ravel()[cell])  # noqa: E731
        raise ConvergenceError(
            f"reaction solve stalled after {max_iter} iterations at cell {cell}: "
            f"a={flat(a)!r} b={flat(b)!r} c={flat(c)!r} dt={dt!r} "
            f"residual {flat(np.abs(g))!r} > tol {tol!r}"
        )
    return r, iterations, float(np.max(np.abs(g)))


@dataclass
class ReactionSolveResult:
    """Per-step outcome of the reaction stage.

    ``r`` holds the per-cell trajectory increments (strictly inside
    (-c dt, min(a, b)) cellwise), ``iterations`` the per-cell Newton counts,
    and ``max_residual`` the largest |G| accepted.
    """

    r: Field
    iterations: np.ndarray
    max_residual: float


def step_reaction(
    state: State,
    dt: float,
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[State, ReactionSolveResult]:
    """Advance the reaction subproblem: a* = a - R, b* = b - R, c* = c + R.

    The time stamp is unchanged; the splitting driver owns time.  The
    returned state is strictly positive cellwise (guaranteed by the root
    bracket).  Note a* + c* == a + c and b* + c* == b + c exactly, cell by
    cell, since the same R is added and subtracted.
    """
    if not dt > 0.0:
        raise PositivityError(f"step_reaction: dt must be positive, got {dt}")
    state.require_positive("step_reaction")
    grid = state.grid
    r, iterations, max_residual = _solve_field(
        state.a.values, state.b.values, state.c.values, dt, params, tol, max_iter
    )
    star = State(
        Field(grid, state.a.values - r),
        Field(grid, state.b.values - r),
        Field(grid, state.c.values + r),
        state.time,
    )
    star.require_positive("step_reaction output")
    return star, ReactionSolveResult(Field(grid, r), iterations, max_residual)
