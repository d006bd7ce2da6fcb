"""Diffusion stage: implicit Euler via matrix-free preconditioned CG.

Each species is advanced by solving (I - dt div(D grad)) u = u* with the
divergence-form stencil from :mod:`rxd.grid`.  The operator is symmetric
positive definite, so the solve uses conjugate gradients with a Jacobi
(diagonal) preconditioner, applied matrix-free.  The initial iterate is u*
itself: for small dt the update is a small perturbation of the right-hand
side, and constant fields converge in zero iterations.

Positivity of the update is a property of the exact solve; it is asserted
after the iterative solve rather than enforced, since clipping would break
mass conservation.  A violation signals a far-too-loose tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConvergenceError, PositivityError
from .grid import Coefficient, DiffusionCoeffs, Field, State, face_coefficient

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class LinearSolveReport:
    iterations: int
    final_relative_residual: float
    converged: bool


class _ImplicitDiffusionOperator:
    """Matrix-free application of (I - dt div(D grad)) on one grid."""

    def __init__(self, grid, d: Coefficient, dt: float):
        self.grid = grid
        self.dt = dt
        # Face coefficients per physical axis; floats stay floats.
        self.faces = [face_coefficient(grid, d, axis) for axis in range(grid.dim)]

    def apply(self, v: np.ndarray) -> np.ndarray:
        h = self.grid.h
        out = v.copy()
        for axis, dface in enumerate(self.faces):
            array_axis = self.grid.dim - 1 - axis
            flux = dface * (np.roll(v, -1, axis=array_axis) - v) / h
            out -= self.dt * (flux - np.roll(flux, 1, axis=array_axis)) / h
        return out

    def diagonal(self) -> np.ndarray:
        h2 = self.grid.h**2
        diag = np.ones(self.grid.shape)
        for axis, dface in enumerate(self.faces):
            array_axis = self.grid.dim - 1 - axis
            if isinstance(dface, float):
                diag += self.dt * 2.0 * dface / h2
            else:
                diag += self.dt * (dface + np.roll(dface, 1, axis=array_axis)) / h2
        return diag


def _pcg(op: _ImplicitDiffusionOperator, b: np.ndarray, x0: np.ndarray,
         tol: float, max_iter: int) -> tuple[np.ndarray, LinearSolveReport]:
    """Jacobi-preconditioned conjugate gradients; residual is relative to ||b||."""
    b_norm = float(np.linalg.norm(b.ravel()))
    if b_norm == 0.0:
        return np.zeros_like(b), LinearSolveReport(0, 0.0, True)
    inv_diag = 1.0 / op.diagonal()
    x = x0.copy()
    r = b - op.apply(x)
    z = inv_diag * r
    p = z.copy()
    rz = float(np.sum(r * z))
    rel = float(np.linalg.norm(r.ravel())) / b_norm
    iterations = 0
    while rel > tol:
        if iterations >= max_iter:
            report = LinearSolveReport(iterations, rel, False)
            raise ConvergenceError(
                f"CG stalled at relative residual {rel:.3e} after "
                f"{iterations} iterations (tol {tol:.1e})",
                report=report,
            )
        ap = op.apply(p)
        alpha = rz / float(np.sum(p * ap))
        x = x + alpha * p
        r = r - alpha * ap
        z = inv_diag * r
        rz_next = float(np.sum(r * z))
        p = z + (rz_next / rz) * p
        rz = rz_next
        rel = float(np.linalg.norm(r.ravel())) / b_norm
        iterations += 1
    return x, LinearSolveReport(iterations, rel, True)


def step_diffusion_species(
    u_star: Field,
    d: Coefficient,
    dt: float,
    tol: float = DEFAULT_TOL,
    max_iter: Optional[int] = None,
) -> tuple[Field, LinearSolveReport]:
    """Implicit Euler update of one species: solve (I - dt div(D grad)) u = u*."""
    if not dt > 0.0:
        raise PositivityError(f"step_diffusion_species: dt must be positive, got {dt}")
    u_star.check_finite("u_star")
    if max_iter is None:
        max_iter = 10 * u_star.grid.num_cells
    op = _ImplicitDiffusionOperator(u_star.grid, d, dt)
    x, report = _pcg(op, u_star.values, u_star.values, tol, max_iter)
    return Field(u_star.grid, x), report


def step_diffusion(
    state_star: State,
    coeffs: DiffusionCoeffs,
    dt: float,
    tol: float = DEFAULT_TOL,
    max_iter: Optional[int] = None,
) -> tuple[State, tuple[LinearSolveReport, LinearSolveReport, LinearSolveReport]]:
    """Advance all three species by implicit diffusion; time moves forward by dt.

    The three solves are independent.  The result must be strictly positive;
    if it is not, the linear tolerance is too loose for the data and a
    :class:`PositivityError` is raised instead of silently clipping.
    """
    state_star.require_positive("step_diffusion input")
    fields = []
    reports = []
    for (name, f), d in zip(state_star.species(), coeffs.per_species()):
        u_next, report = step_diffusion_species(f, d, dt, tol, max_iter)
        m = u_next.values.min()
        if not m > 0.0:
            cell = int(np.argmin(u_next.values.ravel()))
            raise PositivityError(
                f"diffusion update lost positivity for species {name} at cell "
                f"{cell} (min {m!r}); tighten the linear solver tolerance"
            )
        fields.append(u_next)
        reports.append(report)
    next_state = State(fields[0], fields[1], fields[2], state_star.time + dt)
    return next_state, (reports[0], reports[1], reports[2])
