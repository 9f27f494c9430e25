"""Preconditioned conjugate gradients tied to the factored preconditioners.

Operators are matrix-free SPD actions; the weighted least-squares and
4D-Var constructors apply every inverse through triangular or LU solves,
never through explicitly formed inverse matrices.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from . import fourdvar
from .linalg import SpdMatrix, as_matrix, as_vector
from .theory import SingularApproximation, LU_PIVOT_RTOL

#: Defaults shared by the solver and the CLI benchmarks.
DEFAULT_TOL = 1e-8

#: p^T A p at or below this level counts as a fatal breakdown.
BREAKDOWN_FLOOR = 1e-300

#: Random vector pairs used by the operator symmetry self-test.
SYMMETRY_PAIRS = 8
SYMMETRY_TOL = 1e-10


class BreakdownDetected(Exception):
    """p^T A p was nonpositive: the operator is not SPD."""


class NotSymmetricOperator(Exception):
    """The operator failed the <Ax, y> == <x, Ay> spot check."""


@dataclass(frozen=True)
class LinearOperator:
    """A dimension plus a symmetric positive-definite action."""

    dim: int
    apply: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x) -> np.ndarray:
        return self.apply(as_vector(x, self.dim))


def operator_from_matrix(m) -> LinearOperator:
    a = as_matrix(m)
    return LinearOperator(dim=a.shape[0], apply=lambda x: a @ x)


def identity_operator(dim) -> LinearOperator:
    return LinearOperator(dim=dim, apply=lambda x: x.copy())


def check_symmetry(op: LinearOperator, seed=0, pairs=SYMMETRY_PAIRS) -> None:
    """Spot-check symmetry of the action on random vector pairs."""
    rng = np.random.default_rng(seed)
    for _ in range(pairs):
        x = rng.standard_normal(op.dim)
        y = rng.standard_normal(op.dim)
        left = float(op(x) @ y)
        right = float(x @ op(y))
        scale = 1.0 + abs(left) + abs(right)
        if abs(left - right) > SYMMETRY_TOL * scale:
            raise NotSymmetricOperator(
                f"<Ax,y>={left:.6g} differs from <x,Ay>={right:.6g}"
            )


@dataclass(frozen=True)
class PcgTrace:
    """Solution, iteration count and the per-iteration true residual norms.

    ``residual_norms[k]`` is ||b - A x_k||_2; the list starts with the
    initial residual, so its length is ``iterations + 1``.
    """

    solution: np.ndarray
    iterations: int
    residual_norms: tuple
    converged: bool


def pcg(system: LinearOperator, precond: LinearOperator, rhs,
        tol=DEFAULT_TOL, max_iter=None, check_operators=True) -> PcgTrace:
    """Preconditioned CG from a zero start, stopping on the true residual.

    The residual is recomputed as b - A x_k every iteration (affordable at
    desk scale), so the recorded trace cannot drift from the recursion.
    A nonpositive p^T A p raises BreakdownDetected; running out of
    iterations returns a trace with ``converged=False``.
    """
    if system.dim != precond.dim:
        raise ValueError("system and preconditioner dimensions differ")
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    if max_iter is None:
        max_iter = 10 * system.dim
    if check_operators:
        check_symmetry(system)
        check_symmetry(precond, seed=1)
    b = as_vector(rhs, system.dim)
    b_norm = float(np.linalg.norm(b))
    x = np.zeros_like(b)
    r = b.copy()
    norms = [float(np.linalg.norm(r))]
    if norms[0] <= tol * b_norm:
        return PcgTrace(x, 0, tuple(norms), True)
    z = precond(r)
    p = z.copy()
    rz = float(r @ z)
    for k in range(1, max_iter + 1):
        q = system(p)
        pq = float(p @ q)
        if pq <= BREAKDOWN_FLOOR:
            raise BreakdownDetected(f"p^T A p = {pq:.3e} at iteration {k}")
        x = x + (rz / pq) * p
        r = b - system(x)
        norms.append(float(np.linalg.norm(r)))
        if norms[-1] <= tol * b_norm:
            return PcgTrace(x, k, tuple(norms), True)
        z = precond(r)
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    return PcgTrace(x, max_iter, tuple(norms), False)


def benchmark_rhs(system: LinearOperator, seed=42) -> np.ndarray:
    """Seeded right-hand side for solver benchmarks.

    Drawn as the system action on a unit-normal reference solution, so the
    benchmark stays solvable at tight tolerances even when the system
    itself is extremely ill-conditioned (a raw random rhs would put the
    attainable true-residual floor above any reasonable tolerance).
    """
    rng = np.random.default_rng(seed)
    return system(rng.standard_normal(system.dim))


def wlsq_operators(a, atilde, w: SpdMatrix):
    """System A^T W^{-1} A and preconditioner At^{-1} W At^{-T} as actions."""
    am = as_matrix(a)
    tm = as_matrix(atilde)
    if am.shape != tm.shape or am.shape[0] != am.shape[1] or am.shape[0] != w.size:
        raise ValueError("a, atilde and w must be square and of equal size")
    lu, piv = lu_factor(tm)
    floor = LU_PIVOT_RTOL * float(np.max(np.abs(tm)))
    if np.min(np.abs(np.diag(lu))) < floor:
        raise SingularApproximation("approximate matrix has a negligible LU pivot")
    dim = am.shape[0]

    def system(x):
        return am.T @ w.solve(am @ x)

    def precond(x):
        y = lu_solve((lu, piv), x, trans=1)   # At^{-T} x
        return lu_solve((lu, piv), w.mat @ y)  # At^{-1} W (...)

    return LinearOperator(dim, system), LinearOperator(dim, precond)


def fourdvar_operators(layout: fourdvar.FourDVarLayout, cov: fourdvar.BlockCovariances):
    """State system and Lt^{-1} D Lt^{-T} preconditioner as block actions."""
    if cov.n_windows != layout.n_sw + 1 or any(b.size != layout.n for b in cov.d_blocks):
        raise fourdvar.DimensionMismatch("covariance blocks do not match the layout")
    n = layout.n
    dim = layout.dim

    def blockwise_d(fn, v):
        return np.concatenate([
            fn(cov.d_blocks[j], v[j * n:(j + 1) * n])
            for j in range(layout.n_sw + 1)
        ])

    def system(x):
        u = fourdvar.apply_L(layout, x)
        y = fourdvar.apply_L(layout, blockwise_d(lambda blk, s: blk.solve(s), u),
                             transposed=True)
        if cov.has_observations():
            off = 0
            y = y.copy()
            for j, (rj, hj) in enumerate(zip(cov.r_blocks, cov.h_blocks)):
                sl = slice(j * n, (j + 1) * n)
                y[sl] += hj.T @ rj.solve(hj @ x[sl])
                off += rj.size
        return y

    def precond(x):
        u = fourdvar.apply_Linv(layout, x, transposed=True)
        return fourdvar.apply_Linv(layout, blockwise_d(lambda blk, s: blk.mat @ s, u))

    return LinearOperator(dim, system), LinearOperator(dim, precond)
