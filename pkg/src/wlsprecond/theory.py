"""Quality analysis for preconditioners built from approximate model matrices.

Given a nonsingular model matrix A, an approximation At of it and an SPD
weight matrix W, the preconditioner P = At^T W^{-1} At turns the normal
matrix N = A^T W^{-1} A into the preconditioned operator

    A_p = (At^{-1} W At^{-T}) (A^T W^{-1} A).

Writing X = A At^{-1} and E = X - I, every eigenvalue of A_p lies in the
closed ball centered at 1 of radius

    (1 + kappa_2(W)) * ||E||_2 + kappa_2(W) * ||E||_2^2,

which also yields a condition-number bound for A_p whenever that radius is
below one. This module computes all of these quantities and verifies the
measured spectrum against the predictions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .linalg import (
    SpdMatrix,
    as_matrix,
    generalized_eigs,
    spectral_norm,
    triangular_solve,
)

#: Relative slack granted to the containment check so eigensolver rounding
#: never produces a false bound violation.
CONTAINMENT_SLACK = 1e-9

#: Relative LU pivot threshold below which the approximation is rejected.
LU_PIVOT_RTOL = 1e-12


class SingularApproximation(Exception):
    """The approximate model matrix is numerically singular."""


class NotAdmissible(Exception):
    """The error norm violates the admissibility condition of the bound."""


@dataclass(frozen=True)
class ErrorSummary:
    """Multiplicative approximation error E = A At^{-1} - I and its norm."""

    matrix: np.ndarray
    norm: float


@dataclass(frozen=True)
class SpectrumBall:
    """Closed interval [1 - radius, 1 + radius] predicted to hold sigma(A_p)."""

    radius: float
    center: float = 1.0

    def contains(self, value, slack=CONTAINMENT_SLACK) -> bool:
        return abs(value - self.center) <= self.radius + slack * (1.0 + self.radius)


@dataclass(frozen=True)
class PrecondReport:
    """Measured spectrum of A_p against the predicted ball and bounds."""

    eigenvalues: np.ndarray
    ball: SpectrumBall
    cond_measured: float
    cond_bound: float | None
    admissible: bool
    contained: bool
    kappa_w: float
    error_norm: float


def normal_matrix(a, w: SpdMatrix) -> SpdMatrix:
    """Assemble A^T W^{-1} A as an SPD matrix.

    W^{-1} is applied through its Cholesky factor R: with Z = R^{-1} A the
    product Z^T Z equals A^T W^{-1} A and is symmetric by construction.
    """
    am = as_matrix(a)
    z = triangular_solve(w.chol, am)
    return SpdMatrix(z.T @ z)


def _solve_right(a, atilde):
    """X = A At^{-1} via LU with partial pivoting on At^T X^T = A^T."""
    am = as_matrix(a)
    tm = as_matrix(atilde)
    if am.shape != tm.shape or am.shape[0] != am.shape[1]:
        raise ValueError("a and atilde must be square matrices of equal size")
    lu, piv = lu_factor(tm)
    pivot_floor = LU_PIVOT_RTOL * float(np.max(np.abs(tm))) if tm.size else 0.0
    if np.min(np.abs(np.diag(lu))) < pivot_floor:
        raise SingularApproximation("approximate matrix has a negligible LU pivot")
    return lu_solve((lu, piv), am.T, trans=1).T


def approximation_error(a, atilde) -> ErrorSummary:
    """E = A At^{-1} - I together with its spectral norm."""
    x = _solve_right(a, atilde)
    e = x - np.eye(x.shape[0])
    return ErrorSummary(matrix=e, norm=spectral_norm(e))


def spectrum_radius(e_norm: float, kappa_w: float) -> float:
    """Radius (1 + kappa) * e + kappa * e^2 of the containment ball."""
    if e_norm < 0:
        raise ValueError("error norm must be nonnegative")
    if kappa_w < 1:
        raise ValueError("condition number must be >= 1")
    if e_norm == 0.0:
        return 0.0
    return (1.0 + kappa_w) * e_norm + kappa_w * e_norm * e_norm


def admissible_error(kappa_w: float) -> float:
    """Largest error norm for which the condition bound stays finite.

    Equals the positive root of kappa*e^2 + (1+kappa)*e - 1 = 0, written in
    the cancellation-free form 2 / (sqrt((1+k)^2 + 4k) + (1+k)).
    """
    if kappa_w < 1:
        raise ValueError("condition number must be >= 1")
    s = 1.0 + kappa_w
    return 2.0 / (math.sqrt(s * s + 4.0 * kappa_w) + s)


def condition_bound(e_norm: float, kappa_w: float) -> float:
    """Upper bound (1 + r) / (1 - r) on the condition number of A_p."""
    if e_norm == 0.0:
        return 1.0
    r = spectrum_radius(e_norm, kappa_w)
    if r >= 1.0:
        raise NotAdmissible(
            f"error norm {e_norm:.6g} exceeds admissible_error({kappa_w:.6g})"
        )
    return (1.0 + r) / (1.0 - r)


def error_budget(kappa_w: float, m: float) -> float:
    """Largest error norm guaranteeing a condition number of A_p at most m.

    Positive root of kappa*e^2 + (1+kappa)*e - (m-1)/(m+1) = 0 in
    cancellation-free form; approaches admissible_error(kappa) as m grows.
    """
    if kappa_w < 1:
        raise ValueError("condition number must be >= 1")
    if m <= 1:
        raise ValueError("target condition number must exceed 1")
    f = (m - 1.0) / (m + 1.0)
    s = 1.0 + kappa_w
    return 2.0 * f / (math.sqrt(s * s + 4.0 * kappa_w * f) + s)


def relative_condition(d: SpdMatrix, c: SpdMatrix) -> float:
    """Condition number of d with respect to c: extreme ratio of c^{-1} d."""
    ev = generalized_eigs(d, c)
    return float(ev[-1] / ev[0])


def _spectrum_from_factor(x, w: SpdMatrix) -> np.ndarray:
    """Ascending eigenvalues of A_p from X = A At^{-1} and the weight W.

    With W = R R^T the operator A_p is similar to K^T K for
    K = R^{-1} X R, so its eigenvalues are the squared singular values of
    K. The factored form avoids assembling the normal matrices, whose
    extreme conditioning would otherwise wash out the small eigenvalues.
    """
    k = triangular_solve(w.chol, as_matrix(x) @ w.chol)
    s = np.linalg.svd(k, compute_uv=False)
    return np.sort(s * s)


def preconditioned_spectrum(a, atilde, w: SpdMatrix) -> np.ndarray:
    """Ascending, strictly positive eigenvalues of the preconditioned operator."""
    x = _solve_right(a, atilde)
    return _spectrum_from_factor(x, w)


def verify_spectrum(a, atilde, w: SpdMatrix, kappa_w=None) -> PrecondReport:
    """Measure sigma(A_p) and check it against the predicted ball and bounds.

    ``kappa_w`` overrides the computed condition number of W when an
    analytic value is available (e.g. diagonal weights).
    """
    x = _solve_right(a, atilde)
    e = x - np.eye(x.shape[0])
    e_norm = spectral_norm(e)
    kw = float(kappa_w) if kappa_w is not None else w.condition()
    ball = SpectrumBall(radius=spectrum_radius(e_norm, kw))
    eigs = _spectrum_from_factor(x, w)
    admissible = e_norm < admissible_error(kw)
    bound = condition_bound(e_norm, kw) if admissible else None
    return PrecondReport(
        eigenvalues=eigs,
        ball=ball,
        cond_measured=float(eigs[-1] / eigs[0]),
        cond_bound=bound,
        admissible=admissible,
        contained=bool(all(ball.contains(lam) for lam in eigs)),
        kappa_w=kw,
        error_norm=e_norm,
    )
