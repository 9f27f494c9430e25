"""Parametric 2x2 family contrasting a bad and a good approximate model.

For a parameter alpha >= 1 the family uses

    A = [[1, 0], [alpha, 1]],   W = diag(alpha, 1),

with two approximations of A: the "plus2" variant shifts the subdiagonal
by 2 (error norm 2, independent of alpha) and the "stable" variant shifts
it by 1/alpha (error norm 1/alpha, so kappa_2(W) * ||E||_2 = 1). Both
admit closed-form eigenvalues for the preconditioned operator, which makes
the family a sharp analytic oracle for the numerics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import SpdMatrix
from .theory import _solve_right

PLUS2 = "plus2"
STABLE = "stable"
VARIANT_TAGS = (PLUS2, STABLE)

#: Default log-spaced alpha grid for sweeps: 17 points spanning [1, 1e4].
ALPHA_GRID = tuple(np.logspace(0.0, 4.0, 17))


@dataclass(frozen=True)
class ExampleVariant:
    """One member of the family: a variant tag and the parameter alpha."""

    tag: str
    alpha: float

    def __post_init__(self):
        if self.tag not in VARIANT_TAGS:
            raise ValueError(f"unknown variant tag {self.tag!r}")
        if not self.alpha >= 1.0:
            raise ValueError("alpha must be >= 1")


def example_instance(v: ExampleVariant):
    """Return (A, W, At) for the variant."""
    a = np.array([[1.0, 0.0], [v.alpha, 1.0]])
    w = SpdMatrix(np.diag([v.alpha, 1.0]))
    shift = 2.0 if v.tag == PLUS2 else 1.0 / v.alpha
    atilde = np.array([[1.0, 0.0], [v.alpha + shift, 1.0]])
    return a, w, atilde


def closed_form_eigs(v: ExampleVariant):
    """Exact (lambda_min, lambda_max) of the preconditioned operator.

    plus2:  1 + 2*alpha +- 2*sqrt(alpha*(alpha+1))
    stable: (2 + 1/alpha +- sqrt(4/alpha + 1/alpha^2)) / 2

    Both pairs have product one, so the small root is computed as the
    reciprocal of the large one to dodge cancellation at large alpha.
    """
    al = v.alpha
    if v.tag == PLUS2:
        lam_max = 1.0 + 2.0 * al + 2.0 * math.sqrt(al * (al + 1.0))
    else:
        inv = 1.0 / al
        lam_max = 0.5 * (2.0 + inv + math.sqrt(4.0 * inv + inv * inv))
    return 1.0 / lam_max, lam_max


def closed_form_condition(v: ExampleVariant) -> float:
    """Exact condition number of the preconditioned operator."""
    lam_min, lam_max = closed_form_eigs(v)
    return lam_max / lam_min


def unweighted_relative_condition(v: ExampleVariant) -> float:
    """Condition number of A^T A with respect to At^T At for the plus2 variant.

    Evaluated as the squared condition number of X = A At^{-1}, which is
    the identity the analysis rests on and stays accurate at large alpha
    where the assembled normal matrices are numerically hopeless. The
    value is constant in alpha: 17 + 12*sqrt(2) ~= 33.9706.
    """
    if v.tag != PLUS2:
        raise ValueError("the unweighted constant applies to the plus2 variant")
    a, _, atilde = example_instance(v)
    s = np.linalg.svd(_solve_right(a, atilde), compute_uv=False)
    return float((s[0] / s[-1]) ** 2)
