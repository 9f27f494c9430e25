"""Seeded random instance generators for the property and acceptance suites.

Every instance derives its own generator from (seed, index) so suites are
reproducible and order-independent; a failure can be replayed from the
seed and instance index alone.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourdvar import (
    VARIANT_CUSTOM,
    VARIANT_IDENTITY,
    VARIANT_ZERO,
    BlockCovariances,
    FourDVarLayout,
)
from .linalg import SpdMatrix
from .theory import SingularApproximation, approximation_error

DEFAULT_SEED = 42


def rng_for(seed: int, index: int) -> np.random.Generator:
    """Independent stream for one instance of a suite."""
    return np.random.default_rng((int(seed), int(index)))


def random_orthogonal(rng, n) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_spd(rng, n, cond=None, eig_range=(0.5, 2.0)) -> SpdMatrix:
    """Random SPD matrix, either with a prescribed condition number or with
    eigenvalues drawn log-uniformly from ``eig_range``."""
    if cond is not None:
        lam = np.exp(rng.uniform(0.0, np.log(cond), size=n)) if n > 2 else np.ones(n)
        lam[0], lam[-1] = 1.0, cond
    else:
        lo, hi = eig_range
        lam = np.exp(rng.uniform(np.log(lo), np.log(hi), size=n))
    q = random_orthogonal(rng, n)
    return SpdMatrix((q * lam) @ q.T)


@dataclass(frozen=True)
class WlsInstance:
    """One random weighted least-squares triple (A, At, W)."""

    a: np.ndarray
    atilde: np.ndarray
    w: SpdMatrix


def random_wls_instance(rng, max_dim=12, kappa_max=1e4,
                        admissible_fraction=0.5) -> WlsInstance:
    """A, At with unit-normal entries; W = Q diag Q^T with kappa_2(W)
    log-uniform in [1, kappa_max]. Near-singular draws are resampled.

    A fraction of the instances instead uses At = (I + S)^{-1} A with
    ||S||_2 scaled below the admissibility threshold, so the error is
    E = S exactly and the condition-number bound is exercised too.
    """
    from .theory import admissible_error

    n = int(rng.integers(2, max_dim + 1))
    kappa = float(np.exp(rng.uniform(0.0, np.log(kappa_max))))
    w = random_spd(rng, n, cond=kappa)
    good = rng.random() < admissible_fraction
    while True:
        a = rng.standard_normal((n, n))
        if good:
            s = rng.standard_normal((n, n))
            target = rng.uniform(0.05, 0.95) * admissible_error(kappa)
            s *= target / max(np.linalg.norm(s, 2), 1e-12)
            atilde = np.linalg.solve(np.eye(n) + s, a)
        else:
            atilde = rng.standard_normal((n, n))
        try:
            approximation_error(a, atilde)
        except SingularApproximation:
            continue
        if np.linalg.cond(a) < 1e8 and np.linalg.cond(atilde) < 1e8:
            break
    return WlsInstance(a=a, atilde=atilde, w=w)


def random_layout(rng, max_n=4, max_nsw=6, variant=None,
                  block_scale=0.5) -> FourDVarLayout:
    """Random model blocks with N(0, block_scale^2) entries.

    The moderate scale keeps accumulated block products small enough for
    absolute 1e-12 comparisons against dense reference computations.
    """
    n = int(rng.integers(1, max_n + 1))
    n_sw = int(rng.integers(0, max_nsw + 1))
    if variant is None:
        variant = (VARIANT_ZERO, VARIANT_IDENTITY, VARIANT_CUSTOM)[int(rng.integers(3))]
    models = tuple(block_scale * rng.standard_normal((n, n)) for _ in range(n_sw))
    if variant == VARIANT_CUSTOM:
        approx = tuple(block_scale * rng.standard_normal((n, n)) for _ in range(n_sw))
        return FourDVarLayout(n, n_sw, models, variant, approx)
    return FourDVarLayout(n, n_sw, models, variant)


def random_contractive_layout(rng, max_n=3, max_nsw=5, variant=VARIANT_ZERO,
                              sigma_max=0.5) -> FourDVarLayout:
    """Layout whose blocks keep the variant-specific error bound small:
    sigma_max(M_j) < sigma_max for the zero variant, sigma_max(I - M_j)
    bounded for the identity variant."""
    n = int(rng.integers(1, max_n + 1))
    n_sw = int(rng.integers(1, max_nsw + 1))
    models = []
    for _ in range(n_sw):
        raw = rng.standard_normal((n, n))
        raw *= sigma_max * rng.uniform(0.2, 0.95) / max(np.linalg.norm(raw, 2), 1e-12)
        if variant == VARIANT_IDENTITY:
            raw = np.eye(n) - raw
        models.append(raw)
    return FourDVarLayout(n, n_sw, tuple(models), variant)


def random_covariances(rng, layout, eig_range=(0.5, 2.0)) -> BlockCovariances:
    return BlockCovariances(tuple(
        random_spd(rng, layout.n, eig_range=eig_range)
        for _ in range(layout.n_sw + 1)
    ))
