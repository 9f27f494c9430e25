"""Randomized verification suite for the containment and bound guarantees.

Each instance index derives its own PRNG stream, so any reported failure
can be replayed from (seed, index). The suite covers:

  * containment of sigma(A_p) in the predicted ball,
  * the condition-number bound whenever the error norm is admissible,
  * consistency of the relative condition number with Rayleigh-quotient
    sampling on small SPD pairs,
  * the closed block form of the 4D-Var error against dense computation,
  * dominance of the variant rho bound over the measured error norm and
    containment of the preconditioned background spectrum.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import fourdvar, instances, theory
from .fourdvar import VARIANT_IDENTITY, VARIANT_ZERO
from .linalg import SpdMatrix, generalized_eigs, spectral_norm

#: Relative slack shared with the containment checks.
SLACK = theory.CONTAINMENT_SLACK

LEMMA_ABS_TOL = 1e-12
ZERO_NORM_RTOL = 1e-10
SAMPLING_PAIRS = 500


@dataclass
class CheckResult:
    """Outcome of one named check across all instances."""

    name: str
    passed: int = 0
    failed: int = 0
    failures: list = field(default_factory=list)

    def record(self, ok: bool, repro: str):
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            self.failures.append(repro)


@dataclass
class SuiteResult:
    checks: list
    worst_slack: float
    count: int
    seed: int

    @property
    def ok(self) -> bool:
        return all(c.failed == 0 for c in self.checks)


def _containment_slack(eigs, radius) -> float:
    """max over eigenvalues of (|lam - 1| - radius) / radius."""
    if radius <= 0.0:
        return float(np.max(np.abs(eigs - 1.0)))
    return float(np.max((np.abs(eigs - 1.0) - radius) / radius))


def run_random_suite(count=1000, max_dim=12, seed=instances.DEFAULT_SEED,
                     radius_scale=1.0) -> SuiteResult:
    """Run all randomized checks on ``count`` seeded instances.

    ``radius_scale`` shrinks the containment radius and exists only so the
    suite's own failure detection can be exercised; leave it at 1.0.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    containment = CheckResult("theorem-containment")
    positivity = CheckResult("spectrum-positivity")
    cond_bound = CheckResult("condition-bound")
    sampling = CheckResult("relative-condition-sampling")
    lemma = CheckResult("error-block-formula")
    rho_dom = CheckResult("rho-dominates-error-norm")
    zero_norm = CheckResult("zero-variant-exact-norm")
    bg_contain = CheckResult("background-containment")
    worst_slack = -np.inf

    for i in range(count):
        rng = instances.rng_for(seed, i)
        repro = f"seed={seed} instance={i}"
        inst = instances.random_wls_instance(rng, max_dim=max_dim)
        report = theory.verify_spectrum(inst.a, inst.atilde, inst.w)
        radius = report.ball.radius * radius_scale
        slack = _containment_slack(report.eigenvalues, radius)
        worst_slack = max(worst_slack, slack)
        contained = bool(
            np.all(np.abs(report.eigenvalues - 1.0) <= radius + SLACK * (1.0 + radius))
        )
        containment.record(contained, f"{repro} slack={slack:.3e}")
        positivity.record(bool(report.eigenvalues[0] > 0.0),
                          f"{repro} lambda_min={report.eigenvalues[0]:.3e}")
        if report.admissible:
            ok = report.cond_measured <= report.cond_bound * (1.0 + SLACK)
            cond_bound.record(ok, f"{repro} cond={report.cond_measured:.6g} "
                                  f"bound={report.cond_bound:.6g}")

        n = int(rng.integers(2, 4))
        d = instances.random_spd(rng, n, eig_range=(0.2, 5.0))
        c = instances.random_spd(rng, n, eig_range=(0.2, 5.0))
        ev = generalized_eigs(d, c)
        xs = rng.standard_normal((SAMPLING_PAIRS, n))
        ratios = np.einsum("ij,jk,ik->i", xs, d.mat, xs) / \
            np.einsum("ij,jk,ik->i", xs, c.mat, xs)
        ok = bool(
            ratios.min() >= ev[0] * (1.0 - 1e-9)
            and ratios.max() <= ev[-1] * (1.0 + 1e-9)
        )
        sampling.record(ok, f"{repro} sampled=[{ratios.min():.6g},{ratios.max():.6g}] "
                            f"eigs=[{ev[0]:.6g},{ev[-1]:.6g}]")

        layout = instances.random_layout(rng)
        e = fourdvar.error_blocks(layout)
        lmat = fourdvar.assemble_L(layout)
        ltil = fourdvar.assemble_Ltilde(layout)
        dense = lmat @ np.linalg.inv(ltil) - np.eye(layout.dim)
        err = float(np.max(np.abs(e - dense))) if layout.dim else 0.0
        lemma.record(err <= LEMMA_ABS_TOL, f"{repro} lemma_abs_err={err:.3e}")

        variant = VARIANT_ZERO if i % 2 == 0 else VARIANT_IDENTITY
        clay = instances.random_contractive_layout(rng, variant=variant)
        e_norm = spectral_norm(fourdvar.error_blocks(clay))
        rho = fourdvar.rho_bound(clay)
        rho_dom.record(e_norm <= rho * (1.0 + SLACK),
                       f"{repro} enorm={e_norm:.6g} rho={rho:.6g}")
        if variant == VARIANT_ZERO:
            exact = max(spectral_norm(m) for m in clay.models)
            ok = abs(e_norm - exact) <= ZERO_NORM_RTOL * exact
            zero_norm.record(ok, f"{repro} enorm={e_norm:.17g} max_sigma={exact:.17g}")
        cov = instances.random_covariances(rng, clay)
        bg = fourdvar.background_spectrum_check(clay, cov)
        bg_contain.record(bool(bg.contained_rho and bg.contained_error),
                          f"{repro} rho_ok={bg.contained_rho} enorm_ok={bg.contained_error}")

    checks = [containment, positivity, cond_bound, sampling,
              lemma, rho_dom, zero_norm, bg_contain]
    return SuiteResult(checks=checks, worst_slack=float(worst_slack),
                       count=count, seed=seed)
