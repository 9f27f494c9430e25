"""Figure rendering for the CLI report paths.

Each function takes the already-computed sweep rows and writes one PNG.
Rendering is optional everywhere: the CSV output is the primary artifact
and the figures are a convenience view of the same data.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_example_sweep(rows, path) -> None:
    """Eigenvalue envelopes and condition numbers against alpha per variant."""
    fig, (ax_eig, ax_cond) = plt.subplots(1, 2, figsize=(11, 4.2))
    for variant in sorted({r["variant"] for r in rows}):
        sel = [r for r in rows if r["variant"] == variant]
        alphas = [r["alpha"] for r in sel]
        ax_eig.loglog(alphas, [r["lambda_max"] for r in sel], "-o", ms=3,
                      label=f"{variant} max")
        ax_eig.loglog(alphas, [r["lambda_min"] for r in sel], "--o", ms=3,
                      label=f"{variant} min")
        ax_cond.loglog(alphas, [r["cond_measured"] for r in sel], "-o", ms=3,
                       label=variant)
    ax_eig.set_xlabel(r"$\alpha$")
    ax_eig.set_ylabel("eigenvalues of preconditioned operator")
    ax_eig.legend(fontsize=8)
    ax_cond.set_xlabel(r"$\alpha$")
    ax_cond.set_ylabel("measured condition number")
    ax_cond.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_figure1(rows, m_values, path) -> None:
    """Admissible error and the budget curves g against kappa, log-log."""
    kappas = [r["kappa_w"] for r in rows]
    fig, (ax_a, ax_b) = plt.subplots(1, 2, figsize=(11, 4.2))
    ax_a.loglog(kappas, [r["admissible_error"] for r in rows], "-")
    ax_a.set_xlabel(r"$\kappa_2(W)$")
    ax_a.set_ylabel("admissible error norm")
    for m in m_values:
        ax_b.loglog(kappas, [r[f"g_M{m:g}"] for r in rows], "-", label=f"M = {m:g}")
    ax_b.set_xlabel(r"$\kappa_2(W)$")
    ax_b.set_ylabel("error budget g")
    ax_b.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_verify(report, path) -> None:
    """Measured eigenvalues against the predicted containment interval."""
    fig, ax = plt.subplots(figsize=(7, 3.2))
    eigs = report.eigenvalues
    ax.plot(eigs, [0.0] * len(eigs), "o", label="eigenvalues")
    lo = report.ball.center - report.ball.radius
    hi = report.ball.center + report.ball.radius
    ax.axvspan(lo, hi, alpha=0.2, color="tab:green", label="predicted ball")
    ax.axvline(1.0, color="k", lw=0.8)
    ax.set_yticks([])
    ax.set_xlabel("eigenvalue")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_fourdvar(traces, path) -> None:
    """PCG residual histories per preconditioner, semilog."""
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for label, trace in traces.items():
        norms = list(trace.residual_norms)
        rel = [v / norms[0] if norms[0] > 0 else v for v in norms]
        ax.semilogy(range(len(rel)), rel, "-o", ms=3, label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative residual")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
