"""Block assembly for the state formulation of weak-constraint 4D-Var.

The linearized problem over N_sw sub-windows couples per-window states
through the unit block-bidiagonal matrix

    L = [[ I            ],
         [-M_1   I      ],
         [      ...  ...],
         [     -M_Nsw  I]],

with block-diagonal covariances D = diag(B, Q_1, ..., Q_Nsw) and the
optional observation term H^T R^{-1} H. Approximating the model blocks
M_j by Mt_j (zero, identity, or custom) yields the approximation Lt used
in the preconditioner Lt^{-1} D Lt^{-T}. This module builds all of these
objects, the multiplicative error E = L Lt^{-1} - I in closed block form,
and the variant-specific norm bound rho used in the spectrum ball.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import theory
from .linalg import SpdMatrix, as_matrix, as_vector, spectral_norm, triangular_solve
from .theory import SpectrumBall, spectrum_radius

VARIANT_ZERO = "zero"
VARIANT_IDENTITY = "identity"
VARIANT_CUSTOM = "custom"
VARIANTS = (VARIANT_ZERO, VARIANT_IDENTITY, VARIANT_CUSTOM)


class UnsupportedVariant(Exception):
    """The requested bound only covers the zero and identity variants."""


class DimensionMismatch(Exception):
    """Block dimensions of the layout and covariances disagree."""


@dataclass(frozen=True)
class FourDVarLayout:
    """Dimensions, model blocks and the approximation variant.

    ``models`` holds the N_sw blocks M_1..M_Nsw (each n x n); for the
    custom variant ``approx`` holds the matching Mt_j blocks. N_sw = 0 is
    the single-window degenerate case with L = I_n.
    """

    n: int
    n_sw: int
    models: tuple
    variant: str = VARIANT_ZERO
    approx: tuple | None = None

    def __post_init__(self):
        if self.n < 1 or self.n_sw < 0:
            raise ValueError("need n >= 1 and n_sw >= 0")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        models = tuple(as_matrix(m) for m in self.models)
        if len(models) != self.n_sw:
            raise DimensionMismatch(f"expected {self.n_sw} model blocks")
        for m in models:
            if m.shape != (self.n, self.n):
                raise DimensionMismatch(f"model block shape {m.shape} != ({self.n}, {self.n})")
        object.__setattr__(self, "models", models)
        if self.variant == VARIANT_CUSTOM:
            if self.approx is None:
                raise ValueError("custom variant requires approx blocks")
            approx = tuple(as_matrix(m) for m in self.approx)
            if len(approx) != self.n_sw:
                raise DimensionMismatch(f"expected {self.n_sw} approx blocks")
            for m in approx:
                if m.shape != (self.n, self.n):
                    raise DimensionMismatch(f"approx block shape {m.shape} != ({self.n}, {self.n})")
            object.__setattr__(self, "approx", approx)
        elif self.approx is not None:
            raise ValueError("approx blocks only apply to the custom variant")

    @property
    def dim(self) -> int:
        """Total state dimension n * (N_sw + 1)."""
        return self.n * (self.n_sw + 1)

    def approx_blocks(self) -> tuple:
        """The Mt_j blocks implied by the variant."""
        if self.variant == VARIANT_ZERO:
            return tuple(np.zeros((self.n, self.n)) for _ in range(self.n_sw))
        if self.variant == VARIANT_IDENTITY:
            return tuple(np.eye(self.n) for _ in range(self.n_sw))
        return self.approx

    def with_variant(self, variant, approx=None) -> "FourDVarLayout":
        return FourDVarLayout(self.n, self.n_sw, self.models, variant, approx)


@dataclass(frozen=True)
class BlockCovariances:
    """Diagonal blocks of D (and optionally of R with observation operators H).

    ``d_blocks`` holds B, Q_1..Q_Nsw; when observations are present,
    ``r_blocks`` and ``h_blocks`` hold R_j and H_j (H_j of shape m_j x n)
    for j = 0..N_sw.
    """

    d_blocks: tuple
    r_blocks: tuple | None = None
    h_blocks: tuple | None = None

    def __post_init__(self):
        d = tuple(self.d_blocks)
        if not d:
            raise ValueError("need at least one covariance block")
        for blk in d:
            if not isinstance(blk, SpdMatrix):
                raise TypeError("d_blocks must be SpdMatrix instances")
        object.__setattr__(self, "d_blocks", d)
        if (self.r_blocks is None) != (self.h_blocks is None):
            raise ValueError("r_blocks and h_blocks must be given together")
        if self.r_blocks is not None:
            r = tuple(self.r_blocks)
            h = tuple(as_matrix(m) for m in self.h_blocks)
            if len(r) != len(d) or len(h) != len(d):
                raise DimensionMismatch("need one R_j and H_j per window")
            for rj, hj in zip(r, h):
                if not isinstance(rj, SpdMatrix):
                    raise TypeError("r_blocks must be SpdMatrix instances")
                if rj.size != hj.shape[0]:
                    raise DimensionMismatch("R_j size must match rows of H_j")
            object.__setattr__(self, "r_blocks", r)
            object.__setattr__(self, "h_blocks", h)

    @property
    def n_windows(self) -> int:
        return len(self.d_blocks)

    def has_observations(self) -> bool:
        return self.r_blocks is not None

    def condition(self) -> float:
        """kappa_2 of block-diagonal D from the union of block spectra."""
        lo = min(float(b.eigenvalues()[0]) for b in self.d_blocks)
        hi = max(float(b.eigenvalues()[-1]) for b in self.d_blocks)
        return hi / lo

    def assemble_d(self) -> np.ndarray:
        sizes = [b.size for b in self.d_blocks]
        dim = sum(sizes)
        d = np.zeros((dim, dim))
        off = 0
        for blk in self.d_blocks:
            d[off:off + blk.size, off:off + blk.size] = blk.mat
            off += blk.size
        return d


def identity_covariances(layout: FourDVarLayout) -> BlockCovariances:
    """D = I, the neutral covariance choice for demos and tests."""
    eye = SpdMatrix(np.eye(layout.n))
    return BlockCovariances(tuple(eye for _ in range(layout.n_sw + 1)))


def _assemble_bidiagonal(n, blocks) -> np.ndarray:
    dim = n * (len(blocks) + 1)
    out = np.eye(dim)
    for j, blk in enumerate(blocks):
        r = (j + 1) * n
        out[r:r + n, j * n:(j + 1) * n] = -blk
    return out


def assemble_L(layout: FourDVarLayout) -> np.ndarray:
    """Dense L: identity diagonal blocks, -M_j on the first sub-diagonal."""
    return _assemble_bidiagonal(layout.n, layout.models)


def assemble_Ltilde(layout: FourDVarLayout) -> np.ndarray:
    """Dense Lt built from the variant's Mt_j blocks."""
    return _assemble_bidiagonal(layout.n, layout.approx_blocks())


def _split(layout, v):
    return [v[j * layout.n:(j + 1) * layout.n] for j in range(layout.n_sw + 1)]


def apply_L(layout: FourDVarLayout, x, transposed=False) -> np.ndarray:
    """Blockwise product L @ x (or L^T @ x)."""
    parts = _split(layout, as_vector(x, layout.dim))
    out = [p.copy() for p in parts]
    if transposed:
        for j, m in enumerate(layout.models):
            out[j] -= m.T @ parts[j + 1]
    else:
        for j, m in enumerate(layout.models):
            out[j + 1] -= m @ parts[j]
    return np.concatenate(out)


def apply_Linv(layout: FourDVarLayout, rhs, transposed=False) -> np.ndarray:
    """Blockwise solve Lt @ y = rhs (or Lt^T @ y = rhs).

    Forward substitution across sub-windows: y_0 = r_0 and
    y_j = r_j + Mt_j y_{j-1}; the transposed solve runs backwards. Cost is
    O(N_sw * n^2), and the recursion is inherently sequential in j.
    """
    parts = _split(layout, as_vector(rhs, layout.dim))
    approx = layout.approx_blocks()
    out = [None] * (layout.n_sw + 1)
    if transposed:
        out[layout.n_sw] = parts[layout.n_sw].copy()
        for j in range(layout.n_sw - 1, -1, -1):
            out[j] = parts[j] + approx[j].T @ out[j + 1]
    else:
        out[0] = parts[0].copy()
        for j in range(1, layout.n_sw + 1):
            out[j] = parts[j] + approx[j - 1] @ out[j - 1]
    return np.concatenate(out)


def error_blocks(layout: FourDVarLayout) -> np.ndarray:
    """The error E = L Lt^{-1} - I in closed block form.

    E is strictly block-lower triangular with

        E[i, j] = (Mt_i - M_i) @ Mt_{i-1} @ ... @ Mt_{j+1}

    in zero-based block indices (empty product for j = i - 1). For the
    zero variant this leaves -M_j on the sub-diagonal only; for the
    identity variant every column below the diagonal holds I - M_i.
    """
    n = layout.n
    approx = layout.approx_blocks()
    e = np.zeros((layout.dim, layout.dim))
    for i in range(1, layout.n_sw + 1):
        blk = approx[i - 1] - layout.models[i - 1]
        for j in range(i - 1, -1, -1):
            e[i * n:(i + 1) * n, j * n:(j + 1) * n] = blk
            if j > 0:
                blk = blk @ approx[j - 1]
    return e


def rho_bound(layout: FourDVarLayout) -> float:
    """Variant-specific upper bound rho on ||E||_2.

    zero:     max_j sigma_max(M_j)
    identity: sqrt((n*N_sw + 1) * (n*N_sw + 2) / 2) * max_j sigma_max(I - M_j)
    """
    if layout.variant == VARIANT_ZERO:
        return max((spectral_norm(m) for m in layout.models), default=0.0)
    if layout.variant == VARIANT_IDENTITY:
        eye = np.eye(layout.n)
        worst = max((spectral_norm(eye - m) for m in layout.models), default=0.0)
        d = layout.n * layout.n_sw
        return float(np.sqrt((d + 1) * (d + 2) / 2.0)) * worst
    raise UnsupportedVariant("rho bound covers only the zero and identity variants")


@dataclass(frozen=True)
class FourDVarReport:
    """Spectrum of the preconditioned background term against both balls.

    The rho-based radius follows the variant bound (None for custom
    layouts); the error-norm radius uses the measured ||E||_2 and is never
    looser.
    """

    eigenvalues: np.ndarray
    error_norm: float
    kappa_d: float
    rho: float | None
    ball_rho: SpectrumBall | None
    ball_error: SpectrumBall
    contained_rho: bool | None
    contained_error: bool
    cond_measured: float


def background_spectrum_check(layout: FourDVarLayout, cov: BlockCovariances) -> FourDVarReport:
    """Measure sigma((Lt^{-1} D Lt^{-T}) (L^T D^{-1} L)) and test containment."""
    if cov.n_windows != layout.n_sw + 1 or any(b.size != layout.n for b in cov.d_blocks):
        raise DimensionMismatch("covariance blocks do not match the layout")
    d = SpdMatrix(cov.assemble_d())
    kappa_d = cov.condition()
    e = error_blocks(layout)
    e_norm = spectral_norm(e)
    eigs = theory._spectrum_from_factor(np.eye(layout.dim) + e, d)
    ball_error = SpectrumBall(radius=spectrum_radius(e_norm, kappa_d))
    if layout.variant in (VARIANT_ZERO, VARIANT_IDENTITY):
        rho = rho_bound(layout)
        ball_rho = SpectrumBall(radius=spectrum_radius(rho, kappa_d))
        contained_rho = bool(all(ball_rho.contains(lam) for lam in eigs))
    else:
        rho, ball_rho, contained_rho = None, None, None
    return FourDVarReport(
        eigenvalues=eigs,
        error_norm=e_norm,
        kappa_d=kappa_d,
        rho=rho,
        ball_rho=ball_rho,
        ball_error=ball_error,
        contained_rho=contained_rho,
        contained_error=bool(all(ball_error.contains(lam) for lam in eigs)),
        cond_measured=float(eigs[-1] / eigs[0]),
    )


def assemble_state_system(layout: FourDVarLayout, cov: BlockCovariances, b, d=None):
    """The state system (L^T D^{-1} L + H^T R^{-1} H, L^T D^{-1} b + H^T R^{-1} d).

    Without observations the system reduces to the background term
    L^T D^{-1} L with right-hand side L^T D^{-1} b.
    """
    if cov.n_windows != layout.n_sw + 1 or any(bk.size != layout.n for bk in cov.d_blocks):
        raise DimensionMismatch("covariance blocks do not match the layout")
    bv = as_vector(b, layout.dim)
    if (d is None) == cov.has_observations():
        raise DimensionMismatch("observation misfit d must accompany H/R blocks")
    lmat = assemble_L(layout)
    dmat = SpdMatrix(cov.assemble_d())
    z = triangular_solve(dmat.chol, lmat)  # R_D^{-1} L
    sys = z.T @ z
    rhs = lmat.T @ dmat.solve(bv)
    if cov.has_observations():
        obs_dim = sum(r.size for r in cov.r_blocks)
        dv = as_vector(d, obs_dim)
        off = 0
        for j, (rj, hj) in enumerate(zip(cov.r_blocks, cov.h_blocks)):
            if hj.shape[1] != layout.n:
                raise DimensionMismatch("H_j columns must match the state dimension")
            zj = triangular_solve(rj.chol, hj)  # R_j^{-1/2} H_j
            sl = slice(j * layout.n, (j + 1) * layout.n)
            sys[sl, sl] += zj.T @ zj
            rhs[sl] += hj.T @ rj.solve(dv[off:off + rj.size])
            off += rj.size
    return SpdMatrix(sys), rhs


def write_layout(path, layout: FourDVarLayout) -> None:
    """Write a layout file: "n n_sw variant" then the blocks in matrix format."""
    with open(path, "w") as fh:
        fh.write(f"{layout.n} {layout.n_sw} {layout.variant}\n")
        blocks = list(layout.models)
        if layout.variant == VARIANT_CUSTOM:
            blocks += list(layout.approx)
        for blk in blocks:
            fh.write(f"{blk.shape[0]} {blk.shape[1]}\n")
            for row in blk:
                fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_layout(path) -> FourDVarLayout:
    """Read a layout file written by :func:`write_layout`."""
    from .linalg import _parse_matrix_lines

    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty layout file")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError(f"{path}: header must be 'n n_sw variant'")
    try:
        n, n_sw = int(head[0]), int(head[1])
    except ValueError as exc:
        raise ValueError(f"{path}: non-integer dimensions in header") from exc
    variant = head[2]
    if variant not in VARIANTS:
        raise ValueError(f"{path}: unknown variant {variant!r}")
    count = n_sw * (2 if variant == VARIANT_CUSTOM else 1)
    rest = lines[1:]
    blocks = []
    for i in range(count):
        blk, rest = _parse_matrix_lines(rest, f"{path}: block {i}")
        blocks.append(blk)
    if rest:
        raise ValueError(f"{path}: trailing content after {count} blocks")
    if variant == VARIANT_CUSTOM:
        return FourDVarLayout(n, n_sw, tuple(blocks[:n_sw]), variant, tuple(blocks[n_sw:]))
    return FourDVarLayout(n, n_sw, tuple(blocks), variant)
