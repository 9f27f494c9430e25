"""Dense linear algebra kernels: factorizations, eigensolvers, norms, solves.

All routines operate on plain numpy arrays at desk scale (dimensions up to
a few hundred). Matrices are dense, real and treated as immutable.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular as _scipy_solve_triangular

#: Default hybrid comparison tolerances: |x - y| <= ATOL + RTOL * |y|.
ATOL = 1e-12
RTOL = 1e-9

#: Relative pivot threshold below which a Cholesky factorization is rejected.
CHOL_PIVOT_RTOL = 1e-12

#: Absolute threshold below which a triangular diagonal counts as singular.
TRIANGULAR_DIAG_MIN = 1e-300


class LinalgError(Exception):
    """Base class for numerical failures raised by this module."""


class NotPositiveDefinite(LinalgError):
    """A Cholesky pivot fell below the positive-definiteness threshold."""


class NoConvergence(LinalgError):
    """The symmetric eigensolver failed to converge."""


class SingularTriangular(LinalgError):
    """A triangular solve hit a (near-)zero diagonal entry."""


def close(x, y, atol=ATOL, rtol=RTOL):
    """Hybrid absolute/relative scalar comparison."""
    return abs(x - y) <= atol + rtol * abs(y)


def as_matrix(values) -> np.ndarray:
    """Validate and return a 2-D float array with finite entries."""
    m = np.array(values, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite (no NaN/Inf)")
    return m


def as_vector(values, dim=None) -> np.ndarray:
    """Validate and return a 1-D float vector, optionally of a fixed length."""
    v = np.array(values, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D array, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise ValueError("vector entries must be finite (no NaN/Inf)")
    if dim is not None and v.size != dim:
        raise ValueError(f"expected length {dim}, got {v.size}")
    return v


def cholesky(m) -> np.ndarray:
    """Lower-triangular G with G @ G.T == m.

    Raises NotPositiveDefinite when any pivot is <= CHOL_PIVOT_RTOL times
    the largest diagonal entry of ``m``.
    """
    a = as_matrix(m)
    n, nc = a.shape
    if n != nc:
        raise ValueError("cholesky requires a square matrix")
    threshold = CHOL_PIVOT_RTOL * max(float(np.max(np.diag(a))), 0.0)
    g = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - g[j, :j] @ g[j, :j]
        if pivot <= threshold:
            raise NotPositiveDefinite(
                f"pivot {pivot:.3e} at column {j} below threshold {threshold:.3e}"
            )
        g[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            g[j + 1:, j] = (a[j + 1:, j] - g[j + 1:, :j] @ g[j, :j]) / g[j, j]
    return g


def sym_eigen(m, vectors=False):
    """Eigenvalues (ascending) of a symmetric matrix, optionally with vectors.

    The input is symmetrized before the solve so that products carrying a
    little asymmetric rounding are accepted.
    """
    a = as_matrix(m)
    a = 0.5 * (a + a.T)
    try:
        if vectors:
            w, v = np.linalg.eigh(a)
            return w, v
        return np.linalg.eigvalsh(a)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc


def spectral_norm(m) -> float:
    """Largest singular value, via the top eigenvalue of m.T @ m."""
    a = as_matrix(m)
    w = sym_eigen(a.T @ a)
    return float(np.sqrt(max(w[-1], 0.0)))


def triangular_solve(l, b, transposed=False):
    """Solve l @ x = b (or l.T @ x = b) for lower-triangular l.

    ``b`` may be a vector or a matrix of stacked right-hand sides.
    """
    lo = as_matrix(l)
    if np.min(np.abs(np.diag(lo))) < TRIANGULAR_DIAG_MIN:
        raise SingularTriangular("triangular factor has a (near-)zero diagonal")
    return _scipy_solve_triangular(lo, np.asarray(b, dtype=float),
                                   lower=True, trans=1 if transposed else 0)


class SpdMatrix:
    """A symmetric positive-definite matrix with its cached Cholesky factor.

    The constructor symmetrizes via (X + X^T)/2, rejects inputs whose
    asymmetry exceeds ``sym_rtol`` relative Frobenius norm, and factorizes
    immediately so SPD failures surface at construction time.
    """

    def __init__(self, mat, sym_rtol=1e-12):
        m = as_matrix(mat)
        if m.shape[0] != m.shape[1]:
            raise ValueError("SpdMatrix requires a square matrix")
        scale = np.linalg.norm(m)
        if scale > 0 and np.linalg.norm(m - m.T) > sym_rtol * scale:
            raise ValueError("matrix is not symmetric within tolerance")
        self.mat = 0.5 * (m + m.T)
        self.mat.setflags(write=False)
        self.chol = cholesky(self.mat)
        self.chol.setflags(write=False)
        self._eigs = None

    @property
    def size(self) -> int:
        return self.mat.shape[0]

    def eigenvalues(self) -> np.ndarray:
        if self._eigs is None:
            self._eigs = sym_eigen(self.mat)
        return self._eigs

    def solve(self, b):
        """Apply the inverse through two triangular solves."""
        y = triangular_solve(self.chol, b)
        return triangular_solve(self.chol, y, transposed=True)

    def condition(self) -> float:
        w = self.eigenvalues()
        return float(w[-1] / w[0])

    def __repr__(self):
        return f"SpdMatrix(size={self.size})"


def spd_condition(m: SpdMatrix) -> float:
    """Euclidean condition number lambda_max / lambda_min of an SPD matrix."""
    return m.condition()


def generalized_eigs(n: SpdMatrix, p: SpdMatrix) -> np.ndarray:
    """Ascending eigenvalues of p^{-1} @ n for an SPD pair.

    Whitening route: with p = G G^T the spectrum equals that of the
    symmetric matrix G^{-1} n G^{-T}.
    """
    if n.size != p.size:
        raise ValueError("generalized_eigs requires same-size matrices")
    y = triangular_solve(p.chol, n.mat)
    c = triangular_solve(p.chol, y.T)
    return sym_eigen(c)


def write_matrix(path, m) -> None:
    """Write a matrix in the plain-text exchange format.

    First line is "rows cols"; each following line holds one row with
    entries rendered to 17 significant digits (full double round-trip).
    """
    a = as_matrix(m)
    with open(path, "w") as fh:
        fh.write(f"{a.shape[0]} {a.shape[1]}\n")
        for row in a:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def _parse_matrix_lines(lines, where):
    try:
        rows, cols = (int(tok) for tok in lines[0].split())
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{where}: malformed header line") from exc
    if rows < 1 or cols < 1 or len(lines) < rows + 1:
        raise ValueError(f"{where}: truncated matrix ({rows}x{cols} declared)")
    data = []
    for i in range(rows):
        entries = lines[1 + i].split()
        if len(entries) != cols:
            raise ValueError(f"{where}: row {i} has {len(entries)} entries, expected {cols}")
        try:
            data.append([float(tok) for tok in entries])
        except ValueError as exc:
            raise ValueError(f"{where}: non-numeric entry in row {i}") from exc
    return as_matrix(data), lines[rows + 1:]


def read_matrix(path) -> np.ndarray:
    """Read a matrix written by :func:`write_matrix`."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    m, rest = _parse_matrix_lines(lines, str(path))
    if rest:
        raise ValueError(f"{path}: trailing content after matrix body")
    return m
