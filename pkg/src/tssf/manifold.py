"""Primitives on the manifold of symmetric positive definite matrices.

Everything here operates on plain float ndarrays: an SPD matrix is a dense
symmetric C x C array with strictly positive eigenvalues, a tangent element
is a symmetric (possibly indefinite) C x C array, and a tangent vector is
the sqrt(2)-weighted half-vectorization of a tangent element. All functions
are pure and safe to call concurrently.

Matrix functions (``logm``/``expm``/``powm``) share the single
:func:`sym_eig` implementation so they are mutually consistent.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    ConvergenceFailure,
    DimMismatch,
    InvalidInput,
    NotPositiveDefinite,
)

SYM_RTOL = 1e-12
SPD_TOL = 1e-10


def _check_square(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {a.shape}")
    return a


def _check_symmetric(a, name="matrix"):
    a = _check_square(a, name)
    if not np.all(np.abs(a - a.T) <= SYM_RTOL * np.maximum(1.0, np.abs(a))):
        raise InvalidInput(f"{name} is not symmetric within {SYM_RTOL:g}")
    return a


def _check_same_dim(a, b):
    if a.shape != b.shape:
        raise DimMismatch(f"dimension mismatch: {a.shape} vs {b.shape}")


def sym_eig(a):
    """Eigendecomposition of a symmetric matrix with fixed conventions.

    Parameters
    ----------
    a : ndarray, shape (C, C)
        Symmetric matrix.

    Returns
    -------
    eigenvalues : ndarray, shape (C,)
        Sorted in descending order (ties keep LAPACK's original order).
    eigenvectors : ndarray, shape (C, C)
        Orthonormal columns matching ``eigenvalues``; the sign of each
        column is fixed so its largest-magnitude entry is positive.
    """
    a = _check_symmetric(a)
    w, v = np.linalg.eigh(a)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]
    # sign convention: largest-magnitude entry of each column positive
    picks = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[picks, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return w, v * signs


def _spd_eig(a, spd_tol=SPD_TOL, name="matrix"):
    w, v = sym_eig(a)
    if w[0] <= 0 or w[-1] <= spd_tol * w[0]:
        raise NotPositiveDefinite(
            f"{name} is not positive definite: eigenvalue range "
            f"[{w[-1]:.3e}, {w[0]:.3e}] fails tolerance {spd_tol:g}"
        )
    return w, v


def ensure_spd(a, spd_tol=SPD_TOL, jitter=0.0, name="matrix"):
    """Validate that ``a`` is SPD, optionally after adding ``jitter * I``.

    Inputs failing the check are rejected, never silently regularized;
    callers that want regularization must request it via ``jitter``.
    Returns the (possibly jittered) matrix.
    """
    a = _check_symmetric(a, name)
    if jitter:
        a = a + jitter * np.eye(a.shape[0])
    _spd_eig(a, spd_tol, name)
    return a


def logm(a, spd_tol=SPD_TOL):
    """Matrix logarithm of an SPD matrix (eigenvalue route)."""
    w, v = _spd_eig(a, spd_tol)
    return (v * np.log(w)) @ v.T


def expm(s):
    """Matrix exponential of a symmetric matrix; the result is SPD."""
    w, v = sym_eig(s)
    return (v * np.exp(w)) @ v.T


def powm(a, p, spd_tol=SPD_TOL):
    """Real matrix power ``a ** p`` of an SPD matrix, ``p != 0``."""
    if p == 0:
        raise InvalidInput("power p must be nonzero")
    w, v = _spd_eig(a, spd_tol)
    return (v * w**p) @ v.T


def airm_distance(a, b, spd_tol=SPD_TOL):
    """Affine-invariant Riemannian distance between two SPD matrices.

    Computed as ``|| log eig(a^{-1/2} b a^{-1/2}) ||_2`` via the
    generalized eigenvalues of ``(b, a)``. Symmetric in its arguments and
    invariant under congruence by any invertible matrix.
    """
    a = _check_symmetric(a, "a")
    b = _check_symmetric(b, "b")
    _check_same_dim(a, b)
    try:
        w = scipy.linalg.eigh(b, a, eigvals_only=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"first argument is not SPD: {exc}") from exc
    if w[0] <= 0 or w[0] <= spd_tol * w[-1]:
        raise NotPositiveDefinite("second argument is not SPD")
    return float(np.linalg.norm(np.log(w)))


@dataclass(frozen=True)
class FrechetConfig:
    """Stopping rule for the Frechet-mean fixed-point iteration."""

    max_iterations: int = 50
    tolerance: float = 1e-10


def frechet_mean(points, cfg=None):
    """Frechet (Karcher) mean of SPD matrices under the affine-invariant metric.

    Fixed-point iteration with unit step, initialized at the arithmetic
    mean: ``m <- Expm_m(mean_t Logm_m(points[t]))``. Converged when the
    Frobenius norm of the mean tangent at ``m`` drops below
    ``cfg.tolerance``.

    Parameters
    ----------
    points : sequence of ndarray, each (C, C)
        SPD matrices.
    cfg : FrechetConfig, optional

    Returns
    -------
    ndarray, shape (C, C)
        The mean; its fixed-point residual is below ``cfg.tolerance``.

    Raises
    ------
    ConvergenceFailure
        If the residual is still above tolerance after
        ``cfg.max_iterations`` updates (the exception carries it).
    """
    cfg = cfg or FrechetConfig()
    if cfg.max_iterations < 1 or cfg.tolerance <= 0:
        raise InvalidInput("max_iterations must be >= 1 and tolerance > 0")
    pts = [np.asarray(p, dtype=float) for p in points]
    if not pts:
        raise InvalidInput("need at least one matrix")
    for p in pts:
        _check_symmetric(p, "point")
        _check_same_dim(p, pts[0])
    pts = np.asarray(pts)

    mean = pts.mean(axis=0)
    residual = np.inf
    for _ in range(cfg.max_iterations):
        half, inv_half = _half_powers(mean)
        log_mean = _whitened_log_mean(pts, inv_half)
        residual = np.linalg.norm(half @ log_mean @ half)
        if residual < cfg.tolerance:
            return mean
        mean = half @ expm(log_mean) @ half
    half, inv_half = _half_powers(mean)
    residual = np.linalg.norm(half @ _whitened_log_mean(pts, inv_half) @ half)
    if residual < cfg.tolerance:
        return mean
    raise ConvergenceFailure(
        f"Frechet mean did not converge in {cfg.max_iterations} iterations "
        f"(residual {residual:.3e} > {cfg.tolerance:g})",
        residual=residual,
    )


def _half_powers(a):
    w, v = _spd_eig(a)
    sq = np.sqrt(w)
    return (v * sq) @ v.T, (v / sq) @ v.T


def _whitened_log_mean(pts, inv_half):
    acc = np.zeros_like(pts[0])
    for p in pts:
        m = inv_half @ p @ inv_half
        acc += logm(0.5 * (m + m.T))
    return acc / len(pts)


def log_map_at(ref, x):
    """Logarithmic map of SPD ``x`` at reference point ``ref``.

    Returns the symmetric tangent element
    ``ref^{1/2} logm(ref^{-1/2} x ref^{-1/2}) ref^{1/2}``.
    """
    ref = _check_symmetric(ref, "ref")
    x = _check_symmetric(x, "x")
    _check_same_dim(ref, x)
    half, inv_half = _half_powers(ref)
    m = inv_half @ x @ inv_half
    return half @ logm(0.5 * (m + m.T)) @ half


def exp_map_at(ref, s):
    """Exponential map of tangent element ``s`` at reference point ``ref``."""
    ref = _check_symmetric(ref, "ref")
    s = _check_symmetric(s, "s")
    _check_same_dim(ref, s)
    half, inv_half = _half_powers(ref)
    m = inv_half @ s @ inv_half
    return half @ expm(0.5 * (m + m.T)) @ half


def vec_dim(c):
    """Length of the half-vectorization of a C x C symmetric matrix."""
    return c * (c + 1) // 2


def _tril(c):
    return np.tril_indices(c)


def vec(s):
    """Half-vectorize a symmetric matrix, off-diagonals scaled by sqrt(2).

    Entries are taken row-major over the lower triangle:
    (0,0), (1,0), (1,1), (2,0), ... The scaling makes the Euclidean dot
    product of two vectorizations equal the trace inner product of the
    matrices.
    """
    s = _check_symmetric(s)
    c = s.shape[0]
    rows, cols = _tril(c)
    weights = np.where(rows == cols, 1.0, np.sqrt(2.0))
    return s[rows, cols] * weights


def unvec(v):
    """Inverse of :func:`vec`; exact to one unit in the last place.

    (Scaling off-diagonals by sqrt(2) and back is not always bit-exact
    in binary floating point.)
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise InvalidInput("tangent vector must be 1-D")
    c = int((np.sqrt(8 * v.size + 1) - 1) / 2)
    if vec_dim(c) != v.size:
        raise InvalidInput(f"length {v.size} is not of the form C(C+1)/2")
    rows, cols = _tril(c)
    weights = np.where(rows == cols, 1.0, np.sqrt(2.0))
    s = np.zeros((c, c))
    s[rows, cols] = v / weights
    s[cols, rows] = s[rows, cols]
    return s


def inner_product_at(ref, s1, s2):
    """Inner product of two tangent elements in the metric at ``ref``.

    ``Tr(ref^{-1/2} s1 ref^{-1/2} . ref^{-1/2} s2 ref^{-1/2})`` -- a
    symmetric bilinear form, positive definite in ``s1 = s2``.
    """
    ref = _check_symmetric(ref, "ref")
    s1 = _check_symmetric(s1, "s1")
    s2 = _check_symmetric(s2, "s2")
    _check_same_dim(ref, s1)
    _check_same_dim(s1, s2)
    _, inv_half = _half_powers(ref)
    w1 = inv_half @ s1 @ inv_half
    w2 = inv_half @ s2 @ inv_half
    return float(np.sum(w1 * w2))


@dataclass(frozen=True)
class GedResult:
    """Solution of the generalized eigenproblem ``a F = b F diag(d)``.

    ``eigenvectors`` (columns of F) satisfy ``F.T @ b @ F = I`` and
    ``F.T @ a @ F = diag(eigenvalues)``; eigenvalues are sorted
    descending. Eigenvalues are positive exactly when ``a`` is SPD.
    """

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray


def ged(a, b, spd_tol=SPD_TOL):
    """Generalized eigendecomposition of ``(a, b)`` by whitening with ``b``.

    Parameters
    ----------
    a : ndarray, shape (C, C)
        Symmetric; may be indefinite.
    b : ndarray, shape (C, C)
        SPD.

    Returns
    -------
    GedResult
        ``eigenvectors = b^{-1/2} V`` and eigenvalues from
        ``sym_eig(b^{-1/2} a b^{-1/2})``, so the result is deterministic
        (descending eigenvalues, sign convention of :func:`sym_eig`).
    """
    a = _check_symmetric(a, "a")
    b = _check_symmetric(b, "b")
    _check_same_dim(a, b)
    _, inv_half = _half_powers(b)
    m = inv_half @ a @ inv_half
    w, v = sym_eig(0.5 * (m + m.T))
    return GedResult(eigenvectors=inv_half @ v, eigenvalues=w)


def subspace_angle_by_cluster(f1, f2, eigenvalues, rel_gap=1e-6):
    """Largest principal angle between matched eigenvector sets.

    Columns of ``f1`` and ``f2`` must be ordered consistently with
    ``eigenvalues``. Nearby eigenvalues (relative gap below ``rel_gap``)
    are grouped into one cluster, and the angle is computed between the
    subspaces each cluster spans, which is the comparison that stays
    well-posed when eigenvalues are degenerate.
    """
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    if f1.shape != f2.shape or f1.shape[1] != eigenvalues.size:
        raise DimMismatch("eigenvector sets and eigenvalues must align")
    worst = 0.0
    start = 0
    for stop in range(1, eigenvalues.size + 1):
        boundary = stop == eigenvalues.size or (
            abs(eigenvalues[stop] - eigenvalues[stop - 1])
            > rel_gap * max(1.0, abs(eigenvalues[stop - 1]))
        )
        if boundary:
            angles = scipy.linalg.subspace_angles(f1[:, start:stop], f2[:, start:stop])
            if angles.size:
                worst = max(worst, float(angles.max()))
            start = stop
    return worst
