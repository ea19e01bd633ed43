"""SVD-based dense linear algebra used throughout the package.

All rank decisions go through one SVD with a cutoff relative to the largest
singular value, so ``pinv``, ``proj_onto_row_space`` and ``numerical_rank``
always agree on what the row space of a matrix is.
"""
import numpy as np

from .errors import InvalidInputError, NotPSDError

DEFAULT_TOL = 1e-10


def as_matrix(m):
    """Return ``m`` as a finite 2-D float array, raising on NaN/Inf."""
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise InvalidInputError(f"expected a matrix, got array of shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix has non-finite entries")
    return m


def _svd(m, tol):
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        r = 0
    else:
        r = int(np.count_nonzero(s > tol * s[0]))
    return u[:, :r], s[:r], vt[:r]


def pinv(m, tol=DEFAULT_TOL):
    """Moore-Penrose pseudo-inverse.

    Singular values below ``tol * sigma_max`` are treated as exact zeros.
    """
    m = as_matrix(m)
    u, s, vt = _svd(m, tol)
    return (vt.T / s) @ u.T


def proj_onto_row_space(m, tol=DEFAULT_TOL):
    """Orthogonal projector ``M^+ M`` onto the row space of ``m`` (cols x cols)."""
    m = as_matrix(m)
    _, _, vt = _svd(m, tol)
    return vt.T @ vt


def numerical_rank(m, tol=DEFAULT_TOL):
    """Number of singular values above ``tol * sigma_max``."""
    m = as_matrix(m)
    return _svd(m, tol)[1].size


def symmetrize(m):
    return 0.5 * (m + m.T)


def psd_eigh(m, tol=1e-8):
    """Eigen-decomposition of a symmetric PSD matrix.

    Eigenvalues within ``tol * max(|lambda|)`` of zero are set to exactly
    zero; NotPSDError is raised when one is below ``-tol * max(|lambda|)``.
    """
    m = symmetrize(as_matrix(m))
    if m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got {m.shape}")
    w, v = np.linalg.eigh(m)
    scale = np.max(np.abs(w)) if w.size else 0.0
    if w.size and w[0] < -tol * scale:
        raise NotPSDError(f"eigenvalue {w[0]:.3e} below tolerance (scale {scale:.3e})")
    return np.where(w > tol * scale, w, 0.0), v


def sqrtm_psd(m, tol=1e-8):
    """Symmetric PSD square root of a symmetric PSD matrix."""
    w, v = psd_eigh(m, tol)
    return symmetrize((v * np.sqrt(w)) @ v.T)


def is_psd(m, tol=1e-8):
    try:
        psd_eigh(m, tol)
    except NotPSDError:
        return False
    return True
