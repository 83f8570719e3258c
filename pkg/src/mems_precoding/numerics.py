"""Dense complex linear-algebra kernels with a shared rank tolerance.

Every rank decision in the package goes through :func:`numerical_rank` so that
subspace dimensions, DoF ranks and pseudoinverses agree with each other.
Returned orthonormal bases use a fixed phase convention: each column is
rotated so that its largest-magnitude entry is real and positive.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, DomainError, InvalidInputError

__all__ = [
    "TolerancePolicy",
    "DEFAULT_TOL",
    "as_matrix",
    "numerical_rank",
    "null_space_basis",
    "row_space_basis",
    "column_space_basis",
    "projector",
    "pseudoinverse",
    "hermitian_eig",
    "cholesky_factor",
    "fix_phase",
    "stacked_null_space",
    "complement_within",
    "is_orthonormal",
]


@dataclass(frozen=True)
class TolerancePolicy:
    """Thresholds shared by the decomposition and the iterative solvers.

    rank_rel_tol is relative: a singular value counts when it exceeds
    ``rank_rel_tol * sigma_max * max(m, n)``.
    """

    rank_rel_tol: float = 1e-10
    fp_tol: float = 1e-8
    sca_tol: float = 1e-6
    outer_tol: float = 1e-5

    def __post_init__(self):
        for name in ("rank_rel_tol", "fp_tol", "sca_tol", "outer_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be positive, got {value!r}")
        if self.rank_rel_tol >= 1:
            raise InvalidInputError("rank_rel_tol must be < 1")


DEFAULT_TOL = TolerancePolicy()


def as_matrix(M, name="matrix"):
    """Return ``M`` as a 2-D complex array, rejecting NaN/Inf entries."""
    A = np.asarray(M, dtype=complex)
    if A.ndim == 1:
        A = A.reshape(-1, 1)
    if A.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return A


def _rank_from_singular_values(s, shape, tol, scale=None):
    ref = s[0] if scale is None and s.size else scale
    if s.size == 0 or not ref:
        return 0
    threshold = tol.rank_rel_tol * ref * max(shape)
    return int(np.count_nonzero(s > threshold))


def numerical_rank(M, tol=DEFAULT_TOL, scale=None):
    """Count singular values above ``rank_rel_tol * ref * max(m, n)``.

    ``ref`` is the largest singular value of ``M`` unless ``scale`` is given.
    Products such as ``H @ F`` should pass ``scale = ||H|| ||F||``, otherwise
    a product that is zero up to rounding is judged relative to its own
    rounding noise.
    """
    A = as_matrix(M)
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    return _rank_from_singular_values(s, A.shape, tol, scale)


def fix_phase(B):
    """Rotate each column so its largest-magnitude entry is real positive."""
    B = np.array(B, dtype=complex, copy=True)
    if B.size == 0:
        return B
    idx = np.argmax(np.abs(B), axis=0)
    pivots = B[idx, np.arange(B.shape[1])]
    mags = np.abs(pivots)
    phases = np.ones_like(pivots)
    nz = mags > 0
    phases[nz] = pivots[nz].conj() / mags[nz]
    return B * phases[np.newaxis, :]


def _svd_split(A, tol):
    """Return (rank, V) where V holds all right singular vectors as columns."""
    m, n = A.shape
    if A.size == 0:
        return 0, np.eye(n, dtype=complex)
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    r = _rank_from_singular_values(s, A.shape, tol)
    return r, Vh.conj().T


def null_space_basis(M, tol=DEFAULT_TOL):
    """Orthonormal basis (n x k) of the right null space of ``M``; k may be 0."""
    A = as_matrix(M)
    r, V = _svd_split(A, tol)
    return fix_phase(V[:, r:])


def row_space_basis(M, tol=DEFAULT_TOL):
    """Orthonormal basis of the span of the conjugated rows of ``M``."""
    A = as_matrix(M)
    r, V = _svd_split(A, tol)
    return fix_phase(V[:, :r])


def column_space_basis(M, tol=DEFAULT_TOL):
    """Orthonormal basis of the column space of ``M`` (rank-thresholded)."""
    A = as_matrix(M)
    if A.size == 0:
        return np.zeros((A.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    r = _rank_from_singular_values(s, A.shape, tol)
    return fix_phase(U[:, :r])


def is_orthonormal(B, atol=1e-10):
    B = np.asarray(B)
    if B.shape[1] == 0:
        return True
    gram = B.conj().T @ B
    return bool(np.max(np.abs(gram - np.eye(B.shape[1]))) <= atol)


def projector(B):
    """Orthogonal projector ``B B^H`` onto the span of orthonormal columns ``B``."""
    B = as_matrix(B, "basis")
    if not is_orthonormal(B, 1e-10):
        raise ContractViolationError("projector() needs a basis with orthonormal columns")
    return B @ B.conj().T


def pseudoinverse(M, tol=DEFAULT_TOL):
    """Moore-Penrose pseudoinverse via SVD, thresholded like :func:`numerical_rank`."""
    A = as_matrix(M)
    if A.size == 0:
        return np.zeros((A.shape[1], A.shape[0]), dtype=complex)
    U, s, Vh = np.linalg.svd(A, full_matrices=False)
    r = _rank_from_singular_values(s, A.shape, tol)
    return (Vh[:r].conj().T / s[:r]) @ U[:, :r].conj().T


def _check_hermitian(A, atol=1e-10):
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.shape[0] != A.shape[1] or np.max(np.abs(A - A.conj().T), initial=0.0) > atol * scale:
        raise ContractViolationError("matrix is not Hermitian within tolerance")


def hermitian_eig(M):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
    eigenvectors : ndarray, shape (n, n)
        Unitary; column k pairs with ``eigenvalues[k]`` and follows the
        package phase convention.
    """
    A = as_matrix(M)
    _check_hermitian(A)
    lam, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    return lam[::-1].copy(), fix_phase(V[:, ::-1])


def cholesky_factor(M):
    """Upper-triangular ``L`` with ``L^H L = M`` for Hermitian positive-definite ``M``."""
    A = as_matrix(M)
    _check_hermitian(A)
    A = 0.5 * (A + A.conj().T)
    lam = np.linalg.eigvalsh(A)
    lam_max = lam[-1]
    if lam_max <= 0 or lam[0] <= 1e-12 * lam_max:
        raise DomainError(
            f"matrix is not positive definite (smallest eigenvalue {lam[0]:.3e})", value=float(lam[0])
        )
    return np.linalg.cholesky(A).conj().T


def stacked_null_space(blocks, n, tol=DEFAULT_TOL):
    """Orthonormal basis of the intersection of the null spaces of ``blocks``.

    Each block is scaled to unit spectral norm before stacking so that one
    badly scaled channel cannot mask the rank decisions of another.
    """
    rows = []
    for block in blocks:
        A = as_matrix(block)
        if A.shape[1] != n:
            raise InvalidInputError(f"block has {A.shape[1]} columns, expected {n}")
        if A.shape[0] == 0:
            continue
        norm = np.linalg.norm(A, 2)
        if norm > 0:
            rows.append(A / norm)
    if not rows:
        return np.eye(n, dtype=complex)
    return null_space_basis(np.vstack(rows), tol)


def complement_within(U, A, tol=DEFAULT_TOL):
    """Orthonormal basis of ``span(U) ∩ span(A)^⊥``.

    ``U`` must have orthonormal columns; ``A`` may be any basis (or empty).
    Solved as the null space of ``A^H U`` mapped back through ``U``.
    """
    U = np.asarray(U, dtype=complex)
    A = np.asarray(A, dtype=complex)
    if U.shape[1] == 0:
        return U.copy()
    if A.shape[1] == 0:
        return fix_phase(U)
    Aq = column_space_basis(A, tol)
    Y = null_space_basis(Aq.conj().T @ U, tol)
    return fix_phase(U @ Y)
