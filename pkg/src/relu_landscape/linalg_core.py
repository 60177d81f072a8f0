"""Moore-Penrose pseudoinverse and general least-squares solutions.

All routines threshold singular values relative to the largest one, so a
matrix whose singular values fall below ``rank_tol * sigma_max`` is treated as
rank deficient.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

DEFAULT_RANK_TOL = 1e-10
DEFAULT_SOLVE_TOL = 1e-9


def _as_matrix(M):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidInputError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix contains non-finite entries")
    return M


def _as_rhs(M, b):
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.shape[0] != M.shape[0]:
        raise InvalidInputError(
            f"right-hand side of shape {b.shape} does not conform to matrix {M.shape}"
        )
    if not np.all(np.isfinite(b)):
        raise InvalidInputError("right-hand side contains non-finite entries")
    return b


def _svd(M, rank_tol):
    if rank_tol <= 0:
        raise InvalidInputError("rank_tol must be positive")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        r = 0
    else:
        r = int(np.count_nonzero(s > rank_tol * s[0]))
    return U, s, Vt, r


def matrix_rank(M, rank_tol=DEFAULT_RANK_TOL):
    """Numerical rank with the relative singular-value cutoff."""
    M = _as_matrix(M)
    if M.size == 0:
        return 0
    return _svd(M, rank_tol)[3]


def pseudoinverse(M, rank_tol=DEFAULT_RANK_TOL):
    """Moore-Penrose inverse of ``M`` computed from its SVD.

    Parameters
    ----------
    M : array_like, shape (m, n)
    rank_tol : float
        Singular values below ``rank_tol * sigma_max`` are treated as zero.

    Returns
    -------
    ndarray, shape (n, m)
    """
    M = _as_matrix(M)
    m, n = M.shape
    if M.size == 0:
        return np.zeros((n, m))
    U, s, Vt, r = _svd(M, rank_tol)
    if r == 0:
        return np.zeros((n, m))
    return (Vt[:r].T / s[:r]) @ U[:, :r].T


@dataclass(frozen=True)
class AffineSolutionSet:
    """The set ``particular + projector @ c`` for arbitrary ``c``.

    ``projector`` is the orthogonal projector onto the null space of the
    originating matrix, and ``dim`` is its rank.
    """

    particular: np.ndarray
    projector: np.ndarray
    dim: int

    @property
    def size(self):
        return self.particular.shape[0]

    @property
    def is_unique(self):
        return self.dim == 0

    def member(self, c):
        c = np.asarray(c, dtype=float)
        return self.particular + self.projector @ c

    def null_basis(self):
        """Orthonormal basis (columns) of the free directions."""
        if self.dim == 0:
            return np.zeros((self.size, 0))
        w, V = np.linalg.eigh(self.projector)
        return V[:, np.argsort(w)[::-1][: self.dim]]


def general_least_squares(M, b, rank_tol=DEFAULT_RANK_TOL):
    """All minimizers of ``||M z - b||^2`` as an :class:`AffineSolutionSet`."""
    M = _as_matrix(M)
    b = _as_rhs(M, b)
    n = M.shape[1]
    if M.size == 0:
        return AffineSolutionSet(np.zeros(n), np.eye(n), n)
    U, s, Vt, r = _svd(M, rank_tol)
    Vr = Vt[:r]
    particular = Vr.T @ ((U[:, :r].T @ b) / s[:r])
    # I - M^+ M == I - V_r V_r^T; forming it this way keeps it symmetric.
    projector = np.eye(n) - Vr.T @ Vr
    return AffineSolutionSet(particular, projector, n - r)


def solvability_residual(M, b, rank_tol=DEFAULT_RANK_TOL):
    """``||M M^+ b - b||``; zero exactly when ``M z = b`` is consistent."""
    M = _as_matrix(M)
    b = _as_rhs(M, b)
    if M.size == 0:
        return float(np.linalg.norm(b))
    U, s, Vt, r = _svd(M, rank_tol)
    Ur = U[:, :r]
    return float(np.linalg.norm(Ur @ (Ur.T @ b) - b))


def is_solvable(M, b, tol=DEFAULT_SOLVE_TOL, rank_tol=DEFAULT_RANK_TOL):
    """True iff ``||M M^+ b - b|| <= tol * (1 + ||b||)``."""
    b_arr = np.asarray(b, dtype=float)
    res = solvability_residual(M, b_arr, rank_tol)
    return res <= tol * (1.0 + float(np.linalg.norm(b_arr)))
