"""Dense complex matrix helpers: projectors, unitarity, and the trace formula.

Matrices are plain ``numpy`` arrays (``complex128`` for complex data). Every
function here is pure and never mutates its input.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, DimensionError, ValidationError
from .modality import ProbabilityMatrix, validate_bistochastic

#: Default Frobenius-norm threshold below which a matrix counts as unitary.
UNITARY_TOL = 1e-10


def as_complex_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite 2-D ``complex128`` array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionError("matrix has non-finite entries")
    return a


def _square(m) -> np.ndarray:
    a = as_complex_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Projector:
    """Rank-one orthogonal projector onto basis vector ``index`` of ``C^dimension``."""

    dimension: int
    index: int

    def __post_init__(self):
        if self.dimension < 1:
            raise DimensionError("projector dimension must be positive")
        if not 0 <= self.index < self.dimension:
            raise BoundsError(f"index {self.index} outside [0, {self.dimension})")

    def matrix(self) -> np.ndarray:
        p = np.zeros((self.dimension, self.dimension), dtype=np.complex128)
        p[self.index, self.index] = 1.0
        return p


def unitarity_residual(m) -> float:
    """Frobenius norm of ``m^dagger m - I``; zero iff ``m`` is unitary."""
    a = _square(m)
    gram = a.conj().T @ a
    gram[np.diag_indices_from(gram)] -= 1.0
    return float(np.linalg.norm(gram))


def is_unitary(m, tol: float = UNITARY_TOL) -> bool:
    return unitarity_residual(m) < tol


def _check_index(n, i, j):
    for k in (i, j):
        if not 0 <= k < n:
            raise BoundsError(f"index {k} outside [0, {n})")


def extract_probability(sigma_tilde, i: int, j: int) -> float:
    """Probability of outcome ``j`` given preparation ``i``.

    Evaluates ``Trace(P_i S P_j S^dagger)`` literally with materialized
    projectors. The result equals ``|S[i, j]|**2``; see
    :func:`extract_probability_fast` for the shortcut.
    """
    s = _square(sigma_tilde)
    n = s.shape[0]
    _check_index(n, i, j)
    pi = Projector(n, i).matrix()
    pj = Projector(n, j).matrix()
    return float(np.trace(pi @ s @ pj @ s.conj().T).real)


def extract_probability_fast(sigma_tilde, i: int, j: int) -> float:
    s = _square(sigma_tilde)
    _check_index(s.shape[0], i, j)
    z = s[i, j]
    return float(z.real * z.real + z.imag * z.imag)


def transition_probability_matrix(sigma_tilde, labels=None) -> ProbabilityMatrix:
    """Entrywise ``|S[i, j]|**2`` packed as a :class:`ProbabilityMatrix`.

    No bistochastic validation is applied; a non-unitary ``sigma_tilde``
    yields a matrix whose sums may differ from one.
    """
    s = _square(sigma_tilde)
    p = s.real * s.real + s.imag * s.imag
    if labels is None:
        return ProbabilityMatrix(p)
    return ProbabilityMatrix(p, source_labels=labels, target_labels=labels)


def transported_projector(sigma, j: int, tol: float = 1e-9) -> np.ndarray:
    """Return ``Sigma P_j Sigma^T`` for the real square-root matrix ``Sigma``.

    The result is idempotent with unit trace whenever column ``j`` of
    ``Sigma`` has unit norm, but different ``j`` generally give
    non-orthogonal projectors.

    Raises
    ------
    ValidationError
        If the squared entries of ``sigma`` are not bistochastic within ``tol``.
    """
    s = np.asarray(sigma, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionError(f"expected a square real matrix, got shape {s.shape}")
    if np.any(s < 0):
        raise ValidationError("negative", np.argwhere(s < 0)[0], s[s < 0][0],
                              "square-root matrix has negative entries")
    validate_bistochastic(s * s, tol=tol)
    _check_index(s.shape[0], j, j)
    pj = Projector(s.shape[0], j).matrix()
    return s @ pj @ s.T


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw an ``n x n`` unitary from the Haar measure.

    QR of a complex Ginibre matrix with the phases of ``diag(R)`` folded into
    ``Q`` so the distribution is exactly Haar.
    """
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))
