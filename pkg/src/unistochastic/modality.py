"""Modality sets and bistochastic transition-probability matrices."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, ValidationError

#: Default tolerance for row/column sums; looser than the unitarity tolerance
#: because matrices may come from finite samples or text files.
VALIDATION_TOL = 1e-9


@dataclass(frozen=True)
class ModalitySet:
    """``N`` mutually exclusive outcomes of one apparatus setting."""

    dimension: int
    labels: tuple = field(default=None)

    def __post_init__(self):
        if self.dimension < 1:
            raise DomainError("a modality set needs at least one modality")
        labels = self.labels
        if labels is None:
            labels = tuple(f"b_{i}" for i in range(self.dimension))
        labels = tuple(str(x) for x in labels)
        if len(labels) != self.dimension:
            raise DimensionError(f"{len(labels)} labels for dimension {self.dimension}")
        if len(set(labels)) != len(labels):
            raise ValidationError("labels", message="modality labels must be unique")
        object.__setattr__(self, "labels", labels)

    def primed(self) -> "ModalitySet":
        """Labels for the set reached after turning the knobs (``b_j'``)."""
        return ModalitySet(self.dimension, tuple(f"{x}'" for x in self.labels))


@dataclass(frozen=True, eq=False)
class ProbabilityMatrix:
    """Square matrix ``p[i, j]`` of transition probabilities ``b_i -> b_j'``.

    Construction only checks shape and finiteness; use
    :func:`validate_bistochastic` to enforce normalization.
    """

    p: np.ndarray
    source_labels: tuple | None = None
    target_labels: tuple | None = None

    def __post_init__(self):
        p = np.array(self.p, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 1:
            raise DimensionError(f"probability matrix must be square and non-empty, got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValidationError("finite", message="probability matrix has non-finite entries")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        for name in ("source_labels", "target_labels"):
            labels = getattr(self, name)
            if labels is not None:
                labels = tuple(str(x) for x in labels)
                if len(labels) != p.shape[0]:
                    raise DimensionError(f"{name} has {len(labels)} entries for n={p.shape[0]}")
                object.__setattr__(self, name, labels)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ProbabilityMatrix):
            return NotImplemented
        return (
            np.array_equal(self.p, other.p)
            and self.source_labels == other.source_labels
            and self.target_labels == other.target_labels
        )

    __hash__ = None

    def to_json(self) -> dict:
        doc = {"n": self.n, "p": [float(x) for x in self.p.ravel()]}
        if self.source_labels is not None:
            doc["source_labels"] = list(self.source_labels)
        if self.target_labels is not None:
            doc["target_labels"] = list(self.target_labels)
        return doc

    @classmethod
    def from_json(cls, doc) -> "ProbabilityMatrix":
        """Parse ``{"n": int, "p": [row-major floats], ...labels}``."""
        if not isinstance(doc, dict) or "n" not in doc or "p" not in doc:
            raise DimensionError('probability matrix JSON needs keys "n" and "p"')
        n = doc["n"]
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise DimensionError(f'"n" must be a positive integer, got {n!r}')
        values = doc["p"]
        if not isinstance(values, list) or len(values) != n * n:
            got = len(values) if isinstance(values, list) else type(values).__name__
            raise DimensionError(f'"p" must hold n*n = {n * n} numbers, got {got}')
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in values):
            raise DimensionError('"p" entries must be numbers')
        return cls(
            np.array(values, dtype=np.float64).reshape(n, n),
            source_labels=doc.get("source_labels"),
            target_labels=doc.get("target_labels"),
        )


def validate_bistochastic(p, tol: float = VALIDATION_TOL, source_labels=None,
                          target_labels=None) -> ProbabilityMatrix:
    """Check that ``p`` is bistochastic within ``tol`` and wrap it.

    Constraints are checked in a fixed order (entry >= 0, entry <= 1, row
    sums, column sums) and the first violation is raised.

    Raises
    ------
    ValidationError
        Carries the violated constraint, its index and the deficit.
    """
    if tol < 0:
        raise DomainError("tolerance must be nonnegative")
    if isinstance(p, ProbabilityMatrix):
        source_labels = source_labels if source_labels is not None else p.source_labels
        target_labels = target_labels if target_labels is not None else p.target_labels
        p = p.p
    a = np.asarray(p, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValidationError("shape", message=f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("finite", tuple(np.argwhere(~np.isfinite(a))[0]), np.nan)

    bad = np.argwhere(a < -tol)
    if bad.size:
        i, j = bad[0]
        raise ValidationError("negative", (i, j), a[i, j])
    bad = np.argwhere(a > 1.0 + tol)
    if bad.size:
        i, j = bad[0]
        raise ValidationError("above_one", (i, j), a[i, j])
    rows = a.sum(axis=1) - 1.0
    bad = np.flatnonzero(np.abs(rows) > tol)
    if bad.size:
        i = bad[0]
        raise ValidationError("row_sum", (i,), rows[i],
                              f"row {i} sums to {rows[i] + 1.0:.17g}")
    cols = a.sum(axis=0) - 1.0
    bad = np.flatnonzero(np.abs(cols) > tol)
    if bad.size:
        j = bad[0]
        raise ValidationError("column_sum", (j,), cols[j],
                              f"column {j} sums to {cols[j] + 1.0:.17g}")
    return ProbabilityMatrix(a, source_labels=source_labels, target_labels=target_labels)


def independent_parameter_count(n: int) -> int:
    """Free parameters of an ``n x n`` bistochastic matrix: ``(n - 1)**2``."""
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n}")
    return (n - 1) ** 2


def normalization_constraints(n: int) -> np.ndarray:
    """The ``2n x n^2`` matrix of row-sum then column-sum constraints on ``vec(p)``."""
    if n < 1:
        raise DomainError(f"dimension must be >= 1, got {n}")
    c = np.zeros((2 * n, n * n))
    for i in range(n):
        c[i, i * n:(i + 1) * n] = 1.0
        c[n + i, i::n] = 1.0
    return c


def normalization_constraint_rank(n: int) -> int:
    return int(np.linalg.matrix_rank(normalization_constraints(n)))


def permutation_matrix(perm) -> np.ndarray:
    n = len(perm)
    m = np.zeros((n, n))
    m[np.arange(n), list(perm)] = 1.0
    return m


def birkhoff_sample(n: int, rng: np.random.Generator, n_perms: int | None = None) -> np.ndarray:
    """Random bistochastic matrix: Dirichlet(1)-weighted mix of permutation matrices.

    With ``n_perms=None`` all ``n!`` permutations are mixed when ``n! <= 24``;
    otherwise ``(n - 1)**2 + 1`` permutations are drawn uniformly.
    """
    if n_perms is None and math.factorial(n) <= 24:
        perms = list(itertools.permutations(range(n)))
    else:
        k = n_perms if n_perms is not None else (n - 1) ** 2 + 1
        perms = [rng.permutation(n) for _ in range(k)]
    w = rng.dirichlet(np.ones(len(perms)))
    out = np.zeros((n, n))
    for wk, perm in zip(w, perms):
        out[np.arange(n), list(perm)] += wk
    return out
