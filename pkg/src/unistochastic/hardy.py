"""Counting relations between the number of exclusive modalities N and the
number K of probabilities fixing a state, plus a K = N^2 tomography example.

Classical theories need ``K = N``, quantum ones ``K = N^2``. Both obey
``N = N_A N_B`` and ``K = K_A K_B`` for composite systems, so any consistent
capacity function is a power ``K = N^r``. The tomography part builds N^2
rank-one projectors whose outcome probabilities determine any density matrix.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, ReconstructionError, SupportError
from .linalg_core import haar_unitary

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10


class TheoryKind(str, enum.Enum):
    CLASSICAL = "classical"
    QUANTUM = "quantum"


def _dim(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


def capacity(kind, n: int) -> int:
    """Number of probabilities needed to fix a state: ``n`` or ``n**2``."""
    n = _dim(n)
    kind = TheoryKind(kind)
    return n if kind is TheoryKind.CLASSICAL else n * n


def composite_counts(na: int, nb: int, kind) -> tuple:
    """``(N, K)`` of the composite of systems with ``na`` and ``nb`` modalities.

    Raises
    ------
    AssertionError
        If ``K_A K_B`` differs from ``capacity(kind, na * nb)``; cannot
        happen for the two built-in kinds.
    """
    na, nb = _dim(na), _dim(nb)
    n = na * nb
    k = capacity(kind, na) * capacity(kind, nb)
    if k != capacity(kind, n):
        raise AssertionError(f"K(N_A N_B) != K(N_A) K(N_B) for {kind}, {na}, {nb}")
    return n, k


@dataclass(frozen=True)
class PowerFit:
    """Result of :func:`infer_power`: ``r`` on success, else the first bad pair."""

    r: int | None
    violation: tuple | None = None

    @property
    def ok(self) -> bool:
        return self.r is not None


def _exact_log(n: int, k: int):
    r, v = 0, 1
    while v < k:
        v *= n
        r += 1
    return r if v == k else None


def infer_power(ns, ks) -> PowerFit:
    """Find the integer ``r`` with ``k == n**r`` for every pair, using exact integers."""
    ns, ks = list(ns), list(ks)
    if len(ns) != len(ks) or not ns:
        raise DimensionError("ns and ks must be non-empty and of equal length")
    r = None
    for n, k in zip(ns, ks):
        if int(n) != n or n < 2 or int(k) != k or k < 1:
            raise DomainError(f"need integer n >= 2 and k >= 1, got ({n}, {k})")
        n, k = int(n), int(k)
        if r is None:
            r = _exact_log(n, k)
            if r is None:
                return PowerFit(None, (n, k))
        elif n ** r != k:
            return PowerFit(None, (n, k))
    return PowerFit(r)


def hermitian_basis(n: int) -> list:
    """The ``n**2`` real-independent Hermitian matrices E_ii, X_ij, Y_ij (i < j)."""
    n = _dim(n)
    out = []
    for i in range(n):
        e = np.zeros((n, n), dtype=np.complex128)
        e[i, i] = 1
        out.append(e)
    for i in range(n):
        for j in range(i + 1, n):
            x = np.zeros((n, n), dtype=np.complex128)
            x[i, j] = x[j, i] = 1
            y = np.zeros((n, n), dtype=np.complex128)
            y[i, j], y[j, i] = -1j, 1j
            out += [x, y]
    return out


# -- density matrices ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """An ``n x n`` state. Construction checks shape only; see :meth:`check`.

    ``diagnostics`` is filled by :func:`tomography_reconstruct`.
    """

    rho: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=np.complex128)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] < 1:
            raise DimensionError(f"density matrix must be square, got {rho.shape}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    def check(self, herm_tol=HERMITIAN_TOL, trace_tol=HERMITIAN_TOL, psd_tol=PSD_TOL) -> list:
        """Names of violated invariants (empty when the state is valid)."""
        bad = []
        if np.max(np.abs(self.rho - self.rho.conj().T)) > herm_tol:
            bad.append("hermitian")
        if abs(np.trace(self.rho) - 1.0) > trace_tol:
            bad.append("trace")
        herm = 0.5 * (self.rho + self.rho.conj().T)
        if np.linalg.eigvalsh(herm).min() < -psd_tol:
            bad.append("positive")
        return bad

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        v = np.asarray(psi, dtype=np.complex128).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    def to_json(self) -> dict:
        doc = {"n": self.n, "re": [float(x) for x in self.rho.real.ravel()],
               "im": [float(x) for x in self.rho.imag.ravel()]}
        if self.diagnostics:
            doc["diagnostics"] = dict(self.diagnostics)
        return doc

    @classmethod
    def from_json(cls, doc) -> "DensityMatrix":
        if not isinstance(doc, dict) or not {"n", "re", "im"} <= set(doc):
            raise DimensionError('density JSON needs keys "n", "re", "im"')
        n = doc["n"]
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise DimensionError(f'"n" must be a positive integer, got {n!r}')
        re, im = doc["re"], doc["im"]
        if not isinstance(re, list) or not isinstance(im, list) \
                or len(re) != n * n or len(im) != n * n:
            raise DimensionError(f'"re" and "im" must each hold n*n = {n * n} numbers')
        rho = (np.array(re, dtype=np.float64) + 1j * np.array(im, dtype=np.float64)).reshape(n, n)
        return cls(rho, dict(doc.get("diagnostics", {})))


def random_density_matrix(n: int, rng: np.random.Generator, n_pure: int | None = None) -> DensityMatrix:
    """Dirichlet-weighted mixture of ``n_pure`` Haar-random pure states (default ``n``)."""
    k = n if n_pure is None else n_pure
    w = rng.dirichlet(np.ones(k))
    rho = np.zeros((n, n), dtype=np.complex128)
    for wi in w:
        psi = haar_unitary(n, rng)[:, 0]
        rho += wi * np.outer(psi, psi.conj())
    return DensityMatrix(rho)


# -- fiducial set and tomography -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiducialSet:
    """``n**2`` rank-one projectors and their Gram ("frame") matrix ``Tr(P_k P_l)``."""

    dimension: int
    projectors: tuple
    frame: np.ndarray
    condition_number: float

    @property
    def k(self) -> int:
        return len(self.projectors)


def build_fiducial_set(n: int) -> FiducialSet:
    """Basis projectors plus, for each ``i < j``, projectors onto
    ``(e_i + e_j)/sqrt2`` and ``(e_i + 1j e_j)/sqrt2``.
    """
    n = _dim(n)
    vecs = []
    eye = np.eye(n, dtype=np.complex128)
    for i in range(n):
        vecs.append(eye[i])
    for i in range(n):
        for j in range(i + 1, n):
            vecs.append((eye[i] + eye[j]) / np.sqrt(2.0))
            vecs.append((eye[i] + 1j * eye[j]) / np.sqrt(2.0))
    projectors = tuple(np.outer(v, v.conj()) for v in vecs)
    for p in projectors:
        p.setflags(write=False)
    stack = np.array(projectors)
    # Tr(P_k P_l) = sum_ab P_k[a, b] P_l[b, a]
    frame = np.einsum("kab,lba->kl", stack, stack).real
    cond = float(np.linalg.cond(frame))
    if not np.isfinite(cond) or cond > 1e12:
        raise ReconstructionError(f"fiducial frame is singular (condition number {cond:.3g})")
    frame.setflags(write=False)
    return FiducialSet(n, projectors, frame, cond)


def probabilities_of(rho, f: FiducialSet) -> np.ndarray:
    """``p_k = Tr(rho P_k)`` for every fiducial projector."""
    r = rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    if r.shape != (f.dimension, f.dimension):
        raise DimensionError(f"state is {r.shape}, fiducial set has N = {f.dimension}")
    stack = np.array(f.projectors)
    return np.einsum("ab,kba->k", r, stack).real


def tomography_reconstruct(p, f: FiducialSet) -> DensityMatrix:
    """Invert the frame: ``rho = sum_l c_l P_l`` with ``frame @ c = p``.

    Inconsistent data are not an error; ``diagnostics`` records the trace,
    the smallest eigenvalue and whether the result is a valid state.
    """
    p = np.asarray(p, dtype=np.float64).ravel()
    if p.size != f.k:
        raise DimensionError(f"need K = {f.k} probabilities, got {p.size}")
    try:
        c = np.linalg.solve(f.frame, p)
    except np.linalg.LinAlgError as exc:
        raise ReconstructionError(str(exc)) from exc
    rho = np.einsum("l,lab->ab", c, np.array(f.projectors))
    rho = 0.5 * (rho + rho.conj().T)
    min_eig = float(np.linalg.eigvalsh(rho).min())
    trace = float(np.trace(rho).real)
    diag = {
        "trace": trace,
        "min_eigenvalue": min_eig,
        "condition_number": f.condition_number,
        "consistent": bool(min_eig >= -PSD_TOL and abs(trace - 1.0) <= 1e-9),
    }
    return DensityMatrix(rho, diag)


def restrict_support(rho, support, tol: float = 1e-10) -> DensityMatrix:
    """Principal submatrix on ``support``, renormalized to unit trace.

    Raises
    ------
    SupportError
        If the diagonal weight outside ``support`` exceeds ``tol``.
    """
    r = rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    idx = np.asarray(sorted(set(int(i) for i in support)), dtype=int)
    n = r.shape[0]
    if idx.size == 0 or idx.min() < 0 or idx.max() >= n:
        raise DimensionError(f"support {list(idx)} is not a non-empty subset of range({n})")
    outside = np.setdiff1d(np.arange(n), idx)
    leak = float(np.sum(np.diagonal(r)[outside].real)) if outside.size else 0.0
    if leak > tol:
        raise SupportError(f"weight {leak:.3g} outside the support exceeds {tol:.1g}")
    sub = r[np.ix_(idx, idx)]
    return DensityMatrix(sub / np.trace(sub).real)
