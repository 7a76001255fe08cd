"""Phase completion: find phases that turn ``sqrt(p)`` into a unitary matrix.

Given a bistochastic ``p`` the solver looks for ``phi`` such that
``S = sqrt(p) * exp(1j * phi)`` satisfies ``S^dagger S = I``. Phases are
gauge fixed (first row and column zero), leaving ``(N - 1)**2`` unknowns.

The search minimizes ``||S^dagger S - I||_F**2`` by damped least squares
(see :mod:`unistochastic._kernels`). Each seeded start is a short chain: one
descent from uniform random phases, then up to ``hops`` rounds of Gaussian
perturbation and re-descent, keeping only improvements. Starts are processed
in fixed blocks of :data:`START_BLOCK` and the search stops after the first
block that yields a feasible point, so the outcome depends only on the input
and the configuration.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, DimensionError
from .linalg_core import unitarity_residual
from .modality import ProbabilityMatrix, validate_bistochastic

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
INCONCLUSIVE = "inconclusive"

START_BLOCK = 8
HOP_SCALE = 1.0     # std. dev. (radians) of the perturbation between descents
INITIAL_DAMPING = 1e-3
CERTIFY_TOL = 1e-10

_SEED_MAX = 2 ** 64


def wrap_phase(x):
    """Map angles into ``(-pi, pi]``; values already inside are returned unchanged."""
    x = np.asarray(x, dtype=np.float64)
    inside = (x > -np.pi) & (x <= np.pi)
    y = np.where(inside, x, np.pi - np.mod(np.pi - x, 2.0 * np.pi))
    return np.where(y <= -np.pi, y + 2.0 * np.pi, y)


@dataclass(frozen=True, eq=False)
class PhaseMatrix:
    """Gauge-fixed phases: ``phi[0, :] == phi[:, 0] == 0``, entries in ``(-pi, pi]``."""

    phi: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=np.float64)
        if phi.ndim != 2 or phi.shape[0] != phi.shape[1]:
            raise DimensionError(f"phase matrix must be square, got {phi.shape}")
        if np.any(phi[0, :] != 0) or np.any(phi[:, 0] != 0):
            raise ValueError("phase matrix is not gauge fixed; use gauge_fix()")
        if np.any(phi <= -np.pi) or np.any(phi > np.pi):
            raise ValueError("phases must lie in (-pi, pi]")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    def interior(self) -> np.ndarray:
        return self.phi[1:, 1:].ravel().copy()

    @classmethod
    def from_interior(cls, params, n: int) -> "PhaseMatrix":
        phi = np.zeros((n, n))
        phi[1:, 1:] = np.asarray(params, dtype=np.float64).reshape(n - 1, n - 1)
        return gauge_fix(phi)

    def __eq__(self, other):
        if not isinstance(other, PhaseMatrix):
            return NotImplemented
        return np.array_equal(self.phi, other.phi)

    __hash__ = None


def gauge_fix(phi) -> PhaseMatrix:
    """Canonical representative under left/right diagonal phase multiplication.

    ``phi'[i, j] = phi[i, j] - phi[i, 0] - phi[0, j] + phi[0, 0]`` wrapped into
    ``(-pi, pi]``. All ``|S[i, j]|`` and therefore all transition
    probabilities are unchanged.
    """
    if isinstance(phi, PhaseMatrix):
        return phi
    a = np.asarray(getattr(phi, "phi", phi), dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"phase array must be square, got {a.shape}")
    g = wrap_phase(a - a[:, :1] - a[:1, :] + a[0, 0])
    g[0, :] = 0.0
    g[:, 0] = 0.0
    return PhaseMatrix(g)


def canonical_phases(phi, support) -> PhaseMatrix:
    """Gauge fix relative to the nonzero pattern ``support`` of the moduli.

    Phases on a spanning forest of the bipartite row/column support graph are
    sent to zero by diagonal phase multiplication, and phases of zero-modulus
    entries are set to zero. Row 0 and column 0 edges enter the forest first,
    so with full support in row 0 and column 0 this is :func:`gauge_fix`.
    """
    a = np.asarray(getattr(phi, "phi", phi), dtype=np.float64)
    mask = np.asarray(support, dtype=bool)
    n = a.shape[0]
    if a.shape != (n, n) or mask.shape != (n, n):
        raise DimensionError("phases and support must be square and of equal shape")
    order = [(0, j) for j in range(n)] + [(i, 0) for i in range(1, n)]
    order += [(i, j) for i in range(1, n) for j in range(1, n)]
    parent = list(range(2 * n))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    adj = [[] for _ in range(2 * n)]
    forest = []
    for i, j in order:
        if not mask[i, j]:
            continue
        ru, rv = find(i), find(n + j)
        if ru != rv:
            parent[ru] = rv
            forest.append((i, j))
            adj[i].append((n + j, a[i, j]))
            adj[n + j].append((i, a[i, j]))
    # potentials with phi[i, j] + pot[i] + pot[n + j] == 0 on forest edges
    pot = np.full(2 * n, np.nan)
    for root in range(2 * n):
        if not np.isnan(pot[root]):
            continue
        pot[root] = 0.0
        stack = [root]
        while stack:
            u = stack.pop()
            for v, w in adj[u]:
                if np.isnan(pot[v]):
                    pot[v] = -w - pot[u]
                    stack.append(v)
    g = wrap_phase(a + pot[:n, None] + pot[None, n:])
    g[~mask] = 0.0
    for i, j in forest:
        g[i, j] = 0.0
    return PhaseMatrix(g)


def phases_of(u, tol: float = 0.0) -> PhaseMatrix:
    """Canonical phases of a complex matrix, ignoring entries with ``|u| <= tol``."""
    u = np.asarray(u, dtype=np.complex128)
    return canonical_phases(np.angle(u), np.abs(u) > tol)


def sqrt_matrix(pi: ProbabilityMatrix) -> np.ndarray:
    """Entrywise square root of a validated probability matrix."""
    p = pi.p if isinstance(pi, ProbabilityMatrix) else np.asarray(pi, dtype=np.float64)
    return np.sqrt(np.clip(p, 0.0, None))


def apply_phases(sigma, phi) -> np.ndarray:
    """``sigma * exp(1j * phi)`` entrywise."""
    s = np.asarray(sigma, dtype=np.float64)
    ph = phi.phi if isinstance(phi, PhaseMatrix) else np.asarray(phi, dtype=np.float64)
    if s.shape != ph.shape:
        raise DimensionError(f"sigma {s.shape} and phases {ph.shape} differ in shape")
    return s * np.exp(1j * ph)


# -- configuration and reports ------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    tol: float = 1e-10
    max_iter: int = 500
    starts: int = 32
    seed: int = 0
    hops: int = 8
    workers: int = 1

    def __post_init__(self):
        if not (isinstance(self.tol, (int, float)) and math.isfinite(self.tol) and self.tol > 0):
            raise ConfigError(f"tol must be a positive finite number, got {self.tol!r}")
        for name, lo in (("max_iter", 1), ("starts", 1), ("hops", 0), ("workers", 1)):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < lo:
                raise ConfigError(f"{name} must be an integer >= {lo}, got {v!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) \
                or not 0 <= self.seed < _SEED_MAX:
            raise ConfigError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")

    def to_json(self) -> dict:
        return {"tol": self.tol, "max_iter": self.max_iter, "starts": self.starts,
                "seed": self.seed, "hops": self.hops}

    @classmethod
    def from_json(cls, doc) -> "SolverConfig":
        if not isinstance(doc, dict):
            raise ConfigError("solver config must be a JSON object")
        unknown = set(doc) - {"tol", "max_iter", "starts", "seed", "hops", "workers"}
        if unknown:
            raise ConfigError(f"unknown solver config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass(frozen=True)
class Certificate:
    """Outcome of the analytic N = 3 test.

    ``pair`` and ``axis`` name the first pair of rows (or columns) whose link
    lengths cannot close a triangle; ``gap`` is the largest
    ``max(L) - (sum(L) - max(L))`` over all pairs (positive means open).
    """

    status: str
    gap: float
    pair: tuple | None = None
    axis: str | None = None

    def to_json(self) -> dict:
        doc = {"status": self.status, "gap": self.gap}
        if self.pair is not None:
            doc["pair"] = list(self.pair)
            doc["axis"] = self.axis
        return doc

    @classmethod
    def from_json(cls, doc) -> "Certificate":
        pair = doc.get("pair")
        return cls(doc["status"], float(doc["gap"]), tuple(pair) if pair is not None else None,
                   doc.get("axis"))


@dataclass(frozen=True)
class SolveReport:
    status: str
    residual: float
    starts_used: int
    iterations_total: int
    seed: int
    n: int
    phases: PhaseMatrix | None = None
    certificate: Certificate | None = field(default=None)

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE

    def sigma_tilde(self, pi) -> np.ndarray:
        if self.phases is None:
            raise ValueError(f"no phases in a report with status {self.status!r}")
        return apply_phases(sqrt_matrix(pi), self.phases)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "n": self.n,
            "phases": None if self.phases is None else self.phases.phi.tolist(),
            "residual": self.residual,
            "starts_used": self.starts_used,
            "iterations_total": self.iterations_total,
            "seed": self.seed,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
        }

    @classmethod
    def from_json(cls, doc) -> "SolveReport":
        phases = doc.get("phases")
        cert = doc.get("certificate")
        return cls(
            status=doc["status"], residual=float(doc["residual"]),
            starts_used=int(doc["starts_used"]), iterations_total=int(doc["iterations_total"]),
            seed=int(doc["seed"]), n=int(doc["n"]),
            phases=None if phases is None else PhaseMatrix(np.array(phases, dtype=np.float64)),
            certificate=None if cert is None else Certificate.from_json(cert),
        )


def _as_validated(pi) -> ProbabilityMatrix:
    if isinstance(pi, ProbabilityMatrix):
        return pi
    return validate_bistochastic(pi)


# -- closed forms and certificates ---------------------------------------------

def solve_phases_closed_form_n2(pi) -> SolveReport:
    """Explicit completion for ``N = 2``: ``[[sqrt(p), sqrt(1-p)], [sqrt(1-p), -sqrt(p)]]``.

    The interior phase is ``pi`` whenever all four moduli are nonzero; when
    ``p`` is 0 or 1 it does not affect unitarity and is set to 0.
    """
    pm = _as_validated(pi)
    if pm.n != 2:
        raise DimensionError(f"closed form needs N = 2, got N = {pm.n}")
    sigma = sqrt_matrix(pm)
    phases = canonical_phases([[0.0, 0.0], [0.0, np.pi]], sigma > 0)
    res = unitarity_residual(apply_phases(sigma, phases))
    return SolveReport(FEASIBLE, res, 0, 0, 0, 2, phases)


def _triangle_gap(links) -> float:
    top = float(np.max(links))
    return top - (float(np.sum(links)) - top)


def certify_n3(pi, tol: float = CERTIFY_TOL) -> Certificate:
    """Decide whether a 3 x 3 bistochastic matrix is unistochastic.

    Rows ``i, j`` of a unitary are orthogonal, so the three complex terms
    ``sqrt(p[i,k] p[j,k]) e^{i theta_k}`` must sum to zero: their moduli have
    to close a triangle. Every pair of rows and of columns is tested; the
    matrix is infeasible iff some pair leaves a gap larger than ``tol``.
    """
    pm = _as_validated(pi)
    if pm.n != 3:
        raise DimensionError(f"certificate needs N = 3, got N = {pm.n}")
    p = np.clip(pm.p, 0.0, None)
    worst = -np.inf
    first = None
    for axis, mat in (("row", p), ("column", p.T)):
        for i, j in ((0, 1), (0, 2), (1, 2)):
            gap = _triangle_gap(np.sqrt(mat[i] * mat[j]))
            worst = max(worst, gap)
            if gap > tol and first is None:
                first = ((i, j), axis)
    if first is None:
        return Certificate(FEASIBLE, worst)
    return Certificate(INFEASIBLE, worst, first[0], first[1])


# -- objective ------------------------------------------------------------------

def residual_map(sigma, params):
    """Residual vector and Jacobian of the unitarity defect at interior phases ``params``."""
    return _kernels.residual_jacobian(np.asarray(sigma, dtype=np.float64),
                                      np.asarray(params, dtype=np.float64))


def objective_and_gradient(sigma, params):
    """``f = ||S^dagger S - I||_F**2`` and its analytic gradient ``2 J^T r``."""
    r, J = residual_map(sigma, params)
    return float(r @ r), 2.0 * (J.T @ r)


# -- solver -----------------------------------------------------------------------

def _start_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _run_chains(sigma, indices, cfg: SolverConfig):
    """Descent plus basin hops for each start index; independent per start."""
    n = sigma.shape[0]
    m = (n - 1) ** 2
    stop_res = 1e-2 * cfg.tol
    rngs = [_start_rng(cfg.seed, i) for i in indices]
    x0 = np.array([rng.uniform(-np.pi, np.pi, m) for rng in rngs]).reshape(len(indices), m)
    x, f, it = _kernels.lm_multistart(sigma, x0, cfg.max_iter, stop_res, INITIAL_DAMPING)
    iters = it.astype(np.int64)
    for _ in range(cfg.hops if m else 0):
        open_ = np.flatnonzero(np.sqrt(f) >= cfg.tol)
        if open_.size == 0:
            break
        y0 = np.array([x[k] + HOP_SCALE * rngs[k].standard_normal(m) for k in open_])
        y, fy, ity = _kernels.lm_multistart(sigma, y0, cfg.max_iter, stop_res, INITIAL_DAMPING)
        iters[open_] += ity
        better = fy < f[open_]
        x[open_[better]] = y[better]
        f[open_[better]] = fy[better]
    return x, np.sqrt(f), iters


def _run_block(sigma, indices, cfg: SolverConfig, workers: int):
    if workers <= 1 or not _kernels.RELEASES_GIL or len(indices) < 2:
        return _run_chains(sigma, indices, cfg)
    chunks = [c for c in np.array_split(np.asarray(indices), workers) if c.size]
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda c: _run_chains(sigma, [int(i) for i in c], cfg), chunks))
    return (np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts]),
            np.concatenate([p[2] for p in parts]))


def solve_phases(pi, cfg: SolverConfig | None = None, *, workers: int | None = None) -> SolveReport:
    """Search for phases making ``sqrt(pi) * exp(1j * phi)`` unitary.

    Parameters
    ----------
    pi : ProbabilityMatrix or array_like
        Bistochastic matrix; raw arrays are validated first.
    cfg : SolverConfig, optional
        Tolerance, iteration budget, number of starts, seed, hops.
    workers : int, optional
        Threads used inside each block of starts (compiled backend only).
        Overrides ``cfg.workers``; never changes the result.

    Returns
    -------
    SolveReport
        ``feasible`` with gauge-fixed phases when the unitarity residual is
        below ``cfg.tol``. Otherwise ``infeasible`` if ``N = 3`` and
        :func:`certify_n3` proves it, else ``inconclusive``. ``residual`` is
        the best residual found.
    """
    cfg = SolverConfig() if cfg is None else cfg
    if not isinstance(cfg, SolverConfig):
        raise ConfigError("cfg must be a SolverConfig")
    workers = cfg.workers if workers is None else workers
    pm = _as_validated(pi)
    n = pm.n
    sigma = np.ascontiguousarray(sqrt_matrix(pm))

    best = None  # (residual, index, params)
    used = 0
    iters_total = 0
    for lo in range(0, cfg.starts, START_BLOCK):
        indices = list(range(lo, min(lo + START_BLOCK, cfg.starts)))
        x, res, iters = _run_block(sigma, indices, cfg, workers)
        used += len(indices)
        iters_total += int(iters.sum())
        for k, idx in enumerate(indices):
            cand = (float(res[k]), idx)
            if best is None or cand < best[:2]:
                best = (cand[0], idx, x[k].copy())
        if best[0] < cfg.tol:
            break

    phases = canonical_phases(PhaseMatrix.from_interior(best[2], n).phi, sigma > 0)
    residual = unitarity_residual(apply_phases(sigma, phases))
    if residual < cfg.tol:
        return SolveReport(FEASIBLE, residual, used, iters_total, cfg.seed, n, phases)
    if n == 3:
        cert = certify_n3(pm)
        if cert.status == INFEASIBLE:
            return SolveReport(INFEASIBLE, residual, used, iters_total, cfg.seed, n,
                               certificate=cert)
        return SolveReport(INCONCLUSIVE, residual, used, iters_total, cfg.seed, n,
                           certificate=cert)
    return SolveReport(INCONCLUSIVE, residual, used, iters_total, cfg.seed, n)
