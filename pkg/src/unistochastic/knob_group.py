"""Groups of apparatus ("knob") transformations and their unitary representations.

Two concrete groups are provided:

* :class:`RotationGroup` -- SO(3), e.g. orientations of a Stern-Gerlach
  magnet, represented projectively on C^2 through SU(2). Non-commutative.
* :class:`TorusGroup` -- U(1)^N acting by diagonal phases. Commutative; its
  transition probabilities are always the identity matrix.

Elements are immutable :class:`KnobTransformation` values with a canonical
payload, so equality of payloads is equality of group elements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GroupError, RepresentationError
from .linalg_core import transition_probability_matrix
from .modality import ProbabilityMatrix

# Pauli matrices
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

AXIS_TOL = 1e-12
_ANGLE_EPS = 1e-15
_PI_SNAP = 1e-12
_SCAN_SAMPLES = 360

X_AXIS = (1.0, 0.0, 0.0)
Y_AXIS = (0.0, 1.0, 0.0)
Z_AXIS = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class KnobTransformation:
    """An element of a knob group: ``group_id`` plus a canonical ``payload`` tuple."""

    group_id: str
    payload: tuple


class KnobGroup:
    """Interface shared by the concrete groups.

    ``linear`` is True when :meth:`represent` is an ordinary homomorphism
    and False when it holds only up to a global phase.
    """

    group_id: str = ""
    dimension: int = 0
    linear: bool = True
    commutative: bool = False

    def identity(self) -> KnobTransformation:
        raise NotImplementedError

    def compose(self, g1, g2) -> KnobTransformation:
        raise NotImplementedError

    def inverse(self, g) -> KnobTransformation:
        raise NotImplementedError

    def represent(self, g) -> np.ndarray:
        raise NotImplementedError

    def random_element(self, rng: np.random.Generator) -> KnobTransformation:
        raise NotImplementedError

    def _check(self, *gs):
        for g in gs:
            if not isinstance(g, KnobTransformation):
                raise GroupError(f"expected a KnobTransformation, got {type(g).__name__}")
            if g.group_id != self.group_id:
                raise GroupError(f"element of {g.group_id!r} used with group {self.group_id!r}")


# -- SO(3) ----------------------------------------------------------------------

def rotation_matrix(axis, angle) -> np.ndarray:
    """Rodrigues formula for the 3 x 3 rotation about unit ``axis`` by ``angle``."""
    n = np.asarray(axis, dtype=np.float64)
    k = np.array([[0.0, -n[2], n[1]], [n[2], 0.0, -n[0]], [-n[1], n[0], 0.0]])
    c, s = math.cos(angle), math.sin(angle)
    return c * np.eye(3) + s * k + (1.0 - c) * np.outer(n, n)


def _canonical_axis_angle(axis, angle):
    n = np.asarray(axis, dtype=np.float64)
    angle = float(angle)
    if angle < 0:
        n, angle = -n, -angle
    angle = math.fmod(angle, 2.0 * math.pi)
    if angle > math.pi:
        n, angle = -n, 2.0 * math.pi - angle
    if angle < _ANGLE_EPS:
        return Z_AXIS, 0.0
    if math.pi - angle < _PI_SNAP:
        angle = math.pi
        # n and -n give the same half-turn; keep the first nonzero component positive
        lead = n[np.flatnonzero(np.abs(n) > AXIS_TOL)[0]]
        if lead < 0:
            n = -n
    return tuple(float(x) + 0.0 for x in n), angle


def axis_angle_from_matrix(r) -> tuple:
    """Canonical ``(axis, angle)`` with ``angle`` in ``[0, pi]`` of a rotation matrix.

    Goes through the unit quaternion (largest-component branch) so half-turns
    are handled without loss of precision.
    """
    r = np.asarray(r, dtype=np.float64)
    tr = r[0, 0] + r[1, 1] + r[2, 2]
    cand = [tr, r[0, 0], r[1, 1], r[2, 2]]
    k = int(np.argmax(cand))
    if k == 0:
        w = 0.5 * math.sqrt(max(1.0 + tr, 0.0))
        q = [w, (r[2, 1] - r[1, 2]) / (4 * w), (r[0, 2] - r[2, 0]) / (4 * w),
             (r[1, 0] - r[0, 1]) / (4 * w)]
    elif k == 1:
        x = 0.5 * math.sqrt(max(1.0 + r[0, 0] - r[1, 1] - r[2, 2], 0.0))
        q = [(r[2, 1] - r[1, 2]) / (4 * x), x, (r[0, 1] + r[1, 0]) / (4 * x),
             (r[0, 2] + r[2, 0]) / (4 * x)]
    elif k == 2:
        y = 0.5 * math.sqrt(max(1.0 - r[0, 0] + r[1, 1] - r[2, 2], 0.0))
        q = [(r[0, 2] - r[2, 0]) / (4 * y), (r[0, 1] + r[1, 0]) / (4 * y), y,
             (r[1, 2] + r[2, 1]) / (4 * y)]
    else:
        z = 0.5 * math.sqrt(max(1.0 - r[0, 0] - r[1, 1] + r[2, 2], 0.0))
        q = [(r[1, 0] - r[0, 1]) / (4 * z), (r[0, 2] + r[2, 0]) / (4 * z),
             (r[1, 2] + r[2, 1]) / (4 * z), z]
    q = np.array(q)
    q /= np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    v = q[1:]
    vn = np.linalg.norm(v)
    if vn < _ANGLE_EPS:
        return Z_AXIS, 0.0
    return _canonical_axis_angle(v / vn, 2.0 * math.atan2(vn, q[0]))


class RotationGroup(KnobGroup):
    """SO(3) with its spin-1/2 (SU(2)) projective representation."""

    group_id = "SO(3)"
    linear = False
    commutative = False

    def __init__(self, dimension: int = 2):
        self.dimension = dimension

    def rotation(self, axis, angle) -> KnobTransformation:
        """Rotation by ``angle`` radians about ``axis`` (normalized here)."""
        n = np.asarray(axis, dtype=np.float64)
        if n.shape != (3,) or not np.all(np.isfinite(n)) or not math.isfinite(angle):
            raise GroupError("rotation needs a finite 3-vector axis and a finite angle")
        norm = np.linalg.norm(n)
        if norm == 0:
            if angle == 0:
                return self.identity()
            raise GroupError("rotation axis must be nonzero")
        axis, angle = _canonical_axis_angle(n / norm, angle)
        return KnobTransformation(self.group_id, (axis, angle))

    def identity(self):
        return KnobTransformation(self.group_id, (Z_AXIS, 0.0))

    def _unpack(self, g):
        self._check(g)
        axis, angle = g.payload
        n = np.asarray(axis, dtype=np.float64)
        if abs(np.linalg.norm(n) - 1.0) > AXIS_TOL or not math.isfinite(angle):
            raise GroupError(f"invalid SO(3) payload {g.payload!r}")
        return n, angle

    def matrix(self, g) -> np.ndarray:
        n, angle = self._unpack(g)
        return rotation_matrix(n, angle)

    def compose(self, g1, g2):
        """``g1 o g2``: apply ``g2`` first. Matrix of the result is ``R(g1) R(g2)``."""
        r = self.matrix(g1) @ self.matrix(g2)
        axis, angle = axis_angle_from_matrix(r)
        return KnobTransformation(self.group_id, (axis, angle))

    def inverse(self, g):
        n, angle = self._unpack(g)
        axis, angle = _canonical_axis_angle(n, -angle)
        return KnobTransformation(self.group_id, (axis, angle))

    def represent(self, g):
        """``exp(-i angle (axis . sigma) / 2)`` on C^2."""
        if self.dimension != 2:
            raise RepresentationError(
                f"SO(3) is only represented on C^2 here, not C^{self.dimension}")
        n, angle = self._unpack(g)
        ns = n[0] * SIGMA_X + n[1] * SIGMA_Y + n[2] * SIGMA_Z
        return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * ns

    def random_element(self, rng):
        v = rng.standard_normal(3)
        return self.rotation(v / np.linalg.norm(v), rng.uniform(0.0, math.pi))

    def distance(self, g1, g2) -> float:
        """Geodesic angle between two rotations."""
        r = self.matrix(g1).T @ self.matrix(g2)
        return axis_angle_from_matrix(r)[1]


# -- torus ------------------------------------------------------------------------

class TorusGroup(KnobGroup):
    """U(1)^N acting by independent phases on each exclusive modality."""

    linear = True
    commutative = True

    def __init__(self, dimension: int):
        if dimension < 1:
            raise RepresentationError("torus dimension must be positive")
        self.dimension = dimension
        self.group_id = f"U(1)^{dimension}"

    def element(self, phases) -> KnobTransformation:
        ph = np.asarray(phases, dtype=np.float64).ravel()
        if ph.size != self.dimension or not np.all(np.isfinite(ph)):
            raise GroupError(f"need {self.dimension} finite phases, got {ph.size}")
        return KnobTransformation(self.group_id, tuple(float(x) for x in np.mod(ph, 2 * math.pi)))

    def identity(self):
        return KnobTransformation(self.group_id, (0.0,) * self.dimension)

    def compose(self, g1, g2):
        self._check(g1, g2)
        return self.element(np.add(g1.payload, g2.payload))

    def inverse(self, g):
        self._check(g)
        return self.element(np.negative(g.payload))

    def represent(self, g):
        self._check(g)
        return np.diag(np.exp(1j * np.asarray(g.payload)))

    def random_element(self, rng):
        return self.element(rng.uniform(0.0, 2 * math.pi, self.dimension))


SO3 = RotationGroup(2)
_GROUPS = {SO3.group_id: SO3}


def torus(n: int) -> TorusGroup:
    g = TorusGroup(n)
    return _GROUPS.setdefault(g.group_id, g)


def group_of(g: KnobTransformation) -> KnobGroup:
    if g.group_id in _GROUPS:
        return _GROUPS[g.group_id]
    if g.group_id.startswith("U(1)^"):
        return torus(int(g.group_id[5:]))
    raise GroupError(f"unknown group {g.group_id!r}")


def rotation(axis, angle) -> KnobTransformation:
    return SO3.rotation(axis, angle)


def compose(g1: KnobTransformation, g2: KnobTransformation) -> KnobTransformation:
    if g1.group_id != g2.group_id:
        raise GroupError(f"cannot compose {g1.group_id!r} with {g2.group_id!r}")
    return group_of(g1).compose(g1, g2)


def inverse(g: KnobTransformation) -> KnobTransformation:
    return group_of(g).inverse(g)


def represent(group: KnobGroup, g: KnobTransformation) -> np.ndarray:
    return group.represent(g)


def projective_factor(group: KnobGroup, g1, g2):
    """Best unit-modulus ``c`` with ``U(g1) U(g2) ~ c U(g1 g2)`` and the remaining distance.

    For a linear representation ``c`` is fixed to 1. Otherwise ``c`` is the
    phase of ``Trace(U(g1 g2)^dagger U(g1) U(g2))``; if that trace vanishes,
    ``c`` is scanned over 360 points of the unit circle.
    """
    product = group.represent(g1) @ group.represent(g2)
    target = group.represent(group.compose(g1, g2))
    if group.linear:
        c = 1.0 + 0.0j
    else:
        t = np.trace(target.conj().T @ product)
        if abs(t) > 1e-12:
            c = t / abs(t)
        else:
            cs = np.exp(2j * np.pi * np.arange(_SCAN_SAMPLES) / _SCAN_SAMPLES)
            dists = [np.linalg.norm(product - ci * target) for ci in cs]
            c = cs[int(np.argmin(dists))]
    return complex(c), float(np.linalg.norm(product - c * target))


def projective_homomorphism_check(group: KnobGroup, g1, g2, tol: float = 1e-9) -> bool:
    """True iff ``U(g1) U(g2)`` equals ``U(g1 g2)`` up to a global phase within ``tol``."""
    return projective_factor(group, g1, g2)[1] < tol


def commutative_limit_probabilities(phases) -> ProbabilityMatrix:
    """Transition probabilities of a diagonal phase unitary: always the identity."""
    ph = np.asarray(phases, dtype=np.float64).ravel()
    group = torus(ph.size)
    return transition_probability_matrix(group.represent(group.element(ph)))


def stern_gerlach_transition(theta: float) -> ProbabilityMatrix:
    """Spin-1/2 probabilities after tilting the magnet by ``theta`` about y.

    ``[[cos^2(theta/2), sin^2(theta/2)], [sin^2(theta/2), cos^2(theta/2)]]``.
    """
    return transition_probability_matrix(SO3.represent(SO3.rotation(Y_AXIS, theta)))
