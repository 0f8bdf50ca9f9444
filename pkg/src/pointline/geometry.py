"""Planar points, lines, rigid alignments and point-to-line distances.

An alignment ``(R, t)`` acts on a point as ``p -> R p - t``. The minus sign is
deliberate and used consistently everywhere in the package.

A line is stored as a unit normal ``v`` and an offset ``b >= 0`` so that the
line is ``{q : v^T q = b}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ParallelLinesError, PointLineError

PARALLEL_TOL = 1e-12
_ORTHO_TOL = 1e-10
UNIT_TOL = 4 * np.finfo(float).eps


def _vec2(x, name="vector") -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(-1)
    if a.shape != (2,):
        raise PointLineError(f"{name} must have exactly two coordinates, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise PointLineError(f"{name} must be finite")
    return a


@dataclass(frozen=True)
class Line:
    """The line ``{q : normal . q = offset}``, normalised so ``|normal| = 1`` and ``offset >= 0``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        v = _vec2(self.normal, "normal")
        b = float(self.offset)
        if not math.isfinite(b):
            raise PointLineError("offset must be finite")
        norm = math.hypot(v[0], v[1])
        if norm == 0.0:
            raise PointLineError("line normal must be non-zero")
        if abs(norm - 1.0) > UNIT_TOL:
            v = v / norm
            b = b / norm
        if b < 0:
            v, b = -v, -b
        v.setflags(write=False)
        object.__setattr__(self, "normal", v)
        object.__setattr__(self, "offset", b)

    @classmethod
    def through(cls, q1, q2) -> "Line":
        """Line through two distinct points."""
        q1, q2 = _vec2(q1), _vec2(q2)
        d = q2 - q1
        if not np.any(d):
            raise PointLineError("points defining a line must differ")
        v = np.array([-d[1], d[0]])
        return cls(v, float(v @ q1))

    @property
    def direction(self) -> np.ndarray:
        """Unit vector along the line (normal rotated by +90 degrees)."""
        return np.array([-self.normal[1], self.normal[0]])

    def project(self, p) -> np.ndarray:
        p = _vec2(p, "point")
        return p - (self.normal @ p - self.offset) * self.normal


@dataclass(frozen=True)
class Alignment:
    """Rotation matrix plus translation, acting as ``p -> R p - t``."""

    rotation: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float)
        if R.shape != (2, 2) or not np.all(np.isfinite(R)):
            raise PointLineError("rotation must be a finite 2x2 matrix")
        if np.max(np.abs(R.T @ R - np.eye(2))) > _ORTHO_TOL or abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL:
            raise PointLineError("rotation must be orthogonal with determinant 1")
        t = _vec2(self.translation, "translation").copy()
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Alignment":
        return cls(np.eye(2), np.zeros(2))

    @classmethod
    def from_angle(cls, theta: float, translation=(0.0, 0.0)) -> "Alignment":
        c, s = math.cos(theta), math.sin(theta)
        return cls(np.array([[c, -s], [s, c]]), translation)

    @classmethod
    def from_cos_sin(cls, c: float, s: float, translation=(0.0, 0.0)) -> "Alignment":
        # renormalise so round-off in kernels never trips the orthogonality check
        h = math.hypot(c, s)
        c, s = c / h, s / h
        return cls(np.array([[c, -s], [s, c]]), translation)

    @property
    def angle(self) -> float:
        return math.atan2(self.rotation[1, 0], self.rotation[0, 0])

    def apply(self, points) -> np.ndarray:
        """Map one point (shape (2,)) or many (shape (n, 2))."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation.T - self.translation

    def inverse(self) -> "Alignment":
        Rt = self.rotation.T
        return Alignment(Rt, -Rt @ self.translation)

    def compose(self, first: "Alignment") -> "Alignment":
        """Alignment equal to applying ``first`` and then ``self``."""
        R = self.rotation @ first.rotation
        t = self.rotation @ first.translation + self.translation
        return Alignment(R, t)


def apply_alignment(a: Alignment, p) -> np.ndarray:
    return a.rotation @ _vec2(p, "point") - a.translation


def dual_norm(v, z: float) -> float:
    """``||v||_{z*}`` where ``1/z + 1/z* = 1``."""
    if z < 1:
        raise PointLineError(f"z must be >= 1, got {z}")
    v = np.abs(np.asarray(v, dtype=float))
    if z == 1:
        return float(v.max())
    if math.isinf(z):
        return float(v.sum())
    if z == 2:
        return float(math.sqrt(v @ v))
    zs = z / (z - 1.0)
    return float(np.sum(v**zs) ** (1.0 / zs))


def distance_scale(normals, z: float) -> np.ndarray:
    """Per-line factor turning the Euclidean point-line distance into the l_z one."""
    if z < 1:
        raise PointLineError(f"z must be >= 1, got {z}")
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    if z == 2:
        return np.ones(len(normals))
    return 1.0 / np.array([dual_norm(v, z) for v in normals])


def point_line_distance(p, line: Line, z: float = 2.0) -> float:
    """``min_{q on line} ||p - q||_z``.

    For a hyperplane the closest point in any norm gives ``|v^T p - b| / ||v||_{z*}``.
    """
    p = _vec2(p, "point")
    if z < 1:
        raise PointLineError(f"z must be >= 1, got {z}")
    r = abs(float(line.normal @ p) - line.offset)
    if z == 2:
        return r
    return r / dual_norm(line.normal, z)


def rotation_to_x_axis(v) -> np.ndarray:
    """Rotation ``M`` (det +1) with ``M v = (1, 0)``."""
    v = _vec2(v)
    if abs(math.hypot(v[0], v[1]) - 1.0) > 1e-9:
        raise PointLineError("rotation_to_x_axis expects a unit vector")
    return np.array([[v[0], v[1]], [-v[1], v[0]]])


def rigid_from_two_correspondences(p1, p2, q1, q2, rtol: float = 1e-9) -> Alignment:
    """The unique alignment with ``R p1 - t = q1`` and ``R p2 - t = q2``."""
    p1, p2, q1, q2 = (_vec2(x, "point") for x in (p1, p2, q1, q2))
    dp, dq = p2 - p1, q2 - q1
    lp, lq = math.hypot(*dp), math.hypot(*dq)
    if lp == 0.0:
        raise PointLineError("p1 and p2 coincide")
    if abs(lp - lq) > rtol * max(lp, lq):
        raise PointLineError(f"segment lengths differ: {lp} vs {lq}")
    # complex division dq / dp gives the rotation
    c = (dq[0] * dp[0] + dq[1] * dp[1]) / (lp * lq)
    s = (dq[1] * dp[0] - dq[0] * dp[1]) / (lp * lq)
    a = Alignment.from_cos_sin(c, s)
    return Alignment(a.rotation, a.rotation @ p1 - q1)


def line_intersection(l1: Line, l2: Line) -> np.ndarray:
    n1, n2 = l1.normal, l2.normal
    if abs(float(n1 @ n2)) > 1.0 - PARALLEL_TOL:
        raise ParallelLinesError("lines are parallel")
    det = n1[0] * n2[1] - n1[1] * n2[0]
    s = np.array(
        [
            (l1.offset * n2[1] - l2.offset * n1[1]) / det,
            (n1[0] * l2.offset - n2[0] * l1.offset) / det,
        ]
    )
    if not np.all(np.isfinite(s)):
        raise NumericalError("intersection is not finite")
    return s


class PairSet:
    """Ordered point-line pairs held as contiguous arrays.

    ``points`` is (n, 2); ``normals`` is (n, 2) with unit rows; ``offsets`` is (n,)
    and non-negative.
    """

    __slots__ = ("points", "normals", "offsets")

    def __init__(self, points, normals, offsets):
        P = np.array(points, dtype=float).reshape(-1, 2)
        V = np.array(normals, dtype=float).reshape(-1, 2)
        b = np.array(offsets, dtype=float).reshape(-1)
        if not (len(P) == len(V) == len(b)):
            raise PointLineError("points, normals and offsets must have equal length")
        if len(P) == 0:
            raise PointLineError("a pair set needs at least one pair")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(V)) and np.all(np.isfinite(b))):
            raise PointLineError("pair data must be finite")
        norms = np.hypot(V[:, 0], V[:, 1])
        if np.any(norms == 0):
            raise PointLineError("line normals must be non-zero")
        # leave rows that are already unit alone so normalising is idempotent
        norms = np.where(np.abs(norms - 1.0) <= UNIT_TOL, 1.0, norms)
        V = V / norms[:, None]
        b = b / norms
        neg = b < 0
        V[neg] *= -1
        b[neg] *= -1
        for a in (P, V, b):
            a.setflags(write=False)
        self.points, self.normals, self.offsets = P, V, b

    @classmethod
    def from_pairs(cls, pairs) -> "PairSet":
        pairs = list(pairs)
        if not pairs:
            raise PointLineError("a pair set needs at least one pair")
        return cls(
            [_vec2(p, "point") for p, _ in pairs],
            [l.normal for _, l in pairs],
            [l.offset for _, l in pairs],
        )

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i: int) -> tuple[np.ndarray, Line]:
        return self.points[i], Line(self.normals[i], self.offsets[i])

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def subset(self, idx) -> "PairSet":
        idx = np.asarray(idx)
        return PairSet(self.points[idx], self.normals[idx], self.offsets[idx])

    def rematch(self, perm) -> "PairSet":
        """Pairs ``(p_i, l_perm[i])``."""
        perm = np.asarray(perm)
        return PairSet(self.points, self.normals[perm], self.offsets[perm])

    @property
    def directions(self) -> np.ndarray:
        return np.column_stack([-self.normals[:, 1], self.normals[:, 0]])

    def scale(self) -> float:
        """A length scale for relative tolerances."""
        return float(max(1.0, np.abs(self.points).max(), self.offsets.max()))

    def residuals(self, a: Alignment) -> np.ndarray:
        """Signed ``v_i^T (R p_i - t) - b_i``."""
        moved = a.apply(self.points)
        return np.einsum("ij,ij->i", self.normals, moved) - self.offsets

    def distances(self, a: Alignment, z: float = 2.0) -> np.ndarray:
        return np.abs(self.residuals(a)) * distance_scale(self.normals, z)
