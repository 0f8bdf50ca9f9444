"""Minimising ``|a^T y - b|`` over unit vectors ``y`` and the related selectors."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateConstraintError, PointLineError

ANGLE_TOL = 1e-12
DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class CircleConstraint:
    """The function ``y -> |a^T y - b|`` on the unit circle. Stored with ``b >= 0``."""

    a: np.ndarray
    b: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        b = float(self.b)
        if a.shape != (2,) or not np.all(np.isfinite(a)) or not math.isfinite(b):
            raise PointLineError("constraint needs a finite 2-vector a and finite b")
        if b < 0:
            # (a, b) -> (-a, -b) maps the value at y to the value at -y
            a, b = -a, -b
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def degenerate(self) -> bool:
        return math.hypot(*self.a) <= DEGENERATE_TOL * max(1.0, self.b)

    def value(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.abs(y @ self.a - self.b)


def min_abs_affine_on_circle(c: CircleConstraint) -> np.ndarray:
    """All global minimisers, as rows of a (1, 2) or (2, 2) array."""
    na = math.hypot(c.a[0], c.a[1])
    if na == 0.0 or c.degenerate:
        raise DegenerateConstraintError("a = 0: every unit vector is optimal")
    ah = c.a / na
    if c.b >= na:
        return ah[None, :].copy()
    cr = c.b / na
    h = math.sqrt(max(1.0 - cr * cr, 0.0))
    perp = np.array([-ah[1], ah[0]])
    if h <= ANGLE_TOL:
        return (cr * ah)[None, :]
    return np.array([cr * ah + h * perp, cr * ah - h * perp])


def _dedupe_by_angle(Y: np.ndarray, tol: float = ANGLE_TOL) -> np.ndarray:
    if len(Y) <= 1:
        return Y
    ang = np.arctan2(Y[:, 1], Y[:, 0])
    order = np.argsort(ang, kind="stable")
    a = ang[order]
    keep = np.ones(len(a), dtype=bool)
    keep[1:] = np.diff(a) > tol
    # the wrap-around at +-pi
    if keep.sum() > 1 and (a[0] + 2 * math.pi) - a[-1] <= tol:
        keep[np.flatnonzero(keep)[-1]] = False
    kept = np.sort(order[keep])
    return Y[kept]


def candidate_unit_vectors(constraints: Sequence[CircleConstraint]) -> np.ndarray:
    """Union of the minimisers of every non-degenerate constraint, de-duplicated by angle.

    For every unit ``x`` some returned ``x'`` has ``|a_i.x' - b_i| <= 4 |a_i.x - b_i|`` for all i.
    """
    out = []
    for c in constraints:
        if not isinstance(c, CircleConstraint):
            c = CircleConstraint(*c)
        if c.degenerate:
            continue
        out.append(min_abs_affine_on_circle(c))
    if not out:
        raise DegenerateConstraintError("all constraints are degenerate")
    return _dedupe_by_angle(np.vstack(out))


@dataclass(frozen=True)
class PiecewiseFn:
    """A function described by its evaluator and the finite set of its local minima."""

    minima: tuple
    evaluator: Callable[[float], float]

    def __post_init__(self):
        m = tuple(sorted(float(x) for x in self.minima))
        if not all(math.isfinite(x) for x in m):
            raise PointLineError("minima must be finite")
        object.__setattr__(self, "minima", m)

    def __call__(self, x: float) -> float:
        return float(self.evaluator(x))

    def check_minima(self, radius: float = 1e-3, samples: int = 8, tol: float = 1e-12) -> bool:
        """Sampled check that each listed minimum is a local infimum."""
        offs = np.linspace(radius / samples, radius, samples)
        for m in self.minima:
            fm = self(m)
            for o in offs:
                if self(m - o) < fm - tol or self(m + o) < fm - tol:
                    return False
        return True


def simultaneous_approx_select(fns: Sequence[PiecewiseFn], x: float) -> float:
    """The minimum (over all ``fns``) nearest to ``x``; ties go to the smaller value."""
    pts = sorted({m for f in fns for m in f.minima})
    if not pts:
        raise PointLineError("the union of minima is empty")
    arr = np.asarray(pts)
    d = np.abs(arr - float(x))
    # arr is ascending and argmin returns the first hit, so ties pick the smaller value
    return float(arr[int(np.argmin(d))])
