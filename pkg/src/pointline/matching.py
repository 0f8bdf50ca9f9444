"""Alignment when the point-line correspondence is unknown."""
from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .cost import CostSpec, Sum, evaluate_cost, kernel_codes
from .errors import PointLineError
from .geometry import Alignment, PairSet, distance_scale

DEDUPE_TOL = 1e-10
DEFAULT_CAP = 8


def _check_perm(perm, n):
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise PointLineError("not a permutation")
    return perm


def hungarian(cost_matrix) -> np.ndarray:
    """Assignment ``perm`` (row i -> column perm[i]) minimising ``sum M[i, perm[i]]``."""
    M = np.asarray(cost_matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise PointLineError(f"cost matrix must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise PointLineError("cost matrix must be finite")
    return kernels.hungarian(M)


def _require_sum(spec: CostSpec):
    if not isinstance(spec.outer, Sum):
        raise PointLineError("matching is only defined for the sum aggregate")


def assignment_matrix(A: PairSet, a: Alignment, spec: CostSpec) -> np.ndarray:
    """``M[i, j] = lip(D_z(a(p_i), l_j))``."""
    moved = a.apply(A.points)
    D = np.abs(moved @ A.normals.T - A.offsets[None, :]) * distance_scale(A.normals, spec.z)[None, :]
    return spec.lip(D)


def optimal_matching(A: PairSet, a: Alignment, spec: CostSpec = CostSpec()) -> np.ndarray:
    _require_sum(spec)
    return hungarian(assignment_matrix(A, a, spec))


@dataclass(frozen=True)
class Exact:
    """Every 6-tuple of indices; guaranteed but O(n^9)."""

    cap: int = DEFAULT_CAP


@dataclass(frozen=True)
class Sampled:
    """``budget`` uniformly random 6-tuples; no guarantee."""

    budget: int = 1000
    seed: int | None = None


@dataclass
class MatchResult:
    alignment: Alignment
    permutation: np.ndarray
    cost: float
    mode: str = "exact"
    n_alignments: int = field(default=0, compare=False)

    def to_dict(self) -> dict:
        return {
            "theta": self.alignment.angle,
            "t": [float(x) for x in self.alignment.translation],
            "pi": [int(x) for x in self.permutation],
            "cost": float(self.cost),
            "mode": self.mode,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "MatchResult":
        a = Alignment.from_angle(float(d["theta"]), d["t"])
        return cls(a, np.asarray(d["pi"], dtype=np.int64), float(d["cost"]), d.get("mode", "exact"))


def _triple_sets(n: int):
    """Multisets of three (point, line) index pairs in lexicographic order.

    The candidate set of a 3-pair set does not depend on the order of its pairs, so
    iterating multisets covers all ordered 6-tuples without repetition.
    """
    cells = [(i, j) for i in range(n) for j in range(n)]
    return itertools.combinations_with_replacement(cells, 3)


def _canonical(tuples6):
    seen = set()
    out = []
    for t in tuples6:
        key = tuple(sorted(((int(t[0]), int(t[3])), (int(t[1]), int(t[4])), (int(t[2]), int(t[5])))))
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


def _pool(A: PairSet, triple_sets):
    rots, transes = [], []
    for cells in triple_sets:
        pi = [c[0] for c in cells]
        li = [c[1] for c in cells]
        P = A.points[pi]
        N = A.normals[li]
        B = A.offsets[li]
        D = np.column_stack([-N[:, 1], N[:, 0]])
        for j in range(3):
            rot, trans, _ = kernels.enumerate_block(j, P, N, D, B)
            if len(rot):
                rots.append(rot)
                transes.append(trans)
    if not rots:
        return np.zeros((0, 2)), np.zeros((0, 2))
    return np.concatenate(rots), np.concatenate(transes)


def dedupe_alignments(rot, trans, tol: float = DEDUPE_TOL):
    """Drop alignments whose (cos, sin, t) agree on a ``tol`` grid; first occurrence wins."""
    if len(rot) == 0:
        return rot, trans
    key = np.round(np.column_stack([rot, trans]) / tol)
    _, first = np.unique(key, axis=0, return_index=True)
    first.sort()
    return rot[first], trans[first]


def align_and_match(A: PairSet, spec: CostSpec = CostSpec(), mode=Exact()) -> MatchResult:
    _require_sum(spec)
    n = len(A)
    if n < 3:
        raise PointLineError(f"need at least 3 pairs, got {n}")
    if isinstance(mode, str):
        mode = {"exact": Exact(), "sampled": Sampled()}.get(mode)
        if mode is None:
            raise PointLineError("mode must be 'exact' or 'sampled'")
    if isinstance(mode, Exact):
        if n > mode.cap:
            raise PointLineError(f"exact matching is capped at n <= {mode.cap} (got {n})")
        if n > DEFAULT_CAP:
            warnings.warn(f"exact matching at n={n} runs O(n^9) triple solves", RuntimeWarning, stacklevel=2)
        sets = _triple_sets(n)
        tag = "exact"
    elif isinstance(mode, Sampled):
        if mode.budget < 1:
            raise PointLineError("budget must be >= 1")
        tag = "sampled"
        if mode.budget >= n**6:
            sets = _triple_sets(n)
        else:
            rng = np.random.default_rng(mode.seed)
            sets = _canonical(rng.integers(0, n, size=(mode.budget, 6)))
    else:
        raise PointLineError(f"unknown mode {mode!r}")

    rot, trans = dedupe_alignments(*_pool(A, sets))
    if len(rot) == 0:
        raise PointLineError("no candidate alignment could be generated")
    lk, lp, _, _ = kernel_codes(spec)
    costs, perms = kernels.matching_costs(
        rot, trans, A.points, A.normals, A.offsets, distance_scale(A.normals, spec.z), lk, lp
    )
    i = int(np.argmin(costs))
    a = Alignment.from_cos_sin(rot[i, 0], rot[i, 1], trans[i])
    return MatchResult(a, perms[i].copy(), float(costs[i]), tag, len(rot))


def matched_cost(A: PairSet, a: Alignment, perm, spec: CostSpec = CostSpec()) -> float:
    return evaluate_cost(A.rematch(_check_perm(perm, len(A))), a, spec)

