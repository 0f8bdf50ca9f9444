"""Candidate alignments that contain a per-pair 16-approximation of any alignment.

For every ordered pair ``(j, k)`` of non-parallel lines the frame is rotated so
``l_j`` is the x-axis and translated so ``l_j`` and ``l_k`` meet at the origin.
In that frame every placement with ``p_j`` on the x-axis and ``p_k`` on ``l_k``
is parametrised by one unit vector ``x``: ``p_j = P x``, ``p_k = Q x`` and a third
point ``p_l = Z x``. Minimising ``|n_l^T Z x - c_l|`` over the circle gives at
most two candidates per ``(l, side)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cost import CostSpec, Sum, kernel_codes
from .errors import ParallelLinesError, PointLineError
from .geometry import PARALLEL_TOL, Alignment, PairSet, _vec2, distance_scale

BRANCH_GENERAL = 0
BRANCH_PARALLEL = 1


@dataclass(frozen=True)
class ZConfig:
    P: np.ndarray
    Q: np.ndarray
    Z: np.ndarray


def triangle_side(p, q, z) -> int:
    """+1 if ``z`` is left of the directed line p->q, -1 if right, 0 if collinear."""
    p, q, z = _vec2(p), _vec2(q), _vec2(z)
    u, w = q - p, z - p
    cr = u[0] * w[1] - u[1] * w[0]
    return int(np.sign(cr))


def z_configs(v, p, q, z, side: int) -> ZConfig:
    """Matrices with ``p = P x``, ``q = Q x`` and ``z = Z x`` for a suitable unit ``x``.

    ``v`` is the unit direction of the second line through the origin; ``side`` is
    the orientation of the triangle ``(p, q, z)`` (see :func:`triangle_side`).
    """
    v, p, q, z = _vec2(v, "v"), _vec2(p), _vec2(q), _vec2(z)
    if side not in (1, -1):
        raise PointLineError("side must be +1 or -1")
    if abs(v[1]) <= PARALLEL_TOL:
        raise ParallelLinesError("v is parallel to the x-axis")
    r1 = math.hypot(*(p - q))
    if r1 == 0.0:
        raise PointLineError("p and q coincide")
    r2 = math.hypot(*(p - z))
    r3 = math.hypot(*(q - z))
    P = r1 * np.array([[v[0] / v[1], 1.0], [0.0, 0.0]])
    Q = P.T.copy()
    d1 = (r1**2 + r2**2 - r3**2) / (2.0 * r1)
    d2 = math.sqrt(abs(r2**2 - d1**2))
    R90 = np.array([[0.0, -1.0], [1.0, 0.0]])
    Z = P + (d1 / r1) * (Q - P) + side * (d2 / r1) * (R90 @ (Q - P))
    return ZConfig(P, Q, Z)


class CandidateSet:
    """Candidate alignments with their provenance.

    ``rot`` holds (cos, sin) rows, ``trans`` the translations, ``triples`` the
    (j, k, l) indices (``l = -1`` for the parallel branch), ``side`` is +1/-1 (0 for
    parallel) and ``branch`` is 0 (general) or 1 (parallel).
    """

    __slots__ = ("rot", "trans", "triples", "side", "branch")

    def __init__(self, rot, trans, triples, side, branch):
        self.rot = np.asarray(rot, dtype=float).reshape(-1, 2)
        self.trans = np.asarray(trans, dtype=float).reshape(-1, 2)
        self.triples = np.asarray(triples, dtype=np.int32).reshape(-1, 3)
        self.side = np.asarray(side, dtype=np.int8).reshape(-1)
        self.branch = np.asarray(branch, dtype=np.int8).reshape(-1)
        m = len(self.rot)
        if not (len(self.trans) == len(self.triples) == len(self.side) == len(self.branch) == m):
            raise PointLineError("candidate arrays must have equal length")

    @classmethod
    def from_alignments(cls, alignments) -> "CandidateSet":
        al = list(alignments)
        rot = [(a.rotation[0, 0], a.rotation[1, 0]) for a in al]
        trans = [a.translation for a in al]
        m = len(al)
        return cls(rot, trans, -np.ones((m, 3)), np.zeros(m), np.zeros(m))

    @classmethod
    def concat(cls, parts) -> "CandidateSet":
        parts = list(parts)
        if not parts:
            return cls(np.zeros((0, 2)), np.zeros((0, 2)), np.zeros((0, 3)), [], [])
        return cls(
            np.concatenate([p.rot for p in parts]),
            np.concatenate([p.trans for p in parts]),
            np.concatenate([p.triples for p in parts]),
            np.concatenate([p.side for p in parts]),
            np.concatenate([p.branch for p in parts]),
        )

    def __len__(self) -> int:
        return len(self.rot)

    def __getitem__(self, i: int) -> Alignment:
        c, s = self.rot[i]
        return Alignment.from_cos_sin(c, s, self.trans[i])

    def alignments(self):
        for i in range(len(self)):
            yield self[i]

    @property
    def thetas(self) -> np.ndarray:
        return np.arctan2(self.rot[:, 1], self.rot[:, 0])

    def to_records(self) -> list[dict]:
        th = self.thetas
        return [
            {
                "theta": float(th[i]),
                "tx": float(self.trans[i, 0]),
                "ty": float(self.trans[i, 1]),
                "j": int(self.triples[i, 0]),
                "k": int(self.triples[i, 1]),
                "l": int(self.triples[i, 2]),
                "branch": "parallel" if self.branch[i] == BRANCH_PARALLEL else "non-parallel",
            }
            for i in range(len(self))
        ]

    def to_json(self) -> str:
        return json.dumps(self.to_records())


def _check_input(A: PairSet):
    if not isinstance(A, PairSet):
        raise PointLineError("expected a PairSet")
    if len(A) < 3:
        raise PointLineError(f"need at least 3 pairs, got {len(A)}")


def _block(A: PairSet, j: int, D: np.ndarray) -> CandidateSet:
    rot, trans, prov = kernels.enumerate_block(j, A.points, A.normals, D, A.offsets)
    m = len(rot)
    triples = np.empty((m, 3), dtype=np.int32)
    triples[:, 0] = j
    triples[:, 1:] = prov[:, :2]
    branch = np.where(prov[:, 1] < 0, BRANCH_PARALLEL, BRANCH_GENERAL)
    return CandidateSet(rot, trans, triples, prov[:, 2], branch)


def iter_candidate_blocks(A: PairSet):
    """Yield the candidates grouped by first index ``j`` (ascending).

    Memory stays O(n^2) per block, which is what makes large ``n`` feasible.
    """
    _check_input(A)
    D = A.directions
    for j in range(len(A)):
        yield _block(A, j, D)


def align_candidates(A: PairSet) -> CandidateSet:
    """The full candidate set in (j, k, l, side) order."""
    return CandidateSet.concat(iter_candidate_blocks(A))


def max_candidates(n: int) -> int:
    return 4 * n * n * (n - 1) + n * n


def _weights_for(A: PairSet, spec: CostSpec, weights):
    if weights is None:
        return np.ones(len(A))
    if not isinstance(spec.outer, Sum):
        raise PointLineError("weights are only supported with the sum aggregate")
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape != (len(A),) or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise PointLineError("weights must be finite, non-negative and one per pair")
    return w


def candidate_costs(A: PairSet, C: CandidateSet, spec: CostSpec = CostSpec(), weights=None) -> np.ndarray:
    w = _weights_for(A, spec, weights)
    lk, lp, ok, tk = kernel_codes(spec)
    if len(C) == 0:
        return np.zeros(0)
    return kernels.candidate_costs(
        C.rot, C.trans, A.points, A.normals, A.offsets, distance_scale(A.normals, spec.z), w, lk, lp, ok, tk
    )


def best_candidate(A: PairSet, C: CandidateSet, spec: CostSpec = CostSpec(), weights=None) -> tuple[Alignment, float]:
    """Lowest-cost candidate; ties go to the first one."""
    if len(C) == 0:
        raise PointLineError("candidate set is empty")
    costs = candidate_costs(A, C, spec, weights)
    i = int(np.argmin(costs))
    return C[i], float(costs[i])


@dataclass
class ExhaustiveResult:
    alignment: Alignment
    cost: float
    triple: tuple
    branch: int
    n_candidates: int


def solve_exhaustive(A: PairSet, spec: CostSpec = CostSpec(), weights=None) -> ExhaustiveResult:
    """Enumerate and score all candidates block by block, keeping only the best.

    Gives the same answer as ``best_candidate(A, align_candidates(A), spec)``.
    """
    w = _weights_for(A, spec, weights)
    lk, lp, ok, tk = kernel_codes(spec)
    scale = distance_scale(A.normals, spec.z)
    best = None
    total = 0
    for blk in iter_candidate_blocks(A):
        total += len(blk)
        if len(blk) == 0:
            continue
        costs = kernels.candidate_costs(blk.rot, blk.trans, A.points, A.normals, A.offsets, scale, w, lk, lp, ok, tk)
        i = int(np.argmin(costs))
        if best is None or costs[i] < best[0]:
            best = (float(costs[i]), blk, i)
    if best is None:
        raise PointLineError("no candidate could be generated (all points coincide?)")
    cost, blk, i = best
    return ExhaustiveResult(blk[i], cost, tuple(int(x) for x in blk.triples[i]), int(blk.branch[i]), total)
