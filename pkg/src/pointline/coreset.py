"""Sensitivity-sampling coresets for weighted sums of point-line distances.

Every pair ``(p, l, w)`` lifts to a row ``s`` and every alignment to a vector
``x(R, t)`` with ``|x^T s| = w * dist(R p - t, l)``. The cost of an alignment is
therefore an l1 norm ``||S x||_1`` and the usual l1 sensitivity bounds apply.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PointLineError
from .geometry import Alignment, Line, PairSet, _vec2

D_VC = 7
# Calibrated so that eps = delta = 0.1 on 10^4 synthetic pairs draws about 500 samples.
DEFAULT_C = 1.5e-5
T_REF = math.sqrt(2.0) * 7**3.5


# ------------------------------------------------------------------ lifting


def lift_dim(d: int) -> int:
    return d * d + d + 1


def lift_pair(p, line: Line, w: float = 1.0) -> np.ndarray:
    """``w * (v_1 p | v_2 p | v | b)`` for a planar pair."""
    p = _vec2(p, "point")
    if not (w >= 0 and math.isfinite(w)):
        raise PointLineError("weight must be finite and >= 0")
    v, b = line.normal, line.offset
    return w * np.array([v[0] * p[0], v[0] * p[1], v[1] * p[0], v[1] * p[1], v[0], v[1], b])


def lift_rows(points, V, b, w=None) -> np.ndarray:
    """Lift pairs in any dimension ``d``.

    ``points`` is (n, d); ``V`` is (n, d-1, d) with orthonormal rows spanning the
    complement of each line's direction and ``b`` is (n, d-1), so that
    ``dist(q, l_i) = ||V_i q - b_i||``. Returns an (n*(d-1), d^2+d+1) matrix with the
    d-1 rows of pair i stored consecutively.
    """
    P = np.asarray(points, dtype=float)
    n, d = P.shape
    V = np.asarray(V, dtype=float).reshape(n, d - 1, d)
    b = np.asarray(b, dtype=float).reshape(n, d - 1)
    w = np.ones(n) if w is None else np.asarray(w, dtype=float).reshape(n)
    # kron of each normal row with p, then the normal itself, then the offset
    outer = (V[:, :, :, None] * P[:, None, None, :]).reshape(n, d - 1, d * d)
    S = np.concatenate([outer, V, b[:, :, None]], axis=2) * w[:, None, None]
    return S.reshape(n * (d - 1), d * d + d + 1)


def lift_pairset(A: PairSet, w=None) -> np.ndarray:
    return lift_rows(A.points, A.normals[:, None, :], A.offsets[:, None], w)


def alignment_lift(a: Alignment) -> np.ndarray:
    """``(R_1* | R_2* | -t | -1)``."""
    return alignment_lift_nd(a.rotation, a.translation)


def alignment_lift_nd(R, t) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    t = np.asarray(t, dtype=float).reshape(-1)
    return np.concatenate([R.reshape(-1), -t, [-1.0]])


# -------------------------------------------------------------- sensitivities


def orthonormal_basis(S: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis of the column space of ``S`` (rank decided by ``rtol``)."""
    U, sv, _ = np.linalg.svd(S, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        raise PointLineError("lifted matrix is identically zero")
    rank = int(np.sum(sv > rtol * sv[0]))
    return U[:, :rank]


def row_sensitivities(S: np.ndarray) -> np.ndarray:
    """Upper bounds on ``sup_x |x^T s_i| / sum_j |x^T s_j|`` for each row."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or len(S) == 0:
        raise PointLineError("need at least one lifted row")
    U = orthonormal_basis(S)
    return S.shape[1] * np.abs(U).sum(axis=1)


def sensitivities(S, rows_per_pair: int = 1, d: int = 2) -> tuple[np.ndarray, float]:
    """Per-pair sensitivities ``s'_i = sqrt(d) * sum_k s(s_ik)`` and their total."""
    s = row_sensitivities(S)
    if len(s) % rows_per_pair:
        raise PointLineError("row count is not a multiple of rows_per_pair")
    sp = math.sqrt(d) * s.reshape(-1, rows_per_pair).sum(axis=1)
    return sp, float(sp.sum())


# ------------------------------------------------------------------ coresets


class WeightedPairSet:
    __slots__ = ("pairs", "weights")

    def __init__(self, pairs: PairSet, weights=None):
        if not isinstance(pairs, PairSet):
            raise PointLineError("expected a PairSet")
        w = np.ones(len(pairs)) if weights is None else np.array(weights, dtype=float).reshape(-1)
        if w.shape != (len(pairs),):
            raise PointLineError("one weight per pair is required")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise PointLineError("weights must be finite and >= 0")
        w.setflags(write=False)
        self.pairs, self.weights = pairs, w

    def __len__(self):
        return len(self.pairs)

    def cost(self, a: Alignment) -> float:
        """Weighted sum of Euclidean distances."""
        return float(self.weights @ np.abs(self.pairs.residuals(a)))

    def subset(self, idx) -> "WeightedPairSet":
        idx = np.asarray(idx)
        return WeightedPairSet(self.pairs.subset(idx), self.weights[idx])

    @classmethod
    def concat(cls, parts) -> "WeightedPairSet":
        parts = [p for p in parts if len(p)]
        if not parts:
            raise PointLineError("nothing to concatenate")
        return cls(
            PairSet(
                np.concatenate([p.pairs.points for p in parts]),
                np.concatenate([p.pairs.normals for p in parts]),
                np.concatenate([p.pairs.offsets for p in parts]),
            ),
            np.concatenate([p.weights for p in parts]),
        )


@dataclass(frozen=True)
class SparseWeights:
    """Coreset weights ``u``: non-zero only at ``indices``.

    ``m`` is the number of draws; repeat draws share an index so ``nnz <= m``.
    """

    indices: np.ndarray
    values: np.ndarray
    n: int
    m: int

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def dense(self) -> np.ndarray:
        u = np.zeros(self.n)
        u[self.indices] = self.values
        return u

    def apply(self, A: WeightedPairSet | PairSet) -> WeightedPairSet:
        pairs = A.pairs if isinstance(A, WeightedPairSet) else A
        return WeightedPairSet(pairs.subset(self.indices), self.values)


def sample_size(t: float, eps: float, delta: float, c: float = DEFAULT_C, d_vc: int = D_VC) -> int:
    _check_eps_delta(eps, delta)
    if not c > 0:
        raise PointLineError("c must be > 0")
    return max(1, math.ceil(c * t / eps**2 * (d_vc * math.log(max(t, 2.0)) + math.log(1.0 / delta))))


def _check_eps_delta(eps, delta):
    if not 0 < eps < 1:
        raise PointLineError(f"eps must lie in (0, 1), got {eps}")
    if not 0 < delta < 1:
        raise PointLineError(f"delta must lie in (0, 1), got {delta}")


def build_coreset(
    A: WeightedPairSet | PairSet,
    eps: float = 0.1,
    delta: float = 0.1,
    c: float = DEFAULT_C,
    *,
    d_vc: int = D_VC,
    size: int | None = None,
    rng=None,
) -> SparseWeights:
    """Importance sample pairs with probability proportional to their sensitivity.

    ``size`` overrides the number of draws computed from (eps, delta, c).
    """
    if isinstance(A, PairSet):
        A = WeightedPairSet(A)
    _check_eps_delta(eps, delta)
    rng = np.random.default_rng(rng)
    n = len(A)
    w = A.weights
    live = np.flatnonzero(w > 0)
    if live.size == 0:
        return SparseWeights(np.zeros(0, dtype=np.int64), np.zeros(0), n, 0)
    S = lift_pairset(A.pairs.subset(live), w[live])
    sp = np.zeros(n)
    # rows with zero lifted vector get zero sensitivity and are never drawn
    sp[live], _ = sensitivities(S)
    t = float(sp.sum())
    m = int(size) if size is not None else sample_size(t, eps, delta, c, d_vc)
    if m < 1:
        raise PointLineError("sample size must be >= 1")
    counts = rng.multinomial(m, sp / t)
    idx = np.flatnonzero(counts)
    u = counts[idx] * t * w[idx] / (sp[idx] * m)
    return SparseWeights(idx.astype(np.int64), u, n, m)


# ---------------------------------------------------------------- streaming


@dataclass
class StreamState:
    """Merge-and-reduce tree over a stream of weighted pairs.

    A full buffer of ``leaf_size`` pairs becomes a level-0 bucket. Two buckets at
    the same level are merged and compressed to ``reduce_size`` draws, then carried
    to the next level, like incrementing a binary counter.
    """

    eps: float = 0.1
    delta: float = 0.1
    n_est: int = 10**6
    leaf_size: int | None = None
    eps_level: float | None = None
    c: float = DEFAULT_C
    seed: int | None = 0
    buffer: list = field(default_factory=list)
    buckets: dict = field(default_factory=dict)
    n_seen: int = 0
    peak_resident: int = 0

    def __post_init__(self):
        _check_eps_delta(self.eps, self.delta)
        self.levels_est = max(1, math.ceil(math.log2(max(self.n_est, 2))))
        if self.eps_level is None:
            self.eps_level = self.eps / (2 * self.levels_est)
        self.delta_level = self.delta / self.levels_est
        if self.leaf_size is None:
            self.leaf_size = 2 * sample_size(T_REF, self.eps_level, self.delta_level, self.c)
        if self.leaf_size < 2:
            raise PointLineError("leaf size must be >= 2")
        self.reduce_size = self.leaf_size // 2
        self._rng = np.random.default_rng(self.seed)

    @property
    def depth(self) -> int:
        return max(self.buckets, default=-1) + 1

    def resident(self) -> int:
        return len(self.buffer) + sum(len(b) for b in self.buckets.values())

    def error_bound(self) -> float:
        """Compounded relative error ``(1 + eps_level)^depth - 1`` of the current summary."""
        return (1.0 + self.eps_level) ** self.depth - 1.0

    def _flush(self):
        P = np.array([r[0] for r in self.buffer])
        V = np.array([r[1] for r in self.buffer])
        b = np.array([r[2] for r in self.buffer])
        w = np.array([r[3] for r in self.buffer])
        self.buffer = []
        self._carry(0, WeightedPairSet(PairSet(P, V, b), w))

    def _carry(self, level: int, bucket: WeightedPairSet):
        while level in self.buckets:
            merged = WeightedPairSet.concat([self.buckets.pop(level), bucket])
            sw = build_coreset(merged, self.eps_level, self.delta_level, self.c, size=self.reduce_size, rng=self._rng)
            bucket = sw.apply(merged)
            level += 1
        self.buckets[level] = bucket


def stream_insert(state: StreamState, pair) -> StreamState:
    """Add one ``(point, line, w)`` (or ``(point, line)``) to the stream."""
    if len(pair) == 3:
        p, l, w = pair
    else:
        (p, l), w = pair, 1.0
    p = _vec2(p, "point")
    if not isinstance(l, Line):
        l = Line(*l)
    w = float(w)
    if not (w >= 0 and math.isfinite(w)):
        raise PointLineError("weight must be finite and >= 0")
    state.buffer.append((p, l.normal, l.offset, w))
    state.n_seen += 1
    state.peak_resident = max(state.peak_resident, state.resident())
    if len(state.buffer) >= state.leaf_size:
        state._flush()
    return state


def stream_extend(state: StreamState, A: WeightedPairSet | PairSet) -> StreamState:
    if isinstance(A, PairSet):
        A = WeightedPairSet(A)
    P, V, b, w = A.pairs.points, A.pairs.normals, A.pairs.offsets, A.weights
    for i in range(len(A)):
        stream_insert(state, (P[i], Line(V[i], b[i]), w[i]))
    return state


def stream_coreset(state: StreamState) -> WeightedPairSet:
    parts = [state.buckets[k] for k in sorted(state.buckets)]
    if state.buffer:
        parts.append(
            WeightedPairSet(
                PairSet([r[0] for r in state.buffer], [r[1] for r in state.buffer], [r[2] for r in state.buffer]),
                [r[3] for r in state.buffer],
            )
        )
    if not parts:
        raise PointLineError("the stream is empty")
    return WeightedPairSet.concat(parts)


def merge_coresets(parts) -> WeightedPairSet:
    """Union of coresets built on disjoint data (e.g. independent streams)."""
    return WeightedPairSet.concat(parts)
