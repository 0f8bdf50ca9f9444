"""Reference solvers: least squares, adaptive RANSAC and the sampled candidate search."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .align import align_candidates, best_candidate
from .cost import MIN_HUBER, CostSpec
from .errors import PointLineError
from .geometry import Alignment, PairSet

LMS_GRID = 4096


# ---------------------------------------------------------------------- LMS


def _lms_profile(A: PairSet):
    """Return (K, pinv(V), X) with ``J*(theta) = q^T K q`` for ``q = (cos, sin, 1)``."""
    V, P, b = A.normals, A.points, A.offsets
    alpha = V[:, 0] * P[:, 0] + V[:, 1] * P[:, 1]
    beta = V[:, 1] * P[:, 0] - V[:, 0] * P[:, 1]
    X = np.column_stack([alpha, beta, -b])
    U, sv, Wt = np.linalg.svd(V, full_matrices=False)
    keep = sv > 1e-12 * max(sv[0], 1e-300)
    U = U[:, keep]
    M = X - U @ (U.T @ X)
    K = M.T @ M
    Vpinv = (Wt[keep].T / sv[keep]) @ U.T
    return K, Vpinv, X


def _J(K, th):
    q = np.stack([np.cos(th), np.sin(th), np.ones_like(th)])
    return np.einsum("i...,ij,j...->...", q, K, q)


def _dJ(K, th):
    c, s = math.cos(th), math.sin(th)
    a = K[1, 1] - K[0, 0]
    d1 = 2 * a * c * s + 2 * K[0, 1] * (c * c - s * s) - 2 * K[0, 2] * s + 2 * K[1, 2] * c
    d2 = 2 * a * (c * c - s * s) - 8 * K[0, 1] * c * s - 2 * K[0, 2] * c - 2 * K[1, 2] * s
    return d1, d2


def _newton(K, th, h):
    """Safeguarded Newton on J' inside [th - h, th + h]."""
    lo, hi = th - h, th + h
    for _ in range(60):
        g, H = _dJ(K, th)
        if g == 0.0:
            break
        if g > 0:
            hi = th
        else:
            lo = th
        step = g / H if H > 0 else 0.0
        nxt = th - step
        if not (H > 0 and lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - th) <= 1e-15 * max(1.0, abs(th)):
            th = nxt
            break
        th = nxt
    return th


def lms_align(A: PairSet, grid: int = LMS_GRID) -> Alignment:
    """Minimiser of ``sum_i (v_i^T (R p_i - t) - b_i)^2``.

    For a fixed angle the optimal ``t`` solves a linear least-squares problem, so the
    objective reduces to a trigonometric quadratic in theta, found by a dense grid
    plus Newton refinement. With all lines parallel the minimum-norm ``t`` is used.
    """
    if len(A) < 1:
        raise PointLineError("need at least one pair")
    K, Vpinv, X = _lms_profile(A)
    ths = np.linspace(0.0, 2 * math.pi, grid, endpoint=False)
    J = _J(K, ths)
    h = 2 * math.pi / grid
    # refine every grid-local minimum; the profile has at most two
    loc = np.flatnonzero((J <= np.roll(J, 1)) & (J <= np.roll(J, -1)))
    if loc.size == 0:
        loc = np.array([int(np.argmin(J))])
    loc = loc[np.argsort(J[loc])][:4]
    best_th, best_J = ths[loc[0]], J[loc[0]]
    for i in loc:
        th = _newton(K, ths[i], h)
        Jt = float(_J(K, np.array(th)))
        if Jt < best_J:
            best_th, best_J = th, Jt
    c, s = math.cos(best_th), math.sin(best_th)
    g = X @ np.array([c, s, 1.0])
    t = Vpinv @ g
    return Alignment.from_cos_sin(c, s, t)


def lms_cost(A: PairSet, a: Alignment) -> float:
    r = A.residuals(a)
    return float(r @ r)


# ------------------------------------------------------------------- RANSAC


@dataclass(frozen=True)
class RansacConfig:
    inlier_threshold: float = 10.0
    confidence: float = 0.99
    max_iterations: int = 10_000
    sample_size: int = 3
    seed: int | None = 0
    max_retries: int = 100

    def __post_init__(self):
        if not self.inlier_threshold > 0:
            raise PointLineError("inlier threshold must be > 0")
        if not 0 < self.confidence < 1:
            raise PointLineError("confidence must lie in (0, 1)")
        if self.max_iterations < 1:
            raise PointLineError("max_iterations must be >= 1")
        if self.sample_size < 3:
            raise PointLineError("sample size must be >= 3")


@dataclass
class RansacResult:
    alignment: Alignment
    inliers: int
    cost: float
    iterations: int
    history: list = field(default_factory=list)


def required_iterations(inlier_ratio: float, confidence: float, sample_size: int, cap: int) -> int:
    """Standard sample-consensus bound ``log(1 - conf) / log(1 - w^s)``, clamped to [1, cap]."""
    ws = inlier_ratio**sample_size
    if ws >= 1.0:
        return 1
    if ws <= 0.0:
        return cap
    m = math.log(1.0 - confidence) / math.log1p(-ws)
    return int(min(cap, max(1, math.ceil(m))))


def _hypotheses(A: PairSet, idx, base: str):
    sub = A.subset(idx)
    if base == "lms":
        return [lms_align(sub)]
    C = align_candidates(sub)
    return [C[i] for i in range(len(C))]


def _score(A: PairSet, a: Alignment, th: float):
    d = A.distances(a)
    return int(np.count_nonzero(d < th)), float(np.minimum(d, th).sum())


def ransac(A: PairSet, base: str = "lms", cfg: RansacConfig = RansacConfig()) -> RansacResult:
    """Adaptive RANSAC. ``base`` is ``"lms"`` or ``"approx"`` (every candidate of the sample is a hypothesis)."""
    if base not in ("lms", "approx"):
        raise PointLineError(f"unknown base solver {base!r}")
    n = len(A)
    if n < 3:
        raise PointLineError(f"need at least 3 pairs, got {n}")
    k = min(cfg.sample_size, n)
    rng = np.random.default_rng(cfg.seed)
    th = cfg.inlier_threshold
    best = None
    history = []
    limit = cfg.max_iterations
    it = 0
    failures = 0
    while it < limit:
        idx = np.sort(rng.choice(n, size=k, replace=False))
        hyps = _hypotheses(A, idx, base)
        if not hyps:
            failures += 1
            if failures > cfg.max_retries:
                break
            continue
        it += 1
        for a in hyps:
            cnt, cost = _score(A, a, th)
            if best is None or cnt > best[0] or (cnt == best[0] and cost < best[1]):
                best = (cnt, cost, a)
        history.append(best[0])
        limit = required_iterations(best[0] / n, cfg.confidence, k, cfg.max_iterations)
    if best is None:
        raise PointLineError("every RANSAC sample was degenerate")
    return RansacResult(best[2], best[0], best[1], it, history)


def adaptive_ransac(A: PairSet, base: str = "lms", cfg: RansacConfig = RansacConfig()) -> Alignment:
    return ransac(A, base, cfg).alignment


# ------------------------------------------------------------ fast approx


def icbrt_ceil(n: int) -> int:
    """Smallest integer r with r**3 >= n."""
    if n <= 0:
        return 0
    r = int(round(n ** (1.0 / 3.0)))
    while r**3 < n:
        r += 1
    while r > 0 and (r - 1) ** 3 >= n:
        r -= 1
    return r


def fast_approx_sample_size(n: int) -> int:
    return min(n, max(3, icbrt_ceil(n)))


def fast_approx_align(A: PairSet, spec: CostSpec = MIN_HUBER, rng=None, retries: int = 20) -> Alignment:
    """Candidates from ``ceil(n^(1/3))`` random pairs, scored on the whole set."""
    n = len(A)
    if n < 3:
        raise PointLineError(f"need at least 3 pairs, got {n}")
    rng = np.random.default_rng(rng)
    m = fast_approx_sample_size(n)
    for _ in range(retries):
        idx = np.sort(rng.choice(n, size=m, replace=False))
        C = align_candidates(A.subset(idx))
        if len(C):
            return best_candidate(A, C, spec)[0]
    raise PointLineError("could not draw a non-degenerate sample")


__all__ = [
    "lms_align",
    "lms_cost",
    "RansacConfig",
    "RansacResult",
    "required_iterations",
    "ransac",
    "adaptive_ransac",
    "icbrt_ceil",
    "fast_approx_sample_size",
    "fast_approx_align",
]
