"""Slow, independent reference implementations used as test oracles."""
import itertools
import math

import numpy as np

from pointline.circle import CircleConstraint, min_abs_affine_on_circle
from pointline.geometry import (
    Alignment,
    PairSet,
    line_intersection,
    rigid_from_two_correspondences,
    rotation_to_x_axis,
)
from pointline.align import z_configs


def brute_force_assignment(M):
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    best, bestc = None, math.inf
    rows = np.arange(n)
    for p in itertools.permutations(range(n)):
        c = M[rows, list(p)].sum()
        if c < bestc:
            best, bestc = np.array(p), c
    return best, float(bestc)


def circle_grid(m=100_000):
    th = np.linspace(0, 2 * np.pi, m, endpoint=False)
    return np.column_stack([np.cos(th), np.sin(th)])


def reference_candidates(A: PairSet):
    """Literal construction: rotate the frame, call z_configs, solve on the circle, rebuild.

    Returns a list of (j, k, l, side, Alignment) for the non-parallel branch only.
    """
    out = []
    n = len(A)
    for j in range(n):
        pj, lj = A[j]
        M = rotation_to_x_axis(lj.direction)
        for k in range(n):
            if k == j:
                continue
            pk, lk = A[k]
            if np.linalg.norm(pk - pj) <= 1e-12:
                continue
            if abs(lj.direction @ lk.direction) > 1 - 1e-12:
                continue
            s = line_intersection(lj, lk)
            v = M @ lk.direction
            for l in range(n):
                if l in (j, k):
                    continue
                pl, ll = A[l]
                nl = M @ ll.normal
                cl = ll.offset - ll.normal @ s
                for side in (1, -1):
                    zc = z_configs(v, pj, pk, pl, side)
                    c = CircleConstraint(zc.Z.T @ nl, cl)
                    if c.degenerate:
                        continue
                    for x in min_abs_affine_on_circle(c):
                        qj = M.T @ (zc.P @ x) + s
                        qk = M.T @ (zc.Q @ x) + s
                        a = rigid_from_two_correspondences(pj, pk, qj, qk, rtol=1e-7)
                        out.append((j, k, l, side, a))
    return out


def parallel_brute_min(pj, lj, pk, lk, m=200_000):
    """min over rotations (with p_j pinned onto l_j) of dist(p_k, l_k), by dense grid + refinement."""
    q0 = lj.offset * lj.normal
    w = pk - pj

    def f(th):
        c, s = math.cos(th), math.sin(th)
        rw = np.array([c * w[0] - s * w[1], s * w[0] + c * w[1]])
        return abs(lk.normal @ (q0 + rw) - lk.offset)

    ths = np.linspace(0, 2 * np.pi, m, endpoint=False)
    vals = np.array([f(t) for t in ths[::50]])
    i = int(np.argmin(vals)) * 50
    lo, hi = ths[i] - 2 * np.pi * 60 / m, ths[i] + 2 * np.pi * 60 / m
    for _ in range(200):
        a, b = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if f(a) < f(b):
            hi = b
        else:
            lo = a
    return f(0.5 * (lo + hi))


def lms_oracle(A: PairSet, starts=64, seed=0):
    """Multistart scipy minimisation of the squared objective over (theta, t)."""
    from scipy.optimize import minimize

    V, P, b = A.normals, A.points, A.offsets

    def J(x):
        a = Alignment.from_angle(x[0], x[1:])
        r = np.einsum("ij,ij->i", V, a.apply(P)) - b
        return float(r @ r)

    rng = np.random.default_rng(seed)
    best = None
    for th in np.linspace(0, 2 * np.pi, starts, endpoint=False):
        x0 = np.array([th, *rng.normal(0, 20, 2)])
        res = minimize(J, x0, method="BFGS", options={"gtol": 1e-10})
        res = minimize(J, res.x, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    return float(best.fun), best.x


def planted_zero_instance(n, rng, motion=None):
    """Points exactly on random lines, then moved by a random rigid motion.

    Returns (PairSet, solution alignment).
    """
    V = rng.normal(size=(n, 2))
    V /= np.linalg.norm(V, axis=1)[:, None]
    b = rng.uniform(0, 10, n)
    P0 = rng.uniform(0, 100, (n, 2))
    P0 -= ((P0 * V).sum(1) - b)[:, None] * V
    if motion is None:
        motion = Alignment.from_angle(rng.uniform(0, 2 * np.pi), rng.uniform(-20, 20, 2))
    sol = motion.inverse()
    return PairSet(motion.apply(P0), V, b), sol


def random_pairset(n, rng, spread=100.0):
    V = rng.normal(size=(n, 2))
    V /= np.linalg.norm(V, axis=1)[:, None]
    return PairSet(rng.uniform(0, spread, (n, 2)), V, rng.uniform(0, 10, n))


def residual_matrix(C, A):
    """|v_i . (R_c p_i - t_c) - b_i| for every candidate c and pair i."""
    P, N, b = A.points, A.normals, A.offsets
    c, s = C.rot[:, 0:1], C.rot[:, 1:2]
    mx = c * P[:, 0] - s * P[:, 1] - C.trans[:, 0:1]
    my = s * P[:, 0] + c * P[:, 1] - C.trans[:, 1:2]
    return np.abs(N[:, 0] * mx + N[:, 1] * my - b)
