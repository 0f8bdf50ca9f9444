"""Loop kernels compiled with numba.

Every function here has a vectorised twin in ``_numpy.py`` with identical
semantics and output ordering.
"""
import math

import numpy as np
from numba import njit

# Keep these equal to the constants in _numpy.py.
PARALLEL_TOL = 1e-12
REL_TOL = 1e-12


@njit(cache=True, inline="always")
def _circle_min(ax, ay, c):
    """Unit minimisers of |a.y - c| (c may be negative). Returns (count, y1x, y1y, y2x, y2y)."""
    if c < 0.0:
        ax, ay, c = -ax, -ay, -c
    na = math.sqrt(ax * ax + ay * ay)
    hx, hy = ax / na, ay / na
    if c >= na:
        return 1, hx, hy, 0.0, 0.0
    cr = c / na
    h = math.sqrt(1.0 - cr * cr)
    if h <= REL_TOL:
        return 1, cr * hx, cr * hy, 0.0, 0.0
    return 2, cr * hx - h * hy, cr * hy + h * hx, cr * hx + h * hy, cr * hy - h * hx


@njit(cache=True)
def enumerate_block(j, P, N, D, B):
    """All candidates whose first index is ``j``, ordered by (k, l, side, solution).

    Returns ``(rot, trans, prov)`` where ``rot[:, 0:2]`` is (cos, sin), ``trans`` is t and
    ``prov`` holds (k, l, side). Parallel-branch rows have ``l = -1`` and ``side = 0``.
    """
    n = P.shape[0]
    cap = max(n - 1, 0) * (4 * max(n - 2, 0) + 2)
    rot = np.empty((cap, 2))
    trans = np.empty((cap, 2))
    prov = np.empty((cap, 3), dtype=np.int32)
    m = 0
    pjx, pjy = P[j, 0], P[j, 1]
    njx, njy = N[j, 0], N[j, 1]
    djx, djy = D[j, 0], D[j, 1]
    bj = B[j]
    for k in range(n):
        if k == j:
            continue
        pkx, pky = P[k, 0], P[k, 1]
        wx, wy = pkx - pjx, pky - pjy
        r1sq = wx * wx + wy * wy
        r1 = math.sqrt(r1sq)
        if r1 <= REL_TOL * (1.0 + max(abs(pjx), abs(pjy), abs(pkx), abs(pky))):
            continue
        nkx, nky = N[k, 0], N[k, 1]
        bk = B[k]
        dkx, dky = D[k, 0], D[k, 1]
        if abs(djx * dkx + djy * dky) > 1.0 - PARALLEL_TOL:
            # p_j pinned at the foot point of l_j, rotate about it to minimise dist(p_k, l_k)
            q0x, q0y = bj * njx, bj * njy
            ax = nkx * wx + nky * wy
            ay = nky * wx - nkx * wy
            c = bk - (nkx * q0x + nky * q0y)
            cnt, y1x, y1y, y2x, y2y = _circle_min(ax, ay, c)
            for e in range(cnt):
                cs, sn = (y1x, y1y) if e == 0 else (y2x, y2y)
                rot[m, 0] = cs
                rot[m, 1] = sn
                trans[m, 0] = cs * pjx - sn * pjy - q0x
                trans[m, 1] = sn * pjx + cs * pjy - q0y
                prov[m, 0] = k
                prov[m, 1] = -1
                prov[m, 2] = 0
                m += 1
            continue
        # working frame: l_j is the x-axis, l_j and l_k meet at the origin
        vx = djx * dkx + djy * dky
        vy = djx * dky - djy * dkx
        ratio = vx / vy
        det = njx * nky - njy * nkx
        sx = (bj * nky - bk * njy) / det
        sy = (njx * bk - nkx * bj) / det
        ux, uy = wx / r1, wy / r1
        for l in range(n):
            if l == j or l == k:
                continue
            nlx, nly = N[l, 0], N[l, 1]
            fx = djx * nlx + djy * nly
            fy = djx * nly - djy * nlx
            cl = B[l] - (nlx * sx + nly * sy)
            zx, zy = P[l, 0] - pjx, P[l, 1] - pjy
            r2sq = zx * zx + zy * zy
            gx, gy = P[l, 0] - pkx, P[l, 1] - pky
            r3sq = gx * gx + gy * gy
            d1 = (r1sq + r2sq - r3sq) / (2.0 * r1)
            d2 = math.sqrt(abs(r2sq - d1 * d1))
            zscale = r1 * (1.0 + abs(ratio)) + abs(d1) + d2
            for si in range(2):
                side = 1.0 if si == 0 else -1.0
                if si == 1 and d2 <= REL_TOL * r1:
                    break
                z00 = r1 * ratio - side * d2
                z01 = r1 - d1
                z10 = d1
                z11 = -side * d2
                ax = z00 * fx + z10 * fy
                ay = z01 * fx + z11 * fy
                if math.sqrt(ax * ax + ay * ay) <= REL_TOL * zscale:
                    continue
                cnt, y1x, y1y, y2x, y2y = _circle_min(ax, ay, cl)
                for e in range(cnt):
                    y0, y1 = (y1x, y1y) if e == 0 else (y2x, y2y)
                    # world direction of p_k - p_j is d_j * (i y); divide by u for the rotation
                    ix, iy = -y1, y0
                    qx = djx * ix - djy * iy
                    qy = djx * iy + djy * ix
                    cs = qx * ux + qy * uy
                    sn = qy * ux - qx * uy
                    X = r1 * (ratio * y0 + y1)
                    rot[m, 0] = cs
                    rot[m, 1] = sn
                    trans[m, 0] = cs * pjx - sn * pjy - (sx + X * djx)
                    trans[m, 1] = sn * pjx + cs * pjy - (sy + X * djy)
                    prov[m, 0] = k
                    prov[m, 1] = l
                    prov[m, 2] = int(side)
                    m += 1
    return rot[:m].copy(), trans[:m].copy(), prov[:m].copy()


@njit(cache=True, inline="always")
def _lip(d, lip_kind, lip_param):
    if lip_kind == 0:
        if lip_param == 1.0:
            return d
        if lip_param == 2.0:
            return d * d
        return d**lip_param
    return min(d, lip_param)


@njit(cache=True)
def candidate_costs(rot, trans, P, N, B, scale, weights, lip_kind, lip_param, outer_kind, trim_k):
    """Cost of every candidate alignment. outer_kind: 0 sum, 1 max, 2 trimmed sum."""
    C = rot.shape[0]
    n = P.shape[0]
    out = np.empty(C)
    buf = np.empty(n)
    keep = n - trim_k
    for c in range(C):
        cs, sn = rot[c, 0], rot[c, 1]
        tx, ty = trans[c, 0], trans[c, 1]
        acc = 0.0
        for i in range(n):
            mx = cs * P[i, 0] - sn * P[i, 1] - tx
            my = sn * P[i, 0] + cs * P[i, 1] - ty
            d = _lip(abs(N[i, 0] * mx + N[i, 1] * my - B[i]) * scale[i], lip_kind, lip_param)
            if outer_kind == 0:
                acc += weights[i] * d
            elif outer_kind == 1:
                if d > acc:
                    acc = d
            else:
                buf[i] = d
        if outer_kind == 2:
            acc = 0.0
            if keep > 0:
                buf.sort()
                for i in range(keep):
                    acc += buf[i]
        out[c] = acc
    return out


@njit(cache=True)
def hungarian(M):
    """Minimum-cost perfect assignment for a square matrix (shortest augmenting paths)."""
    n = M.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    minv = np.empty(n + 1)
    used = np.empty(n + 1, dtype=np.bool_)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv[:] = np.inf
        used[:] = False
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = M[i0 - 1, j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    perm = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        perm[p[j] - 1] = j - 1
    return perm


@njit(cache=True)
def matching_costs(rot, trans, P, N, B, scale, lip_kind, lip_param):
    """Optimal rematching cost and permutation for each candidate (sum aggregate)."""
    C = rot.shape[0]
    n = P.shape[0]
    costs = np.empty(C)
    perms = np.empty((C, n), dtype=np.int64)
    M = np.empty((n, n))
    for c in range(C):
        cs, sn = rot[c, 0], rot[c, 1]
        tx, ty = trans[c, 0], trans[c, 1]
        for i in range(n):
            mx = cs * P[i, 0] - sn * P[i, 1] - tx
            my = sn * P[i, 0] + cs * P[i, 1] - ty
            for j in range(n):
                M[i, j] = _lip(abs(N[j, 0] * mx + N[j, 1] * my - B[j]) * scale[j], lip_kind, lip_param)
        perm = hungarian(M)
        acc = 0.0
        for i in range(n):
            acc += M[i, perm[i]]
            perms[c, i] = perm[i]
        costs[c] = acc
    return costs, perms
