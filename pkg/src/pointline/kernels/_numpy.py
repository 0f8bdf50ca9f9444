"""Vectorised numpy versions of the loop kernels in ``_numba.py``.

Outputs match the compiled kernels element for element, including ordering.
"""
import numpy as np

PARALLEL_TOL = 1e-12
REL_TOL = 1e-12

_CHUNK_ELEMS = 1 << 22


def _circle_min(ax, ay, c):
    """Vectorised unit minimisers of |a.y - c|. Returns (count, y1 (..., 2), y2 (..., 2))."""
    neg = c < 0
    ax = np.where(neg, -ax, ax)
    ay = np.where(neg, -ay, ay)
    c = np.abs(c)
    with np.errstate(divide="ignore", invalid="ignore"):
        na = np.sqrt(ax * ax + ay * ay)
        hx, hy = ax / na, ay / na
        full = c >= na
        cr = c / na
        h = np.sqrt(np.maximum(1.0 - cr * cr, 0.0))
    single = full | (h <= REL_TOL)
    cnt = np.where(single, 1, 2)
    y1x = np.where(full, hx, np.where(single, cr * hx, cr * hx - h * hy))
    y1y = np.where(full, hy, np.where(single, cr * hy, cr * hy + h * hx))
    y2x = cr * hx + h * hy
    y2y = cr * hy - h * hx
    return cnt, np.stack([y1x, y1y], -1), np.stack([y2x, y2y], -1)


def enumerate_block(j, P, N, D, B):
    n = P.shape[0]
    pjx, pjy = P[j, 0], P[j, 1]
    njx, njy = N[j, 0], N[j, 1]
    djx, djy = D[j, 0], D[j, 1]
    bj = B[j]
    idx = np.arange(n)

    wx, wy = P[:, 0] - pjx, P[:, 1] - pjy
    r1sq = wx * wx + wy * wy
    r1 = np.sqrt(r1sq)
    big = np.maximum(max(abs(pjx), abs(pjy)), np.maximum(np.abs(P[:, 0]), np.abs(P[:, 1])))
    okk = (idx != j) & ~(r1 <= REL_TOL * (1.0 + big))
    par = okk & (np.abs(djx * D[:, 0] + djy * D[:, 1]) > 1.0 - PARALLEL_TOL)
    gen = okk & ~par

    # slot grid (k, l, side, solution)
    mask = np.zeros((n, n, 2, 2), dtype=bool)
    cs = np.zeros((n, n, 2, 2))
    sn = np.zeros((n, n, 2, 2))
    tx = np.zeros((n, n, 2, 2))
    ty = np.zeros((n, n, 2, 2))

    if gen.any():
        with np.errstate(divide="ignore", invalid="ignore"):
            vx = djx * D[:, 0] + djy * D[:, 1]
            vy = djx * D[:, 1] - djy * D[:, 0]
            ratio = (vx / vy)[:, None]
            det = njx * N[:, 1] - njy * N[:, 0]
            sx = ((bj * N[:, 1] - B * njy) / det)[:, None]
            sy = ((njx * B - N[:, 0] * bj) / det)[:, None]
            ux, uy = (wx / r1)[:, None], (wy / r1)[:, None]
            R1 = r1[:, None]
            fx = (djx * N[:, 0] + djy * N[:, 1])[None, :]
            fy = (djx * N[:, 1] - djy * N[:, 0])[None, :]
            cl = B[None, :] - (N[None, :, 0] * sx + N[None, :, 1] * sy)
            zx, zy = P[:, 0] - pjx, P[:, 1] - pjy
            r2sq = (zx * zx + zy * zy)[None, :]
            gx = P[None, :, 0] - P[:, None, 0]
            gy = P[None, :, 1] - P[:, None, 1]
            r3sq = gx * gx + gy * gy
            d1 = (r1sq[:, None] + r2sq - r3sq) / (2.0 * R1)
            d2 = np.sqrt(np.abs(r2sq - d1 * d1))
            zscale = R1 * (1.0 + np.abs(ratio)) + np.abs(d1) + d2
        base = gen[:, None] & (idx[None, :] != j) & (idx[None, :] != idx[:, None])
        for si, side in enumerate((1.0, -1.0)):
            ok = base if si == 0 else base & ~(d2 <= REL_TOL * R1)
            with np.errstate(divide="ignore", invalid="ignore"):
                z00 = R1 * ratio - side * d2
                z01 = R1 - d1
                z10 = d1
                z11 = -side * d2
                ax = z00 * fx + z10 * fy
                ay = z01 * fx + z11 * fy
                ok = ok & ~(np.sqrt(ax * ax + ay * ay) <= REL_TOL * zscale)
                cnt, y1, y2 = _circle_min(ax, ay, cl)
                for e, y in enumerate((y1, y2)):
                    y0_, y1_ = y[..., 0], y[..., 1]
                    ix, iy = -y1_, y0_
                    qx = djx * ix - djy * iy
                    qy = djx * iy + djy * ix
                    c_ = qx * ux + qy * uy
                    s_ = qy * ux - qx * uy
                    X = R1 * (ratio * y0_ + y1_)
                    mask[:, :, si, e] = ok & (cnt > e)
                    cs[:, :, si, e] = c_
                    sn[:, :, si, e] = s_
                    tx[:, :, si, e] = c_ * pjx - s_ * pjy - (sx + X * djx)
                    ty[:, :, si, e] = s_ * pjx + c_ * pjy - (sy + X * djy)

    # parallel pairs (k, l=0, side=0), written last so the general grid cannot clobber them
    if par.any():
        q0x, q0y = bj * njx, bj * njy
        ax = N[:, 0] * wx + N[:, 1] * wy
        ay = N[:, 1] * wx - N[:, 0] * wy
        c = B - (N[:, 0] * q0x + N[:, 1] * q0y)
        cnt, y1, y2 = _circle_min(ax, ay, c)
        for e, y in enumerate((y1, y2)):
            m = par & (cnt > e)
            c_, s_ = y[:, 0], y[:, 1]
            mask[par, 0, 0, e] = m[par]
            cs[par, 0, 0, e] = c_[par]
            sn[par, 0, 0, e] = s_[par]
            tx[par, 0, 0, e] = (c_ * pjx - s_ * pjy - q0x)[par]
            ty[par, 0, 0, e] = (s_ * pjx + c_ * pjy - q0y)[par]

    flat = mask.reshape(-1)
    sel = np.flatnonzero(flat)
    k_i, l_i, s_i, _ = np.unravel_index(sel, mask.shape)
    rot = np.column_stack([cs.reshape(-1)[sel], sn.reshape(-1)[sel]])
    trans = np.column_stack([tx.reshape(-1)[sel], ty.reshape(-1)[sel]])
    is_par = par[k_i]
    prov = np.column_stack(
        [
            k_i,
            np.where(is_par, -1, l_i),
            np.where(is_par, 0, np.where(s_i == 0, 1, -1)),
        ]
    ).astype(np.int32)
    return rot, trans, prov.reshape(-1, 3)


def _lip(d, lip_kind, lip_param):
    if lip_kind == 0:
        if lip_param == 1.0:
            return d
        if lip_param == 2.0:
            return d * d
        return d**lip_param
    return np.minimum(d, lip_param)


def _residual_matrix(rot, trans, P, N, B):
    mx = rot[:, 0:1] * P[None, :, 0] - rot[:, 1:2] * P[None, :, 1] - trans[:, 0:1]
    my = rot[:, 1:2] * P[None, :, 0] + rot[:, 0:1] * P[None, :, 1] - trans[:, 1:2]
    return np.abs(N[None, :, 0] * mx + N[None, :, 1] * my - B[None, :])


def candidate_costs(rot, trans, P, N, B, scale, weights, lip_kind, lip_param, outer_kind, trim_k):
    C = rot.shape[0]
    n = P.shape[0]
    out = np.empty(C)
    keep = n - trim_k
    step = max(1, _CHUNK_ELEMS // max(n, 1))
    for a in range(0, C, step):
        b = min(C, a + step)
        d = _lip(_residual_matrix(rot[a:b], trans[a:b], P, N, B) * scale[None, :], lip_kind, lip_param)
        if outer_kind == 0:
            out[a:b] = d @ weights
        elif outer_kind == 1:
            out[a:b] = np.maximum(d.max(axis=1), 0.0)
        elif keep <= 0:
            out[a:b] = 0.0
        else:
            out[a:b] = np.partition(d, keep - 1, axis=1)[:, :keep].sum(axis=1)
    return out


def hungarian(M):
    """Same shortest-augmenting-path scheme as the compiled kernel, inner loop vectorised."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=np.int64)
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = np.flatnonzero(~used)
            cur = M[i0 - 1, free - 1] - u[i0] - v[free]
            better = cur < minv[free]
            minv[free[better]] = cur[better]
            way[free[better]] = j0
            pos = int(np.argmin(minv[free]))
            delta = minv[free[pos]]
            j1 = int(free[pos])
            uj = np.flatnonzero(used)
            u[p[uj]] += delta
            v[uj] -= delta
            minv[free] -= delta
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
    perm[p[1:] - 1] = np.arange(n)
    return perm


def matching_costs(rot, trans, P, N, B, scale, lip_kind, lip_param):
    C = rot.shape[0]
    n = P.shape[0]
    costs = np.empty(C)
    perms = np.empty((C, n), dtype=np.int64)
    for c in range(C):
        cs, sn = rot[c]
        moved = np.column_stack([cs * P[:, 0] - sn * P[:, 1], sn * P[:, 0] + cs * P[:, 1]]) - trans[c]
        M = _lip(np.abs(moved @ N.T - B[None, :]) * scale[None, :], lip_kind, lip_param)
        perm = hungarian(M)
        perms[c] = perm
        costs[c] = M[np.arange(n), perm].sum()
    return costs, perms
