"""Compiled inner loops for the collision quadrature.

Deposition uses a quadratic stencil per axis whose weights reproduce the
zeroth, first and second moments of the deposited point exactly.  The
stencil is the convex blend of the two 3-point rules centred on the
neighbouring nodes, switching over a narrow window around the half-cell
tie; the blend keeps the rule exactly symmetric under reflection of the
box (half-cell ties occur systematically for grid-aligned collision
geometry, and a hard nearest-node choice there would break the parity
and rotation symmetry of the assembled operator at the stencil-error
level).  Stencil nodes falling outside the box are dropped and their
signed weight accumulates into a leakage counter.

Pair sums run over unordered node pairs with the antipodal half of the
angular quadrature; both foldings are exact because the deposit points
are invariant under swapping the pair roles and under omega -> -omega.
"""

import numpy as np
from numba import njit

BTAB_SIZE = 2049
_TIE_HALFWIDTH = 1e-9


@njit(cache=True, inline="always")
def _bfold(btab, x):
    # linear interpolation of the folded kernel table on x = |uhat.omega| in [0,1]
    pos = x * (BTAB_SIZE - 1)
    i0 = int(pos)
    if i0 >= BTAB_SIZE - 1:
        return btab[BTAB_SIZE - 1]
    fr = pos - i0
    return btab[i0] * (1.0 - fr) + btab[i0 + 1] * fr


@njit(cache=True, inline="always")
def _axis_weights(t):
    """Blended quadratic weights on the four nodes n0-1 .. n0+2, n0 = floor(t)."""
    n0 = int(np.floor(t))
    x = t - n0
    if x < 0.5 - _TIE_HALFWIDTH:
        s = 0.0
    elif x > 0.5 + _TIE_HALFWIDTH:
        s = 1.0
    else:
        s = (x - (0.5 - _TIE_HALFWIDTH)) / (2.0 * _TIE_HALFWIDTH)
    a0 = 0.5 * (x * x - x)
    a1 = 1.0 - x * x
    a2 = 0.5 * (x * x + x)
    y = x - 1.0
    b0 = 0.5 * (y * y - y)
    b1 = 1.0 - y * y
    b2 = 0.5 * (y * y + y)
    one_s = 1.0 - s
    return n0, one_s * a0, one_s * a1 + s * b0, one_s * a2 + s * b1, s * b2


@njit(cache=True, inline="always")
def _dep2_vec(out, N, L, h, px, py, s):
    nx, wx0, wx1, wx2, wx3 = _axis_weights((px + L) / h - 0.5)
    ny, wy0, wy1, wy2, wy3 = _axis_weights((py + L) / h - 0.5)
    leak = 0.0
    for a in range(4):
        ia = nx + a - 1
        wa = wx0 if a == 0 else (wx1 if a == 1 else (wx2 if a == 2 else wx3))
        if wa == 0.0:
            continue
        for c in range(4):
            ic = ny + c - 1
            wc = wy0 if c == 0 else (wy1 if c == 1 else (wy2 if c == 2 else wy3))
            if wc == 0.0:
                continue
            ww = s * wa * wc
            if 0 <= ia < N and 0 <= ic < N:
                out[ia * N + ic] += ww
            else:
                leak += ww
    return leak


@njit(cache=True, inline="always")
def _dep2_mat(out, col, N, L, h, px, py, s):
    nx, wx0, wx1, wx2, wx3 = _axis_weights((px + L) / h - 0.5)
    ny, wy0, wy1, wy2, wy3 = _axis_weights((py + L) / h - 0.5)
    leak = 0.0
    for a in range(4):
        ia = nx + a - 1
        wa = wx0 if a == 0 else (wx1 if a == 1 else (wx2 if a == 2 else wx3))
        if wa == 0.0:
            continue
        for c in range(4):
            ic = ny + c - 1
            wc = wy0 if c == 0 else (wy1 if c == 1 else (wy2 if c == 2 else wy3))
            if wc == 0.0:
                continue
            ww = s * wa * wc
            if 0 <= ia < N and 0 <= ic < N:
                out[ia * N + ic, col] += ww
            else:
                leak += ww
    return leak


@njit(cache=True, inline="always")
def _interp2(psi, N, L, h, px, py):
    # transpose of _dep2_vec: blended quadratic interpolation, zero outside
    nx, wx0, wx1, wx2, wx3 = _axis_weights((px + L) / h - 0.5)
    ny, wy0, wy1, wy2, wy3 = _axis_weights((py + L) / h - 0.5)
    val = 0.0
    for a in range(4):
        ia = nx + a - 1
        if ia < 0 or ia >= N:
            continue
        wa = wx0 if a == 0 else (wx1 if a == 1 else (wx2 if a == 2 else wx3))
        for c in range(4):
            ic = ny + c - 1
            if ic < 0 or ic >= N:
                continue
            wc = wy0 if c == 0 else (wy1 if c == 1 else (wy2 if c == 2 else wy3))
            val += psi[ia * N + ic] * wa * wc
    return val


@njit(cache=True)
def gain_scan_2d(nodes, N, L, h, fv, gv, alpha, omh, wh, btab, pref, out):
    """Symmetrised gain of the pair (fv, gv); adds h^d-mass weights to out."""
    n = nodes.shape[0]
    c1 = 0.5 * (1.0 + alpha)
    Mh = omh.shape[0]
    leak = 0.0
    for j in range(n):
        vjx = nodes[j, 0]
        vjy = nodes[j, 1]
        fj = fv[j]
        gj = gv[j]
        for k in range(j + 1, n):
            wgt = fj * gv[k] + fv[k] * gj
            if wgt == 0.0:
                continue
            ux = nodes[k, 0] - vjx
            uy = nodes[k, 1] - vjy
            absu = np.sqrt(ux * ux + uy * uy)
            base = pref * absu * wgt
            inv = 1.0 / absu
            for m in range(Mh):
                dot = ux * omh[m, 0] + uy * omh[m, 1]
                s = base * wh[m] * _bfold(btab, abs(dot) * inv)
                cx = c1 * dot * omh[m, 0]
                cy = c1 * dot * omh[m, 1]
                leak += _dep2_vec(out, N, L, h, nodes[k, 0] - cx, nodes[k, 1] - cy, s)
                leak += _dep2_vec(out, N, L, h, vjx + cx, vjy + cy, s)
    return leak


@njit(cache=True)
def gain_columns_2d(nodes, N, L, h, Fv, alpha, omh, wh, btab, pref, out):
    """Matrix of g -> gain(g, Fv): column j collects the pair patterns
    against every partner k weighted by Fv[k]."""
    n = nodes.shape[0]
    c1 = 0.5 * (1.0 + alpha)
    Mh = omh.shape[0]
    leak = 0.0
    for j in range(n):
        vjx = nodes[j, 0]
        vjy = nodes[j, 1]
        Fj = Fv[j]
        for k in range(j + 1, n):
            Fk = Fv[k]
            if Fj == 0.0 and Fk == 0.0:
                continue
            ux = nodes[k, 0] - vjx
            uy = nodes[k, 1] - vjy
            absu = np.sqrt(ux * ux + uy * uy)
            base = pref * absu
            inv = 1.0 / absu
            for m in range(Mh):
                dot = ux * omh[m, 0] + uy * omh[m, 1]
                s = base * wh[m] * _bfold(btab, abs(dot) * inv)
                cx = c1 * dot * omh[m, 0]
                cy = c1 * dot * omh[m, 1]
                vpx = nodes[k, 0] - cx
                vpy = nodes[k, 1] - cy
                vqx = vjx + cx
                vqy = vjy + cy
                sj = s * Fk
                if sj != 0.0:
                    leak += _dep2_mat(out, j, N, L, h, vpx, vpy, sj)
                    leak += _dep2_mat(out, j, N, L, h, vqx, vqy, sj)
                sk = s * Fj
                if sk != 0.0:
                    leak += _dep2_mat(out, k, N, L, h, vpx, vpy, sk)
                    leak += _dep2_mat(out, k, N, L, h, vqx, vqy, sk)
    return leak


@njit(cache=True)
def weak_probe_2d(nodes, N, L, h, fv, gv, psi, alpha, omh, wh, btab, pref):
    """Symmetrised weak form against the node samples psi."""
    n = nodes.shape[0]
    c1 = 0.5 * (1.0 + alpha)
    Mh = omh.shape[0]
    total = 0.0
    for j in range(n):
        vjx = nodes[j, 0]
        vjy = nodes[j, 1]
        fj = fv[j]
        gj = gv[j]
        pj = psi[j]
        for k in range(j + 1, n):
            wgt = fj * gv[k] + fv[k] * gj
            if wgt == 0.0:
                continue
            ux = nodes[k, 0] - vjx
            uy = nodes[k, 1] - vjy
            absu = np.sqrt(ux * ux + uy * uy)
            base = pref * absu * wgt
            inv = 1.0 / absu
            psum = pj + psi[k]
            for m in range(Mh):
                dot = ux * omh[m, 0] + uy * omh[m, 1]
                s = base * wh[m] * _bfold(btab, abs(dot) * inv)
                cx = c1 * dot * omh[m, 0]
                cy = c1 * dot * omh[m, 1]
                pp = _interp2(psi, N, L, h, nodes[k, 0] - cx, nodes[k, 1] - cy)
                pq = _interp2(psi, N, L, h, vjx + cx, vjy + cy)
                total += s * (pp + pq - psum)
    return total


@njit(cache=True)
def pair_angular_2d(nodes, omh, wh, btab, out):
    """out[k,j] = |v_k - v_j| * sum_m wh[m] * bfold(|uhat.omega_m|)."""
    n = nodes.shape[0]
    Mh = omh.shape[0]
    for j in range(n):
        out[j, j] = 0.0
        for k in range(j + 1, n):
            ux = nodes[k, 0] - nodes[j, 0]
            uy = nodes[k, 1] - nodes[j, 1]
            absu = np.sqrt(ux * ux + uy * uy)
            inv = 1.0 / absu
            acc = 0.0
            for m in range(Mh):
                dot = ux * omh[m, 0] + uy * omh[m, 1]
                acc += wh[m] * _bfold(btab, abs(dot) * inv)
            val = absu * acc
            out[k, j] = val
            out[j, k] = val


@njit(cache=True, inline="always")
def _dep3_vec(out, N, L, h, px, py, pz, s):
    nx, wx0, wx1, wx2, wx3 = _axis_weights((px + L) / h - 0.5)
    ny, wy0, wy1, wy2, wy3 = _axis_weights((py + L) / h - 0.5)
    nz, wz0, wz1, wz2, wz3 = _axis_weights((pz + L) / h - 0.5)
    leak = 0.0
    for a in range(4):
        ia = nx + a - 1
        wa = wx0 if a == 0 else (wx1 if a == 1 else (wx2 if a == 2 else wx3))
        if wa == 0.0:
            continue
        for c in range(4):
            ic = ny + c - 1
            wc = wy0 if c == 0 else (wy1 if c == 1 else (wy2 if c == 2 else wy3))
            if wc == 0.0:
                continue
            wac = wa * wc
            for e in range(4):
                ie = nz + e - 1
                we = wz0 if e == 0 else (wz1 if e == 1 else (wz2 if e == 2 else wz3))
                if we == 0.0:
                    continue
                ww = s * wac * we
                if 0 <= ia < N and 0 <= ic < N and 0 <= ie < N:
                    out[(ia * N + ic) * N + ie] += ww
                else:
                    leak += ww
    return leak


@njit(cache=True, inline="always")
def _dep3_mat(out, col, N, L, h, px, py, pz, s):
    nx, wx0, wx1, wx2, wx3 = _axis_weights((px + L) / h - 0.5)
    ny, wy0, wy1, wy2, wy3 = _axis_weights((py + L) / h - 0.5)
    nz, wz0, wz1, wz2, wz3 = _axis_weights((pz + L) / h - 0.5)
    leak = 0.0
    for a in range(4):
        ia = nx + a - 1
        wa = wx0 if a == 0 else (wx1 if a == 1 else (wx2 if a == 2 else wx3))
        if wa == 0.0:
            continue
        for c in range(4):
            ic = ny + c - 1
            wc = wy0 if c == 0 else (wy1 if c == 1 else (wy2 if c == 2 else wy3))
            if wc == 0.0:
                continue
            wac = wa * wc
            for e in range(4):
                ie = nz + e - 1
                we = wz0 if e == 0 else (wz1 if e == 1 else (wz2 if e == 2 else wz3))
                if we == 0.0:
                    continue
                ww = s * wac * we
                if 0 <= ia < N and 0 <= ic < N and 0 <= ie < N:
                    out[(ia * N + ic) * N + ie, col] += ww
                else:
                    leak += ww
    return leak


@njit(cache=True, inline="always")
def _interp3(psi, N, L, h, px, py, pz):
    nx, wx0, wx1, wx2, wx3 = _axis_weights((px + L) / h - 0.5)
    ny, wy0, wy1, wy2, wy3 = _axis_weights((py + L) / h - 0.5)
    nz, wz0, wz1, wz2, wz3 = _axis_weights((pz + L) / h - 0.5)
    val = 0.0
    for a in range(4):
        ia = nx + a - 1
        if ia < 0 or ia >= N:
            continue
        wa = wx0 if a == 0 else (wx1 if a == 1 else (wx2 if a == 2 else wx3))
        for c in range(4):
            ic = ny + c - 1
            if ic < 0 or ic >= N:
                continue
            wc = wy0 if c == 0 else (wy1 if c == 1 else (wy2 if c == 2 else wy3))
            wac = wa * wc
            for e in range(4):
                ie = nz + e - 1
                if ie < 0 or ie >= N:
                    continue
                we = wz0 if e == 0 else (wz1 if e == 1 else (wz2 if e == 2 else wz3))
                val += psi[(ia * N + ic) * N + ie] * wac * we
    return val


@njit(cache=True)
def gain_scan_3d(nodes, N, L, h, fv, gv, alpha, omh, wh, btab, pref, out):
    n = nodes.shape[0]
    c1 = 0.5 * (1.0 + alpha)
    Mh = omh.shape[0]
    leak = 0.0
    for j in range(n):
        vjx = nodes[j, 0]
        vjy = nodes[j, 1]
        vjz = nodes[j, 2]
        fj = fv[j]
        gj = gv[j]
        for k in range(j + 1, n):
            wgt = fj * gv[k] + fv[k] * gj
            if wgt == 0.0:
                continue
            ux = nodes[k, 0] - vjx
            uy = nodes[k, 1] - vjy
            uz = nodes[k, 2] - vjz
            absu = np.sqrt(ux * ux + uy * uy + uz * uz)
            base = pref * absu * wgt
            inv = 1.0 / absu
            for m in range(Mh):
                dot = ux * omh[m, 0] + uy * omh[m, 1] + uz * omh[m, 2]
                s = base * wh[m] * _bfold(btab, abs(dot) * inv)
                cx = c1 * dot * omh[m, 0]
                cy = c1 * dot * omh[m, 1]
                cz = c1 * dot * omh[m, 2]
                leak += _dep3_vec(out, N, L, h, nodes[k, 0] - cx, nodes[k, 1] - cy,
                                  nodes[k, 2] - cz, s)
                leak += _dep3_vec(out, N, L, h, vjx + cx, vjy + cy, vjz + cz, s)
    return leak


@njit(cache=True)
def gain_columns_3d(nodes, N, L, h, Fv, alpha, omh, wh, btab, pref, out):
    n = nodes.shape[0]
    c1 = 0.5 * (1.0 + alpha)
    Mh = omh.shape[0]
    leak = 0.0
    for j in range(n):
        vjx = nodes[j, 0]
        vjy = nodes[j, 1]
        vjz = nodes[j, 2]
        Fj = Fv[j]
        for k in range(j + 1, n):
            Fk = Fv[k]
            if Fj == 0.0 and Fk == 0.0:
                continue
            ux = nodes[k, 0] - vjx
            uy = nodes[k, 1] - vjy
            uz = nodes[k, 2] - vjz
            absu = np.sqrt(ux * ux + uy * uy + uz * uz)
            base = pref * absu
            inv = 1.0 / absu
            for m in range(Mh):
                dot = ux * omh[m, 0] + uy * omh[m, 1] + uz * omh[m, 2]
                s = base * wh[m] * _bfold(btab, abs(dot) * inv)
                cx = c1 * dot * omh[m, 0]
                cy = c1 * dot * omh[m, 1]
                cz = c1 * dot * omh[m, 2]
                vpx = nodes[k, 0] - cx
                vpy = nodes[k, 1] - cy
                vpz = nodes[k, 2] - cz
                vqx = vjx + cx
                vqy = vjy + cy
                vqz = vjz + cz
                sj = s * Fk
                if sj != 0.0:
                    leak += _dep3_mat(out, j, N, L, h, vpx, vpy, vpz, sj)
                    leak += _dep3_mat(out, j, N, L, h, vqx, vqy, vqz, sj)
                sk = s * Fj
                if sk != 0.0:
                    leak += _dep3_mat(out, k, N, L, h, vpx, vpy, vpz, sk)
                    leak += _dep3_mat(out, k, N, L, h, vqx, vqy, vqz, sk)
    return leak


@njit(cache=True)
def weak_probe_3d(nodes, N, L, h, fv, gv, psi, alpha, omh, wh, btab, pref):
    n = nodes.shape[0]
    c1 = 0.5 * (1.0 + alpha)
    Mh = omh.shape[0]
    total = 0.0
    for j in range(n):
        vjx = nodes[j, 0]
        vjy = nodes[j, 1]
        vjz = nodes[j, 2]
        fj = fv[j]
        gj = gv[j]
        pj = psi[j]
        for k in range(j + 1, n):
            wgt = fj * gv[k] + fv[k] * gj
            if wgt == 0.0:
                continue
            ux = nodes[k, 0] - vjx
            uy = nodes[k, 1] - vjy
            uz = nodes[k, 2] - vjz
            absu = np.sqrt(ux * ux + uy * uy + uz * uz)
            base = pref * absu * wgt
            inv = 1.0 / absu
            psum = pj + psi[k]
            for m in range(Mh):
                dot = ux * omh[m, 0] + uy * omh[m, 1] + uz * omh[m, 2]
                s = base * wh[m] * _bfold(btab, abs(dot) * inv)
                cx = c1 * dot * omh[m, 0]
                cy = c1 * dot * omh[m, 1]
                cz = c1 * dot * omh[m, 2]
                pp = _interp3(psi, N, L, h, nodes[k, 0] - cx, nodes[k, 1] - cy,
                              nodes[k, 2] - cz)
                pq = _interp3(psi, N, L, h, vjx + cx, vjy + cy, vjz + cz)
                total += s * (pp + pq - psum)
    return total


@njit(cache=True)
def pair_angular_3d(nodes, omh, wh, btab, out):
    n = nodes.shape[0]
    Mh = omh.shape[0]
    for j in range(n):
        out[j, j] = 0.0
        for k in range(j + 1, n):
            ux = nodes[k, 0] - nodes[j, 0]
            uy = nodes[k, 1] - nodes[j, 1]
            uz = nodes[k, 2] - nodes[j, 2]
            absu = np.sqrt(ux * ux + uy * uy + uz * uz)
            inv = 1.0 / absu
            acc = 0.0
            for m in range(Mh):
                dot = ux * omh[m, 0] + uy * omh[m, 1] + uz * omh[m, 2]
                acc += wh[m] * _bfold(btab, abs(dot) * inv)
            val = absu * acc
            out[k, j] = val
            out[j, k] = val
