"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Set CYLMIMO_NO_NUMBA=1 in the environment to force the numpy path (useful
for debugging and as the baseline in benchmarks/bench_kernels.py).  Both
paths use identical summation orders, so each is individually deterministic.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLE = os.environ.get("CYLMIMO_NO_NUMBA", "").strip() not in ("", "0", "false")

if not _DISABLE:
    try:
        from numba import njit, prange
    except ImportError:  # pragma: no cover
        _DISABLE = True

if _DISABLE:  # pragma: no cover - exercised via env flag in the benchmark
    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return wrap

    prange = range


def using_numba():
    return not _DISABLE


# ---------------------------------------------------------------------------
# forward model


@njit(cache=True, fastmath=True)
def _simulate_nb(ks, tx_pos, rx_pos, scat_pos, scat_g, out):
    nk = ks.shape[0]
    nt = tx_pos.shape[0]
    nr = rx_pos.shape[0]
    ns = scat_pos.shape[0]
    for s in range(ns):
        sx, sy, sz = scat_pos[s, 0], scat_pos[s, 1], scat_pos[s, 2]
        g = scat_g[s]
        for t in range(nt):
            dxt = sx - tx_pos[t, 0]
            dyt = sy - tx_pos[t, 1]
            dzt = sz - tx_pos[t, 2]
            rt = np.sqrt(dxt * dxt + dyt * dyt + dzt * dzt)
            for r in range(nr):
                dxr = sx - rx_pos[r, 0]
                dyr = sy - rx_pos[r, 1]
                dzr = sz - rx_pos[r, 2]
                rr = np.sqrt(dxr * dxr + dyr * dyr + dzr * dzr)
                rtot = rt + rr
                for ik in range(nk):
                    ph = -ks[ik] * rtot
                    out[ik, t, r] += g * complex(np.cos(ph), np.sin(ph))


def _simulate_np(ks, tx_pos, rx_pos, scat_pos, scat_g, out):
    rt = np.linalg.norm(scat_pos[:, None, :] - tx_pos[None, :, :], axis=-1)  # (ns, nt)
    rr = np.linalg.norm(scat_pos[:, None, :] - rx_pos[None, :, :], axis=-1)  # (ns, nr)
    for s in range(scat_pos.shape[0]):  # fixed scatterer order
        rtot = rt[s][:, None] + rr[s][None, :]  # (nt, nr)
        out += scat_g[s] * np.exp(-1j * ks[:, None, None] * rtot[None, :, :])


def simulate_echo_flat(ks, tx_pos, rx_pos, scat_pos, scat_g):
    """Echo cube summed over point scatterers, shape (nk, n_tx, n_rx)."""
    out = np.zeros((len(ks), tx_pos.shape[0], rx_pos.shape[0]), dtype=np.complex128)
    if scat_pos.shape[0] == 0:
        return out
    fn = _simulate_np if _DISABLE else _simulate_nb
    fn(np.ascontiguousarray(ks, dtype=np.float64),
       np.ascontiguousarray(tx_pos, dtype=np.float64),
       np.ascontiguousarray(rx_pos, dtype=np.float64),
       np.ascontiguousarray(scat_pos, dtype=np.float64),
       np.ascontiguousarray(scat_g, dtype=np.complex128), out)
    return out


# ---------------------------------------------------------------------------
# backprojection


@njit(cache=True, fastmath=True, parallel=True)
def _bp_nb(data, k0, dk, tx_pos, rx_pos, points, out):
    nk = data.shape[0]
    nt = tx_pos.shape[0]
    nr = rx_pos.shape[0]
    npts = points.shape[0]
    for p in prange(npts):
        px, py, pz = points[p, 0], points[p, 1], points[p, 2]
        et = np.empty((nk, nt), dtype=np.complex128)
        er = np.empty((nk, nr), dtype=np.complex128)
        for t in range(nt):
            dx = px - tx_pos[t, 0]
            dy = py - tx_pos[t, 1]
            dz = pz - tx_pos[t, 2]
            rt = np.sqrt(dx * dx + dy * dy + dz * dz)
            w = complex(np.cos(k0 * rt), np.sin(k0 * rt))
            wd = complex(np.cos(dk * rt), np.sin(dk * rt))
            for ik in range(nk):
                et[ik, t] = w
                w *= wd
        for r in range(nr):
            dx = px - rx_pos[r, 0]
            dy = py - rx_pos[r, 1]
            dz = pz - rx_pos[r, 2]
            rr = np.sqrt(dx * dx + dy * dy + dz * dz)
            w = complex(np.cos(k0 * rr), np.sin(k0 * rr))
            wd = complex(np.cos(dk * rr), np.sin(dk * rr))
            for ik in range(nk):
                er[ik, r] = w
                w *= wd
        acc = 0.0 + 0.0j
        for ik in range(nk):
            for t in range(nt):
                inner = 0.0 + 0.0j
                for r in range(nr):
                    inner += data[ik, t, r] * er[ik, r]
                acc += inner * et[ik, t]
        out[p] = acc


def _bp_np(data, k0, dk, tx_pos, rx_pos, points, out):
    ks = k0 + dk * np.arange(data.shape[0])
    rt = np.linalg.norm(points[:, None, :] - tx_pos[None, :, :], axis=-1)  # (np, nt)
    rr = np.linalg.norm(points[:, None, :] - rx_pos[None, :, :], axis=-1)  # (np, nr)
    for ik, k in enumerate(ks):
        et = np.exp(1j * k * rt)
        er = np.exp(1j * k * rr)
        out += np.einsum("pt,tr,pr->p", et, data[ik], er)


def backproject_points(data, ks, tx_pos, rx_pos, points):
    """Matched-filter sum of data[ik, t, r] * exp(+j k (R_T + R_R)) per point.

    ks must be uniformly spaced (stepped-frequency grid).
    """
    ks = np.asarray(ks, dtype=np.float64)
    k0 = float(ks[0])
    dk = float(ks[1] - ks[0]) if len(ks) > 1 else 0.0
    out = np.zeros(points.shape[0], dtype=np.complex128)
    fn = _bp_np if _DISABLE else _bp_nb
    fn(np.ascontiguousarray(data, dtype=np.complex128), k0, dk,
       np.ascontiguousarray(tx_pos, dtype=np.float64),
       np.ascontiguousarray(rx_pos, dtype=np.float64),
       np.ascontiguousarray(points, dtype=np.float64), out)
    return out


# ---------------------------------------------------------------------------
# fused dimension-increase + polar interpolation + dimension reduction
#
# G5 holds G(k, theta_T, theta_R, k_zT, k_zR).  For each (izT, izR) pair and
# each parity class c (anti-diagonal cells kT_i + kR_j = k_n populate i, j of
# equal parity), the transmit (kT, theta_T) sub-grid is interpolated onto the
# shared Cartesian side grid, then the receive side, and results accumulate
# onto the summed (k_x, k_y, k_z) grid.  Interpolation weight tables are
# precomputed per vertical-wavenumber index and parity.


@njit(cache=True, fastmath=True)
def _fused_reduce_nb(g5, inv_m, it0, wit, tval, p0t, wpt,
                     jr0, wjr, rval, q0r, wqr,
                     nxy, nkx, nky, nj_by_class, out):
    nkzT = g5.shape[3]
    nkzR = g5.shape[4]
    n_theta_r = g5.shape[2]
    njmax = nj_by_class[0] if nj_by_class[0] > nj_by_class[1] else nj_by_class[1]
    tt = np.empty((nxy, njmax, n_theta_r), dtype=np.complex128)
    contrib = np.empty((nkx, nky), dtype=np.complex128)
    for izt in range(nkzT):
        for izr in range(nkzR):
            for c in range(2):
                nj = nj_by_class[c]
                if nj < 2:
                    continue
                # transmit-side interpolation at every (j node, theta_R)
                for txy in range(nxy):
                    if not tval[c, izt, txy]:
                        continue
                    i0 = it0[c, izt, txy]
                    wi = wit[c, izt, txy]
                    p0 = p0t[txy]
                    wp = wpt[txy]
                    for jj in range(nj):
                        j = c + 2 * jj
                        ia = c + 2 * i0
                        ib = ia + 2
                        na = (ia + j) >> 1
                        nb = (ib + j) >> 1
                        ma = inv_m[c, na]
                        mb = inv_m[c, nb]
                        for q in range(n_theta_r):
                            v = (wi * ma * (wp * g5[na, p0, q, izt, izr]
                                            + (1.0 - wp) * g5[na, p0 + 1, q, izt, izr])
                                 + (1.0 - wi) * mb * (wp * g5[nb, p0, q, izt, izr]
                                                      + (1.0 - wp) * g5[nb, p0 + 1, q, izt, izr]))
                            tt[txy, jj, q] = v
                # receive-side interpolation and accumulation
                izsum = izt + izr
                for rxy in range(nxy):
                    if not rval[c, izr, rxy]:
                        continue
                    jj0 = jr0[c, izr, rxy]
                    wj = wjr[c, izr, rxy]
                    q0 = q0r[rxy]
                    wq = wqr[rxy]
                    rx = rxy // nky
                    ry = rxy % nky
                    for txy in range(nxy):
                        if not tval[c, izt, txy]:
                            contrib[txy // nky, txy % nky] = 0.0
                            continue
                        v = (wj * (wq * tt[txy, jj0, q0]
                                   + (1.0 - wq) * tt[txy, jj0, q0 + 1])
                             + (1.0 - wj) * (wq * tt[txy, jj0 + 1, q0]
                                             + (1.0 - wq) * tt[txy, jj0 + 1, q0 + 1]))
                        contrib[txy // nky, txy % nky] = v
                    for tx in range(nkx):
                        for ty in range(nky):
                            out[tx + rx, ty + ry, izsum] += contrib[tx, ty]


def _fused_reduce_np(g5, inv_m, it0, wit, tval, p0t, wpt,
                     jr0, wjr, rval, q0r, wqr,
                     nxy, nkx, nky, nj_by_class, out):
    n_theta_r = g5.shape[2]
    nkzT, nkzR = g5.shape[3], g5.shape[4]
    for izt in range(nkzT):
        for izr in range(nkzR):
            izsum = izt + izr
            for c in range(2):
                nj = nj_by_class[c]
                if nj < 2:
                    continue
                jlist = c + 2 * np.arange(nj)
                i0 = it0[c, izt]  # (nxy,)
                wi = wit[c, izt]
                tv = tval[c, izt]
                ia = c + 2 * i0
                # (nxy, nj) source k indices for the two radial nodes
                na = (ia[:, None] + jlist[None, :]) >> 1
                nb = na + 1
                sl = g5[:, :, :, izt, izr]  # (nk, nthT, nthR)
                ga = sl[na, p0t[:, None], :]      # (nxy, nj, nthR)
                gb = sl[na, p0t[:, None] + 1, :]
                gc = sl[nb, p0t[:, None], :]
                gd = sl[nb, p0t[:, None] + 1, :]
                ma = inv_m[c][na][:, :, None]
                mb = inv_m[c][nb][:, :, None]
                wp = wpt[:, None, None]
                wiv = wi[:, None, None]
                tt = wiv * ma * (wp * ga + (1 - wp) * gb) + (1 - wiv) * mb * (wp * gc + (1 - wp) * gd)
                tt *= tv[:, None, None]

                jj0 = jr0[c, izr]
                wj = wjr[c, izr]
                rv = rval[c, izr]
                q0 = q0r
                a = tt[:, jj0, q0]        # (nxy_t, nxy_r)
                b = tt[:, jj0, q0 + 1]
                cc = tt[:, jj0 + 1, q0]
                d = tt[:, jj0 + 1, q0 + 1]
                wqv = wqr[None, :]
                wjv = wj[None, :]
                pairs = wjv * (wqv * a + (1 - wqv) * b) + (1 - wjv) * (wqv * cc + (1 - wqv) * d)
                pairs = pairs * rv[None, :]
                pairs = pairs.reshape(nkx, nky, nkx, nky)
                for rx in range(nkx):
                    for ry in range(nky):
                        out[rx:rx + nkx, ry:ry + nky, izsum] += pairs[:, :, rx, ry]


def fused_interp_reduce(g5, inv_m, tables_t, tables_r, nkx, nky, nkz_out):
    """Run the interpolation + reduction stage; returns (2nkx-1, 2nky-1, nkz_out).

    inv_m[c, n] is the reciprocal of the number of anti-diagonal cell pairs
    that replicate the sample at frequency index n within parity class c;
    scaling each replica by it keeps the reduction single-counted so the
    frequency band is not re-weighted by the replication multiplicity.
    """
    (it0, wit, tval, p0t, wpt, nj_by_class) = tables_t
    (jr0, wjr, rval, q0r, wqr, _) = tables_r
    nxy = nkx * nky
    out = np.zeros((2 * nkx - 1, 2 * nky - 1, nkz_out), dtype=np.complex128)
    fn = _fused_reduce_np if _DISABLE else _fused_reduce_nb
    fn(np.ascontiguousarray(g5, dtype=np.complex128),
       np.ascontiguousarray(inv_m, dtype=np.float64),
       it0, wit, tval, p0t, wpt, jr0, wjr, rval, q0r, wqr,
       nxy, nkx, nky, np.asarray(nj_by_class, dtype=np.int64), out)
    return out
