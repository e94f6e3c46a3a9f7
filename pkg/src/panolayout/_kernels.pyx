# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Must stay numerically identical to _kernels_py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, ceil, floor, fabs, fmin, fmax, INFINITY

cnp.import_array()


def ray_cast(const double[::1] lon, const double[:, ::1] seg):
    cdef Py_ssize_t n = lon.shape[0], m = seg.shape[0], i, k
    cdef double dx, dz, ex, ez, px, pz, den, t, s, best
    cdef Py_ssize_t best_k
    dist_arr = np.empty(n, dtype=np.float64)
    idx_arr = np.empty(n, dtype=np.intp)
    cdef double[::1] dist = dist_arr
    cdef Py_ssize_t[::1] idx = idx_arr
    for i in range(n):
        dx = sin(lon[i])
        dz = cos(lon[i])
        best = INFINITY
        best_k = -1
        for k in range(m):
            px = seg[k, 0]
            pz = seg[k, 1]
            ex = seg[k, 2] - px
            ez = seg[k, 3] - pz
            den = dx * ez - dz * ex
            if den == 0.0:
                continue
            t = (px * ez - pz * ex) / den
            s = (px * dz - pz * dx) / den
            # endpoints get a little slack so rays aimed at a vertex do not slip through
            if t > 0.0 and s >= -1e-12 and s <= 1.0 + 1e-12 and t < best:
                best = t
                best_k = k
        dist[i] = best
        idx[i] = best_k
    return dist_arr, idx_arr


def coverage(const double[:, ::1] verts, double x0, double z0, double cx, double cz,
             Py_ssize_t nx, Py_ssize_t nz):
    """Exact per-cell area coverage by signed-area accumulation."""
    cdef Py_ssize_t m = verts.shape[0], k, y, ystart, yend, xi, xli, xri, i
    cdef double ax, az, bx, bz, d0, dxdy, x, xn, dy, d, xl, xr, xlf, xrc
    cdef double xmf, s, x0f, x1f, a0, am, a1, a2, acc
    acc_arr = np.zeros((nz, nx + 2), dtype=np.float64)
    cdef double[:, ::1] a = acc_arr
    for k in range(m):
        ax = (verts[k, 0] - x0) / cx
        az = (verts[k, 1] - z0) / cz
        bx = (verts[(k + 1) % m, 0] - x0) / cx
        bz = (verts[(k + 1) % m, 1] - z0) / cz
        if az == bz:
            continue
        if az < bz:
            d0 = 1.0
        else:
            d0 = -1.0
            ax, bx = bx, ax
            az, bz = bz, az
        dxdy = (bx - ax) / (bz - az)
        x = ax
        if az < 0.0:
            x -= az * dxdy
            ystart = 0
        else:
            ystart = <Py_ssize_t>floor(az)
        x = fmin(fmax(x, 0.0), <double>nx)
        yend = <Py_ssize_t>ceil(bz)
        if yend > nz:
            yend = nz
        for y in range(ystart, yend):
            dy = fmin(y + 1.0, bz) - fmax(<double>y, az)
            # rounding can push an interpolated x just outside the grid
            xn = fmin(fmax(x + dxdy * dy, 0.0), <double>nx)
            d = dy * d0
            if x < xn:
                xl = x
                xr = xn
            else:
                xl = xn
                xr = x
            xlf = floor(xl)
            xli = <Py_ssize_t>xlf
            xrc = ceil(xr)
            xri = <Py_ssize_t>xrc
            if xri <= xli + 1:
                xmf = 0.5 * (x + xn) - xlf
                a[y, xli] += d - d * xmf
                a[y, xli + 1] += d * xmf
            else:
                s = 1.0 / (xr - xl)
                x0f = xl - xlf
                a0 = 0.5 * s * (1.0 - x0f) * (1.0 - x0f)
                x1f = xr - xrc + 1.0
                am = 0.5 * s * x1f * x1f
                a[y, xli] += d * a0
                if xri == xli + 2:
                    a[y, xli + 1] += d * (1.0 - a0 - am)
                else:
                    a1 = s * (1.5 - x0f)
                    a[y, xli + 1] += d * (a1 - a0)
                    for xi in range(xli + 2, xri - 1):
                        a[y, xi] += d * s
                    a2 = a1 + (xri - xli - 3) * s
                    a[y, xri - 1] += d * (1.0 - a2 - am)
                a[y, xri] += d * am
            x = xn
    out_arr = np.empty((nz, nx), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    for y in range(nz):
        acc = 0.0
        for i in range(nx):
            acc += a[y, i]
            out[y, i] = fmin(fabs(acc), 1.0)
    return out_arr


def points_in_polygon(const double[:, ::1] pts, const double[:, ::1] verts):
    cdef Py_ssize_t n = pts.shape[0], m = verts.shape[0], i, k
    cdef double px, pz, xa, za, xb, zb
    cdef bint inside
    out_arr = np.zeros(n, dtype=bool)
    cdef cnp.npy_bool[::1] out = out_arr
    for i in range(n):
        px = pts[i, 0]
        pz = pts[i, 1]
        inside = False
        for k in range(m):
            xa = verts[k, 0]
            za = verts[k, 1]
            xb = verts[(k + 1) % m, 0]
            zb = verts[(k + 1) % m, 1]
            if (za > pz) != (zb > pz):
                if px < xa + (pz - za) * (xb - xa) / (zb - za):
                    inside = not inside
        out[i] = inside
    return out_arr
