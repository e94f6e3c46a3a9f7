"""Pure numpy implementations of the compiled kernels.

Results must match ``_kernels.pyx`` exactly; the parity tests enforce it.
"""

import math

import numpy as np


def ray_cast(lon, seg):
    """Nearest hit of horizontal rays from the origin against segments.

    ``seg`` rows are ``(x1, z1, x2, z2)``. Returns ``(dist, index)`` with
    ``inf`` / ``-1`` for rays that hit nothing.
    """
    lon = np.ascontiguousarray(lon, dtype=np.float64)
    seg = np.ascontiguousarray(seg, dtype=np.float64).reshape(-1, 4)
    dx = np.sin(lon)[:, None]
    dz = np.cos(lon)[:, None]
    px, pz = seg[:, 0], seg[:, 1]
    ex = seg[:, 2] - px
    ez = seg[:, 3] - pz
    den = dx * ez - dz * ex
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (px * ez - pz * ex) / den
        s = (px * dz - pz * dx) / den
    hit = (den != 0.0) & (t > 0.0) & (s >= -1e-12) & (s <= 1.0 + 1e-12)
    t = np.where(hit, t, np.inf)
    if seg.shape[0] == 0:
        return np.full(lon.shape, np.inf), np.full(lon.shape, -1, dtype=np.intp)
    k = np.argmin(t, axis=1)
    dist = t[np.arange(lon.size), k]
    idx = np.where(np.isfinite(dist), k, -1).astype(np.intp)
    return dist, idx


def coverage(verts, x0, z0, cx, cz, nx, nz):
    """Exact fraction of each grid cell covered by the polygon.

    Signed-area accumulation: every edge deposits the area it sweeps into
    the cells it crosses, and a running sum along each row turns those
    deposits into coverage.
    """
    verts = np.asarray(verts, dtype=np.float64)
    p = np.column_stack([(verts[:, 0] - x0) / cx, (verts[:, 1] - z0) / cz])
    a = np.zeros((nz, nx + 2))
    m = p.shape[0]
    for k in range(m):
        (ax, az), (bx, bz) = p[k], p[(k + 1) % m]
        if az == bz:
            continue
        d0 = 1.0
        if az > bz:
            d0 = -1.0
            ax, az, bx, bz = bx, bz, ax, az
        dxdy = (bx - ax) / (bz - az)
        x = ax
        if az < 0.0:
            x -= az * dxdy
            ystart = 0
        else:
            ystart = int(math.floor(az))
        x = min(max(x, 0.0), float(nx))
        for y in range(ystart, min(nz, int(math.ceil(bz)))):
            dy = min(y + 1.0, bz) - max(float(y), az)
            xn = min(max(x + dxdy * dy, 0.0), float(nx))
            d = dy * d0
            xl, xr = (x, xn) if x < xn else (xn, x)
            xlf = math.floor(xl)
            xli = int(xlf)
            xrc = math.ceil(xr)
            xri = int(xrc)
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
                    a[y, xli + 2:xri - 1] += d * s
                    a2 = a1 + (xri - xli - 3) * s
                    a[y, xri - 1] += d * (1.0 - a2 - am)
                a[y, xri] += d * am
            x = xn
    return np.minimum(np.abs(np.cumsum(a, axis=1)), 1.0)[:, :nx]


def points_in_polygon(pts, verts):
    pts = np.ascontiguousarray(pts, dtype=np.float64).reshape(-1, 2)
    verts = np.ascontiguousarray(verts, dtype=np.float64)
    xa, za = verts[:, 0], verts[:, 1]
    xb, zb = np.roll(xa, -1), np.roll(za, -1)
    px, pz = pts[:, 0:1], pts[:, 1:2]
    crosses = (za > pz) != (zb > pz)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = xa + (pz - za) * (xb - xa) / (zb - za)
    flips = crosses & (px < xc)
    return (np.count_nonzero(flips, axis=1) % 2) == 1
