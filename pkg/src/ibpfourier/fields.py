"""
Fast evaluation of Coulomb-type potentials and their derivatives.

Two evaluators share one interface:

* ``CoulombField``: closed forms for 1/|p - center|.
* ``DensityField``: the grid quadrature  sum_c w_c / |p - c|  of a density,
  represented by a quintic spline of exact nodal values near the support and
  by Chebyshev equivalent sources far away.

``line_values`` evaluates d^order/dx_axis^order along many parallel lines
at once, which is the access pattern of iterated quadrature.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import scipy.fft
from numba import njit
from scipy.interpolate import make_interp_spline

SPLINE_MARGIN = 10        # unused nodes kept at each end of the spline box
NEAR_FACTOR = 4.0         # near box half width, in units of the source half width
MAX_SPLINE_NODES = 2.6e7  # memory guard for the nodal lattice
FAR_TOL = 1e-9            # target relative accuracy of the equivalent sources
N_SEG_CENTRAL = 20        # Chebyshev nodes on a central far segment
N_SEG_DYADIC = 18         # Chebyshev nodes on a dyadic far segment
N_LEVELS = 10


# ---------------------------------------------------------------------------
# derivative numerators of 1/|d|

@lru_cache(maxsize=None)
def derivative_numerator(multi_index: tuple) -> dict:
    """Homogeneous p with d^alpha (1/|d|) = p(d) / |d|^(1 + 2|alpha|).

    Built one derivative at a time:
    d/dx_j [p / r^(2n+1)] = (r^2 dp/dx_j - (2n+1) x_j p) / r^(2n+3).
    Returned as {exponent tuple: coefficient}.
    """
    dim = len(multi_index)
    poly = {(0,) * dim: 1.0}
    n = 0
    for axis, count in enumerate(multi_index):
        for _ in range(count):
            new: dict = {}
            for e, c in poly.items():
                # r^2 * dp/dx_j
                if e[axis] > 0:
                    de = list(e)
                    de[axis] -= 1
                    for m in range(dim):
                        ee = list(de)
                        ee[m] += 2
                        key = tuple(ee)
                        new[key] = new.get(key, 0.0) + c * e[axis]
                # -(2n+1) x_j p
                ee = list(e)
                ee[axis] += 1
                key = tuple(ee)
                new[key] = new.get(key, 0.0) - (2 * n + 1) * c
            poly = {k: v for k, v in new.items() if v != 0.0}
            n += 1
    return poly


def numerator_arrays(multi_index: tuple):
    """(exps[T, 3], coefs[T], order) for the numba kernels (2D padded to 3D)."""
    poly = derivative_numerator(tuple(int(m) for m in multi_index))
    exps = np.zeros((len(poly), 3), dtype=np.int64)
    coefs = np.zeros(len(poly))
    for t, (e, c) in enumerate(sorted(poly.items())):
        exps[t, : len(e)] = e
        coefs[t] = c
    return exps, coefs, int(sum(multi_index))


def line_numerator(order: int) -> np.ndarray:
    """Coefficients c_j of P(u, t2) = sum_j c_j u^(order-2j) t2^j along a line.

    Obtained from the 3D numerator of d^order/dx^order with (y, z) = (t, 0).
    """
    poly = derivative_numerator((order, 0, 0))
    out = np.zeros(order // 2 + 1)
    for (ex, ey, ez), c in poly.items():
        if ez == 0:
            out[ey // 2] += c
    return out


# ---------------------------------------------------------------------------
# numba kernels

@njit(cache=True)
def _point_sum(pts, src, w, exps, coefs, order, skip, out):
    nt = coefs.shape[0]
    px = np.empty(order + 1)
    py = np.empty(order + 1)
    pz = np.empty(order + 1)
    for q in range(pts.shape[0]):
        x = pts[q, 0]
        y = pts[q, 1]
        z = pts[q, 2]
        acc = 0.0
        for a in range(src.shape[0]):
            if a == skip[q]:
                continue
            dx = x - src[a, 0]
            dy = y - src[a, 1]
            dz = z - src[a, 2]
            inv2 = 1.0 / (dx * dx + dy * dy + dz * dz)
            s = math.sqrt(inv2)
            for e in range(order):
                s *= inv2
            px[0] = 1.0
            py[0] = 1.0
            pz[0] = 1.0
            for e in range(1, order + 1):
                px[e] = px[e - 1] * dx
                py[e] = py[e - 1] * dy
                pz[e] = pz[e - 1] * dz
            poly = 0.0
            for t in range(nt):
                poly += coefs[t] * px[exps[t, 0]] * py[exps[t, 1]] * pz[exps[t, 2]]
            acc += w[a] * poly * s
        out[q] = acc


@njit(cache=True)
def _point_sum_levels(pts, center, H, nlev, lev_ptr, src, w, exps, coefs, order, out):
    # far-field evaluation: pick the equivalent-source level from the inf-norm
    nt = coefs.shape[0]
    px = np.empty(order + 1)
    py = np.empty(order + 1)
    pz = np.empty(order + 1)
    for q in range(pts.shape[0]):
        x = pts[q, 0]
        y = pts[q, 1]
        z = pts[q, 2]
        v = max(abs(x - center[0]), abs(y - center[1]), abs(z - center[2]))
        lev = 0
        lim = 2.0 * H
        while v >= lim and lev < nlev - 1:
            lev += 1
            lim *= 2.0
        acc = 0.0
        for a in range(lev_ptr[lev], lev_ptr[lev + 1]):
            dx = x - src[a, 0]
            dy = y - src[a, 1]
            dz = z - src[a, 2]
            inv2 = 1.0 / (dx * dx + dy * dy + dz * dz)
            s = math.sqrt(inv2)
            for e in range(order):
                s *= inv2
            px[0] = 1.0
            py[0] = 1.0
            pz[0] = 1.0
            for e in range(1, order + 1):
                px[e] = px[e - 1] * dx
                py[e] = py[e - 1] * dy
                pz[e] = pz[e - 1] * dz
            poly = 0.0
            for t in range(nt):
                poly += coefs[t] * px[exps[t, 0]] * py[exps[t, 1]] * pz[exps[t, 2]]
            acc += w[a] * poly * s
        out[q] = acc


@njit(cache=True, fastmath=True)
def _line_sum(xs, ty, tz, src, w, a0, a1, pc, order, out):
    # out[i] = sum_a w_a P(u, t2) / r^(2 order + 1) along x with (y, z) = (ty, tz);
    # src columns are (along, transverse 1, transverse 2)
    nc = pc.shape[0]
    for i in range(xs.shape[0]):
        out[i] = 0.0
    for a in range(a0, a1):
        ey = ty - src[a, 1]
        ez = tz - src[a, 2]
        t2 = ey * ey + ez * ez
        qx = src[a, 0]
        wa = w[a]
        if nc == 1:
            c0 = wa * pc[0]
            for i in range(xs.shape[0]):
                u = xs[i] - qx
                inv2 = 1.0 / (u * u + t2)
                s = math.sqrt(inv2)
                for e in range(order):
                    s *= inv2
                if order % 2 == 1:
                    out[i] += c0 * u * s
                else:
                    out[i] += c0 * s
        elif nc == 2:
            c0 = wa * pc[0]
            c1 = wa * pc[1] * t2
            for i in range(xs.shape[0]):
                u = xs[i] - qx
                u2 = u * u
                inv2 = 1.0 / (u2 + t2)
                s = math.sqrt(inv2)
                for e in range(order):
                    s *= inv2
                p = c0 * u2 + c1
                if order % 2 == 1:
                    p *= u
                out[i] += p * s
        else:
            c0 = wa * pc[0]
            c1 = wa * pc[1] * t2
            c2 = wa * pc[2] * t2 * t2
            for i in range(xs.shape[0]):
                u = xs[i] - qx
                u2 = u * u
                inv2 = 1.0 / (u2 + t2)
                s = math.sqrt(inv2)
                for e in range(order):
                    s *= inv2
                p = (c0 * u2 + c1) * u2 + c2
                if order % 2 == 1:
                    p *= u
                out[i] += p * s


@njit(cache=True)
def _line_far(cheb, seg_ptr, seg_lo, seg_central, trans, T, H, nlev, lev_ptr,
              src, w, pc, order, vals):
    # values at the Chebyshev nodes of every far segment of every line
    nseg = seg_ptr.shape[0] - 1
    for f in range(trans.shape[0]):
        for s in range(nseg):
            if seg_central[s] and T[f] < H:
                continue
            v = max(seg_lo[s], T[f])
            lev = 0
            lim = 2.0 * H
            while v >= lim and lev < nlev - 1:
                lev += 1
                lim *= 2.0
            _line_sum(cheb[seg_ptr[s]:seg_ptr[s + 1]], trans[f, 0], trans[f, 1], src, w,
                      lev_ptr[lev], lev_ptr[lev + 1], pc, order,
                      vals[f, seg_ptr[s]:seg_ptr[s + 1]])


@njit(cache=True)
def _bspline_weights(t, n, d, out):
    # uniform B-spline weights of degree n at fractional offset t, differentiated d times
    m = n - d
    out[0] = 1.0
    for p in range(1, m + 1):
        prev = 0.0
        for r in range(p + 1):
            cr = out[r] if r < p else 0.0
            new = ((t + p - r) * prev + (r + 1 - t) * cr) / p
            prev = cr
            out[r] = new
    for p in range(m + 1, n + 1):
        prev = 0.0
        for r in range(p + 1):
            cr = out[r] if r < p else 0.0
            out[r] = prev - cr
            prev = cr


@njit(cache=True)
def _spline3(c, x0, h, pts, nu, out):
    wx = np.empty(6)
    wy = np.empty(6)
    wz = np.empty(6)
    scale = 1.0 / (h[0] ** nu[0] * h[1] ** nu[1] * h[2] ** nu[2])
    for q in range(pts.shape[0]):
        u = (pts[q, 0] - x0[0]) / h[0]
        i = int(math.floor(u))
        _bspline_weights(u - i, 5, nu[0], wx)
        v = (pts[q, 1] - x0[1]) / h[1]
        j = int(math.floor(v))
        _bspline_weights(v - j, 5, nu[1], wy)
        s = (pts[q, 2] - x0[2]) / h[2]
        k = int(math.floor(s))
        _bspline_weights(s - k, 5, nu[2], wz)
        acc = 0.0
        for a in range(6):
            sa = 0.0
            for b in range(6):
                sb = 0.0
                for e in range(6):
                    sb += wz[e] * c[i - 2 + a, j - 2 + b, k - 2 + e]
                sa += wy[b] * sb
            acc += wx[a] * sa
        out[q] = acc * scale


@njit(cache=True)
def _spline2(c, x0, h, pts, nu, out):
    wx = np.empty(6)
    wy = np.empty(6)
    scale = 1.0 / (h[0] ** nu[0] * h[1] ** nu[1])
    for q in range(pts.shape[0]):
        u = (pts[q, 0] - x0[0]) / h[0]
        i = int(math.floor(u))
        _bspline_weights(u - i, 5, nu[0], wx)
        v = (pts[q, 1] - x0[1]) / h[1]
        j = int(math.floor(v))
        _bspline_weights(v - j, 5, nu[1], wy)
        acc = 0.0
        for a in range(6):
            sa = 0.0
            for b in range(6):
                sa += wy[b] * c[i - 2 + a, j - 2 + b]
            acc += wx[a] * sa
        out[q] = acc * scale


# ---------------------------------------------------------------------------
# analytic cell integrals of 1/|q| (singular cell of the midpoint rule)

def _log_plus(a, r, b2):
    # log(a + r) with r = sqrt(a^2 + b2), stable for a < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        pos = np.log(np.where(a >= 0, a + r, 1.0))
        neg = np.log(np.where(a < 0, b2, 1.0)) - np.log(np.where(a < 0, r - a, 1.0))
    return np.where(a >= 0, pos, neg)


def _prim3(x, y, z):
    r = np.sqrt(x * x + y * y + z * z)
    out = np.zeros(np.broadcast(x, y, z).shape)
    for a, b, c in ((x, y, z), (y, z, x), (z, x, y)):
        bc = b * c
        lg = _log_plus(a, r, b * b + c * c)
        out = out + np.where(bc != 0, bc * np.where(bc != 0, lg, 0.0), 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            at = np.arctan(bc / (a * r))
        out = out - np.where(a != 0, 0.5 * a * a * np.where(a != 0, at, 0.0), 0.0)
    return out


def _prim2(x, y):
    r = np.sqrt(x * x + y * y)
    out = np.zeros(np.broadcast(x, y).shape)
    for a, b in ((x, y), (y, x)):
        lg = _log_plus(a, r, b * b)
        out = out + np.where(b != 0, b * np.where(b != 0, lg, 0.0), 0.0)
    return out


def cell_integral(offset, spacing):
    """Integral of 1/|q| over the cell  offset + [-h/2, h/2]^d  (vectorized over offsets)."""
    offset = np.atleast_2d(np.asarray(offset, dtype=float))
    h = np.asarray(spacing, dtype=float)
    lo = offset - h / 2
    hi = offset + h / 2
    d = offset.shape[1]
    total = np.zeros(offset.shape[0])
    for corner in np.ndindex(*(2,) * d):
        sign = (-1) ** (d - sum(corner))
        pt = [hi[:, i] if corner[i] else lo[:, i] for i in range(d)]
        total += sign * (_prim3(*pt) if d == 3 else _prim2(*pt))
    return total


# ---------------------------------------------------------------------------
# Chebyshev helpers

def cheb_nodes(n: int, a: float, b: float) -> np.ndarray:
    j = np.arange(n)
    return 0.5 * (a + b) + 0.5 * (b - a) * np.cos((2 * j + 1) * np.pi / (2 * n))[::-1]


def cheb_interp_matrix(nodes: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Barycentric Lagrange matrix L[i, j] = l_j(x_i) for first-kind Chebyshev nodes."""
    n = len(nodes)
    j = np.arange(n)[::-1]
    bw = (-1.0) ** j * np.sin((2 * j + 1) * np.pi / (2 * n))
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = bw[None, :] / diff
        L = t / t.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    if rows.any():
        L[rows] = exact[rows].astype(float)
    return L


def _levels_n(H: float, b: float, nlev: int, tol: float) -> list:
    ns = []
    for j in range(nlev):
        x0 = max(H * 2**j / max(b, 1e-300), 1.0 + 1e-9)
        rho = x0 + math.sqrt(x0 * x0 - 1.0)
        ns.append(int(min(16, max(3, math.ceil(math.log(1.0 / tol) / math.log(rho))))))
    return ns


# ---------------------------------------------------------------------------
# evaluators

def _pad3(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, points.shape[-1])
    if pts.shape[1] == 3:
        return np.ascontiguousarray(pts)
    out = np.zeros((pts.shape[0], 3))
    out[:, : pts.shape[1]] = pts
    return out


class CoulombField:
    """Closed-form 1/|p - center| with derivatives (no singularity handling)."""

    def __init__(self, center):
        self.center = np.asarray(center, dtype=float)
        self.dim = len(self.center)

    def evaluate(self, points, multi_index=None):
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        mi = tuple(multi_index) if multi_index is not None else (0,) * self.dim
        poly = derivative_numerator(mi)
        d = points.reshape(-1, self.dim) - self.center
        r2 = np.sum(d * d, axis=1)
        num = np.zeros(len(d))
        for e, c in poly.items():
            num += c * np.prod(d ** np.array(e), axis=1)
        return (num / r2 ** (0.5 + sum(mi))).reshape(shape)

    def line_values(self, axis: int, transverse, x, order: int = 0) -> np.ndarray:
        trans = np.atleast_2d(np.asarray(transverse, dtype=float))
        others = [i for i in range(self.dim) if i != axis]
        t2 = np.sum((trans - self.center[others]) ** 2, axis=1)[:, None]
        u = np.asarray(x, dtype=float)[None, :] - self.center[axis]
        pc = line_numerator(order)
        p = np.zeros(np.broadcast(u, t2).shape)
        for j, c in enumerate(pc):
            p = p + c * u ** (order - 2 * j) * t2**j
        return p / (u * u + t2) ** (0.5 + order)


class DensityField:
    """Grid quadrature sum_c w_c K(p - c) of a density, evaluated fast.

    Nodal values on the lattice extension of the grid come from an FFT
    convolution with the same singular-cell kernel as the direct rule, so
    spline and direct evaluation coincide at lattice nodes.
    """

    def __init__(self, grid, far_tol: float = FAR_TOL):
        self.grid = grid
        self.dim = grid.dimension
        vals = np.asarray(grid.values, dtype=float)
        h = np.asarray(grid.spacing, dtype=float)
        org = np.asarray(grid.origin, dtype=float)
        nz = np.argwhere(vals != 0)
        ilo = nz.min(axis=0)
        ihi = nz.max(axis=0)
        self.h = h
        self.center = org + 0.5 * (ilo + ihi) * h
        self.half = 0.5 * (ihi - ilo) * h
        b = float(max(self.half.max(), h.max()))
        self.b = b
        vol = float(np.prod(h))
        # near box: lattice indices m with |origin + m h - center| <= H
        H = NEAR_FACTOR * b
        while np.prod(2 * H / h + 2 * SPLINE_MARGIN + 1) > MAX_SPLINE_NODES:
            H *= 0.9
        self.H = H
        mlo = np.floor((self.center - H - org) / h).astype(int) - SPLINE_MARGIN
        mhi = np.ceil((self.center + H - org) / h).astype(int) + SPLINE_MARGIN
        nodes = self._nodal_values(vals[tuple(slice(a, b_ + 1) for a, b_ in zip(ilo, ihi))],
                                   ilo, ihi, mlo, mhi, h, vol)
        coords = [org[i] + np.arange(mlo[i], mhi[i] + 1) * h[i] for i in range(self.dim)]
        c = nodes
        for ax in range(self.dim):
            c = make_interp_spline(coords[ax], c, k=5, axis=ax).c
        self.coef = np.ascontiguousarray(c)
        self.x0 = np.array([cc[0] for cc in coords])
        # far field: Chebyshev equivalent sources per inf-norm level
        sub = vals[tuple(slice(a, b_ + 1) for a, b_ in zip(ilo, ihi))] * vol
        self.nlev = N_LEVELS
        self.level_n = _levels_n(H, b, N_LEVELS, far_tol)
        srcs, ws, ptr = [], [], [0]
        for n in self.level_n:
            pos, wt = self._equivalent_sources(sub, org + ilo * h, h, n)
            srcs.append(pos)
            ws.append(wt)
            ptr.append(ptr[-1] + len(wt))
        self.src = np.ascontiguousarray(np.concatenate(srcs))
        self.w = np.ascontiguousarray(np.concatenate(ws))
        self.lev_ptr = np.array(ptr, dtype=np.int64)

    # -- construction helpers -------------------------------------------------

    def _nodal_values(self, sub, ilo, ihi, mlo, mhi, h, vol):
        nw = ihi - ilo + 1
        nt = mhi - mlo + 1
        nk = nt + nw - 1
        omin = mlo - ihi
        axes = [(omin[i] + np.arange(nk[i])) * h[i] for i in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij", sparse=True)
        r2 = sum(m * m for m in mesh)
        with np.errstate(divide="ignore"):
            K = 1.0 / np.sqrt(r2)
        zero = tuple(-omin)
        K[zero] = cell_integral(np.zeros((1, self.dim)), h)[0] / vol
        K *= vol
        P = [scipy.fft.next_fast_len(int(n), real=True) for n in nk]
        spec = scipy.fft.rfftn(K, s=P)
        del K, r2
        spec *= scipy.fft.rfftn(sub, s=P)
        full = scipy.fft.irfftn(spec, s=P)
        del spec
        sl = tuple(slice(nw[i] - 1, nw[i] - 1 + nt[i]) for i in range(self.dim))
        return np.ascontiguousarray(full[sl])

    def _equivalent_sources(self, sub, org, h, n):
        pos_axes, mats = [], []
        for i in range(self.dim):
            x = org[i] + np.arange(sub.shape[i]) * h[i]
            a, b = self.center[i] - self.b, self.center[i] + self.b
            nodes = cheb_nodes(n, a, b)
            pos_axes.append(nodes)
            mats.append(cheb_interp_matrix(nodes, x))
        W = sub
        for i in range(self.dim):
            W = np.tensordot(W, mats[i], axes=([0], [0]))
        mesh = np.meshgrid(*pos_axes, indexing="ij")
        pos = np.zeros((W.size, 3))
        for i in range(self.dim):
            pos[:, i] = mesh[i].ravel()
        return pos, W.ravel()

    # -- evaluation -------------------------------------------------------------

    def _near_mask(self, pts):
        return np.all(np.abs(pts[:, : self.dim] - self.center) < self.H, axis=1)

    def _spline(self, pts, nu):
        out = np.empty(len(pts))
        if len(pts) == 0:
            return out
        nu = np.asarray(nu, dtype=np.int64)
        if self.dim == 3:
            _spline3(self.coef, self.x0, self.h, np.ascontiguousarray(pts[:, :3]), nu, out)
        else:
            _spline2(self.coef, self.x0, self.h, np.ascontiguousarray(pts[:, :2]), nu, out)
        return out

    def evaluate(self, points, multi_index=None):
        points = np.asarray(points, dtype=float)
        shape = points.shape[:-1]
        mi = tuple(multi_index) if multi_index is not None else (0,) * self.dim
        pts = _pad3(points)
        out = np.empty(len(pts))
        near = self._near_mask(pts)
        out[near] = self._spline(pts[near], mi)
        far = ~near
        if far.any():
            exps, coefs, order = numerator_arrays(mi)
            c3 = np.zeros(3)
            c3[: self.dim] = self.center
            tmp = np.empty(int(far.sum()))
            _point_sum_levels(np.ascontiguousarray(pts[far]), c3, self.H, self.nlev, self.lev_ptr,
                              self.src, self.w, exps, coefs, order, tmp)
            out[far] = tmp
        return out.reshape(shape)

    def _segments(self, xr):
        """Split relative abscissae into central and dyadic far segments."""
        H = self.H
        key = np.where(np.abs(xr) < H, 0, np.floor(np.log2(np.maximum(np.abs(xr), H) / H)) + 1)
        key = np.where(xr < 0, -key - 1, key)  # negative side keys are < 0
        segs = []
        for kv in np.unique(key):
            idx = np.flatnonzero(key == kv)
            j = int(kv) if kv >= 0 else int(-kv - 1)
            if j == 0:
                lo, hi, central = 0.0, H, True
            else:
                lo, hi, central = H * 2 ** (j - 1), H * 2**j, False
            if kv < 0:
                lo, hi = -hi, -lo
            segs.append((idx, lo, hi, central))
        return segs

    def line_values(self, axis: int, transverse, x, order: int = 0) -> np.ndarray:
        """d^order f / dx_axis^order on the lines {x_axis = x, others = transverse}.

        Far portions are sampled at Chebyshev nodes of fixed segments and
        interpolated to ``x``; the near box uses the spline directly.
        """
        trans = np.atleast_2d(np.asarray(transverse, dtype=float))
        x = np.asarray(x, dtype=float)
        others = [i for i in range(self.dim) if i != axis]
        tr = trans - self.center[others]
        T = np.max(np.abs(tr), axis=1) if tr.shape[1] else np.zeros(len(tr))
        xr = x - self.center[axis]
        F, N = len(trans), len(x)
        out = np.zeros((F, N))
        segs = self._segments(xr)
        cheb, ptr, lo_abs, central = [], [0], [], []
        for idx, lo, hi, cen in segs:
            n = N_SEG_CENTRAL if cen else N_SEG_DYADIC
            cheb.append(cheb_nodes(n, lo, hi))
            ptr.append(ptr[-1] + n)
            lo_abs.append(min(abs(lo), abs(hi)))
            central.append(cen)
        cheb = np.concatenate(cheb)
        # sources permuted so that column 0 is the line direction
        perm = [axis] + others + [i for i in range(3) if i >= self.dim]
        src = np.ascontiguousarray(self.src[:, perm] - np.concatenate([self.center[perm[: self.dim]], np.zeros(3 - self.dim)]))
        tr3 = np.zeros((F, 2))
        tr3[:, : tr.shape[1]] = tr
        vals = np.zeros((F, len(cheb)))
        _line_far(cheb, np.array(ptr, dtype=np.int64), np.array(lo_abs), np.array(central),
                  tr3, T, self.H, self.nlev, self.lev_ptr, src, self.w,
                  line_numerator(order), order, vals)
        for s, (idx, lo, hi, cen) in enumerate(segs):
            L = cheb_interp_matrix(cheb[ptr[s]:ptr[s + 1]], xr[idx])
            out[:, idx] = vals[:, ptr[s]:ptr[s + 1]] @ L.T
        near = np.flatnonzero(T < self.H)
        cidx = np.flatnonzero(np.abs(xr) < self.H)
        if len(near) and len(cidx):
            pts = np.zeros((len(near), len(cidx), 3))
            pts[:, :, axis] = x[cidx][None, :]
            for j, o in enumerate(others):
                pts[:, :, o] = trans[near, j][:, None]
            nu = [0] * self.dim
            nu[axis] = order
            sv = self._spline(pts.reshape(-1, 3), nu).reshape(len(near), len(cidx))
            out[np.ix_(near, cidx)] = sv
        return out
