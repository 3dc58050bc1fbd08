"""
Regularized improper Fourier integrals  lim_{r -> inf} int_{-r}^{r} f(x) e^{-ikx} dx.

After ``depth`` integrations by parts the integrand is (1/(ik))^depth f^(depth),
whose boundary terms vanish because each lower derivative decays.  The lifted
integral is computed by Gauss-Legendre panels on [a - R, a + R] (a is the
split point).  The two tails are continued analytically by further
integration by parts up to derivative order ``tail_order``, and the remainder
int_X^inf f^(tail_order) e^{-ikx} dx is bounded rigorously: by 2|g(X)|/|k|
where g is monotone (second mean value theorem), otherwise by the integral
of an envelope of |g|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np

from .kernels import DomainError, Fiber1D, KernelFunction, ZeroWaveNumberError, expand_fiber_at_infinity
from .normality import derivative_envelope, max_root_ratio
from .series_core import NEGATIVE, POSITIVE, decay_order_from_series, differentiate_series

GL_NODES = 8
TAIL_ORDER = 4
R0 = 16.0
MAX_RADIUS = 1024.0


@dataclass(frozen=True)
class QuadConfig:
    """Quadrature settings.

    ``ibp_depth = None`` selects 1 for 1D/2D kernels and 2 for 3D kernels.
    """

    target_tol: float = 1e-8
    max_radius: float = MAX_RADIUS
    panels_per_period: int = 8
    ibp_depth: Optional[int] = None
    split_point: float = 0.0
    r0: float = R0
    tail_order: int = TAIL_ORDER

    def __post_init__(self):
        if not self.target_tol > 0:
            raise ValueError("target_tol must be positive")
        if self.panels_per_period < 1:
            raise ValueError("panels_per_period must be >= 1")
        # GL_NODES nodes per panel: panels_per_period >= 1 already gives >= 8 nodes per period
        if self.ibp_depth is not None and not 0 <= self.ibp_depth <= 3:
            raise ValueError("ibp_depth must be in 0..3")
        if not 0 < self.r0 <= self.max_radius:
            raise ValueError("need 0 < r0 <= max_radius")
        if not 1 <= self.tail_order <= 4:
            raise ValueError("tail_order must be in 1..4")

    def depth_for(self, dimension: int) -> int:
        if self.ibp_depth is not None:
            return self.ibp_depth
        return 2 if dimension == 3 else 1

    def radii(self) -> list:
        out, r = [], self.r0
        while r <= self.max_radius * (1 + 1e-12):
            out.append(r)
            r *= 2
        return out


@dataclass(frozen=True)
class TransformResult:
    """Regularized transform with its error budget.

    ``trace`` holds (radius, value, bound) per truncation radius, where bound
    is the tail plus quadrature estimate at that radius.
    """

    value: complex
    error_estimate: float
    truncation_radius: float
    ibp_depth: int
    trace: tuple = ()
    converged: bool = True
    quad_error: float = 0.0
    tail_bound: float = 0.0
    k: float = math.nan

    def to_dict(self) -> dict:
        return {"value": [self.value.real, self.value.imag], "error_estimate": self.error_estimate,
                "truncation_radius": self.truncation_radius, "ibp_depth": self.ibp_depth,
                "converged": self.converged, "quad_error": self.quad_error,
                "tail_bound": self.tail_bound, "k": self.k,
                "trace": [[t[0], t[1].real, t[1].imag, t[2] if len(t) > 2 else None] for t in self.trace]}


@dataclass(frozen=True)
class LiftedIntegrand:
    """(1/(ik))^depth * f^(depth): what the quadrature actually integrates."""

    fiber: Fiber1D
    k: float
    depth: int
    prefactor: complex
    certificates: tuple = ()

    @property
    def derivative_order(self) -> int:
        return self.fiber.derivative_order + self.depth

    def __call__(self, x):
        return self.prefactor * self.fiber(x, self.derivative_order)


def ibp_lift(f: Fiber1D, k: float, depth: int) -> LiftedIntegrand:
    """Lift ``depth`` times, discharging each boundary term by a decay certificate.

    The certificate for f^(j), j < depth, is the leading order n >= 1 and
    constant of its series at infinity on both sides.
    """
    if k == 0:
        raise ZeroWaveNumberError("k = 0 is excluded: the transform needs a nonzero wave number")
    if not 0 <= depth <= 3:
        raise ValueError("depth must be in 0..3")
    if f.meets_exclusion():
        raise DomainError("fiber meets the excluded ball W")
    certs = []
    if depth:
        base = Fiber1D(f.parent, f.fixed_axes, f.free_axis, 0)
        for side in (POSITIVE, NEGATIVE):
            s = expand_fiber_at_infinity(base, side)
            for j in range(f.derivative_order + depth):
                if j >= f.derivative_order:
                    n, M = decay_order_from_series(s)
                    if n < 1:
                        raise ValueError("missing decay certificate for a lifted boundary term")
                    certs.append({"side": side, "derivative": j, "order": n, "constant": M,
                                  "threshold": 2.0 / s.radius})
                s = differentiate_series(s)
    return LiftedIntegrand(f, float(k), depth, (1.0 / (1j * k)) ** depth, tuple(certs))


def tail_bound(C: float, order: int, R: float, k: float, val_or_SR) -> float:
    """Cancellation bound for the truncated tail beyond R.

    ``val_or_SR`` is an integer val (normal case) or a pair (S, R_intervals)
    (quasi case).  Normal: 8 pi (val+1) C / (k^2 (order-1) R^(order-1));
    quasi: ((S+1) 4 pi/|k| + R_intervals) C / ((order-1) R^(order-1)).
    """
    if order < 2:
        raise ValueError("order must be >= 2")
    if not R > 1:
        raise ValueError("R must exceed 1")
    if k == 0:
        raise ZeroWaveNumberError("k must be nonzero")
    decay = C / ((order - 1) * R ** (order - 1))
    if isinstance(val_or_SR, (tuple, list)):
        S, Rint = val_or_SR
        return ((S + 1) * 4 * math.pi / abs(k) + Rint) * decay
    return 8 * math.pi * (int(val_or_SR) + 1) * decay / k**2


# ---------------------------------------------------------------------------
# panels

@lru_cache(maxsize=None)
def _gl(n: int = GL_NODES):
    x, w = np.polynomial.legendre.leggauss(n)
    # node values -> Legendre coefficients
    P = np.polynomial.legendre.legvander(x, n - 1)
    T = (P * w[:, None]).T * ((2 * np.arange(n) + 1) / 2)[:, None]
    return x, w, T


def gl_panels(edges):
    """Gauss-Legendre nodes (P, GL_NODES) and widths (P,) of the panels between edges."""
    edges = np.asarray(edges, dtype=float)
    lo, hi = np.minimum(edges[:-1], edges[1:]), np.maximum(edges[:-1], edges[1:])
    h = hi - lo
    xg = _gl()[0]
    return (0.5 * (lo + hi))[:, None] + 0.5 * h[:, None] * xg[None, :], h


def panel_estimate(vals, h):
    """Panel sums and error estimates for node values of shape (..., P, GL_NODES).

    The error is read off the decay of the trailing Legendre coefficients,
    floored at rounding level.
    """
    _, wg, Tleg = _gl()
    s = np.einsum("...pn,n,p->...p", vals, wg, 0.5 * h)
    c = np.einsum("mn,...pn->...pm", Tleg, vals)
    hi_c = np.maximum(np.abs(c[..., -1]), np.abs(c[..., -2]))
    lo_c = np.maximum(np.abs(c[..., -3]), np.abs(c[..., -4]))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.sqrt(np.where(lo_c > 0, hi_c / lo_c, 1.0))
    err = h * hi_c * np.minimum(1.0, r) ** (GL_NODES + 1)
    floor = np.finfo(float).eps * np.einsum("...pn,n,p->...p", np.abs(vals), wg, 0.5 * h)
    return s, np.maximum(err, floor)


class _LineGeometry:
    """Along-line scale and tail constants for a family of parallel lines."""

    def __init__(self, kernel: KernelFunction, axis: int, trans: np.ndarray):
        self.kernel = kernel
        self.axis = axis
        others = [i for i in range(kernel.dimension) if i != axis]
        if kernel.is_coulomb:
            self.ref = float(kernel.center[axis])
            off = trans - kernel.center[others] if others else np.zeros((len(trans), 0))
            self.tau = np.sqrt(np.sum(off**2, axis=1))
            if np.any(self.tau <= kernel.exclusion_radius):
                raise DomainError("line meets the excluded ball W")
            self.half = 0.0
            self.weight = 1.0
            self.min_scale = float(self.tau.min())
        else:
            M = kernel.support_radius
            T = np.sqrt(np.sum(trans**2, axis=1)) if others else np.zeros(len(trans))
            self.ref = 0.0
            self.half = M
            self.tau = np.maximum(T - M, 0.0)
            self.weight = float(np.sum(np.abs(kernel.grid.values)) * kernel.grid.cell_volume)
            self.min_scale = max(float(self.tau.min()), 0.5 * M)
        self.T = np.sqrt(np.sum((trans - (kernel.center[others] if kernel.is_coulomb else 0)) ** 2, axis=1)) \
            if others else np.zeros(len(trans))

    def scale(self, x):
        """Distance-like local length scale of the integrand."""
        d = np.maximum(np.abs(x - self.ref) - self.half, 0.0)
        return np.sqrt(d * d + self.min_scale**2)

    def remainder(self, X, side, order, gX, k):
        """Bound on |int_X^{+-inf} f^(order) e^{-ikx} dx| per line (arrays)."""
        U = (X - self.ref) * side - self.half
        out = np.full(len(self.tau), np.inf)
        ok = U > 0
        kap = derivative_envelope(order)
        # envelope integral: r >= (U + tau)/sqrt 2
        Ut = U + self.tau
        absb = kap * self.weight * 2 ** ((order + 1) / 2) / (order * Ut**order)
        out = np.where(ok, absb, out)
        # monotone beyond the zeros of the next derivative
        c = max_root_ratio(order + 1)
        if self.kernel.is_coulomb:
            mono = np.abs(X - self.ref) >= c * self.tau
            g = np.abs(gX)
        else:
            mono = U >= c * (self.T + self.half)
            g = kap * self.weight * 2 ** ((order + 1) / 2) / Ut ** (order + 1)
        out = np.where(ok & mono, np.minimum(out, 2 * g / abs(k)), out)
        return out


def _breakpoints(a: float, extent: float, wmax: float, geom: _LineGeometry, sign: int,
                 knots: Optional[np.ndarray] = None) -> np.ndarray:
    """Panel edges from a outward to a + sign*extent, width <= min(wmax, scale/2).

    Inside [knots[0], knots[-1]] the edges are the knots themselves, so that
    piecewise polynomial (spline) integrands are integrated panel by panel.
    """
    edges = [a]
    x = a
    end = a + sign * extent
    while (end - x) * sign > 1e-12:
        if knots is not None and knots[0] - 1e-12 <= x <= knots[-1] + 1e-12 and \
                not (x >= knots[-1] - 1e-12 and sign > 0) and not (x <= knots[0] + 1e-12 and sign < 0):
            i = np.searchsorted(knots, x + sign * 1e-12)
            nxt = knots[i] if sign > 0 else knots[i - 1]
        else:
            w = min(wmax, 0.5 * float(geom.scale(np.array([x]))[0]))
            # do not overshoot into a finer region
            w = min(w, 0.5 * float(geom.scale(np.array([x + sign * w]))[0]))
            nxt = x + sign * w
            if knots is not None and (knots[0] - x) * sign > 0 and (nxt - knots[0]) * sign > 0:
                nxt = knots[0]
            elif knots is not None and (knots[-1] - x) * sign > 0 and (nxt - knots[-1]) * sign > 0:
                nxt = knots[-1] if sign > 0 else knots[0]
        if (nxt - end) * sign > 0:
            nxt = end
        edges.append(nxt)
        x = nxt
    return np.array(edges)


def _spline_knots(field_, axis: int) -> Optional[np.ndarray]:
    """Knots of the near-field spline along ``axis`` (None for closed-form fields)."""
    if not hasattr(field_, "coef"):
        return None
    c, H = field_.center[axis], field_.H
    h, x0 = field_.h[axis], field_.x0[axis]
    m = np.arange(math.ceil((c - H - x0) / h), math.floor((c + H - x0) / h) + 1)
    inner = x0 + m * h
    inner = inner[(inner > c - H) & (inner < c + H)]
    return np.concatenate([[c - H], inner, [c + H]])


@dataclass
class LineTransforms:
    """Transforms of many parallel lines with a shared panel grid."""

    value: np.ndarray
    error: np.ndarray
    quad_error: np.ndarray
    tail: np.ndarray
    radius: np.ndarray
    converged: np.ndarray
    depth: int
    trace_radii: list = field(default_factory=list)
    trace_values: list = field(default_factory=list)
    trace_bounds: list = field(default_factory=list)


def line_transforms(kernel: KernelFunction, axis: int, transverse, k: float,
                    cfg: Optional[QuadConfig] = None, derivative_order: int = 0) -> LineTransforms:
    """Regularized transforms along ``axis`` for every row of ``transverse``.

    Lines share one panel grid; the radius grows (R_j = r0 * 2^j) until every
    line has converged or ``max_radius`` is reached.
    """
    if k == 0:
        raise ZeroWaveNumberError("k = 0 is excluded: the transform needs a nonzero wave number")
    cfg = cfg or QuadConfig()
    trans = np.atleast_2d(np.asarray(transverse, dtype=float))
    if kernel.dimension == 1:
        trans = np.zeros((max(len(trans), 1), 0))
    F = len(trans)
    depth = cfg.depth_for(kernel.dimension)
    d0 = derivative_order + depth
    D = max(cfg.tail_order, d0)
    pref = (1.0 / (1j * k)) ** depth
    field_ = kernel.field
    knots = None
    if hasattr(field_, "coef") and kernel.dimension > 1:
        others = [i for i in range(kernel.dimension) if i != axis]
        tinf = np.max(np.abs(trans - field_.center[others]), axis=1)
        near = tinf < field_.H
        if near.any() and not near.all():
            # lines through the spline box get knot-aligned panels; the rest do not
            parts = [line_transforms(kernel, axis, trans[m], k, cfg, derivative_order) for m in (near, ~near)]
            return _merge_families(parts, (near, ~near), F)
        if near.all():
            knots = _spline_knots(field_, axis)
    geom = _LineGeometry(kernel, axis, trans)
    a = cfg.split_point
    wmax = 2 * math.pi / abs(k) / cfg.panels_per_period
    radii = cfg.radii()
    right = _breakpoints(a, radii[-1], wmax, geom, +1, knots)
    left = _breakpoints(a, radii[-1], wmax, geom, -1, knots)
    def lines(x, order):
        return field_.line_values(axis, trans, x, order)

    def panel_sums(edges):
        x, h = gl_panels(edges)
        vals = lines(x.ravel(), d0).reshape(F, len(h), GL_NODES) * np.exp(-1j * k * x)[None]
        return panel_estimate(vals, h)

    def end_terms(X, side):
        # tail continuation by parts beyond X on the given side, then the remainder bound
        xs = np.array([X])
        vals = [lines(xs, o)[:, 0] for o in range(d0, D + 1)]
        ph = np.exp(-1j * k * X)
        corr = np.zeros(F, dtype=complex)
        for j in range(D - d0):
            corr += vals[j] * ph / (1j * k) ** (j + 1)
        corr *= side
        rem = geom.remainder(X, side, D, vals[-1], k) / abs(k) ** (D - d0)
        return corr, rem

    qsum = np.zeros(F, dtype=complex)
    qerr = np.zeros(F)
    pr = pl = 0  # panels consumed per side
    prev = None
    value = np.zeros(F, dtype=complex)
    error = np.full(F, np.inf)
    tail = np.full(F, np.inf)
    rad = np.zeros(F)
    done = np.zeros(F, dtype=bool)
    tr_r, tr_v, tr_b = [], [], []
    for R in radii:
        nr = int(np.searchsorted(right - a, R - 1e-9)) if right[-1] - a >= R - 1e-9 else len(right) - 1
        nl = int(np.searchsorted(a - left, R - 1e-9)) if a - left[-1] >= R - 1e-9 else len(left) - 1
        if nr > pr:
            s, e = panel_sums(right[pr:nr + 1])
            qsum += s.sum(axis=1)
            qerr += e.sum(axis=1)
            pr = nr
        if nl > pl:
            s, e = panel_sums(left[pl:nl + 1][::-1])
            qsum += s.sum(axis=1)
            qerr += e.sum(axis=1)
            pl = nl
        XR, XL = right[pr], left[pl]
        cR, rR = end_terms(XR, +1)
        cL, rL = end_terms(XL, -1)
        cur = pref * (qsum + cR + cL)
        tb = abs(pref) * (rR + rL)
        tr_r.append(min(XR - a, a - XL))
        tr_v.append(cur.copy())
        tr_b.append(tb + abs(pref) * qerr)
        if prev is not None:
            delta = np.abs(cur - prev)
            upd = ~done
            value[upd] = cur[upd]
            tail[upd] = tb[upd]
            error[upd] = tb[upd] + abs(pref) * qerr[upd] + delta[upd]
            rad[upd] = tr_r[-1]
            done |= (delta < cfg.target_tol / 2) & (tb < cfg.target_tol / 2)
            if done.all():
                break
        prev = cur
    return LineTransforms(value, error, abs(pref) * qerr, tail, rad, done, depth, tr_r, tr_v, tr_b)


def _merge_families(parts, masks, F):
    out = LineTransforms(np.zeros(F, dtype=complex), np.zeros(F), np.zeros(F), np.zeros(F), np.zeros(F),
                         np.zeros(F, dtype=bool), parts[0].depth)
    for p, m in zip(parts, masks):
        for name in ("value", "error", "quad_error", "tail", "radius", "converged"):
            getattr(out, name)[m] = getattr(p, name)
    # traces are only kept for single-geometry families
    return out


def fourier_integral_1d(f: Fiber1D, k: float, cfg: Optional[QuadConfig] = None) -> TransformResult:
    """Regularized transform of one fiber (its derivative_order is honored)."""
    cfg = cfg or QuadConfig()
    if k == 0:
        raise ZeroWaveNumberError("k = 0 is excluded: the transform needs a nonzero wave number")
    depth = cfg.depth_for(f.parent.dimension)
    ibp_lift(f, k, depth)
    lt = line_transforms(f.parent, f.free_axis, f.transverse[None, :], k, cfg, f.derivative_order)
    n = len(lt.trace_radii)
    # trace stops where this line converged
    last = next((i for i, r in enumerate(lt.trace_radii) if r >= lt.radius[0] - 1e-9), n - 1)
    trace = tuple((float(lt.trace_radii[i]), complex(lt.trace_values[i][0]), float(lt.trace_bounds[i][0]))
                  for i in range(last + 1))
    return TransformResult(complex(lt.value[0]), float(lt.error[0]), float(lt.radius[0]), lt.depth,
                           trace, bool(lt.converged[0]), float(lt.quad_error[0]), float(lt.tail[0]), float(k))


def truncated_line_integrals(kernel: KernelFunction, axis: int, transverse, k: float, radii,
                             panels_per_period: int = 8):
    """Plain truncated integrals int_{-r}^{r} f e^{-ikx} dx for each r in ``radii``.

    No integration by parts and no tail continuation: these are the partial
    integrals whose double limits are being probed.  Returns (values, errors)
    of shape (len(radii), F).
    """
    if k == 0:
        raise ZeroWaveNumberError("k = 0 is excluded: the transform needs a nonzero wave number")
    trans = np.atleast_2d(np.asarray(transverse, dtype=float))
    radii = np.sort(np.asarray(radii, dtype=float))
    field_ = kernel.field
    F = len(trans)
    geom = _LineGeometry(kernel, axis, trans)
    wmax = 2 * math.pi / abs(k) / panels_per_period
    knots = None
    if hasattr(field_, "coef") and kernel.dimension > 1:
        others = [i for i in range(kernel.dimension) if i != axis]
        tinf = np.max(np.abs(trans - field_.center[others]), axis=1)
        near = tinf < field_.H
        if near.any() and not near.all():
            out = np.zeros((len(radii), F), dtype=complex)
            err = np.zeros((len(radii), F))
            for m in (near, ~near):
                v, e = truncated_line_integrals(kernel, axis, trans[m], k, radii, panels_per_period)
                out[:, m], err[:, m] = v, e
            return out, err
        if near.all():
            knots = _spline_knots(field_, axis)
    vals = np.zeros((len(radii), F), dtype=complex)
    errs = np.zeros((len(radii), F))
    for sign in (+1, -1):
        edges = _breakpoints(0.0, radii[-1], wmax, geom, sign, knots)
        # make every radius a panel edge
        edges = np.unique(np.concatenate([edges * sign, radii])) * sign
        edges = edges[np.argsort(edges * sign)]
        x, h = gl_panels(edges)
        fx = field_.line_values(axis, trans, x.ravel(), 0).reshape(F, len(h), GL_NODES)
        s, e = panel_estimate(fx * np.exp(-1j * k * x)[None], h)
        cs, ce = np.cumsum(s, axis=1), np.cumsum(e, axis=1)
        ends = np.abs(edges[1:])
        for i, r in enumerate(radii):
            j = int(np.argmin(np.abs(ends - r)))
            vals[i] += cs[:, j]
            errs[i] += ce[:, j]
    return vals, errs
