"""
Iterated two- and three-dimensional transforms.

2D: the single F(k1, y) is the regularized line transform along x at height y;
``xy`` integrates it against e^{-ik2 y}.  ``yx`` does the same with the roles of
x and y exchanged (single G(x, k2)).

3D: singles A(k1,y,z), B(x,k2,z) and C(x,y,k3) are line transforms along x, y
and z.  The orderings A, B and C integrate their single over the remaining
plane (polar grid).  F, G and H first build a double from a cached single
(F(k1,k2,z) from A, G(k1,y,k3) from C, H(x,k2,k3) from B) and then integrate
over the last axis (tensor grid).

Outer integrals use Gauss-Legendre panels on [-L, L].  L is the smallest
candidate radius at which the decay certificate of the outer integrand bounds
the discarded tail by ``outer_tol``.  Errors are composed as
sum |w_i| err_i + panel quadrature estimate + certified tail.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from .kernels import DomainError, KernelFunction, ZeroWaveNumberError
from .normality import NOT_CERTIFIED, certify, decay_fit, sphere_directions
from .osc_quad import (GL_NODES, QuadConfig, TransformResult, gl_panels, line_transforms,
                       panel_estimate, truncated_line_integrals)
from .series_core import DecayCertificate

CANDIDATE_RADII = (8, 12, 16, 24, 32, 48, 64)
MONITOR_SPREAD = 3.0
MONITOR_SLOPE = (0.8, 1.2)


@dataclass(frozen=True)
class IteratedConfig:
    """Outer-integration settings.

    ``quad`` drives the inner line transforms; ``certificate_tol`` is the
    tighter inner tolerance used for decay samples so that their noise floor
    does not dominate the tail bounds.
    """

    quad: QuadConfig = field(default_factory=QuadConfig)
    outer_tol: float = 1e-6
    certificate_tol: float = 1e-11
    radii: tuple = CANDIDATE_RADII
    core_width: float = 0.5
    periods_per_panel: float = 1.0
    n_directions: int = 8
    monitor: bool = True

    def __post_init__(self):
        if not self.outer_tol > 0:
            raise ValueError("outer_tol must be positive")
        if len(self.radii) < 6 or list(self.radii) != sorted(self.radii):
            raise ValueError("radii must be increasing with at least 6 entries")


# ---------------------------------------------------------------------------
# outer rules

def outer_rule(L: float, kappa: float, core: float, core_width: float = 0.5,
               periods_per_panel: float = 1.0, lower: Optional[float] = None):
    """Gauss-Legendre panels on [lower, L] (default lower = -L).

    Panels are 2 pi periods_per_panel / kappa wide, refined to ``core_width``
    for |x| <= core.  Returns (edges, nodes (P, n), weights (P, n), widths (P,)).
    """
    if not L > 0:
        raise ValueError("L must be positive")
    wide = 2 * math.pi * periods_per_panel / max(kappa, 1.0)
    core = min(core, L)
    half = np.concatenate([np.linspace(0.0, core, max(int(math.ceil(core / core_width)), 1) + 1),
                           np.linspace(core, L, max(int(math.ceil((L - core) / wide)), 1) + 1)[1:]
                           if L > core else []])
    if lower is None:
        edges = np.concatenate([-half[::-1], half[1:]])
    elif lower == 0:
        edges = half
    else:
        raise ValueError("lower must be None or 0")
    x, h = gl_panels(edges)
    from .osc_quad import _gl
    w = 0.5 * h[:, None] * _gl()[1][None, :]
    return edges, x, w, h


def _theta_count(kr: float) -> int:
    # trapezoid points resolving e^{i kr cos(theta)} plus smooth angular structure
    n = 2 * (kr + 10 * kr ** (1 / 3) + 16)
    return int(8 * math.ceil(n / 8))


def _tail_from_samples(cert: DecayCertificate, L: float, dims: int) -> float:
    """Bound on the integral of |g| beyond radius L from samples at radii >= L.

    |g| <= C_L / r^n with C_L = max over r >= L of (|g| + noise) r^n; the
    outer integral over |x| > L (dims = 1) or |p| > L (dims = 2) follows.
    """
    n = cert.order
    r = np.array([e[0] for e in cert.evidence])
    v = np.array([e[1] for e in cert.evidence]) + np.array(cert.noise)
    sel = r >= L - 1e-12
    if not sel.any():
        return math.inf
    C = float(np.max(v[sel] * r[sel] ** n))
    if dims == 1:
        if n < 2:
            return math.inf
        return 2 * C / ((n - 1) * L ** (n - 1))
    if n < 3:
        return math.inf
    return 2 * math.pi * C / ((n - 2) * L ** (n - 2))


def _choose_radius(cert: DecayCertificate, dims: int, cfg: IteratedConfig, floor: float):
    """Smallest candidate radius >= floor whose certified tail is <= outer_tol."""
    best = None
    for L in cfg.radii:
        if L < floor:
            continue
        t = _tail_from_samples(cert, L, dims)
        if best is None or t < best[1]:
            best = (float(L), t)
        if t <= cfg.outer_tol:
            return float(L), t, True
    if best is None:
        L = float(cfg.radii[-1])
        return L, _tail_from_samples(cert, L, dims), False
    return best[0], best[1], False


def require_certificate(k: KernelFunction, level: int, certificate=None):
    """Certificate of ``k`` at ``level``, computed once and cached on the kernel."""
    if certificate is None:
        cache = k.__dict__.setdefault("_certificates", {})
        if level not in cache:
            cache[level] = certify(k, level)
        certificate = cache[level]
    if certificate.kind == NOT_CERTIFIED:
        raise ValueError(f"kernel is not certified at level {level}: iterated transforms need "
                         "a (quasi, quasi split) normal kernel")
    if certificate.level != level:
        raise ValueError("certificate level does not match the kernel dimension")
    return certificate


def _require_density(k: KernelFunction):
    if k.is_coulomb:
        raise DomainError("full transforms need f smooth on all of R^d; the shifted Coulomb kernel "
                          "is undefined on its excluded ball W")


# ---------------------------------------------------------------------------
# partial transforms

class PartialTransform:
    """Line transform along ``axis`` as a function of the transverse point.

    For a 2D kernel this is F(k1, y) (axis 0) or G(x, k2) (axis 1); for a 3D
    kernel the singles A, B, C.  Values are cached per transverse point; a
    negative wave number reuses the positive one by conjugate symmetry.
    """

    def __init__(self, kernel: KernelFunction, axis: int, k: float, cfg: Optional[IteratedConfig] = None):
        if k == 0:
            raise ZeroWaveNumberError("k = 0 is excluded: the transform needs a nonzero wave number")
        self.kernel = kernel
        self.axis = int(axis)
        self.k = float(k)
        self.cfg = cfg or IteratedConfig()
        self.claimed_order = kernel.dimension
        self._cache = {}
        self._certificate = None

    @property
    def transverse_axes(self) -> list:
        return [i for i in range(self.kernel.dimension) if i != self.axis]

    def _compute(self, pts, tol=None):
        q = self.cfg.quad
        if tol is not None:
            q = QuadConfig(tol, q.max_radius, q.panels_per_period, q.ibp_depth, q.split_point, q.r0, q.tail_order)
        lt = line_transforms(self.kernel, self.axis, pts, abs(self.k), q)
        v = lt.value if self.k > 0 else np.conj(lt.value)
        return v, lt.error, lt.converged, lt.radius, lt.quad_error, lt.tail, lt.depth

    def evaluate(self, points):
        """(values, errors, converged) at transverse points of shape (N, d-1)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.kernel.dimension - 1:
            pts = pts.reshape(-1, self.kernel.dimension - 1)
        keys = [p.tobytes() for p in pts]
        missing = [i for i, key in enumerate(keys) if key not in self._cache]
        if missing:
            uniq = {}
            for i in missing:
                uniq.setdefault(keys[i], i)
            idx = list(uniq.values())
            v, e, c, *_ = self._compute(pts[idx])
            for j, i in enumerate(idx):
                self._cache[keys[i]] = (v[j], e[j], c[j])
        out = np.array([self._cache[key][0] for key in keys], dtype=complex)
        err = np.array([self._cache[key][1] for key in keys])
        conv = np.array([self._cache[key][2] for key in keys], dtype=bool)
        return out, err, conv

    def __call__(self, point) -> TransformResult:
        pts = np.atleast_2d(np.asarray(point, dtype=float).reshape(1, -1))
        v, e, c, rad, qe, tb, depth = self._compute(pts)
        return TransformResult(complex(v[0]), float(e[0]), float(rad[0]), depth, (), bool(c[0]),
                               float(qe[0]), float(tb[0]), self.k)

    def certificate(self) -> DecayCertificate:
        """Decay certificate of order d (2D: 2, 3D: 3) from samples on circles."""
        if self._certificate is None:
            dim = self.kernel.dimension
            dirs = sphere_directions(dim - 1, self.cfg.n_directions) if dim == 3 else np.array([[1.0], [-1.0]])
            radii = np.asarray(self.cfg.radii, dtype=float)
            pts = (radii[:, None, None] * dirs[None]).reshape(-1, dim - 1)
            v, e, *_ = self._compute(pts, tol=self.cfg.certificate_tol)
            v = np.abs(v).reshape(len(radii), -1)
            e = e.reshape(len(radii), -1)
            j = np.argmax(v + e, axis=1)
            samples = [(r, v[i, j[i]]) for i, r in enumerate(radii)]
            noise = [e[i, j[i]] for i in range(len(radii))]
            self._certificate = decay_fit(samples, self.claimed_order, noise=noise)
        return self._certificate


def _partial(kernel, axis, k, cfg) -> PartialTransform:
    """Shared single per (axis, |k|, config); negative k shares the cache."""
    cache = kernel.__dict__.setdefault("_partials", {})
    key = (axis, abs(float(k)), cfg)
    if key not in cache:
        cache[key] = PartialTransform(kernel, axis, abs(float(k)), cfg)
    base = cache[key]
    if k > 0:
        return base
    return _Conjugated(base)


class _Conjugated:
    """View of a single at -k (real kernels: conjugate values)."""

    def __init__(self, base: PartialTransform):
        self.base = base
        self.kernel, self.axis, self.cfg = base.kernel, base.axis, base.cfg
        self.k = -base.k
        self.claimed_order = base.claimed_order

    @property
    def transverse_axes(self):
        return self.base.transverse_axes

    def evaluate(self, points):
        v, e, c = self.base.evaluate(points)
        return np.conj(v), e, c

    def __call__(self, point) -> TransformResult:
        r = self.base(point)
        return TransformResult(r.value.conjugate(), r.error_estimate, r.truncation_radius, r.ibp_depth, (),
                               r.converged, r.quad_error, r.tail_bound, self.k)

    def certificate(self):
        return self.base.certificate()


def partial_transform_2d(k: KernelFunction, k1: float, cfg: Optional[IteratedConfig] = None,
                         axis: int = 0, certificate=None):
    """F(k1, .) (axis 0) or G(., k2) (axis 1) as a callable y -> TransformResult."""
    if k1 == 0:
        raise ZeroWaveNumberError("k1 = 0 is excluded: the transform needs a nonzero wave number")
    if k.dimension != 2:
        raise ValueError("partial_transform_2d needs a 2D kernel")
    require_certificate(k, 2, certificate)
    cfg = cfg or IteratedConfig()
    if k.is_coulomb:
        return PartialTransform(k, axis, k1, cfg)
    return _partial(k, axis, k1, cfg)


class DoubleTransform:
    """Double partial transform: a single integrated over one more axis.

    ``single`` integrates its own axis; this integrates ``axis`` against
    e^{-i k x}.  The remaining free coordinate is the third axis.
    """

    def __init__(self, single, axis: int, k: float, cfg: IteratedConfig):
        if k == 0:
            raise ZeroWaveNumberError("k = 0 is excluded: the transform needs a nonzero wave number")
        self.single = single
        self.axis = int(axis)
        self.k = float(k)
        self.cfg = cfg
        kernel = single.kernel
        self.free = [i for i in range(3) if i not in (single.axis, self.axis)][0]
        scert = single.certificate()
        self.L, _, self.L_ok = _choose_radius(scert, 2, cfg, floor=2 * (kernel.support_radius + 1))
        # along-line tail: |single(p)| <= C_L/|p|^3 and |p| >= |x_axis|
        r = np.array([e[0] for e in scert.evidence])
        v = np.array([e[1] for e in scert.evidence]) + np.array(scert.noise)
        self.tail_constant = float(np.max(v[r >= self.L - 1e-12] * r[r >= self.L - 1e-12] ** 3))
        kap = max(1.0, abs(self.k))
        self.rule = outer_rule(self.L, kap, kernel.support_radius + 1, cfg.core_width, cfg.periods_per_panel)
        self._certificate = None
        self.claimed_order = 2

    def line_tail(self, w_):
        """Bound on int_{|u| > L} |single| du at free coordinate w_.

        From |single| <= C/(u^2 + w^2)^(3/2):  2C / (s (s + L)) with s = sqrt(L^2 + w^2).
        """
        s = np.hypot(self.L, w_)
        return 2 * self.tail_constant / (s * (s + self.L))

    def _points(self, u, free_vals):
        # transverse coordinates of the single at (integrated axis = u, free axis = w)
        tax = self.single.transverse_axes
        pts = np.zeros((len(free_vals), len(u), 2))
        pts[..., tax.index(self.axis)] = u[None, :]
        pts[..., tax.index(self.free)] = free_vals[:, None]
        return pts.reshape(-1, 2)

    def evaluate(self, free_vals):
        """(values, errors, converged) at the given values of the free coordinate."""
        w_ = np.atleast_1d(np.asarray(free_vals, dtype=float))
        _, x, w, h = self.rule
        u = x.ravel()
        v, e, c = self.single.evaluate(self._points(u, w_))
        v = v.reshape(len(w_), *x.shape)
        e = e.reshape(len(w_), -1)
        ph = np.exp(-1j * self.k * x)
        s, qe = panel_estimate(v * ph[None], h)
        val = s.sum(axis=1)
        err = qe.sum(axis=1) + e @ np.abs(w.ravel()) + self.line_tail(w_)
        conv = c.reshape(len(w_), -1).all(axis=1)
        return val, err, conv

    def certificate(self) -> DecayCertificate:
        if self._certificate is None:
            radii = np.asarray(self.cfg.radii, dtype=float)
            v, e, _ = self.evaluate(np.concatenate([radii, -radii]))
            n = len(radii)
            a = np.abs(v)
            pick = np.where(a[:n] + e[:n] >= a[n:] + e[n:], np.arange(n), np.arange(n) + n)
            self._certificate = decay_fit(list(zip(radii, a[pick])), 2, noise=e[pick])
        return self._certificate


@dataclass
class PartialFamily3D:
    """Singles A, B, C and doubles F, G, H of a 3D kernel at one wave vector."""

    kernel: KernelFunction
    wavevector: tuple
    cfg: IteratedConfig
    singles: dict
    doubles: dict

    def A(self, y, z):
        return self.singles["A"].evaluate(np.column_stack([np.ravel(y), np.ravel(z)]))

    def B(self, x, z):
        return self.singles["B"].evaluate(np.column_stack([np.ravel(x), np.ravel(z)]))

    def C(self, x, y):
        return self.singles["C"].evaluate(np.column_stack([np.ravel(x), np.ravel(y)]))

    def F(self, z):
        return self.doubles["F"].evaluate(z)

    def G(self, y):
        return self.doubles["G"].evaluate(y)

    def H(self, x):
        return self.doubles["H"].evaluate(x)

    def certificates(self) -> dict:
        out = {name: s.certificate() for name, s in self.singles.items()}
        out.update({name: d.certificate() for name, d in self.doubles.items()})
        return out


def partial_transforms_3d(k: KernelFunction, wavevector, cfg: Optional[IteratedConfig] = None,
                          certificate=None) -> PartialFamily3D:
    """Singles and doubles for the wave vector (k1, k2, k3).

    F(k1,k2,z) integrates A over y, G(k1,y,k3) integrates C over x and
    H(x,k2,k3) integrates B over z.
    """
    if k.dimension != 3:
        raise ValueError("partial_transforms_3d needs a 3D kernel")
    kv = tuple(float(c) for c in wavevector)
    if len(kv) != 3 or any(c == 0 for c in kv):
        raise ZeroWaveNumberError("k = 0 is excluded: all three wave components must be nonzero")
    require_certificate(k, 3, certificate)
    _require_density(k)
    cfg = cfg or IteratedConfig()
    singles = {"A": _partial(k, 0, kv[0], cfg), "B": _partial(k, 1, kv[1], cfg), "C": _partial(k, 2, kv[2], cfg)}
    doubles = {"F": DoubleTransform(singles["A"], 1, kv[1], cfg),
               "G": DoubleTransform(singles["C"], 0, kv[0], cfg),
               "H": DoubleTransform(singles["B"], 2, kv[2], cfg)}
    return PartialFamily3D(k, kv, cfg, singles, doubles)


# ---------------------------------------------------------------------------
# full transforms

@dataclass
class IteratedTransformReport:
    wavevector: tuple
    values: dict
    per_ordering_error: dict
    max_pairwise_deviation: float
    converged: dict = field(default_factory=dict)
    moore_osgood: Optional[dict] = None
    certificates: dict = field(default_factory=dict)
    truncation: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def value(self) -> complex:
        return complex(np.mean(list(self.values.values())))

    @property
    def all_converged(self) -> bool:
        return all(self.converged.values())

    @property
    def error_allowance(self) -> float:
        """Sum of the two largest per-ordering errors."""
        e = sorted(self.per_ordering_error.values(), reverse=True)
        return float(sum(e[:2]))

    @property
    def passed(self) -> bool:
        return self.max_pairwise_deviation <= self.error_allowance

    def to_dict(self) -> dict:
        return {
            "wavevector": list(self.wavevector),
            "values": {k: [v.real, v.imag] for k, v in self.values.items()},
            "per_ordering_error": self.per_ordering_error,
            "max_pairwise_deviation": self.max_pairwise_deviation,
            "pass": self.passed,
            "converged": self.converged,
            "moore_osgood": self.moore_osgood,
            "certificates": {k: v.to_dict() for k, v in self.certificates.items()},
            "truncation": self.truncation,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _max_deviation(values: dict) -> float:
    v = list(values.values())
    return float(max(abs(a - b) for i, a in enumerate(v) for b in v[i + 1:]))


def _line_ordering(single, k_outer: float, cfg: IteratedConfig):
    """int single(y) e^{-ik y} dy over the line (2D orderings)."""
    cert = single.certificate()
    L, tail, _ = _choose_radius(cert, 1, cfg, floor=2 * (single.kernel.support_radius + 1))
    _, x, w, h = outer_rule(L, max(1.0, abs(k_outer)), single.kernel.support_radius + 1,
                            cfg.core_width, cfg.periods_per_panel)
    v, e, c = single.evaluate(x.reshape(-1, 1))
    s, qe = panel_estimate(v.reshape(x.shape) * np.exp(-1j * k_outer * x), h)
    val = complex(s.sum())
    err = float(qe.sum() + np.abs(w.ravel()) @ e + tail)
    return val, err, bool(c.all()), {"L": L, "tail": tail, "nodes": int(x.size)}


def double_limit_table(k: KernelFunction, k1: float, k2: float, cfg: Optional[IteratedConfig] = None,
                       m_indices=(1, 2, 3, 4), n_indices=None):
    """Partial sums s_{m,n} = int_{|y|<=m} int_{|x|<=n} f e^{-i(k1 x + k2 y)} and s_m = lim_n s_{m,n}.

    m and n sit a quarter period past a multiple of the period in y and x.
    By default n starts at four times the largest m and doubles three times,
    so that the 1/n regime is reached for every row.
    Returns (table (M, N), limits (M,), m_values, n_values).
    """
    cfg = cfg or IteratedConfig()
    m_vals = np.array([2 * math.pi / abs(k2) * (j + 0.25) for j in m_indices])
    if n_indices is None:
        j0 = max(int(math.ceil(4 * m_vals.max() * abs(k1) / (2 * math.pi))), 8)
        n_indices = (j0, 2 * j0, 4 * j0, 8 * j0)
    n_vals = np.array([2 * math.pi / abs(k1) * (j + 0.25) for j in n_indices])
    single = _partial(k, 0, k1, cfg)
    table = np.zeros((len(m_vals), len(n_vals)), dtype=complex)
    limits = np.zeros(len(m_vals), dtype=complex)
    from .osc_quad import _gl
    wg = _gl()[1]
    for i, m in enumerate(m_vals):
        core = min(k.support_radius + 1, m)
        wide = 2 * math.pi / max(1.0, abs(k2))
        half = np.concatenate([np.linspace(0, core, int(math.ceil(core / cfg.core_width)) + 1),
                               np.linspace(core, m, max(int(math.ceil((m - core) / wide)), 1) + 1)[1:]])
        edges = np.concatenate([-half[::-1], half[1:]])
        x, h = gl_panels(edges)
        w = (0.5 * h[:, None] * wg[None, :]).ravel()
        y = x.ravel()
        ph = w * np.exp(-1j * k2 * y)
        trunc, _ = truncated_line_integrals(k, 0, y[:, None], k1, n_vals)
        table[i] = trunc @ ph
        v, _, _ = single.evaluate(y[:, None])
        limits[i] = v @ ph
    return table, limits, m_vals, n_vals


def moore_osgood_monitor(table, n_values, limits=None, m_values=None) -> dict:
    """Tail diagnostics of s_{m,n} as n grows, uniformly in m.

    Each row m gives |s_{m,n} - s_m| against n; its log-log slope should be
    near -1 and its tail constant c_m = median(|delta| n) should not vary
    much with m.  Without ``limits`` each row is extrapolated in 1/n.
    """
    t = np.asarray(table, dtype=complex)
    n = np.asarray(n_values, dtype=float)
    if t.ndim != 2 or t.shape[0] < 4 or t.shape[1] < 4 or t.shape[1] != len(n):
        raise ValueError("degenerate table: need a rectangular table with >= 4 values per axis")
    if np.any(np.diff(n) <= 0):
        raise ValueError("n_values must be increasing")
    if limits is None:
        # Richardson in 1/n: s_{m,n} = s_m + a/n + b/n^2
        V = np.vander(1.0 / n, 3, increasing=True)
        limits = np.array([np.linalg.lstsq(V, row, rcond=None)[0][0] for row in t])
    limits = np.asarray(limits, dtype=complex)
    delta = np.abs(t - limits[:, None])
    scale = max(float(np.max(np.abs(t))), 1.0)
    if np.all(delta <= 1e-12 * scale):
        return {"status": "already converged", "slopes": [], "constants": [], "spread": 1.0, "pass": True}
    slopes, consts = [], []
    for row in delta:
        ok = row > 1e-14 * scale
        slopes.append(float(-np.polyfit(np.log(n[ok]), np.log(row[ok]), 1)[0]) if ok.sum() >= 2 else math.inf)
        consts.append(float(np.median(row * n)))
    consts = np.array(consts)
    spread = float(consts.max() / consts.min()) if consts.min() > 0 else math.inf
    ok_slopes = all(MONITOR_SLOPE[0] <= s <= MONITOR_SLOPE[1] for s in slopes)
    return {"status": "monitored", "slopes": slopes, "constants": consts.tolist(), "spread": spread,
            "pass": bool(spread <= MONITOR_SPREAD and ok_slopes),
            "n_values": n.tolist(), "m_values": None if m_values is None else list(map(float, m_values)),
            "deltas": delta.tolist()}


def full_transform_2d(k: KernelFunction, k1: float, k2: float, cfg: Optional[IteratedConfig] = None,
                      certificate=None, monitor: Optional[bool] = None) -> IteratedTransformReport:
    """Both orderings xy and yx of the 2D transform, with the double-limit probe."""
    t0 = time.perf_counter()
    if k1 == 0 or k2 == 0:
        raise ZeroWaveNumberError("k = 0 is excluded: both wave components must be nonzero")
    if k.dimension != 2:
        raise ValueError("full_transform_2d needs a 2D kernel")
    cert = require_certificate(k, 2, certificate)
    _require_density(k)
    cfg = cfg or IteratedConfig()
    F = _partial(k, 0, k1, cfg)
    G = _partial(k, 1, k2, cfg)
    vals, errs, conv, info = {}, {}, {}, {}
    vals["xy"], errs["xy"], conv["xy"], info["xy"] = _line_ordering(F, k2, cfg)
    vals["yx"], errs["yx"], conv["yx"], info["yx"] = _line_ordering(G, k1, cfg)
    mo = None
    if cfg.monitor if monitor is None else monitor:
        table, limits, m_vals, n_vals = double_limit_table(k, k1, k2, cfg)
        mo = moore_osgood_monitor(table, n_vals, limits, m_vals)
        # the printed chain: |s_{m,n} - s_m| <= 8 pi (val+1) C/(|k1|^2 n) (quasi case: val taken as 0)
        mo["kind"] = cert.kind
    return IteratedTransformReport((float(k1), float(k2)), vals, errs, _max_deviation(vals), conv, mo,
                                   {"F": F.certificate(), "G": G.certificate()}, info,
                                   time.perf_counter() - t0)


def _plane_polar(single, kvec_plane, cfg: IteratedConfig):
    """int over the transverse plane of single(p) e^{-i q.p} on a polar grid."""
    q = np.asarray(kvec_plane, dtype=float)
    kq = float(np.linalg.norm(q))
    cert = single.certificate()
    kernel = single.kernel
    L, tail, _ = _choose_radius(cert, 2, cfg, floor=2 * (kernel.support_radius + 1))
    _, r, w, h = outer_rule(L, max(1.0, kq), kernel.support_radius + 1, cfg.core_width,
                            cfg.periods_per_panel, lower=0)
    ring_vals = np.zeros(r.shape, dtype=complex)
    ring_aerr = np.zeros(r.shape)
    inner = np.zeros(r.shape)
    conv = True
    pts_all, meta = [], []
    for idx, rr in np.ndenumerate(r):
        n = _theta_count(kq * rr)
        th = 2 * math.pi * np.arange(n) / n
        pts_all.append(np.column_stack([rr * np.cos(th), rr * np.sin(th)]))
        meta.append((idx, n))
    v, e, c = single.evaluate(np.concatenate(pts_all))
    conv = bool(c.all())
    pos = 0
    for (idx, n), p in zip(meta, pts_all):
        g = v[pos:pos + n] * np.exp(-1j * (p @ q))
        ee = e[pos:pos + n]
        pos += n
        ring_vals[idx] = 2 * math.pi * g.mean()
        # aliasing estimate from the top quarter of the resolved angular spectrum
        c_m = np.abs(np.fft.fft(g)) / n
        ring_aerr[idx] = 2 * math.pi * float(np.sum(c_m[3 * n // 8: 5 * n // 8 + 1]))
        inner[idx] = 2 * math.pi * ee.mean()
    s, qe = panel_estimate(r * ring_vals, h)
    val = complex(s.sum())
    err = float(qe.sum() + np.sum(np.abs(w) * r * (ring_aerr + inner)) + tail)
    return val, err, conv, {"L": L, "tail": tail, "nodes": int(sum(m[1] for m in meta))}


def _axis_tensor(double, k_outer: float, cfg: IteratedConfig):
    """int double(w) e^{-ik w} dw over the free axis."""
    cert = double.certificate()
    kernel = double.single.kernel
    L, tail, _ = _choose_radius(cert, 1, cfg, floor=2 * (kernel.support_radius + 1))
    _, x, w, h = outer_rule(L, max(1.0, abs(k_outer)), kernel.support_radius + 1,
                            cfg.core_width, cfg.periods_per_panel)
    v, e, c = double.evaluate(x.ravel())
    s, qe = panel_estimate(v.reshape(x.shape) * np.exp(-1j * k_outer * x), h)
    val = complex(s.sum())
    err = float(qe.sum() + np.abs(w.ravel()) @ e + tail)
    return val, err, bool(c.all()), {"L": L, "tail": tail, "inner_L": double.L,
                                     "nodes": int(x.size * double.rule[1].size)}


def full_transform_3d(k: KernelFunction, k1: float, k2: float, k3: float, cfg: Optional[IteratedConfig] = None,
                      certificate=None) -> IteratedTransformReport:
    """All six orderings A, B, C, F, G, H of the 3D transform."""
    t0 = time.perf_counter()
    fam = partial_transforms_3d(k, (k1, k2, k3), cfg, certificate)
    cfg = fam.cfg
    kv = np.array(fam.wavevector)
    vals, errs, conv, info = {}, {}, {}, {}
    for name, single in fam.singles.items():
        plane = [i for i in range(3) if i != single.axis]
        vals[name], errs[name], conv[name], info[name] = _plane_polar(single, kv[plane], cfg)
    for name, double in fam.doubles.items():
        vals[name], errs[name], conv[name], info[name] = _axis_tensor(double, kv[double.free], cfg)
    return IteratedTransformReport(tuple(float(c) for c in kv), vals, errs, _max_deviation(vals), conv, None,
                                   fam.certificates(), info, time.perf_counter() - t0)


def truncation_scaling_3d(k: KernelFunction, wavevector, s_values=(16, 32, 64), t_values=(16, 32, 64),
                          cfg: Optional[IteratedConfig] = None, reference: Optional[complex] = None,
                          snap: bool = True) -> dict:
    """Measured |F(k) - int (int_{|x|<=s} int_{|y|<=t} f e^{..} dx dy) e^{-ik3 z} dz| against A/s + B/t + C/|(s,t)|.

    With ``snap`` each s (t) moves to the nearest quarter-period offset
    (2 pi/|k|)(j + 1/4), where the oscillating boundary factors peak, so the
    measured errors trace the envelope.  The constants are fitted by
    nonnegative least squares; the check is measured <= 1.5 x fitted.
    """
    cfg = cfg or IteratedConfig()
    k1, k2, k3 = (float(c) for c in wavevector)
    fam = partial_transforms_3d(k, (k1, k2, k3), cfg)

    def quarter(v, kk):
        P = 2 * math.pi / abs(kk)
        return P * (round(v / P - 0.25) + 0.25)

    s_v = np.array([quarter(s, k1) if snap else float(s) for s in s_values])
    t_v = np.array([quarter(t, k2) if snap else float(t) for t in t_values])
    if reference is None:
        reference = _axis_tensor(fam.doubles["F"], k3, cfg)[0]
    dF = fam.doubles["F"]
    L = dF.L
    _, zx, zw, zh = outer_rule(L, max(1.0, abs(k3)), k.support_radius + 1, cfg.core_width, cfg.periods_per_panel)
    z = zx.ravel()
    from .osc_quad import _gl
    wg = _gl()[1]
    meas = np.zeros((len(s_v), len(t_v)))
    for j, t in enumerate(t_v):
        core = min(k.support_radius + 1, t)
        wide = 2 * math.pi / max(1.0, abs(k2))
        half = np.concatenate([np.linspace(0, core, int(math.ceil(core / cfg.core_width)) + 1),
                               np.linspace(core, t, max(int(math.ceil((t - core) / wide)), 1) + 1)[1:]])
        yx, yh = gl_panels(np.concatenate([-half[::-1], half[1:]]))
        y = yx.ravel()
        yw = (0.5 * yh[:, None] * wg[None, :]).ravel() * np.exp(-1j * k2 * y)
        pts = np.column_stack([np.repeat(y, len(z)), np.tile(z, len(y))])
        trunc, _ = truncated_line_integrals(k, 0, pts, k1, s_v)
        trunc = trunc.reshape(len(s_v), len(y), len(z))
        Tz = np.einsum("syz,y->sz", trunc, yw)
        vals = Tz @ (zw.ravel() * np.exp(-1j * k3 * z))
        meas[:, j] = np.abs(reference - vals)
    S, T = np.meshgrid(s_v, t_v, indexing="ij")
    basis = np.column_stack([1 / S.ravel(), 1 / T.ravel(), 1 / np.hypot(S, T).ravel()])
    coef, _ = nnls(basis, meas.ravel())
    fitted = (basis @ coef).reshape(meas.shape)
    ratio = meas / np.where(fitted > 0, fitted, np.inf)
    return {"s": s_v.tolist(), "t": t_v.tolist(), "measured": meas.tolist(), "fitted": fitted.tolist(),
            "constants": coef.tolist(), "max_ratio": float(ratio.max()),
            "pass": bool(np.all(meas <= 1.5 * fitted))}
