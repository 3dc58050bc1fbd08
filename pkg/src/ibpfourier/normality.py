"""
Decay fits, fiber zero loci and normality certificates.

Along a line at transverse distance s from a unit source, write u for the
along-line offset.  The order-d derivative of 1/sqrt(u^2 + s^2) is
P_d(u, s^2) / r^(2d+1); its zeros are u = +-c s for the nonnegative roots c
of P_d(c, 1).  Coulomb fibers use these loci directly; density fibers use
the intervals swept by the loci of every source cell.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .fields import line_numerator
from .kernels import DomainError, Fiber1D, KernelFunction, expand_fiber_at_infinity, fiber
from .series_core import NEGATIVE, POSITIVE, DecayCertificate, decay_class_for

log = logging.getLogger(__name__)

SEED = 0x5EED
FIT_SLACK = 0.15
ZERO_XTOL = 1e-10
UNIFORMITY_SPREAD = 0.05

# nonnegative root ratios c (zeros at u = +-c s) from the quadratic relations in u^2
_SQ = math.sqrt
ROOT_RATIOS = {
    0: (),
    1: (0.0,),
    2: (1 / _SQ(2),),                                        # 2u^2 = s^2
    3: (0.0, _SQ(1.5)),                                      # u (9 s^2 - 6 u^2) = 0
    4: (_SQ((6 - _SQ(30)) / 4), _SQ((6 + _SQ(30)) / 4)),     # u^2 = (6 -+ sqrt 30)/4 s^2
}

NORMAL = "normal"
QUASI_NORMAL = "quasi_normal"
QUASI_SPLIT_NORMAL = "quasi_split_normal"
NOT_CERTIFIED = "not_certified"
_IMPLIED = {
    NORMAL: (NORMAL, QUASI_NORMAL, QUASI_SPLIT_NORMAL),
    QUASI_NORMAL: (QUASI_NORMAL, QUASI_SPLIT_NORMAL),
    QUASI_SPLIT_NORMAL: (QUASI_SPLIT_NORMAL,),
    NOT_CERTIFIED: (),
}


@lru_cache(maxsize=None)
def line_root_ratios(order: int) -> tuple:
    """Nonnegative roots of P_order(c, 1), from the closed forms up to order 4."""
    if order in ROOT_RATIOS:
        return ROOT_RATIOS[order]
    pc = line_numerator(order)
    poly = np.zeros(order + 1)
    poly[0::2] = pc
    r = np.roots(poly)
    return tuple(sorted(float(x.real) for x in r if abs(x.imag) < 1e-9 and x.real > -1e-12))


def max_root_ratio(order: int) -> float:
    roots = line_root_ratios(order)
    return max(roots) if roots else 0.0


@lru_cache(maxsize=None)
def derivative_envelope(order: int) -> float:
    """kappa with |P_order(u, s^2)| <= kappa r^order on every line.

    Dense sampling of the angle plus a Lipschitz margin makes the value a
    rigorous upper bound.
    """
    pc = line_numerator(order)
    n = 200_000
    th = np.linspace(0, np.pi, n)
    c, s2 = np.cos(th), np.sin(th) ** 2
    vals = sum(cj * c ** (order - 2 * j) * s2**j for j, cj in enumerate(pc))
    lip = max(order, 1) * float(np.sum(np.abs(pc))) * 2
    return float(np.max(np.abs(vals)) + lip * np.pi / (n - 1))


# ---------------------------------------------------------------------------
# zero loci

@dataclass(frozen=True)
class ZeroLocusReport:
    fiber: dict
    derivative_order: int
    zeros: tuple
    closed_form_used: bool
    uniformity_bound: Optional[float] = None
    suspected: tuple = ()
    window: Optional[tuple] = None

    @property
    def count(self) -> int:
        return len(self.zeros)

    def to_dict(self) -> dict:
        return {"fiber": self.fiber, "derivative_order": self.derivative_order,
                "zeros": list(self.zeros), "count": self.count,
                "closed_form_used": self.closed_form_used,
                "uniformity_bound": self.uniformity_bound,
                "suspected": list(self.suspected),
                "window": None if self.window is None else list(self.window)}


def zero_locus_closed_form(k: KernelFunction, f: Fiber1D, order: int) -> ZeroLocusReport:
    """Exact zeros of the order-th derivative of a Coulomb fiber: u = +-c s."""
    if not k.is_coulomb:
        raise ValueError("closed-form loci exist for shifted Coulomb kernels only")
    if order not in ROOT_RATIOS:
        raise ValueError("closed forms are tabulated for orders 0..4")
    if f.parent is not k:
        f = fiber(k, f.fixed_axes, order)
    a, s = f.along_center, f.offset
    pts = sorted({a + sgn * c * s for c in ROOT_RATIOS[order] for sgn in (-1.0, 1.0)})
    desc = f.describe()
    desc["derivative_order"] = order
    return ZeroLocusReport(desc, order, tuple(pts), True)


def count_zeros_numeric(f: Fiber1D, window, samples: int = 2048) -> ZeroLocusReport:
    """Sign-change scan of the fiber derivative, refined by bisection to 1e-10.

    Sign-preserving local minima of |g| that reach round-off level are
    reported as suspected tangential zeros, not as zeros.
    """
    if samples < 64:
        raise ValueError("samples must be >= 64")
    lo, hi = float(window[0]), float(window[1])
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError("window must be a finite interval")
    x = np.linspace(lo, hi, samples)
    g = np.asarray(f(x), dtype=float)
    if not np.all(np.isfinite(g)):
        raise ValueError("non-finite fiber value inside the window")

    def fx(t):
        return float(f(np.array([t]))[0])

    scale = float(np.max(np.abs(g))) or 1.0
    sgn = np.sign(g)
    zeros = []
    nz = np.flatnonzero(sgn != 0)
    for i0, i1 in zip(nz[:-1], nz[1:]):
        if sgn[i0] == sgn[i1]:
            continue
        if i1 - i0 > 1:
            # exact zero samples between opposite signs
            zeros.append(float(np.mean(x[i0 + 1:i1])))
        else:
            zeros.append(brentq(fx, x[i0], x[i1], xtol=ZERO_XTOL))
    suspected = []
    ag = np.abs(g)
    for i in range(1, samples - 1):
        if sgn[i - 1] == sgn[i] == sgn[i + 1] != 0 and ag[i] <= ag[i - 1] and ag[i] <= ag[i + 1]:
            res = minimize_scalar(lambda t: abs(fx(t)), bounds=(x[i - 1], x[i + 1]), method="bounded",
                                  options={"xatol": ZERO_XTOL})
            if res.fun <= 1e-12 * scale:
                suspected.append(float(res.x))
    return ZeroLocusReport(f.describe(), f.derivative_order, tuple(sorted(zeros)), False,
                           suspected=tuple(suspected), window=(lo, hi))


def zero_intervals(support_radius: float, transverse: float, order: int,
                   pad_central: bool = True) -> list:
    """Intervals containing the zeros of order-th derivatives of density fibers.

    For a nonnegative density in B(0, M) and a line at transverse distance
    T >= M, each source contributes zeros at x_c +- c s_c with |x_c| <= M and
    s_c in [T - M, T + M].  Outside the swept ranges all contributions share
    one sign.  The central interval (c = 0) is padded to (-(M+1), M+1).
    """
    M, T = float(support_radius), float(transverse)
    out = []
    for c in line_root_ratios(order):
        if c == 0.0:
            w = M + 1.0 if pad_central else M
            out.append((-w, w))
        else:
            lo, hi = -M + c * (T - M), M + c * (T + M)
            out.append((lo, hi))
            out.append((-hi, -lo))
    return sorted(out)


def _merged_length(intervals) -> float:
    total, cur = 0.0, None
    for lo, hi in sorted(intervals):
        if cur is None or lo > cur[1]:
            if cur is not None:
                total += cur[1] - cur[0]
            cur = [lo, hi]
        else:
            cur[1] = max(cur[1], hi)
    if cur is not None:
        total += cur[1] - cur[0]
    return total


def monotone_threshold(f: Fiber1D, order: int) -> tuple:
    """(x_ref, X) such that the order-th fiber derivative is monotone on |x - x_ref| >= X.

    Coulomb fibers use the kernel center and the loci of the next derivative;
    density fibers use the support ball.
    """
    c = max_root_ratio(order + 1)
    k = f.parent
    if k.is_coulomb:
        return f.along_center, c * f.offset
    M = k.support_radius
    T = float(np.linalg.norm(f.transverse))
    return 0.0, M + c * (T + M)


# ---------------------------------------------------------------------------
# decay

def decay_fit(values, claimed_order: int, threshold: Optional[float] = None,
              noise: Optional[Sequence[float]] = None) -> DecayCertificate:
    """Least-squares decay exponent of max|f| against radius.

    ``noise`` gives absolute uncertainties; samples below twice their noise
    are treated as unresolved and enter the constant as value + noise.  With
    fewer than two resolved samples the decay is faster than the fit can see
    and the exponent is reported as +inf.
    """
    vals = [(float(r), float(v)) for r, v in values]
    if len(vals) < 6:
        raise ValueError("decay_fit needs at least 6 samples")
    r = np.array([p[0] for p in vals])
    v = np.abs(np.array([p[1] for p in vals]))
    if r.max() / r.min() < 8 * (1 - 1e-12):
        raise ValueError("samples must span a factor 8 in radius")
    e = np.zeros_like(v) if noise is None else np.abs(np.asarray(noise, dtype=float))
    thr = float(r.min()) if threshold is None else float(threshold)
    if np.any(r < thr):
        raise ValueError("all radii must exceed the threshold")
    resolved = (v > 2 * e) & (v > 0)
    if resolved.sum() >= 2:
        slope = np.polyfit(np.log(r[resolved]), np.log(v[resolved]), 1)[0]
        fitted = float(-slope)
        note = "" if resolved.all() else f"{int((~resolved).sum())} samples at noise level"
    else:
        fitted = math.inf
        note = "faster than any polynomial (no resolved samples)"
    constant = float(np.max((v + e) * r**claimed_order))
    if constant == 0.0:
        constant = float(np.finfo(float).tiny)
    passed = bool(fitted >= claimed_order - FIT_SLACK)
    return DecayCertificate(decay_class_for(claimed_order), int(claimed_order), constant, thr, fitted,
                            tuple(zip(r.tolist(), v.tolist())), tuple(e.tolist()), passed, note)


def sphere_directions(dim: int, n: int) -> np.ndarray:
    """Deterministic near-uniform unit vectors (circle or Fibonacci sphere)."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        th = 2 * np.pi * (np.arange(n) + 0.5) / n
        return np.column_stack([np.cos(th), np.sin(th)])
    i = np.arange(n) + 0.5
    z = 1 - 2 * i / n
    phi = np.pi * (1 + 5**0.5) * i
    rr = np.sqrt(1 - z * z)
    return np.column_stack([rr * np.cos(phi), rr * np.sin(phi), z])


def sample_decay(k, multi_index, radii, ndir: Optional[int] = None):
    """(radius, max |d^alpha f|) over spheres about the origin, skipping W."""
    dim = k.dimension
    dirs = sphere_directions(dim, ndir or (64 if dim == 2 else 192))
    out = []
    for r in radii:
        pts = r * dirs
        if k.is_coulomb:
            keep = np.linalg.norm(pts - k.center, axis=1) > k.exclusion_radius
            pts = pts[keep]
        vals = k.field.evaluate(pts, tuple(multi_index))
        out.append((float(r), float(np.max(np.abs(vals)))))
    return out


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class ProbeConfig:
    fibers_per_axis: int = 16
    radii: tuple = (8, 12, 16, 24, 32, 48, 64)
    samples: int = 2048
    seed: int = SEED
    directions: Optional[int] = None
    slices_per_axis: int = 2
    series_order: int = 24


@dataclass
class NormalityCertificate:
    kind: str
    level: int
    val: Optional[int] = None
    interval_data: Optional[dict] = None
    conditions: list = field(default_factory=list)
    decay: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)

    @property
    def implied_kinds(self) -> tuple:
        """Kinds implied by this one (normal => quasi normal => quasi split normal)."""
        return _IMPLIED[self.kind]

    def condition(self, clause: str):
        for c in self.conditions:
            if c[0] == clause:
                return c
        raise KeyError(clause)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "level": self.level, "val": self.val,
            "interval_data": self.interval_data,
            "conditions": [{"clause": c, "pass": bool(p), "evidence": ev} for c, p, ev in self.conditions],
            "decay": {k: v.to_dict() for k, v in self.decay.items()},
            "skipped": self.skipped,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _mi_label(mi) -> str:
    return "d" + "".join(str(m) for m in mi) if any(mi) else "f"


def _multi_indices(dim: int, order: int):
    if dim == 1:
        yield (order,)
        return
    for first in range(order, -1, -1):
        for rest in _multi_indices(dim - 1, order - first):
            yield (first,) + rest


def _probe_fibers(k: KernelFunction, axis: int, n: int, rng, fixed_extra=()):
    """Random lines along ``axis``; density probes sit at |T| in [2M+1, 8M]."""
    dim = k.dimension
    others = [i for i in range(dim) if i != axis and i not in dict(fixed_extra)]
    fibers, skipped = [], []
    for _ in range(n):
        if k.is_coulomb:
            vals = k.center[others] + rng.uniform(-8, 8, size=len(others))
        else:
            M = k.support_radius
            d = rng.normal(size=len(others))
            d /= np.linalg.norm(d)
            vals = d * rng.uniform(2 * M + 1, 8 * M)
        fx = list(fixed_extra) + list(zip(others, vals.tolist()))
        f = fiber(k, fx)
        if f.meets_exclusion():
            log.info("skipping fiber through W: %s", f.describe())
            skipped.append(f.describe())
            continue
        fibers.append(f)
    return fibers, skipped


def _series_clause(fibers, order):
    ok, ev = True, []
    for f in fibers[:4]:
        for side in (POSITIVE, NEGATIVE):
            s = expand_fiber_at_infinity(f, side, order)
            X = (4.0 / s.radius) * (1 if side == POSITIVE else -1)
            ref = float(f.exact(np.array([X]))[0]) if f.parent.is_coulomb else float(f(np.array([X]))[0])
            approx = float(s.at_infinity(X))
            rel = abs(approx - ref) / abs(ref)
            good = s.radius > 0 and rel < 1e-6
            ok &= good
            ev.append({"fiber": f.describe(), "side": side, "radius": s.radius, "rel_err": rel})
    return ok, ev


def _window(f: Fiber1D, order: int):
    ref, X = monotone_threshold(f, max(order - 1, 0))
    X = max(X, max_root_ratio(order) * (f.offset if f.parent.is_coulomb else 1.0))
    pad = 10.0 * max(1.0, f.offset if f.parent.is_coulomb else f.parent.support_radius)
    return ref - X - pad, ref + X + pad


def _zero_clause_closed(k, fibers, orders, samples):
    counts, ev, agree = {}, [], True
    for f in fibers:
        for d in orders:
            cf = zero_locus_closed_form(k, f, d)
            num = count_zeros_numeric(f.derivative(d), _window(f, d), samples)
            same = cf.count == num.count and np.allclose(cf.zeros, num.zeros, atol=1e-8)
            agree &= bool(same)
            counts[d] = max(counts.get(d, 0), cf.count)
            if not same:
                ev.append({"fiber": f.describe(), "order": d, "closed": list(cf.zeros), "numeric": list(num.zeros)})
    return agree, counts, ev


def _interval_clause(k, fibers, orders, samples):
    """Numeric zeros of each fiber derivative must lie in the swept intervals."""
    M = k.support_radius
    data, ok, ev = {}, True, []
    for d in orders:
        Rs, S = [], 0
        for f in fibers:
            T = float(np.linalg.norm(f.transverse))
            iv = zero_intervals(M, T, d)
            S = len(iv)
            Rs.append(sum(hi - lo for lo, hi in iv))
            lo = min([a for a, _ in iv] + [-M]) - 5.0
            hi = max([b for _, b in iv] + [M]) + 5.0
            num = count_zeros_numeric(f.derivative(d), (lo, hi), samples)
            inside = all(any(a <= z <= b for a, b in iv) for z in num.zeros)
            ok &= inside
            if not inside:
                ev.append({"fiber": f.describe(), "order": d, "zeros": list(num.zeros), "intervals": iv})
        Rs = np.array(Rs)
        spread = float((Rs.max() - Rs.min()) / Rs.max()) if len(Rs) and Rs.max() > 0 else 0.0
        ok &= spread <= UNIFORMITY_SPREAD
        data[d] = {"S": S, "R": float(Rs.max()) if len(Rs) else 0.0, "R_spread": spread,
                   "endpoints": [list(p) for p in zero_intervals(M, 2 * M + 1, d)]}
    return ok, data, ev


def _decay_clauses(k, orders_to_check, probes, claimed):
    decay, ok, ev = {}, True, []
    for order in orders_to_check:
        for mi in _multi_indices(k.dimension, order):
            cert = decay_fit(sample_decay(k, mi, probes.radii, probes.directions), claimed(order))
            decay[_mi_label(mi)] = cert
            ok &= cert.passed
            ev.append({"index": list(mi), "fitted_exponent": cert.fitted_exponent, "order": cert.order})
    return ok, decay, ev


def certify(k: KernelFunction, level: int = 2, probes: Optional[ProbeConfig] = None) -> NormalityCertificate:
    """Evaluate the normality clauses for ``k`` and return the strongest kind.

    Level 2 needs a 2D kernel, level 3 a 3D kernel.  "normal" is only granted
    with closed-form zero loci (Coulomb kernels); density potentials can reach
    quasi normal (nonnegative density) or quasi split normal (smooth signed).
    """
    probes = probes or ProbeConfig()
    if level not in (2, 3) or k.dimension != level:
        raise ValueError("level must equal the kernel dimension (2 or 3)")
    rng = np.random.default_rng(probes.seed)
    max_order = 2 if level == 2 else 4
    cert = NormalityCertificate(NOT_CERTIFIED, level)
    fibers_by_axis = {}
    for axis in range(k.dimension):
        fb, sk = _probe_fibers(k, axis, probes.fibers_per_axis, rng)
        fibers_by_axis[axis] = fb
        cert.skipped.extend(sk)
    all_fibers = [f for fb in fibers_by_axis.values() for f in fb]

    # series at infinity of the fibers, one clause per fixed pattern
    names = "xyz"
    for axis, fb in fibers_by_axis.items():
        ok, ev = _series_clause(fb, probes.series_order)
        cert.conditions.append((f"series_{names[axis]}", ok, ev))
    if level == 3:
        for axis in range(3):
            for v in rng.uniform(-4, 4, size=probes.slices_per_axis):
                sub = cert_slice(k, axis, float(v), probes, rng)
                cert.conditions.append((f"slice_{names[axis]}={v:.3f}", sub[0], sub[1]))

    ok, dec, ev = _decay_clauses(k, [0], probes, lambda o: 1)
    cert.decay.update(dec)
    cert.conditions.append(("very_moderate_decrease", ok, ev))
    if level == 2:
        ok, dec, ev = _decay_clauses(k, [1], probes, lambda o: 2)
    else:
        ok, dec, ev = _decay_clauses(k, range(1, max_order + 1), probes, lambda o: o + 1)
    cert.decay.update(dec)
    cert.conditions.append(("derivative_decrease", ok, ev))

    orders = list(range(0, max_order + 1))
    if k.is_coulomb:
        agree, counts, ev = _zero_clause_closed(k, all_fibers, orders, probes.samples)
        cert.val = max(counts.values())
        cert.conditions.append(("zero_count", agree and cert.val <= max_order,
                                {"counts": counts, "mismatches": ev}))
    elif k.grid.nonnegative:
        ok, data, ev = _interval_clause(k, all_fibers, orders, probes.samples)
        cert.interval_data = data
        cert.conditions.append(("zero_intervals", ok, ev))
    elif k.grid.is_smooth:
        parts = [p for p in k.split() if p is not None]
        ok_all, data_all = True, {}
        for name, part in zip(("plus", "minus"), parts):
            sub = {a: [fiber(part, f.fixed_axes) for f in fb] for a, fb in fibers_by_axis.items()}
            ok, data, ev = _interval_clause(part, [f for fb in sub.values() for f in fb], orders, probes.samples)
            ok_all &= ok
            data_all[name] = data
        cert.interval_data = data_all
        cert.conditions.append(("split_zero_intervals", ok_all, {}))
    else:
        cert.conditions.append(("zero_intervals", False, "signed density without smoothness: no split available"))

    passed = all(bool(c[1]) for c in cert.conditions)
    if passed:
        if k.is_coulomb:
            cert.kind = NORMAL
        elif k.grid.nonnegative:
            cert.kind = QUASI_NORMAL
        else:
            cert.kind = QUASI_SPLIT_NORMAL
    return cert


def cert_slice(k: KernelFunction, axis: int, value: float, probes: ProbeConfig, rng):
    """2D clauses for the slice {x_axis = value} of a 3D kernel: (pass, evidence)."""
    fixed = ((axis, value),)
    ev, ok = {}, True
    free = [i for i in range(3) if i != axis]
    for ax in free:
        fb, _ = _probe_fibers(k, ax, 4, rng, fixed_extra=fixed)
        s_ok, s_ev = _series_clause(fb, probes.series_order)
        ok &= s_ok
        orders = [0, 1, 2]
        if k.is_coulomb:
            z_ok, counts, _ = _zero_clause_closed(k, fb, orders, probes.samples)
            z_ok &= max(counts.values()) <= 2
            ev[f"axis{ax}"] = {"series": s_ok, "counts": counts}
        else:
            z_ok, data, _ = _interval_clause(k, fb, orders, probes.samples) if k.grid.nonnegative else (True, {}, [])
            ev[f"axis{ax}"] = {"series": s_ok, "intervals": bool(z_ok)}
        ok &= z_ok
    # decay within the slice plane (measured from the slice origin)
    dirs = sphere_directions(2, probes.directions or 64)
    for order in (0, 1):
        for mi2 in _multi_indices(2, order):
            mi = [0, 0, 0]
            for j, a in enumerate(free):
                mi[a] = mi2[j]
            samples = []
            for r in probes.radii:
                pts = np.zeros((len(dirs), 3))
                pts[:, free] = r * dirs
                pts[:, axis] = value
                if k.is_coulomb:
                    pts = pts[np.linalg.norm(pts - k.center, axis=1) > k.exclusion_radius]
                samples.append((float(r), float(np.max(np.abs(k.field.evaluate(pts, tuple(mi)))))))
            cert = decay_fit(samples, order + 1)
            ok &= cert.passed
            ev[_mi_label(mi)] = cert.fitted_exponent
    return bool(ok), ev
