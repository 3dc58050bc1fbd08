"""
Verification suites, the brute-force oracle and plot export.

The oracle integrates f e^{-ik.x} by the plain trapezoid rule over nested
boxes and extrapolates in 1/radius.  It touches the kernel only through its
field evaluator and shares no code with the oscillatory quadrature.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import iterated, normality, osc_quad
from .kernels import DomainError, KernelFunction, ZeroWaveNumberError, bump_density, fiber
from .normality import SEED
from .series_core import DecayCertificate, decay_order_from_series, differentiate_series, expand_coulomb1d

log = logging.getLogger(__name__)

POINTS_PER_PERIOD = 25
PASS, FAIL, INCONCLUSIVE = "pass", "fail", "inconclusive"
SUITES = ("modulus", "modulus2", "modulus3", "example2d", "normal_bound", "normal1_equality",
          "examples2_3d", "normal4_decay", "normal5_equality")
PLOT_HEADER = ("radius", "value_re", "value_im", "bound")


# ---------------------------------------------------------------------------
# oracle

@dataclass(frozen=True)
class OracleValue:
    quantity: str
    value: complex
    method: str
    estimated_accuracy: float
    boxes: tuple = ()
    box_values: tuple = ()

    def __post_init__(self):
        if not self.estimated_accuracy > 0:
            raise ValueError("estimated_accuracy must be positive")

    def to_dict(self) -> dict:
        return {"quantity": self.quantity, "value": [self.value.real, self.value.imag], "method": self.method,
                "estimated_accuracy": self.estimated_accuracy, "boxes": [list(b) for b in self.boxes],
                "box_values": [[v.real, v.imag] for v in self.box_values]}


def _richardson(t, v, degree):
    """Value at t = 0 of the least-squares polynomial of ``degree`` in t."""
    V = np.vander(np.asarray(t), degree + 1, increasing=True)
    return np.linalg.lstsq(V, np.asarray(v), rcond=None)[0][0]


def oracle_transform_bruteforce(k: KernelFunction, wavevector, boxes=(16, 32, 64),
                                points_per_period: int = POINTS_PER_PERIOD) -> OracleValue:
    """Expanding-box trapezoid sums of f e^{-ik.x} extrapolated in 1/radius.

    Each box half-width is rounded to a whole number of periods 2 pi/|k_i| per
    axis, where the boundary terms form a power series in 1/radius.  The grid
    step is period/points_per_period.  The accuracy is the gap between the
    interpolating extrapolation and the one of one degree lower.
    """
    boxes = [float(b) for b in boxes]
    if len(boxes) < 3:
        raise ValueError("need at least 3 box radii")
    if np.any(np.diff(boxes) <= 0):
        raise ValueError("non-monotone box sequence: radii must be strictly increasing")
    kv = np.asarray(wavevector, dtype=float)
    dim = k.dimension
    if kv.shape != (dim,):
        raise ValueError(f"wavevector must have {dim} components")
    if np.any(kv == 0):
        raise ZeroWaveNumberError("k = 0 is excluded: all wave components must be nonzero")
    if k.is_coulomb:
        raise DomainError("the brute-force oracle needs f defined everywhere (no excluded ball)")
    if points_per_period < 8:
        raise ValueError("points_per_period must be >= 8")
    P = 2 * np.pi / np.abs(kv)
    h = P / points_per_period
    nper = np.array([[max(1, int(round(b / p))) for p in P] for b in boxes])
    if np.any(np.diff(nper, axis=0) <= 0):
        raise ValueError("boxes collapse to the same whole number of periods; spread them further")
    half = nper * points_per_period
    nmax = half[-1]
    axes = [h[i] * np.arange(-nmax[i], nmax[i] + 1) for i in range(dim)]
    # trapezoid weights times phase, one row per box and axis
    U = []
    for i in range(dim):
        j = np.abs(np.arange(-nmax[i], nmax[i] + 1))
        tw = np.where(j[None, :] < half[:, i:i + 1], 1.0, 0.0) + np.where(j[None, :] == half[:, i:i + 1], 0.5, 0.0)
        U.append(tw * np.exp(-1j * kv[i] * axes[i])[None, :] * h[i])
    field_ = k.field
    nb = len(boxes)
    totals = np.zeros(nb, dtype=complex)
    if dim == 1:
        vals = field_.evaluate(axes[0][:, None])
        totals = U[0] @ vals
    elif dim == 2:
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        vals = field_.evaluate(np.stack([X, Y], axis=-1))
        totals = np.einsum("bi,ij,bj->b", U[0], vals, U[1])
    else:
        X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
        plane = np.empty(X.shape + (3,))
        plane[..., 0], plane[..., 1] = X, Y
        for jz, z in enumerate(axes[2]):
            plane[..., 2] = z
            vals = field_.evaluate(plane)
            totals += U[2][:, jz] * np.einsum("bi,ij,bj->b", U[0], vals, U[1])
    radii = np.prod(nper * P[None, :], axis=1) ** (1.0 / dim)
    t = 1.0 / radii
    hi = _richardson(t, totals, nb - 1)
    lo = _richardson(t, totals, nb - 2)
    acc = float(abs(hi - lo)) + 1e-15 * max(abs(hi), 1.0)
    box_list = tuple(tuple(float(v) for v in row) for row in nper * P[None, :])
    return OracleValue(f"transform{dim}d{tuple(kv.tolist())}", complex(hi), "expanding_box_richardson", acc,
                       box_list, tuple(complex(v) for v in totals))


# ---------------------------------------------------------------------------
# verification reports

@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    measured: object
    target: object
    status: str
    detail: Optional[dict] = None
    seconds: float = 0.0

    def to_dict(self, timing: bool = False) -> dict:
        d = {"name": self.name, "anchor": self.anchor, "measured": _jsonable(self.measured),
             "target": _jsonable(self.target), "status": self.status}
        if self.detail is not None:
            d["detail"] = _jsonable(self.detail)
        if timing:
            d["seconds"] = self.seconds
        return d


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


@dataclass(frozen=True)
class HarnessConfig:
    """Settings shared by the CLI and the suites (mirrored by the JSON config)."""

    tol: float = 1e-8
    seed: int = SEED
    threads: int = 1
    out: Optional[str] = None
    k_grid_2d: tuple = (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0)
    k_3d: tuple = ((1.0, 1.0, 1.0), (2.0, 1.0, 0.5), (-1.0, 2.0, 1.0))
    oracle_boxes: tuple = (16.0, 32.0, 48.0, 64.0)
    random_fibers: int = 200

    @classmethod
    def from_dict(cls, d: dict) -> "HarnessConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        for key in ("k_grid_2d", "oracle_boxes"):
            if key in d:
                d[key] = tuple(float(v) for v in d[key])
        if "k_3d" in d:
            d["k_3d"] = tuple(tuple(float(c) for c in v) for v in d["k_3d"])
        return cls(**d)

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))

    def quad(self) -> osc_quad.QuadConfig:
        return osc_quad.QuadConfig(target_tol=self.tol)

    def iterated(self) -> iterated.IteratedConfig:
        return iterated.IteratedConfig(quad=self.quad())


@dataclass
class VerificationReport:
    suite: str
    checks: list
    config: dict
    runtime: float = 0.0

    @property
    def status(self) -> str:
        st = [c.status for c in self.checks]
        if FAIL in st:
            return FAIL
        if INCONCLUSIVE in st:
            return INCONCLUSIVE
        return PASS

    @property
    def exit_code(self) -> int:
        return {PASS: 0, FAIL: 1, INCONCLUSIVE: 2}[self.status]

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self, timing: bool = False) -> dict:
        # runtime is left out by default so that identical runs give identical bytes
        d = {"suite": self.suite, "status": self.status, "checks": [c.to_dict(timing) for c in self.checks],
             "config": self.config}
        if timing:
            d["runtime"] = self.runtime
        return d

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True)


def _status(ok: bool, converged: bool = True) -> str:
    if not converged:
        return INCONCLUSIVE
    return PASS if ok else FAIL


# ---------------------------------------------------------------------------
# suites

def _suite_modulus(cfg):
    """Coefficients of 1/|x - d| at infinity and the derivative rule, exactly."""
    checks = []
    s = expand_coulomb1d(2.0, order=12)
    want = [2.0 ** (n - 1) for n in range(1, 13)]
    checks.append(Check("coefficients_d2", "1/|x-d| at +inf: a_n = d^(n-1)", list(s.coefficients), want,
                        _status(list(s.coefficients) == want)))
    neg = expand_coulomb1d(2.0, side="negative", order=12)
    checks.append(Check("coefficients_d2_negative", "1/|x-d| at -inf: a_n = -d^(n-1)", list(neg.coefficients),
                        [-w for w in want], _status(list(neg.coefficients) == [-w for w in want])))
    worst = []
    for d in (2.0, -0.75, 0.3, 5.0):
        a = expand_coulomb1d(d, order=12).coeffs
        c = differentiate_series(expand_coulomb1d(d, order=12)).coeffs
        exact = c[0] == 0 and all(c[n - 1] == -(n - 1) * a[n - 2] for n in range(2, 13))
        worst.append(bool(exact))
    checks.append(Check("derivative_rule", "c_1 = 0, c_n = -(n-1) a_(n-1)", worst, [True] * len(worst),
                        _status(all(worst))))
    return checks


def _suite_modulus2(cfg):
    """Derivative series reproduce the exact derivatives of 1/|x - d|."""
    checks = []
    worst = 0.0
    for d in (2.0, -0.75, 0.3):
        s = expand_coulomb1d(d, order=24)
        for j in range(1, 4):
            s = differentiate_series(s)
            for X in (12.0, 25.0, 60.0):
                x = 1.0 / X
                exact = (-1.0) ** j * math.factorial(j) / (X - d) ** (j + 1)
                worst = max(worst, abs(s.evaluate(x) - exact) / abs(exact))
    checks.append(Check("derivative_series_values", "series of f^(j)(1/x) from repeated differentiation",
                        worst, 1e-10, _status(worst <= 1e-10)))
    s = expand_coulomb1d(0.0, order=8)
    ds = differentiate_series(s)
    checks.append(Check("zero_shift_exact", "d = 0: f'(1/x) = -x^2 exactly", list(ds.coefficients),
                        [0.0, -1.0] + [0.0] * 6, _status(list(ds.coefficients) == [0.0, -1.0] + [0.0] * 6)))
    return checks


def _suite_modulus3(cfg):
    """Decay constants from the series and zero-set containment."""
    checks = []
    ok_all, worst = True, 0.0
    for d in (2.0, -0.75):
        s = expand_coulomb1d(d, order=24)
        for j in range(0, 4):
            n, M = decay_order_from_series(s)
            X = np.geomspace(2.0 / s.radius + 1e-9, 1e4, 200)
            f = math.factorial(j) / np.abs(X - d) ** (j + 1)
            ratio = float(np.max(f * X**n / M))
            worst = max(worst, ratio)
            ok_all &= (n == j + 1) and ratio <= 1.0
            s = differentiate_series(s)
    checks.append(Check("decay_from_series", "|f^(j)(X)| <= M/|X|^(j+1) beyond 2/radius", worst, 1.0,
                        _status(ok_all)))
    rng = np.random.default_rng(cfg.seed)
    k2 = KernelFunction.shifted_coulomb([0.4, -0.3], 0.5)
    outside = 0
    for _ in range(20):
        f = fiber(k2, [(1, float(rng.uniform(-6, 6)))])
        if f.meets_exclusion():
            continue
        for order in (1, 2, 3):
            num = normality.count_zeros_numeric(f.derivative(order), (f.along_center - 40, f.along_center + 40))
            c = normality.max_root_ratio(order)
            outside += sum(abs(z - f.along_center) > c * f.offset + 1e-8 for z in num.zeros)
    checks.append(Check("zero_containment", "zeros of fiber derivatives lie in |u| <= c_max s", outside, 0,
                        _status(outside == 0)))
    return checks


def _suite_example2d(cfg):
    """Zero counts of Coulomb fiber derivatives; closed form against numeric."""
    checks = []
    k2 = KernelFunction.shifted_coulomb([0.0, 0.0], 0.5)
    k3 = KernelFunction.shifted_coulomb([0.0, 0.0, 0.0], 0.5)
    f2 = fiber(k2, [(1, 1.0)])
    f3 = fiber(k3, [(1, 1.0), (2, 0.5)])
    expected = {1: 1, 2: 2, 3: 2}
    for order, want in expected.items():
        cf = normality.zero_locus_closed_form(k2, f2, order)
        num = normality.count_zeros_numeric(f2.derivative(order), (-50, 50))
        checks.append(Check(f"zeros_2d_order{order}", "zero count of (f_y)^(m) on a 2D Coulomb fiber",
                            {"closed_form": cf.count, "numeric": num.count}, want,
                            _status(cf.count == want and num.count == want),
                            {"zeros": list(num.zeros)}))
    cf = normality.zero_locus_closed_form(k3, f3, 4)
    num = normality.count_zeros_numeric(f3.derivative(4), (-50, 50))
    checks.append(Check("zeros_3d_order4", "zero count of the fourth fiber derivative in 3D",
                        {"closed_form": cf.count, "numeric": num.count}, 4,
                        _status(cf.count == 4 and num.count == 4)))
    rng = np.random.default_rng(cfg.seed)
    mism, n = 0, 0
    while n < cfg.random_fibers:
        dim = 2 if n % 2 == 0 else 3
        kk = KernelFunction.shifted_coulomb(rng.uniform(-2, 2, size=dim), 0.5)
        axis = int(rng.integers(dim))
        fixed = [(a, float(kk.center[a] + rng.uniform(-6, 6))) for a in range(dim) if a != axis]
        f = fiber(kk, fixed)
        if f.meets_exclusion():
            continue
        order = int(rng.integers(1, 4 if dim == 2 else 5))
        cf = normality.zero_locus_closed_form(kk, f, order)
        X = normality.max_root_ratio(order) * f.offset + 20 * f.offset + 5
        num = normality.count_zeros_numeric(f.derivative(order), (f.along_center - X, f.along_center + X))
        if cf.count != num.count or not np.allclose(cf.zeros, num.zeros, atol=1e-8):
            mism += 1
        n += 1
    checks.append(Check("closed_vs_numeric", "closed-form and numeric zero loci agree on random fibers",
                        mism, 0, _status(mism == 0), {"fibers": n}))
    cert = normality.certify(k2, 2)
    checks.append(Check("val_2d", "2D Coulomb kernel is normal with val = 2", {"kind": cert.kind, "val": cert.val},
                        {"kind": normality.NORMAL, "val": 2},
                        _status(cert.kind == normality.NORMAL and cert.val == 2)))
    return checks


def _suite_examples2_3d(cfg):
    checks = []
    k3 = KernelFunction.shifted_coulomb([0.2, -0.1, 0.3], 0.5)
    cert = normality.certify(k3, 3)
    checks.append(Check("val_3d", "3D Coulomb kernel is normal with val = 4", {"kind": cert.kind, "val": cert.val},
                        {"kind": normality.NORMAL, "val": 4},
                        _status(cert.kind == normality.NORMAL and cert.val == 4)))
    kb = KernelFunction.density_potential(bump_density(3))
    cb = iterated.require_certificate(kb, 3)
    checks.append(Check("bump_3d", "potential of a nonnegative density is quasi normal", cb.kind,
                        normality.QUASI_NORMAL, _status(cb.kind == normality.QUASI_NORMAL)))
    return checks


def _fit_check(name, anchor, cert: DecayCertificate, floor):
    return Check(name, anchor, cert.fitted_exponent, floor, _status(cert.fitted_exponent >= floor),
                 {"order": cert.order, "constant": cert.constant})


def _suite_normal4_decay(cfg):
    """Fitted decay exponents over radii [8, 64]."""
    checks = []
    radii = normality.ProbeConfig().radii
    kernels = {"coulomb2d": KernelFunction.shifted_coulomb([0.3, -0.2], 0.5),
               "coulomb3d": KernelFunction.shifted_coulomb([0.2, -0.1, 0.3], 0.5),
               "bump3d": KernelFunction.density_potential(bump_density(3))}
    for name, kk in kernels.items():
        dim = kk.dimension
        c = normality.decay_fit(normality.sample_decay(kk, (0,) * dim, radii), 1)
        checks.append(_fit_check(f"{name}_f", "f is of very moderate decrease", c, 0.85))
        for axis in range(dim):
            mi = [0] * dim
            mi[axis] = 1
            c = normality.decay_fit(normality.sample_decay(kk, mi, radii), 2)
            checks.append(_fit_check(f"{name}_d{''.join(map(str, mi))}", "first partials decrease with order 2",
                                     c, 1.85))
        if dim == 3:
            for m in range(2, 5):
                worst = None
                for mi in normality._multi_indices(3, m):
                    c = normality.decay_fit(normality.sample_decay(kk, mi, radii), m + 1)
                    if worst is None or c.fitted_exponent < worst[1].fitted_exponent:
                        worst = (mi, c)
                checks.append(_fit_check(f"{name}_mixed_order{m}", "mixed partials of order m decrease with m + 1",
                                         worst[1], m + 0.85))
    kb = kernels["bump3d"]
    fam = iterated.partial_transforms_3d(kb, (1.0, 1.0, 1.0), cfg.iterated())
    checks.append(_fit_check("single_A", "A(k1, y, z) decreases with order 3", fam.singles["A"].certificate(), 2.7))
    checks.append(_fit_check("double_F", "F(k1, k2, z) decreases with order 2", fam.doubles["F"].certificate(), 1.8))
    k2 = KernelFunction.density_potential(bump_density(2))
    F2 = iterated.partial_transform_2d(k2, 1.0, cfg.iterated())
    checks.append(_fit_check("single_2d", "F(k1, y) decreases with order 2", F2.certificate(), 1.8))
    return checks


def _suite_normal_bound(cfg):
    """Regularization invariance on Coulomb fibers and the printed tail bound."""
    checks = []
    rng = np.random.default_rng(cfg.seed)
    base = cfg.quad()
    variants = [osc_quad.QuadConfig(target_tol=cfg.tol, ibp_depth=d) for d in (0, 1, 2, 3)]
    variants += [osc_quad.QuadConfig(target_tol=cfg.tol, split_point=a) for a in (-2.5, 1.7, 4.0)]
    worst, n, conv = 0.0, 0, True
    for kk in (KernelFunction.shifted_coulomb([0.3, -0.2], 0.5),
               KernelFunction.shifted_coulomb([0.2, -0.1, 0.3], 0.5)):
        for axis in range(kk.dimension):
            fibers, _ = normality._probe_fibers(kk, axis, normality.ProbeConfig().fibers_per_axis, rng)
            for f in fibers:
                for kw in (1.0, -2.0):
                    ref = osc_quad.fourier_integral_1d(f, kw, base)
                    conv &= ref.converged
                    for q in variants:
                        r = osc_quad.fourier_integral_1d(f, kw, q)
                        conv &= r.converged
                        worst = max(worst, abs(r.value - ref.value) / (r.error_estimate + ref.error_estimate))
                    n += 1
    checks.append(Check("regularization_invariance", "split point and depth of the lift do not change the value",
                        worst, 1.0, _status(worst <= 1.0, conv), {"fiber_k_pairs": n}))
    # printed bound on the truncated tail of F(k1, y) for a normal kernel
    kk = KernelFunction.shifted_coulomb([0.3, -0.2], 0.5)
    cert = normality.certify(kk, 2)
    C = cert.decay["d10"].constant
    worst = 0.0
    for y in (1.5, -3.0, 7.0):
        f = fiber(kk, [(1, y)])
        for kw in (1.0, 2.0):
            full = osc_quad.fourier_integral_1d(f, kw, base).value
            ns = [2 * np.pi / kw * (j + 0.25) for j in (4, 8, 16, 32)]
            tr, _ = osc_quad.truncated_line_integrals(kk, 0, [[y]], kw, ns)
            for nn, v in zip(ns, tr[:, 0]):
                b = osc_quad.tail_bound(C, 2, nn, kw, cert.val)
                worst = max(worst, abs(v - full) / b)
    checks.append(Check("tail_bound", "|F - truncated| <= 8 pi (val+1) C/(k^2 n)", worst, 1.0, _status(worst <= 1.0)))
    return checks


def _suite_normal1_equality(cfg):
    """2D ordering equality on the k grid and the double-limit monitor."""
    checks = []
    kk = KernelFunction.density_potential(bump_density(2))
    icfg = cfg.iterated()
    worst, conv, rows = 0.0, True, []
    t0 = time.perf_counter()
    for k1 in cfg.k_grid_2d:
        for k2 in cfg.k_grid_2d:
            r = iterated.full_transform_2d(kk, k1, k2, icfg, monitor=False)
            dev = abs(r.values["xy"] - r.values["yx"])
            allow = max(1e-4 * abs(r.value), r.per_ordering_error["xy"] + r.per_ordering_error["yx"])
            worst = max(worst, dev / allow)
            conv &= r.all_converged
            rows.append({"k": [k1, k2], "deviation": dev, "allowance": allow})
    checks.append(Check("fubini_2d", "F_xy = F_yx on the k grid", worst, 1.0, _status(worst <= 1.0, conv),
                        {"cases": rows}, time.perf_counter() - t0))
    t0 = time.perf_counter()
    table, limits, m_vals, n_vals = iterated.double_limit_table(kk, 1.0, 1.0, icfg)
    mo = iterated.moore_osgood_monitor(table, n_vals, limits, m_vals)
    dt = time.perf_counter() - t0
    slopes_ok = all(iterated.MONITOR_SLOPE[0] <= s <= iterated.MONITOR_SLOPE[1] for s in mo["slopes"])
    checks.append(Check("tail_slopes", "|s_mn - s_m| decays like 1/n", mo["slopes"], list(iterated.MONITOR_SLOPE),
                        _status(slopes_ok), seconds=dt))
    checks.append(Check("uniform_in_m", "tail constants uniform in m", mo["spread"], iterated.MONITOR_SPREAD,
                        _status(mo["spread"] <= iterated.MONITOR_SPREAD), seconds=dt))
    return checks


def _suite_normal5_equality(cfg):
    """3D six-ordering equality and agreement with the brute-force oracle."""
    checks = []
    kk = KernelFunction.density_potential(bump_density(3))
    icfg = cfg.iterated()
    ref = None
    for kv in cfg.k_3d:
        t0 = time.perf_counter()
        r = iterated.full_transform_3d(kk, *kv, cfg=icfg)
        allow = max(1e-3 * abs(r.value), r.error_allowance)
        checks.append(Check(f"six_orderings_{'_'.join(f'{c:g}' for c in kv)}",
                            "A = B = C = F = G = H", r.max_pairwise_deviation, allow,
                            _status(r.max_pairwise_deviation <= allow, r.all_converged),
                            {"values": r.values, "errors": r.per_ordering_error}, time.perf_counter() - t0))
        if tuple(kv) == (1.0, 1.0, 1.0):
            ref = (r, time.perf_counter() - t0)
    if ref is None:
        t0 = time.perf_counter()
        r = iterated.full_transform_3d(kk, 1.0, 1.0, 1.0, cfg=icfg)
        ref = (r, time.perf_counter() - t0)
    t0 = time.perf_counter()
    orc = oracle_transform_bruteforce(kk, (1.0, 1.0, 1.0), cfg.oracle_boxes)
    rel = abs(ref[0].value - orc.value) / abs(orc.value)
    # time of the (1,1,1) transform plus the oracle
    checks.append(Check("oracle_111", "iterated value matches the expanding-box oracle", rel, 1e-3,
                        _status(rel <= 1e-3), {"iterated": ref[0].value, "oracle": orc.value,
                                               "oracle_accuracy": orc.estimated_accuracy},
                        ref[1] + time.perf_counter() - t0))
    return checks


_SUITE_FUNCS = {
    "modulus": _suite_modulus, "modulus2": _suite_modulus2, "modulus3": _suite_modulus3,
    "example2d": _suite_example2d, "normal_bound": _suite_normal_bound,
    "normal1_equality": _suite_normal1_equality, "examples2_3d": _suite_examples2_3d,
    "normal4_decay": _suite_normal4_decay, "normal5_equality": _suite_normal5_equality,
}

# acceptance criterion -> suite holding its checks
CRITERION_SUITES = {1: "modulus", 2: "example2d", 3: "normal4_decay", 4: "normal1_equality",
                    5: "normal5_equality", 6: "normal5_equality", 7: "normal1_equality", 8: "normal_bound"}


def verify_lemma(suite: str, cfg: Optional[HarnessConfig] = None) -> VerificationReport:
    """Run one verification suite and aggregate its checks."""
    if suite not in _SUITE_FUNCS:
        raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")
    cfg = cfg or HarnessConfig()
    _set_threads(cfg.threads)
    t0 = time.perf_counter()
    checks = _SUITE_FUNCS[suite](cfg)
    return VerificationReport(suite, checks, cfg.to_dict(), time.perf_counter() - t0)


def _set_threads(n: int):
    try:
        import numba
        # the TBB layer warns on older TBB builds; the other layers are always usable
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
    except (ImportError, ValueError):
        log.debug("thread count left unchanged")


# ---------------------------------------------------------------------------
# plot data

def _rows_from(obj):
    if isinstance(obj, osc_quad.TransformResult):
        return [(t[0], t[1].real, t[1].imag, t[2] if len(t) > 2 else float("nan")) for t in obj.trace]
    if isinstance(obj, DecayCertificate):
        rows = []
        for r, v in obj.evidence:
            fit = obj.constant / r**obj.order
            rows.append((r, v, 0.0, fit))
        return rows
    if isinstance(obj, dict) and "trace" in obj:
        return [(t[0], t[1], t[2], t[3] if len(t) > 3 and t[3] is not None else float("nan")) for t in obj["trace"]]
    rows = []
    for t in obj:
        if len(t) == 2:
            r, v = t
            b = float("nan")
        else:
            r, v, b = t[:3]
        v = complex(v)
        rows.append((float(r), v.real, v.imag, float(b)))
    return rows


def emit_plot_data(obj, path) -> Path:
    """Write a CSV (radius, value_re, value_im, bound) for a trace or decay evidence.

    Decay certificates write (radius, max|f|, 0, fitted constant/r^order).
    """
    path = Path(path)
    rows = _rows_from(obj)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(PLOT_HEADER)
            for row in rows:
                w.writerow([repr(float(x)) for x in row])
    except OSError as exc:
        raise OSError(f"cannot write plot data to {path}: {exc}") from exc
    return path
