"""
Kernel families: shifted Coulomb potentials and potentials of sampled densities.

A ``KernelFunction`` is either ``1/|p - center|`` outside a closed ball W, or
the grid quadrature of  int rho(q) / |p - q| dq  for a compactly supported
density sampled on a regular grid (midpoint rule, with the cell containing p
replaced by the exact integral of 1/|.| over that cell).
"""
from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy.special import comb

from . import fields
from .series_core import (DEFAULT_ORDER, MAX_RADIUS, NEGATIVE, POSITIVE, SeriesAtInfinity,
                          newton_binomial_coeffs)

log = logging.getLogger(__name__)

SHIFTED_COULOMB = "shifted_coulomb"
DENSITY_POTENTIAL = "density_potential"
DEFAULT_EXCLUSION_RADIUS = 0.5
MAX_DERIVATIVE = 4


class DomainError(ValueError):
    """Evaluation requested where the kernel is not defined (or not smooth)."""


class ZeroWaveNumberError(ValueError):
    """Raised when a transform is requested at a zero wave component."""


class DensityInputError(ValueError):
    """Malformed or inconsistent density data."""


# ---------------------------------------------------------------------------
# density grids

@dataclass(frozen=True, eq=False)
class DensityGrid:
    """Samples rho(origin + i * spacing) of a compactly supported density."""

    dimension: int
    origin: tuple
    spacing: tuple
    values: np.ndarray
    support_radius: float
    sup_bound: Optional[float] = None
    nonnegative: Optional[bool] = None
    is_smooth: bool = False

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise DensityInputError("dimension must be 2 or 3")
        vals = np.array(self.values, dtype=float)
        if vals.ndim != self.dimension:
            raise DensityInputError("values must have one axis per dimension")
        if len(self.origin) != self.dimension or len(self.spacing) != self.dimension:
            raise DensityInputError("origin and spacing need one entry per axis")
        if any(h <= 0 for h in self.spacing):
            raise DensityInputError("spacing must be positive")
        if not np.all(np.isfinite(vals)):
            raise DensityInputError("density contains NaN or infinite values")
        if not np.any(vals != 0):
            raise DensityInputError("rho != 0 required (all-zero grid)")
        if not (self.support_radius > 0):
            raise DensityInputError("support_radius must be positive")
        r = np.sqrt(sum(c**2 for c in np.meshgrid(*self.axes(vals.shape), indexing="ij", sparse=True)))
        outside = (vals != 0) & (r > self.support_radius * (1 + 1e-12))
        if outside.any():
            i = tuple(int(v) for v in np.argwhere(outside)[0])
            raise DensityInputError(
                f"support violation: nonzero value at index {i}, radius {r[i]:.6g} > {self.support_radius}")
        vmax = float(np.max(np.abs(vals)))
        if self.sup_bound is None:
            object.__setattr__(self, "sup_bound", vmax)
        elif self.sup_bound < vmax:
            raise DensityInputError("sup_bound below max|rho|")
        nonneg = bool(vals.min() >= 0)
        if self.nonnegative is None:
            object.__setattr__(self, "nonnegative", nonneg)
        elif self.nonnegative and not nonneg:
            raise DensityInputError("declared nonnegative but has negative values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "spacing", tuple(float(v) for v in self.spacing))

    def axes(self, shape=None):
        shape = self.values.shape if shape is None else shape
        return [self.origin[i] + np.arange(shape[i]) * self.spacing[i] for i in range(self.dimension)]

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def total_mass(self) -> float:
        return float(self.values.sum() * self.cell_volume)

    def sources(self):
        """Nonzero cell centers (S, 3) and weights rho * cell volume."""
        idx = np.argwhere(self.values != 0)
        pos = np.zeros((len(idx), 3))
        pos[:, : self.dimension] = np.asarray(self.origin) + idx * np.asarray(self.spacing)
        return pos, self.values[tuple(idx.T)] * self.cell_volume

    def with_values(self, values, **kw) -> "DensityGrid":
        return DensityGrid(self.dimension, self.origin, self.spacing, values,
                           self.support_radius, is_smooth=kw.get("is_smooth", self.is_smooth))

    def split(self):
        """(rho+, rho-) with rho+ = max(rho, 0), rho- = min(rho, 0); a part may be None."""
        parts = []
        for v in (np.maximum(self.values, 0.0), np.minimum(self.values, 0.0)):
            parts.append(self.with_values(v) if np.any(v != 0) else None)
        return tuple(parts)


def _bump_mass(dim: int) -> float:
    # int_{|x|<1} (1 - |x|^2)^4 dx
    if dim == 3:
        return 2 * math.pi * math.gamma(1.5) * math.gamma(5) / math.gamma(6.5)
    return math.pi / 5


def bump_profile(r, dim: int, support_radius: float = 1.0):
    """Unit-mass radial bump c (1 - r^2/M^2)^4 on r <= M."""
    M = support_radius
    c = 1.0 / (_bump_mass(dim) * M**dim)
    r = np.asarray(r, dtype=float)
    return np.where(r < M, c * np.clip(1 - (r / M) ** 2, 0, None) ** 4, 0.0)


def bump_density(dim: int = 3, n: Optional[int] = None, support_radius: float = 1.0,
                 center=None) -> DensityGrid:
    """Cell-centred samples of the unit-mass bump on [-M, M]^dim (n cells per axis).

    Defaults: 64 cells per axis in 3D, 256 in 2D.
    """
    if n is None:
        n = 64 if dim == 3 else 256
    M = support_radius
    h = 2 * M / n
    x = -M + (np.arange(n) + 0.5) * h
    mesh = np.meshgrid(*([x] * dim), indexing="ij", sparse=True)
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    r = np.sqrt(sum((m - ci) ** 2 for m, ci in zip(mesh, c)))
    vals = bump_profile(r, dim, M)
    extent = float(np.linalg.norm(c)) + M
    return DensityGrid(dim, tuple([x[0]] * dim), tuple([h] * dim), vals, extent, is_smooth=True)


_HEADER = re.compile(r"^#\s*(.*)$")


def load_density(path, metadata: Optional[dict] = None) -> DensityGrid:
    """Read the CSV schema

        # dim=3 origin=x0,y0,z0 spacing=hx,hy,hz support_radius=M
        i,j,k,value

    Missing grid points are zero.  ``metadata`` overrides or completes header
    fields (``dim``, ``origin``, ``spacing``, ``support_radius``, ``is_smooth``,
    ``sup_bound``, ``nonnegative``).
    """
    path = Path(path)
    meta: dict = {}
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            m = _HEADER.match(line)
            if m:
                for tok in m.group(1).split():
                    if "=" in tok:
                        k, v = tok.split("=", 1)
                        meta[k.strip()] = v.strip()
                continue
            parts = line.split(",")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise DensityInputError(f"{path}:{lineno}: non-numeric field") from exc
    meta.update(metadata or {})
    try:
        dim = int(meta["dim"])
        origin = _vec(meta["origin"], dim)
        spacing = _vec(meta["spacing"], dim)
        M = float(meta["support_radius"])
    except KeyError as exc:
        raise DensityInputError(f"{path}: header field {exc} missing") from exc
    if not rows:
        raise DensityInputError(f"{path}: no data rows")
    data = np.array(rows)
    if data.shape[1] != dim + 1:
        raise DensityInputError(f"{path}: expected {dim + 1} columns, got {data.shape[1]}")
    idx = data[:, :dim]
    if np.any(idx < 0) or np.any(idx != np.round(idx)):
        raise DensityInputError(f"{path}: indices must be nonnegative integers")
    idx = idx.astype(int)
    vals = np.zeros(tuple(idx.max(axis=0) + 1))
    vals[tuple(idx.T)] = data[:, dim]
    smooth = meta.get("is_smooth", False)
    if isinstance(smooth, str):
        smooth = smooth.lower() in ("1", "true", "yes")
    sup = meta.get("sup_bound")
    nonneg = meta.get("nonnegative")
    if isinstance(nonneg, str):
        nonneg = nonneg.lower() in ("1", "true", "yes")
    return DensityGrid(dim, origin, spacing, vals, M,
                       sup_bound=None if sup is None else float(sup),
                       nonnegative=nonneg, is_smooth=bool(smooth))


def _vec(v, dim):
    if isinstance(v, str):
        v = [float(t) for t in v.split(",")]
    v = tuple(float(t) for t in np.atleast_1d(v))
    if len(v) == 1:
        v = v * dim
    if len(v) != dim:
        raise DensityInputError(f"expected {dim} components, got {len(v)}")
    return v


def write_density(grid: DensityGrid, path) -> None:
    """Write ``grid`` in the CSV schema read by ``load_density`` (nonzero rows only)."""
    with open(path, "w") as fh:
        fh.write(f"# dim={grid.dimension} origin={','.join(repr(float(v)) for v in grid.origin)} "
                 f"spacing={','.join(repr(float(v)) for v in grid.spacing)} "
                 f"support_radius={float(grid.support_radius)!r} is_smooth={str(grid.is_smooth).lower()}\n")
        for idx in np.argwhere(grid.values != 0):
            fh.write(",".join(str(int(i)) for i in idx) + f",{float(grid.values[tuple(idx)])!r}\n")


# ---------------------------------------------------------------------------
# kernels

class KernelFunction:
    """Shifted Coulomb kernel or density potential in dimension 1, 2 or 3."""

    def __init__(self, dimension: int, family: str, center=None,
                 exclusion_radius: Optional[float] = None, grid: Optional[DensityGrid] = None):
        self.dimension = int(dimension)
        self.family = family
        if family == SHIFTED_COULOMB:
            self.center = np.asarray(center, dtype=float).reshape(self.dimension)
            s = DEFAULT_EXCLUSION_RADIUS if exclusion_radius is None else float(exclusion_radius)
            if not s > 0:
                raise ValueError("exclusion_radius must be positive")
            self.exclusion_radius = s
            self.grid = None
        elif family == DENSITY_POTENTIAL:
            if grid is None or grid.dimension != self.dimension:
                raise ValueError("density potential needs a grid of matching dimension")
            self.grid = grid
            self.center = np.zeros(self.dimension)
            self.exclusion_radius = None
        else:
            raise ValueError(f"unknown family {family!r}")

    @classmethod
    def shifted_coulomb(cls, center, exclusion_radius: Optional[float] = None) -> "KernelFunction":
        center = np.atleast_1d(np.asarray(center, dtype=float))
        return cls(len(center), SHIFTED_COULOMB, center=center, exclusion_radius=exclusion_radius)

    @classmethod
    def density_potential(cls, grid: DensityGrid) -> "KernelFunction":
        return cls(grid.dimension, DENSITY_POTENTIAL, grid=grid)

    def __repr__(self):
        if self.family == SHIFTED_COULOMB:
            return (f"KernelFunction(shifted_coulomb, center={self.center.tolist()}, "
                    f"s={self.exclusion_radius})")
        return f"KernelFunction(density_potential, dim={self.dimension}, shape={self.grid.values.shape})"

    @property
    def is_coulomb(self) -> bool:
        return self.family == SHIFTED_COULOMB

    @property
    def smoothness_domain(self) -> str:
        if self.is_coulomb:
            return f"R^{self.dimension} minus closed ball B({self.center.tolist()}, {self.exclusion_radius})"
        if self.grid.is_smooth:
            return f"R^{self.dimension}"
        return f"R^{self.dimension} minus support ball B(0, {self.grid.support_radius})"

    @property
    def support_radius(self) -> float:
        """Radius of a ball about the origin containing W (Coulomb) or the support."""
        if self.is_coulomb:
            return float(np.linalg.norm(self.center) + self.exclusion_radius)
        return float(self.grid.support_radius)

    @cached_property
    def field(self):
        """Fast evaluator used by the quadrature modules."""
        if self.is_coulomb:
            return fields.CoulombField(self.center)
        return fields.DensityField(self.grid)

    @cached_property
    def _sources(self):
        return self.grid.sources()

    # -- pointwise evaluation ------------------------------------------------

    def _points(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.dimension:
            if self.dimension == 1 and (p.ndim == 0 or p.shape[-1] != 1):
                p = p[..., None]
            else:
                raise ValueError(f"points must have last axis {self.dimension}")
        return p

    def _check_w(self, pts):
        r = np.linalg.norm(pts.reshape(-1, self.dimension) - self.center, axis=1)
        if np.any(r <= self.exclusion_radius):
            raise DomainError("point inside the excluded ball W")

    def eval(self, p):
        """f(p); scalar for a single point, array for a batch."""
        return self.partial_derivative((0,) * self.dimension, p)

    def partial_derivative(self, multi_index, p):
        """d^alpha f(p) from the homogeneous closed form p_alpha(d) / |d|^(1 + 2|alpha|)."""
        mi = tuple(int(m) for m in multi_index)
        if len(mi) != self.dimension or min(mi) < 0:
            raise ValueError("multi_index must have one nonnegative entry per axis")
        if sum(mi) > MAX_DERIVATIVE:
            raise ValueError(f"derivatives of total order > {MAX_DERIVATIVE} unsupported")
        pts = self._points(p)
        shape = pts.shape[:-1]
        if self.is_coulomb:
            self._check_w(pts)
            out = self.field.evaluate(pts.reshape(-1, self.dimension), mi)
        else:
            out = self._density_direct(pts.reshape(-1, self.dimension), mi)
        out = np.asarray(out).reshape(shape)
        return float(out) if out.ndim == 0 else out

    def _density_direct(self, pts, mi):
        g = self.grid
        h = np.asarray(g.spacing)
        org = np.asarray(g.origin)
        src, w = self._sources
        pts3 = fields._pad3(pts)
        idx = np.rint((pts - org) / h).astype(int)
        inside_grid = np.all((idx >= 0) & (idx < np.array(g.values.shape)), axis=1)
        rho_here = np.zeros(len(pts))
        rho_here[inside_grid] = g.values[tuple(idx[inside_grid].T)]
        singular = rho_here != 0
        order = sum(mi)
        out = np.empty(len(pts))
        if order > 0:
            half_diag = 0.5 * float(np.linalg.norm(h))
            in_supp = np.linalg.norm(pts, axis=1) <= g.support_radius + half_diag
            if in_supp.any():
                if not g.is_smooth:
                    raise DomainError("derivative inside the support of a non-smooth density")
                out[in_supp] = self.field.evaluate(pts[in_supp], mi)
            rest = ~in_supp
            if rest.any():
                exps, coefs, o = fields.numerator_arrays(mi)
                tmp = np.empty(int(rest.sum()))
                fields._point_sum(pts3[rest], src, w, exps, coefs, o,
                                  np.full(int(rest.sum()), -1, dtype=np.int64), tmp)
                out[rest] = tmp
            return out
        # midpoint rule; the cell containing p is integrated exactly
        skip = np.full(len(pts), -1, dtype=np.int64)
        if singular.any():
            lookup = -np.ones(g.values.shape, dtype=np.int64)
            nzi = np.argwhere(g.values != 0)
            lookup[tuple(nzi.T)] = np.arange(len(nzi))
            skip[singular] = lookup[tuple(idx[singular].T)]
        exps, coefs, o = fields.numerator_arrays(mi)
        fields._point_sum(pts3, src, w, exps, coefs, o, skip, out)
        if singular.any():
            cen = org + idx[singular] * h
            out[singular] += rho_here[singular] * fields.cell_integral(pts[singular] - cen, h)
        return out

    # -- restrictions ----------------------------------------------------------

    def restrict(self, axis: int, value: float) -> "SlicedKernel":
        return SlicedKernel(self, ((int(axis), float(value)),))

    def fiber(self, fixed, derivative_order: int = 0) -> "Fiber1D":
        return fiber(self, fixed, derivative_order)

    def scaled(self, alpha: float) -> "KernelFunction":
        if self.is_coulomb:
            raise ValueError("scaling is only provided for density potentials")
        return KernelFunction.density_potential(self.grid.with_values(alpha * self.grid.values))

    def split(self):
        """Potentials of (rho+, rho-); a missing part is returned as None."""
        if self.is_coulomb:
            raise ValueError("split applies to density potentials")
        return tuple(None if g is None else KernelFunction.density_potential(g)
                     for g in self.grid.split())

    # -- descriptors -------------------------------------------------------------

    def to_dict(self) -> dict:
        if self.is_coulomb:
            return {"family": SHIFTED_COULOMB, "center": self.center.tolist(),
                    "exclusion_radius": self.exclusion_radius}
        return {"family": DENSITY_POTENTIAL, "dim": self.dimension,
                "shape": list(self.grid.values.shape), "origin": list(self.grid.origin),
                "spacing": list(self.grid.spacing), "support_radius": self.grid.support_radius,
                "mass": self.grid.total_mass}


def kernel_from_descriptor(desc: dict) -> KernelFunction:
    """Build a kernel from a JSON descriptor.

    Accepted forms::

        {"family": "shifted_coulomb", "center": [a, b], "exclusion_radius": 0.5}
        {"family": "density_potential", "path": "rho.csv"}
        {"family": "bump", "dim": 3, "n": 64, "support_radius": 1.0}
    """
    fam = desc.get("family")
    if fam == SHIFTED_COULOMB:
        return KernelFunction.shifted_coulomb(desc["center"], desc.get("exclusion_radius"))
    if fam == DENSITY_POTENTIAL:
        return KernelFunction.density_potential(load_density(desc["path"], desc.get("metadata")))
    if fam == "bump":
        grid = bump_density(int(desc.get("dim", 3)), desc.get("n"), float(desc.get("support_radius", 1.0)),
                            desc.get("center"))
        return KernelFunction.density_potential(grid)
    raise ValueError(f"unknown kernel family {fam!r}")


@dataclass(frozen=True, eq=False)
class SlicedKernel:
    """Restriction of a kernel to the affine subspace where some axes are fixed."""

    parent: KernelFunction
    fixed: tuple

    def __post_init__(self):
        axes = [a for a, _ in self.fixed]
        if len(set(axes)) != len(axes) or any(a < 0 or a >= self.parent.dimension for a in axes):
            raise ValueError("axis collision or invalid axis in slice")

    @property
    def free_axes(self) -> tuple:
        fixed = {a for a, _ in self.fixed}
        return tuple(i for i in range(self.parent.dimension) if i not in fixed)

    @property
    def dimension(self) -> int:
        return len(self.free_axes)

    def _full(self, p):
        p = np.asarray(p, dtype=float)
        if self.dimension == 1 and (p.ndim == 0 or p.shape[-1] != 1):
            p = p[..., None]
        full = np.zeros(p.shape[:-1] + (self.parent.dimension,))
        for j, a in enumerate(self.free_axes):
            full[..., a] = p[..., j]
        for a, v in self.fixed:
            full[..., a] = v
        return full

    def eval(self, p):
        return self.parent.eval(self._full(p))

    def partial_derivative(self, multi_index, p):
        mi = [0] * self.parent.dimension
        for j, a in enumerate(self.free_axes):
            mi[a] = multi_index[j]
        return self.parent.partial_derivative(mi, self._full(p))

    def restrict(self, axis: int, value: float) -> "SlicedKernel":
        return SlicedKernel(self.parent, self.fixed + ((int(axis), float(value)),))

    def fiber(self, fixed, derivative_order: int = 0) -> "Fiber1D":
        return fiber(self, fixed, derivative_order)


@dataclass(frozen=True, eq=False)
class Fiber1D:
    """One-variable restriction x -> d^order f / dx^order along ``free_axis``."""

    parent: KernelFunction
    fixed_axes: tuple
    free_axis: int
    derivative_order: int = 0

    def __post_init__(self):
        axes = sorted([a for a, _ in self.fixed_axes] + [self.free_axis])
        if axes != list(range(self.parent.dimension)):
            raise ValueError("fixed axes and free axis must cover every axis exactly once")
        if not 0 <= self.derivative_order <= MAX_DERIVATIVE:
            raise ValueError(f"derivative_order must be in 0..{MAX_DERIVATIVE}")
        object.__setattr__(self, "fixed_axes", tuple(sorted((int(a), float(v)) for a, v in self.fixed_axes)))

    @property
    def transverse(self) -> np.ndarray:
        """Fixed coordinates in increasing axis order."""
        return np.array([v for _, v in self.fixed_axes])

    def points(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        p = np.zeros(x.shape + (self.parent.dimension,))
        p[..., self.free_axis] = x
        for a, v in self.fixed_axes:
            p[..., a] = v
        return p

    # Coulomb locus coordinates: u = x - a, s = distance of the line to the center
    @property
    def offset(self) -> float:
        """Transverse distance s of the line from the kernel center (Coulomb) or the origin."""
        c = self.parent.center
        return float(np.sqrt(sum((v - c[a]) ** 2 for a, v in self.fixed_axes)))

    @property
    def along_center(self) -> float:
        return float(self.parent.center[self.free_axis])

    def meets_exclusion(self) -> bool:
        return self.parent.is_coulomb and self.offset <= self.parent.exclusion_radius

    def derivative(self, m: int = 1) -> "Fiber1D":
        return Fiber1D(self.parent, self.fixed_axes, self.free_axis, self.derivative_order + m)

    def __call__(self, x, order: Optional[int] = None):
        """Values via the kernel's fast field (see ``exact`` for the direct rule)."""
        order = self.derivative_order if order is None else order
        x = np.asarray(x, dtype=float)
        if self.parent.is_coulomb:
            self.parent._check_w(self.points(x))
        vals = self.parent.field.line_values(self.free_axis, self.transverse[None, :], x.ravel(), order)[0]
        return vals.reshape(x.shape) if x.ndim else float(vals[0])

    def exact(self, x, order: Optional[int] = None):
        order = self.derivative_order if order is None else order
        mi = [0] * self.parent.dimension
        mi[self.free_axis] = order
        return self.parent.partial_derivative(mi, self.points(x))

    def describe(self) -> dict:
        names = "xyz"
        return {"free": names[self.free_axis],
                "fixed": {names[a]: v for a, v in self.fixed_axes},
                "derivative_order": self.derivative_order}


def fiber(k, fixed, derivative_order: int = 0) -> Fiber1D:
    """Restrict ``k`` (kernel or slice) to a line by fixing all axes but one.

    ``fixed`` is a list of (axis, value) pairs or a dict; axes refer to the
    root kernel's numbering, also for slices.
    """
    if isinstance(fixed, dict):
        fixed = list(fixed.items())
    fixed = [(int(a), float(v)) for a, v in fixed]
    if isinstance(k, SlicedKernel):
        root, fixed = k.parent, list(k.fixed) + fixed
    else:
        root = k
    axes = [a for a, _ in fixed]
    if len(set(axes)) != len(axes):
        raise ValueError("axis collision in fiber specification")
    if any(a < 0 or a >= root.dimension for a in axes):
        raise ValueError("invalid axis")
    free = [i for i in range(root.dimension) if i not in axes]
    if len(free) != 1:
        raise ValueError("a fiber fixes all axes but one")
    return Fiber1D(root, tuple(fixed), free[0], derivative_order)


# ---------------------------------------------------------------------------
# series at infinity of fibers

def _composed_coefficients(b_along, A_trans, weights, order):
    """sum_c w_c * [w sum_n b_n q_c(w)^n], q_c = -2 b_c w + (A_c + b_c^2) w^2, to w^order."""
    bn = newton_binomial_coeffs(order)
    q1 = -2.0 * np.asarray(b_along, dtype=float)
    q2 = np.asarray(A_trans, dtype=float) + np.asarray(b_along, dtype=float) ** 2
    w = np.asarray(weights, dtype=float)
    # power sums S[i, j] = sum_c w_c q1_c^i q2_c^j
    S = (np.vander(q1, order, increasing=True) * w[:, None]).T @ np.vander(q2, order // 2 + 1, increasing=True)
    coeffs = np.zeros(order)
    # coefficient of w^m in q^n is C(n, m-n) q1^(2n-m) q2^(m-n), n <= m <= 2n
    for m in range(order):
        for n in range((m + 1) // 2, m + 1):
            j = m - n
            coeffs[m] += bn[n] * comb(n, j, exact=True) * S[n - j, j]
    return coeffs  # coeffs[m] multiplies w^(m+1)


def expand_fiber_at_infinity(f: Fiber1D, side: str = POSITIVE, order: int = DEFAULT_ORDER) -> SeriesAtInfinity:
    """Series of f(1/w) (w -> 0 on ``side``) by composing Newton's binomial series.

    For the Coulomb fiber with along-axis center b and transverse offset A = s^2,
    f(1/w) = |w| sum_n b_n (-2 b w + (A + b^2) w^2)^n.  The radius is the threshold
    1/(A + 2|b| + b^2) (capped at 1, where the majorization y^2 <= y holds);
    density fibers use the maximum of that quantity over the nonzero cells.
    Only the fiber itself (derivative order 0) is expanded.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if side not in (POSITIVE, NEGATIVE):
        raise ValueError("side must be 'positive' or 'negative'")
    if f.derivative_order:
        raise ValueError("expand the underlying fiber and use differentiate_series")
    k = f.parent
    sign = 1.0 if side == POSITIVE else -1.0
    if k.is_coulomb:
        b = np.array([f.along_center])
        A = np.array([f.offset**2])
        wts = np.array([1.0])
        if A[0] == 0:
            log.warning("degenerate fiber through the kernel center: %s", f.describe())
    else:
        src, wts = k._sources
        b = src[:, f.free_axis]
        A = np.zeros(len(src))
        for a, v in f.fixed_axes:
            A += (v - src[:, a]) ** 2
    coeffs = sign * _composed_coefficients(b, A, wts, order)
    M = float(np.max(A + 2 * np.abs(b) + b**2))
    if np.all(A + b**2 == 0):
        return SeriesAtInfinity(side, tuple(coeffs), MAX_RADIUS, order, 0.0)
    radius = min(1.0, 1.0 / M)
    return SeriesAtInfinity(side, tuple(coeffs), radius, order)
