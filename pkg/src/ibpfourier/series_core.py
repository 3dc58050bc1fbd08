"""
Power series at infinity.

A function f is represented near +inf (or -inf) by the one-sided series

    f(1/x) = sum_{n >= 1} a_n x^n ,   0 < |x| < radius,

with no constant term.  The positive side uses x > 0, the negative side x < 0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_ORDER = 24
MAX_RADIUS = 1e6
# exact factorial formula up to here, ratio recurrence above
_FACTORIAL_LIMIT = 20

POSITIVE = "positive"
NEGATIVE = "negative"
_SIDES = (POSITIVE, NEGATIVE)


class IdenticallyZeroTail(ValueError):
    """Raised when a series has no nonzero coefficient."""


def newton_binomial_coeff(n: int) -> float:
    """Coefficient b_n of (1 + q)^(-1/2) = sum b_n q^n.

    b_n = (-1)^n (2n)! / (2^(2n) (n!)^2); above n = 20 the ratio
    b_{n+1}/b_n = -(2n+1)/(2n+2) is used to avoid huge factorials.
    """
    n = int(n)
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n <= _FACTORIAL_LIMIT:
        num = math.factorial(2 * n)
        den = 4**n * math.factorial(n) ** 2
        return (-1) ** n * (num / den)
    b = newton_binomial_coeff(_FACTORIAL_LIMIT)
    for m in range(_FACTORIAL_LIMIT, n):
        b *= -(2 * m + 1) / (2 * m + 2)
    return b


def newton_binomial_coeffs(n_max: int) -> np.ndarray:
    """Array [b_0, ..., b_{n_max}]."""
    return np.array([newton_binomial_coeff(n) for n in range(n_max + 1)])


def _geometric_ratio(coeffs: np.ndarray, radius: float) -> float:
    # growth ratio for the tail majorant; never below the radius rate
    q = 1.0 / radius
    a, b = abs(coeffs[-1]), abs(coeffs[-2]) if len(coeffs) > 1 else 0.0
    if a > 0 and b > 0:
        q = max(q, a / b)
    return q


def geometric_remainder(coeffs: Sequence[float], radius: float, x: float) -> float:
    """Majorant of sum_{n > N} |a_n| |x|^n assuming |a_n| <= A q^(n-N).

    A is taken from the last two retained coefficients so that a trailing
    zero (series with every other coefficient vanishing) does not hide the tail.
    """
    c = np.asarray(coeffs, dtype=float)
    N = len(c)
    x = abs(float(x))
    if x == 0.0:
        return 0.0
    q = _geometric_ratio(c, radius)
    A = abs(c[-1])
    if N > 1:
        A = max(A, abs(c[-2]) * q)
    if A == 0.0:
        return 0.0
    t = q * x
    if t >= 1.0:
        return math.inf
    return A * x**N * t / (1.0 - t)


@dataclass(frozen=True)
class SeriesAtInfinity:
    """Truncated series a_1 x + ... + a_N x^N for f(1/x) on one side of 0.

    ``remainder_bound`` majorizes the discarded tail on 0 < |x| <= radius/2,
    the range on which the module evaluates and derives constants.
    """

    side: str
    coefficients: tuple
    radius: float
    truncation_order: int = field(default=0)
    remainder_bound: float = field(default=math.nan)

    def __post_init__(self):
        if self.side not in _SIDES:
            raise ValueError(f"side must be one of {_SIDES}")
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) < 1:
            raise ValueError("need at least one coefficient")
        object.__setattr__(self, "coefficients", coeffs)
        if not self.truncation_order:
            object.__setattr__(self, "truncation_order", len(coeffs))
        if self.truncation_order != len(coeffs):
            raise ValueError("truncation_order must equal the number of coefficients")
        if not (self.radius > 0):
            raise ValueError("radius must be positive")
        if math.isnan(self.remainder_bound):
            rb = geometric_remainder(coeffs, self.radius, self.radius / 2)
            object.__setattr__(self, "remainder_bound", rb)
        if self.remainder_bound < 0:
            raise ValueError("remainder_bound must be nonnegative")

    @property
    def coeffs(self) -> np.ndarray:
        return np.array(self.coefficients)

    @property
    def sign(self) -> int:
        return 1 if self.side == POSITIVE else -1

    def evaluate(self, x):
        """Truncated sum at x (x > 0 on the positive side, x < 0 on the negative)."""
        x = np.asarray(x, dtype=float)
        if np.any(x * self.sign <= 0) or np.any(np.abs(x) >= self.radius):
            raise ValueError("x outside the one-sided disc of convergence")
        # Horner from the highest retained power
        acc = np.zeros_like(x)
        for a in reversed(self.coefficients):
            acc = (acc + a) * x
        return acc if acc.ndim else float(acc)

    def at_infinity(self, X):
        """Approximation of f(X) for |X| > 1/radius on this side."""
        return self.evaluate(1.0 / np.asarray(X, dtype=float))

    def remainder_at(self, x) -> float:
        return geometric_remainder(self.coefficients, self.radius, x)

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "radius": self.radius,
            "coefficients": list(self.coefficients),
            "remainder_bound": self.remainder_bound,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SeriesAtInfinity":
        return cls(
            side=d["side"],
            coefficients=tuple(d["coefficients"]),
            radius=float(d["radius"]),
            remainder_bound=float(d.get("remainder_bound", math.nan)),
        )


@dataclass(frozen=True)
class DecayCertificate:
    """Evidence that |f| <= constant / r^order beyond ``threshold``.

    ``evidence`` holds (radius, max|f|) pairs and ``noise`` the matching
    absolute uncertainty (zero for exact samples).  A fitted exponent of
    +inf means every sample was below its noise level.
    """

    decay_class: str
    order: int
    constant: float
    threshold: float
    fitted_exponent: float
    evidence: tuple = ()
    noise: tuple = ()
    passed: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        fe = self.fitted_exponent
        return {
            "decay_class": self.decay_class,
            "order": self.order,
            "constant": self.constant,
            "threshold": self.threshold,
            "fitted_exponent": fe if math.isfinite(fe) else str(fe),
            "evidence": [list(e) for e in self.evidence],
            "noise": list(self.noise),
            "passed": self.passed,
            "note": self.note,
        }


def decay_class_for(order: int) -> str:
    return "very_moderate" if order <= 1 else "moderate"


def expand_coulomb1d(d: float, side: str = POSITIVE, order: int = DEFAULT_ORDER,
                     max_radius: float = MAX_RADIUS) -> SeriesAtInfinity:
    """Series of f(x) = 1/|x - d| at +inf or -inf.

    For x > 0 small, f(1/x) = x/(1 - d x) = sum d^(n-1) x^n; on the negative
    side every coefficient changes sign.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if side not in _SIDES:
        raise ValueError(f"side must be one of {_SIDES}")
    d = float(d)
    sign = 1.0 if side == POSITIVE else -1.0
    coeffs = sign * np.array([d ** (n - 1) if n > 1 else 1.0 for n in range(1, order + 1)])
    radius = max_radius if d == 0 else min(1.0 / abs(d), max_radius)
    if d == 0:
        return SeriesAtInfinity(side, tuple(coeffs), radius, order, 0.0)
    return SeriesAtInfinity(side, tuple(coeffs), radius, order)


def differentiate_series(s: SeriesAtInfinity) -> SeriesAtInfinity:
    """Series of f'(1/x) from that of f(1/x): c_1 = 0, c_n = -(n-1) a_(n-1)."""
    N = s.truncation_order
    if N < 2:
        raise ValueError("truncation_order must be >= 2")
    a = s.coeffs
    c = np.zeros(N)
    n = np.arange(2, N + 1)
    c[1:] = -(n - 1) * a[:-1]
    # tail: the dropped terms involve a_N, a_(N+1), ... under the same majorant
    x = s.radius / 2
    q = _geometric_ratio(a, s.radius)
    A = max(abs(a[-1]), abs(a[-2]) * q if N > 1 else 0.0)
    t = q * x
    if A == 0.0 and s.remainder_bound == 0.0:
        rb = 0.0
    elif t >= 1.0:
        rb = math.inf
    else:
        # sum_{m >= N} m A t^(m-N) x^(m+1)
        rb = A * x ** (N + 1) * (N / (1 - t) + t / (1 - t) ** 2)
    return SeriesAtInfinity(s.side, tuple(c), s.radius, N, rb)


def decay_order_from_series(s: SeriesAtInfinity) -> tuple[int, float]:
    """Leading order n and a constant M with |f(X)| <= M/|X|^n for |X| > 2/radius.

    Writes f(1/x) = x^n u(x) and bounds |u| on (0, radius/2] by the absolute
    coefficient sum plus the remainder.
    """
    a = s.coeffs
    nz = np.flatnonzero(a)
    if len(nz) == 0:
        raise IdenticallyZeroTail("identically zero tail")
    n = int(nz[0]) + 1
    x = s.radius / 2
    powers = x ** np.arange(0, len(a) - n + 1)
    M = float(np.sum(np.abs(a[n - 1:]) * powers))
    if s.remainder_bound:
        M += s.remainder_bound / x**n
    return n, M
