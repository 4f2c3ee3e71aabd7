"""Explicit tail bounds for canonical U- and V-statistics.

Everything is evaluated in log space and clipped at probability 1.  The
constant chain for rho-mixing sequences with ``rho(k) <= c0 exp(-c1 k)`` is

    c2      = max{16, 16 (c0 e^{-c1} / (1 - e^{-c1}))^4, (4 c0 e^{c1} / c1)^2}
    tilde_c = 8 c2
    B(f)    = (C^m sum |f|)^{2/m}
    C1      = 1 / (tilde_c e)

and the tail bound for both statistics is ``exp(-C1 x^{2/m} / B(f))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize


def compute_c2(c0: float, c1: float) -> float:
    """Moment constant for an exponentially decaying mixing envelope."""
    if not c0 >= 1.0:
        raise ValueError(f"c0 must be >= 1, got {c0}")
    if not c1 > 0.0:
        raise ValueError(f"c1 must be > 0, got {c1}")
    ratio = c0 * math.exp(-c1) / -math.expm1(-c1)
    return max(16.0, 16.0 * ratio ** 4, (4.0 * c0 * math.exp(c1) / c1) ** 2)


def best_rate(c0: float, c1: float) -> float:
    """Rate in ``(0, c1]`` minimizing ``compute_c2(c0, .)``.

    An envelope ``c0 e^{-c1 k}`` also dominates with any smaller rate, and
    the last term of ``c2`` grows with the rate once it exceeds 1, so a fast
    mixing rate is not automatically the best one to plug in.
    """
    compute_c2(c0, c1)
    if c1 <= 1.0:
        return c1
    res = optimize.minimize_scalar(lambda r: compute_c2(c0, r), bounds=(1.0, c1),
                                   method="bounded", options={"xatol": 1e-10})
    candidates = [1.0, c1, float(res.x)]
    return min(candidates, key=lambda r: (compute_c2(c0, r), r))


@dataclass(frozen=True)
class BoundParameters:
    c0: float
    c1: float
    C: float
    m: int
    abs_sum: float

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("order m must be >= 1")
        if not (math.isfinite(self.C) and self.C > 0):
            raise ValueError("basis sup bound C must be finite and positive (condition (A))")
        if not (math.isfinite(self.abs_sum) and self.abs_sum >= 0):
            raise ValueError("coefficient sum must be finite and nonnegative")
        compute_c2(self.c0, self.c1)

    @classmethod
    def for_kernel(cls, kernel, c0: float, c1: float, optimize_rate: bool = False) -> BoundParameters:
        """Constants for ``kernel``; ``optimize_rate`` replaces ``c1`` by :func:`best_rate`."""
        from .kernels import ConditionViolation

        if not kernel.basis.bounded:
            raise ConditionViolation("A", f"{kernel.basis.family.value} basis is unbounded")
        if optimize_rate:
            c1 = best_rate(c0, c1)
        return cls(c0, c1, kernel.basis.sup_bound, kernel.order, kernel.coefficients.abs_sum)

    @property
    def c2(self) -> float:
        return compute_c2(self.c0, self.c1)

    @property
    def tilde_c(self) -> float:
        return 8.0 * self.c2

    @property
    def B_f(self) -> float:
        return (self.C ** self.m * self.abs_sum) ** (2.0 / self.m)

    @property
    def C1(self) -> float:
        return 1.0 / (self.tilde_c * math.e)

    @property
    def c4(self) -> float:
        return self.tilde_c * self.B_f

    def as_dict(self) -> dict:
        return {"c0": self.c0, "c1": self.c1, "C": self.C, "m": self.m,
                "abs_sum": self.abs_sum, "c2": self.c2, "tilde_c": self.tilde_c,
                "B_f": self.B_f, "C1": self.C1}


def _clip(log_p: float) -> float:
    return math.exp(min(0.0, log_p))


def log_theorem_bound(x: float, params: BoundParameters) -> float:
    if not x > 0:
        raise ValueError("x must be positive")
    if params.B_f == 0.0:
        return -math.inf
    return min(0.0, -params.C1 * x ** (2.0 / params.m) / params.B_f)


def theorem_bound(x: float, params: BoundParameters) -> float:
    """``min(1, exp(-C1 x^{2/m} / B(f)))``; serves V- and U-statistics alike."""
    return _clip(log_theorem_bound(x, params))


def hoeffding_bound(t: float, n: int, m: int, a: float, b: float) -> float:
    """``exp(-2 [n/m] t^2 / (b - a)^2)`` for a bounded nondegenerate U-statistic."""
    if not b > a:
        raise ValueError("need b > a")
    if not t > 0:
        raise ValueError("t must be positive")
    if n < m:
        raise ValueError("need n >= m")
    return _clip(-2.0 * (n // m) * t * t / (b - a) ** 2)


def bounded_kernel_bound(t: float, B: float, m: int, c1_user: float, c2_user: float) -> float:
    """``min(1, c1 exp(-(c2/2) (t/B)^{2/m}))`` for a kernel with ``sup|f| = B``."""
    if not (t > 0 and B > 0 and c1_user > 0 and c2_user > 0):
        raise ValueError("t, B, c1_user and c2_user must be positive")
    return _clip(math.log(c1_user) - 0.5 * c2_user * (t / B) ** (2.0 / m))


def bernstein_bound(t: float, sigma: float, L: float, n: int, m: int,
                    c1_user: float, c2_user: float) -> float:
    """Bernstein-type bound under a splitting majorant with moment parameters ``sigma, L``."""
    if not (sigma > 0 and L > 0):
        raise ValueError("sigma and L must be positive")
    if not (t > 0 and n >= 1 and c1_user > 0 and c2_user > 0):
        raise ValueError("t, n, c1_user and c2_user must be positive")
    denom = sigma ** 2 + L * t ** (1.0 / m) / math.sqrt(n)
    return _clip(math.log(c1_user) - c2_user * t ** (2.0 / m) / denom)


def chebyshev_moment_bound(x: float, even_moments, log_moments: bool = False) -> float:
    """``min_N E V^{2N} / x^{2N}`` over the supplied ``(N, moment)`` pairs.

    With ``log_moments`` the second element of each pair is ``log E V^{2N}``.
    """
    pairs = list(even_moments)
    if not pairs:
        raise ValueError("need at least one (N, moment) pair")
    if not x > 0:
        raise ValueError("x must be positive")
    best = math.inf
    for N, mom in pairs:
        if log_moments:
            lm = mom
        else:
            if mom < 0:
                raise ValueError("even moments are nonnegative")
            lm = math.log(mom) if mom > 0 else -math.inf
        best = min(best, lm - 2 * N * math.log(x))
    return _clip(best)


def lemma1_bound(m: int, N: int, params: BoundParameters) -> float:
    """``log`` of ``(tilde_c C^2 m N)^{mN}``, the mixed partial-sum moment bound."""
    if N < 1 or m < 1:
        raise ValueError("m and N must be positive integers")
    return m * N * math.log(params.tilde_c * params.C ** 2 * m * N)


def even_moment_log_bound(N: int, params: BoundParameters) -> float:
    """``log`` of ``(sum|f|)^{2N} (tilde_c C^2 m N)^{mN}``, bounding ``E V_n^{2N}``."""
    if params.abs_sum == 0.0:
        return -math.inf
    return 2 * N * math.log(params.abs_sum) + lemma1_bound(params.m, N, params)


def optimal_N(x: float, params: BoundParameters) -> int:
    """Integer ``N`` near ``x^{2/m} / (c4 m e)`` minimizing the Chebyshev bound.

    Both neighbours of the continuous optimum are evaluated with the
    even-moment bound and the better one is returned.
    """
    if not x > 0:
        raise ValueError("x must be positive")
    if params.B_f == 0.0:
        return 1
    target = x ** (2.0 / params.m) / (params.c4 * params.m * math.e)
    lo = max(1, math.floor(target))
    hi = max(1, math.ceil(target))
    if lo == hi:
        return lo
    blo = even_moment_log_bound(lo, params) - 2 * lo * math.log(x)
    bhi = even_moment_log_bound(hi, params) - 2 * hi * math.log(x)
    return lo if blo <= bhi else hi


def optimized_chebyshev_bound(x: float, params: BoundParameters) -> float:
    """Chebyshev bound at ``optimal_N`` with the even-moment bound plugged in."""
    N = optimal_N(x, params)
    return chebyshev_moment_bound(x, [(N, even_moment_log_bound(N, params))], log_moments=True)


def theorem_bound_curve(xs, params: BoundParameters) -> np.ndarray:
    return np.array([theorem_bound(float(x), params) for x in xs])
