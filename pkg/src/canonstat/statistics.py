"""V- and U-statistics of canonical kernels.

The factorized route evaluates a finite-series V-statistic as
``sum f_{i_1..i_m} S_n(i_1) ... S_n(i_m)`` from the normalized partial sums
``S_n(i) = n^{-1/2} sum_j e_i(X_j)``, which is ``O(n K + entries)`` instead
of ``O(n^m)``.  The naive routes sum kernel values over index tuples and
serve as oracles.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .kernels import CanonicalKernel, _call_raw
from .processes import SamplePath

DEFAULT_BUDGET = 10 ** 8
_BLOCK = 4096
_CELLS = 1 << 20


class StatKind(str, Enum):
    V = "V"
    U = "U"
    HOEFFDING_U = "HoeffdingU"


class Method(str, Enum):
    NAIVE = "naive"
    FACTORIZED = "factorized"


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class StatisticResult:
    kind: StatKind
    value: float
    n: int
    method: Method


@dataclass(frozen=True)
class PartialSums:
    values: dict[int, float]
    n: int

    def __getitem__(self, i: int) -> float:
        return self.values[i]


def compensated_sum(x: np.ndarray) -> float:
    """Blockwise pairwise sums combined with ``math.fsum``; order is fixed."""
    x = np.ravel(x)
    if x.size <= _BLOCK:
        return float(np.sum(x))
    head = x.size - x.size % _BLOCK
    blocks = x[:head].reshape(-1, _BLOCK).sum(axis=1)
    return math.fsum(np.append(blocks, np.sum(x[head:])))


def _values(path) -> np.ndarray:
    return path.values if isinstance(path, SamplePath) else np.asarray(path)


def partial_sums(basis, path, indices) -> PartialSums:
    """``S_n(i)`` for each requested basis index."""
    x = _values(path)
    n = x.size
    scale = 1.0 / math.sqrt(n)
    return PartialSums({int(i): scale * compensated_sum(basis(int(i), x)) for i in indices}, n)


def v_stat_factorized(kernel: CanonicalKernel, path) -> StatisticResult:
    x = _values(path)
    if x.size < 1:
        raise ValueError("empty path")
    s = partial_sums(kernel.basis, x, kernel.coefficients.distinct_indices)
    terms = [coef * math.prod(s[i] for i in idx)
             for idx, coef in kernel.coefficients.entries.items()]
    return StatisticResult(StatKind.V, math.fsum(terms), x.size, Method.FACTORIZED)


def _check_budget(n: int, m: int, budget: int, alternative: str) -> None:
    if n ** m > budget:
        raise BudgetExceeded(
            f"naive summation needs n^m = {n}^{m} kernel evaluations, above the budget "
            f"{budget:g}; use the {alternative} method"
        )


def _tuple_grid_sum(kernel: CanonicalKernel, x: np.ndarray, distinct: bool) -> float:
    """Sum of ``f(X_j1, ..., X_jm)`` over all (or pairwise-distinct) tuples.

    Kernel values are materialized for a block of leading indices at a time;
    blocks run in lexicographic order.
    """
    n, m = x.size, kernel.order
    entries = list(kernel.coefficients.entries.items())
    if not entries:
        return 0.0
    E = {i: kernel.basis(i, x) for i in kernel.coefficients.distinct_indices}
    inner = n ** (m - 1)
    step = max(1, _CELLS // inner)
    axes = [[n if a == k else 1 for a in range(m)] for k in range(m)]
    partial = []
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        shape = (hi - lo,) + (n,) * (m - 1)
        vals = np.zeros(shape)
        for key, coef in entries:
            term = coef * E[key[0]][lo:hi].reshape([hi - lo] + [1] * (m - 1))
            for k in range(1, m):
                term = term * E[key[k]].reshape(axes[k])
            vals = vals + term
        if distinct and m > 1:
            grids = np.indices(shape)
            grids[0] += lo
            mask = np.ones(shape, dtype=bool)
            for a, b in itertools.combinations(range(m), 2):
                mask &= grids[a] != grids[b]
            vals = np.where(mask, vals, 0.0)
        partial.append(compensated_sum(vals))
    return math.fsum(partial)


def v_stat_naive(kernel: CanonicalKernel, path, budget: int = DEFAULT_BUDGET) -> StatisticResult:
    """``n^{-m/2}`` times the kernel summed over every index tuple, diagonals included."""
    x = _values(path)
    n, m = x.size, kernel.order
    if n < 1:
        raise ValueError("empty path")
    _check_budget(n, m, budget, "factorized")
    total = _tuple_grid_sum(kernel, x, distinct=False)
    return StatisticResult(StatKind.V, total / n ** (m / 2), n, Method.NAIVE)


def set_partitions(items):
    """All set partitions of ``items`` (lists of blocks), in a fixed order."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]


def _distinct_tuple_sum_fast(kernel: CanonicalKernel, x: np.ndarray) -> float:
    # Moebius inversion on the partition lattice:
    # sum over distinct tuples = sum_pi mu(pi) prod_B sum_j prod_{k in B} e_{i_k}(X_j)
    m = kernel.order
    idx = kernel.coefficients.distinct_indices
    E = {i: kernel.basis(i, x) for i in idx}
    parts = [(p, math.prod((-1) ** (len(b) - 1) * math.factorial(len(b) - 1) for b in p))
             for p in set_partitions(range(m))]
    block_cache: dict[tuple[int, ...], float] = {}

    def block_sum(key):
        k = tuple(sorted(key))
        if k not in block_cache:
            block_cache[k] = compensated_sum(math.prod(E[i] for i in k) if len(k) > 1 else E[k[0]])
        return block_cache[k]

    terms = []
    for key, coef in kernel.coefficients.entries.items():
        for blocks, mu in parts:
            terms.append(coef * mu * math.prod(block_sum([key[k] for k in b]) for b in blocks))
    return math.fsum(terms)


def u_stat(kernel: CanonicalKernel, path, method: Method | str | None = None,
           budget: int = DEFAULT_BUDGET) -> StatisticResult:
    """``n^{-m/2}`` times the kernel summed over pairwise-distinct index tuples.

    Orders up to 3 default to inclusion-exclusion over the diagonals (for
    ``m = 2``: ``U = V - n^{-1} sum_j f(X_j, X_j)``); higher orders, or
    ``method="naive"``, sum directly.
    """
    x = _values(path)
    n, m = x.size, kernel.order
    if n < m:
        raise ValueError(f"U-statistic of order {m} needs n >= {m}, got {n}")
    method = Method(method) if method is not None else (
        Method.FACTORIZED if m <= 3 else Method.NAIVE)
    if method is Method.FACTORIZED:
        if m > 3:
            raise ValueError("inclusion-exclusion route is implemented for m <= 3")
        total = _distinct_tuple_sum_fast(kernel, x)
    else:
        _check_budget(n, m, budget, "factorized (m <= 3)")
        total = _tuple_grid_sum(kernel, x, distinct=True)
    return StatisticResult(StatKind.U, total / n ** (m / 2), n, method)


def diagonal_term(kernel: CanonicalKernel, path) -> float:
    """``n^{-1} sum_j f(X_j, X_j)`` for an order-2 kernel; equals ``V - U``."""
    if kernel.order != 2:
        raise ValueError("diagonal term is defined for order-2 kernels")
    x = _values(path)
    return compensated_sum(kernel(x, x)) / x.size


def hoeffding_u(raw_kernel: Callable, path, m: int, budget: int = DEFAULT_BUDGET) -> StatisticResult:
    """Distinct-tuple average with the nondegenerate normalization ``(n-m)!/n!``."""
    x = _values(path).astype(float)
    n = x.size
    if n < m:
        raise ValueError(f"order {m} needs n >= {m}, got {n}")
    _check_budget(n, m, budget, "factorized")
    shape = (n,) * (m - 1)
    rest = [x.reshape([n if a == k else 1 for a in range(m - 1)]) for k in range(m - 1)]
    grids = np.indices(shape) if m > 1 else None
    partial = []
    for j in range(n):
        args = [np.full(shape, x[j])] + [np.broadcast_to(r, shape) for r in rest]
        vals = _call_raw(raw_kernel, args)
        if m > 1:
            mask = np.ones(shape, dtype=bool)
            for a in range(m - 1):
                mask &= grids[a] != j
                for b in range(a + 1, m - 1):
                    mask &= grids[a] != grids[b]
            vals = np.where(mask, vals, 0.0)
        partial.append(compensated_sum(vals))
    log_norm = math.lgamma(n - m + 1) - math.lgamma(n + 1)
    return StatisticResult(StatKind.HOEFFDING_U, math.fsum(partial) * math.exp(log_norm), n,
                           Method.NAIVE)
