"""Canonical kernels as finite orthonormal series.

A kernel of order ``m`` is stored as a sparse coefficient tensor over index
tuples with every component ``>= 1``.  Because ``e_0`` never appears, every
term has zero mean in every argument, so the kernel is canonical by
construction.  Arbitrary kernels are reduced to this form by projection onto
the tensor basis (Hoeffding's decomposition).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .basis import OrthonormalBasis

CANONICITY_TOL = 1e-8
QUADRATURE_CANONICITY_TOL = 1e-6


class ConditionViolation(ValueError):
    """A hypothesis required by a tail bound does not hold."""

    def __init__(self, condition: str, message: str):
        super().__init__(f"condition ({condition}) violated: {message}")
        self.condition = condition


@dataclass(frozen=True, eq=False)
class CoefficientTensor:
    """Sparse map ``(i_1, ..., i_m) -> f_{i_1...i_m}`` with all ``i_k >= 1``.

    Zero values are dropped.  ``entries`` is kept sorted by index tuple so
    every sum over it runs in the same order.
    """

    order: int
    entries: Mapping[tuple[int, ...], float]
    symmetric: bool = field(init=False)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        clean = {}
        for idx, val in self.entries.items():
            idx = tuple(int(i) for i in np.atleast_1d(idx))
            if len(idx) != self.order:
                raise ValueError(f"index {idx} does not have length {self.order}")
            if min(idx) < 1:
                raise ValueError(f"index {idx} uses e_0; canonical kernels exclude it")
            val = float(val)
            if not math.isfinite(val):
                raise ValueError(f"coefficient at {idx} is not finite")
            if val != 0.0:
                clean[idx] = clean.get(idx, 0.0) + val
        ordered = {k: clean[k] for k in sorted(clean) if clean[k] != 0.0}
        object.__setattr__(self, "entries", ordered)
        object.__setattr__(self, "symmetric", self._is_symmetric())

    def _is_symmetric(self) -> bool:
        for idx, val in self.entries.items():
            for perm in set(itertools.permutations(idx)):
                if abs(self.entries.get(perm, 0.0) - val) > 1e-12 * max(1.0, abs(val)):
                    return False
        return True

    @property
    def abs_sum(self) -> float:
        return math.fsum(abs(v) for v in self.entries.values())

    @property
    def max_index(self) -> int:
        return max((max(k) for k in self.entries), default=0)

    @property
    def distinct_indices(self) -> list[int]:
        return sorted({i for k in self.entries for i in k})

    def scaled(self, factor: float) -> CoefficientTensor:
        return CoefficientTensor(self.order, {k: factor * v for k, v in self.entries.items()})

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True, eq=False)
class CanonicalKernel:
    basis: OrthonormalBasis
    coefficients: CoefficientTensor

    def __post_init__(self):
        if self.coefficients.max_index > self.basis.max_index:
            raise ValueError(
                f"coefficient index {self.coefficients.max_index} exceeds basis "
                f"max_index {self.basis.max_index}"
            )

    @classmethod
    def from_entries(cls, basis, order, entries) -> CanonicalKernel:
        return cls(basis, CoefficientTensor(order, dict(entries)))

    @property
    def order(self) -> int:
        return self.coefficients.order

    def __call__(self, *args):
        """Evaluate at ``m`` broadcastable arrays of sample-space points."""
        return evaluate_kernel(self, args)


def evaluate_kernel(kernel: CanonicalKernel, point) -> float | np.ndarray:
    """Finite series value at ``point = (t_1, ..., t_m)``.

    Components may be arrays; they are broadcast against each other.
    Terms are accumulated in sorted index order.
    """
    if len(point) != kernel.order:
        raise ValueError(f"expected {kernel.order} arguments, got {len(point)}")
    args = [np.asarray(t) for t in point]
    shape = np.broadcast_shapes(*(a.shape for a in args))
    cache = {}
    total = np.zeros(shape)
    for idx, coef in kernel.coefficients.entries.items():
        term = np.full(shape, coef)
        for k, i in enumerate(idx):
            if (k, i) not in cache:
                cache[k, i] = kernel.basis(i, args[k])
            term = term * cache[k, i]
        total = total + term
    return float(total) if total.ndim == 0 else total


def _call_raw(func: Callable, args: list[np.ndarray]) -> np.ndarray:
    shape = np.broadcast_shapes(*(a.shape for a in args))
    try:
        out = np.asarray(func(*args), dtype=float)
        if out.shape != shape:
            out = np.broadcast_to(out, shape).astype(float)
    except (TypeError, ValueError):
        out = np.vectorize(lambda *a: float(func(*a)), otypes=[float])(*args)
    return out


def canonicity_residual(func: Callable, order: int, basis: OrthonormalBasis, slot: int,
                        fixed_point, quadrature_nodes: int | None = None) -> float:
    """``|E f(t_1, ..., X, ..., t_m)|`` with ``X ~ F`` in position ``slot`` (1-based)."""
    if not 1 <= slot <= order:
        raise ValueError(f"slot must lie in 1..{order}")
    fixed = list(np.atleast_1d(np.asarray(fixed_point, dtype=float))) if order > 1 else []
    if len(fixed) != order - 1:
        raise ValueError(f"fixed_point must have {order - 1} components")
    x, w = basis.quadrature(quadrature_nodes)
    args = fixed[: slot - 1] + [x] + fixed[slot - 1:]
    args = [np.broadcast_to(np.asarray(a, dtype=x.dtype), x.shape) for a in args]
    vals = _call_raw(func, args)
    return abs(math.fsum(vals * w))


def check_canonicity(kernel, slot: int, fixed_point=(), quadrature_nodes: int | None = None,
                     basis: OrthonormalBasis | None = None) -> float:
    """Residual of the degeneracy condition in one argument slot.

    ``kernel`` is a :class:`CanonicalKernel` or, together with ``basis``, a
    :class:`RawKernel`.
    """
    if isinstance(kernel, CanonicalKernel):
        return canonicity_residual(kernel, kernel.order, kernel.basis, slot, fixed_point,
                                   quadrature_nodes)
    return canonicity_residual(kernel.func, kernel.order, basis or kernel.basis, slot,
                               fixed_point, quadrature_nodes)


def max_canonicity_residual(kernel, grid, quadrature_nodes: int | None = None) -> float:
    """Largest residual over every slot and every fixed point in ``grid``.

    ``grid`` holds candidate values for a single coordinate; fixed points are
    drawn as all ``(m-1)``-tuples over it.
    """
    worst = 0.0
    grid = list(np.atleast_1d(grid))
    for slot in range(1, kernel.order + 1):
        for fixed in itertools.product(grid, repeat=kernel.order - 1):
            worst = max(worst, check_canonicity(kernel, slot, fixed, quadrature_nodes))
    return worst


def b_of_f(kernel: CanonicalKernel) -> float:
    """``(C^m * sum |f|)^(2/m)``; requires a bounded basis."""
    if not kernel.basis.bounded:
        raise ConditionViolation("A", f"{kernel.basis.family.value} basis has no finite sup bound")
    m = kernel.order
    return (kernel.basis.sup_bound ** m * kernel.coefficients.abs_sum) ** (2.0 / m)


@dataclass(frozen=True, eq=False)
class RawKernel:
    """A pointwise kernel ``func(t_1, ..., t_m)`` with no series structure."""

    func: Callable
    order: int
    basis: OrthonormalBasis

    def __call__(self, *args):
        return _call_raw(self.func, [np.asarray(a, dtype=float) for a in args])


@dataclass(frozen=True, eq=False)
class HoeffdingDecomposition:
    """``f = constant + sum over nonempty slot sets A of f_A``.

    ``components[A]`` is a canonical kernel in the variables ``t_k, k in A``
    (slots 1-based, sorted).
    """

    constant: float
    components: dict[tuple[int, ...], CanonicalKernel]
    order: int

    def by_order(self, r: int) -> dict[tuple[int, ...], CanonicalKernel]:
        return {a: k for a, k in self.components.items() if len(a) == r}

    def __call__(self, *args):
        args = [np.asarray(a) for a in args]
        shape = np.broadcast_shapes(*(a.shape for a in args))
        total = np.full(shape, self.constant)
        for slots, comp in self.components.items():
            total = total + comp(*[args[s - 1] for s in slots])
        return total


def hoeffding_decompose(raw_kernel: Callable, basis: OrthonormalBasis, truncation: int, m: int,
                        quadrature_nodes: int | None = None, max_magnitude: float = 1e12,
                        drop_tol: float = 1e-12) -> HoeffdingDecomposition:
    """Project ``raw_kernel`` onto ``span{e_i1 x ... x e_im : 0 <= i_k <= truncation}``.

    Coefficients with exactly ``r`` nonzero indices form the order-``r``
    components, grouped by which slots carry the nonzero indices.  The
    tensor quadrature uses ``quadrature_nodes`` points per axis (default 64
    on continuous spaces; exact on finite alphabets).
    """
    if not 1 <= m <= 3:
        raise ValueError("decomposition is implemented for orders 1..3")
    if not 1 <= truncation <= basis.max_index:
        raise ValueError(f"truncation must lie in 1..{basis.max_index}")
    if quadrature_nodes is None and not basis.space.is_finite:
        quadrature_nodes = 64
    x, w = basis.quadrature(quadrature_nodes)
    q = x.size
    grids = np.meshgrid(*([x] * m), indexing="ij")
    vals = _call_raw(raw_kernel, grids)
    if not np.all(np.isfinite(vals)) or np.abs(vals).max(initial=0.0) > max_magnitude:
        raise ValueError("kernel is not square-integrable at the configured quadrature "
                         f"(magnitude above {max_magnitude:g} or non-finite values)")
    # weighted basis values: (truncation + 1, q)
    ew = basis.matrix(range(truncation + 1), x) * w
    coef = vals
    for _ in range(m):
        # contract the leading axis, cycle it to the back
        coef = np.tensordot(coef, ew, axes=([0], [1]))
    assert coef.shape == (truncation + 1,) * m and q == x.size
    constant = float(coef[(0,) * m])
    groups: dict[tuple[int, ...], dict[tuple[int, ...], float]] = {}
    for idx in itertools.product(range(truncation + 1), repeat=m):
        slots = tuple(k + 1 for k, i in enumerate(idx) if i > 0)
        if not slots:
            continue
        c = float(coef[idx])
        if abs(c) <= drop_tol:
            continue
        groups.setdefault(slots, {})[tuple(i for i in idx if i > 0)] = c
    components = {
        slots: CanonicalKernel(basis, CoefficientTensor(len(slots), entries))
        for slots, entries in sorted(groups.items(), key=lambda kv: (len(kv[0]), kv[0]))
    }
    return HoeffdingDecomposition(constant if abs(constant) > drop_tol else 0.0, components, m)
