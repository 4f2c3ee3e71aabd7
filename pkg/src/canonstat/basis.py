"""Orthonormal function families containing the constant function.

Every basis here is orthonormal in ``L2(F)`` for its marginal ``F`` and has
``e_0 = 1``, so ``E e_i(X) = 0`` for ``i >= 1``.  Evaluation is vectorized:
``basis(i, t)`` accepts scalars or arrays of sample-space points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.polynomial import hermite_e
from scipy import special

UNIT_INTERVAL_NODES = 10_000
GAUSS_HERMITE_NODES = 100


class SpaceKind(str, Enum):
    UNIT_INTERVAL = "unit_interval"
    REAL_LINE = "real_line"
    FINITE_ALPHABET = "finite_alphabet"


@dataclass(frozen=True)
class SampleSpace:
    kind: SpaceKind
    size: int | None = None

    def __post_init__(self):
        kind = SpaceKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is SpaceKind.FINITE_ALPHABET:
            if self.size is None or int(self.size) != self.size or self.size < 2:
                raise ValueError("finite alphabet needs an integer size >= 2")
            object.__setattr__(self, "size", int(self.size))
        elif self.size is not None:
            raise ValueError(f"{kind.value} takes no size")

    @classmethod
    def unit_interval(cls) -> SampleSpace:
        return cls(SpaceKind.UNIT_INTERVAL)

    @classmethod
    def real_line(cls) -> SampleSpace:
        return cls(SpaceKind.REAL_LINE)

    @classmethod
    def finite(cls, size: int) -> SampleSpace:
        return cls(SpaceKind.FINITE_ALPHABET, size)

    @property
    def is_finite(self) -> bool:
        return self.kind is SpaceKind.FINITE_ALPHABET

    def contains(self, values) -> bool:
        v = np.asarray(values)
        if self.kind is SpaceKind.UNIT_INTERVAL:
            return bool(np.all((v >= 0.0) & (v <= 1.0)))
        if self.kind is SpaceKind.REAL_LINE:
            return bool(np.all(np.isfinite(v)))
        return bool(np.all((v == np.round(v)) & (v >= 0) & (v < self.size)))


@dataclass(frozen=True, eq=False)
class Marginal:
    """Distribution ``F`` on a sample space.

    ``name`` is one of ``"uniform"`` (on [0, 1]), ``"normal"`` (standard) or
    ``"categorical"`` (then ``probabilities`` holds the point masses).
    """

    name: str
    probabilities: np.ndarray | None = None

    def __post_init__(self):
        if self.name not in ("uniform", "normal", "categorical"):
            raise ValueError(f"unknown marginal {self.name!r}")
        if self.name == "categorical":
            p = _validate_probabilities(self.probabilities)
            p.setflags(write=False)
            object.__setattr__(self, "probabilities", p)

    @classmethod
    def uniform(cls) -> Marginal:
        return cls("uniform")

    @classmethod
    def normal(cls) -> Marginal:
        return cls("normal")

    @classmethod
    def categorical(cls, probabilities) -> Marginal:
        return cls("categorical", np.asarray(probabilities, dtype=float))

    @property
    def space(self) -> SampleSpace:
        if self.name == "uniform":
            return SampleSpace.unit_interval()
        if self.name == "normal":
            return SampleSpace.real_line()
        return SampleSpace.finite(len(self.probabilities))

    def quadrature(self, nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(points, weights)`` with ``sum(w * g(points)) ~ E g(X)``.

        Uniform: composite midpoint rule (exact for cosine products of total
        frequency below ``2 * nodes``).  Normal: Gauss-Hermite, exact for
        polynomials of degree below ``2 * nodes``.  Categorical: exact.
        """
        if self.name == "categorical":
            return np.arange(len(self.probabilities)), np.array(self.probabilities)
        if self.name == "uniform":
            q = UNIT_INTERVAL_NODES if nodes is None else int(nodes)
            return (np.arange(q) + 0.5) / q, np.full(q, 1.0 / q)
        q = GAUSS_HERMITE_NODES if nodes is None else int(nodes)
        x, w = hermite_e.hermegauss(q)
        return x, w / math.sqrt(2.0 * math.pi)

    def quantile(self, u):
        """Inverse CDF, used to push uniforms onto this marginal."""
        u = np.asarray(u, dtype=float)
        if self.name == "uniform":
            return u
        if self.name == "normal":
            return special.ndtri(u)
        cdf = np.cumsum(self.probabilities)
        cdf[-1] = 1.0
        return np.searchsorted(cdf, u, side="right").clip(0, len(cdf) - 1)

    def sample(self, rng: np.random.Generator, size: int):
        if self.name == "uniform":
            return rng.random(size)
        if self.name == "normal":
            return rng.standard_normal(size)
        return self.quantile(rng.random(size))


def _validate_probabilities(probabilities) -> np.ndarray:
    p = np.array(probabilities, dtype=float).ravel()
    if p.size < 2:
        raise ValueError("need at least two outcomes")
    if np.any(~np.isfinite(p)) or np.any(p <= 0.0):
        raise ValueError("probabilities must be strictly positive")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    return p


class Family(str, Enum):
    COSINE = "cosine"
    HERMITE = "hermite"
    FINITE_GS = "finite_gs"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """A family ``e_0 = 1, e_1, ..., e_max_index`` orthonormal under ``marginal``.

    ``sup_bound`` is the constant ``C`` with ``sup_{i,t} |e_i(t)| <= C``;
    it is ``inf`` for unbounded families.  Finite-alphabet families carry the
    full value table, row ``i`` holding ``e_i`` on the states ``0..s-1``.
    """

    family: Family
    marginal: Marginal
    max_index: int
    sup_bound: float
    table: np.ndarray | None = field(default=None, repr=False)

    @property
    def space(self) -> SampleSpace:
        return self.marginal.space

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.sup_bound)

    @property
    def continuous(self) -> bool:
        """Whether every e_i is continuous on a continuum sample space."""
        return self.family in (Family.COSINE, Family.HERMITE)

    def describe(self) -> dict:
        d = {"family": self.family.value, "max_index": self.max_index}
        if self.marginal.probabilities is not None:
            d["probabilities"] = [float(p) for p in self.marginal.probabilities]
        return d

    def _check_index(self, i: int) -> None:
        if not 0 <= i <= self.max_index:
            raise IndexError(f"basis index {i} outside 0..{self.max_index}")

    def __call__(self, i: int, t):
        self._check_index(i)
        if self.table is not None:
            return self.table[i][np.asarray(t, dtype=np.intp)]
        t = np.asarray(t, dtype=float)
        if i == 0:
            return np.ones_like(t)
        if self.family is Family.COSINE:
            return math.sqrt(2.0) * np.cos(i * math.pi * t)
        return self.matrix(range(i, i + 1), t)[0]

    def matrix(self, indices, t) -> np.ndarray:
        """Values ``e_i(t_j)`` as an array of shape ``(len(indices), len(t))``."""
        indices = list(indices)
        t = np.atleast_1d(np.asarray(t))
        for i in indices:
            self._check_index(i)
        if self.table is not None:
            return self.table[np.asarray(indices, dtype=np.intp)][:, t.astype(np.intp)]
        if self.family is Family.HERMITE:
            top = max(indices, default=0)
            h = _normalized_hermite(top, t.astype(float))
            return h[indices] if indices else np.empty((0, t.size))
        return np.stack([self(i, t) for i in indices]) if indices else np.empty((0, t.size))

    def quadrature(self, nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        return self.marginal.quadrature(nodes)

    def gram_matrix(self, nodes: int | None = None) -> np.ndarray:
        """``<e_i, e_j>_F`` for ``0 <= i, j <= max_index`` by quadrature."""
        x, w = self.quadrature(nodes)
        if self.family is Family.HERMITE and nodes is None:
            x, w = self.quadrature(max(GAUSS_HERMITE_NODES, self.max_index + 2))
        e = self.matrix(range(self.max_index + 1), x)
        return (e * w) @ e.T


def _normalized_hermite(top: int, x: np.ndarray) -> np.ndarray:
    # h_{k+1} = (x h_k - sqrt(k) h_{k-1}) / sqrt(k+1), h_k = He_k / sqrt(k!)
    out = np.empty((top + 1, x.size))
    out[0] = 1.0
    if top >= 1:
        out[1] = x
    for k in range(1, top):
        out[k + 1] = (x * out[k] - math.sqrt(k) * out[k - 1]) / math.sqrt(k + 1)
    return out


def make_cosine_basis(max_index: int) -> OrthonormalBasis:
    """``e_i(t) = sqrt(2) cos(i pi t)`` on Uniform[0, 1]; ``C = sqrt(2)``."""
    if max_index < 1:
        raise ValueError("max_index must be >= 1")
    return OrthonormalBasis(Family.COSINE, Marginal.uniform(), int(max_index), math.sqrt(2.0))


def make_hermite_basis(max_index: int) -> OrthonormalBasis:
    """Normalized probabilists' Hermite polynomials under N(0, 1).

    These are unbounded, so ``sup_bound`` is ``inf`` and no tail bound that
    needs a uniform bound on the basis can be evaluated with them.
    """
    if max_index < 1:
        raise ValueError("max_index must be >= 1")
    return OrthonormalBasis(Family.HERMITE, Marginal.normal(), int(max_index), math.inf)


def gram_schmidt_finite(probabilities) -> OrthonormalBasis:
    """Orthonormalize ``1, 1{0}, ..., 1{s-2}`` under the point masses.

    Returns the ``s - 1`` non-constant functions on ``{0, ..., s-1}`` plus
    ``e_0``.  Each function is signed so its first nonzero value is positive.
    """
    p = _validate_probabilities(probabilities)
    s = p.size
    rows = [np.ones(s)]
    for k in range(s - 1):
        v = np.zeros(s)
        v[k] = 1.0
        # two passes of modified Gram-Schmidt keep orthogonality at roundoff
        for _ in range(2):
            for u in rows:
                v = v - np.dot(v * p, u) * u
        v = v / math.sqrt(np.dot(v * p, v))
        nz = np.flatnonzero(np.abs(v) > 1e-12 * np.abs(v).max())
        if v[nz[0]] < 0:
            v = -v
        v[np.abs(v) <= 1e-12 * np.abs(v).max()] = 0.0
        rows.append(v)
    table = np.vstack(rows)
    table.setflags(write=False)
    return OrthonormalBasis(
        Family.FINITE_GS, Marginal.categorical(p), s - 1, float(np.abs(table).max()), table
    )


def tabulated_basis(table, probabilities, tol: float = 1e-10) -> OrthonormalBasis:
    """Wrap a user table ``table[i, x] = e_i(x)`` on a finite alphabet."""
    p = _validate_probabilities(probabilities)
    table = np.array(table, dtype=float)
    if table.ndim != 2 or table.shape[1] != p.size or table.shape[0] < 2:
        raise ValueError("table must have shape (k + 1, s) with k >= 1")
    if not np.allclose(table[0], 1.0, rtol=0, atol=0):
        raise ValueError("row 0 must be the constant function 1")
    gram = (table * p) @ table.T
    if np.abs(gram - np.eye(table.shape[0])).max() > tol:
        raise ValueError("table is not orthonormal under the given probabilities")
    table.setflags(write=False)
    return OrthonormalBasis(
        Family.CUSTOM, Marginal.categorical(p), table.shape[0] - 1, float(np.abs(table).max()), table
    )


def basis_from_config(cfg: dict) -> OrthonormalBasis:
    """Build a basis from ``{"family": ..., "max_index": ..., "probabilities": ...}``."""
    family = Family(cfg["family"])
    if family is Family.COSINE:
        return make_cosine_basis(int(cfg["max_index"]))
    if family is Family.HERMITE:
        return make_hermite_basis(int(cfg["max_index"]))
    if family is Family.FINITE_GS:
        return gram_schmidt_finite(cfg["probabilities"])
    return tabulated_basis(cfg["table"], cfg["probabilities"])
