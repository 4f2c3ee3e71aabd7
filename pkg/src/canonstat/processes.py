"""Stationary rho-mixing generators with analytic mixing envelopes.

Each process exposes ``(c0, c1)`` with ``rho(k) <= c0 * exp(-c1 * k)`` for
all lags ``k >= 1``.  Maximal correlation is normalized by standard
deviations.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import linalg, signal, special

from .basis import Marginal, SampleSpace, SpaceKind

# Stand-in for c1 = inf when rho(k) = 0 for every k >= 1.
IID_C1 = 50.0


class ProcessKind(str, Enum):
    IID = "iid"
    M_DEPENDENT = "m_dependent"
    GAUSSIAN_AR1 = "gaussian_ar1"
    FINITE_MARKOV = "finite_markov"


@dataclass(frozen=True, eq=False)
class ProcessSpec:
    """Description of a stationary sequence.

    Build instances through :func:`iid`, :func:`m_dependent`,
    :func:`gaussian_ar1` and :func:`finite_markov`, which validate their
    parameters.
    """

    kind: ProcessKind
    marginal: Marginal
    window: int = 0
    phi: float = 0.0
    uniformize: bool = False
    transition: np.ndarray | None = field(default=None, repr=False)

    @property
    def space(self) -> SampleSpace:
        return self.marginal.space

    @property
    def stationary(self) -> np.ndarray | None:
        return self.marginal.probabilities if self.kind is ProcessKind.FINITE_MARKOV else None

    @property
    def ac_certified(self) -> bool:
        """Distinct-index joint laws are absolutely continuous w.r.t. ``F^m``.

        Holds by construction for i.i.d., sliding-window and nondegenerate
        Gaussian sequences.  Finite chains are certified only when every
        transition probability is positive.
        """
        if self.kind is ProcessKind.FINITE_MARKOV:
            return bool(np.all(self.transition > 0))
        return True

    def describe(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind is ProcessKind.M_DEPENDENT:
            d["window"] = self.window
        if self.kind is ProcessKind.GAUSSIAN_AR1:
            d["phi"] = self.phi
            d["uniformize"] = self.uniformize
        if self.kind is ProcessKind.FINITE_MARKOV:
            d["transition"] = self.transition.tolist()
        elif self.marginal.probabilities is not None:
            d["probabilities"] = self.marginal.probabilities.tolist()
        return d


def iid(marginal: Marginal) -> ProcessSpec:
    return ProcessSpec(ProcessKind.IID, marginal)


def m_dependent(window: int, marginal: Marginal) -> ProcessSpec:
    """``X_t = Q(frac(xi_t + ... + xi_{t+w}))`` with i.i.d. uniform ``xi``.

    A sum of independent uniforms taken modulo 1 is uniform, so ``X_t`` has
    marginal ``Q``'s law exactly, and ``X_t``, ``X_s`` are independent once
    ``|t - s| > w``.
    """
    if int(window) != window or window < 0:
        raise ValueError("window must be a nonnegative integer")
    return ProcessSpec(ProcessKind.M_DEPENDENT, marginal, window=int(window))


def gaussian_ar1(phi: float, uniformize: bool = False) -> ProcessSpec:
    """Stationary ``X_t = phi X_{t-1} + sqrt(1 - phi^2) eps_t`` with N(0, 1) marginal.

    With ``uniformize`` the path is mapped through the normal CDF, giving a
    Uniform[0, 1] marginal and the same mixing coefficients.
    """
    if not -1.0 < phi < 1.0:
        raise ValueError("AR(1) coefficient must satisfy |phi| < 1")
    marginal = Marginal.uniform() if uniformize else Marginal.normal()
    return ProcessSpec(ProcessKind.GAUSSIAN_AR1, marginal, phi=float(phi), uniformize=uniformize)


def finite_markov(transition, stationary=None) -> ProcessSpec:
    """Finite-state chain started from its stationary law.

    The chain must be irreducible and aperiodic (some power of the transition
    matrix strictly positive).
    """
    P = np.array(transition, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
        raise ValueError("transition matrix must be square with at least 2 states")
    if np.any(P < 0) or np.abs(P.sum(axis=1) - 1.0).max() > 1e-12:
        raise ValueError("transition rows must be probability vectors (sum 1 within 1e-12)")
    if not _is_primitive(P):
        raise ValueError("chain must be irreducible and aperiodic")
    if stationary is None:
        stationary = stationary_distribution(P)
    pi = np.asarray(stationary, dtype=float)
    if np.abs(pi @ P - pi).max() > 1e-10:
        raise ValueError("stationary vector does not satisfy pi P = pi within 1e-10")
    P.setflags(write=False)
    return ProcessSpec(ProcessKind.FINITE_MARKOV, Marginal.categorical(pi), transition=P)


def symmetric_two_state(flip: float) -> ProcessSpec:
    """Two-state chain switching state with probability ``flip``."""
    return finite_markov([[1 - flip, flip], [flip, 1 - flip]], [0.5, 0.5])


def stationary_distribution(P: np.ndarray) -> np.ndarray:
    w, v = linalg.eig(P.T)
    k = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(v[:, k])
    pi = pi / pi.sum()
    # one power-iteration pass cleans eigen-solver noise
    pi = pi @ P
    return pi / pi.sum()


def _is_primitive(P: np.ndarray) -> bool:
    s = P.shape[0]
    A = (P > 0).astype(float)
    M = A.copy()
    # Wielandt: a primitive s x s matrix has A^k > 0 for k = (s-1)^2 + 1
    for _ in range((s - 1) ** 2 + 1):
        if np.all(M > 0):
            return True
        M = np.minimum(M @ A, 1.0)
    return bool(np.all(M > 0))


def second_singular_value(spec: ProcessSpec) -> float:
    """Norm of the chain's transition operator on mean-zero ``L2(pi)`` functions."""
    pi = spec.stationary
    d = np.sqrt(pi)
    A = (d[:, None] * spec.transition) / d[None, :]
    sv = linalg.svdvals(A)
    # the top singular value 1 belongs to sqrt(pi); drop it
    return float(np.sort(sv)[::-1][1]) if sv.size > 1 else 0.0


def mixing_coefficient(spec: ProcessSpec, k: int) -> float:
    """Analytic value (or upper bound) of ``rho(k)``."""
    if k < 1:
        raise ValueError("lag must be >= 1")
    if spec.kind is ProcessKind.IID:
        return 0.0
    if spec.kind is ProcessKind.M_DEPENDENT:
        return 1.0 if k <= spec.window else 0.0
    if spec.kind is ProcessKind.GAUSSIAN_AR1:
        return abs(spec.phi) ** k
    return second_singular_value(spec) ** k


def mixing_envelope_of(spec: ProcessSpec) -> tuple[float, float]:
    """Return ``(c0, c1)`` with ``c0 >= 1``, ``c1 > 0`` dominating ``rho``.

    For a ``w``-dependent sequence ``rho(k) <= 1`` up to lag ``w`` and
    vanishes afterwards; ``c1 = 1 / (w + 1)``, ``c0 = exp(c1 * w)`` covers
    that step and minimizes ``c0 e^{c1} / c1``, the dominant term of the
    moment constant.
    """
    if spec.kind is ProcessKind.IID:
        return 1.0, IID_C1
    if spec.kind is ProcessKind.M_DEPENDENT:
        if spec.window == 0:
            return 1.0, IID_C1
        c1 = 1.0 / (spec.window + 1)
        return math.exp(c1 * spec.window), c1
    if spec.kind is ProcessKind.GAUSSIAN_AR1:
        r = abs(spec.phi)
    else:
        r = second_singular_value(spec)
    if r < 1e-12:
        return 1.0, IID_C1
    return 1.0, -math.log(r)


@dataclass(frozen=True, eq=False)
class SamplePath:
    values: np.ndarray
    seed: int
    spec: ProcessSpec

    def __len__(self) -> int:
        return self.values.size


def generate(spec: ProcessSpec, n: int, seed: int) -> SamplePath:
    """Draw ``X_1, ..., X_n`` from the stationary law of ``spec``.

    The result is a pure function of ``(spec, n, seed)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if spec.kind is ProcessKind.IID:
        values = spec.marginal.sample(rng, n)
    elif spec.kind is ProcessKind.M_DEPENDENT:
        xi = rng.random(n + spec.window)
        u = np.lib.stride_tricks.sliding_window_view(xi, spec.window + 1).sum(axis=1) % 1.0
        values = spec.marginal.quantile(u)
    elif spec.kind is ProcessKind.GAUSSIAN_AR1:
        z = rng.standard_normal(n)
        z[1:] *= math.sqrt(1.0 - spec.phi ** 2)
        values = signal.lfilter([1.0], [1.0, -spec.phi], z)
        if spec.uniformize:
            values = special.ndtr(values)
    else:
        values = _markov_path(spec, n, rng)
    values = np.asarray(values)
    values.setflags(write=False)
    return SamplePath(values, seed, spec)


def _markov_path(spec: ProcessSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    cum = np.cumsum(spec.transition, axis=1)
    cum[:, -1] = 1.0
    rows = [list(r) for r in cum]
    u = rng.random(n).tolist()
    top = spec.transition.shape[0] - 1
    state = min(int(np.searchsorted(np.cumsum(spec.stationary), u[0], side="right")), top)
    out = [state]
    for x in u[1:]:
        state = min(bisect.bisect_right(rows[state], x), top)
        out.append(state)
    return np.array(out, dtype=np.intp)


def process_from_config(cfg: dict, space: SampleSpace | None = None,
                        probabilities=None) -> ProcessSpec:
    """Build a process from a config table.

    ``space``/``probabilities`` give the marginal for i.i.d. and sliding-window
    processes when the table does not list one (usually the basis's).
    """
    kind = ProcessKind(cfg["kind"])
    if kind is ProcessKind.GAUSSIAN_AR1:
        return gaussian_ar1(float(cfg["phi"]), bool(cfg.get("uniformize", False)))
    if kind is ProcessKind.FINITE_MARKOV:
        return finite_markov(cfg["transition"], cfg.get("stationary"))
    probs = cfg.get("probabilities", probabilities)
    if probs is not None:
        marginal = Marginal.categorical(probs)
    elif space is None or space.kind is SpaceKind.UNIT_INTERVAL:
        marginal = Marginal.uniform()
    elif space.kind is SpaceKind.REAL_LINE:
        marginal = Marginal.normal()
    else:
        raise ValueError("finite-alphabet process needs probabilities")
    if kind is ProcessKind.IID:
        return iid(marginal)
    return m_dependent(int(cfg["window"]), marginal)
