"""Monte Carlo tail estimates and exact moment oracles.

Tail experiments draw ``R`` independent stationary paths (replication ``r``
uses seed ``base_seed + r``), compute the statistic on each, and tabulate
``P(|stat| > x)`` against the theoretical bound.  The exact oracles enumerate
every path of a finite chain, which is feasible for ``s^n <= 10^7``.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import OrthonormalBasis
from .bounds import BoundParameters, hoeffding_bound, theorem_bound
from .kernels import CanonicalKernel, ConditionViolation
from .processes import ProcessKind, ProcessSpec, generate, mixing_envelope_of
from .statistics import StatKind, u_stat, v_stat_factorized

ENUMERATION_BUDGET = 10 ** 7
_CHUNK = 1 << 16


class EnumerationBudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TailExperimentConfig:
    process: ProcessSpec
    kernel: CanonicalKernel
    statistic: StatKind
    n: int
    replications: int
    x_grid: tuple[float, ...]
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "statistic", StatKind(self.statistic))
        object.__setattr__(self, "x_grid", tuple(float(x) for x in self.x_grid))
        if self.statistic is StatKind.HOEFFDING_U:
            raise ValueError("tail experiments run V or U statistics")
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if self.n < self.kernel.order:
            raise ValueError("n must be at least the kernel order")
        xs = np.array(self.x_grid)
        if xs.size == 0 or np.any(xs <= 0) or np.any(np.diff(xs) <= 0):
            raise ValueError("x_grid must be positive and strictly increasing")
        if self.process.space != self.kernel.basis.space:
            raise ValueError(
                f"process lives on {self.process.space.kind.value}, basis on "
                f"{self.kernel.basis.space.kind.value}"
            )
        if (self.process.marginal.probabilities is not None and not np.allclose(
                self.process.marginal.probabilities, self.kernel.basis.marginal.probabilities,
                rtol=0, atol=1e-12)):
            raise ValueError("basis is not orthonormal under the process marginal")

    def fingerprint(self) -> str:
        doc = {
            "process": self.process.describe(),
            "basis": self.kernel.basis.describe(),
            "order": self.kernel.order,
            "entries": [[list(k), v] for k, v in self.kernel.coefficients.entries.items()],
            "statistic": self.statistic.value,
            "n": self.n,
            "replications": self.replications,
            "x_grid": list(self.x_grid),
            "base_seed": self.base_seed,
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class TailRecord:
    x: float
    empirical_tail: float
    mc_stderr: float
    theorem_bound: float
    hoeffding_bound: float


@dataclass
class ExperimentReport:
    records: list[TailRecord]
    config_hash: str
    wall_time: float
    constants: dict = field(default_factory=dict)
    statistics: np.ndarray | None = field(default=None, repr=False)

    def max_ratio(self) -> float:
        """Largest ``empirical_tail / theorem_bound`` over the grid."""
        ratios = [r.empirical_tail / r.theorem_bound if r.theorem_bound > 0 else
                  (math.inf if r.empirical_tail > 0 else 0.0) for r in self.records]
        return max(ratios)

    def violations(self, sigmas: float = 3.0) -> list[TailRecord]:
        return [r for r in self.records
                if r.empirical_tail > r.theorem_bound + sigmas * r.mc_stderr]


def check_hypotheses(config: TailExperimentConfig) -> BoundParameters:
    """Bound constants for ``config``; raises if the theorems do not apply."""
    kernel, process = config.kernel, config.process
    if not kernel.basis.bounded:
        raise ConditionViolation(
            "A", f"{kernel.basis.family.value} basis has sup_t |e_i(t)| = inf")
    if config.statistic is StatKind.U and not (process.ac_certified or kernel.basis.continuous):
        raise ConditionViolation(
            "AC", "process is not certified absolutely continuous and the basis is not "
                  "continuous on a continuum")
    c0, c1 = mixing_envelope_of(process)
    return BoundParameters.for_kernel(kernel, c0, c1, optimize_rate=True)


def _statistic(config: TailExperimentConfig, r: int) -> float:
    path = generate(config.process, config.n, config.base_seed + r)
    if config.statistic is StatKind.V:
        return v_stat_factorized(config.kernel, path).value
    return u_stat(config.kernel, path).value


def _statistic_block(args) -> list[float]:
    config, start, stop = args
    return [_statistic(config, r) for r in range(start, stop)]


def simulate_statistics(config: TailExperimentConfig, workers: int = 1) -> np.ndarray:
    """Statistic value for every replication, in replication order."""
    R = config.replications
    if workers <= 1:
        return np.array(_statistic_block((config, 0, R)))
    step = max(1, math.ceil(R / (4 * workers)))
    blocks = [(config, a, min(R, a + step)) for a in range(0, R, step)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_statistic_block, blocks))
    return np.array([v for part in parts for v in part])


def _hoeffding_column(config: TailExperimentConfig, x: float) -> float:
    # two-sided classical bound for an i.i.d. mean of a bounded function (m = 1)
    if config.kernel.order != 1 or config.process.kind is not ProcessKind.IID:
        return math.nan
    half_range = config.kernel.basis.sup_bound * config.kernel.coefficients.abs_sum
    if half_range == 0.0:
        return 0.0
    t = x / math.sqrt(config.n)
    return min(1.0, 2.0 * hoeffding_bound(t, config.n, 1, -half_range, half_range))


def run_tail_experiment(config: TailExperimentConfig, workers: int = 1) -> ExperimentReport:
    params = check_hypotheses(config)
    start = time.perf_counter()
    stats = np.abs(simulate_statistics(config, workers))
    R = config.replications
    records = []
    for x in config.x_grid:
        p = int(np.count_nonzero(stats > x)) / R
        records.append(TailRecord(
            x=x,
            empirical_tail=p,
            mc_stderr=math.sqrt(p * (1.0 - p) / R),
            theorem_bound=theorem_bound(x, params),
            hoeffding_bound=_hoeffding_column(config, x),
        ))
    return ExperimentReport(records, config.fingerprint(), time.perf_counter() - start,
                            params.as_dict(), stats)


REPORT_HEADER = "x,empirical_tail,mc_stderr,theorem_bound,hoeffding_bound"


def format_report(report: ExperimentReport) -> str:
    lines = [REPORT_HEADER]
    for r in report.records:
        lines.append(",".join(format(float(v), ".17g") for v in
                              (r.x, r.empirical_tail, r.mc_stderr, r.theorem_bound,
                               r.hoeffding_bound)))
    return "\n".join(lines) + "\n"


def write_report(report: ExperimentReport, destination) -> None:
    text = format_report(report)
    try:
        with open(destination, "w", newline="\n", encoding="ascii") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {os.fspath(destination)!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# exact enumeration over finite chains


def _check_chain(process: ProcessSpec, basis: OrthonormalBasis, n: int) -> int:
    if process.kind is not ProcessKind.FINITE_MARKOV:
        raise ValueError("exact oracles need a finite Markov chain")
    if basis.table is None:
        raise ValueError("exact oracles need a finite-alphabet basis")
    s = process.transition.shape[0]
    if basis.table.shape[1] != s:
        raise ValueError("basis alphabet does not match the chain")
    if not np.allclose(basis.marginal.probabilities, process.stationary, rtol=0, atol=1e-12):
        raise ValueError("basis is not orthonormal under the chain's stationary law")
    if n < 1:
        raise ValueError("n must be >= 1")
    if s ** n > ENUMERATION_BUDGET:
        raise EnumerationBudgetExceeded(
            f"{s}^{n} paths exceed the enumeration budget {ENUMERATION_BUDGET:g}")
    return s


def _path_chunks(process: ProcessSpec, n: int):
    """Yield ``(paths, weights)`` covering all ``s^n`` paths in lexicographic order."""
    s = process.transition.shape[0]
    P, pi = process.transition, process.stationary
    suffix_len = min(n, max(1, int(math.log(_CHUNK, s))))
    prefix_len = n - suffix_len
    suffixes = np.array(list(itertools.product(range(s), repeat=suffix_len)), dtype=np.intp)
    for prefix in itertools.product(range(s), repeat=prefix_len):
        paths = np.hstack([np.broadcast_to(np.array(prefix, dtype=np.intp),
                                           (suffixes.shape[0], prefix_len)), suffixes])
        w = pi[paths[:, 0]].copy()
        for t in range(1, n):
            w *= P[paths[:, t - 1], paths[:, t]]
        yield paths, w


def exact_moment_oracle(process: ProcessSpec, basis: OrthonormalBasis, indices, n: int) -> float:
    """``E S_n(i_1) ... S_n(i_k)`` by summing over every chain path."""
    s = _check_chain(process, basis, n)
    indices = [int(i) for i in indices]
    if not indices:
        return 1.0
    for i in indices:
        if not 1 <= i <= basis.max_index:
            raise IndexError(f"basis index {i} outside 1..{basis.max_index}")
    del s
    # unnormalized sums keep integer-valued bases exact; n^{-k/2} is applied once
    parts = []
    for paths, w in _path_chunks(process, n):
        sums = {i: basis.table[i][paths].sum(axis=1) for i in set(indices)}
        prod = w.copy()
        for i in indices:
            prod *= sums[i]
        parts.append(math.fsum(prod))
    return math.fsum(parts) / n ** (len(indices) / 2)


def exact_even_moment_vstat(process: ProcessSpec, kernel: CanonicalKernel, n: int, N: int) -> float:
    """``E V_n^{2N}`` by evaluating ``V_n`` on every chain path."""
    _check_chain(process, kernel.basis, n)
    if N < 1:
        raise ValueError("N must be >= 1")
    if not kernel.coefficients.entries:
        return 0.0
    table = kernel.basis.table
    m = kernel.order
    parts = []
    for paths, w in _path_chunks(process, n):
        S = {i: table[i][paths].sum(axis=1) for i in kernel.coefficients.distinct_indices}
        v = np.zeros(paths.shape[0])
        for idx, coef in kernel.coefficients.entries.items():
            term = np.full(paths.shape[0], coef)
            for i in idx:
                term = term * S[i]
            v = v + term
        parts.append(math.fsum(w * v ** (2 * N)))
    # V_n = n^{-m/2} v, so V_n^{2N} = v^{2N} / n^{mN}
    return math.fsum(parts) / n ** (m * N)
