"""Command-line front end.

Exit codes: 0 success, 1 property violation, 2 input error, 3 resource budget.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

import numpy as np
from scipy.stats import qmc

from . import bounds
from .basis import OrthonormalBasis, SpaceKind, gram_schmidt_finite
from .config import ConfigError, RunConfig
from .experiments import (EnumerationBudgetExceeded, TailExperimentConfig,
                          exact_even_moment_vstat, exact_moment_oracle, run_tail_experiment,
                          write_report)
from .kernels import (CANONICITY_TOL, QUADRATURE_CANONICITY_TOL, CanonicalKernel,
                      ConditionViolation, CoefficientTensor, check_canonicity)
from .processes import finite_markov, generate, mixing_envelope_of
from .statistics import (BudgetExceeded, Method, diagonal_term, u_stat, v_stat_factorized,
                         v_stat_naive)

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3


class InputError(Exception):
    pass


def fixed_point_grid(basis: OrthonormalBasis, dim: int, count: int = 100) -> np.ndarray:
    """Deterministic ``(count, dim)`` array of points in the basis's sample space."""
    if dim == 0:
        return np.empty((1, 0))
    space = basis.space
    if space.is_finite:
        pts = np.array(np.meshgrid(*[np.arange(space.size)] * dim, indexing="ij"))
        pts = pts.reshape(dim, -1).T
        return pts[:count] if len(pts) <= count else pts[
            np.linspace(0, len(pts) - 1, count).round().astype(int)]
    if dim == 1:
        u = np.linspace(0.0, 1.0, count)[:, None]
    else:
        u = qmc.Halton(d=dim, scramble=False).random(count + 1)[1:]
    if space.kind is SpaceKind.UNIT_INTERVAL:
        return u
    return np.clip(-4.0 + 8.0 * u, -4.0, 4.0)


def _max_residual(kernel, basis, order, grid_points) -> float:
    worst = 0.0
    for slot in range(1, order + 1):
        for fixed in fixed_point_grid(basis, order - 1, grid_points):
            worst = max(worst, check_canonicity(kernel, slot, tuple(fixed), basis=basis))
    return worst


def cmd_kernel_check(args) -> int:
    cfg = RunConfig.load(args.config)
    basis = cfg.build_basis()
    kernel, raw, dec = cfg.build_kernel(basis)
    series_tol = args.tolerance if args.tolerance is not None else CANONICITY_TOL
    if kernel is not None and dec is None:
        res = _max_residual(kernel, basis, kernel.order, args.grid_points)
        ok = res <= series_tol
        print(f"series kernel m={kernel.order}: max canonicity residual {res:.3e} "
              f"(tolerance {series_tol:g}) {'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_VIOLATION
    if dec is None:
        res = _max_residual(raw, basis, raw.order, args.grid_points)
        ok = res <= series_tol
        print(f"raw kernel {cfg.kernel['preset']!r} m={raw.order}: max canonicity residual "
              f"{res:.3e} (tolerance {series_tol:g}) {'PASS' if ok else 'FAIL'}")
        return EXIT_OK if ok else EXIT_VIOLATION
    tol = args.tolerance if args.tolerance is not None else QUADRATURE_CANONICITY_TOL
    print(f"decomposition of {cfg.kernel['preset']!r}: constant term {dec.constant:.12g}")
    worst = 0.0
    for slots, comp in dec.components.items():
        res = _max_residual(comp, basis, comp.order, args.grid_points)
        worst = max(worst, res)
        print(f"  component on slots {slots}: {len(comp.coefficients)} coefficients, "
              f"residual {res:.3e}")
    ok = worst <= tol
    print(f"max canonicity residual {worst:.3e} (tolerance {tol:g}) {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VIOLATION


def _path_for(cfg: RunConfig, basis, seed_override):
    process = cfg.build_process(basis)
    if process.space != basis.space:
        raise InputError("process and basis live on different sample spaces")
    n = int(cfg.require("experiment", "n"))
    seed = seed_override if seed_override is not None else int(cfg.experiment.get("base_seed", 0))
    return generate(process, n, seed)


def _canonical_kernel(cfg: RunConfig, basis) -> CanonicalKernel:
    kernel, raw, _ = cfg.build_kernel(basis)
    if kernel is None:
        raise InputError("raw kernel presets need kernel.decompose = true for statistics")
    return kernel


def cmd_stat(args) -> int:
    cfg = RunConfig.load(args.config)
    basis = cfg.build_basis()
    kernel = _canonical_kernel(cfg, basis)
    path = _path_for(cfg, basis, args.seed)
    kinds = ["V", "U"] if args.statistic == "both" else [
        args.statistic or cfg.experiment.get("statistic", "V")]
    values = {}
    for kind in kinds:
        if kind == "V":
            methods = {"naive": lambda: v_stat_naive(kernel, path),
                       "factorized": lambda: v_stat_factorized(kernel, path)}
        elif kind == "U":
            methods = {"naive": lambda: u_stat(kernel, path, Method.NAIVE),
                       "factorized": lambda: u_stat(kernel, path)}
        else:
            raise InputError(f"unknown statistic {kind!r}")
        wanted = ["naive", "factorized"] if args.method == "both" else [args.method]
        for name in wanted:
            res = methods[name]()
            values[kind, name] = res.value
            print(f"{kind} {res.method.value} n={res.n}: {res.value:.17g}")
        if len(wanted) == 2:
            a, b = values[kind, "naive"], values[kind, "factorized"]
            print(f"{kind} naive - factorized: {a - b:.3e} "
                  f"(relative to 1+|value|: {abs(a - b) / (1 + abs(a)):.3e})")
    if len(kinds) == 2:
        v = next(val for (k, _), val in values.items() if k == "V")
        u = next(val for (k, _), val in values.items() if k == "U")
        print(f"V - U: {v - u:.17g}")
        if kernel.order == 2:
            print(f"n^-1 sum_j f(X_j, X_j): {diagonal_term(kernel, path):.17g}")
    return EXIT_OK


def _parse_grid(text: str) -> list[float]:
    try:
        xs = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad x grid {text!r}") from exc
    if not xs:
        raise InputError("empty x grid")
    if any(not (x > 0 and math.isfinite(x)) for x in xs):
        raise InputError("x values must be positive and finite")
    return xs


def cmd_bound(args) -> int:
    if args.x_log:
        lo, hi, num = args.x_log
        if not (lo > 0 and hi > lo and int(num) >= 2):
            raise InputError("--x-log needs 0 < start < stop and at least 2 points")
        xs = list(np.geomspace(lo, hi, int(num)))
    else:
        xs = _parse_grid(args.x)
    families = [f.strip() for f in args.family.split(",") if f.strip()]
    cols = {}
    try:
        for fam in families:
            if fam == "theorem":
                params = bounds.BoundParameters(args.c0, args.c1, args.C, args.m, args.abs_sum)
                cols[fam] = [bounds.theorem_bound(x, params) for x in xs]
            elif fam == "chebyshev":
                params = bounds.BoundParameters(args.c0, args.c1, args.C, args.m, args.abs_sum)
                cols[fam] = [bounds.optimized_chebyshev_bound(x, params) for x in xs]
            elif fam == "hoeffding":
                cols[fam] = [bounds.hoeffding_bound(x, args.n, args.m, args.a, args.b) for x in xs]
            elif fam == "bounded":
                cols[fam] = [bounds.bounded_kernel_bound(x, args.B, args.m, args.c1_user,
                                                         args.c2_user) for x in xs]
            elif fam == "bernstein":
                cols[fam] = [bounds.bernstein_bound(x, args.sigma, args.L, args.n, args.m,
                                                    args.c1_user, args.c2_user) for x in xs]
            else:
                raise InputError(f"unknown bound family {fam!r}")
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x"] + families)
    for k, x in enumerate(xs):
        writer.writerow([format(float(x), ".17g")] + [format(cols[f][k], ".17g") for f in families])
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def build_experiment(cfg: RunConfig, seed_override=None) -> TailExperimentConfig:
    basis = cfg.build_basis()
    kernel = _canonical_kernel(cfg, basis)
    process = cfg.build_process(basis)
    exp = cfg.experiment
    try:
        return TailExperimentConfig(
            process=process,
            kernel=kernel,
            statistic=exp.get("statistic", "V"),
            n=int(cfg.require("experiment", "n")),
            replications=int(cfg.require("experiment", "replications")),
            x_grid=tuple(cfg.require("experiment", "x_grid")),
            base_seed=seed_override if seed_override is not None else int(exp.get("base_seed", 0)),
        )
    except ValueError as exc:
        raise InputError(f"[experiment]: {exc}") from exc


def cmd_experiment(args) -> int:
    cfg = RunConfig.load(args.config)
    config = build_experiment(cfg, args.seed)
    report = run_tail_experiment(config, workers=args.threads)
    out = args.out or cfg.output.get("path")
    if out:
        write_report(report, out)
    ratio = report.max_ratio()
    bad = report.violations()
    print(f"config {report.config_hash[:12]}: {len(report.records)} thresholds, "
          f"R={config.replications}, n={config.n}, max empirical/bound ratio {ratio:.4g}, "
          f"violations {len(bad)}" + (f", report {out}" if out else ""))
    return EXIT_VIOLATION if bad else EXIT_OK


def _parse_transition(args):
    if args.flip is not None:
        f = args.flip
        return [[1 - f, f], [f, 1 - f]]
    if args.transition:
        try:
            return [[float(v) for v in row.split(",")] for row in args.transition.split(";")]
        except ValueError as exc:
            raise InputError(f"bad transition matrix {args.transition!r}") from exc
    raise InputError("give --flip or --transition")


def cmd_oracle(args) -> int:
    try:
        chain = finite_markov(_parse_transition(args))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    basis = gram_schmidt_finite(chain.stationary)
    c0, c1 = mixing_envelope_of(chain)
    c1 = bounds.best_rate(c0, c1)
    if args.kernel:
        cfg = RunConfig.load(args.kernel)
        order = int(cfg.require("kernel", "order"))
        entries = {tuple(e["index"]): e["value"] for e in cfg.kernel.get("entries", [])}
        try:
            kernel = CanonicalKernel(basis, CoefficientTensor(order, entries))
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        value = exact_even_moment_vstat(chain, kernel, args.n, args.N)
        params = bounds.BoundParameters.for_kernel(kernel, c0, c1)
        log_b = bounds.even_moment_log_bound(args.N, params)
        label = f"E V_n^{2 * args.N}"
    else:
        try:
            indices = [int(v) for v in args.indices.split(",") if v.strip()]
        except ValueError as exc:
            raise InputError(f"bad index list {args.indices!r}") from exc
        if not indices or len(indices) % 2:
            raise InputError("index list must have even, nonzero length 2mN")
        value = exact_moment_oracle(chain, basis, indices, args.n)
        params = bounds.BoundParameters(c0, c1, basis.sup_bound, 1, 1.0)
        log_b = bounds.lemma1_bound(1, len(indices) // 2, params)
        label = f"E S_n({','.join(map(str, indices))})"
    ok = abs(value) <= math.exp(log_b) if log_b < 700 else True
    print(f"{label} = {value:.17g}")
    print(f"bound = exp({log_b:.17g})")
    print("dominated" if ok else "NOT dominated")
    return EXIT_OK if ok else EXIT_VIOLATION


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker processes for Monte Carlo (default: all cores)")
    common.add_argument("--seed", type=int, default=None, help="override config seeds")
    p = argparse.ArgumentParser(prog="canonstat", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel-check", parents=[common],
                       help="canonicity residuals of a configured kernel")
    k.add_argument("config")
    k.add_argument("--grid-points", type=int, default=100)
    k.add_argument("--tolerance", type=float, default=None)
    k.set_defaults(func=cmd_kernel_check)

    s = sub.add_parser("stat", parents=[common],
                       help="evaluate V/U statistics on a generated path")
    s.add_argument("config")
    s.add_argument("--method", choices=["naive", "factorized", "both"], default="factorized")
    s.add_argument("--statistic", choices=["V", "U", "both"], default=None)
    s.set_defaults(func=cmd_stat)

    b = sub.add_parser("bound", parents=[common],
                       help="tabulate tail bounds as CSV")
    b.add_argument("--family", default="theorem",
                   help="comma list of theorem, chebyshev, hoeffding, bounded, bernstein")
    b.add_argument("--x", default="1,10,100,1000,10000", help="comma-separated thresholds")
    b.add_argument("--x-log", nargs=3, type=float, metavar=("START", "STOP", "NUM"))
    b.add_argument("--c0", type=float, default=1.0)
    b.add_argument("--c1", type=float, default=1.0)
    b.add_argument("--C", type=float, default=math.sqrt(2.0))
    b.add_argument("--m", type=int, default=1)
    b.add_argument("--abs-sum", type=float, default=1.0)
    b.add_argument("--n", type=int, default=100)
    b.add_argument("--a", type=float, default=-1.0)
    b.add_argument("--b", type=float, default=1.0)
    b.add_argument("--B", type=float, default=1.0)
    b.add_argument("--sigma", type=float, default=1.0)
    b.add_argument("--L", type=float, default=1.0)
    b.add_argument("--c1-user", type=float, default=1.0)
    b.add_argument("--c2-user", type=float, default=1.0)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bound)

    e = sub.add_parser("experiment", parents=[common],
                       help="Monte Carlo tail experiment -> CSV report")
    e.add_argument("config")
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_experiment)

    o = sub.add_parser("oracle", parents=[common],
                       help="exact moments of a finite chain by path enumeration")
    o.add_argument("--flip", type=float, default=None, help="symmetric two-state flip probability")
    o.add_argument("--transition", default=None, help="rows separated by ';', entries by ','")
    o.add_argument("--indices", default="1,1")
    o.add_argument("--n", type=int, default=4)
    o.add_argument("--kernel", default=None, help="config with a [kernel] entries table")
    o.add_argument("--N", type=int, default=1)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InputError, ConditionViolation, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (BudgetExceeded, EnumerationBudgetExceeded) as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
