"""Command-line experiment runner.

    dtle-net run <config.toml> [--out DIR]
    dtle-net fixtures
    dtle-net oracle <config.toml>

``run`` writes ``trajectory.csv``, ``summary.txt`` and ``solution_X.txt``
into the output directory. Its exit status is 0 when the tolerance was met,
1 for a bad config, 2 when ``max_iters`` ran out first and 3 on divergence.
``oracle`` exits 0 with the centralized solution, 1 for a bad config and
2 when the equation has no unique solution.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import _backend, config as config_mod, fixtures, matcore, network, oracle, solver
from .errors import (
    ConfigError,
    DimensionError,
    DivergenceError,
    EstimationError,
    NoUniqueSolutionError,
    NonFiniteError,
    ParameterError,
    PartitionError,
    ScheduleError,
)
from .problem import DTLEProblem, decompose

EXIT_CONVERGED = 0
EXIT_CONFIG = 1
EXIT_MAX_ITERS = 2
EXIT_DIVERGED = 3

DEFAULT_OUT = "out"


@dataclass
class Experiment:
    config: config_mod.ExperimentConfig
    problem: DTLEProblem
    locals: list
    schedule: network.TopologySchedule


@dataclass
class SummaryReport:
    final_residual_max: float
    final_disagreement: float
    final_consensus_error: float
    final_objective: float
    rounds: int
    terminated: str
    rate_slope: float | None
    rate_r_squared: float | None
    min_eigenvalue_X: float
    oracle: str
    admissible: bool
    backend: str

    def lines(self) -> list[str]:
        def fmt(v):
            if v is None:
                return "n/a"
            if isinstance(v, bool):
                return "true" if v else "false"
            return repr(v)

        return [f"{k}={fmt(v)}" for k, v in vars(self).items()]


def _fail(cfg, section, key, message):
    lines = cfg.source_lines
    line = lines.get((section, key)) or lines.get((section, None)) or 1
    return ConfigError(f"{section}.{key}: {message}" if key else f"{section}: {message}", cfg.path, line)


def build_problem(cfg) -> DTLEProblem:
    if cfg.fixture is not None:
        try:
            return fixtures.load_fixture(cfg.fixture)
        except fixtures.UnknownFixtureError as exc:
            raise _fail(cfg, "problem", "fixture", str(exc)) from None
    if cfg.random is not None:
        r = cfg.random
        return fixtures.generate_random_problem(r["n"], r["spectral_scale"], r["seed"])
    try:
        A = matcore.read_matrix(cfg.A_file)
    except (DimensionError, NonFiniteError) as exc:
        raise _fail(cfg, "problem", "A_file", str(exc)) from None
    try:
        Q = matcore.read_matrix(cfg.Q_file)
    except (DimensionError, NonFiniteError) as exc:
        raise _fail(cfg, "problem", "Q_file", str(exc)) from None
    try:
        return DTLEProblem(A, Q)
    except DimensionError as exc:
        raise _fail(cfg, "problem", "Q_file", str(exc)) from None


def build_locals(cfg, p: DTLEProblem):
    try:
        locals_ = decompose(p, cfg.m, cfg.sizes, safety=cfg.safety, xi_rule=cfg.xi_rule)
    except PartitionError as exc:
        raise _fail(cfg, "agents", "sizes" if cfg.sizes else "m", str(exc)) from None
    if cfg.alphas is not None:
        locals_ = [d.with_alpha(a) for d, a in zip(locals_, cfg.alphas)]
    if cfg.step_scale != 1.0:
        locals_ = [d.with_alpha(d.alpha * cfg.step_scale) for d in locals_]
    return locals_


def build_schedule(cfg) -> network.TopologySchedule:
    m = cfg.m
    try:
        if cfg.family == network.FINITE_CONNECTED:
            if cfg.graphs is not None:
                specs = cfg.graphs
            elif m == 1:
                specs = [[]]
            else:
                specs = network.random_connected_family(m, cfg.random_graphs, cfg.schedule_seed, cfg.edge_probability)
            return network.schedule_finite_connected(m, specs, cfg.schedule_seed)
        if cfg.graphs is not None:
            s = network.cyclic_schedule(m, cfg.graphs, network.UNIFORMLY_CONNECTED, cfg.B, cfg.schedule_seed)
            report = network.verify_schedule(s, max(2 * len(cfg.graphs), cfg.B) + cfg.B)
            if not report.passed:
                raise ScheduleError(f"graphs are not {cfg.B}-uniformly connected: {report.message}")
            return s
        return network.schedule_uniformly_connected(m, cfg.B, cfg.schedule_seed, cfg.jitter, cfg.variants)
    except ScheduleError as exc:
        raise _fail(cfg, "schedule", "graphs" if cfg.graphs is not None else "family", str(exc)) from None


def build_experiment(path) -> Experiment:
    cfg = config_mod.load_config(path)
    p = build_problem(cfg)
    locals_ = build_locals(cfg, p)
    return Experiment(cfg, p, locals_, build_schedule(cfg))


def consensus_X(traj: solver.Trajectory) -> np.ndarray:
    return traj.final_state.X.mean(axis=0)


def summarize(exp: Experiment, traj: solver.Trajectory) -> SummaryReport:
    with np.errstate(over="ignore", invalid="ignore"):
        return _summarize(exp, traj)


def _summarize(exp, traj):
    last = traj.last
    try:
        rate = solver.estimate_linear_rate(traj)
        slope, r2 = rate.slope, rate.r_squared
    except EstimationError:
        slope = r2 = None
    X = consensus_X(traj)
    S = 0.5 * (X + X.T)
    # a diverging run can leave overflowed entries behind
    min_eig = float(matcore.sym_eigenvalues(S)[0]) if np.isfinite(S).all() else float("nan")
    if exp.problem.n > oracle.MAX_N:
        verdict = "skipped (n > 50)"
    else:
        try:
            sol = oracle.solve_centralized(exp.problem)
            err = matcore.frobenius_norm(X - sol.X_star) / max(matcore.frobenius_norm(sol.X_star), 1e-300)
            verdict = repr(err)
        except NoUniqueSolutionError:
            verdict = "non-unique"
    return SummaryReport(
        final_residual_max=last.residual_max,
        final_disagreement=last.disagreement,
        final_consensus_error=last.consensus_error,
        final_objective=last.objective,
        rounds=last.k,
        terminated=traj.terminated,
        rate_slope=slope,
        rate_r_squared=r2,
        min_eigenvalue_X=min_eig,
        oracle=verdict,
        admissible=all(d.admissible() for d in exp.locals),
        backend=_backend.BACKEND,
    )


def write_outputs(out_dir, exp: Experiment, traj: solver.Trajectory) -> SummaryReport:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "trajectory.csv"), "w", newline="\n") as fh:
        traj.to_csv(fh, trace=exp.config.trace)
    report = summarize(exp, traj)
    with open(os.path.join(out_dir, "summary.txt"), "w", newline="\n") as fh:
        fh.write("\n".join(report.lines()) + "\n")
    matcore.write_matrix(os.path.join(out_dir, "solution_X.txt"), consensus_X(traj))
    return report


def run_experiment(path, out=None, stream=sys.stdout) -> int:
    """Run the experiment in config ``path``; returns the exit status."""
    try:
        exp = build_experiment(path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = exp.config
    out_dir = out or cfg.out or DEFAULT_OUT
    try:
        traj = solver.run(
            exp.problem,
            exp.locals,
            exp.schedule,
            max_iters=cfg.max_iters,
            tol=cfg.tol,
            stride=cfg.stride,
            init=cfg.init,
            init_scale=cfg.init_scale,
            init_seed=cfg.init_seed,
            reference=None if cfg.reference == "none" else "auto",
            trace=cfg.trace,
        )
    except DivergenceError as exc:
        write_outputs(out_dir, exp, exc.trajectory)
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ParameterError as exc:
        print(f"error: {_fail(cfg, 'agents', 'alphas' if cfg.alphas else 'safety', str(exc))}", file=sys.stderr)
        return EXIT_CONFIG
    report = write_outputs(out_dir, exp, traj)
    print(
        f"{report.terminated} after {report.rounds} rounds: residual_max={report.final_residual_max:.3e} "
        f"disagreement={report.final_disagreement:.3e} -> {out_dir}",
        file=stream,
    )
    return EXIT_CONVERGED if traj.terminated == "tol" else EXIT_MAX_ITERS


def example_configs() -> list[str]:
    root = resources.files("dtle_net") / "configs"
    return sorted(str(root / f.name) for f in root.iterdir() if f.name.endswith(".toml"))


def _cmd_fixtures(args) -> int:
    print("fixtures:")
    print("  table1       10-state system, Q = B B' from the 10x2 input matrix")
    print("  scalar       a = 0.5, q = 0.75 (solution x = 1)")
    print("  random-nXX   seeded random n = XX instance, spectral radius 0.5")
    print("example configs:")
    for path in example_configs():
        print(f"  {path}")
    return 0


def _cmd_oracle(args) -> int:
    try:
        cfg = config_mod.load_config(args.config)
        p = build_problem(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if p.n > oracle.MAX_N:
        print(f"error: centralized oracle is limited to n <= {oracle.MAX_N}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        sol = oracle.solve_centralized(p)
    except NoUniqueSolutionError as exc:
        print("unique=false")
        print(f"error: {exc} ({exc.diagnostic})", file=sys.stderr)
        return 2
    print("unique=true")
    print(f"residual={sol.residual!r}")
    print(f"min_eigenvalue={float(matcore.sym_eigenvalues(sol.X_star)[0])!r}")
    sys.stdout.write(matcore.format_matrix(sol.X_star))
    return 0


def _cmd_run(args) -> int:
    return run_experiment(args.config, args.out)


class _Parser(argparse.ArgumentParser):
    # usage errors are config errors; argparse's own status 2 means max-iters here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def main(argv=None) -> int:
    parser = _Parser(prog="dtle-net", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p_run = sub.add_parser("run", help="run a distributed experiment")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.set_defaults(func=_cmd_run)
    p_fix = sub.add_parser("fixtures", help="list bundled problems and example configs")
    p_fix.set_defaults(func=_cmd_fixtures)
    p_orc = sub.add_parser("oracle", help="centralized solve of the configured problem")
    p_orc.add_argument("config")
    p_orc.set_defaults(func=_cmd_oracle)
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
