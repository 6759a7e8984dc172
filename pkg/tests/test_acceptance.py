"""Acceptance criteria, one test each.

Every test records a single ``CRITERION n: PASS|FAIL`` line, printed in the
terminal summary (and to stdout when this file is run as a script).
"""

import functools

import numpy as np
import pytest

from conftest import ACCEPTANCE
from dtle_net import network as nw, oracle, solver
from dtle_net.fixtures import generate_random_problem, load_fixture
from dtle_net.problem import AgentEstimate, decompose, local_gradients, local_objective

TABLE1_ROUNDS = 6000
TRANSIENT = 500


def report(number, title, ok, detail):
    line = f"CRITERION {number}: {'PASS' if ok else 'FAIL'} - {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    assert ok, line


def rel_err(X, X_star):
    return float(np.linalg.norm(X - X_star) / np.linalg.norm(X_star))


# shared runs ------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def small_runs():
    """Criterion 1 instances plus uniformly connected companions."""
    out = []
    g = np.random.default_rng(2024)
    for idx in range(20):
        n = int(g.choice([2, 3, 4]))
        m = int(g.integers(1, min(n, 3) + 1))
        p = generate_random_problem(n, 0.5, 100 + idx)
        specs = nw.random_connected_family(m, 3, seed=idx) if m > 1 else [[]]
        sched = nw.schedule_finite_connected(m, specs, seed=idx)
        out.append(("finite", p, decompose(p, m), sched))
    for idx in range(6):
        n = int(g.choice([3, 4]))
        m = int(g.integers(2, min(n, 3) + 1))
        p = generate_random_problem(n, 0.5, 200 + idx)
        out.append(("uniform", p, decompose(p, m), nw.schedule_uniformly_connected(m, 2, seed=idx)))
    runs = []
    for kind, p, locals_, sched in out:
        traj = solver.run(p, locals_, sched, max_iters=400_000, tol=1e-8, stride=10, init="random", init_seed=7)
        runs.append((kind, p, locals_, traj))
    return runs


@functools.lru_cache(maxsize=None)
def table1_run(family, step_scale=1.0, tol=1e-8, max_iters=TABLE1_ROUNDS):
    p = load_fixture("table1")
    locals_ = [d.with_alpha(d.alpha * step_scale) for d in decompose(p, 5)]
    if family == nw.FINITE_CONNECTED:
        sched = nw.schedule_finite_connected(5, nw.random_connected_family(5, 3, seed=1), seed=1)
    else:
        sched = nw.schedule_uniformly_connected(5, 3, seed=1)
    return p, locals_, solver.run(p, locals_, sched, max_iters=max_iters, tol=tol, stride=10)


def all_admissible_runs():
    runs = [(p, locals_, t) for _, p, locals_, t in small_runs()]
    for family in nw.FAMILIES:
        runs.append(table1_run(family))
    runs.append(table1_run(nw.FINITE_CONNECTED, 1.0, 1e-4, 400_000))
    runs.append(table1_run(nw.FINITE_CONNECTED, 0.5, 1e-4, 800_000))
    return [r for r in runs if all(d.admissible() for d in r[1])]


# criteria -----------------------------------------------------------------------

def test_criterion_1_oracle_equivalence():
    worst_res = worst_err = 0.0
    failures = []
    for idx, (kind, p, locals_, traj) in enumerate(small_runs()):
        if kind != "finite":
            continue
        X_star = oracle.solve_centralized(p).X_star
        err = max(rel_err(X, X_star) for X in traj.final_state.X)
        worst_res = max(worst_res, traj.last.residual_max)
        worst_err = max(worst_err, err)
        if traj.terminated != "tol" or traj.last.residual_max > 1e-8 or err > 1e-6:
            failures.append(idx)
    report(1, "oracle equivalence on 20 random instances", not failures,
           f"worst residual_max={worst_res:.2e} (<=1e-8), worst relative error={worst_err:.2e} (<=1e-6), "
           f"failing instances={failures}")


def test_criterion_2_table1_reproduction():
    lines = []
    ok = True
    for family in nw.FAMILIES:
        p, _, traj = table1_run(family)
        res = traj.column("residual_max")
        ks = np.array([r.k for r in traj.records])
        tail = res[ks >= TRANSIENT]
        monotone = bool(np.all(np.diff(tail) <= 0.0))
        X = traj.final_state.X.mean(axis=0)
        min_eig = float(np.linalg.eigvalsh(0.5 * (X + X.T))[0])
        passed = monotone and res[-1] < 1e-4 and traj.last.disagreement < 1e-4 and min_eig > 0
        ok &= passed
        lines.append(
            f"[{family}] monotone after k={TRANSIENT}: {monotone}, residual_max(6000)={res[-1]:.3e} (<1e-4), "
            f"D={traj.last.disagreement:.3e} (<1e-4), min eig X={min_eig:.3e} (>0)"
        )
    report(2, "Table I reproduction at k=6000", ok, "; ".join(lines))


def test_criterion_3_linear_rate():
    _, _, traj = table1_run(nw.FINITE_CONNECTED)
    est = solver.estimate_linear_rate(traj, window=(TRANSIENT, traj.last.k))
    by_k = {r.k: r.residual_max for r in traj.records}
    ratios = [by_k[k + 100] / by_k[k] for k in sorted(by_k) if k >= TRANSIENT and k + 100 in by_k]
    ok = est.linear and max(ratios) <= 0.99
    report(3, "linear rate on the per-step-connected Table I run", ok,
           f"slope={est.slope:.3e} (<0), r2={est.r_squared:.6f} (>=0.95), "
           f"max residual(k+100)/residual(k)={max(ratios):.4f} (<=0.99) over {len(ratios)} samples")


def test_criterion_4_half_steps_slower():
    _, _, full = table1_run(nw.FINITE_CONNECTED, 1.0, 1e-4, 400_000)
    _, _, half = table1_run(nw.FINITE_CONNECTED, 0.5, 1e-4, 800_000)
    k_full = full.rounds_to(1e-4)
    k_half = half.rounds_to(1e-4)
    ok = k_full is not None and k_half is not None and k_half > k_full
    report(4, "halving every step slows convergence", ok,
           f"rounds to residual 1e-4: full={k_full}, half={k_half}")


def test_criterion_5_lyapunov_descent():
    worst = -np.inf
    count = 0
    for _, _, traj in all_admissible_runs():
        sq = traj.column("lyapunov_distance") ** 2
        rise = np.max((sq[1:] - sq[:-1]) / sq[:-1])
        worst = max(worst, float(rise))
        count += 1
    report(5, "weighted distance to the solution never increases", worst <= 1e-10,
           f"largest relative increase={worst:.2e} (<=1e-10) over {count} runs")


def test_criterion_6_ergodic_bound():
    worst = 0.0
    count = 0
    for _, _, traj in all_admissible_runs():
        for r in traj.records[1:]:
            worst = max(worst, r.ergodic_bound_lhs / (traj.initial_lyapunov_sq / (4 * r.k)))
        count += 1
    report(6, "ergodic O(1/k) bound", worst <= 1.0,
           f"largest lhs/rhs ratio={worst:.3e} (<=1) over {count} runs")


def test_criterion_7_transition_bound():
    m, B, horizon = 5, 3, 50
    sched = nw.schedule_uniformly_connected(m, B, seed=11)
    alphas = [0.4] * m
    Ws = [sched.mixing(k, alphas).W for k in range(horizon + 1)]
    eta = min(float(W[W > 0].min()) for W in Ws)
    worst = 0.0
    for s in range(horizon + 1):
        Phi = Ws[s].copy()
        for k in range(s, horizon + 1):
            if k > s:
                Phi = Phi @ Ws[k]
            dev = float(np.max(np.abs(Phi - 1.0 / m)))
            worst = max(worst, dev / solver.phi_bound(eta, B, m, k - s))
    report(7, "transition-matrix entries within the geometric bound", worst <= 1.0,
           f"eta={eta:.4f}, largest deviation/bound={worst:.3e} (<=1)")


def test_criterion_8_gradients():
    g = np.random.default_rng(8)
    h = 1e-6
    worst = 0.0
    for _ in range(50):
        n = int(g.integers(1, 6))
        m = int(g.integers(1, min(n, 3) + 1))
        G = g.normal(size=(n, n))
        from dtle_net.problem import DTLEProblem

        p = DTLEProblem(g.normal(size=(n, n)), G + G.T)
        for d in decompose(p, m):
            X, Y = g.normal(size=(n, n)), g.normal(size=(n, n))
            dX, dY = local_gradients(d, AgentEstimate(X, Y))
            for M, grad, which in ((X, dX, "X"), (Y, dY, "Y")):
                for idx in np.ndindex(n, n):
                    up, dn = M.copy(), M.copy()
                    up[idx] += h
                    dn[idx] -= h
                    pair_up = AgentEstimate(up, Y) if which == "X" else AgentEstimate(X, up)
                    pair_dn = AgentEstimate(dn, Y) if which == "X" else AgentEstimate(X, dn)
                    fd = (local_objective(d, pair_up) - local_objective(d, pair_dn)) / (2 * h)
                    worst = max(worst, abs(fd - grad[idx]))
    report(8, "gradients match central finite differences on 50 instances", worst <= 1e-4,
           f"largest absolute deviation={worst:.2e} (<=1e-4)")


def test_criterion_9_quadratic_identity():
    g = np.random.default_rng(9)
    worst = 0.0
    agents = 0
    for idx in range(10):
        n = int(g.integers(1, 5))
        m = int(g.integers(1, min(n, 3) + 1))
        p = generate_random_problem(n, 0.5, 300 + idx)
        X = oracle.solve_centralized(p).X_star
        ref = (X, p.A @ X)
        for d in decompose(p, m):
            rep = oracle.check_quadratic(d, oracle.build_quadratic(d, ref, p.A), ref, samples=100, seed=idx)
            worst = max(worst, rep.max_relative_deviation)
            agents += 1
    report(9, "quadratic-form identity", worst <= 1e-8,
           f"largest relative deviation={worst:.2e} (<=1e-8) over {agents} agents")


def test_criterion_10_consensus():
    worst = {"finite": 0.0, "uniform": 0.0}
    converged = {"finite": 0, "uniform": 0}
    for kind, _, _, traj in small_runs():
        if traj.terminated == "tol":
            converged[kind] += 1
            worst[kind] = max(worst[kind], traj.last.consensus_error)
    ok = all(converged.values()) and max(worst.values()) <= 1e-6
    report(10, "consensus at termination", ok,
           f"finite-connected: {converged['finite']} runs, worst {worst['finite']:.2e}; "
           f"uniformly-connected: {converged['uniform']} runs, worst {worst['uniform']:.2e} (<=1e-6)")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
