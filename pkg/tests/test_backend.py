import os
import subprocess
import sys

import numpy as np
import pytest

from dtle_net import _backend, network as nw, solver
from dtle_net.fixtures import generate_random_problem
from dtle_net.problem import decompose


def backend_in_subprocess(**env):
    code = "import dtle_net; print(dtle_net.BACKEND)"
    res = subprocess.run([sys.executable, "-c", code], env=dict(os.environ, **env), capture_output=True, text=True)
    return res.stdout.strip()


def test_pure_python_switch():
    assert backend_in_subprocess(DTLE_NET_PURE_PYTHON="1") == "python"
    expected = "compiled" if _backend.compiled is not None else "python"
    assert backend_in_subprocess(DTLE_NET_PURE_PYTHON="0") == expected


def test_thread_cap(monkeypatch):
    monkeypatch.setenv("DTLE_NET_THREADS", "3")
    assert _backend.thread_cap() == 3
    monkeypatch.setenv("DTLE_NET_THREADS", "zero")
    assert _backend.thread_cap() == (os.cpu_count() or 1)
    monkeypatch.delenv("DTLE_NET_THREADS")
    assert _backend.thread_cap() == (os.cpu_count() or 1)


def test_full_run_agrees_across_backends(monkeypatch):
    if _backend.compiled is None:
        pytest.skip("compiled extension not built")
    p = generate_random_problem(5, 0.5, 3)
    locals_ = decompose(p, 3)
    sched = nw.schedule_uniformly_connected(3, 2, seed=5)
    finals = []
    for mod in (_backend.fallback, _backend.compiled):
        monkeypatch.setattr(_backend, "kernels", mod)
        traj = solver.run(p, locals_, sched, max_iters=500, tol=0.0, init="random")
        finals.append(traj.final_state.X)
    assert np.abs(finals[0] - finals[1]).max() <= 1e-11
