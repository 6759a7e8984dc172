"""Experiment configuration (TOML).

A config has four tables::

    [problem]            # exactly one source
    fixture = "table1"   # or A_file/Q_file, or random = {n = 6, spectral_scale = 0.5, seed = 1}

    [agents]
    m = 5
    sizes = [2, 2, 2, 2, 2]   # optional
    safety = 0.5              # or alphas = [...]
    step_scale = 1.0          # global multiplier, 0.5 for half steps
    xi_rule = "frobenius"     # or "exact"

    [schedule]
    family = "finite-connected"   # or "uniformly-connected"
    seed = 0
    graphs = [[[0, 1], [1, 2]]]   # explicit edge lists, nodes from 0
    random_graphs = 3             # or this many random connected graphs
    edge_probability = 0.5
    B = 3                         # uniformly-connected only
    jitter = 0.25
    variants = 3

    [run]
    max_iters = 6000
    tol = 1e-8
    stride = 10
    init = "zeros"            # or "random"
    init_scale = 1.0
    init_seed = 0
    trace = false
    out = "out"

Every error is a :class:`ConfigError` naming the file and the offending line.
"""

from __future__ import annotations

import os
import re
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .network import FAMILIES, FINITE_CONNECTED

SECTIONS = ("problem", "agents", "schedule", "run")
_KIND_NAMES = {int: "an integer", float: "a number", str: "a string", bool: "true or false", list: "an array",
               dict: "a table"}
_KNOWN = {
    "problem": {"fixture", "A_file", "Q_file", "random"},
    "agents": {"m", "sizes", "safety", "alphas", "step_scale", "xi_rule"},
    "schedule": {"family", "seed", "graphs", "random_graphs", "edge_probability", "B", "jitter", "variants"},
    "run": {"max_iters", "tol", "stride", "init", "init_scale", "init_seed", "trace", "out", "reference"},
}


@dataclass
class ExperimentConfig:
    path: str
    # problem source: exactly one of these is set
    fixture: str | None = None
    A_file: str | None = None
    Q_file: str | None = None
    random: dict | None = None
    # agents and steps
    m: int = 1
    sizes: list | None = None
    safety: float = 0.5
    alphas: list | None = None
    step_scale: float = 1.0
    xi_rule: str = "frobenius"
    # schedule
    family: str = FINITE_CONNECTED
    schedule_seed: int = 0
    graphs: list | None = None
    random_graphs: int = 3
    edge_probability: float = 0.5
    B: int = 1
    jitter: float = 0.25
    variants: int = 3
    # run
    max_iters: int = 10_000
    tol: float = 1e-8
    stride: int = 10
    init: str = "zeros"
    init_scale: float = 1.0
    init_seed: int = 0
    trace: bool = False
    reference: str = "auto"
    out: str | None = None
    source_lines: dict = field(default_factory=dict, repr=False)


def _key_lines(text):
    """Map ``(section, key)`` to the 1-based line where the key is assigned."""
    lines = {}
    section = ""
    header = re.compile(r"^\s*\[\s*([A-Za-z0-9_.-]+)\s*\]")
    assign = re.compile(r"^\s*([A-Za-z0-9_-]+)\s*=")
    for no, line in enumerate(text.splitlines(), 1):
        h = header.match(line)
        if h:
            section = h.group(1)
            lines.setdefault((section, None), no)
            continue
        a = assign.match(line)
        if a:
            lines.setdefault((section, a.group(1)), no)
    return lines


class _Reader:
    def __init__(self, path, data, lines):
        self.path = path
        self.data = data
        self.lines = lines

    def fail(self, section, key, message):
        line = self.lines.get((section, key)) or self.lines.get((section, None)) or 1
        where = f"{section}.{key}" if key else section
        raise ConfigError(f"{where}: {message}", self.path, line)

    def table(self, section):
        t = self.data.get(section, {})
        if not isinstance(t, dict):
            self.fail(section, None, "must be a table")
        for key in t:
            if key not in _KNOWN[section]:
                self.fail(section, key, "unknown key")
        return t

    def get(self, section, key, kind, default=None, check=None, rule=""):
        t = self.data.get(section, {})
        if key not in t:
            return default
        value = t[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is int and isinstance(value, bool):
            self.fail(section, key, "expected an integer")
        if not isinstance(value, kind):
            self.fail(section, key, f"expected {_KIND_NAMES[kind]}, got {value!r}")
        if check is not None and not check(value):
            self.fail(section, key, f"must be {rule}, got {value!r}")
        return value


def load_config(path) -> ExperimentConfig:
    path = os.fspath(path)
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path, 0) from None
    text = raw.decode("utf-8", errors="replace")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        line = int(m.group(1)) if m else 1
        msg = re.sub(r"\s*\(at line \d+, column \d+\)", "", str(exc))
        raise ConfigError(f"TOML syntax error: {msg}", path, line) from None
    return parse_config(data, path, _key_lines(text))


def parse_config(data: dict, path="<config>", lines=None) -> ExperimentConfig:
    r = _Reader(path, data, lines or {})
    for section in data:
        if section not in SECTIONS:
            r.fail(section, None, f"unknown table (expected one of {', '.join(SECTIONS)})")
    for section in SECTIONS:
        r.table(section)
    cfg = ExperimentConfig(path=path, source_lines=r.lines)
    base = os.path.dirname(os.path.abspath(path)) if path != "<config>" else os.getcwd()

    # problem
    if "problem" not in data:
        r.fail("problem", None, "missing [problem] table")
    prob = data["problem"]
    sources = [k for k in ("fixture", "A_file", "random") if k in prob]
    if len(sources) != 1:
        r.fail("problem", None, "give exactly one of fixture, A_file/Q_file, random")
    if "fixture" in prob:
        cfg.fixture = r.get("problem", "fixture", str)
    elif "A_file" in prob:
        if "Q_file" not in prob:
            r.fail("problem", "A_file", "Q_file is required with A_file")
        for key in ("A_file", "Q_file"):
            value = os.path.join(base, r.get("problem", key, str))
            if not os.path.isfile(value):
                r.fail("problem", key, f"file not found: {value}")
            setattr(cfg, key, value)
    else:
        rnd = r.get("problem", "random", dict)
        unknown = set(rnd) - {"n", "spectral_scale", "seed"}
        if unknown:
            r.fail("problem", "random", f"unknown keys {sorted(unknown)}")
        n = rnd.get("n")
        rho = rnd.get("spectral_scale", 0.5)
        seed = rnd.get("seed", 0)
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            r.fail("problem", "random", "n must be a positive integer")
        if not isinstance(rho, (int, float)) or not 0.0 < rho < 1.0:
            r.fail("problem", "random", "spectral_scale must lie in (0, 1)")
        if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
            r.fail("problem", "random", "seed must be a nonnegative integer")
        cfg.random = {"n": n, "spectral_scale": float(rho), "seed": seed}
    if "Q_file" in prob and "A_file" not in prob:
        r.fail("problem", "Q_file", "A_file is required with Q_file")

    # agents
    cfg.m = r.get("agents", "m", int, 1, lambda v: v >= 1, ">= 1")
    sizes = r.get("agents", "sizes", list)
    if sizes is not None:
        if not all(isinstance(s, int) and not isinstance(s, bool) and s >= 1 for s in sizes):
            r.fail("agents", "sizes", "must be a list of positive integers")
        if len(sizes) != cfg.m:
            r.fail("agents", "sizes", f"has {len(sizes)} entries for m={cfg.m}")
        cfg.sizes = sizes
    cfg.safety = r.get("agents", "safety", float, 0.5, lambda v: 0.0 < v < 1.0, "in (0, 1)")
    alphas = r.get("agents", "alphas", list)
    if alphas is not None:
        if "safety" in data.get("agents", {}):
            r.fail("agents", "alphas", "give either safety or alphas, not both")
        if len(alphas) != cfg.m:
            r.fail("agents", "alphas", f"has {len(alphas)} entries for m={cfg.m}")
        if not all(isinstance(a, (int, float)) and not isinstance(a, bool) and 0.0 < a <= 1.0 for a in alphas):
            r.fail("agents", "alphas", "every step must lie in (0, 1]")
        cfg.alphas = [float(a) for a in alphas]
    cfg.step_scale = r.get("agents", "step_scale", float, 1.0, lambda v: 0.0 < v <= 1.0, "in (0, 1]")
    cfg.xi_rule = r.get("agents", "xi_rule", str, "frobenius", lambda v: v in ("frobenius", "exact"),
                        "'frobenius' or 'exact'")

    # schedule
    sched = data.get("schedule", {})
    cfg.family = r.get("schedule", "family", str, FINITE_CONNECTED, lambda v: v in FAMILIES,
                       " or ".join(repr(f) for f in FAMILIES))
    cfg.schedule_seed = r.get("schedule", "seed", int, 0, lambda v: v >= 0, ">= 0")
    graphs = r.get("schedule", "graphs", list)
    if graphs is not None:
        if "random_graphs" in sched:
            r.fail("schedule", "graphs", "give either graphs or random_graphs, not both")
        if not graphs:
            r.fail("schedule", "graphs", "must list at least one graph")
        for g in graphs:
            if not isinstance(g, list) or not all(
                isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in e)
                for e in g
            ):
                r.fail("schedule", "graphs", "each graph is a list of [i, j] integer pairs")
            for i, j in g:
                if i == j or not (0 <= i < cfg.m and 0 <= j < cfg.m):
                    r.fail("schedule", "graphs", f"bad edge [{i}, {j}] for nodes 0..{cfg.m - 1}")
        cfg.graphs = graphs
    cfg.random_graphs = r.get("schedule", "random_graphs", int, 3, lambda v: v >= 1, ">= 1")
    cfg.edge_probability = r.get("schedule", "edge_probability", float, 0.5, lambda v: 0.0 <= v <= 1.0,
                                 "in [0, 1]")
    cfg.B = r.get("schedule", "B", int, 1, lambda v: v >= 1, ">= 1")
    cfg.jitter = r.get("schedule", "jitter", float, 0.25, lambda v: 0.0 <= v <= 1.0, "in [0, 1]")
    cfg.variants = r.get("schedule", "variants", int, 3, lambda v: v >= 1, ">= 1")

    # run
    cfg.max_iters = r.get("run", "max_iters", int, 10_000, lambda v: v >= 0, ">= 0")
    cfg.tol = r.get("run", "tol", float, 1e-8, lambda v: v >= 0.0, ">= 0")
    cfg.stride = r.get("run", "stride", int, 10, lambda v: v >= 1, ">= 1")
    cfg.init = r.get("run", "init", str, "zeros", lambda v: v in ("zeros", "random"), "'zeros' or 'random'")
    cfg.init_scale = r.get("run", "init_scale", float, 1.0, lambda v: v >= 0.0, ">= 0")
    cfg.init_seed = r.get("run", "init_seed", int, 0, lambda v: v >= 0, ">= 0")
    cfg.trace = r.get("run", "trace", bool, False)
    cfg.reference = r.get("run", "reference", str, "auto", lambda v: v in ("auto", "none"), "'auto' or 'none'")
    out = r.get("run", "out", str)
    cfg.out = os.path.join(base, out) if out is not None else None
    return cfg
