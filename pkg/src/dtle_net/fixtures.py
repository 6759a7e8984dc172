"""Bundled problem instances and the seeded random generator.

``table1`` is a 10-state system with a two-column input matrix ``B``; its
``Q = B B'`` makes the equation the Lyapunov test for controllability.
``scalar`` is the toy ``a = 0.5, q = 0.75`` with solution ``x = 1``.
``random-nXX`` (for example ``random-n6``) is a seeded random instance with
spectral radius 0.5.
"""

from __future__ import annotations

import math
import re

import numpy as np

from . import _rng, matcore
from .errors import DTLENetError, ParameterError
from .problem import DTLEProblem

_TABLE1_A = """
0.0061 0.1355 0.0998 0.1051 0.1085 0.0007 0.1095 0.0817 0.0036 0.0625
0.1492 0.1171 0.0385 0.0708 0.0791 0.0387 0.0523 0.0311 0.0163 0.1427
0.1014 0.1360 0.0263 0.0603 0.0087 0.0481 0.0586 0.0165 0.1036 0.0670
0.1255 0.0109 0.0290 0.1362 0.1128 0.0086 0.0244 0.1072 0.1397 0.0689
0.1439 0.1434 0.0378 0.0980 0.0884 0.0410 0.1360 0.1231 0.1216 0.0058
0.0268 0.1180 0.1009 0.0915 0.0303 0.1404 0.0200 0.1167 0.0305 0.1475
0.0944 0.1159 0.0598 0.1209 0.1100 0.0749 0.0108 0.1298 0.0572 0.0684
0.1189 0.0558 0.0391 0.1120 0.0946 0.0952 0.1077 0.0560 0.0840 0.0900
0.0958 0.0067 0.0693 0.0899 0.1106 0.0007 0.0687 0.0153 0.0499 0.0388
0.0828 0.0712 0.0463 0.1241 0.0535 0.1397 0.0728 0.1038 0.1492 0.0129
"""

_TABLE1_B = """
1 1
1 0
0 0
0 1
1 0
0 0
1 0
1 1
0 1
0 0
"""

RANDOM_FIXTURE_SCALE = 0.5
RANDOM_FIXTURE_SEED = 0
_RANDOM_NAME = re.compile(r"random-n(\d+)$")


class UnknownFixtureError(DTLENetError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


def table1_matrices():
    """``(A, B)`` of the bundled 10-state system."""
    return matcore.parse_matrix(_TABLE1_A, "A"), matcore.parse_matrix(_TABLE1_B, "B")


def list_fixtures() -> list[str]:
    return ["table1", "scalar", "random-nXX"]


def load_fixture(name: str) -> DTLEProblem:
    if name == "table1":
        A, B = table1_matrices()
        return DTLEProblem(A, B @ B.T)
    if name == "scalar":
        return DTLEProblem([[0.5]], [[0.75]])
    match = _RANDOM_NAME.match(name)
    if match and int(match.group(1)) >= 1:
        return generate_random_problem(int(match.group(1)), RANDOM_FIXTURE_SCALE, RANDOM_FIXTURE_SEED)
    raise UnknownFixtureError(
        f"unknown fixture {name!r}; available: {', '.join(list_fixtures())} (XX = dimension n)"
    )


def generate_random_problem(n: int, spectral_scale: float, seed: int) -> DTLEProblem:
    """Gaussian ``A`` rescaled to spectral radius ``spectral_scale``, ``Q = B B'``.

    ``B`` has ``ceil(n/4)`` Gaussian columns. A spectral radius below one
    keeps ``kron(A, A) - I`` nonsingular, so the solution is unique.
    """
    if not 0.0 < spectral_scale < 1.0:
        raise ParameterError(f"spectral_scale must lie in (0, 1), got {spectral_scale}")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    rng = _rng.generator(seed, _rng.PROBLEM)
    A = rng.standard_normal((n, n))
    radius = float(np.max(np.abs(np.linalg.eigvals(A))))
    while radius == 0.0:  # nilpotent draw, practically impossible
        A = rng.standard_normal((n, n))
        radius = float(np.max(np.abs(np.linalg.eigvals(A))))
    A *= spectral_scale / radius
    B = rng.standard_normal((n, math.ceil(n / 4)))
    Q = B @ B.T
    return DTLEProblem(A, 0.5 * (Q + Q.T))
