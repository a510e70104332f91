import sys

import numpy as np
import pytest

from rbfpde.solvers import NORMAL, OPERATOR, VALUE, BoundaryValueProblem, Field, functional_block


def span_problem(rbf, op, cols, coef):
    """BVP whose exact solution is sum_j coef_j * col_j, for (points, normals, functional) columns."""

    def ev(P, N, f):
        P = np.atleast_2d(P)
        out = np.zeros(len(P))
        s = 0
        for (Y, NY, fy) in cols:
            out += functional_block(rbf, op, P, N, f, Y, NY, fy) @ coef[s:s + len(Y)]
            s += len(Y)
        return out

    def value(P):
        return ev(P, None, VALUE)

    def grad(P):
        P = np.atleast_2d(P)
        return np.column_stack([ev(P, np.tile(e, (len(P), 1)), NORMAL) for e in np.eye(P.shape[1])])

    exact = Field(value, grad)
    forcing = Field(lambda P: ev(P, None, OPERATOR), None)
    return BoundaryValueProblem(op, exact, lambda p, n: ev(p, n, NORMAL), forcing, (), exact)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
