import math

import numpy as np
import pytest
import sympy as sp

from rbfpde import geometry as G
from rbfpde.errors import ConfigError
from rbfpde.problems import _X, _apply_symbolic, fd_residual, named_problem, validate_problem

x, y, z = _X


def _symbolic_residual(bvp, pts):
    xs = _X[: bvp.operator.dim]
    expr = _apply_symbolic(bvp.operator, bvp.symbolic["exact"], xs) - bvp.symbolic["forcing"]
    fn = sp.lambdify(xs, expr, "numpy")
    return np.broadcast_to(np.asarray(fn(*pts.T), dtype=float), (len(pts),))


@pytest.mark.parametrize("tag,kw", [("helmholtz3d_homog", {}), ("convdiff3d", {"sigma": 1.0}),
                                    ("convdiff3d", {"sigma": 2.5}), ("helmholtz2d_inhomog", {})])
def test_exact_solutions_satisfy_operator(tag, kw, rng):
    bvp = named_problem(tag, **kw)
    pts = rng.uniform(-2, 2, size=(20, bvp.operator.dim))
    assert np.max(np.abs(_symbolic_residual(bvp, pts))) <= 1e-12
    # the lambdified callbacks agree with the symbolic forcing
    assert np.max(np.abs(fd_residual(bvp, pts))) <= 1e-8 * max(1.0, np.max(np.abs(bvp.exact(pts))))


def test_problem_parameters():
    h3 = named_problem("helmholtz3d_homog")
    assert h3.operator.gamma ** 2 == pytest.approx(3.0)
    assert h3.homogeneous
    cd = named_problem("convdiff3d", sigma=1.0)
    assert cd.operator.D == 1.0 and cd.operator.kappa == 0.0
    assert cd.operator.v == (-1.0, -1.0, -1.0)
    assert named_problem("helmholtz2d_inhomog").operator.gamma == 2.0


def test_helmholtz2d_forcing_at_one_one():
    bvp = named_problem("helmholtz2d_inhomog")
    # independent hand derivation for u = x^2 sin x cos y, gamma = 2:
    # u_xx = (2 sin x + 4x cos x - x^2 sin x) cos y,  u_yy = -u
    X, Y = 1.0, 1.0
    uxx = (2 * math.sin(X) + 4 * X * math.cos(X) - X * X * math.sin(X)) * math.cos(Y)
    u = X * X * math.sin(X) * math.cos(Y)
    want = uxx - u + 4.0 * u
    assert bvp.forcing(np.array([[X, Y]]))[0] == pytest.approx(want, rel=1e-14)


def test_operator_powers_are_consistent():
    bvp = named_problem("helmholtz2d_inhomog", n_powers=3)
    assert len(bvp.operator_powers) == 3
    g1 = _apply_symbolic(bvp.operator, bvp.symbolic["forcing"], _X[:2])
    p = np.array([[0.3, -0.4], [0.9, 0.2]])
    want = sp.lambdify(_X[:2], g1, "numpy")(*p.T)
    assert np.allclose(bvp.forcing_power(1)(p), want, rtol=1e-13)
    assert np.allclose(bvp.forcing_power(0)(p), bvp.forcing(p))


def test_wrong_gamma_fails_validation():
    region = G.ball_region(1.0, 3)
    assert validate_problem(named_problem("helmholtz3d_homog"), region) < 1e-8
    with pytest.raises(ConfigError):
        validate_problem(named_problem("helmholtz3d_homog", gamma=2.0), region)


def test_unknown_tag():
    with pytest.raises(ConfigError):
        named_problem("poisson9d")
