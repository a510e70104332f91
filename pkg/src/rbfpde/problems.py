"""Named test problems with closed-form exact solutions.

Forcings, gradients and operator powers R^k{f} are produced symbolically,
then lambdified to vectorised numpy callables.
"""

from __future__ import annotations

import math

import numpy as np
import sympy as sp

from .errors import ConfigError
from .kernels import OperatorSpec
from .solvers import BoundaryValueProblem, Field

MAX_POWERS = 8
RESIDUAL_TOL = 1e-8

_X = sp.symbols("x y z", real=True)


def _apply_symbolic(op: OperatorSpec, expr, xs):
    D, v, c = op.second_order_coefficients()
    lap = sum(sp.diff(expr, s, 2) for s in xs)
    conv = sum(sp.Float(vi) * sp.diff(expr, s) for vi, s in zip(v, xs)) if np.any(v) else 0
    return sp.Float(D) * lap - conv + sp.nsimplify(c) * expr


def _field(expr, xs):
    value = sp.lambdify(xs, expr, "numpy")
    grads = [sp.lambdify(xs, sp.diff(expr, s), "numpy") for s in xs]

    def val(p):
        p = np.atleast_2d(p)
        return np.broadcast_to(np.asarray(value(*p.T), dtype=float), (len(p),)).copy()

    def grad(p):
        p = np.atleast_2d(p)
        return np.column_stack(
            [np.broadcast_to(np.asarray(g(*p.T), dtype=float), (len(p),)) for g in grads]
        )

    return Field(val, grad)


def problem_from_expression(op: OperatorSpec, exact_expr, forcing_expr=None, n_powers=MAX_POWERS):
    """BVP whose data come from a sympy expression in x, y[, z].

    ``forcing_expr`` defaults to R{exact}; pass it explicitly to build a
    (possibly inconsistent) problem for validation tests.
    """
    xs = _X[: op.dim]
    if forcing_expr is None:
        forcing_expr = sp.simplify(_apply_symbolic(op, exact_expr, xs))
    exact = _field(exact_expr, xs)
    homogeneous = forcing_expr == 0
    forcing = None if homogeneous else _field(forcing_expr, xs)
    powers = []
    if not homogeneous:
        g = forcing_expr
        for _ in range(n_powers):
            g = sp.expand(_apply_symbolic(op, g, xs))
            powers.append(_field(g, xs))

    def neumann(p, n):
        return np.sum(exact.gradient(p) * n, axis=1)

    bvp = BoundaryValueProblem(op, exact, neumann, forcing, tuple(powers), exact)
    bvp.symbolic = {"exact": exact_expr, "forcing": forcing_expr}
    return bvp


def named_problem(tag, gamma=None, sigma=1.0, n_powers=MAX_POWERS):
    """Problems used by the experiment tables.

    helmholtz2d_inhomog: Lap u + gamma^2 u = f, u = x^2 sin x cos y (gamma defaults to 2)
    helmholtz3d_homog:   Lap u + 3 u = 0,       u = sin x cos y cos z
    convdiff3d:          Lap u - v.grad u = 0,  v = (-sigma,)*3, u = sum exp(-sigma x_i)
    """
    x, y, z = _X
    if tag == "helmholtz2d_inhomog":
        g = 2.0 if gamma is None else float(gamma)
        op = OperatorSpec.helmholtz(g, 2)
        return problem_from_expression(op, x**2 * sp.sin(x) * sp.cos(y), n_powers=n_powers)
    if tag == "helmholtz3d_homog":
        g = math.sqrt(3.0) if gamma is None else float(gamma)
        op = OperatorSpec.helmholtz(g, 3)
        # the forcing is zero by construction; a wrong gamma is caught by validate_problem
        return problem_from_expression(op, sp.sin(x) * sp.cos(y) * sp.cos(z), forcing_expr=sp.Integer(0))
    if tag == "convdiff3d":
        s = float(sigma)
        op = OperatorSpec.convection_diffusion(1.0, (-s, -s, -s), 0.0)
        S = sp.Float(s)
        u = sp.exp(-S * x) + sp.exp(-S * y) + sp.exp(-S * z)
        return problem_from_expression(op, u, forcing_expr=sp.Integer(0))
    raise ConfigError(f"unknown problem tag {tag!r}")


def fd_residual(bvp: BoundaryValueProblem, points, h=1e-3):
    """R{u_exact} - f at points, with 4th-order central differences of the exact field."""
    op = bvp.operator
    D, v, c = op.second_order_coefficients()
    p = np.atleast_2d(points)
    u = bvp.exact.value
    u0 = u(p)
    lap = np.zeros(len(p))
    grad = np.zeros_like(p)
    for k in range(op.dim):
        e = np.zeros(op.dim)
        e[k] = h
        um2, um1, up1, up2 = u(p - 2 * e), u(p - e), u(p + e), u(p + 2 * e)
        lap += (-up2 + 16 * up1 - 30 * u0 + 16 * um1 - um2) / (12 * h * h)
        grad[:, k] = (-up2 + 8 * up1 - 8 * um1 + um2) / (12 * h)
    ru = D * lap - grad @ v + c * u0
    f = bvp.forcing(p) if bvp.forcing is not None else 0.0
    return ru - f


def validate_problem(bvp, region, n_points=10, seed=0, tol=RESIDUAL_TOL):
    """Spot-check R{u_exact} = f at random material points; ConfigError otherwise."""
    from .geometry import sample_checkpoints

    pts = sample_checkpoints(region, n_points, seed)
    res = np.abs(fd_residual(bvp, pts))
    scale = max(1.0, float(np.max(np.abs(bvp.exact(pts)))))
    worst = float(np.max(res)) / scale
    if not worst < tol:
        raise ConfigError(
            f"exact solution does not satisfy the operator (max residual {worst:.2e} > {tol:.0e})"
        )
    return worst
