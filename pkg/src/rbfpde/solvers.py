"""Boundary-type (BKM, BPM) and domain-type (Kansa, MKM, LSRCM) RBF schemes.

Row and column functionals
--------------------------
Every matrix entry is a functional pair applied to a kernel K(x, y):
``value`` (point evaluation), ``normal`` (n . grad) and, for the domain
schemes, ``operator`` (the PDE operator).  Column functionals act on the
source argument y; this is what makes the Hermite systems symmetric.  For a
Neumann source the boundary schemes use psi_s(x) = n_s . grad_y K(x, x_s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C

from . import kernels as K
from .errors import CapabilityError, ConditioningError, ParameterError
from .geometry import NodeCloud
from .linalg import (
    COLLOCATION_PIVOT_TOL,
    Factorization,
    condition_estimate,
    factor,
    least_squares_solve,
    lu_factor,
    truncated_svd_factor,
)

DEFAULT_BPM_ORDER = 4
DRM_CHEB_DEGREE = 48


@dataclass(frozen=True)
class Field:
    """A scalar field given by vectorised callables on (N, dim) point arrays."""

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, p):
        return self.value(np.atleast_2d(p))

    def normal_derivative(self, p, n):
        if self.gradient is None:
            raise CapabilityError("field has no gradient; Neumann data needs one")
        return np.sum(self.gradient(np.atleast_2d(p)) * n, axis=1)


def zero_field(dim):
    return Field(lambda p: np.zeros(len(p)), lambda p: np.zeros((len(p), dim)))


@dataclass
class BoundaryValueProblem:
    """R{u} = f in the material, u = R on Dirichlet nodes, du/dn = N on Neumann nodes.

    ``dirichlet`` and ``forcing`` are Fields; ``neumann(points, normals)`` returns
    the normal flux.  ``operator_powers[k-1]`` is the Field R^k{f}.
    """

    operator: K.OperatorSpec
    dirichlet: Field
    neumann: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    forcing: Field | None = None
    operator_powers: Sequence[Field] = ()
    exact: Field | None = None

    @property
    def homogeneous(self):
        return self.forcing is None

    def forcing_power(self, k):
        """R^k{f} as a Field (k = 0 is f itself)."""
        if k == 0:
            return self.forcing if self.forcing is not None else zero_field(self.operator.dim)
        if self.forcing is None:
            return zero_field(self.operator.dim)
        if k > len(self.operator_powers):
            raise CapabilityError(f"R^{k}{{f}} was not supplied")
        return self.operator_powers[k - 1]

    def neumann_data(self, p, n):
        if len(p) == 0:
            return np.zeros(0)
        if self.neumann is None:
            raise ParameterError("problem has Neumann nodes but no Neumann data")
        return np.asarray(self.neumann(p, n), dtype=float)


@dataclass
class Solution:
    scheme: str
    coefficients: dict
    cloud: NodeCloud
    kernel: object
    particular: Callable | None
    _evaluate: Callable = field(repr=False, default=None)
    condition: float = float("nan")
    n_factorizations: int = 0
    matrix: np.ndarray | None = field(repr=False, default=None)

    def evaluate(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = self._evaluate(points)
        if self.particular is not None:
            out = out + self.particular(points)
        return out

    __call__ = evaluate


def l2_relative_error(solution, exact, checkpoints):
    """sqrt(sum (u - u_exact)^2) / sqrt(sum u_exact^2) over the checkpoints."""
    pts = np.atleast_2d(np.asarray(checkpoints, dtype=float))
    u = solution.evaluate(pts) if hasattr(solution, "evaluate") else solution(pts)
    ue = exact(pts)
    den = float(np.sqrt(np.sum(ue * ue)))
    if den == 0.0:
        raise ParameterError("exact field vanishes at every checkpoint; relative error undefined")
    return float(np.sqrt(np.sum((u - ue) ** 2)) / den)


# ---------------------------------------------------------------------------
# Boundary-scheme kernel blocks
# ---------------------------------------------------------------------------


def _pairs(X, Y):
    return X[:, None, :], Y[None, :, :]


def boundary_block(profile, op, X, NX, row_normal, Y, NY, col_normal):
    """Kernel block with value/normal rows at X and value/normal columns at Y.

    ``row_normal``/``col_normal`` are boolean masks; NX/NY may hold NaN where
    the mask is False.
    """
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    A = np.empty((len(X), len(Y)))
    rv, rn = ~row_normal, row_normal
    cv, cn = ~col_normal, col_normal
    if rv.any() and cv.any():
        x, y = _pairs(X[rv], Y[cv])
        A[np.ix_(rv, cv)] = K.evaluate_kernel(profile, x, y, op)
    if rv.any() and cn.any():
        x, y = _pairs(X[rv], Y[cn])
        A[np.ix_(rv, cn)] = -K.normal_derivative(profile, x, y, NY[cn][None, :, :], op)
    if rn.any() and cv.any():
        x, y = _pairs(X[rn], Y[cv])
        A[np.ix_(rn, cv)] = K.normal_derivative(profile, x, y, NX[rn][:, None, :], op)
    if rn.any() and cn.any():
        x, y = _pairs(X[rn], Y[cn])
        A[np.ix_(rn, cn)] = K.binormal_second_derivative(
            profile, x, y, NX[rn][:, None, :], NY[cn][None, :, :], op
        )
    return A


def _value_rows(profile, op, P, cloud_b):
    Y, NY, cn = cloud_b
    return boundary_block(profile, op, P, None, np.zeros(len(P), bool), Y, NY, cn)


# ---------------------------------------------------------------------------
# Dual reciprocity particular solution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialPreimage:
    """Phi(r) with scale*(Lap - q^2) Phi = phi, as a Chebyshev series on [0, R]."""

    coef: np.ndarray
    R: float

    def _t(self, r):
        return 2.0 * np.asarray(r) / self.R - 1.0

    def value(self, r):
        return C.chebval(self._t(r), self.coef)

    def d_dr(self, r):
        return C.chebval(self._t(r), C.chebder(self.coef)) * (2.0 / self.R)


def radial_preimage(basis, dim, q2, scale, R, degree=DRM_CHEB_DEGREE):
    """Solve r Phi'' + (n-1) Phi' - q^2 r Phi = r phi / scale with Phi(0) = 0."""
    prof = basis.profile if isinstance(basis, K.KernelRbf) else basis
    N = int(degree)
    t = np.cos(np.pi * np.arange(N + 1) / N)[::-1]
    r = 0.5 * R * (t + 1.0)
    eye = np.eye(N + 1)
    V0 = C.chebvander(t, N)
    V1 = np.column_stack([C.chebval(t, C.chebder(eye[k])) for k in range(N + 1)]) * (2.0 / R)
    V2 = np.column_stack([C.chebval(t, C.chebder(eye[k], 2)) for k in range(N + 1)]) * (2.0 / R) ** 2
    A = r[:, None] * V2 + (dim - 1) * V1 - q2 * r[:, None] * V0
    b = r * prof.evaluate(r) / scale
    A = np.vstack([A, C.chebvander(np.array([-1.0]), N)])
    b = np.concatenate([b, [0.0]])
    coef, *_ = np.linalg.lstsq(A, b, rcond=None)
    return RadialPreimage(coef, R)


@dataclass
class ParticularSolution:
    """u_p(x) = exp(w.x) (sum_k c_k Phi(|x - x_k|) + c_0 P(x)) and its gradient.

    P is the pre-image of the constant that augments the interpolant:
    -1 / (scale q^2), or |x - origin|^2 / (2 n scale) when q = 0.
    """

    centers: np.ndarray
    coef: np.ndarray
    preimage: RadialPreimage | None
    wind: np.ndarray
    const: float = 0.0
    q2: complex = 0.0
    scale: float = 1.0
    origin: np.ndarray | None = None

    def _poly(self, p):
        if self.q2 != 0:
            return np.full(len(p), -1.0 / (self.scale * float(np.real(self.q2))))
        d = p - self.origin
        return np.sum(d * d, axis=1) / (2.0 * p.shape[1] * self.scale)

    def _poly_grad(self, p):
        if self.q2 != 0:
            return np.zeros(p.shape)
        return (p - self.origin) / (p.shape[1] * self.scale)

    def __call__(self, p):
        p = np.atleast_2d(p)
        if self.preimage is None:
            return np.zeros(len(p))
        r = np.linalg.norm(p[:, None, :] - self.centers[None, :, :], axis=-1)
        base = self.preimage.value(r) @ self.coef + self.const * self._poly(p)
        return np.exp(p @ self.wind) * base

    def gradient(self, p):
        p = np.atleast_2d(p)
        if self.preimage is None:
            return np.zeros(p.shape)
        z = p[:, None, :] - self.centers[None, :, :]
        r = np.linalg.norm(z, axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            zhat = np.where(r[..., None] > 0, z / np.where(r > 0, r, 1.0)[..., None], 0.0)
        base = self.preimage.value(r) @ self.coef + self.const * self._poly(p)
        radial = np.einsum("ij,ijk,j->ik", self.preimage.d_dr(r), zhat, self.coef)
        radial = radial + self.const * self._poly_grad(p)
        return np.exp(p @ self.wind)[:, None] * (self.wind[None, :] * base[:, None] + radial)

    def normal_derivative(self, p, n):
        return np.sum(self.gradient(p) * n, axis=1)


def drm_particular_solution(bvp: BoundaryValueProblem, cloud: NodeCloud, basis=None,
                            degree=DRM_CHEB_DEGREE):
    """Dual-reciprocity particular solution on all nodes of ``cloud``.

    f (times exp(-w.x) for convection) is interpolated by ``basis`` centred at
    every node plus a constant, with the usual side condition sum c_k = 0, so
    constant forcings are reproduced exactly.  The radial pre-image of the basis is found once by Chebyshev
    collocation of the radial ODE, with Phi(0) = 0 pinning the regular
    homogeneous solution.  Returns a :class:`ParticularSolution`.
    """
    op = bvp.operator
    scale, q2s = op.radial_factors
    if len(q2s) != 1:
        raise CapabilityError("dual reciprocity is implemented for second-order operators only")
    q2 = q2s[0]
    X = cloud.positions
    w = op.wind
    if bvp.forcing is None:
        return ParticularSolution(X, np.zeros(len(X)), None, w)
    f = bvp.forcing(X) * np.exp(-(X @ w))
    if not np.any(f):
        return ParticularSolution(X, np.zeros(len(X)), None, w)
    if basis is None:
        basis = K.multiquadric(0.5 * cloud.diameter() / math.sqrt(len(X)) * 4)
    prof = basis.profile if isinstance(basis, K.KernelRbf) else basis
    r = np.linalg.norm(X[:, None, :] - X[None, :, :], axis=-1)
    n = len(X)
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = prof.evaluate(r)
    A[:n, n] = 1.0
    A[n, :n] = 1.0
    fac = lu_factor(A, COLLOCATION_PIVOT_TOL)
    c = fac.solve(np.concatenate([f, [0.0]]))
    R = 1.5 * cloud.diameter()
    if cloud.region is not None:
        R = max(R, 1.05 * float(np.linalg.norm(cloud.region.upper - cloud.region.lower)))
    pre = radial_preimage(prof, op.dim, q2, scale, R, degree)
    q2 = 0.0 if abs(q2) == 0 else q2
    return ParticularSolution(X, c[:n], pre, w, float(c[n]), q2, float(scale), X.mean(axis=0))


# ---------------------------------------------------------------------------
# BKM
# ---------------------------------------------------------------------------


def _boundary_data(cloud):
    b = cloud.boundary_mask
    Y = cloud.positions[b]
    NY = cloud.normals[b]
    cn = cloud.neumann_mask[b]
    return Y, NY, cn


def _solve_square(A, rhs, use_structure=True, rcond=None):
    if rcond:
        fac = truncated_svd_factor(A, rcond)
    else:
        fac = factor(A, use_structure=use_structure, pivot_tol=COLLOCATION_PIVOT_TOL)
    cond = condition_estimate(fac)
    return fac, fac.solve(rhs), cond


def _require_nondegenerate(op):
    # the regular Laplace hierarchy is 1, r^2, r^4, ...: no boundary-knot basis
    if op.kind == "laplace":
        raise CapabilityError("the Laplace operator has no nonsingular general solution for boundary knots")


def bkm_solve(bvp: BoundaryValueProblem, cloud: NodeCloud, m=0, basis=None,
              use_structure=True, particular=None, rcond=None):
    """Boundary knot method with nonsingular general solutions.

    Unknowns are the boundary coefficients lambda_s and the interior values
    u_l (one extra equation u_l = u_h(x_l) + u_p(x_l) per interior node), so
    interior nodes enter the same square solve.  The particular solution comes
    from :func:`drm_particular_solution` unless ``particular`` is supplied.

    ``rcond`` switches the LU solve for a truncated SVD.  The boundary data
    left after subtracting an approximate particular solution are not exact
    traces of the trial space, and an exact solve at condition ~1e18 amplifies
    that mismatch.
    """
    op = bvp.operator
    _require_nondegenerate(op)
    profile = K.general_solution(op, m)
    pos, nrm = cloud.positions, cloud.normals
    bmask = cloud.boundary_mask
    Y, NY, cn = _boundary_data(cloud)
    nb = len(Y)
    if particular is None:
        if bvp.homogeneous:
            particular = None
        else:
            particular = drm_particular_solution(bvp, cloud, basis)
    n = len(cloud)
    row_normal = cloud.neumann_mask
    A = np.zeros((n, n))
    cols = np.flatnonzero(bmask)
    A[:, cols] = boundary_block(profile, op, pos, nrm, row_normal, Y, NY, cn)
    inner = np.flatnonzero(~bmask)
    A[inner, inner] = -1.0
    rhs = np.zeros(n)
    dm, nm = cloud.dirichlet_mask, cloud.neumann_mask
    rhs[dm] = bvp.dirichlet(pos[dm])
    rhs[nm] = bvp.neumann_data(pos[nm], nrm[nm])
    if particular is not None:
        rhs[dm] -= particular(pos[dm])
        if nm.any():
            rhs[nm] -= particular.normal_derivative(pos[nm], nrm[nm])
        rhs[inner] = -particular(pos[inner])
    fac, x, cond = _solve_square(A, rhs, use_structure, rcond)
    lam = x[cols]
    interior_values = x[inner]

    def evaluate(P):
        return _value_rows(profile, op, P, (Y, NY, cn)) @ lam

    return Solution("BKM", {"lambda": lam, "interior_values": interior_values}, cloud, profile,
                    particular, evaluate, cond, 1, A)


# ---------------------------------------------------------------------------
# BPM
# ---------------------------------------------------------------------------


def bpm_solve(bvp: BoundaryValueProblem, cloud: NodeCloud, M=DEFAULT_BPM_ORDER,
              reuse_factorization=True, use_structure=True, rcond=None):
    """Boundary particle method: truncated multiple reciprocity over u_l^#.

    With v_k = sum_{l >= k} sum_s beta^l_s u_{l-k}^#, R{v_k} = v_{k+1}; the
    level-k boundary conditions are v_k = R^{k-1}{f} (k >= 1) and v_0 = u.
    Levels are solved from M down to 0 against one shared matrix.

    The shared matrix is LU-factorised once.  With ``rcond`` set it is instead
    factorised once by a truncated SVD; the level data R^{k-1}{f} are not
    traces of homogeneous solutions, and an exact solve with a matrix of
    condition ~1e18 turns their mismatch into wild interior oscillation.
    """
    op = bvp.operator
    if M < 0 or M > K.MAX_ORDER:
        raise CapabilityError(f"truncation order must be in 0..{K.MAX_ORDER}")
    _require_nondegenerate(op)
    bcloud = cloud.boundary_only()
    X, NX = bcloud.positions, bcloud.normals
    Y, NY, cn = _boundary_data(bcloud)
    rn = bcloud.neumann_mask
    dm = bcloud.dirichlet_mask
    profiles = [K.general_solution(op, l) for l in range(M + 1)]
    blocks = [boundary_block(p, op, X, NX, rn, Y, NY, cn) for p in profiles]
    A = blocks[0]
    n_fact = 0
    fac = None
    cond = float("nan")

    def solve(rhs):
        nonlocal fac, n_fact, cond
        if fac is None or not reuse_factorization:
            if rcond:
                fac = truncated_svd_factor(A, rcond)
            else:
                fac = factor(A, use_structure=use_structure, pivot_tol=COLLOCATION_PIVOT_TOL)
            n_fact += 1
            cond = condition_estimate(fac)
        return fac.solve(rhs)

    def level_data(k):
        d = np.zeros(len(X))
        if k == 0:
            d[dm] = bvp.dirichlet(X[dm])
            d[rn] = bvp.neumann_data(X[rn], NX[rn])
            return d
        g = bvp.forcing_power(k - 1)
        d[dm] = g(X[dm])
        if rn.any():
            d[rn] = g.normal_derivative(X[rn], NX[rn])
        return d

    beta = [None] * (M + 1)
    for k in range(M, -1, -1):
        rhs = level_data(k)
        for l in range(k + 1, M + 1):
            rhs = rhs - blocks[l - k] @ beta[l]
        beta[k] = solve(rhs)

    def evaluate(P):
        out = np.zeros(len(P))
        for l in range(M + 1):
            out += _value_rows(profiles[l], op, P, (Y, NY, cn)) @ beta[l]
        return out

    return Solution("BPM", {"beta": beta}, bcloud, profiles, None, evaluate, cond, n_fact, A)


# ---------------------------------------------------------------------------
# Domain schemes: Kansa, MKM, LSRCM
# ---------------------------------------------------------------------------

VALUE, NORMAL, OPERATOR = "value", "normal", "operator"


def _op_coefficients(op):
    if op.order != 2:
        raise CapabilityError("domain-type schemes support second-order operators only")
    return op.second_order_coefficients()


def _even_profile(rbf):
    prof = rbf.profile if isinstance(rbf, K.KernelRbf) else rbf
    if not isinstance(prof, K.EvenSmoothProfile):
        raise CapabilityError("domain-type schemes need a smooth even RBF (e.g. multiquadric)")
    return prof


def functional_block(rbf, op, X, NX, fx, Y, NY, fy):
    """Matrix of fx_x fy_y phi(x - y) for single functionals fx, fy."""
    prof = _even_profile(rbf)
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    n = X.shape[1]
    D, v, c = _op_coefficients(op) if OPERATOR in (fx, fy) else (1.0, np.zeros(n), 0.0)
    z = X[:, None, :] - Y[None, :, :]
    s = np.sum(z * z, axis=-1)
    need = {(VALUE, VALUE): 0, (VALUE, NORMAL): 1, (NORMAL, VALUE): 1, (NORMAL, NORMAL): 2,
            (VALUE, OPERATOR): 2, (OPERATOR, VALUE): 2, (NORMAL, OPERATOR): 3,
            (OPERATOR, NORMAL): 3, (OPERATOR, OPERATOR): 4}[(fx, fy)]
    g = prof.g_derivatives(s, need)

    def grad(k):  # a . grad phi for direction array a broadcast against z
        return 2.0 * g[1] * k

    def lap():
        return 2.0 * n * g[1] + 4.0 * s * g[2]

    def hess(a, b):  # a^T H b
        return 2.0 * g[1] * np.sum(a * b, axis=-1) + 4.0 * g[2] * np.sum(a * z, -1) * np.sum(b * z, -1)

    def grad_lap(a):  # a . grad(Lap phi)
        h1 = (2.0 * n + 4.0) * g[2] + 4.0 * s * g[3]
        return 2.0 * h1 * np.sum(a * z, axis=-1)

    def bilap():
        h1 = (2.0 * n + 4.0) * g[2] + 4.0 * s * g[3]
        h2 = (2.0 * n + 8.0) * g[3] + 4.0 * s * g[4]
        return 2.0 * n * h1 + 4.0 * s * h2

    zv = z @ v
    if fx == VALUE and fy == VALUE:
        return g[0]
    if fx == VALUE and fy == NORMAL:
        return -grad(np.sum(z * NY[None, :, :], -1))
    if fx == NORMAL and fy == VALUE:
        return grad(np.sum(z * NX[:, None, :], -1))
    if fx == NORMAL and fy == NORMAL:
        return -hess(NX[:, None, :], NY[None, :, :])
    if fx == VALUE and fy == OPERATOR:
        return D * lap() + grad(zv) + c * g[0]
    if fx == OPERATOR and fy == VALUE:
        return D * lap() - grad(zv) + c * g[0]
    if fx == NORMAL and fy == OPERATOR:
        a = NX[:, None, :]
        return D * grad_lap(a) + hess(a, v) + c * grad(np.sum(z * a, -1))
    if fx == OPERATOR and fy == NORMAL:
        b = NY[None, :, :]
        return -(D * grad_lap(b) - hess(b, v) + c * grad(np.sum(z * b, -1)))
    # operator, operator
    return D * D * bilap() + 2.0 * D * c * lap() + c * c * g[0] - hess(v, v)


def _assemble(rbf, op, rows, cols):
    """rows/cols: lists of (points, normals, functional) groups."""
    blocks = [[functional_block(rbf, op, X, NX, fx, Y, NY, fy) for (Y, NY, fy) in cols]
              for (X, NX, fx) in rows]
    return np.block(blocks) if blocks else np.zeros((0, 0))


def _kansa_rows(cloud, bvp):
    pos, nrm = cloud.positions, cloud.normals
    im, dm, nm = cloud.interior_mask, cloud.dirichlet_mask, cloud.neumann_mask
    rows = [(pos[im], nrm[im], OPERATOR), (pos[dm], nrm[dm], VALUE), (pos[nm], nrm[nm], NORMAL)]
    f = bvp.forcing(pos[im]) if bvp.forcing is not None else np.zeros(im.sum())
    rhs = np.concatenate([f, bvp.dirichlet(pos[dm]), bvp.neumann_data(pos[nm], nrm[nm])])
    return [r for r in rows if len(r[0])], rhs


def _domain_solution(scheme, rbf, op, cols, coef, cloud, cond, n_fact, A):
    def evaluate(P):
        P = np.atleast_2d(P)
        out = np.zeros(len(P))
        start = 0
        for (Y, NY, fy) in cols:
            k = len(Y)
            out += functional_block(rbf, op, P, None, VALUE, Y, NY, fy) @ coef[start:start + k]
            start += k
        return out

    return Solution(scheme, {"coef": coef}, cloud, rbf, None, evaluate, cond, n_fact, A)


def kansa_solve(bvp: BoundaryValueProblem, cloud: NodeCloud, rbf):
    """Unsymmetric collocation: one basis per node, PDE rows inside, BC rows on the boundary."""
    op = bvp.operator
    rows, rhs = _kansa_rows(cloud, bvp)
    cols = [(cloud.positions, cloud.normals, VALUE)]
    A = _assemble(rbf, op, rows, cols)
    fac, coef, cond = _solve_square(A, rhs, use_structure=False)
    return _domain_solution("Kansa", rbf, op, cols, coef, cloud, cond, 1, A)


def mkm_solve(bvp: BoundaryValueProblem, cloud: NodeCloud, rbf):
    """Modified Kansa (Hermite) collocation with the PDE imposed at every node.

    Trial space: L*-type columns at all N + L nodes plus value (Dirichlet) and
    normal-derivative (Neumann) columns at the boundary nodes; rows apply the
    same functionals in x, so the matrix is symmetric whenever the operator is
    self-adjoint.
    """
    op = bvp.operator
    pos, nrm = cloud.positions, cloud.normals
    dm, nm = cloud.dirichlet_mask, cloud.neumann_mask
    groups = [(pos, nrm, OPERATOR), (pos[dm], nrm[dm], VALUE), (pos[nm], nrm[nm], NORMAL)]
    groups = [g for g in groups if len(g[0])]
    A = _assemble(rbf, op, groups, groups)
    f = bvp.forcing(pos) if bvp.forcing is not None else np.zeros(len(pos))
    rhs = np.concatenate([f, bvp.dirichlet(pos[dm]), bvp.neumann_data(pos[nm], nrm[nm])])
    fac, coef, cond = _solve_square(A, rhs, use_structure=False)
    return _domain_solution("MKM", rbf, op, groups, coef, cloud, cond, 1, A)


def lsrcm_solve(bvp: BoundaryValueProblem, field_nodes: NodeCloud, source_nodes, rbf):
    """Least-squares collocation: Kansa rows at the field nodes, bases at the source nodes."""
    op = bvp.operator
    src = source_nodes.positions if isinstance(source_nodes, NodeCloud) else np.atleast_2d(source_nodes)
    rows, rhs = _kansa_rows(field_nodes, bvp)
    cols = [(src, None, VALUE)]
    A = _assemble(rbf, op, rows, cols)
    if A.shape[0] < A.shape[1]:
        raise ParameterError("LSRCM needs at least as many field rows as source columns")
    coef = least_squares_solve(A, rhs)
    return _domain_solution("LSRCM", rbf, op, cols, coef, field_nodes, float("nan"), 0, A)
