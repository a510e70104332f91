"""PDE operators, their high-order general/fundamental solutions and kernel RBFs.

Every supported operator factors into shifted Laplacians,

    R = scale * prod_i (Laplacian - q_i^2),

acting on the radial part of a kernel (for convection-diffusion after the
exponential substitution u = exp(v.x / 2D) w).  The m-th order solutions are
built on the single-factor hierarchies

    h_j(r) = r^{2j} Ihat_{a+j}(q r) / (2^j j!),   (Laplacian - q^2) h_j = h_{j-1},

with a = n/2 - 1 and Ihat_nu(w) = w^{-nu} I_nu(w).  For q^2 < 0 this is the
J-family, for complex q^2 it carries the Kelvin functions ber/bei.  The
singular counterparts replace Ihat by Khat (or Yhat for q^2 < 0, and by the
log/power hierarchy for q = 0).  Fourth-order operators combine the two
factor hierarchies by partial fractions so that R{u_m} = u_{m-1} holds
exactly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import specfun
from .errors import CapabilityError, ParameterError, SingularityError

MAX_ORDER = 8

LAPLACE = "laplace"
HELMHOLTZ = "helmholtz"
CONVECTION_DIFFUSION = "convection_diffusion"
VIBRATION_PLATE = "vibration_plate"
WINKLER_PLATE = "winkler_plate"
BURGER_PLATE = "burger_plate"

_KINDS = (LAPLACE, HELMHOLTZ, CONVECTION_DIFFUSION, VIBRATION_PLATE, WINKLER_PLATE, BURGER_PLATE)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


def mu_parameter(D, v, kappa):
    """Decay rate sqrt((|v|/2D)^2 + kappa/D) of the convection-diffusion operator."""
    if D <= 0:
        raise ParameterError(f"diffusivity must be positive, got {D}")
    if kappa < 0:
        raise ParameterError(f"reaction coefficient must be >= 0, got {kappa}")
    speed = float(np.linalg.norm(np.asarray(v, dtype=float)))
    return math.sqrt((speed / (2.0 * D)) ** 2 + kappa / D)


def q_coefficient(m, mu):
    """Q_0 = 1, Q_m = Q_{m-1} / (2 m mu^2)."""
    if m < 0:
        raise ParameterError("order must be >= 0")
    q = 1.0
    for k in range(1, m + 1):
        q /= 2.0 * k * mu * mu
    return q


@dataclass(frozen=True)
class OperatorSpec:
    """A linear constant-coefficient operator and the space dimension.

    Use the classmethod constructors; ``params`` holds the physical constants.
    """

    kind: str
    dim: int
    gamma: float = 0.0
    D: float = 1.0
    v: tuple = ()
    kappa: float = 0.0
    lam: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParameterError(f"unknown operator kind {self.kind!r}")
        lo, hi = (2, 5) if self.kind == WINKLER_PLATE else (1, 3)
        if not lo <= self.dim <= hi:
            raise ParameterError(f"{self.kind} supports dim {lo}..{hi}, got {self.dim}")
        if self.kind == CONVECTION_DIFFUSION:
            if self.D <= 0:
                raise ParameterError("diffusivity D must be > 0")
            if self.kappa < 0:
                raise ParameterError("reaction kappa must be >= 0")
            if len(self.v) != self.dim:
                raise ParameterError("velocity must have one component per dimension")
        if self.kind == HELMHOLTZ and self.gamma <= 0:
            raise ParameterError("Helmholtz wavenumber must be > 0")
        if self.kind == VIBRATION_PLATE and self.lam <= 0:
            raise ParameterError("vibration plate lambda must be > 0")
        if self.kind == WINKLER_PLATE and self.kappa <= 0:
            raise ParameterError("Winkler kappa must be > 0")
        if self.kind == BURGER_PLATE and self.mu <= 0:
            raise ParameterError("Burger plate mu must be > 0")

    @classmethod
    def laplace(cls, dim=2):
        return cls(LAPLACE, dim)

    @classmethod
    def helmholtz(cls, gamma, dim=2):
        return cls(HELMHOLTZ, dim, gamma=float(gamma))

    @classmethod
    def convection_diffusion(cls, D, v, kappa=0.0, dim=None):
        v = tuple(float(c) for c in v)
        return cls(CONVECTION_DIFFUSION, dim or len(v), D=float(D), v=v, kappa=float(kappa))

    @classmethod
    def vibration_plate(cls, lam, dim=2):
        return cls(VIBRATION_PLATE, dim, lam=float(lam))

    @classmethod
    def winkler_plate(cls, kappa, dim=2):
        return cls(WINKLER_PLATE, dim, kappa=float(kappa))

    @classmethod
    def burger_plate(cls, mu, dim=2):
        return cls(BURGER_PLATE, dim, mu=float(mu))

    @property
    def order(self):
        return 4 if self.kind in (VIBRATION_PLATE, WINKLER_PLATE, BURGER_PLATE) else 2

    @property
    def wind(self):
        """v / 2D for convection-diffusion, zero vector otherwise."""
        if self.kind == CONVECTION_DIFFUSION:
            return np.asarray(self.v) / (2.0 * self.D)
        return np.zeros(self.dim)

    @property
    def has_convection(self):
        return self.kind == CONVECTION_DIFFUSION and any(c != 0.0 for c in self.v)

    @property
    def self_adjoint(self):
        return not self.has_convection

    @property
    def radial_factors(self):
        """``(scale, [q_1^2, ...])`` with R_radial = scale * prod (Lap - q_i^2)."""
        k = self.kind
        if k == LAPLACE:
            return 1.0, [0.0]
        if k == HELMHOLTZ:
            return 1.0, [-self.gamma**2]
        if k == CONVECTION_DIFFUSION:
            return self.D, [mu_parameter(self.D, self.v, self.kappa) ** 2]
        if k == VIBRATION_PLATE:
            return 1.0, [-self.lam, self.lam]
        if k == WINKLER_PLATE:
            return 1.0, [1j * self.kappa, -1j * self.kappa]
        return 1.0, [0.0, self.mu**2]

    def second_order_coefficients(self):
        """``(D, v, c)`` with R u = D Lap u - v.grad u + c u (second-order operators)."""
        k = self.kind
        if k == LAPLACE:
            return 1.0, np.zeros(self.dim), 0.0
        if k == HELMHOLTZ:
            return 1.0, np.zeros(self.dim), self.gamma**2
        if k == CONVECTION_DIFFUSION:
            return self.D, np.asarray(self.v, dtype=float), -self.kappa
        raise CapabilityError(f"{k} is not a second-order operator")


# ---------------------------------------------------------------------------
# Radial profiles
# ---------------------------------------------------------------------------


class RadialProfile:
    """A radial function phi(r) with its first two radial derivatives.

    Subclasses implement :meth:`derivatives`, returning ``(phi, phi', phi'')``
    evaluated at ``|r|`` (profiles are treated as even functions of r).
    """

    singular_at_origin = False
    singularity_degree = 0.0  # phi ~ r^-p near 0; log counts as 0
    order_m = 0
    operator = None

    def derivatives(self, r):
        raise NotImplementedError

    def _check(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if self.singular_at_origin and np.any(r == 0.0):
            raise SingularityError(f"{type(self).__name__} is singular at r = 0")
        return r

    def evaluate(self, r):
        return self.derivatives(r)[0]

    def d_dr(self, r):
        return self.derivatives(r)[1]

    def d2_dr2(self, r):
        return self.derivatives(r)[2]

    __call__ = evaluate


class EvenSmoothProfile(RadialProfile):
    """phi(r) = g(r^2) with g smooth on [0, inf); derivatives in s = r^2.

    Subclasses implement ``g_derivatives(s, k)`` returning g, g', ..., g^(k).
    """

    def g_derivatives(self, s, k):
        raise NotImplementedError

    def derivatives(self, r):
        r = self._check(r)
        s = r * r
        g0, g1, g2 = self.g_derivatives(s, 2)
        return g0, 2.0 * r * g1, 2.0 * g1 + 4.0 * s * g2


class ShiftedPower(EvenSmoothProfile):
    """(r^2 + c^2)^(beta/2); beta = 1 is the multiquadric, beta = -1 the IMQ."""

    def __init__(self, beta, c):
        if c <= 0:
            raise ParameterError("shape parameter c must be > 0")
        self.beta = float(beta)
        self.c = float(c)

    def g_derivatives(self, s, k):
        u = s + self.c**2
        p = 0.5 * self.beta
        out, coef = [], 1.0
        for i in range(k + 1):
            out.append(coef * u ** (p - i))
            coef *= p - i
        return out

    def __repr__(self):
        return f"ShiftedPower(beta={self.beta}, c={self.c})"


class Gaussian(EvenSmoothProfile):
    def __init__(self, eps):
        self.eps = float(eps)

    def g_derivatives(self, s, k):
        e = np.exp(-self.eps**2 * s)
        return [(-self.eps**2) ** i * e for i in range(k + 1)]


class ShiftedLog(EvenSmoothProfile):
    """ln sqrt(r^2 + c^2)."""

    def __init__(self, c):
        if c <= 0:
            raise ParameterError("shape parameter c must be > 0")
        self.c = float(c)

    def g_derivatives(self, s, k):
        u = s + self.c**2
        out = [0.5 * np.log(u)]
        for i in range(1, k + 1):
            out.append(0.5 * (-1) ** (i - 1) * math.factorial(i - 1) * u ** (-i))
        return out


class EvenAugmented(EvenSmoothProfile):
    """s^m * g(s) for a smooth even base (Leibniz rule)."""

    def __init__(self, base, m):
        self.base = base
        self.m = int(m)

    def g_derivatives(self, s, k):
        b = self.base.g_derivatives(s, k)
        out = []
        for i in range(k + 1):
            acc = 0.0
            for j in range(min(i, self.m) + 1):
                # d^j s^m = m!/(m-j)! s^(m-j)
                dj = math.factorial(self.m) / math.factorial(self.m - j) * s ** (self.m - j)
                acc = acc + math.comb(i, j) * dj * b[i - j]
            out.append(acc)
        return out


class PowerProfile(RadialProfile):
    """|r|^beta."""

    def __init__(self, beta):
        self.beta = float(beta)
        self.singular_at_origin = self.beta < 0
        self.singularity_degree = max(0.0, -self.beta)

    def derivatives(self, r):
        r = self._check(r)
        b = self.beta
        with np.errstate(divide="ignore", invalid="ignore"):
            f0 = r**b
            f1 = np.where(r > 0, b * r ** (b - 1), 0.0 if b > 1 else (1.0 if b == 1 else np.inf))
            f2 = np.where(r > 0, b * (b - 1) * r ** (b - 2), 2.0 if b == 2 else (0.0 if b > 2 else np.inf))
        return f0, f1, f2


class LogProfile(RadialProfile):
    """ln r."""

    singular_at_origin = True
    singularity_degree = 0.0

    def derivatives(self, r):
        r = self._check(r)
        return np.log(r), 1.0 / r, -1.0 / r**2


class Augmented(RadialProfile):
    """r^{2m} * base(r)."""

    def __init__(self, base, m):
        if m < 1:
            raise ParameterError("augmentation power m must be >= 1")
        self.base = base
        self.m = int(m)
        p = 2 * self.m
        self.singular_at_origin = base.singular_at_origin and p <= base.singularity_degree
        if self.singular_at_origin:
            raise ParameterError(
                f"r^{p} cannot regularise a singularity of degree {base.singularity_degree}"
            )
        self.order_m = base.order_m
        self.operator = base.operator

    def derivatives(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        p = 2 * self.m
        safe = np.where(r > 0, r, 1.0)
        b0, b1, b2 = self.base.derivatives(safe)
        f0 = r**p * b0
        f1 = p * r ** (p - 1) * b0 + r**p * b1
        f2 = p * (p - 1) * r ** (p - 2) * b0 + 2 * p * r ** (p - 1) * b1 + r**p * b2
        zero = r == 0
        if np.any(zero):
            # r^p b(r) -> 0 when p exceeds the singularity degree; log needs p >= 2
            f0 = np.where(zero, 0.0, f0)
            f1 = np.where(zero, 0.0, f1)
            lim2 = 0.0
            if p == 2 and not self.base.singular_at_origin:
                lim2 = 2.0 * float(self.base.evaluate(0.0))
            elif p == 2:
                lim2 = -np.inf  # r^2 ln r: second derivative diverges logarithmically
            f2 = np.where(zero, lim2, f2)
        return f0, f1, f2


class ShapeShifted(RadialProfile):
    """base(sqrt(r^2 + c^2)) for an arbitrary base profile."""

    def __init__(self, base, c):
        if c <= 0:
            raise ParameterError("shape parameter c must be > 0")
        self.base = base
        self.c = float(c)
        self.order_m = base.order_m
        self.operator = base.operator

    def derivatives(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        rho = np.sqrt(r * r + self.c**2)
        b0, b1, b2 = self.base.derivatives(rho)
        return b0, b1 * r / rho, b2 * (r / rho) ** 2 + b1 * self.c**2 / rho**3


@dataclass
class KernelRbf:
    """A kernel RBF: a base profile and the construction strategy applied to it."""

    base: object
    strategy: str
    parameter: float | int | None
    profile: RadialProfile

    def evaluate(self, r):
        return self.profile.evaluate(r)

    def d_dr(self, r):
        return self.profile.d_dr(r)

    def d2_dr2(self, r):
        return self.profile.d2_dr2(r)

    def derivatives(self, r):
        return self.profile.derivatives(r)


def make_kernel_rbf(base, strategy="none", parameter=None):
    """Build a kernel RBF from ``base`` ("tps"/"power"/"log" or a profile).

    strategy:
      * ``"augment_even_power"`` with integer m >= 1: r^{2m} * base
      * ``"shape_shift"`` with c > 0: base(sqrt(r^2 + c^2))
      * ``"none"``
    """
    prof = _as_profile(base)
    if strategy == "none":
        out = prof
    elif strategy == "augment_even_power":
        m = int(parameter)
        if isinstance(prof, EvenSmoothProfile):
            out = EvenAugmented(prof, m)
        else:
            out = Augmented(prof, m)
    elif strategy == "shape_shift":
        c = float(parameter)
        if c <= 0:
            raise ParameterError("shape parameter c must be > 0")
        if isinstance(prof, PowerProfile):
            out = ShiftedPower(prof.beta, c)
        elif isinstance(prof, LogProfile):
            out = ShiftedLog(c)
        else:
            out = ShapeShifted(prof, c)
    else:
        raise ParameterError(f"unknown kernel strategy {strategy!r}")
    return KernelRbf(base, strategy, parameter, out)


def _as_profile(base):
    if isinstance(base, RadialProfile):
        return base
    if isinstance(base, KernelRbf):
        return base.profile
    if base in ("r", "linear"):
        return PowerProfile(1.0)
    if base == "log":
        return LogProfile()
    if isinstance(base, tuple) and base[0] == "power":
        return PowerProfile(base[1])
    raise ParameterError(f"unknown base {base!r}")


def multiquadric(c):
    return ShiftedPower(1.0, c)


def thin_plate_spline(m=1):
    """Primitive r^{2m} ln r."""
    return Augmented(LogProfile(), m)


# ---------------------------------------------------------------------------
# Bessel hierarchies
# ---------------------------------------------------------------------------


def _as_real_if_possible(q2):
    q2 = complex(q2)
    return q2.real if q2.imag == 0.0 else q2


class _Family:
    """B_nu(r) for one factor (Laplacian - q^2); regular or singular branch.

    d/dr B_nu = sign * q^2 * r * B_{nu+1}; sign = -1 only for the K branch.
    """

    def __init__(self, q2, dim, singular):
        self.q2 = _as_real_if_possible(q2)
        self.dim = dim
        self.a = 0.5 * dim - 1.0
        self.singular = singular
        self.is_complex = isinstance(self.q2, complex)
        self.sign = 1.0
        if singular and (self.is_complex or self.q2 > 0):
            self.sign = -1.0
        if singular and not self.is_complex and self.q2 == 0.0 and dim not in (2, 3):
            raise CapabilityError(f"Laplace fundamental hierarchy only for dim 2, 3 (got {dim})")

    def B(self, nu, r):
        q2 = self.q2
        if not self.singular:
            if not self.is_complex and q2 == 0.0:
                return np.full(r.shape, 1.0 / (2.0**nu * specfun.gamma(nu + 1.0)))
            if self.is_complex:
                s, ok, _ = specfun.entire_series(nu, q2 * r * r, 1.0)
                if not ok:
                    raise ArithmeticError("complex entire series did not converge")
                return s / 2.0**nu
            if q2 > 0:
                s, ok, _ = specfun.entire_series(nu, q2 * r * r, 1.0)
                if not ok:
                    raise ArithmeticError("entire series did not converge")
                return s / 2.0**nu
            g = math.sqrt(-q2)
            x = g * r
            out = np.empty_like(r)
            small = x <= specfun.J_SERIES_CROSSOVER
            if np.any(small):
                s, ok, _ = specfun.entire_series(nu, x[small] ** 2, -1.0)
                out[small] = s / 2.0**nu
            if np.any(~small):
                xl = x[~small]
                out[~small] = specfun.bessel_j(nu, xl) / xl**nu
            return out
        # singular branches
        if self.is_complex:
            q = cmath.sqrt(q2)
            w = q * r
            return specfun.complex_bessel_k(nu, w) / w**nu
        if q2 > 0:
            x = math.sqrt(q2) * r
            return specfun.bessel_k(nu, x) / x**nu
        x = math.sqrt(-q2) * r
        return specfun.bessel_y(nu, x) / x**nu


def _term_derivatives(fam, j, r, memo):
    """Value and two r-derivatives of b_j(r) = r^{2j} B_{a+j}(r)."""
    if fam.singular and not fam.is_complex and fam.q2 == 0.0:
        return _laplace_fundamental_term(fam.dim, j, r)
    q2 = fam.q2
    sg = fam.sign

    def B(k):
        key = (id(fam), k)
        if key not in memo:
            memo[key] = fam.B(fam.a + k, r)
        return memo[key]

    B0, B1, B2 = B(j), B(j + 1), B(j + 2)
    r2j = r ** (2 * j)
    f0 = r2j * B0
    f1 = sg * q2 * r ** (2 * j + 1) * B1
    f2 = (4 * j + 1) * sg * q2 * r2j * B1 + q2 * q2 * r ** (2 * j + 2) * B2
    if j > 0:
        f1 = f1 + 2 * j * r ** (2 * j - 1) * B0
        f2 = f2 + 2 * j * (2 * j - 1) * r ** (2 * j - 2) * B0
    return f0, f1, f2


def _laplace_fundamental_term(dim, j, r):
    if dim == 2:
        # r^{2j} (ln r - H_j), scaled by 1/(4^j j!^2) in the coefficient
        H = sum(1.0 / k for k in range(1, j + 1))
        L = np.log(r) - H
        if j == 0:
            return L, 1.0 / r, -1.0 / r**2
        p = 2 * j
        f0 = r**p * L
        f1 = p * r ** (p - 1) * L + r ** (p - 1)
        f2 = r ** (p - 2) * (p * (p - 1) * L + 2 * p - 1)
        return f0, f1, f2
    p = 2 * j - 1
    return r**p, p * r ** (p - 1), p * (p - 1) * r ** (p - 2)


def _hierarchy_norm(fam, j):
    """Coefficient turning b_j into the normalised f_j with (Lap - q^2) f_j = f_{j-1}."""
    if fam.singular and not fam.is_complex and fam.q2 == 0.0:
        if fam.dim == 2:
            return 1.0 / (4.0**j * math.factorial(j) ** 2)
        return 1.0 / math.factorial(2 * j)
    return 1.0 / ((2.0 * fam.sign) ** j * math.factorial(j))


def _shift_inverse_coeffs(q2_self, q2_other, m):
    """Coefficients c_j with (P_self P_other)^{-m} h_0 = sum_j c_j h_j (self hierarchy)."""
    delta = q2_self - q2_other
    c = np.zeros(2 * m + 1, dtype=complex)
    c[0] = 1.0
    for _ in range(m):
        # (S + delta)^{-1}: y = sum_t (-S)^t x / delta^{t+1}; S shifts index down
        y = np.zeros_like(c)
        x = c.copy()
        t = 0
        while np.any(x != 0):
            y += (-1) ** t * x / delta ** (t + 1)
            x = np.concatenate([x[1:], [0.0]])
            t += 1
        # S^{-1}: shift index up
        c = np.concatenate([[0.0], y[:-1]])
    return c


class HierarchyProfile(RadialProfile):
    """Linear combination of hierarchy terms sum_i w_i f_{j_i}^{(family_i)}."""

    def __init__(self, terms, operator, order_m, singular, scale=1.0):
        self.terms = terms  # list of (coef, family, j)
        self.operator = operator
        self.order_m = order_m
        self.singular_at_origin = singular
        self.singularity_degree = max(0.0, operator.dim - 2.0) if singular else 0.0
        self.scale = scale

    def derivatives(self, r):
        r = self._check(r)
        shape = r.shape
        r = r.ravel()
        acc = [0.0, 0.0, 0.0]
        memo = {}
        for coef, fam, j in self.terms:
            parts = _term_derivatives(fam, j, r, memo)
            for i in range(3):
                acc[i] = acc[i] + coef * parts[i]
        out = []
        for a in acc:
            a = np.broadcast_to(a, r.shape)
            if np.iscomplexobj(a):
                a = a.real
            out.append(self.scale * np.asarray(a, dtype=float).reshape(shape))
        return tuple(out)


def _check_order(op, m, singular):
    if not 0 <= m <= MAX_ORDER:
        raise CapabilityError(f"order m must be in 0..{MAX_ORDER}, got {m}")
    if op.kind == WINKLER_PLATE:
        if op.dim > 3 and m > 0:
            raise CapabilityError("Winkler higher orders only for dim 2, 3")
    elif op.dim not in (2, 3):
        raise CapabilityError(f"{op.kind} solutions need dim 2 or 3, got {op.dim}")


def _build(op, m, singular):
    _check_order(op, m, singular)
    scale, q2s = op.radial_factors
    if len(q2s) == 1:
        fam = _Family(q2s[0], op.dim, singular)
        coef = _hierarchy_norm(fam, m)
        if not singular:
            # u_0(0) = 1
            coef *= 2.0 ** fam.a * specfun.gamma(fam.a + 1.0)
        # R = scale (Lap - q^2) so each order carries scale^{-m}
        terms = [(coef, fam, m)]
        return HierarchyProfile(terms, op, m, singular, scale=scale ** (-m))
    fams = [_Family(q2, op.dim, singular) for q2 in q2s]
    terms = []
    for i, fam in enumerate(fams):
        other = fams[1 - i]
        c = _shift_inverse_coeffs(complex(fam.q2), complex(other.q2), m)
        for j, cj in enumerate(c):
            if cj != 0:
                terms.append((complex(cj) * _hierarchy_norm(fam, j), fam, j))
    norm = 1.0
    if not singular:
        a = fams[0].a
        norm = 2.0**a * specfun.gamma(a + 1.0) / 2.0
    return HierarchyProfile(terms, op, m, singular, scale=norm)


def general_solution(op: OperatorSpec, m: int = 0) -> HierarchyProfile:
    """Nonsingular m-th order general solution u_m^# (finite at r = 0)."""
    return _build(op, m, singular=False)


def fundamental_solution(op: OperatorSpec, m: int = 0) -> HierarchyProfile:
    """Singular m-th order fundamental-type solution u_m^* (defined up to a constant)."""
    return _build(op, m, singular=True)


# ---------------------------------------------------------------------------
# Point-pair calculus
# ---------------------------------------------------------------------------


def _pair_geometry(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise ParameterError("points must have matching dimension")
    z = x - y
    r = np.sqrt(np.sum(z * z, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        zhat = np.where(r[..., None] > 0, z / np.where(r > 0, r, 1.0)[..., None], 0.0)
    return z, r, zhat


def _profile_of(profile):
    return profile.profile if isinstance(profile, KernelRbf) else profile


def _convective(op, z):
    if op is None or not op.has_convection:
        return None, 1.0
    w = op.wind
    return w, np.exp(z @ w)


def evaluate_kernel(profile, x, y, op=None):
    """Kernel value phi(|x - y|) * exp(w.(x - y)); w = v/2D for convection-diffusion."""
    prof = _profile_of(profile)
    z, r, _ = _pair_geometry(x, y)
    f0 = prof.evaluate(r)
    _, E = _convective(op, z)
    return E * f0


def _gradient_parts(prof, z, r, zhat, op):
    f0, f1, f2 = prof.derivatives(r)
    w, E = _convective(op, z)
    return f0, f1, f2, w, E


def normal_derivative(profile, x, y, n_x, op=None):
    """Directional derivative of the kernel with respect to x along n_x."""
    prof = _profile_of(profile)
    z, r, zhat = _pair_geometry(x, y)
    if np.any(r == 0) and prof.singular_at_origin:
        raise SingularityError("kernel gradient at coincident points")
    f0, f1, _, w, E = _gradient_parts(prof, z, r, zhat, op)
    n_x = np.asarray(n_x, dtype=float)
    val = f1 * np.sum(zhat * n_x, axis=-1)
    if w is not None:
        val = val + f0 * (n_x @ w)
    return E * val


def binormal_second_derivative(profile, x, y, n_x, n_y, op=None):
    """n_x^T (d^2 K / dx dy) n_y for K(x, y) = k(x - y)."""
    prof = _profile_of(profile)
    z, r, zhat = _pair_geometry(x, y)
    if np.any(r == 0) and prof.singular_at_origin:
        raise SingularityError("kernel Hessian at coincident points")
    f0, f1, f2, w, E = _gradient_parts(prof, z, r, zhat, op)
    n_x = np.asarray(n_x, dtype=float)
    n_y = np.asarray(n_y, dtype=float)
    a = np.sum(zhat * n_x, axis=-1)
    b = np.sum(zhat * n_y, axis=-1)
    nn = np.sum(n_x * n_y, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        f1_over_r = np.where(r > 0, f1 / np.where(r > 0, r, 1.0), f2)
    hess = f2 * a * b + f1_over_r * (nn - a * b)
    if w is not None:
        wx = n_x @ w
        wy = n_y @ w
        hess = hess + wx * wy * f0 + f1 * (wx * b + a * wy)
    return -E * hess


# ---------------------------------------------------------------------------
# Radial operator application
# ---------------------------------------------------------------------------

_D1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
_D2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
_OFFSETS = np.arange(-4, 5)


def _fd_step(r, singular=False, h0=0.05):
    if singular:
        # the stencil must stay on r > 0
        return np.minimum(h0, r / 40.0)
    # keep r/h a half-integer so even-extended stencils never hit r = 0
    k = np.maximum(np.round(r / h0), 0.0)
    return r / (k + 0.5)


def _fd_laplacian(func, r, dim, h):
    pts = r[..., None] + _OFFSETS * h[..., None]
    vals = func(pts)
    d1 = vals @ _D1 / h
    d2 = vals @ _D2 / h**2
    return d2 + (dim - 1) * d1 / r


def apply_operator(op: OperatorSpec, profile, r, method="analytic"):
    """Apply the radial form of ``op`` to a profile at radii r > 0.

    ``method="analytic"`` uses the profile's own derivatives for the inner
    Laplacian and composes fourth-order operators with an 8th-order
    finite-difference Laplacian; ``method="fd"`` differentiates
    ``profile.evaluate`` only.
    """
    prof = _profile_of(profile)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise ParameterError("apply_operator requires r > 0")
    scale, q2s = op.radial_factors
    n = op.dim
    sing = prof.singular_at_origin
    h = _fd_step(r, sing)

    def value(rr):
        return prof.evaluate(np.abs(rr))

    if method == "analytic":

        def inner(rr):
            rr = np.abs(rr)
            f0, f1, f2 = prof.derivatives(rr)
            return f2 + (n - 1) * f1 / rr - q2s[0] * f0

    elif method == "fd":

        def inner(rr):
            rr = np.abs(rr)
            return _fd_laplacian(value, rr, n, _fd_step(rr, sing)) - q2s[0] * value(rr)

    else:
        raise ParameterError(f"unknown method {method!r}")

    if len(q2s) == 1:
        out = inner(r)
    else:
        q2 = q2s[1]
        out = _fd_laplacian(inner, r, n, h) - q2 * inner(r)
    out = scale * out
    if np.iscomplexobj(out):
        out = out.real
    return out


def laplacian_even(profile: EvenSmoothProfile, r, dim):
    """Exact radial Laplacian of an even-smooth profile (regular at r = 0)."""
    s = np.asarray(r, dtype=float) ** 2
    _, g1, g2 = profile.g_derivatives(s, 2)
    return 2.0 * dim * g1 + 4.0 * s * g2
