"""Real-order Bessel-type functions.

Provides J_nu, Y_nu, I_nu, K_nu and the Kelvin functions ber_nu, bei_nu,
ker_nu, kei_nu for real order nu >= -1/2 and real argument x >= 0.

Evaluation strategy
-------------------
* Ascending power series (term budget ``TERM_BUDGET``) for I_nu at every
  argument, for J_nu below ``J_SERIES_CROSSOVER`` and for ber/bei.
* Bessel/Schlaefli integrals for J_nu and Y_nu above the crossover, on
  composite Gauss-Legendre panels.
* ``K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt`` with the trapezoidal
  rule.  The integrand is even and analytic in a strip, so the rule
  converges geometrically; the same code handles the complex arguments
  needed for ker/kei.

All functions accept a scalar or an array ``x`` and return the same shape.
Passing ``full_output=True`` with a scalar argument returns a
:class:`SpecialFunctionResult` instead of raising on non-convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, DomainError, ParameterError, SingularityError

TERM_BUDGET = 500
J_SERIES_CROSSOVER = 8.0
KELVIN_SERIES_MAX = 60.0

_STOP = 2.0**-56
_CHUNK = 2048

_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


@dataclass(frozen=True)
class SpecialFunctionResult:
    """Value plus convergence diagnostics for a scalar evaluation.

    ``value`` must not be used when ``converged`` is False.
    """

    value: float | complex
    converged: bool
    terms_used: int

    def __post_init__(self):
        if self.terms_used < 1:
            raise ValueError("terms_used must be >= 1")


class Kelvin(NamedTuple):
    ber: float | np.ndarray
    bei: float | np.ndarray
    ker: float | np.ndarray
    kei: float | np.ndarray


def gamma(x: float) -> float:
    """Gamma function of a real argument (Lanczos, g=7, n=9)."""
    x = float(x)
    if x < 0.5:
        if x == math.floor(x):
            raise DomainError(f"gamma has a pole at {x}")
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    if x == math.floor(x) and x <= 171:
        # exact leading terms for integer-order series
        return float(math.factorial(int(x) - 1))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for i in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[i] / (x + i)
    t = x + _LANCZOS_G + 0.5
    half = t ** (0.5 * (x + 0.5))
    return math.sqrt(2.0 * math.pi) * half * math.exp(-t) * half * acc


# ---------------------------------------------------------------------------
# Core evaluators (array in, array out, plus diagnostics)
# ---------------------------------------------------------------------------


def entire_series(nu, t, sign=1.0, budget=TERM_BUDGET):
    """Evaluate ``sum_k (sign*t/4)^k / (k! Gamma(k+nu+1))``.

    This is the entire part shared by the whole family:
    ``I_nu(w) = (w/2)^nu * S(nu, w^2, +1)`` and
    ``J_nu(w) = (w/2)^nu * S(nu, w^2, -1)``.  ``t`` may be complex.

    Returns ``(values, converged, terms_used)``.
    """
    t = np.asarray(t)
    dtype = np.result_type(t.dtype, np.float64)
    term = np.full(t.shape, 1.0 / gamma(nu + 1.0), dtype=dtype)
    total = term.copy()
    peak = np.abs(term)
    q = (sign / 4.0) * t
    for k in range(1, budget + 1):
        term = term * q / (k * (k + nu))
        total = total + term
        a = np.abs(term)
        np.maximum(peak, a, out=peak)
        if np.all(a <= _STOP * np.maximum(np.abs(total), peak)):
            return total, bool(np.all(np.isfinite(total))), k + 1
    return total, False, budget + 1


def _legendre_panels(a, b, width, order=16):
    npan = max(1, int(math.ceil((b - a) / width)))
    xg, wg = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, npan + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
    weights = (half[:, None] * wg[None, :]).ravel()
    return nodes, weights


def _tail_length(xmin, nu, budget=41.5):
    # smallest T with x*sinh(T) - |nu|*T >= budget
    T = 1.0
    for _ in range(50):
        T_new = math.asinh((budget + abs(nu) * T) / xmin)
        if abs(T_new - T) < 1e-6:
            break
        T = T_new
    return max(T, 1e-3)


def _jy_integrals(nu, x, want_y):
    """J_nu or Y_nu by Bessel/Schlaefli integrals for an array of x > 0."""
    out = np.empty_like(x)
    order = np.argsort(x)
    xs = x[order]
    s_nu = 0.0 if float(nu).is_integer() else math.sin(nu * math.pi)
    c_nu = math.cos(nu * math.pi)
    if (2.0 * nu).is_integer() and not float(nu).is_integer():
        c_nu = 0.0
    nodes_used = 0
    for start in range(0, xs.size, _CHUNK):
        xc = xs[start:start + _CHUNK]
        xmax, xmin = float(xc[-1]), float(xc[0])
        n1 = max(32, int(1.2 * xmax + 2.0 * abs(nu) + 30))
        tg, wg = np.polynomial.legendre.leggauss(n1)
        theta = 0.5 * math.pi * (tg + 1.0)
        wth = 0.5 * math.pi * wg
        phase = xc[:, None] * np.sin(theta)[None, :] - nu * theta[None, :]
        if want_y:
            first = np.sin(phase) @ wth / math.pi
        else:
            first = np.cos(phase) @ wth / math.pi
        second = 0.0
        n2 = 0
        if want_y or s_nu != 0.0:
            T = _tail_length(xmin, nu)
            width = min(0.25, 5.0 / xmax)
            tn, wn = _legendre_panels(0.0, T, width)
            e = -xc[:, None] * np.sinh(tn)[None, :]
            if want_y:
                integrand = np.exp(e + nu * tn[None, :]) + c_nu * np.exp(e - nu * tn[None, :])
                second = -(integrand @ wn) / math.pi
            else:
                second = -s_nu * (np.exp(e - nu * tn[None, :]) @ wn) / math.pi
            n2 = tn.size
        out[order[start:start + _CHUNK]] = first + second
        nodes_used = max(nodes_used, n1 + n2)
    return out, nodes_used


def _k_trapezoid(nu, z):
    """K_nu(z) for Re z > 0 (real or complex array) by the trapezoidal rule."""
    nu = abs(float(nu))
    z = np.asarray(z)
    is_complex = np.iscomplexobj(z)
    h = 0.05 if is_complex else 0.1
    out = np.empty(z.shape, dtype=complex if is_complex else float)
    re = np.real(z)
    order = np.argsort(re)
    zs = z[order]
    used = 1
    for start in range(0, zs.size, _CHUNK):
        zc = zs[start:start + _CHUNK]
        xmin = float(np.real(zc[0]))
        # tail: Re z (cosh T - 1) - nu T >= 45
        T = 1.0
        for _ in range(60):
            T_new = math.acosh(1.0 + (45.0 + nu * T) / xmin)
            if abs(T_new - T) < 1e-6:
                break
            T = T_new
        t = np.arange(0.0, T + h, h)
        w = np.full(t.shape, h)
        w[0] = 0.5 * h
        with np.errstate(over="ignore", invalid="ignore"):
            expo = -zc[:, None] * np.cosh(t)[None, :] + nu * t[None, :]
            f = np.exp(expo) * (0.5 * (1.0 + np.exp(-2.0 * nu * t)))[None, :]
            out[order[start:start + _CHUNK]] = f @ w
        used = max(used, t.size)
    return out, used


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def _prepare(nu, x, nu_min=-0.5):
    nu = float(nu)
    if not math.isfinite(nu) or nu < nu_min:
        raise ParameterError(f"order must be >= {nu_min}, got {nu}")
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(xa)):
        raise DomainError("argument must be finite")
    if np.any(xa < 0.0):
        raise DomainError("argument must be non-negative")
    return nu, xa, scalar


def _finish(values, scalar, converged, terms, full_output, what):
    if full_output:
        if not scalar:
            raise ParameterError("full_output requires a scalar argument")
        v = values[0].item() if converged else float("nan")
        return SpecialFunctionResult(v, converged, int(terms))
    if not converged:
        raise ConvergenceError(f"{what}: no convergence within {terms} terms")
    return values[0].item() if scalar else values


def bessel_i(nu, x, *, full_output=False):
    """Modified Bessel function of the first kind, I_nu(x)."""
    nu, xa, scalar = _prepare(nu, x)
    if nu < 0.0 and np.any(xa == 0.0):
        raise SingularityError(f"I_{nu}(0) diverges")
    # log I_nu(x) ~ x - 0.5 log(2 pi x)
    big = xa[xa > 1.0]
    if big.size and float(np.max(big - 0.5 * np.log(2.0 * np.pi * big))) > 709.0:
        raise OverflowError("I_nu(x) exceeds the double-precision range")
    s, ok, terms = entire_series(nu, xa * xa, 1.0)
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.power(0.5 * xa, nu) * s
    if ok and not np.all(np.isfinite(values)):
        raise OverflowError("I_nu(x) exceeds the double-precision range")
    return _finish(values, scalar, ok, terms, full_output, "bessel_i")


def bessel_j(nu, x, *, full_output=False):
    """Bessel function of the first kind, J_nu(x)."""
    nu, xa, scalar = _prepare(nu, x)
    if nu < 0.0 and np.any(xa == 0.0):
        raise SingularityError(f"J_{nu}(0) diverges")
    values = np.empty_like(xa)
    small = xa <= J_SERIES_CROSSOVER
    ok, terms = True, 1
    if np.any(small):
        xs = xa[small]
        s, ok, terms = entire_series(nu, xs * xs, -1.0)
        values[small] = np.power(0.5 * xs, nu) * s
    if np.any(~small):
        values[~small], nodes = _jy_integrals(nu, xa[~small], want_y=False)
        terms = max(terms, nodes)
    return _finish(values, scalar, ok, terms, full_output, "bessel_j")


def bessel_y(nu, x, *, full_output=False):
    """Bessel function of the second kind, Y_nu(x), for x > 0."""
    nu, xa, scalar = _prepare(nu, x)
    if np.any(xa == 0.0):
        raise SingularityError("Y_nu(0) diverges")
    values, nodes = _jy_integrals(nu, xa, want_y=True)
    if not np.all(np.isfinite(values)):
        raise OverflowError("Y_nu(x) exceeds the double-precision range")
    return _finish(values, scalar, True, nodes, full_output, "bessel_y")


def bessel_k(nu, x, *, full_output=False):
    """Modified Bessel function of the second kind, K_nu(x), for x > 0."""
    nu, xa, scalar = _prepare(nu, x)
    if np.any(xa == 0.0):
        raise SingularityError("K_nu(0) diverges")
    values, nodes = _k_trapezoid(nu, xa)
    if not np.all(np.isfinite(values)):
        raise OverflowError("K_nu(x) diverges beyond the double-precision range")
    return _finish(values, scalar, True, nodes, full_output, "bessel_k")


def kelvin_first(nu, x):
    """Return ``(ber_nu(x), bei_nu(x))`` from the complex ascending series.

    ber_nu(x) + i bei_nu(x) = J_nu(x exp(3 pi i / 4)).
    """
    nu, xa, scalar = _prepare(nu, x, nu_min=0.0)
    if np.any(xa > KELVIN_SERIES_MAX):
        raise DomainError(f"ber/bei series limited to x <= {KELVIN_SERIES_MAX}")
    # z^2 = -i x^2 for z = x exp(3 pi i / 4)
    s, ok, terms = entire_series(nu, -1j * xa * xa, -1.0)
    if not ok:
        raise ConvergenceError(f"ber/bei: no convergence within {terms} terms")
    values = np.power(0.5 * xa, nu) * np.exp(0.75j * math.pi * nu) * s
    if scalar:
        return values.real[0].item(), values.imag[0].item()
    return values.real, values.imag


def kelvin_second(nu, x):
    """Return ``(ker_nu(x), kei_nu(x))`` for x > 0.

    ker_nu(x) + i kei_nu(x) = exp(-nu pi i / 2) K_nu(x exp(pi i / 4)).
    """
    nu, xa, scalar = _prepare(nu, x, nu_min=0.0)
    if np.any(xa == 0.0):
        raise SingularityError("ker/kei diverge at x = 0")
    k, _ = _k_trapezoid(nu, xa * np.exp(0.25j * math.pi))
    values = np.exp(-0.5j * math.pi * nu) * k
    if not np.all(np.isfinite(values)):
        raise OverflowError("ker/kei exceed the double-precision range")
    if scalar:
        return values.real[0].item(), values.imag[0].item()
    return values.real, values.imag


def kelvin(nu, x, second_kind=True) -> Kelvin:
    """Kelvin functions of order nu at x.

    ker and kei need x > 0; with ``second_kind=False`` they are skipped
    (returned as None) so ber and bei can be taken at the origin.
    """
    ber, bei = kelvin_first(nu, x)
    if not second_kind:
        return Kelvin(ber, bei, None, None)
    ker, kei = kelvin_second(nu, x)
    return Kelvin(ber, bei, ker, kei)


def complex_bessel_k(nu, z):
    """K_nu(z) for an array of complex z with Re z > 0 (internal helper)."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.real(z) <= 0.0):
        raise DomainError("complex K_nu requires Re z > 0")
    values, _ = _k_trapezoid(nu, z.ravel())
    return values.reshape(z.shape)
