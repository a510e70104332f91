"""Dense solvers: reusable LU, QR least squares and the centrosymmetric split."""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import ConditioningError, RankError, StructureError

PIVOT_TOL = 1e-14
# collocation matrices of smooth kernels are routinely far beyond cond 1e14 and
# still give accurate solutions; solvers only reject essentially exact singularity
COLLOCATION_PIVOT_TOL = 1e-20
STRUCTURE_TOL = 1e-12


class Structure(str, Enum):
    GENERAL = "General"
    CENTROSYMMETRIC = "Centrosymmetric"
    SKEW_CENTROSYMMETRIC = "SkewCentrosymmetric"


@dataclass
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    structure_hint: Structure = Structure.GENERAL

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        self.rhs = np.asarray(self.rhs, dtype=float)
        if self.matrix.ndim != 2 or self.rhs.shape[0] != self.matrix.shape[0]:
            raise ValueError("matrix and rhs dimensions disagree")


@dataclass(frozen=True)
class Factorization:
    """Row-pivoted LU factors of a square matrix, reusable across right sides."""

    lu: np.ndarray
    piv: np.ndarray
    anorm: float  # 1-norm of the original matrix

    @property
    def n(self):
        return self.lu.shape[0]

    def solve(self, rhs):
        return lu_solve(self, rhs)


def _as_matrix(a):
    if isinstance(a, LinearSystem):
        a = a.matrix
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a 2-D matrix")
    return a


def lu_factor(a, pivot_tol=PIVOT_TOL) -> Factorization:
    """Partial-pivoting LU.  Raises ConditioningError on a pivot below pivot_tol * max|A|."""
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"lu_factor needs a square matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    amax = float(np.max(np.abs(a))) if a.size else 0.0
    with warnings.catch_warnings():
        # exact singularity is reported below as ConditioningError
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(a, check_finite=False)
    diag = np.abs(np.diag(lu))
    small = np.nonzero(diag <= pivot_tol * amax)[0]
    if amax == 0.0 or small.size:
        idx = int(small[0]) if small.size else 0
        raise ConditioningError(
            f"matrix is numerically singular (pivot {idx} = {diag[idx]:.3e})", pivot_index=idx
        )
    anorm = float(np.max(np.sum(np.abs(a), axis=0)))
    return Factorization(lu, piv, anorm)


def lu_solve(f: Factorization, rhs):
    rhs = np.asarray(rhs, dtype=float)
    return sla.lu_solve((f.lu, f.piv), rhs, check_finite=False)


def condition_estimate(f, norm="2") -> float:
    """Condition number estimate from a factorization.

    ``norm="2"`` runs a few power iterations on A^T A and on (A^T A)^{-1}
    through the LU factors, so it tracks the SVD condition number (it is a
    lower bound that is usually within a factor 2).  ``norm="1"`` is the
    LAPACK 1-norm estimate, which may exceed the 2-norm value by up to N.
    """
    if hasattr(f, "condition_estimate"):
        return f.condition_estimate(norm)
    if norm == "1":
        rcond, info = lapack.dgecon(f.lu, f.anorm, norm="1")
        if info != 0 or rcond == 0.0:
            return float("inf")
        return 1.0 / rcond
    if norm != "2":
        raise ValueError(f"norm must be '1' or '2', got {norm!r}")
    smax, smin = _extreme_singular_values(f)
    return float("inf") if smin == 0.0 else smax / smin


POWER_ITERATIONS = 12


def _power(apply, n):
    """Square root of the dominant eigenvalue of a symmetric PSD map."""
    x = np.random.default_rng(0).standard_normal(n)  # fixed start keeps estimates reproducible
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(POWER_ITERATIONS):
        y = apply(x)
        lam = float(np.linalg.norm(y))
        if lam == 0.0 or not np.isfinite(lam):
            return lam
        x = y / lam
    return float(np.sqrt(lam))


def _extreme_singular_values(f: Factorization):
    """(sigma_max, sigma_min) estimates of A = P^T L U."""
    n = f.n
    U = np.triu(f.lu)
    Lo = np.tril(f.lu, -1) + np.eye(n)
    perm = np.arange(n)
    for i, j in enumerate(f.piv):
        perm[i], perm[j] = perm[j], perm[i]

    def ata(x):
        y = np.empty(n)
        y[perm] = Lo @ (U @ x)  # A x
        return U.T @ (Lo.T @ y[perm])  # A^T (A x)

    def inv_ata(x):
        y = sla.lu_solve((f.lu, f.piv), x, trans=1, check_finite=False)
        return sla.lu_solve((f.lu, f.piv), y, check_finite=False)

    smax = _power(ata, n)
    inv = _power(inv_ata, n)
    if not np.isfinite(inv):
        return smax, 0.0
    return smax, (1.0 / inv if inv > 0 else float("inf"))


def least_squares_solve(a, b, rtol=None):
    """min |Ax - b|_2 by column-pivoted Householder QR (no normal equations).

    Raises RankError if the numerical rank is below the column count.
    """
    a = _as_matrix(a)
    b = np.asarray(b, dtype=float)
    m, n = a.shape
    if m < n:
        raise ValueError(f"need at least as many rows as columns, got {a.shape}")
    q, r, perm = sla.qr(a, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    if rtol is None:
        rtol = max(m, n) * np.finfo(float).eps
    rank = int(np.sum(d > rtol * d[0])) if d.size and d[0] > 0 else 0
    if rank < n:
        raise RankError(f"matrix has numerical rank {rank} < {n}", rank=rank)
    y = sla.solve_triangular(r, q.T @ b, check_finite=False)
    x = np.empty_like(y)
    x[perm] = y
    return x


def detect_structure(a, tol=STRUCTURE_TOL) -> Structure:
    a = _as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise ValueError("detect_structure needs a square matrix")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    flipped = a[::-1, ::-1]
    if np.max(np.abs(a - flipped), initial=0.0) <= tol * scale:
        return Structure.CENTROSYMMETRIC
    if np.max(np.abs(a + flipped), initial=0.0) <= tol * scale:
        return Structure.SKEW_CENTROSYMMETRIC
    return Structure.GENERAL


@dataclass
class CentroFactorization:
    """Two half-size LU factorizations of a centrosymmetric matrix.

    For N = 2p, with B = A[:p, :p] and C = A[:p, p:] J, the orthogonal map
    [[I, J], [I, -J]] / sqrt(2) block-diagonalizes A into B + C and B - C.
    Odd N borders the B + C block with the centre row and column.
    """

    n: int
    plus: Factorization
    minus: Factorization | None
    anorm: float
    n_factorizations: int = field(default=2)

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        n = self.n
        p = n // 2
        b1 = rhs[:p]
        b2 = rhs[n - p:][::-1]  # J b2
        if n % 2 == 0:
            y = lu_solve(self.plus, b1 + b2)
            w = lu_solve(self.minus, b1 - b2)
            return np.concatenate([(y + w) / 2, ((y - w) / 2)[::-1]])
        bm = rhs[p:p + 1]
        yz = lu_solve(self.plus, np.concatenate([b1 + b2, bm]))
        y, xm = yz[:p], yz[p:]
        if p:
            w = lu_solve(self.minus, b1 - b2)
        else:
            w = np.zeros_like(y)
        return np.concatenate([(y + w) / 2, xm, ((y - w) / 2)[::-1]])

    def condition_estimate(self, norm="2"):
        # the split is an orthogonal similarity (exactly so for even N), so
        # the extreme singular values are those of the two halves
        halves = [f for f in (self.plus, self.minus) if f is not None]
        if norm == "1":
            inv = []
            for f in halves:
                rcond, info = lapack.dgecon(f.lu, f.anorm, norm="1")
                if info != 0 or rcond == 0.0:
                    return float("inf")
                inv.append(1.0 / (rcond * f.anorm))
            return max(f.anorm for f in halves) * max(inv)
        ext = [_extreme_singular_values(f) for f in halves]
        smin = min(e[1] for e in ext)
        return float("inf") if smin == 0.0 else max(e[0] for e in ext) / smin


def centrosymmetric_factor(a, tol=STRUCTURE_TOL, pivot_tol=PIVOT_TOL) -> CentroFactorization:
    a = _as_matrix(a)
    if detect_structure(a, tol) != Structure.CENTROSYMMETRIC:
        raise StructureError("matrix is not centrosymmetric within tolerance")
    n = a.shape[0]
    p = n // 2
    B = a[:p, :p]
    C = a[:p, n - p:][:, ::-1]  # C J
    anorm = float(np.max(np.sum(np.abs(a), axis=0)))
    if n % 2 == 0:
        return CentroFactorization(n, lu_factor(B + C, pivot_tol), lu_factor(B - C, pivot_tol), anorm)
    u = a[:p, p]  # centre column, top half
    v = a[p, :p]  # centre row, left half
    c = a[p, p]
    bordered = np.zeros((p + 1, p + 1))
    bordered[:p, :p] = B + C
    bordered[:p, p] = 2.0 * u
    bordered[p, :p] = v
    bordered[p, p] = c
    minus = lu_factor(B - C, pivot_tol) if p else None
    return CentroFactorization(n, lu_factor(bordered, pivot_tol), minus, anorm, 2 if p else 1)


def centrosymmetric_solve(a, b, tol=STRUCTURE_TOL):
    if isinstance(a, LinearSystem):
        a, b = a.matrix, a.rhs
    return centrosymmetric_factor(a, tol).solve(b)


def factor(a, use_structure=True, pivot_tol=PIVOT_TOL):
    """LU factorization, through the half-size split when A is centrosymmetric."""
    a = _as_matrix(a)
    if use_structure and a.shape[0] > 1 and detect_structure(a) == Structure.CENTROSYMMETRIC:
        return centrosymmetric_factor(a, pivot_tol=pivot_tol)
    return lu_factor(a, pivot_tol)


@dataclass(frozen=True)
class TruncatedSvd:
    """A = U S V^T with singular values below rcond * s_max discarded.

    A regularised stand-in for LU when right-hand sides are not compatible
    with a severely ill-conditioned matrix; like LU it is computed once and
    reused for every right side.
    """

    u: np.ndarray
    s: np.ndarray
    vt: np.ndarray
    rcond: float

    @property
    def rank(self):
        return int(np.sum(self.s > self.rcond * self.s[0]))

    def solve(self, rhs):
        k = self.rank
        rhs = np.asarray(rhs, dtype=float)
        return self.vt[:k].T @ ((self.u[:, :k].T @ rhs) / (self.s[:k] if rhs.ndim == 1 else self.s[:k, None]))

    def condition_estimate(self, norm="2"):
        return float(self.s[0] / self.s[-1]) if self.s[-1] > 0 else float("inf")


def truncated_svd_factor(a, rcond) -> TruncatedSvd:
    a = _as_matrix(a)
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    u, s, vt = np.linalg.svd(a)
    if s[0] == 0.0:
        raise ConditioningError("zero matrix", pivot_index=0)
    return TruncatedSvd(u, s, vt, float(rcond))


def write_matrix(path, a):
    """Row-major float64 dump with a 16-byte header of two little-endian uint64 dims."""
    a = np.ascontiguousarray(_as_matrix(a), dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", *a.shape))
        fh.write(a.tobytes())


def read_matrix(path):
    with open(path, "rb") as fh:
        rows, cols = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != rows * cols:
        raise ValueError("matrix file is truncated")
    return data.reshape(rows, cols).copy()
