"""Collocation node clouds for the test geometries.

Clouds keep their nodes in three blocks (Dirichlet, Neumann, interior).
Normals always point out of the material, so on a cavity or cutout they
point into the hole.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .errors import GeometryError, SymmetryError

DUPLICATE_TOL = 1e-10
GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


class NodeKind(str, Enum):
    DIRICHLET = "DirichletBoundary"
    NEUMANN = "NeumannBoundary"
    INTERIOR = "InteriorNode"


_BLOCK_ORDER = {NodeKind.DIRICHLET: 0, NodeKind.NEUMANN: 1, NodeKind.INTERIOR: 2}


@dataclass(frozen=True)
class Node:
    position: np.ndarray
    kind: NodeKind
    normal: np.ndarray | None = None


@dataclass(frozen=True)
class Region:
    """Material region as a level set: ``level_set(p) < 0`` inside."""

    level_set: Callable[[np.ndarray], np.ndarray]
    lower: np.ndarray
    upper: np.ndarray

    def contains(self, p):
        return self.level_set(np.atleast_2d(p)) < 0.0

    @property
    def dim(self):
        return len(self.lower)


@dataclass(frozen=True)
class NodeCloud:
    positions: np.ndarray
    kinds: tuple
    normals: np.ndarray  # NaN rows for interior nodes
    region: Region | None = None
    mirrored: bool = False  # True after symmetric_ordering; blocks may interleave

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] not in (1, 2, 3):
            raise GeometryError(f"positions must be (N, 1..3), got {pos.shape}")
        kinds = tuple(NodeKind(k) for k in self.kinds)
        if len(kinds) != pos.shape[0]:
            raise GeometryError("one kind per node required")
        nrm = np.asarray(self.normals, dtype=float)
        if nrm.shape != pos.shape:
            raise GeometryError("normals must match positions")
        bnd = np.array([k != NodeKind.INTERIOR for k in kinds], dtype=bool)
        if bnd.any():
            lens = np.linalg.norm(nrm[bnd], axis=1)
            if np.any(np.abs(lens - 1.0) > 1e-12):
                raise GeometryError("boundary normals must be unit vectors")
        if not self.mirrored:
            order = [_BLOCK_ORDER[k] for k in kinds]
            if any(a > b for a, b in zip(order, order[1:])):
                raise GeometryError("nodes must be ordered Dirichlet, Neumann, interior")
        if pos.shape[0] > 1:
            dmin, i, j = _closest_pair(pos)
            if dmin <= DUPLICATE_TOL:
                raise GeometryError(f"nodes {i} and {j} coincide")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "kinds", kinds)
        object.__setattr__(self, "normals", nrm)

    @classmethod
    def from_parts(cls, dirichlet=(), neumann=(), interior=(), region=None, dim=None):
        """Build a cloud from ``(positions, normals)`` pairs and interior positions."""
        pos, kinds, nrm = [], [], []
        for kind, part in ((NodeKind.DIRICHLET, dirichlet), (NodeKind.NEUMANN, neumann)):
            if len(part) == 0:
                continue
            p, n = part
            p = np.atleast_2d(np.asarray(p, dtype=float))
            if p.size == 0:
                continue
            pos.append(p)
            nrm.append(np.atleast_2d(np.asarray(n, dtype=float)))
            kinds += [kind] * len(p)
        if len(interior):
            p = np.atleast_2d(np.asarray(interior, dtype=float))
            if p.size:
                pos.append(p)
                nrm.append(np.full(p.shape, np.nan))
                kinds += [NodeKind.INTERIOR] * len(p)
        if not pos:
            raise GeometryError("empty cloud")
        return cls(np.vstack(pos), tuple(kinds), np.vstack(nrm), region)

    @property
    def dim(self):
        return self.positions.shape[1]

    def __len__(self):
        return self.positions.shape[0]

    def mask(self, kind):
        kind = NodeKind(kind)
        return np.array([k == kind for k in self.kinds], dtype=bool)

    @property
    def dirichlet_mask(self):
        return self.mask(NodeKind.DIRICHLET)

    @property
    def neumann_mask(self):
        return self.mask(NodeKind.NEUMANN)

    @property
    def interior_mask(self):
        return self.mask(NodeKind.INTERIOR)

    @property
    def boundary_mask(self):
        return ~self.interior_mask

    @property
    def counts(self):
        """(L_D, L_N, N_interior)."""
        return (int(self.dirichlet_mask.sum()), int(self.neumann_mask.sum()),
                int(self.interior_mask.sum()))

    @property
    def nodes(self):
        return [
            Node(self.positions[i].copy(), k, None if k == NodeKind.INTERIOR else self.normals[i].copy())
            for i, k in enumerate(self.kinds)
        ]

    def boundary_only(self):
        b = self.boundary_mask
        return NodeCloud(self.positions[b], tuple(k for k, m in zip(self.kinds, b) if m),
                         self.normals[b], self.region, self.mirrored)

    def diameter(self):
        p = self.positions
        return float(np.max(np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)))

    def to_csv(self, path_or_file):
        """Write x, y[, z], kind, nx, ny[, nz]; interior normals are left blank."""
        axes = "xyz"[: self.dim]
        header = list(axes) + ["kind"] + ["n" + a for a in axes]
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(header)
            for p, k, n in zip(self.positions, self.kinds, self.normals):
                nn = [""] * self.dim if k == NodeKind.INTERIOR else [repr(float(c)) for c in n]
                w.writerow([repr(float(c)) for c in p] + [k.value] + nn)
        finally:
            if own:
                fh.close()


def _closest_pair(pos):
    from scipy.spatial import cKDTree

    tree = cKDTree(pos)
    d, idx = tree.query(pos, k=2)
    i = int(np.argmin(d[:, 1]))
    return float(d[i, 1]), i, int(idx[i, 1])


# ---------------------------------------------------------------------------
# Square with a trigonometric cutout
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cutout:
    """Star-shaped hole r(theta) = r0 + amp * cos(k * theta)."""

    r0: float = 0.35
    amp: float = 0.1
    k: int = 4

    def radius(self, theta):
        return self.r0 + self.amp * np.cos(self.k * theta)

    def dradius(self, theta):
        return -self.amp * self.k * np.sin(self.k * theta)

    def max_radius(self):
        return self.r0 + abs(self.amp)

    def perimeter(self, n=2048):
        t = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
        return float(np.mean(np.hypot(self.radius(t), self.dradius(t))) * 2 * math.pi)


def square_cutout_region(half_side, cutout):
    a = float(half_side)

    def level(p):
        p = np.atleast_2d(p)
        outer = np.max(np.abs(p), axis=1) - a
        if cutout is None:
            return outer
        rho = np.hypot(p[:, 0], p[:, 1])
        hole = cutout.radius(np.arctan2(p[:, 1], p[:, 0])) - rho
        return np.maximum(outer, hole)

    return Region(level, np.array([-a, -a]), np.array([a, a]))


def _square_perimeter_points(a, n):
    """n points equally spaced along the square, starting at (a, 0), counter-clockwise."""
    perim = 8.0 * a
    step = perim / n
    s = np.arange(n) * step
    corners = np.array([a, 3 * a, 5 * a, 7 * a])
    if np.any(np.min(np.abs(((s[:, None] - corners[None, :]) + 4 * a) % perim - 4 * a), axis=1) < 1e-9 * a):
        s = s + 0.5 * step
    s = s % perim
    pts = np.empty((n, 2))
    nrm = np.empty((n, 2))
    for i, si in enumerate(s):
        # edges: right (from (a,0) up), top, left, bottom, right lower half
        u = (si + a) % perim  # distance from the bottom-right corner along the right edge
        edge = int(u // (2 * a))
        t = u - edge * 2 * a - a  # -a..a along the edge
        if edge == 0:
            pts[i], nrm[i] = (a, t), (1.0, 0.0)
        elif edge == 1:
            pts[i], nrm[i] = (-t, a), (0.0, 1.0)
        elif edge == 2:
            pts[i], nrm[i] = (-a, -t), (-1.0, 0.0)
        else:
            pts[i], nrm[i] = (t, -a), (0.0, -1.0)
    return pts, nrm


def _cutout_points(cutout, n):
    theta = 2 * math.pi * (np.arange(n) + 0.5) / n
    r = cutout.radius(theta)
    dr = cutout.dradius(theta)
    c, s = np.cos(theta), np.sin(theta)
    pts = np.column_stack([r * c, r * s])
    tangent = np.column_stack([dr * c - r * s, dr * s + r * c])
    # outward normal of the hole is (t_y, -t_x); the material normal is its negative
    nrm = -np.column_stack([tangent[:, 1], -tangent[:, 0]])
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    return pts, nrm


def _spread_interior(region, n, avoid, resolution=61):
    """Greedy farthest-point selection from a material grid (deterministic)."""
    if n == 0:
        return np.zeros((0, region.dim))
    axes = [np.linspace(lo, hi, resolution)[1:-1] for lo, hi in zip(region.lower, region.upper)]
    cand = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, region.dim)
    cand = cand[region.level_set(cand) < 0.0]
    if len(cand) < n:
        raise GeometryError(f"not enough material grid points for {n} interior nodes")
    dist = np.min(np.linalg.norm(cand[:, None, :] - avoid[None, :, :], axis=-1), axis=1)
    chosen = []
    for _ in range(n):
        i = int(np.argmax(dist))
        chosen.append(cand[i])
        dist = np.minimum(dist, np.linalg.norm(cand - cand[i], axis=1))
    return np.array(chosen)


def sample_square_with_cutout(half_side=1.0, cutout=Cutout(), n_boundary=33, n_interior=9,
                              n_cutout=None, neumann_edge="top"):
    """Square [-a, a]^2 with a star-shaped hole.

    ``n_boundary`` nodes are split between the square and the hole in
    proportion to their perimeters unless ``n_cutout`` is given.  The nodes
    on ``neumann_edge`` ("top", "bottom", "left", "right" or None) carry
    Neumann conditions.
    """
    a = float(half_side)
    if a <= 0:
        raise GeometryError("half_side must be positive")
    if cutout is not None and (cutout.r0 <= 0 or cutout.r0 - abs(cutout.amp) <= 0):
        cutout = None if cutout.r0 == 0 and cutout.amp == 0 else cutout
        if cutout is not None:
            raise GeometryError("cutout radius must stay positive")
    if cutout is not None and cutout.max_radius() >= a:
        raise GeometryError("cutout intersects the square")
    if cutout is None:
        n_cut = 0
    elif n_cutout is not None:
        n_cut = int(n_cutout)
    else:
        lc = cutout.perimeter()
        n_cut = max(3, int(round(n_boundary * lc / (lc + 8 * a))))
    n_out = int(n_boundary) - n_cut
    if n_out < 4 or (cutout is not None and n_cut < 3):
        raise GeometryError("too few boundary nodes for this geometry")
    op, on = _square_perimeter_points(a, n_out)
    parts_p, parts_n = [op], [on]
    if n_cut:
        cp, cn = _cutout_points(cutout, n_cut)
        parts_p.append(cp)
        parts_n.append(cn)
    bp, bn = np.vstack(parts_p), np.vstack(parts_n)
    edge_normal = {"top": (0, 1), "bottom": (0, -1), "left": (-1, 0), "right": (1, 0)}
    if neumann_edge is None:
        neu = np.zeros(len(bp), dtype=bool)
    else:
        e = np.array(edge_normal[neumann_edge], dtype=float)
        neu = np.zeros(len(bp), dtype=bool)
        neu[:n_out] = np.all(on == e, axis=1)
    region = square_cutout_region(a, cutout)
    interior = _spread_interior(region, int(n_interior), bp)
    return NodeCloud.from_parts((bp[~neu], bn[~neu]), (bp[neu], bn[neu]), interior, region)


# ---------------------------------------------------------------------------
# Cube with a two-ball cavity
# ---------------------------------------------------------------------------

BALL_OFFSET = math.sqrt(2.0) / 2.0


def cube_cavity_region(half_side):
    a = float(half_side)
    c1 = np.array([-BALL_OFFSET, 0.0, 0.0])
    c2 = -c1

    def level(p):
        p = np.atleast_2d(p)
        outer = np.max(np.abs(p), axis=1) - a
        d = np.minimum(np.linalg.norm(p - c1, axis=1), np.linalg.norm(p - c2, axis=1))
        return np.maximum(outer, 1.0 - d)

    return Region(level, np.full(3, -a), np.full(3, a))


def _face_grid(a, n):
    g = -a + (np.arange(n) + 0.5) * (2 * a / n)
    u, v = np.meshgrid(g, g, indexing="ij")
    u, v = u.ravel(), v.ravel()
    faces = []
    for axis in range(3):
        for sign in (1.0, -1.0):
            p = np.empty((n * n, 3))
            others = [i for i in range(3) if i != axis]
            p[:, axis] = sign * a
            p[:, others[0]] = u
            p[:, others[1]] = v
            nrm = np.zeros((n * n, 3))
            nrm[:, axis] = sign
            faces.append((axis, sign, p, nrm))
    return faces


def _cap_points(n, upper):
    """Fibonacci points on the unit sphere restricted to u_x in [-1, upper]."""
    k = np.arange(n)
    ux = -1.0 + (upper + 1.0) * (k + 0.5) / n
    rho = np.sqrt(1.0 - ux * ux)
    phi = k * GOLDEN_ANGLE
    return np.column_stack([ux, rho * np.cos(phi), rho * np.sin(phi)])


def sample_cube_with_two_ball_cavity(half_side=2.0, n_face=6, n_cap=41, neumann_face=("x", -1),
                                     n_interior=0):
    """Cube [-a, a]^3 minus two unit balls centred at (+-sqrt(2)/2, 0, 0).

    Each face gets a cell-centred ``n_face`` x ``n_face`` grid; each ball gets
    ``n_cap`` Fibonacci points on the part of its sphere not swallowed by the
    other ball.  Total boundary count is 6 n_face^2 + 2 n_cap.
    """
    a = float(half_side)
    if a <= 1.0 + BALL_OFFSET:
        raise GeometryError(f"half_side must exceed {1 + BALL_OFFSET:.4f} so the cavity stays inside")
    if n_face < 1 or n_cap < 1:
        raise GeometryError("node counts must be positive")
    dir_p, dir_n, neu_p, neu_n = [], [], [], []
    axis_index = {"x": 0, "y": 1, "z": 2}
    nf_axis, nf_sign = (None, None) if neumann_face is None else (axis_index[neumann_face[0]], float(neumann_face[1]))
    for axis, sign, p, nrm in _face_grid(a, int(n_face)):
        if axis == nf_axis and sign == nf_sign:
            neu_p.append(p)
            neu_n.append(nrm)
        else:
            dir_p.append(p)
            dir_n.append(nrm)
    u = _cap_points(int(n_cap), BALL_OFFSET)
    c1 = np.array([-BALL_OFFSET, 0.0, 0.0])
    for centre, dirs in ((c1, u), (-c1, u * np.array([-1.0, 1.0, 1.0]))):
        dir_p.append(centre + dirs)
        dir_n.append(-dirs)  # into the cavity
    region = cube_cavity_region(a)
    bp = np.vstack(dir_p + neu_p)
    interior = _spread_interior(region, int(n_interior), bp, resolution=25)
    neu = (np.vstack(neu_p), np.vstack(neu_n)) if neu_p else ()
    return NodeCloud.from_parts((np.vstack(dir_p), np.vstack(dir_n)), neu, interior, region)


def cube_counts_for(total):
    """(n_face, n_cap) reproducing a boundary total 6 n^2 + 2 n_cap."""
    for n in range(int(math.sqrt(total / 6.0)), 0, -1):
        rest = total - 6 * n * n
        if rest >= 2 and rest % 2 == 0 and rest // 2 >= 8:
            return n, rest // 2
    raise GeometryError(f"cannot split {total} into 6 n^2 + 2 m")


# ---------------------------------------------------------------------------
# Calibration geometries
# ---------------------------------------------------------------------------


def ball_region(radius, dim):
    r = float(radius)

    def level(p):
        return np.linalg.norm(np.atleast_2d(p), axis=1) - r

    return Region(level, np.full(dim, -r), np.full(dim, r))


def _sunflower(n, radius, dim):
    if n == 0:
        return np.zeros((0, dim))
    k = np.arange(n) + 0.5
    if dim == 2:
        rho = radius * np.sqrt(k / n)
        phi = k * GOLDEN_ANGLE
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi)])
    rho = radius * np.cbrt(k / n)
    return rho[:, None] * _fibonacci_sphere(n)


def _fibonacci_sphere(n):
    k = np.arange(n)
    z = 1.0 - 2.0 * (k + 0.5) / n
    rho = np.sqrt(1.0 - z * z)
    phi = k * GOLDEN_ANGLE
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def sample_circle(radius=1.0, n_boundary=16, n_interior=0, interior_fraction=0.85):
    """Equi-angular circle nodes (all Dirichlet) plus optional sunflower interior."""
    if radius <= 0:
        raise GeometryError("radius must be positive")
    t = 2 * math.pi * np.arange(n_boundary) / n_boundary
    nrm = np.column_stack([np.cos(t), np.sin(t)])
    pts = radius * nrm
    inner = _sunflower(int(n_interior), interior_fraction * radius, 2)
    return NodeCloud.from_parts((pts, nrm), (), inner, ball_region(radius, 2))


def sample_sphere(radius=1.0, n_boundary=100, n_interior=0, interior_fraction=0.85):
    if radius <= 0:
        raise GeometryError("radius must be positive")
    nrm = _fibonacci_sphere(int(n_boundary))
    pts = radius * nrm
    inner = _sunflower(int(n_interior), interior_fraction * radius, 3)
    return NodeCloud.from_parts((pts, nrm), (), inner, ball_region(radius, 3))


def box_region(lower, upper):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    centre = 0.5 * (lower + upper)
    half = 0.5 * (upper - lower)

    def level(p):
        return np.max(np.abs(np.atleast_2d(p) - centre) - half, axis=1)

    return Region(level, lower, upper)


def sample_grid_box(lower, upper, n, neumann=()):
    """Tensor grid with n points per axis on a box (1-D to 3-D).

    Grid points on the box surface are boundary nodes; a point on several faces
    gets the normalised sum of their normals.  ``neumann`` lists faces as
    ``(axis, sign)`` tuples; a node is Neumann only if every face it touches is.
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    dim = len(lower)
    axes = [np.linspace(lo, hi, n) for lo, hi in zip(lower, upper)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
    tol = 1e-12 * np.max(upper - lower)
    on_lo = np.abs(pts - lower) < tol
    on_hi = np.abs(pts - upper) < tol
    nrm = on_hi.astype(float) - on_lo.astype(float)
    bnd = np.any(on_lo | on_hi, axis=1)
    nrm[bnd] /= np.linalg.norm(nrm[bnd], axis=1)[:, None]
    neu = np.zeros(len(pts), dtype=bool)
    if neumann:
        touched_neu = np.zeros(len(pts), dtype=int)
        for axis, sign in neumann:
            touched_neu += (on_hi if sign > 0 else on_lo)[:, axis]
        touched = np.sum(on_lo | on_hi, axis=1)
        neu = bnd & (touched_neu == touched)
    dmask = bnd & ~neu
    return NodeCloud.from_parts((pts[dmask], nrm[dmask]), (pts[neu], nrm[neu]), pts[~bnd],
                                box_region(lower, upper))


# ---------------------------------------------------------------------------
# Checkpoints and symmetry
# ---------------------------------------------------------------------------


def sample_checkpoints(region: Region, count, seed=0, margin=0.0):
    """Exactly ``count`` uniform random material points (rejection sampling)."""
    rng = np.random.default_rng(seed)
    out = []
    have = 0
    while have < count:
        p = rng.uniform(region.lower, region.upper, size=(max(64, 2 * (count - have)), region.dim))
        p = p[region.level_set(p) < -margin]
        out.append(p)
        have += len(p)
    return np.vstack(out)[:count]


def symmetric_ordering(cloud: NodeCloud, tol=1e-10) -> NodeCloud:
    """Reorder so node i and node N-1-i are point reflections through the centroid.

    Mirror pairs must share their kind and have opposite normals.  Kinds are
    nested (Dirichlet outermost, interior innermost) so the ordering is a
    palindrome in kind, which keeps kernel matrices centrosymmetric.
    """
    pos = cloud.positions
    centroid = pos.mean(axis=0)
    # a centroid at round-off level is taken as exactly zero so mirrors are x -> -x
    centroid[np.abs(centroid) <= tol] = 0.0
    rel = pos - centroid
    from scipy.spatial import cKDTree

    tree = cKDTree(rel)
    d, partner = tree.query(-rel)
    for i in range(len(pos)):
        j = int(partner[i])
        if d[i] > tol or cloud.kinds[i] != cloud.kinds[j]:
            raise SymmetryError(f"node {i} at {pos[i]} has no mirror image")
        if cloud.kinds[i] != NodeKind.INTERIOR and np.linalg.norm(cloud.normals[i] + cloud.normals[j]) > 1e-8:
            raise SymmetryError(f"node {i} normal is not mirrored")
    first, centre = [], []
    seen = set()
    for kind in (NodeKind.DIRICHLET, NodeKind.NEUMANN, NodeKind.INTERIOR):
        for i in range(len(pos)):
            if cloud.kinds[i] != kind or i in seen:
                continue
            j = int(partner[i])
            seen.update((i, j))
            if i == j:
                centre.append(i)
            else:
                # lexicographically smaller point first
                a, b = (i, j) if tuple(rel[i]) < tuple(rel[j]) else (j, i)
                first.append((a, b))
    if len(centre) > 1:
        raise SymmetryError("more than one node sits on the centre of symmetry")
    order = [a for a, _ in first] + centre + [b for _, b in reversed(first)]
    order = np.array(order, dtype=int)
    # exact mirror: rebuild the second half from the first
    newpos = pos[order].copy()
    newnrm = cloud.normals[order].copy()
    n = len(order)
    for k in range(n // 2):
        newpos[n - 1 - k] = 2 * centroid - newpos[k]
        newnrm[n - 1 - k] = -newnrm[k]
    if centre:
        newpos[n // 2] = centroid
    kinds = tuple(cloud.kinds[i] for i in order)
    return NodeCloud(newpos, kinds, newnrm, cloud.region, mirrored=True)
