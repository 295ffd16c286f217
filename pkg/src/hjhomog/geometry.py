"""Periodically perforated planar geometry.

The reference cell is Y = [-1/2, 1/2)^2 and hole centers sit on the integer
lattice Z^2.  A domain keeps the closure of the plane minus the (optionally
dilution-scaled) open holes; a defect set I lists cells whose hole is removed,
i.e. filled back in.  Everything is 2-D.

Space-time lattices are uniform grids aligned with the cell structure
(spacing h with 1/h an even integer, so nodes hit both cell edges and cell
centers exactly), carrying a time step dt and a speed cap M0 with
dt * M0 >= 2 h so the one-step neighborhood spans at least two nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# classify() codes
INTERIOR = 0
BOUNDARY = 1
EXTERIOR = 2  # strictly inside a retained hole

# strictly-inside tolerance: a point with inset <= _INSIDE_TOL counts as
# boundary/outside, so nodes and path samples exactly on a hole boundary are
# admissible (closure semantics).
_INSIDE_TOL = 1e-9


class GeometryError(ValueError):
    pass


class LatticeResolutionError(GeometryError):
    """Lattice too coarse to resolve the holes it is asked to carry."""


@dataclass(frozen=True)
class HoleShape:
    """Hole shape centered at the cell center: disc (size = radius) or
    square (size = half width).  Must sit strictly inside the open cell."""

    kind: str  # "disc" | "square"
    size: float

    def __post_init__(self):
        if self.kind not in ("disc", "square"):
            raise GeometryError(f"unknown hole kind {self.kind!r}")
        if not 0.0 < self.size < 0.5:
            raise GeometryError("hole must sit strictly inside the unit cell")


def hole_inset(hole: HoleShape, eta: float, pts) -> np.ndarray:
    """Penetration depth of points into the eta-scaled periodic holes.

    Positive strictly inside a hole, zero on its boundary, negative outside.
    `pts` has shape (..., 2); holes repeat at every integer cell center.
    """
    pts = np.asarray(pts, dtype=float)
    local = pts - np.round(pts)
    r = eta * hole.size
    if hole.kind == "disc":
        return r - np.hypot(local[..., 0], local[..., 1])
    return r - np.maximum(np.abs(local[..., 0]), np.abs(local[..., 1]))


def hole_boundary_distance(hole: HoleShape, eta: float, pts) -> np.ndarray:
    """Euclidean distance from points to the boundary of the nearest
    (eta-scaled) hole, ignoring defects."""
    pts = np.asarray(pts, dtype=float)
    local = pts - np.round(pts)
    r = eta * hole.size
    if hole.kind == "disc":
        return np.abs(np.hypot(local[..., 0], local[..., 1]) - r)
    ax = np.abs(local[..., 0]) - r
    ay = np.abs(local[..., 1]) - r
    outside = np.hypot(np.maximum(ax, 0.0), np.maximum(ay, 0.0))
    inside = -np.maximum(ax, ay)  # positive when inside
    return np.where((ax > 0) | (ay > 0), outside, inside)


@dataclass(frozen=True)
class DefectSpec:
    """Set I of cells whose hole is removed (filled).

    Kinds: "none", "singleton0" (I = {0}), "line_e1" (I = {m e1 : m >= 0}),
    "squares_e1" (I = {m^2 e1 : m >= 1}), "explicit" (given cell list).
    """

    kind: str = "none"
    cells: tuple = ()

    def __post_init__(self):
        if self.kind not in ("none", "singleton0", "line_e1", "squares_e1", "explicit"):
            raise GeometryError(f"unknown defect kind {self.kind!r}")
        if self.kind == "explicit" and not self.cells:
            raise GeometryError("explicit defect spec needs a nonempty cell list")

    def contains_cell(self, mx: int, my: int) -> bool:
        if self.kind == "none":
            return False
        if self.kind == "singleton0":
            return mx == 0 and my == 0
        if self.kind == "line_e1":
            return my == 0 and mx >= 0
        if self.kind == "squares_e1":
            if my != 0 or mx < 1:
                return False
            s = math.isqrt(mx)
            return s * s == mx
        return (mx, my) in set(map(tuple, self.cells))


NO_DEFECTS = DefectSpec("none")


def defect_count(defects: DefectSpec, k: int):
    """(number of defect cells inside [-k,k]^2, that count divided by k).

    The second entry is the density reading of the defect modulus at scale k.
    """
    if k <= 0:
        raise GeometryError("k must be a positive integer")
    if defects.kind == "none":
        n = 0
    elif defects.kind == "singleton0":
        n = 1
    elif defects.kind == "line_e1":
        n = k + 1
    elif defects.kind == "squares_e1":
        n = math.isqrt(k)
    else:
        n = sum(1 for (mx, my) in defects.cells if abs(mx) <= k and abs(my) <= k)
    return n, n / k


@dataclass(frozen=True)
class PerforatedDomain:
    """Plane minus eta-scaled holes at integer centers, minus any defect
    cells (whose holes are filled back in).  hole=None means the free plane."""

    hole: HoleShape | None = None
    eta: float = 1.0
    defects: DefectSpec = NO_DEFECTS

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise GeometryError("eta must lie in (0, 1]")

    @property
    def is_free(self) -> bool:
        return self.hole is None

    @property
    def has_defects(self) -> bool:
        return self.defects.kind != "none"

    def without_defects(self) -> "PerforatedDomain":
        return PerforatedDomain(self.hole, self.eta)


def contains(dom: PerforatedDomain, pts) -> np.ndarray:
    """Closure membership: True unless strictly inside a retained hole."""
    pts = np.asarray(pts, dtype=float)
    if dom.is_free:
        return np.ones(pts.shape[:-1], dtype=bool)
    inside = hole_inset(dom.hole, dom.eta, pts) > _INSIDE_TOL
    if dom.has_defects:
        cells = np.round(pts).astype(np.int64)
        flat = cells.reshape(-1, 2)
        filled = np.fromiter(
            (dom.defects.contains_cell(int(cx), int(cy)) for cx, cy in flat),
            dtype=bool, count=flat.shape[0],
        ).reshape(inside.shape)
        inside &= ~filled
    return ~inside


def classify(dom: PerforatedDomain, pts, h: float):
    """Classify points against the domain with boundary tolerance h/2.

    Returns (codes, hole_ids): codes in {INTERIOR, BOUNDARY, EXTERIOR};
    hole_ids holds the (mx, my) cell of the relevant hole for BOUNDARY and
    EXTERIOR points and (0, 0) otherwise.
    """
    pts = np.asarray(pts, dtype=float)
    n = pts.reshape(-1, 2).shape[0]
    codes = np.full(pts.shape[:-1], INTERIOR, dtype=np.int64)
    hole_ids = np.zeros(pts.shape[:-1] + (2,), dtype=np.int64)
    if dom.is_free:
        return codes, hole_ids
    inset = hole_inset(dom.hole, dom.eta, pts)
    near = hole_boundary_distance(dom.hole, dom.eta, pts) <= h / 2 + 1e-12
    cells = np.round(pts).astype(np.int64)
    retained = np.ones(pts.shape[:-1], dtype=bool)
    if dom.has_defects:
        flat = cells.reshape(-1, 2)
        filled = np.fromiter(
            (dom.defects.contains_cell(int(cx), int(cy)) for cx, cy in flat),
            dtype=bool, count=n,
        ).reshape(retained.shape)
        retained = ~filled
    codes[retained & near] = BOUNDARY
    codes[retained & (inset > _INSIDE_TOL) & ~near] = EXTERIOR
    mark = codes != INTERIOR
    hole_ids[mark] = cells[mark]
    return codes, hole_ids


@dataclass
class SpaceTimeLattice:
    """Uniform space-time grid over an integer rectangle of cells.

    Nodes are ordered row-major: index = iy * nx + ix, position
    (lo_x + ix h, lo_y + iy h), with lo at the half-integer lower corner of
    the cell bbox.  node_adm marks nodes in the domain closure (defect cells
    count as filled); node_anchor marks admissible nodes within h/2 of the
    full periodic hole pattern's boundary (defect-blind), which is the anchor
    set used by the boundary-anchored costs.
    """

    dom: PerforatedDomain
    h: float
    dt: float
    M0: float
    cells: tuple  # (mx_lo, mx_hi, my_lo, my_hi) inclusive cell range
    lo: tuple = field(init=False)
    shape: tuple = field(init=False)  # (ny, nx)
    nc: int = field(init=False)  # nodes per unit cell, 1/h
    node_adm: np.ndarray = field(init=False, repr=False)
    node_anchor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mx_lo, mx_hi, my_lo, my_hi = self.cells
        self.lo = (mx_lo - 0.5, my_lo - 0.5)
        nx = (mx_hi - mx_lo + 1) * self.nc_from_h() + 1
        ny = (my_hi - my_lo + 1) * self.nc_from_h() + 1
        self.nc = self.nc_from_h()
        self.shape = (ny, nx)
        xs, ys = self.axes()
        px, py = np.meshgrid(xs, ys)  # shape (ny, nx)
        pts = np.stack([px, py], axis=-1)
        self.node_adm = contains(self.dom, pts)
        if self.dom.is_free:
            self.node_anchor = np.zeros(self.shape, dtype=bool)
        else:
            near = hole_boundary_distance(self.dom.hole, self.dom.eta, pts) <= self.h / 2 + 1e-12
            self.node_anchor = near & self.node_adm

    def nc_from_h(self) -> int:
        return int(round(1.0 / self.h))

    def axes(self):
        ny, nx = ((self.cells[3] - self.cells[2] + 1) * self.nc_from_h() + 1,
                  (self.cells[1] - self.cells[0] + 1) * self.nc_from_h() + 1)
        xs = self.lo[0] + self.h * np.arange(nx)
        ys = self.lo[1] + self.h * np.arange(ny)
        return xs, ys

    def positions(self):
        xs, ys = self.axes()
        px, py = np.meshgrid(xs, ys)
        return np.stack([px, py], axis=-1)

    def node_at(self, x, tol=None):
        """Nearest node index (iy, ix) to point x; error if farther than tol
        (default h/2 + eps) or outside the bbox."""
        if tol is None:
            tol = self.h / 2 + 1e-9
        x = np.asarray(x, dtype=float)
        ix = int(round((x[0] - self.lo[0]) / self.h))
        iy = int(round((x[1] - self.lo[1]) / self.h))
        ny, nx = self.shape
        if not (0 <= ix < nx and 0 <= iy < ny):
            raise GeometryError(f"point {x} outside lattice bbox")
        pos = (self.lo[0] + ix * self.h, self.lo[1] + iy * self.h)
        if max(abs(pos[0] - x[0]), abs(pos[1] - x[1])) > tol:
            raise GeometryError(f"point {x} does not sit on the lattice")
        return iy, ix

    def position_of(self, iy, ix):
        return np.array([self.lo[0] + ix * self.h, self.lo[1] + iy * self.h])

    def steps_for(self, t: float) -> int:
        n = int(round(t / self.dt))
        if abs(n * self.dt - t) > 1e-9:
            raise GeometryError(f"t={t} is not a multiple of dt={self.dt}")
        if n < 0:
            raise GeometryError("t must be nonnegative")
        return n

    def to_csv(self, path):
        """Write nodes as CSV rows x,y,admissible,boundary (row-major)."""
        xs, ys = self.axes()
        with open(path, "w") as f:
            f.write("x,y,admissible,boundary\n")
            for iy in range(self.shape[0]):
                for ix in range(self.shape[1]):
                    f.write("%.10g,%.10g,%d,%d\n" % (
                        xs[ix], ys[iy],
                        int(self.node_adm[iy, ix]),
                        int(self.node_anchor[iy, ix])))


def build_lattice(dom: PerforatedDomain, h: float, cells, dt: float | None = None,
                  M0: float = 2.6) -> SpaceTimeLattice:
    """Build a space-time lattice over the inclusive cell rectangle
    `cells = (mx_lo, mx_hi, my_lo, my_hi)`.

    Requires 1/h to be an even integer (nodes then hit cell edges and centers
    exactly), h fine enough to resolve the scaled holes (h <= eta*size/4),
    and dt*M0 >= 2h.  dt defaults to h.
    """
    nc = int(round(1.0 / h))
    if abs(nc * h - 1.0) > 1e-12 or nc % 2 != 0:
        raise LatticeResolutionError(f"1/h must be an even integer, got h={h}")
    if dt is None:
        dt = h
    if dt * M0 < 2 * h - 1e-12:
        raise LatticeResolutionError(f"dt*M0={dt*M0:g} < 2h={2*h:g}")
    if dom.hole is not None and h > dom.eta * dom.hole.size / 4 + 1e-12:
        raise LatticeResolutionError(
            f"unresolved hole: h={h:g} exceeds a quarter of the hole feature "
            f"{dom.eta * dom.hole.size:g}")
    mx_lo, mx_hi, my_lo, my_hi = (int(c) for c in cells)
    if mx_hi < mx_lo or my_hi < my_lo:
        raise GeometryError("empty cell bbox")
    return SpaceTimeLattice(dom, h, dt, M0, (mx_lo, mx_hi, my_lo, my_hi))


def cells_around(points, margin: float):
    """Smallest integer cell rectangle containing all points with the given
    margin (in cell units) on every side."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    mx_lo = math.floor((pts[:, 0].min() - margin) + 0.5)
    mx_hi = math.ceil((pts[:, 0].max() + margin) - 0.5)
    my_lo = math.floor((pts[:, 1].min() - margin) + 0.5)
    my_hi = math.ceil((pts[:, 1].max() + margin) - 0.5)
    return (mx_lo, max(mx_hi, mx_lo), my_lo, max(my_hi, my_lo))


def boundary_detour_ratio(dom: PerforatedDomain, n_pairs: int = 256, seed: int = 0) -> float:
    """Max over sampled boundary point pairs of (geodesic distance along the
    hole boundary) / (Euclidean distance).

    This is the constant relating boundary detours to straight chords; the
    extremal antipodal/opposite configurations are always included, so for a
    disc the exact value pi/2 is returned regardless of the sample.
    """
    if dom.is_free:
        raise GeometryError("free domain has no hole boundary")
    rng = np.random.default_rng(seed)
    r = dom.eta * dom.hole.size
    best = 0.0
    if dom.hole.kind == "disc":
        th = rng.uniform(0.0, 2 * math.pi, size=(n_pairs, 2))
        th = np.vstack([th, [[0.0, math.pi]]])  # antipodal extremum
        for a, b in th:
            d = abs(a - b) % (2 * math.pi)
            d = min(d, 2 * math.pi - d)
            if d < 1e-12:
                continue
            arc = r * d
            chord = 2 * r * math.sin(d / 2)
            best = max(best, arc / chord)
        return best
    # square: parametrize by perimeter coordinate
    P = 8 * r
    ss = rng.uniform(0.0, P, size=(n_pairs, 2))
    ss = np.vstack([ss, [[r, r + P / 2]]])  # opposite side midpoints

    def xy(s):
        s = s % P
        k, u = divmod(s, 2 * r)
        u -= r
        return [(u, -r), (r, u), (-u, r), (-r, -u)][int(k)]

    for s1, s2 in ss:
        d = abs(s1 - s2) % P
        d = min(d, P - d)
        if d < 1e-12:
            continue
        p1, p2 = xy(s1), xy(s2)
        chord = math.hypot(p1[0] - p2[0], p1[1] - p2[1])
        if chord < 1e-12:
            continue
        best = max(best, d / chord)
    return best
