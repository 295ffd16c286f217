"""Metric costs on the perforated plane.

Three variants of the optimal-control distance

    m(t, x, y)   = inf { int_0^t L(z(s), z'(s)) ds : z admissible, z(0)=x, z(t)=y }

over paths constrained to the closed perforated domain:

  * m      -- point-to-point;
  * mstar  -- endpoints relaxed to hole-boundary anchor points within the
              closed unit cell around x resp. y (this version is
              Z^2-periodic in (x, y) jointly);
  * md     -- same anchors as mstar (hole boundaries of the unperforated
              pattern) but paths admissible in the defect domain, where the
              defect cells have their holes filled back in.

All are computed by semi-Lagrangian dynamic programming on a space-time
lattice: one backward sweep per time step, step speeds capped at M0.  A
single multi-source run from the anchors of x yields m*(t, x, .) for every
target at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _dp
from .geometry import GeometryError, PerforatedDomain, SpaceTimeLattice, build_lattice, cells_around
from .hamiltonians import HamiltonianModel

KINDS = ("m", "mstar", "md")


class NoAnchorError(GeometryError):
    """No hole-boundary lattice node lies within the unit cell of a point."""


@dataclass
class MetricField:
    """m(t, x, .) (one of the three kinds) on a lattice, plus the DP slices
    needed to evaluate targets and trace optimal paths."""
    kind: str
    model: HamiltonianModel
    lat: SpaceTimeLattice
    x: np.ndarray
    t: float
    n_steps: int
    slices: dict
    tables: tuple

    @property
    def final(self) -> np.ndarray:
        return self.slices[self.n_steps]

    def to_csv(self, path) -> None:
        """Write the retained slices as rows t,x,y,value (admissible nodes
        with a finite value; +inf marks unreachable nodes and is skipped)."""
        xs, ys = self.lat.axes()
        with open(path, "w") as f:
            f.write("t,x,y,value\n")
            for step in sorted(self.slices):
                arr = self.slices[step]
                t = step * self.lat.dt
                ii, jj = np.nonzero(self.lat.node_adm & np.isfinite(arr))
                for i, j in zip(ii, jj):
                    f.write("%.12g,%.12g,%.12g,%.12g\n"
                            % (t, xs[j], ys[i], arr[i, j]))


def anchor_nodes(lat: SpaceTimeLattice, x, tol: float = 1e-9) -> np.ndarray:
    """Indices (iy, ix) of anchor nodes (hole-boundary, defect-blind) within
    the closed unit cell centred at x."""
    x = np.asarray(x, dtype=float)
    xs, ys = lat.axes()
    jj = np.nonzero(np.abs(xs - x[0]) <= 0.5 + tol)[0]
    ii = np.nonzero(np.abs(ys - x[1]) <= 0.5 + tol)[0]
    if len(ii) == 0 or len(jj) == 0:
        return np.zeros((0, 2), dtype=np.int64)
    sub = lat.node_anchor[np.ix_(ii, jj)]
    ai, aj = np.nonzero(sub)
    return np.stack([ii[ai], jj[aj]], axis=1)


def _cells_for_reach(x, t, M0, extra: float = 0.5):
    x = np.asarray(x, dtype=float)
    r = 0.5 + M0 * t + extra
    pts = np.array([x - r, x + r])
    return cells_around(pts, margin=0.0)


def metric_field(model: HamiltonianModel, dom: PerforatedDomain, x, t: float,
                 h: float, kind: str = "m", M0: float | None = None,
                 cells=None, keep="final") -> MetricField:
    """Dynamic-programming field for m / m* / m^d from source x over time t.

    The lattice spans the full reachable box (half-width 0.5 + M0 t plus a
    margin), so no admissible path is lost to truncation.  keep="all"
    retains every time slice (needed by optimal_path).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown metric kind {kind!r}")
    if kind == "md" and not dom.has_defects:
        raise GeometryError("metric kind 'md' needs a domain with defects")
    if kind != "md" and dom.has_defects:
        raise GeometryError(f"metric kind {kind!r} is defined on the defect-free domain")
    if M0 is None:
        M0 = model.M0
    if cells is None:
        cells = _cells_for_reach(x, t, M0)
    lat = build_lattice(dom, h, cells, M0=M0)
    n_steps = lat.steps_for(t)
    init = np.full(lat.shape, _dp.INF)
    if kind == "m":
        iy, ix = lat.node_at(x)
        if not lat.node_adm[iy, ix]:
            raise GeometryError(f"source point {tuple(np.asarray(x, float))} is not admissible")
        init[iy, ix] = 0.0
    else:
        anchors = anchor_nodes(lat, x)
        anchors = anchors[lat.node_adm[anchors[:, 0], anchors[:, 1]]] if len(anchors) else anchors
        if len(anchors) == 0:
            raise NoAnchorError(f"no admissible anchor node in the unit cell of {x}")
        init[anchors[:, 0], anchors[:, 1]] = 0.0
    slices, tables = _dp.run_dp(lat, model, init, n_steps, keep=keep)
    return MetricField(kind, model, lat, np.asarray(x, dtype=float), t, n_steps,
                       slices, tables)


def metric_value(field: MetricField, y) -> float:
    """Evaluate the field at target y (snap tolerance h/2 for kind 'm';
    min over the anchor nodes of y's unit cell otherwise).  +inf means no
    admissible path."""
    if field.kind == "m":
        iy, ix = field.lat.node_at(y)
        return float(field.final[iy, ix])
    anchors = anchor_nodes(field.lat, y)
    if len(anchors) == 0:
        raise NoAnchorError(f"no anchor node in the unit cell of {y}")
    return float(np.min(field.final[anchors[:, 0], anchors[:, 1]]))


def metric_values(field: MetricField, ys) -> np.ndarray:
    ys = np.asarray(ys, dtype=float)
    return np.array([metric_value(field, y) for y in ys.reshape(-1, 2)]
                    ).reshape(ys.shape[:-1])


def optimal_path(field: MetricField, y) -> np.ndarray:
    """Positions ((n_steps+1), 2) of a cost-minimising discrete path to y.

    Requires the field to have been built with keep="all".  Ties are broken
    toward the smallest row-major node index at each backward step.
    """
    if field.n_steps > 0 and 1 not in field.slices:
        raise ValueError("optimal_path needs a field built with keep='all'")
    lat = field.lat
    if field.kind == "m":
        end = lat.node_at(y)
    else:
        anchors = anchor_nodes(lat, y)
        if len(anchors) == 0:
            raise NoAnchorError(f"no anchor node in the unit cell of {y}")
        vals = field.final[anchors[:, 0], anchors[:, 1]]
        best = np.min(vals)
        flat = anchors[:, 0] * lat.shape[1] + anchors[:, 1]
        end_flat = int(np.min(flat[vals == best]))
        end = (end_flat // lat.shape[1], end_flat % lat.shape[1])
    nodes = _dp.backtrace(lat, field.slices, field.tables, end, field.n_steps)
    out = np.empty((len(nodes), 2))
    for k, (i, j) in enumerate(nodes):
        out[k] = lat.position_of(i, j)
    return out


def path_cost(field: MetricField, path: np.ndarray) -> float:
    """Accumulated step cost of a node path (consistency check helper)."""
    lat, model = field.lat, field.model
    offs, cost, adm = field.tables
    total = 0.0
    for k in range(len(path) - 1):
        d = (path[k + 1] - path[k]) / lat.h
        dx, dy = int(round(d[0])), int(round(d[1]))
        o = np.nonzero((offs[:, 0] == dy) & (offs[:, 1] == dx))[0]
        if len(o) != 1:
            raise ValueError("path step exceeds the speed cap")
        i, j = lat.node_at(path[k + 1])
        total += cost[int(o[0]), i % lat.nc, j % lat.nc]
    return total


def path_to_csv(field: MetricField, path: np.ndarray, file) -> None:
    """Write a traced path as rows s,x,y with s the elapsed time k*dt."""
    with open(file, "w") as f:
        f.write("s,x,y\n")
        for k, (x, y) in enumerate(np.asarray(path, dtype=float)):
            f.write("%.12g,%.12g,%.12g\n" % (k * field.lat.dt, x, y))


def shifted_pair_gap(model: HamiltonianModel, dom: PerforatedDomain,
                     x, y, t: float, h: float, shift, M0=None) -> float:
    """|m*(t, x+k, y+k) - m*(t, x, y)| for an integer shift k: the joint
    periodicity defect, zero up to rounding."""
    k = np.asarray(shift, dtype=float)
    if not np.allclose(k, np.round(k)):
        raise ValueError("shift must be an integer vector")
    f0 = metric_field(model, dom, x, t, h, kind="mstar", M0=M0)
    f1 = metric_field(model, dom, np.asarray(x, float) + k, t, h, kind="mstar", M0=M0)
    v0 = metric_value(f0, y)
    v1 = metric_value(f1, np.asarray(y, float) + k)
    return abs(v1 - v0)
