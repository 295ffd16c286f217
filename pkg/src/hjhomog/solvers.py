"""Time-dependent value functions at scale eps, plus the Hopf-Lax limit.

Four variational solutions share one backward DP kernel:

  * u_eps      -- state constraint on the eps-scaled perforated domain;
  * tilde_ueps -- no constraint (paths roam the whole plane) but the same
                  oscillatory running cost;
  * w_eps      -- state constraint on the defect domain (selected holes
                  filled back in);
  * ubar       -- the homogenized solution via the Hopf-Lax formula with
                  the effective Lagrangian.

The DP runs in fast coordinates X = x / eps, where holes have unit period:
node values are in slow units, the time step is eps * h in slow time, and
step costs carry the scale factor eps (the running cost of a slow path is
eps times that of its fast reparametrisation).  Slice 0 is g evaluated at
the exact node positions, so t = 0 is reproduced bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _dp
from .effective import LbarTable, hbar_metric
from .geometry import GeometryError, PerforatedDomain, build_lattice
from .hamiltonians import HamiltonianModel


@dataclass(frozen=True)
class InitialData:
    """Affine initial data g(x) = vector . x + value ("linear"), or a
    constant ("constant")."""
    kind: str = "linear"
    vector: tuple = (0.0, 0.0)
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "constant"):
            raise ValueError(f"unknown initial data kind {self.kind!r}")

    @property
    def lip(self) -> float:
        if self.kind == "constant":
            return 0.0
        return float(np.hypot(*self.vector))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.broadcast_to(np.float64(self.value), x.shape[:-1]).copy()
        return x[..., 0] * self.vector[0] + x[..., 1] * self.vector[1] + self.value


ZERO = InitialData("constant", value=0.0)


@dataclass
class ValueField:
    """Solution slices on the fast lattice, keyed by slow evaluation time."""
    name: str
    model: HamiltonianModel
    dom: PerforatedDomain
    eps: float
    g: InitialData
    lat: object
    times: tuple
    slices: dict = field(repr=False)

    def value(self, x, t: float) -> float:
        """u(x, t) at slow position x (snapped to the fast lattice within
        h/2) and a retained slow time t.  +inf marks inadmissible points."""
        arr = self._slice(t)
        iy, ix = self.lat.node_at(np.asarray(x, dtype=float) / self.eps)
        return float(arr[iy, ix])

    def _slice(self, t: float) -> np.ndarray:
        for tt, arr in self.slices.items():
            if abs(tt - t) <= 1e-9:
                return arr
        raise KeyError(f"time {t} was not retained (kept: {sorted(self.slices)})")

    def grid_values(self, t: float, radius: float):
        """(positions, values) at all admissible fast nodes with slow
        sup-norm |x| <= radius."""
        arr = self._slice(t)
        xs, ys = self.lat.axes()
        r = radius / self.eps + 1e-9
        jj = np.nonzero(np.abs(xs) <= r)[0]
        ii = np.nonzero(np.abs(ys) <= r)[0]
        sub = arr[np.ix_(ii, jj)]
        adm = self.lat.node_adm[np.ix_(ii, jj)]
        X, Y = np.meshgrid(xs[jj], ys[ii])
        pts = self.eps * np.stack([X[adm], Y[adm]], axis=-1)
        return pts, sub[adm]

    def to_csv(self, path, times=None) -> None:
        """Write slices as rows t,x,y,value in slow coordinates, admissible
        nodes with a finite value only.  times selects a subset of the
        retained snapshots (default: all of them)."""
        times = self.times if times is None else tuple(times)
        xs, ys = self.lat.axes()
        with open(path, "w") as f:
            f.write("t,x,y,value\n")
            for t in times:
                arr = self._slice(t)
                ii, jj = np.nonzero(self.lat.node_adm & np.isfinite(arr))
                for i, j in zip(ii, jj):
                    f.write("%.12g,%.12g,%.12g,%.12g\n"
                            % (t, self.eps * xs[j], self.eps * ys[i],
                               arr[i, j]))


def _steps_for_times(eps: float, dt: float, times) -> dict:
    dt_slow = eps * dt
    out = {}
    for t in times:
        s = t / dt_slow
        if abs(s - round(s)) > 1e-9:
            raise ValueError(f"time {t} is not a multiple of eps*dt = {dt_slow}")
        out[int(round(s))] = float(t)
    return out


def _solve(name, model, dom, eps, g, times, h, M0, eval_radius, cells,
           dt=None):
    if M0 is None:
        M0 = model.M0
    T = max(times)
    if cells is None:
        half = eval_radius + M0 * T + eps
        n = int(math.ceil(half / eps))
        cells = (-n, n, -n, n)
    lat = build_lattice(dom, h, cells, dt=dt, M0=M0)
    step_to_time = _steps_for_times(eps, lat.dt, times)
    n_steps = max(step_to_time)
    xs, ys = lat.axes()
    X, Y = np.meshgrid(xs, ys)
    init = g(eps * np.stack([X, Y], axis=-1))
    slices, _ = _dp.run_dp(lat, model, init, n_steps,
                           keep=step_to_time.keys(), cost_scale=eps)
    by_time = {0.0: slices[0]}
    for s, t in step_to_time.items():
        by_time[t] = slices[s]
    return ValueField(name, model, dom, eps, g, lat, tuple(sorted(by_time)), by_time)


def solve_ueps(model: HamiltonianModel, dom: PerforatedDomain, eps: float,
               g: InitialData, times, h: float, M0: float | None = None,
               eval_radius: float = 0.5, cells=None,
               dt: float | None = None) -> ValueField:
    """State-constrained value function on the eps-scaled perforated domain."""
    if dom.has_defects:
        raise GeometryError("u_eps lives on the defect-free domain; use solve_weps")
    return _solve("u_eps", model, dom, eps, g, tuple(times), h, M0,
                  eval_radius, cells, dt)


def solve_tilde_ueps(model: HamiltonianModel, dom: PerforatedDomain, eps: float,
                     g: InitialData, times, h: float, M0: float | None = None,
                     eval_radius: float = 0.5, cells=None,
                     dt: float | None = None) -> ValueField:
    """Unconstrained value function: same oscillatory cost, no holes removed
    from the state space."""
    free = PerforatedDomain(hole=None, eta=dom.eta)
    return _solve("tilde_u_eps", model, free, eps, g, tuple(times), h, M0,
                  eval_radius, cells, dt)


def solve_weps(model: HamiltonianModel, dom: PerforatedDomain, eps: float,
               g: InitialData, times, h: float, M0: float | None = None,
               eval_radius: float = 0.5, cells=None,
               dt: float | None = None) -> ValueField:
    """State-constrained value function on the defect domain."""
    if not dom.has_defects:
        raise GeometryError("w_eps needs a domain with defects")
    return _solve("w_eps", model, dom, eps, g, tuple(times), h, M0,
                  eval_radius, cells, dt)


def hopf_lax(table: LbarTable, g: InitialData, x, t: float) -> float:
    """ubar(x, t) = min_v [ t Lbar(v) + g(x - t v) ] over the tabulated
    velocity grid (exact linear fast path for affine g)."""
    x = np.asarray(x, dtype=float)
    if t == 0.0:
        return float(g(x))
    if t < 0:
        raise ValueError("negative time")
    if g.kind == "linear":
        hbar, _ = hbar_metric(table, g.vector)
        return float(g(x) - t * hbar)
    ax = table.v_axis
    vx, vy = np.meshgrid(ax, ax)
    cand = t * table.value + g(x - t * np.stack([vx, vy], axis=-1))
    return float(np.min(cand[np.isfinite(table.value)]))


def hopf_lax_argmin(table: LbarTable, g: InitialData, x, t: float):
    """Minimising velocity of the Hopf-Lax formula (ties resolved toward
    the smallest |v|, then lexicographically)."""
    x = np.asarray(x, dtype=float)
    ax = table.v_axis
    vx, vy = np.meshgrid(ax, ax)
    cand = t * table.value + g(x - t * np.stack([vx, vy], axis=-1))
    cand = np.where(np.isfinite(table.value), cand, np.inf)
    best = np.min(cand)
    mask = cand <= best + 1e-12 * (1.0 + abs(best))
    iy, jx = np.nonzero(mask)
    vs = np.stack([ax[jx], ax[iy]], axis=-1)
    order = np.lexsort((vs[:, 1], vs[:, 0], np.hypot(vs[:, 0], vs[:, 1])))
    return vs[order[0]]


def hopf_lax_values(table: LbarTable, g: InitialData, xs, t: float) -> np.ndarray:
    """Vectorised ubar over an (n, 2) array of positions."""
    xs = np.asarray(xs, dtype=float)
    if g.kind == "linear" or t == 0.0:
        if t == 0.0:
            return g(xs)
        hbar, _ = hbar_metric(table, g.vector)
        return g(xs) - t * hbar
    ax = table.v_axis
    out = np.full(xs.shape[:-1], np.inf)
    for iy in range(len(ax)):
        for jx in range(len(ax)):
            if not np.isfinite(table.value[iy, jx]):
                continue
            v = np.array([ax[jx], ax[iy]])
            out = np.minimum(out, t * table.value[iy, jx] + g(xs - t * v))
    return out
