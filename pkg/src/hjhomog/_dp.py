"""Shared space-time dynamic-programming engine.

One backward-cost sweep per time step: for every lattice node z,

    u_{s+1}(z) = min over offsets D with |D| h <= M0 dt of
                 u_s(z - D) + dt * L((z - D/2) , D h / dt)

where a step is admissible when its four interior sample points avoid the
open holes (closure semantics: samples exactly on a hole boundary pass).
Step costs and hole blocking are Z^2-periodic, so both are precomputed as
(n_offsets, nc, nc) tiles indexed by the target node's position within its
cell; defect cells (holes filled back in) are the only aperiodic feature and
are handled by an in-kernel recheck of the rare tile-blocked steps.

The same kernel serves the metric costs, the value-function solvers (with a
cost scale eps attached to the tiles) and, in its periodic wrap-around
variant, the discounted cell problem.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from . import hamiltonians as ham
from .geometry import SpaceTimeLattice, hole_inset

INF = np.inf

# interior sample fractions along each step segment
_SEG_FRACS = (0.2, 0.4, 0.6, 0.8)
_INSIDE_TOL = 1e-9

_DEFECT_CODE = {"none": 0, "singleton0": 1, "line_e1": 2, "squares_e1": 3, "explicit": 4}
_HOLE_CODE = {"disc": 0, "square": 1}


def step_offsets(M0: float, dt: float, h: float) -> np.ndarray:
    """All integer node offsets (dy, dx) with |(dx, dy)| h <= M0 dt, in
    row-major order (deterministic tie-breaking follows from this order)."""
    r = M0 * dt / h
    n = int(math.floor(r + 1e-12))
    offs = [(dy, dx)
            for dy in range(-n, n + 1)
            for dx in range(-n, n + 1)
            if dy * dy + dx * dx <= r * r + 1e-9]
    return np.array(offs, dtype=np.int64)


def build_tables(lat: SpaceTimeLattice, model: ham.HamiltonianModel,
                 cost_scale: float = 1.0):
    """Periodic per-offset tables for a lattice/model pair.

    Returns (offsets, cost_tiles, adm_tiles): cost_tiles[o, ti, tj] is the
    step cost cost_scale * dt * L(midpoint, v_o) for a step of offset o
    arriving at a node with cell-local indices (ti, tj); adm_tiles is 1
    where all four interior samples clear the periodic holes.
    """
    offs = step_offsets(lat.M0, lat.dt, lat.h)
    nc, h, dt = lat.nc, lat.h, lat.dt
    # target-local coordinates: index ti -> y = -1/2 + ti*h, tj -> x likewise
    loc = -0.5 + h * np.arange(nc)
    lx, ly = np.meshgrid(loc, loc)  # (nc, nc), [i, j] = (y_i, x_j)
    target = np.stack([lx, ly], axis=-1)
    n_off = offs.shape[0]
    cost = np.empty((n_off, nc, nc), dtype=np.float64)
    adm = np.ones((n_off, nc, nc), dtype=np.uint8)
    dom = lat.dom
    for o in range(n_off):
        dy, dx = offs[o]
        step = np.array([dx * h, dy * h])
        v = step / dt
        mid = target - step / 2.0
        cost[o] = cost_scale * dt * ham.eval_L(model, mid, v)
        if dom.hole is not None and (dx != 0 or dy != 0):
            ok = np.ones((nc, nc), dtype=bool)
            for f in _SEG_FRACS:
                q = target - (1.0 - f) * step
                ok &= hole_inset(dom.hole, dom.eta, q) <= _INSIDE_TOL
            adm[o] = ok.astype(np.uint8)
    return offs, cost, adm


def defect_params(lat: SpaceTimeLattice):
    """Scalar/array arguments describing holes and defects for the kernels."""
    dom = lat.dom
    if dom.hole is None:
        return (0, 0, 0.0, 0, np.zeros((0, 2), dtype=np.int64))
    has_defects = 1 if dom.has_defects else 0
    hk = _HOLE_CODE[dom.hole.kind]
    hr = dom.eta * dom.hole.size
    dk = _DEFECT_CODE[dom.defects.kind]
    cells = (np.array(sorted(map(tuple, dom.defects.cells)), dtype=np.int64).reshape(-1, 2)
             if dom.defects.kind == "explicit" else np.zeros((0, 2), dtype=np.int64))
    return (has_defects, hk, hr, dk, cells)


@njit(cache=True)
def _in_defect(mx, my, dk, cells):
    if dk == 1:
        return mx == 0 and my == 0
    if dk == 2:
        return my == 0 and mx >= 0
    if dk == 3:
        if my != 0 or mx < 1:
            return False
        s = int(math.sqrt(mx) + 0.5)
        return s * s == mx
    if dk == 4:
        for k in range(cells.shape[0]):
            if cells[k, 0] == mx and cells[k, 1] == my:
                return True
    return False


@njit(cache=True)
def _segment_clear(x, y, dxh, dyh, hk, hr, dk, cells):
    """Defect-aware recheck of a tile-blocked step arriving at (x, y)."""
    for k in range(4):
        c = 1.0 - 0.2 * (k + 1)
        qx = x - c * dxh
        qy = y - c * dyh
        mx = int(math.floor(qx + 0.5))
        my = int(math.floor(qy + 0.5))
        lx = qx - mx
        ly = qy - my
        if hk == 0:
            inside = lx * lx + ly * ly < (hr - _INSIDE_TOL) * (hr - _INSIDE_TOL)
        else:
            inside = abs(lx) < hr - _INSIDE_TOL and abs(ly) < hr - _INSIDE_TOL
        if inside and not _in_defect(mx, my, dk, cells):
            return False
    return True


@njit(parallel=True, cache=True)
def _dp_sweep(val, out, node_adm, offs, cost, adm,
              has_defects, hk, hr, dk, cells, lo_x, lo_y, h, nc):
    ny, nx = val.shape
    n_off = offs.shape[0]
    for i in prange(ny):
        ti = i % nc
        for j in range(nx):
            if not node_adm[i, j]:
                out[i, j] = INF
                continue
            tj = j % nc
            best = INF
            for o in range(n_off):
                dy = offs[o, 0]
                dx = offs[o, 1]
                ii = i - dy
                jj = j - dx
                if ii < 0 or ii >= ny or jj < 0 or jj >= nx:
                    continue
                v = val[ii, jj]
                if v == INF:
                    continue
                if adm[o, ti, tj] == 0:
                    if has_defects == 0:
                        continue
                    x = lo_x + j * h
                    y = lo_y + i * h
                    if not _segment_clear(x, y, dx * h, dy * h, hk, hr, dk, cells):
                        continue
                c = v + cost[o, ti, tj]
                if c < best:
                    best = c
            out[i, j] = best
    return out


def sweep(lat: SpaceTimeLattice, val, offs, cost, adm):
    """One DP time step on the lattice; returns a fresh array."""
    out = np.empty_like(val)
    hd, hk, hr, dk, cells = defect_params(lat)
    _dp_sweep(val, out, lat.node_adm, offs, cost, adm,
              hd, hk, hr, dk, cells, lat.lo[0], lat.lo[1], lat.h, lat.nc)
    return out


def run_dp(lat: SpaceTimeLattice, model, init: np.ndarray, n_steps: int,
           keep="all", cost_scale: float = 1.0, tables=None):
    """Run n_steps DP sweeps from the initial slice.

    keep: "all" (list of every slice), "final" (first and last only), or an
    iterable of step indices to retain.  Returns (slices, tables) where
    slices is a dict step -> array (step 0 always included).
    """
    if tables is None:
        tables = build_tables(lat, model, cost_scale)
    offs, cost, adm = tables
    init = np.where(lat.node_adm, init, INF)
    if keep == "all":
        wanted = set(range(n_steps + 1))
    elif keep == "final":
        wanted = {0, n_steps}
    else:
        wanted = set(int(k) for k in keep) | {0, n_steps}
    slices = {0: init.copy()}
    cur = init
    for s in range(1, n_steps + 1):
        cur = sweep(lat, cur, offs, cost, adm)
        if s in wanted:
            slices[s] = cur
    return slices, tables


def backtrace(lat: SpaceTimeLattice, slices: dict, tables, end_node, n_steps: int):
    """Optimal discrete path ending at end_node after n_steps sweeps.

    Ties are broken toward the predecessor with the smallest row-major node
    index.  Requires every slice 0..n_steps in `slices`.  Returns the list
    of (iy, ix) nodes from start to end.
    """
    offs, cost, adm = tables
    hd, hk, hr, dk, cells = defect_params(lat)
    nc = lat.nc
    ny, nx = lat.shape
    path = [tuple(end_node)]
    i, j = end_node
    for s in range(n_steps, 0, -1):
        val = slices[s - 1]
        target = slices[s][i, j]
        ti, tj = i % nc, j % nc
        candidates = []
        for o in range(offs.shape[0]):
            dy, dx = int(offs[o, 0]), int(offs[o, 1])
            ii, jj = i - dy, j - dx
            if not (0 <= ii < ny and 0 <= jj < nx):
                continue
            v = val[ii, jj]
            if not np.isfinite(v):
                continue
            if adm[o, ti, tj] == 0:
                if not hd:
                    continue
                x = lat.lo[0] + j * lat.h
                y = lat.lo[1] + i * lat.h
                if not _segment_clear(x, y, dx * lat.h, dy * lat.h, hk, hr, dk, cells):
                    continue
            candidates.append((abs(v + cost[o, ti, tj] - target), ii * nx + jj))
        if not candidates:
            raise RuntimeError("backtrace failed: no admissible predecessor")
        gap0 = min(g for g, _ in candidates)
        idx = min(k for g, k in candidates if g <= gap0 + 1e-12 * (1.0 + abs(target)))
        i, j = idx // nx, idx % nx
        path.append((i, j))
    path.reverse()
    return path


@njit(cache=True)
def _cell_sweep(v, out, node_adm, offs, cost, adm, pdot, gamma, nc):
    for i in range(nc):
        for j in range(nc):
            if not node_adm[i, j]:
                out[i, j] = INF
                continue
            best = INF
            for o in range(offs.shape[0]):
                ii = (i - offs[o, 0]) % nc
                jj = (j - offs[o, 1]) % nc
                if adm[o, i, j] == 0:
                    continue
                w = v[ii, jj]
                if w == INF:
                    continue
                c = gamma * w + cost[o, i, j] + pdot[o]
                if c < best:
                    best = c
            out[i, j] = best
    return out


def cell_fixed_point(lat: SpaceTimeLattice, model, p, lam: float,
                     tables=None, v0=None, tol: float = 1e-8,
                     max_iter: int | None = None):
    """Discounted cell problem on one periodic cell: iterate

        v(z) <- min_o (1 - lam dt) v(z - D_o) + dt [L(mid, v_o) - p . v_o]

    to its fixed point (sup-norm tolerance tol).  Returns (v, n_iters).
    The lattice must span exactly one cell (shape (nc+1, nc+1) is allowed;
    only the leading nc x nc block is used, wrap-around is periodic).
    """
    if tables is None:
        tables = build_tables(lat, model)
    offs, cost, adm = tables
    nc = lat.nc
    node_adm = lat.node_adm[:nc, :nc]
    cost = np.ascontiguousarray(cost)
    pdot = -(offs[:, 1] * p[0] + offs[:, 0] * p[1]) * lat.h
    gamma = 1.0 - lam * lat.dt
    if max_iter is None:
        max_iter = int(1e6 / lam)
    v = np.zeros((nc, nc)) if v0 is None else v0.copy()
    v[~node_adm] = INF
    out = np.empty_like(v)
    for it in range(1, max_iter + 1):
        _cell_sweep(v, out, node_adm, offs, cost, adm, pdot, gamma, nc)
        d = out[node_adm] - v[node_adm]
        v, out = out, v
        if np.max(np.abs(d)) <= tol:
            return v, it
    raise NonConvergenceError(
        f"cell problem did not converge: lam={lam}, {max_iter} iterations")


class NonConvergenceError(RuntimeError):
    pass
