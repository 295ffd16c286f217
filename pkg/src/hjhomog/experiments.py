"""Quantitative experiments on the perforated plane: the O(eps) convergence
rate, the dilute-limit sandwich, and filled-hole defect perturbations, each
emitted as a CSV table plus a JSON summary.

Conventions shared by all experiments:

  * every asserted inequality is checked at lattice nodes -- probe points
    snap to the nearest admissible fast node(s), never interpolate;
  * fitted constants are reported together with residuals, and a row FAILs
    only on a sign/ordering violation beyond its stated tolerance, never on
    the magnitude of a fitted constant;
  * counterexample configurations (filled-hole defects) assert a value gap
    bounded away from zero across the sweep; rate configurations assert
    decay.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import effective as eff
from .geometry import PerforatedDomain
from .hamiltonians import HamiltonianModel, coeff_a, potential_V
from .solvers import InitialData, solve_tilde_ueps, solve_ueps, solve_weps

TOL = 0.02
DEFAULT_PROBE_TIMES = (0.5, 1.0)
NOMINAL_NODE_STEPS_PER_S = 4.0e7


def nominal_runtime(vf) -> float:
    """Deterministic cost-model runtime of a solve: lattice nodes times DP
    steps over a fixed nominal throughput.

    Reported instead of wall time so that identical configurations emit
    byte-identical tables; the figure tracks real single-core seconds to
    within a small factor and is exactly proportional to the work done.
    """
    n_steps = int(round(max(vf.times) / (vf.eps * vf.lat.dt)))
    return vf.lat.node_adm.size * n_steps / NOMINAL_NODE_STEPS_PER_S


# ---------------------------------------------------------------------------
# probes


def probe_grid(n: int = 5, radius: float = 1.0) -> np.ndarray:
    """n x n grid over [-radius, radius]^2, kept inside the closed ball."""
    ax = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(ax, ax)
    pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
    return pts[np.hypot(pts[:, 0], pts[:, 1]) <= radius + 1e-12]


def snap_probe(lat, x, tol: float = 1e-12) -> list:
    """All admissible lattice nodes nearest to the (fast) point x.

    Exact ties are all kept, sorted row-major, so a perfectly symmetric
    probe (e.g. a hole center) yields its full ring of nearest admissible
    nodes and downstream maxima cannot depend on an arbitrary direction.
    """
    x = np.asarray(x, dtype=float)
    ny, nx = lat.shape
    ix0 = int(np.clip(round((x[0] - lat.lo[0]) / lat.h), 0, nx - 1))
    iy0 = int(np.clip(round((x[1] - lat.lo[1]) / lat.h), 0, ny - 1))
    cand = []
    best = np.inf
    for r in range(max(ny, nx) + 1):
        if cand and (max(r - 1, 0) * lat.h) ** 2 > best + tol:
            break
        ylo, yhi = iy0 - r, iy0 + r
        xlo, xhi = ix0 - r, ix0 + r
        ring = []
        for ix in range(max(xlo, 0), min(xhi, nx - 1) + 1):
            for iy in (ylo, yhi):
                if 0 <= iy < ny:
                    ring.append((iy, ix))
        for iy in range(max(ylo + 1, 0), min(yhi - 1, ny - 1) + 1):
            for ix in (xlo, xhi):
                if 0 <= ix < nx:
                    ring.append((iy, ix))
        if r == 0:
            ring = [(iy0, ix0)]
        for iy, ix in ring:
            if not lat.node_adm[iy, ix]:
                continue
            px = lat.lo[0] + ix * lat.h
            py = lat.lo[1] + iy * lat.h
            d2 = (px - x[0]) ** 2 + (py - x[1]) ** 2
            best = min(best, d2)
            cand.append((d2, iy, ix))
    hits = sorted((iy, ix) for d2, iy, ix in cand if d2 <= best + tol)
    if not hits:
        raise ValueError("no admissible node in the lattice")
    return hits


def snapped_values(vf, x, t: float) -> list:
    """[(slow position, value)] of a solver field at every nearest
    admissible fast node to the slow point x (snap ties kept)."""
    hits = snap_probe(vf.lat, np.asarray(x, dtype=float) / vf.eps)
    arr = vf._slice(t)
    out = []
    for iy, ix in hits:
        pos = vf.eps * vf.lat.position_of(iy, ix)
        out.append((pos, float(arr[iy, ix])))
    return out


# ---------------------------------------------------------------------------
# quadratures for the defect bounds


def line_defect_theta(model: HamiltonianModel, n: int = 4097) -> float:
    """theta = (1/4) int_{-1/2}^{1/2} (1 - 1/a(s e1)) ds.

    The unit-speed saving per crossed filled hole along the e1 axis; the
    persistent-gap bound for the filled-line defect is w(0,1) <= -1/2 -
    theta (up to tolerance)."""
    s = np.linspace(-0.5, 0.5, n)
    a = coeff_a(model, np.stack([s, np.zeros_like(s)], axis=-1))
    return float(np.trapezoid(1.0 - 1.0 / a, s) / 4.0)


def squares_detour_delta(model: HamiltonianModel, n: int = 4097) -> tuple:
    """(delta, corridor) for the sparse-squares defect detour.

    corridor = int_{-1/2}^{1/2} dx / a((x, 1/4)) prices the speed-2 crossing
    of a filled cell along the row y2 = 1/4; the vertical approach legs run
    on cell-boundary lines where a = 1 and contribute nothing.  The
    per-crossing saving is delta = (1/4)(1/2 - 2*corridor), positive exactly
    when corridor < 1/4 (the configuration hypothesis, checked at run
    time)."""
    s = np.linspace(-0.5, 0.5, n)
    a = coeff_a(model, np.stack([s, np.full_like(s, 0.25)], axis=-1))
    corridor = float(np.trapezoid(1.0 / a, s))
    return 0.25 * (0.5 - 2.0 * corridor), corridor


# ---------------------------------------------------------------------------
# rate experiment


@dataclass
class RateTable:
    epsilons: list
    sup_errors: list
    runtimes: list
    floors: list
    slope: float
    intercept: float
    probes: np.ndarray
    times: tuple
    hbar: float
    hbar_resid: float
    passed: bool
    notes: list = field(default_factory=list)


def _family_free_value(model: HamiltonianModel, g: InitialData) -> float:
    """Whole-space effective Hamiltonian at Dg for an unperforated medium
    whose coefficient field is identically its background value 1."""
    return 0.5 * g.lip ** 2


def rate_experiment(model: HamiltonianModel, dom: PerforatedDomain,
                    g: InitialData, eps_list, h: float,
                    times=DEFAULT_PROBE_TIMES, probe_radius: float = 1.0,
                    probes: np.ndarray | None = None,
                    k_list=eff.DEFAULT_K_LIST, M0: float | None = None,
                    v_radius: float = 2.0, v_step: float = 0.125) -> RateTable:
    """Sup-error sweep |u^eps - ubar| over snapped probes, with the
    hole-free discretization floor subtracted before the log-log slope fit.

    ubar is the homogenized value g(x) - t*Hbar(Dg) with Hbar from the
    anchored-metric route; the floor run solves the identical lattice
    problem with the holes removed, so err - floor isolates the
    perforation-induced part of the error.
    """
    eps_list = sorted(eps_list, reverse=True)
    if probes is None:
        probes = probe_grid(radius=probe_radius)
    times = tuple(times)
    table = eff.lbar_table(model, dom, h, k_list=k_list, v_radius=v_radius,
                           v_step=v_step, M0=M0)
    hbar, hres = eff.hbar_metric(table, g.vector)
    ubar = lambda x, t: float(g(np.asarray(x, dtype=float))) - t * hbar
    free_dom = PerforatedDomain(hole=None, eta=dom.eta)
    hbar_free = _family_free_value(model, g)
    ubar_free = lambda x, t: float(g(np.asarray(x, dtype=float))) - t * hbar_free

    sup_errors, runtimes, floors, notes = [], [], [], []
    for eps in eps_list:
        vf = solve_ueps(model, dom, eps, g, times, h, M0=M0,
                        eval_radius=probe_radius)
        runtimes.append(nominal_runtime(vf))
        vf0 = solve_ueps(model, free_dom, eps, g, times, h, M0=M0,
                         eval_radius=probe_radius)
        err = 0.0
        flo = 0.0
        for x in probes:
            for t in times:
                for pos, val in snapped_values(vf, x, t):
                    err = max(err, abs(val - ubar(pos, t)))
                for pos, val in snapped_values(vf0, x, t):
                    flo = max(flo, abs(val - ubar_free(pos, t)))
        sup_errors.append(err)
        floors.append(flo)

    net = np.array([max(e - f, 1e-16) for e, f in zip(sup_errors, floors)])
    if np.any(net <= 1e-15):
        notes.append("error at or below the discretization floor; "
                     "slope fitted on clipped values")
    slope, intercept = np.polyfit(np.log(eps_list), np.log(net), 1)
    decreasing = all(b < a for a, b in zip(sup_errors, sup_errors[1:]))
    passed = decreasing and slope >= 0.8
    if not decreasing:
        notes.append("sup_error not strictly decreasing")
    return RateTable(list(map(float, eps_list)), sup_errors, runtimes,
                     floors, float(slope), float(intercept), probes, times,
                     float(hbar), float(hres), bool(passed), notes)


# ---------------------------------------------------------------------------
# dilute experiment


@dataclass
class DiluteRow:
    epsilon: float
    eta: float
    h: float
    gap: float
    bound: float
    checks: dict
    passed: bool


@dataclass
class DiluteTable:
    rows: list
    C_thm: float
    C_gap: float
    h_tilde: float
    h_tilde_resid: float
    tilde_at_origin: dict
    probe: list
    passed: bool
    notes: list = field(default_factory=list)


def _dilute_h(eta: float, hole_size: float, h_max: float) -> float:
    """Largest power-of-two step resolving eta-scaled holes, capped at h_max."""
    need = eta * hole_size / 4.0
    h = h_max
    while h > need + 1e-12:
        h /= 2.0
    return h


def dilute_experiment(model: HamiltonianModel, dom: PerforatedDomain,
                      g: InitialData, schedule, h_max: float,
                      times=DEFAULT_PROBE_TIMES, eval_radius: float = 0.25,
                      M0: float | None = None, cell_h: float = 1 / 32,
                      sweep_etas=(0.5, 0.75, 1.0)) -> DiluteTable:
    """Constrained-vs-whole-space sandwich on shrinking holes.

    schedule: [(eps, eta(eps)), ...] rows, coarsest first.  Per row, u^eps
    (holes of size eta) and tilde-u^eps (no holes) are solved on one lattice
    and the four-inequality chain

        tilde_u - C eps <= tilde_u^eps <= u^eps
                        <= tilde_u^eps + C(eps + eta t) <= tilde_u + C(eps + eta t)

    is checked nodewise with C fitted on the first row; the gap u - tilde_u
    is also bounded by the sharper C_gap*(eps*eta + eta*t) form that the gap
    column reports.  A separate eta-sweep probes the near-hole optimality
    gap u - tilde_u >= c eta^2 at x = eps*eta/4 e2, t = 1 (sign check; c is
    derived from the sweep, not asserted in magnitude).
    """
    times = tuple(times)
    t_max = max(times)
    free_dom = PerforatedDomain(hole=None, eta=dom.eta)
    h_til, h_res, _, _ = eff.hbar_cell(model, free_dom, g.vector, cell_h,
                                       M0=M0)
    tilde_lim = lambda pos, t: g(pos) - t * h_til

    raw = []
    tilde_at_origin = {}
    for eps, eta in schedule:
        h_row = _dilute_h(eta, dom.hole.size, h_max)
        dom_row = PerforatedDomain(dom.hole, eta)
        u = solve_ueps(model, dom_row, eps, g, times, h_row, M0=M0,
                       eval_radius=eval_radius)
        til = solve_tilde_ueps(model, dom_row, eps, g, times, h_row, M0=M0,
                               eval_radius=eval_radius)
        xs, ys = u.lat.axes()
        r = eval_radius / eps + 1e-9
        jj = np.nonzero(np.abs(xs) <= r)[0]
        ii = np.nonzero(np.abs(ys) <= r)[0]
        adm = u.lat.node_adm[np.ix_(ii, jj)]
        X, Y = np.meshgrid(xs[jj], ys[ii])
        pos = eps * np.stack([X[adm], Y[adm]], axis=-1)
        per_t = {}
        for t in times:
            uu = u._slice(t)[np.ix_(ii, jj)][adm]
            tt = til._slice(t)[np.ix_(ii, jj)][adm]
            lim = tilde_lim(pos, t)
            per_t[t] = {
                "i2_defect": float(np.max(tt - uu)),
                "gap": float(np.max(uu - tt)),
                "i1_defect": float(np.max(lim - tt)),
                "i4_defect": float(np.max(tt - lim)),
            }
        tilde_at_origin[eps] = float(til.value((0.0, 0.0), t_max))
        raw.append((eps, eta, h_row, per_t))

    # constants fitted on the first (coarsest) row only
    eps0, eta0, _, per0 = raw[0]
    C_thm, C_gap = 0.0, 0.0
    for t, c in per0.items():
        C_thm = max(C_thm,
                    (c["i1_defect"] - TOL) / eps0,
                    (c["i4_defect"] - TOL) / eps0,
                    (c["gap"] - TOL) / (eps0 + eta0 * t))
        C_gap = max(C_gap, (c["gap"] - TOL) / (eps0 * eta0 + eta0 * t))
    C_thm, C_gap = max(C_thm, 0.0), max(C_gap, 0.0)

    rows, notes = [], []
    for eps, eta, h_row, per_t in raw:
        ok = True
        for t, c in per_t.items():
            ok &= c["i2_defect"] <= TOL
            ok &= c["i1_defect"] <= C_thm * eps + TOL
            ok &= c["i4_defect"] <= C_thm * eps + TOL
            ok &= c["gap"] <= C_thm * (eps + eta * t) + TOL
            ok &= c["gap"] <= C_gap * (eps * eta + eta * t) + TOL
        gap = per_t[t_max]["gap"]
        bound = C_gap * (eps * eta + eta * t_max) + TOL
        rows.append(DiluteRow(eps, eta, h_row, gap, bound,
                              {f"{k}@t={t}": v for t, c in per_t.items()
                               for k, v in c.items()}, bool(ok)))
        if not ok:
            notes.append(f"sandwich violation at eps={eps:g}, eta={eta:g}")

    # near-hole optimality probe: eta-sweep at the coarsest eps
    probe = []
    for eta in sweep_etas:
        h_row = _dilute_h(eta, dom.hole.size, h_max)
        dom_row = PerforatedDomain(dom.hole, eta)
        x = np.array([0.0, eps0 * eta / 4.0])
        u = solve_ueps(model, dom_row, eps0, g, (1.0,), h_row, M0=M0,
                       eval_radius=0.125)
        til = solve_tilde_ueps(model, dom_row, eps0, g, (1.0,), h_row, M0=M0,
                               eval_radius=0.125)
        du = max(v for _, v in snapped_values(u, x, 1.0))
        dt_ = max(v for _, v in snapped_values(til, x, 1.0))
        d = du - dt_
        probe.append({"eta": eta, "eps": eps0, "gap": float(d),
                      "c_emp": float(d / eta ** 2)})
    probe_ok = all(p["gap"] > 1e-9 for p in probe)
    if not probe_ok:
        notes.append("near-hole optimality gap not positive across the sweep")

    passed = all(r.passed for r in rows) and probe_ok
    return DiluteTable(rows, float(C_thm), float(C_gap), float(h_til),
                       float(h_res), tilde_at_origin, probe, bool(passed),
                       notes)


# ---------------------------------------------------------------------------
# defect experiment


@dataclass
class DefectRow:
    epsilon: float
    probe: tuple
    t: float
    w: float
    u: float
    gap: float
    bound: float
    passed: bool


@dataclass
class DefectTable:
    kind: str
    rows: list
    constants: dict
    passed: bool
    notes: list = field(default_factory=list)


def defect_experiment(model: HamiltonianModel, dom: PerforatedDomain,
                      g: InitialData, eps_list, h: float,
                      M0: float | None = None,
                      times=None) -> DefectTable:
    """Filled-hole defect sweeps: w^eps against its closed-form hard-hole
    comparator u.

    line_e1   : probe (0, 1); u = g(0) - 1/2; persistent gap
                w - u <= -theta + tol, theta from line_defect_theta.
    squares_e1: probe (eps/2 e2, 1); u = -1/2; decaying counterexample bound
                w - u <= -delta sqrt(eps) + eps, delta from
                squares_detour_delta (hypothesis corridor < 1/4 is checked).
    singleton0: probes (0, t); u = 0; Aubry-point pinning w <= -V(0) t + tol
                and w/t -> -max V.

    The comparator u is exact for these configurations: the coefficient
    field equals 1 on the hard-hole domain, every row tangent to the hole
    pattern is straight and admissible, so the constrained effective
    Hamiltonian at +-e1 is exactly 1/2 (and 0 at p = 0 for the resting
    case).
    """
    kind = dom.defects.kind
    eps_list = sorted(eps_list, reverse=True)
    rows, notes = [], []
    constants = {}

    if kind == "line_e1":
        theta = line_defect_theta(model)
        constants["theta"] = theta
        bound = -theta + TOL
        for eps in eps_list:
            w = solve_weps(model, dom, eps, g, (1.0,), h, M0=M0,
                           eval_radius=0.25)
            wv = min(v for _, v in snapped_values(w, (0.0, 0.0), 1.0))
            u = float(g(np.zeros(2))) - 0.5
            gap = wv - u
            ok = gap <= bound and gap <= -theta / 2.0
            rows.append(DefectRow(eps, (0.0, 0.0), 1.0, wv, u, gap, bound, ok))
    elif kind == "squares_e1":
        delta, corridor = squares_detour_delta(model)
        constants["delta"] = delta
        constants["corridor"] = corridor
        hyp_ok = corridor < 0.25
        if not hyp_ok:
            notes.append("corridor integral >= 1/4: detour hypothesis violated")
        for eps in eps_list:
            w = solve_weps(model, dom, eps, g, (1.0,), h, M0=M0,
                           eval_radius=0.25)
            x = (0.0, eps / 2.0)
            wv = min(v for _, v in snapped_values(w, x, 1.0))
            u = float(g(np.asarray(x))) - 0.5
            gap = wv - u
            bound = -delta * math.sqrt(eps) + eps
            ok = hyp_ok and gap <= bound
            rows.append(DefectRow(eps, x, 1.0, wv, u, gap, bound, ok))
        # density-modulus reading (reported, never pass/fail):
        # |gap| against (M0 t + |x| + 1) sqrt(eps / (M0 t + |x|)) + eps
        cap = M0 if M0 is not None else model.M0
        scale = lambda eps: (cap + eps / 2 + 1) * math.sqrt(eps / (cap + eps / 2)) + eps
        constants["modulus_ratio"] = [abs(r.gap) / scale(r.epsilon)
                                      for r in rows]
    elif kind == "singleton0":
        v0 = float(potential_V(model, np.zeros(2)))
        constants["V0"] = v0
        if times is None:
            times = DEFAULT_PROBE_TIMES
        times = tuple(times)
        for eps in eps_list:
            w = solve_weps(model, dom, eps, g, times, h, M0=M0,
                           eval_radius=0.25)
            for t in times:
                wv = min(v for _, v in snapped_values(w, (0.0, 0.0), t))
                bound = -v0 * t + TOL
                ok = wv <= bound
                if eps == eps_list[-1]:
                    ok = ok and abs(wv / t + v0) <= 0.05
                rows.append(DefectRow(eps, (0.0, 0.0), t, wv, 0.0, wv,
                                      bound, ok))
    else:
        raise ValueError(f"defect experiment needs a defect domain, got {kind!r}")

    passed = bool(rows) and all(r.passed for r in rows)
    return DefectTable(kind, rows, constants, passed, notes)


# ---------------------------------------------------------------------------
# effective experiment


DEFAULT_P_LIST = ((-1.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 0.0))
DEFAULT_V_LIST = ((1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (-1.0, 0.0),
                  (2.0, 0.0), (0.5, 0.5), (1.5, 0.0))


@dataclass
class EffectiveTable:
    rows: list
    axis_pass: bool
    envelope_pass: bool
    route_agreement: dict
    passed: bool
    notes: list = field(default_factory=list)


def effective_experiment(model: HamiltonianModel, dom: PerforatedDomain,
                         h: float, p_list=DEFAULT_P_LIST,
                         v_list=DEFAULT_V_LIST, k_list=eff.DEFAULT_K_LIST,
                         lam_list=eff.DEFAULT_LAMBDAS,
                         M0: float | None = None,
                         cell_h: float | None = None) -> EffectiveTable:
    """Effective Hamiltonian/Lagrangian table with its two built-in checks:
    the tangent-row axis identity Hbar(+-e1) = 1/2 (both routes agree) and
    the upper envelope Hbar(p) <= |p|^2/2 for potential-free media."""
    rows = eff.effective_table(model, dom, h, p_list, v_list, k_list=k_list,
                               lam_list=lam_list, M0=M0, cell_h=cell_h)
    metric_h = {(r.component1, r.component2): r.value
                for r in rows if r.kind == "Hbar_metric"}
    cell_h_ = {(r.component1, r.component2): r.value
               for r in rows if r.kind == "Hbar_cell"}
    notes = []

    axis_pass = True
    for p in ((-1.0, 0.0), (1.0, 0.0)):
        if p in metric_h:
            ok = abs(metric_h[p] - 0.5) <= 0.05 and \
                abs(cell_h_[p] - metric_h[p]) <= 0.05
            axis_pass &= ok
            if not ok:
                notes.append(f"axis identity violated at p={p}")

    envelope_pass = True
    if model.family != "kinetic_potential":
        for p, v in metric_h.items():
            lim = 0.5 * (p[0] ** 2 + p[1] ** 2) + 0.05
            if v > lim:
                envelope_pass = False
                notes.append(f"upper envelope violated at p={p}: {v:.4f} > {lim:.4f}")

    agreement = {str(p): abs(cell_h_[p] - metric_h[p]) for p in metric_h}
    return EffectiveTable(rows, bool(axis_pass), bool(envelope_pass),
                          agreement, bool(axis_pass and envelope_pass), notes)


# ---------------------------------------------------------------------------
# report emission


def _fmt(x) -> str:
    return "%.12g" % float(x)


def emit_report(tables: dict, out_dir: str) -> list:
    """Write one CSV per table plus summary.json; returns written paths.

    tables maps kind -> table object, with kinds among "rate", "dilute",
    "defect", "effective".  Empty tables produce a header-only CSV and a
    "no data" flag in the summary.  Every emitted field, including
    rate.csv's cost-model runtime_s column, is a deterministic function of
    the configuration, so repeated runs produce byte-identical files.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    summary = {}

    if "rate" in tables:
        tb = tables["rate"]
        p = os.path.join(out_dir, "rate.csv")
        with open(p, "w") as f:
            f.write("epsilon,sup_error,runtime_s\n")
            for e, s, r in zip(tb.epsilons, tb.sup_errors, tb.runtimes):
                f.write(f"{_fmt(e)},{_fmt(s)},{r:.3f}\n")
        paths.append(p)
        summary["rate"] = {
            "epsilons": tb.epsilons, "sup_errors": tb.sup_errors,
            "floors": tb.floors, "slope": tb.slope,
            "intercept": tb.intercept, "hbar": tb.hbar,
            "hbar_resid": tb.hbar_resid, "passed": tb.passed,
            "notes": tb.notes,
        }
        if not tb.epsilons:
            summary["rate"]["no data"] = True

    if "dilute" in tables:
        tb = tables["dilute"]
        p = os.path.join(out_dir, "dilute.csv")
        with open(p, "w") as f:
            f.write("epsilon,eta,gap,bound,pass\n")
            for r in tb.rows:
                f.write(f"{_fmt(r.epsilon)},{_fmt(r.eta)},{_fmt(r.gap)},"
                        f"{_fmt(r.bound)},{int(r.passed)}\n")
        paths.append(p)
        summary["dilute"] = {
            "C_thm": tb.C_thm, "C_gap": tb.C_gap, "h_tilde": tb.h_tilde,
            "h_tilde_resid": tb.h_tilde_resid,
            "tilde_at_origin": {str(k): v for k, v in tb.tilde_at_origin.items()},
            "probe": tb.probe, "passed": tb.passed, "notes": tb.notes,
            "rows": [{"epsilon": r.epsilon, "eta": r.eta, "h": r.h,
                      "gap": r.gap, "bound": r.bound, "passed": r.passed,
                      "checks": r.checks} for r in tb.rows],
        }
        if not tb.rows:
            summary["dilute"]["no data"] = True

    if "defect" in tables:
        tb = tables["defect"]
        p = os.path.join(out_dir, "defect.csv")
        with open(p, "w") as f:
            f.write("epsilon,probe_x,probe_y,t,w,u,gap,bound,pass\n")
            for r in tb.rows:
                f.write(f"{_fmt(r.epsilon)},{_fmt(r.probe[0])},"
                        f"{_fmt(r.probe[1])},{_fmt(r.t)},{_fmt(r.w)},"
                        f"{_fmt(r.u)},{_fmt(r.gap)},{_fmt(r.bound)},"
                        f"{int(r.passed)}\n")
        paths.append(p)
        summary["defect"] = {
            "kind": tb.kind, "constants": tb.constants, "passed": tb.passed,
            "notes": tb.notes,
        }
        if not tb.rows:
            summary["defect"]["no data"] = True

    if "effective" in tables:
        tb = tables["effective"]
        p = os.path.join(out_dir, "effective.csv")
        eff.effective_rows_to_csv(tb.rows, p)
        paths.append(p)
        summary["effective"] = {
            "axis_pass": tb.axis_pass, "envelope_pass": tb.envelope_pass,
            "route_agreement": tb.route_agreement, "passed": tb.passed,
            "notes": tb.notes,
        }
        if not tb.rows:
            summary["effective"]["no data"] = True

    sp = os.path.join(out_dir, "summary.json")
    with open(sp, "w") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    paths.append(sp)
    return paths


# ---------------------------------------------------------------------------
# validate suite


def validate_suite(verbose: bool = False, seed: int = 0) -> dict:
    """Small-fixture invariant checks across every module; the CLI's
    `validate` experiment.  Returns {check name: bool}; designed to finish
    in a couple of minutes on one core.  seed moves the sample points of
    the randomized checks (duality oracle, resting condition) and nothing
    else; every check must hold at any seed."""
    from .geometry import DefectSpec, HoleShape, build_lattice
    from .hamiltonians import (check_A5, eval_H, eval_L, legendre_oracle,
                               make_model)
    from .metric import metric_field, metric_value, shifted_pair_gap
    from .solvers import ZERO

    out = {}

    def record(name, ok):
        out[name] = bool(ok)
        if verbose:
            print(f"  {'PASS' if ok else 'FAIL'}  {name}")

    disc = HoleShape("disc", 0.25)
    free_dom = PerforatedDomain(hole=None)
    holed = PerforatedDomain(hole=disc)
    model = make_model("free", lip_g=1.0)

    # geometry: lattice build, round trip, anchors on the hole boundary
    lat = build_lattice(holed, 1 / 16, cells=(0, 1, 0, 1))
    iy, ix = lat.node_at((0.5, 0.5))
    ok = np.allclose(lat.position_of(iy, ix), (0.5, 0.5))
    ok &= bool(lat.node_anchor.any()) and bool(
        (lat.node_anchor <= lat.node_adm).all())
    record("geometry.lattice_round_trip", ok)
    spec = DefectSpec("line_e1")
    record("geometry.defect_membership",
           spec.contains_cell(3, 0) and spec.contains_cell(0, 0)
           and not spec.contains_cell(-1, 0) and not spec.contains_cell(1, 1))

    # hamiltonians: dual pair within the working range, structural zeros
    mods = [model, make_model("kinetic_weight", hole=disc, alpha=4.0),
            make_model("stripe_weight", lip_g=1.0)]
    rng = np.random.default_rng(seed)
    ok = True
    for m in mods:
        ys = rng.uniform(-1.0, 1.0, size=(40, 2))
        vs = rng.uniform(-1.5, 1.5, size=(40, 2))
        for y, v in zip(ys, vs):
            ref = legendre_oracle(m, y, v, n_grid=513)
            ok &= abs(float(eval_L(m, y, v)) - ref) <= 2e-2
    record("hamiltonians.duality_oracle", ok)
    flags = check_A5(model, n_samples=200, seed=seed)
    record("hamiltonians.A5_zero_at_rest",
           flags["holds"] and abs(float(eval_H(model, (0.3, 0.4),
                                               (0.0, 0.0)))) < 1e-12)

    # metric: triangle inequality through a midpoint, hole monotonicity
    h = 1 / 16
    f_free = metric_field(model, free_dom, (0.5, 0.5), 1.0, h, kind="m")
    f_hole = metric_field(model, holed, (0.5, 0.5), 1.0, h, kind="m")
    tgt = (1.5, 0.5)
    record("metric.hole_monotone",
           metric_value(f_hole, tgt) >= metric_value(f_free, tgt) - 1e-12)
    f2 = metric_field(model, holed, (0.5, 0.5), 2.0, h, kind="m")
    mid = metric_value(f_hole, tgt)
    f_leg = metric_field(model, holed, tgt, 1.0, h, kind="m")
    record("metric.dpp_triangle",
           metric_value(f2, (2.5, 0.5))
           <= mid + metric_value(f_leg, (2.5, 0.5)) + 1e-9)
    gap = shifted_pair_gap(model, holed, (0.5, 0.5), (1.5, 0.5), 1.0, h,
                           shift=(1, 0))
    record("metric.shift_periodicity", gap <= 1e-9)

    # effective: both routes near the tangent-row value 1/2 at -e1
    tab = eff.lbar_table(model, holed, h, k_list=(2, 4), M0=2.6)
    hm, _ = eff.hbar_metric(tab, (-1.0, 0.0))
    record("effective.metric_axis", abs(hm - 0.5) <= 0.1)
    hc, _, _, _ = eff.hbar_cell(model, holed, (-1.0, 0.0), h, M0=2.6)
    record("effective.cell_axis", abs(hc - 0.5) <= 0.1)

    # solvers: constant shift equivariance and the defect sandwich
    g = InitialData("linear", vector=(-1.0, 0.0))
    g_shift = InitialData("linear", vector=(-1.0, 0.0), value=0.7)
    u1 = solve_ueps(model, holed, 0.25, g, (0.5,), h, M0=2.6,
                    eval_radius=0.25)
    u2 = solve_ueps(model, holed, 0.25, g_shift, (0.5,), h, M0=2.6,
                    eval_radius=0.25)
    a1, a2 = u1._slice(0.5), u2._slice(0.5)
    m_adm = u1.lat.node_adm
    record("solvers.constant_shift",
           np.allclose(a2[m_adm] - a1[m_adm], 0.7, atol=1e-12))
    ddom = PerforatedDomain(hole=disc, defects=DefectSpec("line_e1"))
    w = solve_weps(model, ddom, 0.25, g, (0.5,), h, M0=2.6, eval_radius=0.25)
    til = solve_tilde_ueps(model, ddom, 0.25, g, (0.5,), h, M0=2.6,
                           eval_radius=0.25)
    uu = solve_ueps(model, ddom.without_defects(), 0.25, g, (0.5,), h,
                    M0=2.6, eval_radius=0.25)
    wa, ta, ua = w._slice(0.5), til._slice(0.5), uu._slice(0.5)
    madm = uu.lat.node_adm
    record("solvers.sandwich",
           bool((ta[madm] <= wa[madm] + 1e-9).all()
                and (wa[madm] <= ua[madm] + 1e-9).all()))
    record("solvers.t0_exact",
           np.allclose(u1._slice(0.0)[m_adm],
                       g(0.25 * u1.lat.positions()[m_adm]), atol=0.0))

    # experiments: defect quadratures have the advertised signs
    mk = make_model("kinetic_weight", hole=disc, alpha=4.0)
    record("experiments.line_theta_positive", line_defect_theta(mk) > 0.0)
    ms = make_model("kinetic_weight", hole=HoleShape("square", 0.47),
                    alpha=8.0)
    dlt, corr = squares_detour_delta(ms)
    record("experiments.squares_hypothesis", corr < 0.25 and dlt > 0.0)

    out["all"] = all(out.values())
    return out
