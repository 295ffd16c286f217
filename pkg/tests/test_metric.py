"""Space-time metric costs by dynamic programming: exactness, ordering,
periodicity, and the anchored variants."""

import numpy as np
import pytest

from hjhomog._dp import INF, build_tables, run_dp, step_offsets
from hjhomog.geometry import PerforatedDomain, build_lattice
from hjhomog.metric import (NoAnchorError, metric_field, metric_value,
                            metric_values, optimal_path, path_cost,
                            path_to_csv, shifted_pair_gap)

H = 1 / 16


def _reference_dp(lat, model, init, n_steps, cost_scale=1.0):
    """Plain-python mirror of the DP kernel for cross-validation."""
    offs, cost, adm = build_tables(lat, model, cost_scale)
    val = np.where(lat.node_adm, init, INF)
    ny, nx = val.shape
    for _ in range(n_steps):
        out = np.full_like(val, INF)
        for i in range(ny):
            for j in range(nx):
                if not lat.node_adm[i, j]:
                    continue
                ti, tj = i % lat.nc, j % lat.nc
                best = INF
                for o, (dy, dx) in enumerate(offs):
                    ii, jj = i - dy, j - dx
                    if not (0 <= ii < ny and 0 <= jj < nx):
                        continue
                    if val[ii, jj] == INF or not adm[o, ti, tj]:
                        continue
                    c = val[ii, jj] + cost[o, ti, tj]
                    best = min(best, c)
                out[i, j] = best
        val = out
    return val


def test_dp_kernel_matches_reference(holed, free_model):
    lat = build_lattice(holed, H, cells=(-1, 1, -1, 1), M0=2.0)
    init = np.abs(lat.positions()).sum(axis=-1)
    slices, _ = run_dp(lat, free_model, init, 3, keep="final")
    ref = _reference_dp(lat, free_model, init, 3)
    got = slices[3]
    mask = lat.node_adm
    assert np.array_equal(got[mask], ref[mask])


def test_dpp_composition_exact(holed, free_model):
    """Value at t+s equals one DP continued from the other, node for node;
    dyadic step costs make it bit-exact for the unweighted family."""
    lat = build_lattice(holed, H, cells=(-1, 1, -1, 1), M0=2.0)
    init = (lat.positions() ** 2).sum(axis=-1)
    s1, tables = run_dp(lat, free_model, init, 2, keep="final")
    s2, _ = run_dp(lat, free_model, s1[2], 3, keep="final", tables=tables)
    s3, _ = run_dp(lat, free_model, init, 5, keep="final", tables=tables)
    mask = lat.node_adm
    assert np.array_equal(s2[3][mask], s3[5][mask])


def test_metric_source_must_be_admissible(holed, free_model):
    with pytest.raises(Exception):
        metric_field(free_model, holed, (0.0, 0.0), 1.0, H, kind="m")


def test_hole_monotonicity(free_dom, holed, free_model):
    """Removing obstacles can only lower the metric."""
    f_free = metric_field(free_model, free_dom, (0.5, 0.5), 1.0, H, M0=2.6)
    f_hole = metric_field(free_model, holed, (0.5, 0.5), 1.0, H, M0=2.6)
    for tgt in [(1.5, 0.5), (0.5, 1.5), (-0.5, -0.5), (2.5, 0.5)]:
        a = metric_value(f_free, tgt)
        b = metric_value(f_hole, tgt)
        assert a <= b + 1e-12


def test_speed_bound(holed, free_model):
    f = metric_field(free_model, holed, (0.5, 0.5), 1.0, H, M0=2.0)
    assert metric_value(f, (0.5 + 2.0, 0.5)) < INF
    assert metric_value(f, (0.5 + 2.5, 0.5)) == INF


def test_free_straight_line_cost(free_dom, free_model):
    """On the unobstructed plane m(t, x, y) = |y - x|^2 / (2t) at lattice
    targets reachable by a straight dyadic path."""
    f = metric_field(free_model, free_dom, (0.0, 0.0), 1.0, H, M0=2.6)
    for tgt, want in [((1.0, 0.0), 0.5), ((0.0, 2.0), 2.0), ((1.0, 1.0), 1.0)]:
        assert metric_value(f, tgt) == pytest.approx(want, abs=1e-12)


def test_m_vs_mstar_bounded(holed, free_model):
    """The anchored cost agrees with the point cost up to a uniform
    constant (both ends move by at most a cell diagonal)."""
    t = 2.0
    fm = metric_field(free_model, holed, (0.5, 0.5), t, H, kind="m", M0=2.6)
    fs = metric_field(free_model, holed, (0.5, 0.5), t, H, kind="mstar", M0=2.6)
    for tgt in [(1.5, 0.5), (2.5, 1.5), (-1.5, 0.5)]:
        a = metric_value(fm, tgt)
        b = metric_value(fs, tgt)
        assert abs(a - b) <= 1.0


def test_subadditivity_defect_uniform(holed, free_model):
    """m*(2t, x, x + 2tv) <= 2 m*(t, x, x + tv) + c with c uniform over the
    doubling sweep: concatenation is always admissible."""
    x = np.array([0.5, 0.5])
    v = np.array([1.0, 0.0])
    vals = {}
    for t in (2.0, 4.0, 8.0, 16.0):
        f = metric_field(free_model, holed, x, t, H, kind="mstar", M0=2.0)
        vals[t] = metric_value(f, x + t * v)
    defects = [vals[2 * t] - 2 * vals[t] for t in (2.0, 4.0, 8.0)]
    # the concatenation slack is a fixed anchor-to-anchor connector cost
    assert max(abs(d) for d in defects) <= 1.0
    assert max(defects) - min(defects) <= 0.1  # uniform over the sweep
    # per-time averages settle toward a limit slope
    rates = [vals[t] / t for t in (2.0, 4.0, 8.0, 16.0)]
    assert abs(rates[-1] - rates[-2]) < abs(rates[1] - rates[0]) + 1e-12


def test_shift_periodicity(holed, free_model):
    gap = shifted_pair_gap(free_model, holed, (0.5, 0.5), (1.5, 0.5), 1.0, H,
                           shift=(2, -1), M0=2.0)
    assert gap <= 1e-9
    with pytest.raises(ValueError):
        shifted_pair_gap(free_model, holed, (0.5, 0.5), (1.5, 0.5), 1.0, H,
                         shift=(0.5, 0.0), M0=2.0)


def test_optimal_path_reconstruction(holed, free_model):
    f = metric_field(free_model, holed, (0.5, 0.5), 1.0, H, kind="m",
                     M0=2.0, keep="all")
    tgt = (1.5, 0.5)
    path = optimal_path(f, tgt)
    assert path.shape == (f.n_steps + 1, 2)
    assert np.allclose(path[0], (0.5, 0.5)) and np.allclose(path[-1], tgt)
    # steps respect the speed cap
    steps = np.diff(path, axis=0)
    assert (np.hypot(steps[:, 0], steps[:, 1]) <= 2.0 * f.lat.dt + 1e-12).all()
    assert path_cost(f, path) == pytest.approx(metric_value(f, tgt), abs=1e-9)


def test_no_anchor_on_free_domain(free_dom, free_model):
    """Anchored kinds need hole boundaries; a hole-free cell has none."""
    with pytest.raises(NoAnchorError):
        metric_field(free_model, free_dom, (0.5, 0.5), 1.0, H, kind="mstar",
                     M0=2.0)


def test_metric_values_vectorized(holed, free_model):
    f = metric_field(free_model, holed, (0.5, 0.5), 1.0, H, M0=2.0)
    ys = np.array([[1.5, 0.5], [0.5, 1.5]])
    out = metric_values(f, ys)
    assert out.shape == (2,)
    assert out[0] == pytest.approx(metric_value(f, ys[0]))


def test_step_offsets_deterministic_order():
    offs = step_offsets(2.6, H, H)
    assert offs.shape == (21, 2)
    assert (offs == np.array(sorted(map(tuple, offs)))).all()


def test_csv_exports(tmp_path, holed, free_model):
    """Slices export as t,x,y,value (finite admissible nodes only); traced
    paths export as s,x,y with s = k*dt."""
    f = metric_field(free_model, holed, (0.5, 0.5), 0.5, H, M0=2.0,
                     keep="all")
    p = tmp_path / "field.csv"
    f.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "t,x,y,value"
    first = [float(c) for c in lines[1].split(",")]
    assert first[0] == 0.0 and first[3] == 0.0  # source slice, zero cost
    ts = {float(l.split(",")[0]) for l in lines[1:]}
    assert ts == {k * f.lat.dt for k in range(f.n_steps + 1)}

    path = optimal_path(f, (1.0, 0.5))
    pp = tmp_path / "path.csv"
    path_to_csv(f, path, pp)
    rows = pp.read_text().splitlines()
    assert rows[0] == "s,x,y"
    assert len(rows) == len(path) + 1
    last = [float(c) for c in rows[-1].split(",")]
    assert last[0] == pytest.approx(f.n_steps * f.lat.dt)
    assert (last[1], last[2]) == pytest.approx(tuple(path[-1]))
