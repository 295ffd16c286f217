"""Experiment plumbing: probes, quadratures, report emission."""

import json

import numpy as np
import pytest

from hjhomog.experiments import (DefectRow, DefectTable, DiluteRow,
                                 DiluteTable, RateTable, emit_report,
                                 line_defect_theta, probe_grid, snap_probe,
                                 snapped_values, squares_detour_delta)
from hjhomog.geometry import HoleShape, PerforatedDomain, build_lattice
from hjhomog.hamiltonians import make_model

DISC = HoleShape("disc", 0.25)


def test_probe_grid_ball():
    pts = probe_grid()
    assert pts.shape == (13, 2)
    assert (np.hypot(pts[:, 0], pts[:, 1]) <= 1.0 + 1e-12).all()
    # symmetric under both axis reflections
    as_set = {tuple(p) for p in np.round(pts, 12)}
    assert all((-x, y) in as_set and (x, -y) in as_set for x, y in as_set)


def test_snap_identity_on_admissible_node(holed):
    lat = build_lattice(holed, 1 / 16, cells=(-1, 1, -1, 1))
    hits = snap_probe(lat, (0.5, 0.5))
    assert len(hits) == 1
    assert np.allclose(lat.position_of(*hits[0]), (0.5, 0.5))


def test_snap_hole_center_tie_set(holed):
    """A probe at a hole center has a full symmetric ring of nearest
    admissible nodes; all are returned, row-major."""
    lat = build_lattice(holed, 1 / 16, cells=(-1, 1, -1, 1))
    hits = snap_probe(lat, (0.0, 0.0))
    # boundary nodes (+-r, 0), (0, +-r) are closure-admissible and nearest
    assert len(hits) == 4
    pos = np.array([lat.position_of(*hx) for hx in hits])
    d = np.hypot(pos[:, 0], pos[:, 1])
    assert np.allclose(d, 0.25)
    assert hits == sorted(hits)


def test_snap_prefers_closer_node(free_dom):
    lat = build_lattice(free_dom, 1 / 4, cells=(0, 1, 0, 1))
    hits = snap_probe(lat, (0.26, 0.49))
    assert hits == [lat.node_at((0.25, 0.5))]


def test_line_theta_quadrature():
    m = make_model("kinetic_weight", hole=DISC, alpha=4.0, rho=0.05)
    theta = line_defect_theta(m)
    # a >= 1 everywhere, a = 4 deep inside: 0 < theta < diameter/4
    assert 0.05 < theta < 0.125
    free = make_model("free")
    assert line_defect_theta(free) == pytest.approx(0.0, abs=1e-12)


def test_squares_delta_quadrature():
    m = make_model("kinetic_weight", hole=HoleShape("square", 0.47),
                   alpha=8.0, rho=0.05)
    delta, corridor = squares_detour_delta(m)
    assert corridor < 0.25  # the detour hypothesis for this configuration
    assert delta == pytest.approx(0.25 * (0.5 - 2 * corridor))
    assert delta > 0.0
    # weak bump: corridor close to 1, no saving
    weak = make_model("kinetic_weight", hole=HoleShape("square", 0.47),
                      alpha=1.0, rho=0.05)
    d2, c2 = squares_detour_delta(weak)
    assert c2 == pytest.approx(1.0) and d2 < 0.0


def test_snapped_values_positions(holed, free_model):
    from hjhomog.solvers import InitialData, solve_ueps
    g = InitialData("linear", vector=(-1.0, 0.0))
    u = solve_ueps(free_model, holed, 0.25, g, (0.5,), 1 / 16, M0=2.6,
                   eval_radius=0.25)
    out = snapped_values(u, (0.0, 0.0), 0.5)
    assert len(out) == 4  # hole-center boundary tie ring
    for pos, val in out:
        assert np.isfinite(val)
        assert np.hypot(*pos) == pytest.approx(0.25 * 0.25)  # slow coords


def _tiny_tables():
    rate = RateTable([0.25, 0.125], [0.04, 0.02], [1.0, 2.0], [0.0, 0.0],
                     1.0, -1.0, probe_grid(), (0.5, 1.0), 0.5, 0.0, True)
    dilute = DiluteTable(
        [DiluteRow(0.25, 0.5, 1 / 32, 0.09, 0.1, {"gap@t=1.0": 0.09}, True)],
        0.3, 0.1, 0.5, 0.01, {0.25: -0.5},
        [{"eta": 0.5, "eps": 0.25, "gap": 0.05, "c_emp": 0.2}], True)
    defect = DefectTable("line_e1",
                         [DefectRow(0.25, (0.0, 0.0), 1.0, -0.84, -0.5,
                                    -0.34, -0.07, True)],
                         {"theta": 0.0876}, True)
    return rate, dilute, defect


def test_emit_report_schemas(tmp_path):
    rate, dilute, defect = _tiny_tables()
    paths = emit_report({"rate": rate, "dilute": dilute, "defect": defect},
                        str(tmp_path))
    names = {p.split("/")[-1] for p in paths}
    assert names == {"rate.csv", "dilute.csv", "defect.csv", "summary.json"}
    assert (tmp_path / "rate.csv").read_text().splitlines()[0] == \
        "epsilon,sup_error,runtime_s"
    assert (tmp_path / "dilute.csv").read_text().splitlines()[0] == \
        "epsilon,eta,gap,bound,pass"
    assert (tmp_path / "defect.csv").read_text().splitlines()[0] == \
        "epsilon,probe_x,probe_y,t,w,u,gap,bound,pass"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert set(summary) == {"rate", "dilute", "defect"}
    # no wall-clock data anywhere in the summary
    assert "runtime" not in json.dumps(summary)
    assert summary["rate"]["slope"] == 1.0


def test_emit_report_empty_table(tmp_path):
    empty = RateTable([], [], [], [], float("nan"), float("nan"),
                      probe_grid(), (1.0,), 0.5, 0.0, False)
    emit_report({"rate": empty}, str(tmp_path))
    lines = (tmp_path / "rate.csv").read_text().splitlines()
    assert lines == ["epsilon,sup_error,runtime_s"]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["rate"]["no data"] is True


def test_emit_report_deterministic_bytes(tmp_path):
    _, dilute, defect = _tiny_tables()
    d1, d2 = tmp_path / "a", tmp_path / "b"
    emit_report({"dilute": dilute, "defect": defect}, str(d1))
    emit_report({"dilute": dilute, "defect": defect}, str(d2))
    for name in ("dilute.csv", "defect.csv", "summary.json"):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
