"""End-to-end acceptance: every headline quantitative claim of the
laboratory, one pass/fail line per criterion.

The heavyweight sweeps (rate, dilute) are module-scoped fixtures so each
runs once; expect a few minutes of wall clock on one core.
"""

import numpy as np
import pytest

from hjhomog._dp import run_dp
from hjhomog.effective import hbar_cell, lbar_table, mbar_star, ubar_from_mbar
from hjhomog.experiments import (defect_experiment, dilute_experiment,
                                 effective_experiment, emit_report,
                                 line_defect_theta, rate_experiment)
from hjhomog.geometry import (DefectSpec, HoleShape, PerforatedDomain,
                              build_lattice)
from hjhomog.hamiltonians import (check_A5, eval_L, legendre_oracle,
                                  make_model)
from hjhomog.metric import metric_field, metric_value
from hjhomog.solvers import (InitialData, ZERO, hopf_lax, solve_tilde_ueps,
                             solve_ueps, solve_weps)

H = 1 / 16
M0 = 2.6
DISC = HoleShape("disc", 0.25)
G = InitialData("linear", vector=(-1.0, 0.0))


@pytest.fixture(scope="module")
def holed_dom():
    return PerforatedDomain(hole=DISC)


@pytest.fixture(scope="module")
def free_model_():
    return make_model("free", lip_g=1.0)


@pytest.fixture(scope="module")
def eff_tb(free_model_, holed_dom):
    return effective_experiment(free_model_, holed_dom, H, M0=M0)


@pytest.fixture(scope="module")
def rate_tb(free_model_, holed_dom):
    return rate_experiment(free_model_, holed_dom, G,
                           [0.25, 0.125, 0.0625], H, M0=M0)


@pytest.fixture(scope="module")
def dilute_tb(holed_dom):
    model = make_model("stripe_weight", lip_g=1.0)
    return dilute_experiment(model, holed_dom, G,
                             [(0.25, 0.5), (0.125, 2.0 ** -1.5)],
                             h_max=1 / 32, M0=M0)


@pytest.fixture(scope="module")
def line_tb():
    dom = PerforatedDomain(hole=DISC, defects=DefectSpec("line_e1"))
    model = make_model("kinetic_weight", hole=DISC, alpha=4.0, rho=0.05,
                       lip_g=1.0)
    return defect_experiment(model, dom, G, [0.25, 0.125, 0.0625], H, M0=M0)


@pytest.fixture(scope="module")
def singleton_tb():
    dom = PerforatedDomain(hole=DISC, defects=DefectSpec("singleton0"))
    model = make_model("kinetic_potential", hole=DISC, beta=1.0, rho=0.05,
                       lip_g=1.0)
    return defect_experiment(model, dom, ZERO, [0.25, 0.125], H, M0=M0,
                             times=(0.5, 1.0))


def test_criterion_1_axis_value_both_routes(eff_tb):
    """Disc-perforated plane, unweighted medium: Hbar(+-e1) = 1/2 via the
    metric route, and the cell route agrees, both within 0.05."""
    hm = {(r.component1, r.component2): r.value
          for r in eff_tb.rows if r.kind == "Hbar_metric"}
    hc = {(r.component1, r.component2): r.value
          for r in eff_tb.rows if r.kind == "Hbar_cell"}
    for p in [(-1.0, 0.0), (1.0, 0.0)]:
        assert abs(hm[p] - 0.5) <= 0.05
        assert abs(hc[p] - hm[p]) <= 0.05


def test_criterion_2_upper_envelope(eff_tb):
    """Obstacles never raise the effective Hamiltonian above the
    unobstructed quadratic |p|^2/2, within 0.05."""
    hm = {(r.component1, r.component2): r.value
          for r in eff_tb.rows if r.kind == "Hbar_metric"}
    for p in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 0.0)]:
        assert hm[p] <= 0.5 * (p[0] ** 2 + p[1] ** 2) + 0.05


def test_criterion_3_stripe_whole_space_value(dilute_tb):
    """Striped medium, g = -x1: the unconstrained scaled value at the
    origin at t=1 is -1/2 within 0.03 for eps in {1/4, 1/8}."""
    for eps in (0.25, 0.125):
        assert abs(dilute_tb.tilde_at_origin[eps] + 0.5) <= 0.03


def test_criterion_4_rate_of_convergence(rate_tb):
    """Sup-error over the probe grid strictly decreases in eps and the
    log-log slope is at least 0.8 after subtracting the hole-free floor."""
    errs = rate_tb.sup_errors
    assert all(b < a for a, b in zip(errs, errs[1:])), errs
    assert rate_tb.slope >= 0.8, rate_tb.slope


def test_criterion_5_dilute_sandwich(dilute_tb):
    """Shrinking holes, eta = sqrt(eps): the four-inequality sandwich holds
    nodewise within 0.02 with one constant fitted on the coarsest row, and
    the gap constant is stable across the schedule."""
    assert dilute_tb.passed, dilute_tb.notes
    for row in dilute_tb.rows:
        assert row.passed
        assert row.gap <= row.bound
    # near-hole optimality: gap bounded away from zero across the eta sweep
    assert all(p["gap"] > 1e-9 for p in dilute_tb.probe)


def test_criterion_6_line_defect_gap(line_tb):
    """A filled line of holes drops the value at the origin below the
    hard-hole level by at least theta/2, at every swept eps."""
    theta = line_tb.constants["theta"]
    assert theta > 0.0
    for row in line_tb.rows:
        assert row.w <= -0.5 - theta / 2.0
    assert line_tb.passed


def test_criterion_7_singleton_pinning(singleton_tb):
    """One filled hole with a potential well: the defect value at the
    origin sits at -V(0) t (within 0.02 at t=1) and w/t approaches
    -max V within 0.05."""
    v0 = singleton_tb.constants["V0"]
    rows = singleton_tb.rows
    finest = min(r.epsilon for r in rows)
    for r in rows:
        if r.t == 1.0:
            assert r.w <= -v0 + 0.02
        if r.epsilon == finest:
            assert abs(r.w / r.t + v0) <= 0.05
    assert singleton_tb.passed


def test_criterion_8_property_suites(holed_dom, free_model_):
    """Structural identities: DPP composition, obstacle monotonicity, the
    defect sandwich, exact duality, the resting condition, uniform
    concatenation defects, m vs m*, scaling of the limit metric, and the
    two homogenized-value routes agreeing."""
    # (a) DPP: continuing a DP equals running it in one go, node for node
    lat = build_lattice(holed_dom, H, cells=(-1, 1, -1, 1), M0=2.0)
    init = (lat.positions() ** 2).sum(axis=-1)
    s1, tables = run_dp(lat, free_model_, init, 2, keep="final")
    s2, _ = run_dp(lat, free_model_, s1[2], 3, keep="final", tables=tables)
    s3, _ = run_dp(lat, free_model_, init, 5, keep="final", tables=tables)
    adm = lat.node_adm
    assert np.array_equal(s2[3][adm], s3[5][adm])

    # (b) hole monotonicity of the point metric
    free_dom = PerforatedDomain(hole=None)
    f0 = metric_field(free_model_, free_dom, (0.5, 0.5), 1.0, H, M0=M0)
    f1 = metric_field(free_model_, holed_dom, (0.5, 0.5), 1.0, H, M0=M0)
    for tgt in [(1.5, 0.5), (0.5, -0.5), (2.5, 0.5)]:
        assert metric_value(f0, tgt) <= metric_value(f1, tgt) + 1e-12

    # (c) defect sandwich tilde-u <= w <= u nodewise
    ddom = PerforatedDomain(hole=DISC, defects=DefectSpec("line_e1"))
    w = solve_weps(free_model_, ddom, 0.25, G, (0.5,), H, M0=M0,
                   eval_radius=0.25)
    til = solve_tilde_ueps(free_model_, ddom, 0.25, G, (0.5,), H, M0=M0,
                           eval_radius=0.25)
    u = solve_ueps(free_model_, ddom.without_defects(), 0.25, G, (0.5,), H,
                   M0=M0, eval_radius=0.25)
    adm = u.lat.node_adm
    assert (til._slice(0.5)[adm] <= w._slice(0.5)[adm] + 1e-9).all()
    assert (w._slice(0.5)[adm] <= u._slice(0.5)[adm] + 1e-9).all()

    # (d) duality against the brute-force oracle, 10^3 samples
    models = [free_model_,
              make_model("kinetic_weight", hole=DISC, alpha=4.0, rho=0.05),
              make_model("kinetic_potential", hole=DISC, beta=1.0, rho=0.05),
              make_model("stripe_weight", lip_g=1.0)]
    rng = np.random.default_rng(42)
    for model in models:
        ys = rng.uniform(-1.0, 1.0, size=(250, 2))
        vs = rng.uniform(-2.0, 2.0, size=(250, 2))
        for y, v in zip(ys, vs):
            ref = legendre_oracle(model, y, v, n_grid=513)
            assert abs(float(eval_L(model, y, v)) - ref) <= 5e-3

    # (e) resting condition: L(y, 0) = 0 is the minimum where A5 holds
    for model in models:
        rep = check_A5(model, n_samples=300)
        if model.family != "kinetic_potential":
            assert rep["holds"], (model.family, rep)

    # (f) concatenation defects of the anchored metric, uniform over the
    # doubling sweep t in {2, 4, 8, 16}
    x = np.array([0.5, 0.5])
    vals = {}
    for t in (2.0, 4.0, 8.0, 16.0):
        f = metric_field(free_model_, holed_dom, x, t, H, kind="mstar",
                         M0=2.0)
        vals[t] = metric_value(f, x + t * np.array([1.0, 0.0]))
    defects = [vals[2 * t] - 2 * vals[t] for t in (2.0, 4.0, 8.0)]
    assert max(abs(d) for d in defects) <= 1.0
    assert max(defects) - min(defects) <= 0.1

    # (g) anchored and point metrics differ by a bounded constant
    fm = metric_field(free_model_, holed_dom, (0.5, 0.5), 2.0, H, M0=M0)
    fs = metric_field(free_model_, holed_dom, (0.5, 0.5), 2.0, H,
                      kind="mstar", M0=M0)
    for tgt in [(1.5, 0.5), (2.5, 1.5)]:
        assert abs(metric_value(fm, tgt) - metric_value(fs, tgt)) <= 1.0

    # (h) positive 1-homogeneity of the limit anchored metric
    a, ra = mbar_star(free_model_, holed_dom, 1.0, (0.5, 0.5), (1.5, 0.5),
                      k_list=(4, 8), h=H, M0=M0)
    b, rb = mbar_star(free_model_, holed_dom, 2.0, (1.0, 1.0), (3.0, 1.0),
                      k_list=(4, 8), h=H, M0=M0)
    assert abs(b - 2.0 * a) <= 2.0 * ra + rb + 0.05

    # (i) homogenized value from mbar* equals the variational formula
    table = lbar_table(free_model_, holed_dom, H, k_list=(4, 8), M0=M0)
    x, t = (0.5, 0.0), 1.0
    u_metric = hopf_lax(table, G, x, t)
    u_cell = ubar_from_mbar(free_model_, holed_dom, G, x, t, k_list=(4, 8),
                            h=H, M0=M0)
    assert abs(u_cell - u_metric) <= 0.1


def test_criterion_9_deterministic_outputs(tmp_path, free_model_, holed_dom):
    """Two runs of one configuration emit byte-identical tables; even
    rate.csv's runtime_s column is a deterministic cost model."""
    dom = PerforatedDomain(hole=DISC, defects=DefectSpec("singleton0"))
    model = make_model("kinetic_potential", hole=DISC, beta=1.0, rho=0.05,
                       lip_g=1.0)
    outs = []
    for name in ("a", "b"):
        tb = defect_experiment(model, dom, ZERO, [0.25], H, M0=M0,
                               times=(0.5,))
        d = tmp_path / name
        emit_report({"defect": tb}, str(d))
        outs.append(d)
    for fname in ("defect.csv", "summary.json"):
        assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()

    rates = []
    for name in ("ra", "rb"):
        tb = rate_experiment(free_model_, holed_dom, G, [0.5, 0.25], H,
                             probe_radius=0.5, k_list=(4, 8), M0=M0)
        d = tmp_path / name
        emit_report({"rate": tb}, str(d))
        rates.append(d)
    for fname in ("rate.csv", "summary.json"):
        assert (rates[0] / fname).read_bytes() == \
            (rates[1] / fname).read_bytes()
