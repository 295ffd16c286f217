"""Single JSON-config entry point: `hjhomog run <config.json>`.

The config has five sections (model, domain, grid, experiment, output);
every field has a default except model.family and experiment.kind, and
unknown sections or keys are rejected before any compute starts.  Exit
status: 0 success, 1 an asserted inequality FAILed, 2 config error, 3
numerical error (no admissible anchor / fixed point did not converge).

All dynamic programming is deterministic and every output file is a
deterministic function of the config (rate.csv's runtime_s column is a
cost model, not a stopwatch); output.seed only feeds sampling diagnostics.

grid.dt and grid.bbox control the lattice of a `solve` run only; the
experiment kinds size their lattices from the probe/evaluation radii so
that no admissible trajectory is lost to truncation, and reject explicit
overrides rather than silently ignoring them.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import experiments as xp
from .effective import DEFAULT_K_LIST, DEFAULT_LAMBDAS
from .geometry import (DefectSpec, GeometryError, HoleShape,
                       LatticeResolutionError, PerforatedDomain)
from .hamiltonians import ModelError, model_for_domain
from ._dp import NonConvergenceError
from .metric import NoAnchorError
from .solvers import InitialData, solve_tilde_ueps, solve_ueps, solve_weps

_SECTIONS = {
    "model": {"family", "alpha", "beta", "rho", "lip_g", "K0"},
    "domain": {"hole", "eta", "defects"},
    "grid": {"h", "dt", "M0", "bbox"},
    "experiment": {"kind", "epsilon", "eps_list", "schedule", "times",
                   "probe_radius", "eval_radius", "p_list", "v_list",
                   "k_list", "lam_list", "v_radius", "v_step", "cell_h",
                   "sweep_etas", "solver", "g"},
    "output": {"directory", "seed", "workers"},
}
_KINDS = ("effective", "solve", "rate", "dilute", "defect", "validate")
_SOLVERS = {"ueps": solve_ueps, "tilde_ueps": solve_tilde_ueps,
            "weps": solve_weps}


class ConfigError(ValueError):
    pass


def _check_schema(cfg: dict) -> None:
    if not isinstance(cfg, dict):
        raise ConfigError("top level must be a JSON object")
    for sec in cfg:
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section {sec!r}")
        if not isinstance(cfg[sec], dict):
            raise ConfigError(f"section {sec!r} must be an object")
        for key in cfg[sec]:
            if key not in _SECTIONS[sec]:
                raise ConfigError(f"unknown key {sec}.{key}")
    fam = cfg.get("model", {}).get("family")
    if not fam:
        raise ConfigError("model.family is required")
    kind = cfg.get("experiment", {}).get("kind")
    if kind not in _KINDS:
        raise ConfigError(f"experiment.kind must be one of {_KINDS}, got {kind!r}")


def _build_domain(dcfg: dict) -> PerforatedDomain:
    hole = None
    hcfg = dcfg.get("hole")
    if hcfg is not None:
        hole = HoleShape(hcfg.get("kind", "disc"), float(hcfg.get("size", 0.25)))
    defects = DefectSpec("none")
    dfc = dcfg.get("defects", "none")
    if isinstance(dfc, str):
        defects = DefectSpec(dfc)
    elif dfc is not None:
        cells = dfc.get("cells")
        defects = DefectSpec(dfc.get("kind", "none"),
                             cells=None if cells is None else
                             [tuple(c) for c in cells])
    return PerforatedDomain(hole=hole, eta=float(dcfg.get("eta", 1.0)),
                            defects=defects)


def _build_g(gcfg: dict | None) -> InitialData:
    if gcfg is None:
        gcfg = {"kind": "linear", "vector": [-1.0, 0.0]}
    kind = gcfg.get("kind", "linear")
    if kind == "constant":
        return InitialData("constant", value=float(gcfg.get("value", 0.0)))
    vec = gcfg.get("vector", [-1.0, 0.0])
    return InitialData("linear", vector=(float(vec[0]), float(vec[1])),
                       value=float(gcfg.get("value", 0.0)))


def _write_solve_csv(path: str, vf, eval_radius: float) -> None:
    """Slices as t,x,y,value, clipped to the ball where the lattice is
    guaranteed wide enough that no admissible trajectory was truncated."""
    with open(path, "w") as f:
        f.write("t,x,y,value\n")
        for t in vf.times:
            pos, val = vf.grid_values(t, eval_radius)
            keep = (pos ** 2).sum(axis=-1) <= eval_radius ** 2 + 1e-12
            for (x, y), v in zip(pos[keep], val[keep]):
                f.write("%.12g,%.12g,%.12g,%.12g\n" % (t, x, y, v))


def run(config_path: str, out_dir: str | None = None,
        quiet: bool = False) -> int:
    """Execute one config; returns the process exit status."""
    say = (lambda *a: None) if quiet else print
    try:
        with open(config_path) as f:
            cfg = json.load(f)
        _check_schema(cfg)
    except (OSError, json.JSONDecodeError, ConfigError) as e:
        print(f"cli.run: config error: {e}", file=sys.stderr)
        return 2

    try:
        mcfg = cfg.get("model", {})
        dom = _build_domain(cfg.get("domain", {}))
        model = model_for_domain(
            mcfg["family"], dom, alpha=float(mcfg.get("alpha", 1.0)),
            beta=float(mcfg.get("beta", 0.0)), rho=float(mcfg.get("rho", 0.05)),
            lip_g=float(mcfg.get("lip_g", 1.0)),
            K0=(None if mcfg.get("K0") is None else float(mcfg["K0"])))
        gcfg = cfg.get("grid", {})
        h = float(gcfg.get("h", 1 / 16))
        M0 = None if gcfg.get("M0") is None else float(gcfg["M0"])
        dt = None if gcfg.get("dt") is None else float(gcfg["dt"])
        bbox = (None if gcfg.get("bbox") is None
                else tuple(int(c) for c in gcfg["bbox"]))
        ecfg = cfg.get("experiment", {})
        kind = ecfg["kind"]
        if kind != "solve" and (dt is not None or bbox is not None):
            raise ConfigError("grid.dt and grid.bbox apply only to "
                              "experiment.kind 'solve'")
        ocfg = cfg.get("output", {})
        out = out_dir or ocfg.get("directory", "out")
        workers = int(ocfg.get("workers", 1))
        if workers > 1:
            try:
                import numba
                numba.set_num_threads(workers)
            except Exception:
                pass
        g = _build_g(ecfg.get("g"))
        times = tuple(float(t) for t in ecfg.get("times",
                                                 xp.DEFAULT_PROBE_TIMES))

        tables = {}
        if kind == "validate":
            res = xp.validate_suite(verbose=not quiet,
                                    seed=int(ocfg.get("seed", 0)))
            ok = res.pop("all")
            say(f"validate: {sum(res.values())}/{len(res)} checks passed")
            return 0 if ok else 1

        if kind == "solve":
            eps = float(ecfg.get("epsilon", 0.25))
            radius = float(ecfg.get("eval_radius", 0.5))
            solver = _SOLVERS[ecfg.get("solver", "ueps")]
            vf = solver(model, dom, eps, g, times, h, M0=M0,
                        eval_radius=radius, cells=bbox, dt=dt)
            import os
            os.makedirs(out, exist_ok=True)
            path = os.path.join(out, "solve.csv")
            _write_solve_csv(path, vf, radius)
            say(f"solve: wrote {path}")
            return 0

        if kind == "rate":
            tb = xp.rate_experiment(
                model, dom, g, ecfg.get("eps_list", [0.25, 0.125, 0.0625]),
                h, times=times,
                probe_radius=float(ecfg.get("probe_radius", 1.0)),
                k_list=tuple(ecfg.get("k_list", DEFAULT_K_LIST)), M0=M0,
                v_radius=float(ecfg.get("v_radius", 2.0)),
                v_step=float(ecfg.get("v_step", 0.125)))
            tables["rate"] = tb
            say(f"rate: slope={tb.slope:.3f} "
                f"{'PASS' if tb.passed else 'FAIL'}")
        elif kind == "dilute":
            sched = [(float(e), float(n)) for e, n in
                     ecfg.get("schedule", [[0.25, 0.5],
                                           [0.125, 2.0 ** -1.5]])]
            tb = xp.dilute_experiment(
                model, dom, g, sched, h, times=times,
                eval_radius=float(ecfg.get("eval_radius", 0.25)), M0=M0,
                cell_h=float(ecfg.get("cell_h", 1 / 32)),
                sweep_etas=tuple(ecfg.get("sweep_etas", (0.5, 0.75, 1.0))))
            tables["dilute"] = tb
            say(f"dilute: C={tb.C_thm:.3f} "
                f"{'PASS' if tb.passed else 'FAIL'}")
        elif kind == "defect":
            tb = xp.defect_experiment(
                model, dom, g, ecfg.get("eps_list", [0.25, 0.125]), h,
                M0=M0, times=ecfg.get("times"))
            tables["defect"] = tb
            say(f"defect[{tb.kind}]: {'PASS' if tb.passed else 'FAIL'}")
        elif kind == "effective":
            tb = xp.effective_experiment(
                model, dom, h,
                p_list=[tuple(map(float, p)) for p in
                        ecfg.get("p_list", xp.DEFAULT_P_LIST)],
                v_list=[tuple(map(float, v)) for v in
                        ecfg.get("v_list", xp.DEFAULT_V_LIST)],
                k_list=tuple(ecfg.get("k_list", DEFAULT_K_LIST)),
                lam_list=tuple(ecfg.get("lam_list", DEFAULT_LAMBDAS)),
                M0=M0, cell_h=(None if ecfg.get("cell_h") is None
                               else float(ecfg["cell_h"])))
            tables["effective"] = tb
            say(f"effective: {'PASS' if tb.passed else 'FAIL'}")

        paths = xp.emit_report(tables, out)
        for p in paths:
            say(f"wrote {p}")
        passed = all(tb.passed for tb in tables.values())
        return 0 if passed else 1

    except (ModelError, LatticeResolutionError, ConfigError, KeyError) as e:
        print(f"cli.run: config error: {e}", file=sys.stderr)
        return 2
    except (NoAnchorError, NonConvergenceError) as e:
        print(f"cli.run: numerical error: {e}", file=sys.stderr)
        return 3
    except GeometryError as e:
        print(f"cli.run: config error: {e}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="hjhomog",
        description="state-constraint homogenization lab: run a JSON config")
    ap.add_argument("command", choices=["run"],
                    help="only 'run' is supported")
    ap.add_argument("config", help="path to the JSON run configuration")
    ap.add_argument("--out", default=None, help="override output directory")
    ap.add_argument("--quiet", action="store_true",
                    help="suppress progress lines")
    ns = ap.parse_args(argv)
    return run(ns.config, out_dir=ns.out, quiet=ns.quiet)


if __name__ == "__main__":
    sys.exit(main())
