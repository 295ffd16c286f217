"""Filled-hole defects: when removing a few obstacles changes the limit.

Three perturbations of the perforated plane, each filling a negligible
(measure-zero in the scaled limit) family of holes, with three different
outcomes for the value w^eps at the origin:

  1. a line of filled holes along e1 in a medium that is slow off the
     integer rows: paths run along the defect and beat the hard-hole value
     by a persistent gap bounded below via a quadrature constant theta;
  2. a single filled hole at the origin in a medium with a potential well
     there: the optimal path parks on the defect and w^eps(0,t) ~ -V(0)*t,
     so the unperturbed limit is lost entirely;
  3. the same line construction with nearly-touching squares: the slow
     corridor between obstacles is too cheap for the detour bound to bite,
     a hypothesis check the experiment reports rather than asserts.

Usage:
    python3 demos/defect_gallery.py
"""

from hjhomog import (DefectSpec, HoleShape, InitialData, PerforatedDomain,
                     ZERO, defect_experiment, make_model)

EPS_LIST = [0.25, 0.125]
H = 1 / 16


def show(title, tb):
    print(title)
    for key, val in tb.constants.items():
        if isinstance(val, float):
            print(f"  {key} = {val:.6f}")
    for row in tb.rows:
        print(f"  eps={row.epsilon:<6g} t={row.t:<4g} "
              f"w={row.w:+.6f}  hard-hole u={row.u:+.6f}  "
              f"gap={row.gap:+.6f}  bound={row.bound:+.6f}")
    print(f"  => {'PASS' if tb.passed else 'FAIL'}")
    print()


def main():
    disc = HoleShape("disc", 0.25)
    g = InitialData("linear", vector=(-1.0, 0.0))

    dom = PerforatedDomain(hole=disc, defects=DefectSpec("line_e1"))
    model = make_model("kinetic_weight", hole=disc, alpha=4.0, rho=0.05,
                       lip_g=1.0)
    show("line of filled holes, off-row kinetic weight alpha=4:",
         defect_experiment(model, dom, g, EPS_LIST, H, M0=2.6))

    dom = PerforatedDomain(hole=disc, defects=DefectSpec("singleton0"))
    model = make_model("kinetic_potential", hole=disc, beta=1.0, rho=0.05,
                       lip_g=1.0)
    show("one filled hole at the origin, potential well V(0)=1:",
         defect_experiment(model, dom, ZERO, EPS_LIST, H, M0=2.6,
                           times=(0.5, 1.0)))

    sq = HoleShape("square", 0.47)
    dom = PerforatedDomain(hole=sq, defects=DefectSpec("squares_e1"))
    model = make_model("kinetic_weight", hole=sq, alpha=8.0, rho=0.05,
                       lip_g=1.0)
    show("near-touching squares, corridor-speed hypothesis check:",
         defect_experiment(model, dom, g, EPS_LIST, h=1 / 32, M0=2.6))


if __name__ == "__main__":
    main()
