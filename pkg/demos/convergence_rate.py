"""Convergence of the oscillatory value function to its homogenized limit.

Solves the state-constrained problem u^eps with linear data g = -x1 on the
disc-perforated plane for a shrinking sequence of eps, measures the sup
distance to the homogenized value g(x) - t*Hbar(Dg) over a probe grid, and
fits the log-log slope after subtracting the hole-free discretization
floor.  At these settings the perforation error is exactly linear in eps.

Usage:
    python3 demos/convergence_rate.py
"""

from hjhomog import (HoleShape, InitialData, PerforatedDomain, make_model,
                     rate_experiment)


def main():
    dom = PerforatedDomain(hole=HoleShape("disc", 0.25))
    model = make_model("free", hole=dom.hole, lip_g=1.0)
    g = InitialData("linear", vector=(-1.0, 0.0))
    eps_list = [0.25, 0.125]

    print("u^eps vs homogenized limit, g = -x1, discs of radius 0.25")
    print(f"eps sweep: {eps_list}")
    print()
    tb = rate_experiment(model, dom, g, eps_list, h=1 / 16, M0=2.6,
                         k_list=(4, 8, 16))

    print(f"Hbar(Dg) = {tb.hbar:.6f}  (fit residual {tb.hbar_resid:.2e})")
    print()
    print(f"{'eps':>8} {'sup_error':>12} {'floor':>12} {'cost-model s':>13}")
    for e, s, f, r in zip(tb.epsilons, tb.sup_errors, tb.floors, tb.runtimes):
        print(f"{e:>8g} {s:>12.6f} {f:>12.6f} {r:>13.3f}")
    print()
    print(f"log-log slope after floor subtraction: {tb.slope:.3f}")
    print(f"strictly decreasing and slope >= 0.8: "
          f"{'PASS' if tb.passed else 'FAIL'}")


if __name__ == "__main__":
    main()
