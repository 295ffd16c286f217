"""Hamiltonian families with quadratic clamping and exact Legendre duals.

Every family is isotropic in the momentum, H(y, p) = a(y) |p|^2 / 2 + V(y),
with coefficients that are Z^2-periodic in y:

- free:              a = 1, V = 0
- kinetic_weight:    a = 1 + (alpha-1) * bump(y), alpha >= 1, bump supported
                     in the (eta-scaled) holes with mollification width rho
- kinetic_potential: a = 1, V = beta * bump(y)
- stripe_weight:     a(y) = 1 - |y2 - round(y2)| in [1/2, 1], V = 0

The Hamiltonian is clamped from below by the coercive quadratic,

    H(y, p) = max( a(y) |p|^2/2 + V(y),  |p|^2/2 - K0 ),

with K0 the (closed-form) max deviation of the family from |p|^2/2 over the
ball |p| <= R = 2*C0 + 1.  The max keeps H convex in p, leaves the family
formula untouched on that ball (for a >= 1 families the clamp is nowhere
active), and makes the lower envelope bound |p|^2/2 - K0 <= H exact by
construction.  eval_L is the exact convex dual, so in particular it
reproduces the family's closed-form dual |v|^2/(2 a(y)) - V(y) verbatim at
every velocity the dynamic-programming kernels ever query.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import HoleShape, PerforatedDomain, hole_inset

FAMILIES = ("free", "kinetic_weight", "kinetic_potential", "stripe_weight")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class HamiltonianModel:
    family: str
    hole: HoleShape | None = None
    eta: float = 1.0
    alpha: float = 1.0  # weight value deep inside holes (kinetic_weight)
    beta: float = 0.0   # potential amplitude deep inside holes (kinetic_potential)
    rho: float = 0.05   # mollification width of the hole profile
    lip_g: float = 1.0  # Lipschitz bound of the initial data this model is run with
    C0: float = 0.0
    K0: float = 0.0
    M0: float = 0.0

    @property
    def clamp_radius(self) -> float:
        return 2.0 * self.C0 + 1.0


def make_model(family: str, hole: HoleShape | None = None, eta: float = 1.0,
               alpha: float = 1.0, beta: float = 0.0, rho: float = 0.05,
               lip_g: float = 1.0, C0: float | None = None,
               K0: float | None = None) -> HamiltonianModel:
    """Build a model, deriving the structural constants unless supplied.

    C0 = lip_g + 1 (Lipschitz bound of the value function, with slack);
    K0 = max deviation of the family from |p|^2/2 over the clamp ball |p| <= R;
    M0 from velocity_bound().
    """
    if family not in FAMILIES:
        raise ModelError(f"unknown family {family!r}")
    if family in ("kinetic_weight", "kinetic_potential") and hole is None:
        raise ModelError(f"{family} needs a hole shape to carry its coefficient")
    if alpha < 1.0:
        raise ModelError("alpha must be >= 1")
    if beta < 0.0 or rho <= 0.0 or lip_g < 0.0:
        raise ModelError("bad coefficient parameters")
    if C0 is None:
        C0 = lip_g + 1.0
    R = 2.0 * C0 + 1.0
    if K0 is None:
        if family == "free":
            K0 = 0.0
        elif family == "kinetic_weight":
            K0 = (alpha - 1.0) * R * R / 2.0
        elif family == "stripe_weight":
            K0 = R * R / 4.0  # |a - 1| <= 1/2
        else:
            K0 = beta
    m = HamiltonianModel(family, hole, eta, alpha, beta, rho, lip_g, C0, K0, 0.0)
    M0 = velocity_bound(m, lip_g)
    return HamiltonianModel(family, hole, eta, alpha, beta, rho, lip_g, C0, K0, M0)


def model_for_domain(family: str, dom: PerforatedDomain, **kw) -> HamiltonianModel:
    """make_model with the hole geometry taken from a domain."""
    return make_model(family, hole=dom.hole, eta=dom.eta, **kw)


def _smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def coeff_a(model: HamiltonianModel, y) -> np.ndarray:
    """Kinetic weight a(y) (Z^2-periodic), vectorized over y[..., 2]."""
    y = np.asarray(y, dtype=float)
    if model.family == "stripe_weight":
        y2 = y[..., 1]
        return 1.0 - np.abs(y2 - np.round(y2))
    if model.family == "kinetic_weight":
        s = _smoothstep(hole_inset(model.hole, model.eta, y) / model.rho)
        return 1.0 + (model.alpha - 1.0) * s
    return np.ones(y.shape[:-1], dtype=float)


def potential_V(model: HamiltonianModel, y) -> np.ndarray:
    """Potential V(y) (Z^2-periodic), vectorized over y[..., 2]."""
    y = np.asarray(y, dtype=float)
    if model.family == "kinetic_potential":
        s = _smoothstep(hole_inset(model.hole, model.eta, y) / model.rho)
        return model.beta * s
    return np.zeros(y.shape[:-1], dtype=float)


def eval_H(model: HamiltonianModel, y, p) -> np.ndarray:
    """Clamped Hamiltonian H(y,p) = max(a(y)|p|^2/2 + V(y), |p|^2/2 - K0);
    broadcasts over y[..., 2], p[..., 2]."""
    y = np.asarray(y, dtype=float)
    p = np.asarray(p, dtype=float)
    a = coeff_a(model, y)
    V = potential_V(model, y)
    s2 = p[..., 0] ** 2 + p[..., 1] ** 2
    out = np.maximum(a * s2 / 2.0 + V, s2 / 2.0 - model.K0)
    return out if out.shape else float(out)


def eval_L(model: HamiltonianModel, y, v) -> np.ndarray:
    """Exact Legendre dual of the clamped Hamiltonian.

    Where a(y) >= 1 the clamp is inactive and the dual is the family dual
    |v|^2/(2a) - V.  Where a(y) < 1 (stripe rows) the clamp takes over at
    s_x = sqrt(2 (K0 + V) / (1 - a)) and the dual is

        |v|^2/(2a) - V                for |v| <= a s_x,
        s_x |v| - (a s_x^2/2 + V)     for a s_x < |v| < s_x,
        |v|^2/2 + K0                  for |v| >= s_x.
    """
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    a = coeff_a(model, y)
    V = potential_V(model, y)
    w = np.hypot(v[..., 0], v[..., 1])
    fam = w * w / (2.0 * a) - V
    gap = 1.0 - a
    soft = gap > 1e-15  # points where the lower clamp can win
    sx = np.sqrt(2.0 * (model.K0 + V) / np.where(soft, gap, 1.0))
    sx = np.where(soft, sx, np.inf)
    sxf = np.where(soft, sx, 0.0)  # finite stand-in where unused
    corner = sxf * w - (a * sxf * sxf / 2.0 + V)
    tail = w * w / 2.0 + model.K0
    out = np.where(w <= a * sx, fam, np.where(w < sx, corner, tail))
    return out if out.shape else float(out)


def legendre_oracle(model: HamiltonianModel, y, v, p_radius: float | None = None,
                    n_grid: int = 129) -> float:
    """Brute-force Legendre transform: max over a momentum grid of
    p.v - eval_H(y, p).  Reference oracle for eval_L; the grid covers at
    least the clamp ball and the dual argmax for the given v."""
    y = np.asarray(y, dtype=float)
    v = np.asarray(v, dtype=float)
    w = float(np.hypot(v[0], v[1]))
    if p_radius is None:
        p_radius = max(model.clamp_radius, w + np.sqrt(2 * model.K0) + 1.0) + 1.0
    if p_radius < model.clamp_radius:
        raise ModelError("p_radius must cover the clamp ball")
    if n_grid < 64:
        raise ModelError("n_grid must be >= 64")
    ax = np.linspace(-p_radius, p_radius, n_grid)
    px, py = np.meshgrid(ax, ax)
    pts = np.stack([px, py], axis=-1)
    vals = pts[..., 0] * v[0] + pts[..., 1] * v[1] - eval_H(model, y, pts)
    return float(vals.max())


def check_A5(model: HamiltonianModel, n_samples: int = 1000, seed: int = 0) -> dict:
    """Check the resting condition min_p H(y, p) = H(y, 0) = 0 and its dual
    min_v L(y, v) = L(y, 0) = 0 on random cell points.

    Returns a report dict; `holds` is the joint verdict.  The potential
    family fails by design (H(y,0) = V(y) > 0 inside holes)."""
    rng = np.random.default_rng(seed)
    ys = rng.uniform(-0.5, 0.5, size=(n_samples, 2))
    H0 = np.array([eval_H(model, y, (0.0, 0.0)) for y in ys])
    L0 = np.array([eval_L(model, y, (0.0, 0.0)) for y in ys])
    vs = rng.uniform(-1.0, 1.0, size=(n_samples, 2))
    Lv = np.array([eval_L(model, y, v) for y, v in zip(ys, vs)])
    max_H0 = float(np.abs(H0).max())
    max_L0 = float(np.abs(L0).max())
    min_gap = float((Lv - L0).min())
    holds = max_H0 <= 1e-12 and max_L0 <= 1e-12 and min_gap >= -1e-12
    return {"holds": holds, "max_abs_H_at_0": max_H0,
            "max_abs_L_at_0": max_L0, "min_L_minus_L0": min_gap}


def velocity_bound(model: HamiltonianModel, lip_g: float) -> float:
    """Speed bound M0 for optimal paths run with lip_g-Lipschitz initial
    data.  Every family satisfies L(y,v) >= |v|^2/(2 a_up) - K0 with
    a_up = alpha for the kinetic weight and 1 otherwise, so minimizer
    speeds stay below the positive root of M^2/(2 a_up) - K0 = C M + C,
    C = lip_g + 2 K0 + 1:  M0 = a_up C + sqrt(a_up^2 C^2 + 2 a_up (C + K0))."""
    if lip_g < 0:
        raise ModelError("lip_g must be >= 0")
    a_up = model.alpha if model.family == "kinetic_weight" else 1.0
    C = lip_g + 2.0 * model.K0 + 1.0
    return a_up * C + np.sqrt(a_up * a_up * C * C + 2.0 * a_up * (C + model.K0))
