"""Threshold quantities and closed-form equilibria of the basic model."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .model import ModelParams, State

RESIDUAL_TOL = 1e-9


class EquilibriumKind(enum.Enum):
    TRIVIAL = "Trivial"
    IMMUNOSUPPRESSION = "Immunosuppression"
    NO_ADE = "NoAde"
    ADE = "Ade"


@dataclass(frozen=True)
class DerivedThresholds:
    r0: float
    v_t: float
    v_is: float
    w: float
    zeta: float

    @property
    def r0_above_one(self) -> bool:
        return self.r0 > 1

    @property
    def delta_above_mu(self) -> bool:
        return self.zeta > 0

    @property
    def v_is_above_v_t(self) -> bool:
        # v_is > v_t, equivalently w > 0
        return self.w > 0

    def to_dict(self) -> dict:
        return {
            "r0": self.r0,
            "v_t": self.v_t,
            "v_is": self.v_is,
            "w": self.w,
            "zeta": self.zeta,
            "r0_above_one": self.r0_above_one,
            "delta_above_mu": self.delta_above_mu,
            "v_is_above_v_t": self.v_is_above_v_t,
        }


@dataclass(frozen=True)
class EquilibriumPoint:
    kind: EquilibriumKind
    state: State
    residual: float

    def to_dict(self) -> dict:
        s = self.state
        return {"kind": self.kind.value, "T": s.T, "I": s.I, "V": s.V, "A": s.A, "residual": self.residual}


def derived_thresholds(p: ModelParams) -> DerivedThresholds:
    r0 = p.beta0 * p.omega * p.lam / (p.c * p.delta * p.mu)
    v_t = p.sigma / p.a
    # v_is is only a viral load when r0 > 1; the formula is kept for all r0
    v_is = (r0 - 1) * p.mu / p.beta0
    w = r0 - 1 - p.sigma * p.beta0 / (p.mu * p.a)
    return DerivedThresholds(r0=r0, v_t=v_t, v_is=v_is, w=w, zeta=p.delta - p.mu)


def equation_terms(p: ModelParams, T: float, I: float, V: float, A: float):
    """Signed terms of each of the four balance equations."""
    infection = (p.beta0 + p.beta1 * A) * V * T
    return (
        (p.lam, -p.mu * T, -infection),
        (infection, -p.delta * I),
        (p.omega * I, -p.c * V, -p.b * A * V),
        (p.a * V * A, -p.sigma * A),
    )


def state_residual(p: ModelParams, s: State) -> float:
    """Max over equations of |rhs_i| / max(1, sum_j |term_ij|)."""
    worst = 0.0
    for terms in equation_terms(p, s.T, s.I, s.V, s.A):
        scale = max(1.0, math.fsum(abs(x) for x in terms))
        worst = max(worst, abs(math.fsum(terms)) / scale)
    return worst


def equilibrium_residual(p: ModelParams, e: EquilibriumPoint) -> float:
    return state_residual(p, e.state)


def _point(p: ModelParams, kind: EquilibriumKind, T: float, I: float, V: float, A: float) -> EquilibriumPoint:
    s = State(0.0, T, I, V, A)
    return EquilibriumPoint(kind, s, state_residual(p, s))


def trivial_equilibrium(p: ModelParams) -> EquilibriumPoint:
    return _point(p, EquilibriumKind.TRIVIAL, p.lam / p.mu, 0.0, 0.0, 0.0)


def immunosuppression_equilibrium(p: ModelParams) -> EquilibriumPoint:
    """Steady state with no antibodies, V = v_is.

    T is taken from dI/dt = dV/dt = 0 at A = 0, i.e. T = delta*c/(beta0*omega).
    """
    th = derived_thresholds(p)
    if th.r0 <= 1:
        raise ValueError(f"immunosuppression equilibrium needs r0 > 1 (r0={th.r0:.6g})")
    T = p.delta * p.c / (p.beta0 * p.omega)
    I = (th.r0 - 1) * p.c * p.mu / (p.omega * p.beta0)
    return _point(p, EquilibriumKind.IMMUNOSUPPRESSION, T, I, th.v_is, 0.0)


def _require_v_is_above_v_t(th: DerivedThresholds):
    if not th.v_is_above_v_t:
        raise ValueError(f"equilibrium needs v_is > v_t (w={th.w:.6g})")


def no_ade_equilibrium(p: ModelParams) -> EquilibriumPoint:
    """Antibody-controlled equilibrium for beta1 = 0, V pinned at v_t."""
    if p.beta1 != 0:
        raise ValueError("no_ade_equilibrium requires beta1 == 0; use ade_equilibrium")
    th = derived_thresholds(p)
    if th.w < 0:
        _require_v_is_above_v_t(th)
    v_t = th.v_t
    denom = p.mu + p.beta0 * v_t
    T = p.lam / denom
    I = p.beta0 * p.lam * v_t / (p.delta * denom)
    # dV/dt = 0 -> A = (omega*I/v_t - c)/b; same as beta0*c*(v_is - v_t)/(b*denom)
    A = 0.0 if th.w == 0 else p.beta0 * p.c * (th.v_is - v_t) / (p.b * denom)
    return _point(p, EquilibriumKind.NO_ADE, T, I, v_t, max(A, 0.0))


def ade_quadratic(p: ModelParams) -> tuple[float, float, float]:
    """Coefficients (c2, c1, c0) of the antibody-level quadratic.

    Expanding omega*beta(A)*lam = delta*(c + b*A)*(mu + beta(A)*v_t).
    """
    v_t = p.sigma / p.a
    c2 = p.delta * p.b * p.beta1 * v_t
    c1 = p.delta * (p.c * p.beta1 * v_t + p.b * p.mu + p.b * p.beta0 * v_t) - p.omega * p.lam * p.beta1
    c0 = p.delta * p.c * (p.mu + p.beta0 * v_t) - p.omega * p.lam * p.beta0
    return c2, c1, c0


def _positive_root(c2: float, c1: float, c0: float) -> float:
    disc = c1 * c1 - 4 * c2 * c0
    if disc <= 0:
        raise ArithmeticError(f"antibody quadratic has non-positive discriminant {disc:.6g}")
    q = -0.5 * (c1 + math.copysign(math.sqrt(disc), c1))
    roots = (q / c2, c0 / q)
    pos = [r for r in roots if r > 0]
    if len(pos) != 1:
        raise ArithmeticError(f"expected exactly one positive root, got {roots}")
    return pos[0]


def ade_equilibrium(p: ModelParams) -> EquilibriumPoint:
    """Equilibrium with ADE (beta1 > 0); A is the positive quadratic root."""
    if p.beta1 <= 0:
        raise ValueError("ade_equilibrium requires beta1 > 0; use no_ade_equilibrium")
    th = derived_thresholds(p)
    _require_v_is_above_v_t(th)
    c2, c1, c0 = ade_quadratic(p)
    # product of roots c0/c2 < 0, so exactly one root is positive
    if not c0 / c2 < 0:
        raise ArithmeticError(f"root product c0/c2={c0 / c2:.6g} is not negative")
    A = _positive_root(c2, c1, c0)
    beta = p.beta0 + p.beta1 * A
    T = p.delta * (p.c + p.b * A) / (p.omega * beta)
    I = th.v_t * (p.c + p.b * A) / p.omega
    return _point(p, EquilibriumKind.ADE, T, I, th.v_t, A)


def all_equilibria(p: ModelParams) -> dict[EquilibriumKind, EquilibriumPoint | str]:
    """Every equilibrium kind, or the reason it is not admissible."""
    out: dict[EquilibriumKind, EquilibriumPoint | str] = {}
    makers = {
        EquilibriumKind.TRIVIAL: trivial_equilibrium,
        EquilibriumKind.IMMUNOSUPPRESSION: immunosuppression_equilibrium,
        EquilibriumKind.NO_ADE: no_ade_equilibrium,
        EquilibriumKind.ADE: ade_equilibrium,
    }
    for kind, make in makers.items():
        try:
            out[kind] = make(p)
        except (ValueError, ArithmeticError) as exc:
            out[kind] = str(exc)
    return out
