"""Parameter/state types and right-hand sides of the basic and latent models.

The basic model tracks target cells T, infected cells I, free virus V and
antibodies A. The latent variant adds a compartment L of infected cells that
do not yet produce virions. Infection proceeds at rate beta(A) = beta0 + beta1*A,
so beta1 > 0 switches on antibody-dependent enhancement (ADE).

Units: time in days, V in copies/ml, T/I/L in cells/ml, A in arbitrary units.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace

import numba
import numpy as np

PARAM_NAMES = ("lam", "mu", "beta0", "beta1", "delta", "omega", "c", "b", "a", "sigma", "eta")


class ModelVariant(enum.Enum):
    BASIC = "basic"
    LATENT = "latent"


@dataclass(frozen=True)
class ModelParams:
    """Rate constants of the model. ``lam`` is the target-cell production rate.

    Values are not checked at construction; use :func:`validate_params`.
    """

    lam: float
    mu: float
    beta0: float
    beta1: float
    delta: float
    omega: float
    c: float
    b: float
    a: float
    sigma: float
    eta: float | None = None

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def as_array(self) -> np.ndarray:
        # eta slot is NaN when absent; the basic kernel never reads it
        vals = [getattr(self, n) for n in PARAM_NAMES[:-1]]
        vals.append(math.nan if self.eta is None else self.eta)
        return np.array(vals, dtype=np.float64)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# Baseline fit reported for the primary infection (beta1 = 0, no ADE).
BASELINE = ModelParams(
    lam=9.66e6,
    mu=9.66,
    beta0=1.28e-6,
    beta1=0.0,
    delta=16.22,
    omega=59.74,
    c=1.45,
    b=0.52,
    a=9.15e-7,
    sigma=0.02,
)
BASELINE_INIT = {"I": 372.11, "V": 994.84, "A": 1.17}

# Parameter set for which the ADE equilibrium is unstable.
COUNTEREXAMPLE = ModelParams(
    lam=4.0,
    mu=1e-3,
    beta0=0.0011,
    beta1=0.01188,
    delta=2.0,
    omega=1.0,
    c=1.0,
    b=1.0,
    a=1.0,
    sigma=1.0,
)


@dataclass(frozen=True)
class State:
    t: float
    T: float
    I: float
    V: float
    A: float
    L: float | None = None

    def __post_init__(self):
        for name in ("T", "I", "V", "A", "L"):
            v = getattr(self, name)
            if v is None:
                continue
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"state component {name}={v!r} must be finite and non-negative")
        if not math.isfinite(self.t):
            raise ValueError(f"state time {self.t!r} is not finite")

    @property
    def variant(self) -> ModelVariant:
        return ModelVariant.BASIC if self.L is None else ModelVariant.LATENT

    def as_array(self) -> np.ndarray:
        """Compartments as ``[T, I, V, A]`` or ``[T, I, V, A, L]``."""
        vals = [self.T, self.I, self.V, self.A]
        if self.L is not None:
            vals.append(self.L)
        return np.array(vals, dtype=np.float64)

    @classmethod
    def from_array(cls, t: float, y) -> "State":
        L = float(y[4]) if len(y) == 5 else None
        return cls(float(t), float(y[0]), float(y[1]), float(y[2]), float(y[3]), L)


def initial_state(p: ModelParams, variant: ModelVariant = ModelVariant.BASIC, **overrides) -> State:
    """baseline initial condition with T(0) at the virus-free level lam/mu."""
    vals = {"t": 0.0, "T": p.lam / p.mu, **BASELINE_INIT}
    if variant is ModelVariant.LATENT:
        vals["L"] = 0.0
    vals.update(overrides)
    return State(**vals)


@dataclass
class ValidationReport:
    checks: dict[str, bool] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    @property
    def delta_above_mu(self) -> bool:
        return self.checks.get("delta_above_mu", False)

    def raise_if_failed(self):
        if self.errors:
            raise ValueError("invalid parameters: " + "; ".join(self.errors))


def validate_params(p: ModelParams, variant: ModelVariant = ModelVariant.BASIC) -> ValidationReport:
    """Check positivity of every rate, the eta/variant pairing and delta > mu.

    A failed delta > mu check is a warning only; simulation stays defined.
    Raises ``ValueError`` straight away on a non-finite value.
    """
    rep = ValidationReport()
    for name in PARAM_NAMES:
        v = getattr(p, name)
        if v is None:
            continue
        if not math.isfinite(v):
            raise ValueError(f"parameter {name}={v!r} is not finite")
        ok = v >= 0 if name == "beta1" else v > 0
        rep.checks[f"positive:{name}"] = ok
        if not ok:
            rep.errors.append(f"{name} must be {'>= 0' if name == 'beta1' else '> 0'} (got {v!r})")

    want_eta = variant is ModelVariant.LATENT
    rep.checks["eta_presence"] = (p.eta is not None) == want_eta
    if not rep.checks["eta_presence"]:
        rep.errors.append("latent variant requires eta" if want_eta else "eta given for basic variant")

    rep.checks["delta_above_mu"] = p.delta > p.mu
    if not rep.checks["delta_above_mu"]:
        rep.warnings.append(f"delta > mu fails ({p.delta} <= {p.mu})")
    return rep


def beta_effective(p: ModelParams, A: float) -> float:
    """Infection rate beta0 + beta1*A."""
    if A < 0:
        raise ValueError(f"antibody level must be non-negative, got {A}")
    return p.beta0 + p.beta1 * A


# Parameter vector layout shared with the integrator kernel:
# [lam, mu, beta0, beta1, delta, omega, c, b, a, sigma, eta]
# State vector layout: [T, I, V, A] or [T, I, V, A, L].
@numba.njit(cache=True, nogil=True)
def rhs_kernel(p, y, out):
    T = y[0]
    I = y[1]
    V = y[2]
    A = y[3]
    infection = (p[2] + p[3] * A) * V * T
    out[0] = p[0] - p[1] * T - infection
    if y.shape[0] == 5:
        L = y[4]
        out[4] = infection - (p[10] + p[1]) * L
        out[1] = p[10] * L - p[4] * I
    else:
        out[1] = infection - p[4] * I
    out[2] = p[5] * I - p[6] * V - p[7] * A * V
    out[3] = p[8] * V * A - p[9] * A


def rhs_basic(p: ModelParams, s: State) -> np.ndarray:
    """Time derivative ``(dT, dI, dV, dA)`` of the basic model."""
    y = np.array([s.T, s.I, s.V, s.A], dtype=np.float64)
    out = np.empty(4)
    rhs_kernel(p.as_array(), y, out)
    return out


def rhs_latent(p: ModelParams, s: State) -> np.ndarray:
    """Time derivative of the latent model, ordered ``(dT, dI, dV, dA, dL)``."""
    if p.eta is None:
        raise ValueError("latent model needs eta")
    y = np.array([s.T, s.I, s.V, s.A, 0.0 if s.L is None else s.L], dtype=np.float64)
    out = np.empty(5)
    rhs_kernel(p.as_array(), y, out)
    return out
