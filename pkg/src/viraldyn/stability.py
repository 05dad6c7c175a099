"""Jacobian, characteristic quartic, Routh-Hurwitz test and equilibrium classification."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .equilibria import RESIDUAL_TOL, EquilibriumPoint, derived_thresholds, equilibrium_residual
from .model import ModelParams, State


class Classification(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class QuarticPoly:
    """g4*X^4 + g3*X^3 + g2*X^2 + g1*X + g0."""

    g4: float
    g3: float
    g2: float
    g1: float
    g0: float

    @property
    def coeffs(self) -> tuple[float, ...]:
        """Highest degree first, as ``numpy.polyval`` expects."""
        return (self.g4, self.g3, self.g2, self.g1, self.g0)

    def __call__(self, x):
        return np.polyval(self.coeffs, x)

    def normalized(self) -> "QuarticPoly":
        return QuarticPoly(*(g / self.g4 for g in self.coeffs))


@dataclass(frozen=True)
class RouthHurwitz:
    passed: bool
    margins: dict[str, float]


@dataclass(frozen=True)
class StabilityReport:
    jacobian: np.ndarray
    charpoly: QuarticPoly
    rh_pass: bool
    rh_margins: dict[str, float]
    eigenvalues: np.ndarray
    classification: Classification

    def to_dict(self) -> dict:
        return {
            "jacobian": self.jacobian.tolist(),
            "charpoly": dict(zip(("g4", "g3", "g2", "g1", "g0"), self.charpoly.coeffs)),
            "rh_pass": self.rh_pass,
            "rh_margins": self.rh_margins,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "classification": self.classification.value,
        }


def jacobian_basic(p: ModelParams, s: State) -> np.ndarray:
    """Analytic Jacobian of the basic model, variables ordered (T, I, V, A)."""
    T, V, A = s.T, s.V, s.A
    beta = p.beta0 + p.beta1 * A
    return np.array(
        [
            [-beta * V - p.mu, 0.0, -beta * T, -p.beta1 * T * V],
            [beta * V, -p.delta, beta * T, p.beta1 * T * V],
            [0.0, p.omega, -(p.c + p.b * A), -p.b * V],
            [0.0, 0.0, p.a * A, p.a * V - p.sigma],
        ]
    )


def _det(m) -> float:
    # Laplace expansion along the first row, fixed evaluation order
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = 0.0
    for j in range(n):
        if m[0][j] == 0.0:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        total += (-1) ** j * m[0][j] * _det(minor)
    return total


def _principal_minor_sum(J, k: int) -> float:
    rows = J.tolist()
    return sum(_det([[rows[i][j] for j in idx] for i in idx]) for idx in combinations(range(len(rows)), k))


def characteristic_quartic(J) -> QuarticPoly:
    """Monic det(X*Id - J) for a 4x4 matrix via principal-minor sums."""
    J = np.asarray(J, dtype=float)
    if J.shape != (4, 4) or not np.all(np.isfinite(J)):
        raise ValueError("expected a finite 4x4 matrix")
    return QuarticPoly(
        1.0,
        -float(np.trace(J)),
        _principal_minor_sum(J, 2),
        -_principal_minor_sum(J, 3),
        _det(J.tolist()),
    )


def gamma_closed_form_no_ade(p: ModelParams) -> QuarticPoly:
    """Closed-form characteristic coefficients at the beta1 = 0 equilibrium.

    Written in the reduced variables w = r0 - 1 - sigma*beta0/(mu*a) and
    zeta = delta - mu; requires beta1 == 0, w > 0 and zeta > 0.
    """
    if p.beta1 != 0:
        raise ValueError("closed form holds only for beta1 == 0")
    th = derived_thresholds(p)
    # w == 0 is admitted as the boundary case where g0 vanishes
    if th.w < 0 or th.zeta <= 0:
        raise ValueError(f"closed form requires w > 0 and delta > mu (w={th.w:.6g}, zeta={th.zeta:.6g})")
    a, b0, c, d, mu, s, w = p.a, p.beta0, p.c, p.delta, p.mu, p.sigma, th.w
    den = a * (a * mu + b0 * s)
    g0 = c * d * mu * s * w
    g1 = c * s * (
        a * a * d * mu * w + a * a * mu * mu * w + a * b0 * d * mu * w
        + a * b0 * d * mu + a * b0 * mu * s * w + b0 * b0 * d * s
    ) / den
    g2 = (
        a * a * c * mu * mu * w + a * a * c * mu * mu + a * a * c * mu * s * w
        + a * a * d * mu * mu + a * b0 * c * mu * s * w + 2 * a * b0 * c * mu * s
        + 2 * a * b0 * d * mu * s + b0 * b0 * c * s * s + b0 * b0 * d * s * s
    ) / den
    g3 = (
        a * a * d * mu + a * a * mu * mu + a * b0 * d * s + 2 * a * b0 * mu * s
        + a * c * (a * mu * (w + 1) + b0 * s) + b0 * b0 * s * s
    ) / den
    return QuarticPoly(1.0, g3, g2, g1, g0)


def routh_hurwitz_quartic(q: QuarticPoly) -> RouthHurwitz:
    """All coefficients positive and g1*g2*g3 > g4*g1^2 + g3^2*g0."""
    if not q.g4 > 0:
        raise ValueError(f"leading coefficient must be positive (g4={q.g4}); normalize first")
    hurwitz = q.g1 * q.g2 * q.g3 - q.g4 * q.g1 ** 2 - q.g3 ** 2 * q.g0
    margins = {"g4": q.g4, "g3": q.g3, "g2": q.g2, "g1": q.g1, "g0": q.g0, "hurwitz": hurwitz}
    passed = all(v > 0 for v in margins.values())
    return RouthHurwitz(passed, margins)


def eigenvalues_quartic(q: QuarticPoly) -> np.ndarray:
    """Roots of the quartic from its companion matrix, Newton-polished once."""
    if not q.g4 > 0:
        raise ValueError(f"leading coefficient must be positive (g4={q.g4})")
    coeffs = np.array(q.normalized().coeffs)
    try:
        roots = np.roots(coeffs).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"companion eigen-solve did not converge: {exc}") from exc
    dcoeffs = np.polyder(coeffs)
    polished = roots.copy()
    for i, z in enumerate(roots):
        with np.errstate(all="ignore"):
            cand = z - np.polyval(coeffs, z) / np.polyval(dcoeffs, z)
            better = np.isfinite(cand) and abs(np.polyval(coeffs, cand)) < abs(np.polyval(coeffs, z))
        # keep the step only when it improves the residual (guards multiple roots)
        if better:
            polished[i] = cand
    return polished[np.lexsort((polished.imag, polished.real))]


def classify_eigenvalues(eigs) -> Classification:
    eps = 1e-9 * max(1.0, float(np.max(np.abs(eigs))))
    re = np.real(eigs)
    if np.all(re < -eps):
        return Classification.STABLE
    if np.any(re > eps):
        return Classification.UNSTABLE
    return Classification.MARGINAL


def stability_report(p: ModelParams, s: State) -> StabilityReport:
    J = jacobian_basic(p, s)
    q = characteristic_quartic(J)
    rh = routh_hurwitz_quartic(q)
    eigs = eigenvalues_quartic(q)
    cls = classify_eigenvalues(eigs)
    if cls is not Classification.MARGINAL and rh.passed != (cls is Classification.STABLE):
        raise ArithmeticError(f"Routh-Hurwitz verdict {rh.passed} disagrees with eigenvalues {eigs}")
    return StabilityReport(J, q, rh.passed, rh.margins, eigs, cls)


def classify_equilibrium(p: ModelParams, e: EquilibriumPoint) -> StabilityReport:
    res = equilibrium_residual(p, e)
    if res >= RESIDUAL_TOL:
        raise ValueError(f"{e.kind.value} point is not an equilibrium (residual {res:.3g})")
    return stability_report(p, e.state)
