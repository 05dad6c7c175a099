"""Least-squares calibration of model parameters to viral-load time series.

Residuals are taken on log10 viral load (and optionally log10 antibody level)
after truncation at a detection floor. The search runs Nelder-Mead in
log10-parameter space from several Latin-hypercube starting points.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .integrator import IntegrationError, IntegrationOptions, solve
from .model import PARAM_NAMES, ModelParams, State

INIT_NAMES = ("I0", "V0", "A0")
DEFAULT_FLOOR = 1.0


@dataclass(frozen=True)
class ObservationSet:
    t_v: np.ndarray
    v: np.ndarray
    t_a: np.ndarray | None = None
    a: np.ndarray | None = None
    detection_floor: float = DEFAULT_FLOOR

    def __post_init__(self):
        for name in ("t_v", "v", "t_a", "a"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, np.asarray(val, dtype=float))
        if len(self.t_v) != len(self.v):
            raise ValueError("t_v and v differ in length")
        if (self.t_a is None) != (self.a is None) or (self.a is not None and len(self.a) != len(self.t_a)):
            raise ValueError("antibody times and values must be given together with equal length")
        for t, vals in ((self.t_v, self.v), (self.t_a, self.a)):
            if t is None:
                continue
            if np.any(np.diff(t) < 0):
                raise ValueError("observation times must be non-decreasing")
            if np.any(vals < 0) or not np.all(np.isfinite(vals)):
                raise ValueError("observed values must be finite and non-negative")
        if not self.detection_floor > 0:
            raise ValueError("detection_floor must be positive")

    def __len__(self):
        return len(self.v) + (0 if self.a is None else len(self.a))

    @property
    def t_max(self) -> float:
        tm = float(self.t_v.max()) if len(self.t_v) else 0.0
        if self.t_a is not None and len(self.t_a):
            tm = max(tm, float(self.t_a.max()))
        return tm

    @classmethod
    def from_csv(cls, path, detection_floor: float = DEFAULT_FLOOR) -> "ObservationSet":
        """Read ``t,V[,A]`` rows; blank cells are skipped."""
        tv, v, ta, a = [], [], [], []
        with open(path, newline="") as fh:
            reader = csv.reader(row for row in fh if row.strip() and not row.startswith("#"))
            header = [h.strip() for h in next(reader)]
            if header[:2] != ["t", "V"] or header[2:] not in ([], ["A"]):
                raise ValueError(f"{path}: expected header t,V[,A], got {','.join(header)}")
            for lineno, row in enumerate(reader, start=2):
                cells = [c.strip() for c in row] + [""] * (len(header) - len(row))
                try:
                    t = float(cells[0])
                    if cells[1]:
                        tv.append(t)
                        v.append(float(cells[1]))
                    if len(header) == 3 and cells[2]:
                        ta.append(t)
                        a.append(float(cells[2]))
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
        has_a = len(header) == 3 and bool(a)
        return cls(np.array(tv), np.array(v), np.array(ta) if has_a else None, np.array(a) if has_a else None,
                   detection_floor)

    def to_csv(self, path):
        rows: dict[float, list[str]] = {}
        for t, v in zip(self.t_v, self.v):
            rows.setdefault(float(t), ["", ""])[0] = repr(float(v))
        if self.a is not None:
            for t, a in zip(self.t_a, self.a):
                rows.setdefault(float(t), ["", ""])[1] = repr(float(a))
        with open(path, "w", newline="") as fh:
            fh.write("t,V,A\n" if self.a is not None else "t,V\n")
            for t in sorted(rows):
                cells = rows[t] if self.a is not None else rows[t][:1]
                fh.write(",".join([repr(t), *cells]) + "\n")


@dataclass(frozen=True)
class FitSpec:
    """What to fit. ``bounds`` are natural-space (lo, hi); the search runs in log10."""

    free: tuple[str, ...]
    bounds: dict[str, tuple[float, float]]
    fixed: ModelParams
    init: State
    a_weight: float = 1.0
    initial: dict[str, float] | None = None

    def __post_init__(self):
        allowed = set(PARAM_NAMES[:-1]) | set(INIT_NAMES)
        if not self.free:
            raise ValueError("at least one free parameter is required")
        for name in self.free:
            if name not in allowed:
                raise ValueError(f"unknown free parameter {name!r}")
            if name not in self.bounds:
                raise ValueError(f"missing bounds for {name!r}")
        for name, (lo, hi) in self.bounds.items():
            if not (math.isfinite(lo) and math.isfinite(hi) and 0 < lo < hi):
                raise ValueError(f"bounds for {name!r} must satisfy 0 < lo < hi, got ({lo}, {hi})")
        if self.a_weight < 0:
            raise ValueError("a_weight must be non-negative")

    @property
    def log_bounds(self) -> np.ndarray:
        return np.log10(np.array([self.bounds[n] for n in self.free], dtype=float))

    def unpack(self, x) -> tuple[ModelParams, State]:
        """Map a log10 parameter vector to (params, initial state); T(0) = lam/mu."""
        vals = dict(zip(self.free, (10.0 ** float(xi) for xi in x)))
        p = self.fixed.replace(**{k: v for k, v in vals.items() if k not in INIT_NAMES})
        s = self.init
        return p, State(
            0.0,
            p.lam / p.mu,
            vals.get("I0", s.I),
            vals.get("V0", s.V),
            vals.get("A0", s.A),
            s.L,
        )

    def pack(self, p: ModelParams, init: State) -> np.ndarray:
        src = {**p.to_dict(), "I0": init.I, "V0": init.V, "A0": init.A}
        return np.log10([src[n] for n in self.free])


@dataclass
class FitResult:
    params: ModelParams
    init: State
    loss: float
    n_evals: int
    converged: bool
    trace: list[float] = field(default_factory=list)
    identifiable: bool = True
    start_index: int = 0

    def to_dict(self) -> dict:
        return {
            "params": {k: v for k, v in self.params.to_dict().items() if v is not None},
            "init": {"T": self.init.T, "I": self.init.I, "V": self.init.V, "A": self.init.A},
            "loss": self.loss,
            "n_evals": self.n_evals,
            "converged": self.converged,
            "identifiable": self.identifiable,
            "start_index": self.start_index,
            "trace": self.trace,
        }


def _log_floor(x, floor):
    return np.log10(np.maximum(x, floor))


def _fit_options() -> IntegrationOptions:
    return IntegrationOptions(rel_tol=1e-8, abs_tol=1e-8, max_steps=200_000)


def simulate_at(p: ModelParams, init: State, times, opts: IntegrationOptions | None = None) -> np.ndarray:
    """Model state rows at the given (unsorted, possibly repeated) times >= init.t."""
    opts = opts or _fit_options()
    times = np.asarray(times, dtype=float)
    uniq, inv = np.unique(times, return_inverse=True)
    if uniq.size and uniq[0] < init.t:
        raise ValueError("observation times precede the initial state")
    if uniq.size == 0:
        return np.empty((0, 4))
    if uniq[-1] <= init.t:
        return np.tile(init.as_array(), (len(times), 1))
    Y, _ = solve(p, init, uniq, opts)
    return Y[inv]


def loss(p: ModelParams, init: State, obs: ObservationSet, a_weight: float = 1.0,
         opts: IntegrationOptions | None = None) -> float:
    """Sum of squared log10 residuals; +inf when the model cannot be integrated."""
    if len(obs) == 0:
        raise ValueError("no observations")
    floor = obs.detection_floor
    t_all = obs.t_v if obs.a is None else np.concatenate([obs.t_v, obs.t_a])
    try:
        Y = simulate_at(p, init, t_all, opts)
    except IntegrationError:
        return math.inf
    nv = len(obs.t_v)
    rv = _log_floor(Y[:nv, 2], floor) - _log_floor(obs.v, floor)
    total = math.fsum(rv * rv)
    if obs.a is not None and a_weight:
        ra = _log_floor(Y[nv:, 3], floor) - _log_floor(obs.a, floor)
        total += a_weight * math.fsum(ra * ra)
    return total if math.isfinite(total) else math.inf


def synthesize_observations(p: ModelParams, init: State, times, noise_sd_log10: float = 0.0,
                            seed: int = 0, with_antibody: bool = False) -> ObservationSet:
    """Model viral loads at ``times`` with multiplicative log-normal noise."""
    times = np.asarray(times, dtype=float)
    Y = simulate_at(p, init, times)
    rng = np.random.default_rng(seed)
    v = Y[:, 2].copy()
    a = Y[:, 3].copy() if with_antibody else None
    if noise_sd_log10 > 0:
        v = v * 10.0 ** (noise_sd_log10 * rng.standard_normal(len(v)))
        if a is not None:
            a = a * 10.0 ** (noise_sd_log10 * rng.standard_normal(len(a)))
    return ObservationSet(times, v, times if with_antibody else None, a)


class FitError(RuntimeError):
    pass


def _initial_simplex(x0, lo, hi, frac=0.1):
    pts = [x0]
    for i in range(len(x0)):
        x = x0.copy()
        step = frac * (hi[i] - lo[i])
        x[i] = x0[i] + step if x0[i] + step <= hi[i] else x0[i] - step
        pts.append(x)
    return np.array(pts)


def fit(obs: ObservationSet, spec: FitSpec, seed: int = 0, n_starts: int = 8, max_evals: int = 2000,
        loss_spread_tol: float = 1e-10, workers: int = 1) -> FitResult:
    """Multi-start Nelder-Mead in log10 space; deterministic for a given seed.

    Starts come from a Latin hypercube over the bounds; ``spec.initial``, when
    given, is prepended as start 0. The best result by (loss, start index) wins.
    Starts run on ``workers`` threads.
    """
    lb = spec.log_bounds
    lo, hi = lb[:, 0], lb[:, 1]
    d = len(spec.free)
    starts = qmc.scale(qmc.LatinHypercube(d=d, seed=seed).random(n_starts), lo, hi) if n_starts else np.empty((0, d))
    if spec.initial is not None:
        x_init = np.log10([spec.initial[n] for n in spec.free])
        starts = np.vstack([np.clip(x_init, lo, hi), starts])

    def objective(x):
        x = np.clip(x, lo, hi)
        p, init = spec.unpack(x)
        return loss(p, init, obs, spec.a_weight)

    def run_start(x0):
        trace: list[float] = []
        best = [math.inf]

        def tracked(x):
            f = objective(x)
            best[0] = min(best[0], f)
            return f

        res = minimize(
            tracked,
            x0,
            method="Nelder-Mead",
            bounds=list(zip(lo, hi)),
            callback=lambda xk: trace.append(best[0]),
            options={
                "maxfev": max_evals,
                "maxiter": 10 * max_evals,
                "fatol": loss_spread_tol,
                "xatol": math.inf,
                "initial_simplex": _initial_simplex(x0, lo, hi),
            },
        )
        return res, trace

    # starts are independent; merging below is by (loss, start index) so the
    # result does not depend on the worker count
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        runs = list(pool.map(run_start, starts))
    results = [(float(res.fun), idx, res, trace) for idx, (res, trace) in enumerate(runs) if math.isfinite(res.fun)]

    if not results:
        raise FitError("no start produced a finite loss")
    f_best, idx, res, trace = min(results, key=lambda r: (r[0], r[1]))
    p, init = spec.unpack(np.clip(res.x, lo, hi))
    identifiable = len(obs) >= len(spec.free)
    return FitResult(
        params=p,
        init=init,
        loss=f_best,
        n_evals=int(sum(r[2].nfev for r in results)),
        converged=bool(res.success) and identifiable,
        trace=trace,
        identifiable=identifiable,
        start_index=idx,
    )
