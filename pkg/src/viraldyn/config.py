"""Strict JSON run configuration.

Every omitted model parameter falls back to the baseline parameter set; omitted
initial values fall back to the baseline initial condition with T(0) = lam/mu.
Unknown keys and wrongly typed values are rejected with the offending path.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .integrator import IntegrationOptions
from .model import BASELINE, BASELINE_INIT, ModelParams, ModelVariant, State, validate_params

# JSON key -> ModelParams field
PARAM_KEYS = {
    "lambda": "lam",
    "mu": "mu",
    "beta0": "beta0",
    "beta1": "beta1",
    "delta": "delta",
    "omega": "omega",
    "c": "c",
    "b": "b",
    "a": "a",
    "sigma": "sigma",
    "eta": "eta",
}
INIT_KEYS = ("T", "I", "V", "A", "L")
INTEGRATION_KEYS = ("t_span", "rel_tol", "abs_tol", "max_step", "extinction_threshold", "dense_output_dt")
FIT_KEYS = ("data", "free", "bounds", "a_weight", "n_starts", "max_evals", "include_baseline_start", "detection_floor")
TOP_KEYS = ("params", "variant", "init", "integration", "sweep", "fit", "output_dir")

# Illustrative grids; the b values around the nominal 0.52 are not given in the source.
DEFAULT_SWEEPS = {
    "b": (0.13, 0.26, 0.52, 1.04),
    "beta1": (0.0, 1e-8, 1e-7, 1e-6),
}
DEFAULT_FIT_FREE = ("beta0", "delta", "c", "omega")
DEFAULT_FIT_DECADES = 2.0


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class SweepGrid:
    axis: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class FitConfig:
    data: Path | None
    free: tuple[str, ...]
    bounds: dict[str, tuple[float, float]]
    a_weight: float = 1.0
    n_starts: int = 8
    max_evals: int = 2000
    include_baseline_start: bool = False
    detection_floor: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    variant: ModelVariant
    init: State
    integration: IntegrationOptions
    sweep: SweepGrid | None = None
    fit: FitConfig | None = None
    output_dir: Path | None = None
    warnings: tuple[str, ...] = field(default_factory=tuple)


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError(path, f"expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}" if path else key, "unknown key")


def _number(val, path, allow_none=False):
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(path, f"expected a number, got {json.dumps(val)}")
    val = float(val)
    if not math.isfinite(val):
        raise ConfigError(path, "must be finite")
    return val


def _int(val, path, lo=1):
    if isinstance(val, bool) or not isinstance(val, int) or val < lo:
        raise ConfigError(path, f"expected an integer >= {lo}, got {json.dumps(val)}")
    return val


def _params(obj) -> ModelParams:
    _check_keys(obj, PARAM_KEYS, "params")
    values = BASELINE.to_dict()
    for key, name in PARAM_KEYS.items():
        if key in obj:
            values[name] = _number(obj[key], f"params.{key}", allow_none=(key == "eta"))
    return ModelParams(**values)


def _variant(val) -> ModelVariant:
    try:
        return ModelVariant(val)
    except ValueError:
        raise ConfigError("variant", f"expected 'basic' or 'latent', got {json.dumps(val)}") from None


def _init(obj, p: ModelParams, variant: ModelVariant) -> State:
    _check_keys(obj, INIT_KEYS, "init")
    vals = {"T": p.lam / p.mu, **BASELINE_INIT, "L": 0.0}
    for key in INIT_KEYS:
        if key in obj:
            vals[key] = _number(obj[key], f"init.{key}")
            if vals[key] < 0:
                raise ConfigError(f"init.{key}", "must be non-negative")
    if variant is ModelVariant.BASIC:
        if "L" in obj:
            raise ConfigError("init.L", "latent compartment given for the basic variant")
        vals["L"] = None
    return State(0.0, **vals)


def _integration(obj) -> IntegrationOptions:
    _check_keys(obj, INTEGRATION_KEYS, "integration")
    kw = {}
    if "t_span" in obj:
        span = obj["t_span"]
        if not isinstance(span, list) or len(span) != 2:
            raise ConfigError("integration.t_span", "expected [start, end]")
        kw["t_span"] = (_number(span[0], "integration.t_span[0]"), _number(span[1], "integration.t_span[1]"))
    for key in ("rel_tol", "abs_tol", "max_step", "dense_output_dt"):
        if key in obj:
            kw[key] = _number(obj[key], f"integration.{key}")
    if "extinction_threshold" in obj:
        kw["extinction_threshold"] = _number(obj["extinction_threshold"], "integration.extinction_threshold",
                                             allow_none=True)
    try:
        return IntegrationOptions(**kw)
    except ValueError as exc:
        raise ConfigError("integration", str(exc)) from None


def _sweep(obj, p: ModelParams, variant: ModelVariant) -> SweepGrid:
    _check_keys(obj, ("axis", "values"), "sweep")
    axis = obj.get("axis")
    if axis not in PARAM_KEYS:
        raise ConfigError("sweep.axis", f"expected a parameter name, got {json.dumps(axis)}")
    if "values" in obj:
        raw = obj["values"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("sweep.values", "expected a non-empty list")
        values = tuple(_number(v, f"sweep.values[{i}]") for i, v in enumerate(raw))
    elif axis in DEFAULT_SWEEPS:
        values = DEFAULT_SWEEPS[axis]
    else:
        raise ConfigError("sweep.values", f"no default grid for axis {axis!r}")
    for i, v in enumerate(values):
        rep = validate_params(p.replace(**{PARAM_KEYS[axis]: v}), variant)
        if not rep.ok:
            raise ConfigError(f"sweep.values[{i}]", "; ".join(rep.errors))
    return SweepGrid(axis, values)


def _fit(obj, p: ModelParams, init: State, base_dir: Path) -> FitConfig:
    _check_keys(obj, FIT_KEYS, "fit")
    data = obj.get("data")
    if data is not None and not isinstance(data, str):
        raise ConfigError("fit.data", "expected a path string")
    free = obj.get("free", list(DEFAULT_FIT_FREE))
    if not isinstance(free, list) or not free or not all(isinstance(n, str) for n in free):
        raise ConfigError("fit.free", "expected a non-empty list of names")
    baseline = {PARAM_KEYS[k]: getattr(p, PARAM_KEYS[k]) for k in PARAM_KEYS if k != "eta"}
    baseline.update(I0=init.I, V0=init.V, A0=init.A)
    names = []
    for i, n in enumerate(free):
        if n == "eta" or (n not in PARAM_KEYS and n not in ("I0", "V0", "A0")):
            raise ConfigError(f"fit.free[{i}]", f"unknown parameter {n!r}")
        names.append(PARAM_KEYS.get(n, n))
    raw_bounds = obj.get("bounds", {})
    _check_keys(raw_bounds, set(free), "fit.bounds")
    bounds = {}
    for n, name in zip(free, names):
        if n in raw_bounds:
            b = raw_bounds[n]
            if not isinstance(b, list) or len(b) != 2:
                raise ConfigError(f"fit.bounds.{n}", "expected [lo, hi]")
            lo, hi = _number(b[0], f"fit.bounds.{n}[0]"), _number(b[1], f"fit.bounds.{n}[1]")
        else:
            v = baseline[name]
            if not v > 0:
                raise ConfigError(f"fit.bounds.{n}", "needs explicit bounds (baseline value is not positive)")
            lo, hi = v * 10 ** -DEFAULT_FIT_DECADES, v * 10 ** DEFAULT_FIT_DECADES
        if not 0 < lo < hi:
            raise ConfigError(f"fit.bounds.{n}", "must satisfy 0 < lo < hi")
        bounds[name] = (lo, hi)
    include = obj.get("include_baseline_start", False)
    if not isinstance(include, bool):
        raise ConfigError("fit.include_baseline_start", "expected true or false")
    floor = _number(obj.get("detection_floor", 1.0), "fit.detection_floor")
    if not floor > 0:
        raise ConfigError("fit.detection_floor", "must be positive")
    a_weight = _number(obj.get("a_weight", 1.0), "fit.a_weight")
    if a_weight < 0:
        raise ConfigError("fit.a_weight", "must be non-negative")
    return FitConfig(
        data=None if data is None else (base_dir / data),
        free=tuple(names),
        bounds=bounds,
        a_weight=a_weight,
        n_starts=_int(obj.get("n_starts", 8), "fit.n_starts", lo=0),
        max_evals=_int(obj.get("max_evals", 2000), "fit.max_evals"),
        include_baseline_start=include,
        detection_floor=floor,
    )


def parse_config(text: str, base_dir: str | Path = ".") -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from None
    _check_keys(doc, TOP_KEYS, "")
    base_dir = Path(base_dir)

    p = _params(doc.get("params", {}))
    variant = _variant(doc.get("variant", "basic"))
    rep = validate_params(p, variant)
    if not rep.ok:
        failed = [key for key, name in PARAM_KEYS.items() if rep.checks.get(f"positive:{name}") is False]
        raise ConfigError(f"params.{failed[0] if failed else 'eta'}", "; ".join(rep.errors))

    init = _init(doc.get("init", {}), p, variant)
    integration = _integration(doc.get("integration", {}))
    sweep = _sweep(doc["sweep"], p, variant) if "sweep" in doc else None
    fit = _fit(doc["fit"], p, init, base_dir) if "fit" in doc else None
    out = doc.get("output_dir")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output_dir", "expected a path string")
    return RunConfig(
        params=p,
        variant=variant,
        init=init,
        integration=integration,
        sweep=sweep,
        fit=fit,
        output_dir=None if out is None else base_dir / out,
        warnings=tuple(rep.warnings),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)
