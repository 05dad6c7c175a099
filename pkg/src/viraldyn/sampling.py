"""Random parameter draws around the baseline parameter set for property checks."""
from __future__ import annotations

import numpy as np

from .equilibria import derived_thresholds
from .model import BASELINE, ModelParams

SAMPLED = ("lam", "mu", "beta0", "delta", "omega", "c", "b", "a", "sigma")


def draw_params(rng: np.random.Generator, n: int, decades: float = 3.0, base: ModelParams = BASELINE,
                beta1: float = 0.0, max_tries: int = 1_000_000) -> list[ModelParams]:
    """``n`` log-uniform draws within ``decades`` of ``base``.

    Draws are kept only when delta > mu and w > 0 (so the antibody-controlled
    equilibrium exists); beta1 is held at the given value.
    """
    out: list[ModelParams] = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(f"rejection sampler accepted only {len(out)} of {n} draws")
        exps = rng.uniform(-decades, decades, size=len(SAMPLED))
        vals = {k: getattr(base, k) * 10.0 ** e for k, e in zip(SAMPLED, exps)}
        p = base.replace(beta1=beta1, **vals)
        th = derived_thresholds(p)
        if p.delta > p.mu and th.w > 0:
            out.append(p)
    return out
