"""Finite-horizon statistics: slope records, window averages, mixing estimates.

Asymptotic statements (liminf 0, limsup infinity, mixing decay) are
certified here only as finite-horizon threshold crossings and seeded
Monte Carlo estimates with standard errors; nothing claims a limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import pi, sqrt
from typing import Callable, Sequence

import numpy as np

from .flow import Trajectory

__all__ = [
    "SlopeRecord",
    "slope_record",
    "birkhoff_average",
    "mixing_cesaro",
    "EstimatorResult",
]


@dataclass(frozen=True)
class SlopeRecord:
    times: np.ndarray
    slopes: np.ndarray
    running_min: np.ndarray
    running_max: np.ndarray
    crossings: tuple  # (time, threshold, 'down'|'up') triples

    @property
    def final_min(self) -> float:
        return float(self.running_min[-1])

    @property
    def final_max(self) -> float:
        return float(self.running_max[-1])

    def crossed_below(self, threshold: float) -> bool:
        return self.final_min < threshold

    def crossed_above(self, threshold: float) -> bool:
        return self.final_max > threshold


def slope_record(
    traj: Trajectory, burn_in: float = 0.0, thresholds: Sequence[float] = ()
) -> SlopeRecord:
    """Slope y/x over sampled times >= burn_in, with threshold crossing log."""
    mask = traj.times >= burn_in
    ts = traj.times[mask]
    pts = traj.points[mask]
    if len(ts) == 0:
        raise ValueError("no samples at or beyond burn_in")
    xs = pts[:, 0]
    if np.any(xs <= 0.0):
        raise ValueError("x component not positive beyond burn_in; shift the start")
    slopes = pts[:, 1] / xs
    run_min = np.minimum.accumulate(slopes)
    run_max = np.maximum.accumulate(slopes)
    crossings = []
    for c in thresholds:
        above = slopes > c
        for k in range(1, len(slopes)):
            if above[k] != above[k - 1]:
                crossings.append((float(ts[k]), float(c), "up" if above[k] else "down"))
    crossings.sort()
    return SlopeRecord(
        times=ts,
        slopes=slopes,
        running_min=run_min,
        running_max=run_max,
        crossings=tuple(crossings),
    )


@dataclass(frozen=True)
class EstimatorResult:
    estimate: float
    se: float
    parameters: dict
    seed: int

    def to_record(self) -> dict:
        return {
            "estimate": self.estimate,
            "se": self.se,
            "parameters": self.parameters,
            "seed": self.seed,
        }


def birkhoff_average(
    field_eval: Callable,
    observable: Callable[[np.ndarray], float],
    center,
    radius: float,
    samples: int,
    seed: int = 0,
) -> EstimatorResult:
    """Monte Carlo window average of observable(field(center + g)), |g|_inf <= radius."""
    if radius <= 0 or samples <= 0:
        raise ValueError("radius and samples must be positive")
    rng = np.random.default_rng(seed)
    g = rng.uniform(-radius, radius, (samples, 2))
    pts = np.asarray(center, dtype=float) + g
    if hasattr(field_eval, "eval_batch"):
        vals = field_eval.eval_batch(pts)
        obs = np.array([observable(v) for v in vals])
    else:
        f = field_eval.eval if hasattr(field_eval, "eval") else field_eval
        obs = np.array([observable(np.asarray(f(p), dtype=float)) for p in pts])
    est = float(obs.mean())
    se = float(obs.std(ddof=1) / sqrt(samples)) if samples > 1 else 0.0
    return EstimatorResult(
        estimate=est,
        se=se,
        parameters={"center": list(np.asarray(center, float)), "radius": radius, "samples": samples},
        seed=seed,
    )


def mixing_cesaro(
    event_a: Callable[[np.ndarray], bool],
    event_b: Callable[[np.ndarray], bool],
    radius: float,
    samples: int,
    shifts: int = 64,
    seed: int = 0,
    correlation_scale: float = 1.0,
) -> EstimatorResult:
    """Cesaro average of |P(shifted A and B) - P(A) P(B)| over shifts |g| <= radius.

    Probabilities are empirical over one base point cloud (spread over the
    window [0, 2*radius]^2) and its translates.  The reported SE adds the
    null-hypothesis noise floor sqrt(2 c (1-c) / (pi n_eff)), the expected
    magnitude of |Phat - c| when A and B really are independent; n_eff
    counts effectively independent patches, min(samples, window cells at
    the given correlation scale), because field-value events decorrelate
    per lattice cell rather than per sample point.  Independent events
    therefore land within ~1 SE of zero, while correlated (for example
    periodic) fields exceed several SE no matter the sample count.
    """
    if radius <= 0 or samples <= 0 or shifts <= 0:
        raise ValueError("radius, samples and shifts must be positive")
    rng = np.random.default_rng(seed)
    base = rng.uniform(0.0, 2.0 * radius, (samples, 2))
    a_base = np.fromiter((event_a(p) for p in base), dtype=bool, count=samples)
    b_base = np.fromiter((event_b(p) for p in base), dtype=bool, count=samples)
    p_a = a_base.mean()
    p_b = b_base.mean()
    c = p_a * p_b
    diffs = np.empty(shifts)
    for k in range(shifts):
        g = rng.uniform(-radius, radius, 2)
        a_shift = np.fromiter((event_a(p + g) for p in base), dtype=bool, count=samples)
        joint = float(np.mean(a_shift & b_base))
        diffs[k] = abs(joint - c)
    est = float(diffs.mean())
    n_window = (2.0 * radius / correlation_scale) ** 2
    n_eff = min(float(samples), n_window)
    noise_floor = sqrt(2.0 * max(c * (1.0 - c), 1e-300) / (pi * n_eff))
    spread = float(diffs.std(ddof=1) / sqrt(shifts)) if shifts > 1 else 0.0
    return EstimatorResult(
        estimate=est,
        se=noise_floor + spread,
        parameters={
            "radius": radius,
            "samples": samples,
            "shifts": shifts,
            "correlation_scale": correlation_scale,
            "p_a": float(p_a),
            "p_b": float(p_b),
        },
        seed=seed,
    )
