"""Desk-scale evaluation proxies: low-frequency consistency, pairwise sample
diversity (perceptual-distance stand-in) and a pixel-space Frechet distance
with diagonal covariances (no embedding network).  Absolute values are not
comparable to full-scale published numbers; only orderings across factors
and conditioning ranges are consumed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .denoise import GaussianMixture
from .lowpass import LowPassOp, downsample


@dataclass(frozen=True)
class EvalReport:
    """One metric result plus enough configuration echo to rerun it."""

    metric: str
    value: float
    n: int
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"metric {self.metric!r} has non-finite value {self.value}")
        if self.n <= 0:
            raise ValueError(f"metric {self.metric!r} has nonpositive count {self.n}")

    def to_json(self) -> str:
        return json.dumps(
            {"metric": self.metric, "value": self.value, "n": self.n, "config": self.config}
        )


def reports_to_text(reports: list[EvalReport]) -> str:
    """Plain-text table, one report per row."""
    lines = [f"{'metric':<28} {'value':>14} {'n':>6}  config"]
    for r in reports:
        cfg = " ".join(f"{k}={v}" for k, v in sorted(r.config.items()))
        lines.append(f"{r.metric:<28} {r.value:>14.6g} {r.n:>6}  {cfg}")
    return "\n".join(lines)


def lowfreq_error(x: np.ndarray, y: np.ndarray, factor: int, kernel: str = "box") -> float:
    """RMS difference of the two images' downsampled content."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    op = LowPassOp(factor, kernel, x.shape)
    d = downsample(op, x) - downsample(op, y)
    return float(np.sqrt(np.mean(d**2)))


def pairwise_diversity(samples: list[np.ndarray]) -> float:
    """Mean RMS pixel distance over all unordered sample pairs."""
    if len(samples) < 2:
        raise ValueError(f"need >= 2 samples, got {len(samples)}")
    arrs = [np.asarray(s, dtype=np.float64) for s in samples]
    if any(a.shape != arrs[0].shape for a in arrs):
        raise ValueError("samples must share one shape")
    total, pairs = 0.0, 0
    for i in range(len(arrs)):
        for j in range(i + 1, len(arrs)):
            total += np.sqrt(np.mean((arrs[i] - arrs[j]) ** 2))
            pairs += 1
    return float(total / pairs)


def frechet_pixel_distance(set_a: list[np.ndarray], set_b: list[np.ndarray]) -> float:
    """Frechet distance between diagonal Gaussians fit to raw pixels.

    ||mu_a - mu_b||^2 + sum_d (sigma_a,d - sigma_b,d)^2 over flattened
    dimensions, with population (ddof=0) standard deviations.
    """
    if len(set_a) < 2 or len(set_b) < 2:
        raise ValueError("both sets need >= 2 samples")
    a = np.stack([np.asarray(s, dtype=np.float64).ravel() for s in set_a])
    b = np.stack([np.asarray(s, dtype=np.float64).ravel() for s in set_b])
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    sd_a, sd_b = a.std(axis=0), b.std(axis=0)
    return float(np.sum((mu_a - mu_b) ** 2) + np.sum((sd_a - sd_b) ** 2))


def mixture_recovery_report(samples: list[np.ndarray], mix: GaussianMixture) -> list[EvalReport]:
    """Nearest-component occupancy/mean/variance diagnostics for a sample set.

    Occupancy deviation is max_k |freq_k - weight_k|; mean error is the
    worst per-component Euclidean distance between the empirical and true
    component means; the variance ratio compares mean per-dimension spread
    within each occupied component.
    """
    if not samples:
        raise ValueError("no samples")
    pts = np.stack([np.asarray(s, dtype=np.float64).ravel() for s in samples])
    if pts.shape[1] != mix.D:
        raise ValueError(f"samples have {pts.shape[1]} dims, mixture has {mix.D}")
    d2 = ((pts[:, None, :] - mix.means[None, :, :]) ** 2).sum(axis=2)
    assign = d2.argmin(axis=1)
    n = pts.shape[0]

    occupancy = np.bincount(assign, minlength=mix.K) / n
    occ_dev = float(np.abs(occupancy - mix.weights).max())

    mean_err, var_ratios = 0.0, []
    for k in range(mix.K):
        members = pts[assign == k]
        if len(members) == 0:
            continue
        mean_err = max(mean_err, float(np.linalg.norm(members.mean(axis=0) - mix.means[k])))
        if len(members) >= 2:
            true_v = float(mix.vars[k].mean())
            if true_v > 0:
                var_ratios.append(float(members.var(axis=0).mean()) / true_v)

    cfg = {"K": mix.K, "D": mix.D}
    reports = [
        EvalReport("occupancy_max_deviation", occ_dev, n, cfg),
        EvalReport("component_mean_error", mean_err, n, cfg),
    ]
    if var_ratios:
        reports.append(EvalReport("variance_ratio_min", float(min(var_ratios)), n, cfg))
        reports.append(EvalReport("variance_ratio_max", float(max(var_ratios)), n, cfg))
    return reports
