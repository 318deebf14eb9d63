"""Ancestral reverse-process sampling and reference-guided ILVR generation.

Unconditional generation runs x_T ~ N(0, I) down through the learned
Gaussian transitions.  ILVR additionally refines each proposal so its
low-frequency content matches the same-step noised reference:

    x_{t-1} = phi(y_{t-1}) + (x'_{t-1} - phi(x'_{t-1})),

refining only while t > stop_step, and matching the clean reference itself
at the final step.  Every sample draw is a pure function of (model,
schedule, config, seed + sample index), so samples are reproducible and may
be drawn concurrently.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .denoise import eps_predict
from .lowpass import LowPassOp, apply_phi
from .schedule import Schedule, q_sample


@dataclass(frozen=True)
class IlvrConfig:
    """Knobs of reference-guided sampling.

    stop_step = k applies refinement only while t > k, so 0 conditions the
    full range and larger values release the tail of the trajectory.
    """

    reference: np.ndarray
    factor: int
    kernel: str = "box"
    stop_step: int = 0
    seed: int = 0
    count: int = 1

    def validate(self, T: int) -> None:
        if self.stop_step < 0 or self.stop_step >= T:
            raise ValueError(f"stop_step {self.stop_step} outside 0..{T - 1}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        if not np.all(np.isfinite(self.reference)):
            raise ValueError("reference contains non-finite values")


@dataclass
class Trajectory:
    """Optional (t, x_t) snapshots at a fixed stride, oldest first.

    `refs` carries the matched noised reference at snapshot steps where a
    refinement was applied (None otherwise).
    """

    steps: list[int] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    refs: list[Optional[np.ndarray]] = field(default_factory=list)

    def record(self, t: int, x: np.ndarray, y: Optional[np.ndarray] = None) -> None:
        if self.steps and t >= self.steps[-1]:
            raise ValueError("trajectory steps must strictly decrease")
        self.steps.append(t)
        self.states.append(x.copy())
        self.refs.append(None if y is None else y.copy())


class NonFiniteStateError(RuntimeError):
    """Sampler state went NaN/inf; carries the offending timestep."""

    def __init__(self, t: int):
        super().__init__(f"non-finite sampler state at t={t}")
        self.t = t


def reverse_step(model, x_t: np.ndarray, t: int, z: np.ndarray, sched: Schedule) -> np.ndarray:
    """One learned Gaussian transition from x_t to x_{t-1}.

    The caller supplies z ~ N(0, I) (zero at t=1, where sigma is 0 anyway).
    """
    alpha = sched.alpha(t)
    abar = sched.abar(t)
    eps = eps_predict(model, x_t, t, sched)
    mean = (x_t - (1.0 - alpha) / np.sqrt(1.0 - abar) * eps) / np.sqrt(alpha)
    return mean + sched.sigma(t) * z


def ilvr_refine(x_prop: np.ndarray, y_t: np.ndarray, op: LowPassOp) -> np.ndarray:
    """Swap the proposal's low-frequency content for the reference's.

    Grouped as phi(y_t) + (x_prop - phi(x_prop)) so the factor-1 operator
    returns y_t exactly.
    """
    if x_prop.shape != y_t.shape:
        raise ValueError(f"shape mismatch: proposal {x_prop.shape} vs reference {y_t.shape}")
    return apply_phi(op, y_t) + (x_prop - apply_phi(op, x_prop))


def _derive_rng(seed: int, index: int) -> np.random.Generator:
    # documented contract: per-sample seed = seed + sample index
    return np.random.default_rng(seed + index)


def _check_finite(x: np.ndarray, t: int) -> None:
    if not np.all(np.isfinite(x)):
        raise NonFiniteStateError(t)


def _reverse_chain(
    model,
    sched: Schedule,
    rng: np.random.Generator,
    shape: tuple[int, ...],
    refine: Optional[Callable[[np.ndarray, int, np.random.Generator], np.ndarray]],
    trajectory: Optional[Trajectory],
    stride: int,
    on_step: Optional[Callable[[int], None]],
) -> np.ndarray:
    x = rng.standard_normal(shape)
    for t in range(sched.T, 0, -1):
        z = rng.standard_normal(shape) if t > 1 else np.zeros(shape)
        x = reverse_step(model, x, t, z, sched)
        if refine is not None:
            x = refine(x, t, rng)
        _check_finite(x, t)
        if trajectory is not None and (t - 1) % stride == 0 and t > 1:
            trajectory.record(t - 1, x)
        if on_step is not None:
            on_step(t)
    if trajectory is not None:
        trajectory.record(0, x)
    return x


def sample_unconditional(
    model,
    sched: Schedule,
    shape: tuple[int, ...],
    seed: int,
    count: int,
    record_trajectory: bool = False,
    snapshot_stride: int = 0,
    on_step: Optional[Callable[[int, int], None]] = None,
) -> tuple[list[np.ndarray], list[Trajectory]]:
    """Draw `count` unconditional samples; deterministic given `seed`."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    stride = snapshot_stride or max(1, sched.T // 10)
    samples, trajectories = [], []
    for i in range(count):
        traj = Trajectory() if record_trajectory else None
        cb = (lambda t, _i=i: on_step(_i, t)) if on_step else None
        x = _reverse_chain(model, sched, _derive_rng(seed, i), shape, None, traj, stride, cb)
        samples.append(x)
        if traj is not None:
            trajectories.append(traj)
    return samples, trajectories


def sample_ilvr(
    model,
    sched: Schedule,
    cfg: IlvrConfig,
    record_trajectory: bool = False,
    snapshot_stride: int = 0,
    on_step: Optional[Callable[[int, int], None]] = None,
) -> tuple[list[np.ndarray], list[Trajectory]]:
    """Draw `cfg.count` reference-guided samples; deterministic given cfg.seed.

    Per step: unconditional proposal, then (while t > stop_step) refinement
    against y_{t-1} drawn with fresh noise from the forward process; the
    final step matches the clean reference itself.
    """
    cfg.validate(sched.T)
    y = np.asarray(cfg.reference, dtype=np.float64)
    shape = tuple(model.data_shape)
    if y.shape != shape:
        raise ValueError(f"reference shape {y.shape} != model data shape {shape}")
    op = LowPassOp(cfg.factor, cfg.kernel, shape)
    stride = snapshot_stride or max(1, sched.T // 10)
    matched = {"ref": None}  # y_{t-1} used by the most recent step, if any

    def refine(x_prop: np.ndarray, t: int, rng: np.random.Generator) -> np.ndarray:
        if t <= cfg.stop_step:
            matched["ref"] = None
            return x_prop
        if t == 1:
            y_prev = y
        else:
            y_prev = q_sample(y, t - 1, rng.standard_normal(shape), sched)
        matched["ref"] = y_prev
        return ilvr_refine(x_prop, y_prev, op)

    samples, trajectories = [], []
    for i in range(cfg.count):
        traj = _IlvrTrajectory(matched) if record_trajectory else None
        cb = (lambda t, _i=i: on_step(_i, t)) if on_step else None
        x = _reverse_chain(
            model, sched, _derive_rng(cfg.seed, i), shape, refine, traj, stride, cb
        )
        samples.append(x)
        if traj is not None:
            trajectories.append(traj)
    return samples, trajectories


class _IlvrTrajectory(Trajectory):
    """Trajectory that also captures the reference matched at each snapshot."""

    def __init__(self, matched: dict):
        super().__init__()
        self._matched = matched

    def record(self, t: int, x: np.ndarray, y: Optional[np.ndarray] = None) -> None:
        super().record(t, x, self._matched["ref"])
