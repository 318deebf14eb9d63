"""Diffusion variance schedule and the closed-form forward process.

The forward (noising) chain is q(x_t | x_{t-1}) = N(sqrt(1-beta_t) x_{t-1},
beta_t I), which collapses to the closed form

    x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps,   eps ~ N(0, I),

with alpha_t = 1 - beta_t and abar_t = prod_{s<=t} alpha_s.  All public
interfaces index timesteps as t = 1..T; storage is 0-based internally.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIGMA_MODES = ("beta", "posterior")


@dataclass(frozen=True)
class Schedule:
    """Immutable beta/alpha/abar/sigma tables indexed by t = 1..T."""

    T: int
    betas: np.ndarray
    alphas: np.ndarray
    abars: np.ndarray
    sigmas: np.ndarray
    sigma_mode: str = "posterior"
    beta_start: float = field(default=0.0, compare=False)
    beta_end: float = field(default=0.0, compare=False)

    def _check_t(self, t: int) -> int:
        if not 1 <= t <= self.T:
            raise ValueError(f"timestep t={t} out of range 1..{self.T}")
        return t - 1

    def beta(self, t: int) -> float:
        return float(self.betas[self._check_t(t)])

    def alpha(self, t: int) -> float:
        return float(self.alphas[self._check_t(t)])

    def abar(self, t: int) -> float:
        return float(self.abars[self._check_t(t)])

    def abar_prev(self, t: int) -> float:
        """abar_{t-1} with the abar_0 = 1 convention."""
        i = self._check_t(t)
        return 1.0 if i == 0 else float(self.abars[i - 1])

    def sigma(self, t: int) -> float:
        return float(self.sigmas[self._check_t(t)])


def make_linear_schedule(
    T: int,
    beta_start: float | None = None,
    beta_end: float | None = None,
    sigma_mode: str = "posterior",
) -> Schedule:
    """Linear beta schedule from beta_start (t=1) to beta_end (t=T).

    Defaults follow the 1000-step convention (1e-4 to 0.02) rescaled by
    1000/T, which keeps the terminal marginal at abar_T ~ 4e-5 for any T
    (beta scales like the step size); pass both endpoints explicitly to
    override.  For T below ~21 the rescaled beta_end leaves (0, 1), so tiny
    test schedules must state their betas.

    sigma_mode selects the fixed reverse-step noise scale:
      "beta":      sigma_t^2 = beta_t
      "posterior": sigma_t^2 = (1 - abar_{t-1}) / (1 - abar_t) * beta_t
    Either way sigma_1 is forced to 0 so the final reverse step is
    deterministic.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if beta_start is None:
        beta_start = 1e-4 * (1000.0 / T)
    if beta_end is None:
        beta_end = 0.02 * (1000.0 / T)
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ValueError(
            f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )
    if sigma_mode not in SIGMA_MODES:
        raise ValueError(f"sigma_mode must be one of {SIGMA_MODES}, got {sigma_mode!r}")

    betas = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    alphas = 1.0 - betas
    abars = np.cumprod(alphas)

    abar_prev = np.concatenate([[1.0], abars[:-1]])
    if sigma_mode == "beta":
        sig2 = betas.copy()
    else:
        sig2 = (1.0 - abar_prev) / (1.0 - abars) * betas
    sigmas = np.sqrt(sig2)
    sigmas[0] = 0.0

    for arr in (betas, alphas, abars, sigmas):
        arr.setflags(write=False)

    return Schedule(
        T=T,
        betas=betas,
        alphas=alphas,
        abars=abars,
        sigmas=sigmas,
        sigma_mode=sigma_mode,
        beta_start=beta_start,
        beta_end=beta_end,
    )


def q_sample(x0: np.ndarray, t: int, eps: np.ndarray, sched: Schedule) -> np.ndarray:
    """Draw x_t from q(x_t | x0) given the noise eps.

    Returns sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps elementwise.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise ValueError(f"shape mismatch: x0 {x0.shape} vs eps {eps.shape}")
    abar = sched.abar(t)
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps
