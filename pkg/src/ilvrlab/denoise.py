"""Noise-prediction interface and the closed-form Gaussian-mixture denoiser.

Under the forward corruption x_t = sqrt(abar) x0 + sqrt(1-abar) eps with a
diagonal-covariance mixture prior on x0, the Bayes posterior mean E[x0|x_t]
is available in closed form, which makes the optimal noise predictor

    eps*(x_t, t) = (x_t - sqrt(abar_t) E[x0|x_t]) / sqrt(1 - abar_t)

exactly computable.  That analytic denoiser is the desk-scale verification
oracle; the trainable counterpart lives in `neural`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .schedule import Schedule

# floor for (1 - abar) before division in eps space
_VAR_FLOOR = 1e-12


@dataclass(frozen=True)
class GaussianMixture:
    """Diagonal-covariance Gaussian mixture over flattened data vectors.

    `data_shape` records the tensor layout samples should take (e.g.
    (1, 16, 16) for images, (2,) for planar toy data); means/vars are stored
    flattened as (K, D).
    """

    weights: np.ndarray
    means: np.ndarray
    vars: np.ndarray
    data_shape: tuple[int, ...]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        mu = np.asarray(self.means, dtype=np.float64)
        v = np.asarray(self.vars, dtype=np.float64)
        if mu.ndim != 2 or v.shape != mu.shape or w.shape != (mu.shape[0],):
            raise ValueError(
                f"inconsistent mixture arrays: weights {w.shape}, "
                f"means {mu.shape}, vars {v.shape}"
            )
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        if (v < 0).any():
            raise ValueError("variances must be nonnegative")
        if int(np.prod(self.data_shape)) != mu.shape[1]:
            raise ValueError(
                f"data_shape {self.data_shape} does not flatten to D={mu.shape[1]}"
            )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "vars", v)
        object.__setattr__(self, "data_shape", tuple(self.data_shape))

    @property
    def K(self) -> int:
        return self.weights.shape[0]

    @property
    def D(self) -> int:
        return self.means.shape[1]

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n vectors directly from the mixture (shape (n, D))."""
        ks = rng.choice(self.K, size=n, p=self.weights)
        eta = rng.standard_normal((n, self.D))
        return self.means[ks] + np.sqrt(self.vars[ks]) * eta


def gmm_posterior_mean(mix: GaussianMixture, x_t: np.ndarray, abar: float) -> np.ndarray:
    """E[x0 | x_t] under x_t = sqrt(abar) x0 + sqrt(1-abar) eps.

    Component responsibilities are computed in log space (log-sum-exp), so
    far-out inputs underflow gracefully instead of zeroing every weight.
    """
    if not 0.0 < abar < 1.0:
        raise ValueError(f"abar must be in (0, 1), got {abar}")
    x = np.asarray(x_t, dtype=np.float64).reshape(-1)
    if x.shape[0] != mix.D:
        raise ValueError(f"x_t has {x.shape[0]} dims, mixture has {mix.D}")

    sq = np.sqrt(abar)
    # marginal of x_t per component: N(sq*mu_k, abar*v_k + (1-abar)) per dim
    marg_var = abar * mix.vars + (1.0 - abar)
    resid = x[None, :] - sq * mix.means
    log_r = np.log(mix.weights) - 0.5 * np.sum(
        np.log(2.0 * np.pi * marg_var) + resid**2 / marg_var, axis=1
    )
    log_r -= log_r.max()
    r = np.exp(log_r)
    r /= r.sum()

    # per-component posterior mean of x0, per dimension
    gain = sq * mix.vars / marg_var
    comp_mean = mix.means + gain * resid
    return (r[:, None] * comp_mean).sum(axis=0)


@dataclass(frozen=True)
class AnalyticGmmDenoiser:
    """Exact eps-predictor backed by a Gaussian mixture prior."""

    mix: GaussianMixture

    @property
    def data_shape(self) -> tuple[int, ...]:
        return self.mix.data_shape

    def predict_eps(self, x_t: np.ndarray, t: int, sched: Schedule) -> np.ndarray:
        abar = sched.abar(t)
        x = np.asarray(x_t, dtype=np.float64)
        post = gmm_posterior_mean(self.mix, x, abar).reshape(x.shape)
        return (x - np.sqrt(abar) * post) / np.sqrt(max(1.0 - abar, _VAR_FLOOR))


def eps_predict(model, x_t: np.ndarray, t: int, sched: Schedule) -> np.ndarray:
    """Predict the noise component of x_t with any denoiser model."""
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape != tuple(model.data_shape):
        raise ValueError(f"x_t shape {x_t.shape} != model data shape {model.data_shape}")
    return model.predict_eps(x_t, t, sched)


def predict_x0(model, x_t: np.ndarray, t: int, sched: Schedule) -> np.ndarray:
    """One-shot denoised-data estimate from x_t.

    f(x_t, t) = (x_t - sqrt(1-abar_t) * eps_predict(x_t, t)) / sqrt(abar_t);
    for the analytic mixture denoiser this is algebraically the Bayes
    posterior mean.
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    abar = sched.abar(t)
    eps = eps_predict(model, x_t, t, sched)
    return (x_t - np.sqrt(1.0 - abar) * eps) / np.sqrt(abar)
