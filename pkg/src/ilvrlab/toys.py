"""Deterministic toy data distributions used across tests, scripts and demos.

The image mixtures are built from smooth bumps so box-downsampled (coarse)
content separates components while per-pixel noise stays small; the
"textured" variant overlays a period-2 checkerboard whose 4x4 block mean is
exactly zero, giving a second domain that shares the factor-4 low-resolution
space of the smooth domain.
"""
from __future__ import annotations

import numpy as np

from .denoise import GaussianMixture


def planar_mixture() -> GaussianMixture:
    """3-component 2-D mixture with well-separated means."""
    return GaussianMixture(
        weights=np.array([0.5, 0.3, 0.2]),
        means=np.array([[-1.5, 0.0], [1.5, 1.0], [0.0, -1.8]]),
        vars=np.full((3, 2), 0.01),
        data_shape=(2,),
    )


def _bump(size: int, cy: float, cx: float, sigma: float, amp: float) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    return amp * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma**2))


def _mid_band(img: np.ndarray) -> np.ndarray:
    """Keep only content between the factor-4 and factor-8 box low-passes."""
    from .lowpass import LowPassOp, apply_phi

    size = img.shape[0]
    op4 = LowPassOp(4, "box", (1, size, size))
    op8 = LowPassOp(8, "box", (1, size, size))
    return (apply_phi(op4, img[None]) - apply_phi(op8, img[None]))[0]


def image_mixture(size: int = 16, var: float = 0.01) -> GaussianMixture:
    """3-component mixture over single-channel size x size images.

    Component means share one coarse (factor-8 box) layer and one fine
    layer, differing only in the band between the factor-4 and factor-8
    low-passes: a factor-4 condition pins the component, a factor-8
    condition leaves it free, and the high band carries no
    component-specific content.
    """
    shared = 0.2 * np.add(*np.mgrid[0:size, 0:size]) / (size - 1.0) - 0.1
    patterns = [
        _bump(size, size * 0.28, size * 0.28, size * 0.16, 3.2),
        -_bump(size, size * 0.66, size * 0.7, size * 0.18, 3.2),
        _bump(size, size * 0.72, size * 0.22, size * 0.14, 3.0)
        - _bump(size, size * 0.22, size * 0.72, size * 0.14, 3.0),
    ]
    means = np.stack([(shared + _mid_band(p)).ravel() for p in patterns])
    return GaussianMixture(
        weights=np.array([0.4, 0.35, 0.25]),
        means=means,
        vars=np.full((3, size * size), var),
        data_shape=(1, size, size),
    )


def checkerboard(size: int, amp: float = 0.4) -> np.ndarray:
    """Period-2 checkerboard; its mean over any 4x4 block is exactly 0."""
    yy, xx = np.mgrid[0:size, 0:size]
    return amp * np.where((yy + xx) % 2 == 0, 1.0, -1.0)


def textured_image_mixture(size: int = 16, var: float = 0.01, amp: float = 0.4) -> GaussianMixture:
    """The smooth image mixture with a checkerboard texture added to every mean.

    Shares the factor-4 box low-resolution space with `image_mixture` while
    being far from it in full-resolution distance.
    """
    base = image_mixture(size, var)
    return GaussianMixture(
        weights=base.weights,
        means=base.means + checkerboard(size, amp).ravel()[None, :],
        vars=base.vars,
        data_shape=base.data_shape,
    )
