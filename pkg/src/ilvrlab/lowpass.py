"""Linear low-pass operators: downsample/upsample pairs at integer factors.

`apply_phi` keeps image dimensionality: it composes an antialiased
downsample (kernel support stretched by the factor N, taps renormalized per
output pixel, edge-replication boundaries) with an interpolating upsample of
the same kernel family.

The box kernel is special-cased as an exact N x N block mean / block
replication, making it an exact orthogonal projection (phi o phi = phi); the
interpolating kernels (bilinear, bicubic a=-0.5, lanczos2/3) are only
approximately idempotent.  All kernels filter channels independently.
"""
from __future__ import annotations

import numpy as np

KERNELS = ("box", "bilinear", "bicubic", "lanczos2", "lanczos3")

# support radius of each kernel at unit scale
_RADIUS = {"bilinear": 1.0, "bicubic": 2.0, "lanczos2": 2.0, "lanczos3": 3.0}


def _bilinear(u: np.ndarray) -> np.ndarray:
    return np.maximum(0.0, 1.0 - np.abs(u))


def _bicubic(u: np.ndarray) -> np.ndarray:
    # Keys cubic with a = -0.5, 4-tap support
    a = -0.5
    u = np.abs(u)
    w = np.zeros_like(u)
    inner = u <= 1.0
    outer = (u > 1.0) & (u < 2.0)
    w[inner] = (a + 2.0) * u[inner] ** 3 - (a + 3.0) * u[inner] ** 2 + 1.0
    w[outer] = a * u[outer] ** 3 - 5.0 * a * u[outer] ** 2 + 8.0 * a * u[outer] - 4.0 * a
    return w


def _lanczos(u: np.ndarray, lobes: int) -> np.ndarray:
    w = np.sinc(u) * np.sinc(u / lobes)
    return np.where(np.abs(u) < lobes, w, 0.0)


def _kernel_fn(kernel: str):
    if kernel == "bilinear":
        return _bilinear
    if kernel == "bicubic":
        return _bicubic
    if kernel == "lanczos2":
        return lambda u: _lanczos(u, 2)
    if kernel == "lanczos3":
        return lambda u: _lanczos(u, 3)
    raise ValueError(f"unknown kernel {kernel!r}")


def _resize_matrix(n_in: int, n_out: int, scale: float, kernel: str, stretch: float) -> np.ndarray:
    """1-D resampling matrix mapping length n_in -> n_out.

    Sample centers live at (i + 0.5) * scale - 0.5 in input coordinates;
    `stretch` widens the kernel (the antialiasing factor: N when
    downsampling, 1 when upsampling).  Out-of-range taps are clamped to the
    edge sample (edge replication) and each row is normalized to sum 1.
    """
    fn = _kernel_fn(kernel)
    radius = _RADIUS[kernel] * stretch
    W = np.zeros((n_out, n_in), dtype=np.float64)
    for i in range(n_out):
        c = (i + 0.5) * scale - 0.5
        lo = int(np.ceil(c - radius))
        hi = int(np.floor(c + radius))
        taps = np.arange(lo, hi + 1)
        w = fn((taps - c) / stretch)
        keep = w != 0.0
        taps, w = taps[keep], w[keep]
        w = w / w.sum()
        np.add.at(W[i], np.clip(taps, 0, n_in - 1), w)
    return W


class LowPassOp:
    """Immutable down/up sampling operator pair for a fixed input shape.

    For the box kernel the factor must divide both spatial dimensions; the
    interpolating kernels accept any size >= factor (output dims round up).
    """

    def __init__(self, factor: int, kernel: str, in_shape: tuple[int, int, int]):
        if factor < 1:
            raise ValueError(f"factor must be >= 1, got {factor}")
        if kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {kernel!r}")
        if len(in_shape) != 3:
            raise ValueError(f"in_shape must be (C, H, W), got {in_shape}")
        c, h, w = in_shape
        if kernel == "box" and factor > 1 and (h % factor or w % factor):
            raise ValueError(
                f"box kernel needs factor {factor} to divide H={h} and W={w}"
            )
        if min(h, w) < factor:
            raise ValueError(f"spatial dims {in_shape} smaller than factor {factor}")
        self.factor = factor
        self.kernel = kernel
        self.in_shape = (c, h, w)
        if kernel == "box":
            self.low_shape = (c, h // factor, w // factor)
        else:
            self.low_shape = (c, -(-h // factor), -(-w // factor))
        if kernel != "box" and factor > 1:
            self._down_h = _resize_matrix(h, self.low_shape[1], factor, kernel, factor)
            self._down_w = _resize_matrix(w, self.low_shape[2], factor, kernel, factor)
            self._up_h = _resize_matrix(self.low_shape[1], h, 1.0 / factor, kernel, 1.0)
            self._up_w = _resize_matrix(self.low_shape[2], w, 1.0 / factor, kernel, 1.0)

    def _check(self, x: np.ndarray, want: tuple[int, int, int], what: str) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != want:
            raise ValueError(f"{what} shape {x.shape} != expected {want}")
        return x


def downsample(op: LowPassOp, x: np.ndarray) -> np.ndarray:
    """Antialiased downsample to the low-resolution grid."""
    x = op._check(x, op.in_shape, "input")
    n = op.factor
    if n == 1:
        return x.copy()
    if op.kernel == "box":
        c, h, w = op.in_shape
        return x.reshape(c, h // n, n, w // n, n).mean(axis=(2, 4))
    return np.einsum("ij,cjk,lk->cil", op._down_h, x, op._down_w)


def upsample(op: LowPassOp, x_low: np.ndarray) -> np.ndarray:
    """Interpolating upsample back to the full-resolution grid."""
    x_low = op._check(x_low, op.low_shape, "low-res input")
    n = op.factor
    if n == 1:
        return x_low.copy()
    if op.kernel == "box":
        return np.repeat(np.repeat(x_low, n, axis=1), n, axis=2)
    return np.einsum("ij,cjk,lk->cil", op._up_h, x_low, op._up_w)


def apply_phi(op: LowPassOp, x: np.ndarray) -> np.ndarray:
    """Low-pass filter preserving dimensionality: upsample(downsample(x))."""
    return upsample(op, downsample(op, x))
