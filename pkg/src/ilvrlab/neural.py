"""Small trainable noise predictors with hand-written reverse-mode gradients.

Two desk-scale architectures: a 3-layer fully connected net for vector data
and a 4-layer 3x3 convolutional net for single-channel images, both
conditioned on the timestep through a sinusoidal embedding.  Gradients are
derived by hand (no autograd) so they can be audited against central finite
differences, and parameters update with Adam.

Checkpoint format: magic "ILVRNET1", little-endian u32 header
(arch code, embed dim, descriptor count, descriptors), then every parameter
tensor as little-endian float32 in declaration order.
"""
from __future__ import annotations

import copy
import struct
from dataclasses import dataclass, field

import numpy as np

from .schedule import Schedule

CHECKPOINT_MAGIC = b"ILVRNET1"
_ARCH_MLP = 1
_ARCH_CONV = 2


def time_embedding(t: np.ndarray, dim: int) -> np.ndarray:
    """Sinusoidal embedding of integer timesteps, shape (len(t), dim)."""
    if dim % 2:
        raise ValueError(f"embedding dim must be even, got {dim}")
    t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / half)
    ang = t * freqs[None, :]
    return np.concatenate([np.sin(ang), np.cos(ang)], axis=1)


class MlpDenoiser:
    """tanh MLP eps-predictor for flat vector data."""

    arch = "mlp"

    def __init__(self, data_dim: int, hidden: int = 32, embed_dim: int = 8, seed: int = 0):
        self.data_dim = data_dim
        self.hidden = hidden
        self.embed_dim = embed_dim
        self.data_shape = (data_dim,)
        rng = np.random.default_rng(seed)
        d_in = data_dim + embed_dim
        self.params = [
            rng.standard_normal((hidden, d_in)) / np.sqrt(d_in),
            np.zeros(hidden),
            rng.standard_normal((hidden, hidden)) / np.sqrt(hidden),
            np.zeros(hidden),
            rng.standard_normal((data_dim, hidden)) / np.sqrt(hidden),
            np.zeros(data_dim),
        ]

    def descriptor(self) -> list[int]:
        return [self.data_dim, self.hidden]

    def forward_batch(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        return self._forward(x, t)[0]

    def _forward(self, x: np.ndarray, t: np.ndarray):
        W1, b1, W2, b2, W3, b3 = self.params
        f = np.concatenate([x, time_embedding(t, self.embed_dim)], axis=1)
        a1 = np.tanh(f @ W1.T + b1)
        a2 = np.tanh(a1 @ W2.T + b2)
        out = a2 @ W3.T + b3
        return out, (f, a1, a2)

    def loss_and_grads(self, x_t: np.ndarray, t: np.ndarray, target: np.ndarray):
        W1, b1, W2, b2, W3, b3 = self.params
        out, (f, a1, a2) = self._forward(x_t, t)
        diff = out - target
        loss = float(np.mean(diff**2))
        dout = 2.0 * diff / diff.size
        dW3 = dout.T @ a2
        db3 = dout.sum(axis=0)
        dz2 = (dout @ W3) * (1.0 - a2**2)
        dW2 = dz2.T @ a1
        db2 = dz2.sum(axis=0)
        dz1 = (dz2 @ W2) * (1.0 - a1**2)
        dW1 = dz1.T @ f
        db1 = dz1.sum(axis=0)
        return loss, [dW1, db1, dW2, db2, dW3, db3]

    def predict_eps(self, x_t: np.ndarray, t: int, sched: Schedule) -> np.ndarray:
        sched._check_t(t)
        flat = np.asarray(x_t, dtype=np.float64).reshape(1, -1)
        return self.forward_batch(flat, np.array([t]))[0].reshape(x_t.shape)


def _im2col(x: np.ndarray) -> np.ndarray:
    """3x3 patches of a zero-padded (B, C, H, W) batch -> (B, C*9, H*W)."""
    b, c, h, w = x.shape
    pad = np.zeros((b, c, h + 2, w + 2), dtype=x.dtype)
    pad[:, :, 1:-1, 1:-1] = x
    cols = np.empty((b, c, 9, h, w), dtype=x.dtype)
    for k in range(9):
        ki, kj = divmod(k, 3)
        cols[:, :, k] = pad[:, :, ki : ki + h, kj : kj + w]
    return cols.reshape(b, c * 9, h * w)


def _col2im(dcols: np.ndarray, shape: tuple[int, int, int, int]) -> np.ndarray:
    """Adjoint of _im2col: scatter-add patch gradients back to the image."""
    b, c, h, w = shape
    dcols = dcols.reshape(b, c, 9, h, w)
    dpad = np.zeros((b, c, h + 2, w + 2), dtype=dcols.dtype)
    for k in range(9):
        ki, kj = divmod(k, 3)
        dpad[:, :, ki : ki + h, kj : kj + w] += dcols[:, :, k]
    return dpad[:, :, 1:-1, 1:-1]


class ConvDenoiser:
    """4-layer 3x3 conv eps-predictor for single-channel images.

    The timestep embedding enters as a learned per-channel bias after the
    first convolution.
    """

    arch = "conv"

    def __init__(
        self,
        in_shape: tuple[int, int, int],
        channels: int = 4,
        embed_dim: int = 8,
        seed: int = 0,
    ):
        c, h, w = in_shape
        if c != 1:
            raise ValueError(f"conv denoiser is single-channel, got shape {in_shape}")
        self.data_shape = (c, h, w)
        self.channels = channels
        self.embed_dim = embed_dim
        rng = np.random.default_rng(seed)

        def conv_w(c_out, c_in):
            return rng.standard_normal((c_out, c_in * 9)) / np.sqrt(c_in * 9)

        ch = channels
        self.params = [
            conv_w(ch, 1), np.zeros(ch),
            rng.standard_normal((ch, embed_dim)) / np.sqrt(embed_dim),  # time bias map
            conv_w(ch, ch), np.zeros(ch),
            conv_w(ch, ch), np.zeros(ch),
            conv_w(1, ch), np.zeros(1),
        ]

    def descriptor(self) -> list[int]:
        return [self.channels, self.data_shape[1], self.data_shape[2]]

    def _forward(self, x: np.ndarray, t: np.ndarray):
        W1, b1, Wt, W2, b2, W3, b3, W4, b4 = self.params
        b, (_, h, w) = x.shape[0], self.data_shape
        emb = time_embedding(t, self.embed_dim)
        tb = emb @ Wt.T  # (B, ch)

        cols1 = _im2col(x)
        z1 = np.einsum("oc,bcp->bop", W1, cols1) + b1[None, :, None] + tb[:, :, None]
        a1 = np.tanh(z1)

        cols2 = _im2col(a1.reshape(b, self.channels, h, w))
        z2 = np.einsum("oc,bcp->bop", W2, cols2) + b2[None, :, None]
        a2 = np.tanh(z2)

        cols3 = _im2col(a2.reshape(b, self.channels, h, w))
        z3 = np.einsum("oc,bcp->bop", W3, cols3) + b3[None, :, None]
        a3 = np.tanh(z3)

        cols4 = _im2col(a3.reshape(b, self.channels, h, w))
        out = np.einsum("oc,bcp->bop", W4, cols4) + b4[None, :, None]
        return out.reshape(b, 1, h, w), (emb, cols1, a1, cols2, a2, cols3, a3, cols4)

    def forward_batch(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        return self._forward(x, t)[0]

    def loss_and_grads(self, x_t: np.ndarray, t: np.ndarray, target: np.ndarray):
        W1, b1, Wt, W2, b2, W3, b3, W4, b4 = self.params
        b, (_, h, w) = x_t.shape[0], self.data_shape
        ch = self.channels
        out, (emb, cols1, a1, cols2, a2, cols3, a3, cols4) = self._forward(x_t, t)

        diff = out - target
        loss = float(np.mean(diff**2))
        dout = (2.0 * diff / diff.size).reshape(b, 1, h * w)

        def conv_back(dz, W, cols, in_chans):
            dW = np.einsum("bop,bcp->oc", dz, cols)
            db = dz.sum(axis=(0, 2))
            dcols = np.einsum("oc,bop->bcp", W, dz)
            dx = _col2im(dcols, (b, in_chans, h, w))
            return dW, db, dx

        dW4, db4, dx4 = conv_back(dout, W4, cols4, ch)
        dz3 = dx4.reshape(b, ch, h * w) * (1.0 - a3**2)
        dW3, db3, dx3 = conv_back(dz3, W3, cols3, ch)
        dz2 = dx3.reshape(b, ch, h * w) * (1.0 - a2**2)
        dW2, db2, dx2 = conv_back(dz2, W2, cols2, ch)
        dz1 = dx2.reshape(b, ch, h * w) * (1.0 - a1**2)
        dW1, db1, _ = conv_back(dz1, W1, cols1, 1)
        dtb = dz1.sum(axis=2)  # (B, ch)
        dWt = dtb.T @ emb
        return loss, [dW1, db1, dWt, dW2, db2, dW3, db3, dW4, db4]

    def predict_eps(self, x_t: np.ndarray, t: int, sched: Schedule) -> np.ndarray:
        sched._check_t(t)
        x = np.asarray(x_t, dtype=np.float64).reshape(1, *self.data_shape)
        return self.forward_batch(x, np.array([t]))[0].reshape(x_t.shape)


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter tensor."""

    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step: int = 0

    @classmethod
    def for_net(cls, net) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in net.params],
            v=[np.zeros_like(p) for p in net.params],
        )


def adam_update(
    net,
    grads: list,
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    state.step += 1
    bc1 = 1.0 - beta1**state.step
    bc2 = 1.0 - beta2**state.step
    for p, g, m, v in zip(net.params, grads, state.m, state.v):
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g**2
        p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


class NonFiniteLossError(RuntimeError):
    """Raised when a training step produces a NaN/inf loss."""


def train_step(
    net,
    x0_batch: np.ndarray,
    sched: Schedule,
    seed: int,
    opt: AdamState,
    lr: float = 1e-3,
) -> float:
    """One denoising-score step: corrupt the batch, regress the noise, Adam.

    Mutates `net` and `opt` in place; fully determined by its arguments.
    """
    x0 = np.asarray(x0_batch, dtype=np.float64)
    if x0.shape[0] == 0:
        raise ValueError("empty training batch")
    rng = np.random.default_rng(seed)
    t = rng.integers(1, sched.T + 1, size=x0.shape[0])
    eps = rng.standard_normal(x0.shape)
    abar = sched.abars[t - 1].reshape((-1,) + (1,) * (x0.ndim - 1))
    x_t = np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps
    loss, grads = net.loss_and_grads(x_t, t, eps)
    if not np.isfinite(loss):
        raise NonFiniteLossError(f"non-finite training loss {loss!r} at seed {seed}")
    adam_update(net, grads, opt, lr=lr)
    return loss


def n_params(net) -> int:
    return sum(p.size for p in net.params)


def grad_check(
    net,
    x_t: np.ndarray,
    t: np.ndarray,
    target: np.ndarray,
    h: float = 1e-4,
) -> float:
    """Worst relative error of analytic gradients vs central differences.

    Checks every parameter component, so keep probe nets small (<= ~1e3
    parameters).
    """
    probe = copy.deepcopy(net)
    _, grads = probe.loss_and_grads(x_t, t, target)
    worst = 0.0
    for pi, p in enumerate(probe.params):
        flat = p.reshape(-1)
        gflat = grads[pi].reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            lp, _ = probe.loss_and_grads(x_t, t, target)
            flat[j] = orig - h
            lm, _ = probe.loss_and_grads(x_t, t, target)
            flat[j] = orig
            num = (lp - lm) / (2.0 * h)
            denom = max(abs(gflat[j]), abs(num), 1e-6)
            worst = max(worst, abs(gflat[j] - num) / denom)
    return worst


def save_checkpoint(path, net) -> None:
    arch = _ARCH_MLP if net.arch == "mlp" else _ARCH_CONV
    desc = net.descriptor()
    header = struct.pack("<III", arch, net.embed_dim, len(desc))
    header += struct.pack(f"<{len(desc)}I", *desc)
    payload = np.concatenate([p.ravel() for p in net.params]).astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(header)
        fh.write(payload)


def load_checkpoint(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != CHECKPOINT_MAGIC:
        raise ValueError(f"bad checkpoint magic {blob[:8]!r}")
    arch, embed_dim, n_desc = struct.unpack_from("<III", blob, 8)
    desc = struct.unpack_from(f"<{n_desc}I", blob, 20)
    off = 20 + 4 * n_desc
    if arch == _ARCH_MLP:
        data_dim, hidden = desc
        net = MlpDenoiser(data_dim, hidden=hidden, embed_dim=embed_dim, seed=0)
    elif arch == _ARCH_CONV:
        channels, h, w = desc
        net = ConvDenoiser((1, h, w), channels=channels, embed_dim=embed_dim, seed=0)
    else:
        raise ValueError(f"unknown architecture code {arch}")
    want = n_params(net)
    flat = np.frombuffer(blob, dtype="<f4", offset=off)
    if flat.size != want:
        raise ValueError(f"checkpoint holds {flat.size} params, architecture needs {want}")
    pos = 0
    for i, p in enumerate(net.params):
        net.params[i] = flat[pos : pos + p.size].astype(np.float64).reshape(p.shape)
        pos += p.size
    return net
