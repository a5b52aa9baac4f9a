"""Gloss regressor: conv feature extractor, 20-d latent bottleneck, squashed head."""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .layers import Conv2D, Dense, GlobalAvgPool, ReLU, Sigmoid
from .losses import mae_loss_grad

LATENT_DIM = 20


@dataclass
class NetworkConfig:
    input_size: int = 64
    in_channels: int = 3
    conv_blocks: list = field(default_factory=lambda: [(8, 3, 2), (16, 3, 2), (32, 3, 2), (32, 3, 1)])
    fc_hidden: int = 32
    input_shift: float = 0.5    # fixed input normalization: (x - shift) * gain
    input_gain: float = 4.0
    latent_dim: int = LATENT_DIM
    dtype: str = "float32"

    def __post_init__(self):
        if self.latent_dim != LATENT_DIM:
            raise ValueError(f"latent_dim is fixed at {LATENT_DIM}")
        self.conv_blocks = [tuple(int(v) for v in b) for b in self.conv_blocks]

    def to_dict(self):
        d = asdict(self)
        d["conv_blocks"] = [list(b) for b in self.conv_blocks]
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class GlossNet:
    """Holds the layer stack; parameters live in the layers, keyed '<layer>.<param>'."""

    def __init__(self, config: NetworkConfig, seed: int = 0):
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(seed)
        dtype = np.dtype(config.dtype)
        self.features = []
        ch = config.in_channels
        for i, (out_ch, k, s) in enumerate(config.conv_blocks):
            self.features.append(Conv2D(f"conv{i}", ch, out_ch, k, s, rng=rng, dtype=dtype))
            self.features.append(ReLU(f"relu{i}"))
            ch = out_ch
        self.features.append(GlobalAvgPool())
        self.encoder = [
            Dense("fc0", ch, config.fc_hidden, rng=rng, dtype=dtype),
            ReLU("fc0_relu"),
            Dense("fc_latent", config.fc_hidden, config.latent_dim, rng=rng, gain=1.0, dtype=dtype),
        ]
        self.head = [Dense("head", config.latent_dim, 1, rng=rng, gain=1.0, dtype=dtype), Sigmoid("squash")]

    @property
    def layers(self):
        return self.features + self.encoder + self.head

    def named_params(self):
        out = {}
        for layer in self.layers:
            for key, value in layer.params.items():
                out[f"{layer.name}.{key}"] = value
        return out

    def named_grads(self):
        out = {}
        for layer in self.layers:
            for key, value in layer.grads.items():
                out[f"{layer.name}.{key}"] = value
        return out

    def load_params(self, params):
        mine = self.named_params()
        if set(mine) != set(params):
            raise ValueError(f"parameter names differ: {sorted(set(mine) ^ set(params))}")
        for layer in self.layers:
            for key in layer.params:
                src = np.asarray(params[f"{layer.name}.{key}"])
                if src.shape != layer.params[key].shape:
                    raise ValueError(f"shape mismatch for {layer.name}.{key}: {src.shape} vs {layer.params[key].shape}")
                layer.params[key] = src.astype(layer.params[key].dtype, copy=True)
        self.zero_grad()

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def _prepare(self, images):
        x = np.asarray(images)
        if x.ndim == 3:
            x = x[None]
        size = self.config.input_size
        if x.ndim != 4 or x.shape[1:] != (size, size, self.config.in_channels):
            raise ValueError(
                f"expected images of shape (N, {size}, {size}, {self.config.in_channels}), got {x.shape}")
        x = (x.transpose(0, 3, 1, 2) - self.config.input_shift) * self.config.input_gain
        return np.ascontiguousarray(x, dtype=self.config.dtype)

    def forward(self, images):
        """Return (z, y_hat) for HWC image(s) with values in [0, 1]."""
        x = self._prepare(images)
        for layer in self.features + self.encoder:
            x = layer.forward(x)
        z = x
        for layer in self.head:
            x = layer.forward(x)
        return z, x[:, 0]

    def backward(self, d_yhat):
        """Accumulate parameter gradients given dLoss/dy_hat of the last forward."""
        g = np.asarray(d_yhat, dtype=self.config.dtype)[:, None]
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def loss_and_grads(self, images, targets, weights=None):
        """Weighted MAE of one batch plus gradients for every parameter."""
        self.zero_grad()
        _, y_hat = self.forward(images)
        loss, d_yhat = mae_loss_grad(y_hat, targets, weights)
        self.backward(d_yhat)
        return loss, {k: v.copy() for k, v in self.named_grads().items()}
