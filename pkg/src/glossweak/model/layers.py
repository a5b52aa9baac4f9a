"""Differentiable layers with hand-written backward passes.

Every layer caches what it needs during ``forward`` and returns the gradient
with respect to its input from ``backward``. Parameter gradients are stored in
``layer.grads`` under the same keys as ``layer.params``.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class NonFiniteActivation(FloatingPointError):
    """Raised when a layer produces NaN or inf."""

    def __init__(self, layer_name, stage):
        super().__init__(f"non-finite values in {stage} of layer '{layer_name}'")
        self.layer_name = layer_name
        self.stage = stage


def _check_finite(arr, name, stage):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteActivation(name, stage)
    return arr


class Layer:
    name = "layer"

    def __init__(self):
        self.params = {}
        self.grads = {}

    def zero_grad(self):
        for key, value in self.params.items():
            self.grads[key] = np.zeros_like(value)


class Conv2D(Layer):
    """Square-kernel convolution, NCHW layout, zero padding, im2col matmul."""

    def __init__(self, name, in_ch, out_ch, kernel, stride=1, padding=None, rng=None, dtype=np.float64):
        super().__init__()
        self.name = name
        self.in_ch, self.out_ch = in_ch, out_ch
        self.kernel, self.stride = kernel, stride
        self.padding = kernel // 2 if padding is None else padding
        rng = np.random.default_rng(0) if rng is None else rng
        fan_in = in_ch * kernel * kernel
        self.params["W"] = (rng.standard_normal((out_ch, in_ch, kernel, kernel)) * np.sqrt(2.0 / fan_in)).astype(dtype)
        self.params["b"] = np.zeros(out_ch, dtype=dtype)
        self.zero_grad()

    def output_size(self, size):
        return (size + 2 * self.padding - self.kernel) // self.stride + 1

    def forward(self, x):
        n, c, h, w = x.shape
        if c != self.in_ch:
            raise ValueError(f"{self.name}: expected {self.in_ch} channels, got {c}")
        p, k, s = self.padding, self.kernel, self.stride
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::s, ::s]
        ho, wo = win.shape[2], win.shape[3]
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * k * k)
        wmat = self.params["W"].reshape(self.out_ch, -1)
        out = cols @ wmat.T + self.params["b"]
        self._cache = (x.shape, xp.shape, cols, ho, wo)
        return _check_finite(out.reshape(n, ho, wo, self.out_ch).transpose(0, 3, 1, 2), self.name, "forward")

    def backward(self, dout):
        xshape, xpshape, cols, ho, wo = self._cache
        n, c, h, w = xshape
        k, s, p = self.kernel, self.stride, self.padding
        dflat = dout.transpose(0, 2, 3, 1).reshape(-1, self.out_ch)
        self.grads["W"] += (dflat.T @ cols).reshape(self.params["W"].shape)
        self.grads["b"] += dflat.sum(axis=0)
        dcols = (dflat @ self.params["W"].reshape(self.out_ch, -1)).reshape(n, ho, wo, c, k, k)
        dxp = np.zeros(xpshape, dtype=dout.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i:i + s * ho:s, j:j + s * wo:s] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        dx = dxp[:, :, p:p + h, p:p + w] if p else dxp
        return _check_finite(dx, self.name, "backward")


class ReLU(Layer):
    def __init__(self, name="relu"):
        super().__init__()
        self.name = name

    def forward(self, x):
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout):
        return dout * self._mask


class GlobalAvgPool(Layer):
    """(N, C, H, W) -> (N, C)."""

    def __init__(self, name="gap"):
        super().__init__()
        self.name = name

    def forward(self, x):
        self._shape = x.shape
        return x.mean(axis=(2, 3))

    def backward(self, dout):
        n, c, h, w = self._shape
        return np.broadcast_to(dout[:, :, None, None] / (h * w), self._shape).copy()


class Dense(Layer):
    def __init__(self, name, n_in, n_out, rng=None, gain=2.0, dtype=np.float64):
        super().__init__()
        self.name = name
        rng = np.random.default_rng(0) if rng is None else rng
        self.params["W"] = (rng.standard_normal((n_in, n_out)) * np.sqrt(gain / n_in)).astype(dtype)
        self.params["b"] = np.zeros(n_out, dtype=dtype)
        self.zero_grad()

    def forward(self, x):
        self._x = x
        return _check_finite(x @ self.params["W"] + self.params["b"], self.name, "forward")

    def backward(self, dout):
        self.grads["W"] += self._x.T @ dout
        self.grads["b"] += dout.sum(axis=0)
        return _check_finite(dout @ self.params["W"].T, self.name, "backward")


class Sigmoid(Layer):
    def __init__(self, name="sigmoid"):
        super().__init__()
        self.name = name

    def forward(self, x):
        # split by sign so exp never overflows
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        self._out = out
        return out

    def backward(self, dout):
        return dout * self._out * (1.0 - self._out)
