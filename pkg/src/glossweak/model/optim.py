"""Adam and plain SGD over a dict of named parameter arrays (updated in place)."""
import numpy as np


class Optimizer:
    def __init__(self, lr):
        self.lr = lr
        self.t = 0

    def _check(self, params, grads):
        if set(params) != set(grads):
            raise ValueError(f"gradient names do not match parameters: {sorted(set(params) ^ set(grads))}")
        for name, p in params.items():
            if np.shape(grads[name]) != p.shape:
                raise ValueError(f"gradient for {name} has shape {np.shape(grads[name])}, expected {p.shape}")

    def step(self, params, grads):
        self._check(params, grads)
        self.t += 1
        for name in sorted(params):
            self._update(name, params[name], np.asarray(grads[name], dtype=params[name].dtype))

    def state_dict(self):
        return {"kind": type(self).__name__, "lr": self.lr, "t": self.t}


class SGD(Optimizer):
    def _update(self, name, p, g):
        p -= self.lr * g


class Adam(Optimizer):
    def __init__(self, lr=1e-5, beta1=0.9, beta2=0.999, eps=1e-8):
        super().__init__(lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m, self.v = {}, {}

    def _update(self, name, p, g):
        if name not in self.m:
            self.m[name] = np.zeros_like(p)
            self.v[name] = np.zeros_like(p)
        m, v = self.m[name], self.v[name]
        m *= self.beta1
        m += (1.0 - self.beta1) * g
        v *= self.beta2
        v += (1.0 - self.beta2) * g * g
        m_hat = m / (1.0 - self.beta1 ** self.t)
        v_hat = v / (1.0 - self.beta2 ** self.t)
        p -= (self.lr * m_hat / (np.sqrt(v_hat) + self.eps)).astype(p.dtype)

    def state_dict(self):
        d = super().state_dict()
        d.update(beta1=self.beta1, beta2=self.beta2, eps=self.eps)
        return d


def make_optimizer(kind, lr):
    if kind == "adam":
        return Adam(lr)
    if kind == "sgd":
        return SGD(lr)
    raise ValueError(f"unknown optimizer {kind!r}; use 'adam' or 'sgd'")
