"""Adam optimizer over a flat parameter list, updating arrays in place."""

from __future__ import annotations

import numpy as np


class Adam:
    """Adam with running first/second moment averages and bias correction.

    With beta1 = 0 the first-moment average degenerates to the current
    gradient, leaving an RMS-normalized step of size ~lr.
    """

    def __init__(self, params: list[np.ndarray], lr=1e-4, beta1=0.0,
                 beta2=0.9, eps=1e-8):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, grads: list[np.ndarray]) -> None:
        if len(grads) != len(self.params):
            raise ValueError("gradient list does not match parameter list")
        self.t += 1
        for i, (p, g) in enumerate(zip(self.params, grads)):
            if g.shape != p.shape:
                raise ValueError(f"gradient {i} shape {g.shape} != {p.shape}")
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / (1.0 - self.beta1 ** self.t) \
                if self.beta1 > 0 else self.m[i]
            v_hat = self.v[i] / (1.0 - self.beta2 ** self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def clip_parameters(params: list[np.ndarray], bound: float) -> None:
    """Project every array onto the cube |w| <= bound, in place."""
    for p in params:
        np.clip(p, -bound, bound, out=p)
