"""Nesterov-accelerated Adam (Dozat) with a constant momentum schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def nadam_step(param, grad, m, v, t: int, lr: float = 1e-3, beta1: float = 0.9,
               beta2: float = 0.999, eps: float = 1e-8, nesterov: bool = True):
    """One update; returns ``(param, m, v)`` as new arrays.

    With ``nesterov=False`` the look-ahead blend is dropped and the step is
    the plain bias-corrected Adam update.
    """
    if t < 1:
        raise ValueError("step counter t starts at 1")
    m = beta1 * m + (1.0 - beta1) * grad
    v = beta2 * v + (1.0 - beta2) * grad * grad
    v_hat = v / (1.0 - beta2 ** t)
    if nesterov:
        m_hat = (beta1 * m / (1.0 - beta1 ** (t + 1))
                 + (1.0 - beta1) * grad / (1.0 - beta1 ** t))
    else:
        m_hat = m / (1.0 - beta1 ** t)
    param = param - lr * m_hat / (np.sqrt(v_hat) + eps)
    return param, m, v


@dataclass
class NAdam:
    """Stateful wrapper applying :func:`nadam_step` to a dict of named tensors in place."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    moments: dict = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, g in grads.items():
            p = params[name]
            if name not in self.moments:
                self.moments[name] = (np.zeros_like(p), np.zeros_like(p))
            m, v = self.moments[name]
            new_p, m, v = nadam_step(p, g, m, v, self.t, self.lr, self.beta1, self.beta2, self.eps)
            params[name][...] = new_p
            self.moments[name] = (m.astype(p.dtype, copy=False), v.astype(p.dtype, copy=False))
