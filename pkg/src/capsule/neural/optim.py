"""Adam optimizer on a flat parameter vector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(params, grads, m, v, t: int, cfg: AdamConfig = AdamConfig()):
    """One bias-corrected Adam update at step ``t >= 1``.

    Returns new ``(params, m, v)``; the inputs are not modified.
    """
    if t < 1:
        raise ValueError(f"Adam step index must be >= 1, got {t}")
    g = np.asarray(grads, dtype=np.float64)
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
    m_hat = m / (1.0 - cfg.beta1**t)
    v_hat = v / (1.0 - cfg.beta2**t)
    return params - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps), m, v
