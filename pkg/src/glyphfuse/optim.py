"""SGD and Adam updates over named parameter collections.

A single optimizer state can drive several parameter groups with different
learning rates (the classifier head trains faster than the convolutional
stack). Every parameter in a group must carry a gradient when the step is
applied; a missing gradient means the caller forgot a backward pass, which
is reported loudly instead of silently skipping the weight.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, GradientError, NumericalError
from .tensor import ModelParams

__all__ = ["OptimizerState", "optimizer_step"]

_ALGOS = ("sgd", "adam")


class OptimizerState:
    """Per-parameter Adam moments plus the shared step counter.

    For SGD the state is only the counter; moment buffers stay empty.
    """

    def __init__(self, algo: str, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if algo not in _ALGOS:
            raise ConfigError(f"unknown optimizer '{algo}', expected one of {_ALGOS}")
        if not (0.0 <= beta1 < 1.0) or not (0.0 <= beta2 < 1.0):
            raise ConfigError(f"optimizer betas must lie in [0, 1), got {beta1}, {beta2}")
        if eps <= 0.0:
            raise ConfigError(f"optimizer eps must be positive, got {eps}")
        self.algo = algo
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}


def optimizer_step(state: OptimizerState, groups: list[tuple[ModelParams, float]]) -> None:
    """Apply one update to every parameter in every group.

    ``groups`` pairs a parameter collection with its learning rate. The
    shared step counter advances once per call, and gradients are consumed
    (reset to None) so a stale gradient can never be applied twice.
    """
    for params, lr in groups:
        if lr <= 0.0:
            raise ConfigError(f"learning rate must be positive, got {lr}")
        for name, t in params.items():
            if t.grad is None:
                raise GradientError(f"parameter '{name}' has no gradient; run backward first")
            if t.grad.shape != t.data.shape:
                raise GradientError(
                    f"parameter '{name}': gradient shape {t.grad.shape} != data shape {t.data.shape}"
                )
            if not np.all(np.isfinite(t.grad)):
                raise NumericalError(f"parameter '{name}' has a non-finite gradient")

    state.step_count += 1
    t_step = state.step_count

    for params, lr in groups:
        for name, t in params.items():
            g = t.grad
            if state.algo == "sgd":
                t.data -= t.data.dtype.type(lr) * g
            else:
                m = state._m.get(name)
                if m is None:
                    m = state._m[name] = np.zeros_like(t.data)
                    state._v[name] = np.zeros_like(t.data)
                v = state._v[name]
                m *= state.beta1
                m += (1.0 - state.beta1) * g
                v *= state.beta2
                v += (1.0 - state.beta2) * (g * g)
                m_hat = m / (1.0 - state.beta1**t_step)
                v_hat = v / (1.0 - state.beta2**t_step)
                t.data -= (lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(t.data.dtype)
            t.grad = None
