from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from termforge.core.errors import ValidationFailure
from termforge.model.layers import Array

from .config import TrainConfig


def global_norm(grads: dict[str, Array]) -> float:
    return math.sqrt(sum(float(np.sum(grads[name] * grads[name])) for name in sorted(grads)))


def linear_decay(lr: float, step: int, total_steps: int) -> float:
    """Learning rate for 0-based ``step``: ``lr`` at the first step, decaying linearly towards 0."""
    if total_steps <= 0:
        raise ValidationFailure("total_steps_not_positive", total_steps=total_steps)
    return lr * (1.0 - step / total_steps)


@dataclass(slots=True)
class StepInfo:
    step: int
    lr: float
    grad_norm: float
    clipped: bool


class AdamW:
    """Adaptive-moment optimizer with bias correction and decoupled weight decay.

    Parameters are updated in place. Every stage owns a fresh instance whose schedule spans ``total_steps``.
    """

    def __init__(
        self,
        params: dict[str, Array],
        *,
        lr: float,
        total_steps: int,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.01,
        grad_clip: Optional[float] = None,
    ):
        self.params = params
        self.lr = lr
        self.total_steps = total_steps
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.grad_clip = grad_clip
        self.steps_taken = 0
        self._m = {name: np.zeros_like(value) for name, value in params.items()}
        self._v = {name: np.zeros_like(value) for name, value in params.items()}

    @classmethod
    def from_config(cls, params: dict[str, Array], config: TrainConfig, total_steps: int) -> "AdamW":
        return cls(
            params,
            lr=config.lr,
            total_steps=total_steps,
            beta1=config.beta1,
            beta2=config.beta2,
            eps=config.eps,
            weight_decay=config.weight_decay,
            grad_clip=config.grad_clip,
        )

    def step(self, grads: dict[str, Array]) -> StepInfo:
        if set(grads) != set(self.params):
            raise ValidationFailure("gradient_names_mismatch")
        norm = global_norm(grads)
        if not math.isfinite(norm):
            raise ValidationFailure("non_finite_gradient", step=self.steps_taken)
        scale = 1.0
        if self.grad_clip is not None and norm > self.grad_clip:
            scale = self.grad_clip / norm

        lr = linear_decay(self.lr, self.steps_taken, self.total_steps)
        t = self.steps_taken + 1
        correction1 = 1.0 - self.beta1**t
        correction2 = 1.0 - self.beta2**t
        for name in sorted(self.params):
            grad = grads[name] * scale if scale != 1.0 else grads[name]
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            update = (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            param = self.params[name]
            param -= lr * (update + self.weight_decay * param)
        self.steps_taken = t
        return StepInfo(step=t, lr=lr, grad_norm=norm, clipped=scale != 1.0)


__all__ = ["AdamW", "StepInfo", "global_norm", "linear_decay"]
