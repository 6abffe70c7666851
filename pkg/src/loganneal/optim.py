"""First- and second-order parameter updates over flat float64 vectors.

The learning rate is supplied by the caller every step (schedules live in
:mod:`loganneal.schedule`). Parameters and optimizer state are plain NumPy
arrays; the element-wise update loops are dispatched to the active kernel
backend. ``sgd_step`` and ``adam_step`` update ``params`` and their state
in place and return them for chaining.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from loganneal._backend import kernels


class NonFiniteGradientError(ValueError):
    """Raised when a gradient contains NaN/Inf; no update is applied."""


class SingularHessianError(ValueError):
    """Raised when the Hessian is singular or too ill-conditioned to solve."""


@dataclass(frozen=True)
class SgdConfig:
    momentum: float = 0.0
    dampening: float = 0.0
    weight_decay: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must lie in [0, 1)")
        if not (0.0 <= self.dampening < 1.0):
            raise ValueError("dampening must lie in [0, 1)")
        if self.weight_decay < 0.0:
            raise ValueError("weight_decay must be >= 0")


@dataclass
class SgdState:
    """Momentum buffer; seeded from the first gradient rather than zeros."""

    velocity: np.ndarray
    initialized: bool = False

    @classmethod
    def for_params(cls, n: int) -> "SgdState":
        return cls(velocity=np.zeros(n))


@dataclass(frozen=True)
class AdamConfig:
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.beta1 < 1.0) or not (0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be > 0")
        if self.weight_decay < 0.0:
            raise ValueError("weight_decay must be >= 0")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def for_params(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n))


def _check_grads(grads: np.ndarray, params: np.ndarray) -> None:
    if grads.shape != params.shape:
        raise ValueError(
            f"gradient shape {grads.shape} does not match parameters {params.shape}"
        )
    if not np.all(np.isfinite(grads)):
        raise NonFiniteGradientError("gradient contains NaN or Inf; update skipped")


def sgd_step(
    params: np.ndarray,
    grads: np.ndarray,
    lr: float,
    cfg: SgdConfig | None = None,
    state: SgdState | None = None,
) -> tuple[np.ndarray, SgdState]:
    """Momentum SGD with coupled weight decay:

        g = grad + weight_decay * x
        v = momentum * v + (1 - dampening) * g   (first step: v = g)
        x = x - lr * v

    With momentum = dampening = weight_decay = 0 this is plain
    ``x - lr * grad``.
    """
    cfg = cfg or SgdConfig()
    if state is None:
        state = SgdState.for_params(params.shape[0])
    _check_grads(grads, params)
    if lr < 0.0:
        raise ValueError("lr must be >= 0")
    kernels.sgd_update(
        params,
        np.ascontiguousarray(grads),
        state.velocity,
        lr,
        cfg.momentum,
        cfg.dampening,
        cfg.weight_decay,
        not state.initialized,
    )
    state.initialized = True
    return params, state


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    lr: float,
    cfg: AdamConfig | None = None,
    state: AdamState | None = None,
) -> tuple[np.ndarray, AdamState]:
    """Adam with bias-corrected first/second moments:

        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g^2
        x = x - lr * (m / (1 - beta1^t)) / (sqrt(v / (1 - beta2^t)) + eps)

    Weight decay, when nonzero, is coupled (added to the gradient) for
    consistency with ``sgd_step``.
    """
    cfg = cfg or AdamConfig()
    if state is None:
        state = AdamState.for_params(params.shape[0])
    _check_grads(grads, params)
    if lr < 0.0:
        raise ValueError("lr must be >= 0")
    state.t += 1
    kernels.adam_update(
        params,
        np.ascontiguousarray(grads),
        state.m,
        state.v,
        lr,
        cfg.beta1,
        cfg.beta2,
        cfg.epsilon,
        cfg.weight_decay,
        1.0 - cfg.beta1**state.t,
        1.0 - cfg.beta2**state.t,
    )
    return params, state


MAX_HESSIAN_CONDITION = 1e12


def newton_step(
    params: np.ndarray, grad: np.ndarray, hessian: np.ndarray, lr: float = 1.0
) -> np.ndarray:
    """Damped Newton update ``x - lr * H^-1 grad`` via a direct linear solve.

    H must be symmetric; a condition estimate above 1e12 (or an exactly
    singular H) raises :class:`SingularHessianError`.
    """
    n = params.shape[0]
    if hessian.shape != (n, n):
        raise ValueError(f"hessian must be {n}x{n}, got {hessian.shape}")
    if not np.allclose(hessian, hessian.T, rtol=1e-8, atol=1e-12):
        raise ValueError("hessian must be symmetric")
    _check_grads(grad, params)
    cond = np.linalg.cond(hessian)
    if not np.isfinite(cond) or cond > MAX_HESSIAN_CONDITION:
        raise SingularHessianError(
            f"hessian condition estimate {cond:.3e} exceeds {MAX_HESSIAN_CONDITION:.0e}"
        )
    direction = np.linalg.solve(hessian, grad)
    return params - lr * direction
