"""Analytic optimization test surfaces: Ackley, Griewank, Rastrigin, and SPD
quadratics, with exact gradients, Hessians where tractable, and a
central-difference oracle for verification.

Standard closed forms (Ackley constants a=20, b=0.2, c=2*pi; Griewank index
is 1-based inside the square root):

    ackley(x)    = -20*exp(-0.2*sqrt(mean(x^2))) - exp(mean(cos(2*pi*x))) + 20 + e
    rastrigin(x) = 10*n + sum(x_i^2 - 10*cos(2*pi*x_i))
    griewank(x)  = 1 + sum(x_i^2)/4000 - prod(cos(x_i / sqrt(i)))
    quadratic(x) = 0.5 * x.T @ A @ x          (A symmetric positive definite)

All three multimodal surfaces have their global minimum f=0 at the origin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from loganneal._backend import kernels


class UnsupportedHessianError(ValueError):
    """Raised for surfaces without a shipped analytic Hessian."""


@dataclass(frozen=True)
class Quadratic:
    """Convex surface 0.5 * x.T A x for a symmetric positive definite A."""

    matrix: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("quadratic matrix must be square")
        if not np.allclose(a, a.T, rtol=1e-10, atol=1e-12):
            raise ValueError("quadratic matrix must be symmetric")
        if np.linalg.eigvalsh(a).min() <= 0.0:
            raise ValueError("quadratic matrix must be positive definite")
        object.__setattr__(self, "matrix", a)


# A landscape kind is one of the string names below or a Quadratic instance.
LandscapeKind = str | Quadratic
MULTIMODAL = ("ackley", "griewank", "rastrigin")


@dataclass(frozen=True)
class FdSpec:
    """Central-difference step; 1e-5 balances truncation and rounding."""

    step: float = 1e-5

    def __post_init__(self):
        if not (0.0 < self.step < 1.0):
            raise ValueError("finite-difference step must lie in (0, 1)")


def _as_vec(x) -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ValueError("point must be a 1-D vector of dimension >= 1")
    if not np.all(np.isfinite(v)):
        raise ValueError("point must be finite")
    return v


def _check_kind(kind) -> None:
    if not isinstance(kind, Quadratic) and kind not in MULTIMODAL:
        raise ValueError(f"unknown landscape kind: {kind!r}")


def eval(kind, x) -> float:
    v = _as_vec(x)
    if isinstance(kind, Quadratic):
        return 0.5 * float(v @ kind.matrix @ v)
    _check_kind(kind)
    return float(getattr(kernels, f"{kind}_eval")(v))


def grad(kind, x) -> np.ndarray:
    v = _as_vec(x)
    if isinstance(kind, Quadratic):
        return kind.matrix @ v
    _check_kind(kind)
    return np.asarray(getattr(kernels, f"{kind}_grad")(v))


def hessian(kind, x) -> np.ndarray:
    v = _as_vec(x)
    if isinstance(kind, Quadratic):
        return kind.matrix.copy()
    if kind == "rastrigin":
        return np.diag(2.0 + 40.0 * np.pi**2 * np.cos(2.0 * np.pi * v))
    _check_kind(kind)
    raise UnsupportedHessianError(
        f"no analytic hessian for {kind!r}; use finite differences externally"
    )


def fd_grad(kind, x, spec: FdSpec | None = None) -> np.ndarray:
    """Central-difference gradient, the independent check on ``grad``."""
    spec = spec or FdSpec()
    v = _as_vec(x).copy()
    h = spec.step
    out = np.empty_like(v)
    for i in range(v.shape[0]):
        orig = v[i]
        v[i] = orig + h
        fp = eval(kind, v)
        v[i] = orig - h
        fm = eval(kind, v)
        v[i] = orig
        out[i] = (fp - fm) / (2.0 * h)
    return out
