"""NumPy implementations of the hot kernels.

Fallback backend used when the compiled extension is unavailable (or when
forced via ``ANNEAL_BACKEND=python``). Signatures mirror ``_kernels`` exactly;
update kernels mutate their array arguments in place.
"""
import numpy as np

TWO_PI = 2.0 * np.pi


def ackley_eval(x):
    n = x.shape[0]
    root_mean_sq = np.sqrt(np.dot(x, x) / n)
    return (
        -20.0 * np.exp(-0.2 * root_mean_sq)
        - np.exp(np.sum(np.cos(TWO_PI * x)) / n)
        + 20.0
        + np.e
    )


def ackley_grad(x):
    n = x.shape[0]
    root_mean_sq = np.sqrt(np.dot(x, x) / n)
    cos_mean = np.sum(np.cos(TWO_PI * x)) / n
    out = (TWO_PI / n) * np.exp(cos_mean) * np.sin(TWO_PI * x)
    if root_mean_sq > 0.0:
        out += (4.0 / n) * np.exp(-0.2 * root_mean_sq) * x / root_mean_sq
    return out


def rastrigin_eval(x):
    n = x.shape[0]
    return 10.0 * n + np.sum(x * x - 10.0 * np.cos(TWO_PI * x))


def rastrigin_grad(x):
    return 2.0 * x + 20.0 * np.pi * np.sin(TWO_PI * x)


def griewank_eval(x):
    idx = np.sqrt(np.arange(1, x.shape[0] + 1, dtype=np.float64))
    return 1.0 + np.dot(x, x) / 4000.0 - np.prod(np.cos(x / idx))


def griewank_grad(x):
    # prefix/suffix products give prod_{j != i} cos(x_j / sqrt(j))
    # without dividing by (possibly zero) cos terms
    n = x.shape[0]
    idx = np.sqrt(np.arange(1, n + 1, dtype=np.float64))
    c = np.cos(x / idx)
    prefix = np.ones(n)
    prefix[1:] = np.cumprod(c[:-1])
    suffix = np.ones(n)
    suffix[:-1] = np.cumprod(c[::-1])[-2::-1]
    return x / 2000.0 + np.sin(x / idx) / idx * prefix * suffix


def sgd_update(x, grad, velocity, lr, momentum, dampening, weight_decay, first):
    g = grad + weight_decay * x if weight_decay != 0.0 else grad
    if first:
        velocity[:] = g
    else:
        velocity *= momentum
        velocity += (1.0 - dampening) * g
    x -= lr * velocity


def adam_update(x, grad, m, v, lr, beta1, beta2, eps, weight_decay, bc1, bc2):
    g = grad + weight_decay * x if weight_decay != 0.0 else grad
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    x -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
