# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: multimodal test-function evaluation/gradients and
fused optimizer updates.

Same contracts as ``_pykernels``; per-element arithmetic is ordered
identically so the two backends agree to rounding error.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, sin, sqrt

cnp.import_array()

cdef double TWO_PI = 6.283185307179586476925287
cdef double E = 2.718281828459045235360287


def ackley_eval(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double sq = 0.0, cs = 0.0
    for i in range(n):
        sq += x[i] * x[i]
        cs += cos(TWO_PI * x[i])
    return -20.0 * exp(-0.2 * sqrt(sq / n)) - exp(cs / n) + 20.0 + E


def ackley_grad(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double sq = 0.0, cs = 0.0
    for i in range(n):
        sq += x[i] * x[i]
        cs += cos(TWO_PI * x[i])
    cdef double rms = sqrt(sq / n)
    cdef double e_cos = exp(cs / n)
    cdef double e_sq = exp(-0.2 * rms)
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = (TWO_PI / n) * e_cos * sin(TWO_PI * x[i])
        if rms > 0.0:
            out[i] += (4.0 / n) * e_sq * x[i] / rms
    return out_arr


def rastrigin_eval(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double acc = 10.0 * n
    for i in range(n):
        acc += x[i] * x[i] - 10.0 * cos(TWO_PI * x[i])
    return acc


def rastrigin_grad(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n)
    cdef double[::1] out = out_arr
    for i in range(n):
        out[i] = 2.0 * x[i] + 20.0 * 3.141592653589793238463 * sin(TWO_PI * x[i])
    return out_arr


def griewank_eval(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double sq = 0.0, prod = 1.0
    for i in range(n):
        sq += x[i] * x[i]
        prod *= cos(x[i] / sqrt(i + 1.0))
    return 1.0 + sq / 4000.0 - prod


def griewank_grad(double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double si
    out_arr = np.empty(n)
    pre_arr = np.empty(n)
    suf_arr = np.empty(n)
    cdef double[::1] out = out_arr
    cdef double[::1] pre = pre_arr
    cdef double[::1] suf = suf_arr
    pre[0] = 1.0
    for i in range(1, n):
        pre[i] = pre[i - 1] * cos(x[i - 1] / sqrt(<double>i))
    suf[n - 1] = 1.0
    for i in range(n - 2, -1, -1):
        suf[i] = suf[i + 1] * cos(x[i + 1] / sqrt(i + 2.0))
    for i in range(n):
        si = sqrt(i + 1.0)
        out[i] = x[i] / 2000.0 + sin(x[i] / si) / si * pre[i] * suf[i]
    return out_arr


def sgd_update(double[::1] x, double[::1] grad, double[::1] velocity,
               double lr, double momentum, double dampening,
               double weight_decay, bint first):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double g, one_minus_damp = 1.0 - dampening
    for i in range(n):
        g = grad[i] + weight_decay * x[i] if weight_decay != 0.0 else grad[i]
        if first:
            velocity[i] = g
        else:
            velocity[i] = momentum * velocity[i] + one_minus_damp * g
        x[i] -= lr * velocity[i]


def adam_update(double[::1] x, double[::1] grad, double[::1] m, double[::1] v,
                double lr, double beta1, double beta2, double eps,
                double weight_decay, double bc1, double bc2):
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double g
    for i in range(n):
        g = grad[i] + weight_decay * x[i] if weight_decay != 0.0 else grad[i]
        m[i] = beta1 * m[i] + (1.0 - beta1) * g
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g
        x[i] -= lr * (m[i] / bc1) / (sqrt(v[i] / bc2) + eps)
