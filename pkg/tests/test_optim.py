import math

import numpy as np
import pytest

from loganneal import optim
from loganneal.optim import (
    AdamConfig,
    AdamState,
    NonFiniteGradientError,
    SgdConfig,
    SgdState,
    SingularHessianError,
    adam_step,
    newton_step,
    sgd_step,
)


def _sgd(n=1):
    return SgdConfig(), SgdState.for_params(n)


# -- sgd ------------------------------------------------------------------


def test_plain_sgd_arithmetic():
    x = np.array([2.0])
    cfg, state = _sgd()
    sgd_step(x, np.array([4.0]), 0.1, cfg, state)
    assert x[0] == pytest.approx(1.6, abs=0)


def test_zero_gradient_is_a_fixed_point():
    x = np.array([1.0])
    cfg, state = _sgd()
    sgd_step(x, np.array([0.0]), 0.5, cfg, state)
    assert x[0] == 1.0


def test_plain_sgd_is_bitwise_x_minus_lr_g():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(64)
    g = rng.standard_normal(64)
    expected = x - 0.07 * g
    cfg, state = _sgd(64)
    sgd_step(x, g, 0.07, cfg, state)
    assert np.array_equal(x, expected)


def test_momentum_recurrence_two_steps():
    # v1 = g, v2 = mu*v1 + g; hand-unrolled total displacement
    x = np.array([0.0])
    cfg = SgdConfig(momentum=0.9)
    state = SgdState.for_params(1)
    sgd_step(x, np.array([1.0]), 0.1, cfg, state)
    sgd_step(x, np.array([1.0]), 0.1, cfg, state)
    assert x[0] == pytest.approx(-0.1 * 1.0 - 0.1 * 1.9, rel=1e-15)


def test_dampening_scales_gradient_after_first_step():
    x = np.array([0.0])
    cfg = SgdConfig(momentum=0.5, dampening=0.2)
    state = SgdState.for_params(1)
    sgd_step(x, np.array([1.0]), 1.0, cfg, state)  # v = 1 (first step unscaled)
    sgd_step(x, np.array([1.0]), 1.0, cfg, state)  # v = 0.5 + 0.8
    assert x[0] == pytest.approx(-(1.0 + 1.3), rel=1e-15)


def test_weight_decay_shrinks_toward_zero_on_zero_gradient():
    cfg = SgdConfig(weight_decay=0.1)
    state = SgdState.for_params(1)
    x = np.array([1.0])
    prev = 1.0
    for _ in range(50):
        sgd_step(x, np.array([0.0]), 0.5, cfg, state)
        assert 0.0 < x[0] < prev
        prev = x[0]


def test_nonfinite_gradient_rejected_without_update():
    x = np.array([1.0, 2.0])
    cfg, state = _sgd(2)
    with pytest.raises(NonFiniteGradientError):
        sgd_step(x, np.array([1.0, np.nan]), 0.1, cfg, state)
    assert np.array_equal(x, [1.0, 2.0])
    assert not state.initialized


def test_sgd_permutation_equivariance():
    rng = np.random.default_rng(11)
    x = rng.standard_normal(10)
    g = rng.standard_normal(10)
    perm = rng.permutation(10)
    cfg = SgdConfig(momentum=0.9, weight_decay=0.01)
    a = x.copy()
    sgd_step(a, g, 0.1, cfg, SgdState.for_params(10))
    b = x[perm].copy()
    sgd_step(b, g[perm], 0.1, cfg, SgdState.for_params(10))
    assert np.array_equal(a[perm], b)


# -- adam -----------------------------------------------------------------


class _ReferenceAdam:
    """Clean-room scalar Adam used as an independent oracle."""

    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = 0.0
        self.t = 0

    def step(self, x, g):
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * g
        self.v = self.b2 * self.v + (1 - self.b2) * g * g
        m_hat = self.m / (1 - self.b1**self.t)
        v_hat = self.v / (1 - self.b2**self.t)
        return x - self.lr * m_hat / (math.sqrt(v_hat) + self.eps)


def test_adam_first_step_magnitude_is_lr():
    for g0 in (1.0, -3.0, 0.5, 100.0, 0.01):
        x = np.array([0.0])
        adam_step(x, np.array([g0]), 0.001, AdamConfig(), AdamState.for_params(1))
        assert abs(x[0]) == pytest.approx(0.001, rel=1e-6)
        assert math.copysign(1, x[0]) == -math.copysign(1, g0)


def test_adam_zero_gradient_never_moves():
    x = np.array([1.5])
    cfg, state = AdamConfig(), AdamState.for_params(1)
    for _ in range(25):
        adam_step(x, np.array([0.0]), 0.01, cfg, state)
    assert x[0] == 1.5


def test_adam_matches_reference_on_quadratic():
    # 10 steps on f(x) = x^2 from x=1 against the scalar oracle
    ref = _ReferenceAdam(lr=0.1)
    x_ref = 1.0
    x = np.array([1.0])
    cfg, state = AdamConfig(), AdamState.for_params(1)
    for _ in range(10):
        x_ref = ref.step(x_ref, 2.0 * x_ref)
        adam_step(x, 2.0 * x, 0.1, cfg, state)
        assert x[0] == pytest.approx(x_ref, abs=1e-12)


def test_adam_step1_scale_invariance():
    for c in (2.0, 10.0, 1000.0):
        a = np.array([0.0, 0.0, 0.0])
        b = np.array([0.0, 0.0, 0.0])
        g = np.array([0.3, -1.2, 4.0])
        adam_step(a, g, 0.01, AdamConfig(), AdamState.for_params(3))
        adam_step(b, c * g, 0.01, AdamConfig(), AdamState.for_params(3))
        assert np.allclose(a, b, rtol=1e-6)
        assert np.array_equal(np.sign(a), np.sign(b))


def test_adam_state_untouched_on_bad_gradient():
    x = np.array([1.0])
    cfg, state = AdamConfig(), AdamState.for_params(1)
    adam_step(x, np.array([1.0]), 0.01, cfg, state)
    m, v, t = state.m.copy(), state.v.copy(), state.t
    with pytest.raises(NonFiniteGradientError):
        adam_step(x, np.array([np.inf]), 0.01, cfg, state)
    assert np.array_equal(state.m, m) and np.array_equal(state.v, v) and state.t == t


def test_adam_config_validation():
    with pytest.raises(ValueError):
        AdamConfig(beta1=1.0)
    with pytest.raises(ValueError):
        AdamConfig(epsilon=0.0)


# -- newton ---------------------------------------------------------------


def _random_spd(n, cond, rng):
    lam = np.geomspace(1.0, cond, n)
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    a = (q * lam) @ q.T
    return 0.5 * (a + a.T)


def test_newton_solves_quadratic_in_one_step():
    rng = np.random.default_rng(5)
    a = _random_spd(6, 100.0, rng)
    x0 = rng.standard_normal(6)
    x1 = newton_step(x0, a @ x0, a, lr=1.0)
    assert np.linalg.norm(x1) <= 1e-10


def test_newton_one_step_up_to_cond_1e6():
    rng = np.random.default_rng(6)
    for cond in (1e2, 1e4, 1e6):
        for _ in range(10):
            a = _random_spd(6, cond, rng)
            x0 = rng.standard_normal(6)
            x0 /= np.linalg.norm(x0)
            x1 = newton_step(x0, a @ x0, a, lr=1.0)
            assert np.linalg.norm(x1) <= 1e-10, cond


def test_newton_identity_hessian_reduces_to_plain_sgd():
    rng = np.random.default_rng(7)
    x = rng.standard_normal(4)
    g = rng.standard_normal(4)
    got = newton_step(x, g, np.eye(4), lr=0.3)
    want = x.copy()
    sgd_step(want, g, 0.3, SgdConfig(), SgdState.for_params(4))
    assert np.allclose(got, want, rtol=1e-12)


def test_newton_zero_hessian_is_singular():
    with pytest.raises(SingularHessianError):
        newton_step(np.array([1.0, 2.0]), np.array([1.0, 1.0]), np.zeros((2, 2)), 1.0)


def test_newton_requires_symmetry():
    h = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(ValueError, match="symmetric"):
        newton_step(np.array([1.0, 2.0]), np.array([1.0, 1.0]), h, 1.0)


def test_newton_permutation_equivariance():
    rng = np.random.default_rng(8)
    a = _random_spd(5, 10.0, rng)
    x = rng.standard_normal(5)
    g = rng.standard_normal(5)
    perm = rng.permutation(5)
    p = np.eye(5)[perm]
    direct = newton_step(x, g, a, 0.5)[perm]
    permuted = newton_step(x[perm], g[perm], p @ a @ p.T, 0.5)
    assert np.allclose(direct, permuted, rtol=1e-9)
