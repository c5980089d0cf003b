import math

import numpy as np
import pytest

from spikelearn.neuron import (
    AlphaBasis,
    InfeasiblePatternError,
    SmrmConfig,
    pattern_surprisal_discrete,
)
from spikelearn.oracles import (
    enumerate_output_distribution,
    fd_gradient,
    fd_hessian,
    mask_to_train,
    quadrature_integral,
)
from spikelearn.patterns import SpikePattern, SpikeTrain


def random_instance(rng, steps, n=2, peaks=(2.0, 5.0), kappa=0.4, dt_refr=1.0):
    cfg = SmrmConfig(
        n=n, basis=AlphaBasis.from_peaks(peaks), th=1.0, kappa=kappa,
        dt=1.0, dt_refr=dt_refr,
    )
    w = rng.normal(scale=0.6, size=(n, cfg.m))
    horizon = steps * cfg.dt
    events = []
    for ch in range(n):
        for t in range(steps):
            if rng.random() < 0.25:
                events.append((ch, float(t)))
    x = SpikePattern.from_events(n, horizon, events)
    return cfg, w, x


class TestEnumeration:
    def test_single_step_distribution(self):
        rng = np.random.default_rng(0)
        cfg, w, x = random_instance(rng, steps=1)
        masks, probs = enumerate_output_distribution(cfg, w, x, 1)
        assert probs[0] + probs[1] == pytest.approx(1.0, abs=1e-12)

    def test_normalization_and_cross_module_match(self):
        rng = np.random.default_rng(1)
        for trial in range(8):
            steps = int(rng.integers(4, 9))
            dt_refr = float(rng.integers(1, 3))
            cfg, w, x = random_instance(rng, steps, dt_refr=dt_refr)
            masks, probs = enumerate_output_distribution(cfg, w, x, steps)
            assert probs.sum() == pytest.approx(1.0, abs=1e-9)
            for mask in masks[:: max(1, len(masks) // 64)]:
                times = mask_to_train(int(mask), steps, cfg.dt)
                p_oracle = probs[mask]
                try:
                    h = pattern_surprisal_discrete(
                        cfg, w, x, SpikeTrain(times, x.horizon)
                    )
                    p_prod = math.exp(-h)
                except (InfeasiblePatternError, ValueError):
                    p_prod = 0.0
                assert p_prod == pytest.approx(p_oracle, abs=1e-10)

    def test_refractory_masks_zeroed(self):
        rng = np.random.default_rng(2)
        cfg, w, x = random_instance(rng, steps=5, dt_refr=2.0)
        masks, probs = enumerate_output_distribution(cfg, w, x, 5)
        for mask in masks:
            times = mask_to_train(int(mask), 5, cfg.dt)
            if len(times) >= 2 and np.min(np.diff(times)) < cfg.dt_refr:
                assert probs[mask] == 0.0

    def test_rejects_large_horizon(self):
        rng = np.random.default_rng(3)
        cfg, w, x = random_instance(rng, steps=4)
        with pytest.raises(ValueError):
            enumerate_output_distribution(cfg, w, x, 17)


class TestFiniteDifference:
    def test_quadratic(self):
        w = np.array([[1.0, -2.0], [0.5, 3.0]])
        g = fd_gradient(lambda v: float(np.sum(v**2)), w, eps=1e-5)
        np.testing.assert_allclose(g, 2 * w, atol=1e-8)

    def test_constant(self):
        g = fd_gradient(lambda v: 4.2, np.ones((2, 2)), eps=1e-5)
        np.testing.assert_allclose(g, 0.0, atol=1e-12)

    def test_richardson_agreement(self):
        w = np.array([0.3, -0.7])
        f = lambda v: float(np.sum(np.sin(v) ** 3))
        coarse, fine = fd_gradient(f, w, eps=1e-4, richardson=True)
        # central differences are O(eps^2): the two estimates agree closely
        np.testing.assert_allclose(coarse, fine, atol=1e-7)

    def test_hessian_quadratic(self):
        A = np.array([[2.0, 0.3], [0.3, 1.0]])
        f = lambda v: float(v.ravel() @ A @ v.ravel())
        H = fd_hessian(f, np.array([0.2, -0.4]), eps=1e-4)
        np.testing.assert_allclose(H, 2 * A, atol=1e-5)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            fd_gradient(lambda v: float("nan"), np.ones(2), eps=1e-5)


class TestQuadrature:
    def test_constant_exact(self):
        val, err = quadrature_integral(lambda t: 1.0, 0.0, 1.0, 0.1)
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_alpha_kernel_integral(self):
        basis = AlphaBasis.from_peaks((3.0,))
        upper = 20 * float(basis.tau_m[0])
        val, err = quadrature_integral(
            lambda t: float(basis.value(t)[0]), 0.0, upper, 0.005
        )
        exact = float(basis.integral()[0])
        assert val == pytest.approx(exact, abs=1e-6)

    def test_error_estimate_shrinks_4x(self):
        f = lambda t: math.sin(t)
        _, err1 = quadrature_integral(f, 0.0, 3.0, 0.1)
        _, err2 = quadrature_integral(f, 0.0, 3.0, 0.05)
        assert err2 == pytest.approx(err1 / 4, rel=0.2)
