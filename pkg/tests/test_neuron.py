import math

import numpy as np
import pytest

from spikelearn.neuron import (
    AlphaBasis,
    InfeasiblePatternError,
    SmrmConfig,
    SmrmNeuron,
    intensity,
    pattern_log_density_continuous,
    pattern_surprisal_discrete,
    spike_probability,
)
from spikelearn.patterns import SpikePattern, SpikeTrain


def small_config(n=1, peaks=(2.0, 5.0), **kw):
    return SmrmConfig(n=n, basis=AlphaBasis.from_peaks(peaks), **kw)


class TestAlphaBasis:
    def test_zero_before_onset(self):
        b = AlphaBasis.from_peaks((1.8, 3.3, 9.3))
        assert np.all(b.value(-1.0) == 0.0)
        assert np.all(b.value(0.0) == 0.0)

    def test_unit_peak(self):
        b = AlphaBasis.from_peaks((1.8, 3.3, 9.3))
        # peak time solves to factor * tau_s; value there is exactly 1
        vals = [b.value(t)[i] for i, t in enumerate(b.peak_times)]
        np.testing.assert_allclose(vals, 1.0, atol=1e-9)
        np.testing.assert_allclose(b.peak_times, (1.8, 3.3, 9.3), atol=1e-9)

    def test_decays(self):
        b = AlphaBasis.from_peaks((1.8, 3.3, 9.3))
        assert np.all(b.value(20 * b.tau_m.max()) < 1e-6)

    def test_support_bounds_tail(self):
        b = AlphaBasis.from_peaks((1.8, 3.3, 9.3))
        t_m = b.support(1e-4)
        assert np.all(b.value(t_m) <= 1e-4)
        assert np.any(b.value(0.8 * t_m) > 1e-4)

    def test_rejects_bad_shape(self):
        with pytest.raises(ValueError):
            AlphaBasis(np.array([1.0]), np.array([2.0]), np.array([1.0]))


class TestIntensity:
    def test_unit_at_threshold(self):
        cfg = small_config()
        assert intensity(cfg, cfg.th) == pytest.approx(1.0)

    def test_doubles_after_kappa_ln2(self):
        cfg = small_config()
        assert intensity(cfg, cfg.th + cfg.kappa * math.log(2)) == pytest.approx(2.0)

    def test_monotone(self):
        cfg = small_config()
        rng = np.random.default_rng(0)
        u = rng.uniform(-3, 3, 50)
        assert np.all(intensity(cfg, u + 0.1) > intensity(cfg, u))

    def test_spike_probability(self):
        cfg = small_config()
        assert spike_probability(cfg, 0.0) == 0.0
        assert spike_probability(cfg, math.log(2) / cfg.dt) == pytest.approx(0.5)
        # frozen from the closed form 1 - exp(-exp(-10) * 1 ms)
        assert spike_probability(cfg, math.exp(-10)) == pytest.approx(
            4.5398899201269496e-05, abs=1e-9
        )


class TestMembrane:
    def test_zero_without_history(self):
        cfg = small_config()
        n = SmrmNeuron(cfg)
        for _ in range(5):
            view = n.advance()
            assert view.u == 0.0
            n.resolve(False)

    def test_single_spike_sum_of_kernels(self):
        cfg = small_config(peaks=(2.0, 5.0))
        w = np.array([[0.3, 0.7]])
        n = SmrmNeuron(cfg, w)
        n.inject([0], 0.0)
        for k in range(1, 8):
            view = n.advance()
            t = k * cfg.dt
            expect = float(np.sum(w * cfg.basis.value(t)))
            assert view.u == pytest.approx(expect, rel=1e-12)
            n.resolve(False)

    def test_potential_resets_after_fire(self):
        cfg = small_config(dt_refr=1.0)
        n = SmrmNeuron(cfg, np.array([[1.0, 1.0]]))
        n.inject([0], 0.0)
        n.advance()
        n.resolve(True)  # output spike wipes the input history
        view = n.advance()
        assert view.u == 0.0

    def test_refractory_blocks_probability(self):
        cfg = small_config(dt_refr=2.0)
        n = SmrmNeuron(cfg, np.array([[2.0, 2.0]]))
        n.inject([0], 0.0)
        n.advance()
        n.resolve(True)
        view = n.advance()  # one step after the fire, inside 2*dt window
        assert view.refractory and view.big_lam == 0.0
        view = n.advance()  # window over
        assert not view.refractory

    def test_forced_mode_ignores_rng(self):
        cfg = small_config()
        n = SmrmNeuron(cfg)
        fired, _ = n.step(force=True)
        assert fired
        fired, _ = n.step(force=False)
        assert not fired

    def test_determinism(self):
        cfg = small_config()
        outs = []
        for _ in range(2):
            n = SmrmNeuron(cfg, np.array([[1.1, 0.4]]))
            rng = np.random.default_rng(42)
            trace = []
            for k in range(40):
                fired, _ = n.step([0] if k % 7 == 0 else [], rng)
                trace.append(fired)
            outs.append(trace)
        assert outs[0] == outs[1]

    def test_refractory_never_violated_in_sampling(self):
        cfg = small_config(dt_refr=3.0, kappa=0.5)
        n = SmrmNeuron(cfg, np.array([[2.0, 2.0]]))
        rng = np.random.default_rng(1)
        fires = []
        for k in range(3000):
            fired, _ = n.step([0], rng)
            if fired:
                fires.append(k)
        gaps = np.diff(fires)
        assert len(fires) > 10
        assert np.all(gaps >= cfg.refr_steps)


class TestDiscreteSurprisal:
    def test_silent_neuron_closed_form(self):
        # zero weights, Th=1, kappa=0.1: lam = e^{-10}; 10 silent 1 ms steps
        cfg = SmrmConfig(n=1, basis=AlphaBasis.from_peaks((2.0,)), th=1.0, kappa=0.1)
        h = pattern_surprisal_discrete(
            cfg, cfg.zero_weights(), SpikePattern.empty(1, 10.0),
            SpikeTrain.empty(10.0),
        )
        assert h == pytest.approx(10 * math.exp(-10), rel=1e-9)

    def test_nonnegative(self):
        rng = np.random.default_rng(2)
        cfg = small_config(n=2)
        for _ in range(20):
            w = rng.normal(scale=0.5, size=(2, 2))
            x = SpikePattern.from_events(2, 12.0, [(0, 1.0), (1, 4.0)])
            times = np.sort(rng.choice(np.arange(1.0, 12.0), size=2, replace=False))
            y = SpikeTrain(times, 12.0)
            assert pattern_surprisal_discrete(cfg, w, x, y) >= 0.0

    def test_additive_when_split_after_output_spike(self):
        # surprisal over [0,12] equals head + tail when the cut point leaves a
        # fresh state behind (output spike at 5 clears history, nothing
        # arrives before the cut at 6)
        cfg = small_config(n=1)
        w = np.array([[0.8, 0.5]])
        x = SpikePattern.from_events(1, 12.0, [(0, 1.0), (0, 7.0)])
        y = SpikeTrain(np.array([5.0, 9.0]), 12.0)
        h_full = pattern_surprisal_discrete(cfg, w, x, y)
        x_head = SpikePattern.from_events(1, 6.0, [(0, 1.0)])
        y_head = SpikeTrain(np.array([5.0]), 6.0)
        x_tail = SpikePattern.from_events(1, 6.0, [(0, 1.0)])  # input 7 -> 1
        y_tail = SpikeTrain(np.array([3.0]), 6.0)  # output 9 -> 3
        h_head = pattern_surprisal_discrete(cfg, w, x_head, y_head)
        h_tail = pattern_surprisal_discrete(cfg, w, x_tail, y_tail)
        assert h_full == pytest.approx(h_head + h_tail, rel=1e-9)

    def test_infeasible_pattern_raises(self):
        cfg = small_config(dt_refr=3.0)
        x = SpikePattern.empty(1, 10.0)
        y = SpikeTrain(np.array([4.0, 6.0]), 10.0)  # violates 3 ms refractoriness
        with pytest.raises((InfeasiblePatternError, ValueError)):
            pattern_surprisal_discrete(cfg, cfg.zero_weights(), x, y)


class TestContinuousDensity:
    def test_constant_rate_empty_pattern(self):
        # zero weights give lam = exp(-Th/kappa) everywhere
        cfg = SmrmConfig(n=1, basis=AlphaBasis.from_peaks((2.0,)), th=1.0, kappa=0.5)
        lam = math.exp(-cfg.th / cfg.kappa)
        h = pattern_log_density_continuous(
            cfg, cfg.zero_weights(), SpikePattern.empty(1, 10.0),
            SpikeTrain.empty(10.0),
        )
        assert h == pytest.approx(lam * 10.0, rel=1e-6)

    def test_empty_pattern_nonnegative(self):
        cfg = small_config(n=2)
        rng = np.random.default_rng(3)
        w = rng.normal(scale=0.4, size=(2, 2))
        x = SpikePattern.from_events(2, 10.0, [(0, 1.0), (1, 3.0)])
        h = pattern_log_density_continuous(cfg, w, x, SpikeTrain.empty(10.0))
        assert h >= 0.0

    def test_discrete_converges_to_density(self):
        # h_discrete(dt) + n ln(dt) -> h_diff as dt -> 0
        basis = AlphaBasis.from_peaks((2.0, 5.0))
        w = np.array([[0.9, 0.6]])
        x = SpikePattern.from_events(1, 16.0, [(0, 1.0), (0, 6.0)])
        y = SpikeTrain(np.array([4.0, 10.0]), 16.0)
        gaps = []
        for dt in (1.0, 0.5, 0.25):
            cfg = SmrmConfig(n=1, basis=basis, dt=dt, dt_refr=1.0)
            hd = pattern_surprisal_discrete(cfg, w, x, y)
            hc = pattern_log_density_continuous(cfg, w, x, y, quad_step=dt / 8)
            gaps.append(abs(hd + len(y.times) * math.log(dt) - hc))
        assert gaps[2] < gaps[1] < gaps[0]
        assert gaps[2] < 0.05
