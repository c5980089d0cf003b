"""Surprisal-minimization training of a single neuron.

The gradient of the discrete-time surprisal splits into a non-associative
term over silent steps (pushes the potential down everywhere) and an
associative term at desired-spike steps weighted by (1 - P)/P (pulls the
potential up where the teacher fired). Two trainers implement the interval
splitting at teaching spikes: one evolves the state strictly along the
desired pattern, the other lets the neuron fire stochastically and unlearns
false positives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .neuron import (
    InfeasiblePatternError,
    PROB_FLOOR,
    SmrmConfig,
    SmrmNeuron,
    intensity,
    pattern_log_density_continuous,
)
from .patterns import SpikePattern, SpikeTrain

__all__ = [
    "surprisal_gradient",
    "train_iteration_teacher_forced",
    "train_iteration_online",
    "OnlineSupervisedLearner",
    "stdp_curve",
    "surprisal_hessian",
    "TrainEvent",
]


def _clamped(big_lam: float) -> float:
    return min(max(big_lam, PROB_FLOOR), 1.0 - PROB_FLOOR)


def _setup(config: SmrmConfig, x: SpikePattern, y: SpikeTrain):
    dt = config.dt
    steps = int(round(y.horizon / dt))
    from .neuron import _pattern_to_steps, _train_to_step_set

    inputs = _pattern_to_steps(x, dt, steps)
    teach = _train_to_step_set(y, dt)
    return steps, inputs, teach


def surprisal_gradient(config: SmrmConfig, weights: np.ndarray, x: SpikePattern,
                       y: SpikeTrain) -> np.ndarray:
    """d(surprisal)/dw for the desired train y under teacher forcing; (n, m)."""
    y.check_refractory(config.dt_refr)
    steps, inputs, teach = _setup(config, x, y)
    neuron = SmrmNeuron(config, weights)
    g = config.zero_weights()
    slope = 1.0 / config.kappa
    for k in range(1, steps + 1):
        view = neuron.advance(inputs[k])
        if k in teach:
            if view.refractory:
                raise InfeasiblePatternError(
                    f"required spike at step {k} is inside the refractory window"
                )
            lam_prime = view.lam * slope
            g -= ((1.0 - view.big_lam) / _clamped(view.big_lam)) * lam_prime * view.drive
            neuron.resolve(True)
        else:
            if not view.refractory:
                g += view.lam * slope * view.drive
            neuron.resolve(False)
    return g * config.dt


@dataclass
class TrainEvent:
    step: int
    kind: str  # "teach" | "coincident" | "false_positive"


def train_iteration_teacher_forced(neuron: SmrmNeuron, x: SpikePattern,
                                   y: SpikeTrain, gamma: float) -> float:
    """One presentation with spike generation disabled.

    The neuron fires exactly at the teaching spikes; the accumulated gradient
    is applied (and reset) at each of them. Returns the surprisal measured
    along this presentation. Weights update in place.
    """
    config = neuron.config
    y.check_refractory(config.dt_refr)
    steps, inputs, teach = _setup(config, x, y)
    neuron.reset()
    g = config.zero_weights()
    slope = 1.0 / config.kappa
    h = 0.0
    for k in range(1, steps + 1):
        view = neuron.advance(inputs[k])
        if k in teach:
            if view.refractory:
                raise InfeasiblePatternError(
                    f"required spike at step {k} is inside the refractory window"
                )
            lam_prime = view.lam * slope
            h -= math.log(_clamped(view.big_lam))
            g -= ((1.0 - view.big_lam) / _clamped(view.big_lam)) * lam_prime * view.drive
            neuron.w = neuron.w - gamma * g * config.dt
            g = config.zero_weights()
            neuron.resolve(True)
        else:
            if not view.refractory:
                h += view.lam * config.dt
                g += view.lam * slope * view.drive
            neuron.resolve(False)
    return h


def train_iteration_online(neuron: SmrmNeuron, x: SpikePattern, y: SpikeTrain,
                           gamma: float, rng: np.random.Generator,
                           force_fire_on_teach: bool = True):
    """One presentation with spike generation enabled.

    Bookkeeping per step: coincident teacher+self spike resets the gradient
    with no update; teacher alone applies the update against the gradient;
    a lone false positive applies it along the gradient. Returns
    (surprisal along the realized teacher steps, event log).
    """
    config = neuron.config
    y.check_refractory(config.dt_refr)
    steps, inputs, teach = _setup(config, x, y)
    neuron.reset()
    g = config.zero_weights()
    slope = 1.0 / config.kappa
    h = 0.0
    log: list[TrainEvent] = []
    for k in range(1, steps + 1):
        view = neuron.advance(inputs[k])
        is_teach = k in teach
        if view.refractory:
            # nothing can fire and nothing is learnable inside the window
            neuron.resolve(False)
            continue
        self_fired = rng.random() < view.big_lam
        lam_prime = view.lam * slope
        assoc = ((1.0 - view.big_lam) / _clamped(view.big_lam)) * lam_prime * view.drive
        if is_teach:
            h -= math.log(_clamped(view.big_lam))
        else:
            h += view.lam * config.dt
        if is_teach and self_fired:
            g = config.zero_weights()
            log.append(TrainEvent(k, "coincident"))
            neuron.resolve(True)
        elif is_teach:
            g -= assoc
            neuron.w = neuron.w - gamma * g * config.dt
            g = config.zero_weights()
            log.append(TrainEvent(k, "teach"))
            neuron.resolve(force_fire_on_teach)
        elif self_fired:
            g -= assoc
            neuron.w = neuron.w + gamma * g * config.dt
            g = config.zero_weights()
            log.append(TrainEvent(k, "false_positive"))
            neuron.resolve(True)
        else:
            g += lam_prime * view.drive
            neuron.resolve(False)
    return h, log


class OnlineSupervisedLearner:
    """Per-tick form of the enabled-generation trainer, for network nodes."""

    def __init__(self, neuron: SmrmNeuron, gamma: float,
                 force_fire_on_teach: bool = True):
        self.neuron = neuron
        self.gamma = gamma
        self.force_fire_on_teach = force_fire_on_teach
        self.g = neuron.config.zero_weights()

    def reset_episode(self) -> None:
        self.neuron.reset()
        self.g = self.neuron.config.zero_weights()

    def tick(self, input_channels, teach: bool, rng: np.random.Generator,
             learning: bool = True) -> bool:
        config = self.neuron.config
        view = self.neuron.advance(input_channels)
        if view.refractory:
            self.neuron.resolve(False)
            return False
        self_fired = rng.random() < view.big_lam
        if not learning:
            self.neuron.resolve(self_fired)
            return self_fired
        lam_prime = view.lam / config.kappa
        assoc = ((1.0 - view.big_lam) / _clamped(view.big_lam)) * lam_prime * view.drive
        if teach and self_fired:
            self.g = config.zero_weights()
            fired = True
        elif teach:
            self.g -= assoc
            self.neuron.w = self.neuron.w - self.gamma * self.g * config.dt
            self.g = config.zero_weights()
            fired = self.force_fire_on_teach
        elif self_fired:
            self.g -= assoc
            self.neuron.w = self.neuron.w + self.gamma * self.g * config.dt
            self.g = config.zero_weights()
            fired = True
        else:
            self.g += lam_prime * view.drive
            fired = False
        self.neuron.resolve(fired)
        return fired


def stdp_curve(config: SmrmConfig, w: float, deltas, horizon: float,
               gamma: float = 1.0, quad_step: float | None = None):
    """Weight change vs input-output lag for a one-channel, one-kernel neuron.

    The teaching spike sits at time 0 inside the window [-horizon, horizon];
    the input spike at -delta. Returns a list of (delta, dw) rows.
    """
    if config.n != 1 or config.m != 1:
        raise ValueError("the lag curve is defined for a single channel and kernel")
    if quad_step is None:
        quad_step = config.dt / 4.0
    basis = config.basis
    rows = []
    for delta in np.atleast_1d(np.asarray(deltas, dtype=float)):
        t_in = -delta
        s = np.arange(-horizon, horizon + quad_step / 2, quad_step)
        a = basis.value(s - t_in)[:, 0]
        lam = intensity(config, w * a)
        integral = float(np.trapezoid(lam * a, s))
        pos = float(basis.value(delta)[0])
        rows.append((float(delta), gamma / config.kappa * (pos - integral)))
    return rows


def surprisal_hessian(config: SmrmConfig, weights: np.ndarray, x: SpikePattern,
                      y: SpikeTrain, quad_step: float | None = None):
    """Hessian of the differential surprisal over flattened weights.

    With the exponential threshold the log term is linear in the potential,
    so only the integral of lambda''(u) times the Gram matrix of per-weight
    kernel sums remains. Returns (H, min eigenvalue).
    """
    if quad_step is None:
        quad_step = config.dt / 4.0
    y.check_refractory(config.dt_refr)
    horizon = y.horizon
    out_times = list(y.times)
    in_events = x.events()
    marks = {0.0, horizon}
    marks.update(t for _, t in in_events if 0.0 < t < horizon)
    marks.update(t for t in out_times if 0.0 < t < horizon)
    marks.update(
        t + config.dt_refr for t in out_times if 0.0 < t + config.dt_refr < horizon
    )
    marks = sorted(marks)

    dim = config.n * config.m
    H = np.zeros((dim, dim))
    stored_t: list[float] = []
    stored_c: list[int] = []
    last_out = -math.inf
    w = np.asarray(weights)
    ev_idx = 0
    for a, b in zip(marks[:-1], marks[1:]):
        while ev_idx < len(in_events) and in_events[ev_idx][1] <= a + 1e-12:
            ch, t = in_events[ev_idx]
            if t > last_out + 1e-12 or last_out == -math.inf:
                stored_t.append(t)
                stored_c.append(ch)
            ev_idx += 1
        npts = max(2, int(math.ceil((b - a) / quad_step)) + 1)
        ts = np.linspace(a, b, npts)
        wq = np.full(npts, ts[1] - ts[0])
        wq[0] *= 0.5
        wq[-1] *= 0.5
        for t, wt in zip(ts, wq):
            if t - last_out < config.dt_refr - 1e-12:
                continue
            drive = np.zeros((config.n, config.m))
            if stored_t:
                lags = t - np.asarray(stored_t)
                np.add.at(drive, np.asarray(stored_c), config.basis.value(lags))
            u = float(np.sum(w * drive))
            lam2 = float(intensity(config, u)) / config.kappa**2
            v = drive.ravel()
            H += wt * lam2 * np.outer(v, v)
        if any(abs(b - t) < 1e-12 for t in out_times):
            stored_t.clear()
            stored_c.clear()
            last_out = b
    eigs = np.linalg.eigvalsh(0.5 * (H + H.T))
    return H, float(eigs[0])
