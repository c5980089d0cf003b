"""Stochastic spiking neuron with per-channel banks of alpha kernels.

The membrane potential is a weighted sum of normalized double-exponential
responses to input spikes since the last output spike; an output spike hard-
resets the potential to zero and blocks firing for the absolute refractory
window. Spiking is a point process with exponential intensity in the
potential, discretized to per-step firing probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .patterns import SpikePattern, SpikeTrain

__all__ = [
    "AlphaBasis",
    "SmrmConfig",
    "SmrmState",
    "SmrmNeuron",
    "StepView",
    "InfeasiblePatternError",
    "intensity",
    "intensity_slope",
    "spike_probability",
    "pattern_surprisal_discrete",
    "pattern_log_density_continuous",
    "LAMBDA_EXP_CAP",
    "PROB_FLOOR",
]

# guards: intensity exponent cap and the probability floor used inside logs
LAMBDA_EXP_CAP = 300.0
PROB_FLOOR = 1e-12

# peak time of a0*(exp(-t/tm) - exp(-t/ts)) with tm = ratio*ts is
# PEAK_FACTOR(ratio) * ts
DEFAULT_TAU_RATIO = 4.0
DEFAULT_PEAKS_MS = (1.8, 3.3, 9.3)


def _peak_factor(ratio: float) -> float:
    return ratio / (ratio - 1.0) * math.log(ratio)


class InfeasiblePatternError(ValueError):
    """Desired output spike falls inside a refractory window."""


@dataclass(frozen=True)
class AlphaBasis:
    """Bank of m alpha kernels a0*(exp(-t/tau_m) - exp(-t/tau_s))*H(t).

    Each kernel is normalized to unit peak; tau_m > tau_s > 0. Construct via
    :meth:`from_peaks`, which fixes the shape by tau_m = ratio * tau_s and
    solves tau_s from the requested peak time.
    """

    tau_m: np.ndarray
    tau_s: np.ndarray
    a0: np.ndarray

    def __post_init__(self):
        tm = np.atleast_1d(np.asarray(self.tau_m, dtype=float))
        ts = np.atleast_1d(np.asarray(self.tau_s, dtype=float))
        a0 = np.atleast_1d(np.asarray(self.a0, dtype=float))
        if not (tm.shape == ts.shape == a0.shape):
            raise ValueError("tau_m, tau_s, a0 must have equal length")
        if np.any(ts <= 0) or np.any(tm <= ts):
            raise ValueError("need tau_m > tau_s > 0 for every kernel")
        object.__setattr__(self, "tau_m", tm)
        object.__setattr__(self, "tau_s", ts)
        object.__setattr__(self, "a0", a0)

    @classmethod
    def from_peaks(cls, peaks=DEFAULT_PEAKS_MS, ratio: float = DEFAULT_TAU_RATIO):
        peaks = np.atleast_1d(np.asarray(peaks, dtype=float))
        if np.any(peaks <= 0):
            raise ValueError("peak times must be positive")
        ts = peaks / _peak_factor(ratio)
        tm = ratio * ts
        raw_peak = np.exp(-peaks / tm) - np.exp(-peaks / ts)
        return cls(tm, ts, 1.0 / raw_peak)

    @property
    def m(self) -> int:
        return int(self.tau_m.size)

    @property
    def peak_times(self) -> np.ndarray:
        tm, ts = self.tau_m, self.tau_s
        return tm * ts / (tm - ts) * np.log(tm / ts)

    def value(self, t) -> np.ndarray:
        """Kernel values at lag(s) t; shape (..., m), zero for t <= 0."""
        t = np.asarray(t, dtype=float)[..., None]
        v = self.a0 * (np.exp(-t / self.tau_m) - np.exp(-t / self.tau_s))
        return np.where(t > 0, v, 0.0)

    def integral(self) -> np.ndarray:
        """Exact integral of each kernel over [0, inf)."""
        return self.a0 * (self.tau_m - self.tau_s)

    def support(self, tol: float = 1e-4) -> float:
        """Lag beyond which every kernel stays below tol * peak."""
        # tail is dominated by the slow exponential
        k = int(np.argmax(self.tau_m))
        t = self.tau_m[k] * math.log(max(self.a0[k], 1.0) / tol)
        while np.any(self.value(t) > tol):
            t *= 1.25
        return float(t)


@dataclass(frozen=True)
class SmrmConfig:
    """Static neuron parameters.

    n input channels, a shared kernel basis, exponential threshold (th,
    kappa), absolute refractory window dt_refr, step dt and the short-term
    memory horizon t_m (defaults to the basis support at 1e-4 of peak).
    """

    n: int
    basis: AlphaBasis = field(default_factory=AlphaBasis.from_peaks)
    th: float = 1.0
    kappa: float = 0.1
    dt: float = 1.0
    dt_refr: float = 1.0
    t_m: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("need at least one input channel")
        if self.kappa <= 0 or self.dt <= 0:
            raise ValueError("kappa and dt must be positive")
        if self.dt_refr < self.dt - 1e-12:
            raise ValueError("dt_refr must be at least one step")
        if self.t_m is None:
            object.__setattr__(self, "t_m", self.basis.support())

    @property
    def m(self) -> int:
        return self.basis.m

    @property
    def refr_steps(self) -> int:
        return int(round(self.dt_refr / self.dt))

    def zero_weights(self) -> np.ndarray:
        return np.zeros((self.n, self.m))


def intensity(config: SmrmConfig, u) -> float:
    """Point-process rate exp((u - th) / kappa), 1/ms."""
    x = (np.asarray(u, dtype=float) - config.th) / config.kappa
    return np.exp(np.minimum(x, LAMBDA_EXP_CAP))


def intensity_slope(config: SmrmConfig, lam) -> float:
    """d(lambda)/du for the exponential threshold."""
    return np.asarray(lam) / config.kappa


def spike_probability(config: SmrmConfig, lam) -> float:
    """Probability of at least one spike in one step: 1 - exp(-lam*dt)."""
    return -np.expm1(-np.asarray(lam) * config.dt)


@dataclass
class SmrmState:
    """Mutable neuron state: stored input spikes, last output, current step."""

    times: list = field(default_factory=list)
    channels: list = field(default_factory=list)
    last_out_step: int | None = None
    step_index: int = 0

    def copy(self) -> "SmrmState":
        return SmrmState(
            list(self.times), list(self.channels), self.last_out_step, self.step_index
        )


@dataclass(frozen=True)
class StepView:
    """Per-step quantities observed before the firing decision is applied."""

    u: float
    lam: float
    big_lam: float
    drive: np.ndarray  # (n, m): sum of kernel values over stored spikes per channel
    refractory: bool


class SmrmNeuron:
    """Single neuron owning its config, weight matrix and state."""

    def __init__(self, config: SmrmConfig, weights: np.ndarray | None = None):
        self.config = config
        w = config.zero_weights() if weights is None else np.array(weights, dtype=float)
        if w.shape != (config.n, config.m):
            raise ValueError(f"weights must be {(config.n, config.m)}, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        self.w = w
        self.state = SmrmState()

    # -- state helpers ----------------------------------------------------

    def reset(self) -> None:
        self.state = SmrmState()

    def inject(self, input_channels, t: float | None = None) -> None:
        """Record input spikes at time t (default: now) without stepping."""
        t = self.now if t is None else t
        for ch in input_channels:
            self.state.times.append(t)
            self.state.channels.append(int(ch))

    @property
    def now(self) -> float:
        return self.state.step_index * self.config.dt

    def in_refractory(self) -> bool:
        last = self.state.last_out_step
        if last is None:
            return False
        return 0 < (self.state.step_index - last) < self.config.refr_steps

    def drive_matrix(self, t: float | None = None) -> np.ndarray:
        """Sum of kernel responses per (channel, kernel) at time t (default: now)."""
        cfg = self.config
        s = self.state
        out = np.zeros((cfg.n, cfg.m))
        if s.times:
            t = self.now if t is None else t
            lags = t - np.asarray(s.times)
            vals = cfg.basis.value(lags)
            np.add.at(out, np.asarray(s.channels), vals)
        return out

    def potential(self, drive: np.ndarray | None = None) -> float:
        drive = self.drive_matrix() if drive is None else drive
        return float(np.sum(self.w * drive))

    # -- stepping ----------------------------------------------------------

    def advance(self, input_channels=(), extra_potential: float = 0.0) -> StepView:
        """Move one step forward, record arrivals, and return step quantities.

        ``input_channels`` lists channels receiving a spike at the new step.
        The firing decision is applied separately via :meth:`resolve`.
        """
        cfg = self.config
        s = self.state
        s.step_index += 1
        t = self.now
        for ch in input_channels:
            s.times.append(t)
            s.channels.append(int(ch))
        # prune spikes older than the short-term memory horizon
        cutoff = t - cfg.t_m
        drop = 0
        while drop < len(s.times) and s.times[drop] <= cutoff:
            drop += 1
        if drop:
            del s.times[:drop]
            del s.channels[:drop]
        refr = self.in_refractory()
        if refr:
            # no firing and no parameter sensitivity inside the window
            return StepView(0.0, 0.0, 0.0, np.zeros((cfg.n, cfg.m)), True)
        drive = self.drive_matrix(t)
        u = float(np.sum(self.w * drive)) + extra_potential
        lam = float(intensity(cfg, u))
        big = float(spike_probability(cfg, lam))
        return StepView(u, lam, big, drive, False)

    def resolve(self, fired: bool) -> None:
        """Apply the firing outcome for the current step."""
        if fired:
            s = self.state
            s.last_out_step = s.step_index
            s.times.clear()
            s.channels.clear()

    def step(self, input_channels=(), rng: np.random.Generator | None = None,
             force: bool | None = None, extra_potential: float = 0.0):
        """advance + draw (or force) the output + resolve.

        Returns (fired, view). ``force`` bypasses the rng entirely.
        """
        view = self.advance(input_channels, extra_potential)
        if force is not None:
            fired = bool(force)
        else:
            if rng is None:
                raise ValueError("need an rng unless the output is forced")
            fired = (not view.refractory) and (rng.random() < view.big_lam)
        self.resolve(fired)
        return fired, view


# -- pattern likelihoods ---------------------------------------------------
#
# Grid convention: a horizon T = N*dt holds N decision steps; the event at
# grid time t (input or output) belongs to step k = t/dt + 1. Lags between
# events are preserved exactly; step 1 sits at time 0, so spike times stay
# inside [0, T).


def step_of_time(t: float, dt: float) -> int:
    k = int(round(t / dt))
    if abs(k * dt - t) > 1e-6:
        raise ValueError(f"event at {t} is off the {dt} ms grid")
    return k + 1


def time_of_step(k: int, dt: float) -> float:
    return (k - 1) * dt


def _pattern_to_steps(pattern: SpikePattern, dt: float, steps: int):
    """Per-step channel lists for an input pattern on the dt grid."""
    by_step = [[] for _ in range(steps + 2)]
    for ch, t in pattern.events():
        k = step_of_time(t, dt)
        if k <= steps:
            by_step[k].append(ch)
    return by_step


def _train_to_step_set(y: SpikeTrain, dt: float):
    return {step_of_time(t, dt) for t in y.times}


def pattern_surprisal_discrete(config: SmrmConfig, weights: np.ndarray,
                               x: SpikePattern, y: SpikeTrain,
                               neuron: SmrmNeuron | None = None) -> float:
    """Negative log-probability of output train y under teacher forcing.

    The state evolves as if y had been emitted. Spiking at a step inside the
    refractory window is impossible and raises InfeasiblePatternError.
    """
    if x.n != config.n:
        raise ValueError(f"input pattern has {x.n} channels, config has {config.n}")
    y.check_refractory(config.dt_refr)
    dt = config.dt
    steps = int(round(y.horizon / dt))
    inputs = _pattern_to_steps(x, dt, steps)
    want = _train_to_step_set(y, dt)
    if neuron is None:
        neuron = SmrmNeuron(config, weights)
    else:
        neuron.w = weights
    neuron.reset()
    h = 0.0
    for k in range(1, steps + 1):
        view = neuron.advance(inputs[k])
        if k in want:
            if view.refractory:
                raise InfeasiblePatternError(
                    f"required spike at step {k} is inside the refractory window"
                )
            h -= math.log(max(view.big_lam, PROB_FLOOR))
            neuron.resolve(True)
        else:
            # -ln(1 - big_lam) == lam * dt exactly for this discretization
            h += 0.0 if view.refractory else view.lam * dt
    return h


def pattern_log_density_continuous(config: SmrmConfig, weights: np.ndarray,
                                   x: SpikePattern, y: SpikeTrain,
                                   quad_step: float | None = None) -> float:
    """Differential surprisal -sum ln lam(t_out) + integral of lam over [0, T].

    The intensity trajectory is teacher-forced along y; the integral uses
    trapezoid quadrature at ``quad_step`` (default dt/4), with zero rate
    inside refractory windows.
    """
    if quad_step is None:
        quad_step = config.dt / 4.0
    if quad_step > config.dt / 4.0 + 1e-12:
        raise ValueError("quadrature step must be at most dt/4")
    y.check_refractory(config.dt_refr)
    horizon = y.horizon
    out_times = list(y.times)
    in_events = x.events()

    # split the integral at every state-changing instant (inputs, outputs,
    # refractory window ends) so the trapezoid rule never straddles a jump
    marks = {0.0, horizon}
    marks.update(t for _, t in in_events if 0.0 < t < horizon)
    marks.update(t for t in out_times if 0.0 < t < horizon)
    marks.update(
        t + config.dt_refr for t in out_times if 0.0 < t + config.dt_refr < horizon
    )
    marks = sorted(marks)

    stored_t: list[float] = []
    stored_c: list[int] = []
    last_out = -math.inf
    w = np.asarray(weights)

    def lam_at(ts: np.ndarray) -> np.ndarray:
        if stored_t:
            lags = ts[:, None] - np.asarray(stored_t)[None, :]
            vals = config.basis.value(lags)  # (T, S, m)
            u = np.einsum("tsk,sk->t", vals, w[np.asarray(stored_c)])
        else:
            u = np.zeros(len(ts))
        lam = intensity(config, u)
        lam[ts - last_out < config.dt_refr - 1e-12] = 0.0
        return lam

    h = 0.0
    integral = 0.0
    ev_idx = 0
    for a, b in zip(marks[:-1], marks[1:]):
        # inputs at or before the segment start shape the potential inside it
        while ev_idx < len(in_events) and in_events[ev_idx][1] <= a + 1e-12:
            ch, t = in_events[ev_idx]
            # inputs simultaneous with an output spike are wiped by the reset
            if t > last_out + 1e-12 or last_out == -math.inf:
                stored_t.append(t)
                stored_c.append(ch)
            ev_idx += 1
        npts = max(2, int(math.ceil((b - a) / quad_step)) + 1)
        ts = np.linspace(a, b, npts)
        integral += float(np.trapezoid(lam_at(ts), ts))
        if any(abs(b - t) < 1e-12 for t in out_times):
            lam_b = float(lam_at(np.asarray([b]))[0])
            if lam_b <= 0.0:
                raise InfeasiblePatternError(
                    f"required spike at {b} has zero intensity"
                )
            h -= math.log(lam_b)
            stored_t.clear()
            stored_c.clear()
            last_out = b
    return h + integral
