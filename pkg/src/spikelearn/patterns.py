"""Multi-channel spike patterns and the kernel-based distance between them.

A spike train is an ordered set of event times on a bounded interval; a
pattern stacks several trains sharing one horizon. The distance between two
trains is the L1 difference of their kernel-smoothed density functions,
measured in units of spikes: d(x, empty) equals the spike count of x, and
two far-separated single spikes are at distance 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SpikeTrain",
    "SpikePattern",
    "DistanceKernel",
    "concat",
    "channel_distance",
    "pattern_distance",
    "read_pattern",
    "write_pattern",
]


@dataclass(frozen=True)
class SpikeTrain:
    """Ordered spike times (ms) on [0, horizon)."""

    times: np.ndarray
    horizon: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if t.ndim != 1:
            raise ValueError("spike times must be a 1-d sequence")
        if t.size:
            if np.any(np.diff(t) <= 0):
                raise ValueError("spike times must be strictly increasing")
            if t[0] < 0 or t[-1] >= self.horizon:
                raise ValueError(
                    f"spike times must lie in [0, {self.horizon}), got "
                    f"[{t[0]}, {t[-1]}]"
                )

    def __len__(self):
        return int(self.times.size)

    @classmethod
    def empty(cls, horizon: float) -> "SpikeTrain":
        return cls(np.empty(0), horizon)

    def check_refractory(self, dt_refr: float) -> None:
        """Raise if two spikes are closer than dt_refr (neuron outputs only)."""
        if len(self) >= 2 and np.min(np.diff(self.times)) < dt_refr - 1e-12:
            raise ValueError(f"spikes closer than refractory period {dt_refr}")


@dataclass(frozen=True)
class SpikePattern:
    """Fixed number of spike trains sharing one horizon."""

    channels: tuple
    horizon: float = field(init=False)

    def __post_init__(self):
        chans = tuple(self.channels)
        if not chans:
            raise ValueError("pattern needs at least one channel")
        horizons = {c.horizon for c in chans}
        if len(horizons) != 1:
            raise ValueError(f"channels disagree on horizon: {sorted(horizons)}")
        object.__setattr__(self, "channels", chans)
        object.__setattr__(self, "horizon", chans[0].horizon)

    @property
    def n(self) -> int:
        return len(self.channels)

    def spike_count(self) -> int:
        return sum(len(c) for c in self.channels)

    @classmethod
    def empty(cls, n: int, horizon: float) -> "SpikePattern":
        return cls(tuple(SpikeTrain.empty(horizon) for _ in range(n)))

    @classmethod
    def from_events(cls, n: int, horizon: float, events) -> "SpikePattern":
        """Build from an iterable of (channel, time) events."""
        per_chan = [[] for _ in range(n)]
        for ch, t in events:
            per_chan[int(ch)].append(float(t))
        return cls(
            tuple(SpikeTrain(np.sort(np.asarray(ts)), horizon) for ts in per_chan)
        )

    def events(self):
        """All (channel, time) events sorted by time."""
        ev = [(i, t) for i, c in enumerate(self.channels) for t in c.times]
        ev.sort(key=lambda e: (e[1], e[0]))
        return ev

    def shifted(self, offset: float, horizon: float) -> "SpikePattern":
        """Same events moved by ``offset`` onto a new horizon; out-of-range spikes drop."""
        chans = []
        for c in self.channels:
            t = c.times + offset
            chans.append(SpikeTrain(t[(t >= 0) & (t < horizon)], horizon))
        return SpikePattern(tuple(chans))


@dataclass(frozen=True)
class DistanceKernel:
    """Smoothing kernel for the spike distance.

    kind "gaussian" uses a unit-mass Gaussian of width sigma; kind "delta"
    counts non-matching spike times with matching tolerance equal to ``step``.
    ``step`` is also the quadrature step of the Gaussian integral.
    """

    kind: str = "gaussian"
    sigma: float = 1.0
    step: float = 0.25

    def __post_init__(self):
        if self.kind not in ("gaussian", "delta"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.step <= 0:
            raise ValueError("quadrature step must be positive")
        if self.kind == "gaussian":
            if self.sigma <= 0:
                raise ValueError("sigma must be positive")
            if self.step > self.sigma / 4 + 1e-12:
                raise ValueError("quadrature step must be at most sigma/4")

    @classmethod
    def gaussian(cls, sigma: float, step: float | None = None) -> "DistanceKernel":
        return cls("gaussian", sigma, sigma / 4 if step is None else step)

    @classmethod
    def delta(cls, tolerance: float = 1e-6) -> "DistanceKernel":
        return cls("delta", 1.0, tolerance)


def concat(a: SpikePattern, b: SpikePattern) -> SpikePattern:
    """Join two patterns in time: spikes of b shifted by a.horizon."""
    if a.n != b.n:
        raise ValueError(f"channel counts differ: {a.n} vs {b.n}")
    horizon = a.horizon + b.horizon
    chans = []
    for ca, cb in zip(a.channels, b.channels):
        chans.append(
            SpikeTrain(np.concatenate([ca.times, cb.times + a.horizon]), horizon)
        )
    return SpikePattern(tuple(chans))


def _delta_distance(x: np.ndarray, y: np.ndarray, tol: float) -> float:
    # count of non-matching spikes; both arrays sorted
    i = j = matched = 0
    while i < len(x) and j < len(y):
        if abs(x[i] - y[j]) <= tol:
            matched += 1
            i += 1
            j += 1
        elif x[i] < y[j]:
            i += 1
        else:
            j += 1
    return float(len(x) + len(y) - 2 * matched)


def channel_distance(x: SpikeTrain, y: SpikeTrain, k: DistanceKernel) -> float:
    """Distance between two single-channel trains, in spikes."""
    if abs(x.horizon - y.horizon) > 1e-9:
        raise ValueError("trains must share a horizon")
    if k.kind == "delta":
        return _delta_distance(x.times, y.times, k.step)
    pad = 4.0 * k.sigma
    lo, hi = -pad, x.horizon + pad
    npts = int(np.ceil((hi - lo) / k.step)) + 1
    grid = np.linspace(lo, hi, npts)
    norm = 1.0 / (k.sigma * np.sqrt(2.0 * np.pi))

    def density(times):
        if times.size == 0:
            return np.zeros_like(grid)
        z = (grid[:, None] - times[None, :]) / k.sigma
        return norm * np.exp(-0.5 * z * z).sum(axis=1)

    return float(np.trapezoid(np.abs(density(x.times) - density(y.times)), grid))


def pattern_distance(x: SpikePattern, y: SpikePattern, k: DistanceKernel) -> float:
    """Sum of channel distances; requires equal shape."""
    if x.n != y.n:
        raise ValueError(f"channel counts differ: {x.n} vs {y.n}")
    if abs(x.horizon - y.horizon) > 1e-9:
        raise ValueError("patterns must share a horizon")
    return sum(
        channel_distance(cx, cy, k) for cx, cy in zip(x.channels, y.channels)
    )


def write_pattern(p: SpikePattern) -> str:
    """Serialize: header ``T=<ms> N=<channels>`` then ``<channel> <time>`` lines."""
    lines = [f"T={p.horizon:g} N={p.n}"]
    for i, c in enumerate(p.channels):
        for t in c.times:
            lines.append(f"{i} {t:.9g}")
    return "\n".join(lines) + "\n"


def read_pattern(text: str) -> SpikePattern:
    """Parse the text format produced by :func:`write_pattern`."""
    lines = [
        ln.strip()
        for ln in text.splitlines()
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not lines:
        raise ValueError("empty pattern text")
    header = lines[0].replace("=", " ").split()
    try:
        fields = dict(zip(header[0::2], header[1::2]))
        horizon = float(fields["T"])
        n = int(fields["N"])
    except (KeyError, ValueError, IndexError) as exc:
        raise ValueError(f"bad header line {lines[0]!r}") from exc
    per_chan = [[] for _ in range(n)]
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"bad spike line {ln!r}")
        try:
            ch, t = int(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ValueError(f"bad spike line {ln!r}") from exc
        if not 0 <= ch < n:
            raise ValueError(f"channel {ch} out of range 0..{n - 1}")
        if t >= horizon or t < 0:
            raise ValueError(f"spike time {t} outside [0, {horizon})")
        if per_chan[ch] and t <= per_chan[ch][-1]:
            raise ValueError(f"non-increasing times on channel {ch}")
        per_chan[ch].append(t)
    return SpikePattern(
        tuple(SpikeTrain(np.asarray(ts), horizon) for ts in per_chan)
    )
