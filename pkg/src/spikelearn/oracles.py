"""Brute-force reference computations used to verify the production paths.

Everything here re-derives its answer from first principles (mask
enumeration, central differences, plain trapezoid sums) and deliberately
shares no stepping or probability code with the neuron module.
"""

from __future__ import annotations

import math

import numpy as np

from .neuron import SmrmConfig
from .patterns import SpikePattern

__all__ = [
    "enumerate_output_distribution",
    "fd_gradient",
    "fd_hessian",
    "quadrature_integral",
]


def enumerate_output_distribution(config: SmrmConfig, weights: np.ndarray,
                                  x: SpikePattern, steps: int):
    """All 2**steps output masks with their exact probabilities.

    Returns (masks, probs): masks is an int array where bit (k-1) set means a
    spike at step k; refractory-violating masks carry probability zero.
    Probabilities sum to 1 up to float rounding.
    """
    if steps > 16:
        raise ValueError("enumeration beyond 16 steps is intractable")
    if x.n != config.n:
        raise ValueError("channel count mismatch")
    dt = config.dt
    w = np.asarray(weights, dtype=float)
    tau_m = config.basis.tau_m
    tau_s = config.basis.tau_s
    a0 = config.basis.a0

    # events at grid time t occupy step t/dt + 1; lags are step differences
    spike_steps = []
    spike_chans = []
    for ch, t in x.events():
        spike_steps.append(int(round(t / dt)) + 1)
        spike_chans.append(ch)

    # u_tab[k, j]: potential at step k if the last output spike was at step j
    # (column 0 means "never fired"); kernel sums written out longhand
    u_tab = np.zeros((steps + 1, steps + 1))
    for k in range(1, steps + 1):
        for j in range(0, k):  # column j: last fire at step j (0 = never)
            u = 0.0
            for k_in, ch in zip(spike_steps, spike_chans):
                lag = (k - k_in) * dt
                if lag <= 0 or lag >= config.t_m:
                    continue
                if j > 0 and k_in <= j:  # wiped by the reset at step j
                    continue
                for kk in range(config.m):
                    u += w[ch, kk] * a0[kk] * (
                        math.exp(-lag / tau_m[kk]) - math.exp(-lag / tau_s[kk])
                    )
            u_tab[k, j] = u
    lam_tab = np.exp(np.minimum((u_tab - config.th) / config.kappa, 300.0))
    p_spike = -np.expm1(-lam_tab * dt)
    p_silent = np.exp(-lam_tab * dt)

    refr = config.refr_steps
    n_masks = 1 << steps
    masks = np.arange(n_masks, dtype=np.int64)
    probs = np.ones(n_masks)
    last = np.zeros(n_masks, dtype=np.int64)  # 0 = never fired
    for k in range(1, steps + 1):
        fired = (masks >> (k - 1)) & 1 == 1
        blocked = (last > 0) & (k - last < refr)
        ps = p_spike[k, last]
        pq = p_silent[k, last]
        ps[blocked] = 0.0
        pq[blocked] = 1.0
        probs = probs * np.where(fired, ps, pq)
        last = np.where(fired, k, last)
    return masks, probs


def mask_to_train(mask: int, steps: int, dt: float):
    """Spike times encoded by a mask, bit (k-1) -> step k -> time (k-1)*dt."""
    return np.array(
        [(k - 1) * dt for k in range(1, steps + 1) if (mask >> (k - 1)) & 1]
    )


def fd_gradient(f, w: np.ndarray, eps: float = 1e-6, richardson: bool = False):
    """Central-difference gradient of a scalar function of a weight array.

    With richardson=True also returns the eps/2 estimate for a truncation
    check (the two should agree to roughly 4x the finer error).
    """
    if not 1e-8 <= eps <= 1e-4:
        raise ValueError("eps outside the trustworthy range [1e-8, 1e-4]")
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    flat = out.ravel()
    wf = w.ravel()
    for i in range(wf.size):
        wp = w.copy().ravel()
        wm = w.copy().ravel()
        wp[i] += eps
        wm[i] -= eps
        fp = f(wp.reshape(w.shape))
        fm = f(wm.reshape(w.shape))
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise ValueError("non-finite function value in finite differences")
        flat[i] = (fp - fm) / (2 * eps)
    if richardson:
        finer = fd_gradient(f, w, eps / 2, richardson=False)
        return out, finer
    return out


def fd_hessian(f, w: np.ndarray, eps: float = 1e-4) -> np.ndarray:
    """Second-order central-difference Hessian over the flattened weights."""
    w = np.asarray(w, dtype=float)
    d = w.size
    H = np.zeros((d, d))
    f0 = f(w)

    def at(delta):
        return f((w.ravel() + delta).reshape(w.shape))

    for i in range(d):
        ei = np.zeros(d)
        ei[i] = eps
        H[i, i] = (at(ei) - 2 * f0 + at(-ei)) / eps**2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = eps
            H[i, j] = H[j, i] = (
                at(ei + ej) - at(ei - ej) - at(-ei + ej) + at(-ei - ej)
            ) / (4 * eps**2)
    return H


def quadrature_integral(f, a: float, b: float, step: float):
    """Trapezoid integral of callable f on [a, b] with a halved-step error bound.

    Returns (value, err) where value uses step/2 and err is the difference
    between the step and step/2 estimates.
    """
    if step <= 0:
        raise ValueError("step must be positive")

    def trapz(h):
        n = max(1, int(math.ceil((b - a) / h)))
        ts = np.linspace(a, b, n + 1)
        ys = np.asarray([f(t) for t in ts], dtype=float)
        return float(np.trapezoid(ys, ts))

    coarse = trapz(step)
    fine = trapz(step / 2)
    return fine, abs(fine - coarse)
