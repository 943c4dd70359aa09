"""Reusable potential profiles and smooth window functions.

Everything here is plain numpy-vectorized callables: compactly supported
longitudinal profiles, C^2 plateau windows built from quintic blends, and
factories for the oscillating-mode potentials used in experiments.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "quintic_step",
    "quintic_step_d1",
    "quintic_step_d2",
    "hat_profile",
    "smooth_bump_profile",
    "plateau_window",
    "product_window",
    "cosine_mode",
    "v_zero",
    "v_cosine",
]


def quintic_step(t):
    """Quintic smoothstep: 0 at t<=0, 1 at t>=1, C^2 at both ends."""
    t = np.clip(t, 0.0, 1.0)
    return t * t * t * (t * (6.0 * t - 15.0) + 10.0)


def quintic_step_d1(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    d = 30.0 * tc * tc * (tc - 1.0) * (tc - 1.0)
    return np.where(inside, d, 0.0)


def quintic_step_d2(t):
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    tc = np.clip(t, 0.0, 1.0)
    d = 60.0 * tc * (2.0 * tc - 1.0) * (tc - 1.0)
    return np.where(inside, d, 0.0)


def hat_profile(radius=1.0, amplitude=1.0):
    """Triangular profile amplitude*(1 - |z|/radius)_+ with integral = amplitude*radius."""
    if radius <= 0:
        raise ValueError("radius must be positive")

    def profile(z):
        z = np.asarray(z, dtype=float)
        return amplitude * np.maximum(0.0, 1.0 - np.abs(z) / radius)

    return profile


def smooth_bump_profile(radius=1.0, amplitude=1.0):
    """C^2 compactly supported bump: amplitude at 0, vanishing at |z|>=radius."""
    if radius <= 0:
        raise ValueError("radius must be positive")

    def profile(z):
        z = np.asarray(z, dtype=float)
        return amplitude * (1.0 - quintic_step(np.abs(z) / radius))

    return profile


def plateau_window(lo, lo_in, hi_in, hi):
    """C^2 window: 0 outside (lo, hi), 1 on [lo_in, hi_in], quintic blends between.

    Requires lo < lo_in <= hi_in < hi.
    """
    if not (lo < lo_in <= hi_in < hi):
        raise ValueError("window knots must satisfy lo < lo_in <= hi_in < hi")

    def window(x):
        x = np.asarray(x, dtype=float)
        rise = quintic_step((x - lo) / (lo_in - lo))
        fall = 1.0 - quintic_step((x - hi_in) / (hi - hi_in))
        return rise * fall

    return window


def product_window(knots_per_dim):
    """Tensor product of 1-D plateau windows; knots_per_dim is a list of 4-tuples."""
    windows = [plateau_window(*k) for k in knots_per_dim]

    def window(x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1], dtype=float)
        for j, w in enumerate(windows):
            out = out * w(x[..., j])
        return out

    return window


def cosine_mode(envelope, freq=1, amplitude=1.0, axis=0):
    """Oscillating potential Q(x, xi) = amplitude * envelope(x) * cos(2 pi freq xi_axis).

    Zero xi-mean holds for any integer freq >= 1.
    """
    if int(freq) != freq or freq < 1:
        raise ValueError("freq must be a positive integer")

    def q(x, xi):
        xi = np.asarray(xi, dtype=float)
        return amplitude * envelope(x) * np.cos(2.0 * np.pi * freq * xi[..., axis])

    return q


def v_zero(y):
    y = np.asarray(y, dtype=float)
    return np.zeros_like(y)


def v_cosine(amplitude=1.0, periods=1, d=1.0):
    def v(y):
        y = np.asarray(y, dtype=float)
        return amplitude * np.cos(2.0 * np.pi * periods * y / d)

    return v
