"""Free-space link with transceiver hardware distortion."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .noise import noise_spectral_density


@dataclass(frozen=True)
class LinkSample:
    distance: float
    path_gain: float
    channel: complex
    delta_theta: float
    steering: float
    gain_tx: float
    gain_rx: float
    t_sys: float
    se: float


def path_gain(wavelength: float, distance: float) -> float:
    """Free-space power gain between isotropic antennas."""
    if not distance > 0:
        raise ValueError("distance must be positive")
    return (wavelength / (4.0 * math.pi * distance)) ** 2


def channel_coefficient(wavelength: float, distance: float, phase: float = 0.0) -> complex:
    return math.sqrt(path_gain(wavelength, distance)) * complex(math.cos(phase), math.sin(phase))


def snr(power: float, gain_tx: float, gain_rx: float, h: complex, t_sys: float,
        kappa1: float = 0.0, kappa2: float = 0.0, *, model: str = "unscaled") -> float:
    """Signal-to-noise-and-distortion ratio.

    ``model="unscaled"`` charges the distortion ``(k1^2 + k2^2) P`` against the
    received signal directly; ``"scaled"`` scales it by ``|h|^2`` and the
    antenna gains like the signal itself.
    """
    if power < 0:
        raise ValueError("power must be >= 0")
    if not t_sys > 0:
        raise ValueError("t_sys must be positive")
    h2 = abs(h) ** 2
    signal = power * gain_tx * gain_rx * h2
    distortion = (kappa1**2 + kappa2**2) * power
    if model == "scaled":
        distortion *= gain_tx * gain_rx * h2
    elif model != "unscaled":
        raise ValueError(f"unknown distortion model {model!r}")
    return signal / (noise_spectral_density(t_sys) + distortion)


def spectral_efficiency(power: float, gain_tx: float, gain_rx: float, h: complex,
                        t_sys: float, kappa1: float = 0.0, kappa2: float = 0.0, *,
                        model: str = "unscaled") -> float:
    """Achievable rate in bit/s/Hz; see :func:`snr` for the two distortion models."""
    return math.log2(1.0 + snr(power, gain_tx, gain_rx, h, t_sys, kappa1, kappa2,
                               model=model))


def _cn(rng, var, size):
    scale = math.sqrt(0.5 * var)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def simulate_received_sample(s, h: complex, power: float, kappa1: float, kappa2: float,
                             n0: float, rng, size=None):
    """Received sample(s) ``h (sqrt(P) s + eta_t) + eta_r + w``.

    ``eta_t ~ CN(0, P k1^2)``, ``eta_r ~ CN(0, k2^2 P |h|^2)`` and
    ``w ~ CN(0, n0)``, so the aggregate distortion has power
    ``P |h|^2 (k1^2 + k2^2)``.
    """
    if kappa1 < 0 or kappa2 < 0:
        raise ValueError("kappa must be >= 0")
    shape = np.shape(s) if size is None else size
    eta_t = _cn(rng, power * kappa1**2, shape)
    eta_r = _cn(rng, kappa2**2 * power * abs(h) ** 2, shape)
    w = _cn(rng, n0, shape)
    y = h * (math.sqrt(power) * np.asarray(s) + eta_t) + eta_r + w
    return complex(y) if np.ndim(y) == 0 else y
