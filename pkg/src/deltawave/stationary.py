"""Stationary two-channel scattering off the point coupling.

For a unit plane wave incident in channel 1 the junction conditions at
``x = 0`` (continuity, and derivative jumps ``2 m k0 / hbar^2`` times the
other channel) give

    r  = -beta / (k k' + beta)
    t2 = -i k g / (k k' + beta),      g = m k0 / hbar^2, beta = g^2

with ``phi1 = exp(ikx) + r exp(-ikx)`` (x < 0), ``(1 + r) exp(ikx)`` (x > 0)
and ``phi2 = t2 exp(i k' |x|)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import DomainError, PhysParams

GENUINE_RTOL = 1e-8


class DegeneratePolesError(DomainError):
    """The pole quartic has a repeated root."""


def kprime_upper(p: PhysParams, k):
    """Channel-2 wavenumber ``sqrt(k^2 - 2 m V0/hbar^2)`` on the ``Im >= 0`` branch."""
    k = np.asarray(k, dtype=complex)
    s = np.sqrt(k * k - 2.0 * p.a)
    return np.where(s.imag < 0, -s, s)


@dataclass(frozen=True)
class ChannelMomenta:
    k: float
    k_prime: complex

    @classmethod
    def from_k(cls, p: PhysParams, k) -> ChannelMomenta:
        if np.any(np.asarray(k) < 0):
            raise DomainError("channel-1 wavenumber must be >= 0")
        kp = kprime_upper(p, k)
        return cls(k if np.ndim(k) else float(k), kp if np.ndim(kp) else complex(kp))


def channel_momenta(p: PhysParams, E) -> ChannelMomenta:
    """Wavenumbers of both channels at total energy ``E >= 0``."""
    if np.any(np.asarray(E) < 0):
        raise DomainError(f"energy must be >= 0, got {E}")
    k = np.sqrt(2.0 * p.m * np.asarray(E, dtype=float)) / p.hbar
    return ChannelMomenta.from_k(p, k if np.ndim(k) else float(k))


@dataclass(frozen=True)
class ScatteringAmplitudes:
    k: float
    r: complex
    t2: complex

    @property
    def t1(self):
        """Channel-1 transmitted amplitude ``1 + r``."""
        return 1.0 + self.r


def scattering_amplitudes(p: PhysParams, cm: ChannelMomenta) -> ScatteringAmplitudes:
    k = np.asarray(cm.k, dtype=float)
    if np.any(k < 0):
        raise DomainError("channel-1 wavenumber must be >= 0")
    if p.beta == 0.0 and np.any(k == 0):
        raise DomainError("amplitudes are indeterminate at k = 0 without coupling (threshold)")
    den = k * cm.k_prime + p.beta
    r = -p.beta / den
    t2 = -1j * k * p.g / den
    if np.ndim(r) == 0:
        return ScatteringAmplitudes(float(k), complex(r), complex(t2))
    return ScatteringAmplitudes(k, r, t2)


def stationary_state(p: PhysParams, cm: ChannelMomenta, x):
    """Return ``(phi1(x), phi2(x))`` for unit incidence in channel 1."""
    amp = scattering_amplitudes(p, cm)
    x = np.asarray(x, dtype=float)
    k, kp = cm.k, cm.k_prime
    left = x < 0
    phi1 = np.where(
        left,
        np.exp(1j * k * x) + amp.r * np.exp(-1j * k * x),
        (1.0 + amp.r) * np.exp(1j * k * x),
    )
    phi2 = amp.t2 * np.exp(1j * kp * np.abs(x))
    if phi1.ndim == 0:
        return complex(phi1), complex(phi2)
    return phi1, phi2


def flux_balance(p: PhysParams, cm: ChannelMomenta):
    """Reflected, transmitted and channel-2 flux fractions ``(R, T1, T2)``.

    ``T2`` counts both outgoing directions in channel 2 and is zero when that
    channel is closed (evanescent ``k'``).
    """
    amp = scattering_amplitudes(p, cm)
    k = np.asarray(cm.k, dtype=float)
    if np.any(k == 0):
        raise DomainError("flux fractions need k > 0")
    kp = np.asarray(cm.k_prime, dtype=complex)
    R = np.abs(amp.r) ** 2
    T1 = np.abs(1.0 + amp.r) ** 2
    open_ = np.abs(kp.imag) <= 1e-14 * np.maximum(np.abs(kp), 1.0)
    T2 = np.where(open_, 2.0 * (kp.real / k) * np.abs(amp.t2) ** 2, 0.0)
    if np.ndim(R) == 0:
        return float(R), float(T1), float(T2)
    return R, T1, T2


def flux_vs_k(p: PhysParams, k):
    """Vectorised ``(R, T1, T2)`` over an array of channel-1 wavenumbers."""
    return flux_balance(p, ChannelMomenta.from_k(p, np.asarray(k, dtype=float)))


@dataclass(frozen=True)
class PoleSet:
    """Roots of ``k^4 - 2 a k^2 - beta^2``, ordered as the sign pairs (-+, ++, --, +-).

    ``genuine[l]`` marks roots of ``k k' + beta`` with ``k'`` on the ``Im >= 0``
    branch; the other two are zeros of ``k k' - beta`` brought in by
    rationalising the denominator.
    """

    poles: np.ndarray
    genuine: np.ndarray

    labels = ("-+", "++", "--", "+-")


def quartic(p: PhysParams, k):
    k = np.asarray(k, dtype=complex)
    return k**4 - 2.0 * p.a * k**2 - p.beta**2


def quartic_residual(p: PhysParams, k):
    """Residual of the pole quartic relative to the size of its largest term."""
    k = np.asarray(k, dtype=complex)
    scale = np.maximum.reduce([np.abs(k) ** 4, 2.0 * p.a * np.abs(k) ** 2, np.full(k.shape, p.beta**2)])
    return np.abs(quartic(p, k)) / scale


def compute_poles(p: PhysParams) -> PoleSet:
    a, beta = p.a, p.beta
    if a == 0.0 and beta == 0.0:
        raise DegeneratePolesError("V0 = 0 and k0 = 0 give a quadruple root at k = 0")
    rad = np.hypot(a, beta)
    big = a + rad  # k^2 of the real pair
    small = -(beta**2) / big  # k^2 of the imaginary pair, free of cancellation
    kr = np.sqrt(big)
    ki = 1j * np.sqrt(-small)
    poles = np.array([-kr, kr, -ki, ki], dtype=complex)
    kk = poles * kprime_upper(p, poles)
    scale = max(beta, 1e-300)
    genuine = np.abs(kk + beta) <= GENUINE_RTOL * max(scale, np.max(np.abs(kk)))
    if beta == 0.0:
        genuine[:] = False
    return PoleSet(poles, genuine)
