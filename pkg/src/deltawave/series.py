"""Truncated asymptotic series for well-separated and nearly degenerate channels.

High energy (E >> V0): channel 2 is treated as degenerate with channel 1
(``k' ~ k``) and the scattered kernel is expanded in inverse powers of the
coupling.  Low energy (E << V0): channel 2 is closed and its amplitude is
confined near the junction by ``exp(-sqrt(2 m V0) |x| / hbar)``.

Summands follow the closed forms term by term.  Two readings are
selectable where those forms are ambiguous:

* ``form="moment"`` (default) uses ``(hbar^4 / m^2 k0^2)^(n+1)`` in the
  high-energy summand, the Gaussian-moment expansion of ``1/(k^2 + beta)``
  whose leading term reproduces the hard-wall limit; ``form="literal"``
  keeps the power ``2n+2`` as written, which is dimensionally inconsistent.
* ``sigma_k1_factor`` is the multiplier of ``sigma^2 k1`` inside the
  ``i(|x| + x0 - i c sigma^2 k1) / 2w`` prefactor (2 matches ``kappa``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import factorial2

from .kernel import complex_width, envelope_B, free_evolution
from .params import DomainError, PacketParams, PhysParams, packet_energy

SQRT_PI = np.sqrt(np.pi)


class RegimeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SeriesParams:
    regime: str
    n_terms: int = 12
    eps0: float = 0.0

    def __post_init__(self):
        if self.regime not in ("high-energy", "low-energy"):
            raise DomainError(f"unknown regime {self.regime!r}")
        if self.n_terms < 1:
            raise DomainError("n_terms must be >= 1")


def series_params(p: PhysParams, regime: str, n_terms: int = 12) -> SeriesParams:
    """Attach the regime constant: ``beta`` (high) or ``-beta sqrt(2 m V0)/hbar`` (low)."""
    if regime == "high-energy":
        eps0 = p.beta
    else:
        eps0 = -p.beta * np.sqrt(2.0 * p.m * p.V0) / p.hbar
    return SeriesParams(regime, n_terms, eps0)


@dataclass(frozen=True, eq=False)
class SeriesResult:
    """``value = base + sum(terms[included])``.

    ``base`` is the free packet for channel 1 and zero for channel 2.
    ``truncation_index`` is the position of the smallest-magnitude term
    kept (a pair, even then odd sub-series, for the low-energy channel-2
    form).
    """

    value: complex
    terms: np.ndarray
    truncation_index: int | tuple
    base: complex = 0j
    included: np.ndarray | None = None


def dfact(n):
    """Double factorial with ``(-1)!! = 1``."""
    n = np.asarray(n)
    return np.where(n <= 0, 1.0, np.round(factorial2(np.maximum(n, 1), exact=False)))


def optimal_truncation(magnitudes) -> int:
    """Index of the smallest term before the terms start growing."""
    mags = np.asarray(magnitudes, dtype=float)
    for i in range(1, len(mags)):
        if mags[i] > mags[i - 1]:
            return i - 1
    return len(mags) - 1


def _check_high(p: PhysParams, q: PacketParams):
    E = packet_energy(p, q)
    if p.V0 > 0 and E / p.V0 < 10.0:
        warnings.warn(f"E/V0 = {E / p.V0:.3g} is outside the high-energy regime (>= 10)", RegimeWarning, stacklevel=3)


def _check_low(p: PhysParams, q: PacketParams):
    if p.V0 == 0.0:
        raise DomainError("the low-energy series needs V0 > 0")
    E = packet_energy(p, q)
    if E / p.V0 > 0.1:
        warnings.warn(f"E/V0 = {E / p.V0:.3g} is outside the low-energy regime (<= 0.1)", RegimeWarning, stacklevel=3)


def kappa_prefactor(p: PhysParams, q: PacketParams, x, t, sigma_k1_factor: float = 2.0):
    """``i (|x| + x0 - i c sigma^2 k1) / (2 w)``."""
    X = np.abs(np.asarray(x, dtype=float)) + q.x0
    return 1j * (X - 1j * sigma_k1_factor * q.sigma**2 * q.k1) / (2.0 * complex_width(p, q, t))


def high_energy_summands(p: PhysParams, w, N: int, form: str = "moment") -> np.ndarray:
    """``(-1)^n (2n-1)!! sqrt(pi) / (eps^(e_n) 2^n w^(n+1/2))`` for n = 0..N.

    ``eps = m^2 k0^2 / hbar^4``; ``e_n = 2n + 2`` (literal) or ``n + 1`` (moment).
    """
    if p.beta == 0.0:
        return np.zeros(N + 1, dtype=complex)
    n = np.arange(N + 1)
    if form == "literal":
        power = 2 * n + 2
    elif form == "moment":
        power = n + 1
    else:
        raise DomainError(f"unknown series form {form!r}")
    lg = power * np.log(p.beta)
    return (-1.0) ** n * dfact(2 * n - 1) * SQRT_PI * np.exp(-lg) / (2.0**n * w ** (n + 0.5))


def _high(p, q, x, t, N, form):
    w = complex(complex_width(p, q, t))
    a = high_energy_summands(p, w, N, form)
    ti = optimal_truncation(np.abs(a))
    B = envelope_B(p, q, x, t)
    return a, ti, B


def psi1_series_highE(p: PhysParams, q: PacketParams, x, t, N: int = 12, form: str = "moment") -> SeriesResult:
    _check_high(p, q)
    a, ti, B = _high(p, q, x, t, N, form)
    terms = np.multiply.outer(a, B)
    base = free_evolution(p, q, x, t)
    value = base + terms[: ti + 1].sum(axis=0)
    return SeriesResult(value, terms, ti, base)


def psi2_series_highE(p: PhysParams, q: PacketParams, x, t, N: int = 12, form: str = "moment",
                      sigma_k1_factor: float = 2.0) -> SeriesResult:
    _check_high(p, q)
    a, ti, B = _high(p, q, x, t, N, form)
    terms = np.multiply.outer(a, B * kappa_prefactor(p, q, x, t, sigma_k1_factor))
    return SeriesResult(terms[: ti + 1].sum(axis=0), terms, ti)


def _lowE_scale(p: PhysParams) -> float:
    """``hbar^5 / (m^2 k0^2 sqrt(2 m V0))``."""
    return p.hbar**5 / (p.m**2 * p.k0**2 * np.sqrt(2.0 * p.m * p.V0))


def low_energy_summands_psi1(p: PhysParams, w, N: int) -> np.ndarray:
    """Even-``n`` summands ``(n-1)!! h^(5(n+1)) sqrt(pi) / ((-i Z)^(2(n+2)) 2^(n/2) w^(n+1/2))``.

    ``Z = m^2 k0^2 sqrt(2 m V0)``; ``n = 0, 2, ..., 2 ceil(N/2)``.
    """
    n = np.arange(0, 2 * int(np.ceil(N / 2)) + 1, 2)
    Z = p.m**2 * p.k0**2 * np.sqrt(2.0 * p.m * p.V0)
    num = dfact(n - 1) * p.hbar ** (5.0 * (n + 1)) * SQRT_PI
    den = (-1j * Z) ** (2.0 * (n + 2)) * 2.0 ** (n / 2) * w ** (n + 0.5)
    return num / den


def psi1_series_lowE(p: PhysParams, q: PacketParams, x, t, N: int = 12) -> SeriesResult:
    _check_low(p, q)
    w = complex(complex_width(p, q, t))
    if p.beta == 0.0:
        base = free_evolution(p, q, x, t)
        return SeriesResult(base, np.zeros((1,) + np.shape(base), dtype=complex), 0, base)
    a = low_energy_summands_psi1(p, w, N)
    ti = optimal_truncation(np.abs(a))
    terms = np.multiply.outer(a, envelope_B(p, q, x, t))
    base = free_evolution(p, q, x, t)
    return SeriesResult(base + terms[: ti + 1].sum(axis=0), terms, ti, base)


def low_energy_summands_psi2(p: PhysParams, w, N: int):
    """The two channel-2 sub-series as ``(n_even, even_terms, n_odd, odd_terms)``.

    even: ``(-1)^n (n-1)!! s^(n+1) sqrt(pi) / (2^(n/2) w^((n+1)/2))``, n = 0, 2, ...
    odd:  ``(-1)^n n!! s^(n+1) sqrt(pi) / (2^((n+1)/2) w^((n+2)/2))``, n = -1, 1, 3, ...
    with ``s = hbar^5 / (m^2 k0^2 sqrt(2 m V0))``.
    """
    s = _lowE_scale(p)
    ne = np.arange(0, N + 1, 2)
    no = np.arange(-1, N + 1, 2)
    even = (-1.0) ** ne * dfact(ne - 1) * s ** (ne + 1.0) * SQRT_PI / (2.0 ** (ne / 2) * w ** ((ne + 1) / 2))
    odd = (-1.0) ** no * dfact(no) * s ** (no + 1.0) * SQRT_PI / (2.0 ** ((no + 1) / 2) * w ** ((no + 2) / 2))
    return ne, even, no, odd


def evanescent_envelope(p: PhysParams, x, envelope: str = "decaying"):
    """``exp(-sqrt(2 m V0) |x| / hbar)``; ``"literal"`` keeps ``exp(sqrt(-2 m V0 |x|) / hbar)``."""
    ax = np.abs(np.asarray(x, dtype=float))
    if envelope == "decaying":
        return np.exp(-np.sqrt(2.0 * p.m * p.V0) * ax / p.hbar)
    if envelope == "literal":
        return np.exp(np.sqrt(-2.0 * p.m * p.V0 * ax + 0j) / p.hbar)
    raise DomainError(f"unknown envelope reading {envelope!r}")


def psi2_series_lowE(p: PhysParams, q: PacketParams, x, t, N: int = 12, envelope: str = "decaying",
                     sigma_k1_factor: float = 2.0) -> SeriesResult:
    """Closed-channel amplitude; terms are ordered by ``n = -1, 0, 1, 2, ...``."""
    _check_low(p, q)
    w = complex(complex_width(p, q, t))
    if p.beta == 0.0:
        z = np.zeros(np.shape(x), dtype=complex)
        return SeriesResult(z, z[None], (0, 0), 0j, np.ones(1, dtype=bool))
    ne, even, no, odd = low_energy_summands_psi2(p, w, N)
    te, to = optimal_truncation(np.abs(even)), optimal_truncation(np.abs(odd))
    pref = envelope_B(p, q, x, t) * evanescent_envelope(p, x, envelope)
    kp = kappa_prefactor(p, q, x, t, sigma_k1_factor)
    order = np.argsort(np.concatenate([ne, no]), kind="stable")
    coeffs = np.concatenate([np.multiply.outer(even, kp), np.multiply.outer(odd, np.ones_like(kp))])
    include = np.concatenate([np.arange(len(ne)) <= te, np.arange(len(no)) <= to])
    terms = (coeffs * pref)[order]
    included = include[order]
    return SeriesResult(terms[included].sum(axis=0), terms, (te, to), 0j, included)
