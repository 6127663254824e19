"""Physical parameters, grids, the initial Gaussian packet and field containers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DomainError(ValueError):
    """Raised when inputs fall outside the domain of an operation."""


@dataclass(frozen=True)
class PhysParams:
    """Mass, Planck constant, delta coupling strength ``k0`` and channel offset ``V0``.

    Channel 2 sits ``V0`` above channel 1; the channels are coupled by
    ``k0 * delta(x)`` at the origin.
    """

    m: float = 1.0
    hbar: float = 1.0
    k0: float = 1.0
    V0: float = 0.0

    def __post_init__(self):
        if not self.m > 0 or not self.hbar > 0:
            raise DomainError(f"m and hbar must be positive (m={self.m}, hbar={self.hbar})")
        if not self.V0 >= 0:
            raise DomainError(f"V0 must be >= 0, got {self.V0}")

    @property
    def g(self) -> float:
        """Coupling wavenumber ``m k0 / hbar**2`` (1/length)."""
        return self.m * self.k0 / self.hbar**2

    @property
    def beta(self) -> float:
        """``(m k0 / hbar**2)**2`` (1/length**2)."""
        return self.g**2

    @property
    def a(self) -> float:
        """``m V0 / hbar**2``; the threshold wavenumber is ``sqrt(2 a)``."""
        return self.m * self.V0 / self.hbar**2

    @property
    def k_threshold(self) -> float:
        return float(np.sqrt(2.0 * self.a))


@dataclass(frozen=True)
class PacketParams:
    """Gaussian packet centred at ``x = -x0`` with width ``sigma`` and carrier ``k1``."""

    x0: float = 10.0
    sigma: float = 1.0
    k1: float = 2.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not self.x0 > 0:
            raise DomainError(f"x0 must be positive, got {self.x0}")
        if self.x0 < 5.0 * self.sigma:
            raise DomainError(
                f"x0={self.x0} must be >= 5*sigma={5.0 * self.sigma} so the packet "
                "starts clear of the coupling"
            )
        if not np.isfinite(self.k1):
            raise DomainError("k1 must be finite")


@dataclass(frozen=True)
class SpatialGrid:
    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not self.x_min < 0 < self.x_max:
            raise DomainError(f"grid must straddle the origin: [{self.x_min}, {self.x_max}]")
        if self.n_points < 3:
            raise DomainError(f"n_points must be >= 3, got {self.n_points}")

    @classmethod
    def from_spacing(cls, x_min: float, x_max: float, dx: float) -> SpatialGrid:
        """Grid with spacing as close as possible to ``dx`` (never coarser)."""
        n = int(np.ceil((x_max - x_min) / dx - 1e-9)) + 1
        return cls(x_min, x_max, n)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)


@dataclass(frozen=True, eq=False)
class WaveField:
    """Channel amplitudes ``psi1``, ``psi2`` on ``grid`` at time ``t``."""

    grid: SpatialGrid
    t: float
    psi1: np.ndarray
    psi2: np.ndarray = field(default=None)

    def __post_init__(self):
        psi1 = np.asarray(self.psi1, dtype=complex)
        psi2 = np.zeros_like(psi1) if self.psi2 is None else np.asarray(self.psi2, dtype=complex)
        n = self.grid.n_points
        if psi1.shape != (n,) or psi2.shape != (n,):
            raise DomainError(
                f"field lengths {psi1.shape}, {psi2.shape} do not match grid ({n},)"
            )
        psi1.setflags(write=False)
        psi2.setflags(write=False)
        object.__setattr__(self, "psi1", psi1)
        object.__setattr__(self, "psi2", psi2)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def norms(self) -> tuple[float, float]:
        dx = self.grid.dx
        return (
            float(np.trapezoid(np.abs(self.psi1) ** 2, dx=dx)),
            float(np.trapezoid(np.abs(self.psi2) ** 2, dx=dx)),
        )


def gaussian_packet(q: PacketParams, x):
    """Closed-form initial packet ``(2 pi sigma^2)^(-1/4) exp(-(x+x0)^2/4sigma^2 + i k1 (x+x0))``."""
    x = np.asarray(x, dtype=float)
    s = x + q.x0
    return (2.0 * np.pi * q.sigma**2) ** -0.25 * np.exp(-(s**2) / (4.0 * q.sigma**2) + 1j * q.k1 * s)


def initial_packet(q: PacketParams, grid: SpatialGrid) -> WaveField:
    """Sample the initial packet on ``grid``; channel 2 starts empty."""
    lo, hi = -q.x0 - 5.0 * q.sigma, -q.x0 + 5.0 * q.sigma
    if grid.x_min > lo or grid.x_max < hi:
        raise DomainError(
            f"grid [{grid.x_min}, {grid.x_max}] does not cover the packet support [{lo}, {hi}]"
        )
    return WaveField(grid, 0.0, gaussian_packet(q, grid.x))


def packet_fourier(q: PacketParams, k):
    """Momentum amplitude ``(2 sigma^2/pi)^(1/4) exp(-sigma^2 (k-k1)^2 + i k x0)``.

    Convention: ``psi(k) = (2 pi)^(-1/2) * integral psi(x) exp(-i k x) dx``.
    """
    k = np.asarray(k)
    return (2.0 * q.sigma**2 / np.pi) ** 0.25 * np.exp(-(q.sigma**2) * (k - q.k1) ** 2 + 1j * k * q.x0)


def momentum_density(q: PacketParams, k):
    """``|psi(k)|^2``, a normalised Gaussian in ``k``."""
    k = np.asarray(k, dtype=float)
    return np.sqrt(2.0 / np.pi) * q.sigma * np.exp(-2.0 * q.sigma**2 * (k - q.k1) ** 2)


def packet_energy(p: PhysParams, q: PacketParams) -> float:
    """Mean energy ``hbar^2 (k1^2 + 1/(4 sigma^2)) / 2m``."""
    return p.hbar**2 * (q.k1**2 + 1.0 / (4.0 * q.sigma**2)) / (2.0 * p.m)
