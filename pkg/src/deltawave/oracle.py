"""Crank-Nicolson solver for the two coupled channels on a uniform grid.

The point coupling is smeared into a normalised Gaussian of width
``delta_width``.  Each step solves

    (1 + i dt H / 2 hbar) psi(t + dt) = (1 - i dt H / 2 hbar) psi(t)

for the stacked vector ``[psi1, psi2]``; ``H`` has the three-point kinetic
stencil (or, on request, the fourth-order five-point one) on both diagonal blocks, ``V0`` on the channel-2 block and
``k0 * delta_w(x)`` on the off-diagonal blocks.  Grid ends are hard walls
unless an absorbing ramp is configured.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .params import DomainError, PhysParams, SpatialGrid, WaveField

log = logging.getLogger(__name__)


class OracleError(RuntimeError):
    """Linear solve failure or non-finite state in the grid solver."""


@dataclass(frozen=True)
class AbsorbingBoundary:
    """Quadratic imaginary potential ``-i strength ((d - edge)/width)^2`` inside ``width`` of each end."""

    strength: float = 1.0
    width: float = 5.0


@dataclass(frozen=True)
class OracleConfig:
    grid: SpatialGrid
    dt: float
    n_steps: int
    delta_width: float | None = None
    boundary: AbsorbingBoundary | None = None
    stencil: int = 3

    def __post_init__(self):
        dx = self.grid.dx
        if self.stencil not in (3, 5):
            raise DomainError("stencil must be 3 or 5 points")
        if self.delta_width is None:
            object.__setattr__(self, "delta_width", 4.0 * dx)
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if self.n_steps < 0:
            raise DomainError("n_steps must be >= 0")
        if self.delta_width < 2.0 * dx * (1 - 1e-12):
            raise DomainError(f"delta_width={self.delta_width} must be >= 2*dx={2 * dx}")
        if self.boundary is not None and self.boundary.width < 10.0 * dx:
            raise DomainError("absorbing width must be >= 10*dx")

    def dt_limit(self, p: PhysParams) -> float:
        """Phase-accuracy heuristic ``0.5 m dx^2 / hbar`` (the scheme itself is stable for any dt)."""
        return 0.5 * p.m * self.grid.dx**2 / p.hbar


def regularized_delta(x, width: float):
    """Normalised Gaussian ``exp(-x^2 / 2 width^2) / (width sqrt(2 pi))``."""
    if not width > 0:
        raise DomainError("delta width must be positive")
    x = np.asarray(x, dtype=float)
    return np.exp(-(x**2) / (2.0 * width**2)) / (width * np.sqrt(2.0 * np.pi))


def hamiltonian(cfg: OracleConfig, p: PhysParams):
    """Sparse ``2N x 2N`` Hamiltonian (non-Hermitian when absorbing)."""
    g = cfg.grid
    n, x = g.n_points, g.x
    c = p.hbar**2 / (2.0 * p.m * g.dx**2)
    if cfg.stencil == 3:
        off = np.full(n - 1, -c)
        T = sparse.diags([off, np.full(n, 2.0 * c), off], [-1, 0, 1], format="csr")
    else:
        c12 = c / 12.0
        o1, o2 = np.full(n - 1, -16.0 * c12), np.full(n - 2, c12)
        T = sparse.diags([o2, o1, np.full(n, 30.0 * c12), o1, o2], [-2, -1, 0, 1, 2], format="csr")
    coupling = sparse.diags(p.k0 * regularized_delta(x, cfg.delta_width))
    diag1 = np.zeros(n, dtype=complex)
    diag2 = np.full(n, p.V0, dtype=complex)
    if cfg.boundary is not None:
        W = _absorber(g, cfg.boundary)
        diag1 -= 1j * W
        diag2 -= 1j * W
    H = sparse.bmat(
        [[T + sparse.diags(diag1), coupling], [coupling, T + sparse.diags(diag2)]],
        format="csc",
    )
    return H


def _absorber(g: SpatialGrid, b: AbsorbingBoundary):
    x = g.x
    d_left = (g.x_min + b.width) - x
    d_right = x - (g.x_max - b.width)
    d = np.maximum(np.maximum(d_left, d_right), 0.0) / b.width
    return b.strength * d**2


class _Propagator:
    def __init__(self, cfg: OracleConfig, p: PhysParams):
        if cfg.dt > cfg.dt_limit(p):
            warnings.warn(
                f"dt={cfg.dt:g} exceeds the phase-accuracy heuristic {cfg.dt_limit(p):g}",
                stacklevel=3,
            )
        H = hamiltonian(cfg, p)
        eye = sparse.identity(H.shape[0], dtype=complex, format="csc")
        a = 0.5j * cfg.dt / p.hbar
        try:
            self.lu = splu((eye + a * H).tocsc())
        except RuntimeError as exc:
            raise OracleError(f"factorisation failed: {exc}") from exc
        self.rhs = (eye - a * H).tocsr()

    def __call__(self, psi: np.ndarray) -> np.ndarray:
        out = self.lu.solve(self.rhs @ psi)
        if not np.all(np.isfinite(out)):
            raise OracleError("non-finite amplitudes after Crank-Nicolson step")
        return out


@lru_cache(maxsize=8)
def _propagator(cfg: OracleConfig, p: PhysParams) -> _Propagator:
    return _Propagator(cfg, p)


def _check_grid(state: WaveField, cfg: OracleConfig):
    if state.grid != cfg.grid:
        raise DomainError("state grid differs from oracle grid")


def step(state: WaveField, cfg: OracleConfig, p: PhysParams) -> WaveField:
    """Advance ``state`` by one ``cfg.dt``."""
    _check_grid(state, cfg)
    prop = _propagator(cfg, p)
    psi = prop(np.concatenate([state.psi1, state.psi2]))
    n = cfg.grid.n_points
    return WaveField(cfg.grid, state.t + cfg.dt, psi[:n], psi[n:])


def evolve(state: WaveField, cfg: OracleConfig, p: PhysParams, record_every: int = 0) -> list[WaveField]:
    """Run ``cfg.n_steps`` steps; snapshot every ``record_every`` steps and at the end.

    The initial state is always the first snapshot.
    """
    _check_grid(state, cfg)
    prop = _propagator(cfg, p)
    n = cfg.grid.n_points
    psi = np.concatenate([state.psi1, state.psi2])
    out = [state]
    for i in range(1, cfg.n_steps + 1):
        psi = prop(psi)
        if (record_every and i % record_every == 0) or i == cfg.n_steps:
            out.append(WaveField(cfg.grid, state.t + i * cfg.dt, psi[:n].copy(), psi[n:].copy()))
    return out


def junction_density(state: WaveField) -> float:
    """``|psi1(0)|^2 + |psi2(0)|^2`` at the grid point nearest the origin."""
    i = int(np.argmin(np.abs(state.x)))
    return float(abs(state.psi1[i]) ** 2 + abs(state.psi2[i]) ** 2)


def evolve_until_cleared(state: WaveField, cfg: OracleConfig, p: PhysParams, min_time: float = 0.0,
                         threshold: float = 1e-8, check_every: int = 50) -> WaveField:
    """Step until the packet has left the junction, or ``cfg.n_steps`` is exhausted.

    Cleared means the density at the origin is below ``threshold`` times the
    peak density, after ``min_time`` has passed.
    """
    _check_grid(state, cfg)
    prop = _propagator(cfg, p)
    n = cfg.grid.n_points
    i0 = int(np.argmin(np.abs(cfg.grid.x)))
    psi = np.concatenate([state.psi1, state.psi2])
    for i in range(1, cfg.n_steps + 1):
        psi = prop(psi)
        if i % check_every == 0 and state.t + i * cfg.dt >= min_time:
            dens = np.abs(psi[:n]) ** 2 + np.abs(psi[n:]) ** 2
            if dens[i0] < threshold * dens.max():
                log.debug("packet cleared the junction after %d steps", i)
                return WaveField(cfg.grid, state.t + i * cfg.dt, psi[:n], psi[n:])
    log.warning("packet did not clear the junction within %d steps", cfg.n_steps)
    return WaveField(cfg.grid, state.t + cfg.n_steps * cfg.dt, psi[:n], psi[n:])


def extract_fluxes(state: WaveField):
    """Reflected, transmitted and channel-2 populations ``(R, T1, T2)``."""
    x, dx = state.x, state.grid.dx
    d1 = np.abs(state.psi1) ** 2
    # split the origin cell evenly between the two sides
    left = np.where(x < 0, 1.0, np.where(x == 0, 0.5, 0.0))
    R = float(np.trapezoid(d1 * left, dx=dx))
    T1 = float(np.trapezoid(d1 * (1.0 - left), dx=dx))
    T2 = float(np.trapezoid(np.abs(state.psi2) ** 2, dx=dx))
    return R, T1, T2
