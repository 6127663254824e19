"""Time-domain kernel propagation of the packet through the point coupling.

Channel 1 splits into the free packet and a scattered part

    psi1_sc(x, t) = B(x, t) * I(x, t),
    I = integral over real k of exp(-w (k - kappa)^2) / (k k'(k) + beta),

with ``w = sigma^2 + i hbar t / 2m`` and ``kappa`` the complex centre that
completes the square.  ``I`` is evaluated by shifting the integration line
to ``Im k = Im kappa``: the residues of the poles swept over, the
Gaussian-damped integral along the shifted line, and (when the line moves
below the real axis) the jump across the channel-2 threshold cut.

``k'`` is continued analytically as ``sqrt(k - b) sqrt(k + b)``,
``b = sqrt(2 m V0) / hbar``, whose only cut is the closed-channel segment
``[-b, b]``.  Approached from above it coincides with the decaying
(``Im k' >= 0``) channel-2 wavenumber for every ``k > -b``; below ``-b``
it carries the sign of ``k``, which only affects momenta the packet does
not populate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .params import DomainError, PacketParams, PhysParams
from .stationary import GENUINE_RTOL, DegeneratePolesError, PoleSet, compute_poles

NEAR_POLE_FLOOR = 1e-6


class NearPoleWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Settings for the shifted-line and channel-2 integrals.

    ``scheme`` is ``"adaptive"`` (Gauss-Kronrod with pole subtraction) or
    ``"gauss-hermite"`` (``n_nodes`` nodes for the ``exp(-sigma^2 u^2)`` weight).
    ``u_max`` is the half-width of the ``u`` range in units of ``1/sigma``.
    """

    n_nodes: int = 128
    u_max: float = 8.0
    scheme: str = "adaptive"
    tol: float = 1e-11

    def __post_init__(self):
        if self.n_nodes < 16:
            raise DomainError("n_nodes must be >= 16")
        if self.u_max < 6:
            raise DomainError("u_max must be >= 6")
        if self.scheme not in ("adaptive", "gauss-hermite"):
            raise DomainError(f"unknown quadrature scheme {self.scheme!r}")


@dataclass(frozen=True)
class ResidueSelection:
    """Weight of each pole's residue: +1/-1 when swept over, 1/2 on the line, else 0."""

    weights: np.ndarray


def _cplx(k):
    # real inputs are taken as boundary values from above the cut
    k = np.asarray(k, dtype=complex)
    return k.real + 1j * np.where(k.imag == 0, 0.0, k.imag)


def analytic_kprime(p: PhysParams, k):
    """``k'`` continued analytically off the segment ``[-b, b]``; upper-edge values on it."""
    k = _cplx(k)
    b = p.k_threshold
    return np.sqrt(k - b) * np.sqrt(k + b)


def kernel_denominator(p: PhysParams, k):
    """``k k'(k) + beta``; vanishes only at the genuine poles."""
    k = _cplx(k)
    return k * analytic_kprime(p, k) + p.beta


def residue_numerator(p: PhysParams, k):
    """``k k'(k) - beta``, the numerator left after rationalising."""
    k = _cplx(k)
    return k * analytic_kprime(p, k) - p.beta


def pole_kprime(p: PhysParams, poles: PoleSet):
    """``k'`` at the four quartic roots without the ``k - b`` cancellation.

    ``k'^2 = k^2 - 2a`` is formed from the closed-form ``k^2`` of each pair;
    the branch (overall sign) is taken from ``analytic_kprime``.
    """
    a, rad = p.a, np.hypot(p.a, p.beta)
    q2 = p.beta**2 / (a + rad) if a + rad > 0 else 0.0
    s2 = np.array([q2, q2, -q2 - 2.0 * a, -q2 - 2.0 * a], dtype=complex)
    s = np.sqrt(s2)
    naive = analytic_kprime(p, poles.poles)
    return np.where(np.abs(s - naive) <= np.abs(s + naive), s, -s)


def pole_numerators(p: PhysParams, poles: PoleSet):
    """``k k' - beta`` at the poles: ``0`` for the spurious pair, ``-2 beta`` for the genuine one."""
    return poles.poles * pole_kprime(p, poles) - p.beta


def kernel_genuine(p: PhysParams, poles: PoleSet) -> np.ndarray:
    """Which quartic roots are zeros of ``kernel_denominator`` (the other two cancel)."""
    if p.beta == 0.0:
        return np.zeros(4, dtype=bool)
    kk = poles.poles * pole_kprime(p, poles)
    return np.abs(kk + p.beta) <= GENUINE_RTOL * max(p.beta, float(np.max(np.abs(kk))))


def complex_width(p: PhysParams, q: PacketParams, t):
    """``w(t) = sigma^2 + i hbar t / 2m``."""
    return q.sigma**2 + 1j * p.hbar * np.asarray(t, dtype=float) / (2.0 * p.m)


def kappa(p: PhysParams, q: PacketParams, x, t):
    """Complex centre ``i (|x| + x0 - 2 i sigma^2 k1) / (2 w)``."""
    X = np.abs(np.asarray(x, dtype=float)) + q.x0
    return 1j * (X - 2j * q.sigma**2 * q.k1) / (2.0 * complex_width(p, q, t))


def _prefactor(q: PacketParams) -> float:
    return (q.sigma**2 / (2.0 * np.pi**3)) ** 0.25


def log_envelope(p: PhysParams, q: PacketParams, x, t):
    """``log(B / (C (-beta)))``: ``-sigma^2 k1^2 - (|x| + x0 - 2 i sigma^2 k1)^2 / 4w``."""
    X = np.abs(np.asarray(x, dtype=float)) + q.x0
    w = complex_width(p, q, t)
    return -(q.sigma**2) * q.k1**2 - (X - 2j * q.sigma**2 * q.k1) ** 2 / (4.0 * w)


def envelope_B(p: PhysParams, q: PacketParams, x, t):
    """``B(x,t) = C (-beta) exp(-sigma^2 k1^2) exp(-(|x|+x0-2i sigma^2 k1)^2 / 4w)``."""
    if p.beta == 0.0:
        return np.zeros(np.shape(x), dtype=complex) if np.ndim(x) else 0j
    return -p.beta * _prefactor(q) * np.exp(log_envelope(p, q, x, t))


def free_evolution(p: PhysParams, q: PacketParams, x, t):
    """Freely spreading Gaussian; equals the initial packet at ``t = 0``."""
    if np.any(np.asarray(t) < 0):
        raise DomainError("t must be >= 0")
    x = np.asarray(x, dtype=float)
    w = complex_width(p, q, t)
    s = x + q.x0
    A = (2.0 * np.pi) ** -0.25 * np.sqrt(q.sigma / w)
    phase = q.k1 * s - p.hbar * q.k1**2 * t / (2.0 * p.m)
    return A * np.exp(-(s**2) / (4.0 * w) + 1j * (q.sigma**2 / w) * phase)


def _check_distinct(poles: np.ndarray):
    d = np.abs(poles[:, None] - poles[None, :])
    np.fill_diagonal(d, np.inf)
    if np.min(d) <= 1e-12 * max(1.0, float(np.max(np.abs(poles)))):
        raise DegeneratePolesError("poles are not distinct")


def _residue_coefficients(p: PhysParams, poles: PoleSet) -> np.ndarray:
    """``N(k_l) / prod_{i != l} (k_l - k_i)`` for each pole."""
    k = poles.poles
    _check_distinct(k)
    num = pole_numerators(p, poles)
    coef = np.empty(4, dtype=complex)
    for l in range(4):
        others = np.delete(k, l)
        coef[l] = num[l] / np.prod(k[l] - others)
    return coef


def select_residues(p: PhysParams, poles: PoleSet, kap, real_pole_weight: float = 0.5) -> ResidueSelection:
    """Residue weights for moving the real integration line to ``Im k = Im kappa``.

    A genuine pole strictly between the two lines counts +1 (line above the
    axis) or -1 (below).  A pole sitting on the shifted line counts half.
    ``real_pole_weight`` applies to genuine poles on the real axis itself
    (1/2 for a principal-value reading, 0 to drop the indentation); with
    the analytic ``k'`` no genuine pole lies there.
    """
    c = float(np.imag(kap))
    genuine = kernel_genuine(p, poles)
    scale = max(1.0, float(np.max(np.abs(poles.poles))))
    mu = np.zeros(4)
    for l, kl in enumerate(poles.poles):
        if not genuine[l]:
            continue
        y = kl.imag
        if abs(y) <= 1e-14 * scale:
            mu[l] = np.sign(c) * real_pole_weight
        elif abs(y - c) <= 1e-14 * scale:
            mu[l] = 0.5 * np.sign(c)
        elif 0 < y < c:
            mu[l] = 1.0
        elif c < y < 0:
            mu[l] = -1.0
    return ResidueSelection(mu)


def residue_sum(poles: PoleSet, sel: ResidueSelection, kap, p: PhysParams, w, log_scale=0.0):
    """``2 pi i sum_l mu_l N(k_l) exp(-w (k_l - kappa)^2) / prod_{i != l} (k_l - k_i)``.

    ``log_scale`` is added to each exponent so a large prefactor can be
    folded in without overflow.
    """
    mu = np.asarray(sel.weights, dtype=float)
    if not np.any(mu):
        return 0j
    coef = _residue_coefficients(p, poles)
    total = 0j
    for l in np.flatnonzero(mu):
        kl = poles.poles[l]
        total += mu[l] * coef[l] * np.exp(log_scale - w * (kl - kap) ** 2)
    return 2j * np.pi * total


def _near_poles(p: PhysParams, poles: PoleSet, kap, w):
    """Genuine poles close enough to the shifted line to subtract analytically."""
    genuine = kernel_genuine(p, poles)
    c = np.imag(kap)
    width = 1.0 / np.sqrt(np.real(w))
    out = []
    for l, kl in enumerate(poles.poles):
        if not genuine[l]:
            continue
        dist = abs(kl.imag - c)
        if dist < 0.5 * width:
            if dist < NEAR_POLE_FLOOR:
                warnings.warn(
                    f"pole {kl:.6g} lies {dist:.2e} from the integration line; "
                    "using pole subtraction",
                    NearPoleWarning,
                    stacklevel=3,
                )
            out.append(kl)
    return out


def _quad_complex(f, lo, hi, tol, points=()):
    pts = sorted(x for x in points if lo < x < hi)
    val, _ = integrate.quad(f, lo, hi, complex_func=True, epsabs=0.0, epsrel=tol, limit=1000, points=pts or None)
    return val


def line_integral_u(kap, poles: PoleSet, p: PhysParams, w, quad: QuadratureSpec = QuadratureSpec(), log_scale=0.0):
    """``integral over real u of exp(-w u^2) / (k k'(k) + beta)``, ``k = u + kappa``.

    Equal to the rationalised form ``N(k) / prod (k - k_i)`` but free of the
    removable 0/0 at the cancelled poles.  Poles near the line are handled
    by subtracting ``rho exp(-Re(w) (u - d)^2) / (u - d)`` whose integral is
    ``i pi rho sign(Im d)`` exactly (zero, i.e. principal value, on the line).
    """
    w = complex(w)
    if w.real <= 0:
        raise DomainError("Re(w) must be positive")
    kap = complex(kap)
    sig = np.sqrt(w.real)
    U = quad.u_max / sig

    if quad.scheme == "gauss-hermite":
        t, wt = np.polynomial.hermite.hermgauss(quad.n_nodes)
        u = t / sig
        g = np.exp(log_scale - 1j * w.imag * u**2) / kernel_denominator(p, u + kap)
        return complex(np.sum(wt * g) / sig)

    subtract = []
    for kl in _near_poles(p, poles, kap, w):
        d = kl - kap
        rho = np.exp(log_scale - w * d * d) / _denominator_derivative(p, kl)
        subtract.append((d, rho))

    def f(u):
        k = u + kap
        val = np.exp(log_scale - w * u * u) / kernel_denominator(p, k)
        for d, rho in subtract:
            val -= rho * np.exp(-w.real * (u - d) ** 2) / (u - d)
        return complex(val)

    lo, hi = -U, U
    for d, _ in subtract:
        lo, hi = min(lo, d.real - U), max(hi, d.real + U)
    b = p.k_threshold
    points = [-b - kap.real, b - kap.real] + [d.real for d, _ in subtract]
    total = _quad_complex(f, lo, hi, quad.tol, points)
    for d, rho in subtract:
        if d.imag != 0:
            total += 1j * np.pi * rho * np.sign(d.imag)
    return total


def _denominator_derivative(p: PhysParams, k):
    # d/dk [k S(k)] = S + k^2 / S
    s = analytic_kprime(p, k)
    return s + k * k / s


def cut_integral(kap, p: PhysParams, w, quad: QuadratureSpec = QuadratureSpec(), log_scale=0.0):
    """Jump across the threshold cut ``[-b, b]``, needed when ``Im kappa < 0``.

    ``integral_{-b}^{b} exp(-w (k-kappa)^2) [1/(i k rho + beta) - 1/(-i k rho + beta)] dk``
    with ``rho = sqrt(b^2 - k^2)``; substituting ``k = b sin(theta)`` removes
    the square-root endpoints.
    """
    b = p.k_threshold
    if b == 0.0 or p.beta == 0.0:
        return 0j
    beta = p.beta
    kap, w = complex(kap), complex(w)

    def f(theta):
        k = b * np.sin(theta)
        rho = b * np.cos(theta)
        jump = -2j * k * rho / (beta**2 + (k * rho) ** 2)
        return complex(np.exp(log_scale - w * (k - kap) ** 2) * jump * rho)

    return _quad_complex(f, -np.pi / 2, np.pi / 2, quad.tol)


def contour_split(p: PhysParams, kap, w, quad: QuadratureSpec = QuadratureSpec(), log_scale=0.0,
                  real_pole_weight: float = 0.5):
    """Kernel integral ``I`` assembled as residues + shifted line (+ cut jump)."""
    poles = compute_poles(p)
    sel = select_residues(p, poles, kap, real_pole_weight)
    total = residue_sum(poles, sel, kap, p, w, log_scale)
    total += line_integral_u(kap, poles, p, w, quad, log_scale)
    if np.imag(kap) < 0:
        total += cut_integral(kap, p, w, quad, log_scale)
    return total


def direct_kernel_integral(p: PhysParams, kap, w, tol=1e-13, log_scale=0.0, panels=64):
    """Brute-force ``I`` by adaptive quadrature along the real ``k`` axis.

    The window is cut into ``panels`` pieces (plus the threshold kinks) so the
    oscillating Gaussian is resolved piecewise.
    """
    kap, w = complex(kap), complex(w)
    sig = np.sqrt(w.real)
    # |exp(-w (k - kappa)^2)| on the real axis peaks here
    c = kap.real - w.imag * kap.imag / w.real
    half = 12.0 / sig
    b = p.k_threshold

    def f(k):
        return complex(np.exp(log_scale - w * (k - kap) ** 2) / kernel_denominator(p, k))

    edges = np.linspace(c - half, c + half, panels + 1)
    edges = np.unique(np.concatenate([edges, [z for z in (-b, b) if c - half < z < c + half]]))
    with warnings.catch_warnings():
        # tol sits at the roundoff floor on purpose
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return sum(_quad_complex(f, lo, hi, tol) for lo, hi in zip(edges[:-1], edges[1:]))


def psi1_scattered(p: PhysParams, q: PacketParams, x, t, quad: QuadratureSpec = QuadratureSpec(),
                   real_pole_weight: float = 0.5):
    """Scattered channel-1 wave ``B(x, t) I(x, t)``; even in ``x``."""
    if t < 0:
        raise DomainError("t must be >= 0")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros(xs.shape, dtype=complex)
    if p.beta == 0.0:
        return out if np.ndim(x) else complex(out[0])
    w = complex(complex_width(p, q, t))
    C = -p.beta * _prefactor(q)
    # |x| symmetry: evaluate each distinct |x| once
    ax, inv = np.unique(np.abs(xs), return_inverse=True)
    vals = np.empty(ax.shape, dtype=complex)
    for i, xa in enumerate(ax):
        kap = complex(kappa(p, q, xa, t))
        logB = complex(log_envelope(p, q, xa, t))
        vals[i] = C * contour_split(p, kap, w, quad, logB, real_pole_weight)
    out = vals[inv].reshape(xs.shape)
    return out if np.ndim(x) else complex(out[0])


def psi1_total(p: PhysParams, q: PacketParams, x, t, quad: QuadratureSpec = QuadratureSpec(),
               real_pole_weight: float = 0.5):
    return free_evolution(p, q, x, t) + psi1_scattered(p, q, x, t, quad, real_pole_weight)


def psi2(p: PhysParams, q: PacketParams, x, t, quad: QuadratureSpec = QuadratureSpec()):
    """Channel-2 wave: the packet's momentum components times ``t2(k) exp(i k' |x|)``.

    Each component carries the common energy phase ``exp(-i hbar k^2 t / 2m)``
    (``hbar^2 k'^2 / 2m + V0`` is the same energy).  Integrated adaptively
    over ``k1 +- 8/sigma``.
    """
    if t < 0:
        raise DomainError("t must be >= 0")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if p.beta == 0.0:
        out = np.zeros(xs.shape, dtype=complex)
        return out if np.ndim(x) else 0j
    ax = np.abs(xs).ravel()
    tau = p.hbar * t / (2.0 * p.m)
    s2 = q.sigma**2

    def f(k):
        kp = analytic_kprime(p, k)
        t2 = -1j * k * p.g / (k * kp + p.beta)
        ph = -s2 * (k - q.k1) ** 2 + 1j * k * q.x0 - 1j * tau * k * k
        return t2 * np.exp(ph + 1j * kp * ax)

    lo, hi = q.k1 - 8.0 / q.sigma, q.k1 + 8.0 / q.sigma
    b = p.k_threshold
    pts = [z for z in (-b, b) if lo < z < hi]
    edges = [lo, *pts, hi]
    total = np.zeros(ax.shape, dtype=complex)
    for a_, b_ in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad_vec(f, a_, b_, epsabs=quad.tol * 1e-2, epsrel=quad.tol, norm="max", limit=2000)
        total += val
    out = (_prefactor(q) * total).reshape(xs.shape)
    return out if np.ndim(x) else complex(out[0])
