"""Beam-equation propagators and their ``ℓ¹ → ℓ^∞`` decay.

The free propagator ``e^{-it√(Δ² + a²)}`` has the convolution kernel

    K_t(d) = (1/2π) ∫_{-π}^{π} exp(-it√(M(θ) + a²) + idθ) dθ,  M(θ) = (2 - 2cos θ)²,

normalized so that ``K_0 = δ``. The integrand is analytic and periodic, so the
trapezoidal rule converges geometrically once the grid resolves both the phase
and the range of ``d``; all kernel values for one ``t`` then come from a single
FFT. A panel quadrature that places breakpoints at the stationary points of the
phase is provided as an independent check.

Stationary phase
----------------
With ``Φ_{a,s}(θ) = √(M(θ) + a²) - sθ`` one has

    Φ'' = 4 (M + a²)^{-3/2} (1 - cos θ) h_a(cos θ),
    h_a(x) = 4x³ - 8x² + (2a² + 4)x + a².

For ``a ≠ 0`` the cubic ``h_a`` has a single root ``x₀ ∈ (-1, 0)``, the
inflection point ``θ₀ = -arccos x₀`` gives ``t^{-1/3}`` decay for the slope
``s₀ = Φ'_{a,0}(θ₀)``. The factor ``1 - cos θ`` vanishes to second order at
``θ = 0``, so there ``Φ''`` and ``Φ'''`` both vanish and
``Φ⁗(0) = 12/|a|``; the stationary point at ``θ = 0`` therefore decays like
``t^{-1/4}``, which dominates for large ``t`` when ``a ≠ 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import NoRoot, QuadratureFailure
from .fitting import LineFit, fit_loglog
from .lattice import LatticeWindow, Potential
from .waveop import ACSpectrum, ac_spectrum

__all__ = [
    "beam_phase",
    "beam_phase_derivative",
    "free_beam_row",
    "free_beam_kernel",
    "free_beam_kernel_panels",
    "DecayFit",
    "decay_fit",
    "h_cubic",
    "StationaryAnalysis",
    "stationary_analysis",
    "h_cubic_roots",
    "perturbed_propagators",
    "GROUP_SPEED",
]

# max over θ of d/dθ √(M(θ) + a²); attained at a = 0 where it equals 2 sin θ
GROUP_SPEED = 2.0


def _energy(theta, a):
    return np.sqrt((2.0 - 2.0 * np.cos(theta)) ** 2 + a * a)


def beam_phase(theta, a: float, s: float = 0.0):
    """``Φ_{a,s}(θ) = √((2 - 2cos θ)² + a²) - sθ``."""
    return _energy(theta, a) - s * np.asarray(theta)


def beam_phase_derivative(theta, a: float, s: float = 0.0, order: int = 1):
    """Derivatives of ``Φ_{a,s}``; orders 1 and 2 in closed form, higher via mpmath."""
    theta = np.asarray(theta, dtype=float)
    if order == 1:
        c = np.cos(theta)
        e = _energy(theta, a)
        with np.errstate(invalid="ignore", divide="ignore"):
            # for a = 0 the quotient is 2 sin θ, continued through θ = 0
            q = np.where(e > 0, 4.0 * (1.0 - c) * np.sin(theta) / np.where(e > 0, e, 1.0),
                         2.0 * np.sin(theta))
        return q - s
    if order == 2:
        c = np.cos(theta)
        return 4.0 * _energy(theta, a) ** -3 * (1.0 - c) * h_cubic(c, a)
    with mpmath.workdps(40):
        a_mp = mpmath.mpf(a)
        f = lambda x: mpmath.sqrt((2 - 2 * mpmath.cos(x)) ** 2 + a_mp**2) - s * x
        vals = [float(mpmath.diff(f, mpmath.mpf(float(x)), order)) for x in np.atleast_1d(theta)]
    return np.array(vals).reshape(theta.shape)


def _fft_size(t: float, radius: int) -> int:
    need = 2 * radius + 8.0 * abs(t) + 256
    return 1 << int(np.ceil(np.log2(need)))


def free_beam_row(a: float, t: float, radius: int) -> np.ndarray:
    """``K_t(d)`` for ``d = -radius, ..., radius`` by the periodic trapezoidal rule.

    The grid has at least ``2 * radius + 8|t| + 256`` points. Beyond
    ``|d| > GROUP_SPEED * |t|`` the kernel decays faster than any exponential,
    so aliasing from ``d ± L`` is far below double precision.
    """
    L = _fft_size(t, radius)
    theta = 2.0 * np.pi * np.arange(L) / L
    g = np.exp(-1j * t * _energy(theta, a))
    c = np.fft.ifft(g)
    d = np.arange(-radius, radius + 1)
    return c[d % L]


def free_beam_kernel(a: float, t: float, d) -> np.ndarray:
    """``K_t(d)`` at the given distances."""
    d = np.asarray(d, dtype=np.int64)
    r = int(np.abs(d).max()) if d.size else 0
    row = free_beam_row(a, t, r)
    return row[d + r]


def free_beam_kernel_panels(a: float, t: float, d: int, order: int = 24,
                            max_phase: float = 3.0, tol: float = 1e-8) -> complex:
    """``K_t(d)`` by Gauss-Legendre panels split at the stationary points.

    Breakpoints are placed at every zero of the phase derivative
    ``t Φ'(θ) - d`` and the panels are refined so that the phase changes by at
    most ``max_phase`` per panel. The result is compared against the same
    panels with twice the nodes.

    Raises
    ------
    QuadratureFailure
        If the two rules differ by more than ``tol``.
    """
    # stationary points: sign changes of t Φ'(θ) - d on a fine grid, then refined
    grid = np.linspace(-np.pi, np.pi, 4097)
    f = t * beam_phase_derivative(grid, a) - d
    brk = [-np.pi, np.pi]
    for i in np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]:
        lo, hi = grid[i], grid[i + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if np.sign(t * beam_phase_derivative(mid, a) - d) == np.sign(f[i]):
                lo = mid
            else:
                hi = mid
        brk.append(0.5 * (lo + hi))
    brk = np.unique(brk)
    speed = abs(t) * GROUP_SPEED + abs(d) + 1.0
    pts = []
    for lo, hi in zip(brk[:-1], brk[1:]):
        n = max(1, int(np.ceil((hi - lo) * speed / max_phase)))
        pts.extend(np.linspace(lo, hi, n + 1)[:-1])
    pts.append(np.pi)
    pts = np.asarray(pts)

    def rule(k):
        x, w = np.polynomial.legendre.leggauss(k)
        lo, hi = pts[:-1, None], pts[1:, None]
        half = 0.5 * (hi - lo)
        th = (lo + half * (x + 1.0)).ravel()
        ww = (half * w).ravel()
        return np.sum(ww * np.exp(-1j * t * _energy(th, a) + 1j * d * th)) / (2.0 * np.pi)

    v1, v2 = rule(order), rule(2 * order)
    if abs(v2 - v1) > tol:
        raise QuadratureFailure(f"panel rules differ by {abs(v2 - v1):.2e}")
    return complex(v2)


@dataclass
class DecayFit:
    a: float
    times: np.ndarray
    sup: np.ndarray
    origin: np.ndarray
    fit: LineFit

    @property
    def exponent(self) -> float:
        return self.fit.slope


def decay_fit(a: float, times=None) -> DecayFit:
    """Fit ``log sup_{|d| <= 3t} |K_t(d)|`` against ``log t``.

    ``times`` defaults to 13 log-spaced points on ``[1e2, 1e4]``.
    """
    times = np.logspace(2, 4, 13) if times is None else np.asarray(times, dtype=float)
    if times.size < 8:
        raise ValueError("need at least 8 sample times")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    sup = np.empty(times.size)
    origin = np.empty(times.size)
    for k, t in enumerate(times):
        r = int(np.ceil(3.0 * t))
        row = free_beam_row(a, t, r)
        sup[k] = np.abs(row).max()
        origin[k] = abs(row[r])
    return DecayFit(a, times, sup, origin, fit_loglog(times, sup))


def h_cubic(x, a: float):
    """``h_a(x) = 4x³ - 8x² + (2a² + 4)x + a²``."""
    x = np.asarray(x, dtype=float)
    return 4.0 * x**3 - 8.0 * x**2 + (2.0 * a * a + 4.0) * x + a * a


@dataclass
class StationaryAnalysis:
    a: float
    x0: float
    theta0: float
    s0: float
    h_at_root: float
    critical_points: dict  # θ -> (Φ'', Φ''', Φ⁗) for s = 0 and s = s0


def _bisect(f, lo: float, hi: float, xtol: float = 1e-15, maxiter: int = 200) -> float:
    flo = f(lo)
    if flo == 0.0:
        return lo
    if np.sign(flo) == np.sign(f(hi)):
        raise NoRoot("interval does not bracket a root")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < xtol:
            break
    return 0.5 * (lo + hi)


def stationary_analysis(a: float) -> StationaryAnalysis:
    """Inflection point ``θ₀`` of the beam phase and the degenerate slopes.

    Bisection on ``[-1, 1]`` finds the root ``x₀`` of ``h_a``; since
    ``h_a(-1) = -a² - 16 < 0`` and ``h_a(0) = a² > 0`` it lies in ``(-1, 0)``. Then ``θ₀ = -arccos x₀``
    and ``s₀ = Φ'_{a,0}(θ₀)``. For each of the slopes ``s = 0`` (stationary
    points ``θ = 0`` and ``θ = -π``) and ``s = s₀`` (stationary point ``θ₀``)
    the second to fourth derivatives of the phase are reported.

    Raises
    ------
    NoRoot
        For ``a = 0``: then ``h₀(x) = 4x(x - 1)²`` has its roots at the ends
        of the bracket and no inflection point lies inside ``(-π, 0)``.
    """
    a = float(a)
    if a == 0.0:
        raise NoRoot("h_0(x) = 4x(x-1)^2 has no root inside (-1, 0); use a != 0")
    x0 = _bisect(lambda x: float(h_cubic(x, a)), -1.0, 1.0)
    theta0 = -float(np.arccos(x0))
    s0 = float(beam_phase_derivative(theta0, a))
    crit = {}
    for th, s in ((0.0, 0.0), (-np.pi, 0.0), (theta0, s0)):
        crit[(th, s)] = tuple(float(beam_phase_derivative(th, a, s, k)) for k in (2, 3, 4))
    return StationaryAnalysis(a, x0, theta0, s0, float(h_cubic(x0, a)), crit)


def h_cubic_roots(a: float) -> np.ndarray:
    """All real roots of ``h_a`` in ``[-1, 1]``, with multiplicity.

    The first root comes from bisection on ``[-1, 1]``; the remaining quadratic factor
    is found by synthetic division. For ``a = 0`` this reproduces
    ``h₀(x) = 4x(x - 1)²`` with the double root at 1 exactly, which a generic
    polynomial root finder only resolves to about ``1e-8``.
    """
    a = float(a)
    f = lambda x: float(h_cubic(x, a))
    x0 = _bisect(f, -1.0, 1.0)
    # h_a(x) = (x - x0)(4x² + bx + c)
    b = -8.0 + 4.0 * x0
    c = (2.0 * a * a + 4.0) + b * x0
    disc = b * b - 16.0 * c
    roots = [x0]
    if disc >= -1e-12 * max(1.0, b * b):
        sq = np.sqrt(max(disc, 0.0))
        roots += [(-b - sq) / 8.0, (-b + sq) / 8.0]
    r = np.sort(np.asarray(roots))
    return r[(r >= -1.0) & (r <= 1.0)]


def perturbed_propagators(V: Potential, a: float, t: float, window: LatticeWindow,
                          ac: ACSpectrum | None = None, box: int | None = None):
    """``cos(t√(H + a²)) P_ac`` and ``sin(t√(H + a²)) / (t√(H + a²)) P_ac`` on ``window``.

    Spectral calculus over the retained eigenpairs of ``H`` on a box of radius
    ``box`` (default ``window.radius + GROUP_SPEED * |t| + 64``, so that no
    wave reaches the box edge). The sinc factor is 1 where ``t√(λ + a²) = 0``.
    """
    if ac is None:
        if box is None:
            box = int(window.radius + np.ceil(GROUP_SPEED * abs(t)) + 64)
        ac = ac_spectrum(V, box)
    U = ac.eigenvectors[np.ix_(ac.window.offset(window.indices), np.nonzero(ac.retained)[0])]
    lam = ac.eigenvalues[ac.retained]
    w = t * np.sqrt(np.clip(lam + a * a, 0.0, None))
    cos_k = (U * np.cos(w)) @ U.T
    sinc_k = (U * np.sinc(w / np.pi)) @ U.T
    return cos_k, sinc_k
