"""Boundary values of the free resolvents of ``Δ²`` and ``-Δ`` on the integers.

The spectral parameter of ``Δ²`` is written ``λ = μ⁴`` with ``0 < μ < 2``.
The phase ``θ₊`` solves ``2 - 2cos θ₊ = μ²`` on ``(-π, 0)`` and is evaluated as
``-2 asin(μ/2)``, which equals ``-arccos(1 - μ²/2)`` but keeps full relative
accuracy as ``μ → 0``. Likewise ``b = -2 asinh(μ/2)`` and the quantities that
involve ``2 - μ`` are formed from ``(2 - μ)(2 + μ)`` so that they stay accurate
as ``μ → 2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange

__all__ = [
    "PhaseData",
    "phase_data",
    "free_resolvent_kernel",
    "free_resolvent_matrix",
    "free_resolvent_jump",
    "laplace_resolvent_kernel",
    "laplace_boundary_kernel",
    "laplace_boundary_kernel_mu",
    "cancellation_coefficients",
]


def _check_mu(mu):
    mu = np.asarray(mu, dtype=float)
    if np.any(~(mu > 0.0)) or np.any(~(mu < 2.0)):
        raise OutOfRange("spectral parameter mu must lie in the open interval (0, 2)")
    return mu


def _check_sign(sign):
    if sign in ("+", 1, +1):
        return 1
    if sign in ("-", -1):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


@dataclass(frozen=True)
class PhaseData:
    """Scalars entering the free resolvent at ``λ = μ⁴``."""

    mu: float | np.ndarray
    theta_plus: float | np.ndarray
    theta_tilde_plus: float | np.ndarray
    b: float | np.ndarray
    a1: float | np.ndarray
    a2: float | np.ndarray


def phase_data(mu) -> PhaseData:
    """Phases and amplitudes at ``μ``; ``μ`` may be an array."""
    mu = _check_mu(mu)
    half = 0.5 * mu
    # sqrt(1 - μ²/4), formed so that the factor 2 - μ is exact
    root = 0.5 * np.sqrt((2.0 - mu) * (2.0 + mu))
    theta = -2.0 * np.arcsin(half)
    theta_t = -2.0 * np.arctan2(root, half)
    b = -2.0 * np.arcsinh(half)
    a1 = 1.0 / root
    a2 = -1.0 / np.sqrt(1.0 + half**2)
    return PhaseData(mu, theta, theta_t, b, a1, a2)


def free_resolvent_kernel(mu, sign, d):
    """``R₀^±(μ⁴)`` at distance ``d = n - m``.

    ``(1 / 4μ³) (±i a₁ exp(∓iθ₊|d|) + a₂ exp(b|d|))``. ``mu`` and ``d``
    broadcast against each other.
    """
    s = _check_sign(sign)
    p = phase_data(mu)
    d = np.abs(np.asarray(d, dtype=float))
    mu = np.asarray(p.mu)
    return (s * 1j * p.a1 * np.exp(-s * 1j * p.theta_plus * d)
            + p.a2 * np.exp(p.b * d)) / (4.0 * mu**3)


def free_resolvent_matrix(mu: float, sign, rows, cols=None) -> np.ndarray:
    """Kernel matrix ``R₀^±(μ⁴)(n, m)`` for ``n`` in ``rows``, ``m`` in ``cols``."""
    rows = np.asarray(rows)
    cols = rows if cols is None else np.asarray(cols)
    return free_resolvent_kernel(mu, sign, rows[:, None] - cols[None, :])


def free_resolvent_jump(mu, d):
    """``R₀⁺(μ⁴) - R₀⁻(μ⁴) = (i a₁ / 2μ³) cos(θ₊|d|)``."""
    p = phase_data(mu)
    d = np.abs(np.asarray(d, dtype=float))
    return 1j * p.a1 * np.cos(p.theta_plus * d) / (2.0 * np.asarray(p.mu) ** 3)


def _laplace_from_theta(theta, d):
    return -1j * np.exp(-1j * theta * d) / (2.0 * np.sin(theta))


def laplace_resolvent_kernel(omega, d):
    """``(-Δ - ω)⁻¹`` at distance ``d`` for ``ω`` off the spectrum ``[0, 4]``.

    Uses ``-i exp(-iθ|d|) / (2 sin θ)`` with ``2 - 2cos θ = ω`` and
    ``Im θ < 0``. For real ``ω < 0`` the kernel is ``exp(-κ|d|) / (2 sinh κ)``
    with ``cosh κ = 1 - ω/2``.
    """
    d = np.abs(np.asarray(d, dtype=float))
    omega = complex(omega)
    if omega.imag == 0.0:
        w = omega.real
        if 0.0 <= w <= 4.0:
            raise OutOfRange("omega lies on the spectrum [0, 4]; use laplace_boundary_kernel")
        if w < 0.0:
            kappa = 2.0 * np.arcsinh(np.sqrt(-w) / 2.0)
            return np.exp(-kappa * d) / (2.0 * np.sinh(kappa))
        # w > 4: mirror of the negative case through J
        kappa = 2.0 * np.arcsinh(np.sqrt(w - 4.0) / 2.0)
        return -np.where(d % 2 == 0, 1.0, -1.0) * np.exp(-kappa * d) / (2.0 * np.sinh(kappa))
    theta = np.arccos(1.0 - omega / 2.0)
    if theta.imag > 0:
        theta = -theta
    return _laplace_from_theta(theta, d)


def laplace_boundary_kernel(lam: float, side, d):
    """Boundary value ``R^±_{-Δ}(λ ± i0)`` for ``λ`` in ``(0, 4)``.

    The ``+`` side uses ``θ = -arccos(1 - λ/2)`` and the ``-`` side its
    negative; both are evaluated from ``μ = √λ`` with the stable phase.
    """
    s = _check_sign(side)
    if not 0.0 < lam < 4.0:
        raise OutOfRange("boundary values exist only for lambda in (0, 4)")
    theta = s * float(phase_data(np.sqrt(lam)).theta_plus)
    return _laplace_from_theta(theta, np.abs(np.asarray(d, dtype=float)))


def laplace_boundary_kernel_mu(mu: float, side, d, upper: bool = False):
    """``R^±_{-Δ}`` at ``μ²`` (``upper=False``) or ``4 - μ²`` (``upper=True``).

    Avoids forming ``4 - μ²`` when ``μ`` is close to 2.
    """
    s = _check_sign(side)
    p = phase_data(mu)
    theta = p.theta_tilde_plus if upper else p.theta_plus
    return _laplace_from_theta(s * theta, np.abs(np.asarray(d, dtype=float)))


def cancellation_coefficients(mu) -> dict:
    """Coefficient functions of the Taylor remainders of ``R₀^±(μ⁴)``.

    Returns a dict with keys ``b1, b2, c1+, c1-, c2, c3, d1, d2, d3``.
    """
    p = phase_data(mu)
    th, b, a1, a2 = p.theta_plus, p.b, p.a1, p.a2
    c3 = th * a1 + b * a2
    return {
        "b1": -th * a1,
        "b2": -b * a2,
        "c1+": -1j * th**2 * a1,
        "c1-": 1j * th**2 * a1,
        "c2": b**2 * a2,
        "c3": c3,
        "d1": th**3 * a1,
        "d2": -(b**3) * a2,
        "d3": 2.0 * c3,
    }
