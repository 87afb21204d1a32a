"""The matrix ``M(μ) = U + v R₀⁺(μ⁴) v`` and what it says about ``Δ² + V``.

``M(μ)`` lives on ``supp V``. Its inverse gives the perturbed resolvent

    R_V^±(μ⁴) = R₀^± - R₀^± v M^±(μ)⁻¹ v R₀^±,

and the rate at which ``‖M⁻¹(μ)‖`` blows up at ``μ → 0`` or ``μ → 2`` reflects
the threshold classification.

Near ``μ = 0`` the entries of ``M`` are of size ``μ⁻³`` while its smallest
singular value can be of size ``μ³``, so the threshold probes at zero run in
extended precision through :mod:`mpmath`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.linalg import solve_banded

from .errors import EmptyProjection, NearSingular, OutOfRange
from .fitting import LineFit, fit_loglog
from .lattice import LatticeWindow, Potential
from .resolvent import (
    _check_sign,
    free_resolvent_kernel,
    free_resolvent_matrix,
    laplace_boundary_kernel_mu,
)
from .threshold import DEFAULT_TOL, build_sixteen_chain, build_zero_chain

__all__ = [
    "MMatrix",
    "build_m",
    "invert_m",
    "perturbed_resolvent_kernel",
    "truncated_resolvent_oracle",
    "BlowupProbeResult",
    "blowup_probe",
    "cancellation_order_probe",
    "CONDITION_CAP",
]

CONDITION_CAP = 1e12


@dataclass
class MMatrix:
    mu: float
    sign: int
    sites: np.ndarray
    entries: np.ndarray
    condition_number: float
    dps: int | None = None  # set when entries came from an extended precision build
    mp_entries: object = None


def _mp_kernel(mu, d, sign: int):
    """``R₀^±(μ⁴)`` at distance ``d`` in the current mpmath precision."""
    mu = mpmath.mpf(mu)
    half = mu / 2
    theta = -2 * mpmath.asin(half)
    b = -2 * mpmath.asinh(half)
    a1 = 1 / mpmath.sqrt(1 - half**2)
    a2 = -1 / mpmath.sqrt(1 + half**2)
    d = abs(int(d))
    return (sign * 1j * a1 * mpmath.exp(-sign * 1j * theta * d)
            + a2 * mpmath.exp(b * d)) / (4 * mu**3)


def _mp_m(V: Potential, mu, sign: int):
    sites, vals = V.support, V.values
    n = sites.size
    M = mpmath.matrix(n, n)
    cache = {}
    v = [mpmath.sqrt(abs(mpmath.mpf(x))) for x in vals]
    for i in range(n):
        for j in range(n):
            d = abs(int(sites[i] - sites[j]))
            if d not in cache:
                cache[d] = _mp_kernel(mu, d, sign)
            M[i, j] = v[i] * cache[d] * v[j]
        M[i, i] += mpmath.sign(vals[i])
    return M


def build_m(V: Potential, mu, sign="+", dps: int | None = None) -> MMatrix:
    """Assemble ``M^±(μ) = U + v R₀^±(μ⁴) v`` on ``supp V``.

    With ``dps`` set, the matrix is also built in mpmath at that many decimal
    digits; ``entries`` then holds its rounding to double.
    """
    V.require_nonzero()
    s = _check_sign(sign)
    if not 0.0 < float(mu) < 2.0:
        raise OutOfRange("mu must lie in (0, 2)")
    sites = V.support
    if dps is None:
        v = V.v
        M = np.diag(V.sign).astype(complex) + v[:, None] * free_resolvent_matrix(float(mu), s, sites) * v[None, :]
        cond = float(np.linalg.cond(M))
        return MMatrix(float(mu), s, sites, M, cond)
    with mpmath.workdps(dps):
        Mmp = _mp_m(V, mu, s)
        sv = mpmath.svd_c(Mmp, compute_uv=False)
        svals = [abs(x) for x in sv]
        smin = min(svals)
        cond = float(max(svals) / smin) if smin != 0 else np.inf
        M = np.array(Mmp.tolist(), dtype=complex)
    return MMatrix(float(mu), s, sites, M, cond, dps=dps, mp_entries=Mmp)


def _cap_for(M: MMatrix, cap: float | None) -> float:
    if cap is not None:
        return cap
    if M.dps is None:
        return CONDITION_CAP
    # keep the same four-digit safety margin as in double precision
    return 10.0 ** (M.dps - 4)


def invert_m(M: MMatrix, cap: float | None = None):
    """Return ``(M⁻¹, residual)`` with ``residual = ‖M M⁻¹ - I‖₂``.

    Raises
    ------
    NearSingular
        When the condition number exceeds ``cap`` (default ``1e12`` in double
        precision, ``10**(dps - 4)`` for an extended precision build).
    """
    cap = _cap_for(M, cap)
    if not M.condition_number < cap:
        raise NearSingular(
            f"condition number {M.condition_number:.3e} exceeds cap {cap:.1e} at mu={M.mu}",
            condition_number=M.condition_number)
    n = M.entries.shape[0]
    if M.dps is None:
        inv = np.linalg.inv(M.entries)
        res = float(np.linalg.norm(M.entries @ inv - np.eye(n), 2))
        return inv, res
    with mpmath.workdps(M.dps):
        invmp = M.mp_entries ** -1
        R = M.mp_entries * invmp - mpmath.eye(n)
        res = float(mpmath.mnorm(R, 1))
        inv = np.array(invmp.tolist(), dtype=complex)
    return inv, res


def perturbed_resolvent_kernel(V: Potential, mu: float, sign, window: LatticeWindow,
                               cap: float | None = None) -> np.ndarray:
    """Dense kernel of ``R_V^±(μ⁴)`` on ``window``."""
    s = _check_sign(sign)
    M = build_m(V, mu, s)
    inv, _ = invert_m(M, cap)
    n = window.indices
    sites = V.support
    R0 = free_resolvent_matrix(mu, s, n)
    A = free_resolvent_matrix(mu, s, n, sites) * V.v[None, :]
    return R0 - A @ inv @ A.T


def _oracle_size(mu: float, eps: float, window: LatticeWindow, n_min: int) -> int:
    # waves decay like exp(-Im θ |d|) at energy μ⁴ + iε; pick the box so that
    # a reflected wave is damped by e^-8 over the round trip
    w = np.sqrt(complex(mu**4, eps))
    theta = np.arccos(1.0 - w / 2.0)
    damping = abs(theta.imag)
    return int(max(n_min, 10 * window.radius, np.ceil(4.0 / damping)))


def truncated_resolvent_oracle(V: Potential, mu: float, window: LatticeWindow,
                               eps: float = 1e-4, box: int | None = None,
                               batch: int = 32) -> np.ndarray:
    """``(H_box - μ⁴ - iε)⁻¹`` on a Dirichlet box, restricted to ``window``.

    An independent brute-force reference for :func:`perturbed_resolvent_kernel`
    with sign ``+``. The box radius defaults to
    ``max(400, 10 * window.radius, 4 / Im θ)`` where ``Im θ`` is the spatial
    damping rate at energy ``μ⁴ + iε``, so boundary reflections are negligible.
    """
    if box is None:
        box = _oracle_size(mu, eps, window, 400)
    big = LatticeWindow(box)
    size = big.size
    ab = np.zeros((5, size), dtype=complex)
    ab[0, 2:] = 1.0
    ab[1, 1:] = -4.0
    ab[2, :] = 6.0 + V.on_window(big) - (mu**4 + 1j * eps)
    ab[3, :-1] = -4.0
    ab[4, :-2] = 1.0
    cols = big.offset(window.indices)
    rows = cols
    out = np.empty((window.size, window.size), dtype=complex)
    for start in range(0, cols.size, batch):
        c = cols[start:start + batch]
        rhs = np.zeros((size, c.size), dtype=complex)
        rhs[c, np.arange(c.size)] = 1.0
        sol = solve_banded((2, 2), ab, rhs, check_finite=False)
        out[:, start:start + c.size] = sol[rows, :]
    return out


@dataclass
class BlowupProbeResult:
    threshold: str
    mus: np.ndarray
    distances: np.ndarray           # μ at zero, 2 - μ at sixteen
    norms: np.ndarray               # nan where the point was near singular
    near_singular: np.ndarray
    fit: LineFit
    dps: int | None = None

    @property
    def exponent(self) -> float:
        return self.fit.slope

    def rows(self):
        return list(zip(self.mus.tolist(), self.norms.tolist()))


def default_grid(threshold: str, per_decade: int = 6, decades: tuple = (-3.0, -1.0)) -> np.ndarray:
    """Log-spaced distances to the threshold, ``per_decade`` points per decade."""
    lo, hi = decades
    npts = int(round(per_decade * (hi - lo))) + 1
    return np.logspace(lo, hi, npts)


def blowup_probe(V: Potential, threshold: str = "zero", distances=None,
                 dps: int | None = "auto", cap: float | None = None) -> BlowupProbeResult:
    """Fit ``log ‖M⁻¹(μ)‖₂`` against the log distance to the threshold.

    Parameters
    ----------
    V : Potential
    threshold : {"zero", "sixteen"}
    distances : array_like, optional
        ``μ`` values for ``zero`` and ``2 - μ`` values for ``sixteen``. The
        defaults cover ``[1e-3, 1e-1]`` and ``[1e-5, 1e-3]`` with six points per
        decade.
    dps : int, None or "auto"
        Decimal digits for the mpmath build. ``"auto"`` uses 50 digits at zero
        and double precision at sixteen, where ``M`` stays well conditioned.

    Near-singular points are recorded and left out of the fit.
    """
    if threshold not in ("zero", "sixteen"):
        raise ValueError("threshold must be 'zero' or 'sixteen'")
    if distances is None:
        distances = default_grid(threshold, decades=(-3.0, -1.0) if threshold == "zero" else (-5.0, -3.0))
    distances = np.sort(np.asarray(distances, dtype=float))
    if dps == "auto":
        dps = 50 if threshold == "zero" else None
    norms = np.full(distances.size, np.nan)
    flags = np.zeros(distances.size, dtype=bool)
    mus = distances if threshold == "zero" else 2.0 - distances
    for k, (dist, mu) in enumerate(zip(distances, mus)):
        if threshold == "sixteen" and dps is not None:
            mu = mpmath.mpf(2) - mpmath.mpf(dist)
        M = build_m(V, mu, "+", dps=dps)
        try:
            inv, _ = invert_m(M, cap)
        except NearSingular:
            flags[k] = True
            continue
        norms[k] = np.linalg.norm(inv, 2)
    fit = fit_loglog(distances[~flags], norms[~flags])
    return BlowupProbeResult(threshold, np.asarray(mus, dtype=float), distances, norms, flags, fit, dps)


def _projection_for(V: Potential, which: str, tol: float) -> np.ndarray:
    if which == "sixteen-vQ":
        return build_sixteen_chain(V, tol).Q
    chain = build_zero_chain(V, tol)
    return {"vQ": chain.Q, "vS0": chain.S[0], "vS1": chain.S[1], "vS2": chain.S[2]}[which]


def cancellation_order_probe(V: Potential, which: str, distances=None,
                             tol: float = DEFAULT_TOL, radius: int | None = None):
    """Fit the order of ``R₀⁺(μ⁴) v Π`` (or ``R^∓_{-Δ}(4 - μ²) ṽ Q̃``).

    The size of the kernel is measured as ``max_n ‖K(n, ·)‖₂``, the norm from
    ``ℓ²(supp V)`` to ``ℓ^∞``. The rows range over ``|n| <= max(4R + 32, 8/δ)``
    where ``δ`` is the distance to the threshold, so the sites ``|n| ~ 1/δ``
    at which the oscillating and the decaying parts of the kernel separate are
    included. At sixteen the only length scale is the wavelength
    ``1/θ̃₊ ~ δ^{-1/2}``, and the rows range over ``|n| <= max(4R + 32, 8/√δ)``.

    Returns ``(distances, sizes, fit)``.
    """
    choices = ("vQ", "vS0", "vS1", "vS2", "sixteen-vQ")
    if which not in choices:
        raise ValueError(f"which must be one of {choices}")
    Pi = _projection_for(V, which, tol)
    if np.linalg.norm(Pi) < 0.5:
        raise EmptyProjection(f"projection for {which} vanishes for this potential")
    if distances is None:
        distances = (np.logspace(-4, -2, 13) if which != "sixteen-vQ"
                     else np.logspace(-6, -3, 13))
    distances = np.asarray(distances, dtype=float)
    sites = V.support
    R0 = 4 * V.support_radius + 32
    sizes = np.empty(distances.size)
    for k, dist in enumerate(distances):
        scale = np.sqrt(dist) if which == "sixteen-vQ" else dist
        r = radius if radius is not None else max(R0, int(np.ceil(8.0 / scale)))
        n = np.arange(-r, r + 1)
        d = n[:, None] - sites[None, :]
        if which == "sixteen-vQ":
            K = laplace_boundary_kernel_mu(2.0 - dist, "-", d, upper=True) * V.v_tilde[None, :]
        else:
            K = free_resolvent_kernel(dist, "+", d) * V.v[None, :]
        A = K @ Pi
        sizes[k] = np.sqrt((np.abs(A) ** 2).sum(axis=1)).max()
    return distances, sizes, fit_loglog(distances, sizes)
