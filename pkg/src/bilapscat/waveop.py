"""Wave operators of ``H = Δ² + V`` relative to ``Δ²``.

Stationary representation
-------------------------
With ``λ = μ⁴`` the spectral measure of ``Δ²`` is
``(2μ³ / πi) (R₀⁺ - R₀⁻)(μ⁴) dμ`` and

    W₊ = I - (2/πi) ∫₀² μ³ R₀⁺(μ⁴) v M⁻¹(μ) v (R₀⁺ - R₀⁻)(μ⁴) dμ.

The jump ``R₀⁺ - R₀⁻`` equals ``(i a₁ / 2μ³) cos(θ₊|n - m|)``. Changing to
``θ = |θ₊| = 2 asin(μ/2)`` gives ``a₁ dμ = dθ`` and

    W₊(n, m) = δ_{nm} - (1/π) ∫₀^π Σ_k [R₀⁺ v M⁻¹ v](n, k) cos(θ|k - m|) dθ,

whose integrand is analytic in ``θ`` for potentials that are regular at both
thresholds: both the ``μ⁻³`` blow-up at ``θ = 0`` and the square-root
singularity at ``θ = π`` are absorbed. The integral is evaluated by composite
Gauss-Legendre panels on the three bands ``μ < μ₀``, ``μ₀ < μ < 2 - μ₀`` and
``μ > 2 - μ₀``, with dyadic grading toward both ends.

Time-dependent reference
------------------------
``W₊ = s-lim_{t→-∞} e^{itH} e^{-itΔ²}``, evaluated on a Dirichlet box through
eigendecompositions and averaged over ``t ∈ [-T, -T/2]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import diags
from scipy.sparse.linalg import expm_multiply

from .errors import NearSingular, NotConverged, QuadratureFailure
from .lattice import LatticeWindow, Potential, bilaplacian_matrix, h_matrix
from .fitting import fit_semilog
from .mmatrix import CONDITION_CAP
from .resolvent import free_resolvent_kernel
from .threshold import classify

__all__ = [
    "QuadratureConfig",
    "WaveOperatorKernel",
    "stationary_wave_operator",
    "apply_wave_operator",
    "quasimomentum",
    "time_dependent_wave_oracle",
    "ACSpectrum",
    "ac_spectrum",
    "free_evolution",
    "intertwining_check",
    "endpoint_growth_experiment",
    "endpoint_reference_sum",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Panel layout for the stationary integral.

    Attributes
    ----------
    mu0 : float
        Band split; the low band is ``μ < mu0`` and the high band
        ``μ > 2 - mu0``.
    order : int
        Gauss-Legendre nodes per panel. The error estimate compares against
        ``2 * order`` nodes on the same panels.
    panel_phase : float
        Largest total phase (in radians) of the oscillatory factors allowed
        on one panel.
    grading : int
        Number of dyadic panels toward each endpoint.
    mu_min : float
        The intervals ``θ < θ(mu_min)`` and ``θ > π - θ(mu_min)`` are left
        out, with ``θ(μ) = 2 asin(μ/2)``. At a threshold that is not a
        regular point the gap is raised to ``resonant_mu_min``.
    atol : float
        Largest accepted per-band error estimate (max norm of kernel entries).
    """

    mu0: float = 0.1
    order: int = 16
    panel_phase: float = 6.0
    grading: int = 10
    mu_min: float = 1e-4
    resonant_mu_min: float = 2e-2
    atol: float = 1e-3
    condition_cap: float = CONDITION_CAP

    def __post_init__(self):
        if not 0.0 < self.mu0 < 1.0:
            raise ValueError("mu0 must lie in (0, 1)")
        if self.atol <= 0 or self.order < 2 or self.panel_phase <= 0:
            raise ValueError("tolerances and node counts must be positive")


@dataclass
class WaveOperatorKernel:
    rows: np.ndarray
    cols: np.ndarray
    entries: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Apply to ``f`` given on ``cols``."""
        return self.entries @ f

    def column(self, m: int) -> np.ndarray:
        return self.entries[:, int(np.searchsorted(self.cols, m))]

    def to_csv_rows(self):
        n, m = np.meshgrid(self.rows, self.cols, indexing="ij")
        return zip(n.ravel(), m.ravel(), self.entries.real.ravel(), self.entries.imag.ravel())


def _theta_of_mu(mu):
    return 2.0 * np.arcsin(np.asarray(mu) / 2.0)


def _breakpoints(a: float, b: float, width: float, grade_left: int, grade_right: int):
    npan = max(1, int(np.ceil((b - a) / width)))
    pts = list(np.linspace(a, b, npan + 1))
    first = pts[1] - pts[0]
    for k in range(1, grade_left + 1):
        pts.append(a + first * 2.0**-k)
    last = pts[npan] - pts[npan - 1]
    for k in range(1, grade_right + 1):
        pts.append(b - last * 2.0**-k)
    return np.unique(pts)


def _gauss_nodes(breaks, order):
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    return (a + half * (x + 1.0)).ravel(), (half * w).ravel()


def _integrand_factors(V: Potential, thetas: np.ndarray, rows, cols, sign: int, cap: float):
    """Stacked ``A`` (rows x nodes*supp) and ``B`` (nodes*supp x cols) factors."""
    sites, v, U = V.support, V.v, V.sign
    mus = 2.0 * np.sin(thetas / 2.0)
    ds = np.abs(sites[:, None] - sites[None, :])
    R_ss = free_resolvent_kernel(mus[:, None, None], sign, ds[None])
    M = np.diag(U)[None] + v[None, :, None] * R_ss * v[None, None, :]
    cond = np.linalg.cond(M)
    if np.any(~(cond < cap)):
        k = int(np.argmax(cond))
        raise NearSingular(f"M(mu) near singular at mu={mus[k]:.3e} (cond {cond[k]:.2e})",
                           condition_number=float(cond[k]))
    Minv = np.linalg.inv(M)
    vMv = v[None, :, None] * Minv * v[None, None, :]                 # nodes x s x s
    R_ns = free_resolvent_kernel(mus[:, None, None], sign, (rows[:, None] - sites[None, :])[None])
    A = np.einsum("qns,qsk->qnk", R_ns, vMv)                          # nodes x rows x s
    B = np.cos(thetas[:, None, None] * np.abs(sites[:, None] - cols[None, :])[None])
    return A, B


def _band_integral(V, breaks, order, rows, cols, sign, cap, vec=None, chunk=64):
    """Band contribution to the kernel, or to ``K @ vec`` when ``vec`` is given."""
    th, w = _gauss_nodes(breaks, order)
    shape = (rows.size, cols.size) if vec is None else (rows.size,)
    out = np.zeros(shape, dtype=complex)
    for start in range(0, th.size, chunk):
        sl = slice(start, start + chunk)
        A, B = _integrand_factors(V, th[sl], rows, cols, sign, cap)
        A = A * w[sl, None, None]
        if vec is None:
            q, nr, s = A.shape
            out += A.transpose(1, 0, 2).reshape(nr, q * s) @ B.reshape(q * s, cols.size)
        else:
            out += np.einsum("qns,qs->n", A, B @ vec)
    return out, th.size


def _condition(V: Potential, mu: float) -> float:
    sites, v = V.support, V.v
    R = free_resolvent_kernel(mu, 1, np.abs(sites[:, None] - sites[None, :]))
    return float(np.linalg.cond(np.diag(V.sign) + v[:, None] * R * v[None, :]))


def _endpoint_gap(V: Potential, start: float, cap: float, top: bool, limit: float) -> float:
    """Smallest gap ``>= start`` (doubling) at which ``M`` is safely invertible."""
    gap = start
    while gap < limit:
        mu = 2.0 - gap if top else gap
        if _condition(V, mu) < cap / 100.0:
            return gap
        gap *= 2.0
    return limit


def _panels(V: Potential, rows, cols, cfg: QuadratureConfig):
    zero_kind = classify(V, "zero").classification
    sixteen_kind = classify(V, "sixteen").classification
    mu_min = cfg.mu_min if zero_kind == "Regular" else max(cfg.mu_min, cfg.resonant_mu_min)
    top_gap = cfg.mu_min if sixteen_kind == "Regular" else max(cfg.mu_min, cfg.resonant_mu_min)
    mu_min = _endpoint_gap(V, mu_min, cfg.condition_cap, False, cfg.mu0 / 2)
    top_gap = _endpoint_gap(V, top_gap, cfg.condition_cap, True, cfg.mu0 / 2)
    sites = V.support
    freq = (np.abs(rows[:, None] - sites[None, :]).max()
            + np.abs(sites[:, None] - cols[None, :]).max() + 2)
    width = cfg.panel_phase / freq
    t_min = _theta_of_mu(mu_min)
    t0 = _theta_of_mu(cfg.mu0)
    t1 = _theta_of_mu(2.0 - cfg.mu0)
    # the same gap in θ at the top end, where π - θ ≈ 2 sqrt(2 - μ)
    t_max = np.pi - _theta_of_mu(top_gap)
    bands = {
        "low": _breakpoints(t_min, t0, width, cfg.grading, 0),
        "mid": _breakpoints(t0, t1, width, 0, 0),
        "high": _breakpoints(t1, t_max, width, 0, cfg.grading),
    }
    diag = {"bands": {}, "mu_min": mu_min, "top_gap": top_gap,
            "zero": zero_kind, "sixteen": sixteen_kind}
    return bands, diag


def _integrate(V, rows, cols, cfg, sign, vec=None):
    """``W - I`` as a kernel, or applied to ``vec``, with per-band diagnostics."""
    bands, diag = _panels(V, rows, cols, cfg)
    shape = (rows.size, cols.size) if vec is None else (rows.size,)
    total = np.zeros(shape, dtype=complex)
    for name, br in bands.items():
        coarse, _ = _band_integral(V, br, cfg.order, rows, cols, sign, cfg.condition_cap, vec)
        fine, nn = _band_integral(V, br, 2 * cfg.order, rows, cols, sign, cfg.condition_cap, vec)
        err = float(np.abs(fine - coarse).max()) / np.pi
        diag["bands"][name] = {"panels": int(br.size - 1), "nodes": int(nn), "error": err,
                               "theta": [float(br[0]), float(br[-1])]}
        total += fine
    worst = max(b["error"] for b in diag["bands"].values())
    diag["error"] = worst
    if worst > cfg.atol:
        raise QuadratureFailure(f"per-band error estimate {worst:.2e} exceeds {cfg.atol:.1e}")
    return -total / np.pi, diag


def stationary_wave_operator(V: Potential, window: LatticeWindow | None = None,
                             cfg: QuadratureConfig | None = None, sign="+",
                             rows=None, cols=None) -> WaveOperatorKernel:
    """Kernel of ``W₊`` (or ``W₋`` with ``sign='-'``) from the stationary formula.

    Parameters
    ----------
    V : Potential
    window : LatticeWindow, optional
        Square block ``window x window``. Alternatively pass ``rows`` and
        ``cols`` as integer site arrays.
    cfg : QuadratureConfig, optional
    sign : {"+", "-"}
        ``W₋`` uses ``R₀⁻`` and ``M⁻``; its kernel is the complex conjugate of
        that of ``W₊``.

    Raises
    ------
    QuadratureFailure
        If a band's error estimate exceeds ``cfg.atol``.
    NearSingular
        If ``M(μ)`` cannot be inverted at a node.
    """
    cfg = cfg or QuadratureConfig()
    s = 1 if sign in ("+", 1) else -1
    if window is not None:
        rows = cols = window.indices
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    V.require_nonzero()
    W, diag = _integrate(V, rows, cols, cfg, s)
    eye = rows[:, None] == cols[None, :]
    W[eye] += 1.0
    return WaveOperatorKernel(rows, cols, W, diag)


def apply_wave_operator(V: Potential, f: np.ndarray, window: LatticeWindow,
                        out_window: LatticeWindow | None = None,
                        cfg: QuadratureConfig | None = None, sign="+",
                        return_diagnostics: bool = False):
    """``W f`` on ``out_window`` for ``f`` given on ``window``.

    Contracts ``f`` against the jump factor at each node first, so the cost
    grows only linearly with the size of ``out_window``.
    """
    cfg = cfg or QuadratureConfig()
    out_window = out_window or window
    V.require_nonzero()
    s = 1 if sign in ("+", 1) else -1
    rows, cols = out_window.indices, window.indices
    f = np.asarray(f, dtype=complex)
    Wf, diag = _integrate(V, rows, cols, cfg, s, vec=f)
    inside = np.abs(rows) <= window.radius
    Wf[inside] += f[window.offset(rows[inside])]
    return (Wf, diag) if return_diagnostics else Wf


# Time-dependent reference

def quasimomentum(lam):
    """``2 asin(λ^{1/4} / 2)`` on ``[0, 16]``, extended linearly outside.

    An increasing function of the energy; as a function of the quasimomentum
    of ``Δ²`` it is ``|θ|``, so it propagates every wave packet at unit speed.
    """
    lam = np.asarray(lam, dtype=float)
    inside = np.clip(lam, 0.0, 16.0)
    phi = 2.0 * np.arcsin(np.clip(inside, 0.0, None) ** 0.25 / 2.0)
    return phi + np.where(lam > 16.0, lam - 16.0, 0.0) + np.where(lam < 0.0, lam, 0.0)


def _time_average_weights(omega: np.ndarray, T: float, averaging: str) -> np.ndarray:
    """Average of ``exp(i t ω)`` over ``t → -∞`` with the chosen window."""
    if averaging == "cesaro":
        # (2/T) ∫_{-T}^{-T/2} e^{itω} dt
        x = omega * T
        small = np.abs(x) < 1e-8
        safe = np.where(small, 1.0, x)
        val = 2.0 * (np.exp(-0.5j * safe) - np.exp(-1j * safe)) / (1j * safe)
        return np.where(small, 1.0 - 0.75j * x, val)
    if averaging == "abel":
        # (1/T) ∫_{-∞}^0 e^{t/T} e^{itω} dt
        return 1.0 / (1.0 + 1j * omega * T)
    raise ValueError("averaging must be 'cesaro' or 'abel'")


def time_dependent_wave_oracle(V: Potential, f: np.ndarray, window: LatticeWindow,
                               T: float = 400.0, box: int | None = None,
                               averaging: str = "cesaro", generator: str = "bilaplacian",
                               check_tol: float | None = None) -> np.ndarray:
    """Time-averaged ``e^{itH} e^{-itΔ²} f`` as ``t → -∞`` on a Dirichlet box.

    Parameters
    ----------
    V : Potential
    f : ndarray
        Input on ``window``.
    T : float
        Averaging scale; ``t`` runs over ``[-T, -T/2]`` (Cesàro) or is weighted
        by ``exp(t/T)`` (Abel).
    box : int, optional
        Radius of the truncated lattice, default ``max(512, 4 * window.radius)``.
    generator : {"bilaplacian", "quasimomentum"}
        ``"bilaplacian"`` evolves with ``H`` and ``Δ²`` themselves.
        ``"quasimomentum"`` evolves with ``φ(H)`` and ``φ(Δ²)`` for the
        increasing function :func:`quasimomentum`; the limit is the same wave
        operator, but every free wave packet moves at unit speed, so no
        slowly moving low-energy part lingers near the potential.
    check_tol : float, optional
        If given, the computation is repeated at ``2T`` and
        :class:`NotConverged` is raised when the ``ℓ²`` change exceeds it.

    Returns
    -------
    ndarray
        The averaged value on ``window``.
    """
    if box is None:
        box = max(512, 4 * window.radius)
    big = LatticeWindow(box)
    lam, U = np.linalg.eigh(h_matrix(V, big))
    lam0, U0 = np.linalg.eigh(bilaplacian_matrix(big))
    if generator == "quasimomentum":
        lam, lam0 = quasimomentum(lam), quasimomentum(lam0)
    elif generator != "bilaplacian":
        raise ValueError("generator must be 'bilaplacian' or 'quasimomentum'")
    g = np.zeros(big.size, dtype=complex)
    g[big.offset(window.indices)] = f
    c0 = U0.T @ g
    C = U.T @ U0

    def run(TT):
        G = _time_average_weights(lam[:, None] - lam0[None, :], TT, averaging)
        return (U @ ((C * G) @ c0))[big.offset(window.indices)]

    out = run(T)
    if check_tol is not None:
        out2 = run(2.0 * T)
        change = np.linalg.norm(out2 - out) / max(np.linalg.norm(out2), 1e-300)
        if change > check_tol:
            raise NotConverged(f"doubling T changed the oracle by {change:.2e} > {check_tol:.1e}")
    return out


# ac spectral projection on a truncated lattice

@dataclass
class ACSpectrum:
    window: LatticeWindow
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    retained: np.ndarray
    dropped_eigenvalues: np.ndarray

    def function_of(self, g, f: np.ndarray) -> np.ndarray:
        """``g(H) P_ac f`` for ``f`` on the box."""
        U = self.eigenvectors[:, self.retained]
        lam = self.eigenvalues[self.retained]
        return U @ (g(lam) * (U.conj().T @ f))

    def project(self, f: np.ndarray) -> np.ndarray:
        return self.function_of(lambda x: np.ones_like(x), f)


def ac_spectrum(V: Potential, box: int, delta: float = 1e-6, mass_fraction: float = 0.99,
                collar: int = 4) -> ACSpectrum:
    """Eigendecomposition of ``H`` on a box with bound states removed.

    Eigenvalues outside ``[-delta, 16 + delta]`` are dropped, and so is any
    in-band eigenvector carrying more than ``mass_fraction`` of its ``ℓ²`` mass
    within ``support_radius + collar`` of the origin.
    """
    big = LatticeWindow(box)
    lam, U = np.linalg.eigh(h_matrix(V, big))
    keep = (lam >= -delta) & (lam <= 16.0 + delta)
    near = np.abs(big.indices) <= V.support_radius + collar
    mass = (U[near, :] ** 2).sum(axis=0)
    keep &= ~(mass > mass_fraction)
    return ACSpectrum(big, lam, U, keep, lam[~keep])


def free_evolution(g: np.ndarray, t: float, window: LatticeWindow, margin: int | None = None) -> np.ndarray:
    """``e^{-itΔ²} g`` on ``window`` for ``g`` supported in ``window``.

    Computed on a padded box whose extra width exceeds the distance travelled
    at the largest group velocity of ``Δ²`` (about 10.4), so the box walls
    are not reached.
    """
    if margin is None:
        margin = int(np.ceil(11.0 * abs(t))) + 40
    big = LatticeWindow(window.radius + margin)
    n = big.size
    A = diags([np.ones(n - 2), -4 * np.ones(n - 1), 6 * np.ones(n), -4 * np.ones(n - 1), np.ones(n - 2)],
              [-2, -1, 0, 1, 2], format="csr").astype(complex)
    h = np.zeros(n, dtype=complex)
    h[big.offset(window.indices)] = g
    out = expm_multiply(-1j * t * A, h) if t != 0 else h
    return out[big.offset(window.indices)]


def intertwining_check(V: Potential, t: float, window: LatticeWindow,
                       cfg: QuadratureConfig | None = None, inner: int | None = None,
                       box: int | None = None, ac: ACSpectrum | None = None) -> float:
    """``‖e^{-itH} P_ac δ₀ - W e^{-itΔ²} W* δ₀‖₂`` on ``window``.

    ``W* δ₀`` is the conjugated row ``W(0, ·)``, taken on ``|m| <= inner``
    (default ``4 * window.radius``) so that its slowly decaying tail is kept.
    """
    inner = inner if inner is not None else 4 * window.radius
    big = LatticeWindow(inner)
    if box is None:
        box = max(512, 2 * inner + int(np.ceil(11.0 * abs(t))))
    if ac is None:
        ac = ac_spectrum(V, box)
    e0 = np.zeros(ac.window.size)
    e0[ac.window.offset(0)] = 1.0
    lhs = ac.function_of(lambda x: np.exp(-1j * t * x), e0)[ac.window.offset(window.indices)]

    row = stationary_wave_operator(V, cfg=cfg, rows=np.array([0]), cols=big.indices).entries[0]
    g = free_evolution(row.conj(), t, big)
    Wb = stationary_wave_operator(V, cfg=cfg, rows=window.indices, cols=big.indices).entries
    rhs = Wb @ g
    return float(np.linalg.norm(lhs - rhs))


# Endpoint growth

def endpoint_reference_sum(N: int) -> complex:
    """``((i-1)/4) Σ_{k=2}^{2N+2} 1/k + (1/2) Σ_{k=2}^{2N+2} (-1)^k / k``."""
    import math
    ks = range(2, 2 * N + 3)
    h = math.fsum(1.0 / k for k in ks)
    a = math.fsum((-1.0) ** k / k for k in ks)
    return complex(-0.25 * h + 0.5 * a, 0.25 * h)


def endpoint_growth_experiment(V: Potential, Ns=(8, 16, 32, 64, 128), probe_offset: int = 2,
                               cfg: QuadratureConfig | None = None, rows_factor: int = 16,
                               rows_margin: int = 64) -> dict:
    """Sup norm and edge value of ``W f_N`` for box indicators ``f_N = χ_[-N, N]``.

    ``W f_N`` is evaluated on ``|n| <= rows_factor * N + rows_margin``. The
    kernel of ``W - I`` decays only like ``1/|n|``, so the ``ℓ²`` ratio
    approaches 1 slowly as the row range grows.

    Returns
    -------
    dict
        ``table`` with one record per ``N`` and ``fit``, the least-squares line
        ``sup ≈ α ln N + β``.
    """
    table = []
    for N in Ns:
        w = LatticeWindow(int(N))
        rw = LatticeWindow(rows_factor * int(N) + rows_margin)
        Wf, diag = apply_wave_operator(V, np.ones(w.size), w, rw, cfg=cfg, return_diagnostics=True)
        table.append({
            "N": int(N),
            "sup": float(np.abs(Wf).max()),
            "edge": complex(Wf[rw.offset(N + probe_offset)]),
            "l2_ratio": float(np.linalg.norm(Wf) / np.sqrt(w.size)),
            "quadrature_error": diag["error"],
        })
    fit = fit_semilog([r["N"] for r in table], [r["sup"] for r in table])
    return {"table": table, "fit": fit}
