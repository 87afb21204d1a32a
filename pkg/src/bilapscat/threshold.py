"""Threshold kernels and the resonance classification at 0 and 16.

Every operator in the classification is sandwiched between copies of ``v``
or acts on a subspace of functions supported on ``supp V``, so all matrices
below live on the finite index set ``supp V`` and the computation is exact up
to rounding.

Null spaces are decided by singular values relative to a scale. A singular
value ``s`` counts as zero when ``s < tol * scale``. Values in the gray band
``tol * scale <= s < 100 * tol * scale`` raise :class:`IllConditioned` rather
than being decided silently.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import IllConditioned, NotFundamentalSolution
from .lattice import LatticeWindow, Potential, apply_bilaplacian, apply_h

__all__ = [
    "KERNEL_IDS",
    "kernel_value",
    "threshold_kernel",
    "kernel_on_sites",
    "check_fundamental_solution",
    "ZeroChain",
    "SixteenChain",
    "ResonanceReport",
    "build_zero_chain",
    "build_sixteen_chain",
    "classify",
    "DEFAULT_TOL",
    "GRAY_FACTOR",
]

DEFAULT_TOL = 1e-8
GRAY_FACTOR = 100.0

_R = 2.0 * np.sqrt(2.0) - 3.0
_SQ2 = np.sqrt(2.0)


def _pow_r(d):
    # (2√2 - 3)**d for integer d >= 0; the base is negative
    return _R ** np.asarray(d, dtype=np.int64)


def _gm1(d):
    return 1.0 / 8.0 - 0.5 * d**2


def _g0(d):
    return (d**3 - d) / 12.0


def _g1(d):
    return d**4 / 3.0 - 5.0 * d**2 / 6.0 + 3.0 / 16.0


def _g3(d):
    return d**6 - 35.0 * d**4 / 4.0 + 259.0 * d**2 / 16.0 - 225.0 / 64.0


def _gt0(d):
    return (2.0 * _SQ2 * d - _pow_r(d)) / (32.0 * _SQ2)


def _gt1(d):
    return 2.0 * d**2 - 13.0 / 8.0


def _gt2(d):
    return (-(d**3) / 24.0 + 5.0 * d / 48.0
            - _pow_r(d) * (_SQ2 * d / 2.0 - 1.0 / 8.0 + 15.0 / (256.0 * _SQ2)))


_KERNELS = {
    "G-1": _gm1,
    "G0": _g0,
    "G1": _g1,
    "G3": _g3,
    "Gt0": _gt0,
    "Gt1": _gt1,
    "Gt2": _gt2,
}
KERNEL_IDS = tuple(_KERNELS)


def kernel_value(kid: str, d):
    """Evaluate kernel ``kid`` at distance ``d = |n - m|`` (integer, >= 0)."""
    try:
        fn = _KERNELS[kid]
    except KeyError:
        raise ValueError(f"unknown kernel id {kid!r}; expected one of {KERNEL_IDS}") from None
    d = np.abs(np.asarray(d, dtype=np.int64))
    return fn(d.astype(float)) if kid not in ("Gt0", "Gt2") else fn(d)


def kernel_on_sites(kid: str, rows, cols=None) -> np.ndarray:
    """Matrix ``K(n, m)`` for ``n`` in ``rows`` and ``m`` in ``cols``."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = rows if cols is None else np.asarray(cols, dtype=np.int64)
    return kernel_value(kid, rows[:, None] - cols[None, :])


def threshold_kernel(kid: str, window: LatticeWindow) -> np.ndarray:
    """Dense matrix of kernel ``kid`` on ``window``."""
    return kernel_on_sites(kid, window.indices)


def check_fundamental_solution(kid: str, window: LatticeWindow) -> float:
    """Largest interior deviation of ``Δ²G₀`` (or ``(Δ² - 16)JG̃₀J``) from ``δ``.

    Rows within two sites of the window edge are excluded because the stencil
    reaches outside the window there.
    """
    if kid not in ("G0", "Gt0"):
        raise NotFundamentalSolution(f"{kid} is not a fundamental solution; use 'G0' or 'Gt0'")
    if window.radius < 8:
        raise ValueError("window radius must be at least 8")
    K = threshold_kernel(kid, window)
    if kid == "G0":
        R = apply_bilaplacian(K)
    else:
        s = np.where(window.indices % 2 == 0, 1.0, -1.0)
        JKJ = s[:, None] * K * s[None, :]
        R = apply_bilaplacian(JKJ) - 16.0 * JKJ
    R = R - np.eye(window.size)
    inner = window.interior(2)
    return float(np.abs(R[inner, :]).max())


# Null-space machinery

def _orth_complement(vectors: np.ndarray, n: int) -> np.ndarray:
    """Orthonormal basis of the orthogonal complement of the columns."""
    if vectors.size == 0:
        return np.eye(n)
    return sla.null_space(np.atleast_2d(vectors).T.conj(), rcond=1e-12)


def _kernel_basis(A: np.ndarray, basis: np.ndarray, tol: float, level: str):
    """Null space of ``A`` restricted to the span of ``basis``.

    Returns ``(null_basis, singular_values, scale)``.
    """
    if basis.shape[1] == 0:
        return basis, np.zeros(0), 0.0
    R = basis.conj().T @ A @ basis
    _, s, vh = np.linalg.svd(R)
    scale = max(float(s.max()), float(np.linalg.norm(A, 2)), np.finfo(float).tiny)
    null = s < tol * scale
    gray = (~null) & (s < GRAY_FACTOR * tol * scale)
    if gray.any():
        raise IllConditioned(
            f"{level}: singular value {s[gray].min():.3e} within gray band "
            f"[{tol * scale:.3e}, {GRAY_FACTOR * tol * scale:.3e})",
            singular_values=s, level=level)
    N = basis @ vh[null].conj().T
    return N, s, scale


def _proj(B: np.ndarray) -> np.ndarray:
    return B @ B.conj().T


def _inverse_on(A: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Inverse of ``A`` on ``span(basis)``, extended by zero on the complement."""
    if basis.shape[1] == 0:
        return np.zeros_like(A)
    R = basis.conj().T @ A @ basis
    return basis @ np.linalg.solve(R, basis.conj().T)


@dataclass
class _Decision:
    level: str
    singular_values: np.ndarray
    scale: float
    null_dim: int


@dataclass
class ZeroChain:
    """Projections and operators of the zero-threshold inversion chain.

    All arrays are indexed by ``sites`` (the support of ``V``).
    """

    sites: np.ndarray
    v: np.ndarray
    U: np.ndarray
    norm_v: float
    P: np.ndarray
    Q: np.ndarray
    T: np.ndarray
    D0: np.ndarray
    S: list = field(default_factory=list)       # S0, S1, S2, S3
    bases: list = field(default_factory=list)   # orthonormal bases of S0..S3
    ops: dict = field(default_factory=dict)     # T0, T1, T2, D2, QvGm1vQ
    decisions: list = field(default_factory=list)
    tol: float = DEFAULT_TOL

    def v_moment(self, k: int) -> np.ndarray:
        return self.sites.astype(float) ** k * self.v


@dataclass
class SixteenChain:
    sites: np.ndarray
    v: np.ndarray
    vt: np.ndarray
    U: np.ndarray
    norm_v: float
    P: np.ndarray
    Q: np.ndarray
    T: np.ndarray
    S: list = field(default_factory=list)       # S̃0, S̃1, S̃2
    bases: list = field(default_factory=list)
    ops: dict = field(default_factory=dict)
    decisions: list = field(default_factory=list)
    tol: float = DEFAULT_TOL


def _sandwich(kid: str, sites, w) -> np.ndarray:
    return w[:, None] * kernel_on_sites(kid, sites) * w[None, :]


def build_zero_chain(V: Potential, tol: float = DEFAULT_TOL) -> ZeroChain:
    """Assemble ``P, Q, S₀..S₃, T, T₀..T₂, D₀, D₂`` on ``supp V``."""
    V.require_nonzero()
    sites, v, U = V.support, V.v, V.sign
    n = sites.size
    nv = V.l1_norm
    P = np.outer(v, v) / nv
    Q = np.eye(n) - P
    Gm1 = _sandwich("G-1", sites, v)
    G1 = _sandwich("G1", sites, v)
    G3 = _sandwich("G3", sites, v)
    T = np.diag(U) + _sandwich("G0", sites, v)

    BQ = _orth_complement(v[:, None], n)
    QGQ = Q @ Gm1 @ Q
    chain = ZeroChain(sites=sites, v=v, U=U, norm_v=nv, P=P, Q=Q, T=T,
                      D0=np.zeros((n, n)), tol=tol)

    B0, s, sc = _kernel_basis(QGQ, BQ, tol, "S0")
    chain.decisions.append(_Decision("S0", s, sc, B0.shape[1]))
    S0 = _proj(B0)
    D0 = _inverse_on(QGQ + S0, BQ)
    chain.D0 = D0
    chain.ops["QvGm1vQ"] = QGQ

    chain.ops["T0"] = S0 @ T @ S0
    B1, s, sc = _kernel_basis(T, B0, tol, "S1")
    chain.decisions.append(_Decision("S1", s, sc, B1.shape[1]))
    S1 = _proj(B1)

    A1 = G1 + (8.0 / nv) * Gm1 @ P @ Gm1 + 64.0 * T @ D0 @ T
    chain.ops["T1"] = S1 @ A1 @ S1
    B2, s, sc = _kernel_basis(A1, B1, tol, "S2")
    chain.decisions.append(_Decision("S2", s, sc, B2.shape[1]))
    S2 = _proj(B2)
    D2 = _inverse_on(A1 + S2, B1)
    chain.ops["D2"] = D2

    left = T @ Gm1 @ D0 - (nv / 8.0) * G1 @ D0 @ T @ D0
    right = D0 @ Gm1 @ T - (nv / 8.0) * D0 @ T @ D0 @ G1
    A2 = ((G3 - (8.0 * 720.0 / nv) * T @ T - (720.0 / 64.0) * G1 @ D0 @ G1) / 720.0
          + (64.0 / nv**2) * left @ D2 @ right)
    chain.ops["T2"] = S2 @ A2 @ S2
    B3, s, sc = _kernel_basis(A2, B2, tol, "S3")
    chain.decisions.append(_Decision("S3", s, sc, B3.shape[1]))
    S3 = _proj(B3)

    chain.S = [S0, S1, S2, S3]
    chain.bases = [B0, B1, B2, B3]
    return chain


def build_sixteen_chain(V: Potential, tol: float = DEFAULT_TOL) -> SixteenChain:
    """Assemble ``P̃, Q̃, S̃₀..S̃₂, T̃, T̃₀..T̃₂`` on ``supp V``."""
    V.require_nonzero()
    sites, v, U = V.support, V.v, V.sign
    vt = V.v_tilde
    n = sites.size
    nv = V.l1_norm
    P = np.outer(vt, vt) / nv
    Q = np.eye(n) - P
    T = np.diag(U) + _sandwich("Gt0", sites, vt)
    G1 = _sandwich("Gt1", sites, vt)
    G2 = _sandwich("Gt2", sites, vt)
    chain = SixteenChain(sites=sites, v=v, vt=vt, U=U, norm_v=nv, P=P, Q=Q, T=T, tol=tol)

    BQ = _orth_complement(vt[:, None], n)
    chain.ops["T0"] = Q @ T @ Q
    B0, s, sc = _kernel_basis(Q @ T @ Q, BQ, tol, "St0")
    chain.decisions.append(_Decision("St0", s, sc, B0.shape[1]))
    S0 = _proj(B0)

    A1 = G1 + (32.0 / nv) * T @ T
    chain.ops["T1"] = S0 @ A1 @ S0
    B1, s, sc = _kernel_basis(A1, B0, tol, "St1")
    chain.decisions.append(_Decision("St1", s, sc, B1.shape[1]))
    S1 = _proj(B1)

    chain.ops["T2"] = S1 @ G2 @ S1
    B2, s, sc = _kernel_basis(G2, B1, tol, "St2")
    chain.decisions.append(_Decision("St2", s, sc, B2.shape[1]))
    S2 = _proj(B2)

    chain.S = [S0, S1, S2]
    chain.bases = [B0, B1, B2]
    return chain


# Classification and recovery

ZERO_CLASSES = ("Regular", "FirstKindResonance", "SecondKindResonance", "Eigenvalue")
SIXTEEN_CLASSES = ("Regular", "Resonance", "Eigenvalue")


@dataclass
class ResonanceReport:
    threshold: str
    classification: str
    tol: float
    singular_values: dict
    scales: dict
    phi: np.ndarray | None = None
    window: LatticeWindow | None = None
    f: np.ndarray | None = None
    residuals: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "classification": self.classification,
            "nullTolerance": self.tol,
            "singularValues": {k: np.asarray(s).tolist() for k, s in self.singular_values.items()},
            "scales": dict(self.scales),
            "residuals": {k: float(r) for k, r in self.residuals.items()},
            "warnings": list(self.warnings),
            "phiWindowRadius": None if self.window is None else self.window.radius,
            "phi": None if self.phi is None else np.asarray(self.phi).tolist(),
        }


def _spread(sites, values, window: LatticeWindow) -> np.ndarray:
    out = np.zeros(window.size, dtype=np.result_type(values, float))
    out[window.offset(sites)] = values
    return out


def _normalize(phi: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(phi)))
    return phi / phi[k] * np.abs(phi[k]) / np.abs(phi).max()


def _recover_zero(chain: ZeroChain, kind: str, window: LatticeWindow):
    B = {"FirstKindResonance": chain.bases[1], "SecondKindResonance": chain.bases[2],
         "Eigenvalue": chain.bases[3]}[kind]
    if kind == "FirstKindResonance":
        # pick a direction of S1 outside S2, if any
        B2 = chain.bases[2]
        if B2.shape[1]:
            C = B - B2 @ (B2.T @ B)
            j = int(np.argmax(np.linalg.norm(C, axis=0)))
            f = C[:, j] / np.linalg.norm(C[:, j])
        else:
            f = B[:, 0]
    else:
        f = B[:, 0]
    sites, v, nv = chain.sites, chain.v, chain.norm_v
    n = window.indices
    G0vf = kernel_on_sites("G0", n, sites) @ (v * f)
    Tf = chain.T @ f
    if kind == "FirstKindResonance":
        v1 = chain.v_moment(1)
        vp = v1 - (v1 @ v) / nv * v
        c1 = (Tf @ vp) / (vp @ vp)
        c2 = (Tf @ v) / nv - (v1 @ v) / nv * c1
        phi = -G0vf + c1 * n + c2
    elif kind == "SecondKindResonance":
        phi = -G0vf + (Tf @ v) / nv
    else:
        phi = -G0vf
    return f, phi


def _recover_sixteen(chain: SixteenChain, kind: str, window: LatticeWindow):
    f = (chain.bases[0] if kind == "Resonance" else chain.bases[1])[:, 0]
    sites, vt, nv = chain.sites, chain.vt, chain.norm_v
    n = window.indices
    J = np.where(n % 2 == 0, 1.0, -1.0)
    Gvf = kernel_on_sites("Gt0", n, sites) @ (vt * f)
    phi = -J * Gvf
    if kind == "Resonance":
        phi = phi + J * ((chain.T @ f) @ vt) / nv
    return f, phi


def classify(V: Potential, threshold: str = "zero", tol: float = DEFAULT_TOL,
             window: LatticeWindow | None = None) -> ResonanceReport:
    """Classify threshold ``0`` or ``16`` of ``Δ² + V`` and recover ``φ``.

    Parameters
    ----------
    V : Potential
        Nonzero, finitely supported.
    threshold : {"zero", "sixteen"}
    tol : float
        Relative null-space tolerance.
    window : LatticeWindow, optional
        Where the resonance function is reported. Defaults to radius
        ``support_radius + 64``.

    Returns
    -------
    ResonanceReport
        When the threshold is not regular, ``phi`` holds a solution of
        ``Hφ = λφ`` normalized to unit sup norm, and ``residuals`` records the
        equation residual together with the orthogonality relations satisfied
        by ``f = Uvφ``.
    """
    if threshold not in ("zero", "sixteen"):
        raise ValueError(f"threshold must be 'zero' or 'sixteen', got {threshold!r}")
    if window is None:
        window = LatticeWindow(V.support_radius + 64)
    if threshold == "zero":
        chain = build_zero_chain(V, tol)
        dims = [d.null_dim for d in chain.decisions]
        if dims[1] == 0:
            kind = "Regular"
        elif dims[2] == 0:
            kind = "FirstKindResonance"
        elif dims[3] == 0:
            kind = "SecondKindResonance"
        else:
            kind = "Eigenvalue"
        lam = 0.0
    else:
        chain = build_sixteen_chain(V, tol)
        dims = [d.null_dim for d in chain.decisions]
        if dims[0] == 0:
            kind = "Regular"
        elif dims[1] == 0:
            kind = "Resonance"
        else:
            kind = "Eigenvalue"
        lam = 16.0
    report = ResonanceReport(
        threshold=threshold, classification=kind, tol=tol,
        singular_values={d.level: d.singular_values for d in chain.decisions},
        scales={d.level: d.scale for d in chain.decisions})
    if threshold == "zero" and dims[3]:
        report.warnings.append("S3 is nonzero; zero is expected not to be an eigenvalue")
    if threshold == "sixteen" and dims[2]:
        report.warnings.append("S~2 is nonzero; the sixteen chain is expected to terminate")
    for msg in report.warnings:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    if kind == "Regular":
        return report

    if threshold == "zero":
        f, phi = _recover_zero(chain, kind, window)
    else:
        f, phi = _recover_sixteen(chain, kind, window)
    k = int(np.argmax(np.abs(phi)))
    phi_n = _normalize(phi)
    c = phi_n[k] / phi[k]
    resid = apply_h(V, phi_n, window) - lam * phi_n
    inner = window.interior(2)
    report.residuals["equation"] = float(np.abs(resid[inner]).max())
    Uvphi = chain.U * chain.v * phi[window.offset(chain.sites)]
    report.residuals["f_eq_Uvphi"] = float(np.abs(Uvphi - f).max())
    if threshold == "zero":
        n_orth = {"FirstKindResonance": 2, "SecondKindResonance": 3, "Eigenvalue": 4}[kind]
        for k in range(n_orth):
            report.residuals[f"orth_v{k}"] = float(abs(f @ chain.v_moment(k)))
        Tf = chain.T @ f
        if kind != "FirstKindResonance":
            report.residuals["QTf"] = float(np.abs(chain.Q @ Tf).max())
        else:
            report.residuals["S0Tf"] = float(np.abs(chain.S[0] @ Tf).max())
    else:
        report.residuals["orth_vt0"] = float(abs(f @ chain.vt))
        report.residuals["QtTtf"] = float(np.abs(chain.Q @ chain.T @ f).max())
    report.phi = phi_n
    report.f = f * c
    report.window = window
    return report
