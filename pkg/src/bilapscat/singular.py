"""Discrete Calderón-Zygmund kernels, their reflection identities and norm estimates.

Kernels on ``ℤ × ℤ``, all cut off near their singular sets by a smooth
``φ`` with ``φ(s) = 0`` for ``s <= 1`` and ``φ(s) = 1`` for ``s >= 2``:

========  ==========================================
id        kernel
========  ==========================================
k1+       ``φ((|n| + |m|)²) / (|n| + |m|)``
k1-       ``φ((|n| - |m|)²) / (|n| - |m|)``
k2+       ``φ((|n| - |m|)²) / (|n| + i|m|)``
k2-       ``φ((|n| - |m|)²) / (|n| - i|m|)``
kt1       ``φ((n - m)²) / (n - m)``
kt2+      ``φ((n - m)²) / (n + im)``
kt2-      ``φ((n - m)²) / (n - im)``
schur-probe  ``(1 + (|n| - |m|)²)^{-1}``
========  ==========================================

The radial kernels ``k1±`` and ``k2±`` reduce to the convolution-type kernels
``kt1`` and ``kt2±`` by folding ``n ↦ -n`` (see :func:`reflection_identity_check`).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotConverged
from .lattice import LatticeWindow

__all__ = [
    "KERNEL_IDS",
    "cutoff_phi",
    "cz_kernel",
    "cz_matrix",
    "reflection_identity_check",
    "SchurResult",
    "schur_test",
    "schur_doubling",
    "LpEstimate",
    "lp_norm_estimate",
]

KERNEL_IDS = ("k1+", "k1-", "k2+", "k2-", "kt1", "kt2+", "kt2-", "schur-probe")


def cutoff_phi(s):
    """Quintic smoothstep: 0 on ``s <= 1``, 1 on ``s >= 2``, ``C²`` in between."""
    u = np.clip(np.asarray(s, dtype=float) - 1.0, 0.0, 1.0)
    return u**3 * (10.0 - 15.0 * u + 6.0 * u * u)


def _ratio(num, den):
    # num vanishes wherever |den| <= 1 for every kernel in the table
    den = np.asarray(den)
    safe = np.where(num == 0, 1.0, den)
    return np.where(num == 0, 0.0, num / safe)


def cz_kernel(kid: str, n, m):
    """Value of kernel ``kid`` at ``(n, m)``; broadcasts over arrays.

    Raises
    ------
    ValueError
        If ``kid`` is not one of :data:`KERNEL_IDS`.
    """
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    an, am = np.abs(n), np.abs(m)
    if kid == "k1+":
        return _ratio(cutoff_phi((an + am) ** 2), an + am)
    if kid == "k1-":
        return _ratio(cutoff_phi((an - am) ** 2), an - am)
    if kid == "k2+":
        return _ratio(cutoff_phi((an - am) ** 2).astype(complex), an + 1j * am)
    if kid == "k2-":
        return _ratio(cutoff_phi((an - am) ** 2).astype(complex), an - 1j * am)
    if kid == "kt1":
        return _ratio(cutoff_phi((n - m) ** 2), n - m)
    if kid == "kt2+":
        return _ratio(cutoff_phi((n - m) ** 2).astype(complex), n + 1j * m)
    if kid == "kt2-":
        return _ratio(cutoff_phi((n - m) ** 2).astype(complex), n - 1j * m)
    if kid == "schur-probe":
        return 1.0 / (1.0 + (an - am) ** 2)
    raise ValueError(f"unknown kernel id {kid!r}; expected one of {KERNEL_IDS}")


def cz_matrix(kid: str, window: LatticeWindow) -> np.ndarray:
    """Kernel ``kid`` restricted to ``window × window``."""
    idx = window.indices
    return cz_kernel(kid, idx[:, None], idx[None, :])


def reflection_identity_check(kid: str, window: LatticeWindow) -> float:
    """Max residual of the folding identities on ``window``, over ``n, m ≠ 0``.

    With ``χ±`` the indicators of ``±n > 0`` and ``(τf)(n) = f(-n)``:

    * ``k1± = (χ₊ kt1 χ∓ - χ₋ kt1 χ±)(1 + τ)``
    * ``k2± = (χ₊ kt2± χ₊ - χ₋ kt2± χ₋)(1 + τ)``

    Both sides are applied to every ``δ_m`` with ``m ≠ 0`` and compared on rows
    ``n ≠ 0``. At ``n = 0`` or ``m = 0`` the folded form drops the self-reflected
    site, so those rows and columns are excluded.
    """
    if window.radius < 16:
        raise ValueError("window radius must be at least 16")
    if kid not in ("k1+", "k1-", "k2+", "k2-"):
        raise ValueError("reflection identities exist for k1± and k2± only")
    idx = window.indices
    pos = np.diag((idx > 0).astype(float))
    neg = np.diag((idx < 0).astype(float))
    tau = np.eye(idx.size)[::-1]
    if kid.startswith("k1"):
        T = cz_matrix("kt1", window)
        same, other = (neg, pos) if kid == "k1+" else (pos, neg)
        rhs = (pos @ T @ same - neg @ T @ other) @ (np.eye(idx.size) + tau)
    else:
        T = cz_matrix("kt2" + kid[-1], window)
        rhs = (pos @ T @ pos - neg @ T @ neg) @ (np.eye(idx.size) + tau)
    lhs = cz_matrix(kid, window)
    keep = idx != 0
    return float(np.abs(lhs - rhs)[np.ix_(keep, keep)].max())


@dataclass(frozen=True)
class SchurResult:
    row_sup: float
    col_sup: float
    bound: float
    passes: bool

    def to_dict(self) -> dict:
        return {"rowSup": self.row_sup, "colSup": self.col_sup,
                "bound": self.bound, "passes": self.passes}


def schur_test(K, bound: float = np.inf) -> SchurResult:
    """Row and column ``ℓ¹`` suprema of the kernel matrix ``K``.

    Passes when ``row_sup + col_sup <= bound``; then ``K`` is bounded on every
    ``ℓᵖ`` with norm at most ``max(row_sup, col_sup)``.
    """
    A = np.abs(np.asarray(K))
    if A.size == 0:
        return SchurResult(0.0, 0.0, bound, True)
    r = float(A.sum(axis=1).max())
    c = float(A.sum(axis=0).max())
    return SchurResult(r, c, bound, r + c <= bound)


def schur_doubling(kid: str, radius: int, rtol: float = 0.02) -> dict:
    """Schur sums at ``radius`` and ``2 * radius``; stable if they change by < ``rtol``.

    A kernel whose row sums keep growing under window doubling is not a Schur
    kernel on ``ℤ``.
    """
    a = schur_test(cz_matrix(kid, LatticeWindow(radius)))
    b = schur_test(cz_matrix(kid, LatticeWindow(2 * radius)))
    change = max(abs(b.row_sup - a.row_sup) / a.row_sup,
                 abs(b.col_sup - a.col_sup) / a.col_sup) if a.row_sup > 0 else 0.0
    return {"radius": radius, "small": a.to_dict(), "large": b.to_dict(),
            "relativeChange": change, "stable": bool(change < rtol)}


@dataclass(frozen=True)
class LpEstimate:
    p: float
    radius: int
    estimate: float
    lower_bound_only: bool
    iterations: int

    def to_csv_row(self) -> list:
        return [self.radius, self.p, self.estimate, self.lower_bound_only]


def _dual(y, p: float):
    # the unit-ℓ^{p'} vector norming y in ℓᵖ
    a = np.abs(y)
    nrm = np.linalg.norm(y, p)
    if nrm == 0:
        return np.zeros_like(y)
    ph = np.where(a > 0, y / np.where(a > 0, a, 1.0), 0.0)
    return ph * (a / nrm) ** (p - 1.0)


def _power_two(K, tol: float, maxiter: int, rng) -> tuple[float, int]:
    x = rng.standard_normal(K.shape[1]).astype(K.dtype)
    x /= np.linalg.norm(x)
    KH = np.ascontiguousarray(K.conj().T)
    est = 0.0
    for it in range(1, maxiter + 1):
        y = KH @ (K @ x)
        lam = np.linalg.norm(y)
        if lam == 0:
            return 0.0, it
        x = y / lam
        new = np.sqrt(lam)
        if abs(new - est) <= tol * new:
            return float(new), it
        est = new
    raise NotConverged(f"power iteration did not reach rtol {tol} in {maxiter} steps")


def _boyd(K, p: float, x, maxiter: int = 100) -> tuple[float, int]:
    q = p / (p - 1.0)
    x = x / np.linalg.norm(x, p)
    best = 0.0
    for it in range(1, maxiter + 1):
        y = K @ x
        best = max(best, float(np.linalg.norm(y, p)))
        z = K.conj().T @ _dual(y, p)
        if np.linalg.norm(z, q) <= np.real(np.vdot(z, x)) * (1 + 1e-12):
            return best, it
        x = _dual(z, q)
    return best, maxiter


def lp_norm_estimate(kernel, p: float, window: LatticeWindow, probes: int = 32,
                     seed: int = 0, tol: float = 1e-8, maxiter: int = 200000) -> LpEstimate:
    """Operator norm of ``kernel`` on ``ℓᵖ(window)``.

    ``kernel`` is a kernel id or an explicit square matrix on ``window``.

    * ``p = 1`` and ``p = ∞``: exact column and row ``ℓ¹`` maxima.
    * ``p = 2``: power iteration on ``K*K`` to relative change ``tol``.
    * otherwise: the best of ``probes`` random ``±1`` and single-site probes,
      each refined by Boyd's ``p``-norm power method; a lower bound only.

    Raises
    ------
    NotConverged
        If the ``p = 2`` iteration does not settle within ``maxiter`` steps.
    """
    if not 1.0 <= p <= np.inf:
        raise ValueError("p must lie in [1, inf]")
    if probes < 32:
        raise ValueError("need at least 32 probes")
    K = cz_matrix(kernel, window) if isinstance(kernel, str) else np.asarray(kernel)
    if p == 1:
        return LpEstimate(p, window.radius, float(np.abs(K).sum(axis=0).max()), False, 0)
    if np.isinf(p):
        return LpEstimate(p, window.radius, float(np.abs(K).sum(axis=1).max()), False, 0)
    rng = np.random.default_rng(seed)
    if p == 2:
        est, it = _power_two(K, tol, maxiter, rng)
        return LpEstimate(p, window.radius, est, False, it)
    n = K.shape[1]
    cands = [rng.choice([-1.0, 1.0], n) + 0j for _ in range(probes // 2)]
    cands += [np.eye(n)[j] + 0j for j in rng.choice(n, probes - probes // 2, replace=False)]
    scores = [np.linalg.norm(K @ c, p) / np.linalg.norm(c, p) for c in cands]
    order = np.argsort(scores)[::-1][:4]
    best, its = max(scores), 0
    for j in order:
        val, it = _boyd(K, p, cands[j])
        best, its = max(best, val), its + it
    return LpEstimate(p, window.radius, float(best), True, its)
