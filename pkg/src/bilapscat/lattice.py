"""Lattice windows, finitely supported potentials and the difference operators.

Sequences are plain numpy arrays laid out over a symmetric window
``{-N, ..., N}``; entry ``k`` of an array holds the value at site ``k - N``.
Values outside the window are treated as zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DegeneratePotential, PotentialFormatError

__all__ = [
    "LatticeWindow",
    "Potential",
    "apply_laplacian",
    "apply_bilaplacian",
    "apply_h",
    "bilaplacian_matrix",
    "h_matrix",
    "symbol",
    "parity",
    "char_fn",
    "weighted_norm",
    "delta",
    "load_potential",
    "delta_site",
    "resonance_example",
    "shifted_resonance_example",
    "sixteen_resonance_example",
    "first_kind_example",
]


@dataclass(frozen=True)
class LatticeWindow:
    """The index range ``{-radius, ..., radius}``."""

    radius: int

    def __post_init__(self):
        if int(self.radius) != self.radius or self.radius < 0:
            raise ValueError(f"window radius must be a non-negative integer, got {self.radius!r}")
        object.__setattr__(self, "radius", int(self.radius))

    @property
    def size(self) -> int:
        return 2 * self.radius + 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.radius, self.radius + 1)

    def offset(self, n):
        """Array position of lattice site ``n``."""
        return np.asarray(n) + self.radius

    def site(self, k):
        """Lattice site stored at array position ``k``."""
        return np.asarray(k) - self.radius

    def contains(self, n) -> bool:
        return bool(np.all(np.abs(np.asarray(n)) <= self.radius))

    def interior(self, collar: int = 2) -> slice:
        """Slice of array positions at distance ``>= collar`` from the edge."""
        return slice(collar, self.size - collar)

    @classmethod
    def covering(cls, sites, margin: int = 0) -> "LatticeWindow":
        """Smallest symmetric window containing ``sites`` plus ``margin``."""
        sites = np.asarray(list(sites), dtype=int)
        r = int(np.abs(sites).max()) if sites.size else 0
        return cls(r + margin)


@dataclass(frozen=True)
class Potential:
    """A finitely supported real potential ``V`` on the integers.

    Zero entries are dropped on construction, so ``support`` is exactly the set
    where ``V`` does not vanish.
    """

    entries: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for n, val in dict(self.entries).items():
            if int(n) != n:
                raise ValueError(f"lattice site must be an integer, got {n!r}")
            val = float(val)
            if not np.isfinite(val):
                raise ValueError(f"potential value at {n} is not finite")
            if val != 0.0:
                clean[int(n)] = val
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    @classmethod
    def from_array(cls, values, window: LatticeWindow) -> "Potential":
        values = np.asarray(values, dtype=float)
        return cls({int(n): v for n, v in zip(window.indices, values)})

    @property
    def support(self) -> np.ndarray:
        return np.fromiter(self.entries.keys(), dtype=int, count=len(self.entries))

    @property
    def values(self) -> np.ndarray:
        return np.fromiter(self.entries.values(), dtype=float, count=len(self.entries))

    @property
    def support_radius(self) -> int:
        return int(np.abs(self.support).max()) if self.entries else 0

    @property
    def l1_norm(self) -> float:
        return float(np.abs(self.values).sum())

    @property
    def is_zero(self) -> bool:
        return not self.entries

    def require_nonzero(self):
        if self.is_zero:
            raise DegeneratePotential("potential vanishes identically (||V||_1 = 0)")

    # Factorization V = v U v on the support.
    @property
    def v(self) -> np.ndarray:
        return np.sqrt(np.abs(self.values))

    @property
    def sign(self) -> np.ndarray:
        return np.sign(self.values)

    def v_moment(self, k: int) -> np.ndarray:
        """``n**k * v(n)`` on the support."""
        return self.support.astype(float) ** k * self.v

    @property
    def parity_signs(self) -> np.ndarray:
        return np.where(self.support % 2 == 0, 1.0, -1.0)

    @property
    def v_tilde(self) -> np.ndarray:
        """``(-1)**n * v(n)`` on the support."""
        return self.parity_signs * self.v

    def on_window(self, window: LatticeWindow) -> np.ndarray:
        out = np.zeros(window.size)
        for n, val in self.entries.items():
            if abs(n) <= window.radius:
                out[n + window.radius] = val
        return out

    def shifted(self, k: int) -> "Potential":
        """The translate ``V(. - k)``."""
        return Potential({n + k: val for n, val in self.entries.items()})

    def scaled(self, c: float) -> "Potential":
        return Potential({n: c * val for n, val in self.entries.items()})

    def to_text(self) -> str:
        return "".join(f"{n} {val!r}\n" for n, val in self.entries.items())


def load_potential(path) -> Potential:
    """Read a potential from a text file of ``n value`` lines.

    Blank lines and everything after ``#`` are ignored. Repeated indices are
    rejected.
    """
    entries: dict[int, float] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise PotentialFormatError(f"{path}:{lineno}: expected 'n value', got {raw!r}")
        try:
            n = int(parts[0])
            val = float(parts[1])
        except ValueError as exc:
            raise PotentialFormatError(f"{path}:{lineno}: {exc}") from None
        if n in entries:
            raise PotentialFormatError(f"{path}:{lineno}: duplicate index {n}")
        if not np.isfinite(val):
            raise PotentialFormatError(f"{path}:{lineno}: non-finite value")
        entries[n] = val
    return Potential(entries)


def _shift(f: np.ndarray, k: int) -> np.ndarray:
    """``g(n) = f(n + k)`` with zero fill."""
    g = np.zeros_like(f)
    if k > 0:
        g[:-k] = f[k:]
    elif k < 0:
        g[-k:] = f[:k]
    else:
        g[:] = f
    return g


def apply_laplacian(f) -> np.ndarray:
    """``(Δf)(n) = f(n+1) + f(n-1) - 2 f(n)``, with zero outside the window.

    Acts along the first axis, so a kernel ``K[n, m]`` is differenced in ``n``.
    """
    f = np.asarray(f)
    return _shift(f, 1) + _shift(f, -1) - 2 * f


def apply_bilaplacian(f) -> np.ndarray:
    """Five-point stencil ``(1, -4, 6, -4, 1)`` along the first axis."""
    f = np.asarray(f)
    return (_shift(f, 2) + _shift(f, -2)) - 4 * (_shift(f, 1) + _shift(f, -1)) + 6 * f


def apply_h(V, f, window: LatticeWindow | None = None) -> np.ndarray:
    """``Hf = Δ²f + V f``.

    ``V`` is either a :class:`Potential` (then ``window`` fixes the layout of
    ``f``) or an array already laid out like ``f``.
    """
    f = np.asarray(f)
    if isinstance(V, Potential):
        if window is None:
            window = LatticeWindow((f.shape[0] - 1) // 2)
        V = V.on_window(window)
    V = np.asarray(V, dtype=float)
    return apply_bilaplacian(f) + V.reshape(V.shape + (1,) * (f.ndim - 1)) * f


def bilaplacian_matrix(window: LatticeWindow) -> np.ndarray:
    """Dense Dirichlet-truncated matrix of Δ² on ``window``."""
    n = window.size
    A = 6.0 * np.eye(n)
    for k, c in ((1, -4.0), (2, 1.0)):
        A += c * (np.eye(n, k=k) + np.eye(n, k=-k))
    return A


def h_matrix(V: Potential, window: LatticeWindow) -> np.ndarray:
    return bilaplacian_matrix(window) + np.diag(V.on_window(window))


def symbol(x):
    """Fourier symbol of Δ², ``(2 - 2 cos x)**2``."""
    return (2.0 - 2.0 * np.cos(x)) ** 2


def parity(f, window: LatticeWindow | None = None) -> np.ndarray:
    """``(Jf)(n) = (-1)**n f(n)`` along the first axis."""
    f = np.asarray(f)
    if window is None:
        window = LatticeWindow((f.shape[0] - 1) // 2)
    s = np.where(window.indices % 2 == 0, 1.0, -1.0)
    return s.reshape((-1,) + (1,) * (f.ndim - 1)) * f


def char_fn(n_box: int, window: LatticeWindow) -> np.ndarray:
    """Indicator of ``[-n_box, n_box]`` on ``window``."""
    return (np.abs(window.indices) <= n_box).astype(float)


def delta(n: int, window: LatticeWindow) -> np.ndarray:
    e = np.zeros(window.size)
    e[window.offset(n)] = 1.0
    return e


def weighted_norm(f, s: float, window: LatticeWindow | None = None) -> float:
    """Norm in the weighted space with weight ``<n>**s``."""
    f = np.asarray(f)
    if window is None:
        window = LatticeWindow((f.shape[0] - 1) // 2)
    w = (1.0 + window.indices.astype(float) ** 2) ** s
    return float(np.sqrt(np.sum(w * np.abs(f) ** 2)))


# Reference potentials used throughout the tests and demos.

def delta_site(strength: float = 1.0, site: int = 0) -> Potential:
    return Potential({site: strength})


def resonance_example() -> Potential:
    """``V = -Δ²φ/φ`` for ``φ = 1 + δ₀``; zero is a resonance of ``Δ² + V``."""
    return Potential({-2: -1.0, -1: 4.0, 0: -3.0, 1: 4.0, 2: -1.0})


def shifted_resonance_example(window: LatticeWindow) -> np.ndarray:
    """``16 + resonance_example()`` laid out on ``window``; it does not decay, so it is an array."""
    return 16.0 + resonance_example().on_window(window)


def sixteen_resonance_example() -> Potential:
    """Compactly supported potential with a bounded solution of ``Hψ = 16ψ``.

    Here ``ψ = J(1 + δ₀)`` and ``V = -(Δ² - 16)ψ/ψ``, which reduces to
    ``-(Δ² + 8Δ)φ/φ`` for ``φ = 1 + δ₀``.
    """
    return Potential({-2: -1.0, -1: -4.0, 0: 5.0, 1: -4.0, 2: -1.0})


def first_kind_example(alpha: float = 1.0) -> Potential:
    """``V = -Δ²φ/φ`` for ``φ(n) = n + 1/2 + alpha δ₀(n)``.

    ``φ`` grows linearly, so zero is a resonance whose solution is not bounded.
    """
    window = LatticeWindow(4)
    n = window.indices.astype(float)
    phi = n + 0.5 + alpha * (n == 0)
    V = -apply_bilaplacian(phi) / phi
    V[:2] = 0.0
    V[-2:] = 0.0
    V[np.abs(V) < 1e-14] = 0.0
    return Potential.from_array(V, window)
