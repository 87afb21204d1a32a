"""The stationary wave operator W₊ for a single-site potential.

Run: python3 demos/03_wave_operator.py
"""
import numpy as np

from bilapscat.lattice import LatticeWindow, delta, delta_site
from bilapscat.waveop import intertwining_check, stationary_wave_operator, time_dependent_wave_oracle

V = delta_site()
W = LatticeWindow(64)
K = stationary_wave_operator(V, W)
print("Kernel W(n, m) on |n|, |m| <= 64, quadrature error estimate",
      f"{K.diagnostics['error']:.1e}")

f = delta(0, W)
Wf = K.apply(f)
print(f"‖W δ₀‖ / ‖δ₀‖ = {np.linalg.norm(Wf):.4f}  (W is an isometry)")

print("\nCross-check against the time-averaged limit of e^{itH} e^{-itΔ²} on a Dirichlet box.")
for gen in ("quasimomentum", "bilaplacian"):
    out = time_dependent_wave_oracle(V, f, W, T=400, box=512, generator=gen)
    print(f"  generator {gen:13s}: relative ℓ² difference {np.linalg.norm(out - Wf) / np.linalg.norm(Wf):.2e}")
print("The free group velocity of Δ² vanishes at both band edges, so the literal")
print("generator converges only slowly in T. Replacing Δ² by the quasimomentum of")
print("the same spectral measure gives the same wave operator with unit speed.")

print("\nIntertwining e^{-itH} W = W e^{-itΔ²}:")
for t in (0.0, 5.0):
    print(f"  t = {t:g}: discrepancy {intertwining_check(V, t, LatticeWindow(16), inner=128):.1e}")
