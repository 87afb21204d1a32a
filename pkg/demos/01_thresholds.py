"""Threshold classification of H = Δ² + V at the band edges 0 and 16.

Run: python3 demos/01_thresholds.py
"""
from pathlib import Path

import numpy as np

from bilapscat.lattice import load_potential
from bilapscat.threshold import build_zero_chain, classify

DATA = Path(__file__).parent / "data"

print("Each potential is read from a plain 'n value' text file.\n")
for name, threshold in [("delta.txt", "zero"), ("v1.txt", "zero"), ("delta.txt", "sixteen"),
                        ("sixteen.txt", "sixteen")]:
    V = load_potential(DATA / name)
    rep = classify(V, threshold)
    print(f"{name:12s} threshold {threshold:7s} -> {rep.classification}")
    if rep.phi is not None:
        W = rep.window
        phi = rep.phi / rep.phi[W.offset(W.radius)]
        print("   recovered solution near the origin:", np.round(phi[W.offset(-3):W.offset(4)], 10))
        print("   worst residual:", f"{max(rep.residuals.values()):.1e}")

chain = build_zero_chain(load_potential(DATA / "v1.txt"))
print("\nNull-space dimensions of the nested projections Q ⊇ S0 ⊇ S1 ⊇ S2 ⊇ S3 for the five-site potential:")
print("  ", [int(round(np.trace(chain.Q).real))] + [b.shape[1] for b in chain.bases])
print("A nonzero S2 with empty S3 is what makes zero a resonance of the second kind.")
