"""Truncated discrete Hilbert-type kernels: ℓ² bounded, not Schur, ℓ¹ unbounded.

Run: python3 demos/06_singular_integrals.py
"""
from bilapscat.lattice import LatticeWindow
from bilapscat.singular import lp_norm_estimate, reflection_identity_check, schur_doubling

print("Folding identities expressing k1±, k2± through kt1, kt2± (max residual on |n| <= 64):")
for k in ("k1+", "k1-", "k2+", "k2-"):
    print(f"  {k}: {reflection_identity_check(k, LatticeWindow(64)):.1e}")

print(f"\n{'N':>5s} {'ℓ² norm':>9s} {'ℓ¹ norm':>9s} {'ℓ³ (lower)':>11s}")
for N in (128, 256, 512, 1024):
    W = LatticeWindow(N)
    n2 = lp_norm_estimate("kt1", 2, W).estimate
    n1 = lp_norm_estimate("kt1", 1, W).estimate
    n3 = lp_norm_estimate("kt1", 3, W).estimate if N <= 512 else float("nan")
    print(f"{N:5d} {n2:9.4f} {n1:9.4f} {n3:11.4f}")
print("The ℓ² norm settles below π; the ℓ¹ norm grows by 2 ln 2 per doubling.")

for k in ("schur-probe", "kt1"):
    d = schur_doubling(k, 512)
    print(f"\nSchur sums for {k}: {d['small']['rowSup']:.4f} -> {d['large']['rowSup']:.4f}"
          f" ({'stable' if d['stable'] else 'growing'})")
