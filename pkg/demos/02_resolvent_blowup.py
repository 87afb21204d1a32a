"""How fast the inverse of M(μ) = U + v R₀⁺(μ⁴) v blows up near each threshold.

Run: python3 demos/02_resolvent_blowup.py
"""
from pathlib import Path

from bilapscat.lattice import load_potential
from bilapscat.mmatrix import blowup_probe, cancellation_order_probe

DATA = Path(__file__).parent / "data"
V1 = load_potential(DATA / "v1.txt")
V16 = load_potential(DATA / "sixteen.txt")
single = load_potential(DATA / "delta.txt")

print("Fitted exponent of ‖M⁻¹‖ against the distance to the threshold:\n")
for label, V, th in [("single site", single, "zero"), ("five-site, 0", V1, "zero"),
                     ("single site", single, "sixteen"), ("five-site, 16", V16, "sixteen")]:
    r = blowup_probe(V, th)
    print(f"  {label:14s} at {th:7s}: {r.exponent:+.3f}  (extended precision dps={r.dps})")

print("\nA single site has no threshold null space, so M⁻¹ = 1/M vanishes like μ³ at 0")
print("and like (2 - μ)^{1/2} at 16, following the free kernel R₀ itself.")
print("The resonant potentials show the singular orders -3 and -1/2.\n")

print("Cancellation: R₀⁺ v Π shrinks as Π moves down the projection chain.")
for which in ("vQ", "vS0", "vS2"):
    _, _, fit = cancellation_order_probe(V1, which)
    print(f"  {which:4s} order {fit.slope:+.3f}")
