"""W₊ is not bounded on ℓ^∞: box indicators grow logarithmically.

Run: python3 demos/04_endpoint_growth.py   (about 30 s)
"""
import numpy as np

from bilapscat.lattice import delta_site
from bilapscat.waveop import endpoint_growth_experiment, endpoint_reference_sum

res = endpoint_growth_experiment(delta_site(), (8, 16, 32, 64, 128))
print(f"{'N':>5s} {'sup|W f_N|':>12s} {'ℓ² ratio':>10s}")
for r in res["table"]:
    print(f"{r['N']:5d} {r['sup']:12.6f} {r['l2_ratio']:10.4f}")
fit = res["fit"]
print(f"\nsup ≈ {fit.slope:.4f} ln N + {fit.intercept:.4f}, correlation {fit.correlation:.6f}")
print("The ℓ² norm is preserved while the sup norm climbs: the kernel of W - I decays")
print("only like 1/|n - m| near the box edge, so summing it over the box gives ln N.")
print("\nReference sum at N = 1:", endpoint_reference_sum(1))
print("Doubling increments approach ((i - 1)/4) ln 2 =", (1j - 1) / 4 * np.log(2))
for N in (256, 512, 1024, 2048):
    print(f"  increment {N}->{2 * N}: {endpoint_reference_sum(2 * N) - endpoint_reference_sum(N):.6f}")
