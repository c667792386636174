"""
Measuring the random complexity of a finite class
=================================================

The localized size of a class is estimated by symmetrization: random
signs are attached to the sample and the signed means are maximized
over members whose empirical distance to the best member is small.
"""

import numpy as np

from riskbound.complexity import (
    KernelSpec,
    mendelson_curves,
    rademacher_modulus,
    rademacher_signs,
    rademacher_sup,
    shattering_number,
)
from riskbound.function_class import Sample

rng = np.random.default_rng(7)
n, members = 200, 12

# A synthetic evaluation matrix: each column is one member's values.
values = rng.uniform(0.0, 1.0, (n, members))
draws = rademacher_signs(n, seed=1, n_draws=400)

mean_sup, se_sup = rademacher_sup(values, draws)
print(f"symmetrized sup over the whole class: {mean_sup:.4f} (se {se_sup:.4f})")

print("\nlocalized modulus shrinks with the radius")
print(f"{'radius':>8} {'modulus':>10}")
for k in range(1, 6):
    delta = 2.0 ** -k
    mean, _ = rademacher_modulus(values, draws, delta)
    print(f"{delta:>8.4f} {mean:>10.4f}")

# Binary classes have a combinatorial complexity: the number of distinct
# projections on the sample.  Eleven interleaved thresholds on ten
# points realize all eleven possible patterns.
points = np.arange(10.0)
thresholds = np.arange(11.0) - 0.5
binary = (points[:, None] >= thresholds[None, :]).astype(float)
print(f"\nthreshold class projections on 10 points: {shattering_number(binary)}")

# Kernel classes get their curves from the Gram spectrum: the localized
# size at radius u is controlled by a truncated eigenvalue sum.
x = rng.uniform(0.0, 1.0, 64)
spec = KernelSpec(kernel=lambda a, b: np.exp(-((a - b) ** 2) / (2 * 0.15 ** 2)))
gamma_hat, gamma_bar = mendelson_curves(spec, Sample(x))
print("\nkernel spectrum curve at a few radii")
print(f"{'radius':>8} {'gamma_hat':>10}")
for u in (0.01, 0.1, 0.5, 1.0):
    print(f"{u:>8.2f} {float(gamma_hat(u)):>10.4f}")
