"""
Complexity-curve transforms on a worked example
===============================================

A complexity curve maps a localization radius to the expected size of a
localized empirical process.  Everything downstream (critical radii,
penalties, model selection) is driven by two transforms of such curves:
the ratio envelope ``flat`` and its generalized inverse ``sharp``.
"""

import numpy as np

from riskbound.transform import (
    CONCAVE,
    STRICTLY_CONCAVE,
    ComplexityCurve,
    GeometricGrid,
    fixed_point,
    flat,
    geometric_tail_sum,
    sharp,
    sharp_q,
    tail_sum_constant,
)

# A strictly concave square-root curve: the canonical localized shape.
psi = ComplexityCurve(lambda u: 0.6 * np.sqrt(np.asarray(u, float)),
                      shape=STRICTLY_CONCAVE, gamma=0.5, cap=None)

print("ratio envelope and its inverse")
print(f"{'eps':>6} {'flat(eps)':>12} {'sharp(eps)':>12} {'0.36/eps^2':>12}")
for eps in (0.25, 0.5, 1.0, 2.0):
    # for c*sqrt(u) the inverse has the closed form (c/eps)^2
    print(f"{eps:>6.2f} {flat(psi, eps):>12.4f} {sharp(psi, eps):>12.4f}"
          f" {(0.6 / eps) ** 2:>12.4f}")

# A constant curve inverts to c/eps exactly.
const = ComplexityCurve(lambda u: np.full_like(np.asarray(u, float), 0.3),
                        shape=CONCAVE, cap=None)
print(f"\nconstant curve: sharp(0.3, eps=0.5) = {sharp(const, 0.5):.6f} (= 0.6)")

# On a geometric grid the discretized inverse sandwiches the continuous
# one: sharp_q at eps is below, sharp_q at eps/q is above.
grid = GeometricGrid(q=2.0, j_min=-3, j_max=20)
for eps in (0.5, 1.0):
    lo = sharp_q(psi, eps, grid)
    mid = sharp(psi, eps)
    hi = sharp_q(psi, eps / grid.q, grid)
    print(f"grid sandwich at eps={eps}: {lo:.4f} <= {mid:.4f} <= {hi:.4f}")

# The fixed point of a strictly concave curve is the critical radius
# solving psi(delta) = delta; the capped iteration converges from 1.
delta_bar, iterates = fixed_point(psi)
print(f"\nfixed point of 0.6*sqrt(u): {delta_bar:.6f} (closed form 0.36)")
print("first iterates:", np.round(iterates[:5], 6).tolist())

# Sums of psi(d)/d over the geometric tail below a radius stay within a
# q- and shape-dependent multiple of the ratio at that radius.
delta = grid.points[8]
total = geometric_tail_sum(psi, float(delta), grid)
cap = tail_sum_constant(0.5, grid.q) * float(psi(delta)) / float(delta)
print(f"\ntail sum from delta={float(delta):.4g}: {total:.4f} <= bound {cap:.4f}")
