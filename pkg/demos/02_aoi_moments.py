# From (m, v^2) to moments of the age of information
#
# Treating the cumulative number of deliveries as a Brownian motion with
# drift m and variance v^2, the gap between deliveries is inverse Gaussian.
# Its raw moments, combined with Faulhaber's formula for sums of powers,
# give E[AoI^z] for any integer z.

from aoimarkov.core import SecondOrderStats
from aoimarkov.moments import (
    aoi_moment,
    aoi_moment_closed,
    bernoulli_numbers,
    faulhaber_coefficients,
    faulhaber_sum,
    ig_interdelivery_moment,
)

# Bernoulli numbers, exactly
print("B_0..B_8:", [str(b) for b in bernoulli_numbers(8)])

# sum_{k<=l} k^z as a polynomial in l; z = 3 gives l^4/4 + l^3/2 + l^2/4
print("Faulhaber z=3:", {p: str(c) for p, c in faulhaber_coefficients(3).items()})
print("sum_{k=1}^{5} k^3 =", faulhaber_sum(5, 3))

# Inverse Gaussian gap moments: E[l] = 1/m, Var[l] = v^2 / m^3
m, v2 = 0.25, 0.1875
print("\nE[l], E[l^2], E[l^3] =", [ig_interdelivery_moment(m, v2, k) for k in (1, 2, 3)])

stats = SecondOrderStats(m, v2)
for z in (1, 2, 3, 4):
    print(f"E[AoI^{z}] = {aoi_moment(stats, z):.6f}")
print("closed forms z=1,2:", aoi_moment_closed(stats, 1), aoi_moment_closed(stats, 2))

# More regular deliveries (smaller v^2 at the same m) lower every moment,
# and the effect is stronger for higher z:
for ratio in (0.0, 1.0, 3.0):
    s = SecondOrderStats(m, ratio * m * m)
    print(f"v^2/m^2 = {ratio}:  E[AoI] = {aoi_moment(s, 1):7.3f}   E[AoI^2] = {aoi_moment(s, 2):8.3f}")
