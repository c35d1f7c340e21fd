"""The comparison-surface pipeline on a wavy cone.

A cone over a frequency-2 perturbed circle carries cylindrical excess
(5/4) pi a^2 in the small-amplitude limit.  Replacing it inside a small
cylinder by the degree-2 homogeneous extension of its boundary trace
reduces the excess there by the per-mode factor 2m/(2m+1) = 4/5, and the
assembled competitor stays below the theoretical contraction
lambda = (2m+1 - 4^(-m-1))/(2m+1) = 319/320 on the whole cylinder.
"""

import time

from gmtepi import build_comparison, lambda_epi
from gmtepi.generators import cone_harmonic

print(__doc__)

print(f"theoretical contraction: lambda(1) = {lambda_epi(1):.6f} (= 47/48), "
      f"lambda(2) = {lambda_epi(2):.6f} (= 319/320)\n")

for eps0 in (0.08, 0.04, 0.02):
    P, meta = cone_harmonic(2, eps0, 256)
    t0 = time.time()
    S, rep = build_comparison(P)
    print(f"amplitude {eps0:.2f} ({time.time() - t0:.1f}s):")
    print(f"  measured excess {rep.exc_P:.6f} "
          f"(small-amplitude value {meta['excess_small_amplitude']:.6f})")
    print(f"  replacement-zone ratio {rep.ratio_zone:.5f}  (-> 4/5 as the amplitude shrinks)")
    print(f"  assembled full-cylinder ratio {rep.ratio_full:.5f}  (<= lambda {rep.lambda_theory:.6f})")
    print(f"  boundary trace: linear-mode residual {rep.w1_sup:.2e}, "
          f"plane drift {rep.plane_drift:.2e}")
    print(f"  Dirichlet energies: cone {rep.cone_energy:.6f}, degree-2 {rep.h_energy:.6f}, "
          f"ratio {rep.energy_ratio:.5f}")
    print(f"  boundary preservation defect {rep.boundary_defect:.2e}\n")

print("The zone ratio converges to the pure-mode energy factor 4/5 while the")
print("assembled ratio sits near 1 - (1/16)(1/5) = 79/80: replacing a quarter-")
print("scale cylinder dilutes the gain by 4^-m but keeps it strictly below lambda.")
