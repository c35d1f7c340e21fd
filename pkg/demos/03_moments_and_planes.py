"""Second-moment forms, spectral planes, and the moment polynomials.

The normalized second-moment form of a chain's measure in a ball has the
base plane as its top eigenspace: a flat unit-weight disk gives
eigenvalues (1, 1, 0) and trace m.  The degree-four moment polynomials
satisfy the algebraic identity V = P0 + ... + P4, and the flatness
numbers beta_2 / beta_inf quantify deviation from a plane at a scale.
"""

import math

import numpy as np

from gmtepi import OrientedPlane, beta_numbers, moments_all, plane_distance, quad_form, select_plane
from gmtepi.generators import cone_harmonic, flat_disk
from gmtepi.moments import chain_ball_moments

print(__doc__)

disk, _ = flat_disk(512)
form = quad_form(disk, np.zeros(3), 1.0)
w, _ = form.eigensystem()
print(f"flat 512-gon: eigenvalues {np.round(w, 6)}, trace {form.trace:.6f}")
plane, _ = select_plane(form, 2)
horizontal = OrientedPlane(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
print(f"selected plane distance to the horizontal plane: {plane_distance(plane, horizontal):.2e}")

rec = moments_all(disk, np.array([0.1, 0.0, 0.0]), 1.0)
print(f"\nmoment polynomials at x = (0.1, 0, 0), r = 1:")
print(f"  V = {rec.V:.8f}, sum P_k = {float(np.sum(rec.P)):.8f}, "
      f"relative identity gap {rec.identity_gap:.1e}")
print(f"  b vanishes by central symmetry: |b| = {np.linalg.norm(rec.b):.1e}")
bm = chain_ball_moments(disk, np.zeros(3), 1.0)
print(f"  weight identity: int (1 - |y|^2) = {bm.s0 - bm.t2:.9f} vs pi/2 = {math.pi / 2:.9f}")

print("\nflatness numbers of a wavy cone against the horizontal plane:")
for amp in (0.02, 0.05, 0.1):
    P, _ = cone_harmonic(2, amp, 128)
    br = beta_numbers(P, np.zeros(3), 1.0, horizontal)
    print(f"  amplitude {amp:.2f}: beta_inf {br.beta_inf:.4f}, beta_2 {br.beta2:.4f}")
print("beta_inf tracks the sup height; beta_2 the quadratic mean, so both")
print("scale linearly with the amplitude while the excess scales with its square.")
