"""Pointwise metric diagnostics: Laplacian, Hodge residual, Levi forms, W.

Three metrics on (subsets of) C^2 tell the whole story: the conformal ball
metric has W = 2(n-1)(n-(n-1)|z|^2) > 0 but fails the divergence condition;
the metric with potential -log(1-|z|^2) is Kahler so its residual vanishes;
and |dz|^2/|z|^2 has constant W = -(n-1)^2 < 0.
"""

import numpy as np

from robinlab import (ball_chart, euclidean_chart, hodge_condition_residual,
                      hopf_chart, kahler_ball_chart, kahler_residual,
                      laplacian_apply, levi_k1, levi_k2, scalar_W,
                      translation_family)

z = np.array([0.3 + 0.1j, 0.2 - 0.25j])
s = float(np.vdot(z, z).real)

print("== Laplacian sanity, Euclidean chart ==")
eu = euclidean_chart(2)
print("Delta |z1|^2 =", round(laplacian_apply(eu, lambda w: abs(w[0]) ** 2, z), 8),
      "   Delta Re(z1^2) =", round(laplacian_apply(eu, lambda w: (w[0] ** 2).real, z), 8))

print("\n== W and the divergence residual ==")
for name, chart, point in (
        ("conformal ball", ball_chart(2), z),
        ("kahler ball", kahler_ball_chart(2), z),
        ("hopf", hopf_chart(2), np.array([1.0, 0.0])),
        ("euclidean", eu, z)):
    W = scalar_W(chart, point)
    res = float(np.max(np.abs(hodge_condition_residual(chart, point))))
    ko = kahler_residual(chart, point)
    print(f"{name:15s} W = {W:+.6f}   |I_a| = {res:.2e}   d-omega = {ko:.2e}")
print(f"(conformal-ball closed form at z: {2 * (2 - s):+.6f})")

print("\n== Levi curvature of a moving boundary ==")
fam = translation_family(2, (1.0, 0.0), rho=0.5)
df = fam.slice_at()
for zb in ([1.0, 0.0], [0.0, 1.0], [0.6, 0.8j]):
    zb = np.array(zb, dtype=complex)
    print(f"z = {zb}:  k1 = {levi_k1(eu, df, 0.0, zb):+.3f}   "
          f"k2 = {levi_k2(eu, df, 0.0, zb):+.6f}")
print("k2 = 1 on the whole sphere for this family: the cross terms cancel "
      "pointwise and the psi_ttbar term survives")
