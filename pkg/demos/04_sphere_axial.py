"""Smoothing axial data on the sphere.

Axes are simulated from a smooth Bingham field on a cap around (1, 0, 0),
local fits are computed at evenly spread points, and the R^2 diagnostics
are reported for several effective sample sizes.
"""
import numpy as np

from dirsmooth import sphere_axial

rng = np.random.default_rng(5)
n = 3000
c = rng.uniform(np.cos(0.6), 1.0, n)
phi = rng.uniform(0.0, 2 * np.pi, n)
s = np.sqrt(1 - c * c)
points = np.column_stack([c, s * np.cos(phi), s * np.sin(phi)])


def field(p):
    # axes along the meridians through (0, 0, 1), concentration about 2
    return 2.0 * (np.array([0.0, 0.0, 1.0]) - p[:, 2:3] * p)


data = sphere_axial.sample_axial_field(points, field, rng)
idx = sphere_axial.farthest_point_subsample(points, 300)

fit = sphere_axial.fit_axial(points[idx[0]], data, order=1, n_eff=200)
print("x_o:", fit.x_o, "\nf_hat:", fit.f_hat, "\ntrue f:", field(fit.x_o[None])[0])
print("segment end points (scale 0.1):\n", fit.segment(0.1))

print("\n  N   R2_model  R2_residual  ratio")
for n_eff in (50, 200, 400):
    fits = [sphere_axial.fit_axial(points[i], data, 0, n_eff) for i in idx]
    rep = sphere_axial.diagnostics(fits, data.axes[idx])
    print(f"{n_eff:4d}  {rep.r2_model:8.4f}  {rep.r2_residual:11.4f}  {rep.ratio:6.3f}")
