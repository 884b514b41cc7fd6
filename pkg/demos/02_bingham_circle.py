"""Bingham laws of axes in the plane.

An axis +-v maps to the direction v**2 (complex squaring), turning a Bingham
law into a von Mises law.  This script writes the density and the axial
histogram curve used for plotting, and checks the dispersion identity.
"""
import numpy as np

from dirsmooth import bingham2, vmf_core

w = bingham2.BinghamAxisParam.from_polar(kappa=2.0, beta=np.pi / 3)
print("canonical w:", w.w, " kappa:", w.kappa, " beta:", w.beta)
print("vMF parameter of y(V):", bingham2.w_to_z(w))

v = bingham2.sample_bingham(w, 50000, seed=3)
print("E(VV') empirical:\n", v.T @ v / len(v))
print("E(VV') exact:\n", bingham2.bh_second_moment(w))

# gamma~_2'(kappa)^2 = 1 - 2 E|VV' - Psi|^2
psi = bingham2.bh_second_moment(w)
resid = np.einsum("ni,nj->nij", v, v) - psi
lhs = vmf_core.gamma_tilde_prime(2, w.kappa) ** 2
print(f"dispersion identity: {lhs:.4f} vs {1 - 2 * np.mean(np.sum(resid**2, axis=(1, 2))):.4f}")

curve = bingham2.axial_histogram_curve(w, 8)
print("axial histogram curve, 8 points:\n", np.round(curve, 4))
