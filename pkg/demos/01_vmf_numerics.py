"""Cumulant and moments of von Mises-Fisher laws.

Run with ``python3 demos/01_vmf_numerics.py``.
"""
import numpy as np

from dirsmooth import vmf_core

# G_3 has the closed form sinh(t)/t
for t in (0.5, 5.0, 25.0):
    print(f"G_3({t:5.1f}) series {vmf_core.g_series(3, t):.15e}  closed form {np.sinh(t) / t:.15e}")

# moments along a ray; the evaluation switches to a large-t expansion at t_switch(d)
d = 3
print("\n t        gamma         E U_t      Var U_t")
for t in (0.0, 1.0, 10.0, 100.0, vmf_core.t_switch(d), 1e3, 1e5):
    gamma, eu, var, _ = vmf_core.radial_moments(d, t)
    print(f"{t:8.0f} {gamma:14.6f} {eu:11.8f} {var:11.4e}")

# mean vector and covariance of vMF(z), and the inverse mean map
z = np.array([1.0, -2.0, 0.5])
m = vmf_core.vmf_moments(z)
print("\nmu(z) =", m.mu)
print("Sigma(z) eigenvalues =", np.linalg.eigvalsh(m.sigma))
print("mu^-1(mu(z)) =", vmf_core.mu_inverse(m.mu))

# sample means approach mu(z)
y = vmf_core.sample_vmf(z, 20000, seed=1)
print("sample mean =", y.mean(axis=0))
