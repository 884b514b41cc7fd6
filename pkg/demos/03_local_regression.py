"""Local vMF regression on the square.

Fits local constant, linear and quadratic models at a few points of a
simulated data set and compares the fitted mean directions with the truth.
"""
import numpy as np

from dirsmooth import local_glm, sim_bench, vmf_core

config = sim_bench.StudyConfig(seed=7)
data = sim_bench.gen_dataset(config, 0)
print(f"{data.n} observations, responses on the unit circle")

points = np.array([[0.0, 0.0], [0.5, 0.0], [-0.5, 0.5], [0.9, -0.9]])
truth = sim_bench.true_mean(points)
n_eff = 400

for x_o, mu_true in zip(points, truth):
    wp = local_glm.solve_weight_scale(data, x_o, n_eff)
    line = f"x_o = {x_o}  true mu = {np.round(mu_true, 3)}"
    for order in (0, 1, 2):
        z, model = local_glm.smooth_at(data, x_o, order, n_eff, wp=wp)
        mu = vmf_core.vmf_moments(z).mu
        line += f" | order {order}: {np.round(mu, 3)} ({model.iterations} it)"
    print(line)
