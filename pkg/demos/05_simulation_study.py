"""Error table of the local estimators.

A reduced study (5 simulations) so that the script finishes in about two
minutes; ``dirsmooth table1`` runs the 20-simulation version, and
``dirsmooth table1 --full-scale`` the complete one.
"""
import logging

import numpy as np

from dirsmooth import sim_bench

logging.basicConfig(level=logging.INFO, format="%(message)s")

config = sim_bench.StudyConfig(sims=5, n_eff_list=(200, 400))
result = sim_bench.run_study(config)
print(sim_bench.format_table(result.table()))

for order in (0, 2):
    b = np.linalg.norm(result.bias_field(order, 400), axis=1)
    print(f"order {order}, N = 400: mean |bias| over the grid {b.mean():.4f}")
