"""Simulation study for local vMF regression on the square [-1, 1]^2.

Covariates are uniform on the square and ``Y | X ~ vMF(f*(X))`` with
``f*(x) = exp(-2 |x|^2) (1, 3 x1)``.  Each local estimator (order, N) is run
at every point of the 21 x 21 grid in every simulated data set, and its error
in the mean direction ``mu(f_hat)`` is split into squared bias and variance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import local_glm, vmf_core
from .errors import DirsmoothError, FitError

logger = logging.getLogger(__name__)

GENERATOR_VERSION = "philox-seedseq-v1"
TABLE1_N = (100, 200, 300, 400, 500, 600, 700, 800)


@dataclass(frozen=True)
class StudyConfig:
    n: int = 4000
    sims: int = 20
    n_eff_list: tuple = (200, 400)
    orders: tuple = (0, 1, 2)
    seed: int = 2025
    grid_size: int = 21
    max_failure_rate: float = 0.01

    def __post_init__(self):
        if self.sims < 2 or self.n < 2:
            raise ValueError("need n >= 2 and sims >= 2")
        if not all(0 < nn < self.n for nn in self.n_eff_list):
            raise ValueError("every N must lie strictly between 0 and n")
        if not set(self.orders) <= {0, 1, 2}:
            raise ValueError("orders must be a subset of {0, 1, 2}")
        if self.grid_size < 2:
            raise ValueError("grid_size must be at least 2")

    @classmethod
    def full_scale(cls, **overrides):
        """Settings of the complete error table: 100 simulations, N = 100..800."""
        return cls(**{"sims": 100, "n_eff_list": TABLE1_N, **overrides})

    def grid(self):
        """Evaluation grid, x1 major; 441 points for the default size."""
        ticks = np.linspace(-1.0, 1.0, self.grid_size)
        g1, g2 = np.meshgrid(ticks, ticks, indexing="ij")
        return np.column_stack([g1.ravel(), g2.ravel()])


def true_field(x):
    """``f*(x) = exp(-2 |x|^2) (1, 3 x1)`` for a point or an (n, 2) array."""
    x = np.asarray(x, dtype=float)
    scale = np.exp(-2.0 * np.sum(x * x, axis=-1))
    return scale[..., None] * np.stack([np.ones_like(x[..., 0]), 3.0 * x[..., 0]], axis=-1)


def true_mean(x):
    """``mu(f*(x))`` row-wise."""
    x = np.atleast_2d(x)
    return vmf_core.batch_moments(true_field(x))[1]


def observation_rng(seed, sim_index, i):
    """Counter-style stream keyed by (seed, simulation, observation)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, sim_index, i])))


def gen_dataset(config, sim_index, n=None):
    """Simulated data set number ``sim_index``; reproducible observation by observation."""
    n = config.n if n is None else n
    x = np.empty((n, 2))
    y = np.empty((n, 2))
    for i in range(n):
        rng = observation_rng(config.seed, sim_index, i)
        x[i] = rng.uniform(-1.0, 1.0, size=2)
        y[i] = vmf_core.sample_vmf(true_field(x[i]), 1, rng)[0]
    return local_glm.Dataset(x, y)


@dataclass(frozen=True)
class ErrorRow:
    order: int
    n_eff: float
    bias: float
    sd: float
    rmse: float
    failures: int = 0


@dataclass
class StudyResult:
    """Error table plus the per-point estimates it was computed from."""

    config: StudyConfig
    grid: np.ndarray
    truth: np.ndarray
    estimates: dict = field(repr=False)
    failures: dict = field(default_factory=dict)

    def cells(self):
        return [(o, nn) for o in self.config.orders for nn in self.config.n_eff_list]

    def mean_estimate(self, order, n_eff):
        # fixed index order along the simulation axis
        return np.nanmean(self.estimates[(order, n_eff)], axis=0)

    def bias_field(self, order, n_eff):
        """Per-grid-point bias ``E mu(f_hat(x_o)) - mu(f*(x_o))``, shape (points, 2)."""
        return self.mean_estimate(order, n_eff) - self.truth

    def row(self, order, n_eff):
        est = self.estimates[(order, n_eff)]
        mean = self.mean_estimate(order, n_eff)
        bias2 = np.mean(np.sum((mean - self.truth) ** 2, axis=1))
        sd2 = np.mean(np.nanmean(np.sum((est - mean) ** 2, axis=2), axis=0))
        mse = np.mean(np.nanmean(np.sum((est - self.truth) ** 2, axis=2), axis=0))
        return ErrorRow(
            order=order,
            n_eff=n_eff,
            bias=float(np.sqrt(bias2)),
            sd=float(np.sqrt(sd2)),
            rmse=float(np.sqrt(mse)),
            failures=self.failures.get((order, n_eff), 0),
        )

    def table(self):
        return [self.row(o, nn) for o, nn in self.cells()]


def run_study(config, progress=None):
    """Run every (order, N) estimator on every grid point of every simulation.

    Fits that fail or do not converge are excluded from the averages and
    counted; a failure rate of ``config.max_failure_rate`` or more in any
    cell raises ``FitError``.
    """
    grid = config.grid()
    truth = true_mean(grid)
    n_pts = grid.shape[0]
    estimates = {
        (o, nn): np.full((config.sims, n_pts, 2), np.nan)
        for o in config.orders
        for nn in config.n_eff_list
    }
    failures = {key: 0 for key in estimates}
    for sim in range(config.sims):
        data = gen_dataset(config, sim)
        for nn in config.n_eff_list:
            for p, x_o in enumerate(grid):
                wp = local_glm.solve_weight_scale(data, x_o, nn)
                for o in config.orders:
                    try:
                        z, model = local_glm.smooth_at(data, x_o, o, nn, wp=wp)
                    except DirsmoothError:
                        failures[(o, nn)] += 1
                        continue
                    if not model.converged:
                        failures[(o, nn)] += 1
                        continue
                    estimates[(o, nn)][sim, p] = vmf_core.vmf_moments(z).mu
        logger.info("simulation %d/%d done", sim + 1, config.sims)
        if progress is not None:
            progress(sim + 1, config.sims)
    total = config.sims * n_pts
    for key, count in failures.items():
        if count >= config.max_failure_rate * total:
            raise FitError(f"{count} of {total} fits failed for (order, N) = {key}")
    return StudyResult(config, grid, truth, estimates, failures)


def bias_field(config, order, n_eff):
    """Grid points with the estimated bias of one estimator."""
    cfg = StudyConfig(
        n=config.n,
        sims=config.sims,
        n_eff_list=(n_eff,),
        orders=(order,),
        seed=config.seed,
        grid_size=config.grid_size,
        max_failure_rate=config.max_failure_rate,
    )
    result = run_study(cfg)
    return result.grid, result.bias_field(order, n_eff)


def format_table(rows):
    """Aligned text table with one line per N and a column block per order."""
    orders = sorted({r.order for r in rows})
    names = {0: "constant", 1: "linear", 2: "quadratic"}
    by_key = {(r.order, r.n_eff): r for r in rows}
    head = "N".rjust(6) + "".join(f" | {names[o]:<20}" for o in orders)
    sub = " " * 6 + "".join(" | " + "BIAS".rjust(6) + "SD".rjust(7) + "RMSE".rjust(7) for _ in orders)
    lines = [head, sub, "-" * len(sub)]
    for nn in sorted({r.n_eff for r in rows}):
        line = f"{nn:>6g}"
        for o in orders:
            r = by_key.get((o, nn))
            line += " | " + (f"{r.bias:6.3f}{r.sd:7.3f}{r.rmse:7.3f}" if r else " " * 20)
        lines.append(line)
    return "\n".join(lines)
