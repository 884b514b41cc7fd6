"""Acceptance checks, one test per criterion, each with its runtime budget.

A summary line per criterion is printed at the end of the pytest run.
"""

import math
import time

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

from dirsmooth import bingham2 as bh
from dirsmooth import local_glm as lg
from dirsmooth import sphere_axial as sa
from dirsmooth import vmf_core as vc


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def rel_err(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.abs(a - b) / np.maximum(np.abs(b), 1e-300)


def oracle_series(d, t):
    """gamma, E U, Var U from 0F1 sums at 50 digits (log taken in mpmath)."""
    with mp.workdps(50):
        t = mp.mpf(t)
        g0, g2, g4 = (mp.hyp0f1(mp.mpf(d + s) / 2, t * t / 4) for s in (0, 2, 4))
        eu = t / d * g2 / g0
        eu2 = g2 / (d * g0) + t * t / (d * (d + 2)) * g4 / g0
        return float(mp.log(g0)), float(eu), float(eu2 - eu * eu)


def random_dataset(rng, n, q, d):
    x = rng.uniform(-1, 1, size=(n, q))
    z0 = rng.normal(size=d) * rng.uniform(0.2, 3.0)
    slope = rng.normal(size=(d, q))
    y = np.vstack([vc.sample_vmf(z0 + slope @ xi, 1, rng) for xi in x])
    return lg.Dataset(x, y)


def test_criterion_01_g3_closed_form():
    t = np.linspace(0.01, 30.0, 100)
    with Timer() as tm:
        got = np.array([vc.g_series(3, ti) for ti in t])
    err = rel_err(got, np.sinh(t) / t)
    print(f"max rel err {err.max():.2e}, {tm.elapsed:.3f} s")
    assert err.max() <= 1e-12
    assert tm.elapsed < 1.0


def test_criterion_02_derivative_recursion():
    worst = 0.0
    with Timer() as tm:
        for d in range(2, 7):
            for t in np.linspace(0.0, 20.0, 81):
                h = 1e-5 * max(1.0, t)
                fd = (vc.g_series(d, t + h) - vc.g_series(d, t - h)) / (2 * h)
                exact = vc.g_deriv(d, t, 1)
                err = abs(exact - fd) / max(abs(fd), 1e-300) if fd != 0 else abs(exact)
                worst = max(worst, err)
    print(f"max rel err {worst:.2e}, {tm.elapsed:.3f} s")
    assert worst <= 1e-6
    assert tm.elapsed < 5.0


def test_criterion_03_series_asymptotic_seam():
    worst = 0.0
    with Timer() as tm:
        for d in (2, 3, 5):
            ts = vc.t_switch(d)
            for t in np.linspace(0.9 * ts, 1.1 * ts, 21):
                series = oracle_series(d, t)
                asym = [float(v[0]) for v in vc.asymptotic_moments(d, t)[:3]]
                worst = max(worst, max(rel_err(asym, series)))
                if t <= ts:
                    ours = [float(v[0]) for v in vc.series_moments(d, t)[:3]]
                    worst = max(worst, max(rel_err(ours, series)))
                # the dispatcher picks one of the two paths
                combined = vc.radial_moments(d, t)[:3]
                worst = max(worst, max(rel_err(combined, series)))
    print(f"max rel err {worst:.2e}, {tm.elapsed:.3f} s")
    assert worst <= 1e-6
    assert tm.elapsed < 10.0


def test_criterion_04_moments_vs_quadrature():
    rng = np.random.default_rng(4)
    worst = 0.0
    with Timer() as tm:
        for d in (2, 3, 4):
            alpha = (d - 3) / 2.0
            for t in (0.5, 2.0, 10.0):

                def mom(k):
                    f = lambda u: u**k * math.exp(t * (u - 1.0))
                    return integrate.quad(f, -1, 1, weight="alg", wvar=(alpha, alpha),
                                          epsabs=0, epsrel=1e-13, limit=200)[0]

                m0, m1, m2 = mom(0), mom(1), mom(2)
                eu, eu2 = m1 / m0, m2 / m0
                v = rng.normal(size=d)
                v /= np.linalg.norm(v)
                mu_ref = eu * v
                p = np.outer(v, v)
                sigma_ref = (eu2 - eu**2) * p + (1 - eu2) / (d - 1) * (np.eye(d) - p)
                m = vc.vmf_moments(t * v)
                worst = max(worst, np.abs(m.mu - mu_ref).max(), np.abs(m.sigma - sigma_ref).max())
    print(f"max abs err {worst:.2e}, {tm.elapsed:.3f} s")
    assert worst <= 1e-8
    assert tm.elapsed < 10.0


def test_criterion_05_local_constant_identity():
    rng = np.random.default_rng(5)
    worst = 0.0
    with Timer() as tm:
        for _ in range(100):
            n = int(rng.integers(30, 300))
            q = int(rng.integers(1, 3))
            d = int(rng.integers(2, 4))
            data = random_dataset(rng, n, q, d)
            x_o = rng.uniform(-1, 1, size=q)
            n_eff = rng.uniform(5, 0.8 * n)
            wp = lg.solve_weight_scale(data, x_o, n_eff)
            model = lg.newton_fit(data, wp, lg.LocalBasis(0, x_o))
            ref = vc.mu_inverse(lg.local_mean(data, wp.weights))
            worst = max(worst, np.abs(model.theta[:, 0] - ref).max())
    print(f"max abs err {worst:.2e}, {tm.elapsed:.3f} s")
    assert worst <= 1e-8
    assert tm.elapsed < 10.0


def test_criterion_06_gradient_hessian_fd():
    rng = np.random.default_rng(6)
    worst = 0.0
    with Timer() as tm:
        for _ in range(50):
            n = int(rng.integers(30, 150))
            q = int(rng.integers(1, 3))
            d = int(rng.integers(2, 4))
            order = int(rng.integers(0, 3))
            data = random_dataset(rng, n, q, d)
            basis = lg.LocalBasis(order, rng.uniform(-1, 1, size=q))
            wp = lg.solve_weight_scale(data, basis.center, rng.uniform(5, 0.8 * n))
            theta = rng.normal(size=(d, basis.r))
            model = lg.LocalModel(basis, theta)
            grad = lg.vec(lg.nll_gradient(model, data, wp))
            hess = lg.nll_hessian(model, data, wp)
            h = 1e-6
            num_g = np.zeros_like(grad)
            num_h = np.zeros_like(hess)
            for k in range(grad.size):
                e = lg.unvec(np.eye(grad.size)[k] * h, d)
                up, dn = lg.LocalModel(basis, theta + e), lg.LocalModel(basis, theta - e)
                num_g[k] = (lg.nll(up, data, wp) - lg.nll(dn, data, wp)) / (2 * h)
                num_h[:, k] = (lg.vec(lg.nll_gradient(up, data, wp))
                               - lg.vec(lg.nll_gradient(dn, data, wp))) / (2 * h)
            worst = max(worst,
                        np.linalg.norm(grad - num_g) / np.linalg.norm(grad),
                        np.linalg.norm(hess - num_h) / np.linalg.norm(hess))
    print(f"max rel err {worst:.2e}, {tm.elapsed:.3f} s")
    assert worst < 1e-4
    assert tm.elapsed < 30.0


def test_criterion_07_table1_desk_scale(desk_study):
    from dirsmooth import sim_bench as sb

    result, elapsed = desk_study
    rows = {(r.order, r.n_eff): r for r in result.table()}
    print()
    print(sb.format_table(result.table()))
    print(f"failures {result.failures}, {elapsed:.0f} s")
    targets = {(2, 400): 0.073, (0, 200): 0.070, (1, 400): 0.074}
    for key, rmse in targets.items():
        assert abs(rows[key].rmse - rmse) <= 0.015, key
    for order in (0, 1, 2):
        assert rows[(order, 200)].bias < rows[(order, 400)].bias, order
    assert rows[(0, 400)].bias > rows[(1, 400)].bias > rows[(2, 400)].bias
    assert elapsed < 30 * 60


def test_criterion_08_bingham_identities():
    rng = np.random.default_rng(8)
    with Timer() as tm:
        theta = rng.uniform(0, 2 * math.pi, 10_000)
        v = np.column_stack([np.cos(theta), np.sin(theta)])
        w = rng.normal(size=(10_000, 2))
        worst = 0.0
        for vi, wi in zip(v, w):
            lhs = vi @ bh.w_matrix(wi).matrix @ vi
            rhs = bh.w_to_z(wi) @ bh.axis_to_direction(vi)
            worst = max(worst, abs(lhs - rhs))
        disp = 0.0
        for kappa in (0.5, 1.0, 3.0):
            p = bh.BinghamAxisParam.from_polar(kappa, 0.9)
            psi = bh.bh_second_moment(p)

            def integrand(t):
                u = np.array([math.cos(t), math.sin(t)])
                diff = np.outer(u, u) - psi
                return np.sum(diff * diff) * float(bh.bh_angular_density(p, t))

            e = integrate.quad(integrand, 0, 2 * math.pi, epsabs=1e-13, limit=200)[0] / (2 * math.pi)
            g = vc.gamma_tilde_prime(2, kappa)
            disp = max(disp, abs(g * g - (1 - 2 * e)))
    print(f"transport err {worst:.2e}, dispersion err {disp:.2e}, {tm.elapsed:.3f} s")
    assert worst <= 1e-14
    assert disp <= 1e-6
    assert tm.elapsed < 10.0


def test_criterion_09_sphere_pipeline():
    rng = np.random.default_rng(9)
    with Timer() as tm:
        x = rng.normal(size=(1000, 3))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        x = np.where(x[:, :1] < -0.999, -x, x)
        v = rng.normal(size=(1000, 3))
        v -= np.sum(v * x, axis=1)[:, None] * x
        conf = np.abs(np.linalg.norm(sa.tangent_map(x, v), axis=1) - np.linalg.norm(v, axis=1))
        conf = conf.max()
        trip = np.abs(sa.stereo_inverse(sa.stereo_project(x)) - x).max()
        z = rng.normal(scale=2.0, size=(1000, 2))
        trip = max(trip, np.abs(sa.stereo_project(sa.stereo_inverse(z)) - z).max())

        # B_o choice: rotations differing by a spin about e1
        pts = rng.normal(size=(500, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        data = sa.sample_axial_field(pts, lambda p: 3.0 * (np.array([0, 0, 1.0]) - p[:, 2:3] * p), rng)
        inv = 0.0
        for i in range(5):
            x_o = pts[i]
            for order in (0, 1, 2):
                ref = sa.fit_axial(x_o, data, order, 100).f_hat
                for spin in (0.5, 1.7, -2.6):
                    other = sa.fit_axial(x_o, data, order, 100,
                                         rotation=sa.rotation_to_pole(x_o, spin)).f_hat
                    inv = max(inv, np.abs(other - ref).max())

        # circles on the sphere project to circles
        circ = 0.0
        for _ in range(10):
            nrm = rng.normal(size=3)
            nrm /= np.linalg.norm(nrm)
            c = rng.uniform(-0.6, 0.6)
            if abs(nrm[0] + c) < 0.2:
                continue  # circle passes near the projection centre
            a = np.cross(nrm, [0.3, 0.5, 0.7])
            a /= np.linalg.norm(a)
            b = np.cross(nrm, a)
            t = np.linspace(0, 2 * math.pi, 60, endpoint=False)
            r = math.sqrt(1 - c * c)
            p = sa.stereo_project(c * nrm + r * (np.cos(t)[:, None] * a + np.sin(t)[:, None] * b))
            lhs = np.column_stack([p, np.ones(len(p))])
            coef = np.linalg.lstsq(lhs, -np.sum(p * p, axis=1), rcond=None)[0]
            centre = -coef[:2] / 2
            rad = math.sqrt(centre @ centre - coef[2])
            circ = max(circ, np.max(np.abs(np.linalg.norm(p - centre, axis=1) - rad)) / max(1.0, rad))
    print(f"conformality {conf:.2e}, round trip {trip:.2e}, B_o invariance {inv:.2e}, "
          f"circle residual {circ:.2e}, {tm.elapsed:.2f} s")
    assert conf <= 1e-12
    assert trip <= 1e-12
    assert inv <= 1e-6
    assert circ < 1e-8
    assert tm.elapsed < 30.0


def test_criterion_10_diagnostics_self_consistency():
    rng = np.random.default_rng(10)
    with Timer() as tm:
        n = 5000
        c = rng.uniform(math.cos(0.6), 1.0, n)
        phi = rng.uniform(0, 2 * math.pi, n)
        s = np.sqrt(1 - c * c)
        pts = np.column_stack([c, s * np.cos(phi), s * np.sin(phi)])
        data = sa.sample_axial_field(pts, lambda p: 2.0 * (np.array([0, 0, 1.0]) - p[:, 2:3] * p), rng)
        idx = sa.farthest_point_subsample(pts, 2000)
        ratio = {}
        for n_eff in (50, 400, 500):
            fits = [sa.fit_axial(pts[i], data, 0, n_eff) for i in idx]
            ratio[n_eff] = sa.diagnostics(fits, data.axes[idx]).ratio
    print(f"ratios {ratio}, {tm.elapsed:.1f} s")
    assert 0.9 <= ratio[500] <= 1.1
    assert ratio[50] > ratio[400]
    assert tm.elapsed < 300.0
