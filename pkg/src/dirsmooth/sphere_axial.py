"""Smoothing axial data on the 2-sphere.

Observations are pairs ``(X_i, V_i)`` with ``X_i`` on the sphere and ``V_i`` a
unit tangent vector at ``X_i`` representing the axis ``R V_i``.  To estimate
the Bingham distribution of the axes near ``x_o``:

1. rotate by ``B_o`` so that ``x_o`` goes to ``e1 = (1, 0, 0)``;
2. project stereographically from ``-e1`` onto the plane, mapping tangent
   vectors with ``A(x)``, which preserves their length;
3. square the planar axes to directions on the unit circle and run the
   local vMF regression at the origin;
4. halve the fitted angle and rotate back into the tangent plane at ``x_o``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import bingham2, local_glm, vmf_core
from .errors import DataError, DomainError

logger = logging.getLogger(__name__)

ANTIPODE_MARGIN = 1e-12
TANGENT_REPAIR_TOL = 1e-6


# --------------------------------------------------------------------------
# stereographic projection


def _first_coord_ok(x):
    if np.any(x[..., 0] <= -1.0 + ANTIPODE_MARGIN):
        raise DomainError("the projection is singular at (-1, 0, 0)")


def stereo_project(x):
    """``P(x) = 2 / (1 + x1) * (x2, x3)``; works row-wise."""
    x = np.asarray(x, dtype=float)
    _first_coord_ok(x)
    nu = 2.0 / (1.0 + x[..., 0])
    return nu[..., None] * x[..., 1:3]


def stereo_inverse(z):
    """``P^{-1}(z) = (2 w - 1, w z1, w z2)`` with ``w = 4 / (4 + |z|^2)``."""
    z = np.asarray(z, dtype=float)
    omega = 4.0 / (4.0 + np.sum(z * z, axis=-1))
    return np.concatenate([(2.0 * omega - 1.0)[..., None], omega[..., None] * z], axis=-1)


def tangent_map(x, v):
    """Apply ``A(x) = [[-x2/(1+x1), 1, 0], [-x3/(1+x1), 0, 1]]`` to tangent ``v``.

    ``A(x)`` is the stereographic Jacobian divided by the conformal factor,
    so ``|A(x) v| = |v|`` for ``v`` orthogonal to ``x``.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    _first_coord_ok(x)
    if np.any(np.abs(np.sum(x * v, axis=-1)) > 1e-9):
        raise DomainError("v must be orthogonal to x")
    c = v[..., 0] / (1.0 + x[..., 0])
    return np.stack([v[..., 1] - x[..., 1] * c, v[..., 2] - x[..., 2] * c], axis=-1)


def rotation_to_pole(x_o, spin=0.0):
    """Rotation ``B`` with ``det B = 1`` and ``B x_o = e1``.

    Rotates about the x3-axis into the x1x3-plane, then about the x2-axis onto
    ``e1``.  ``spin`` adds a final rotation about ``e1``; every valid choice of
    ``B`` is of this form.
    """
    x = np.asarray(x_o, dtype=float)
    x = x / np.linalg.norm(x)
    rho = math.hypot(x[0], x[1])
    if np.allclose(x, [-1.0, 0.0, 0.0], rtol=0.0, atol=1e-15):
        b = np.diag([-1.0, 1.0, -1.0])
    else:
        phi = math.atan2(x[1], x[0])
        cp, sp = math.cos(phi), math.sin(phi)
        rz = np.array([[cp, sp, 0.0], [-sp, cp, 0.0], [0.0, 0.0, 1.0]])
        ry = np.array([[rho, 0.0, x[2]], [0.0, 1.0, 0.0], [-x[2], 0.0, rho]])
        b = ry @ rz
    if spin:
        cs, ss = math.cos(spin), math.sin(spin)
        b = np.array([[1.0, 0.0, 0.0], [0.0, cs, -ss], [0.0, ss, cs]]) @ b
    return b


def tangent_basis(x, rotation=None):
    """Orthonormal ``e1, e2`` spanning the tangent plane with ``det[x, e1, e2] = 1``."""
    b = rotation_to_pole(x) if rotation is None else rotation
    return b[1].copy(), b[2].copy()


# --------------------------------------------------------------------------
# data


@dataclass(frozen=True)
class AxialData:
    """Sphere locations ``points`` (n, 3) with tangent axes ``axes`` (n, 3)."""

    points: np.ndarray
    axes: np.ndarray

    def __post_init__(self):
        for name in ("points", "axes"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self):
        return self.points.shape[0]

    @classmethod
    def from_arrays(cls, points, axes, repair_tol=TANGENT_REPAIR_TOL):
        """Validate observations, re-projecting axes with small tangency errors.

        Raises
        ------
        DataError
            Non-unit vectors, or an axis whose inner product with its location
            exceeds ``repair_tol``; the message lists the offending rows.
        """
        x = np.asarray(points, dtype=float)
        v = np.asarray(axes, dtype=float)
        if x.ndim != 2 or x.shape[1] != 3 or v.shape != x.shape:
            raise DataError("points and axes must both have shape (n, 3)")
        for name, a in (("location", x), ("axis", v)):
            bad = np.flatnonzero(np.abs(np.linalg.norm(a, axis=1) - 1.0) > 1e-9)
            if bad.size:
                raise DataError(f"{name} not a unit vector in rows {bad.tolist()[:20]}")
        inner = np.sum(x * v, axis=1)
        bad = np.flatnonzero(np.abs(inner) > repair_tol)
        if bad.size:
            raise DataError(f"axis not tangent to its location in rows {bad.tolist()[:20]}")
        v = v - inner[:, None] * x
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        return cls(x, v)

    def subset(self, index):
        return AxialData(self.points[index], self.axes[index])


@dataclass(frozen=True)
class ProjectedData:
    dataset: local_glm.Dataset
    kept: np.ndarray
    dropped: int


def transform_dataset(x_o, data, rotation=None):
    """Planar regression data ``(P(B X_i), y(A(B X_i) B V_i))`` for reference ``x_o``.

    Observations at the antipode of ``x_o`` are dropped and counted.
    """
    b = rotation_to_pole(x_o) if rotation is None else np.asarray(rotation, dtype=float)
    bx = data.points @ b.T
    bv = data.axes @ b.T
    kept = bx[:, 0] > -1.0 + ANTIPODE_MARGIN
    dropped = int(np.count_nonzero(~kept))
    if dropped:
        logger.warning("dropped %d observation(s) at the antipode of x_o", dropped)
    bx, bv = bx[kept], bv[kept]
    # exact tangency after rotation up to rounding
    bv = bv - np.sum(bx * bv, axis=1)[:, None] * bx
    cov = stereo_project(bx)
    a = tangent_map(bx, bv)
    a /= np.linalg.norm(a, axis=1, keepdims=True)
    y = bingham2.axis_to_direction(a)
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    return ProjectedData(local_glm.Dataset(cov, y), np.flatnonzero(kept), dropped)


# --------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class BinghamFieldFit:
    """Fitted Bingham parameter ``f_hat`` in the tangent plane at ``x_o``."""

    x_o: np.ndarray
    f_hat: np.ndarray
    order: int
    n_eff: float
    converged: bool = True
    dropped: int = 0

    @property
    def kappa(self):
        return float(np.linalg.norm(self.f_hat))

    @property
    def u(self):
        k = self.kappa
        return self.f_hat / k if k > 0 else np.zeros(3)

    @property
    def gamma_prime(self):
        return vmf_core.gamma_tilde_prime(2, self.kappa)

    def segment(self, scale=0.1):
        """End points ``x_o +- scale * gamma~_2'(kappa) u``."""
        half = scale * self.gamma_prime * self.u
        return np.stack([self.x_o - half, self.x_o + half])


def fit_axial(x_o, data, order, n_eff, rotation=None, **fit_options):
    """Local Bingham fit at ``x_o`` from axial observations on the sphere."""
    x_o = np.asarray(x_o, dtype=float)
    x_o = x_o / np.linalg.norm(x_o)
    b = rotation_to_pole(x_o) if rotation is None else np.asarray(rotation, dtype=float)
    proj = transform_dataset(x_o, data, rotation=b)
    ds = proj.dataset
    r = local_glm.basis_dimension(order, 2)
    if ds.n <= max(r, n_eff):
        raise DataError(
            f"{ds.n} usable observations; need more than max(r={r}, N={n_eff})"
        )
    z_hat, model = local_glm.smooth_at(ds, np.zeros(2), order, n_eff, **fit_options)
    w_hat = bingham2.z_to_w(z_hat).w
    f_hat = canonical_axis_sign(b.T @ np.array([0.0, w_hat[0], w_hat[1]]))
    return BinghamFieldFit(
        x_o=x_o,
        f_hat=f_hat,
        order=order,
        n_eff=n_eff,
        converged=model.converged,
        dropped=proj.dropped,
    )


def canonical_axis_sign(f):
    """Pick the sign of an axis vector so its largest-magnitude entry is positive.

    ``f`` and ``-f`` give the same Bingham law; this makes the representative
    independent of the rotation used to compute it.
    """
    f = np.asarray(f, dtype=float)
    k = int(np.argmax(np.abs(f)))
    return -f if f[k] < 0 else f + 0.0


def psi(x_o, f):
    """``E(V V')`` for ``V ~ Bh(x_o, f)``, a 3x3 matrix with null vector ``x_o``."""
    x_o = np.asarray(x_o, dtype=float)
    f = np.asarray(f, dtype=float)
    kappa = float(np.linalg.norm(f))
    if abs(x_o @ f) > 1e-8 * max(1.0, kappa):
        raise DomainError("f must be tangent at x_o")
    proj = np.eye(3) - np.outer(x_o, x_o)
    if kappa == 0.0:
        return 0.5 * proj
    g1 = vmf_core.gamma_tilde_prime(2, kappa)
    u = f / kappa
    return 0.5 * (1.0 - g1) * proj + g1 * np.outer(u, u)


@dataclass(frozen=True)
class DiagnosticsReport:
    r2_model: float
    r2_residual: float
    ratio: float
    points_used: int


def diagnostics(fits, axes):
    """R^2-type diagnostics for fits made at observation locations.

    ``axes[j]`` is the observed axis at ``fits[j].x_o``.  ``r2_model`` averages
    ``gamma~_2'(kappa_hat)^2``; ``r2_residual`` averages
    ``1 - 2 |V V' - Psi(x_o, f_hat)|_F^2``.  Their ratio near 1 indicates an
    adequate smoothing level; larger values point to overfitting.
    """
    if len(fits) == 0:
        raise DataError("no fits supplied")
    axes = np.asarray(axes, dtype=float).reshape(len(fits), 3)
    model_terms = []
    resid_terms = []
    for fit, v in zip(fits, axes):
        model_terms.append(fit.gamma_prime**2)
        diff = np.outer(v, v) - psi(fit.x_o, fit.f_hat)
        resid_terms.append(1.0 - 2.0 * np.sum(diff * diff))
    r2_model = float(np.mean(model_terms))
    r2_residual = float(np.mean(resid_terms))
    ratio = r2_residual / r2_model if r2_model > 0 else math.inf
    return DiagnosticsReport(r2_model, r2_residual, ratio, len(fits))


def farthest_point_subsample(points, m, start=0):
    """Indices of an evenly spread subset of at most ``m`` points.

    Greedy farthest-point selection starting from index ``start``.
    """
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    m = min(m, n)
    chosen = [start]
    dist = np.sum((points - points[start]) ** 2, axis=1)
    for _ in range(m - 1):
        nxt = int(np.argmax(dist))
        chosen.append(nxt)
        dist = np.minimum(dist, np.sum((points - points[nxt]) ** 2, axis=1))
    return np.asarray(chosen)


def sample_axial_field(points, field, seed=None):
    """Draw one axis at each point from ``Bh(x, field(x))``.

    ``field`` maps an (n, 3) array of locations to tangent vectors (n, 3).
    """
    rng = vmf_core._as_rng(seed)
    points = np.asarray(points, dtype=float)
    f = np.asarray(field(points), dtype=float)
    e1 = np.empty_like(points)
    e2 = np.empty_like(points)
    for i, x in enumerate(points):
        e1[i], e2[i] = tangent_basis(x)
    w1 = np.sum(f * e1, axis=1)
    w2 = np.sum(f * e2, axis=1)
    theta = bingham2.sample_angles(np.hypot(w1, w2), np.arctan2(w2, w1), rng)
    axes = np.cos(theta)[:, None] * e1 + np.sin(theta)[:, None] * e2
    return AxialData(points, axes)
