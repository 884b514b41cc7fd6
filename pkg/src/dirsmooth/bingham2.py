"""Bingham distributions on the unit circle.

An axis ``v`` in R^2 maps to the direction ``y(v) = v**2`` (complex squaring),
and ``V ~ Bh(W)`` exactly when ``y(V) ~ vMF(z)`` with ``W = [[z1, z2], [z2, -z1]]``.
Distributions are parametrised by ``w = kappa (cos beta, sin beta)`` with
``beta`` in ``[0, pi)``: ``kappa`` is the concentration and ``+-u`` with
``u = (cos beta, sin beta)`` the preferred axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import vmf_core
from .errors import DomainError

_UNIT_TOL = 1e-9


@dataclass(frozen=True)
class BinghamAxisParam:
    """Axis parameter ``w`` in the canonical upper half-plane.

    ``w`` and ``-w`` describe the same distribution; construction flips ``w``
    so that ``w2 > 0``, or ``w2 == 0`` and ``w1 >= 0``.
    """

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        if w.shape != (2,):
            raise DomainError("w must be a 2-vector")
        if w[1] < 0 or (w[1] == 0 and w[0] < 0):
            w = -w
        w = w + 0.0  # drop negative zeros
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @classmethod
    def from_polar(cls, kappa, beta):
        return cls(kappa * np.array([math.cos(beta), math.sin(beta)]))

    @property
    def kappa(self):
        return float(math.hypot(self.w[0], self.w[1]))

    @property
    def beta(self):
        b = math.atan2(self.w[1], self.w[0])
        return 0.0 if b >= math.pi else b

    @property
    def u(self):
        return np.array([math.cos(self.beta), math.sin(self.beta)])


@dataclass(frozen=True)
class TracelessSymmetric2:
    """The matrix ``[[z1, z2], [z2, -z1]]``."""

    z1: float
    z2: float

    @property
    def matrix(self):
        return np.array([[self.z1, self.z2], [self.z2, -self.z1]])

    @property
    def z(self):
        return np.array([self.z1, self.z2])


def _as_param(w):
    return w if isinstance(w, BinghamAxisParam) else BinghamAxisParam(w)


def _check_unit(x, name):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise DomainError(f"{name} must have 2 components")
    if np.any(np.abs(np.linalg.norm(x, axis=-1) - 1.0) > _UNIT_TOL):
        raise DomainError(f"{name} must be a unit vector")
    return x


def axis_to_direction(v):
    """Square an axis representative: ``(v1^2 - v2^2, 2 v1 v2)``.

    Works row-wise on ``(n, 2)`` arrays.
    """
    v = _check_unit(v, "v")
    v1, v2 = v[..., 0], v[..., 1]
    return np.stack([v1 * v1 - v2 * v2, 2.0 * v1 * v2], axis=-1)


def direction_to_axis(y):
    """Half-angle representative of ``y`` with angle in ``[0, pi)``."""
    y = _check_unit(y, "y")
    half = np.mod(np.arctan2(y[..., 1], y[..., 0]), 2.0 * np.pi) / 2.0
    half = np.where(half >= np.pi, 0.0, half)
    return np.stack([np.cos(half), np.sin(half)], axis=-1)


def w_to_z(w):
    """vMF parameter ``kappa (cos 2 beta, sin 2 beta)`` of ``y(V)`` for ``V ~ Bh(w)``."""
    p = _as_param(w)
    k = p.kappa
    if k == 0.0:
        return np.zeros(2)
    w1, w2 = p.w
    return np.array([w1 * w1 - w2 * w2, 2.0 * w1 * w2]) / k


def z_to_w(z):
    """Inverse of :func:`w_to_z`: halve the angle and canonicalise."""
    z = np.asarray(z, dtype=float)
    k = float(np.hypot(z[0], z[1]))
    if k == 0.0:
        return BinghamAxisParam(np.zeros(2))
    half = math.atan2(z[1], z[0]) / 2.0
    return BinghamAxisParam.from_polar(k, half)


def w_matrix(w):
    """Traceless symmetric matrix ``W`` with ``v'Wv = z'y(v)``."""
    z = w_to_z(w)
    return TracelessSymmetric2(float(z[0]), float(z[1]))


def bh_angular_density(w, theta):
    """Density of the angle of ``V ~ Bh(w)`` relative to the uniform law on [0, 2 pi)."""
    p = _as_param(w)
    k = p.kappa
    theta = np.asarray(theta, dtype=float)
    return np.exp(k * np.cos(2.0 * (theta - p.beta)) - vmf_core.gamma_tilde(2, k))


def bh_second_moment(w):
    """``E(V V')`` for ``V ~ Bh(w)``."""
    p = _as_param(w)
    g1 = vmf_core.gamma_tilde_prime(2, p.kappa)
    u = p.u
    return 0.5 * (1.0 - g1) * np.eye(2) + g1 * np.outer(u, u)


def bh_dispersion(w):
    """``E |V V' - E(V V')|_F^2 = (1 - gamma~_2'(kappa)^2) / 2``."""
    g1 = vmf_core.gamma_tilde_prime(2, _as_param(w).kappa)
    return 0.5 * (1.0 - g1 * g1)


def sample_bingham(w, count, seed=None):
    """Draw axes from Bh(w) through the vMF law of their squares.

    Each draw is the half-angle representative of a vMF(w_to_z(w)) sample
    with an independent random sign.
    """
    rng = vmf_core._as_rng(seed)
    y = vmf_core.sample_vmf(w_to_z(w), count, rng)
    v = direction_to_axis(y)
    sign = np.where(rng.uniform(size=count) < 0.5, -1.0, 1.0)
    return v * sign[:, None]


def axial_histogram_curve(w, resolution=720):
    """Points ``sqrt(f(theta)) (cos theta, sin theta)`` on an even theta grid."""
    theta = np.linspace(0.0, 2.0 * np.pi, resolution, endpoint=False)
    r = np.sqrt(bh_angular_density(w, theta))
    return np.column_stack([r * np.cos(theta), r * np.sin(theta)])


def axis_segment(w):
    """End points ``+-gamma~_2'(kappa) u`` used to draw Bh(w) as a segment."""
    p = _as_param(w)
    half = vmf_core.gamma_tilde_prime(2, p.kappa) * p.u
    return np.stack([-half, half])


def sample_angles(kappa, beta, seed=None):
    """Angles of independent draws from ``Bh(kappa_i (cos beta_i, sin beta_i))``.

    Vectorised over equal-length arrays ``kappa`` and ``beta``: the doubled
    angle is von Mises with centre ``2 beta`` and the half angle gets a
    uniformly random half-turn.
    """
    rng = vmf_core._as_rng(seed)
    kappa = np.asarray(kappa, dtype=float)
    beta = np.asarray(beta, dtype=float)
    phi = rng.vonmises(2.0 * beta, kappa)
    flip = rng.uniform(size=phi.shape) < 0.5
    return np.mod(phi / 2.0 + np.pi * flip, 2.0 * np.pi)
