"""Locally weighted vMF regression.

A response ``Y_i`` on the unit sphere of R^d is modelled as vMF(f(X_i)) with
``f(x) = Theta F(x)``, where ``F`` is a local polynomial basis centred at a
query point ``x_o`` and ``Theta`` is a ``d x r`` matrix.  ``Theta`` minimises
the weighted negative log-likelihood::

    L(Theta) = sum_i W_i (gamma(Theta F(X_i)) - Y_i' Theta F(X_i))

with Gaussian weights ``W_i = exp(-s |X_i - x_o|^2)`` whose sum is a target
effective sample size ``N``.  ``Theta`` is vectorised column by column
(``vec(Theta) = [Theta_1; ...; Theta_r]``), which gives the Hessian the
Kronecker form ``sum_i W_i F_i F_i' (x) Sigma(Theta F_i)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import vmf_core
from .errors import DataError, DomainError, FitError

logger = logging.getLogger(__name__)

MAX_ITER = 50
CONCENTRATION_CAP = 1e4
THETA0_CAP = 50.0
RIDGE_MAX = 1e2


@dataclass(frozen=True)
class Dataset:
    """Covariates ``x`` (n, q) with unit-vector responses ``y`` (n, d)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim != 2 or y.shape[1] < 2:
            raise DataError("responses must be an (n, d) array with d >= 2")
        if x.shape[0] != y.shape[0]:
            raise DataError("covariates and responses differ in length")
        if np.any(np.abs(np.linalg.norm(y, axis=1) - 1.0) > 1e-9):
            raise DataError("responses must be unit vectors")
        for name, a in (("x", x), ("y", y)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def q(self):
        return self.x.shape[1]

    @property
    def d(self):
        return self.y.shape[1]


def basis_dimension(order, q):
    if order == 0:
        return 1
    if order == 1:
        return q + 1
    if order == 2:
        return (q + 1) * (q + 2) // 2
    raise DomainError(f"basis order must be 0, 1 or 2, got {order!r}")


@dataclass(frozen=True)
class LocalBasis:
    """Polynomial basis of the given order, centred at ``center``.

    Functions are ``1``, then ``x_j - c_j``, then ``(x_j - c_j)(x_k - c_k)``
    for ``j <= k`` in lexicographic order.
    """

    order: int
    center: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        basis_dimension(self.order, c.size)

    @property
    def r(self):
        return basis_dimension(self.order, self.center.size)

    def design(self, x):
        """Basis values at each row of ``x``, shape (n, r)."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None] if self.center.size == 1 else x[None, :]
        if x.shape[1] != self.center.size:
            raise DomainError("covariate dimension does not match the basis center")
        dx = x - self.center
        cols = [np.ones(x.shape[0])]
        if self.order >= 1:
            cols.extend(dx.T)
        if self.order == 2:
            q = self.center.size
            cols.extend(dx[:, j] * dx[:, k] for j in range(q) for k in range(j, q))
        return np.column_stack(cols)


def basis_eval(basis, x):
    """Basis vector ``F(x)`` at a single point."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != basis.center.size:
        raise DomainError("covariate dimension does not match the basis center")
    return basis.design(x[None, :])[0]


@dataclass(frozen=True)
class WeightProfile:
    scale: float
    weights: np.ndarray
    effective_n: float


def solve_weight_scale(data, x_o, n_eff, tol=None):
    """Find ``s >= 0`` with ``sum_i exp(-s |X_i - x_o|^2) = n_eff``.

    The sum decreases strictly from ``n`` at ``s = 0`` to the number of
    covariates equal to ``x_o`` as ``s -> inf``.  Safeguarded Newton
    iterations inside a bisection bracket.
    """
    x = data.x if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    x_o = np.atleast_1d(np.asarray(x_o, dtype=float))
    dist2 = np.sum((x - x_o) ** 2, axis=1)
    n = dist2.size
    tol = 1e-9 * n if tol is None else tol
    n_at = int(np.count_nonzero(dist2 == 0.0))
    if not 0 < n_eff < n:
        raise DomainError(f"effective sample size must lie in (0, {n}), got {n_eff}")
    if n_eff <= n_at:
        raise DomainError(
            f"{n_at} covariates coincide with the query point; "
            f"no finite scale gives an effective size of {n_eff}"
        )

    def excess(s):
        w = np.exp(-s * dist2)
        return w.sum() - n_eff, -(dist2 * w).sum(), w

    lo, hi = 0.0, 1.0 / np.mean(dist2)
    f_hi = excess(hi)[0]
    while f_hi > 0:
        lo, hi = hi, 2.0 * hi
        f_hi = excess(hi)[0]
    s = lo
    for _ in range(200):
        f, df, w = excess(s)
        if abs(f) <= tol:
            return WeightProfile(scale=s, weights=w, effective_n=float(w.sum()))
        if f > 0:
            lo = s
        else:
            hi = s
        step = s - f / df if df < 0 else hi
        s = step if lo < step < hi else 0.5 * (lo + hi)
    raise FitError("weight scale iteration did not converge")


@dataclass
class LocalModel:
    """A fitted (or candidate) local model ``f(x) = theta @ basis.design(x)``."""

    basis: LocalBasis
    theta: np.ndarray
    converged: bool = False
    iterations: int = 0
    final_gradient_norm: float = float("nan")
    objective: float = float("nan")
    history: list = field(default_factory=list, repr=False)

    def predict(self, x):
        return self.basis.design(x) @ self.theta.T


def _weights_of(wp, n):
    if wp is None:
        return np.ones(n)
    w = wp.weights if isinstance(wp, WeightProfile) else np.asarray(wp, dtype=float)
    if w.shape != (n,):
        raise DomainError("weights do not match the data length")
    return w


def _objective(theta, design, y, w):
    z = design @ theta.T
    return float(np.sum(w * (vmf_core.cumulant(z) - np.sum(y * z, axis=1))))


def _derivatives(theta, design, y, w):
    z = design @ theta.T
    gamma, mu, sigma = vmf_core.batch_moments(z)
    value = float(np.sum(w * (gamma - np.sum(y * z, axis=1))))
    grad = ((mu - y) * w[:, None]).T @ design
    wf = design * w[:, None]
    d, r = theta.shape
    h = np.empty((r, d, r, d))
    for a in range(d):
        for b in range(a, d):
            block = wf.T @ (design * sigma[:, a, b][:, None])
            h[:, a, :, b] = block
            h[:, b, :, a] = block
    return value, grad, h.reshape(r * d, r * d)


def nll(model, data, wp=None):
    """Weighted negative log-likelihood ``L(Theta)``; unit weights when ``wp`` is None."""
    design = model.basis.design(data.x)
    return _objective(model.theta, design, data.y, _weights_of(wp, data.n))


def nll_gradient(model, data, wp=None):
    """Gradient matrix ``sum_i W_i (mu(Theta F_i) - Y_i) F_i'``, shape (d, r)."""
    design = model.basis.design(data.x)
    w = _weights_of(wp, data.n)
    _, mu, _ = vmf_core.batch_moments(design @ model.theta.T)
    return ((mu - data.y) * w[:, None]).T @ design


def nll_hessian(model, data, wp=None):
    """Hessian with respect to ``vec(Theta)`` (columns stacked), shape (dr, dr)."""
    design = model.basis.design(data.x)
    return _derivatives(model.theta, design, data.y, _weights_of(wp, data.n))[2]


def vec(theta):
    """Stack the columns of ``theta``."""
    return np.asarray(theta).T.reshape(-1)


def unvec(v, d):
    return np.asarray(v).reshape(-1, d).T


def _newton_direction(grad_vec, hess):
    try:
        chol = np.linalg.cholesky(hess)
        step = -np.linalg.solve(chol.T, np.linalg.solve(chol, grad_vec))
        if np.all(np.isfinite(step)):
            return step
    except np.linalg.LinAlgError:
        pass
    dim = hess.shape[0]
    lam = 1e-8 * max(np.trace(hess), 1e-300) / dim
    while lam <= RIDGE_MAX:
        try:
            step = -np.linalg.solve(hess + lam * np.eye(dim), grad_vec)
            if np.all(np.isfinite(step)):
                return step
        except np.linalg.LinAlgError:
            pass
        lam *= 10.0
    raise FitError("Hessian is singular even after the maximal ridge")


def local_mean(data, weights):
    return weights @ data.y / weights.sum()


def newton_fit(data, wp, basis, tol_grad=None, max_iter=MAX_ITER, theta0=None, rtol=1e-8):
    """Minimise the weighted negative log-likelihood by damped Newton-Raphson.

    Starts from the local-constant solution.  A step is halved until the
    objective does not increase and every fitted concentration stays below
    ``CONCENTRATION_CAP``.  Once the gradient norm is below ``tol_grad`` one
    more full Newton step is tried to polish the solution.

    Parameters
    ----------
    data : Dataset
    wp : WeightProfile, array of weights or None
    basis : LocalBasis
    tol_grad : float, optional
        Defaults to ``rtol * (1 + sum of weights)``.
    max_iter : int
    theta0 : ndarray, optional
        Starting matrix of shape (d, r).
    rtol : float
        Relative gradient tolerance used when ``tol_grad`` is not given.

    Returns
    -------
    LocalModel
        ``converged`` is False when the iteration cap was reached.
    """
    w = _weights_of(wp, data.n)
    # rows with zero weight do not enter the likelihood
    active = w > 0
    w = w[active]
    y = data.y[active]
    design = basis.design(data.x[active])
    # the concentration cap ignores rows whose weight is negligible
    capped = w >= 1e-12 * w.max()
    d, r = data.d, basis.r
    if tol_grad is None:
        tol_grad = rtol * (1.0 + w.sum())
    if theta0 is None:
        theta = np.zeros((d, r))
        z0 = vmf_core.mu_inverse(w @ y / w.sum())
        norm0 = np.linalg.norm(z0)
        if norm0 > THETA0_CAP:
            z0 *= THETA0_CAP / norm0
        theta[:, 0] = z0
    else:
        theta = np.array(theta0, dtype=float)

    value, grad, hess = _derivatives(theta, design, y, w)
    gnorm = float(np.linalg.norm(grad))
    history = [value]
    converged = gnorm <= tol_grad
    it = 0
    while it < max_iter:
        it += 1
        step = unvec(_newton_direction(vec(grad), hess), d)
        if converged:
            # polishing: the objective change is below roundoff here, so judge
            # the full step by the gradient norm instead
            cand = theta + step
            new_value, new_grad, new_hess = _derivatives(cand, design, y, w)
            new_norm = float(np.linalg.norm(new_grad))
            roundoff = 1e-12 * (1.0 + abs(value))
            if new_norm < gnorm and new_value <= value + roundoff:
                theta, value, grad, hess, gnorm = cand, new_value, new_grad, new_hess, new_norm
                history.append(value)
            break
        t = 1.0
        accepted = False
        for _ in range(60):
            cand = theta + t * step
            z_norm = np.linalg.norm(design[capped] @ cand.T, axis=1)
            if np.all(z_norm <= CONCENTRATION_CAP):
                cand_value = _objective(cand, design, y, w)
                if cand_value <= value:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
        value, grad, hess = _derivatives(cand, design, y, w)
        theta = cand
        gnorm = float(np.linalg.norm(grad))
        history.append(value)
        converged = gnorm <= tol_grad
    if not converged:
        logger.debug("Newton iteration stopped with gradient norm %g", gnorm)
    return LocalModel(
        basis=basis,
        theta=theta,
        converged=bool(gnorm <= tol_grad),
        iterations=it,
        final_gradient_norm=gnorm,
        objective=value,
        history=history,
    )


def smooth_at(data, x_o, order, n_eff, wp=None, **fit_options):
    """Estimate the natural parameter ``f(x_o)`` by a local GLM fit.

    Returns
    -------
    z_hat : ndarray, shape (d,)
        First column of the fitted ``Theta`` (the basis is centred at ``x_o``).
    model : LocalModel
    """
    x_o = np.atleast_1d(np.asarray(x_o, dtype=float))
    if wp is None:
        wp = solve_weight_scale(data, x_o, n_eff)
    basis = LocalBasis(order, x_o)
    model = newton_fit(data, wp, basis, **fit_options)
    return model.theta[:, 0].copy(), model
