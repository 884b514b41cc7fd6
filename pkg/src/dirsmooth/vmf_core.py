"""Von Mises-Fisher numerics in arbitrary dimension ``d >= 2``.

vMF(z) has density ``exp(z'y - gamma(z))`` with respect to the uniform law on
the unit sphere of R^d.  The cumulant function depends on ``z`` only through
``t = |z|``::

    gamma(z) = log G_d(t),   G_d(t) = int_{-1}^{1} exp(t u) h_d(u) du,

where ``h_d`` is the density of one coordinate of a uniform unit vector.
With ``U_t`` the projection of ``Y ~ vMF(t v)`` onto ``v``::

    mu(z)    = E(U_t) v
    Sigma(z) = Var(U_t) v v' + (1 - E U_t^2) / (d - 1) (I - v v')

For ``t <= t_switch(d)`` the moments come from the power series of ``G_d``
and of ``G_{d+2}, G_{d+4}`` (derivative recursion).  Beyond the switch point
a large-``t`` expansion is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln

from .errors import ConcentrationError, DomainError, SeriesRangeError

EPS_BOUNDARY = 1e-9
ZERO_NORM = 1e-14
_SERIES_REL_EPS = 1e-17
_LOG_SQRT_PI = 0.5 * math.log(math.pi)


def _check_dim(d):
    if int(d) != d or d < 2:
        raise DomainError(f"dimension must be an integer >= 2, got {d!r}")
    return int(d)


def half_dim(d):
    """Return ``a_d = (d - 1) / 2``."""
    return (_check_dim(d) - 1) / 2.0


def density_constant(d):
    """Return ``C_d = 1 / B(1/2, a_d)``."""
    return math.exp(-betaln(0.5, half_dim(d)))


def density_hd(u, d):
    """Density of ``Y'v`` for ``Y`` uniform on the unit sphere of R^d.

    Parameters
    ----------
    u : float or array_like
        Points in the open interval (-1, 1).
    d : int
        Ambient dimension.

    Returns
    -------
    float or ndarray
        ``C_d (1 - u^2)^(a_d - 1)``.
    """
    a = half_dim(d)
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) >= 1.0):
        raise DomainError("h_d is defined on the open interval (-1, 1) only")
    out = density_constant(d) * (1.0 - u * u) ** (a - 1.0)
    return float(out) if out.ndim == 0 else out


def t_switch(d):
    """Concentration beyond which the large-``t`` expansion replaces the series."""
    return float(min(100 * _check_dim(d), 300))


# --------------------------------------------------------------------------
# power series


def series_coefficient(d, k):
    """Taylor coefficient ``c_{d,k}`` of ``G_d(t) = sum_k c_{d,k} t^(2k)``."""
    d = _check_dim(d)
    return math.exp(
        -2 * k * math.log(2.0) + gammaln(d / 2) - gammaln(k + 1) - gammaln(k + d / 2)
    )


def g_series(d, t, eps=1e-16, t_max=None):
    """Evaluate ``G_d(t)`` by its Taylor series to absolute accuracy ``eps``.

    Summation stops at the first index ``k`` whose term is at most ``eps``
    and whose successor ratio ``(t/2)^2 / ((k+1)(k+d/2))`` is at most 1/2;
    the neglected tail is then bounded by ``eps``.

    Raises
    ------
    SeriesRangeError
        If ``|t|`` exceeds ``t_max`` (default ``t_switch(d)``).
    """
    d = _check_dim(d)
    if eps <= 0:
        raise DomainError("eps must be positive")
    t = abs(float(t))
    limit = t_switch(d) if t_max is None else float(t_max)
    if t > limit:
        raise SeriesRangeError(
            f"t={t} exceeds the series range {limit} for d={d}; "
            "use the large-t expansion (radial_moments) instead"
        )
    q = (t / 2.0) ** 2
    term = 1.0
    total = 1.0
    k = 0
    while True:
        ratio = q / ((k + 1) * (k + d / 2.0))
        if term <= eps and ratio <= 0.5:
            return total
        term *= ratio
        total += term
        k += 1


def g_deriv(d, t, order, eps=1e-16):
    """First or second derivative of ``G_d`` via ``G_d' = (t/d) G_{d+2}``."""
    d = _check_dim(d)
    t = float(t)
    if abs(t) > t_switch(d):
        raise SeriesRangeError(f"t={t} exceeds the series range for d={d}")
    if order == 1:
        return t / d * g_series(d + 2, t, eps)
    if order == 2:
        return g_series(d + 2, t, eps) / d + t * t / (d * (d + 2)) * g_series(d + 4, t, eps)
    raise DomainError(f"unsupported derivative order {order!r}; use 1 or 2")


def _n_series_terms(d, t):
    # paper's stopping rule in relative form, evaluated at the largest t
    q = (t / 2.0) ** 2
    term = total = 1.0
    k = 0
    while True:
        ratio = q / ((k + 1) * (k + d / 2.0))
        if ratio <= 0.5 and term <= _SERIES_REL_EPS * total:
            return k + 1
        term *= ratio
        total += term
        k += 1


_SERIES_BINS = (2.0, 8.0, 32.0, 100.0, 200.0)


def _series_sums(d, t, shifts):
    """Return ``[G_{d+s}(t) for s in shifts]`` for an array ``0 <= t <= 300``.

    Values are grouped by magnitude so small ``t`` uses few terms.
    """
    t = np.asarray(t, dtype=float)
    sums = [np.empty_like(t) for _ in shifts]
    group = np.digitize(t, _SERIES_BINS)
    for g in np.unique(group):
        sel = group == g
        for dst, src in zip(sums, _series_sums_block(d, t[sel], shifts)):
            dst[sel] = src
    return sums


def _series_sums_block(d, t, shifts):
    t_max = float(t.max())
    n_terms = _n_series_terms(d, t_max)
    q_max = max((t_max / 2.0) ** 2, 1e-300)
    ratio = (t / 2.0) ** 2 / q_max
    k = np.arange(n_terms, dtype=float)
    sums = []
    for s in shifts:
        half = (d + s) / 2.0
        # Horner in (t/2)^2 / q_max; scaled coefficients are the terms at t_max
        log_coef = gammaln(half) - gammaln(k + 1.0) - gammaln(k + half) + k * math.log(q_max)
        coef = np.exp(log_coef)
        acc = np.full_like(t, coef[-1])
        for c in coef[-2::-1]:
            acc = acc * ratio + c
        sums.append(acc)
    return sums


def log_g(d, t):
    """``log G_d(t)`` for an array of ``t``, without the moment terms."""
    d = _check_dim(d)
    t = np.abs(np.asarray(t, dtype=float))
    flat = np.atleast_1d(t).ravel()
    out = np.empty_like(flat)
    low = flat <= t_switch(d)
    if low.any():
        out[low] = np.log(_series_sums(d, flat[low], (0,))[0])
    if (~low).any():
        out[~low] = asymptotic_moments(d, flat[~low])[0]
    return float(out[0]) if t.ndim == 0 else out.reshape(t.shape)


def series_moments(d, t):
    """Radial quantities from the power series.

    Returns
    -------
    tuple of ndarray
        ``(gamma, E U_t, Var U_t, (1 - E U_t^2)/(d-1))`` for ``t >= 0``.
    """
    d = _check_dim(d)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    g0, g2, g4 = _series_sums(d, t, (0, 2, 4))
    eu = t / d * g2 / g0
    eu2 = g2 / (d * g0) + t * t / (d * (d + 2)) * g4 / g0
    return np.log(g0), eu, eu2 - eu * eu, (1.0 - eu2) / (d - 1)


# --------------------------------------------------------------------------
# large-t expansion


def _asymptotic_coefficients(a, t_min, n_terms=None):
    # h_d(1 - r) is proportional to r^(a-1) (1 - r/2)^(a-1); expanding the last
    # factor binomially and integrating term by term against exp(-t r) gives
    # sums S_l(t) = sum_j beta_j (a)_{l+j} t^(-j)  (Pochhammer rising factorial).
    adaptive = n_terms is None
    limit = 200 if adaptive else n_terms
    beta = [1.0]
    growth = 1.0  # (a+2)_j, relative size of the l=2 Pochhammer factor
    prev = math.inf
    for j in range(1, limit):
        b = beta[-1] * (a - j) / j * -0.5
        if b == 0.0:
            break
        growth *= a + 1.0 + j
        size = abs(b) * growth / t_min**j
        if adaptive and size > prev:
            break  # optimal truncation of a divergent expansion
        beta.append(b)
        if adaptive and size < _SERIES_REL_EPS:
            break
        prev = size
    poch = np.ones(len(beta) + 2)
    for i in range(1, poch.size):
        poch[i] = poch[i - 1] * (a + i - 1.0)
    return np.asarray(beta), poch


def asymptotic_moments(d, t, n_terms=None):
    """Radial quantities from the large-``t`` expansion of ``G_d``.

    The expansion is carried until its terms drop below double precision
    (finite for odd ``d``); ``n_terms`` fixes the truncation instead.

    Returns
    -------
    tuple of ndarray
        ``(gamma, E U_t, Var U_t, (1 - E U_t^2)/(d-1))`` for ``t > 0``.
    """
    d = _check_dim(d)
    a = (d - 1) / 2.0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise DomainError("the large-t expansion needs t > 0")
    beta, poch = _asymptotic_coefficients(a, float(t.min()), n_terms)
    inv = 1.0 / t
    sums = []
    for ell in range(3):
        coef = beta * poch[ell : ell + beta.size]
        acc = np.zeros_like(t)
        for c in coef[::-1]:
            acc = acc * inv + c
        sums.append(acc)
    s0, s1, s2 = sums
    m1 = s1 / s0 * inv
    m2 = s2 / s0 * inv * inv
    log_const = (a - 1.0) * math.log(2.0) + gammaln(d / 2.0) - _LOG_SQRT_PI
    gamma = log_const + t - a * np.log(t) + np.log(s0)
    return gamma, 1.0 - m1, m2 - m1 * m1, (2.0 * m1 - m2) / (d - 1)


def asymptotic_moments_leading(d, t):
    """Two-term large-``t`` approximations with the ``O(t^-2)`` remainders dropped."""
    d = _check_dim(d)
    a = (d - 1) / 2.0
    t = np.asarray(t, dtype=float)
    log_const = (a - 1.0) * math.log(2.0) + gammaln(d / 2.0) - _LOG_SQRT_PI
    gamma = log_const + t - a * np.log(t) - a * (a - 1.0) / (2.0 * t) * (1.0 + 1.0 / (2.0 * t))
    eu = 1.0 - a / t * (1.0 - (a - 1.0) / (2.0 * t))
    var = a / t**2 * (1.0 - (a - 1.0) / t)
    perp = 1.0 / t * (1.0 - a / t)
    return gamma, eu, var, perp


# --------------------------------------------------------------------------
# combined radial evaluation


def radial_moments(d, t, switch=None):
    """``(gamma~_d(t), E U_t, Var U_t, (1 - E U_t^2)/(d-1))`` for any real ``t``.

    ``gamma~_d`` is even and ``E U_t = gamma~_d'(t)`` is odd in ``t``.
    Arrays are evaluated elementwise; scalars give scalars.
    """
    d = _check_dim(d)
    ts = t_switch(d) if switch is None else float(switch)
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    flat = np.atleast_1d(t).ravel()
    at = np.abs(flat)
    out = [np.empty_like(at) for _ in range(4)]
    low = at <= ts
    for mask, fn in ((low, series_moments), (~low, asymptotic_moments)):
        if mask.any():
            for dst, src in zip(out, fn(d, at[mask])):
                dst[mask] = src
    out[1] *= np.where(flat < 0, -1.0, 1.0)
    if scalar:
        return tuple(float(x[0]) for x in out)
    return tuple(x.reshape(t.shape) for x in out)


def gamma_tilde(d, t):
    """``log G_d(t)``."""
    return radial_moments(d, t)[0]


def gamma_tilde_prime(d, t):
    """``E U_t``, the length of the vMF mean vector at concentration ``t``."""
    return radial_moments(d, t)[1]


def gamma_tilde_second(d, t):
    """``Var U_t``."""
    return radial_moments(d, t)[2]


# --------------------------------------------------------------------------
# vector parameters


@dataclass(frozen=True)
class VmfMoments:
    """Cumulant value and first two moments of vMF(z)."""

    gamma: float
    mu: np.ndarray
    sigma: np.ndarray
    eut: float
    vut: float
    perp: float


def _norm_direction(z):
    z = np.asarray(z, dtype=float)
    t = float(np.linalg.norm(z))
    if t < ZERO_NORM:
        return 0.0, np.zeros_like(z)
    return t, z / t


def vmf_moments(z, switch=None):
    """Cumulant, mean vector and covariance matrix of vMF(z)."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise DomainError("z must be a vector")
    d = _check_dim(z.size)
    t, v = _norm_direction(z)
    gamma, eu, var, perp = radial_moments(d, t, switch)
    sigma = perp * np.eye(d) + (var - perp) * np.outer(v, v)
    return VmfMoments(gamma=gamma, mu=eu * v, sigma=sigma, eut=eu, vut=var, perp=perp)


def cumulant(z):
    """``gamma(z)`` for a vector or for each row of a 2-d array."""
    z = np.asarray(z, dtype=float)
    t = np.linalg.norm(z, axis=-1)
    return log_g(z.shape[-1], t)


def batch_moments(z, switch=None):
    """Row-wise cumulant, means and covariances for an ``(n, d)`` array.

    Returns
    -------
    gamma : ndarray, shape (n,)
    mu : ndarray, shape (n, d)
    sigma : ndarray, shape (n, d, d)
    """
    z = np.asarray(z, dtype=float)
    n, d = z.shape
    t = np.linalg.norm(z, axis=1)
    small = t < ZERO_NORM
    t = np.where(small, 0.0, t)
    v = np.where(small[:, None], 0.0, z / np.where(small, 1.0, t)[:, None])
    gamma, eu, var, perp = radial_moments(d, t, switch)
    mu = eu[:, None] * v
    sigma = (var - perp)[:, None, None] * v[:, :, None] * v[:, None, :]
    sigma[:, np.arange(d), np.arange(d)] += perp[:, None]
    return gamma, mu, sigma


def mu_inverse(m, eps_boundary=EPS_BOUNDARY, tol=1e-12):
    """Natural parameter ``z`` with ``mu(z) = m``.

    Solves ``gamma~_d'(t) = |m|`` by Newton's method with bisection safeguard
    and returns ``t m / |m|``.

    Raises
    ------
    ConcentrationError
        If ``|m| >= 1 - eps_boundary``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 1:
        raise DomainError("m must be a vector")
    d = _check_dim(m.size)
    r = float(np.linalg.norm(m))
    if r >= 1.0 - eps_boundary:
        raise ConcentrationError(
            f"mean resultant length {r} is too close to 1 to invert"
        )
    if r < ZERO_NORM:
        return np.zeros(d)
    return invert_mean_length(d, r, tol) * m / r


def invert_mean_length(d, r, tol=1e-12):
    """Root ``t >= 0`` of ``gamma~_d'(t) = r`` for ``0 <= r < 1``."""
    if r == 0:
        return 0.0
    lo, hi = 0.0, d * r / (1.0 - r * r)
    while radial_moments(d, hi)[1] < r:
        lo, hi = hi, 2.0 * hi
    t = hi
    for _ in range(500):
        _, eu, var, _ = radial_moments(d, t)
        f = eu - r
        if abs(f) <= tol:
            return t
        if f > 0:
            hi = t
        else:
            lo = t
        step = t - f / var if var > 0 else -1.0
        t = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4e-16 * hi:
            return t
    return t


# --------------------------------------------------------------------------
# sampling


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_radial(d, t, count, rng):
    """Draw ``U_t`` with density proportional to ``exp(t u) h_d(u)``, ``d >= 3``.

    Rejection from a transformed Beta((d-1)/2, (d-1)/2) proposal.
    """
    dm1 = d - 1.0
    b = dm1 / (math.sqrt(4.0 * t * t + dm1 * dm1) + 2.0 * t)
    x0 = (1.0 - b) / (1.0 + b)
    c = t * x0 + dm1 * math.log(1.0 - x0 * x0)
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        batch = max(16, int(need * 1.3) + 8)
        zb = rng.beta(dm1 / 2.0, dm1 / 2.0, size=batch)
        w = (1.0 - (1.0 + b) * zb) / (1.0 - (1.0 - b) * zb)
        logu = np.log(rng.uniform(size=batch))
        ok = w[t * w + dm1 * np.log1p(-x0 * w) - c >= logu]
        take = min(need, ok.size)
        out[filled : filled + take] = ok[:take]
        filled += take
    return out


def sample_orthogonal(v, count, rng):
    """Uniform draws on the unit sphere of the complement of unit vector ``v``."""
    g = rng.standard_normal((count, v.size))
    g -= np.outer(g @ v, v)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_vmf(z, count, seed=None):
    """Independent draws from vMF(z).

    Uses ``Y = U_t v + sqrt(1 - U_t^2) S_v`` with ``U_t`` and ``S_v``
    independent.  For ``d = 2`` the angle is drawn from numpy's von Mises
    sampler; for ``d >= 3`` ``U_t`` comes from :func:`sample_radial`.

    Parameters
    ----------
    z : array_like, shape (d,)
    count : int
    seed : int, Generator or None
        Deterministic given an integer seed.

    Returns
    -------
    ndarray, shape (count, d)
    """
    if count < 0:
        raise DomainError("count must be non-negative")
    rng = _as_rng(seed)
    z = np.asarray(z, dtype=float)
    d = _check_dim(z.size)
    t, v = _norm_direction(z)
    if t == 0.0:
        y = rng.standard_normal((count, d))
    elif d == 2:
        phi = rng.vonmises(0.0, t, size=count)
        vp = np.array([-v[1], v[0]])
        y = np.cos(phi)[:, None] * v + np.sin(phi)[:, None] * vp
    else:
        u = sample_radial(d, t, count, rng)
        s = sample_orthogonal(v, count, rng)
        y = u[:, None] * v + np.sqrt(np.clip(1.0 - u * u, 0.0, None))[:, None] * s
    return y / np.linalg.norm(y, axis=1, keepdims=True)
