"""Modified Bessel function of the third kind, K_nu(z), for real order.

Temme's method: a power series for z <= 2, Steed's continued fraction for
z > 2, both evaluated at the reduced order |mu| <= 1/2 and then carried up
to the target order by forward recurrence.  The recurrence runs on the
ratio K_{mu+1}/K_mu and in log space so that large orders at small
arguments cannot overflow.
"""

import math

import numpy as np

from ..errors import DomainError

_EPS = 1e-16
_MAXIT = 10_000
_SERIES_MAX = 2.0

# Taylor coefficients of 1/Gamma(z) about z = 0 (c_1 .. c_26).
_RGAMMA_COEFFS = (
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
)
_EVEN = _RGAMMA_COEFFS[1::2]  # c_2, c_4, ...
_ODD = _RGAMMA_COEFFS[0::2]  # c_1, c_3, ...


def _gamma_pieces(mu):
    """Return gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu) for |mu| <= 1/2.

    gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu) and
    gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2, both summed directly from
    the even/odd halves of the 1/Gamma series so no cancellation occurs.
    """
    m2 = mu * mu
    gam1 = 0.0
    for c in reversed(_EVEN):
        gam1 = gam1 * m2 + c
    gam1 = -gam1
    gam2 = 0.0
    for c in reversed(_ODD):
        gam2 = gam2 * m2 + c
    return gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1


def _series(mu, x):
    """K_mu(x) and K_{mu+1}(x) by Temme's series (x <= 2)."""
    x2 = 0.5 * x
    pimu = math.pi * mu
    fact = 1.0 if abs(pimu) < _EPS else pimu / math.sin(pimu)
    d = -math.log(x2)
    e = mu * d
    fact2 = 1.0 if abs(e) < _EPS else math.sinh(e) / e
    gam1, gam2, gampl, gammi = _gamma_pieces(mu)
    ff = fact * (gam1 * math.cosh(e) + gam2 * fact2 * d)
    total = ff
    e = math.exp(e)
    p = 0.5 * e / gampl
    q = 0.5 / (e * gammi)
    c = 1.0
    d = x2 * x2
    total1 = p
    mu2 = mu * mu
    for i in range(1, _MAXIT):
        ff = (i * ff + p + q) / (i * i - mu2)
        c *= d / i
        p /= i - mu
        q /= i + mu
        delta = c * ff
        total += delta
        total1 += c * (p - i * ff)
        if abs(delta) < abs(total) * _EPS:
            break
    return total, total1 * 2.0 / x


def _steed(mu, x):
    """log K_mu(x) and the ratio K_{mu+1}(x)/K_mu(x) by Steed's CF (x > 2)."""
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25 - mu * mu
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAXIT):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    h *= a1
    log_k = 0.5 * math.log(math.pi / (2.0 * x)) - x - math.log(s)
    ratio = (mu + x + 0.5 - h) / x
    return log_k, ratio


def _log_k_scalar(nu, z):
    if not z > 0.0 or not math.isfinite(z):
        raise DomainError(f"bessel_k requires 0 < z < inf, got z={z}")
    nu = abs(float(nu))
    nl = int(nu + 0.5)
    mu = nu - nl
    if z <= _SERIES_MAX:
        k0, k1 = _series(mu, z)
        log_k = math.log(k0)
        ratio = k1 / k0
    else:
        log_k, ratio = _steed(mu, z)
    # K_{m+1}/K_m = 2 m / z + K_{m-1}/K_m, walked up from the reduced order
    for i in range(1, nl + 1):
        log_k += math.log(ratio)
        ratio = 2.0 * (mu + i) / z + 1.0 / ratio
    return log_k


def log_bessel_k(nu, z):
    """Natural log of K_nu(z); broadcasts over array arguments."""
    nu_a, z_a = np.broadcast_arrays(np.asarray(nu, float), np.asarray(z, float))
    if nu_a.ndim == 0:
        return _log_k_scalar(float(nu_a), float(z_a))
    out = np.empty(nu_a.shape)
    for idx in np.ndindex(nu_a.shape):
        out[idx] = _log_k_scalar(nu_a[idx], z_a[idx])
    return out


def bessel_k(nu, z):
    """K_nu(z) for real nu and z > 0.

    Raises DomainError for z <= 0.  Very large values overflow to inf; use
    :func:`log_bessel_k` or :func:`bessel_kve` when that matters.
    """
    return np.exp(log_bessel_k(nu, z))


def bessel_kve(nu, z):
    """Exponentially scaled K_nu(z) * exp(z)."""
    return np.exp(log_bessel_k(nu, z) + np.asarray(z, float))


def bessel_k_ratio(nu, r, z):
    """K_{nu+r}(z) / K_nu(z), computed without forming either factor."""
    return np.exp(log_bessel_k(nu + r, z) - log_bessel_k(nu, z))
