"""Generalized inverse Gaussian law GIG(nu, mu, lambda).

Density on x > 0::

    lambda^{nu/2} / (2 mu^{nu/2} K_nu(sqrt(mu lambda))) x^{nu-1} exp(-(mu/x + lambda x)/2)

with the boundary families mu = 0 (gamma, shape nu, rate lambda/2) and
lambda = 0 (inverse gamma, shape -nu, scale mu/2) handled by their own code
paths.  nu = -1/2 is the inverse Gaussian law with mean sqrt(mu/lambda) and
shape mu.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, special

from ..errors import DomainError, MomentUndefined
from ..seeding import make_rng
from .bessel import log_bessel_k

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class GigParams:
    """Parameter triple (nu, mu, lam); ``lam`` stands for lambda."""

    nu: float
    mu: float
    lam: float

    def __post_init__(self):
        nu, mu, lam = float(self.nu), float(self.mu), float(self.lam)
        if not all(map(math.isfinite, (nu, mu, lam))) or mu < 0 or lam < 0:
            raise DomainError(f"invalid GIG parameters {self}")
        if nu < 0 and not mu > 0:
            raise DomainError("nu < 0 requires mu > 0")
        if nu == 0 and not (mu > 0 and lam > 0):
            raise DomainError("nu = 0 requires mu > 0 and lam > 0")
        if nu > 0 and not lam > 0:
            raise DomainError("nu > 0 requires lam > 0")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "lam", lam)

    @property
    def kind(self):
        if self.mu == 0:
            return "gamma"
        if self.lam == 0:
            return "inverse_gamma"
        if self.nu == -0.5:
            return "inverse_gaussian"
        return "gig"

    @property
    def eta(self):
        """Scale sqrt(mu/lam) of the two-parameter form."""
        return math.sqrt(self.mu / self.lam)

    @property
    def omega(self):
        """Concentration sqrt(mu*lam)."""
        return math.sqrt(self.mu * self.lam)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(nu=d["nu"], mu=d["mu"], lam=d.get("lam", d.get("lambda")))


def gig_logpdf(params, x):
    """Log density; -inf for x <= 0."""
    p = params
    x = np.asarray(x, float)
    out = np.full(x.shape, -np.inf)
    pos = x > 0
    xp = x[pos]
    if p.kind == "gamma":
        rate = p.lam / 2.0
        out[pos] = p.nu * math.log(rate) - special.gammaln(p.nu) + (p.nu - 1) * np.log(xp) - rate * xp
    elif p.kind == "inverse_gamma":
        a, scale = -p.nu, p.mu / 2.0
        out[pos] = a * math.log(scale) - special.gammaln(a) - (a + 1) * np.log(xp) - scale / xp
    else:
        log_c = 0.5 * p.nu * math.log(p.lam / p.mu) - math.log(2.0) - log_bessel_k(p.nu, p.omega)
        with np.errstate(over="ignore", divide="ignore"):
            out[pos] = log_c + (p.nu - 1) * np.log(xp) - 0.5 * (p.mu / xp + p.lam * xp)
    return out if out.ndim else float(out)


def gig_pdf(params, x):
    """Density at x (zero for x <= 0)."""
    return np.exp(gig_logpdf(params, x))


def gig_mode(params):
    p = params
    if p.kind == "gamma":
        return max(p.nu - 1.0, 0.0) * 2.0 / p.lam
    if p.kind == "inverse_gamma":
        return p.mu / (2.0 * (1.0 - p.nu))
    a = p.nu - 1.0
    # stable form of ((nu-1) + sqrt((nu-1)^2 + mu lam)) / lam
    if a >= 0:
        return (a + math.sqrt(a * a + p.mu * p.lam)) / p.lam
    return p.mu / (math.sqrt(a * a + p.mu * p.lam) - a)


def gig_moment(params, r):
    """E X^r for real r; MomentUndefined when it diverges."""
    p = params
    if p.kind == "gamma":
        if p.nu + r <= 0:
            raise MomentUndefined(f"E X^{r} diverges for gamma shape {p.nu}")
        return math.exp(special.gammaln(p.nu + r) - special.gammaln(p.nu) + r * math.log(2.0 / p.lam))
    if p.kind == "inverse_gamma":
        if -p.nu - r <= 0:
            raise MomentUndefined(f"E X^{r} diverges for inverse gamma shape {-p.nu}")
        return math.exp(special.gammaln(-p.nu - r) - special.gammaln(-p.nu) + r * math.log(p.mu / 2.0))
    w = p.omega
    return p.eta**r * math.exp(log_bessel_k(p.nu + r, w) - log_bessel_k(p.nu, w))


def gig_mean(params):
    return gig_moment(params, 1.0)


def gig_var(params):
    m1 = gig_moment(params, 1.0)
    return gig_moment(params, 2.0) - m1 * m1


def _quad_pdf(params, lo, hi, mode):
    """Adaptive quadrature of the density over [lo, hi] in u = log x."""

    def f(u):
        return math.exp(float(gig_logpdf(params, math.exp(u))) + u)

    ulo = math.log(lo) if lo > 0 else -np.inf
    uhi = math.log(hi)
    cuts = [ulo] + ([math.log(mode)] if lo < mode < hi else []) + [uhi]
    return sum(
        integrate.quad(f, a, b, epsabs=1e-14, epsrel=1e-12, limit=400)[0] for a, b in zip(cuts[:-1], cuts[1:])
    )


def _gl_pdf(params, lo, hi):
    """Vectorised 16-point Gauss-Legendre over many short intervals."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return half * (gig_pdf(params, pts) @ _GL_WEIGHTS)


def gig_cdf(params, x):
    """Distribution function.

    Boundary families use regularised incomplete gamma functions.  The
    interior case integrates the density: one adaptive quadrature from 0 to
    the smallest point, then Gauss-Legendre over each gap between sorted
    points, with gaps that are wide relative to the law's scale sent back to
    adaptive quadrature.
    """
    p = params
    x = np.asarray(x, float)
    scalar = x.ndim == 0
    flat = np.atleast_1d(x).ravel()
    out = np.zeros(flat.shape)
    pos = flat > 0
    if p.kind == "gamma":
        out[pos] = special.gammainc(p.nu, 0.5 * p.lam * flat[pos])
    elif p.kind == "inverse_gamma":
        out[pos] = special.gammaincc(-p.nu, 0.5 * p.mu / flat[pos])
    elif pos.any():
        xs = np.unique(flat[pos])
        fin = np.isfinite(xs)
        xf = xs[fin]
        vals = np.ones(xs.shape)
        if xf.size:
            mode = gig_mode(p)
            lo = np.concatenate(([0.0], xf[:-1]))
            inc = np.empty(xf.shape)
            # a gap is short if the log-density changes by O(1) across it
            with np.errstate(divide="ignore"):
                rough = abs(p.nu - 1.0) / lo + 0.5 * p.mu / lo**2 + 0.5 * p.lam
            narrow = (xf - lo) * rough <= 2.0
            narrow[0] = False
            if narrow.any():
                inc[narrow] = _gl_pdf(p, lo[narrow], xf[narrow])
            for i in np.flatnonzero(~narrow):
                inc[i] = _quad_pdf(p, lo[i], xf[i], mode)
            vals[fin] = np.minimum(np.cumsum(inc), 1.0)
        out[pos] = vals[np.searchsorted(xs, flat[pos])]
    out = out.reshape(np.shape(x))
    return float(out) if scalar else out


# --- sampling -------------------------------------------------------------


def _mode2(lam, omega):
    """Mode of x^{lam-1} exp(-omega/2 (x + 1/x)), lam >= 0."""
    if lam >= 1.0:
        return (math.sqrt((lam - 1.0) ** 2 + omega * omega) + (lam - 1.0)) / omega
    return omega / (math.sqrt((1.0 - lam) ** 2 + omega * omega) + (1.0 - lam))


def _fill(rng, n, propose):
    """Collect n accepted draws from a vectorised rejection step."""
    out = np.empty(n)
    got = 0
    batch = max(64, n)
    while got < n:
        cand = propose(rng, batch)
        take = min(cand.size, n - got)
        out[got : got + take] = cand[:take]
        got += take
        batch = max(64, 2 * (n - got))
    return out


def _rou_shift(rng, n, lam, omega):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _mode2(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    # the bounding rectangle touches x - xm at the roots of a cubic
    a = -(2.0 * (lam + 1.0) / omega + xm)
    b = 2.0 * (lam - 1.0) * xm / omega - 1.0
    c = xm
    pp = b - a * a / 3.0
    qq = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    fi = math.acos(-qq / (2.0 * math.sqrt(-(pp**3) / 27.0)))
    fak = 2.0 * math.sqrt(-pp / 3.0)
    y1 = fak * math.cos(fi / 3.0) - a / 3.0
    y2 = fak * math.cos(fi / 3.0 + 4.0 / 3.0 * math.pi) - a / 3.0
    uplus = (y1 - xm) * math.exp(t * math.log(y1) - s * (y1 + 1.0 / y1) - nc)
    uminus = (y2 - xm) * math.exp(t * math.log(y2) - s * (y2 + 1.0 / y2) - nc)

    def propose(rng, m):
        u = uminus + rng.random(m) * (uplus - uminus)
        v = rng.random(m)
        x = u / v + xm
        ok = x > 0
        x, v = x[ok], v[ok]
        return x[np.log(v) <= t * np.log(x) - s * (x + 1.0 / x) - nc]

    return _fill(rng, n, propose)


def _rou_noshift(rng, n, lam, omega):
    t = 0.5 * (lam - 1.0)
    s = 0.25 * omega
    xm = _mode2(lam, omega)
    nc = t * math.log(xm) - s * (xm + 1.0 / xm)
    ym = ((lam + 1.0) + math.sqrt((lam + 1.0) ** 2 + omega * omega)) / omega
    um = math.exp(0.5 * (lam + 1.0) * math.log(ym) - s * (ym + 1.0 / ym) - nc)

    def propose(rng, m):
        u = um * rng.random(m)
        v = rng.random(m)
        x = u / v
        ok = v > 0
        x, v = x[ok], v[ok]
        return x[np.log(v) <= t * np.log(x) - s * (x + 1.0 / x) - nc]

    return _fill(rng, n, propose)


def _dominating(rng, n, lam, omega):
    """Rejection from a three-piece hat; for lam < 1 and small omega."""
    xm = _mode2(lam, omega)
    x0 = omega / (1.0 - lam)
    xs = max(x0, 2.0 / omega)

    def logg(x):
        return (lam - 1.0) * np.log(x) - 0.5 * omega * (x + 1.0 / x)

    k1 = math.exp(logg(xm))
    a1 = k1 * x0
    if x0 < 2.0 / omega:
        k2 = math.exp(-omega)
        a2 = k2 * math.log(2.0 / omega**2) if lam == 0 else k2 / lam * (xs**lam - x0**lam)
    else:
        k2 = a2 = 0.0
    k3 = xs ** (lam - 1.0)
    a3 = 2.0 * k3 * math.exp(-xs * omega / 2.0) / omega
    atot = a1 + a2 + a3

    def propose(rng, m):
        u = rng.random(m)
        v = atot * rng.random(m)
        x = np.empty(m)
        h = np.empty(m)
        r1 = v <= a1
        r2 = ~r1 & (v <= a1 + a2)
        r3 = ~(r1 | r2)
        x[r1] = x0 * v[r1] / a1
        h[r1] = k1
        if r2.any():
            w = v[r2] - a1
            if lam == 0:
                x[r2] = omega * np.exp(w * math.exp(omega))
            else:
                x[r2] = (x0**lam + w * lam / k2) ** (1.0 / lam)
            h[r2] = k2 * x[r2] ** (lam - 1.0)
        w = v[r3] - (a1 + a2)
        x[r3] = -2.0 / omega * np.log(math.exp(-xs * omega / 2.0) - w * omega / (2.0 * k3))
        h[r3] = k3 * np.exp(-x[r3] * omega / 2.0)
        ok = np.isfinite(x) & (x > 0)
        x, u, h = x[ok], u[ok], h[ok]
        return x[np.log(u * h) <= logg(x)]

    return _fill(rng, n, propose)


def standard_gig_sample(lam, omega, n, rng):
    """Draws with density proportional to x^{lam-1} exp(-omega/2 (x + 1/x))."""
    if lam < 0:
        return 1.0 / standard_gig_sample(-lam, omega, n, rng)
    if lam > 2.0 or omega > 3.0:
        return _rou_shift(rng, n, lam, omega)
    if lam >= 1.0 - 2.25 * omega * omega or omega > 0.2:
        return _rou_noshift(rng, n, lam, omega)
    return _dominating(rng, n, lam, omega)


def inverse_gaussian_sample(mean, shape, n, rng):
    """Transformation-with-multiple-roots sampler for IG(mean, shape)."""
    y = rng.standard_normal(n) ** 2
    u = rng.random(n)
    m = mean
    x = m + m * m * y / (2.0 * shape) - m / (2.0 * shape) * np.sqrt(4.0 * m * shape * y + (m * y) ** 2)
    return np.where(u <= m / (m + x), x, m * m / x)


def gig_sample(params, n, seed=None):
    """n independent GIG draws.

    ``seed`` may be an int or a numpy Generator.
    """
    rng = make_rng(seed)
    p = params
    n = int(n)
    if p.kind == "gamma":
        return rng.gamma(p.nu, 2.0 / p.lam, n)
    if p.kind == "inverse_gamma":
        return (p.mu / 2.0) / rng.gamma(-p.nu, 1.0, n)
    if p.kind == "inverse_gaussian":
        return inverse_gaussian_sample(p.eta, p.mu, n, rng)
    return p.eta * standard_gig_sample(p.nu, p.omega, n, rng)
