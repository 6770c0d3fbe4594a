"""Generalized hyperbolic law as a normal variance-mean mixture.

X = alpha U + sigma sqrt(U) Z with U ~ GIG and Z standard normal, so

    P(X < x) = int_0^inf Phi((x - alpha z) / (sigma sqrt z)) p_GIG(z) dz.

Density and distribution function are evaluated by adaptive quadrature over
the mixing variable, split around the bulk of the GIG mixer.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from ..errors import DomainError, MomentUndefined, QuadratureFailure
from ..seeding import make_rng
from .gig import GigParams, gig_mean, gig_mode, gig_moment, gig_pdf, gig_sample, gig_var

_EPSABS = 1e-10
_LIMIT = 500  # subintervals; about 10^4 integrand evaluations with 21-point rules
_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GhParams:
    """Drift ``alpha``, scale ``sigma`` and GIG mixing parameters."""

    alpha: float
    sigma: float
    gig: GigParams

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"invalid GH parameters alpha={self.alpha}, sigma={self.sigma}")
        if not isinstance(self.gig, GigParams):
            raise DomainError("gig must be a GigParams instance")
        # the limit laws built here have finite variance; reject mixers without it
        try:
            gig_mean(self.gig)
            if self.alpha != 0:
                gig_var(self.gig)
        except MomentUndefined as exc:
            raise DomainError(f"mixing law lacks the moments a GH target needs: {exc}") from None

    def to_dict(self):
        return {"alpha": self.alpha, "sigma": self.sigma, "gig": self.gig.to_dict()}

    @classmethod
    def from_dict(cls, d):
        return cls(alpha=float(d["alpha"]), sigma=float(d["sigma"]), gig=GigParams.from_dict(d["gig"]))


def gh_mean(params):
    return params.alpha * gig_mean(params.gig)


def gh_var(params):
    g = params.gig
    return params.sigma**2 * gig_mean(g) + params.alpha**2 * gig_var(g)


def _breaks(g):
    """Interior breakpoints around the bulk of the GIG mixer g.

    A tight mixer concentrates its mass in a window much narrower than
    (0, mode); without these points the first quadrature pass can miss it.
    """
    m = gig_mode(g)
    centre = m if m > 0 else gig_moment(g, 1.0)
    try:
        sd = math.sqrt(max(gig_var(g), 0.0))
    except MomentUndefined:
        sd = centre
    pts = {centre}
    for k in (1.0, 4.0, 12.0):
        for q in (centre - k * sd, centre + k * sd):
            if 0 < q and math.isfinite(q):
                pts.add(q)
    return sorted(pts)


def _integrate(f, breaks, vector):
    """Sum of adaptive integrals over the pieces between breakpoints.

    scipy's own warnings are silenced; each piece is judged by its reported
    error estimate instead, which must stay below max(1e3 epsabs, 1e-8 |value|).
    """
    edges = [0.0] + list(breaks) + [np.inf]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            if vector:
                v, err = integrate.quad_vec(f, a, b, epsabs=_EPSABS, epsrel=1e-10, limit=_LIMIT)
                scale = float(np.max(np.abs(v))) if np.size(v) else 0.0
            else:
                v, err = integrate.quad(f, a, b, epsabs=_EPSABS, epsrel=1e-10, limit=_LIMIT)
                scale = abs(v)
        if not np.all(np.isfinite(v)) or not math.isfinite(err):
            raise QuadratureFailure("non-finite mixture integral")
        if err > max(1e3 * _EPSABS, 1e-8 * scale):
            raise QuadratureFailure(f"mixture quadrature error estimate {err:.3g} above tolerance on [{a:.6g}, {b:.6g}]")
        total = total + v
    return total


def integrate_over_mixer(f, gig, vector=False):
    """int_0^inf f(z) dz for an integrand weighted by the GIG density,
    split around the bulk of the mixer."""
    return _integrate(f, _breaks(gig), vector)


def _normal_kernel(params, x, z):
    s = params.sigma * math.sqrt(z)
    return np.exp(-0.5 * ((x - params.alpha * z) / s) ** 2) / (_SQRT2PI * s)


def _normal_cdf_kernel(params, x, z):
    s = params.sigma * math.sqrt(z)
    return special.ndtr((x - params.alpha * z) / s)


def _mixture(params, x, kernel):
    x = np.asarray(x, float)
    g = params.gig
    breaks = _breaks(g)

    def f(z):
        if z <= 0.0:
            return np.zeros_like(x) if x.ndim else 0.0
        w = float(gig_pdf(g, z))
        if w == 0.0:
            return np.zeros_like(x) if x.ndim else 0.0
        return w * kernel(params, x, z)

    if x.ndim == 0:
        return float(_integrate(f, breaks, vector=False))
    return np.asarray(_integrate(f, breaks, vector=True), float)


def gh_pdf(params, x):
    """Density of the variance-mean mixture at x."""
    return _mixture(params, x, _normal_kernel)


def gh_cdf(params, x):
    """Distribution function of the variance-mean mixture at x."""
    return np.clip(_mixture(params, x, _normal_cdf_kernel), 0.0, 1.0)


def gh_sample(params, n, seed=None):
    """alpha U + sigma sqrt(U) Z with U drawn from the GIG mixer."""
    rng = make_rng(seed)
    u = gig_sample(params.gig, n, rng)
    z = rng.standard_normal(int(n))
    return params.alpha * u + params.sigma * np.sqrt(u) * z
