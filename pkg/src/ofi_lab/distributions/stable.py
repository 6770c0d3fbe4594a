"""Strictly stable laws G_{alpha,theta} with characteristic function

    g(s) = exp(-|s|^alpha exp(-i pi theta alpha sign(s) / 2)).

Under this convention the alpha = 2 law is N(0, 2), and theta = 1 with
alpha <= 1 gives positive laws with Laplace transform exp(-u^alpha).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from ..errors import DomainError
from ..seeding import make_rng


@dataclass(frozen=True)
class StableParams:
    alpha_exp: float
    theta: float = 0.0

    def __post_init__(self):
        a, t = float(self.alpha_exp), float(self.theta)
        if not 0 < a <= 2:
            raise DomainError(f"characteristic exponent must lie in (0, 2], got {a}")
        if abs(t) > min(1.0, 2.0 / a - 1.0) + 1e-12:
            raise DomainError(f"skew theta={t} outside |theta| <= min(1, 2/alpha - 1)")
        object.__setattr__(self, "alpha_exp", a)
        object.__setattr__(self, "theta", t)

    @property
    def one_sided(self):
        return self.theta == 1.0 and self.alpha_exp < 1.0


def stable_cf(params, s):
    """Characteristic function evaluated exactly from its defining formula."""
    s = np.asarray(s, float)
    a, t = params.alpha_exp, params.theta
    phase = np.exp(-0.5j * math.pi * t * a * np.sign(s))
    return np.exp(-(np.abs(s) ** a) * phase)


def stable_sample(params, n, seed=None):
    """Chambers-Mallows-Stuck transform of a uniform angle and an Exp(1).

    With V uniform on (-pi/2, pi/2), W ~ Exp(1) and v0 = pi theta / 2,
    X = sin(a (V + v0)) / cos(V)^{1/a} * (cos(V - a (V + v0)) / W)^{(1-a)/a}
    for a != 1; the a = 1 law is Cauchy with location sin(v0) and scale cos(v0).
    """
    rng = make_rng(seed)
    n = int(n)
    a, t = params.alpha_exp, params.theta
    v = math.pi * (rng.random(n) - 0.5)
    w = rng.standard_exponential(n)
    v0 = 0.5 * math.pi * t
    if a == 1.0:
        return math.sin(v0) + math.cos(v0) * np.tan(v)
    shifted = a * (v + v0)
    x = np.sin(shifted) / np.cos(v) ** (1.0 / a) * (np.cos(v - shifted) / w) ** ((1.0 - a) / a)
    if params.one_sided:
        x = np.maximum(x, 0.0)
    return x


def stable_mixture_sample(alpha_exp, n, seed=None):
    """Symmetric stable draws built as a normal scale mixture.

    sqrt(2 U) Z with U ~ G_{alpha/2, 1} and Z standard normal has
    characteristic function exp(-|s|^alpha), i.e. it is G_{alpha, 0}.  The
    factor 2 matches the normal variance 2 carried by this family's alpha = 2
    member.
    """
    if not 0 < alpha_exp < 2:
        raise DomainError("mixture representation needs 0 < alpha < 2")
    rng = make_rng(seed)
    u = stable_sample(StableParams(alpha_exp / 2.0, 1.0), n, rng)
    return np.sqrt(2.0 * u) * rng.standard_normal(int(n))


def levy_cdf(x, c=0.5):
    """CDF of the Levy law with scale c, 2 (1 - Phi(sqrt(c / x))).

    c = 1/2 is G_{1/2,1}, the positive law with Laplace transform exp(-sqrt(u)).
    """
    x = np.asarray(x, float)
    with np.errstate(divide="ignore"):
        return np.where(x > 0, special.erfc(np.sqrt(c / (2.0 * np.where(x > 0, x, 1.0)))), 0.0)
