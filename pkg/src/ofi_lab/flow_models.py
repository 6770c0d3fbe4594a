"""Counting processes: Poisson, thinned inhomogeneous Poisson, and Cox
processes driven by a random subordinator with the multiplicative split
Lambda^+ = alpha^+ Lambda*, Lambda^- = alpha^- Lambda*.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .distributions.gig import GigParams, gig_sample, inverse_gaussian_sample
from .distributions.stable import StableParams, stable_sample
from .errors import BoundViolation, ConfigError, UnsupportedIncrement
from .seeding import make_rng

FAMILIES = (
    "deterministic_linear",
    "gamma",
    "inverse_gaussian",
    "gig",
    "stable_one_sided",
    "gig_windowed",
)

# keys understood in flat config files; everything except family is numeric
SPEC_KEYS = (
    "family",
    "shape",
    "rate",
    "mu",
    "lam",
    "nu",
    "exponent",
    "slope",
    "scale",
    "window",
    "alpha_plus",
    "alpha_minus",
)

_FAMILY_PARAMS = {
    "deterministic_linear": {"slope": 1.0},
    "gamma": {"shape": 1.0, "rate": 1.0},
    "inverse_gaussian": {"mu": 1.0, "lam": 1.0},
    "gig": {"nu": None, "mu": None, "lam": None},
    "stable_one_sided": {"exponent": 0.5},
    "gig_windowed": {"nu": None, "mu": None, "lam": None, "window": None},
}


def power_law_rates(M, k, alpha):
    """Per-level rates k * i^{-alpha} for i = 1..M."""
    i = np.arange(1, int(M) + 1, dtype=float)
    return k * i ** (-float(alpha))


@dataclass
class RateConfig:
    """Static per-level event rates of the book model.

    ``limit_rates_plus[i-1]`` is the rate of limit buys i ticks below the
    best ask, ``limit_rates_minus[i-1]`` the rate of limit sells i ticks above
    the best bid.  ``cancel_rates_plus[i-1]`` cancels buy volume i-1 ticks
    below the best bid and ``cancel_rates_minus[i-1]`` cancels sell volume
    i-1 ticks above the best ask.
    """

    mu_plus: float
    mu_minus: float
    limit_rates_plus: np.ndarray
    limit_rates_minus: np.ndarray
    cancel_rates_plus: np.ndarray
    cancel_rates_minus: np.ndarray

    def __post_init__(self):
        vecs = ("limit_rates_plus", "limit_rates_minus", "cancel_rates_plus", "cancel_rates_minus")
        for name in vecs:
            setattr(self, name, np.asarray(getattr(self, name), float).ravel())
        sizes = {getattr(self, n).size for n in vecs}
        if len(sizes) != 1:
            raise ConfigError("rates", "all per-level rate vectors must have length M")
        for name in ("mu_plus", "mu_minus") + vecs:
            v = np.asarray(getattr(self, name), float)
            if not np.all(np.isfinite(v)) or np.any(v < 0):
                raise ConfigError(name, "rates must be finite and nonnegative")
        self.mu_plus = float(self.mu_plus)
        self.mu_minus = float(self.mu_minus)

    @property
    def M(self):
        return self.limit_rates_plus.size

    @classmethod
    def power_law(cls, M, k, alpha, mu_plus=0.0, mu_minus=0.0, cancel_k=0.0, cancel_alpha=None):
        lim = power_law_rates(M, k, alpha)
        can = power_law_rates(M, cancel_k, alpha if cancel_alpha is None else cancel_alpha)
        return cls(mu_plus, mu_minus, lim, lim.copy(), can, can.copy())

    @property
    def aggregate_plus(self):
        """Buy-side intensity; sell cancellations count toward buyers."""
        return self.mu_plus + self.limit_rates_plus.sum() + self.cancel_rates_minus.sum()

    @property
    def aggregate_minus(self):
        return self.mu_minus + self.limit_rates_minus.sum() + self.cancel_rates_plus.sum()

    @property
    def total_rate(self):
        return self.aggregate_plus + self.aggregate_minus

    def category_rates(self):
        """Rates in kernel order: market buy, market sell, limit buys,
        limit sells, buy cancels, sell cancels."""
        return np.concatenate(
            (
                [self.mu_plus, self.mu_minus],
                self.limit_rates_plus,
                self.limit_rates_minus,
                self.cancel_rates_plus,
                self.cancel_rates_minus,
            )
        )

    def scaled(self, buy=1.0, sell=1.0):
        """Copy with buy-side categories times ``buy`` and sell-side times ``sell``."""
        return RateConfig(
            self.mu_plus * buy,
            self.mu_minus * sell,
            self.limit_rates_plus * buy,
            self.limit_rates_minus * sell,
            self.cancel_rates_plus * sell,
            self.cancel_rates_minus * buy,
        )


@dataclass(frozen=True)
class IntensityPath:
    """Cumulative intensity sampled on a time grid."""

    times: np.ndarray
    cumulative: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, float)
        c = np.asarray(self.cumulative, float)
        if t.shape != c.shape or t.ndim != 1 or t.size < 1:
            raise ValueError("times and cumulative must be equal-length 1-d arrays")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if c[0] != 0 or np.any(np.diff(c) < 0) or not np.all(np.isfinite(c)):
            raise ValueError("cumulative must start at 0, be finite and nondecreasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "cumulative", c)

    @property
    def terminal(self):
        return float(self.cumulative[-1])

    def value_at(self, t):
        """Piecewise-linear interpolation of the cumulative intensity."""
        return np.interp(t, self.times, self.cumulative)

    def inverse(self, y):
        """Smallest time at which the interpolated path reaches level y."""
        y = np.asarray(y, float)
        c = self.cumulative
        j = np.clip(np.searchsorted(c, y, side="left"), 1, c.size - 1)
        c0, c1 = c[j - 1], c[j]
        t0, t1 = self.times[j - 1], self.times[j]
        with np.errstate(invalid="ignore", divide="ignore"):
            frac = np.where(c1 > c0, (y - c0) / (c1 - c0), 1.0)
        return t0 + np.clip(frac, 0.0, 1.0) * (t1 - t0)


@dataclass(frozen=True)
class SubordinatorSpec:
    """Nonnegative Levy driver Lambda* and the side multipliers alpha^+/-.

    ``params`` holds the family parameters; ``scale`` (default 1) multiplies
    every family.  Parameter conventions:

    * deterministic_linear: Lambda*(t) = slope t
    * gamma: Lambda*(t) ~ Gamma(shape t, rate)
    * inverse_gaussian: Lambda*(t) ~ GIG(-1/2, mu t^2, lam)
    * gig: Lambda*(1) ~ GIG(nu, mu, lam); exact increments only for the
      gamma (mu = 0) and inverse Gaussian (nu = -1/2) members
    * stable_one_sided: Lambda*(t) = t^{1/exponent} S with S ~ G_{exponent,1}
    * gig_windowed: intensity constant on windows of length ``window`` with
      i.i.d. GIG(nu, mu, lam) mass per window
    """

    family: str
    params: dict = field(default_factory=dict)
    alpha_plus: float = 1.0
    alpha_minus: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError("family", f"unknown subordinator family {self.family!r}")
        merged = {}
        defaults = _FAMILY_PARAMS[self.family]
        for key, default in defaults.items():
            val = self.params.get(key, default)
            if val is None:
                raise ConfigError(key, f"required for family {self.family}")
            merged[key] = float(val)
        merged["scale"] = float(self.params.get("scale", 1.0))
        extra = set(self.params) - set(merged)
        if extra:
            raise ConfigError(sorted(extra)[0], f"not a parameter of family {self.family}")
        object.__setattr__(self, "params", merged)
        for name in ("alpha_plus", "alpha_minus"):
            v = float(getattr(self, name))
            if not (v > 0 and math.isfinite(v)):
                raise ConfigError(name, "must be positive")
            object.__setattr__(self, name, v)
        p = merged
        if not p["scale"] > 0:
            raise ConfigError("scale", "must be positive")
        if self.family == "deterministic_linear" and not p["slope"] >= 0:
            raise ConfigError("slope", "must be nonnegative")
        if self.family == "gamma" and not (p["shape"] > 0 and p["rate"] > 0):
            raise ConfigError("shape", "gamma shape and rate must be positive")
        if self.family == "inverse_gaussian" and not (p["mu"] > 0 and p["lam"] > 0):
            raise ConfigError("mu", "inverse Gaussian needs mu > 0 and lam > 0")
        if self.family == "stable_one_sided" and not 0 < p["exponent"] <= 1:
            raise ConfigError("exponent", "one-sided stable exponent must lie in (0, 1]")
        if self.family in ("gig", "gig_windowed"):
            try:
                GigParams(p["nu"], p["mu"], p["lam"])
            except ValueError as exc:
                raise ConfigError("nu", str(exc)) from None
        if self.family == "gig_windowed" and not p["window"] > 0:
            raise ConfigError("window", "must be positive")

    @property
    def mix_weight(self):
        return self.alpha_plus / (self.alpha_plus + self.alpha_minus)

    @property
    def gig_params(self):
        p = self.params
        return GigParams(p["nu"], p["mu"], p["lam"])

    def has_exact_increments(self):
        if self.family != "gig":
            return True
        g = self.gig_params
        return g.kind in ("gamma", "inverse_gaussian")

    def to_config(self):
        """Flat key/value mapping (strings) for config files."""
        d = {"family": self.family}
        d.update({k: repr(v) for k, v in self.params.items()})
        d["alpha_plus"] = repr(self.alpha_plus)
        d["alpha_minus"] = repr(self.alpha_minus)
        return d

    @classmethod
    def from_config(cls, mapping):
        m = dict(mapping)
        if "family" not in m:
            raise ConfigError("family", "missing")
        family = str(m.pop("family")).strip()
        kw = {}
        for key in ("alpha_plus", "alpha_minus"):
            if key in m:
                kw[key] = _to_float(key, m.pop(key))
        for key in m:
            if key not in SPEC_KEYS:
                raise ConfigError(key, "unknown subordinator key")
        params = {k: _to_float(k, v) for k, v in m.items()}
        return cls(family, params, **kw)


def _to_float(key, value):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"not a number: {value!r}") from None


# --- Poisson building blocks ---------------------------------------------


def sample_poisson_arrivals(rate, horizon, seed=None):
    """Arrival times of a homogeneous Poisson process on (0, horizon]."""
    if not rate > 0 or not horizon > 0:
        raise ValueError("rate and horizon must be positive")
    rng = make_rng(seed)
    n = rng.poisson(rate * horizon)
    return np.sort(rng.random(n) * horizon)


def sample_inhomogeneous_arrivals(rate_fn, rate_bound, horizon, seed=None):
    """Thinning of a rate_bound Poisson stream by rate_fn(t) / rate_bound."""
    if not rate_bound > 0 or not horizon > 0:
        raise ValueError("rate_bound and horizon must be positive")
    rng = make_rng(seed)
    cand = sample_poisson_arrivals(rate_bound, horizon, rng)
    u = rng.random(cand.size)
    if cand.size == 0:
        return cand
    try:
        r = np.asarray(rate_fn(cand), float)
        if r.shape != cand.shape:
            raise ValueError
    except (TypeError, ValueError):
        r = np.array([float(rate_fn(t)) for t in cand])
    if np.any(r > rate_bound * (1 + 1e-12)) or np.any(r < 0):
        bad = float(r[np.argmax(np.abs(r))])
        raise BoundViolation(f"rate_fn value {bad} outside [0, {rate_bound}]")
    return cand[u * rate_bound < r]


# --- subordinators ---------------------------------------------------------


def _increments(spec, dt, rng):
    """Independent increments over intervals of lengths dt (any shape)."""
    p = spec.params
    fam = spec.family
    dt = np.asarray(dt, float)
    if fam == "deterministic_linear":
        inc = p["slope"] * dt
    elif fam == "gamma":
        inc = rng.gamma(p["shape"] * dt) / p["rate"]
    elif fam == "inverse_gaussian":
        # GIG(-1/2, mu dt^2, lam) = IG(mean dt sqrt(mu/lam), shape mu dt^2)
        inc = inverse_gaussian_sample(dt * math.sqrt(p["mu"] / p["lam"]), p["mu"] * dt * dt, dt.shape, rng)
    elif fam == "gig":
        g = spec.gig_params
        if g.kind == "gamma":
            inc = rng.gamma(g.nu * dt) * (2.0 / g.lam)
        elif g.kind == "inverse_gaussian":
            inc = inverse_gaussian_sample(dt * g.eta, g.mu * dt * dt, dt.shape, rng)
        else:
            raise UnsupportedIncrement("general GIG driver has no exact increment law")
    elif fam == "stable_one_sided":
        a = p["exponent"]
        if a == 1.0:
            inc = dt.copy()
        else:
            inc = dt ** (1.0 / a) * stable_sample(StableParams(a, 1.0), dt.size, rng).reshape(dt.shape)
    else:
        raise UnsupportedIncrement(f"{fam} increments depend on window alignment")
    return p["scale"] * inc


def sample_subordinator_terminal(spec, t, size, seed=None):
    """``size`` independent draws of Lambda*(t)."""
    rng = make_rng(seed)
    p = spec.params
    if spec.family == "gig":
        g = spec.gig_params
        if g.kind not in ("gamma", "inverse_gaussian"):
            if t != 1.0:
                raise UnsupportedIncrement("general GIG driver is defined at t = 1 only")
            return p["scale"] * gig_sample(g, size, rng)
    if spec.family == "gig_windowed":
        return sample_subordinator_path(spec, np.array([0.0, t]), rng, n_paths=size)[:, -1]
    return _increments(spec, np.full(int(size), float(t)), rng)


def _windowed_path(spec, grid, rng, n_paths):
    p = spec.params
    w = p["window"]
    n_win = max(1, int(math.ceil(grid[-1] / w - 1e-12)))
    mass = p["scale"] * gig_sample(spec.gig_params, n_paths * n_win, rng).reshape(n_paths, n_win)
    cum = np.concatenate((np.zeros((n_paths, 1)), np.cumsum(mass, axis=1)), axis=1)
    k = np.minimum((grid // w).astype(int), n_win - 1)
    frac = (grid - k * w) / w
    return cum[:, k] + frac * mass[:, k]


def sample_subordinator_path(spec, grid, seed=None, n_paths=None):
    """Sample Lambda*(t) on ``grid`` (strictly increasing, starting at 0).

    Returns an IntensityPath, or an (n_paths, len(grid)) array when
    ``n_paths`` is given.
    """
    grid = np.asarray(grid, float)
    if grid.ndim != 1 or grid.size < 1 or grid[0] != 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing and start at 0")
    rng = make_rng(seed)
    m = 1 if n_paths is None else int(n_paths)
    if spec.family == "gig_windowed":
        cum = _windowed_path(spec, grid, rng, m)
    elif spec.family == "gig" and not spec.has_exact_increments():
        if grid.size != 2 or grid[1] != 1.0:
            raise UnsupportedIncrement("general GIG driver supports only the grid [0, 1]")
        cum = np.zeros((m, 2))
        cum[:, 1] = sample_subordinator_terminal(spec, 1.0, m, rng)
    else:
        dt = np.broadcast_to(np.diff(grid), (m, grid.size - 1))
        inc = _increments(spec, dt, rng)
        cum = np.concatenate((np.zeros((m, 1)), np.cumsum(inc, axis=1)), axis=1)
    if n_paths is None:
        return IntensityPath(grid, cum[0])
    return cum


def default_grid(spec, horizon, cells=1024):
    """Grid on which Cox arrivals are placed for a given family."""
    if spec.family == "deterministic_linear" or (spec.family == "gig" and not spec.has_exact_increments()):
        return np.array([0.0, float(horizon)])
    if spec.family == "gig_windowed":
        w = spec.params["window"]
        g = np.arange(0.0, horizon, w)
        return np.append(g, horizon) if g[-1] < horizon else g
    return np.linspace(0.0, horizon, cells + 1)


@dataclass(frozen=True)
class CoxArrivals:
    plus: np.ndarray
    minus: np.ndarray
    path: IntensityPath


def place_arrivals(path, multiplier, rng):
    """Arrivals of N(multiplier * Lambda) where Lambda is linear between grid
    points: Poisson counts per cell, uniform positions within each cell."""
    d = np.diff(path.cumulative) * multiplier
    counts = rng.poisson(d)
    left = np.repeat(path.times[:-1], counts)
    width = np.repeat(np.diff(path.times), counts)
    return np.sort(left + rng.random(left.size) * width)


def sample_cox_arrivals(spec, horizon, seed=None, grid=None):
    """Buy and sell streams time-changed by alpha^+ Lambda* and alpha^- Lambda*.

    Arrivals are exact for drivers that are linear between grid points
    (deterministic, windowed GIG, terminal-law GIG on [0, 1]); for the other
    families counts are exact at grid points and positions within a cell are
    uniform.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    rng = make_rng(seed)
    grid = default_grid(spec, horizon) if grid is None else np.asarray(grid, float)
    path = sample_subordinator_path(spec, grid, rng)
    plus = place_arrivals(path, spec.alpha_plus, rng)
    minus = place_arrivals(path, spec.alpha_minus, rng)
    return CoxArrivals(plus, minus, path)


def driver_law_at(spec, t):
    """GigParams of Lambda*(t)/scale when that law is GIG, else None."""
    p = spec.params
    if spec.family == "gamma":
        return GigParams(p["shape"] * t, 0.0, 2.0 * p["rate"])
    if spec.family == "inverse_gaussian":
        return GigParams(-0.5, p["mu"] * t * t, p["lam"])
    if spec.family == "gig":
        g = spec.gig_params
        if g.kind == "gamma":
            return GigParams(g.nu * t, 0.0, g.lam)
        if g.kind == "inverse_gaussian":
            return GigParams(-0.5, g.mu * t * t, g.lam)
        if t == 1.0:
            return g
        raise UnsupportedIncrement("general GIG driver is defined at t = 1 only")
    return None


def driver_mean(spec, t=1.0):
    """E Lambda*(t) in closed form (inf for one-sided stable exponent < 1)."""
    from .distributions.gig import gig_mean

    p = spec.params
    fam = spec.family
    if fam == "deterministic_linear":
        m = p["slope"] * t
    elif fam == "stable_one_sided":
        m = t if p["exponent"] == 1.0 else math.inf
    elif fam == "gig_windowed":
        m = gig_mean(spec.gig_params) * t / p["window"]
    else:
        m = gig_mean(driver_law_at(spec, t))
    return p["scale"] * m
