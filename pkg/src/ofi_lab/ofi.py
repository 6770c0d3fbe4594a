"""Order flow imbalance processes.

Two independent constructions of the same law are kept side by side:

* two-sided: Q(t) = sum of N^+(alpha^+ Lambda*(t)) draws of X^+ minus the
  sum of N^-(alpha^- Lambda*(t)) draws of X^-;
* compound: one stream N((alpha^+ + alpha^-) Lambda*(t)) of jumps equal to
  +X^+ with probability p = alpha^+/(alpha^+ + alpha^-) and -X^- otherwise.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, MomentUndefined, NonPositiveIntensity
from .flow_models import default_grid, place_arrivals, sample_subordinator_path
from .seeding import batched, make_rng

S_GRID = np.linspace(-5.0, 5.0, 101)
_LAW_CODES = {
    "constant": _kernels.LAW_CONSTANT,
    "exponential": _kernels.LAW_EXPONENTIAL,
    "uniform": _kernels.LAW_UNIFORM,
    "bernoulli": _kernels.LAW_BERNOULLI,
}
_JUMPS_PER_BATCH = 4_000_000


@dataclass(frozen=True)
class ComponentLaw:
    """Nonnegative order-size law sampled by inverse CDF of one uniform.

    constant: p1; exponential: scale p1; uniform: on [p1, p2];
    bernoulli: p1 with probability p2, else 0.
    """

    kind: str
    p1: float
    p2: float = 0.0

    def __post_init__(self):
        if self.kind not in _LAW_CODES:
            raise DomainError(f"unknown component law {self.kind!r}")
        p1, p2 = float(self.p1), float(self.p2)
        ok = {
            "constant": p1 >= 0,
            "exponential": p1 > 0,
            "uniform": 0 <= p1 <= p2,
            "bernoulli": p1 >= 0 and 0 <= p2 <= 1,
        }[self.kind]
        if not ok or not (math.isfinite(p1) and math.isfinite(p2)):
            raise DomainError(f"invalid parameters for {self.kind} law: {p1}, {p2}")
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "p2", p2)

    @classmethod
    def constant(cls, value):
        return cls("constant", value)

    @classmethod
    def exponential(cls, scale):
        return cls("exponential", scale)

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", lo, hi)

    @classmethod
    def bernoulli(cls, value, prob):
        return cls("bernoulli", value, prob)

    @property
    def code(self):
        return _LAW_CODES[self.kind]

    def inverse_cdf(self, v):
        v = np.asarray(v, float)
        if self.kind == "constant":
            return np.full(v.shape, self.p1)
        if self.kind == "exponential":
            return -self.p1 * np.log1p(-v)
        if self.kind == "uniform":
            return self.p1 + (self.p2 - self.p1) * v
        return np.where(v < self.p2, self.p1, 0.0)

    def sample(self, n, seed=None):
        return self.inverse_cdf(make_rng(seed).random(int(n)))

    def moment(self, r):
        """E X^r for r > 0 (inf when it overflows a double)."""
        r = float(r)
        try:
            if self.kind == "constant":
                return self.p1**r
            if self.kind == "exponential":
                return self.p1**r * math.gamma(r + 1.0)
            if self.kind == "uniform":
                lo, hi = self.p1, self.p2
                if hi == lo:
                    return lo**r
                return (hi ** (r + 1) - lo ** (r + 1)) / ((r + 1) * (hi - lo))
            return self.p2 * self.p1**r
        except OverflowError:
            return math.inf

    @property
    def mean(self):
        return self.moment(1.0)

    @property
    def var(self):
        m2 = self.moment(2.0)
        return math.inf if math.isinf(m2) else m2 - self.mean**2

    def cf(self, s):
        s = np.asarray(s, float)
        if self.kind == "constant":
            return np.exp(1j * s * self.p1)
        if self.kind == "exponential":
            return 1.0 / (1.0 - 1j * s * self.p1)
        if self.kind == "uniform":
            lo, hi = self.p1, self.p2
            if hi == lo:
                return np.exp(1j * s * lo)
            with np.errstate(invalid="ignore", divide="ignore"):
                val = (np.exp(1j * s * hi) - np.exp(1j * s * lo)) / (1j * s * (hi - lo))
            return np.where(s == 0, 1.0 + 0j, val)
        return 1.0 - self.p2 + self.p2 * np.exp(1j * s * self.p1)

    def to_config(self):
        return {"law": self.kind, "p1": repr(self.p1), "p2": repr(self.p2)}


@dataclass(frozen=True)
class JumpLaw:
    """Mixture jump X = +X^+ with probability mix_weight, else -X^-."""

    plus_law: ComponentLaw
    minus_law: ComponentLaw
    mix_weight: float = 0.5

    def __post_init__(self):
        w = float(self.mix_weight)
        if not 0 < w < 1:
            raise DomainError(f"mix_weight must lie in (0, 1), got {w}")
        object.__setattr__(self, "mix_weight", w)

    @classmethod
    def for_spec(cls, plus_law, minus_law, spec):
        return cls(plus_law, minus_law, spec.mix_weight)

    def cf(self, s):
        """E exp(i s X) = p f^+(s) + (1 - p) f^-(-s)."""
        s = np.asarray(s, float)
        p = self.mix_weight
        return p * self.plus_law.cf(s) + (1 - p) * self.minus_law.cf(-s)

    def sample(self, n, seed=None):
        rng = make_rng(seed)
        u = rng.random(int(n))
        p = self.mix_weight
        plus = u < p
        out = np.empty(u.size)
        out[plus] = self.plus_law.inverse_cdf(u[plus] / p)
        out[~plus] = -self.minus_law.inverse_cdf((u[~plus] - p) / (1 - p))
        return out


@dataclass(frozen=True)
class MixtureMoments:
    mean: float
    variance: float
    abs_moment: float
    beta: float


def mixture_moments(jumps, beta=2.0):
    """Mean, variance and E|X|^beta of the mixed jump.

    Var X = p D X^+ + q D X^- + p q (E X^+ + E X^-)^2, the variance of the
    two-point randomisation.
    """
    p = jumps.mix_weight
    q = 1.0 - p
    a, b = jumps.plus_law, jumps.minus_law
    vals = (a.mean, b.mean, a.var, b.var, a.moment(beta), b.moment(beta))
    if not all(math.isfinite(v) for v in vals):
        raise MomentUndefined("component moment is not finite")
    mean = p * a.mean - q * b.mean
    var = p * a.var + q * b.var + p * q * (a.mean + b.mean) ** 2
    return MixtureMoments(mean, var, p * a.moment(beta) + q * b.moment(beta), float(beta))


def imbalance_moments(r, plus_law, minus_law, beta=2.0):
    """Moments of the jump written through the imbalance ratio r.

    Returns (signed_mean, unsigned_mean, abs_moment): the signed mean
    r/(1+r) E X^+ - 1/(1+r) E X^- is the mean of the mixed jump; the
    unsigned combination r/(1+r) E X^+ + 1/(1+r) E X^- is its mean absolute
    value.  abs_moment is r/(1+r) E (X^+)^beta + 1/(1+r) E (X^-)^beta.
    """
    if not r > 0:
        raise NonPositiveIntensity("r must be positive")
    w = r / (1.0 + r)
    v = 1.0 / (1.0 + r)
    return (
        w * plus_law.mean - v * minus_law.mean,
        w * plus_law.mean + v * minus_law.mean,
        w * plus_law.moment(beta) + v * minus_law.moment(beta),
    )


@dataclass(frozen=True)
class ImbalanceState:
    r: float
    lambda_star_scale: float

    @property
    def mix_weight(self):
        return self.r / (1.0 + self.r)

    @property
    def alpha_plus(self):
        return self.r * self.lambda_star_scale

    @property
    def alpha_minus(self):
        return self.lambda_star_scale

    def total_intensity(self, lambda_star):
        """Lambda(t) = (1 + r) * alpha^- Lambda*(t)."""
        return (1.0 + self.r) * self.lambda_star_scale * np.asarray(lambda_star, float)


def imbalance_reparameterize(alpha_plus, alpha_minus):
    """(alpha^+, alpha^-) -> (r = alpha^+/alpha^-, scale alpha^-)."""
    if not (alpha_plus > 0 and alpha_minus > 0):
        raise NonPositiveIntensity("alpha_plus and alpha_minus must be positive")
    return ImbalanceState(alpha_plus / alpha_minus, float(alpha_minus))


# --- single paths -----------------------------------------------------------


@dataclass(frozen=True)
class OfiPath:
    """Running imbalance; the first point is (0, 0, side 0)."""

    event_times: np.ndarray
    values: np.ndarray
    side_marks: np.ndarray
    horizon: float
    seed: object = None

    @property
    def terminal(self):
        return float(self.values[-1])

    @property
    def n_events_plus(self):
        return int(np.count_nonzero(self.side_marks > 0))

    @property
    def n_events_minus(self):
        return int(np.count_nonzero(self.side_marks < 0))

    def value_at(self, t):
        """Right-continuous step interpolation."""
        idx = np.searchsorted(self.event_times, t, side="right") - 1
        return self.values[np.maximum(idx, 0)]

    def summary(self):
        return {
            "terminal": self.terminal,
            "n_events_plus": self.n_events_plus,
            "n_events_minus": self.n_events_minus,
            "seed": self.seed,
        }

    def write_csv(self, fh):
        fh.write("time,value,side\n")
        for t, v, s in zip(self.event_times.tolist(), self.values.tolist(), self.side_marks.tolist()):
            fh.write(f"{t:.9f},{v!r},{'+' if s > 0 else '-' if s < 0 else '0'}\n")

    def summary_json(self):
        return json.dumps(self.summary(), sort_keys=True)


def _assemble(times, jumps, marks, horizon, seed):
    order = np.argsort(times, kind="stable")
    t = np.concatenate(([0.0], times[order]))
    v = np.concatenate(([0.0], np.cumsum(jumps[order])))
    m = np.concatenate(([0], marks[order])).astype(np.int8)
    return OfiPath(t, v, m, float(horizon), seed)


def simulate_ofi_two_sided(jumps, spec, horizon, seed=None):
    """One path of the difference of two compound Cox processes."""
    rng = make_rng(seed)
    path = sample_subordinator_path(spec, default_grid(spec, horizon), rng)
    tp = place_arrivals(path, spec.alpha_plus, rng)
    tm = place_arrivals(path, spec.alpha_minus, rng)
    xp = jumps.plus_law.inverse_cdf(rng.random(tp.size))
    xm = jumps.minus_law.inverse_cdf(rng.random(tm.size))
    times = np.concatenate((tp, tm))
    vals = np.concatenate((xp, -xm))
    marks = np.concatenate((np.ones(tp.size), -np.ones(tm.size)))
    return _assemble(times, vals, marks, horizon, seed if not isinstance(seed, np.random.Generator) else None)


def simulate_ofi_compound(jumps, spec, horizon, seed=None):
    """One path of the compound Cox process with mixture jumps."""
    rng = make_rng(seed)
    path = sample_subordinator_path(spec, default_grid(spec, horizon), rng)
    t = place_arrivals(path, spec.alpha_plus + spec.alpha_minus, rng)
    u = rng.random(t.size)
    p = jumps.mix_weight
    plus = u < p
    vals = np.empty(t.size)
    vals[plus] = jumps.plus_law.inverse_cdf(u[plus] / p)
    vals[~plus] = -jumps.minus_law.inverse_cdf((u[~plus] - p) / (1 - p))
    marks = np.where(plus, 1, -1)
    return _assemble(t, vals, marks, horizon, seed if not isinstance(seed, np.random.Generator) else None)


# --- Monte Carlo of values on a grid ----------------------------------------


def _batch_size(spec, jumps_grid_total, n_paths):
    per_path = max(1.0, jumps_grid_total)
    return int(max(1, min(20_000, _JUMPS_PER_BATCH // per_path, n_paths)))


def _expected_total(spec, horizon):
    """Rough expected driver mass, used only to size batches."""
    from .distributions.gig import gig_mean
    from .flow_models import sample_subordinator_terminal

    if spec.family == "gig_windowed":
        return spec.params["scale"] * gig_mean(spec.gig_params) * horizon / spec.params["window"]
    return float(np.mean(sample_subordinator_terminal(spec, horizon, 256, 0)))


def ofi_on_grid(jumps, spec, grid, n_paths, seed=None, mode="two_sided", threads=None, backend=None, stream=()):
    """Q at each grid time for ``n_paths`` independent paths.

    ``grid`` starts at 0; returns an (n_paths, len(grid)) array.  Batches
    are seeded by (seed, batch index) so results do not depend on threads.
    """
    if mode not in ("two_sided", "compound"):
        raise ValueError(f"unknown mode {mode!r}")
    kb = _kernels.backend if backend is None else backend
    grid = np.asarray(grid, float)
    horizon = float(grid[-1])
    mean_mass = _expected_total(spec, horizon) * (spec.alpha_plus + spec.alpha_minus)
    stream = tuple(stream) + (1 if mode == "two_sided" else 2,)

    def one_batch(rng, size):
        cum = sample_subordinator_path(spec, grid, rng, n_paths=size)
        d = np.diff(cum, axis=1)
        if mode == "two_sided":
            cp = rng.poisson(spec.alpha_plus * d).astype(np.int64).ravel()
            cm = rng.poisson(spec.alpha_minus * d).astype(np.int64).ravel()
            up = rng.random(int(cp.sum()))
            um = rng.random(int(cm.sum()))
            a, b = jumps.plus_law, jumps.minus_law
            inc = kb.component_sums(cp, up, a.code, a.p1, a.p2) - kb.component_sums(cm, um, b.code, b.p1, b.p2)
        else:
            c = rng.poisson((spec.alpha_plus + spec.alpha_minus) * d).astype(np.int64).ravel()
            u = rng.random(int(c.sum()))
            a, b = jumps.plus_law, jumps.minus_law
            inc = kb.mixture_sums(c, u, jumps.mix_weight, a.code, a.p1, a.p2, b.code, b.p1, b.p2)
        inc = inc.reshape(size, grid.size - 1)
        return np.concatenate((np.zeros((size, 1)), np.cumsum(inc, axis=1)), axis=1)

    bs = _batch_size(spec, mean_mass, n_paths)
    return batched(one_batch, n_paths, seed, *stream, batch_size=bs, threads=threads)


def ofi_terminal(jumps, spec, horizon, n_paths, seed=None, mode="two_sided", threads=None, backend=None, stream=()):
    """Monte Carlo draws of Q(horizon)."""
    return ofi_on_grid(jumps, spec, [0.0, horizon], n_paths, seed, mode, threads, backend, stream)[:, -1]


def empirical_cf(samples, s_grid=S_GRID):
    """Sample mean of exp(i s X) on the grid."""
    x = np.asarray(samples, float)
    s = np.asarray(s_grid, float)
    out = np.empty(s.size, complex)
    for j in range(0, s.size, 8):
        out[j : j + 8] = np.exp(1j * np.outer(s[j : j + 8], x)).mean(axis=1)
    return out


def compound_poisson_cf(jumps, intensity, s_grid=S_GRID):
    """exp(intensity (f(s) - 1)) for total intensity (alpha^+ + alpha^-) Lambda."""
    return np.exp(intensity * (jumps.cf(s_grid) - 1.0))


def wald_mean(jumps, spec, horizon):
    """E Q(t) = E Lambda*(t) (alpha^+ E X^+ - alpha^- E X^-) for a linear driver."""
    if spec.family != "deterministic_linear":
        raise ValueError("closed-form mean implemented for the deterministic driver")
    lam = spec.params["slope"] * spec.params["scale"] * horizon
    return lam * (spec.alpha_plus * jumps.plus_law.mean - spec.alpha_minus * jumps.minus_law.mean)
