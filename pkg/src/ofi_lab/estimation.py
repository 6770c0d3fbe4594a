"""Empirical pipeline on event logs: binned arrival counts, GIG fits,
windowed intensity estimates and the buy/sell intensity ratio.

Buy pressure counts limit buys, market buys and cancellations of sell
orders; sell pressure is the mirror image.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from .book_engine import BUY, CANCEL, read_book_csv
from .distributions.gig import GigParams, gig_cdf, gig_logpdf, gig_pdf
from .distributions.bessel import log_bessel_k
from .errors import DegenerateSample, DomainError, EmptyLog, FitDiverged, InsufficientData
from .seeding import make_rng

DEFAULT_TRIM = 300.0
MIN_FIT_SAMPLES = 30


@dataclass
class EventLog:
    """Time-ordered events with session bounds and excluded windows."""

    times: np.ndarray
    buy: np.ndarray  # True where the event adds buying pressure
    session: tuple
    excluded: list = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, float)
        self.buy = np.asarray(self.buy, bool)
        if self.times.shape != self.buy.shape:
            raise ValueError("times and buy flags must align")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("event times must be nondecreasing")
        s0, s1 = map(float, self.session)
        if not s1 > s0:
            raise ValueError("session end must follow its start")
        self.session = (s0, s1)
        self.excluded = [tuple(map(float, w)) for w in self.excluded]

    def __len__(self):
        return self.times.size

    @classmethod
    def from_events(cls, events, session=None, trim=DEFAULT_TRIM):
        """Build from BookEvent objects (or (event, bid, ask) tuples)."""
        evs = [e[0] if isinstance(e, tuple) else e for e in events]
        times = np.array([e.time for e in evs], float)
        buy = np.array([(e.side == BUY) != (e.kind == CANCEL) for e in evs], bool)
        return cls.with_trim(times, buy, session, trim)

    @classmethod
    def with_trim(cls, times, buy, session=None, trim=DEFAULT_TRIM):
        times = np.asarray(times, float)
        if session is None:
            if times.size == 0:
                raise EmptyLog("log has no events and no session bounds")
            session = (math.floor(times[0]), math.ceil(times[-1]) if times[-1] > math.floor(times[0]) else times[-1] + 1.0)
        s0, s1 = session
        excluded = []
        if trim and trim > 0:
            excluded = [(s0, min(s1, s0 + trim)), (max(s0, s1 - trim), s1)]
        return cls(times, buy, (s0, s1), excluded)

    def side_times(self, side):
        if side in ("buy", "+", BUY):
            return self.times[self.buy]
        if side in ("sell", "-", "S"):
            return self.times[~self.buy]
        if side in ("all", None):
            return self.times
        raise ValueError(f"unknown side {side!r}")

    def shifted(self, dt):
        return EventLog(self.times + dt, self.buy, (self.session[0] + dt, self.session[1] + dt), [(a + dt, b + dt) for a, b in self.excluded])

    def swapped(self):
        return EventLog(self.times, ~self.buy, self.session, self.excluded)


def load_event_log(path, session=None, trim=DEFAULT_TRIM):
    """Read the event-log CSV; raises EmptyLog when it has no events."""
    rows = read_book_csv(path)
    if not rows:
        raise EmptyLog(f"{path}: no events")
    return EventLog.from_events(rows, session, trim)


@dataclass
class BinnedCounts:
    starts: np.ndarray
    counts: np.ndarray
    width: float


def _windows(log, width):
    """Starts of full windows inside the session that avoid excluded spans."""
    if not width > 0:
        raise ValueError("window width must be positive")
    s0, s1 = log.session
    n = int(math.floor((s1 - s0) / width + 1e-9))
    starts = s0 + width * np.arange(n)
    ends = starts + width
    keep = np.ones(n, bool)
    for a, b in log.excluded:
        if b > a:
            keep &= (ends <= a) | (starts >= b)
    return starts[keep]


def _count(times, starts, width):
    lo = np.searchsorted(times, starts, side="left")
    hi = np.searchsorted(times, starts + width, side="left")
    return (hi - lo).astype(np.int64)


def bin_counts(log, side="buy", bin_width=15.0):
    """Arrival counts of one side per bin; bins touching exclusions are dropped."""
    if len(log) == 0:
        raise EmptyLog("log has no events")
    starts = _windows(log, bin_width)
    if starts.size == 0:
        raise EmptyLog("no complete bins outside the excluded windows")
    return BinnedCounts(starts, _count(log.side_times(side), starts, bin_width), float(bin_width))


# --- GIG fitting ---------------------------------------------------------------


@dataclass
class GigFit:
    params: GigParams
    log_likelihood: float
    converged: bool
    n_observations: int
    submodel: str = "gig"

    def to_dict(self):
        return {
            "params": self.params.to_dict(),
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
            "n_observations": self.n_observations,
            "submodel": self.submodel,
        }


def gig_loglik(params, x):
    return float(np.sum(gig_logpdf(params, x)))


# each submodel maps an unconstrained vector to GigParams
_SUBMODELS = {
    "gig": lambda th: GigParams(th[0], math.exp(th[1]), math.exp(th[2])),
    "gamma": lambda th: GigParams(math.exp(th[0]), 0.0, math.exp(th[1])),
    "inverse_gamma": lambda th: GigParams(-math.exp(th[0]), math.exp(th[1]), 0.0),
    "inverse_gaussian": lambda th: GigParams(-0.5, math.exp(th[0]), math.exp(th[1])),
}


def _starts(x, init):
    """Starting vectors per submodel, seeded from sample moments."""
    m = float(x.mean())
    v = float(x.var())
    hm = float(np.mean(1.0 / x))
    shape = max(m * m / v, 1e-3)
    out = {"gig": [], "gamma": [], "inverse_gamma": [], "inverse_gaussian": []}
    if init is not None:
        if init.mu > 0 and init.lam > 0:
            out["gig"].append([init.nu, math.log(init.mu), math.log(init.lam)])
    for nu0 in (-2.0, -0.5, 0.5, 2.0):
        for w0 in (0.5, 2.0, 8.0):
            ratio = math.exp(log_bessel_k(nu0 + 1, w0) - log_bessel_k(nu0, w0))
            eta = m / ratio
            out["gig"].append([nu0, math.log(eta * w0), math.log(w0 / eta)])
    out["gamma"].append([math.log(shape), math.log(2.0 * shape / m)])
    # inverse gamma: E 1/X = a / (mu/2)
    a_ig = max(shape + 2.0, 1.5)
    out["inverse_gamma"].append([math.log(a_ig), math.log(2.0 * a_ig / hm)])
    # inverse Gaussian with matched mean m and shape from E X, E 1/X
    ig_shape = 1.0 / max(hm - 1.0 / m, 1e-12)
    out["inverse_gaussian"].append([math.log(ig_shape), math.log(ig_shape / (m * m))])
    return out


def fit_gig(data, init=None):
    """Maximum-likelihood GIG fit by multi-start Nelder-Mead.

    The interior model is searched over (nu, log mu, log lambda); the gamma,
    inverse-gamma and inverse-Gaussian submodels are fitted separately and
    the best likelihood wins, which handles optima on the boundary.
    """
    x = np.asarray(data, float).ravel()
    if x.size < MIN_FIT_SAMPLES:
        raise InsufficientData(f"need at least {MIN_FIT_SAMPLES} observations, got {x.size}")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("fit_gig needs finite positive observations")
    if np.all(x == x[0]):
        raise DegenerateSample("all observations are equal")
    # work on a unit scale; GIG is closed under scaling
    c = float(np.median(x))
    xs = x / c
    best = None
    for name, starts in _starts(xs, None if init is None else _rescale(init, 1.0 / c)).items():
        to_params = _SUBMODELS[name]

        def nll(th, to_params=to_params):
            try:
                val = -gig_loglik(to_params(th), xs)
            except (ValueError, OverflowError):
                return np.inf
            return val if math.isfinite(val) else np.inf

        for th0 in starts:
            if not math.isfinite(nll(th0)):
                continue
            res = optimize.minimize(
                nll, th0, method="Nelder-Mead", options={"xatol": 1e-7, "fatol": 1e-8, "maxiter": 4000, "maxfev": 8000}
            )
            if not math.isfinite(res.fun):
                continue
            if best is None or res.fun < best[0] - 1e-10:
                best = (res.fun, name, res.x, bool(res.success))
    if best is None:
        raise FitDiverged("no start produced a finite likelihood")
    fun, name, th, ok = best
    params = _rescale(_SUBMODELS[name](th), c)
    ll = gig_loglik(params, x)
    if not math.isfinite(ll):
        raise FitDiverged("fitted likelihood is not finite")
    return GigFit(params, ll, ok, int(x.size), name)


def _rescale(p, c):
    """Law of c X when X ~ GIG(nu, mu, lam)."""
    return GigParams(p.nu, p.mu * c, p.lam / c)


def fit_histogram(data, fit, bins=30):
    """Rows (bin_left, bin_right, count, fitted_density) for plotting."""
    x = np.asarray(data, float)
    counts, edges = np.histogram(x, bins=bins)
    mids = 0.5 * (edges[:-1] + edges[1:])
    dens = gig_pdf(fit.params, mids)
    return list(zip(edges[:-1].tolist(), edges[1:].tolist(), counts.tolist(), np.atleast_1d(dens).tolist()))


def ks_to_fit(data, fit):
    """KS distance between the data and the fitted GIG distribution."""
    return float(stats.kstest(np.asarray(data, float), lambda v: gig_cdf(fit.params, v)).statistic)


# --- intensities -------------------------------------------------------------------


@dataclass
class IntensityEstimate:
    starts: np.ndarray
    rates: np.ndarray
    window: float
    dispersion_index: float
    overdispersion_p: float

    @property
    def overdispersed(self):
        return self.overdispersion_p < 0.01


def dispersion_test(counts):
    """Poisson dispersion index and the upper-tail chi-square p-value."""
    c = np.asarray(counts, float)
    if c.size < 2 or c.mean() == 0:
        return 1.0, 1.0
    stat = float(np.sum((c - c.mean()) ** 2) / c.mean())
    return stat / (c.size - 1), float(stats.chi2.sf(stat, c.size - 1))


def estimate_intensity(log, side="buy", window=60.0):
    """Per-window counts divided by the window length (events per second)."""
    b = bin_counts(log, side, window)
    di, p = dispersion_test(b.counts)
    return IntensityEstimate(b.starts, b.counts / window, float(window), di, p)


@dataclass
class ImbalanceSeries:
    starts: np.ndarray
    ratio: np.ndarray
    buy_counts: np.ndarray
    sell_counts: np.ndarray
    window: float


def imbalance_series(log, window=60.0):
    """r(t) per window as (buy + 1/2) / (sell + 1/2)."""
    b = bin_counts(log, "buy", window)
    s = bin_counts(log, "sell", window)
    r = (b.counts + 0.5) / (s.counts + 0.5)
    return ImbalanceSeries(b.starts, r, b.counts, s.counts, float(window))


@dataclass
class CommonDriverDiagnostic:
    rho: float
    p_value: float
    n_windows: int
    n_permutations: int


def _rank_corr(rb, rs):
    rb = rb - rb.mean()
    rs = rs - rs.mean(axis=-1, keepdims=True)
    return (rs @ rb) / (np.sqrt((rb * rb).sum()) * np.sqrt((rs * rs).sum(axis=-1)))


def check_common_driver(log, window=15.0, n_permutations=2000, seed=0):
    """Spearman correlation of buy and sell counts per window with a
    one-sided permutation p-value for positive association."""
    b = bin_counts(log, "buy", window).counts
    s = bin_counts(log, "sell", window).counts
    if b.size < 50:
        raise InsufficientData(f"need at least 50 windows, got {b.size}")
    rb = stats.rankdata(b)
    rs = stats.rankdata(s)
    if np.all(rb == rb[0]) or np.all(rs == rs[0]):
        return CommonDriverDiagnostic(0.0, 1.0, int(b.size), 0)
    rho = float(_rank_corr(rb, rs[None, :])[0])
    rng = make_rng(seed)
    hits = 0
    for start in range(0, n_permutations, 500):
        m = min(500, n_permutations - start)
        perm = rng.permuted(np.broadcast_to(rs, (m, rs.size)), axis=1)
        hits += int(np.count_nonzero(_rank_corr(rb, perm) >= rho - 1e-12))
    return CommonDriverDiagnostic(rho, (hits + 1) / (n_permutations + 1), int(b.size), n_permutations)
