"""Limit order book on the price lattice 1..M with unit-size transitions.

Prices are 1-based.  Internally the ladders are stored with two padding
slots (index 0 and M+1) so that the compiled kernel can index by price.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import backend as _default_backend
from .errors import ConfigError, EmptyLog, InvalidEvent
from .flow_models import default_grid, sample_subordinator_path
from .seeding import make_rng

CSV_HEADER = ("time", "side", "kind", "level_offset", "size", "best_bid", "best_ask", "mid")
BUY, SELL = "B", "S"
LIMIT, MARKET, CANCEL = "L", "M", "C"


@dataclass
class BookState:
    """Ask and bid volume ladders; ``ask_volumes[p-1]`` is V^a_p."""

    M: int
    ask_volumes: np.ndarray
    bid_volumes: np.ndarray
    clock: float = 0.0

    def __post_init__(self):
        self.M = int(self.M)
        if self.M < 2:
            raise ConfigError("M", "lattice needs at least 2 levels")
        self.ask_volumes = np.array(self.ask_volumes, dtype=np.int64).ravel()
        self.bid_volumes = np.array(self.bid_volumes, dtype=np.int64).ravel()
        if self.ask_volumes.size != self.M or self.bid_volumes.size != self.M:
            raise ConfigError("M", "volume ladders must have length M")
        self.check()

    def check(self):
        """Raise ValueError if an invariant is broken."""
        a, b = self.ask_volumes, self.bid_volumes
        if np.any(a < 0) or np.any(b < 0):
            raise ValueError("negative volume")
        if np.any((a > 0) & (b > 0)):
            raise ValueError("bid and ask volume at the same price")
        if best_bid(self) > best_ask(self):
            raise ValueError("crossed book")

    @classmethod
    def empty(cls, M):
        return cls(M, np.zeros(M, np.int64), np.zeros(M, np.int64))

    @classmethod
    def symmetric(cls, M, depth=1, levels=None, gap=1):
        """Book with ``depth`` units on ``levels`` prices each side of the
        middle, leaving ``gap`` empty ticks between the best quotes."""
        M = int(M)
        levels = max(1, M // 4) if levels is None else int(levels)
        mid_low = (M - gap) // 2  # best bid price
        best_a = mid_low + gap + 1
        ask = np.zeros(M, np.int64)
        bid = np.zeros(M, np.int64)
        ask[best_a - 1 : min(M, best_a - 1 + levels)] = depth
        bid[max(0, mid_low - levels) : mid_low] = depth
        return cls(M, ask, bid)

    def copy(self):
        return BookState(self.M, self.ask_volumes.copy(), self.bid_volumes.copy(), self.clock)

    def padded(self):
        """(ask, bid) ladders of length M + 2 indexed by price."""
        z = np.zeros(1, np.int64)
        return (
            np.concatenate((z, self.ask_volumes, z)),
            np.concatenate((z, self.bid_volumes, z)),
        )


def best_ask(state):
    nz = np.flatnonzero(state.ask_volumes)
    return int(nz[0]) + 1 if nz.size else state.M + 1


def best_bid(state):
    nz = np.flatnonzero(state.bid_volumes)
    return int(nz[-1]) + 1 if nz.size else 0


def mid_price(state):
    return 0.5 * (best_ask(state) + best_bid(state))


@dataclass(frozen=True)
class BookEvent:
    time: float
    side: str
    kind: str
    level_offset: int = None
    size: int = 1

    def __post_init__(self):
        if self.side not in (BUY, SELL):
            raise InvalidEvent(f"side must be B or S, got {self.side!r}")
        if self.kind not in (LIMIT, MARKET, CANCEL):
            raise InvalidEvent(f"kind must be L, M or C, got {self.kind!r}")
        if self.kind == MARKET and self.level_offset is not None:
            raise InvalidEvent("market orders carry no level offset")
        if self.kind != MARKET and (self.level_offset is None or int(self.level_offset) < 1):
            raise InvalidEvent("limit and cancel orders need a level offset >= 1")
        if int(self.size) < 1:
            raise InvalidEvent("size must be >= 1")

    @property
    def is_buy_flow(self):
        """True for events that add buying pressure (sell cancels included)."""
        return (self.side == BUY) != (self.kind == CANCEL)


@dataclass(frozen=True)
class EventOutcome:
    status: str  # "applied" or "no_op"
    units_applied: int
    mid: float

    @property
    def applied(self):
        return self.status == "applied"


def _apply_unit(ask, bid, event):
    """One unit transition on 0-based ladders; returns True if applied."""
    M = ask.size
    a = best_ask_raw(ask)
    b = best_bid_raw(bid)
    i = event.level_offset
    if event.kind == MARKET:
        if event.side == BUY:
            if a > M:
                return False
            ask[a - 1] -= 1
        else:
            if b < 1:
                return False
            bid[b - 1] -= 1
        return True
    if event.kind == LIMIT:
        if event.side == BUY:
            p = a - i
            if p < 1:
                return False
            bid[p - 1] += 1
        else:
            p = b + i
            if p > M:
                return False
            ask[p - 1] += 1
        return True
    # cancel: offset 1 is the best quote itself
    if event.side == BUY:
        p = b - (i - 1)
        if p < 1 or bid[p - 1] == 0:
            return False
        bid[p - 1] -= 1
    else:
        p = a + (i - 1)
        if p > M or ask[p - 1] == 0:
            return False
        ask[p - 1] -= 1
    return True


def best_ask_raw(ask):
    nz = np.flatnonzero(ask)
    return int(nz[0]) + 1 if nz.size else ask.size + 1


def best_bid_raw(bid):
    nz = np.flatnonzero(bid)
    return int(nz[-1]) + 1 if nz.size else 0


def apply_event(state, event):
    """Apply ``event`` to a copy of ``state``; returns (new_state, outcome).

    An event of size s is s successive unit transitions, each gated as a
    unit event would be.
    """
    if event.time < state.clock:
        raise InvalidEvent(f"event time {event.time} precedes book clock {state.clock}")
    new = state.copy()
    done = 0
    for _ in range(int(event.size)):
        done += _apply_unit(new.ask_volumes, new.bid_volumes, event)
    new.clock = float(event.time)
    status = "applied" if done else "no_op"
    return new, EventOutcome(status, done, mid_price(new))


# --- category encoding shared with the kernels -----------------------------


def encode_event(event, M):
    """Kernel category of a unit event."""
    i = event.level_offset
    if event.kind != MARKET and not 1 <= i <= M:
        raise InvalidEvent(f"offset {i} outside 1..{M}")
    if event.kind == MARKET:
        return 0 if event.side == BUY else 1
    base = {(BUY, LIMIT): 2, (SELL, LIMIT): 2 + M, (BUY, CANCEL): 2 + 2 * M, (SELL, CANCEL): 2 + 3 * M}
    return base[(event.side, event.kind)] + i - 1


def decode_categories(cats, M):
    """Vectorised (side, kind, offset) arrays; offset 0 marks market orders."""
    cats = np.asarray(cats)
    group = np.where(cats < 2, -1, (cats - 2) // M)
    offset = np.where(cats < 2, 0, (cats - 2) % M + 1)
    side = np.where((cats == 0) | (group == 0) | (group == 2), BUY, SELL)
    kind = np.where(cats < 2, MARKET, np.where(group < 2, LIMIT, CANCEL))
    return side, kind, offset


def buy_flow_mask(cats, M):
    """Categories that add to buy pressure: market/limit buys, sell cancels."""
    cats = np.asarray(cats)
    group = (cats - 2) // M
    return (cats == 0) | ((cats >= 2) & ((group == 0) | (group == 3)))


# --- simulation -------------------------------------------------------------


@dataclass
class BookRun:
    """Columnar record of a simulated event stream."""

    M: int
    times: np.ndarray
    categories: np.ndarray
    applied: np.ndarray
    best_bid: np.ndarray
    best_ask: np.ndarray
    final_state: BookState
    seed: object = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return self.times.size

    @property
    def n_applied(self):
        return int(np.count_nonzero(self.applied))

    @property
    def mid(self):
        return 0.5 * (self.best_bid + self.best_ask)

    def events(self):
        """Yield (BookEvent, (best_bid, best_ask, mid, applied)) pairs."""
        side, kind, off = decode_categories(self.categories, self.M)
        for k in range(len(self)):
            ev = BookEvent(float(self.times[k]), str(side[k]), str(kind[k]), None if off[k] == 0 else int(off[k]))
            b, a = int(self.best_bid[k]), int(self.best_ask[k])
            yield ev, (b, a, 0.5 * (a + b), bool(self.applied[k]))

    def summary(self):
        buy = buy_flow_mask(self.categories, self.M)
        return {
            "M": self.M,
            "n_events": len(self),
            "n_applied": self.n_applied,
            "n_no_op": len(self) - self.n_applied,
            "n_buy_flow": int(buy.sum()),
            "n_sell_flow": int(len(self) - buy.sum()),
            "final_best_bid": best_bid(self.final_state),
            "final_best_ask": best_ask(self.final_state),
            "final_clock": self.final_state.clock,
        }


def _draw_categories(rates, n, rng):
    cum = np.cumsum(rates)
    u = rng.random(n) * cum[-1]
    return np.minimum(np.searchsorted(cum, u, side="right"), rates.size - 1).astype(np.int32)


def run_kernel(state, cats, backend=None):
    """Apply encoded events in place of a copy of ``state``.

    Returns (final_state, applied, best_bid, best_ask).
    """
    kb = _default_backend if backend is None else backend
    M = state.M
    ask, bid = state.padded()
    n = cats.size
    applied = np.zeros(n, np.uint8)
    out_bid = np.zeros(n, np.int32)
    out_ask = np.zeros(n, np.int32)
    kb.apply_book_events(
        np.ascontiguousarray(cats, np.int32), ask, bid, M, best_ask(state), best_bid(state), applied, out_bid, out_ask
    )
    final = BookState(M, ask[1:-1], bid[1:-1], state.clock)
    return final, applied.astype(bool), out_bid, out_ask


def simulate_book(config, init, horizon, rng_seed=None, driver=None, driver_minus=None, cancel_mode="constant", backend=None):
    """Simulate the book over (clock, clock + horizon].

    Events arrive on competing exponential clocks with total rate
    ``config.total_rate``; events whose transition is impossible (empty
    side, off-lattice price, empty cancel level) are kept as no-ops.

    ``driver`` time-changes the whole flow by a random cumulative intensity
    (calendar time t sees operational time Lambda*(t)); ``driver_minus``
    gives the sell-side categories their own driver.  ``cancel_mode =
    "proportional"`` makes cancels proportional to queue size (slow path).
    """
    if not horizon > 0:
        raise ConfigError("horizon", "must be positive")
    if config.M != init.M:
        raise ConfigError("M", "rate vectors and book disagree on M")
    rates = config.category_rates()
    if not rates.sum() > 0:
        raise ConfigError("rates", "all rates are zero")
    rng = make_rng(rng_seed)
    if cancel_mode == "proportional":
        if driver is not None or driver_minus is not None:
            raise ConfigError("cancel_mode", "proportional cancels are not supported with a driver")
        return _simulate_proportional(config, init, horizon, rng)
    if cancel_mode != "constant":
        raise ConfigError("cancel_mode", f"unknown mode {cancel_mode!r}")

    if driver is None and driver_minus is None:
        total = rates.sum()
        n = rng.poisson(total * horizon)
        times = init.clock + np.sort(rng.random(n) * horizon)
        cats = _draw_categories(rates, n, rng)
    else:
        times, cats = _driven_stream(config, horizon, rng, driver, driver_minus)
        times = init.clock + times
    final, applied, ob, oa = run_kernel(init, cats, backend)
    final.clock = float(init.clock + horizon)
    return BookRun(init.M, times, cats, applied, ob, oa, final, rng_seed)


def _driven_stream(config, horizon, rng, driver, driver_minus):
    rates = config.category_rates()
    buy = buy_flow_mask(np.arange(rates.size), config.M)
    groups = [(rates, driver)] if driver_minus is None else [
        (np.where(buy, rates, 0.0), driver),
        (np.where(buy, 0.0, rates), driver_minus),
    ]
    all_t, all_c = [], []
    for r, drv in groups:
        if drv is None:
            path = None
            op_h = horizon
        else:
            path = sample_subordinator_path(drv, default_grid(drv, horizon), rng)
            op_h = path.terminal
        total = r.sum()
        if total <= 0:
            continue
        n = rng.poisson(total * op_h)
        tau = np.sort(rng.random(n) * op_h)
        t = tau if path is None else path.inverse(tau)
        all_t.append(t)
        all_c.append(_draw_categories(r, n, rng))
    times = np.concatenate(all_t) if all_t else np.zeros(0)
    cats = np.concatenate(all_c) if all_c else np.zeros(0, np.int32)
    order = np.argsort(times, kind="stable")
    return times[order], cats[order].astype(np.int32)


def _simulate_proportional(config, init, horizon, rng):
    """Gillespie loop where cancel rate at a level is theta times its volume."""
    M = init.M
    ask = init.ask_volumes.copy()
    bid = init.bid_volumes.copy()
    base = config.category_rates()
    t = init.clock
    end = init.clock + horizon
    times, cats, applied, obid, oask = [], [], [], [], []
    cb, cs = 2 + 2 * M, 2 + 3 * M
    while True:
        a = best_ask_raw(ask)
        b = best_bid_raw(bid)
        r = base.copy()
        for k in range(M):
            pb = b - k
            r[cb + k] = config.cancel_rates_plus[k] * (bid[pb - 1] if pb >= 1 else 0)
            pa = a + k
            r[cs + k] = config.cancel_rates_minus[k] * (ask[pa - 1] if pa <= M else 0)
        total = r.sum()
        t += rng.exponential(1.0 / total)
        if t > end:
            break
        c = int(_draw_categories(r, 1, rng)[0])
        side, kind, off = decode_categories(np.array([c]), M)
        ev = BookEvent(t, str(side[0]), str(kind[0]), None if off[0] == 0 else int(off[0]))
        ok = _apply_unit(ask, bid, ev)
        times.append(t)
        cats.append(c)
        applied.append(ok)
        obid.append(best_bid_raw(bid))
        oask.append(best_ask_raw(ask))
    final = BookState(M, ask, bid, end)
    return BookRun(
        M,
        np.array(times),
        np.array(cats, np.int32),
        np.array(applied, bool),
        np.array(obid, np.int32),
        np.array(oask, np.int32),
        final,
        meta={"cancel_mode": "proportional"},
    )


# --- CSV -------------------------------------------------------------------


def _category_labels(M):
    side, kind, off = decode_categories(np.arange(2 + 4 * M), M)
    return [f"{s},{k},{'' if o == 0 else o}" for s, k, o in zip(side, kind, off)]


def format_book_csv(run, applied_only=False):
    """CSV text in the event-log schema."""
    buf = io.StringIO()
    write_book_csv(run, buf, applied_only=applied_only)
    return buf.getvalue()


def write_book_csv(run, dest, applied_only=False):
    """Write the event log; ``dest`` is a path or a text stream."""
    keep = run.applied if applied_only else np.ones(len(run), bool)
    labels = _category_labels(run.M)
    t = run.times[keep]
    c = run.categories[keep]
    b = run.best_bid[keep]
    a = run.best_ask[keep]
    own = isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__")
    fh = open(dest, "w", newline="") if own else dest
    try:
        fh.write(",".join(CSV_HEADER) + "\n")
        chunk = 100_000
        for s in range(0, t.size, chunk):
            rows = [
                f"{ti:.9f},{labels[ci]},1,{bi},{ai},{(ai + bi) / 2:g}\n"
                for ti, ci, bi, ai in zip(t[s : s + chunk].tolist(), c[s : s + chunk].tolist(), b[s : s + chunk].tolist(), a[s : s + chunk].tolist())
            ]
            fh.write("".join(rows))
    finally:
        if own:
            fh.close()


def read_book_csv(source):
    """Parse an event-log CSV into a list of (BookEvent, best_bid, best_ask)."""
    own = isinstance(source, (str, bytes)) or hasattr(source, "__fspath__")
    fh = open(source, newline="") if own else source
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyLog("event log is empty")
        if tuple(h.strip() for h in header) != CSV_HEADER:
            raise InvalidEvent(f"bad header {header}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t, side, kind, off, size, bb, ba, _ = row
                ev = BookEvent(float(t), side, kind, int(off) if off else None, int(size))
                if not math.isfinite(ev.time):
                    raise ValueError("non-finite time")
            except (ValueError, InvalidEvent) as exc:
                raise InvalidEvent(f"line {lineno}: {exc}") from None
            out.append((ev, int(bb), int(ba)))
        return out
    finally:
        if own:
            fh.close()
