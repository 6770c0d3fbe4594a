"""Throughput of the book engine: compiled kernel vs the numpy fallback.

The timed region is event generation (Poisson count, arrival times,
category draws) plus the transition kernel; CSV formatting is excluded.

    python -m ofi_lab.benchmark --events 2000000
"""

import argparse
import json
import time

from . import _kernels
from .book_engine import BookState, simulate_book
from .flow_models import RateConfig


def default_book(M=50):
    rates = RateConfig.power_law(M, 1.0, 0.7, mu_plus=2.0, mu_minus=2.0, cancel_k=0.5)
    return rates, BookState.symmetric(M, depth=2, levels=12)


def measure(backend, events=1_000_000, repeats=3, seed=1, M=50):
    """Best-of-``repeats`` events per second for one kernel backend."""
    rates, init = default_book(M)
    horizon = events / rates.total_rate
    best = 0.0
    n = 0
    for r in range(repeats):
        t0 = time.perf_counter()
        run = simulate_book(rates, init, horizon, seed + r, backend=backend)
        dt = time.perf_counter() - t0
        n = len(run)
        best = max(best, n / dt)
    return {"events": n, "events_per_second": best}


def run(events=1_000_000, repeats=3, include_python=True):
    out = {}
    if _kernels.compiled_backend is not None:
        out["compiled"] = measure(_kernels.compiled_backend, events, repeats)
    if include_python:
        out["python"] = measure(_kernels.python_backend, min(events, 200_000), 1)
    return out


def main(argv=None):
    p = argparse.ArgumentParser(prog="python -m ofi_lab.benchmark")
    p.add_argument("--events", type=int, default=1_000_000)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--skip-python", action="store_true")
    a = p.parse_args(argv)
    res = run(a.events, a.repeats, not a.skip_python)
    print(json.dumps(res, indent=2))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
