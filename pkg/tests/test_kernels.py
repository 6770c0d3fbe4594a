import numpy as np
import pytest

from ofi_lab import _kernels
from ofi_lab.book_engine import BookState, best_ask, best_bid
from ofi_lab.ofi import ComponentLaw

needs_compiled = pytest.mark.skipif(_kernels.compiled_backend is None, reason="extension not built")


def _run(kb, state, cats):
    ask, bid = state.padded()
    n = cats.size
    applied = np.zeros(n, np.uint8)
    ob = np.zeros(n, np.int32)
    oa = np.zeros(n, np.int32)
    a, b = kb.apply_book_events(cats.astype(np.int32), ask, bid, state.M, best_ask(state), best_bid(state), applied, ob, oa)
    return ask, bid, applied, ob, oa, a, b


@needs_compiled
@pytest.mark.parametrize("M", [2, 3, 7, 50])
def test_book_kernels_agree(M):
    rng = np.random.default_rng(M)
    state = BookState.symmetric(M, depth=2, levels=max(1, M // 4))
    cats = rng.integers(0, 2 + 4 * M, 20_000).astype(np.int32)
    py = _run(_kernels.python_backend, state, cats)
    c = _run(_kernels.compiled_backend, state, cats)
    for x, y in zip(py, c):
        np.testing.assert_array_equal(x, y)


def test_kernel_tracks_best_quotes(kb):
    M = 10
    state = BookState.symmetric(M, depth=1, levels=3)
    cats = np.random.default_rng(3).integers(0, 2 + 4 * M, 5000).astype(np.int32)
    ask, bid, applied, ob, oa, a, b = _run(kb, state, cats)
    final = BookState(M, ask[1:-1], bid[1:-1])
    assert a == best_ask(final) and b == best_bid(final)
    assert ob[-1] == b and oa[-1] == a
    assert ask[0] == ask[-1] == bid[0] == bid[-1] == 0


@pytest.mark.parametrize(
    "law", [ComponentLaw.constant(1.5), ComponentLaw.exponential(2.0), ComponentLaw.uniform(0.5, 3.0), ComponentLaw.bernoulli(1.0, 0.3)]
)
def test_component_sums_match_inverse_cdf(kb, law):
    rng = np.random.default_rng(9)
    counts = rng.integers(0, 6, 400).astype(np.int64)
    u = rng.random(int(counts.sum()))
    got = kb.component_sums(counts, u, law.code, law.p1, law.p2)
    x = law.inverse_cdf(u)
    idx = np.repeat(np.arange(counts.size), counts)
    want = np.bincount(idx, weights=x, minlength=counts.size)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


def test_mixture_sums_match_reference(kb):
    rng = np.random.default_rng(4)
    plus, minus = ComponentLaw.exponential(1.0), ComponentLaw.uniform(0.0, 2.0)
    w = 0.3
    counts = rng.integers(0, 8, 300).astype(np.int64)
    u = rng.random(int(counts.sum()))
    got = kb.mixture_sums(counts, u, w, plus.code, plus.p1, plus.p2, minus.code, minus.p1, minus.p2)
    up = u < w
    x = np.where(up, plus.inverse_cdf(np.where(up, u / w, 0.0)), -minus.inverse_cdf(np.where(up, 0.0, (u - w) / (1 - w))))
    idx = np.repeat(np.arange(counts.size), counts)
    want = np.bincount(idx, weights=x, minlength=counts.size)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


@needs_compiled
def test_sum_kernels_agree_across_backends():
    rng = np.random.default_rng(5)
    counts = rng.integers(0, 30, 1000).astype(np.int64)
    u = rng.random(int(counts.sum()))
    e = ComponentLaw.exponential(0.7)
    args = (counts, u, 0.45, e.code, e.p1, e.p2, e.code, 1.3, 0.0)
    np.testing.assert_allclose(
        _kernels.python_backend.mixture_sums(*args), _kernels.compiled_backend.mixture_sums(*args), rtol=1e-13, atol=1e-13
    )


def test_backend_name():
    assert _kernels.BACKEND in ("compiled", "python")
