"""Pure-Python / numpy implementations of the hot kernels.

Semantics must match ``_ckernels.pyx`` exactly; the test-suite runs both
backends against each other.
"""

import numpy as np

LAW_CONSTANT = 0
LAW_EXPONENTIAL = 1
LAW_UNIFORM = 2
LAW_BERNOULLI = 3


def apply_book_events(cats, ask, bid, M, a, b, applied, out_bid, out_ask):
    """Apply encoded unit events to the ladder in place.

    ``ask``/``bid`` have length ``M + 2`` and are indexed by price (slots 0
    and ``M + 1`` stay empty).  Returns the final ``(a, b)``.
    """
    ask_l = ask.tolist()
    bid_l = bid.tolist()
    cats_l = cats.tolist()
    n = len(cats_l)
    app = [0] * n
    ob = [0] * n
    oa = [0] * n
    lb = 2 + M
    cb = 2 + 2 * M
    cs = 2 + 3 * M
    for k in range(n):
        c = cats_l[k]
        ok = 0
        if c == 0:
            if a <= M:
                ask_l[a] -= 1
                ok = 1
                if ask_l[a] == 0:
                    a += 1
                    while a <= M and ask_l[a] == 0:
                        a += 1
        elif c == 1:
            if b >= 1:
                bid_l[b] -= 1
                ok = 1
                if bid_l[b] == 0:
                    b -= 1
                    while b >= 1 and bid_l[b] == 0:
                        b -= 1
        elif c < lb:
            p = a - (c - 1)
            if p >= 1:
                bid_l[p] += 1
                ok = 1
                if p > b:
                    b = p
        elif c < cb:
            p = b + (c - lb + 1)
            if p <= M:
                ask_l[p] += 1
                ok = 1
                if p < a:
                    a = p
        elif c < cs:
            p = b - (c - cb)
            if p >= 1 and bid_l[p] > 0:
                bid_l[p] -= 1
                ok = 1
                if p == b and bid_l[p] == 0:
                    b -= 1
                    while b >= 1 and bid_l[b] == 0:
                        b -= 1
        else:
            p = a + (c - cs)
            if p <= M and ask_l[p] > 0:
                ask_l[p] -= 1
                ok = 1
                if p == a and ask_l[p] == 0:
                    a += 1
                    while a <= M and ask_l[a] == 0:
                        a += 1
        app[k] = ok
        ob[k] = b
        oa[k] = a
    ask[:] = ask_l
    bid[:] = bid_l
    applied[:] = app
    out_bid[:] = ob
    out_ask[:] = oa
    return a, b


def _inverse_cdf(law, p1, p2, v):
    if law == LAW_CONSTANT:
        return np.full_like(v, p1)
    if law == LAW_EXPONENTIAL:
        return -p1 * np.log1p(-v)
    if law == LAW_UNIFORM:
        return p1 + (p2 - p1) * v
    if law == LAW_BERNOULLI:
        return np.where(v < p2, p1, 0.0)
    raise ValueError(f"unknown law code {law}")


def _segment_sums(values, counts):
    out = np.zeros(len(counts))
    nz = counts > 0
    if values.size and nz.any():
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        out[nz] = np.add.reduceat(values, starts[nz])
    return out


def component_sums(counts, uniforms, law, p1, p2):
    """Per-path sums of ``counts[i]`` draws from one component law."""
    return _segment_sums(_inverse_cdf(law, p1, p2, uniforms), counts)


def mixture_sums(counts, uniforms, weight, law_plus, pp1, pp2, law_minus, pm1, pm2):
    """Per-path sums of two-sided mixture jumps.

    A uniform ``u < weight`` yields ``+X+`` from ``u / weight``, otherwise
    ``-X-`` from ``(u - weight) / (1 - weight)``.
    """
    plus = uniforms < weight
    vals = np.empty_like(uniforms)
    if weight > 0:
        vals[plus] = _inverse_cdf(law_plus, pp1, pp2, uniforms[plus] / weight)
    if weight < 1:
        vm = (uniforms[~plus] - weight) / (1.0 - weight)
        vals[~plus] = -_inverse_cdf(law_minus, pm1, pm2, vm)
    return _segment_sums(vals, counts)
