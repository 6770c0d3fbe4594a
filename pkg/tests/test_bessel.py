import json
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from ofi_lab.distributions import bessel_k, bessel_k_ratio, bessel_kve, log_bessel_k
from ofi_lab.errors import DomainError

from oracles import bessel_k_quad

TABLE = json.loads(Path(__file__).with_name("data").joinpath("bessel_k.json").read_text())
SCALARS = json.loads(Path(__file__).with_name("data").joinpath("scalars.json").read_text())


def test_half_integer_closed_form():
    assert bessel_k(0.5, 1.0) == pytest.approx(SCALARS["k_half_at_1"], rel=1e-14)
    for z in (1e-3, 0.3, 2.0, 7.5, 40.0):
        assert bessel_k(0.5, z) == pytest.approx(math.sqrt(math.pi / (2 * z)) * math.exp(-z), rel=1e-13)
        # K_{3/2}(z) = sqrt(pi/(2z)) e^{-z} (1 + 1/z)
        assert bessel_k(1.5, z) == pytest.approx(math.sqrt(math.pi / (2 * z)) * math.exp(-z) * (1 + 1 / z), rel=1e-13)


def test_order_symmetry():
    assert bessel_k(-0.7, 2.3) == pytest.approx(bessel_k(0.7, 2.3), rel=1e-15)


@pytest.mark.parametrize("row", TABLE, ids=lambda r: f"nu={r['nu']:.2f},z={r['z']:.2g}")
def test_against_frozen_quadrature(row):
    assert bessel_k(row["nu"], row["z"]) == pytest.approx(row["k"], rel=1e-8)


def test_frozen_table_still_reproduces():
    # guards against the table drifting from its oracle
    for row in TABLE[:5]:
        assert bessel_k_quad(row["nu"], row["z"]) == pytest.approx(row["k"], rel=1e-12)


def test_recurrence():
    # K_{nu+1} = K_{nu-1} + (2 nu / z) K_nu.  For nu < 0 the same identity is
    # checked as K_{nu-1} = K_{nu+1} + (2 |nu| / z) K_nu so that no two large
    # terms cancel in floating point.
    nus = np.linspace(-9, 9, 37)
    zs = np.geomspace(1e-3, 100, 25)
    for nu in nus:
        for z in zs:
            big, small = (nu + 1, nu - 1) if nu >= 0 else (nu - 1, nu + 1)
            lhs = bessel_k(big, z)
            rhs = bessel_k(small, z) + 2 * abs(nu) / z * bessel_k(nu, z)
            assert lhs == pytest.approx(rhs, rel=1e-7)


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10, allow_subnormal=False), st.floats(1e-4, 100))
def test_matches_scipy(nu, z):
    assert bessel_k(nu, z) == pytest.approx(special.kv(nu, z), rel=1e-10)


def test_log_and_scaled_forms():
    for nu, z in [(0.0, 1e-4), (3.3, 0.01), (-2.1, 50.0), (8.0, 700.0)]:
        assert log_bessel_k(nu, z) == pytest.approx(math.log(special.kve(nu, z)) - z, rel=1e-12, abs=1e-12)
        assert bessel_kve(nu, z) == pytest.approx(special.kve(nu, z), rel=1e-11)


def test_extreme_arguments_stay_finite():
    # K overflows double precision for tiny z and large order; the log does not
    assert math.isfinite(log_bessel_k(10.0, 1e-30))
    assert log_bessel_k(0.3, 1e4) == pytest.approx(math.log(special.kve(0.3, 1e4)) - 1e4, rel=1e-12)


def test_ratio():
    assert bessel_k_ratio(0.5, 1.0, 2.0) == pytest.approx(special.kv(1.5, 2.0) / special.kv(0.5, 2.0), rel=1e-12)


@pytest.mark.parametrize("z", [0.0, -1.0])
def test_domain(z):
    with pytest.raises(DomainError):
        bessel_k(1.0, z)
