import json
import shutil
import subprocess
from importlib import resources

import numpy as np
import pytest
from scipy import stats

from ofi_lab.cli import main, parse_rates, read_config
from ofi_lab.distributions.gig import GigParams, gig_cdf, gig_pdf

PRESETS = resources.files("ofi_lab") / "presets"


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    out = capsys.readouterr() if capsys is not None else None
    return code, out


def files(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


# --- simulate-book -----------------------------------------------------------------------


def test_minimal_book_run(tmp_path, capsys):
    code, _ = run(["simulate-book", "book_minimal", "--seed", 1, "--out", tmp_path], capsys)
    assert code == 0
    lines = (tmp_path / "events.csv").read_text().splitlines()
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["total_rate"] == 10
    assert s["n_events"] == s["rows_written"] == len(lines) - 1
    assert s["n_applied"] + s["n_no_op"] == s["n_events"]
    assert s["n_buy_flow"] + s["n_sell_flow"] == s["n_events"]


def test_minimal_book_mean_rows(tmp_path, capsys):
    n = []
    for seed in range(300):
        run(["simulate-book", "book_minimal", "--seed", seed, "--out", tmp_path], capsys)
        n.append(json.loads((tmp_path / "summary.json").read_text())["n_events"])
    assert abs(np.mean(n) - 10) < 3 * np.sqrt(10 / 300)


def test_book_run_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["simulate-book", "book_power_law", "--seed", 42, "--out", d], capsys)[0] == 0
    assert files(a) == files(b)
    run(["simulate-book", "book_power_law", "--seed", 43, "--out", tmp_path / "c"], capsys)
    assert files(a) != files(tmp_path / "c")


def test_applied_only(tmp_path, capsys):
    run(["simulate-book", "book_power_law", "--seed", 3, "--applied-only", "--out", tmp_path], capsys)
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["rows_written"] == s["n_applied"]
    assert len((tmp_path / "events.csv").read_text().splitlines()) == s["n_applied"] + 1


@pytest.mark.parametrize(
    "edit,key",
    [
        (("horizon = 1.0", "horizon = soon"), "book.horizon"),
        (("mu_plus = 1", "mu_plus = -1"), "mu_plus"),
        (("limit_plus = 1, 1, 1, 0, 0, 0, 0, 0, 0, 0", "limit_plus = 1, 1"), "rates.limit_plus"),
        (("init_levels = 3", "init_levels = 3\nspeed = 2"), "book.speed"),
        (("[rates]", "[rated]"), "[rates]"),
    ],
)
def test_malformed_book_config(tmp_path, capsys, edit, key):
    text = (PRESETS / "book_minimal.cfg").read_text().replace(*edit)
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    code, out = run(["simulate-book", cfg, "--out", tmp_path], capsys)
    assert code == 2
    assert key in out.err


def test_bad_driver_key_named(tmp_path, capsys):
    text = (PRESETS / "book_cox_gig.cfg").read_text().replace("window = 15", "window = -1")
    (tmp_path / "bad.cfg").write_text(text)
    code, out = run(["simulate-book", tmp_path / "bad.cfg", "--out", tmp_path], capsys)
    assert code == 2 and "driver.window" in out.err


def test_missing_config(tmp_path, capsys):
    code, out = run(["simulate-book", tmp_path / "nope.cfg"], capsys)
    assert code == 2 and "not found" in out.err


# --- simulate-ofi --------------------------------------------------------------------------


def test_symmetric_ofi(tmp_path, capsys):
    assert run(["simulate-ofi", "ofi_symmetric", "--seed", 5, "--out", tmp_path], capsys)[0] == 0
    s = json.loads((tmp_path / "summary.json").read_text())["two_sided"]
    assert abs(s["mc_mean"]) < 3 * s["mc_std"] / np.sqrt(s["mc_paths"])
    assert (tmp_path / "path_two_sided.csv").read_text().startswith("time,value,side\n")


def test_ofi_modes_agree_at_scale(tmp_path, capsys):
    text = (PRESETS / "ofi_symmetric.cfg").read_text().replace("paths = 1000", "paths = 100000")
    (tmp_path / "big.cfg").write_text(text)
    code, out = run(["simulate-ofi", tmp_path / "big.cfg", "--mode", "both", "--seed", 6, "--out", tmp_path], capsys)
    s = json.loads((tmp_path / "summary.json").read_text())["equivalence"]
    assert code == 0 and s["threshold"] == 0.012 and s["ks"] < 0.012
    assert "PASS two_sided_vs_compound" in out.out


def test_compound_mode_reproducible(tmp_path, capsys):
    for d in ("a", "b"):
        run(["simulate-ofi", "ofi_symmetric", "--mode", "compound", "--seed", 7, "--out", tmp_path / d], capsys)
    assert files(tmp_path / "a") == files(tmp_path / "b")


def test_missing_jump_section(tmp_path, capsys):
    text = (PRESETS / "ofi_symmetric.cfg").read_text()
    (tmp_path / "nojumps.cfg").write_text(text[: text.index("[jumps]")])
    code, out = run(["simulate-ofi", tmp_path / "nojumps.cfg", "--out", tmp_path], capsys)
    assert code == 2 and "[jumps]" in out.err


# --- check-limits ------------------------------------------------------------------------------


def test_broken_k_preset_fails_with_criterion(tmp_path, capsys):
    code, out = run(["check-limits", "theorem3_broken_k", "--out", tmp_path], capsys)
    assert code == 1
    assert "FAIL finite_K" in out.out
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["passed"] is False and rep["criteria"][0]["name"] == "finite_K"


def test_n_list_subset_and_threads(tmp_path, capsys):
    outs = []
    for threads in (1, 8):
        d = tmp_path / f"t{threads}"
        code, out = run(["check-limits", "theorem3_nig", "--n-list", "10,100", "--paths", 20000, "--threads", threads, "--out", d], capsys)
        assert code in (0, 1)
        outs.append(files(d))
    rep = json.loads(outs[0]["report.json"])
    assert rep["n_values"] == [10, 100] and rep["extra"]["n_list"] == [10, 100]
    assert outs[0] == outs[1]
    assert outs[0]["plot.csv"].decode().splitlines()[0] == "k_n,ks,ks_se"


def test_threads_env_fallback(monkeypatch):
    from ofi_lab.seeding import resolve_threads

    monkeypatch.delenv("OFI_LAB_THREADS", raising=False)
    assert resolve_threads() == 1
    monkeypatch.setenv("OFI_LAB_THREADS", "4")
    assert resolve_threads() == 4 and resolve_threads(2) == 2


def test_bad_n_list(tmp_path, capsys):
    assert run(["check-limits", "theorem3_gamma", "--n-list", "ten", "--out", tmp_path], capsys)[0] == 2


def test_threads_must_be_positive(capsys):
    with pytest.raises(SystemExit) as e:
        main(["check-limits", "theorem3_gamma", "--threads", "0"])
    assert e.value.code == 2


# --- estimation commands --------------------------------------------------------------------------


@pytest.fixture(scope="module")
def cox_log(tmp_path_factory):
    """Four 6.5 hour sessions of the windowed GIG preset, as one log."""
    d = tmp_path_factory.mktemp("cox")
    text = (PRESETS / "book_cox_gig.cfg").read_text().replace("horizon = 23400", "horizon = 93600")
    (d / "long.cfg").write_text(text)
    assert main(["simulate-book", str(d / "long.cfg"), "--seed", "11", "--out", str(d)]) == 0
    return d / "events.csv"


def mixed_poisson_cdf(c, g, k):
    """P(N <= k) for N ~ Poisson(c U), U ~ g, by quadrature on a fine grid."""
    u = np.linspace(1e-6, 80, 80001)
    w = gig_pdf(g, u)
    w /= np.trapezoid(w, u)
    return np.array([np.trapezoid(stats.poisson.cdf(kk, c * u) * w, u) for kk in k])


def test_fit_round_trip(cox_log, tmp_path, capsys):
    assert run(["fit-gig", cox_log, "--out", tmp_path], capsys)[0] == 0
    fit = json.loads((tmp_path / "fit.json").read_text())
    p = GigParams(**fit["params"])
    # buy counts per 15 s bin are Poisson with mean lambda^+ * scale * U
    cp = read_config("book_cox_gig")
    c = parse_rates(cp, 20).aggregate_plus * 7.5
    k = np.arange(0, 400)
    dist = np.max(np.abs(gig_cdf(p, k + 0.5) - mixed_poisson_cdf(c, GigParams(-0.5, 4.0, 1.0), k)))
    assert dist < 0.02
    assert fit["ks"] < 0.05
    rows = (tmp_path / "histogram.csv").read_text().splitlines()
    assert rows[0] == "bin_left,bin_right,count,fitted_density" and len(rows) == 31


def test_imbalance_one_row_per_minute(cox_log, tmp_path, capsys):
    assert run(["imbalance", cox_log, "--window", 60, "--out", tmp_path], capsys)[0] == 0
    rows = (tmp_path / "imbalance.csv").read_text().splitlines()
    assert rows[0] == "window_start,value"
    starts = np.array([float(r.split(",")[0]) for r in rows[1:]])
    assert starts.size == (93600 - 600) // 60
    np.testing.assert_allclose(np.diff(starts), 60.0)


def test_estimate_intensity_outputs(cox_log, tmp_path, capsys):
    assert run(["estimate-intensity", cox_log, "--window", 60, "--side", "sell", "--out", tmp_path], capsys)[0] == 0
    meta = json.loads((tmp_path / "intensity.json").read_text())
    assert meta["overdispersed"] is True and meta["n_windows"] == (93600 - 600) // 60


def test_estimation_outputs_deterministic(cox_log, tmp_path, capsys):
    for d in ("a", "b"):
        run(["fit-gig", cox_log, "--out", tmp_path / d], capsys)
        run(["imbalance", cox_log, "--out", tmp_path / d], capsys)
    assert files(tmp_path / "a") == files(tmp_path / "b")


def test_empty_log(tmp_path, capsys):
    (tmp_path / "empty.csv").write_text("")
    (tmp_path / "header.csv").write_text("time,side,kind,level_offset,size,best_bid,best_ask,mid\n")
    for cmd in ("fit-gig", "imbalance", "estimate-intensity"):
        for f in ("empty.csv", "header.csv"):
            code, out = run([cmd, tmp_path / f, "--out", tmp_path], capsys)
            assert code == 2 and "empty" in out.err


# --- gh-table ---------------------------------------------------------------------------------------


def test_gh_table(tmp_path, capsys):
    assert run(["gh-table", "--alpha", 0.3, "--points", 11, "--cdf", "--out", tmp_path], capsys)[0] == 0
    rows = (tmp_path / "gh_table.csv").read_text().splitlines()
    assert rows[0] == "x,density,cdf" and len(rows) == 12
    cdf = [float(r.split(",")[2]) for r in rows[1:]]
    assert cdf == sorted(cdf) and 0 < cdf[0] < cdf[-1] < 1


def test_gh_table_bad_params(tmp_path, capsys):
    assert run(["gh-table", "--mu", -1, "--out", tmp_path], capsys)[0] == 2
    assert run(["gh-table", "--x-min", 2, "--x-max", 1, "--out", tmp_path], capsys)[0] == 2


# --- console script ----------------------------------------------------------------------------------


@pytest.mark.skipif(shutil.which("ofi-lab") is None, reason="console script not installed")
def test_console_script_exit_codes(tmp_path):
    ok = subprocess.run(["ofi-lab", "simulate-book", "book_minimal", "--out", str(tmp_path)], capture_output=True)
    assert ok.returncode == 0
    bad = subprocess.run(["ofi-lab", "simulate-book"], capture_output=True)
    assert bad.returncode == 2
