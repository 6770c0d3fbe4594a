"""Command-line entry point ``ofi-lab``.

Exit codes: 0 success, 1 a checked criterion failed, 2 usage or config error.
"""

import argparse
import configparser
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import stats

from . import book_engine, estimation, limit_harness as harness, ofi
from .distributions import GhParams, GigParams, gh_cdf, gh_pdf
from .errors import ConfigError, EmptyLog, InvalidEvent, OfiLabError, ScheduleInvalid
from .flow_models import RateConfig, SubordinatorSpec, power_law_rates
from .seeding import resolve_threads

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --- config helpers ------------------------------------------------------------


def read_config(path):
    """Parse an INI file; bundled presets may be named without a path."""
    p = Path(path)
    if not p.exists():
        name = p.name if p.suffix == ".cfg" else p.name + ".cfg"
        res = resources.files("ofi_lab") / "presets" / name
        if res.is_file():
            text = res.read_text()
        else:
            raise UsageError(f"config file not found: {path}")
    else:
        text = p.read_text()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    return cp


def _section(cp, name, required=True):
    if not cp.has_section(name):
        if required:
            raise ConfigError(f"[{name}]", "missing section")
        return None
    return cp[name]


def _num(sec, key, default=None, cast=float):
    if key not in sec:
        if default is None:
            raise ConfigError(f"{sec.name}.{key}", "missing key")
        return default
    try:
        v = cast(sec[key])
    except ValueError:
        raise ConfigError(f"{sec.name}.{key}", f"not a number: {sec[key]!r}") from None
    if isinstance(v, float) and not math.isfinite(v):
        raise ConfigError(f"{sec.name}.{key}", "must be finite")
    return v


def _vec(sec, key):
    try:
        return np.array([float(x) for x in sec[key].split(",") if x.strip()])
    except ValueError:
        raise ConfigError(f"{sec.name}.{key}", "expected comma-separated numbers") from None


def _bool(sec, key, default=False):
    if key not in sec:
        return default
    try:
        return sec.getboolean(key)
    except ValueError:
        raise ConfigError(f"{sec.name}.{key}", "expected true/false") from None


def _check_keys(sec, allowed):
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"{sec.name}.{key}", "unknown key")


def parse_rates(cp, M):
    sec = _section(cp, "rates")
    _check_keys(
        sec,
        {"mu_plus", "mu_minus", "limit_k", "limit_alpha", "cancel_k", "cancel_alpha",
         "limit_plus", "limit_minus", "cancel_plus", "cancel_minus"},
    )
    mu_p = _num(sec, "mu_plus", 0.0)
    mu_m = _num(sec, "mu_minus", 0.0)

    def ladder(explicit, k_key, a_key):
        if explicit in sec:
            v = _vec(sec, explicit)
            if v.size != M:
                raise ConfigError(f"rates.{explicit}", f"expected {M} values, got {v.size}")
            return v
        k = _num(sec, k_key, 0.0)
        return power_law_rates(M, k, _num(sec, a_key, 1.0)) if k > 0 else np.zeros(M)

    lp = ladder("limit_plus", "limit_k", "limit_alpha")
    lm = ladder("limit_minus", "limit_k", "limit_alpha")
    cpl = ladder("cancel_plus", "cancel_k", "cancel_alpha")
    cmi = ladder("cancel_minus", "cancel_k", "cancel_alpha")
    return RateConfig(mu_p, mu_m, lp, lm, cpl, cmi)


def parse_spec(cp, name="driver", required=True):
    sec = _section(cp, name, required)
    if sec is None:
        return None
    try:
        return SubordinatorSpec.from_config(dict(sec))
    except ConfigError as exc:
        raise ConfigError(f"{name}.{exc.key}", exc.reason) from None


def parse_component(sec, prefix):
    kind = sec.get(f"{prefix}_law")
    if kind is None:
        raise ConfigError(f"{sec.name}.{prefix}_law", "missing key")
    p1 = _num(sec, f"{prefix}_p1", 1.0)
    p2 = _num(sec, f"{prefix}_p2", 0.0)
    try:
        return ofi.ComponentLaw(kind.strip(), p1, p2)
    except ValueError as exc:
        raise ConfigError(f"{sec.name}.{prefix}_law", str(exc)) from None


def _write_json(path, obj):
    Path(path).write_text(json.dumps(harness._jsonable(obj), indent=2, sort_keys=True) + "\n")


def _out_dir(args):
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


# --- subcommands ----------------------------------------------------------------


def cmd_simulate_book(args):
    cp = read_config(args.config)
    bsec = _section(cp, "book")
    _check_keys(bsec, {"m", "horizon", "init_depth", "init_levels", "init_gap", "cancel_mode"})
    M = _num(bsec, "M", cast=int)
    horizon = _num(bsec, "horizon")
    if not horizon > 0:
        raise ConfigError("book.horizon", "must be positive")
    if M < 2:
        raise ConfigError("book.M", "must be at least 2")
    rates = parse_rates(cp, M)
    init = book_engine.BookState.symmetric(
        M, _num(bsec, "init_depth", 1, int), _num(bsec, "init_levels", max(1, M // 4), int), _num(bsec, "init_gap", 1, int)
    )
    driver = parse_spec(cp, "driver", required=False)
    driver_minus = parse_spec(cp, "driver_minus", required=False)
    mode = args.cancel_mode or bsec.get("cancel_mode", "constant")
    run = book_engine.simulate_book(rates, init, horizon, args.seed, driver, driver_minus, cancel_mode=mode)
    out = _out_dir(args)
    book_engine.write_book_csv(run, out / "events.csv", applied_only=args.applied_only)
    summary = run.summary()
    summary.update({"seed": args.seed, "horizon": horizon, "rows_written": run.n_applied if args.applied_only else len(run),
                    "total_rate": rates.total_rate, "cancel_mode": mode})
    _write_json(out / "summary.json", summary)
    print(f"simulate-book: {len(run)} events ({run.n_applied} applied) -> {out}")
    return EXIT_OK


def cmd_simulate_ofi(args):
    cp = read_config(args.config)
    osec = _section(cp, "ofi")
    _check_keys(osec, {"horizon", "paths"})
    horizon = _num(osec, "horizon", 1.0)
    paths = _num(osec, "paths", 1000, int)
    spec = parse_spec(cp, "driver")
    jsec = _section(cp, "jumps")
    _check_keys(jsec, {"plus_law", "plus_p1", "plus_p2", "minus_law", "minus_p1", "minus_p2"})
    jumps = ofi.JumpLaw.for_spec(parse_component(jsec, "plus"), parse_component(jsec, "minus"), spec)
    threads = resolve_threads(args.threads)
    modes = ["two_sided", "compound"] if args.mode == "both" else [args.mode]
    out = _out_dir(args)
    summary = {"seed": args.seed, "horizon": horizon, "paths": paths, "mode": args.mode}
    terminals = {}
    for mode in modes:
        sim = ofi.simulate_ofi_two_sided if mode == "two_sided" else ofi.simulate_ofi_compound
        path = sim(jumps, spec, horizon, np.random.default_rng([args.seed, 0 if mode == "two_sided" else 1]))
        with open(out / f"path_{mode}.csv", "w") as fh:
            path.write_csv(fh)
        one = path.summary()
        one["seed"] = args.seed
        term = ofi.ofi_terminal(jumps, spec, horizon, paths, args.seed, mode, threads)
        terminals[mode] = term
        one.update({"mc_mean": float(term.mean()), "mc_std": float(term.std(ddof=1)), "mc_paths": paths})
        summary[mode] = one
    code = EXIT_OK
    if len(modes) == 2:
        d = float(stats.ks_2samp(terminals["two_sided"], terminals["compound"]).statistic)
        # never stricter than the 1% two-sample critical value at this size
        thr = max(args.ks_threshold, 1.63 * math.sqrt(2.0 / paths))
        ok = d < thr
        summary["equivalence"] = {"ks": d, "threshold": thr, "passed": ok}
        code = EXIT_OK if ok else EXIT_FAIL
        print(f"{'PASS' if ok else 'FAIL'} two_sided_vs_compound ks={d:.5f} threshold={thr:.5f}")
    _write_json(out / "summary.json", summary)
    return code


def _ks_list(text):
    try:
        vals = tuple(int(float(x)) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"bad --n-list {text!r}") from None
    if not vals:
        raise UsageError("--n-list is empty")
    return vals


def cmd_check_limits(args):
    cp = read_config(args.config)
    csec = _section(cp, "check")
    _check_keys(
        csec,
        {"kind", "n_list", "mc_paths", "seed", "ks_threshold", "t_values", "increments", "delta", "delta1", "beta"},
    )
    kind = csec.get("kind", "theorem3").strip()
    n_list = _ks_list(args.n_list) if args.n_list else _ks_list(csec.get("n_list", "10,100,1000,10000"))
    mc_paths = args.paths or _num(csec, "mc_paths", 100_000, int)
    seed = args.seed if args.seed is not None else _num(csec, "seed", 0, int)
    threads = resolve_threads(args.threads)
    out = _out_dir(args)
    if kind != "theorem3":
        raise ConfigError("check.kind", f"unsupported kind {kind!r} (only theorem3 runs from config)")
    gsec = _section(cp, "gig")
    gig = GigParams(_num(gsec, "nu"), _num(gsec, "mu"), _num(gsec, "lam"))
    rsec = _section(cp, "row")
    _check_keys(rsec, {"a", "s", "s_minus", "scale_jumps"})
    sched = harness.theorem3_schedule(
        gig,
        a=_num(rsec, "a", 0.5),
        s=_num(rsec, "s", 1.0),
        s_minus=_num(rsec, "s_minus", _num(rsec, "s", 1.0)),
        k_values=n_list,
        scale_jumps=_bool(rsec, "scale_jumps", True),
    )
    t_values = tuple(float(t) for t in csec.get("t_values", "1").split(",") if t.strip())
    try:
        rep = harness.run_theorem3(
            sched,
            mc_paths=mc_paths,
            seed=seed,
            threads=threads,
            ks_threshold=_num(csec, "ks_threshold", 0.015),
            t_values=t_values,
            increments=_bool(csec, "increments", False),
        )
    except ScheduleInvalid as exc:
        rep = harness.ConvergenceReport("theorem3", seed, extra={"error": str(exc)})
        rep.add("finite_K", False, math.inf, math.inf, str(exc))
    rep.extra.update({"config": str(args.config), "n_list": list(n_list)})
    (out / "report.json").write_text(rep.to_json() + "\n")
    (out / "plot.csv").write_text(rep.plot_csv())
    for c in rep.criteria:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} value={c.value:.6g} threshold={c.threshold:.6g} {c.detail}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def _load_log(args):
    try:
        return estimation.load_event_log(args.log, trim=args.trim)
    except FileNotFoundError:
        raise UsageError(f"log file not found: {args.log}") from None


def cmd_fit_gig(args):
    log = _load_log(args)
    b = estimation.bin_counts(log, args.side, args.bin_width)
    pos = b.counts[b.counts > 0]
    fit = estimation.fit_gig(pos)
    ks = estimation.ks_to_fit(pos, fit)
    out = _out_dir(args)
    rep = fit.to_dict()
    rep.update({"ks": ks, "n_bins": int(b.counts.size), "n_zero_bins_dropped": int(b.counts.size - pos.size),
                "bin_width": args.bin_width, "side": args.side})
    _write_json(out / "fit.json", rep)
    rows = estimation.fit_histogram(pos, fit)
    with open(out / "histogram.csv", "w") as fh:
        fh.write("bin_left,bin_right,count,fitted_density\n")
        fh.writelines(f"{a!r},{b_!r},{c},{d!r}\n" for a, b_, c, d in rows)
    print(f"fit-gig: nu={fit.params.nu:.6g} mu={fit.params.mu:.6g} lam={fit.params.lam:.6g} ks={ks:.4f}")
    return EXIT_OK


def _write_series(path, starts, values):
    with open(path, "w") as fh:
        fh.write("window_start,value\n")
        fh.writelines(f"{s:.9f},{v!r}\n" for s, v in zip(np.asarray(starts).tolist(), np.asarray(values).tolist()))


def cmd_estimate_intensity(args):
    log = _load_log(args)
    est = estimation.estimate_intensity(log, args.side, args.window)
    out = _out_dir(args)
    _write_series(out / "intensity.csv", est.starts, est.rates)
    _write_json(out / "intensity.json", {"window": est.window, "side": args.side, "dispersion_index": est.dispersion_index,
                                         "overdispersion_p": est.overdispersion_p, "overdispersed": est.overdispersed,
                                         "n_windows": int(est.starts.size)})
    print(f"estimate-intensity: {est.starts.size} windows, overdispersed={est.overdispersed}")
    return EXIT_OK


def cmd_imbalance(args):
    log = _load_log(args)
    ser = estimation.imbalance_series(log, args.window)
    out = _out_dir(args)
    _write_series(out / "imbalance.csv", ser.starts, ser.ratio)
    print(f"imbalance: {ser.starts.size} windows, mean r={ser.ratio.mean():.4f}")
    return EXIT_OK


def cmd_gh_table(args):
    params = GhParams(args.alpha, args.sigma, GigParams(args.nu, args.mu, args.lam))
    if not args.x_max > args.x_min or args.points < 2:
        raise UsageError("need x_max > x_min and at least 2 points")
    x = np.linspace(args.x_min, args.x_max, args.points)
    dens = gh_pdf(params, x)
    out = _out_dir(args)
    with open(out / "gh_table.csv", "w") as fh:
        if args.cdf:
            fh.write("x,density,cdf\n")
            fh.writelines(f"{a!r},{b!r},{c!r}\n" for a, b, c in zip(x.tolist(), dens.tolist(), gh_cdf(params, x).tolist()))
        else:
            fh.write("x,density\n")
            fh.writelines(f"{a!r},{b!r}\n" for a, b in zip(x.tolist(), dens.tolist()))
    print(f"gh-table: {x.size} rows -> {out / 'gh_table.csv'}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="ofi-lab", description="Order-book and OFI simulation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_default=0):
        sp.add_argument("--seed", type=int, default=seed_default, help="master random seed")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--threads", type=int, default=None, help="worker threads (default: $OFI_LAB_THREADS or 1)")

    sp = sub.add_parser("simulate-book", help="simulate the order book and write the event log")
    sp.add_argument("config")
    sp.add_argument("--applied-only", action="store_true", help="omit no-op arrivals from the CSV")
    sp.add_argument("--cancel-mode", choices=("constant", "proportional"), default=None)
    common(sp)
    sp.set_defaults(func=cmd_simulate_book)

    sp = sub.add_parser("simulate-ofi", help="simulate OFI paths and terminal values")
    sp.add_argument("config")
    sp.add_argument("--mode", choices=("two_sided", "compound", "both"), default="two_sided")
    sp.add_argument("--ks-threshold", type=float, default=0.012)
    common(sp)
    sp.set_defaults(func=cmd_simulate_ofi)

    sp = sub.add_parser("check-limits", help="run a limit-theorem convergence check")
    sp.add_argument("config", help="config path or bundled preset name")
    sp.add_argument("--n-list", default=None, help="comma-separated k_n values")
    sp.add_argument("--paths", type=int, default=None, help="Monte Carlo paths per k_n")
    common(sp, seed_default=None)
    sp.set_defaults(func=cmd_check_limits)

    for name, func, helptext in (
        ("fit-gig", cmd_fit_gig, "fit a GIG law to binned arrival counts"),
        ("estimate-intensity", cmd_estimate_intensity, "windowed intensity estimates"),
        ("imbalance", cmd_imbalance, "windowed buy/sell intensity ratio"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("log", help="event-log CSV")
        sp.add_argument("--trim", type=float, default=estimation.DEFAULT_TRIM, help="seconds excluded at each session end")
        if name == "fit-gig":
            sp.add_argument("--bin-width", type=float, default=15.0)
            sp.add_argument("--side", choices=("buy", "sell"), default="buy")
        elif name == "estimate-intensity":
            sp.add_argument("--window", type=float, default=60.0)
            sp.add_argument("--side", choices=("buy", "sell"), default="buy")
        else:
            sp.add_argument("--window", type=float, default=60.0)
        common(sp)
        sp.set_defaults(func=func)

    sp = sub.add_parser("gh-table", help="export a GH density table")
    for name, default in (("alpha", 0.0), ("sigma", 1.0), ("nu", -0.5), ("mu", 1.0), ("lam", 1.0)):
        sp.add_argument(f"--{name}", type=float, default=default)
    sp.add_argument("--x-min", type=float, default=-5.0)
    sp.add_argument("--x-max", type=float, default=5.0)
    sp.add_argument("--points", type=int, default=201)
    sp.add_argument("--cdf", action="store_true", help="add a cdf column")
    common(sp)
    sp.set_defaults(func=cmd_gh_table)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (UsageError, ConfigError, EmptyLog, InvalidEvent) as exc:
        print(f"ofi-lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OfiLabError as exc:
        print(f"ofi-lab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"ofi-lab {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
