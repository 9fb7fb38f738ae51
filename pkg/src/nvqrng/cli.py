"""Command-line pipeline: simulate, extract, analyse and score random bits.

Times on the command line are picoseconds unless suffixed with ns, us, ms or
s; rates are counts per second. A flat key=value config file can seed any
option, with explicit flags taking precedence.
"""

from __future__ import annotations

import argparse
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import io
from .entropy import BinningConfig, min_entropy, min_entropy_coherent
from .estimator import fit_g2, g2_histogram, hbt_split
from .extractor import extract, throughput
from .model import REGIONS, EmitterParams, FluxSpec, region_preset
from .quality import ent_report, pearson_lag, relative_frequency
from .simulator import DetectorModel, simulate_region

_TIME_RE = re.compile(r"^([0-9]+(?:\.[0-9]+)?)(ps|ns|us|ms|s)?$")
_TIME_SCALE = {None: 1, "ps": 1, "ns": 1_000, "us": 1_000_000, "ms": 10**9, "s": 10**12}


def parse_time_ps(text: str) -> int:
    """Strict time parser: bare numbers are ps; ns/us/ms/s suffixes allowed."""
    m = _TIME_RE.match(str(text).strip())
    if not m:
        raise argparse.ArgumentTypeError(f"invalid time {text!r}")
    value, unit = m.groups()
    return int(round(float(value) * _TIME_SCALE[unit]))


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nvqrng",
        description="Time-of-arrival quantum random number generation toolkit",
    )
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument(
        "--threads",
        type=int,
        default=1,
        help="worker bound for future parallel stages; outputs never depend on it",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_source(sp):
        sp.add_argument("--region", type=int, choices=REGIONS, help="built-in preset")
        sp.add_argument("--n", type=int, help="emitter count (explicit mode)")
        sp.add_argument("--gamma1", type=float, help="transition rate, ns^-1")
        sp.add_argument("--gamma2", type=float, help="shelving decay rate, ns^-1 (default gamma1/20)")
        sp.add_argument("--beta", type=float, help="shelving strength")
        sp.add_argument("--rho", type=float, help="background purity")
        sp.add_argument("--lam", type=float, help="detected flux per emitter, ns^-1")

    def add_binning(sp):
        sp.add_argument("--period", type=parse_time_ps, default=None, help="reference period (default 12.8ns)")
        sp.add_argument("--bins", type=int, default=None, help="bins per period (default 256)")

    sp = sub.add_parser("simulate", help="generate a detected timestamp stream")
    add_source(sp)
    sp.add_argument("--duration", type=parse_time_ps, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dead-time", type=parse_time_ps, default=None)
    sp.add_argument("--jitter-fwhm", type=parse_time_ps, default=None)
    sp.add_argument("--dark-rate", type=float, default=None, help="counts/s")
    sp.add_argument("--efficiency", type=float, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(handler=_cmd_simulate)

    sp = sub.add_parser("extract", help="timestamp stream -> random bytes")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--out", required=True, help="output file, or - for raw bytes on stdout")
    sp.add_argument("--duration", type=parse_time_ps, default=None, help="acquisition length, if known")
    add_binning(sp)
    sp.set_defaults(handler=_cmd_extract)

    sp = sub.add_parser("g2", help="split a stream and histogram coincidences")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, default=0, help="beamsplitter routing seed")
    sp.add_argument("--window", type=parse_time_ps, default=1000)
    sp.add_argument("--max-tau", type=parse_time_ps, default=500_000)
    sp.add_argument("--duration", type=parse_time_ps, default=None)
    sp.set_defaults(handler=_cmd_g2)

    sp = sub.add_parser("fit", help="fit the emitter model to a g2 histogram")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--n-max", type=int, default=128)
    sp.set_defaults(handler=_cmd_fit)

    sp = sub.add_parser("theory", help="bin probabilities and min-entropy")
    add_source(sp)
    add_binning(sp)
    sp.set_defaults(handler=_cmd_theory)

    sp = sub.add_parser("quality", help="score a byte sample")
    sp.add_argument("--in", dest="infile", required=True)
    sp.add_argument("--lags", type=int, default=0, help="also print bit correlations up to this lag")
    sp.add_argument("--table", action="store_true", help="emit one delimited summary row")
    sp.set_defaults(handler=_cmd_quality)

    sp = sub.add_parser("reproduce", help="end-to-end run checked against the published anchors")
    sp.add_argument("region", type=int, choices=REGIONS)
    sp.add_argument("--duration", type=parse_time_ps, default=10**12)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--outdir", default=".")
    sp.set_defaults(handler=_cmd_reproduce)
    return p


def _load_config(args) -> dict:
    return io.parse_config(args.config) if args.config else {}


def _cfg_get(args, cfg, key, parse, default):
    value = getattr(args, key.replace("-", "_"), None)
    if value is not None:
        return value
    if key in cfg:
        return parse(cfg[key])
    return default


def _resolve_source(args, cfg) -> tuple[EmitterParams, FluxSpec]:
    region = _cfg_get(args, cfg, "region", int, None)
    explicit_keys = ("n", "gamma1", "gamma2", "beta", "rho")
    explicit = {k: _cfg_get(args, cfg, k, float, None) for k in explicit_keys}
    lam = _cfg_get(args, cfg, "lam", float, None)
    has_explicit = any(v is not None for v in explicit.values())
    if region is not None and has_explicit:
        raise SystemExit("error: give either --region or explicit emitter parameters, not both")
    if region is not None:
        preset = region_preset(region)
        flux = FluxSpec(lam) if lam is not None else preset.flux
        return preset.params, flux
    missing = [k for k in ("n", "gamma1", "beta", "rho") if explicit[k] is None]
    if missing:
        raise SystemExit(f"error: explicit mode needs --{', --'.join(missing)}")
    if lam is None:
        raise SystemExit("error: explicit mode needs --lam")
    n = int(explicit["n"])
    if explicit["gamma2"] is None:
        params = EmitterParams.with_default_shelving(
            n, explicit["gamma1"], explicit["beta"], explicit["rho"]
        )
    else:
        params = EmitterParams(
            n, explicit["gamma1"], explicit["gamma2"], explicit["beta"], explicit["rho"]
        )
    return params, FluxSpec(lam)


def _resolve_binning(args, cfg) -> BinningConfig:
    period = _cfg_get(args, cfg, "period", parse_time_ps, 12_800)
    bins = _cfg_get(args, cfg, "bins", int, 256)
    return BinningConfig(period_ps=period, n_bins=bins)


def _resolve_detector(args, cfg) -> DetectorModel:
    return DetectorModel(
        dead_time_ps=_cfg_get(args, cfg, "dead-time", parse_time_ps, 24_000),
        jitter_fwhm_ps=float(_cfg_get(args, cfg, "jitter-fwhm", parse_time_ps, 350)),
        dark_rate_per_s=_cfg_get(args, cfg, "dark-rate", float, 50.0),
        efficiency=_cfg_get(args, cfg, "efficiency", float, 1.0),
    )


def _cmd_simulate(args, cfg) -> int:
    params, flux = _resolve_source(args, cfg)
    detector = _resolve_detector(args, cfg)
    stream = simulate_region(params, flux, detector, args.duration, args.seed)
    io.write_timestamps(args.out, stream)
    print(f"events={len(stream)}")
    print(f"rate_per_s={stream.rate_per_s:.6g}")
    print(f"out={args.out}")
    return 0


def _cmd_extract(args, cfg) -> int:
    stream = io.read_timestamps(args.infile, duration_ps=args.duration)
    binning = _resolve_binning(args, cfg)
    if len(stream) == 0:
        print("warning: empty timestamp stream; writing an empty bit file", file=sys.stderr)
    result = extract(stream, binning)
    if args.out == "-":
        sys.stdout.buffer.write(result.data)
        sys.stdout.buffer.flush()
        return 0
    meta = {
        "photons_used": result.photons_used,
        "photons_discarded_same_period": result.photons_discarded_same_period,
        "duration_ps": result.elapsed_ps,
        "bits_per_symbol": result.bits_per_symbol,
        "bits_per_second": f"{result.bits_per_second:.6g}",
        "config_sha256": io.config_hash(
            {"period_ps": binning.period_ps, "n_bins": binning.n_bins, "source": args.infile}
        ),
    }
    io.write_bits(args.out, result.data, meta)
    print(f"bytes={len(result.data)}")
    print(f"photons_used={result.photons_used}")
    print(f"bits_per_second={result.bits_per_second:.6g}")
    return 0


def _cmd_g2(args, cfg) -> int:
    stream = io.read_timestamps(args.infile, duration_ps=args.duration)
    arm_a, arm_b = hbt_split(stream, args.seed)
    hist = g2_histogram(
        arm_a,
        arm_b,
        window_ns=args.window / 1000.0,
        max_tau_ns=args.max_tau / 1000.0,
        total_time_s=stream.duration_ps * 1e-12,
    )
    io.write_histogram(args.out, hist)
    print(f"windows={hist.g2.size}")
    print(f"counts_det0={hist.counts_det0}")
    print(f"counts_det1={hist.counts_det1}")
    lo = min(400.0, 0.8 * float(np.max(hist.tau_centers_ns)))
    hi = float(np.max(hist.tau_centers_ns))
    print(f"tail_mean={hist.tail_mean(lo, hi):.4f}")
    return 0


def _cmd_fit(args, cfg) -> int:
    hist = io.read_histogram(args.infile)
    result = fit_g2(hist, rho=args.rho, n_max=args.n_max)
    print(f"n_emitters={result.n_emitters}")
    print(f"gamma={result.gamma:.6g}")
    print(f"gamma_stderr={result.gamma_stderr:.3g}")
    print(f"beta={result.beta:.6g}")
    print(f"beta_stderr={result.beta_stderr:.3g}")
    print(f"rho_used={result.rho_used}")
    print(f"residual_sum_squares={result.residual_sum_squares:.6g}")
    return 0


def _cmd_theory(args, cfg) -> int:
    params, flux = _resolve_source(args, cfg)
    binning = _resolve_binning(args, cfg)
    h = min_entropy(params, flux, binning)
    h_coherent = min_entropy_coherent(
        params.n_emitters * flux.lambda_per_emitter, binning
    )
    print(f"min_entropy_per_bit={h:.6f}")
    print(f"min_entropy_coherent_equiv={h_coherent:.6f}")
    print(f"bits_per_photon={binning.bits_per_symbol}")
    return 0


def _cmd_quality(args, cfg) -> int:
    data = Path(args.infile).read_bytes()
    report = ent_report(data)
    f0, f1 = relative_frequency(data)
    if args.table:
        print(
            f"{report.entropy_per_byte:.6f}\t{report.chi2_percentile:.2f}\t"
            f"{report.arithmetic_mean:.3f}\t{report.monte_carlo_pi:.8f}\t"
            f"{report.serial_correlation:.6f}"
        )
        return 0
    print(f"n_bytes={report.n_bytes}")
    print(f"entropy_per_byte={report.entropy_per_byte:.6f}")
    print(f"chi2_statistic={report.chi2_statistic:.2f}")
    print(f"chi2_percentile={report.chi2_percentile:.2f}")
    print(f"arithmetic_mean={report.arithmetic_mean:.3f}")
    print(f"monte_carlo_pi={report.monte_carlo_pi:.8f}")
    print(f"serial_correlation={report.serial_correlation:.6f}")
    print(f"frequency_0={f0:.6f}")
    print(f"frequency_1={f1:.6f}")
    if report.degenerate:
        print("degenerate=1")
    if args.lags:
        lag = pearson_lag(data, args.lags)
        for d, r in zip(lag.lags, lag.coefficients):
            print(f"lag_{d}={r:.6g}")
    return 0


def _check(lines, name, value, ok, detail) -> bool:
    lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {value:.6g} ({detail})")
    return ok


def _cmd_reproduce(args, cfg) -> int:
    preset = region_preset(args.region)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    tag = f"region{args.region}_seed{args.seed}"
    detector = DetectorModel()
    binning = BinningConfig()

    stream = simulate_region(
        preset.params, preset.flux, detector, args.duration, args.seed
    )
    ts_path = outdir / f"{tag}.nvqts"
    io.write_timestamps(ts_path, stream)
    result = extract(stream, binning)
    meta = {
        "photons_used": result.photons_used,
        "photons_discarded_same_period": result.photons_discarded_same_period,
        "duration_ps": result.elapsed_ps,
        "bits_per_symbol": result.bits_per_symbol,
        "bits_per_second": f"{result.bits_per_second:.6g}",
        "config_sha256": io.config_hash(
            {"region": args.region, "seed": args.seed, "duration_ps": args.duration}
        ),
    }
    bits_path = outdir / f"{tag}.bits"
    io.write_bits(bits_path, result.data, meta)

    lines = [f"reproduction report: region {args.region}, seed {args.seed}, "
             f"duration {args.duration} ps", ""]
    ok = True

    h = min_entropy(preset.params, preset.flux, binning)
    ok &= _check(
        lines, "min_entropy", h,
        abs(h - preset.min_entropy_anchor) <= 5e-5,
        f"anchor {preset.min_entropy_anchor} +- 5e-5",
    )

    n = len(result.data)
    if n >= 6:
        report = ent_report(result.data)
        f0, _ = relative_frequency(result.data)
        nb = 8 * n
        bound_f = 5 * 0.5 / math.sqrt(nb)
        ok &= _check(lines, "frequency_0", f0, abs(f0 - 0.5) <= bound_f,
                     f"0.5 +- {bound_f:.2e}")
        bound_mean = 5 * math.sqrt(65535.0 / 12.0) / math.sqrt(n)
        ok &= _check(lines, "arithmetic_mean", report.arithmetic_mean,
                     abs(report.arithmetic_mean - 127.5) <= bound_mean,
                     f"127.5 +- {bound_mean:.3g}")
        bound_scc = 5 / math.sqrt(n - 1)
        ok &= _check(lines, "serial_correlation", report.serial_correlation,
                     abs(report.serial_correlation) <= bound_scc,
                     f"0 +- {bound_scc:.2e}")
        groups = n // 6
        p = math.pi / 4
        bound_pi = 5 * 4 * math.sqrt(p * (1 - p) / groups)
        ok &= _check(lines, "monte_carlo_pi", report.monte_carlo_pi,
                     abs(report.monte_carlo_pi - math.pi) <= bound_pi,
                     f"pi +- {bound_pi:.3g}")
        deficit_bound = 5 * 255 / (2 * n * math.log(2))
        ok &= _check(lines, "entropy_per_byte", report.entropy_per_byte,
                     report.entropy_per_byte >= 8 - deficit_bound,
                     f">= 8 - {deficit_bound:.2e}")
        ok &= _check(lines, "chi2_percentile", report.chi2_percentile,
                     0.1 <= report.chi2_percentile <= 99.9, "in [0.1, 99.9]")
    else:
        lines.append("SKIP quality statistics: fewer than 6 bytes extracted")

    rate = throughput(result) / 1e6  # Mbit/s
    n_events = max(result.photons_used, 1)
    tol = 0.05 + 3.0 / math.sqrt(n_events)
    if args.duration >= 2 * 10**11:
        ok &= _check(lines, "throughput_mbits", rate,
                     abs(rate - preset.rate_mbits_anchor) <= tol * preset.rate_mbits_anchor,
                     f"anchor {preset.rate_mbits_anchor} +- {tol * 100:.1f}%")
    else:
        lines.append(f"SKIP throughput check: duration below 0.2 s (rate {rate:.4g} Mbit/s)")

    lines.append("")
    lines.append("result: " + ("PASS" if ok else "FAIL"))
    text = "\n".join(lines)
    (outdir / f"{tag}_report.txt").write_text(text + "\n")
    print(text)
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        cfg = _load_config(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.handler(args, cfg)
    except FileNotFoundError as exc:
        print(f"error: {exc.filename or exc}: no such file", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
