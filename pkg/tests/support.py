"""Shared helpers for statistical tests: bunched source, chi-square scoring."""

import numpy as np
from scipy import stats

from nvqrng.simulator import TimestampStream


def chi2_pvalue_vs_model(hist, expected_g2):
    """p-value of the histogram counts against fully specified expectations.

    Cells with expectation below 10 are pooled into one, the usual validity
    floor for the chi-square approximation.
    """
    denom = hist.counts_det0 * hist.counts_det1 * (hist.window_ns * 1e-9) / hist.total_time_s
    e = np.asarray(expected_g2) * denom
    c = hist.raw_coincidences
    big = e >= 10.0
    chi2 = float(np.sum((c[big] - e[big]) ** 2 / e[big]))
    dof = int(big.sum())
    if (~big).any() and e[~big].sum() > 0:
        pooled_e = float(e[~big].sum())
        pooled_c = float(c[~big].sum())
        chi2 += (pooled_c - pooled_e) ** 2 / pooled_e
        dof += 1
    return float(stats.chi2.sf(chi2, dof))


def chi2_uniform_pvalue(values, n_cells):
    """p-value of integer symbols in [0, n_cells) against uniformity."""
    counts = np.bincount(values, minlength=n_cells)
    e = values.size / n_cells
    chi2 = float(np.sum((counts - e) ** 2 / e))
    return float(stats.chi2.sf(chi2, n_cells - 1))


def make_bunched_stream(duration_ps, seed, rate_hi_ns=0.03125, ratio=8.0, dwell_ns=10_000.0):
    """Strongly bunched stationary stream: telegraph-modulated Poisson.

    The rate switches between rate_hi_ns and rate_hi_ns/ratio with
    exponential dwell times (mean dwell_ns), starting from the equilibrium
    state, and arrivals are generated by thinning a Poisson stream at the
    high rate. g2(0) is well above 1 out to delays of order dwell_ns.
    """
    rng = np.random.default_rng(seed)
    duration_ns = duration_ps / 1000.0
    n_switch = int(duration_ns / dwell_ns * 1.5) + 50
    dwells = rng.exponential(dwell_ns, size=n_switch)
    edges = np.cumsum(dwells)
    start_hi = bool(rng.random() < 0.5)

    n = rng.poisson(rate_hi_ns * duration_ns)
    t = np.sort(rng.random(n)) * duration_ns
    seg = np.searchsorted(edges, t)
    in_hi = (seg % 2 == 0) == start_hi
    keep = in_hi | (rng.random(n) < 1.0 / ratio)
    ps = np.unique(np.floor(t[keep] * 1000.0).astype(np.int64))
    return TimestampStream(ps, duration_ps, "merged")


def single_arrival_symbols(stream, period_ps, n_bins):
    """Bin indices of periods containing exactly one arrival."""
    ts = stream.timestamps
    period = ts // period_ps
    uniq, counts = np.unique(period, return_counts=True)
    singles = uniq[counts == 1]
    sel = np.isin(period, singles)
    width = period_ps // n_bins
    return ((ts[sel] % period_ps) // width).astype(np.int64)
