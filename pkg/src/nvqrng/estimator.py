"""g2(tau) reconstruction and model fitting from timestamp streams.

The beamsplitter of a two-detector coincidence setup is simulated by fair
Bernoulli routing. Coincidences are counted multi-start multi-stop: every
ordered cross pair contributes to the histogram bin containing its signed
delay, and counts normalise to

    g2 = c(tau) * T_tot / (C0 * C1 * dtau),

which is unity for uncorrelated streams. Fitting scans the emitter count N
as an integer while solving for the transition rate and shelving strength by
damped least squares on the fixed-shelving-ratio model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .model import SHELVING_RATE_RATIO
from .simulator import RESOLUTION_PS, TimestampStream

__all__ = [
    "FitError",
    "G2Histogram",
    "FitResult",
    "hbt_split",
    "g2_histogram",
    "average_histograms",
    "estimate_rho",
    "fit_g2",
]

_PAIR_CHUNK = 200_000


class FitError(RuntimeError):
    """No emitter count produced a converged fit."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


@dataclass(frozen=True)
class G2Histogram:
    """Normalised coincidence histogram with its raw inputs.

    tau_centers_ns are the centres of windows of width window_ns, symmetric
    about zero delay; raw_coincidences are the per-window pair counts from
    which g2 was normalised. For healthy data the histogram settles to 1 at
    delays long compared with every correlation time (shelving keeps it
    above 1 out to a few times 1/gamma2).
    """

    tau_centers_ns: np.ndarray
    g2: np.ndarray
    raw_coincidences: np.ndarray
    window_ns: float
    total_time_s: float
    counts_det0: int
    counts_det1: int

    def __post_init__(self) -> None:
        for name in ("tau_centers_ns", "g2", "raw_coincidences"):
            arr = np.asarray(getattr(self, name))
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)
        if self.g2.shape != self.tau_centers_ns.shape or self.raw_coincidences.shape != self.g2.shape:
            raise ValueError("histogram arrays must have matching shapes")
        if np.any(self.raw_coincidences < 0) or np.any(self.g2 < 0):
            raise ValueError("counts and g2 values must be >= 0")

    def tail_mean(self, lo_ns: float, hi_ns: float) -> float:
        """Mean g2 over lo_ns <= |tau| <= hi_ns; ~1 for healthy data."""
        sel = (np.abs(self.tau_centers_ns) >= lo_ns) & (np.abs(self.tau_centers_ns) <= hi_ns)
        if not sel.any():
            raise ValueError("no histogram windows in the requested range")
        return float(self.g2[sel].mean())


@dataclass(frozen=True)
class FitResult:
    """Best-fit parameters of the fixed-shelving-ratio correlation model."""

    n_emitters: int
    gamma: float
    beta: float
    rho_used: float
    residual_sum_squares: float
    gamma_stderr: float
    beta_stderr: float
    residual_by_n: tuple  # (N, rss) pairs for the whole scan

    def __post_init__(self) -> None:
        if self.n_emitters < 1:
            raise ValueError("n_emitters must be >= 1")
        if self.gamma <= 0 or self.beta < 1.0:
            raise ValueError("gamma must be positive and beta >= 1")


def hbt_split(stream: TimestampStream, seed: int) -> tuple[TimestampStream, TimestampStream]:
    """Route each event through a fair 50/50 beamsplitter.

    Every event lands in exactly one output arm; the union of the arms is the
    input stream. Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 50, 50)))
    to_first = rng.random(len(stream)) < 0.5
    ts = stream.timestamps
    a = TimestampStream(ts[to_first], stream.duration_ps, stream.origin)
    b = TimestampStream(ts[~to_first], stream.duration_ps, stream.origin)
    return a, b


def _signed_delays_ps(a: np.ndarray, b: np.ndarray, max_tau_ps: int) -> np.ndarray:
    """All b - a delays in the half-open range [-max_tau_ps, max_tau_ps)."""
    out = []
    for start in range(0, a.size, _PAIR_CHUNK):
        chunk = a[start : start + _PAIR_CHUNK]
        lo = np.searchsorted(b, chunk - max_tau_ps, side="left")
        hi = np.searchsorted(b, chunk + max_tau_ps, side="left")
        counts = hi - lo
        total = int(counts.sum())
        if total == 0:
            continue
        # flat indices of b-events paired with each chunk event
        offsets = np.repeat(np.cumsum(counts) - counts, counts)
        flat = np.arange(total) - offsets + np.repeat(lo, counts)
        out.append(b[flat] - np.repeat(chunk, counts))
    return np.concatenate(out) if out else np.empty(0, dtype=np.int64)


def g2_histogram(
    a: TimestampStream,
    b: TimestampStream,
    window_ns: float = 1.0,
    max_tau_ns: float = 500.0,
    total_time_s: float | None = None,
) -> G2Histogram:
    """Multi-start multi-stop coincidence histogram between two streams.

    Windows are centred on k * window_ns for integer k from -K to K with
    K = round(max_tau_ns / window_ns), so a window sits exactly at zero delay.
    """
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both streams must contain events")
    window_ps = int(round(window_ns * 1000.0))
    if window_ps < RESOLUTION_PS:
        raise ValueError(
            f"window {window_ns} ns is below the {RESOLUTION_PS} ps resolution"
        )
    k_max = int(round(max_tau_ns * 1000.0 / window_ps))
    if k_max < 1:
        raise ValueError("max_tau must cover at least one window")
    if total_time_s is None:
        total_time_s = a.duration_ps * 1e-12
    if total_time_s <= 0:
        raise ValueError("total_time_s must be positive")

    half = window_ps // 2
    span = k_max * window_ps + half
    delays = _signed_delays_ps(a.timestamps, b.timestamps, span)
    idx = (delays + span) // window_ps
    counts = np.bincount(idx, minlength=2 * k_max + 1).astype(np.int64)

    centers = np.arange(-k_max, k_max + 1) * (window_ps / 1000.0)
    expected_per_window = len(a) * len(b) * (window_ps * 1e-12) / total_time_s
    g2 = counts / expected_per_window
    return G2Histogram(
        tau_centers_ns=centers,
        g2=g2,
        raw_coincidences=counts,
        window_ns=window_ps / 1000.0,
        total_time_s=total_time_s,
        counts_det0=len(a),
        counts_det1=len(b),
    )


def average_histograms(hists: list[G2Histogram], mode: str = "g2") -> G2Histogram:
    """Combine repeated measurements.

    mode="g2": equal-weight mean of the normalised values (the default);
    mode="counts": pool raw coincidences and renormalise, which weights runs
    by their pair statistics.
    """
    if not hists:
        raise ValueError("need at least one histogram")
    first = hists[0]
    for h in hists[1:]:
        if h.g2.shape != first.g2.shape or h.window_ns != first.window_ns:
            raise ValueError("histograms must share binning to be averaged")
    counts = np.sum([h.raw_coincidences for h in hists], axis=0)
    c0 = sum(h.counts_det0 for h in hists)
    c1 = sum(h.counts_det1 for h in hists)
    t = sum(h.total_time_s for h in hists)
    if mode == "g2":
        g2 = np.mean([h.g2 for h in hists], axis=0)
    elif mode == "counts":
        # pooled normalisation with the aggregate rates
        g2 = counts * t / (c0 * c1 * (first.window_ns * 1e-9))
    else:
        raise ValueError(f"unknown averaging mode {mode!r}")
    return G2Histogram(
        tau_centers_ns=first.tau_centers_ns,
        g2=g2,
        raw_coincidences=counts,
        window_ns=first.window_ns,
        total_time_s=t,
        counts_det0=c0,
        counts_det1=c1,
    )


def estimate_rho(signal_plus_bg_rate: float, bg_rate: float) -> float:
    """Background purity S/(S+B) from total and background count rates."""
    if signal_plus_bg_rate <= 0:
        raise ValueError("total rate must be positive")
    if bg_rate < 0:
        raise ValueError("background rate must be >= 0")
    if bg_rate > signal_plus_bg_rate:
        raise ValueError("background rate exceeds the total rate")
    return (signal_plus_bg_rate - bg_rate) / signal_plus_bg_rate


def _dip_model_and_jac(tau_abs: np.ndarray, n: int, rho: float):
    """Model g2 for N emitters with gamma2 = gamma/20, plus analytic Jacobian."""
    contrast = rho * rho / n

    def model(x):
        gamma, beta = x
        e_fast = np.exp(-gamma * tau_abs)
        e_slow = np.exp(-gamma * tau_abs / SHELVING_RATE_RATIO)
        return 1.0 - contrast * (beta * e_fast - (beta - 1.0) * e_slow)

    def jac(x):
        gamma, beta = x
        e_fast = np.exp(-gamma * tau_abs)
        e_slow = np.exp(-gamma * tau_abs / SHELVING_RATE_RATIO)
        d_gamma = contrast * tau_abs * (beta * e_fast - (beta - 1.0) * e_slow / SHELVING_RATE_RATIO)
        d_beta = -contrast * (e_fast - e_slow)
        return np.column_stack((d_gamma, d_beta))

    return model, jac


def _initial_gamma(tau_abs: np.ndarray, g2: np.ndarray) -> float:
    """Half-recovery time of the dip as a starting decay rate."""
    order = np.argsort(tau_abs)
    t, g = tau_abs[order], g2[order]
    depth0 = 1.0 - float(np.mean(g[: max(3, t.size // 100)]))
    if depth0 <= 0:
        return 0.05
    target = 1.0 - 0.5 * depth0
    above = np.nonzero(g >= target)[0]
    if above.size == 0 or t[above[0]] <= 0:
        return 0.05
    return math.log(2.0) / float(t[above[0]])


def fit_g2(hist: G2Histogram, rho: float, n_max: int = 128) -> FitResult:
    """Fit emitter count and dip parameters to a measured histogram.

    For each candidate N the (gamma, beta) pair is solved by bounded damped
    least squares with the analytic Jacobian; the N with the smallest residual
    wins, ties going to the smaller N. Standard errors come from the
    Jacobian-based covariance at the optimum.
    """
    if not 0.0 < rho <= 1.0:
        raise ValueError("rho must be in (0, 1]")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    tau_abs = np.abs(hist.tau_centers_ns)
    g2 = hist.g2
    gamma0 = _initial_gamma(tau_abs, g2)

    best = None
    scan = []
    failures = []
    for n in range(1, n_max + 1):
        model, jac = _dip_model_and_jac(tau_abs, n, rho)
        try:
            sol = least_squares(
                lambda x: model(x) - g2,
                x0=np.array([gamma0, 1.0]),
                jac=lambda x: jac(x),
                bounds=([1e-8, 1.0], [np.inf, np.inf]),
                method="trf",
                xtol=1e-14,
                ftol=1e-14,
                gtol=1e-14,
            )
        except Exception as exc:  # keep scanning; report at the end
            failures.append((n, str(exc)))
            continue
        if not sol.success:
            failures.append((n, sol.message))
            continue
        rss = float(np.sum(sol.fun**2))
        scan.append((n, rss))
        if best is None or rss < best[1]:
            best = (n, rss, sol)
    if best is None:
        raise FitError(
            "least-squares failed for every candidate emitter count",
            diagnostics=failures,
        )

    n_best, rss, sol = best
    dof = max(g2.size - 2, 1)
    jtj = sol.jac.T @ sol.jac
    try:
        cov = np.linalg.inv(jtj) * (rss / dof)
        gamma_err, beta_err = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        gamma_err = beta_err = float("nan")
    return FitResult(
        n_emitters=n_best,
        gamma=float(sol.x[0]),
        beta=float(sol.x[1]),
        rho_used=rho,
        residual_sum_squares=rss,
        gamma_stderr=float(gamma_err),
        beta_stderr=float(beta_err),
        residual_by_n=tuple(scan),
    )
