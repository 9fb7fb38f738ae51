"""Detected-photon timestamp simulation for emitter clusters.

Each emitter is a three-state continuous-time jump process: ground, excited
and a metastable shelf. A photon is emitted at every radiative
excited -> ground transition. The cycle structure (ground wait, excited wait,
optional shelf detour) makes the emission stream a renewal process, which is
sampled exactly with vectorised exponential/gamma draws rather than one jump
at a time; Bernoulli detection thinning folds into the same representation
through geometric cycle counts.

The detector pipeline applies, in order: efficiency thinning, Gaussian timing
jitter, quantisation to the 25 ps tagger grid, sorting, and dead-time
censoring. Times are ns floats internally and integer picoseconds on every
public stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import EmitterParams

__all__ = [
    "InfeasibleRatesError",
    "CtmcRates",
    "DetectorModel",
    "TimestampStream",
    "RESOLUTION_PS",
    "ctmc_g2",
    "ctmc_g2_params",
    "calibrate_rates",
    "simulate_emitter",
    "simulate_poisson",
    "simulate_region",
    "simulate_hbt_pair",
    "thin",
    "censor_dead_time",
]

RESOLUTION_PS = 25  # time-tagger grid

_JITTER_SIGMA_PER_FWHM = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))

# Sub-stream tags for deriving independent generators from one master seed.
_TAG_EMITTER = 0
_TAG_BACKGROUND = 1
_TAG_DARK = 2
_TAG_EFFICIENCY = 3
_TAG_JITTER = 4
_TAG_SPLITTER = 5

_ORIGINS = ("signal", "background", "dark", "merged")

_CHUNK_CAP = 4_000_000


class InfeasibleRatesError(ValueError):
    """Requested emitter behaviour has no realisation in the rate model."""


def _rng(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, tag, index)))


@dataclass(frozen=True)
class CtmcRates:
    """Microscopic transition rates of the three-state chain, in ns^-1.

    r_excite: ground -> excited
    r_radiate: excited -> ground, emitting one photon
    r_shelve: excited -> shelf (may be zero: two-level limit)
    r_deshelve: shelf -> ground
    """

    r_excite: float
    r_radiate: float
    r_shelve: float
    r_deshelve: float

    def __post_init__(self) -> None:
        if not (self.r_excite > 0.0 and self.r_radiate > 0.0 and self.r_deshelve > 0.0):
            raise ValueError("r_excite, r_radiate and r_deshelve must be positive")
        if self.r_shelve < 0.0:
            raise ValueError("r_shelve must be >= 0")
        if self.r_shelve >= self.r_radiate:
            raise ValueError(
                "r_shelve must be below r_radiate (metastable shelving regime)"
            )

    @property
    def occupancies(self) -> tuple[float, float, float]:
        """Steady-state (ground, excited, shelf) probabilities."""
        det = (self.r_excite + self.r_radiate + self.r_shelve) * self.r_deshelve
        det += self.r_excite * self.r_shelve
        p_e = self.r_excite * self.r_deshelve / det
        p_s = self.r_shelve * p_e / self.r_deshelve
        return (1.0 - p_e - p_s, p_e, p_s)

    @property
    def radiative_flux(self) -> float:
        """Mean photon emission rate in steady state, ns^-1."""
        return self.r_radiate * self.occupancies[1]


def ctmc_g2_params(rates: CtmcRates) -> tuple[float, float, float]:
    """Biexponential (gamma1, gamma2, beta) equivalent to the rate model.

    gamma1 and gamma2 are the negated nonzero eigenvalues of the occupancy
    generator; beta follows from the relaxation amplitudes after an emission.
    """
    s = rates.r_excite + rates.r_radiate + rates.r_shelve + rates.r_deshelve
    det = (rates.r_excite + rates.r_radiate + rates.r_shelve) * rates.r_deshelve
    det += rates.r_excite * rates.r_shelve
    disc = s * s - 4.0 * det
    if disc < 0.0:
        raise ValueError(
            "complex relaxation eigenvalues: these rates do not produce a "
            "biexponential correlation function"
        )
    root = math.sqrt(disc)
    gamma1 = 0.5 * (s + root)
    gamma2 = 0.5 * (s - root)
    if gamma1 - gamma2 <= 1e-9 * gamma1:
        raise ValueError("degenerate eigenvalues: beta is undefined at confluence")
    rd = rates.r_deshelve
    beta = gamma2 * (gamma1 - rd) / (rd * (gamma1 - gamma2))
    return gamma1, gamma2, beta


def ctmc_g2(rates: CtmcRates, tau):
    """Analytic normalised g2 of the rate model at delay tau >= 0 (ns).

    Excited-state occupancy after an emission (ground start) divided by its
    steady-state value. Zero at tau = 0, tending to 1. Repeated eigenvalues
    fall back to the confluent (a + b*tau)*exp(-gamma*tau) form.
    """
    t = np.asarray(tau, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("tau must be >= 0")
    s = rates.r_excite + rates.r_radiate + rates.r_shelve + rates.r_deshelve
    det = (rates.r_excite + rates.r_radiate + rates.r_shelve) * rates.r_deshelve
    det += rates.r_excite * rates.r_shelve
    disc = s * s - 4.0 * det
    if disc < 0.0:
        raise ValueError(
            "complex relaxation eigenvalues: these rates do not produce a "
            "biexponential correlation function"
        )
    root = math.sqrt(disc)
    gamma1 = 0.5 * (s + root)
    gamma2 = 0.5 * (s - root)
    if gamma1 - gamma2 <= 1e-9 * gamma1:
        # confluent limit: p_e(t) = p_inf + exp(-g t) * (a + b t)
        g = 0.5 * s
        p_inf = rates.r_excite * rates.r_deshelve / det
        b = rates.r_excite - g * p_inf
        out = 1.0 + np.exp(-g * t) * (-1.0 + (b / p_inf) * t)
    else:
        rd = rates.r_deshelve
        beta = gamma2 * (gamma1 - rd) / (rd * (gamma1 - gamma2))
        out = 1.0 - beta * np.exp(-gamma1 * t) + (beta - 1.0) * np.exp(-gamma2 * t)
    return float(out) if np.isscalar(tau) else out


def _feasible_rates(gamma1: float, gamma2: float, beta: float):
    """Rates realising (gamma1, gamma2, beta) under r_excite = r_radiate,
    or None when no such rates exist."""
    rd = gamma1 * gamma2 / (beta * gamma1 - (beta - 1.0) * gamma2)
    u = gamma1 + gamma2 - rd
    disc = u * u - 8.0 * (gamma1 * gamma2 - u * rd)
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    r_pump = 0.25 * (u + root)
    r_shelve = max(0.5 * (u - root), 0.0)  # exact zero at beta = 1 up to rounding
    if r_shelve >= r_pump:
        return None
    return CtmcRates(r_pump, r_pump, r_shelve, rd)


def calibrate_rates(target: EmitterParams) -> CtmcRates:
    """Invert (gamma1, gamma2, beta) to microscopic rates.

    The three lumped parameters leave one free rate; the pumping convention
    r_excite = r_radiate closes the system, after which the inversion is a
    quadratic. n_emitters and rho play no role here. Raises
    InfeasibleRatesError, reporting the largest realisable beta, when the
    requested shelving strength has no solution.
    """
    gamma1, gamma2, beta = target.gamma1, target.gamma2, target.beta
    rates = _feasible_rates(gamma1, gamma2, beta)
    if rates is not None:
        return rates
    lo, hi = 1.0, beta
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _feasible_rates(gamma1, gamma2, mid) is not None:
            lo = mid
        else:
            hi = mid
    raise InfeasibleRatesError(
        f"beta = {beta} is not realisable for gamma1 = {gamma1}, "
        f"gamma2 = {gamma2}; nearest achievable beta ~= {lo:.6g}"
    )


@dataclass(frozen=True)
class DetectorModel:
    """Detection-chain imperfections: 24 ns dead time, 350 ps FWHM jitter and
    up to 50 dark counts per second by default."""

    dead_time_ps: int = 24_000
    jitter_fwhm_ps: float = 350.0
    dark_rate_per_s: float = 50.0
    efficiency: float = 1.0

    def __post_init__(self) -> None:
        if self.dead_time_ps < 0:
            raise ValueError("dead_time_ps must be >= 0")
        if self.jitter_fwhm_ps < 0.0:
            raise ValueError("jitter_fwhm_ps must be >= 0")
        if self.dark_rate_per_s < 0.0:
            raise ValueError("dark_rate_per_s must be >= 0")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must be in (0, 1]")


@dataclass(frozen=True)
class TimestampStream:
    """Strictly increasing detected-photon arrival times in integer ps."""

    timestamps: np.ndarray
    duration_ps: int
    origin: str = "merged"

    def __post_init__(self) -> None:
        ts = np.asarray(self.timestamps, dtype=np.int64)
        object.__setattr__(self, "timestamps", ts)
        ts.setflags(write=False)
        if self.duration_ps < 0:
            raise ValueError("duration_ps must be >= 0")
        if self.origin not in _ORIGINS:
            raise ValueError(f"origin must be one of {_ORIGINS}, got {self.origin!r}")
        if ts.size:
            if np.any(np.diff(ts) <= 0):
                raise ValueError("timestamps must be strictly increasing")
            if ts[0] < 0 or ts[-1] > self.duration_ps:
                raise ValueError("timestamps must lie in [0, duration_ps]")

    def __len__(self) -> int:
        return int(self.timestamps.size)

    @property
    def rate_per_s(self) -> float:
        if self.duration_ps == 0:
            return 0.0
        return self.timestamps.size / (self.duration_ps * 1e-12)


def _emission_times_ns(
    rates: CtmcRates, keep_prob: float, duration_ns: float, rng: np.random.Generator
) -> np.ndarray:
    """Exact sample of the (Bernoulli-thinned) emission process, ns floats.

    Per cycle the emitter waits Exp(r_excite) in the ground state and
    Exp(r_radiate + r_shelve) in the excited state, then either emits
    (probability r_radiate/(r_radiate + r_shelve)) or detours through the
    shelf for Exp(r_deshelve). A kept emission closes a block of
    Geometric(alpha) cycles whose waits aggregate into gamma variates.
    """
    if duration_ns <= 0.0:
        return np.empty(0, dtype=float)
    branch = rates.r_shelve / (rates.r_radiate + rates.r_shelve)
    alpha = (1.0 - branch) * keep_prob
    if alpha <= 0.0:
        return np.empty(0, dtype=float)
    # shelf probability for a cycle given that it did not yield a detection
    q_cond = branch / (1.0 - alpha) if alpha < 1.0 else 0.0
    scale_g = 1.0 / rates.r_excite
    scale_e = 1.0 / (rates.r_radiate + rates.r_shelve)
    mean_gap = (scale_g + scale_e) / alpha + branch / (alpha * rates.r_deshelve)

    chunks = []
    t = 0.0
    while t < duration_ns:
        n = int((duration_ns - t) / mean_gap * 1.05) + 64
        n = min(max(n, 1024), _CHUNK_CAP)
        k = rng.geometric(alpha, size=n) - 1  # undetected cycles per detection
        gaps = rng.gamma(k + 1.0, scale_g) + rng.gamma(k + 1.0, scale_e)
        if branch > 0.0:
            shelved = rng.binomial(k, q_cond)
            gaps += rng.gamma(shelved, 1.0 / rates.r_deshelve)
        times = t + np.cumsum(gaps)
        t = float(times[-1])
        chunks.append(times)
    out = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
    return out[out < duration_ns]


def _to_ps(times_ns: np.ndarray) -> np.ndarray:
    ps = np.floor(times_ns * 1000.0).astype(np.int64)
    return np.unique(ps[ps >= 0])


def simulate_emitter(rates: CtmcRates, duration_ps: int, seed: int) -> TimestampStream:
    """Timestamps of every radiative transition of one emitter (ground start).

    Deterministic for a fixed seed. Emissions landing on the same picosecond
    collapse to one event.
    """
    rng = _rng(seed, _TAG_EMITTER, 0)
    times = _emission_times_ns(rates, 1.0, duration_ps / 1000.0, rng)
    return TimestampStream(_to_ps(times), duration_ps, "signal")


def _poisson_times_ns(
    rate_per_ns: float, duration_ns: float, rng: np.random.Generator
) -> np.ndarray:
    if rate_per_ns <= 0.0 or duration_ns <= 0.0:
        return np.empty(0, dtype=float)
    n = rng.poisson(rate_per_ns * duration_ns)
    return np.sort(rng.random(n)) * duration_ns


def simulate_poisson(
    rate_per_s: float, duration_ps: int, seed: int, origin: str = "background"
) -> TimestampStream:
    """Homogeneous Poisson arrivals at rate_per_s, as integer-ps timestamps."""
    if rate_per_s < 0.0:
        raise ValueError("rate must be >= 0")
    rng = _rng(seed, _TAG_BACKGROUND, 0)
    times = _poisson_times_ns(rate_per_s * 1e-9, duration_ps / 1000.0, rng)
    return TimestampStream(_to_ps(times), duration_ps, origin)


def thin(stream: TimestampStream, keep_prob: float, seed: int) -> TimestampStream:
    """Keep each event independently with probability keep_prob (memoryless
    detection loss; preserves normalised correlations)."""
    if not 0.0 <= keep_prob <= 1.0:
        raise ValueError("keep_prob must be in [0, 1]")
    rng = _rng(seed, _TAG_EFFICIENCY, 0)
    mask = rng.random(len(stream)) < keep_prob
    return TimestampStream(stream.timestamps[mask], stream.duration_ps, stream.origin)


def _censor_sorted(ts: np.ndarray, dead_time_ps: int) -> np.ndarray:
    """Greedy dead-time censoring of sorted int64 ps timestamps.

    Accepts an event iff it is at least max(dead_time, 1) ps after the last
    accepted one, so the output is strictly increasing even at zero dead
    time. Rejection chains cannot cross a gap >= dead time, so only runs of
    close gaps need the sequential scan.
    """
    if ts.size < 2:
        return ts
    min_gap = max(int(dead_time_ps), 1)
    close = np.diff(ts) < min_gap
    if not close.any():
        return ts
    keep = np.ones(ts.size, dtype=bool)
    bad = np.flatnonzero(close)
    run_start = bad[np.concatenate(([True], np.diff(bad) > 1))]
    run_end = bad[np.concatenate((np.diff(bad) > 1, [True]))]
    for s, e in zip(run_start, run_end):
        last = ts[s]  # first event of a run is always clear of its past
        for j in range(s + 1, e + 2):
            if ts[j] - last >= min_gap:
                last = ts[j]
            else:
                keep[j] = False
    return ts[keep]


def censor_dead_time(stream: TimestampStream, dead_time_ps: int) -> TimestampStream:
    """Drop events closer than dead_time_ps to the previous accepted event."""
    ts = _censor_sorted(stream.timestamps, dead_time_ps)
    return TimestampStream(ts, stream.duration_ps, stream.origin)


def _optical_times_ns(params, flux, detector, duration_ps, seed) -> np.ndarray:
    """Signal plus background arrivals reaching the detection stage, ns
    floats, after efficiency thinning; unsorted."""
    if duration_ps < 0:
        raise ValueError("duration_ps must be >= 0")
    rates = calibrate_rates(params)
    lam = flux.lambda_per_emitter
    achievable = rates.radiative_flux
    if lam > achievable:
        raise InfeasibleRatesError(
            f"target per-emitter flux {lam} ns^-1 exceeds the radiative flux "
            f"{achievable:.6g} ns^-1 of the calibrated emitter"
        )
    duration_ns = duration_ps / 1000.0
    keep = lam / achievable
    parts = [
        _emission_times_ns(rates, keep, duration_ns, _rng(seed, _TAG_EMITTER, i))
        for i in range(params.n_emitters)
    ]
    signal_rate = params.n_emitters * lam  # ns^-1, detected
    bg_rate = signal_rate * (1.0 - params.rho) / params.rho
    parts.append(_poisson_times_ns(bg_rate, duration_ns, _rng(seed, _TAG_BACKGROUND)))
    optical = np.concatenate(parts)
    if detector.efficiency < 1.0:
        mask = _rng(seed, _TAG_EFFICIENCY).random(optical.size) < detector.efficiency
        optical = optical[mask]
    return optical


def _detect(
    optical_ns: np.ndarray,
    detector: DetectorModel,
    duration_ps: int,
    seed: int,
    channel: int = 0,
) -> np.ndarray:
    """One detector channel: dark counts, jitter, quantisation, dead time."""
    duration_ns = duration_ps / 1000.0
    dark = _poisson_times_ns(
        detector.dark_rate_per_s * 1e-9, duration_ns, _rng(seed, _TAG_DARK, channel)
    )
    times = np.concatenate((optical_ns, dark))
    if detector.jitter_fwhm_ps > 0.0:
        sigma_ns = detector.jitter_fwhm_ps * _JITTER_SIGMA_PER_FWHM / 1000.0
        times = times + _rng(seed, _TAG_JITTER, channel).normal(0.0, sigma_ns, times.size)
    ps = np.floor(times * (1000.0 / RESOLUTION_PS)).astype(np.int64) * RESOLUTION_PS
    ps = ps[(ps >= 0) & (ps <= duration_ps)]
    ps.sort()
    return _censor_sorted(ps, detector.dead_time_ps)


def simulate_region(
    params: EmitterParams,
    flux,
    detector: DetectorModel,
    duration_ps: int,
    seed: int,
) -> TimestampStream:
    """Full detected stream for a region of N emitters plus background.

    Per-emitter emission streams (independent generators derived from the
    master seed) are thinned so each contributes a mean detected flux of
    flux.lambda_per_emitter; an uncorrelated background at rate
    N*lambda*(1-rho)/rho makes the signal fraction equal rho; dark counts add
    on top. The detector chain then applies efficiency thinning, jitter,
    25 ps quantisation, sorting and dead-time censoring, in that order.
    """
    optical = _optical_times_ns(params, flux, detector, duration_ps, seed)
    ps = _detect(optical, detector, duration_ps, seed)
    return TimestampStream(ps, duration_ps, "merged")


def simulate_hbt_pair(
    params: EmitterParams,
    flux,
    detector: DetectorModel,
    duration_ps: int,
    seed: int,
) -> tuple[TimestampStream, TimestampStream]:
    """Two-detector coincidence arrangement: splitter first, then detectors.

    The optical stream is routed through a fair beamsplitter and each output
    feeds its own detector (independent dark counts, jitter and dead time).
    Photons separated by less than one detector's dead time or resolution
    survive as cross pairs here, which is what makes the zero-delay dip
    measurable at all.
    """
    optical = _optical_times_ns(params, flux, detector, duration_ps, seed)
    to_first = _rng(seed, _TAG_SPLITTER).random(optical.size) < 0.5
    arms = []
    for channel, sel in enumerate((to_first, ~to_first)):
        ps = _detect(optical[sel], detector, duration_ps, seed, channel=channel)
        arms.append(TimestampStream(ps, duration_ps, "merged"))
    return arms[0], arms[1]
