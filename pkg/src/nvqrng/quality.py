"""Statistical scoring of extracted byte samples.

Implements the five classic whole-file statistics (entropy per byte, chi-square
against the uniform byte distribution, arithmetic mean, Monte Carlo pi and the
serial correlation of consecutive bytes) plus bit-level relative frequencies
and lagged Pearson coefficients. All statistics are single passes over the
data with exact integer accumulators where that matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

__all__ = [
    "EntReport",
    "LagCorrelations",
    "relative_frequency",
    "pearson_lag",
    "ent_report",
    "chi2_percentile",
    "unpack_bits",
]

_PI_GROUP = 6
_PI_RADIUS_SQ = (2**24 - 1) ** 2  # in-circle test on 24-bit coordinate pairs
_POPCOUNT = np.array([bin(v).count("1") for v in range(256)], dtype=np.int64)


def _as_bytes(data) -> np.ndarray:
    """Accept bytes-like or a uint8 array of byte values."""
    if isinstance(data, np.ndarray):
        if data.dtype != np.uint8:
            raise TypeError("byte arrays must have dtype uint8")
        return data
    return np.frombuffer(bytes(data), dtype=np.uint8)


def unpack_bits(data) -> np.ndarray:
    """MSB-first bit expansion of a byte sample (matches the packing order
    used by the extractor)."""
    return np.unpackbits(_as_bytes(data))


@dataclass(frozen=True)
class LagCorrelations:
    """Pearson coefficient of the bit sequence against delayed copies."""

    lags: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        for name in ("lags", "coefficients"):
            arr = np.asarray(getattr(self, name))
            object.__setattr__(self, name, arr)
            arr.setflags(write=False)
        if np.any(np.abs(self.coefficients) > 1.0 + 1e-12):
            raise ValueError("correlation coefficients must lie in [-1, 1]")

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coefficients)))


@dataclass(frozen=True)
class EntReport:
    """Whole-file byte statistics with their comparison context.

    degenerate flags a zero-variance input, for which the serial correlation
    is reported as 1.0 by convention.
    """

    entropy_per_byte: float
    chi2_statistic: float
    chi2_percentile: float
    arithmetic_mean: float
    monte_carlo_pi: float
    serial_correlation: float
    n_bytes: int
    degenerate: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.entropy_per_byte <= 8.0 + 1e-12:
            raise ValueError("entropy per byte must be in [0, 8]")
        if not 0.0 <= self.chi2_percentile <= 100.0:
            raise ValueError("chi-square percentile must be in [0, 100]")
        if not 0.0 <= self.arithmetic_mean <= 255.0:
            raise ValueError("arithmetic mean must be in [0, 255]")


def relative_frequency(data) -> tuple[float, float]:
    """Relative frequency (f0, f1) of zero and one bits in a byte sample."""
    b = _as_bytes(data)
    if b.size == 0:
        raise ValueError("sample must be non-empty")
    ones = int(np.bincount(b, minlength=256) @ _POPCOUNT)
    f1 = ones / (8 * b.size)
    return 1.0 - f1, f1


def _pearson_bits(x: np.ndarray, y: np.ndarray) -> float:
    """Exact Pearson coefficient of two equal-length 0/1 arrays."""
    n = int(x.size)
    sx = int(np.count_nonzero(x))
    sy = int(np.count_nonzero(y))
    sxy = int(np.count_nonzero(x & y))
    var_x = n * sx - sx * sx
    var_y = n * sy - sy * sy
    if var_x == 0 or var_y == 0:
        return 1.0
    return (n * sxy - sx * sy) / math.sqrt(var_x) / math.sqrt(var_y)


def pearson_lag(data, max_lag: int) -> LagCorrelations:
    """Pearson coefficients of the bit sequence at delays 1..max_lag."""
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    bits = unpack_bits(data)
    if bits.size <= max_lag:
        raise ValueError(
            f"need more than {max_lag} bits, got {bits.size}"
        )
    lags = np.arange(1, max_lag + 1)
    coeffs = np.array([_pearson_bits(bits[:-d], bits[d:]) for d in lags])
    return LagCorrelations(lags=lags, coefficients=coeffs)


def chi2_percentile(statistic: float, dof: int) -> float:
    """Percentile of the chi-square distribution at the given statistic.

    Regularised lower incomplete gamma, as a percentage in [0, 100].
    """
    if statistic < 0:
        raise ValueError("statistic must be >= 0")
    if dof < 1:
        raise ValueError("dof must be >= 1")
    return 100.0 * float(gammainc(dof / 2.0, statistic / 2.0))


def _monte_carlo_pi(b: np.ndarray) -> float:
    groups = b.size // _PI_GROUP
    m = b[: groups * _PI_GROUP].reshape(groups, _PI_GROUP).astype(np.uint64)
    x = (m[:, 0] << 16) | (m[:, 1] << 8) | m[:, 2]
    y = (m[:, 3] << 16) | (m[:, 4] << 8) | m[:, 5]
    inside = int(np.count_nonzero(x * x + y * y <= _PI_RADIUS_SQ))
    return 4.0 * inside / groups


def ent_report(data) -> EntReport:
    """Compute the five whole-file statistics for a byte sample."""
    b = _as_bytes(data)
    if b.size < _PI_GROUP:
        raise ValueError(
            f"need at least {_PI_GROUP} bytes for the pi estimator, got {b.size}"
        )
    n = int(b.size)
    counts = np.bincount(b, minlength=256)
    freq = counts[counts > 0] / n
    entropy = float(-np.sum(freq * np.log2(freq)))
    expected = n / 256.0
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    mean = float(counts @ np.arange(256)) / n

    x = b[:-1].astype(np.int64)
    y = b[1:].astype(np.int64)
    m = n - 1
    sx, sy = int(x.sum()), int(y.sum())
    sxy = int(x @ y)
    var_x = m * int(x @ x) - sx * sx
    var_y = m * int(y @ y) - sy * sy
    degenerate = var_x == 0 or var_y == 0
    if degenerate:
        serial = 1.0
    else:
        serial = (m * sxy - sx * sy) / math.sqrt(var_x) / math.sqrt(var_y)

    return EntReport(
        entropy_per_byte=entropy,
        chi2_statistic=chi2,
        chi2_percentile=chi2_percentile(chi2, 255),
        arithmetic_mean=mean,
        monte_carlo_pi=_monte_carlo_pi(b),
        serial_correlation=serial,
        n_bytes=n,
        degenerate=degenerate,
    )
