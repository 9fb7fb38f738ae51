"""Time-of-arrival bit extraction from detected-photon timestamp streams.

Each timestamp is reduced modulo the reference period T and assigned the
index of the half-open bin [i*tau, (i+1)*tau) containing it; the first
arrival in each period yields one symbol of log2(M) bits. Symbols pack
MSB-first into bytes, which is the identity map at the default M = 256.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entropy import BinningConfig
from .simulator import RESOLUTION_PS, TimestampStream

__all__ = ["ExtractionResult", "extract", "throughput"]


@dataclass(frozen=True)
class ExtractionResult:
    """Raw bytes plus the bookkeeping behind them.

    photons_used counts the arrivals actually encoded in `data`;
    photons_discarded_same_period counts later arrivals in an already-used
    period. With M < 256, up to 8/log2(M) - 1 trailing symbols that do not
    complete a byte are dropped and excluded from photons_used.
    """

    data: bytes
    photons_used: int
    photons_discarded_same_period: int
    elapsed_ps: int
    bits_per_symbol: int

    def __post_init__(self) -> None:
        if len(self.data) * 8 != self.photons_used * self.bits_per_symbol:
            raise ValueError("byte length inconsistent with symbol count")

    @property
    def bits_per_second(self) -> float:
        if self.elapsed_ps == 0:
            return 0.0
        return self.bits_per_symbol * self.photons_used / (self.elapsed_ps * 1e-12)


def extract(stream: TimestampStream, cfg: BinningConfig | None = None) -> ExtractionResult:
    """Convert a timestamp stream into random bytes.

    Period boundaries are anchored at t = 0, so shifting every timestamp by a
    whole number of periods leaves the output unchanged.
    """
    if cfg is None:
        cfg = BinningConfig()
    if cfg.bin_width_ps < RESOLUTION_PS:
        raise ValueError(
            f"bin width {cfg.bin_width_ps} ps is below the {RESOLUTION_PS} ps "
            "timestamp resolution"
        )
    ts = stream.timestamps
    period = ts // cfg.period_ps
    first = np.ones(ts.size, dtype=bool)
    first[1:] = period[1:] != period[:-1]
    symbols = (ts[first] % cfg.period_ps) // cfg.bin_width_ps
    discarded = int(ts.size - symbols.size)

    bits_per_symbol = cfg.bits_per_symbol
    if bits_per_symbol == 8:
        used = symbols.size
        data = symbols.astype(np.uint8).tobytes()
    else:
        # smallest symbol count filling whole bytes
        group = 8 // math.gcd(bits_per_symbol, 8)
        used = symbols.size - symbols.size % group
        shifts = np.arange(bits_per_symbol - 1, -1, -1)
        bits = ((symbols[:used, None] >> shifts) & 1).astype(np.uint8)
        data = np.packbits(bits.ravel()).tobytes()
    return ExtractionResult(
        data=data,
        photons_used=int(used),
        photons_discarded_same_period=discarded,
        elapsed_ps=stream.duration_ps,
        bits_per_symbol=bits_per_symbol,
    )


def throughput(result: ExtractionResult) -> float:
    """Random bit generation rate in bits per second."""
    if result.elapsed_ps <= 0:
        raise ValueError("elapsed_ps must be positive")
    return result.bits_per_symbol * result.photons_used / (result.elapsed_ps * 1e-12)
