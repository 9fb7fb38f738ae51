"""Stable on-disk formats: timestamp streams, bit files and histograms.

Timestamp files carry a 16-byte header (8-byte ASCII magic plus an unsigned
little-endian record count) followed by one unsigned 64-bit little-endian
picosecond value per record, strictly increasing. Bit files are raw bytes
with a plain-text key=value sidecar so external test suites can consume them
directly. Histograms and configs are line-oriented text.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .estimator import G2Histogram
from .simulator import TimestampStream

__all__ = [
    "MAGIC",
    "write_timestamps",
    "read_timestamps",
    "write_bits",
    "read_sidecar",
    "sidecar_path",
    "write_histogram",
    "read_histogram",
    "parse_config",
    "config_hash",
]

MAGIC = b"NVQTS001"
_HEADER = struct.Struct("<8sQ")


def write_timestamps(path, stream: TimestampStream) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, len(stream)))
        fh.write(stream.timestamps.astype("<u8").tobytes())


def read_timestamps(path, duration_ps: int | None = None) -> TimestampStream:
    """Read a timestamp file.

    The format does not record the acquisition duration; unless one is given,
    the last timestamp is used, which is accurate to one mean inter-arrival
    gap for rate bookkeeping.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    body = raw[_HEADER.size :]
    if len(body) != 8 * count:
        raise ValueError(
            f"{path}: header promises {count} records, body has {len(body)} bytes"
        )
    ts = np.frombuffer(body, dtype="<u8").astype(np.int64)
    if duration_ps is None:
        duration_ps = int(ts[-1]) if ts.size else 0
    return TimestampStream(ts, duration_ps)


def sidecar_path(bits_path) -> Path:
    return Path(str(bits_path) + ".meta")


def write_bits(path, data: bytes, meta: dict) -> None:
    """Write raw bytes plus a key=value sidecar (<path>.meta)."""
    Path(path).write_bytes(data)
    lines = [f"{k}={meta[k]}" for k in sorted(meta)]
    sidecar_path(path).write_text("\n".join(lines) + "\n")


def read_sidecar(bits_path) -> dict:
    return parse_config(sidecar_path(bits_path))


def write_histogram(path, hist: G2Histogram) -> None:
    """Delimited text: one `tau_ns g2 raw_count` row per window, normalisation
    inputs in '#'-prefixed header lines."""
    with open(path, "w") as fh:
        fh.write(f"# window_ns={hist.window_ns!r}\n")
        fh.write(f"# total_time_s={hist.total_time_s!r}\n")
        fh.write(f"# counts_det0={hist.counts_det0}\n")
        fh.write(f"# counts_det1={hist.counts_det1}\n")
        for tau, g2, c in zip(hist.tau_centers_ns, hist.g2, hist.raw_coincidences):
            fh.write(f"{float(tau)!r}\t{float(g2)!r}\t{int(c)}\n")


def read_histogram(path) -> G2Histogram:
    meta = {}
    taus, g2s, counts = [], [], []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
            continue
        tau, g2, c = line.split("\t")
        taus.append(float(tau))
        g2s.append(float(g2))
        counts.append(int(c))
    try:
        return G2Histogram(
            tau_centers_ns=np.array(taus),
            g2=np.array(g2s),
            raw_coincidences=np.array(counts, dtype=np.int64),
            window_ns=float(meta["window_ns"]),
            total_time_s=float(meta["total_time_s"]),
            counts_det0=int(meta["counts_det0"]),
            counts_det1=int(meta["counts_det1"]),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing histogram header field {exc}") from exc


def parse_config(path) -> dict:
    """Flat key=value file; '#' starts a comment, blank lines ignored."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        if not sep or not key.strip():
            raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
        out[key.strip()] = value.strip()
    return out


def config_hash(mapping: dict) -> str:
    """sha256 over the canonical key=value rendering of a config."""
    text = "\n".join(f"{k}={mapping[k]}" for k in sorted(mapping))
    return hashlib.sha256(text.encode()).hexdigest()
