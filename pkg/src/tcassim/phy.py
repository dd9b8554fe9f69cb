"""Baseband waveforms for the two Mode S channels.

Replies (downlink) use pulse-position modulation: a fixed 16-chip preamble
followed by one chip pair per bit, energy in the first chip meaning 1 and in
the second meaning 0.  A reply chip is half a symbol, 500 ns, so a bit
occupies 1 us.

Interrogations (uplink) use differential BPSK at 250 ns per chip: a two-pulse
suppression pair that silences older transponder modes, a 7-chip sync
preamble whose single phase reversal sits between preamble chips 5 and 6,
the differentially encoded payload, and a 2-chip zero pad.

``samples_per_symbol`` (sps) counts samples per chip; all waveforms are
generated and consumed at sps in {1, 2, 4, 8}.  Detection is normalized
correlation against the known preamble with a 0.75 decision threshold.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace

import numpy as np

PPM_PREAMBLE = np.array([1, 0, 1, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 0], dtype=np.float64)
PPM_CHIP_NS = 500  # half of the 1 us reply symbol

SUPPRESSION_PULSES = np.array([1, 0, 1, 0], dtype=np.float64)
SYNC_PREAMBLE_BITS = (0, 0, 0, 0, 0, 1, 0)  # one reversal, between chips 5 and 6
DBPSK_CHIP_NS = 250

DETECTION_THRESHOLD = 0.75
MAX_PAYLOAD_BITS = 112
MIN_PAYLOAD_BITS = 56

# The demodulation window the receiver budgets after the first payload chip.
DBPSK_SLICE_CHIPS = 120


class PhyError(ValueError):
    """Insufficient samples, bad sps, or malformed sample-block file."""


@dataclass(frozen=True)
class SampleBlock:
    """A contiguous run of baseband samples.

    ``start_timestamp_ns`` is the instant of the first sample; real vectors
    for the pulse modem, complex for the phase modem.
    """

    samples: np.ndarray
    samples_per_symbol: int
    start_timestamp_ns: int = 0

    def __post_init__(self) -> None:
        if self.samples_per_symbol not in (1, 2, 4, 8):
            raise PhyError(f"sps must be one of 1,2,4,8, got {self.samples_per_symbol}")


@dataclass(frozen=True)
class FrameDetection:
    offset: int
    timestamp_ns: int
    score: float


def _as_bit_array(bits) -> np.ndarray:
    arr = np.asarray(bits, dtype=np.int64).ravel()
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise PhyError("bits must be 0 or 1")
    return arr


def ppm_modulate(bits, sps: int = 1, start_timestamp_ns: int = 0) -> SampleBlock:
    """Preamble plus one (1,0)/(0,1) chip pair per bit; amplitudes in {0,1}."""
    arr = _as_bit_array(bits)
    chips = np.empty(2 * arr.size, dtype=np.float64)
    chips[0::2] = arr
    chips[1::2] = 1 - arr
    wave = np.concatenate([PPM_PREAMBLE, chips])
    return SampleBlock(np.repeat(wave, sps), sps, start_timestamp_ns)


def ppm_demodulate(block: SampleBlock, offset: int, nbits: int) -> np.ndarray:
    """Chip-energy comparison per bit starting after the preamble at offset.

    A tie between the two chip energies decodes as 0.
    """
    sps = block.samples_per_symbol
    start = offset + PPM_PREAMBLE.size * sps
    need = start + nbits * 2 * sps
    if offset < 0 or need > block.samples.size:
        raise PhyError(f"stream too short for {nbits} bits at offset {offset}")
    seg = np.abs(block.samples[start:need]) ** 2
    energies = seg.reshape(nbits, 2, sps).sum(axis=2)
    return (energies[:, 0] > energies[:, 1]).astype(np.uint8)


def _normalized_correlation(x: np.ndarray, template: np.ndarray) -> np.ndarray:
    n = template.size
    if x.size < n:
        return np.zeros(0)
    dot = np.correlate(x, np.conj(template), mode="valid")
    energy = np.concatenate([[0.0], np.cumsum(np.abs(x) ** 2)])
    win = energy[n:] - energy[:-n]
    norm = np.sqrt(win) * np.linalg.norm(template)
    out = np.zeros(dot.size)
    nonzero = norm > 0
    out[nonzero] = np.abs(dot[nonzero]) / norm[nonzero]
    return out


def _detect(block: SampleBlock, template: np.ndarray, min_tail: int, max_tail: int,
            chip_ns: int, threshold: float) -> list[FrameDetection]:
    """Threshold the normalized correlation, then keep the strongest peaks.

    Candidates without room for a minimum-length frame behind the preamble
    are discarded.  A kept detection shadows one maximum frame extent in
    both directions (strongest first, earliest on ties): a preamble cannot
    start inside a frame already being received, which also suppresses the
    preamble's partial self-similarity at a frame's tail.
    """
    sps = block.samples_per_symbol
    corr = _normalized_correlation(block.samples, template)
    room = block.samples.size - template.size - min_tail
    candidates = [k for k in np.flatnonzero(corr >= threshold) if k <= room]
    candidates.sort(key=lambda k: (-corr[k], k))
    shadow = template.size + max_tail
    kept: list[int] = []
    for k in candidates:
        if all(abs(k - j) >= shadow for j in kept):
            kept.append(k)
    kept.sort()
    period = chip_ns / sps
    return [FrameDetection(int(k), block.start_timestamp_ns + round(int(k) * period), float(corr[k]))
            for k in kept]


def ppm_frame_detect(block: SampleBlock, threshold: float = DETECTION_THRESHOLD) -> list[FrameDetection]:
    sps = block.samples_per_symbol
    template = np.repeat(PPM_PREAMBLE, sps)
    return _detect(block, template, MIN_PAYLOAD_BITS * 2 * sps, MAX_PAYLOAD_BITS * 2 * sps,
                   PPM_CHIP_NS, threshold)


def _dbpsk_chips(bits: np.ndarray) -> np.ndarray:
    """Differentially encode sync + payload + zero pad into +-1 chips."""
    stream = np.concatenate([np.array(SYNC_PREAMBLE_BITS, dtype=np.int64), bits, [0, 0]])
    phase = np.cumsum(stream) % 2
    return np.where(phase == 0, 1.0, -1.0).astype(np.complex128)


def _dbpsk_preamble_template(sps: int) -> np.ndarray:
    sync = _dbpsk_chips(np.zeros(0, dtype=np.int64))[: len(SYNC_PREAMBLE_BITS)]
    wave = np.concatenate([SUPPRESSION_PULSES.astype(np.complex128), sync])
    return np.repeat(wave, sps)


def dbpsk_modulate(bits, sps: int = 1, start_timestamp_ns: int = 0) -> SampleBlock:
    """Suppression pair, then DBPSK of (sync preamble, payload, 2-chip pad)."""
    arr = _as_bit_array(bits)
    wave = np.concatenate([SUPPRESSION_PULSES.astype(np.complex128), _dbpsk_chips(arr)])
    return SampleBlock(np.repeat(wave, sps), sps, start_timestamp_ns)


def dbpsk_frame_detect(block: SampleBlock, threshold: float = DETECTION_THRESHOLD) -> list[FrameDetection]:
    sps = block.samples_per_symbol
    template = _dbpsk_preamble_template(sps)
    return _detect(block, template, (MIN_PAYLOAD_BITS + 2) * sps, (MAX_PAYLOAD_BITS + 2) * sps,
                   DBPSK_CHIP_NS, threshold)


def sync_offset_of(detection_offset: int, sps: int) -> int:
    """Index of the first chip after the sync phase reversal, given the
    frame-start offset a detector reports."""
    return detection_offset + (SUPPRESSION_PULSES.size + 5) * sps


def dbpsk_demodulate(block: SampleBlock, sync_offset: int) -> np.ndarray:
    """Differentially decode up to 112 bits following the sync reversal.

    ``sync_offset`` points at the first chip after the phase reversal; the
    payload begins two chips later and the receiver budgets a fixed
    120-chip slice from there, so short frames simply yield their 56 bits
    (plus pad) and the caller truncates using the decoded format code.
    Constant phase rotation of the whole stream cancels in the chip-pair
    products, so decoding is rotation invariant.
    """
    sps = block.samples_per_symbol
    p0 = sync_offset + 2 * sps
    if sync_offset < sps or p0 > block.samples.size:
        raise PhyError("sync offset leaves no room for a payload")
    x = block.samples
    n_avail = (min(x.size - p0, DBPSK_SLICE_CHIPS * sps)) // sps
    n = min(MAX_PAYLOAD_BITS, n_avail)
    if n < MIN_PAYLOAD_BITS:
        raise PhyError(f"stream truncated: only {n} symbols after the sync reversal")
    seg = x[p0 - sps: p0 + n * sps]
    sym = seg.reshape(n + 1, sps).mean(axis=1)
    diff = sym[1:] * np.conj(sym[:-1])
    return (diff.real < 0).astype(np.uint8)


def awgn(block: SampleBlock, snr_db: float, seed) -> SampleBlock:
    """Add zero-mean Gaussian noise with power 10^(-snr/10) (unit signal).

    ``snr_db = inf`` is the no-noise sentinel and returns the block
    unchanged.  Complex blocks get circular noise, half the power per
    quadrature.  Deterministic for a given seed.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return replace(block, samples=block.samples.copy())
    power = 10.0 ** (-snr_db / 10.0)
    rng = np.random.default_rng(seed)
    x = block.samples
    if np.iscomplexobj(x):
        sigma = math.sqrt(power / 2.0)
        noise = rng.normal(0.0, sigma, x.size) + 1j * rng.normal(0.0, sigma, x.size)
    else:
        noise = rng.normal(0.0, math.sqrt(power), x.size)
    return replace(block, samples=x + noise)


def packet_loss(sent: int, received_valid: int) -> float:
    """Fraction of sent frames that never produced a parity-clean reception."""
    if sent <= 0:
        raise PhyError("loss needs at least one sent frame")
    if not 0 <= received_valid <= sent:
        raise PhyError("received count outside [0, sent]")
    return (sent - received_valid) / sent


_MAGIC_REAL = b"SBR1"
_MAGIC_COMPLEX = b"SBC1"


def sample_block_to_bytes(block: SampleBlock) -> bytes:
    """16-byte header (magic, sps, count) then 32-bit little-endian floats.

    Complex samples interleave I and Q.  The start timestamp is transport
    metadata and is not persisted.
    """
    x = block.samples
    if np.iscomplexobj(x):
        magic = _MAGIC_COMPLEX
        flat = np.empty(2 * x.size, dtype="<f4")
        flat[0::2] = x.real
        flat[1::2] = x.imag
    else:
        magic = _MAGIC_REAL
        flat = np.asarray(x, dtype="<f4")
    header = struct.pack("<4sIQ", magic, block.samples_per_symbol, x.size)
    return header + flat.tobytes()


def sample_block_from_bytes(raw: bytes) -> SampleBlock:
    if len(raw) < 16:
        raise PhyError("sample block shorter than its 16-byte header")
    magic, sps, count = struct.unpack("<4sIQ", raw[:16])
    if magic not in (_MAGIC_REAL, _MAGIC_COMPLEX):
        raise PhyError(f"bad magic {magic!r}")
    n_floats = count * (2 if magic == _MAGIC_COMPLEX else 1)
    body = np.frombuffer(raw[16:], dtype="<f4")
    if body.size != n_floats:
        raise PhyError(f"expected {n_floats} floats, found {body.size}")
    if magic == _MAGIC_COMPLEX:
        samples = body[0::2].astype(np.float64) + 1j * body[1::2].astype(np.float64)
    else:
        samples = body.astype(np.float64)
    return SampleBlock(samples, sps, 0)


def write_sample_block(path, block: SampleBlock) -> None:
    with open(path, "wb") as fh:
        fh.write(sample_block_to_bytes(block))


def read_sample_block(path) -> SampleBlock:
    with open(path, "rb") as fh:
        return sample_block_from_bytes(fh.read())
