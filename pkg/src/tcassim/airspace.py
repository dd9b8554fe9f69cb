"""Discrete-event airspace: entities, radio fan-out, jamming, and the log.

Time is a 64-bit count of nanoseconds.  Every protocol timestamp refers to
the first preamble sample of a frame; propagation applies start-to-start,
so a receiver's reception instant is the transmit instant plus the
straight-line flight time of light over the 3-D separation.

Event ordering is total and deterministic: events sort by time, then by the
registration order of their source entity, then by a global sequence
number.  Replaying a scenario with the same seed reproduces the event log
byte for byte.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace
from typing import Protocol

import numpy as np
from numpy.random import SeedSequence

from . import modes_codec as codec
from . import phy

SPEED_OF_LIGHT_M_S = 299_792_458.0
METERS_PER_NMI = 1852.0
FEET_PER_NMI = METERS_PER_NMI / 0.3048
NS_PER_S = 1_000_000_000

RECEPTION_RANGE_NMI = 100.0
TURNAROUND_NS = 128_000  # fixed transponder decode-and-respond time

class SimError(ValueError):
    """Scenario or scheduling misuse (causality violation, bad state)."""


@dataclass(frozen=True)
class AircraftState:
    """Kinematic truth for one airframe at some instant.

    Horizontal position in nautical miles on a flat grid, altitude in feet,
    ground velocity in knots, vertical rate in feet per minute.  Identity
    (address, equipment mode) lives on the entity, not the motion state.
    """

    x_nmi: float
    y_nmi: float
    altitude_ft: float
    vx_kt: float = 0.0
    vy_kt: float = 0.0
    vertical_rate_fpm: float = 0.0

    def __post_init__(self) -> None:
        for v in (self.x_nmi, self.y_nmi, self.altitude_ft,
                  self.vx_kt, self.vy_kt, self.vertical_rate_fpm):
            if not math.isfinite(v):
                raise SimError("aircraft state must be finite")


def step_kinematics(state: AircraftState, dt_s: float) -> AircraftState:
    """Advance a constant-velocity state by dt seconds."""
    return replace(
        state,
        x_nmi=state.x_nmi + state.vx_kt * dt_s / 3600.0,
        y_nmi=state.y_nmi + state.vy_kt * dt_s / 3600.0,
        altitude_ft=state.altitude_ft + state.vertical_rate_fpm * dt_s / 60.0,
    )


def distance_nmi(a: AircraftState, b: AircraftState) -> float:
    """3-D straight-line separation in nautical miles."""
    dz = (a.altitude_ft - b.altitude_ft) / FEET_PER_NMI
    return math.hypot(a.x_nmi - b.x_nmi, a.y_nmi - b.y_nmi, dz)


def horizontal_distance_nmi(a: AircraftState, b: AircraftState) -> float:
    return math.hypot(a.x_nmi - b.x_nmi, a.y_nmi - b.y_nmi)


def propagation_delay_ns(dist_nmi: float) -> int:
    """Light flight time over a separation, rounded to the nearest ns."""
    if dist_nmi < 0:
        raise SimError("negative distance")
    return round(dist_nmi * METERS_PER_NMI / SPEED_OF_LIGHT_M_S * NS_PER_S)


def frame_airtime_ns(frame: codec.ModeSFrame) -> int:
    """Duration of the modulated frame on the air at nominal chip rates."""
    if frame.direction == codec.DOWNLINK:
        chips = phy.PPM_PREAMBLE.size + 2 * frame.nbits
        return chips * phy.PPM_CHIP_NS
    chips = phy.SUPPRESSION_PULSES.size + len(phy.SYNC_PREAMBLE_BITS) + frame.nbits + 2
    return chips * phy.DBPSK_CHIP_NS


@dataclass(frozen=True)
class JamDirective:
    """Erase every transmission from ``target_icao`` whose airtime overlaps
    the window.  ``end_ns`` of None leaves the window open-ended."""

    target_icao: int
    start_ns: int
    end_ns: int | None = None

    def covers(self, t0_ns: int, t1_ns: int) -> bool:
        end = math.inf if self.end_ns is None else self.end_ns
        return t0_ns < end and t1_ns >= self.start_ns


@dataclass(frozen=True)
class LogRecord:
    """One line of the event log.

    Fields never contain commas; ``frame_hex`` is "-" for non-frame events.
    """

    time_ns: int
    kind: str
    source: str
    destination: str
    frame_hex: str
    outcome: str

    def to_line(self) -> str:
        line = f"{self.time_ns},{self.kind},{self.source},{self.destination},{self.frame_hex},{self.outcome}"
        if line.count(",") != 5:
            raise SimError(f"log fields must not contain commas: {line!r}")
        return line

    @classmethod
    def from_line(cls, line: str) -> "LogRecord":
        parts = line.rstrip("\n").split(",")
        if len(parts) != 6:
            raise SimError(f"malformed log line: {line!r}")
        return cls(int(parts[0]), parts[1], parts[2], parts[3], parts[4], parts[5])


def write_event_log(path, records: list[LogRecord]) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for rec in records:
            fh.write(rec.to_line() + "\n")


def read_event_log(path) -> list[LogRecord]:
    with open(path, "r", encoding="ascii") as fh:
        return [LogRecord.from_line(line) for line in fh if line.strip()]


class Entity(Protocol):
    """Anything that lives on the event fabric."""

    name: str
    icao: int | None

    def state_at(self, time_ns: int) -> AircraftState: ...

    def on_frame(self, world: "World", frame: codec.ModeSFrame,
                 rx_time_ns: int, tx_time_ns: int) -> str: ...

    def on_timer(self, world: "World", timer: str, data: dict) -> None: ...


@dataclass
class SimEvent:
    time_ns: int
    kind: str  # transmit | deliver | timer
    source: str
    payload: dict


class _Channel:
    def receive(self, world: "World", frame: codec.ModeSFrame,
                deliver_time_ns: int) -> tuple[codec.ModeSFrame | None, int, str]:
        raise NotImplementedError


class NoiselessChannel(_Channel):
    """Ideal medium: frames arrive intact at the exact propagation instant."""

    def receive(self, world, frame, deliver_time_ns):
        return frame, deliver_time_ns, "ok"


class AwgnChannel(_Channel):
    """Runs each reception through the full modem chain with fresh noise.

    The waveform is modulated from the frame bits, noise is drawn from a
    per-reception seed, the receiver correlates for the preamble,
    demodulates, and truncates to the header-decoded length.  Detection or
    header failure drops the reception; bit errors surface later as parity
    failures at the consumer.
    """

    LEAD_PAD = 16  # silent samples around the frame so detection is honest

    def __init__(self, snr_db: float, sps: int = 1):
        self.snr_db = snr_db
        self.sps = sps

    def receive(self, world, frame, deliver_time_ns):
        sps = self.sps
        seed = SeedSequence([world.seed, world.next_noise_index()])
        if frame.direction == codec.DOWNLINK:
            clean = phy.ppm_modulate(frame.bits(), sps)
            period = phy.PPM_CHIP_NS / sps
            pad = np.zeros(self.LEAD_PAD * sps)
            samples = np.concatenate([pad, clean.samples, pad])
            block = phy.SampleBlock(samples, sps,
                                    deliver_time_ns - round(self.LEAD_PAD * sps * period))
            noisy = phy.awgn(block, self.snr_db, seed)
            detections = phy.ppm_frame_detect(noisy)
        else:
            clean = phy.dbpsk_modulate(frame.bits(), sps)
            period = phy.DBPSK_CHIP_NS / sps
            pad = np.zeros(self.LEAD_PAD * sps, dtype=complex)
            samples = np.concatenate([pad, clean.samples, pad])
            block = phy.SampleBlock(samples, sps,
                                    deliver_time_ns - round(self.LEAD_PAD * sps * period))
            noisy = phy.awgn(block, self.snr_db, seed)
            detections = phy.dbpsk_frame_detect(noisy)

        for det in detections:
            try:
                if frame.direction == codec.DOWNLINK:
                    bits = None
                    for nbits in (codec.LONG_FRAME_BITS, codec.SHORT_FRAME_BITS):
                        try:
                            cand = phy.ppm_demodulate(noisy, det.offset, nbits)
                        except phy.PhyError:
                            continue
                        need = _header_length(cand, frame.direction)
                        if need == nbits:
                            bits = cand
                            break
                    if bits is None:
                        continue
                else:
                    raw = phy.dbpsk_demodulate(noisy, phy.sync_offset_of(det.offset, sps))
                    need = _header_length(raw, frame.direction)
                    if need is None or raw.size < need:
                        continue
                    bits = raw[:need]
            except phy.PhyError:
                continue
            rx_frame = codec.ModeSFrame.from_bits(bits.tolist(), frame.direction)
            return rx_frame, det.timestamp_ns, "ok"
        return None, deliver_time_ns, "phy_drop"


def _header_length(bits: np.ndarray, direction: str) -> int | None:
    if bits.size < 5:
        return None
    code = 0
    for b in bits[:5]:
        code = (code << 1) | int(b)
    return codec.frame_bit_length(direction, code)


class World:
    """Event queue, radio medium, jam bookkeeping, and the append-only log."""

    def __init__(self, channel: _Channel | None = None, seed: int = 0):
        self.channel = channel or NoiselessChannel()
        self.seed = seed
        self.time_ns = 0
        self.entities: list[Entity] = []
        self._order: dict[str, int] = {}
        self.jam_directives: list[JamDirective] = []
        self.log: list[LogRecord] = []
        self._heap: list[tuple[int, int, int, SimEvent]] = []
        self._seq = 0
        self._noise_index = 0
        self._segments: dict[str, list[tuple[int, AircraftState]]] = {}

    # -- registration and kinematic truth ---------------------------------

    def add_entity(self, entity: Entity) -> None:
        if entity.name in self._order:
            raise SimError(f"duplicate entity name {entity.name!r}")
        self._order[entity.name] = len(self.entities)
        self.entities.append(entity)
        self._segments[entity.name] = [(self.time_ns, entity.state_at(self.time_ns))]

    def add_jam(self, directive: JamDirective) -> None:
        self.jam_directives.append(directive)

    def note_motion_change(self, entity: Entity) -> None:
        """Entities call this whenever their velocity vector changes."""
        self._segments[entity.name].append((self.time_ns, entity.state_at(self.time_ns)))

    def trajectory_segments(self, name: str) -> list[tuple[int, AircraftState]]:
        return list(self._segments[name])

    def next_noise_index(self) -> int:
        self._noise_index += 1
        return self._noise_index

    # -- scheduling --------------------------------------------------------

    def _push(self, event: SimEvent) -> None:
        if event.time_ns < self.time_ns:
            raise SimError(
                f"causality violation: event at {event.time_ns} scheduled at {self.time_ns}")
        self._seq += 1
        order = self._order.get(event.source, len(self.entities))
        heapq.heappush(self._heap, (event.time_ns, order, self._seq, event))

    def schedule_timer(self, time_ns: int, entity: Entity, timer: str,
                       data: dict | None = None) -> None:
        self._push(SimEvent(time_ns, "timer", entity.name, {"timer": timer, "data": data or {}}))

    def schedule_transmit(self, time_ns: int, entity: Entity, frame: codec.ModeSFrame,
                          destination: str = "*") -> None:
        self._push(SimEvent(time_ns, "transmit", entity.name,
                            {"frame": frame, "destination": destination}))

    # -- logging -----------------------------------------------------------

    def record(self, kind: str, source: str, destination: str,
               frame: codec.ModeSFrame | None, outcome: str) -> None:
        self.log.append(LogRecord(self.time_ns, kind, source, destination,
                                  frame.to_hex() if frame is not None else "-", outcome))

    # -- event processing --------------------------------------------------

    def run_until(self, t_end_ns: int) -> None:
        while self._heap and self._heap[0][0] <= t_end_ns:
            _, _, _, event = heapq.heappop(self._heap)
            self.time_ns = event.time_ns
            if event.kind == "timer":
                entity = self.entities[self._order[event.source]]
                self.record("timer", event.source, "-", None, event.payload["timer"])
                entity.on_timer(self, event.payload["timer"], event.payload["data"])
            elif event.kind == "transmit":
                self._do_transmit(event)
            elif event.kind == "deliver":
                self._do_deliver(event)
            else:
                raise SimError(f"unknown event kind {event.kind!r}")
        self.time_ns = max(self.time_ns, t_end_ns)

    def _jammed(self, source: Entity, t0_ns: int, t1_ns: int) -> bool:
        if source.icao is None:
            return False
        return any(d.target_icao == source.icao and d.covers(t0_ns, t1_ns)
                   for d in self.jam_directives)

    def _do_transmit(self, event: SimEvent) -> None:
        source = self.entities[self._order[event.source]]
        frame: codec.ModeSFrame = event.payload["frame"]
        destination = event.payload["destination"]
        t_tx = event.time_ns
        if self._jammed(source, t_tx, t_tx + frame_airtime_ns(frame)):
            self.record("transmit", source.name, destination, frame, "jammed")
            return
        self.record("transmit", source.name, destination, frame, "sent")
        src_state = source.state_at(t_tx)
        for receiver in self.entities:
            if receiver is source:
                continue
            dist = distance_nmi(src_state, receiver.state_at(t_tx))
            if dist > RECEPTION_RANGE_NMI:
                continue
            self._push(SimEvent(t_tx + propagation_delay_ns(dist), "deliver", source.name,
                                {"frame": frame, "receiver": receiver.name, "tx_time_ns": t_tx}))

    def _do_deliver(self, event: SimEvent) -> None:
        receiver = self.entities[self._order[event.payload["receiver"]]]
        frame: codec.ModeSFrame = event.payload["frame"]
        rx_frame, rx_time, channel_outcome = self.channel.receive(self, frame, event.time_ns)
        if rx_frame is None:
            self.record("deliver", event.source, receiver.name, frame, channel_outcome)
            return
        disposition = receiver.on_frame(self, rx_frame, rx_time, event.payload["tx_time_ns"])
        self.record("deliver", event.source, receiver.name, rx_frame, disposition)
