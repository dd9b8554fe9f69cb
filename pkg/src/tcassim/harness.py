"""Scenario execution and measurement.

``simulate`` runs a validated scenario to completion, appends the
analytically computed near-midair windows to the event log, and distills a
metrics report.  The report is a pure function of the log plus the scenario
document, so anything the report claims can be re-derived from the two
artifacts alone; ``metrics_from_log`` is that function and ``simulate``
itself goes through it.

``loss_sweep`` characterizes the noisy channel separately: a fixed frame
corpus is pushed through the full modem chain at each SNR with the same
noise draws (paired sampling), so the loss column reflects the SNR change
rather than resampling luck.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import fta
from . import modes_codec as codec
from .airspace import (
    NS_PER_S,
    AircraftState,
    AwgnChannel,
    LogRecord,
    NoiselessChannel,
    World,
)
from .attacker import MISSION_PHANTOM, PHASES, PhantomPlan
from .scenario import Scenario, build_world
from .tcas import nmac_intervals

LOSS_OUTCOMES = ("phy_drop", "parity_drop")  # channel or parity killed it


# -- frame classification ---------------------------------------------------------

def frame_label(frame_hex: str, destination: str = "*") -> str:
    """Human label (UF4, DF11, ...) for a logged frame.

    Broadcast downlink formats are self-checking, so code 11 splits on the
    zero-overlay parity.  Codes 4 and 20 are direction-ambiguous from the
    bits alone; interrogations are logged with their addressed destination,
    which disambiguates transmit records.
    """
    try:
        frame = codec.ModeSFrame.from_hex(frame_hex, codec.DOWNLINK)
    except codec.CodecError:
        return "invalid"
    code = frame.format_code
    if code == codec.DF_ALL_CALL_REPLY and frame.nbits == 56:
        passed = codec.verify_frame(frame, 0).passed
        return "DF11" if passed else "UF11"
    if code == codec.DF_EXTENDED_SQUITTER and frame.nbits == 112:
        return "DF17"
    if code in (codec.DF_SURVEILLANCE_SHORT, codec.DF_SURVEILLANCE_LONG):
        prefix = "UF" if destination != "*" else "DF"
        return f"{prefix}{code}"
    return f"fmt{code}"


# -- metrics -----------------------------------------------------------------------

@dataclass
class MetricsReport:
    scenario: str
    duration_s: float
    seed: int
    transmit_outcomes: dict[str, int] = field(default_factory=dict)
    frames_sent: dict[str, int] = field(default_factory=dict)
    links: dict[str, dict[str, int]] = field(default_factory=dict)
    deliveries: dict[str, int] = field(default_factory=dict)
    rounds_per_track: dict[str, int] = field(default_factory=dict)
    track_events: list = field(default_factory=list)
    advisories: list = field(default_factory=list)
    attack_phases: list = field(default_factory=list)
    attack_notes: list = field(default_factory=list)
    nmac_windows: list = field(default_factory=list)
    nmac_occurred: bool = False
    range_series: dict[str, list] = field(default_factory=dict)
    plan_error_series: list = field(default_factory=list)
    success: dict[str, bool] = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return all(self.success.values())

    def packet_loss(self, link: str) -> float:
        stats = self.links[link]
        return stats["lost"] / stats["attempts"]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1)


SUCCESS_CHECKS = {
    "nmac_occurred": lambda r: r.nmac_occurred,
    "no_nmac": lambda r: not r.nmac_occurred,
    "no_advisories": lambda r: not r.advisories,
    "phases_complete": lambda r: [p for _, p in r.attack_phases] == list(PHASES),
    "track_evicted": lambda r: any(e[3] == "track_drop;evicted" for e in r.track_events),
    "flood_complete": lambda r: any(n[1] == "flood_complete" for n in r.attack_notes),
}


def metrics_from_log(records: list[LogRecord], scenario: Scenario) -> MetricsReport:
    """Distill the report; everything here re-derives from the log lines."""
    report = MetricsReport(scenario.name, scenario.duration_s, scenario.seed)
    labels: dict[str, set[str]] = {}

    for rec in records:
        if rec.kind == "transmit":
            report.transmit_outcomes[rec.outcome] = report.transmit_outcomes.get(rec.outcome, 0) + 1
            label = frame_label(rec.frame_hex, rec.destination)
            labels.setdefault(rec.frame_hex, set()).add(label)
            if rec.outcome == "sent":
                report.frames_sent[label] = report.frames_sent.get(label, 0) + 1
        elif rec.kind == "deliver":
            link = f"{rec.source}>{rec.destination}"
            stats = report.links.setdefault(link, {"attempts": 0, "decoded": 0, "lost": 0})
            stats["attempts"] += 1
            if rec.outcome in LOSS_OUTCOMES:
                stats["lost"] += 1
            else:
                stats["decoded"] += 1
                seen = labels.get(rec.frame_hex, set())
                label = next(iter(seen)) if len(seen) == 1 else frame_label(rec.frame_hex)
                key = f"{label}>{rec.destination}"
                report.deliveries[key] = report.deliveries.get(key, 0) + 1
        elif rec.kind == "tcas":
            if rec.outcome.startswith("range="):
                key = f"{rec.source}>{rec.destination}"
                report.rounds_per_track[key] = report.rounds_per_track.get(key, 0) + 1
                rng = float(rec.outcome.split(";")[0].split("=")[1])
                report.range_series.setdefault(key, []).append([rec.time_ns, rng])
            elif rec.outcome.startswith(("track_new", "track_drop")):
                report.track_events.append([rec.time_ns, rec.source, rec.destination, rec.outcome])
            elif rec.outcome.startswith(("ta_", "ra_")):
                report.advisories.append([rec.time_ns, rec.source, rec.destination, rec.outcome])
        elif rec.kind == "attack":
            if rec.outcome.startswith("phase;"):
                report.attack_phases.append([rec.time_ns, rec.outcome.split(";", 1)[1]])
            else:
                report.attack_notes.append([rec.time_ns, rec.outcome])
        elif rec.kind == "nmac":
            until = int(rec.outcome.split("until=")[1])
            report.nmac_windows.append([rec.source, rec.destination, rec.time_ns, until])

    report.nmac_occurred = bool(report.nmac_windows)
    _fill_plan_errors(report, scenario)
    for name in scenario.success:
        report.success[name] = SUCCESS_CHECKS[name](report)
    return report


def _fill_plan_errors(report: MetricsReport, scenario: Scenario) -> None:
    atk = scenario.attacker
    if atk is None or atk.mission != MISSION_PHANTOM:
        return
    epoch = next((t for t, phase in report.attack_phases if phase == "tracking"), None)
    if epoch is None:
        return
    victim = next(a.name for a in scenario.aircraft if a.icao == atk.target_icao)
    plan = atk.plan or PhantomPlan()
    series = report.range_series.get(f"{victim}>{atk.target_icao - 1:06x}", [])
    for t_ns, estimate in series:
        if t_ns < epoch:
            continue
        want = plan.desired_range_nmi((t_ns - epoch) / NS_PER_S)
        report.plan_error_series.append([t_ns, estimate, want, estimate - want])


# -- simulation --------------------------------------------------------------------

@dataclass
class SimulationResult:
    scenario: Scenario
    records: list[LogRecord]
    report: MetricsReport


def simulate(scenario: Scenario) -> SimulationResult:
    """Run to the scenario horizon and measure.

    Near-midair windows are computed analytically from the piecewise-linear
    trajectories (no sampling grid) and appended to the log as ``nmac``
    records, keeping the report a pure function of the log.
    """
    world, entities = build_world(scenario)
    world.run_until(scenario.duration_ns)

    extra: list[LogRecord] = []
    crafts = [a.name for a in scenario.aircraft]
    for i, name_a in enumerate(crafts):
        for name_b in crafts[i + 1:]:
            windows = nmac_intervals(world.trajectory_segments(name_a),
                                     world.trajectory_segments(name_b),
                                     scenario.duration_ns)
            for on_ns, off_ns in windows:
                extra.append(LogRecord(on_ns, "nmac", name_a, name_b, "-",
                                       f"window;until={off_ns}"))
    records = sorted(world.log + extra, key=lambda r: r.time_ns)
    return SimulationResult(scenario, records, metrics_from_log(records, scenario))


# -- channel characterization --------------------------------------------------------

@dataclass(frozen=True)
class LossPoint:
    snr_db: float | None  # None means the noiseless sentinel
    samples: int
    lost: int

    @property
    def loss_fraction(self) -> float:
        return self.lost / self.samples


class _CorpusProbe:
    """Bare fabric endpoint for pushing raw frames through a channel."""

    def __init__(self, name: str, state: AircraftState):
        self.name = name
        self.icao = None
        self._state = state
        self.received: dict[int, codec.ModeSFrame] = {}  # keyed by transmit time

    def state_at(self, time_ns: int) -> AircraftState:
        return self._state

    def on_frame(self, world, frame, rx_time_ns, tx_time_ns) -> str:
        self.received[tx_time_ns] = frame
        return "captured"

    def on_timer(self, world, timer, data) -> None:
        pass


def _corpus(seed: int, size: int) -> list[codec.ModeSFrame]:
    """Deterministic mixed-format frame corpus; every builder exercised."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC0DEC]))
    addr = lambda: int(rng.integers(1, 0xFFFFFF))
    alt = lambda: float(rng.integers(0, 8192) * 25)
    builders = [
        lambda: codec.build_interrogation("all_call"),
        lambda: codec.build_interrogation("surveillance_short", addr()),
        lambda: codec.build_interrogation("surveillance_long", addr(),
                                          rac=int(rng.integers(0, 4)),
                                          ra_active=bool(rng.integers(0, 2)),
                                          sender=addr()),
        lambda: codec.build_reply("all_call", addr()),
        lambda: codec.build_reply("surveillance_short", addr(), altitude_ft=alt()),
        lambda: codec.build_reply("surveillance_long", addr(), altitude_ft=alt(),
                                  rac=int(rng.integers(0, 4)),
                                  ra_active=bool(rng.integers(0, 2))),
        lambda: codec.build_reply("extended_squitter", addr(), altitude_ft=alt()),
    ]
    return [builders[i % len(builders)]() for i in range(size)]


def loss_sweep(scenario: Scenario, snr_list: list[float | None],
               corpus_size: int = 600) -> list[LossPoint]:
    """Frame loss through the modem chain at each SNR, smallest first.

    Every point replays the same corpus with the same world seed, so the
    noise draws pair up across SNRs and the loss column is monotone in
    substance, not just in expectation.
    """
    frames = _corpus(scenario.seed, corpus_size)
    world_seed = int(np.random.SeedSequence([scenario.seed, 0x51EE]).generate_state(1)[0])
    spacing_ns = NS_PER_S // 1000  # 1 ms apart; airtimes are two decades shorter

    points = []
    for snr_db in sorted(snr_list, key=lambda s: math.inf if s is None else s):
        noiseless = snr_db is None or math.isinf(snr_db)
        channel = NoiselessChannel() if noiseless else AwgnChannel(snr_db)
        world = World(channel=channel, seed=world_seed)
        sender = _CorpusProbe("sender", AircraftState(0.0, 0.0, 0.0))
        receiver = _CorpusProbe("receiver", AircraftState(1.0, 0.0, 0.0))
        world.add_entity(sender)
        world.add_entity(receiver)
        for i, frame in enumerate(frames):
            world.schedule_transmit(i * spacing_ns, sender, frame)
        world.run_until(corpus_size * spacing_ns + NS_PER_S)
        # pair receptions to transmissions by transmit time; a frame counts
        # only if it arrived and decoded to exactly the bits that were sent
        good = 0
        for i, sent in enumerate(frames):
            got = receiver.received.get(i * spacing_ns)
            if got is not None and got.direction == sent.direction \
                    and got.to_hex() == sent.to_hex():
                good += 1
        points.append(LossPoint(None if noiseless else snr_db,
                                corpus_size, corpus_size - good))
    return points


def loss_table_csv(points: list[LossPoint]) -> str:
    lines = ["snr_db,samples,lost,loss_fraction"]
    for p in points:
        snr = "inf" if p.snr_db is None else f"{p.snr_db:.10g}"
        lines.append(f"{snr},{p.samples},{p.lost},{p.loss_fraction:.10g}")
    return "\n".join(lines) + "\n"


# -- risk tables ------------------------------------------------------------------------

def fta_report(document: dict | None = None) -> tuple[list[fta.SweepRow], str]:
    """Evaluate a factor document into sweep rows and their CSV rendering.

    The document may carry ``factors`` (single-point evaluation), ``grid``
    (cross-product sweep), and ``overrides`` (basic-event replacements
    that also switch on the attack mapping).  An empty document yields the
    all-defaults row.
    """
    document = document or {}
    unknown = set(document) - {"factors", "grid", "overrides"}
    if unknown:
        raise fta.FtaError(f"unknown risk document field {sorted(unknown)[0]!r}")
    factors = document.get("factors", {})
    grid = {name: [value] for name, value in factors.items()}
    grid.update(document.get("grid", {}))
    overrides = document.get("overrides")
    if overrides is not None:
        try:
            fta.BasicEvents(**overrides)  # validates names and ranges up front
        except TypeError as exc:
            raise fta.FtaError(f"unknown basic event override: {exc}") from None
    rows = fta.sensitivity_sweep(grid=grid, overrides=overrides)
    return rows, fta.sweep_to_csv(rows)
