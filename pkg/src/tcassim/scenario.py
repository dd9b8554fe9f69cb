"""Scenario documents: schema, validation, bundled fixtures, world assembly.

A scenario is a JSON object with an explicit ``schema_version`` so fixtures
stay diff-friendly and loudly reject drift.  Validation is strict: unknown
fields are errors, and every error message names the offending field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from . import modes_codec as codec
from .airspace import (
    NS_PER_S,
    AircraftState,
    AwgnChannel,
    JamDirective,
    NoiselessChannel,
    SimError,
    World,
)
from .attacker import (
    MISSION_ALL_CALL_FLOOD,
    MISSION_PHANTOM,
    MISSION_SQUITTER_FLOOD,
    Attacker,
    PhantomPlan,
)
from .tcas import MODE_STANDBY, MODE_TA_ONLY, MODE_TA_RA, MODE_XPDR, Aircraft, PilotModel

SCHEMA_VERSION = 1

# Per-entity start offset so periodic timers interleave instead of stacking
# on the same instant; purely deterministic.
START_STAGGER_NS = 37_000_000

_MODES = (MODE_STANDBY, MODE_XPDR, MODE_TA_ONLY, MODE_TA_RA)
_MISSIONS = (MISSION_PHANTOM, MISSION_ALL_CALL_FLOOD, MISSION_SQUITTER_FLOOD)

SUCCESS_PREDICATES = frozenset({
    "nmac_occurred", "no_nmac", "no_advisories", "phases_complete",
    "track_evicted", "flood_complete"})


class ScenarioError(ValueError):
    """Malformed or inconsistent scenario document."""


# -- document plumbing ---------------------------------------------------------

def _check_keys(where: str, obj: dict, allowed: set[str]) -> None:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where}: expected an object")
    for key in obj:
        if key not in allowed:
            raise ScenarioError(f"{where}: unknown field {key!r}")


def _number(where: str, obj: dict, key: str, default=None, *, required: bool = False):
    if key not in obj:
        if required:
            raise ScenarioError(f"{where}: missing field {key!r}")
        return default
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: field {key!r} must be a number")
    return float(value)


def _string(where: str, obj: dict, key: str, default=None, *, required: bool = False):
    if key not in obj:
        if required:
            raise ScenarioError(f"{where}: missing field {key!r}")
        return default
    value = obj[key]
    if not isinstance(value, str):
        raise ScenarioError(f"{where}: field {key!r} must be a string")
    return value


def _icao(where: str, text: str) -> int:
    try:
        value = int(text, 16)
    except (TypeError, ValueError):
        raise ScenarioError(f"{where}: not a hex transponder address: {text!r}") from None
    try:
        return codec.validate_icao(value)
    except codec.CodecError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def _state(where: str, position: dict, velocity: dict | None) -> AircraftState:
    _check_keys(f"{where}.position", position, {"x_nmi", "y_nmi", "altitude_ft"})
    velocity = velocity or {}
    _check_keys(f"{where}.velocity", velocity, {"vx_kt", "vy_kt", "vertical_rate_fpm"})
    try:
        return AircraftState(
            _number(f"{where}.position", position, "x_nmi", required=True),
            _number(f"{where}.position", position, "y_nmi", required=True),
            _number(f"{where}.position", position, "altitude_ft", required=True),
            _number(f"{where}.velocity", velocity, "vx_kt", 0.0),
            _number(f"{where}.velocity", velocity, "vy_kt", 0.0),
            _number(f"{where}.velocity", velocity, "vertical_rate_fpm", 0.0))
    except SimError as exc:
        raise ScenarioError(f"{where}: {exc}") from None


# -- validated configuration ----------------------------------------------------

@dataclass(frozen=True)
class ChannelSpec:
    kind: str = "noiseless"
    snr_db: float | None = None


@dataclass(frozen=True)
class AircraftSpec:
    name: str
    icao: int
    state: AircraftState
    mode: str = MODE_TA_RA
    squitter: bool = True
    pilot: PilotModel = PilotModel()


@dataclass(frozen=True)
class JamSpec:
    target_icao: int
    start_s: float
    end_s: float | None = None


@dataclass(frozen=True)
class FloodSpec:
    rate_hz: float = 10.0
    duration_s: float = 10.0
    address_base: int = 0x500000


@dataclass(frozen=True)
class AttackerSpec:
    name: str
    mission: str
    position: AircraftState
    target_icao: int | None = None
    plan: PhantomPlan | None = None
    bait_timeout_s: float = 20.0
    flood: FloodSpec = FloodSpec()
    jams: tuple[JamSpec, ...] = ()


@dataclass(frozen=True)
class Scenario:
    name: str
    duration_s: float
    aircraft: tuple[AircraftSpec, ...]
    attacker: AttackerSpec | None = None
    surveillance_period_s: float = 1.0
    channel: ChannelSpec = ChannelSpec()
    seed: int = 0
    success: tuple[str, ...] = ()

    @property
    def duration_ns(self) -> int:
        return round(self.duration_s * NS_PER_S)

    def without_attacker(self) -> "Scenario":
        """Control variant: same traffic, no transmitter on the ground."""
        return replace(self, attacker=None)


# -- loading ---------------------------------------------------------------------

def load_scenario(source) -> Scenario:
    """Load and validate a scenario from a dict, a JSON string, or a path."""
    if isinstance(source, dict):
        return _parse(source)
    if isinstance(source, Path):
        return _parse(json.loads(source.read_text()))
    if isinstance(source, str):
        text = source if source.lstrip().startswith("{") else Path(source).read_text()
        return _parse(json.loads(text))
    raise ScenarioError(f"cannot load a scenario from {type(source).__name__}")


def bundled_scenario_names() -> list[str]:
    root = resources.files(__package__) / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def bundled_scenario(name: str) -> Scenario:
    path = resources.files(__package__) / "scenarios" / f"{name}.json"
    if not path.is_file():
        raise ScenarioError(
            f"no bundled scenario {name!r}; have {', '.join(bundled_scenario_names())}")
    return load_scenario(json.loads(path.read_text()))


def _parse(doc: dict) -> Scenario:
    _check_keys("scenario", doc, {
        "schema_version", "name", "duration_s", "surveillance_period_s",
        "seed", "channel", "aircraft", "attacker", "success"})
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"scenario: schema_version must be {SCHEMA_VERSION}, got {version!r}")
    name = _string("scenario", doc, "name", required=True)

    duration_s = _number("scenario", doc, "duration_s", required=True)
    if duration_s <= 0:
        raise ScenarioError("scenario: duration_s must be positive")
    period_s = _number("scenario", doc, "surveillance_period_s", 1.0)
    if period_s <= 0:
        raise ScenarioError("scenario: surveillance_period_s must be positive")

    channel = _parse_channel(doc.get("channel", {"kind": "noiseless"}))
    if "seed" in doc and (isinstance(doc["seed"], bool) or not isinstance(doc["seed"], int)):
        raise ScenarioError("scenario: field 'seed' must be an integer")
    if channel.kind == "awgn" and "seed" not in doc:
        raise ScenarioError("scenario: field 'seed' is required with a noisy channel")
    seed = doc.get("seed", 0)

    aircraft_docs = doc.get("aircraft")
    if not isinstance(aircraft_docs, list) or not aircraft_docs:
        raise ScenarioError("scenario: field 'aircraft' must list at least one aircraft")
    aircraft = tuple(_parse_aircraft(f"aircraft[{i}]", item)
                     for i, item in enumerate(aircraft_docs))
    names = [a.name for a in aircraft]
    icaos = [a.icao for a in aircraft]
    if len(set(names)) != len(names):
        raise ScenarioError("scenario: aircraft names must be unique")
    if len(set(icaos)) != len(icaos):
        raise ScenarioError("scenario: aircraft addresses must be unique")

    attacker = None
    if "attacker" in doc:
        attacker = _parse_attacker("attacker", doc["attacker"], aircraft)
        if attacker.name in names:
            raise ScenarioError("attacker: field 'name' collides with an aircraft")

    success = doc.get("success", [])
    if not isinstance(success, list):
        raise ScenarioError("scenario: field 'success' must be a list")
    for pred in success:
        if pred not in SUCCESS_PREDICATES:
            raise ScenarioError(
                f"scenario: unknown success predicate {pred!r}; "
                f"have {', '.join(sorted(SUCCESS_PREDICATES))}")

    return Scenario(name=name, duration_s=duration_s, aircraft=aircraft,
                    attacker=attacker, surveillance_period_s=period_s,
                    channel=channel, seed=seed, success=tuple(success))


def _parse_channel(obj: dict) -> ChannelSpec:
    _check_keys("channel", obj, {"kind", "snr_db"})
    kind = _string("channel", obj, "kind", required=True)
    if kind == "noiseless":
        if "snr_db" in obj:
            raise ScenarioError("channel: field 'snr_db' only applies to kind 'awgn'")
        return ChannelSpec("noiseless")
    if kind == "awgn":
        return ChannelSpec("awgn", _number("channel", obj, "snr_db", required=True))
    raise ScenarioError(f"channel: unknown kind {kind!r}")


def _parse_aircraft(where: str, obj: dict) -> AircraftSpec:
    _check_keys(where, obj, {"name", "icao", "mode", "squitter",
                             "position", "velocity", "pilot"})
    name = _string(where, obj, "name", required=True)
    icao = _icao(where, _string(where, obj, "icao", required=True))
    mode = _string(where, obj, "mode", MODE_TA_RA)
    if mode not in _MODES:
        raise ScenarioError(f"{where}: unknown mode {mode!r}")
    squitter = obj.get("squitter", True)
    if not isinstance(squitter, bool):
        raise ScenarioError(f"{where}: field 'squitter' must be a boolean")
    if "position" not in obj:
        raise ScenarioError(f"{where}: missing field 'position'")
    state = _state(where, obj["position"], obj.get("velocity"))
    pilot = PilotModel()
    if "pilot" in obj:
        _check_keys(f"{where}.pilot", obj["pilot"], {"delay_s", "rate_fpm"})
        pilot = PilotModel(
            _number(f"{where}.pilot", obj["pilot"], "delay_s", PilotModel.delay_s),
            _number(f"{where}.pilot", obj["pilot"], "rate_fpm", PilotModel.rate_fpm))
    return AircraftSpec(name, icao, state, mode, squitter, pilot)


def _parse_attacker(where: str, obj: dict, aircraft: tuple[AircraftSpec, ...]) -> AttackerSpec:
    _check_keys(where, obj, {"name", "mission", "position", "target", "plan",
                             "bait_timeout_s", "flood", "jam"})
    name = _string(where, obj, "name", required=True)
    mission = _string(where, obj, "mission", required=True)
    if mission not in _MISSIONS:
        raise ScenarioError(f"{where}: unknown mission {mission!r}")
    if "position" not in obj:
        raise ScenarioError(f"{where}: missing field 'position'")
    position = _state(where, obj["position"], None)

    target = None
    if mission == MISSION_PHANTOM:
        target = _icao(where, _string(where, obj, "target", required=True))
        if target not in {a.icao for a in aircraft}:
            raise ScenarioError(f"{where}: field 'target' names no aircraft in the scenario")
    elif "target" in obj:
        raise ScenarioError(f"{where}: field 'target' only applies to the phantom mission")

    plan = None
    if "plan" in obj:
        if mission != MISSION_PHANTOM:
            raise ScenarioError(f"{where}: field 'plan' only applies to the phantom mission")
        p = obj["plan"]
        _check_keys(f"{where}.plan", p, {"initial_range_nmi", "closure_kt",
                                         "floor_nmi", "altitude_ft"})
        plan = PhantomPlan(
            _number(f"{where}.plan", p, "initial_range_nmi", PhantomPlan.initial_range_nmi),
            _number(f"{where}.plan", p, "closure_kt", PhantomPlan.closure_kt),
            _number(f"{where}.plan", p, "floor_nmi", PhantomPlan.floor_nmi),
            _number(f"{where}.plan", p, "altitude_ft", PhantomPlan.altitude_ft))

    flood = FloodSpec()
    if "flood" in obj:
        if mission == MISSION_PHANTOM:
            raise ScenarioError(f"{where}: field 'flood' only applies to flood missions")
        f = obj["flood"]
        _check_keys(f"{where}.flood", f, {"rate_hz", "duration_s", "address_base"})
        rate = _number(f"{where}.flood", f, "rate_hz", FloodSpec.rate_hz)
        duration = _number(f"{where}.flood", f, "duration_s", FloodSpec.duration_s)
        if rate <= 0 or duration <= 0:
            raise ScenarioError(f"{where}.flood: rate_hz and duration_s must be positive")
        base = FloodSpec.address_base
        if "address_base" in f:
            base = _icao(f"{where}.flood", _string(f"{where}.flood", f, "address_base"))
        flood = FloodSpec(rate, duration, base)

    jams = []
    for i, j in enumerate(obj.get("jam", [])):
        jam_where = f"{where}.jam[{i}]"
        _check_keys(jam_where, j, {"target", "start_s", "end_s"})
        target_icao = _icao(jam_where, _string(jam_where, j, "target", required=True))
        start_s = _number(jam_where, j, "start_s", required=True)
        end_s = None if j.get("end_s") is None else _number(jam_where, j, "end_s")
        if start_s < 0 or (end_s is not None and end_s <= start_s):
            raise ScenarioError(f"{jam_where}: window must satisfy 0 <= start_s < end_s")
        jams.append(JamSpec(target_icao, start_s, end_s))

    return AttackerSpec(name, mission, position, target, plan,
                        _number(where, obj, "bait_timeout_s", 20.0),
                        flood, tuple(jams))


# -- world assembly --------------------------------------------------------------

def build_world(scenario: Scenario) -> tuple[World, dict]:
    """Instantiate and arm every entity; returns the world and a name index."""
    if scenario.channel.kind == "awgn":
        channel = AwgnChannel(scenario.channel.snr_db)
    else:
        channel = NoiselessChannel()
    world = World(channel=channel, seed=scenario.seed)

    entities: dict[str, object] = {}
    by_icao: dict[int, Aircraft] = {}
    for idx, spec in enumerate(scenario.aircraft):
        craft = Aircraft(spec.name, spec.icao, spec.state, mode=spec.mode,
                         pilot=spec.pilot, squitter=spec.squitter,
                         surveillance_period_s=scenario.surveillance_period_s)
        world.add_entity(craft)
        craft.start(world, phase_ns=idx * START_STAGGER_NS)
        entities[spec.name] = craft
        by_icao[spec.icao] = craft

    spec = scenario.attacker
    if spec is not None:
        attacker = Attacker(spec.name, spec.position, mission=spec.mission,
                            target_icao=spec.target_icao,
                            plan=spec.plan,
                            bait_timeout_s=spec.bait_timeout_s,
                            flood_rate_hz=spec.flood.rate_hz,
                            flood_duration_s=spec.flood.duration_s,
                            flood_address_base=spec.flood.address_base)
        if spec.mission == MISSION_PHANTOM:
            attacker.intel_target = by_icao[spec.target_icao]
        world.add_entity(attacker)
        for jam in spec.jams:
            world.add_jam(JamDirective(
                jam.target_icao, round(jam.start_s * NS_PER_S),
                None if jam.end_s is None else round(jam.end_s * NS_PER_S)))
        attacker.start(world)
        entities[spec.name] = attacker

    return world, entities
