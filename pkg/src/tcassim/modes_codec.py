"""Bit-level Mode S frame codec.

Frames are 56 or 112 bits, MSB first: a 5-bit format code, a payload, and a
24-bit address/parity (AP) tail.  The tail is the CRC-24 of everything before
it XORed with a 24-bit address overlay; broadcast squitters use a zero
overlay and carry their address in the clear, addressed frames use the
target's address so only the addressee can validate the frame.

Supported formats (uplink = interrogation, downlink = reply):

==========  ====  ======  ===========================================
direction   code  length  payload fields
==========  ====  ======  ===========================================
uplink       4     56     spare
uplink      11     56     spare                     (all-call, broadcast)
uplink      20    112     rac, ra_active, sender    (long surveillance)
downlink     4     56     altitude
downlink    11     56     icao                      (all-call reply / squitter)
downlink    17    112     icao, altitude            (extended squitter)
downlink    20    112     altitude, rac, ra_active  (long surveillance)
==========  ====  ======  ===========================================

A reply always echoes the format code of the interrogation that elicited it.

Altitude rides in a 13-bit field counting 25 ft increments from zero.  This
linear code is a simplification and is not interoperable with real
transponder altitude encoding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

UPLINK = "uplink"
DOWNLINK = "downlink"

SHORT_FRAME_BITS = 56
LONG_FRAME_BITS = 112
AP_BITS = 24

ALL_CALL_ADDRESS = 0xFFFFFF

# Generator polynomial for the 24-bit parity, x^24 bit explicit.
CRC24_GENERATOR = 0x1FFF409

UF_SURVEILLANCE_SHORT = 4
UF_ALL_CALL = 11
UF_SURVEILLANCE_LONG = 20

DF_SURVEILLANCE_SHORT = 4
DF_ALL_CALL_REPLY = 11
DF_EXTENDED_SQUITTER = 17
DF_SURVEILLANCE_LONG = 20

# Resolution advisory complement values (constraint imposed on the receiver).
RAC_NONE = 0
RAC_DO_NOT_PASS_ABOVE = 1
RAC_DO_NOT_PASS_BELOW = 2
RAC_CONTRADICTORY = 3

ALTITUDE_STEP_FT = 25
ALTITUDE_MAX_FT = ((1 << 13) - 1) * ALTITUDE_STEP_FT

# Payload layouts: (field name, width) between the format code and the AP
# tail.  Widths sum to 27 for short frames and 83 for long ones.
_UPLINK_FIELDS = {
    UF_SURVEILLANCE_SHORT: (("spare", 27),),
    UF_ALL_CALL: (("spare", 27),),
    UF_SURVEILLANCE_LONG: (("rac", 4), ("ra_active", 1), ("sender", 24), ("spare", 54)),
}
_DOWNLINK_FIELDS = {
    DF_SURVEILLANCE_SHORT: (("altitude_code", 13), ("spare", 14)),
    DF_ALL_CALL_REPLY: (("icao", 24), ("spare", 3)),
    DF_EXTENDED_SQUITTER: (("icao", 24), ("altitude_code", 13), ("spare", 46)),
    DF_SURVEILLANCE_LONG: (("altitude_code", 13), ("rac", 4), ("ra_active", 1), ("spare", 65)),
}

# Broadcast downlink formats validated against a zero overlay; everything
# else is sealed with a specific 24-bit address.
PLAIN_ADDRESS_FORMATS = {DF_ALL_CALL_REPLY, DF_EXTENDED_SQUITTER}

_LONG_FORMAT_CODES = {
    UPLINK: {UF_SURVEILLANCE_LONG},
    DOWNLINK: {DF_SURVEILLANCE_LONG, DF_EXTENDED_SQUITTER},
}

_INTERROGATION_KINDS = {
    "all_call": UF_ALL_CALL,
    "surveillance_short": UF_SURVEILLANCE_SHORT,
    "surveillance_long": UF_SURVEILLANCE_LONG,
}
_REPLY_KINDS = {
    "all_call": DF_ALL_CALL_REPLY,
    "surveillance_short": DF_SURVEILLANCE_SHORT,
    "surveillance_long": DF_SURVEILLANCE_LONG,
    "extended_squitter": DF_EXTENDED_SQUITTER,
}


class CodecError(ValueError):
    """Malformed frame, field out of range, or unsupported format."""


def _build_crc_table() -> list[int]:
    poly = CRC24_GENERATOR & 0xFFFFFF
    table = []
    for byte in range(256):
        reg = byte << 16
        for _ in range(8):
            if reg & 0x800000:
                reg = ((reg << 1) ^ poly) & 0xFFFFFF
            else:
                reg = (reg << 1) & 0xFFFFFF
        table.append(reg)
    return table


_CRC_TABLE = _build_crc_table()


def _crc24_word(word: int, nbits: int) -> int:
    """CRC-24 of an MSB-first bit string packed into an int (nbits % 8 == 0)."""
    reg = 0
    for shift in range(nbits - 8, -8, -8):
        byte = (word >> shift) & 0xFF if shift >= 0 else 0
        reg = ((reg << 8) & 0xFFFFFF) ^ _CRC_TABLE[((reg >> 16) & 0xFF) ^ byte]
    return reg


def crc24(body_bits: Sequence[int]) -> int:
    """Parity of a frame body (the frame minus its 24-bit tail).

    Accepts the two body lengths that occur on the air: 32 bits for short
    frames and 88 for long ones.
    """
    n = len(body_bits)
    if n not in (SHORT_FRAME_BITS - AP_BITS, LONG_FRAME_BITS - AP_BITS):
        raise CodecError(f"body must be 32 or 88 bits, got {n}")
    word = 0
    for b in body_bits:
        b = int(b)  # numpy scalars would drag the shift into wrapping uint8 math
        if b not in (0, 1):
            raise CodecError("body bits must be 0 or 1")
        word = (word << 1) | b
    return _crc24_word(word, n)


@dataclass(frozen=True)
class ModeSFrame:
    """An assembled frame: direction, bit length, and the bits as one int."""

    direction: str
    nbits: int
    word: int

    def __post_init__(self) -> None:
        if self.direction not in (UPLINK, DOWNLINK):
            raise CodecError(f"direction must be uplink or downlink, got {self.direction!r}")
        if self.nbits not in (SHORT_FRAME_BITS, LONG_FRAME_BITS):
            raise CodecError(f"frame must be 56 or 112 bits, got {self.nbits}")
        if not 0 <= self.word < (1 << self.nbits):
            raise CodecError("frame word does not fit the declared bit length")

    @property
    def format_code(self) -> int:
        return self.word >> (self.nbits - 5)

    @property
    def ap(self) -> int:
        return self.word & 0xFFFFFF

    @property
    def body_word(self) -> int:
        return self.word >> AP_BITS

    @property
    def body_nbits(self) -> int:
        return self.nbits - AP_BITS

    def bits(self) -> np.ndarray:
        """Frame bits MSB first as a uint8 vector (for the modems)."""
        return np.array([(self.word >> i) & 1 for i in range(self.nbits - 1, -1, -1)], dtype=np.uint8)

    def to_hex(self) -> str:
        return f"{self.word:0{self.nbits // 4}x}"

    @classmethod
    def from_hex(cls, text: str, direction: str) -> "ModeSFrame":
        text = text.strip().lower()
        if len(text) not in (SHORT_FRAME_BITS // 4, LONG_FRAME_BITS // 4):
            raise CodecError(f"hex frame must be 14 or 28 digits, got {len(text)}")
        try:
            word = int(text, 16)
        except ValueError as exc:
            raise CodecError(f"not a hex string: {text!r}") from exc
        return cls(direction, len(text) * 4, word)

    @classmethod
    def from_bits(cls, bits: Iterable[int], direction: str) -> "ModeSFrame":
        seq = list(bits)
        word = 0
        for b in seq:
            word = (word << 1) | (int(b) & 1)
        return cls(direction, len(seq), word)


@dataclass(frozen=True)
class ParityCheck:
    """Outcome of AP validation.

    ``passed`` is None when an addressed frame was checked without an
    expected address; ``recovered_address`` is CRC XOR AP either way.
    """

    passed: bool | None
    recovered_address: int


def validate_icao(address: int) -> int:
    if not isinstance(address, int) or not 0 <= address <= 0xFFFFFF:
        raise CodecError(f"ICAO address must fit in 24 bits, got {address!r}")
    return address


def encode_altitude(altitude_ft: float) -> int:
    """13-bit altitude code: nearest 25 ft increment above zero."""
    if not altitude_ft >= 0:
        raise CodecError(f"altitude below encodable range: {altitude_ft}")
    code = round(altitude_ft / ALTITUDE_STEP_FT)
    if code >= (1 << 13):
        raise CodecError(f"altitude above encodable range: {altitude_ft}")
    return code


def decode_altitude(code: int) -> int:
    if not 0 <= code < (1 << 13):
        raise CodecError(f"altitude code out of range: {code}")
    return code * ALTITUDE_STEP_FT


def _fields_for(direction: str, format_code: int):
    table = _UPLINK_FIELDS if direction == UPLINK else _DOWNLINK_FIELDS
    return table.get(format_code)


def frame_bit_length(direction: str, format_code: int) -> int | None:
    """Frame length implied by a decoded 5-bit header; None if unsupported.

    Receivers decode the header first and truncate the demodulated stream
    to this length.
    """
    if _fields_for(direction, format_code) is None:
        return None
    return LONG_FRAME_BITS if format_code in _LONG_FORMAT_CODES[direction] else SHORT_FRAME_BITS


def _pack(direction: str, format_code: int, values: dict[str, int]) -> ModeSFrame:
    layout = _fields_for(direction, format_code)
    if layout is None:
        raise CodecError(f"unsupported {direction} format {format_code}")
    nbits = LONG_FRAME_BITS if format_code in _LONG_FORMAT_CODES[direction] else SHORT_FRAME_BITS
    word = format_code
    used = dict(values)
    for name, width in layout:
        value = used.pop(name, 0)
        if not 0 <= value < (1 << width):
            raise CodecError(f"field {name} does not fit {width} bits: {value}")
        word = (word << width) | value
    if used:
        raise CodecError(f"unknown fields for format {format_code}: {sorted(used)}")
    word <<= AP_BITS  # AP filled by seal_frame
    return ModeSFrame(direction, nbits, word)


def seal_frame(frame: ModeSFrame, address: int) -> ModeSFrame:
    """Fill the AP tail: CRC of the body XOR the address overlay."""
    validate_icao(address)
    ap = _crc24_word(frame.body_word, frame.body_nbits) ^ address
    return ModeSFrame(frame.direction, frame.nbits, (frame.body_word << AP_BITS) | ap)


def verify_frame(frame: ModeSFrame, expected_address: int | None) -> ParityCheck:
    """Check the AP tail against an expected overlay.

    With an expected address, passes iff the recovered overlay equals it;
    without one the recovered overlay is reported and ``passed`` is None.
    """
    recovered = _crc24_word(frame.body_word, frame.body_nbits) ^ frame.ap
    if expected_address is None:
        return ParityCheck(None, recovered)
    validate_icao(expected_address)
    return ParityCheck(recovered == expected_address, recovered)


def build_interrogation(kind: str, address: int | None = None, *,
                        rac: int = RAC_NONE, ra_active: bool = False,
                        sender: int = 0) -> ModeSFrame:
    """Assemble and seal an uplink frame.

    ``all_call`` is broadcast and sealed with the all-call address; the
    surveillance kinds are sealed with the target address.  The long kind
    carries resolution advisory coordination (rac, ra_active, sender).
    """
    if kind not in _INTERROGATION_KINDS:
        raise CodecError(f"unknown interrogation kind {kind!r}")
    code = _INTERROGATION_KINDS[kind]
    if kind == "all_call":
        if address not in (None, ALL_CALL_ADDRESS):
            raise CodecError("all-call interrogations are sealed with the all-call address")
        overlay = ALL_CALL_ADDRESS
        frame = _pack(UPLINK, code, {})
    else:
        if address is None:
            raise CodecError(f"{kind} interrogation needs a target address")
        overlay = validate_icao(address)
        values: dict[str, int] = {}
        if kind == "surveillance_long":
            values = {"rac": rac, "ra_active": int(ra_active), "sender": validate_icao(sender)}
        elif rac != RAC_NONE or ra_active:
            raise CodecError("short surveillance carries no coordination fields")
        frame = _pack(UPLINK, code, values)
    return seal_frame(frame, overlay)


def build_reply(kind: str, address: int, *, altitude_ft: float = 0,
                rac: int = RAC_NONE, ra_active: bool = False) -> ModeSFrame:
    """Assemble and seal a downlink frame for the given transponder address.

    Broadcast kinds (all_call reply, extended squitter) put the address in
    the payload and seal with the zero overlay; surveillance replies seal
    with the address itself.
    """
    if kind not in _REPLY_KINDS:
        raise CodecError(f"unknown reply kind {kind!r}")
    validate_icao(address)
    code = _REPLY_KINDS[kind]
    if kind == "all_call":
        frame = _pack(DOWNLINK, code, {"icao": address})
        return seal_frame(frame, 0)
    if kind == "extended_squitter":
        frame = _pack(DOWNLINK, code, {"icao": address, "altitude_code": encode_altitude(altitude_ft)})
        return seal_frame(frame, 0)
    values = {"altitude_code": encode_altitude(altitude_ft)}
    if kind == "surveillance_long":
        values.update({"rac": rac, "ra_active": int(ra_active)})
    elif rac != RAC_NONE or ra_active:
        raise CodecError("short surveillance replies carry no coordination fields")
    frame = _pack(DOWNLINK, code, values)
    return seal_frame(frame, address)


@dataclass(frozen=True)
class DecodedFrame:
    """Parsed frame: format identity, extracted fields, and parity verdict."""

    frame: ModeSFrame
    format_code: int
    kind: str
    fields: dict[str, int]
    parity: ParityCheck | None

    @property
    def altitude_ft(self) -> int | None:
        code = self.fields.get("altitude_code")
        return None if code is None else decode_altitude(code)


_KIND_BY_CODE = {
    (UPLINK, UF_SURVEILLANCE_SHORT): "surveillance_short",
    (UPLINK, UF_ALL_CALL): "all_call",
    (UPLINK, UF_SURVEILLANCE_LONG): "surveillance_long",
    (DOWNLINK, DF_SURVEILLANCE_SHORT): "surveillance_short",
    (DOWNLINK, DF_ALL_CALL_REPLY): "all_call",
    (DOWNLINK, DF_EXTENDED_SQUITTER): "extended_squitter",
    (DOWNLINK, DF_SURVEILLANCE_LONG): "surveillance_long",
}


def parse_frame(frame: ModeSFrame | Iterable[int], direction: str | None = None,
                expected_address: int | None = None) -> DecodedFrame:
    """Decode a frame: header first, then fields, then parity.

    Uplink all-calls verify against the all-call overlay, broadcast
    downlink formats against the zero overlay, addressed formats against
    ``expected_address`` when given.  An unrecognized format code yields
    kind ``"unknown"`` with no fields rather than an exception.
    """
    if not isinstance(frame, ModeSFrame):
        if direction is None:
            raise CodecError("raw bits need an explicit direction")
        frame = ModeSFrame.from_bits(frame, direction)
    code = frame.format_code
    kind = _KIND_BY_CODE.get((frame.direction, code))
    layout = _fields_for(frame.direction, code)
    expected_len = None
    if kind is not None:
        expected_len = LONG_FRAME_BITS if code in _LONG_FORMAT_CODES[frame.direction] else SHORT_FRAME_BITS
    if kind is None or expected_len != frame.nbits:
        return DecodedFrame(frame, code, "unknown", {}, None)

    fields: dict[str, int] = {}
    shift = frame.body_nbits - 5
    for name, width in layout:
        shift -= width
        fields[name] = (frame.body_word >> shift) & ((1 << width) - 1)
    fields.pop("spare", None)

    if frame.direction == UPLINK and code == UF_ALL_CALL:
        parity = verify_frame(frame, ALL_CALL_ADDRESS)
    elif frame.direction == DOWNLINK and code in PLAIN_ADDRESS_FORMATS:
        parity = verify_frame(frame, 0)
    else:
        parity = verify_frame(frame, expected_address)
    return DecodedFrame(frame, code, kind, fields, parity)
