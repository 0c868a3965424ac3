"""Wire format for messages exchanged between data-user nodes.

Envelope (all integers big-endian)::

    u32   length of everything that follows
    u8    version (0x01)
    u8    kind
    u16   sender gid length, then the gid in UTF-8
    16B   msg_id
    body  a sequence of fields, each a u32 length followed by that many bytes

Body fields per kind (in order):

    PARAMS_PROPOSAL     params (GlobalParams.to_bytes)
    PARAMS_ACK          ref (msg_id of the proposal), digest (SHA-256 of params)
    PK_SHARE_PUBLISH    attribute (UTF-8), e_alpha (GT), g_beta (G2)
    KEY_REQUEST         attribute
    KEY_SHARE_RESPONSE  ref, attribute, gid, share (compressed G1)
    REJECT              ref, reason (UTF-8 code), detail (UTF-8)

Share bytes in KEY_SHARE_RESPONSE are carried opaquely and decoded by the
receiver, so a corrupted share is attributed to its issuer instead of
failing the envelope parse.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from typing import Any

from ..errors import FormatError
from ..group import G2Element, GtElement

VERSION = 0x01
MSG_ID_SIZE = 16


class Kind(enum.IntEnum):
    PARAMS_PROPOSAL = 1
    PARAMS_ACK = 2
    PK_SHARE_PUBLISH = 3
    KEY_REQUEST = 4
    KEY_SHARE_RESPONSE = 5
    REJECT = 6


class RejectReason(str, enum.Enum):
    NOT_ELIGIBLE = "NotEligible"
    NOT_AUTHORITY = "NotAuthority"
    PARAMS_UNSUPPORTED = "ParamsUnsupported"
    MALFORMED = "Malformed"


_STR = (lambda v: v.encode("utf-8"), lambda b: b.decode("utf-8"))
_RAW = (bytes, bytes)
_GT = (lambda v: v.to_bytes(), GtElement.from_bytes)
_G2 = (lambda v: v.to_bytes(), G2Element.from_bytes)

SCHEMA: dict[Kind, list[tuple[str, tuple]]] = {
    Kind.PARAMS_PROPOSAL: [("params", _RAW)],
    Kind.PARAMS_ACK: [("ref", _RAW), ("digest", _RAW)],
    Kind.PK_SHARE_PUBLISH: [("attribute", _STR), ("e_alpha", _GT), ("g_beta", _G2)],
    Kind.KEY_REQUEST: [("attribute", _STR)],
    Kind.KEY_SHARE_RESPONSE: [("ref", _RAW), ("attribute", _STR), ("gid", _STR), ("share", _RAW)],
    Kind.REJECT: [("ref", _RAW), ("reason", _STR), ("detail", _STR)],
}


@dataclass(frozen=True)
class ProtocolMessage:
    kind: Kind
    sender: str
    msg_id: bytes
    body: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.msg_id) != MSG_ID_SIZE:
            raise ValueError(f"msg_id must be {MSG_ID_SIZE} bytes")
        expected = [name for name, _ in SCHEMA[self.kind]]
        if sorted(self.body) != sorted(expected):
            raise ValueError(f"{self.kind.name} body needs fields {expected}")

    def __getitem__(self, name: str) -> Any:
        return self.body[name]

    def encode(self) -> bytes:
        sender = self.sender.encode("utf-8")
        parts = [struct.pack(">BBH", VERSION, self.kind, len(sender)), sender, self.msg_id]
        for name, (enc, _) in SCHEMA[self.kind]:
            raw = enc(self.body[name])
            parts.append(struct.pack(">I", len(raw)))
            parts.append(raw)
        payload = b"".join(parts)
        return struct.pack(">I", len(payload)) + payload

    @classmethod
    def decode(cls, data: bytes) -> ProtocolMessage:
        try:
            (length,) = struct.unpack_from(">I", data, 0)
            if length != len(data) - 4:
                raise FormatError("envelope length mismatch", offset=0)
            version, kind_byte, glen = struct.unpack_from(">BBH", data, 4)
            if version != VERSION:
                raise FormatError(f"unknown version {version}", offset=4)
            try:
                kind = Kind(kind_byte)
            except ValueError:
                raise FormatError(f"unknown message kind {kind_byte}", offset=5) from None
            pos = 8
            sender = data[pos:pos + glen].decode("utf-8")
            pos += glen
            msg_id = data[pos:pos + MSG_ID_SIZE]
            if len(msg_id) != MSG_ID_SIZE:
                raise FormatError("truncated msg_id", offset=pos)
            pos += MSG_ID_SIZE
            body = {}
            for name, (_, dec) in SCHEMA[kind]:
                (flen,) = struct.unpack_from(">I", data, pos)
                pos += 4
                raw = data[pos:pos + flen]
                if len(raw) != flen:
                    raise FormatError(f"truncated field {name}", offset=pos)
                body[name] = dec(raw)
                pos += flen
            if pos != len(data):
                raise FormatError("trailing bytes after body", offset=pos)
        except (struct.error, UnicodeDecodeError) as exc:
            raise FormatError(f"malformed message: {exc}") from None
        return cls(kind, sender, bytes(msg_id), body)
