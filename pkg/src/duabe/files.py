"""On-disk formats for parameters, keys and sealed payloads.

Every file is an envelope::

    b"DUABE1" | kind (u8) | u32 little-endian metadata length
              | metadata (canonical UTF-8 JSON) | binary body

Metadata always carries ``"version": 1``. Bodies are concatenations of the
canonical group encodings from :mod:`duabe.group`.
"""

from __future__ import annotations

import enum
import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .errors import FormatError, RefusesOverwriteError
from .group import G1_SIZE, G2_SIZE, GT_SIZE, SCALAR_SIZE, G1Element, G2Element, GtElement, Scalar
from .policy import AccessMatrix
from .scheme import (
    AttributePublicKey,
    Ciphertext,
    CiphertextRow,
    GlobalParams,
    KeyShare,
    MasterKeyShare,
    PublicKeyShare,
    UserSecretKey,
)

MAGIC = b"DUABE1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<BI")


class FileKind(enum.IntEnum):
    GLOBAL_PARAMS = 1
    MASTER_SHARE = 2
    PUBLIC_SHARE = 3
    ATTR_PUBKEY = 4
    USER_KEY = 5
    KEY_SHARE = 6
    SEALED = 7

    @property
    def label(self) -> str:
        return self.name.lower().replace("_", "-")


@dataclass(frozen=True)
class Envelope:
    kind: FileKind
    meta: dict[str, Any]
    body: bytes
    body_offset: int = 0


def _canonical_json(meta: dict) -> bytes:
    return json.dumps(meta, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode()


def encode_envelope(kind: FileKind, meta: dict, body: bytes) -> bytes:
    blob = _canonical_json({"version": FORMAT_VERSION, **meta})
    return MAGIC + _HEADER.pack(kind, len(blob)) + blob + body


def decode_envelope(data: bytes) -> Envelope:
    if data[:len(MAGIC)] != MAGIC:
        raise FormatError("bad magic bytes", offset=0)
    pos = len(MAGIC)
    if len(data) < pos + _HEADER.size:
        raise FormatError("truncated header", offset=pos)
    kind_byte, meta_len = _HEADER.unpack_from(data, pos)
    try:
        kind = FileKind(kind_byte)
    except ValueError:
        raise FormatError(f"unknown file kind {kind_byte}", offset=pos) from None
    pos += _HEADER.size
    blob = data[pos:pos + meta_len]
    if len(blob) != meta_len:
        raise FormatError("truncated metadata", offset=pos)
    try:
        meta = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"unreadable metadata: {exc}", offset=pos) from None
    if not isinstance(meta, dict) or meta.get("version") != FORMAT_VERSION:
        raise FormatError("unsupported metadata version", offset=pos)
    pos += meta_len
    return Envelope(kind, meta, data[pos:], pos)


def _need(meta: dict, *fields: str) -> list[Any]:
    missing = [f for f in fields if f not in meta]
    if missing:
        raise FormatError(f"metadata lacks {missing}")
    return [meta[f] for f in fields]


def _split(body: bytes, offset: int, *sizes: int) -> list[bytes]:
    if len(body) != sum(sizes):
        raise FormatError(f"body is {len(body)} bytes, expected {sum(sizes)}", offset=offset)
    out, pos = [], 0
    for size in sizes:
        out.append(body[pos:pos + size])
        pos += size
    return out


def encode(obj) -> bytes:
    """Serialize any key-material or parameter object into its file bytes."""
    if isinstance(obj, GlobalParams):
        return encode_envelope(
            FileKind.GLOBAL_PARAMS,
            {"curve": obj.group.curve, "security_level": obj.security_level},
            obj.to_bytes(),
        )
    if isinstance(obj, MasterKeyShare):
        return encode_envelope(
            FileKind.MASTER_SHARE, {"attribute": obj.attribute, "holder": obj.holder},
            obj.alpha.to_bytes() + obj.beta.to_bytes(),
        )
    if isinstance(obj, PublicKeyShare):
        return encode_envelope(
            FileKind.PUBLIC_SHARE, {"attribute": obj.attribute, "holder": obj.holder},
            obj.e_alpha.to_bytes() + obj.g_beta.to_bytes(),
        )
    if isinstance(obj, AttributePublicKey):
        return encode_envelope(
            FileKind.ATTR_PUBKEY,
            {"attribute": obj.attribute, "contributor_count": obj.contributor_count},
            obj.e_alpha_sum.to_bytes() + obj.g_beta_sum.to_bytes(),
        )
    if isinstance(obj, KeyShare):
        return encode_envelope(
            FileKind.KEY_SHARE,
            {"attribute": obj.attribute, "gid": obj.gid, "issuer": obj.issuer},
            obj.value.to_bytes(),
        )
    if isinstance(obj, UserSecretKey):
        return encode_envelope(
            FileKind.USER_KEY,
            {"attribute": obj.attribute, "gid": obj.gid, "share_count": obj.share_count},
            obj.value.to_bytes(),
        )
    if isinstance(obj, Ciphertext):
        return encode_ciphertext(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def encode_ciphertext(ct: Ciphertext, extra_meta: dict | None = None) -> bytes:
    meta = {
        "matrix": {"rows": ct.matrix.to_json_obj()["rows"], "rho": list(ct.matrix.rho)},
        "contributors": dict(ct.contributors),
        **(extra_meta or {}),
    }
    body = ct.c0.to_bytes() + b"".join(
        r.c1.to_bytes() + r.c2.to_bytes() + r.c3.to_bytes() for r in ct.rows
    )
    return encode_envelope(FileKind.SEALED, meta, body + (ct.payload or b""))


_ROW_SIZE = GT_SIZE + 2 * G2_SIZE


def decode(data: bytes, expect: FileKind | None = None):
    env = decode_envelope(data)
    if expect is not None and env.kind != expect:
        raise FormatError(f"expected a {expect.label} file, got {env.kind.label}")
    meta, body, off = env.meta, env.body, env.body_offset
    try:
        if env.kind is FileKind.GLOBAL_PARAMS:
            level, = _need(meta, "security_level")
            gp = GlobalParams.from_bytes(body)
            if gp.security_level != level:
                raise FormatError("security level in metadata disagrees with body")
            return gp
        if env.kind is FileKind.MASTER_SHARE:
            attr, holder = _need(meta, "attribute", "holder")
            a, b = _split(body, off, SCALAR_SIZE, SCALAR_SIZE)
            return MasterKeyShare(attr, holder, Scalar.from_bytes(a), Scalar.from_bytes(b))
        if env.kind is FileKind.PUBLIC_SHARE:
            attr, holder = _need(meta, "attribute", "holder")
            e, g = _split(body, off, GT_SIZE, G2_SIZE)
            return PublicKeyShare(attr, holder, GtElement.from_bytes(e), G2Element.from_bytes(g))
        if env.kind is FileKind.ATTR_PUBKEY:
            attr, count = _need(meta, "attribute", "contributor_count")
            e, g = _split(body, off, GT_SIZE, G2_SIZE)
            return AttributePublicKey(attr, GtElement.from_bytes(e), G2Element.from_bytes(g), count)
        if env.kind is FileKind.KEY_SHARE:
            attr, gid, issuer = _need(meta, "attribute", "gid", "issuer")
            (v,) = _split(body, off, G1_SIZE)
            return KeyShare(attr, gid, issuer, G1Element.from_bytes(v))
        if env.kind is FileKind.USER_KEY:
            attr, gid, count = _need(meta, "attribute", "gid", "share_count")
            (v,) = _split(body, off, G1_SIZE)
            return UserSecretKey(gid, attr, G1Element.from_bytes(v), count)
        return _decode_ciphertext(env)
    except FormatError as exc:
        if exc.offset is None:
            raise FormatError(str(exc), offset=off) from None
        raise


def _decode_ciphertext(env: Envelope) -> Ciphertext:
    matrix_obj, contributors = _need(env.meta, "matrix", "contributors")
    matrix = AccessMatrix.from_json_obj(matrix_obj)
    if not isinstance(contributors, dict) or set(contributors) != set(matrix.rho):
        raise FormatError("contributor table does not match the policy attributes")
    body = env.body
    core_len = GT_SIZE + len(matrix.rows) * _ROW_SIZE
    if len(body) < core_len:
        raise FormatError("truncated ciphertext body", offset=env.body_offset + len(body))
    c0 = GtElement.from_bytes(body[:GT_SIZE])
    rows = []
    pos = GT_SIZE
    for _ in matrix.rows:
        rows.append(CiphertextRow(
            GtElement.from_bytes(body[pos:pos + GT_SIZE]),
            G2Element.from_bytes(body[pos + GT_SIZE:pos + GT_SIZE + G2_SIZE]),
            G2Element.from_bytes(body[pos + GT_SIZE + G2_SIZE:pos + _ROW_SIZE]),
        ))
        pos += _ROW_SIZE
    return Ciphertext(matrix, c0, tuple(rows), contributors, body[core_len:] or None)


def write_bytes(path: str | os.PathLike, data: bytes, *, private: bool = False,
                overwrite: bool = True) -> Path:
    """Write a file; private files get mode 0600 from creation onward."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    flags = os.O_WRONLY | os.O_CREAT | (os.O_TRUNC if overwrite else os.O_EXCL)
    try:
        fd = os.open(path, flags, 0o600 if private else 0o644)
    except FileExistsError:
        raise RefusesOverwriteError(f"{path} already exists") from None
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    if private:
        os.chmod(path, 0o600)
    return path


def read_file(path: str | os.PathLike, expect: FileKind | None = None):
    return decode(Path(path).read_bytes(), expect)


def file_kind(path: str | os.PathLike) -> FileKind:
    return decode_envelope(Path(path).read_bytes()).kind
