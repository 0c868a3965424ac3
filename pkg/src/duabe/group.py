"""Bilinear group backend: BLS12-381 arithmetic via mcl, hash-to-curve via blst.

Elements use multiplicative notation in every group, matching how the
scheme is written: ``a * b`` is the group operation, ``a ** k`` is
exponentiation by a scalar and ``~a`` the inverse.

Wire encodings:

* Scalar: 32 bytes, big-endian.
* G1 / G2: ZCash-style compressed points, 48 / 96 bytes.
* GT: the twelve Fp coefficients of the Fp12 element, 48 bytes each,
  big-endian, in tower order (c0.c0.c0, c0.c0.c1, c0.c1.c0, ... c1.c2.c1).
"""

from __future__ import annotations

import hashlib
import secrets
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Protocol

import blspy
import pymcl
from py_ecc.bls.hash_to_curve import hash_to_G1
from py_ecc.bls.point_compression import (
    compress_G1,
    compress_G2,
    decompress_G1,
    decompress_G2,
)
from py_ecc.fields import optimized_bls12_381_FQ as FQ
from py_ecc.fields import optimized_bls12_381_FQ2 as FQ2
from py_ecc.optimized_bls12_381 import is_inf, normalize

from .errors import EmptyInputError, FormatError

CURVE_NAME = "BLS12-381"
ORDER: int = pymcl.r
FIELD_MODULUS: int = FQ.field_modulus
GID_DOMAIN_TAG = b"DU-ABE-v1-GID"

SCALAR_SIZE = 32
G1_SIZE = 48
G2_SIZE = 96
GT_SIZE = 12 * 48

_FR_ORDER_MINUS_ONE = pymcl.Fr(str(ORDER - 1))


class RandomSource(Protocol):
    def randrange(self, stop: int) -> int: ...


class Scalar:
    """An element of Z_r, r the prime group order."""

    __slots__ = ("value",)

    def __init__(self, value: int):
        object.__setattr__(self, "value", value % ORDER)

    def __setattr__(self, name, value):
        raise AttributeError("Scalar is immutable")

    @classmethod
    def coerce(cls, x: Scalar | int) -> Scalar:
        return x if isinstance(x, Scalar) else cls(x)

    def __add__(self, other: Scalar | int) -> Scalar:
        return Scalar(self.value + Scalar.coerce(other).value)

    __radd__ = __add__

    def __sub__(self, other: Scalar | int) -> Scalar:
        return Scalar(self.value - Scalar.coerce(other).value)

    def __rsub__(self, other: Scalar | int) -> Scalar:
        return Scalar(Scalar.coerce(other).value - self.value)

    def __mul__(self, other: Scalar | int) -> Scalar:
        return Scalar(self.value * Scalar.coerce(other).value)

    __rmul__ = __mul__

    def __neg__(self) -> Scalar:
        return Scalar(-self.value)

    def inverse(self) -> Scalar:
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse modulo the group order")
        return Scalar(pow(self.value, -1, ORDER))

    def __truediv__(self, other: Scalar | int) -> Scalar:
        return self * Scalar.coerce(other).inverse()

    def __eq__(self, other) -> bool:
        if isinstance(other, Scalar):
            return self.value == other.value
        if isinstance(other, int):
            return self.value == other % ORDER
        return NotImplemented

    def __hash__(self) -> int:
        return hash(("Scalar", self.value))

    def __int__(self) -> int:
        return self.value

    def __repr__(self) -> str:
        return f"Scalar({self.value})"

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(SCALAR_SIZE, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> Scalar:
        if len(data) != SCALAR_SIZE:
            raise FormatError(f"scalar must be {SCALAR_SIZE} bytes, got {len(data)}")
        value = int.from_bytes(data, "big")
        if value >= ORDER:
            raise FormatError("scalar is not reduced modulo the group order")
        return cls(value)

    def to_fr(self) -> pymcl.Fr:
        return pymcl.Fr.deserialize(self.value.to_bytes(SCALAR_SIZE, "little"))


def _fr(k: Scalar | int) -> pymcl.Fr:
    return Scalar.coerce(k).to_fr()


class _Element:
    """Shared behaviour of the three group wrappers; ``_raw`` is the mcl object."""

    __slots__ = ("_raw",)

    def __init__(self, raw):
        self._raw = raw

    def __eq__(self, other) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return self._raw == other._raw

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.to_bytes()))

    def __truediv__(self, other):
        return self * ~other

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_bytes().hex()[:16]}...)"

    def __reduce__(self):
        return (type(self).from_bytes, (self.to_bytes(),))


class _SourceElement(_Element):
    __slots__ = ()
    _mcl_type: type
    _size: int

    def __mul__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return type(self)(self._raw + other._raw)

    def __pow__(self, k: Scalar | int):
        return type(self)(self._raw * _fr(k))

    def __invert__(self):
        return type(self)(-self._raw)

    def is_identity(self) -> bool:
        return self._raw.is_zero()

    @classmethod
    def identity(cls):
        return cls(cls._mcl_type())

    def _in_subgroup(self) -> bool:
        # P^(r-1) == P^-1  <=>  P^r == 1
        return self._raw * _FR_ORDER_MINUS_ONE == -self._raw

    def _coords(self) -> list[int]:
        text = str(self._raw).split()
        return [int(t) for t in text[1:]]


class G1Element(_SourceElement):
    __slots__ = ()
    _mcl_type = pymcl.G1
    _size = G1_SIZE

    def to_bytes(self) -> bytes:
        if self.is_identity():
            point = (FQ.one(), FQ.one(), FQ.zero())
        else:
            x, y = self._coords()
            point = (FQ(x), FQ(y), FQ.one())
        return compress_G1(point).to_bytes(G1_SIZE, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> G1Element:
        if len(data) != G1_SIZE:
            raise FormatError(f"G1 element must be {G1_SIZE} bytes, got {len(data)}")
        try:
            point = decompress_G1(int.from_bytes(data, "big"))
        except ValueError as exc:
            raise FormatError(f"invalid G1 encoding: {exc}") from None
        if is_inf(point):
            return cls.identity()
        x, y = normalize(point)
        elem = cls(_load(pymcl.G1, f"1 {x.n} {y.n}"))
        if not elem._in_subgroup():
            raise FormatError("G1 point is outside the prime-order subgroup")
        if elem.to_bytes() != data:
            raise FormatError("non-canonical G1 encoding")
        return elem


def _load(mcl_type, text: str):
    # mcl refuses some inputs py_ecc lets through (e.g. coordinates >= p)
    try:
        return mcl_type(text, 10)
    except RuntimeError as exc:
        raise FormatError(f"invalid {mcl_type.__name__} encoding: {exc}") from None


class G2Element(_SourceElement):
    __slots__ = ()
    _mcl_type = pymcl.G2
    _size = G2_SIZE

    def to_bytes(self) -> bytes:
        if self.is_identity():
            point = (FQ2.one(), FQ2.one(), FQ2.zero())
        else:
            x0, x1, y0, y1 = self._coords()
            point = (FQ2([x0, x1]), FQ2([y0, y1]), FQ2.one())
        z1, z2 = compress_G2(point)
        return z1.to_bytes(48, "big") + z2.to_bytes(48, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> G2Element:
        if len(data) != G2_SIZE:
            raise FormatError(f"G2 element must be {G2_SIZE} bytes, got {len(data)}")
        z = (int.from_bytes(data[:48], "big"), int.from_bytes(data[48:], "big"))
        try:
            point = decompress_G2(z)
        except ValueError as exc:
            raise FormatError(f"invalid G2 encoding: {exc}") from None
        if is_inf(point):
            return cls.identity()
        x, y = normalize(point)
        coords = (*x.coeffs, *y.coeffs)
        elem = cls(_load(pymcl.G2, "1 " + " ".join(str(int(c)) for c in coords)))
        if not elem._in_subgroup():
            raise FormatError("G2 point is outside the prime-order subgroup")
        if elem.to_bytes() != data:
            raise FormatError("non-canonical G2 encoding")
        return elem


class GtElement(_Element):
    __slots__ = ()

    def __mul__(self, other):
        if type(other) is not GtElement:
            return NotImplemented
        return GtElement(self._raw * other._raw)

    def __pow__(self, k: Scalar | int) -> GtElement:
        return GtElement(self._raw ** _fr(k))

    def __invert__(self) -> GtElement:
        return GtElement(~self._raw)

    def is_identity(self) -> bool:
        return self._raw.is_one()

    @classmethod
    def identity(cls) -> GtElement:
        return cls(pymcl.GT(True))

    def to_bytes(self) -> bytes:
        return b"".join(int(c).to_bytes(48, "big") for c in str(self._raw).split())

    @classmethod
    def from_bytes(cls, data: bytes) -> GtElement:
        if len(data) != GT_SIZE:
            raise FormatError(f"GT element must be {GT_SIZE} bytes, got {len(data)}")
        coeffs = [int.from_bytes(data[i:i + 48], "big") for i in range(0, GT_SIZE, 48)]
        for i, c in enumerate(coeffs):
            if c >= FIELD_MODULUS:
                raise FormatError("GT coefficient not reduced", offset=48 * i)
        raw = _load(pymcl.GT, " ".join(map(str, coeffs)))
        if raw.is_zero() or not (raw ** _FR_ORDER_MINUS_ONE) * raw == pymcl.GT(True):
            raise FormatError("GT element is outside the order-r subgroup")
        return cls(raw)


@dataclass(frozen=True)
class GroupParams:
    """Fixed pairing-group configuration shared by every participant."""

    order: int = ORDER
    g1: G1Element = field(default_factory=lambda: G1Element(pymcl.g1))
    g2: G2Element = field(default_factory=lambda: G2Element(pymcl.g2))
    domain_tag: bytes = GID_DOMAIN_TAG
    curve: str = CURVE_NAME

    def to_bytes(self) -> bytes:
        tag = self.domain_tag
        name = self.curve.encode()
        return (
            bytes([len(name)]) + name
            + bytes([len(tag)]) + tag
            + self.order.to_bytes(SCALAR_SIZE, "big")
            + self.g1.to_bytes()
            + self.g2.to_bytes()
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> GroupParams:
        try:
            n = data[0]
            name = data[1:1 + n].decode()
            pos = 1 + n
            t = data[pos]
            tag = data[pos + 1:pos + 1 + t]
            pos += 1 + t
            order = int.from_bytes(data[pos:pos + SCALAR_SIZE], "big")
            pos += SCALAR_SIZE
            g1 = G1Element.from_bytes(data[pos:pos + G1_SIZE])
            pos += G1_SIZE
            g2 = G2Element.from_bytes(data[pos:pos + G2_SIZE])
            pos += G2_SIZE
        except (IndexError, UnicodeDecodeError) as exc:
            raise FormatError(f"truncated group parameters: {exc}") from None
        if pos != len(data):
            raise FormatError("trailing bytes after group parameters", offset=pos)
        if name != CURVE_NAME or order != ORDER:
            raise FormatError(f"unsupported curve {name!r}")
        return cls(order=order, g1=g1, g2=g2, domain_tag=tag, curve=name)


DEFAULT_PARAMS = GroupParams()


def pairing(a: G1Element, b: G2Element) -> GtElement:
    return GtElement(pymcl.pairing(a._raw, b._raw))


@lru_cache(maxsize=4096)
def _hash_cached(gid: bytes, tag: bytes) -> G1Element:
    return G1Element.from_bytes(bytes(blspy.G1Element.from_message(gid, tag)))


def hash_to_g1_reference(gid: bytes, tag: bytes = GID_DOMAIN_TAG) -> G1Element:
    """Pure-Python hash-to-curve; slow, kept as a cross-check for the blst path."""
    x, y = normalize(hash_to_G1(gid, tag, hashlib.sha256))
    return G1Element(pymcl.G1(f"1 {x.n} {y.n}", 10))


def hash_to_g1(gid: bytes | str, params: GroupParams = DEFAULT_PARAMS) -> G1Element:
    """Hash a user identifier into G1 (RFC 9380, BLS12381G1_XMD:SHA-256_SSWU_RO_, via blst).

    The params' domain tag is the DST, so hashes for different deployments
    never collide by construction.
    """
    if isinstance(gid, str):
        gid = gid.encode("utf-8")
    if not gid:
        raise EmptyInputError("cannot hash an empty identifier")
    return _hash_cached(bytes(gid), params.domain_tag)


_system_rng = secrets.SystemRandom()


def random_scalar(rng: RandomSource | None = None) -> Scalar:
    """Uniform scalar in [0, order).

    ``rng`` defaults to the OS CSPRNG; tests pass a seeded ``random.Random``.
    """
    return Scalar((rng or _system_rng).randrange(ORDER))


def random_gt(rng: RandomSource | None = None, params: GroupParams = DEFAULT_PARAMS) -> GtElement:
    return pairing(params.g1, params.g2) ** random_scalar(rng)
