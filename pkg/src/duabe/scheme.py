"""The DU-ABE algorithms: global setup, per-user authority setup, key-share
issuance and aggregation, LSSS encryption and decryption.

Group placement (asymmetric translation of the symmetric-pairing scheme):
master-key-derived key material and H(GID) live in G1, the per-attribute
``g^beta`` public component and the ciphertext's C2/C3 in G2, blinding
factors in GT.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import (
    DuplicateHolderError,
    DuplicateIssuerError,
    EmptyGidError,
    EmptyShareListError,
    GidMismatchError,
    IncompleteKeyError,
    MissingAttributeKeyError,
    MixedAttributesError,
    MixedGidsError,
    UnsupportedSecurityLevelError,
)
from .group import (
    DEFAULT_PARAMS,
    G1Element,
    G2Element,
    GroupParams,
    GtElement,
    RandomSource,
    Scalar,
    hash_to_g1,
    pairing,
    random_scalar,
)
from .policy import AccessMatrix, find_reconstruction

log = logging.getLogger(__name__)

SUPPORTED_SECURITY_LEVELS = (128,)


@dataclass(frozen=True)
class GlobalParams:
    group: GroupParams
    security_level: int = 128

    def __post_init__(self):
        if self.security_level not in SUPPORTED_SECURITY_LEVELS:
            raise UnsupportedSecurityLevelError(
                f"security level {self.security_level} not supported; "
                f"choose one of {SUPPORTED_SECURITY_LEVELS}"
            )

    @property
    def g1(self) -> G1Element:
        return self.group.g1

    @property
    def g2(self) -> G2Element:
        return self.group.g2

    def egg(self) -> GtElement:
        return _base_pairing(self.group)

    def to_bytes(self) -> bytes:
        return self.security_level.to_bytes(2, "big") + self.group.to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> GlobalParams:
        level = int.from_bytes(data[:2], "big")
        return cls(GroupParams.from_bytes(data[2:]), level)

    def digest(self) -> bytes:
        return hashlib.sha256(self.to_bytes()).digest()


_egg_cache: dict[bytes, GtElement] = {}


def _base_pairing(group: GroupParams) -> GtElement:
    key = group.to_bytes()
    if key not in _egg_cache:
        _egg_cache[key] = pairing(group.g1, group.g2)
    return _egg_cache[key]


def global_setup(security_level: int = 128, rng: RandomSource | None = None) -> GlobalParams:
    """Published parameters GP = {g1, g2, H}.

    Generators are the curve's standard ones, so every user computes the same
    GP without exchanging randomness; ``rng`` is accepted for interface
    symmetry and unused.
    """
    return GlobalParams(DEFAULT_PARAMS, security_level)


@dataclass(frozen=True)
class MasterKeyShare:
    attribute: str
    holder: str
    alpha: Scalar = field(repr=False)
    beta: Scalar = field(repr=False)

    def __repr__(self) -> str:
        return f"MasterKeyShare(attribute={self.attribute!r}, holder={self.holder!r}, <redacted>)"


@dataclass(frozen=True)
class PublicKeyShare:
    attribute: str
    holder: str
    e_alpha: GtElement
    g_beta: G2Element


@dataclass(frozen=True)
class AttributePublicKey:
    attribute: str
    e_alpha_sum: GtElement
    g_beta_sum: G2Element
    contributor_count: int


@dataclass(frozen=True)
class KeyShare:
    attribute: str
    gid: str
    issuer: str
    value: G1Element


@dataclass(frozen=True)
class UserSecretKey:
    gid: str
    attribute: str
    value: G1Element
    share_count: int


@dataclass(frozen=True)
class CiphertextRow:
    c1: GtElement
    c2: G2Element
    c3: G2Element


@dataclass(frozen=True)
class Ciphertext:
    """``contributors`` records each attribute's group size at encryption time."""

    matrix: AccessMatrix
    c0: GtElement
    rows: tuple[CiphertextRow, ...]
    contributors: Mapping[str, int]
    payload: bytes | None = None


def authority_setup(
    attribute: str, holder: str, gp: GlobalParams, rng: RandomSource | None = None
) -> tuple[MasterKeyShare, PublicKeyShare]:
    if not attribute:
        raise ValueError("attribute name must be non-empty")
    alpha = random_scalar(rng)
    beta = random_scalar(rng)
    return keypair_from_exponents(attribute, holder, alpha, beta, gp)


def keypair_from_exponents(
    attribute: str, holder: str, alpha: Scalar, beta: Scalar, gp: GlobalParams
) -> tuple[MasterKeyShare, PublicKeyShare]:
    if alpha == 0 or beta == 0:
        log.warning("zero exponent in master key share for %s/%s", attribute, holder)
    mk = MasterKeyShare(attribute, holder, alpha, beta)
    pk = PublicKeyShare(attribute, holder, gp.egg() ** alpha, gp.g2 ** beta)
    return mk, pk


def aggregate_public_key(shares: Sequence[PublicKeyShare]) -> AttributePublicKey:
    if not shares:
        raise EmptyShareListError("need at least one public key share")
    attrs = {s.attribute for s in shares}
    if len(attrs) > 1:
        raise MixedAttributesError(f"shares span attributes {sorted(attrs)}")
    holders = [s.holder for s in shares]
    if len(set(holders)) != len(holders):
        raise DuplicateHolderError(f"duplicate holder among {sorted(holders)}")
    e_alpha = shares[0].e_alpha
    g_beta = shares[0].g_beta
    for s in shares[1:]:
        e_alpha = e_alpha * s.e_alpha
        g_beta = g_beta * s.g_beta
    return AttributePublicKey(attrs.pop(), e_alpha, g_beta, len(shares))


def keygen_share(gid: str, issuer_mk: MasterKeyShare, gp: GlobalParams) -> KeyShare:
    """One issuer's contribution g1^alpha * H(gid)^beta to a user's key."""
    if not gid:
        raise EmptyGidError("gid must be non-empty")
    value = (gp.g1 ** issuer_mk.alpha) * (hash_to_g1(gid, gp.group) ** issuer_mk.beta)
    return KeyShare(issuer_mk.attribute, gid, issuer_mk.holder, value)


def verify_key_share(share: KeyShare, issuer_pk: PublicKeyShare, gp: GlobalParams) -> bool:
    """e(share, g2) == e_alpha * e(H(gid), g_beta)."""
    if share.attribute != issuer_pk.attribute or share.issuer != issuer_pk.holder:
        return False
    lhs = pairing(share.value, gp.g2)
    rhs = issuer_pk.e_alpha * pairing(hash_to_g1(share.gid, gp.group), issuer_pk.g_beta)
    return lhs == rhs


def aggregate_secret_key(shares: Sequence[KeyShare]) -> UserSecretKey:
    if not shares:
        raise EmptyShareListError("need at least one key share")
    attrs = {s.attribute for s in shares}
    if len(attrs) > 1:
        raise MixedAttributesError(f"shares span attributes {sorted(attrs)}")
    gids = {s.gid for s in shares}
    if len(gids) > 1:
        raise MixedGidsError(f"shares issued to different users {sorted(gids)}")
    issuers = [s.issuer for s in shares]
    if len(set(issuers)) != len(issuers):
        raise DuplicateIssuerError(f"duplicate issuer among {sorted(issuers)}")
    value = shares[0].value
    for s in shares[1:]:
        value = value * s.value
    return UserSecretKey(gids.pop(), attrs.pop(), value, len(shares))


def _inner(row: Sequence[int], vec: Sequence[Scalar]) -> Scalar:
    acc = Scalar(0)
    for a, v in zip(row, vec):
        if a:
            acc = acc + v * a
    return acc


def encrypt(
    message: GtElement,
    matrix: AccessMatrix,
    gp: GlobalParams,
    pks: Mapping[str, AttributePublicKey],
    rng: RandomSource | None = None,
) -> Ciphertext:
    for attr in matrix.rho:
        if attr not in pks:
            raise MissingAttributeKeyError(attr)
    width = matrix.width
    # draw order is fixed so seeded runs are reproducible: s, v-tail, w-tail, r_x
    s = random_scalar(rng)
    v = [s] + [random_scalar(rng) for _ in range(width - 1)]
    w = [Scalar(0)] + [random_scalar(rng) for _ in range(width - 1)]

    egg = gp.egg()
    rows = []
    for row, attr in zip(matrix.rows, matrix.rho):
        pk = pks[attr]
        lam = _inner(row, v)
        omega = _inner(row, w)
        r = random_scalar(rng)
        rows.append(CiphertextRow(
            c1=(egg ** lam) * (pk.e_alpha_sum ** r),
            c2=gp.g2 ** r,
            c3=(pk.g_beta_sum ** r) * (gp.g2 ** omega),
        ))
    contributors = {a: pks[a].contributor_count for a in sorted(set(matrix.rho))}
    return Ciphertext(matrix, message * (egg ** s), tuple(rows), contributors)


def decrypt(
    ct: Ciphertext,
    gid: str,
    keys: Mapping[str, UserSecretKey],
    gp: GlobalParams,
) -> GtElement:
    """Recover the GT message, or raise when the keys do not satisfy the policy.

    Keys must all belong to ``gid``; mixing keys of different users is
    rejected before any pairing is computed.
    """
    foreign = sorted({k.gid for k in keys.values() if k.gid != gid})
    if foreign:
        raise GidMismatchError(f"keys for {foreign} cannot be used by {gid!r}")
    for attr, key in keys.items():
        if key.attribute != attr:
            raise MixedAttributesError(f"key for {key.attribute!r} filed under {attr!r}")
    return _recover(ct, gid, keys, gp)


def _recover(
    ct: Ciphertext, gid: str, keys: Mapping[str, UserSecretKey], gp: GlobalParams
) -> GtElement:
    # no gid guard here; the collusion tests call this directly
    plan = find_reconstruction(ct.matrix, keys.keys())
    h = hash_to_g1(gid, gp.group)
    blinding = GtElement.identity()
    for x, coeff in plan.coeffs.items():
        attr = ct.matrix.rho[x]
        key = keys[attr]
        expected = ct.contributors.get(attr)
        if expected is not None and key.share_count != expected:
            raise IncompleteKeyError(
                f"key for {attr!r} aggregates {key.share_count} shares, "
                f"the authority group has {expected}"
            )
        row = ct.rows[x]
        d = row.c1 * pairing(h, row.c3) / pairing(key.value, row.c2)
        blinding = blinding * (d ** coeff)
    return ct.c0 / blinding


def held_attributes(keys: Iterable[UserSecretKey]) -> dict[str, UserSecretKey]:
    return {k.attribute: k for k in keys}
