"""Hybrid sealing of byte payloads under an access policy.

The ABE core encrypts a fresh random GT element K. The payload is
encrypted with AES-256-GCM under SHA-256(b"DU-ABE-v1-KEM" || bytes(K)),
with the sealed file's core bytes (header plus ABE ciphertext) as
associated data, so altering any byte of the file breaks authentication.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, replace
from typing import Mapping

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import (
    DuAbeError,
    FormatError,
    GidMismatchError,
    IncompleteKeyError,
    PayloadAuthFailureError,
    PolicyNotSatisfiedError,
)
from .files import FileKind, decode, decode_envelope, encode_ciphertext
from .group import GtElement, RandomSource, random_gt
from .policy import (
    AccessMatrix,
    PolicyAst,
    compile_policy,
    format_policy,
    parse_policy,
    policy_to_lsss,
)
from .scheme import AttributePublicKey, Ciphertext, GlobalParams, UserSecretKey, decrypt, encrypt

KEM_DOMAIN_TAG = b"DU-ABE-v1-KEM"
NONCE_SIZE = 12


def derive_key(k: GtElement) -> bytes:
    return hashlib.sha256(KEM_DOMAIN_TAG + k.to_bytes()).digest()


@dataclass(frozen=True)
class SealedPayload:
    """ABE core (whose ``payload`` holds the AEAD output) plus the GCM nonce.

    ``policy`` is the canonical policy text; when present, readers insist it
    compiles to exactly the stored matrix, so a damaged matrix is caught as
    a format error instead of posing as an unsatisfied policy.
    """

    core: Ciphertext
    nonce: bytes
    policy: str | None = None

    def core_bytes(self) -> bytes:
        bare = replace(self.core, payload=None)
        meta = {"nonce": self.nonce.hex()}
        if self.policy is not None:
            meta["policy"] = self.policy
        return encode_ciphertext(bare, meta)

    def to_bytes(self) -> bytes:
        return self.core_bytes() + (self.core.payload or b"")

    @classmethod
    def from_bytes(cls, data: bytes) -> SealedPayload:
        env = decode_envelope(data)
        if env.kind is not FileKind.SEALED:
            raise FormatError(f"not a sealed payload ({env.kind.label})")
        try:
            nonce = bytes.fromhex(env.meta["nonce"])
        except (KeyError, TypeError, ValueError):
            raise FormatError("missing or unreadable nonce") from None
        if len(nonce) != NONCE_SIZE:
            raise FormatError("bad nonce length")
        core = decode(data, FileKind.SEALED)
        policy = env.meta.get("policy")
        if policy is not None:
            try:
                compiled = compile_policy(policy)
            except DuAbeError as exc:
                raise FormatError(f"unreadable policy text: {exc}") from None
            if compiled != core.matrix:
                raise FormatError("policy text does not match the access matrix")
        return cls(core, nonce, policy)


def seal(
    payload: bytes,
    policy: AccessMatrix | PolicyAst | str,
    gp: GlobalParams,
    pks: Mapping[str, AttributePublicKey],
    rng: RandomSource | None = None,
) -> bytes:
    """Encrypt ``payload`` for everyone whose attributes satisfy ``policy``.

    Given policy text or a tree, the canonical text is stored alongside the
    matrix; given a bare matrix, only the matrix is stored.
    """
    if isinstance(policy, AccessMatrix):
        matrix, text = policy, None
    else:
        ast = parse_policy(policy) if isinstance(policy, str) else policy
        matrix, text = policy_to_lsss(ast), format_policy(ast)
    k = random_gt(rng, gp.group)
    core = encrypt(k, matrix, gp, pks, rng)
    if rng is None:
        nonce = os.urandom(NONCE_SIZE)
    else:
        nonce = rng.randrange(1 << (8 * NONCE_SIZE)).to_bytes(NONCE_SIZE, "big")
    sealed = SealedPayload(core, nonce, text)
    aad = sealed.core_bytes()
    dem = AESGCM(derive_key(k)).encrypt(nonce, payload, aad)
    return replace(sealed, core=replace(core, payload=dem)).to_bytes()


def open_sealed(
    data: bytes, gid: str, keys: Mapping[str, UserSecretKey], gp: GlobalParams
) -> bytes:
    """Recover the payload or raise; nothing partial is ever returned.

    Structural damage to the file surfaces as PayloadAuthFailureError, as
    does any key/ciphertext inconsistency the AEAD tag would reject anyway.
    """
    try:
        sealed = SealedPayload.from_bytes(data)
    except (FormatError, ValueError, TypeError, AttributeError) as exc:
        raise PayloadAuthFailureError(f"sealed payload is malformed: {exc}") from None

    try:
        k = decrypt(sealed.core, gid, keys, gp)
    except (PolicyNotSatisfiedError, GidMismatchError):
        raise
    except IncompleteKeyError as exc:
        raise PayloadAuthFailureError(str(exc)) from None

    # authenticate exactly the bytes that were read, not a re-encoding
    core_len = len(data) - len(sealed.core.payload or b"")
    try:
        return AESGCM(derive_key(k)).decrypt(sealed.nonce, data[core_len:], data[:core_len])
    except InvalidTag:
        raise PayloadAuthFailureError("payload authentication failed") from None
