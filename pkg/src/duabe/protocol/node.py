"""Data-user nodes and the bootstrap / key-issuance choreography.

Every node is single-threaded over its own state and talks to the others
only through encoded ``ProtocolMessage`` bytes on its endpoint.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import secrets
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..errors import (
    DuAbeError,
    FormatError,
    KeyRequestRejectedError,
    KeyRequestTimeoutError,
    NotAMemberError,
    ParamsDisagreementError,
    ShareVerificationFailedError,
    TransportFailureError,
    UnsupportedSecurityLevelError,
)
from ..group import G1Element
from ..scheme import (
    AttributePublicKey,
    GlobalParams,
    KeyShare,
    MasterKeyShare,
    PublicKeyShare,
    UserSecretKey,
    aggregate_public_key,
    aggregate_secret_key,
    authority_setup,
    global_setup,
    keygen_share,
    verify_key_share,
)
from .messages import MSG_ID_SIZE, Kind, ProtocolMessage, RejectReason
from .transport import Endpoint, PhaseCost, SimulatedNetwork

log = logging.getLogger(__name__)

DEFAULT_DEADLINE = 8  # ticks

PHASE_PARAMS = "params"
PHASE_PUBLISH = "pk-publish"
PHASE_ISSUANCE = "issuance"


@dataclass(frozen=True)
class NodeConfig:
    gid: str
    attributes: frozenset[str]
    security_level: int = 128
    tamper: bool = False  # adversarial: corrupts every key share it issues

    def __post_init__(self):
        object.__setattr__(self, "attributes", frozenset(self.attributes))
        if not self.gid:
            raise ValueError("node gid must be non-empty")


@dataclass(frozen=True)
class Roster:
    entries: Mapping[str, frozenset[str]]
    gp_digest: bytes

    @classmethod
    def from_configs(cls, configs: Iterable[NodeConfig], gp_digest: bytes) -> Roster:
        entries: dict[str, set[str]] = {}
        for cfg in configs:
            for attr in cfg.attributes:
                entries.setdefault(attr, set()).add(cfg.gid)
        return cls({a: frozenset(m) for a, m in sorted(entries.items())}, gp_digest)

    def members(self, attribute: str) -> frozenset[str]:
        return self.entries.get(attribute, frozenset())

    def digest(self) -> bytes:
        canon = json.dumps(
            {"entries": {a: sorted(m) for a, m in self.entries.items()},
             "gp": self.gp_digest.hex()},
            sort_keys=True, separators=(",", ":"),
        )
        return hashlib.sha256(canon.encode()).digest()


class DuNode:
    """One data user: authority for its own attributes, requester for its keys."""

    def __init__(self, config: NodeConfig, endpoint: Endpoint, rng=None):
        self.config = config
        self.gid = config.gid
        self.attributes = config.attributes
        self.endpoint = endpoint
        self.rng = rng or secrets.SystemRandom()
        self.gp: GlobalParams | None = None
        self.roster: Roster | None = None
        self.master_shares: dict[str, MasterKeyShare] = {}
        self.public_shares: dict[tuple[str, str], PublicKeyShare] = {}
        self.keys: dict[str, UserSecretKey] = {}
        self.replies: dict[bytes, ProtocolMessage] = {}
        self.rejected_inbound: list[str] = []

    def __repr__(self) -> str:
        return f"DuNode({self.gid!r}, attributes={sorted(self.attributes)})"

    def new_msg_id(self) -> bytes:
        return self.rng.randrange(1 << (8 * MSG_ID_SIZE)).to_bytes(MSG_ID_SIZE, "big")

    def send(self, to: str, kind: Kind, **body) -> ProtocolMessage:
        msg = ProtocolMessage(kind, self.gid, self.new_msg_id(), body)
        self.endpoint.send(to, msg.encode())
        return msg

    def poll(self) -> None:
        while (item := self.endpoint.receive()) is not None:
            sender, data = item
            try:
                msg = ProtocolMessage.decode(data)
            except (FormatError, ValueError) as exc:
                log.warning("%s dropped malformed message from %s: %s", self.gid, sender, exc)
                self.rejected_inbound.append(sender)
                continue
            self._dispatch(msg)

    def _dispatch(self, msg: ProtocolMessage) -> None:
        if msg.kind is Kind.KEY_REQUEST:
            reply = handle_key_request(self, msg)
            if self.config.tamper and reply.kind is Kind.KEY_SHARE_RESPONSE:
                reply = _tampered(reply, self.gp)
            self.endpoint.send(msg.sender, reply.encode())
        elif msg.kind is Kind.PARAMS_PROPOSAL:
            self._on_proposal(msg)
        elif msg.kind is Kind.PK_SHARE_PUBLISH:
            share = PublicKeyShare(msg["attribute"], msg.sender, msg["e_alpha"], msg["g_beta"])
            self.public_shares[(share.attribute, share.holder)] = share
        else:
            self.replies[msg["ref"]] = msg

    def _on_proposal(self, msg: ProtocolMessage) -> None:
        try:
            local = global_setup(self.config.security_level)
        except UnsupportedSecurityLevelError as exc:
            self.send(msg.sender, Kind.REJECT, ref=msg.msg_id,
                      reason=RejectReason.PARAMS_UNSUPPORTED.value, detail=str(exc))
            return
        try:
            proposed = GlobalParams.from_bytes(msg["params"])
        except DuAbeError as exc:
            self.send(msg.sender, Kind.REJECT, ref=msg.msg_id,
                      reason=RejectReason.MALFORMED.value, detail=str(exc))
            return
        if proposed.digest() == local.digest():
            self.gp = proposed
        self.send(msg.sender, Kind.PARAMS_ACK, ref=msg.msg_id, digest=local.digest())

    def publish_shares(self, peers: Iterable[str]) -> None:
        assert self.gp is not None
        for attr in sorted(self.attributes):
            mk, pk = authority_setup(attr, self.gid, self.gp, self.rng)
            self.master_shares[attr] = mk
            self.public_shares[(attr, self.gid)] = pk
            for peer in peers:
                if peer != self.gid:
                    self.send(peer, Kind.PK_SHARE_PUBLISH,
                              attribute=attr, e_alpha=pk.e_alpha, g_beta=pk.g_beta)

    def bulletin(self) -> dict[str, AttributePublicKey]:
        assert self.roster is not None
        out = {}
        for attr, members in self.roster.entries.items():
            shares = [self.public_shares.get((attr, m)) for m in sorted(members)]
            if None in shares:
                missing = [m for m, s in zip(sorted(members), shares) if s is None]
                raise TransportFailureError(self.gid, f"missing {attr!r} shares from {missing}")
            out[attr] = aggregate_public_key(shares)
        return out


def _tampered(reply: ProtocolMessage, gp: GlobalParams) -> ProtocolMessage:
    value = G1Element.from_bytes(reply["share"]) * gp.g1
    body = dict(reply.body, share=value.to_bytes())
    return ProtocolMessage(reply.kind, reply.sender, reply.msg_id, body)


def handle_key_request(node: DuNode, req: ProtocolMessage) -> ProtocolMessage:
    """Answer one KeyRequest with a key share, or a Reject carrying the reason."""
    if req.kind is not Kind.KEY_REQUEST:
        raise ValueError(f"expected a KEY_REQUEST, got {req.kind.name}")
    attr = req["attribute"]
    msg_id = node.new_msg_id()
    mk = node.master_shares.get(attr)
    if mk is None or node.gp is None:
        return ProtocolMessage(Kind.REJECT, node.gid, msg_id, {
            "ref": req.msg_id, "reason": RejectReason.NOT_AUTHORITY.value,
            "detail": f"{node.gid} holds no master share for {attr!r}"})
    if node.roster is None or req.sender not in node.roster.members(attr):
        return ProtocolMessage(Kind.REJECT, node.gid, msg_id, {
            "ref": req.msg_id, "reason": RejectReason.NOT_ELIGIBLE.value,
            "detail": f"{req.sender!r} is not rostered for {attr!r}"})
    share = keygen_share(req.sender, mk, node.gp)
    return ProtocolMessage(Kind.KEY_SHARE_RESPONSE, node.gid, msg_id, {
        "ref": req.msg_id, "attribute": attr, "gid": req.sender,
        "share": share.value.to_bytes()})


def _await(network: SimulatedNetwork, node: DuNode, refs: Iterable[bytes], deadline: int):
    refs = list(refs)
    for _ in range(deadline):
        if all(r in node.replies for r in refs):
            break
        network.step()
    return {r: node.replies.pop(r) for r in refs if r in node.replies}


def bootstrap(
    configs: list[NodeConfig],
    network: SimulatedNetwork,
    rng=None,
    deadline: int = DEFAULT_DEADLINE,
) -> tuple[dict[str, DuNode], dict[str, AttributePublicKey]]:
    """Agree on parameters, run authority setup everywhere, publish PK shares.

    Returns the nodes by gid and the public bulletin of aggregated attribute
    keys. ``rng`` seeds per-node generators for reproducible runs.
    """
    if not configs:
        raise ValueError("bootstrap needs at least one node")
    gids = [c.gid for c in configs]
    if len(set(gids)) != len(gids):
        raise ValueError("node gids must be unique")

    nodes: dict[str, DuNode] = {}
    for cfg in configs:
        node_rng = random.Random(rng.getrandbits(64)) if rng is not None else None
        node = DuNode(cfg, network.endpoint(cfg.gid), node_rng)
        network.attach(node)
        nodes[cfg.gid] = node

    # one-round propose / ack: the first node proposes its parameters
    network.set_phase(PHASE_PARAMS)
    proposer = nodes[gids[0]]
    gp = global_setup(proposer.config.security_level)
    proposer.gp = gp
    refs = {gid: proposer.send(gid, Kind.PARAMS_PROPOSAL, params=gp.to_bytes()).msg_id
            for gid in gids[1:]}
    replies = _await(network, proposer, refs.values(), deadline)
    for gid, ref in refs.items():
        reply = replies.get(ref)
        if reply is None:
            raise TransportFailureError(gid, "no answer to the parameter proposal")
        if reply.kind is Kind.REJECT:
            raise ParamsDisagreementError(f"{gid} rejected the parameters: {reply['detail']}")
        if reply["digest"] != gp.digest():
            raise ParamsDisagreementError(f"{gid} acknowledged a different parameter digest")

    roster = Roster.from_configs(configs, gp.digest())
    for node in nodes.values():
        node.roster = roster

    network.set_phase(PHASE_PUBLISH)
    for node in nodes.values():
        node.publish_shares(gids)
    for _ in range(deadline):
        if not network.pending():
            break
        network.step()

    bulletins = {gid: node.bulletin() for gid, node in nodes.items()}
    reference = bulletins[gids[0]]
    for gid, b in bulletins.items():
        if b != reference:
            raise ParamsDisagreementError(f"{gid} assembled a different public bulletin")
    return nodes, reference


def request_key(
    requester: DuNode,
    attribute: str,
    network: SimulatedNetwork,
    deadline: int = DEFAULT_DEADLINE,
) -> UserSecretKey:
    """Collect one key share from every member of the attribute's group.

    The requester's own share is computed locally; each remote share is
    checked against the issuer's published PK share before aggregation.
    """
    gp = requester.gp
    roster = requester.roster
    if gp is None or roster is None:
        raise NotAMemberError(f"{requester.gid} has not been bootstrapped")
    members = roster.members(attribute)
    if requester.gid not in members or attribute not in requester.master_shares:
        raise NotAMemberError(f"{requester.gid!r} is not in the {attribute!r} group")

    peers = sorted(members - {requester.gid})
    refs = {peer: requester.send(peer, Kind.KEY_REQUEST, attribute=attribute).msg_id
            for peer in peers}
    shares = [keygen_share(requester.gid, requester.master_shares[attribute], gp)]

    replies = _await(network, requester, refs.values(), deadline)
    missing = [peer for peer, ref in refs.items() if ref not in replies]
    if missing:
        raise KeyRequestTimeoutError(missing)

    for peer, ref in refs.items():
        reply = replies[ref]
        if reply.sender != peer:
            raise ShareVerificationFailedError(peer, f"answered by {reply.sender!r}")
        if reply.kind is Kind.REJECT:
            raise KeyRequestRejectedError(peer, reply["reason"])
        if reply["attribute"] != attribute or reply["gid"] != requester.gid:
            raise ShareVerificationFailedError(peer, "share bound to the wrong attribute or gid")
        try:
            value = G1Element.from_bytes(reply["share"])
        except FormatError as exc:
            raise ShareVerificationFailedError(peer, f"undecodable share: {exc}") from None
        share = KeyShare(attribute, requester.gid, peer, value)
        pk = requester.public_shares.get((attribute, peer))
        if pk is None or not verify_key_share(share, pk, gp):
            raise ShareVerificationFailedError(peer)
        shares.append(share)

    key = aggregate_secret_key(shares)
    requester.keys[attribute] = key
    return key


def issue_all_keys(
    nodes: Mapping[str, DuNode], network: SimulatedNetwork
) -> dict[str, dict[str, UserSecretKey]]:
    """Every node requests a key for every attribute it holds."""
    network.set_phase(PHASE_ISSUANCE)
    keys: dict[str, dict[str, UserSecretKey]] = {}
    for gid, node in nodes.items():
        for attr in sorted(node.attributes):
            keys.setdefault(gid, {})[attr] = request_key(node, attr, network)
    return keys


@dataclass
class CostReport:
    phases: dict[str, PhaseCost]
    issuance_by_attribute: dict[str, PhaseCost] = field(default_factory=dict)
    group_sizes: dict[str, int] = field(default_factory=dict)

    @property
    def issuance_messages(self) -> int:
        return self.phases.get(PHASE_ISSUANCE, PhaseCost()).messages


def measure_bootstrap_cost(
    configs: list[NodeConfig], network: SimulatedNetwork, rng=None
) -> CostReport:
    """Run bootstrap plus all-pairs key issuance and report per-phase traffic."""
    nodes, _ = bootstrap(configs, network, rng)
    roster = next(iter(nodes.values())).roster
    network.set_phase(PHASE_ISSUANCE)
    by_attr: dict[str, PhaseCost] = {}
    for attr in roster.entries:
        before = PhaseCost(**vars(network.cost(PHASE_ISSUANCE)))
        for gid in sorted(roster.members(attr)):
            request_key(nodes[gid], attr, network)
        after = network.cost(PHASE_ISSUANCE)
        by_attr[attr] = PhaseCost(after.messages - before.messages, after.bytes - before.bytes)
    phases = {p: PhaseCost(**vars(network.cost(p)))
              for p in (PHASE_PARAMS, PHASE_PUBLISH, PHASE_ISSUANCE)}
    sizes = {a: len(m) for a, m in roster.entries.items()}
    return CostReport(phases, by_attr, sizes)
