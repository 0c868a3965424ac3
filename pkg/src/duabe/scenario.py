"""Scenario files for the simulated protocol.

One statement per line, ``#`` starts a comment::

    node alice: House, Budget          # an honest data user and its attributes
    adversary mallory: House           # issues corrupted key shares
    request alice: Budget              # alice requests her Budget key
    request *: *                       # every node keys every held attribute
    encrypt memo: "House" & "Budget"   # seal a payload under a policy
    decrypt *: memo                    # every node tries to open it

``request`` and ``decrypt`` accept a trailing ``expect=ok`` or ``expect=fail``.
Without it, a request is expected to succeed and a decrypt to succeed iff the
node's configured attributes satisfy the policy.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import DuAbeError, PolicyNotSatisfiedError, ScenarioParseError
from .kem import open_sealed, seal
from .policy import PolicyAst, evaluate, parse_policy
from .protocol import NodeConfig, SimulatedNetwork, bootstrap, request_key
from .protocol.node import PHASE_ISSUANCE, PHASE_PARAMS, PHASE_PUBLISH
from .protocol.transport import PhaseCost

_LINE = re.compile(r"^(?P<verb>[a-z-]+)\s+(?P<target>[^:\s]+)\s*:\s*(?P<args>.*)$")
_EXPECT = re.compile(r"\s+expect=(ok|fail)\s*$")


@dataclass
class Action:
    line: int
    verb: str
    target: str
    args: str
    expect: str | None = None


@dataclass
class Scenario:
    nodes: list[NodeConfig] = field(default_factory=list)
    actions: list[Action] = field(default_factory=list)


def parse_scenario(text: str) -> Scenario:
    scenario = Scenario()
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw)
        if not line:
            continue
        expect = None
        m = _EXPECT.search(line)
        if m:
            expect = m.group(1)
            line = line[:m.start()]
        m = _LINE.match(line)
        if m is None:
            raise ScenarioParseError(f"line {lineno}: expected '<verb> <target>: <args>'")
        verb, target, args = m.group("verb"), m.group("target"), m.group("args").strip()
        if verb in ("node", "adversary"):
            if target in seen:
                raise ScenarioParseError(f"line {lineno}: node {target!r} declared twice")
            attrs = [a.strip() for a in args.split(",") if a.strip()]
            if not attrs:
                raise ScenarioParseError(f"line {lineno}: node {target!r} has no attributes")
            seen.add(target)
            scenario.nodes.append(NodeConfig(target, frozenset(attrs), tamper=verb == "adversary"))
        elif verb in ("request", "encrypt", "decrypt"):
            if not args:
                raise ScenarioParseError(f"line {lineno}: {verb} needs an argument")
            if verb != "encrypt" and target != "*" and target not in seen:
                raise ScenarioParseError(f"line {lineno}: unknown node {target!r}")
            if verb == "encrypt":
                try:
                    parse_policy(args)
                except DuAbeError as exc:
                    raise ScenarioParseError(f"line {lineno}: {exc}") from None
            scenario.actions.append(Action(lineno, verb, target, args, expect))
        else:
            raise ScenarioParseError(f"line {lineno}: unknown statement {verb!r}")
    return scenario


def _strip_comment(raw: str) -> str:
    in_quote = False
    for i, ch in enumerate(raw):
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            return raw[:i].strip()
    return raw.strip()


def load_scenario(path_or_name: str) -> Scenario:
    """Read a scenario file, falling back to the bundled ones by name."""
    path = Path(path_or_name)
    if path.exists():
        return parse_scenario(path.read_text())
    bundled = resources.files("duabe") / "scenarios" / f"{path.stem}.scenario"
    if bundled.is_file():
        return parse_scenario(bundled.read_text())
    raise FileNotFoundError(path_or_name)


@dataclass
class ActionResult:
    line: int
    verb: str
    target: str
    detail: str
    outcome: str
    expected: str

    @property
    def passed(self) -> bool:
        return (self.outcome == "ok") == (self.expected == "ok")


@dataclass
class SimulationReport:
    phases: dict[str, PhaseCost] = field(default_factory=dict)
    issuance_by_attribute: dict[str, PhaseCost] = field(default_factory=dict)
    group_sizes: dict[str, int] = field(default_factory=dict)
    results: list[ActionResult] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)


def _describe(exc: Exception) -> str:
    name = type(exc).__name__.removesuffix("Error")
    issuer = getattr(exc, "issuer", None)
    return f"{name}({issuer})" if issuer else name


def run_scenario(scenario: Scenario, rng: random.Random | None = None) -> SimulationReport:
    report = SimulationReport()
    if not scenario.nodes:
        return report
    network = SimulatedNetwork()
    nodes, bulletin = bootstrap(scenario.nodes, network, rng)
    configs = {c.gid: c for c in scenario.nodes}
    report.group_sizes = {a: len(m) for a, m in nodes[scenario.nodes[0].gid].roster.entries.items()}
    sealed: dict[str, tuple[PolicyAst, bytes, bytes]] = {}

    network.set_phase(PHASE_ISSUANCE)
    for action in scenario.actions:
        targets = list(nodes) if action.target == "*" else [action.target]
        if action.verb == "request":
            for gid in targets:
                attrs = (sorted(configs[gid].attributes) if action.args == "*"
                         else [a.strip() for a in action.args.split(",")])
                for attr in attrs:
                    before = network.cost(PHASE_ISSUANCE)
                    before = PhaseCost(before.messages, before.bytes)
                    try:
                        request_key(nodes[gid], attr, network)
                        outcome = "ok"
                    except DuAbeError as exc:
                        outcome = _describe(exc)
                    after = network.cost(PHASE_ISSUANCE)
                    cost = report.issuance_by_attribute.setdefault(attr, PhaseCost())
                    cost.messages += after.messages - before.messages
                    cost.bytes += after.bytes - before.bytes
                    report.results.append(ActionResult(
                        action.line, "request", gid, attr, outcome, action.expect or "ok"))
        elif action.verb == "encrypt":
            ast = parse_policy(action.args)
            payload = f"scenario payload {action.target}".encode()
            try:
                blob = seal(payload, ast, nodes[scenario.nodes[0].gid].gp,
                            bulletin, rng)
                sealed[action.target] = (ast, blob, payload)
                outcome = "ok"
            except DuAbeError as exc:
                outcome = _describe(exc)
            report.results.append(ActionResult(
                action.line, "encrypt", action.target, action.args, outcome, "ok"))
        else:
            label = action.args
            if label not in sealed:
                raise ScenarioParseError(f"line {action.line}: nothing encrypted as {label!r}")
            ast, blob, payload = sealed[label]
            for gid in targets:
                node = nodes[gid]
                expected = action.expect or (
                    "ok" if evaluate(ast, configs[gid].attributes) else "fail")
                try:
                    out = open_sealed(blob, gid, node.keys, node.gp)
                    outcome = "ok" if out == payload else "wrong-payload"
                except PolicyNotSatisfiedError:
                    outcome = "denied"
                except DuAbeError as exc:
                    outcome = _describe(exc)
                report.results.append(ActionResult(
                    action.line, "decrypt", gid, label, outcome, expected))

    report.phases = {p: PhaseCost(**vars(network.cost(p)))
                     for p in (PHASE_PARAMS, PHASE_PUBLISH, PHASE_ISSUANCE)}
    return report
