"""Shared helpers for building authority groups and random policies."""

from __future__ import annotations

import random

from duabe.policy import And, Leaf, Or, PolicyAst
from duabe.scheme import (
    aggregate_public_key,
    aggregate_secret_key,
    authority_setup,
    keygen_share,
)


def random_policy(rng: random.Random, max_leaves: int, alphabet: str = "ABCDE") -> PolicyAst:
    n = rng.randint(1, max_leaves)
    nodes: list[PolicyAst] = [Leaf(rng.choice(alphabet)) for _ in range(n)]
    while len(nodes) > 1:
        i = rng.randrange(len(nodes) - 1)
        op = And if rng.random() < 0.5 else Or
        nodes[i:i + 2] = [op(nodes[i], nodes[i + 1])]
    return nodes[0]


class Authorities:
    """Master/public shares for a set of attributes, each with its own members."""

    def __init__(self, gp, groups: dict[str, list[str]], rng: random.Random):
        self.gp = gp
        self.groups = groups
        self.mks = {}
        self.pks = {}
        for attr, members in groups.items():
            pairs = [authority_setup(attr, m, gp, rng) for m in members]
            self.mks[attr] = [mk for mk, _ in pairs]
            self.pks[attr] = [pk for _, pk in pairs]
        self.bulletin = {a: aggregate_public_key(p) for a, p in self.pks.items()}

    def user_key(self, gid: str, attr: str):
        return aggregate_secret_key([keygen_share(gid, mk, self.gp) for mk in self.mks[attr]])

    def user_keys(self, gid: str, attrs) -> dict:
        return {a: self.user_key(gid, a) for a in attrs}
