"""Access policies: parsing, compilation to LSSS matrices, reconstruction.

Surface grammar (AND binds tighter than OR; keywords are case-insensitive)::

    policy  := or_expr EOF
    or_expr := and_expr { ("OR" | "|" | "||") and_expr }
    and_expr:= atom { ("AND" | "&" | "&&") atom }
    atom    := IDENT | QUOTED | "(" or_expr ")"
    IDENT   := [A-Za-z0-9_.:@/-]+      (not a keyword)
    QUOTED  := '"' { any char except '"' } '"'

Chains are left-folded into binary nodes.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from typing import Iterable, Union

from .errors import (
    EmptyPolicyError,
    FormatError,
    PolicyNotSatisfiedError,
    PolicySyntaxError,
    UniverseTooLargeError,
)
from .group import ORDER


@dataclass(frozen=True)
class Leaf:
    name: str


@dataclass(frozen=True)
class And:
    left: "PolicyAst"
    right: "PolicyAst"


@dataclass(frozen=True)
class Or:
    left: "PolicyAst"
    right: "PolicyAst"


PolicyAst = Union[Leaf, And, Or]


# -- parsing ----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<and>&&?)
  | (?P<or>\|\|?)
  | (?P<quoted>"[^"]*")
  | (?P<word>[A-Za-z0-9_.:@/\-]+)
    """,
    re.VERBOSE,
)
_KEYWORDS = {"and": "and", "or": "or"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos] == '"':
                raise PolicySyntaxError(pos, "closing quote", text[pos:])
            raise PolicySyntaxError(pos, "attribute, operator or parenthesis", text[pos])
        kind = m.lastgroup
        value = m.group()
        if kind == "word" and value.lower() in _KEYWORDS:
            kind = _KEYWORDS[value.lower()]
        if kind != "ws":
            tokens.append((kind, value, pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def parse(self) -> PolicyAst:
        node = self.or_expr()
        kind, value, pos = self.peek()
        if kind != "eof":
            raise PolicySyntaxError(pos, "AND, OR or end of input", value)
        return node

    def or_expr(self) -> PolicyAst:
        node = self.and_expr()
        while self.peek()[0] == "or":
            self.take()
            node = Or(node, self.and_expr())
        return node

    def and_expr(self) -> PolicyAst:
        node = self.atom()
        while self.peek()[0] == "and":
            self.take()
            node = And(node, self.atom())
        return node

    def atom(self) -> PolicyAst:
        kind, value, pos = self.take()
        if kind == "lparen":
            node = self.or_expr()
            kind, value, pos = self.take()
            if kind != "rparen":
                raise PolicySyntaxError(pos, "')'", value)
            return node
        if kind == "word":
            return Leaf(value)
        if kind == "quoted":
            name = value[1:-1].strip()
            if not name:
                raise PolicySyntaxError(pos, "non-empty attribute name", value)
            return Leaf(name)
        raise PolicySyntaxError(pos, "attribute or '('", value)


def parse_policy(text: str) -> PolicyAst:
    if not text or not text.strip():
        raise EmptyPolicyError("policy text is blank")
    return _Parser(text).parse()


_PLAIN = re.compile(r"[A-Za-z0-9_.:@/\-]+")


def _render_name(name: str) -> str:
    if _PLAIN.fullmatch(name) and name.lower() not in _KEYWORDS:
        return name
    return f'"{name}"'


def format_policy(ast: PolicyAst) -> str:
    """Render an AST so that ``parse_policy(format_policy(a)) == a``."""
    if isinstance(ast, Leaf):
        return _render_name(ast.name)
    op = " & " if isinstance(ast, And) else " | "
    left = format_policy(ast.left)
    right = format_policy(ast.right)
    # left-folding means a same-operator right child needs explicit grouping
    if isinstance(ast, And) and isinstance(ast.left, Or):
        left = f"({left})"
    if not isinstance(ast.right, Leaf) and (isinstance(ast, And) or type(ast.right) is Or):
        right = f"({right})"
    return left + op + right


def leaves(ast: PolicyAst) -> list[str]:
    if isinstance(ast, Leaf):
        return [ast.name]
    return leaves(ast.left) + leaves(ast.right)


def evaluate(ast: PolicyAst, held: Iterable[str]) -> bool:
    """Direct boolean evaluation; the ground truth the LSSS must agree with."""
    held = set(held)
    if isinstance(ast, Leaf):
        return ast.name in held
    if isinstance(ast, And):
        return evaluate(ast.left, held) and evaluate(ast.right, held)
    return evaluate(ast.left, held) or evaluate(ast.right, held)


# -- LSSS -------------------------------------------------------------------

@dataclass(frozen=True)
class AccessMatrix:
    """LSSS matrix (A, rho). Entries are integers interpreted modulo the group order."""

    rows: tuple[tuple[int, ...], ...]
    rho: tuple[str, ...]

    def __post_init__(self):
        if not self.rows:
            raise ValueError("access matrix needs at least one row")
        if len(self.rho) != len(self.rows):
            raise ValueError("rho must label every row exactly once")
        width = len(self.rows[0])
        if width == 0 or any(len(r) != width for r in self.rows):
            raise ValueError("all rows must have the same non-zero width")

    @property
    def width(self) -> int:
        return len(self.rows[0])

    def attributes(self) -> set[str]:
        return set(self.rho)

    def to_json_obj(self) -> dict:
        return {
            "rows": [[str(v) for v in row] for row in self.rows],
            "rho": list(self.rho),
            "width": self.width,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2)

    @classmethod
    def from_json_obj(cls, obj: dict) -> AccessMatrix:
        try:
            rows = tuple(tuple(int(v) for v in row) for row in obj["rows"])
            rho = tuple(str(a) for a in obj["rho"])
            m = cls(rows, rho)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad access matrix: {exc}") from None
        if obj.get("width", m.width) != m.width:
            raise FormatError("access matrix width does not match its rows")
        return m


def policy_to_lsss(ast: PolicyAst) -> AccessMatrix:
    """Lewko-Waters conversion of an AND/OR tree into an LSSS matrix.

    The root carries (1). An OR passes its vector to both children. An AND
    pads its vector to the current counter c, hands v||1 to the left child
    and (0,...,0,-1) to the right, then bumps c.
    """
    labelled: list[tuple[list[int], str]] = []
    counter = 1

    def walk(node: PolicyAst, vec: list[int]) -> None:
        nonlocal counter
        if isinstance(node, Leaf):
            labelled.append((vec, node.name))
        elif isinstance(node, Or):
            walk(node.left, vec)
            walk(node.right, vec)
        else:
            padded = vec + [0] * (counter - len(vec))
            counter += 1
            # both child vectors are fixed before the left subtree bumps c again
            right = [0] * (counter - 1) + [-1]
            walk(node.left, padded + [1])
            walk(node.right, right)

    walk(ast, [1])
    rows = tuple(tuple(v + [0] * (counter - len(v))) for v, _ in labelled)
    return AccessMatrix(rows, tuple(name for _, name in labelled))


def compile_policy(text: str) -> AccessMatrix:
    return policy_to_lsss(parse_policy(text))


def _solve(columns: list[list[int]], target: list[int]) -> list[int] | None:
    """Solve sum_j c_j * columns[j] = target over Z_r; free variables -> 0."""
    n_vars = len(columns)
    n_eq = len(target)
    aug = [[columns[j][i] % ORDER for j in range(n_vars)] + [target[i] % ORDER]
           for i in range(n_eq)]
    pivots: list[int] = []
    row = 0
    for col in range(n_vars):
        sel = next((r for r in range(row, n_eq) if aug[r][col]), None)
        if sel is None:
            continue
        aug[row], aug[sel] = aug[sel], aug[row]
        inv = pow(aug[row][col], -1, ORDER)
        aug[row] = [v * inv % ORDER for v in aug[row]]
        for r in range(n_eq):
            if r != row and aug[r][col]:
                f = aug[r][col]
                aug[r] = [(a - f * b) % ORDER for a, b in zip(aug[r], aug[row])]
        pivots.append(col)
        row += 1
        if row == n_eq:
            break
    if any(all(v == 0 for v in aug[r][:n_vars]) and aug[r][n_vars] for r in range(n_eq)):
        return None
    solution = [0] * n_vars
    for r, col in enumerate(pivots):
        solution[col] = aug[r][n_vars]
    return solution


@dataclass(frozen=True)
class ReconstructionPlan:
    coeffs: dict[int, int]

    def check(self, matrix: AccessMatrix) -> bool:
        acc = [0] * matrix.width
        for x, c in self.coeffs.items():
            for k, v in enumerate(matrix.rows[x]):
                acc[k] = (acc[k] + c * v) % ORDER
        return acc == [1] + [0] * (matrix.width - 1)


def find_reconstruction(matrix: AccessMatrix, held: Iterable[str]) -> ReconstructionPlan:
    """Coefficients c_x over the held rows with sum c_x A_x = (1, 0, ..., 0).

    Rows whose coefficient comes out zero are dropped from the plan.
    """
    held = set(held)
    usable = [x for x, attr in enumerate(matrix.rho) if attr in held]
    target = [1] + [0] * (matrix.width - 1)
    solution = _solve([list(matrix.rows[x]) for x in usable], target) if usable else None
    if solution is None:
        raise PolicyNotSatisfiedError(
            f"attributes {sorted(held)} do not satisfy the policy over {sorted(set(matrix.rho))}"
        )
    plan = ReconstructionPlan({x: c for x, c in zip(usable, solution) if c})
    if not plan.check(matrix):
        raise ArithmeticError("reconstruction plan does not hit the target vector")
    return plan


MAX_BRUTEFORCE_UNIVERSE = 10


def satisfying_subsets_bruteforce(
    matrix: AccessMatrix, universe: Iterable[str]
) -> set[frozenset[str]]:
    universe = sorted(set(universe))
    if len(universe) > MAX_BRUTEFORCE_UNIVERSE:
        raise UniverseTooLargeError(
            f"{len(universe)} attributes exceeds the cap of {MAX_BRUTEFORCE_UNIVERSE}"
        )
    found = set()
    for k in range(len(universe) + 1):
        for subset in itertools.combinations(universe, k):
            try:
                find_reconstruction(matrix, subset)
            except PolicyNotSatisfiedError:
                continue
            found.add(frozenset(subset))
    return found
