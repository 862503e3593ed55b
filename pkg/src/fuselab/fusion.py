"""Non-learned mask fusion: majority voting, boolean expressions, filtering.

Masks are 2-D uint8 arrays with values in {0, 255}.  Expressions combine
named masks with NOT, AND, OR and parentheses; precedence is
NOT > AND > OR and binary operators associate left.
"""

from dataclasses import dataclass

import numpy as np

from fuselab.bgs import BACKGROUND, FOREGROUND


def _as_bool(mask, what="mask"):
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"{what} must be 2-D, got shape {mask.shape}")
    if not np.isin(mask, (BACKGROUND, FOREGROUND)).all():
        raise ValueError(f"{what} must contain only {{0, 255}}")
    return mask == FOREGROUND


def majority_vote(masks):
    """Pixel-wise majority over N masks.

    Foreground needs at least ceil((N + 1) / 2) votes, so an exact tie on
    an even N resolves to background.
    """
    masks = list(masks)
    if not masks:
        raise ValueError("majority_vote needs at least one mask")
    votes = _as_bool(masks[0]).astype(np.int32)
    for m in masks[1:]:
        b = _as_bool(m)
        if b.shape != votes.shape:
            raise ValueError(f"mask dims differ: {b.shape} vs {votes.shape}")
        votes += b
    need = (len(masks) + 2) // 2  # ceil((N + 1) / 2)
    return np.where(votes >= need, FOREGROUND, BACKGROUND).astype(np.uint8)


# ---------------------------------------------------------------------------
# Boolean expressions over named masks
# ---------------------------------------------------------------------------

class ParseError(ValueError):
    """Expression syntax error with a 1-based character position."""

    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class Name:
    name: str


@dataclass(frozen=True)
class Not:
    operand: object


@dataclass(frozen=True)
class And:
    left: object
    right: object


@dataclass(frozen=True)
class Or:
    left: object
    right: object


_KEYWORDS = {"NOT", "AND", "OR"}


def _tokenize(text):
    tokens = []  # (kind, value, 1-based position)
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "()":
            tokens.append((c, c, i + 1))
            i += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            kind = word.upper() if word.upper() in _KEYWORDS else "NAME"
            tokens.append((kind, word, i + 1))
            i = j
            continue
        raise ParseError(f"unknown token {c!r}", i + 1)
    tokens.append(("EOF", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def parse(self):
        node = self.or_expr()
        kind, value, pos = self.peek()
        if kind != "EOF":
            raise ParseError(f"unexpected token {value!r}", pos)
        return node

    def or_expr(self):
        node = self.and_expr()
        while self.peek()[0] == "OR":
            self.next()
            node = Or(node, self.and_expr())
        return node

    def and_expr(self):
        node = self.unary()
        while self.peek()[0] == "AND":
            self.next()
            node = And(node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "NOT":
            self.next()
            return Not(self.unary())
        return self.atom()

    def atom(self):
        kind, value, pos = self.next()
        if kind == "NAME":
            return Name(value)
        if kind == "(":
            node = self.or_expr()
            k2, v2, p2 = self.next()
            if k2 != ")":
                raise ParseError("expected ')'", p2)
            return node
        if kind == "EOF":
            raise ParseError("unexpected end of expression", pos)
        raise ParseError(f"unexpected token {value!r}", pos)


def parse_expr(text):
    """Parse a boolean mask expression such as ``"A AND (B OR NOT C)"``.

    Keywords are case-insensitive; every other identifier is a mask name.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 1)
    return _Parser(_tokenize(text)).parse()


def eval_expr(expr, masks):
    """Evaluate an expression tree over a mapping of name -> binary mask."""
    bools = {}
    shape = None
    for name, m in masks.items():
        b = _as_bool(m, f"mask {name!r}")
        if shape is None:
            shape = b.shape
        elif b.shape != shape:
            raise ValueError(f"mask dims differ: {b.shape} vs {shape}")
        bools[name] = b

    def ev(node):
        if isinstance(node, Name):
            if node.name not in bools:
                raise ValueError(f"unbound mask name {node.name!r}")
            return bools[node.name]
        if isinstance(node, Not):
            return ~ev(node.operand)
        if isinstance(node, And):
            return ev(node.left) & ev(node.right)
        if isinstance(node, Or):
            return ev(node.left) | ev(node.right)
        raise TypeError(f"not an expression node: {node!r}")

    return np.where(ev(expr), FOREGROUND, BACKGROUND).astype(np.uint8)


def median_filter3(mask):
    """3x3 binary median (majority of 9) with edge-replicated borders."""
    b = _as_bool(mask)
    padded = np.pad(b, 1, mode="edge").astype(np.int32)
    h, w = b.shape
    votes = np.zeros((h, w), np.int32)
    for dy in range(3):
        for dx in range(3):
            votes += padded[dy:dy + h, dx:dx + w]
    return np.where(votes >= 5, FOREGROUND, BACKGROUND).astype(np.uint8)
