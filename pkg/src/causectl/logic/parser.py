"""Recursive-descent parser for the ASCII formula grammar.

Grammar (``!`` and the unary temporal operators bind tightest, then ``S``,
then ``&``, then ``|``; binary operators associate to the left)::

    disj    := conj ('|' conj)*
    conj    := since ('&' since)*
    since   := unary ('S' interval unary)*
    unary   := '!' unary | 'F-' interval unary | 'G-' interval unary | primary
    primary := '(' disj ')' | 'true' | 'false'
             | 'x' INT ('<' | '>') value | 'u' INT '=' value
    interval:= '[' bound ',' bound ']'
    value   := NUMBER | NAME '?'
    bound   := INT | NAME '?'
"""

from __future__ import annotations

import re
from typing import NamedTuple

from .formula import (
    CONTROL_VALUE,
    FALSE,
    STATE_THRESHOLD,
    TIME_BOUND,
    TRUE,
    And,
    ControlAtom,
    Formula,
    Not,
    Or,
    Param,
    PastEventually,
    PastGlobally,
    Since,
    StateAtom,
)


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, text: str, pos: int):
        self.text = text
        self.pos = pos
        super().__init__(f"{message} at position {pos}: {text[:pos]}<here>{text[pos:]}")


class _Tok(NamedTuple):
    kind: str
    value: str
    pos: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>[-+]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<fop>F-)
  | (?P<gop>G-)
  | (?P<var>[xu]\d+\b)
  | (?P<param>[A-Za-z_][A-Za-z0-9_]*\?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>[()\[\],!&|<>=])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, n: int, m: int):
        self.text = text
        self.n = n
        self.m = m
        self.toks = _tokenize(text)
        self.i = 0
        self.slots: dict[str, Param] = {}

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: _Tok | None = None):
        tok = tok or self.tok
        raise FormulaSyntaxError(message, self.text, tok.pos)

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect_sym(self, sym: str) -> _Tok:
        if self.tok.kind == "sym" and self.tok.value == sym:
            return self.advance()
        found = self.tok.value or "end of input"
        self.error(f"expected {sym!r}, found {found!r}")

    def at_sym(self, sym: str) -> bool:
        return self.tok.kind == "sym" and self.tok.value == sym

    def parse(self) -> Formula:
        phi = self.disj()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.value!r}")
        return phi

    def disj(self) -> Formula:
        phi = self.conj()
        while self.at_sym("|"):
            self.advance()
            phi = Or(phi, self.conj())
        return phi

    def conj(self) -> Formula:
        phi = self.since()
        while self.at_sym("&"):
            self.advance()
            phi = And(phi, self.since())
        return phi

    def since(self) -> Formula:
        phi = self.unary()
        while self.tok.kind == "name" and self.tok.value == "S":
            start = self.advance()
            lo, hi = self.interval(start)
            phi = Since(phi, self.unary(), lo, hi)
        return phi

    def unary(self) -> Formula:
        tok = self.tok
        if self.at_sym("!"):
            self.advance()
            return Not(self.unary())
        if tok.kind in ("fop", "gop"):
            self.advance()
            lo, hi = self.interval(tok)
            child = self.unary()
            cls = PastEventually if tok.kind == "fop" else PastGlobally
            return cls(child, lo, hi)
        return self.primary()

    def interval(self, op: _Tok):
        self.expect_sym("[")
        lo = self.bound()
        self.expect_sym(",")
        hi = self.bound()
        self.expect_sym("]")
        if isinstance(lo, int) and isinstance(hi, int) and lo > hi:
            self.error(f"malformed interval [{lo},{hi}]", op)
        return lo, hi

    def bound(self):
        tok = self.tok
        if tok.kind == "param":
            self.advance()
            return self.slot(tok, TIME_BOUND)
        if tok.kind == "num" and re.fullmatch(r"\+?\d+", tok.value):
            self.advance()
            return int(tok.value)
        self.error("expected a natural-number time bound")

    def value(self, kind: str):
        tok = self.tok
        if tok.kind == "param":
            self.advance()
            return self.slot(tok, kind)
        if tok.kind == "num":
            self.advance()
            return float(tok.value)
        self.error("expected a number or parameter slot")

    def slot(self, tok: _Tok, kind: str) -> Param:
        name = tok.value[:-1]
        if name in self.slots:
            self.error(f"parameter slot {name!r} declared twice", tok)
        p = Param(name, kind)
        self.slots[name] = p
        return p

    def primary(self) -> Formula:
        tok = self.tok
        if self.at_sym("("):
            self.advance()
            phi = self.disj()
            self.expect_sym(")")
            return phi
        if tok.kind == "name" and tok.value in ("true", "false"):
            self.advance()
            return TRUE if tok.value == "true" else FALSE
        if tok.kind == "var":
            self.advance()
            idx = int(tok.value[1:])
            if tok.value[0] == "x":
                if idx >= self.n:
                    self.error(f"state index {idx} out of range (n={self.n})", tok)
                rel = self.tok
                if not (self.at_sym("<") or self.at_sym(">")):
                    self.error("expected '<' or '>' after a state variable")
                self.advance()
                return StateAtom(idx, rel.value, self.value(STATE_THRESHOLD))
            if idx >= self.m:
                self.error(f"control index {idx} out of range (m={self.m})", tok)
            if not self.at_sym("="):
                self.error("control atoms use '=' only")
            self.advance()
            return ControlAtom(idx, self.value(CONTROL_VALUE))
        found = tok.value or "end of input"
        self.error(f"unexpected {found!r}")


def parse(text: str, n: int, m: int) -> Formula:
    """Parse ``text`` over ``n`` state and ``m`` control variables.

    Parameter slots (``name?``) make the result parametric; see
    :func:`~causectl.logic.formula.free_parameters`.
    """
    return _Parser(text, n, m).parse()
