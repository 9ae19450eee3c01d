"""Model description language.

A model file is a sequence of semicolon-terminated statements::

    manifold R4 dim 4 coords x1 x2 x3 x4;
    bivector P { (1,2): 1, (3,4): 1, (2,3): x1*x2 };
    threeform H { (1,2,4): -x1 };
    degree 2;

Other statements: ``metric identity;`` or ``metric { (i,j): c, ... };``,
``ooperator O { den: <poly>, (i,j): <poly>, ... };``,
``frame D { (<v...> | <alpha...>), ... };``,
``action G { generator (<v...>) alpha (<alpha...>); structure (a,b,c): k; };``
and ``assert orbit_nondegenerate;``.  Indices are 1-based, ``#`` starts a
comment, and coefficients are exact rationals written ``p/q``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from ..symkernel import Poly

ASSERTIONS = ("orbit_nondegenerate",)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.message, self.line, self.col = message, line, col
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + message)


@dataclass
class ActionBlock:
    name: str
    vectors: List[List[Poly]] = field(default_factory=list)
    alphas: List[List[Poly]] = field(default_factory=list)
    constants: Dict[Tuple[int, int, int], Fraction] = field(default_factory=dict)  # C^a_{bc}, b < c


@dataclass
class ModelSpec:
    name: str
    coords: Tuple[str, ...]
    bivector: Optional[Tuple[str, Dict[Tuple[int, int], Poly]]] = None
    threeform: Optional[Tuple[str, Dict[Tuple[int, int, int], Poly]]] = None
    metric: Optional[Dict[Tuple[int, int], Fraction]] = None    # None means identity
    ooperator: Optional[Tuple[str, Poly, Dict[Tuple[int, int], Poly]]] = None
    frame: Optional[Tuple[str, List[Tuple[List[Poly], List[Poly]]]]] = None
    action: Optional[ActionBlock] = None
    degree: int = 2
    assertions: Tuple[str, ...] = ()

    @property
    def dim(self) -> int:
        return len(self.coords)

    def dirac_source(self) -> Optional[str]:
        for kind in ("bivector", "frame", "ooperator"):
            if getattr(self, kind) is not None:
                return kind
        return None


# -- lexer -----------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<float>\d+\.\d*|\.\d+|\d+[eE][+-]?\d+)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[{}()\[\],;:|=+\-*/^])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> List[Token]:
    out, line, start, pos = [], 1, 0, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        col = pos - start + 1
        if kind == "nl":
            line, start = line + 1, m.end()
        elif kind == "float":
            raise ParseError(f"floating point literal {m.group()!r}; write rationals as p/q", line, col)
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, col))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


# -- parser ----------------------------------------------------------------------


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.coords: Tuple[str, ...] = ()

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def peek(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "ident")

    def accept(self, text: str) -> bool:
        if self.peek(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.peek(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        self.i += 1
        return self.toks[self.i - 1]

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        self.i += 1
        return self.toks[self.i - 1]

    def integer(self) -> int:
        if self.tok.kind != "int":
            self.error(f"expected an integer, found {self.tok.text or 'end of input'!r}")
        self.i += 1
        return int(self.toks[self.i - 1].text)

    # polynomials: expr = term (('+'|'-') term)*, term = unary (('*'|'/') unary)*,
    # unary = '-' unary | power, power = atom ('^' int)?
    def poly(self) -> Poly:
        p = self.term()
        while self.peek("+") or self.peek("-"):
            op = self.expect(self.tok.text).text
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self) -> Poly:
        p = self.unary()
        while self.peek("*") or self.peek("/"):
            op = self.expect(self.tok.text)
            q = self.unary()
            if op.text == "*":
                p = p * q
            else:
                if not q.is_constant():
                    self.error("non-polynomial expression: division by a non-constant", op)
                if not q:
                    self.error("division by zero", op)
                p = p.scale(1 / q.constant_term())
        return p

    def unary(self) -> Poly:
        if self.accept("-"):
            return -self.unary()
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> Poly:
        base = self.atom()
        if self.accept("^"):
            neg = self.accept("-")
            tok = self.tok
            k = self.integer()
            if neg:
                self.error("non-polynomial expression: negative exponent", tok)
            base = base ** k
        return base

    def atom(self) -> Poly:
        n = len(self.coords)
        tok = self.tok
        if tok.kind == "int":
            return Poly.const(n, self.integer())
        if tok.kind == "ident":
            if tok.text not in self.coords:
                self.error(f"unknown coordinate {tok.text!r}")
            self.i += 1
            return Poly.var(n, self.coords.index(tok.text))
        if self.accept("("):
            p = self.poly()
            self.expect(")")
            return p
        self.error(f"expected a polynomial, found {tok.text or 'end of input'!r}")

    def rational(self) -> Fraction:
        tok = self.tok
        p = self.poly()
        if not p.is_constant():
            self.error("expected a rational constant", tok)
        return p.constant_term()

    def index_tuple(self, k: int) -> Tuple[Tuple[int, ...], Token]:
        start = self.expect("(")
        idx = []
        for j in range(k):
            if j:
                self.expect(",")
            tok = self.tok
            v = self.integer()
            if not 1 <= v <= len(self.coords):
                self.error(f"index {v} out of range 1..{len(self.coords)}", tok)
            idx.append(v)
        self.expect(")")
        return tuple(idx), start

    def vector(self) -> List[Poly]:
        start = self.tok
        self.expect("(")
        v = [self.poly()]
        while self.accept(","):
            v.append(self.poly())
        self.expect(")")
        if len(v) != len(self.coords):
            self.error(f"expected {len(self.coords)} components, got {len(v)}", start)
        return v

    def components(self, k: int, antisymmetric: bool, key_extra: Tuple[str, ...] = ()):
        """{ (i,j,...): poly, ... } with an optional leading set of keyword entries."""
        self.expect("{")
        comps: Dict[Tuple[int, ...], Poly] = {}
        extra: Dict[str, Poly] = {}
        seen: Dict[Tuple[int, ...], Tuple[int, ...]] = {}
        while not self.peek("}"):
            if self.tok.kind == "ident" and self.tok.text in key_extra:
                tok = self.ident()
                if tok.text in extra:
                    self.error(f"duplicate entry {tok.text!r}", tok)
                self.expect(":")
                extra[tok.text] = self.poly()
            else:
                idx, start = self.index_tuple(k)
                self.expect(":")
                val = self.poly()
                key = idx
                if antisymmetric:
                    if len(set(idx)) < k:
                        if k == 2:
                            self.error("diagonal entry violates antisymmetry", start)
                        self.error("repeated index violates antisymmetry", start)
                    key = tuple(sorted(idx))
                if key in seen:
                    self.error(f"duplicate component {idx} (already given as {seen[key]})", start)
                seen[key] = idx
                if antisymmetric:
                    perm_sign = _perm_sign(idx)
                    val = val if perm_sign > 0 else -val
                comps[key] = val
            if not self.accept(","):
                break
        self.expect("}")
        return comps, extra

    # statements
    def parse(self) -> ModelSpec:
        if self.tok.kind == "eof":
            self.error("missing manifold declaration")
        if not self.peek("manifold"):
            self.error("the first statement must be a manifold declaration")
        spec = self.manifold()
        seen = set()
        while self.tok.kind != "eof":
            tok = self.ident()
            kw = tok.text
            if kw in seen and kw not in ("assert",):
                self.error(f"duplicate {kw} statement", tok)
            seen.add(kw)
            handler = getattr(self, "st_" + kw, None)
            if handler is None:
                self.error(f"unknown statement {kw!r}", tok)
            handler(spec)
            self.expect(";")
        sources = [k for k in ("bivector", "frame", "ooperator") if getattr(spec, k) is not None]
        if len(sources) > 1:
            raise ParseError(f"more than one Dirac structure given ({', '.join(sources)})")
        if not sources and spec.action is None:
            raise ParseError("no Dirac structure given (bivector, frame or ooperator)")
        return spec

    def manifold(self) -> ModelSpec:
        self.expect("manifold")
        name = self.ident().text
        self.expect("dim")
        tok = self.tok
        n = self.integer()
        if n < 1:
            self.error("dimension must be positive", tok)
        self.expect("coords")
        coords = []
        while self.tok.kind == "ident":
            t = self.ident()
            if t.text in coords:
                self.error(f"duplicate coordinate {t.text!r}", t)
            coords.append(t.text)
        if len(coords) != n:
            self.error(f"dim {n} but {len(coords)} coordinates declared")
        self.expect(";")
        self.coords = tuple(coords)
        return ModelSpec(name, self.coords)

    def st_bivector(self, spec: ModelSpec):
        name = self.ident().text
        comps, _ = self.components(2, True)
        spec.bivector = (name, {k: v for k, v in comps.items() if v})

    def st_threeform(self, spec: ModelSpec):
        name = self.ident().text
        comps, _ = self.components(3, True)
        spec.threeform = (name, {k: v for k, v in comps.items() if v})

    def st_metric(self, spec: ModelSpec):
        if self.accept("identity"):
            spec.metric = None
            return
        tok = self.tok
        comps, _ = self.components(2, False)
        out: Dict[Tuple[int, int], Fraction] = {}
        for (i, j), v in comps.items():
            if not v.is_constant():
                self.error("only constant metrics are supported", tok)
            key = (min(i, j), max(i, j))
            if key in out:
                self.error(f"duplicate component {key}", tok)
            if v:
                out[key] = v.constant_term()
        spec.metric = out

    def st_ooperator(self, spec: ModelSpec):
        name = self.ident().text
        comps, extra = self.components(2, False, ("den",))
        den = extra.get("den", Poly.const(len(self.coords), 1))
        if not den:
            self.error("zero denominator")
        spec.ooperator = (name, den, {k: v for k, v in comps.items() if v})

    def st_frame(self, spec: ModelSpec):
        name = self.ident().text
        self.expect("{")
        sections = []
        while self.peek("("):
            start = self.tok
            self.expect("(")
            v = [self.poly()]
            while self.accept(","):
                v.append(self.poly())
            self.expect("|")
            a = [self.poly()]
            while self.accept(","):
                a.append(self.poly())
            self.expect(")")
            if len(v) != len(self.coords) or len(a) != len(self.coords):
                self.error("each section needs dim vector and dim covector components", start)
            sections.append((v, a))
            if not self.accept(","):
                break
        self.expect("}")
        if len(sections) != len(self.coords):
            self.error(f"a frame needs {len(self.coords)} sections, got {len(sections)}")
        spec.frame = (name, sections)

    def st_action(self, spec: ModelSpec):
        block = ActionBlock(self.ident().text)
        self.expect("{")
        pending = []
        while not self.peek("}"):
            tok = self.ident()
            if tok.text == "generator":
                block.vectors.append(self.vector())
                self.expect("alpha")
                block.alphas.append(self.vector())
            elif tok.text == "structure":
                start = self.expect("(")
                idx = [self.integer()]
                for _ in range(2):
                    self.expect(",")
                    idx.append(self.integer())
                self.expect(")")
                self.expect(":")
                pending.append((tuple(idx), self.rational(), start))
            else:
                self.error(f"unknown action entry {tok.text!r}", tok)
            self.expect(";")
        self.expect("}")
        r = len(block.vectors)
        if not r:
            self.error("an action block needs at least one generator")
        for (a, b, c), k, start in pending:
            if not all(1 <= t <= r for t in (a, b, c)):
                self.error(f"structure index out of range 1..{r}", start)
            if b == c:
                self.error("structure constants are antisymmetric in the lower indices", start)
            key = (a, b, c) if b < c else (a, c, b)
            if key in block.constants:
                self.error(f"duplicate structure constant {key}", start)
            if k:
                block.constants[key] = k if b < c else -k
        spec.action = block

    def st_degree(self, spec: ModelSpec):
        spec.degree = self.integer()

    def st_assert(self, spec: ModelSpec):
        tok = self.ident()
        if tok.text not in ASSERTIONS:
            self.error(f"unknown assertion {tok.text!r}", tok)
        if tok.text not in spec.assertions:
            spec.assertions = spec.assertions + (tok.text,)


def _perm_sign(idx) -> int:
    sign = 1
    idx = list(idx)
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                sign = -sign
    return sign


def parse(text: str) -> ModelSpec:
    return Parser(text).parse()


# -- canonical rendering -----------------------------------------------------------


def _p(spec: ModelSpec, p: Poly) -> str:
    return p.render(spec.coords)


def _block(entries: List[str]) -> str:
    return "{ " + ", ".join(entries) + " }" if entries else "{ }"


def render(spec: ModelSpec) -> str:
    """Canonical text for spec; parse(render(spec)) == spec."""
    lines = [f"manifold {spec.name} dim {spec.dim} coords {' '.join(spec.coords)};"]
    if spec.bivector is not None:
        name, comps = spec.bivector
        body = [f"({i},{j}): {_p(spec, v)}" for (i, j), v in sorted(comps.items())]
        lines.append(f"bivector {name} {_block(body)};")
    if spec.threeform is not None:
        name, comps = spec.threeform
        body = [f"({i},{j},{k}): {_p(spec, v)}" for (i, j, k), v in sorted(comps.items())]
        lines.append(f"threeform {name} {_block(body)};")
    if spec.metric is not None:
        body = [f"({i},{j}): {v}" for (i, j), v in sorted(spec.metric.items())]
        lines.append(f"metric {_block(body)};")
    if spec.ooperator is not None:
        name, den, comps = spec.ooperator
        body = [f"den: {_p(spec, den)}"] + [f"({i},{j}): {_p(spec, v)}" for (i, j), v in sorted(comps.items())]
        lines.append(f"ooperator {name} {_block(body)};")
    if spec.frame is not None:
        name, sections = spec.frame
        body = ["(" + ", ".join(_p(spec, x) for x in v) + " | " + ", ".join(_p(spec, x) for x in a) + ")"
                for v, a in sections]
        lines.append(f"frame {name} {_block(body)};")
    if spec.action is not None:
        act = spec.action
        lines.append(f"action {act.name} {{")
        for v, a in zip(act.vectors, act.alphas):
            vs = ", ".join(_p(spec, x) for x in v)
            al = ", ".join(_p(spec, x) for x in a)
            lines.append(f"  generator ({vs}) alpha ({al});")
        for (a, b, c), k in sorted(act.constants.items()):
            lines.append(f"  structure ({a},{b},{c}): {k};")
        lines.append("};")
    lines.append(f"degree {spec.degree};")
    for name in spec.assertions:
        lines.append(f"assert {name};")
    return "\n".join(lines) + "\n"
