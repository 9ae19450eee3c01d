"""Exact graded-commutative algebra.

Polynomials over the rationals in a fixed set of base coordinates are the
coefficient ring.  Graded generators carry a (ghost, form) bidegree; their
parity is the total degree mod 2 and every monomial is kept sorted in the
context's generator order with the Koszul sign applied.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Iterator, Mapping, Sequence, Tuple, Union

Exponent = Tuple[int, ...]
Monomial = Tuple[int, ...]
Number = Union[int, Fraction]


class ContextError(ValueError):
    """Raised on unknown generator names or mixing of contexts."""


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"exact rational expected, got {type(c).__name__}")


class Poly:
    """Multivariate polynomial with exact rational coefficients.

    ``terms`` maps exponent vectors to non-zero ``Fraction`` coefficients.
    Instances are treated as immutable.
    """

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[Exponent, Number] | None = None):
        self.nvars = nvars
        clean: Dict[Exponent, Fraction] = {}
        if terms:
            for e, c in terms.items():
                if len(e) != nvars:
                    raise ValueError("exponent length does not match nvars")
                if any(k < 0 for k in e):
                    raise ValueError("negative exponent")
                c = _as_fraction(c)
                if c:
                    clean[tuple(e)] = c
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: Dict[Exponent, Fraction]) -> "Poly":
        p = cls.__new__(cls)
        p.nvars = nvars
        p.terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, nvars: int) -> "Poly":
        return cls._raw(nvars, {})

    @classmethod
    def const(cls, nvars: int, c: Number) -> "Poly":
        c = _as_fraction(c)
        return cls._raw(nvars, {(0,) * nvars: c} if c else {})

    @classmethod
    def var(cls, nvars: int, i: int) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return cls._raw(nvars, {tuple(e): Fraction(1)})

    @classmethod
    def monomial(cls, exp: Exponent, c: Number = 1) -> "Poly":
        return cls(len(exp), {tuple(exp): c})

    # -- queries -------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, Fraction(0))

    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def __iter__(self) -> Iterator[Tuple[Exponent, Fraction]]:
        return iter(sorted(self.terms.items()))

    # -- arithmetic ----------------------------------------------------
    def _coerce(self, other) -> "Poly":
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ContextError("polynomials over different coordinate sets")
            return other
        return Poly.const(self.nvars, other)

    def __add__(self, other) -> "Poly":
        other = self._coerce(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e)
            if v is None:
                out[e] = c
            else:
                v += c
                if v:
                    out[e] = v
                else:
                    del out[e]
        return Poly._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Poly":
        return self._coerce(other) - self

    def scale(self, c: Number) -> "Poly":
        c = _as_fraction(c)
        if not c:
            return Poly.zero(self.nvars)
        return Poly._raw(self.nvars, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return self.scale(other)
        if other.nvars != self.nvars:
            raise ContextError("polynomials over different coordinate sets")
        if not self.terms or not other.terms:
            return Poly.zero(self.nvars)
        out: Dict[Exponent, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                v = out.get(e)
                out[e] = c1 * c2 if v is None else v + c1 * c2
        return Poly._raw(self.nvars, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative power")
        out = Poly.const(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def diff(self, i: int) -> "Poly":
        out: Dict[Exponent, Fraction] = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                e2 = e[:i] + (k - 1,) + e[i + 1:]
                out[e2] = c * k
        return Poly._raw(self.nvars, out)

    def evaluate(self, point: Sequence[Number]) -> Fraction:
        total = Fraction(0)
        for e, c in self.terms.items():
            t = c
            for x, k in zip(point, e):
                if k:
                    t *= Fraction(x) ** k
            total += t
        return total

    def substitute(self, images: Sequence["Poly"]) -> "Poly":
        """Compose with polynomial images of the coordinates (possibly in another ring)."""
        if len(images) != self.nvars:
            raise ValueError("need one image per coordinate")
        target = images[0].nvars if images else 0
        out = Poly.zero(target)
        for e, c in self.terms.items():
            t = Poly.const(target, c)
            for img, k in zip(images, e):
                if k:
                    t = t * img ** k
            out = out + t
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.nvars == other.nvars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == Poly.const(self.nvars, other).terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def render(self, names: Sequence[str] | None = None, power: str = "^", times: str = "*") -> str:
        if names is None:
            names = [f"x{i + 1}" for i in range(self.nvars)]
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), key=lambda t: (-sum(t[0]), tuple(-k for k in t[0]))):
            factors = []
            for name, k in zip(names, e):
                if k == 1:
                    factors.append(name)
                elif k > 1:
                    factors.append(f"{name}{power}{k}")
            mono = times.join(factors)
            mag = abs(c)
            sign = "-" if c < 0 else "+"
            if not mono:
                body = str(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{mag}{times}{mono}"
            parts.append((sign, body))
        first_sign, first = parts[0]
        s = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            s += f" {sign} {body}"
        return s

    def __repr__(self) -> str:
        return f"Poly({self.render()})"


@dataclass(frozen=True)
class Generator:
    name: str
    ghost: int
    form: int
    latex: str = ""

    @property
    def degree(self) -> int:
        return self.ghost + self.form

    @property
    def odd(self) -> bool:
        return self.degree % 2 == 1


@dataclass(frozen=True)
class GradedContext:
    """Base coordinates plus an ordered list of graded generators.

    ``differential`` maps a coordinate or generator name to the name of its
    de Rham differential, where the context contains one.
    """

    coords: Tuple[str, ...]
    generators: Tuple[Generator, ...]
    differential: Tuple[Tuple[str, str], ...] = ()
    coord_latex: Tuple[str, ...] = ()
    _index: Dict[str, int] = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        names = [g.name for g in self.generators]
        if len(set(names)) != len(names):
            raise ContextError("generator names must be unique")
        if set(names) & set(self.coords):
            raise ContextError("generator name clashes with a coordinate")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})
        object.__setattr__(self, "_odd", tuple(g.odd for g in self.generators))
        object.__setattr__(self, "_deg", tuple(g.degree for g in self.generators))

    @property
    def nvars(self) -> int:
        return len(self.coords)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ContextError(f"unknown generator {name!r}") from None

    def coord_index(self, name: str) -> int:
        try:
            return self.coords.index(name)
        except ValueError:
            raise ContextError(f"unknown coordinate {name!r}") from None

    def d_of(self, name: str) -> str:
        for a, b in self.differential:
            if a == name:
                return b
        raise ContextError(f"context has no differential of {name!r}")

    def mono_degree(self, mono: Monomial) -> int:
        return sum(self._deg[i] for i in mono)

    def mono_bidegree(self, mono: Monomial) -> Tuple[int, int]:
        gs = self.generators
        return (sum(gs[i].ghost for i in mono), sum(gs[i].form for i in mono))


def mono_mul(ctx: GradedContext, m1: Monomial, m2: Monomial) -> Tuple[int, Monomial]:
    """Product of two sorted monomials: (sign, sorted monomial); sign 0 if it vanishes."""
    if not m1:
        return 1, m2
    if not m2:
        return 1, m1
    odd = ctx._odd
    sign = 1
    for b in m2:
        if odd[b]:
            for a in m1:
                if a == b:
                    return 0, ()
                if a > b and odd[a]:
                    sign = -sign
    return sign, tuple(sorted(m1 + m2))


def sort_monomial(ctx: GradedContext, gens: Sequence[int]) -> Tuple[int, Monomial]:
    """Normal form of an arbitrary generator word."""
    sign, mono = 1, ()
    for g in gens:
        s, mono = mono_mul(ctx, mono, (g,))
        if s == 0:
            return 0, ()
        sign *= s
    return sign, mono


class GradedElement:
    """Finite sum of polynomial coefficient times normalized generator monomial."""

    __slots__ = ("ctx", "terms")

    def __init__(self, ctx: GradedContext, terms: Mapping[Monomial, Poly] | None = None):
        self.ctx = ctx
        self.terms: Dict[Monomial, Poly] = {}
        if terms:
            for m, p in terms.items():
                if p.nvars != ctx.nvars:
                    raise ContextError("coefficient ring does not match context")
                if p:
                    self.terms[m] = p

    # -- constructors ----------------------------------------------------
    @classmethod
    def _raw(cls, ctx, terms):
        e = cls.__new__(cls)
        e.ctx = ctx
        e.terms = terms
        return e

    @classmethod
    def zero(cls, ctx: GradedContext) -> "GradedElement":
        return cls._raw(ctx, {})

    @classmethod
    def scalar(cls, ctx: GradedContext, p: Union[Poly, Number]) -> "GradedElement":
        if not isinstance(p, Poly):
            p = Poly.const(ctx.nvars, p)
        return cls._raw(ctx, {(): p} if p else {})

    @classmethod
    def gen(cls, ctx: GradedContext, name: str) -> "GradedElement":
        return cls._raw(ctx, {(ctx.index(name),): Poly.const(ctx.nvars, 1)})

    @classmethod
    def word(cls, ctx: GradedContext, names: Sequence[str], coeff: Union[Poly, Number] = 1) -> "GradedElement":
        """Normalize the ordered product ``coeff * names[0] * names[1] * ...``."""
        if not isinstance(coeff, Poly):
            coeff = Poly.const(ctx.nvars, coeff)
        sign, mono = sort_monomial(ctx, [ctx.index(n) for n in names])
        if sign == 0 or not coeff:
            return cls.zero(ctx)
        return cls._raw(ctx, {mono: coeff if sign > 0 else -coeff})

    # -- queries -----------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def items(self) -> Iterator[Tuple[Monomial, Poly]]:
        return iter(sorted(self.terms.items()))

    def coefficient(self, names: Sequence[str]) -> Poly:
        sign, mono = sort_monomial(self.ctx, [self.ctx.index(n) for n in names])
        p = self.terms.get(mono, Poly.zero(self.ctx.nvars))
        return -p if sign < 0 else p

    def degrees(self) -> set:
        return {self.ctx.mono_degree(m) for m in self.terms}

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def degree(self) -> int:
        ds = self.degrees()
        if len(ds) != 1:
            raise ValueError("element is not homogeneous")
        return ds.pop()

    def max_coeff_degree(self) -> int:
        return max((p.degree() for p in self.terms.values()), default=-1)

    def polys(self) -> Iterable[Poly]:
        return self.terms.values()

    # -- arithmetic --------------------------------------------------------
    def _check(self, other: "GradedElement"):
        if other.ctx is not self.ctx and other.ctx != self.ctx:
            raise ContextError("elements live in different contexts")

    def __add__(self, other) -> "GradedElement":
        if not isinstance(other, GradedElement):
            other = GradedElement.scalar(self.ctx, other)
        self._check(other)
        out = dict(self.terms)
        for m, p in other.terms.items():
            q = out.get(m)
            if q is None:
                out[m] = p
            else:
                q = q + p
                if q:
                    out[m] = q
                else:
                    del out[m]
        return GradedElement._raw(self.ctx, out)

    __radd__ = __add__

    def __neg__(self) -> "GradedElement":
        return GradedElement._raw(self.ctx, {m: -p for m, p in self.terms.items()})

    def __sub__(self, other) -> "GradedElement":
        if not isinstance(other, GradedElement):
            other = GradedElement.scalar(self.ctx, other)
        return self + (-other)

    def scale(self, c: Union[Poly, Number]) -> "GradedElement":
        if isinstance(c, Poly):
            if not c:
                return GradedElement.zero(self.ctx)
            return GradedElement._raw(self.ctx, {m: q for m, p in self.terms.items() if (q := p * c)})
        c = _as_fraction(c)
        if not c:
            return GradedElement.zero(self.ctx)
        return GradedElement._raw(self.ctx, {m: p.scale(c) for m, p in self.terms.items()})

    def __mul__(self, other) -> "GradedElement":
        if not isinstance(other, GradedElement):
            return self.scale(other)
        return mul(self, other)

    def __rmul__(self, other) -> "GradedElement":
        return self.scale(other)

    def __eq__(self, other) -> bool:
        if isinstance(other, GradedElement):
            return self.ctx == other.ctx and self.terms == other.terms
        if isinstance(other, (int, Fraction, Poly)):
            return self == GradedElement.scalar(self.ctx, other)
        return NotImplemented

    __hash__ = None

    # -- projections ---------------------------------------------------------
    def filter(self, pred) -> "GradedElement":
        """Keep only terms whose monomial satisfies ``pred``."""
        return GradedElement._raw(self.ctx, {m: p for m, p in self.terms.items() if pred(m)})

    def restrict_zero(self, names: Iterable[str]) -> "GradedElement":
        """Set the named generators to zero."""
        idx = {self.ctx.index(n) for n in names}
        return self.filter(lambda m: not idx.intersection(m))

    def bidegree_part(self, ghost: int, form: int) -> "GradedElement":
        return self.filter(lambda m: self.ctx.mono_bidegree(m) == (ghost, form))

    def map_coefficients(self, f) -> "GradedElement":
        return GradedElement._raw(self.ctx, {m: q for m, p in self.terms.items() if (q := f(p))})

    def render(self, coeff_names: Sequence[str] | None = None) -> str:
        if not self.terms:
            return "0"
        names = coeff_names or list(self.ctx.coords)
        gens = self.ctx.generators
        parts = []
        for m, p in self.items():
            word = "*".join(gens[i].name for i in m)
            ps = p.render(names)
            if not word:
                parts.append(f"({ps})")
            elif ps == "1":
                parts.append(word)
            elif ps == "-1":
                parts.append(f"-{word}")
            else:
                parts.append(f"({ps})*{word}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"GradedElement({self.render()})"


def normalize(ctx: GradedContext, terms: Iterable[Tuple[Union[Poly, Number], Sequence[str]]]) -> GradedElement:
    """Canonical form of a sum of (coefficient, generator word) pairs."""
    out = GradedElement.zero(ctx)
    for coeff, names in terms:
        out = out + GradedElement.word(ctx, names, coeff)
    return out


def mul(a: GradedElement, b: GradedElement) -> GradedElement:
    a._check(b)
    ctx = a.ctx
    out: Dict[Monomial, Poly] = {}
    for m1, p1 in a.terms.items():
        for m2, p2 in b.terms.items():
            s, m = mono_mul(ctx, m1, m2)
            if s == 0:
                continue
            p = p1 * p2
            if s < 0:
                p = -p
            q = out.get(m)
            out[m] = p if q is None else q + p
    return GradedElement._raw(ctx, {m: p for m, p in out.items() if p})


def graded_derivative(e: GradedElement, gen: str) -> GradedElement:
    """Left derivative with respect to a generator."""
    ctx = e.ctx
    g = ctx.index(gen)
    gdeg = ctx._deg[g]
    out: Dict[Monomial, Poly] = {}
    for m, p in e.terms.items():
        if g not in m:
            continue
        j = m.index(g)
        passed = sum(ctx._deg[i] for i in m[:j])
        count = m.count(g)
        rest = m[:j] + m[j + 1:]
        c = p.scale(count) if count > 1 else p
        if (gdeg * passed) % 2:
            c = -c
        q = out.get(rest)
        out[rest] = c if q is None else q + c
    return GradedElement._raw(ctx, {m: p for m, p in out.items() if p})


def is_zero(e: GradedElement) -> bool:
    return e.is_zero()


def koszul_sign(da: int, db: int) -> int:
    return -1 if (da * db) % 2 else 1


def flatten(e: GradedElement, label: tuple = ()) -> Dict[tuple, Fraction]:
    """Coordinates of ``e`` as {label + (monomial, exponent): coefficient}."""
    return {label + (m, x): c for m, p in e.terms.items() for x, c in p.terms.items()}


def flatten_poly(p: Poly, label: tuple = ()) -> Dict[tuple, Fraction]:
    return {label + (x,): c for x, c in p.terms.items()}


def monomials_up_to(nvars: int, degree: int):
    """Exponent vectors of total degree <= degree, graded then reverse-lex."""
    out = [e for e in itertools.product(range(degree + 1), repeat=nvars) if sum(e) <= degree]
    return sorted(out, key=lambda x: (sum(x), tuple(-k for k in x)))
