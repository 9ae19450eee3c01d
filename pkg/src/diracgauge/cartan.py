"""Cartan calculus on polynomial forms and on graded manifolds.

Derivations are stored by their values on base coordinates and generators;
that determines them on the whole algebra.  Vector fields on ``E[1]`` are
kept as derivations that vanish on the differentials, and their interior
products and Lie derivatives on ``T[1]E[1]`` are built from that data.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .symkernel import (
    ContextError,
    Generator,
    GradedContext,
    GradedElement,
    Monomial,
    Poly,
    mono_mul,
)


def coordinate_names(n: int, stem: str = "x") -> Tuple[str, ...]:
    return tuple(f"{stem}{i + 1}" for i in range(n))


def form_context(n: int, coords: Sequence[str] | None = None) -> GradedContext:
    """Differential forms on R^n: one form-degree-1 generator per coordinate."""
    coords = tuple(coords) if coords else coordinate_names(n)
    if len(coords) != n:
        raise ValueError("need n coordinate names")
    gens = tuple(Generator(f"d{c}", 0, 1, latex=f"\\mathrm{{d}}{c}") for c in coords)
    diff = tuple((c, f"d{c}") for c in coords)
    return GradedContext(coords, gens, diff)


def algebroid_context(n: int, rank: int, coords: Sequence[str] | None = None,
                      ghost: str = "eta", tangent: str = "theta", ghost_diff: str = "psi") -> GradedContext:
    """Functions on T[1]E[1] for a rank-``rank`` bundle over R^n.

    Generator order is theta^i (0,1), eta^a (1,0), psi^a = d eta^a (1,1).
    """
    coords = tuple(coords) if coords else coordinate_names(n)
    thetas = tuple(Generator(f"{tangent}{i + 1}", 0, 1) for i in range(n))
    etas = tuple(Generator(f"{ghost}{a + 1}", 1, 0) for a in range(rank))
    psis = tuple(Generator(f"{ghost_diff}{a + 1}", 1, 1) for a in range(rank))
    diff = tuple((c, t.name) for c, t in zip(coords, thetas)) + tuple(
        (e.name, p.name) for e, p in zip(etas, psis))
    return GradedContext(coords, thetas + etas + psis, diff)


class Derivation:
    """Graded derivation of a context's algebra, of fixed total degree."""

    __slots__ = ("ctx", "degree", "coord_images", "gen_images")

    def __init__(self, ctx: GradedContext, degree: int,
                 coord_images: Dict[int, GradedElement] | None = None,
                 gen_images: Dict[int, GradedElement] | None = None):
        self.ctx = ctx
        self.degree = degree
        self.coord_images = {i: e for i, e in (coord_images or {}).items() if e}
        self.gen_images = {g: e for g, e in (gen_images or {}).items() if e}
        for i, e in self.coord_images.items():
            self._check_image(e, 0)
        for g, e in self.gen_images.items():
            self._check_image(e, ctx.generators[g].degree)

    def _check_image(self, e: GradedElement, source_degree: int):
        if e.ctx != self.ctx:
            raise ContextError("derivation image in a foreign context")
        for m in e.terms:
            if self.ctx.mono_degree(m) != source_degree + self.degree:
                raise ValueError("derivation image has the wrong degree")

    @property
    def odd(self) -> bool:
        return self.degree % 2 == 1

    def image_of_coord(self, i: int) -> GradedElement:
        return self.coord_images.get(i, GradedElement.zero(self.ctx))

    def image_of_gen(self, g: int) -> GradedElement:
        return self.gen_images.get(g, GradedElement.zero(self.ctx))

    def on(self, name: str) -> GradedElement:
        """Image of a coordinate or generator given by name."""
        if name in self.ctx.coords:
            return self.image_of_coord(self.ctx.coord_index(name))
        return self.image_of_gen(self.ctx.index(name))

    def apply(self, e: GradedElement) -> GradedElement:
        if e.ctx != self.ctx:
            raise ContextError("derivation applied to a foreign element")
        ctx = self.ctx
        degs = ctx._deg
        out: Dict[Monomial, Poly] = {}

        def add(m, p):
            q = out.get(m)
            out[m] = p if q is None else q + p

        for m, p in e.terms.items():
            for i, img in self.coord_images.items():
                dp = p.diff(i)
                if not dp:
                    continue
                for mi, pi in img.terms.items():
                    s, mm = mono_mul(ctx, mi, m)
                    if s:
                        add(mm, dp * pi if s > 0 else -(dp * pi))
            passed = 0
            for j, g in enumerate(m):
                img = self.gen_images.get(g)
                if img is not None:
                    sign = -1 if (self.degree * passed) % 2 else 1
                    left, right = m[:j], m[j + 1:]
                    for mi, pi in img.terms.items():
                        s1, m1 = mono_mul(ctx, left, mi)
                        if not s1:
                            continue
                        s2, m2 = mono_mul(ctx, m1, right)
                        if not s2:
                            continue
                        c = p * pi
                        add(m2, c if sign * s1 * s2 > 0 else -c)
                passed += degs[g]
        return GradedElement._raw(ctx, {m: p for m, p in out.items() if p})

    __call__ = apply

    def __add__(self, other: "Derivation") -> "Derivation":
        if other.degree != self.degree or other.ctx != self.ctx:
            raise ValueError("can only add derivations of equal degree on one context")
        ci = dict(self.coord_images)
        for i, e in other.coord_images.items():
            ci[i] = ci[i] + e if i in ci else e
        gi = dict(self.gen_images)
        for g, e in other.gen_images.items():
            gi[g] = gi[g] + e if g in gi else e
        return Derivation(self.ctx, self.degree, ci, gi)

    def __neg__(self) -> "Derivation":
        return Derivation(self.ctx, self.degree,
                          {i: -e for i, e in self.coord_images.items()},
                          {g: -e for g, e in self.gen_images.items()})

    def __sub__(self, other: "Derivation") -> "Derivation":
        return self + (-other)

    def scale(self, c) -> "Derivation":
        return Derivation(self.ctx, self.degree,
                          {i: e.scale(c) for i, e in self.coord_images.items()},
                          {g: e.scale(c) for g, e in self.gen_images.items()})

    def is_zero(self) -> bool:
        return not self.coord_images and not self.gen_images

    def __eq__(self, other) -> bool:
        if not isinstance(other, Derivation):
            return NotImplemented
        return (self.ctx == other.ctx and self.degree == other.degree
                and self.coord_images == other.coord_images and self.gen_images == other.gen_images)

    __hash__ = None

    def __repr__(self) -> str:
        parts = []
        for i, e in sorted(self.coord_images.items()):
            parts.append(f"{self.ctx.coords[i]} -> {e.render()}")
        for g, e in sorted(self.gen_images.items()):
            parts.append(f"{self.ctx.generators[g].name} -> {e.render()}")
        return f"Derivation(deg={self.degree}; " + "; ".join(parts) + ")"


VectorField = Derivation


def zero_derivation(ctx: GradedContext, degree: int) -> Derivation:
    return Derivation(ctx, degree)


def vector_field(ctx: GradedContext, components: Sequence[Poly]) -> Derivation:
    """Ordinary vector field v^i d/dx^i, vanishing on all generators."""
    if len(components) != ctx.nvars:
        raise ValueError("one component per coordinate expected")
    return Derivation(ctx, 0, {i: GradedElement.scalar(ctx, c) for i, c in enumerate(components)})


def gen_vector_field(ctx: GradedContext, degree: int, coord_images: Dict[str, GradedElement] | None = None,
                     gen_images: Dict[str, GradedElement] | None = None) -> Derivation:
    """Derivation given by images keyed by coordinate and generator names."""
    ci = {ctx.coord_index(k): v for k, v in (coord_images or {}).items()}
    gi = {ctx.index(k): v for k, v in (gen_images or {}).items()}
    return Derivation(ctx, degree, ci, gi)


def partial_gen(ctx: GradedContext, name: str, coeff: Poly | None = None) -> Derivation:
    """coeff * d/d(name) for a generator."""
    g = ctx.index(name)
    c = coeff if coeff is not None else Poly.const(ctx.nvars, 1)
    return Derivation(ctx, -ctx.generators[g].degree, gen_images={g: GradedElement.scalar(ctx, c)})


def d_derivation(ctx: GradedContext) -> Derivation:
    """The de Rham differential of a context with differential pairs."""
    ci, gi = {}, {}
    for src, tgt in ctx.differential:
        img = GradedElement.gen(ctx, tgt)
        if src in ctx.coords:
            ci[ctx.coord_index(src)] = img
        else:
            gi[ctx.index(src)] = img
    return Derivation(ctx, 1, ci, gi)


def exterior_d(omega: GradedElement) -> GradedElement:
    ctx = omega.ctx
    have = {a for a, _ in ctx.differential}
    for m, p in omega.terms.items():
        if not p.is_constant() and len(have.intersection(ctx.coords)) < ctx.nvars:
            raise ContextError("context lacks coordinate differentials")
        for g in m:
            name = ctx.generators[g].name
            if name not in have and name not in {b for _, b in ctx.differential}:
                raise ContextError(f"context lacks the differential of {name!r}")
    return d_derivation(ctx).apply(omega)


def graded_commutator(X: Derivation, Y: Derivation) -> Derivation:
    """[X, Y] = XY - (-1)^{|X||Y|} YX."""
    if X.ctx != Y.ctx:
        raise ContextError("derivations on different contexts")
    ctx = X.ctx
    sign = -1 if (X.degree * Y.degree) % 2 else 1
    ci, gi = {}, {}
    for i in range(ctx.nvars):
        a = X.apply(Y.image_of_coord(i))
        b = Y.apply(X.image_of_coord(i))
        v = a - b if sign > 0 else a + b
        if v:
            ci[i] = v
    for g in range(len(ctx.generators)):
        a = X.apply(Y.image_of_gen(g))
        b = Y.apply(X.image_of_gen(g))
        v = a - b if sign > 0 else a + b
        if v:
            gi[g] = v
    return Derivation(ctx, X.degree + Y.degree, ci, gi)


def interior_derivation(X: Derivation) -> Derivation:
    """iota_X: d(q) -> X(q) for every coordinate/generator q that has a differential."""
    ctx = X.ctx
    gi = {}
    for src, tgt in ctx.differential:
        img = X.on(src)
        if img:
            gi[ctx.index(tgt)] = img
    return Derivation(ctx, X.degree - 1, {}, gi)


def lie_derivation(X: Derivation) -> Derivation:
    """L_X = [iota_X, d]."""
    return graded_commutator(interior_derivation(X), d_derivation(X.ctx))


def interior(v: Derivation, omega: GradedElement) -> GradedElement:
    return interior_derivation(v).apply(omega)


def lie(v: Derivation, omega: GradedElement) -> GradedElement:
    return lie_derivation(v).apply(omega)


# ---------------------------------------------------------------------------
# forms on R^n, component helpers


def form_from_components(ctx: GradedContext, comps: Dict[Tuple[int, ...], Poly]) -> GradedElement:
    """sum over strictly increasing index tuples of c_I dx^I (0-based indices)."""
    out = GradedElement.zero(ctx)
    dnames = [ctx.d_of(c) for c in ctx.coords]
    for idx, c in comps.items():
        out = out + GradedElement.word(ctx, [dnames[i] for i in idx], c)
    return out


def one_form(ctx: GradedContext, comps: Sequence[Poly]) -> GradedElement:
    return form_from_components(ctx, {(i,): c for i, c in enumerate(comps)})


def form_components(omega: GradedElement) -> Dict[Tuple[int, ...], Poly]:
    """Inverse of form_from_components for a form built on coordinate differentials."""
    ctx = omega.ctx
    pos = {ctx.index(ctx.d_of(c)): i for i, c in enumerate(ctx.coords)}
    out = {}
    for m, p in omega.terms.items():
        try:
            idx = tuple(pos[g] for g in m)
        except KeyError:
            raise ContextError("not a base differential form") from None
        out[idx] = p
    return out


def one_form_components(omega: GradedElement) -> List[Poly]:
    n = omega.ctx.nvars
    comps = [Poly.zero(n) for _ in range(n)]
    for idx, p in form_components(omega).items():
        if len(idx) != 1:
            raise ValueError("not a 1-form")
        comps[idx[0]] = p
    return comps


def form_degree_of(omega: GradedElement) -> Optional[int]:
    fs = {omega.ctx.mono_bidegree(m)[1] for m in omega.terms}
    if not fs:
        return None
    if len(fs) > 1:
        raise ValueError("form is not homogeneous")
    return fs.pop()


def function_of(ctx: GradedContext, p: Poly) -> GradedElement:
    return GradedElement.scalar(ctx, p)


def vector_bracket(v: Sequence[Poly], w: Sequence[Poly]) -> List[Poly]:
    """Lie bracket of ordinary vector fields by components."""
    n = len(v)
    out = []
    for k in range(n):
        c = Poly.zero(v[0].nvars)
        for i in range(n):
            if v[i]:
                c = c + v[i] * w[k].diff(i)
            if w[i]:
                c = c - w[i] * v[k].diff(i)
        out.append(c)
    return out


def apply_vector(v: Sequence[Poly], f: Poly) -> Poly:
    out = Poly.zero(f.nvars)
    for i, c in enumerate(v):
        if c:
            out = out + c * f.diff(i)
    return out


class SymTensor2:
    """Symmetric 2-tensor g_ij with polynomial entries."""

    def __init__(self, entries: Sequence[Sequence[Poly]]):
        n = len(entries)
        self.entries = [list(row) for row in entries]
        for i in range(n):
            if len(self.entries[i]) != n:
                raise ValueError("square matrix expected")
            for j in range(i):
                if self.entries[i][j] != self.entries[j][i]:
                    raise ValueError("tensor is not symmetric")

    @classmethod
    def identity(cls, n: int) -> "SymTensor2":
        return cls([[Poly.const(n, 1 if i == j else 0) for j in range(n)] for i in range(n)])

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def is_zero(self) -> bool:
        return all(not e for row in self.entries for e in row)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymTensor2) and self.entries == other.entries

    __hash__ = None


def lie_sym2(v: Sequence[Poly], g: SymTensor2) -> SymTensor2:
    """(L_v g)_ij = v^k d_k g_ij + g_kj d_i v^k + g_ik d_j v^k."""
    n = g.n
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            c = apply_vector(v, g[i, j])
            for k in range(n):
                c = c + g[k, j] * v[k].diff(i) + g[i, k] * v[k].diff(j)
            row.append(c)
        out.append(row)
    return SymTensor2(out)


# ---------------------------------------------------------------------------
# contracting homotopy


def euler_interior(ctx: GradedContext) -> Derivation:
    """iota_E for the Euler field: each differential generator maps to its primitive."""
    gi = {}
    for src, tgt in ctx.differential:
        if src in ctx.coords:
            gi[ctx.index(tgt)] = GradedElement.scalar(ctx, Poly.var(ctx.nvars, ctx.coord_index(src)))
        else:
            gi[ctx.index(tgt)] = GradedElement.gen(ctx, src)
    return Derivation(ctx, -1, {}, gi)


def _weight_split(omega: GradedElement) -> Dict[int, GradedElement]:
    ctx = omega.ctx
    parts: Dict[int, Dict] = {}
    for m, p in omega.terms.items():
        for e, c in p.terms.items():
            w = sum(e) + len(m)
            parts.setdefault(w, {}).setdefault(m, {})[e] = c
    return {w: GradedElement(ctx, {m: Poly(ctx.nvars, t) for m, t in d.items()}) for w, d in parts.items()}


def homotopy(omega: GradedElement) -> GradedElement:
    """Scaling homotopy K with dK + Kd = id on elements of positive weight.

    Weight counts polynomial degree plus generator factors; it is the
    eigenvalue of the Euler Lie derivative, so K = iota_E / weight.
    """
    ctx = omega.ctx
    paired = {b for _, b in ctx.differential} | {a for a, _ in ctx.differential}
    for g in ctx.generators:
        if g.name not in paired:
            raise ContextError(f"generator {g.name!r} has no differential partner")
    iE = euler_interior(ctx)
    out = GradedElement.zero(ctx)
    for w, part in _weight_split(omega).items():
        if w == 0:
            raise ValueError("homotopy undefined on constants")
        out = out + iE.apply(part).scale(Fraction(1, w))
    return out


def homotopy_K(omega: GradedElement, p: int | None = None) -> GradedElement:
    """Poincare-lemma homotopy for polynomial p-forms on R^n, p >= 1."""
    deg = form_degree_of(omega)
    if p is None:
        p = deg if deg is not None else 1
    if p < 1:
        raise ValueError("homotopy_K needs form degree >= 1")
    if deg is not None and deg != p:
        raise ValueError(f"form has degree {deg}, not {p}")
    return homotopy(omega)
