"""Worldsheet side: twisted pullback, boundary localization and action assembly.

The worldsheet algebra has scalar fields X^i, 1-form fields A^a and their
differentials dX^i (degree 1) and dA^a (degree 2).  It is isomorphic to the
algebra on T[1]E[1] via x -> X, theta -> dX, eta -> A, psi -> dA; the twisted
pullback differs from that isomorphism only by minimal coupling.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .cartan import d_derivation, exterior_d, homotopy
from .gengeo import OOperator, mat_add, matmul
from .qmanifold import AlgebroidData, _names, build_Q, lift_Qtilde
from .symkernel import Generator, GradedContext, GradedElement, Poly


class NotExactError(ValueError):
    pass


def _sub(i: int) -> str:
    return str(i) if i < 10 else "{%d}" % i


def worldsheet_context(n: int, rank: int, lower: bool = False) -> GradedContext:
    """X^i, dX^i, A^a, dA^a; ``lower`` writes the gauge field with a lower index."""
    coords = tuple(f"X{i + 1}" for i in range(n))
    pos = "_" if lower else "^"
    dX = tuple(Generator(f"dX{i + 1}", 0, 1, latex=f"d X^{_sub(i + 1)}") for i in range(n))
    A = tuple(Generator(f"A{a + 1}", 0, 1, latex=f"A{pos}{_sub(a + 1)}") for a in range(rank))
    dA = tuple(Generator(f"dA{a + 1}", 0, 2, latex=f"d A{pos}{_sub(a + 1)}") for a in range(rank))
    diff = tuple((c, g.name) for c, g in zip(coords, dX)) + tuple((a.name, b.name) for a, b in zip(A, dA))
    return GradedContext(coords, dX + A + dA, diff, coord_latex=tuple(f"X^{_sub(i + 1)}" for i in range(n)))


def algebra_map(e: GradedElement, target: GradedContext, images: Sequence[GradedElement]) -> GradedElement:
    """Homomorphism fixing coefficients and sending generator g to images[g]."""
    out = GradedElement.zero(target)
    for m, p in e.terms.items():
        t = GradedElement.scalar(target, p)
        for g in m:
            t = t * images[g]
            if not t:
                break
        out = out + t
    return out


class Worldsheet:
    """Pullbacks from T[1]E[1] for one algebroid."""

    def __init__(self, E: AlgebroidData, lower: bool = False):
        self.E = E
        self.ctx = worldsheet_context(E.n, E.rank, lower)
        self.Q = build_Q(E)
        n, r = E.n, E.rank
        src = E.ctx
        thetas, etas, psis = _names(src, n, r)
        ws = self.ctx
        self.flat: List[GradedElement] = [GradedElement.zero(ws)] * len(src.generators)
        for i, t in enumerate(thetas):
            self.flat[src.index(t)] = GradedElement.gen(ws, f"dX{i + 1}")
        for a in range(r):
            self.flat[src.index(etas[a])] = GradedElement.gen(ws, f"A{a + 1}")
            self.flat[src.index(psis[a])] = GradedElement.gen(ws, f"dA{a + 1}")
        self.twisted = list(self.flat)
        for i, t in enumerate(thetas):
            self.twisted[src.index(t)] = self.flat[src.index(t)] - self.untwisted(self.Q.image_of_coord(i))
        for a in range(r):
            g = src.index(etas[a])
            self.twisted[src.index(psis[a])] = self.flat[src.index(psis[a])] - self.untwisted(self.Q.image_of_gen(g))

    def untwisted(self, F: GradedElement) -> GradedElement:
        """(f_0)^*: the plain isomorphism."""
        return algebra_map(F, self.ctx, self.flat)

    def pullback(self, F: GradedElement) -> GradedElement:
        """f^* = exp(iota_Q) o (f_0)^* o exp(-iota_Q), evaluated on generators."""
        return algebra_map(F, self.ctx, self.twisted)

    def d(self, w: GradedElement) -> GradedElement:
        return d_derivation(self.ctx).apply(w)


def pullback_f(F: GradedElement, E: AlgebroidData) -> GradedElement:
    return Worldsheet(E).pullback(F)


def random_superfunction(ctx: GradedContext, rng: random.Random, max_degree: int = 3,
                         terms: int = 4, coeff_degree: int = 2) -> GradedElement:
    gens = [g.name for g in ctx.generators]
    out = GradedElement.zero(ctx)
    for _ in range(terms):
        k = rng.randint(0, 3)
        word = rng.sample(gens, min(k, len(gens)))
        if sum(ctx.generators[ctx.index(w)].degree for w in word) > max_degree:
            continue
        exp = tuple(rng.randint(0, coeff_degree) if rng.random() < 0.5 else 0 for _ in range(ctx.nvars))
        c = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
        if c:
            out = out + GradedElement.word(ctx, word, Poly.monomial(exp, c))
    return out


@dataclass
class ChainMapReport:
    passed: bool
    generator_residuals: Dict[str, GradedElement]
    sample_failures: List[GradedElement] = field(default_factory=list)

    def zero_claims(self) -> List[Poly]:
        out = []
        for r in self.generator_residuals.values():
            out.extend(r.polys())
        return out


def chain_map_check(E: AlgebroidData, samples: int = 50, seed: int = 0) -> ChainMapReport:
    """d o f^* = f^* o Q~ on coordinates, generators and random superfunctions."""
    W = Worldsheet(E)
    src = E.ctx
    Qt = lift_Qtilde(W.Q)
    res = {}
    probes = [(c, GradedElement.scalar(src, Poly.var(src.nvars, i))) for i, c in enumerate(src.coords)]
    probes += [(g.name, GradedElement.gen(src, g.name)) for g in src.generators]
    for name, e in probes:
        res[name] = W.d(W.pullback(e)) - W.pullback(Qt.apply(e))
    rng = random.Random(seed)
    fails = []
    for _ in range(samples):
        F = random_superfunction(src, rng)
        r = W.d(W.pullback(F)) - W.pullback(Qt.apply(F))
        if r:
            fails.append(F)
    ok = all(not r for r in res.values()) and not fails
    return ChainMapReport(ok, res, fails)


# ---------------------------------------------------------------------------
# actions


@dataclass
class ActionExpression:
    boundary: GradedElement
    bulk: GradedElement
    fields: Dict[str, object] = field(default_factory=dict)

    @property
    def ctx(self) -> GradedContext:
        return self.boundary.ctx

    def consistency(self, total: GradedElement) -> GradedElement:
        """d(boundary) + bulk - total; zero for a faithful decomposition."""
        return d_derivation(self.ctx).apply(self.boundary) + self.bulk - total


def form_image(H: GradedElement | None, ctx: GradedContext) -> GradedElement:
    """X^*H: a base form with dx^i -> dX^i."""
    if H is None:
        return GradedElement.zero(ctx)
    src = H.ctx
    out = GradedElement.zero(ctx)
    for m, p in H.terms.items():
        names = []
        for g in m:
            i = src.coords.index(next(c for c, t in src.differential if t == src.generators[g].name))
            names.append(f"dX{i + 1}")
        out = out + GradedElement.word(ctx, names, p)
    return out


def canonical_potential(B: GradedElement) -> GradedElement:
    """Representative of B + (exact) without dA terms and with a pure dX part of the form K(db)."""
    ctx = B.ctx
    d = d_derivation(ctx)
    dA = {ctx.index(g.name) for g in ctx.generators if g.name.startswith("dA")}
    dX = {ctx.index(g.name) for g in ctx.generators if g.name.startswith("dX")}
    for m, p in list(B.terms.items()):
        if len(m) == 1 and m[0] in dA:
            a = ctx.generators[m[0]].name[2:]
            B = B - d.apply(GradedElement.word(ctx, [f"A{a}"], p))
    pure = B.filter(lambda m: all(g in dX for g in m))
    if pure:
        B = B - pure
        db = d.apply(pure)
        if db:
            B = B + homotopy(db)
    return B


def localize_boundary(omega3: GradedElement, H: GradedElement | None = None) -> ActionExpression:
    """Split omega3 into d(B) + X^*H with B in canonical form."""
    ctx = omega3.ctx
    bulk = form_image(H, ctx)
    rest = omega3 - bulk
    if not rest:
        return ActionExpression(GradedElement.zero(ctx), bulk)
    d = d_derivation(ctx)
    if d.apply(rest):
        raise NotExactError("remainder is not closed, so it cannot localize to the boundary")
    B = canonical_potential(homotopy(rest))
    if d.apply(B) != rest:
        raise NotExactError("homotopy failed to produce a potential")
    return ActionExpression(B, bulk)


def gauge_action(Ht: GradedElement, E: AlgebroidData, H: GradedElement | None, lower: bool = True) -> ActionExpression:
    W = Worldsheet(E, lower=lower)
    act = localize_boundary(W.pullback(Ht), H)
    act.fields = {"scalars": list(W.ctx.coords), "gauge": [f"A{a + 1}" for a in range(E.rank)]}
    return act


def hpsm_integrand(P, ctx: GradedContext) -> GradedElement:
    """A_i dX^i + 1/2 Pi^{ij} A_i A_j."""
    n = P.n
    out = GradedElement.zero(ctx)
    for i in range(n):
        out = out + GradedElement.word(ctx, [f"A{i + 1}", f"dX{i + 1}"])
    for i in range(n):
        for j in range(n):
            if P.m[i][j]:
                out = out + GradedElement.word(ctx, [f"A{i + 1}", f"A{j + 1}"], P.m[i][j].scale(Fraction(1, 2)))
    return out


def jacobi_trivector_term(P, ctx: GradedContext) -> GradedElement:
    """Pi^{ij}_{,l} Pi^{lk} A_i A_j A_k."""
    n = P.n
    out = GradedElement.zero(ctx)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                c = Poly.zero(n)
                for l in range(n):
                    if P.m[l][k]:
                        c = c + P.m[i][j].diff(l) * P.m[l][k]
                if c:
                    out = out + GradedElement.word(ctx, [f"A{i + 1}", f"A{j + 1}", f"A{k + 1}"], c)
    return out


# -- Dirac sigma model ------------------------------------------------------------


def _vec(ctx: GradedContext, M, name: str) -> List[GradedElement]:
    """Components (M a)^i for the 1-form field a = name^j."""
    n = len(M)
    return [sum((GradedElement.word(ctx, [f"{name}{j + 1}"], M[i][j]) for j in range(len(M[0])) if M[i][j]),
                GradedElement.zero(ctx)) for i in range(n)]


def _g_wedge(G, u: Sequence[GradedElement], v: Sequence[GradedElement], ctx) -> GradedElement:
    out = GradedElement.zero(ctx)
    for i in range(len(u)):
        for j in range(len(v)):
            if G[i][j] and u[i] and v[j]:
                out = out + (u[i] * v[j]).scale(G[i][j])
    return out


@dataclass
class DSMResult:
    metric_form: ActionExpression       # g((1+O)a ^, dX) + g(a ^, O a)
    split_form: ActionExpression        # A_i dX^i - 1/2 A_i V^i
    residual: GradedElement
    literal_residual: GradedElement     # with g(dX ^, (1+O) a) read literally
    cotangent_residual: GradedElement   # with A = g(1 - O) a

    @property
    def agree(self) -> bool:
        return not self.residual


def dsm_assemble(O: OOperator, H: GradedElement | None = None) -> DSMResult:
    """Both renderings of the topological DSM integrand for the gauge field a along D.

    The field is rescaled by the denominator of O (a = den * a'), so with
    O = N/den we have A = g(den + N) a', V = (den - N) a' and every term is
    polynomial.  Fields are written A1.. for a'.
    """
    n = O.n
    ctx = worldsheet_context(n, n)
    G = O.g_matrix()
    den = O.den
    Dm = [[den if i == j else Poly.zero(O.nvars) for j in range(n)] for i in range(n)]
    plus = mat_add(Dm, O.num)
    minus = mat_add(Dm, [[-x for x in r] for r in O.num])
    a_den = _vec(ctx, Dm, "A")
    Na = _vec(ctx, O.num, "A")
    plus_a = _vec(ctx, plus, "A")
    minus_a = _vec(ctx, minus, "A")
    dX = [GradedElement.gen(ctx, f"dX{i + 1}") for i in range(n)]
    bulk = form_image(H, ctx)
    form1 = _g_wedge(G, plus_a, dX, ctx) + _g_wedge(G, a_den, Na, ctx)
    literal = _g_wedge(G, dX, plus_a, ctx) + _g_wedge(G, a_den, Na, ctx)
    A = _vec(ctx, matmul(G, plus), "A")
    half = Fraction(1, 2)
    form2 = GradedElement.zero(ctx)
    for i in range(n):
        form2 = form2 + A[i] * dX[i] - (A[i] * minus_a[i]).scale(half)
    A_minus = _vec(ctx, matmul(G, minus), "A")
    form3 = GradedElement.zero(ctx)
    for i in range(n):
        form3 = form3 + A_minus[i] * dX[i] - (A_minus[i] * minus_a[i]).scale(half)
    fields = {"gauge": "A (rescaled by the denominator of O)", "denominator": den.render(ctx.coords)}
    return DSMResult(ActionExpression(form1, bulk, fields), ActionExpression(form2, bulk, fields),
                     form1 - form2, literal - form2, form3 - form2)


def dsm_graph_check(O: OOperator, P) -> GradedElement:
    """Substitute A_i -> (g(den+N)a)_i into the twisted PSM integrand and compare with the split form.

    Zero exactly when V = Pi# A holds for the operator, i.e. D is the graph of Pi.
    """
    res = dsm_assemble(O)
    ctx = res.split_form.ctx
    n = O.n
    G = O.g_matrix()
    Dm = [[O.den if i == j else Poly.zero(O.nvars) for j in range(n)] for i in range(n)]
    A = _vec(ctx, matmul(G, mat_add(Dm, O.num)), "A")
    target = hpsm_integrand(P, ctx)
    images = list(GradedElement.gen(ctx, g.name) for g in ctx.generators)
    for i in range(n):
        images[ctx.index(f"A{i + 1}")] = A[i]
        images[ctx.index(f"dA{i + 1}")] = d_derivation(ctx).apply(A[i])
    return algebra_map(target, ctx, images) - res.split_form.boundary


# ---------------------------------------------------------------------------
# emission


def _frac(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}"


def _terms(e: GradedElement) -> List[dict]:
    ctx = e.ctx
    out = []
    for m in sorted(e.terms, key=lambda m: (len(m), m)):
        p = e.terms[m]
        for exp in sorted(p.terms):
            out.append({"coefficient": _frac(p.terms[exp]), "X": list(exp),
                        "forms": [ctx.generators[g].name for g in m]})
    return out


def to_json(action: ActionExpression) -> str:
    ctx = action.ctx
    doc = {
        "schema": 1,
        "fields": {
            "scalars": list(ctx.coords),
            "forms": [g.name for g in ctx.generators],
            "lower_index": any(g.latex.startswith("A_") for g in ctx.generators),
            "notes": {k: v for k, v in sorted(action.fields.items()) if isinstance(v, str)},
        },
        "boundary": _terms(action.boundary),
        "bulk": _terms(action.bulk),
    }
    return json.dumps(doc, indent=2)


def from_json(text: str) -> ActionExpression:
    doc = json.loads(text)
    if doc.get("schema") != 1:
        raise ValueError("unsupported action schema")
    f = doc["fields"]
    n = len(f["scalars"])
    rank = sum(1 for g in f["forms"] if g.startswith("A"))
    ctx = worldsheet_context(n, rank, f.get("lower_index", False))

    def build(terms):
        out = GradedElement.zero(ctx)
        for t in terms:
            num, den = t["coefficient"].split("/")
            out = out + GradedElement.word(ctx, t["forms"], Poly.monomial(tuple(t["X"]), Fraction(int(num), int(den))))
        return out

    notes = dict(f.get("notes", {}))
    return ActionExpression(build(doc["boundary"]), build(doc["bulk"]), notes)


def _latex_coeff(p: Poly, ctx: GradedContext) -> Tuple[str, bool]:
    """Rendered coefficient and whether it needs to be printed."""
    if p.is_constant():
        c = p.constant_term()
        if c == 1:
            return "", False
        if c == -1:
            return "-", False
        return _latex_rational(c), True
    names = ctx.coord_latex or ctx.coords
    body = p.render(names, power="^", times=" ")
    return (f"\\left({body}\\right)" if len(p.terms) > 1 else body), True


def _latex_rational(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    sign = "-" if c < 0 else ""
    return f"{sign}\\frac{{{abs(c.numerator)}}}{{{c.denominator}}}"


def _latex_element(e: GradedElement) -> str:
    ctx = e.ctx
    parts = []
    rest = e
    n = ctx.nvars
    gauge = [g for g in ctx.generators if g.name.startswith("A")]
    if len(gauge) == n and n:
        canon = GradedElement.zero(ctx)
        for i in range(n):
            canon = canon + GradedElement.word(ctx, [f"A{i + 1}", f"dX{i + 1}"])
        probe = e - canon
        if all(probe.coefficient([f"A{i + 1}", f"dX{i + 1}"]).is_zero() for i in range(n)):
            lower = gauge[0].latex.startswith("A_")
            parts.append("A_i \\wedge d X^i" if lower else "A^i \\wedge d X^i")
            rest = probe
    for m in sorted(rest.terms, key=lambda m: (len(m), m)):
        coeff, show = _latex_coeff(rest.terms[m], ctx)
        word = " \\wedge ".join(ctx.generators[g].latex for g in m)
        if not word:
            parts.append(coeff if show else ("1" if coeff == "" else "-1"))
        elif show:
            parts.append(f"{coeff}\\, {word}")
        else:
            parts.append(f"{coeff}{word}")
    if not parts:
        return "0"
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


def to_latex(action: ActionExpression) -> str:
    b = _latex_element(action.boundary)
    h = _latex_element(action.bulk)
    return f"S = \\int_\\Sigma \\left( {b} \\right) + \\int_{{\\tilde\\Sigma}} \\left( {h} \\right)"


def emit(action: ActionExpression, fmt: str = "latex") -> str:
    if fmt == "latex":
        return to_latex(action)
    if fmt == "json":
        return to_json(action)
    raise ValueError(f"unknown format {fmt!r}")
