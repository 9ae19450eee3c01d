"""Point-sampling check of symbolic zero claims.

A claim is either a polynomial expression (``Poly`` or ``GradedElement``)
whose coefficients must vanish, or a callable that recomputes an identity
numerically at a point from the raw model data and returns the residual
values there.  The callables are the independent channel: they never go
through the graded kernel, only through polynomial evaluation.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from ..symkernel import GradedElement, Poly

MAX_DEN = 97
MAX_NUM = 200

Point = List[Fraction]
Claim = Union[Poly, GradedElement, Callable[[Point], Iterable[Fraction]]]


@dataclass
class OracleResult:
    passed: bool
    samples: int
    seed: int
    claims: int
    witness: Optional[dict] = None

    def as_dict(self) -> dict:
        out = {"passed": self.passed, "samples": self.samples, "seed": self.seed, "claims": self.claims}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def sample_points(nvars: int, k: int, seed: int) -> List[Point]:
    rng = random.Random(seed)
    return [[Fraction(rng.randint(-MAX_NUM, MAX_NUM), rng.randint(1, MAX_DEN)) for _ in range(nvars)]
            for _ in range(k)]


def _flatten(identity) -> List[Claim]:
    if isinstance(identity, (Poly, GradedElement)) or callable(identity):
        return [identity]
    out: List[Claim] = []
    for x in identity:
        out.extend(_flatten(x))
    return out


def _values(claim: Claim, pt: Point) -> Iterable[Fraction]:
    if isinstance(claim, Poly):
        return [claim.evaluate(pt)] if claim.terms else []
    if isinstance(claim, GradedElement):
        return [p.evaluate(pt) for p in claim.polys()]
    return claim(pt)


def _nvars(claim: Claim) -> Optional[int]:
    if isinstance(claim, Poly):
        return claim.nvars
    if isinstance(claim, GradedElement):
        return claim.ctx.nvars
    return getattr(claim, "nvars", None)


def oracle_sample(identity, samples: int = 20, seed: int = 0, nvars: Optional[int] = None) -> OracleResult:
    """Pass iff every claim vanishes at ``samples`` seeded rational points."""
    claims = _flatten(identity)
    cache: Dict[int, List[Point]] = {}
    for idx, claim in enumerate(claims):
        n = _nvars(claim) or nvars
        if n is None:
            raise ValueError("a pointwise claim needs the number of coordinates")
        if n not in cache:
            cache[n] = sample_points(n, samples, seed)
        for pt in cache[n]:
            for v in _values(claim, pt):
                if v:
                    return OracleResult(False, samples, seed, len(claims),
                                        {"claim": idx, "point": [str(c) for c in pt], "value": str(v)})
    return OracleResult(True, samples, seed, len(claims))


# -- pointwise recomputation from raw data -------------------------------------------


def pointwise(nvars: int):
    """Tag a point function with its number of coordinates."""
    def wrap(f):
        f.nvars = nvars
        return f
    return wrap


def termwise(fields: Sequence, elem: GradedElement):
    """X(elem) = 0 for every field X, with the sum over the terms of elem done at the point.

    Each field is applied to one term at a time, so cancellation between terms
    is confirmed numerically rather than by the kernel's normalization.
    """
    ctx = elem.ctx
    images = []
    for fi, X in enumerate(fields):
        for m, p in elem.terms.items():
            for k, q in X.apply(_term(ctx, m, p)).terms.items():
                images.append(((fi, k), q))

    @pointwise(ctx.nvars)
    def f(pt):
        acc: Dict[tuple, Fraction] = {}
        for key, q in images:
            acc[key] = acc.get(key, Fraction(0)) + q.evaluate(pt)
        return list(acc.values())
    return f


def _term(ctx, mono, coeff: Poly) -> GradedElement:
    return GradedElement.word(ctx, [ctx.generators[g].name for g in mono], coeff)


def jet(p: Poly, pt: Point) -> Tuple[Fraction, List[Fraction]]:
    return p.evaluate(pt), [p.diff(i).evaluate(pt) for i in range(p.nvars)]


def _perm_sign(idx) -> int:
    s = 1
    for i in range(len(idx)):
        for j in range(i + 1, len(idx)):
            if idx[i] > idx[j]:
                s = -s
    return s


def full_three(comps: Dict[Tuple[int, int, int], Poly], n: int, pt: Point):
    """Totally antisymmetric H_{ijk} at pt from components keyed by sorted 0-based triples."""
    H = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for key, p in comps.items():
        v = p.evaluate(pt)
        for perm in itertools.permutations(key):
            H[perm[0]][perm[1]][perm[2]] = _perm_sign(perm) * v
    return H


class SectionJet:
    """Value and first derivatives of (v, alpha) at a point."""

    def __init__(self, v: Sequence[Poly], alpha: Sequence[Poly], pt: Point):
        self.v, self.dv = zip(*(jet(p, pt) for p in v))
        self.a, self.da = zip(*(jet(p, pt) for p in alpha))


def pair(v, a, w, b) -> Fraction:
    return sum(x * y for x, y in zip(a, w)) + sum(x * y for x, y in zip(b, v))


def courant_at(s: SectionJet, t: SectionJet, u: SectionJet, H, n: int) -> Fraction:
    """<[s,t], u> for the twisted Dorfman bracket, written out in components."""
    vb = [sum(s.v[i] * t.dv[j][i] - t.v[i] * s.dv[j][i] for i in range(n)) for j in range(n)]
    form = []
    for j in range(n):
        lie = sum(s.v[i] * t.da[j][i] + t.a[i] * s.dv[i][j] for i in range(n))
        ida = sum(t.v[i] * (s.da[j][i] - s.da[i][j]) for i in range(n))
        hh = sum(s.v[i] * t.v[k] * H[i][k][j] for i in range(n) for k in range(n))
        form.append(lie - ida + hh)
    return pair(vb, form, u.v, u.a)


def frame_residuals(sections, comps, n: int):
    """Isotropy and Courant tensor of a frame, numerically."""
    @pointwise(n)
    def f(pt):
        jets = [SectionJet(v, a, pt) for v, a in sections]
        H = full_three(comps, n, pt)
        out = [pair(s.v, s.a, t.v, t.a) for s in jets for t in jets]
        for s, t, u in itertools.product(jets, repeat=3):
            out.append(courant_at(s, t, u, H, n))
        return out
    return f


def graph_sections(P: Dict[Tuple[int, int], Poly], n: int):
    """e_a = (Pi^{aj} d_j, dx^a) from upper-triangular 0-based components."""
    m = [[Poly.zero(n) for _ in range(n)] for _ in range(n)]
    for (i, j), p in P.items():
        m[i][j], m[j][i] = p, -p
    return [([m[a][j] for j in range(n)], [Poly.const(n, int(a == j)) for j in range(n)]) for a in range(n)]


def theta_at(v, alpha, comps, n: int):
    """d alpha - iota_v H in components (i < j)."""
    @pointwise(n)
    def f(pt):
        s = SectionJet(v, alpha, pt)
        H = full_three(comps, n, pt)
        return [s.da[j][i] - s.da[i][j] - sum(s.v[l] * H[l][i][j] for l in range(n))
                for i in range(n) for j in range(i + 1, n)]
    return f


def standard_at(vectors, alphas, C, comps, n: int):
    """Closure, equivariance and isotropy of a standard extension, numerically."""
    r = len(vectors)

    @pointwise(n)
    def f(pt):
        J = [SectionJet(v, a, pt) for v, a in zip(vectors, alphas)]
        H = full_three(comps, n, pt)
        out = []
        for s in J:
            out.extend(s.da[j][i] - s.da[i][j] - sum(s.v[l] * H[l][i][j] for l in range(n))
                       for i in range(n) for j in range(i + 1, n))
        for a, b in itertools.product(range(r), repeat=2):
            s, t = J[a], J[b]
            for j in range(n):
                lie = sum(s.v[i] * t.da[j][i] + t.a[i] * s.dv[i][j] for i in range(n))
                out.append(lie - sum(C[c][a][b] * J[c].a[j] for c in range(r)))
        for a, b in itertools.product(range(r), repeat=2):
            out.append(sum(J[a].v[i] * J[b].a[i] + J[b].v[i] * J[a].a[i] for i in range(n)))
        return out
    return f


def _solve(M: List[List[Fraction]], b: List[Fraction]) -> List[Fraction]:
    n = len(M)
    A = [list(M[i]) + [b[i]] for i in range(n)]
    for c in range(n):
        p = next(r for r in range(c, n) if A[r][c])
        A[c], A[p] = A[p], A[c]
        for r in range(n):
            if r != c and A[r][c]:
                k = A[r][c] / A[c][c]
                A[r] = [x - k * y for x, y in zip(A[r], A[c])]
    return [A[i][n] / A[i][i] for i in range(n)]


def gjac_at(num, den: Poly, G, comps, n: int):
    """g(O^{-1} (d_u O) xi2, xi3) + cyclic - 1/2 H(u1, u2, u3) with u = (1 - O) xi, on basis vectors."""
    @pointwise(n)
    def f(pt):
        d, dd = jet(den, pt)
        N = [[jet(num[i][j], pt) for j in range(n)] for i in range(n)]
        O = [[N[i][j][0] / d for j in range(n)] for i in range(n)]
        dO = [[[(N[i][j][1][k] * d - N[i][j][0] * dd[k]) / (d * d) for j in range(n)] for i in range(n)]
              for k in range(n)]
        H = full_three(comps, n, pt)
        U = [[int(i == a) - O[i][a] for i in range(n)] for a in range(n)]   # U[a] = (1 - O) e_a

        def term(a, b, c):
            w = [sum(U[a][k] * dO[k][i][b] for k in range(n)) for i in range(n)]   # (d_{u_a} O) e_b
            x = _solve(O, w)
            return sum(G[i][c] * x[i] for i in range(n))

        out = []
        for a, b, c in itertools.product(range(n), repeat=3):
            lhs = term(a, b, c) + term(b, c, a) + term(c, a, b)
            rhs = sum(H[i][j][k] * U[a][i] * U[b][j] * U[c][k]
                      for i in range(n) for j in range(n) for k in range(n) if H[i][j][k]) / 2
            out.append(lhs - rhs)
        return out
    return f
