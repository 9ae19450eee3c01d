"""Lie algebroids as Q-manifolds and their extended symmetry algebras.

Everything lives on the algebra of functions on T[1]E[1] (coordinates x^i,
generators theta^i, eta^a, psi^a).  Vector fields on E[1] are derivations that
vanish on theta and psi.  Index layout: ``rho[a][i]`` is rho^i_a and
``C[a][b][c]`` is C^a_{bc} with [e_b, e_c] = C^a_{bc} e_a.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .cartan import (
    Derivation,
    algebroid_context,
    d_derivation,
    exterior_d,
    form_context,
    graded_commutator,
    interior,
    lie,
    lie_derivation,
    one_form,
    one_form_components,
    vector_field,
)
from .gengeo import (
    DiracFrame,
    GeneralizedSection,
    Inconclusive,
    adjugate,
    decompose,
    det,
    in_span,
    is_dirac,
)
from .linsolve import EchelonSystem
from .symkernel import GradedContext, GradedElement, Poly, flatten, flatten_poly, monomials_up_to


class AlgebroidError(ValueError):
    pass


@dataclass
class AlgebroidData:
    rho: List[List[Poly]]
    C: List[List[List[Poly]]]
    coords: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        r = self.rank
        if len(self.C) != r or any(len(row) != r or any(len(c) != r for c in row) for row in self.C):
            raise AlgebroidError("structure functions must be rank x rank x rank")
        for a in range(r):
            for b in range(r):
                for c in range(r):
                    if self.C[a][b][c] != -self.C[a][c][b]:
                        raise AlgebroidError(f"C^{a + 1}_{{{b + 1}{c + 1}}} is not antisymmetric")
        self._ctx = None

    @property
    def rank(self) -> int:
        return len(self.rho)

    @property
    def n(self) -> int:
        return len(self.rho[0]) if self.rho else (len(self.coords) if self.coords else 0)

    @property
    def ctx(self) -> GradedContext:
        if self._ctx is None:
            self._ctx = algebroid_context(self.n, self.rank, self.coords)
        return self._ctx

    def is_constant(self) -> bool:
        return all(c.is_constant() for plane in self.C for row in plane for c in row)

    @classmethod
    def action(cls, n: int, vectors: Sequence[Sequence[Poly]], constants) -> "AlgebroidData":
        """Action algebroid of a Lie algebra with structure constants constants[a][b][c] = C^a_{bc}."""
        r = len(vectors)
        C = [[[Poly.const(n, constants[a][b][c]) for c in range(r)] for b in range(r)] for a in range(r)]
        return cls([list(v) for v in vectors], C)

    @classmethod
    def cotangent(cls, P) -> "AlgebroidData":
        """T*M with anchor Pi# and [dx^a, dx^b] = d Pi^{ab} (Poisson bivector)."""
        n = P.n
        rho = [[P.m[a][i] for i in range(n)] for a in range(n)]
        C = [[[P.m[b][c].diff(a) for c in range(n)] for b in range(n)] for a in range(n)]
        return cls(rho, C)


def algebroid_from_frame(frame: DiracFrame, H: GradedElement | None = None,
                         coords: Sequence[str] | None = None) -> AlgebroidData:
    rep = is_dirac(frame, H)
    if not rep.passed:
        raise AlgebroidError(f"frame is not a Dirac structure ({rep.status})")
    if rep.structure is None:
        raise AlgebroidError("structure functions are not polynomial in this frame")
    return AlgebroidData(frame.anchor(), rep.structure, tuple(coords) if coords else None)


# ---------------------------------------------------------------------------
# Q and its lift


def _names(ctx: GradedContext, n: int, r: int):
    gens = [g.name for g in ctx.generators]
    return gens[:n], gens[n:n + r], gens[n + r:n + 2 * r]


def build_Q(E: AlgebroidData) -> Derivation:
    """Q = eta^a rho^i_a d_i - 1/2 C^a_{bc} eta^b eta^c d/d eta^a."""
    ctx, n, r = E.ctx, E.n, E.rank
    _, etas, _ = _names(ctx, n, r)
    ci = {}
    for i in range(n):
        img = GradedElement.zero(ctx)
        for a in range(r):
            if E.rho[a][i]:
                img = img + GradedElement.word(ctx, [etas[a]], E.rho[a][i])
        ci[i] = img
    gi = {}
    half = Fraction(-1, 2)
    for a in range(r):
        img = GradedElement.zero(ctx)
        for b in range(r):
            for c in range(r):
                if E.C[a][b][c]:
                    img = img + GradedElement.word(ctx, [etas[b], etas[c]], E.C[a][b][c].scale(half))
        gi[ctx.index(etas[a])] = img
    return Derivation(ctx, 1, ci, gi)


def q_square(Q: Derivation) -> Derivation:
    """1/2 [Q, Q] = Q o Q."""
    return graded_commutator(Q, Q).scale(Fraction(1, 2))


def lift_Qtilde(Q: Derivation) -> Derivation:
    return d_derivation(Q.ctx) + lie_derivation(Q)


# ---------------------------------------------------------------------------
# sections and symmetries


def section_field(E: AlgebroidData, eps: Sequence[Poly]) -> Derivation:
    """eps^a d/d eta^a."""
    ctx = E.ctx
    _, etas, _ = _names(ctx, E.n, E.rank)
    return Derivation(ctx, -1, gen_images={ctx.index(etas[a]): GradedElement.scalar(ctx, e)
                                           for a, e in enumerate(eps) if e})


def field_section(E: AlgebroidData, X: Derivation) -> List[Poly]:
    """Inverse of section_field; rejects anything that is not of that form."""
    ctx = X.ctx
    _, etas, _ = _names(ctx, E.n, E.rank)
    eta_idx = [ctx.index(e) for e in etas]
    if X.coord_images or set(X.gen_images) - set(eta_idx):
        raise AlgebroidError("derivation is not a section of E")
    out = []
    for g in eta_idx:
        img = X.image_of_gen(g)
        if img and set(img.terms) != {()}:
            raise AlgebroidError("derivation is not a section of E")
        out.append(img.coefficient([]) if img else Poly.zero(E.n))
    return out


def derived_bracket(E: AlgebroidData, eps1: Sequence[Poly], eps2: Sequence[Poly],
                    Q: Derivation | None = None) -> List[Poly]:
    """[[eps1, Q], eps2] read back as a section."""
    Q = Q if Q is not None else build_Q(E)
    X = graded_commutator(graded_commutator(section_field(E, eps1), Q), section_field(E, eps2))
    return field_section(E, X)


def anchor_of(E: AlgebroidData, eps: Sequence[Poly]) -> List[Poly]:
    n = E.n
    return [sum((eps[a] * E.rho[a][i] for a in range(E.rank) if eps[a] and E.rho[a][i]), Poly.zero(n))
            for i in range(n)]


def bracket_formula(E: AlgebroidData, eps1: Sequence[Poly], eps2: Sequence[Poly]) -> List[Poly]:
    """rho(eps1)[eps2^c] - rho(eps2)[eps1^c] + C^c_{ab} eps1^a eps2^b."""
    n, r = E.n, E.rank
    v1, v2 = anchor_of(E, eps1), anchor_of(E, eps2)
    out = []
    for c in range(r):
        t = Poly.zero(n)
        for i in range(n):
            t = t + v1[i] * eps2[c].diff(i) - v2[i] * eps1[c].diff(i)
        for a in range(r):
            for b in range(r):
                if E.C[c][a][b] and eps1[a] and eps2[b]:
                    t = t + E.C[c][a][b] * eps1[a] * eps2[b]
        out.append(t)
    return out


@dataclass
class ExtendedSymmetry:
    """eps-tilde = L_eps + theta^i gamma^a_i d/d psi^a; ``gamma[a][i]`` is gamma^a_i."""

    eps: List[Poly]
    gamma: List[List[Poly]]

    @classmethod
    def pure_section(cls, eps: Sequence[Poly], n: int) -> "ExtendedSymmetry":
        return cls(list(eps), [[Poly.zero(n)] * n for _ in eps])

    @classmethod
    def pure_gamma(cls, gamma: Sequence[Sequence[Poly]], n: int) -> "ExtendedSymmetry":
        return cls([Poly.zero(n)] * len(gamma), [list(r) for r in gamma])

    def polys(self) -> List[Poly]:
        return list(self.eps) + [p for row in self.gamma for p in row]

    def is_zero(self) -> bool:
        return all(not p for p in self.polys())

    def max_degree(self) -> int:
        return max((p.degree() for p in self.polys()), default=-1)

    def __add__(self, other):
        return ExtendedSymmetry([a + b for a, b in zip(self.eps, other.eps)],
                                [[a + b for a, b in zip(r, s)] for r, s in zip(self.gamma, other.gamma)])

    def scale(self, c):
        return ExtendedSymmetry([a * c for a in self.eps], [[a * c for a in r] for r in self.gamma])

    def __eq__(self, other):
        return isinstance(other, ExtendedSymmetry) and self.polys() == other.polys()


def gamma_field(E: AlgebroidData, gamma: Sequence[Sequence[Poly]]) -> Derivation:
    ctx = E.ctx
    thetas, _, psis = _names(ctx, E.n, E.rank)
    gi = {}
    for a, row in enumerate(gamma):
        img = GradedElement.zero(ctx)
        for i, c in enumerate(row):
            if c:
                img = img + GradedElement.word(ctx, [thetas[i]], c)
        if img:
            gi[ctx.index(psis[a])] = img
    return Derivation(ctx, -1, gen_images=gi)


def extended_field(E: AlgebroidData, s: ExtendedSymmetry) -> Derivation:
    return lie_derivation(section_field(E, s.eps)) + gamma_field(E, s.gamma)


def read_extended(E: AlgebroidData, X: Derivation) -> ExtendedSymmetry:
    """Recover (eps, gamma) from a degree -1 derivation, verifying the shape."""
    ctx, n, r = E.ctx, E.n, E.rank
    thetas, etas, psis = _names(ctx, n, r)
    eps = []
    for a in range(r):
        img = X.on(etas[a])
        if img and set(img.terms) != {()}:
            raise AlgebroidError("bracket is not of the extended form")
        eps.append(img.coefficient([]) if img else Poly.zero(n))
    rest = X - lie_derivation(section_field(E, eps))
    gamma = []
    for a in range(r):
        img = rest.on(psis[a])
        row = [img.coefficient([thetas[i]]) for i in range(n)]
        gamma.append(row)
    out = ExtendedSymmetry(eps, gamma)
    if extended_field(E, out) != X:
        raise AlgebroidError("bracket is not of the extended form")
    return out


def extended_bracket(E: AlgebroidData, s1: ExtendedSymmetry, s2: ExtendedSymmetry,
                     Qt: Derivation | None = None) -> ExtendedSymmetry:
    """[[s1, Q~], s2] reduced to (eps, gamma) data."""
    Qt = Qt if Qt is not None else lift_Qtilde(build_Q(E))
    X = graded_commutator(graded_commutator(extended_field(E, s1), Qt), extended_field(E, s2))
    return read_extended(E, X)


def _matmul(a, b, nvars):
    return [[sum((a[i][k] * b[k][j] for k in range(len(b)) if a[i][k] and b[k][j]), Poly.zero(nvars))
             for j in range(len(b[0]))] for i in range(len(a))]


def gamma_bracket_formula(E: AlgebroidData, g1, g2) -> List[List[Poly]]:
    """-g1 rho g2 + g2 rho g1, with gamma: TM -> E and rho: E -> TM as matrices."""
    n = E.n
    rho = [[E.rho[a][i] for a in range(E.rank)] for i in range(n)]  # (i, a)
    t1 = _matmul(_matmul(g1, rho, n), g2, n)
    t2 = _matmul(_matmul(g2, rho, n), g1, n)
    return [[y - x for x, y in zip(r1, r2)] for r1, r2 in zip(t1, t2)]


def section_action_formula(E: AlgebroidData, eps: Sequence[Poly], gamma) -> List[List[Poly]]:
    """(L_{rho(eps)} gamma^a) (x) e_a + gamma^a (x) [eps, e_a]_E."""
    n, r = E.n, E.rank
    ctx = form_context(n, E.coords)
    v = vector_field(ctx, anchor_of(E, eps))
    out = []
    for c in range(r):
        row = one_form_components(lie(v, one_form(ctx, gamma[c])) + one_form(ctx, [Poly.zero(n)] * n))
        out.append(row if row else [Poly.zero(n)] * n)
    for a in range(r):
        ea = [Poly.const(n, int(b == a)) for b in range(r)]
        br = bracket_formula(E, eps, ea)
        for c in range(r):
            if br[c]:
                out[c] = [x + y * br[c] for x, y in zip(out[c], gamma[a])]
    return out


# ---------------------------------------------------------------------------
# membership


@dataclass
class MembershipResult:
    passed: bool
    status: str
    coefficients: Optional[List[Poly]] = None
    residual: Optional[GradedElement] = None
    antisymmetric: Dict[Tuple[int, int], Poly] = field(default_factory=dict)
    note: str = ""

    def zero_claims(self) -> List[Poly]:
        out = list(self.antisymmetric.values())
        if self.residual is not None:
            out.extend(self.residual.polys())
        return out


def theta_residual(s: GeneralizedSection, H: GradedElement | None) -> GradedElement:
    """iota_v H - d alpha."""
    n = s.n
    ctx = H.ctx if H is not None else form_context(n)
    alpha = one_form(ctx, s.alpha)
    out = -exterior_d(alpha)
    if H is not None and H:
        out = out + interior(vector_field(ctx, s.v), H)
    return out


def membership_g(s: GeneralizedSection, frame: DiracFrame, H: GradedElement | None = None) -> MembershipResult:
    if not in_span(s, frame):
        return MembershipResult(False, "fail", note="section is not in the Dirac structure")
    try:
        f = decompose(s, frame)
    except Inconclusive as exc:
        return MembershipResult(False, "inconclusive", note=str(exc))
    if f is None:
        return MembershipResult(False, "fail", note="no polynomial frame coefficients")
    res = theta_residual(s, H)
    return MembershipResult(not res, "pass" if not res else "fail", f, res)


def tau_matrix(frame: DiracFrame) -> List[List[Poly]]:
    """T[a][j] = alpha_{a,j}, the cotangent part of e_a."""
    return [list(e.alpha) for e in frame.sections]


def gamma_tilde(gamma, frame: DiracFrame) -> List[List[Poly]]:
    """gamma~_{ij} = gamma^a_i alpha_{a,j}."""
    T = tau_matrix(frame)
    n = frame.n
    return [[sum((gamma[a][i] * T[a][j] for a in range(n) if gamma[a][i] and T[a][j]), Poly.zero(n))
             for j in range(n)] for i in range(n)]


def gamma_antisymmetric_part(gamma, frame: DiracFrame) -> Dict[Tuple[int, int], Poly]:
    gt = gamma_tilde(gamma, frame)
    n = frame.n
    return {(i, j): (gt[i][j] - gt[j][i]).scale(Fraction(1, 2)) for i in range(n) for j in range(i + 1, n)}


def membership_gtilde(s: GeneralizedSection, gamma, frame: DiracFrame,
                      H: GradedElement | None = None) -> MembershipResult:
    base = membership_g(s, frame, H)
    anti = gamma_antisymmetric_part(gamma, frame)
    base.antisymmetric = anti
    if base.passed and any(anti.values()):
        base.passed, base.status = False, "fail"
        base.note = "gamma~ has a non-zero antisymmetric part"
    return base


# ---------------------------------------------------------------------------
# solving for symmetries


@dataclass
class SymmetryBasis:
    degree: int
    sections: List[List[Poly]]            # frame coefficients eps^a
    generalized: List[GeneralizedSection]
    gammas: List[List[List[Poly]]] = field(default_factory=list)
    pruned: bool = False

    @property
    def dimension(self) -> int:
        return len(self.sections)

    def symmetries(self, n: int) -> List[ExtendedSymmetry]:
        out = [ExtendedSymmetry.pure_section(e, n) for e in self.sections]
        out += [ExtendedSymmetry.pure_gamma(g, n) for g in self.gammas]
        return out


def _poly_from_solution(vec: Dict[int, Fraction], offset: int, monos, nvars: int) -> Poly:
    return Poly(nvars, {monos[k]: vec[offset + k] for k in range(len(monos)) if vec.get(offset + k)})


def solve_symmetries(frame: DiracFrame, H: GradedElement | None, degree: int,
                     with_gamma: bool = False, prune: bool = True) -> SymmetryBasis:
    """Basis of {eps^a e_a : iota_v H = d alpha} with deg eps^a <= degree, in reduced echelon form."""
    n = frame.n
    monos = monomials_up_to(n, degree)
    ncols = n * len(monos)
    sysm = EchelonSystem(ncols)
    images: Dict[tuple, Dict[int, Fraction]] = {}
    col = 0
    for a in range(n):
        for e in monos:
            s = frame.sections[a].scale(Poly.monomial(e))
            for key, v in flatten(theta_residual(s, H)).items():
                images.setdefault(key, {})[col] = v
            col += 1
    for key in sorted(images, key=repr):
        sysm.add_row(images[key])
    rref = sysm.rref()
    free = [c for c in range(ncols) if c not in rref]
    # basis vectors in reduced form, ordered by their free column from the top-degree end
    basis = []
    for fcol in free:
        vec = {fcol: Fraction(1)}
        for c, row in rref.items():
            v = row.get(fcol)
            if v:
                vec[c] = -v
        basis.append(vec)
    sections = [[_poly_from_solution(vec, a * len(monos), monos, n) for a in range(n)] for vec in basis]
    gens = [frame.combine(s) for s in sections]
    out = SymmetryBasis(degree, sections, gens)
    if with_gamma:
        out.gammas, out.pruned = gamma_basis(frame, degree, prune)
    return out


def _sym_matrices(n: int):
    for i in range(n):
        for j in range(i, n):
            yield i, j


def gamma_basis(frame: DiracFrame, degree: int, prune: bool = True):
    """Generators of {gamma : gamma~ symmetric} with entries of degree <= degree.

    The condition is linear over functions, so when tau has a constant
    non-zero determinant the constant symmetric matrices pulled back through
    tau already generate the whole solution module; that is the pruned basis.
    """
    n = frame.n
    T = tau_matrix(frame)
    d = det(T)
    if prune and d and d.is_constant():
        adj = adjugate(T)
        inv = 1 / d.constant_term()
        # gamma = (T^{-1})^T S  for symmetric S
        TinvT = [[adj[j][i].scale(inv) for j in range(n)] for i in range(n)]
        out = []
        for i, j in _sym_matrices(n):
            S = [[Poly.const(n, int((p, q) in ((i, j), (j, i)))) for q in range(n)] for p in range(n)]
            out.append(_matmul(TinvT, S, n))
        return out, True
    monos = monomials_up_to(n, degree)
    m = len(monos)
    ncols = n * n * m
    sysm = EchelonSystem(ncols)
    images: Dict[tuple, Dict[int, Fraction]] = {}
    for a in range(n):
        for i in range(n):
            for k, e in enumerate(monos):
                col = (a * n + i) * m + k
                x = Poly.monomial(e)
                for j in range(n):
                    if T[a][j]:
                        # contributes to gt[i][j] (+) and to the (j,i) antisymmetric equation (-)
                        if i < j:
                            for key, v in flatten_poly(T[a][j] * x, (i, j)).items():
                                images.setdefault(key, {})[col] = images.get(key, {}).get(col, 0) + v
                        elif j < i:
                            for key, v in flatten_poly(T[a][j] * x, (j, i)).items():
                                images.setdefault(key, {})[col] = images.get(key, {}).get(col, 0) - v
    for key in sorted(images, key=repr):
        sysm.add_row(images[key])
    sol = sysm.solve()
    out = []
    for vec in sol.basis:
        out.append([[_poly_from_solution(vec, (a * n + i) * m, monos, n) for i in range(n)] for a in range(n)])
    return out, False
