"""Equivariantly closed extensions of a closed 3-form.

A candidate H~ is a total-degree-3 function on T[1]E[1].  Its ghost-zero,
psi-free part must be H (with dx^i written as theta^i); it must be closed
under Q~ = d + L_Q and annihilated by every chosen symmetry field.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .cartan import (
    Derivation,
    exterior_d,
    form_context,
    interior,
    lie,
    one_form,
    one_form_components,
    vector_field,
)
from .linsolve import EchelonSystem
from .qmanifold import (
    AlgebroidData,
    ExtendedSymmetry,
    _names,
    build_Q,
    extended_field,
    lift_Qtilde,
)
from .symkernel import GradedContext, GradedElement, Poly, flatten, monomials_up_to

DEGREE_CAVEAT = "complete up to coefficient degree {d}; uniqueness is relative to the symmetries supplied"
ORBIT_CAVEAT = "orbit non-degeneracy of H asserted by the user, not verified"
ORBIT_UNCHECKED = "orbit non-degeneracy of H not asserted; uniqueness may fail without it"


def embed_form(omega: GradedElement, E: AlgebroidData) -> GradedElement:
    """A form on the base written on T[1]E[1] with dx^i -> theta^i."""
    ctx = E.ctx
    thetas, _, _ = _names(ctx, E.n, E.rank)
    src = omega.ctx
    pos = {src.index(src.d_of(c)): thetas[i] for i, c in enumerate(src.coords)}
    out = GradedElement.zero(ctx)
    for m, p in omega.terms.items():
        out = out + GradedElement.word(ctx, [pos[g] for g in m], p)
    return out


def base_part(Ht: GradedElement, E: AlgebroidData) -> GradedElement:
    """Set eta and psi to zero."""
    _, etas, psis = _names(E.ctx, E.n, E.rank)
    return Ht.restrict_zero(list(etas) + list(psis))


# ---------------------------------------------------------------------------
# checks


@dataclass
class ConditionReport:
    conditions: Dict[str, bool]
    residuals: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.conditions.values())

    @property
    def failed(self) -> List[str]:
        return [k for k, v in self.conditions.items() if not v]

    def zero_claims(self) -> List[Poly]:
        out = []
        for k, v in self.residuals.items():
            if not self.conditions.get(k.split("[")[0], True):
                continue
            items = v if isinstance(v, list) else [v]
            for e in items:
                if isinstance(e, GradedElement):
                    out.extend(e.polys())
                elif isinstance(e, Poly):
                    out.append(e)
        return out


def check_standard_extension(H: GradedElement | None, alphas: Sequence[Sequence[Poly]],
                             E: AlgebroidData) -> ConditionReport:
    """The four conditions for H + alpha_a psi^a over an action algebroid with constant C.

    (i) the restriction recovers H, (ii) iota_{v_a} H = d alpha_a,
    (iii) L_{v_a} alpha_b = C^c_{ab} alpha_c, (iv) iota_{v_a} alpha_b + iota_{v_b} alpha_a = 0.
    """
    if not E.is_constant():
        raise ValueError("standard extension needs constant structure constants")
    n, r = E.n, E.rank
    ctx = H.ctx if H is not None else form_context(n, E.coords)
    if H is not None and exterior_d(H):
        raise ValueError("H is not closed")
    vs = [vector_field(ctx, E.rho[a]) for a in range(r)]
    al = [one_form(ctx, a) for a in alphas]
    zero = GradedElement.zero(ctx)
    res2, res3, res4 = [], [], []
    for a in range(r):
        lhs = interior(vs[a], H) if H is not None else zero
        res2.append(lhs - exterior_d(al[a]))
    for a in range(r):
        for b in range(r):
            rhs = zero
            for c in range(r):
                k = E.C[c][a][b].constant_term()
                if k:
                    rhs = rhs + al[c].scale(k)
            res3.append(lie(vs[a], al[b]) - rhs)
    for a in range(r):
        for b in range(a, r):
            res4.append(interior(vs[a], al[b]) + interior(vs[b], al[a]))
    ext = standard_extension(H, alphas, E)
    res1 = base_part(ext, E) - (embed_form(H, E) if H is not None else GradedElement.zero(E.ctx))
    conds = {
        "restriction": not res1,
        "closure": all(not x for x in res2),
        "equivariance": all(not x for x in res3),
        "isotropy": all(not x for x in res4),
    }
    return ConditionReport(conds, {"restriction": res1, "closure": res2, "equivariance": res3, "isotropy": res4})


def standard_extension(H: GradedElement | None, alphas: Sequence[Sequence[Poly]], E: AlgebroidData) -> GradedElement:
    """H + alpha_a psi^a on T[1]E[1]."""
    ctx = E.ctx
    thetas, _, psis = _names(ctx, E.n, E.rank)
    out = embed_form(H, E) if H is not None else GradedElement.zero(ctx)
    for a, comps in enumerate(alphas):
        for i, c in enumerate(comps):
            if c:
                out = out + GradedElement.word(ctx, [thetas[i], psis[a]], c)
    return out


def check_E_extension(Ht: GradedElement, E: AlgebroidData, S: Sequence[ExtendedSymmetry],
                      H: GradedElement | None = None) -> ConditionReport:
    ctx = E.ctx
    if Ht.ctx != ctx:
        raise ValueError("H~ lives on a different algebra")
    if Ht and Ht.degrees() != {3}:
        raise ValueError("H~ must have total degree 3")
    target = embed_form(H, E) if H is not None else GradedElement.zero(ctx)
    res1 = base_part(Ht, E) - target
    Qt = lift_Qtilde(build_Q(E))
    res2 = Qt.apply(Ht)
    res3 = [extended_field(E, s).apply(Ht) for s in S]
    conds = {"restriction": not res1, "Q-closed": not res2, "invariant": all(not x for x in res3)}
    return ConditionReport(conds, {"restriction": res1, "Q-closed": res2, "invariant": res3})


# ---------------------------------------------------------------------------
# ansatz and solver


FAMILIES = ("eta3", "eta2theta", "etatheta2", "theta3", "etapsi", "thetapsi")


@dataclass
class ExtensionAnsatz:
    """Generator words of the six total-degree-3 families; theta^3 is fixed to H."""

    E: AlgebroidData
    words: Dict[str, List[Tuple[str, ...]]] = field(default_factory=dict)

    def __post_init__(self):
        thetas, etas, psis = _names(self.E.ctx, self.E.n, self.E.rank)
        c = itertools.combinations
        self.words = {
            "eta3": [tuple(w) for w in c(etas, 3)],
            "eta2theta": [tuple(w) + (t,) for w in c(etas, 2) for t in thetas],
            "etatheta2": [(e,) + tuple(w) for e in etas for w in c(thetas, 2)],
            "theta3": [tuple(w) for w in c(thetas, 3)],
            "etapsi": [(e, p) for e in etas for p in psis],
            "thetapsi": [(t, p) for t in thetas for p in psis],
        }

    def free_words(self) -> List[Tuple[str, ...]]:
        return [w for f in FAMILIES if f != "theta3" for w in self.words[f]]

    def size(self, degree: int) -> int:
        return len(self.free_words()) * len(monomials_up_to(self.E.n, degree))

    def family_of(self, mono_names: Sequence[str]) -> str:
        key = tuple(mono_names)
        for f in FAMILIES:
            if key in self.words[f]:
                return f
        raise KeyError(key)


@dataclass
class ExtensionReport:
    status: str                       # unique | family | inconclusive
    dimension: int
    basis: List[GradedElement]
    particular: Optional[GradedElement]
    degree_bound: int
    degree_used: Optional[int]
    symmetry_count: int
    caveats: List[str] = field(default_factory=list)
    witness: Optional[str] = None

    def solutions_contain(self, elem: GradedElement) -> bool:
        """Whether elem lies in the homogeneous solution space."""
        return in_span(elem, self.basis)


def in_span(elem: GradedElement, basis: Sequence[GradedElement]) -> bool:
    keys: Dict[tuple, int] = {}
    rows: Dict[tuple, Dict[int, Fraction]] = {}
    for j, b in enumerate(basis):
        for k, v in flatten(b).items():
            rows.setdefault(k, {})[j] = v
    target = flatten(elem)
    for k in target:
        rows.setdefault(k, {})
    sysm = EchelonSystem(len(basis))
    for k in sorted(rows, key=repr):
        sysm.add_row(rows[k], target.get(k, 0))
    return not sysm.inconsistent


def _assemble(E: AlgebroidData, H: GradedElement | None, fields: Sequence[Derivation], degree: int,
              ansatz: ExtensionAnsatz):
    ctx = E.ctx
    monos = monomials_up_to(E.n, degree)
    words = ansatz.free_words()
    columns = []
    rows: Dict[tuple, Dict[int, Fraction]] = {}
    col = 0
    for w in words:
        base = GradedElement.word(ctx, w)
        for e in monos:
            elem = base.scale(Poly.monomial(e))
            for fi, X in enumerate(fields):
                for k, v in flatten(X.apply(elem), (fi,)).items():
                    rows.setdefault(k, {})[col] = v
            columns.append(elem)
            col += 1
    rhs: Dict[tuple, Fraction] = {}
    if H is not None and H:
        h = embed_form(H, E)
        for fi, X in enumerate(fields):
            for k, v in flatten(X.apply(h), (fi,)).items():
                rhs[k] = -v
                rows.setdefault(k, {})
    return columns, rows, rhs


def _combine(columns: Sequence[GradedElement], vec: Dict[int, Fraction], ctx: GradedContext) -> GradedElement:
    out = GradedElement.zero(ctx)
    for j in sorted(vec):
        if vec[j]:
            out = out + columns[j].scale(vec[j])
    return out


def solve_extension(H: GradedElement | None, E: AlgebroidData, S: Sequence[ExtendedSymmetry], degree: int,
                    slack: Optional[int] = None, assert_orbit_nondegenerate: bool = False) -> ExtensionReport:
    """Solve the three extension conditions inside the degree-bounded ansatz.

    The search starts at coefficient degree ``degree`` and widens by one up to
    ``degree + slack`` (slack defaults to the largest degree in the structure
    data) until the system is consistent; an empty search is inconclusive.
    """
    ctx = E.ctx
    if slack is None:
        slack = max([p.degree() for row in E.rho for p in row]
                    + [p.degree() for pl in E.C for row in pl for p in row] + [0])
    ansatz = ExtensionAnsatz(E)
    fields = [lift_Qtilde(build_Q(E))] + [extended_field(E, s) for s in S]
    caveats = [DEGREE_CAVEAT.format(d=degree), ORBIT_CAVEAT if assert_orbit_nondegenerate else ORBIT_UNCHECKED]
    last_witness = None
    for D in range(degree, degree + slack + 1):
        columns, rows, rhs = _assemble(E, H, fields, D, ansatz)
        sysm = EchelonSystem(len(columns))
        for k in sorted(rows, key=repr):
            sysm.add_row(rows[k], rhs.get(k, 0))
        sol = sysm.solve()
        if not sol.consistent:
            last_witness = f"inconsistent at coefficient degree {D}"
            continue
        h = embed_form(H, E) if H is not None else GradedElement.zero(ctx)
        particular = h + _combine(columns, sol.particular, ctx)
        basis = [_combine(columns, v, ctx) for v in sol.basis]
        if D > degree:
            caveats.append(f"coefficients of degree {D} were needed")
        status = "unique" if not basis else "family"
        if H is None or not H:
            status = "family" if basis else "unique"
        return ExtensionReport(status, len(basis), basis, particular, degree, D, len(S), caveats)
    # a bounded search cannot rule out solutions of higher degree
    return ExtensionReport("inconclusive", 0, [], None, degree, None, len(S), caveats, last_witness)


def potential_words(E: AlgebroidData) -> List[Tuple[str, ...]]:
    """Total-degree-2 generator words: eta eta, eta theta, theta theta, psi."""
    thetas, etas, psis = _names(E.ctx, E.n, E.rank)
    c = itertools.combinations
    return ([tuple(w) for w in c(etas, 2)] + [(e, t) for e in etas for t in thetas]
            + [tuple(w) for w in c(thetas, 2)] + [(p,) for p in psis])


def exact_direction(E: AlgebroidData, S: Sequence[ExtendedSymmetry], prescribed: Dict[Tuple[str, ...], Poly],
                    degree: int) -> Optional[GradedElement]:
    """A potential beta of total degree 2 with the prescribed word coefficients such that
    Q~ beta is a homogeneous extension direction (no theta^3 part, annihilated by S).

    Other coefficients are free up to ``degree``; returns None if no such beta exists.
    """
    ctx = E.ctx
    Qt = lift_Qtilde(build_Q(E))
    fields = [extended_field(E, s) for s in S]
    monos = monomials_up_to(E.n, degree)
    cols: List[GradedElement] = []
    rows: Dict[tuple, Dict[int, Fraction]] = {}
    rhs: Dict[tuple, Fraction] = {}
    for w in potential_words(E):
        for e in monos:
            el = GradedElement.word(ctx, list(w), Poly.monomial(e))
            j = len(cols)
            cols.append(el)
            q = Qt.apply(el)
            for k, v in flatten(base_part(q, E), ("base",)).items():
                rows.setdefault(k, {})[j] = v
            for fi, X in enumerate(fields):
                for k, v in flatten(X.apply(q), (fi,)).items():
                    rows.setdefault(k, {})[j] = v
            if w in prescribed:
                rows.setdefault(("fix", w, e), {})[j] = Fraction(1)
    for w, p in prescribed.items():
        for e in monos:
            rows.setdefault(("fix", w, e), {})
        for e, c in p.terms.items():
            if ("fix", w, e) not in rows:
                return None
            rhs[("fix", w, e)] = c
    sysm = EchelonSystem(len(cols))
    for k in sorted(rows, key=repr):
        sysm.add_row(rows[k], rhs.get(k, 0))
    sol = sysm.solve()
    if not sol.consistent:
        return None
    return _combine(cols, sol.particular, ctx)
