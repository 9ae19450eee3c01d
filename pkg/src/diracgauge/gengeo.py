"""Generalized geometry on TM + T*M over R^n.

Conventions: a bivector is an antisymmetric matrix Pi^{ij} with
Pi = 1/2 Pi^{ij} d_i ^ d_j; Pi#(alpha)^j = alpha_i Pi^{ij}; 3-form components
H_{lmn} are fully antisymmetric with H = 1/6 H_{lmn} dx^l dx^m dx^n.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .cartan import (
    SymTensor2,
    exterior_d,
    form_components,
    form_context,
    form_from_components,
    interior,
    lie,
    one_form,
    one_form_components,
    vector_bracket,
    vector_field,
)
from .linsolve import ColumnBuilder
from .symkernel import GradedContext, GradedElement, Poly, flatten_poly, monomials_up_to

Matrix = List[List[Poly]]


class NotClosedError(ValueError):
    """The 3-form supplied as twist is not closed."""


# ---------------------------------------------------------------------------
# data types


class Bivector:
    def __init__(self, n: int, entries: Dict[Tuple[int, int], Poly] | None = None):
        self.n = n
        self.m: Matrix = [[Poly.zero(n) for _ in range(n)] for _ in range(n)]
        for (i, j), p in (entries or {}).items():
            if i == j:
                if p:
                    raise ValueError("diagonal entry violates antisymmetry")
                continue
            self.m[i][j] = p
            self.m[j][i] = -p

    @classmethod
    def from_matrix(cls, m: Matrix) -> "Bivector":
        n = len(m)
        for i in range(n):
            for j in range(n):
                if m[i][j] != -m[j][i]:
                    raise ValueError("matrix is not antisymmetric")
        return cls(n, {(i, j): m[i][j] for i in range(n) for j in range(i + 1, n)})

    def __getitem__(self, ij) -> Poly:
        return self.m[ij[0]][ij[1]]

    def sharp(self, alpha: Sequence[Poly]) -> List[Poly]:
        n = self.n
        return [sum((alpha[i] * self.m[i][j] for i in range(n) if alpha[i]), Poly.zero(n)) for j in range(n)]

    def max_degree(self) -> int:
        return max((p.degree() for row in self.m for p in row), default=-1)

    def entries(self) -> Dict[Tuple[int, int], Poly]:
        return {(i, j): self.m[i][j] for i in range(self.n) for j in range(i + 1, self.n) if self.m[i][j]}


@dataclass
class GeneralizedSection:
    v: List[Poly]
    alpha: List[Poly]

    @property
    def n(self) -> int:
        return len(self.v)

    def __add__(self, other: "GeneralizedSection") -> "GeneralizedSection":
        return GeneralizedSection([a + b for a, b in zip(self.v, other.v)],
                                  [a + b for a, b in zip(self.alpha, other.alpha)])

    def scale(self, f) -> "GeneralizedSection":
        return GeneralizedSection([a * f for a in self.v], [a * f for a in self.alpha])

    def components(self) -> List[Poly]:
        return list(self.v) + list(self.alpha)

    def is_zero(self) -> bool:
        return all(not p for p in self.components())

    def max_degree(self) -> int:
        return max((p.degree() for p in self.components()), default=-1)

    @classmethod
    def zero(cls, n: int) -> "GeneralizedSection":
        return cls([Poly.zero(n)] * n, [Poly.zero(n)] * n)


class DiracFrame:
    """n sections of TM + T*M, linearly independent at the origin."""

    def __init__(self, sections: Sequence[GeneralizedSection]):
        self.sections = list(sections)
        if not self.sections:
            raise ValueError("empty frame")
        n = self.sections[0].n
        if len(self.sections) != n:
            raise ValueError(f"frame needs exactly {n} sections (overcomplete frames unsupported)")
        const = [[c.constant_term() for c in s.components()] for s in self.sections]
        if _rank(const) != n:
            raise ValueError("frame is rank-deficient at the origin")

    @property
    def n(self) -> int:
        return len(self.sections)

    def matrix(self) -> Matrix:
        """2n x n matrix with column a = components of e_a."""
        comps = [s.components() for s in self.sections]
        return [[comps[a][r] for a in range(self.n)] for r in range(2 * self.n)]

    def combine(self, coeffs: Sequence[Poly]) -> GeneralizedSection:
        out = GeneralizedSection.zero(self.n)
        for f, s in zip(coeffs, self.sections):
            if f:
                out = out + s.scale(f)
        return out

    def anchor(self) -> List[List[Poly]]:
        """rho[a][i] = v_a^i."""
        return [list(s.v) for s in self.sections]

    def max_degree(self) -> int:
        return max(s.max_degree() for s in self.sections)


def _rank(rows: List[List[Fraction]]) -> int:
    m = [list(map(Fraction, r)) for r in rows]
    rank, cols = 0, len(m[0]) if m else 0
    for c in range(cols):
        piv = next((r for r in range(rank, len(m)) if m[r][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c]:
                f = m[r][c] / m[rank][c]
                m[r] = [a - f * b for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


# ---------------------------------------------------------------------------
# polynomial matrices


def det(m: Matrix) -> Poly:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    out = Poly.zero(m[0][0].nvars)
    for j in range(n):
        if not m[0][j]:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        t = m[0][j] * det(minor)
        out = out + t if j % 2 == 0 else out - t
    return out


def adjugate(m: Matrix) -> Matrix:
    n = len(m)
    nv = m[0][0].nvars
    if n == 1:
        return [[Poly.const(nv, 1)]]
    adj = [[Poly.zero(nv)] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(m) if k != i]
            c = det(minor)
            adj[j][i] = c if (i + j) % 2 == 0 else -c
    return adj


def matmul(a: Matrix, b: Matrix) -> Matrix:
    nv = a[0][0].nvars
    return [[sum((a[i][k] * b[k][j] for k in range(len(b)) if a[i][k] and b[k][j]), Poly.zero(nv))
             for j in range(len(b[0]))] for i in range(len(a))]


def transpose(a: Matrix) -> Matrix:
    return [list(r) for r in zip(*a)]


def identity(n: int, nvars: int | None = None) -> Matrix:
    nv = n if nvars is None else nvars
    return [[Poly.const(nv, 1 if i == j else 0) for j in range(n)] for i in range(n)]


def mat_scale(a: Matrix, c) -> Matrix:
    return [[x * c for x in row] for row in a]


def mat_add(a: Matrix, b: Matrix) -> Matrix:
    return [[x + y for x, y in zip(r, s)] for r, s in zip(a, b)]


def rational_inverse(m: Sequence[Sequence[Fraction]]) -> List[List[Fraction]]:
    n = len(m)
    a = [list(map(Fraction, r)) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(m)]
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c]), None)
        if piv is None:
            raise ValueError("matrix is singular")
        a[c], a[piv] = a[piv], a[c]
        inv = 1 / a[c][c]
        a[c] = [x * inv for x in a[c]]
        for r in range(n):
            if r != c and a[r][c]:
                f = a[r][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [r[n:] for r in a]


# ---------------------------------------------------------------------------
# forms


def three_form(n: int, comps: Dict[Tuple[int, int, int], Poly], ctx: GradedContext | None = None) -> GradedElement:
    """3-form from components keyed by 0-based index triples (any order; antisymmetrized)."""
    ctx = ctx or form_context(n)
    out = GradedElement.zero(ctx)
    dn = [ctx.d_of(c) for c in ctx.coords]
    for (i, j, k), c in comps.items():
        out = out + GradedElement.word(ctx, [dn[i], dn[j], dn[k]], c)
    return out


def full_components(omega: GradedElement, p: int) -> Dict[Tuple[int, ...], Poly]:
    """Totally antisymmetric component tensor T_{i1..ip} of a p-form (nonzero entries only)."""
    out = {}
    for idx, c in form_components(omega).items():
        if len(idx) != p:
            raise ValueError(f"not a {p}-form")
        for perm in itertools.permutations(range(p)):
            sign = _perm_sign(perm)
            key = tuple(idx[q] for q in perm)
            out[key] = c if sign > 0 else -c
    return out


def _perm_sign(perm) -> int:
    sign, seen = 1, list(perm)
    for i in range(len(seen)):
        for j in range(i + 1, len(seen)):
            if seen[i] > seen[j]:
                sign = -sign
    return sign


def require_closed(H: GradedElement) -> None:
    if exterior_d(H):
        raise NotClosedError("H is not closed")


def _ctx_for(H: GradedElement | None, n: int) -> GradedContext:
    return H.ctx if H is not None else form_context(n)


# ---------------------------------------------------------------------------
# operations


def pairing(s1: GeneralizedSection, s2: GeneralizedSection) -> Poly:
    n = s1.n
    out = Poly.zero(n)
    for i in range(n):
        out = out + s1.alpha[i] * s2.v[i] + s2.alpha[i] * s1.v[i]
    return out


def dorfman(s1: GeneralizedSection, s2: GeneralizedSection, H: GradedElement | None = None,
            check_closed: bool = True) -> GeneralizedSection:
    """([v,w], L_v beta - iota_w d alpha + iota_w iota_v H)."""
    n = s1.n
    ctx = _ctx_for(H, n)
    if H is not None and check_closed:
        require_closed(H)
    v, w = vector_field(ctx, s1.v), vector_field(ctx, s2.v)
    alpha, beta = one_form(ctx, s1.alpha), one_form(ctx, s2.alpha)
    form = lie(v, beta) - interior(w, exterior_d(alpha))
    if H is not None and H:
        form = form + interior(w, interior(v, H))
    return GeneralizedSection(vector_bracket(s1.v, s2.v), one_form_components(form) if form else [Poly.zero(n)] * n)


def schouten_half_bracket(P: Bivector) -> Dict[Tuple[int, int, int], Poly]:
    """1/2[Pi,Pi]^{ijk} = Pi^{il} d_l Pi^{jk} + cyclic, for i<j<k."""
    n = P.n
    out = {}
    for i, j, k in itertools.combinations(range(n), 3):
        c = Poly.zero(n)
        for a, b, e in ((i, j, k), (j, k, i), (k, i, j)):
            for l in range(n):
                if P.m[a][l]:
                    c = c + P.m[a][l] * P.m[b][e].diff(l)
        out[(i, j, k)] = c
    return out


def h_contract(P: Bivector, H: GradedElement | None) -> Dict[Tuple[int, int, int], Poly]:
    """<H, Pi^{x3}>^{ijk} = Pi^{li} Pi^{mj} Pi^{nk} H_{lmn}, for i<j<k.

    This index placement is the one for which the twisted Poisson condition
    agrees with closure of the graph under the twisted Dorfman bracket.
    """
    n = P.n
    out = {t: Poly.zero(n) for t in itertools.combinations(range(n), 3)}
    if H is None or not H:
        return out
    Hc = full_components(H, 3)
    for (i, j, k) in out:
        c = Poly.zero(n)
        for (l, m, q), h in Hc.items():
            a, b, e = P.m[l][i], P.m[m][j], P.m[q][k]
            if a and b and e:
                c = c + a * b * e * h
        out[(i, j, k)] = c
    return out


@dataclass
class CheckResult:
    passed: bool
    residual: Dict = field(default_factory=dict)
    status: str = ""
    detail: Dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self.passed else "fail"

    def zero_claims(self) -> List[Poly]:
        """Polynomials this result asserts to vanish identically."""
        out = []
        for v in self.residual.values():
            if isinstance(v, Poly):
                out.append(v)
            elif isinstance(v, GradedElement):
                out.extend(v.polys())
        return out


def twisted_poisson_check(P: Bivector, H: GradedElement | None = None) -> CheckResult:
    if H is not None:
        require_closed(H)
    lhs = schouten_half_bracket(P)
    rhs = h_contract(P, H)
    residual = {k: lhs[k] - rhs[k] for k in lhs}
    return CheckResult(all(not r for r in residual.values()), residual)


def graph_of_bivector(P: Bivector) -> DiracFrame:
    n = P.n
    secs = []
    for a in range(n):
        alpha = [Poly.const(n, int(i == a)) for i in range(n)]
        secs.append(GeneralizedSection([P.m[a][j] for j in range(n)], alpha))
    return DiracFrame(secs)


# -- decomposition in a frame ---------------------------------------------------


class Inconclusive(Exception):
    """A degree-bounded solve could not decide."""


def _constant_minor(frame: DiracFrame):
    """Row subset whose n x n minor has a non-zero constant determinant."""
    cache = getattr(frame, "_minor", None)
    if cache is not None:
        return cache
    M = frame.matrix()
    n = frame.n
    found = None
    for rows in itertools.combinations(range(2 * n), n):
        sub = [M[r] for r in rows]
        d = det(sub)
        if d and d.is_constant():
            found = (rows, adjugate(sub), d.constant_term())
            break
    frame._minor = found if found is not None else False
    return frame._minor


def decompose(s: GeneralizedSection, frame: DiracFrame, degree_bound: int | None = None) -> Optional[List[Poly]]:
    """Polynomial coefficients f with s = f^a e_a, or None when no such f exists.

    Raises Inconclusive if the degree-bounded fallback finds nothing.
    """
    n = frame.n
    M = frame.matrix()
    target = s.components()
    minor = _constant_minor(frame)
    if minor:
        rows, adj, d = minor
        inv = 1 / d
        f = []
        for a in range(n):
            c = Poly.zero(n)
            for k, r in enumerate(rows):
                if adj[a][k] and target[r]:
                    c = c + adj[a][k] * target[r]
            f.append(c.scale(inv))
        ok = all(sum((M[r][a] * f[a] for a in range(n)), Poly.zero(n)) == target[r] for r in range(2 * n))
        return f if ok else None
    bound = degree_bound if degree_bound is not None else max(frame.max_degree(), s.max_degree()) + 4
    monos = monomials_up_to(n, bound)
    cb = ColumnBuilder()
    col = 0
    for a in range(n):
        for e in monos:
            x = Poly.monomial(e)
            img = {}
            for r in range(2 * n):
                if M[r][a]:
                    img.update(flatten_poly(M[r][a] * x, (r,)))
            cb.add_column(col, img)
            col += 1
    for r in range(2 * n):
        cb.add_rhs(flatten_poly(target[r], (r,)))
    sol = cb.solve(col)
    if not sol.consistent:
        raise Inconclusive(f"no polynomial coefficients up to degree {bound}")
    f = []
    for a in range(n):
        terms = {monos[k]: sol.particular.get(a * len(monos) + k, 0) for k in range(len(monos))}
        f.append(Poly(n, terms))
    return f


@dataclass
class DiracReport:
    passed: bool
    status: str
    isotropy: Dict[Tuple[int, int], Poly]
    courant: Dict[Tuple[int, int, int], Poly] = field(default_factory=dict)
    structure: Optional[List[List[List[Poly]]]] = None  # C[c][a][b] with [e_a,e_b] = C^c_{ab} e_c
    witness: Optional[tuple] = None
    note: str = ""

    def zero_claims(self) -> List[Poly]:
        return list(self.isotropy.values()) + list(self.courant.values())


def courant_tensor(frame: DiracFrame, H: GradedElement | None = None) -> Dict[Tuple[int, int, int], Poly]:
    """<[e_a,e_b], e_c> for a < b and all c.

    For a maximal isotropic frame this vanishes exactly when the span is
    closed under the bracket, without having to divide by the frame.
    """
    secs = frame.sections
    n = frame.n
    out = {}
    for a in range(n):
        for b in range(a + 1, n):
            br = dorfman(secs[a], secs[b], H, check_closed=False)
            for c in range(n):
                out[(a, b, c)] = pairing(br, secs[c])
    return out


def structure_functions(frame: DiracFrame, H: GradedElement | None = None):
    """C[c][a][b] with [e_a,e_b] = C^c_{ab} e_c, or None if the frame needs rational coefficients."""
    n = frame.n
    secs = frame.sections
    C = [[[Poly.zero(n) for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            br = dorfman(secs[a], secs[b], H, check_closed=False)
            f = decompose(br, frame)
            if f is None:
                return None
            for c in range(n):
                C[c][a][b] = f[c]
                C[c][b][a] = -f[c]
    return C


def is_dirac(frame: DiracFrame, H: GradedElement | None = None, need_structure: bool = True) -> DiracReport:
    """Isotropy plus closure of the frame's span under the twisted Dorfman bracket.

    Closure is decided by the Courant tensor.  When it vanishes, the structure
    functions are recovered by decomposing the brackets; ``structure`` stays
    None if that needs non-polynomial coefficients.
    """
    n = frame.n
    if H is not None:
        require_closed(H)
    secs = frame.sections
    iso = {(a, b): pairing(secs[a], secs[b]) for a in range(n) for b in range(a, n)}
    bad = next((k for k, v in iso.items() if v), None)
    if bad is not None:
        return DiracReport(False, "fail", iso, witness=bad, note="frame is not isotropic")
    tensor = courant_tensor(frame, H)
    bad = next((k for k, v in tensor.items() if v), None)
    if bad is not None:
        return DiracReport(False, "fail", iso, tensor, witness=bad, note="span not closed under the bracket")
    if not need_structure:
        return DiracReport(True, "pass", iso, tensor)
    try:
        C = structure_functions(frame, H)
    except Inconclusive:
        C = None
    if C is None:
        return DiracReport(True, "pass", iso, tensor,
                           note="structure functions are not polynomial in this frame")
    return DiracReport(True, "pass", iso, tensor, C)


def in_span(s: GeneralizedSection, frame: DiracFrame) -> bool:
    """Pointwise membership in a maximal isotropic span: orthogonal to every frame section."""
    return all(not pairing(s, e) for e in frame.sections)


def same_span(f1: DiracFrame, f2: DiracFrame) -> bool:
    return all(in_span(s, f2) for s in f1.sections) and all(in_span(s, f1) for s in f2.sections)


# -- orthogonal-operator representation ----------------------------------------


class OOperator:
    """Pointwise orthogonal O = num / den w.r.t. a constant metric g."""

    def __init__(self, num: Matrix, g: SymTensor2, den: Poly | None = None, check: bool = True):
        n = len(num)
        self.num = [list(r) for r in num]
        self.g = g
        self.den = den if den is not None else Poly.const(num[0][0].nvars, 1)
        if not self.den:
            raise ValueError("zero denominator")
        if self.den.is_constant() and self.den.constant_term() != 1:
            inv = 1 / self.den.constant_term()
            self.num = [[x.scale(inv) for x in r] for r in self.num]
            self.den = Poly.const(self.den.nvars, 1)
        for row in g.entries:
            for x in row:
                if not x.is_constant():
                    raise ValueError("only constant metrics are supported")
        if check and not self.is_orthogonal():
            raise ValueError("operator is not orthogonal w.r.t. g")
        self.n = n

    @property
    def nvars(self) -> int:
        return self.den.nvars

    def g_matrix(self) -> Matrix:
        return [list(r) for r in self.g.entries]

    def is_orthogonal(self) -> bool:
        G = self.g_matrix()
        lhs = matmul(matmul(transpose(self.num), G), self.num)
        d2 = self.den * self.den
        return all(lhs[i][j] == G[i][j] * d2 for i in range(len(G)) for j in range(len(G)))

    def is_polynomial(self) -> bool:
        return self.den.is_constant()

    def matrix(self) -> Matrix:
        if not self.is_polynomial():
            raise ValueError("operator has a non-constant denominator")
        return self.num


def o_from_dirac(frame: DiracFrame, g: SymTensor2) -> OOperator:
    """Represent D as the graph {(w - Ow, g(w + Ow))}."""
    n = frame.n
    G = [[x.constant_term() for x in row] for row in g.entries]
    Ginv = rational_inverse(G)
    W, Y = [], []
    for s in frame.sections:
        ga = [sum((s.alpha[j] * Ginv[i][j] for j in range(n) if s.alpha[j] and Ginv[i][j]), Poly.zero(n))
              for i in range(n)]
        W.append([(s.v[i] + ga[i]).scale(Fraction(1, 2)) for i in range(n)])
        Y.append([(ga[i] - s.v[i]).scale(Fraction(1, 2)) for i in range(n)])
    Wm, Ym = transpose(W), transpose(Y)
    d = det(Wm)
    if not d:
        raise ValueError("D meets E_- nontrivially; not a Dirac structure")
    return OOperator(matmul(Ym, adjugate(Wm)), g, d)


def dirac_from_o(O: OOperator) -> DiracFrame:
    """Frame ((den - num) e_a, g (den + num) e_a): the graph of O scaled by its denominator."""
    n = O.n
    G = O.g_matrix()
    den_id = [[O.den if i == j else Poly.zero(O.nvars) for j in range(n)] for i in range(n)]
    minus = mat_add(den_id, mat_scale(O.num, -1))
    plus = matmul(G, mat_add(den_id, O.num))
    secs = [GeneralizedSection([minus[i][a] for i in range(n)], [plus[i][a] for i in range(n)]) for a in range(n)]
    return DiracFrame(secs)


def gjac_check(O: OOperator, H: GradedElement | None = None) -> CheckResult:
    """Twisted Jacobi-type integrability of O with the flat connection of constant g.

    Compares den * L_num with R_num, where LHS = L_num / den^4 and
    RHS = R_num / den^3 after clearing denominators.
    """
    n, nv = O.n, O.nvars
    if H is not None:
        require_closed(H)
    N, d = O.num, O.den
    G = O.g_matrix()
    U = mat_add([[d if i == j else Poly.zero(nv) for j in range(n)] for i in range(n)], mat_scale(N, -1))
    dN = [[[N[i][j] * d.diff(k) for j in range(n)] for i in range(n)] for k in range(n)]
    # numerator of d_k O:  (d_k N) d - N d_k d
    DO = [[[N[i][j].diff(k) * d - dN[k][i][j] for j in range(n)] for i in range(n)] for k in range(n)]
    NtG = matmul(transpose(N), G)

    def T(a, b, c):
        # [O^T g (d_{u_a} O)]_{cb} numerator with u_a = column a of U
        out = Poly.zero(nv)
        for k in range(n):
            ua = U[k][a]
            if not ua:
                continue
            for m in range(n):
                if NtG[c][m] and DO[k][m][b]:
                    out = out + ua * NtG[c][m] * DO[k][m][b]
        return out

    Hc = full_components(H, 3) if H is not None and H else {}
    residual = {}
    for a, b, c in itertools.product(range(n), repeat=3):
        lhs = (T(a, b, c) + T(b, c, a) + T(c, a, b)) * d
        rhs = Poly.zero(nv)
        for (k, l, m), h in Hc.items():
            x, y, z = U[k][a], U[l][b], U[m][c]
            if x and y and z:
                rhs = rhs + h * x * y * z
        rhs = rhs.scale(Fraction(1, 2)) * d * d
        r = lhs - rhs
        if r:
            residual[(a, b, c)] = r
    return CheckResult(not residual, residual)
