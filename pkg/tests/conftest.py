"""Shared builders, sympy bridges and cached heavy results."""

from __future__ import annotations

import functools
import itertools
import random
from fractions import Fraction

import pytest
import sympy as sp

from diracgauge.cartan import SymTensor2
from diracgauge.cli.oracle import oracle_sample, sample_points
from diracgauge.gengeo import Bivector, graph_of_bivector, three_form
from diracgauge.qmanifold import AlgebroidData
from diracgauge.symkernel import GradedElement, Poly

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


# -- polynomials -------------------------------------------------------------------


def xs(n):
    return [Poly.var(n, i) for i in range(n)], Poly.const(n, 1)


def rand_poly(rng: random.Random, n: int, degree: int = 2, terms: int = 3, den: int = 3) -> Poly:
    out = {}
    for _ in range(terms):
        e = [0] * n
        for _ in range(rng.randint(0, degree)):
            e[rng.randrange(n)] += 1
        out[tuple(e)] = Fraction(rng.randint(-4, 4), rng.randint(1, den))
    return Poly(n, out)


def sym(n):
    return sp.symbols(f"x1:{n + 1}")


def to_sympy(p: Poly, syms=None):
    syms = syms or sym(p.nvars)
    return sp.Add(*[sp.Rational(c.numerator, c.denominator) * sp.Mul(*[s ** k for s, k in zip(syms, e)])
                    for e, c in p.terms.items()])


def from_sympy(expr, n: int) -> Poly:
    syms = sym(n)
    poly = sp.Poly(sp.expand(expr), *syms)
    return Poly(n, {e: Fraction(int(c.p), int(c.q)) for e, c in poly.terms()})


# -- identities with the point oracle ------------------------------------------------


def coefficient_table(e):
    if isinstance(e, Poly):
        return {(): e}
    return dict(e.terms)


def assert_identity(lhs, rhs, samples: int = 20, seed: int = 0):
    """lhs == rhs symbolically, and their coefficients agree at sampled points.

    The sampling evaluates each side separately, so it does not rely on the
    kernel's subtraction or normalization.
    """
    assert lhs == rhs
    a, b = coefficient_table(lhs), coefficient_table(rhs)
    keys = set(a) | set(b)
    nvars = lhs.nvars if isinstance(lhs, Poly) else lhs.ctx.nvars
    for pt in sample_points(nvars, samples, seed):
        for k in keys:
            va = a[k].evaluate(pt) if k in a else 0
            vb = b[k].evaluate(pt) if k in b else 0
            assert va == vb, (k, pt)


def assert_zero(e, samples: int = 20, seed: int = 0):
    assert not e
    assert oracle_sample(e, samples, seed).passed


# -- orthogonal operators ----------------------------------------------------------------


def cayley(rng, n, G):
    """(1 - A)(1 + A)^{-1} with A g-antisymmetric: orthogonal for g."""
    S = [[Fraction(0)] * n for _ in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        S[i][j] = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
        S[j][i] = -S[i][j]
    Gi = sp.Matrix(G).inv()
    A = Gi * sp.Matrix(S)
    I = sp.eye(n)
    O = (I - A) * (I + A).inv()
    return [[Fraction(int(sp.numer(O[i, j])), int(sp.denom(O[i, j]))) for j in range(n)] for i in range(n)]


def metric(n, G):
    return SymTensor2([[Poly.const(n, G[i][j]) for j in range(n)] for i in range(n)])


# -- action algebroids -------------------------------------------------------------------


def _lie_algebras():
    """(n, vector fields, C[a][b][c] = C^a_{bc}) for a few realizations."""
    out = {}
    x, one = xs(2)
    z = Poly.zero(2)
    out["abelian"] = (2, [[one, z], [z, one]], [[[0, 0], [0, 0]], [[0, 0], [0, 0]]])
    x1, one1 = xs(1)
    out["affine"] = (1, [[one1], [x1[0]]], [[[0, 1], [-1, 0]], [[0, 0], [0, 0]]])
    # sl2 by linear fields e = x d2, f = y d1, h = x d1 - y d2
    C = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for (a, b), (c, k) in {(2, 0): (0, 2), (2, 1): (1, -2), (0, 1): (2, 1)}.items():
        C[c][a][b], C[c][b][a] = k, -k
    out["sl2"] = (2, [[z, x[0]], [x[1], z], [x[0], -x[1]]], C)
    x3, one3 = xs(3)
    z3 = Poly.zero(3)
    C = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        C[c][a][b], C[c][b][a] = -1, 1
    out["so3"] = (3, [[z3, -x3[2], x3[1]], [x3[2], z3, -x3[0]], [-x3[1], x3[0], z3]], C)
    # Heisenberg: [X, Y] = Z with X = d1, Y = d2 + x1 d3, Z = d3
    C = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    C[2][0][1], C[2][1][0] = 1, -1
    out["heisenberg"] = (3, [[one3, z3, z3], [z3, one3, x3[0]], [z3, z3, one3]], C)
    return out


LIE = _lie_algebras()


def _invertible(rng, k):
    while True:
        M = sp.Matrix(k, k, lambda i, j: sp.Rational(rng.randint(-3, 3), rng.randint(1, 2)))
        if M.det() != 0:
            return M


def _frac(v) -> Fraction:
    v = sp.Rational(v)
    return Fraction(int(v.p), int(v.q))


def random_action_algebroid(seed):
    """A listed Lie algebra in a random basis and random linear coordinates."""
    rng = random.Random(seed)
    name = sorted(LIE)[seed % len(LIE)]
    n, vecs, C = LIE[name]
    r = len(vecs)
    B = _invertible(rng, r)
    Bi = B.inv()
    # e'_a = B[a, b] e_b
    vecs2 = [[sum((vecs[b][i].scale(_frac(B[a, b])) for b in range(r)), Poly.zero(n)) for i in range(n)]
             for a in range(r)]
    C2 = [[[Fraction(0)] * r for _ in range(r)] for _ in range(r)]
    for a in range(r):
        for b in range(r):
            for f in range(r):
                C2[f][a][b] = _frac(sum(B[a, c] * B[b, d] * C[e][c][d] * Bi[e, f]
                                        for c in range(r) for d in range(r) for e in range(r)))
    # x = A y: components become A^{-1} v(A y)
    A = _invertible(rng, n)
    Ai = A.inv()
    ys = [Poly.var(n, i) for i in range(n)]
    sub = [sum((ys[j].scale(_frac(A[i, j])) for j in range(n)), Poly.zero(n)) for i in range(n)]
    vecs3 = []
    for v in vecs2:
        w = [p.substitute(sub) for p in v]
        vecs3.append([sum((w[i].scale(_frac(Ai[j, i])) for i in range(n)), Poly.zero(n)) for j in range(n)])
    E = AlgebroidData.action(n, vecs3, C2)
    return name, E


# -- standard models ---------------------------------------------------------------------


def r4_model():
    x, one = xs(4)
    P = Bivector(4, {(0, 1): one, (2, 3): one, (1, 2): x[0] * x[1]})
    H = three_form(4, {(0, 1, 3): -x[0]})
    return P, H


def r2_symplectic():
    _, one = xs(2)
    return Bivector(2, {(0, 1): one})


@functools.lru_cache(maxsize=None)
def r4_pipeline():
    from diracgauge.qmanifold import algebroid_from_frame, solve_symmetries
    P, H = r4_model()
    frame = graph_of_bivector(P)
    E = algebroid_from_frame(frame, H)
    sym_g = solve_symmetries(frame, H, 2)
    sym_gt = solve_symmetries(frame, H, 2, with_gamma=True)
    return P, H, frame, E, sym_g, sym_gt


@functools.lru_cache(maxsize=None)
def r4_extension(algebra: str):
    from diracgauge.equivariant import solve_extension
    P, H, frame, E, sym_g, sym_gt = r4_pipeline()
    basis = sym_g if algebra == "g" else sym_gt
    return solve_extension(H, E, basis.symmetries(4), 2)


@pytest.fixture(scope="session")
def r4():
    return r4_pipeline()
