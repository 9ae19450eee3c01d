import itertools
import random
from fractions import Fraction

import pytest
import sympy as sp

from diracgauge.cartan import form_context, one_form
from diracgauge.cli.oracle import oracle_sample, theta_at
from diracgauge.equivariant import in_span
from diracgauge.gengeo import GeneralizedSection, graph_of_bivector
from diracgauge.qmanifold import (AlgebroidData, AlgebroidError, ExtendedSymmetry, algebroid_from_frame,
                                  bracket_formula, build_Q, derived_bracket, extended_bracket,
                                  gamma_antisymmetric_part, gamma_bracket_formula, lift_Qtilde, membership_g,
                                  membership_gtilde, q_square, section_action_formula, solve_symmetries,
                                  theta_residual)
from diracgauge.symkernel import Poly

from conftest import r2_symplectic, rand_poly, sym, to_sympy, xs


def affine():
    x, one = xs(1)
    return AlgebroidData.action(1, [[one], [x[0]]], [[[0, 1], [-1, 0]], [[0, 0], [0, 0]]])


def so3():
    x, _ = xs(3)
    z = Poly.zero(3)
    vecs = [[z, -x[2], x[1]], [x[2], z, -x[0]], [-x[1], x[0], z]]
    C = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        C[c][a][b], C[c][b][a] = -1, 1
    return AlgebroidData.action(3, vecs, C)


def test_q_squares_to_zero_on_algebroids(r4):
    _, _, _, E, _, _ = r4
    for alg in (affine(), so3(), E, algebroid_from_frame(graph_of_bivector(r2_symplectic()))):
        assert q_square(build_Q(alg)).is_zero()


def test_q_square_detects_wrong_structure_constants():
    x, one = xs(1)
    bad = AlgebroidData.action(1, [[one], [x[0]]], [[[0, 0], [0, 0]], [[0, 1], [-1, 0]]])
    assert not q_square(build_Q(bad)).is_zero()


def test_structure_constants_must_be_antisymmetric():
    _, one = xs(1)
    with pytest.raises(AlgebroidError):
        AlgebroidData.action(1, [[one], [one]], [[[0, 1], [1, 0]], [[0, 0], [0, 0]]])


def test_q_tilde_squares_to_zero(r4):
    _, _, _, E, _, _ = r4
    Qt = lift_Qtilde(build_Q(E))
    assert q_square(Qt).is_zero()


def rand_section(rng, E):
    return [rand_poly(rng, E.n, 2, 2) for _ in range(E.rank)]


@pytest.mark.parametrize("seed", range(10))
def test_derived_bracket_matches_formula(seed, r4):
    rng = random.Random(seed)
    E = r4[3] if seed % 2 else so3()
    e1, e2 = rand_section(rng, E), rand_section(rng, E)
    assert derived_bracket(E, e1, e2) == bracket_formula(E, e1, e2)


@pytest.mark.parametrize("seed", range(10))
def test_derived_bracket_jacobi(seed, r4):
    rng = random.Random(seed)
    E = r4[3] if seed % 2 else affine()
    a, b, c = (rand_section(rng, E) for _ in range(3))
    br = lambda u, v: bracket_formula(E, u, v)
    lhs = br(a, br(b, c))
    rhs = [p + q for p, q in zip(br(br(a, b), c), br(b, br(a, c)))]
    assert lhs == rhs


@pytest.mark.parametrize("seed", range(5))
def test_bracket_formula_matches_sympy_on_affine(seed):
    rng = random.Random(seed)
    E = affine()
    e1, e2 = rand_section(rng, E), rand_section(rng, E)
    (x,) = sym(1)
    a, b = [to_sympy(p) for p in e1], [to_sympy(p) for p in e2]
    rho = [1, x]
    v1, v2 = a[0] * rho[0] + a[1] * rho[1], b[0] * rho[0] + b[1] * rho[1]
    # [e1, e2]_E = e1 and the other brackets vanish
    expect = [v1 * sp.diff(b[0], x) - v2 * sp.diff(a[0], x) + a[0] * b[1] - a[1] * b[0],
              v1 * sp.diff(b[1], x) - v2 * sp.diff(a[1], x)]
    got = derived_bracket(E, e1, e2)
    assert [sp.expand(to_sympy(p) - q) for p, q in zip(got, expect)] == [0, 0]


def rand_gamma(rng, E, degree=1):
    return [[rand_poly(rng, E.n, degree, 2) for _ in range(E.n)] for _ in range(E.rank)]


@pytest.mark.parametrize("seed", range(6))
def test_mixed_bracket_is_section_action(seed):
    rng = random.Random(seed)
    E = so3() if seed % 2 else affine()
    n = E.n
    eps, gam = rand_section(rng, E), rand_gamma(rng, E)
    out = extended_bracket(E, ExtendedSymmetry.pure_section(eps, n), ExtendedSymmetry.pure_gamma(gam, n))
    assert all(not p for p in out.eps)
    assert out.gamma == section_action_formula(E, eps, gam)
    rev = extended_bracket(E, ExtendedSymmetry.pure_gamma(gam, n), ExtendedSymmetry.pure_section(eps, n))
    assert rev.gamma == [[-p for p in row] for row in out.gamma]


@pytest.mark.parametrize("seed", range(6))
def test_pure_gamma_bracket_sign(seed):
    """The derived bracket of pure gamma parts is the negative of -g rho g' + g' rho g,
    so gamma -> -gamma maps one bracket onto the other."""
    rng = random.Random(seed)
    E = so3() if seed % 2 else affine()
    n = E.n
    g1, g2 = rand_gamma(rng, E), rand_gamma(rng, E)
    out = extended_bracket(E, ExtendedSymmetry.pure_gamma(g1, n), ExtendedSymmetry.pure_gamma(g2, n))
    printed = gamma_bracket_formula(E, g1, g2)
    assert out.gamma == [[-p for p in row] for row in printed]
    neg = lambda g: [[-p for p in row] for row in g]
    img = extended_bracket(E, ExtendedSymmetry.pure_gamma(neg(g1), n), ExtendedSymmetry.pure_gamma(neg(g2), n))
    assert neg(out.gamma) == gamma_bracket_formula(E, neg(g1), neg(g2))
    assert img.gamma == out.gamma


# -- membership and symmetry solving ------------------------------------------------------


def c_direction():
    x, one = xs(4)
    z = Poly.zero(4)
    return GeneralizedSection([z, z, z, one], [x[0] * x[1], z, one, z])


def test_c_direction_is_a_symmetry(r4):
    P, H, frame, *_ = r4
    res = membership_g(c_direction(), frame, H)
    assert res.passed
    assert res.coefficients is not None


def test_theta_residual_matches_sympy(r4):
    P, H, frame, *_ = r4
    s = sym(4)
    x, one = xs(4)
    z = Poly.zero(4)
    sec = GeneralizedSection([x[2], z, z, x[0]], [x[1], x[0] * x[3], z, one])
    res = theta_residual(sec, H)
    v, a = [to_sympy(p) for p in sec.v], [to_sympy(p) for p in sec.alpha]
    Hf = {(0, 1, 3): -s[0]}
    full = {}
    for (i, j, k), h in Hf.items():
        for p in itertools.permutations((i, j, k)):
            sign = 1
            for u in range(3):
                for w in range(u + 1, 3):
                    if p[u] > p[w]:
                        sign = -sign
            full[p] = sign * h
    for i in range(4):
        for j in range(i + 1, 4):
            iv = sum(v[l] * full.get((l, i, j), 0) for l in range(4))
            da = sp.diff(a[j], s[i]) - sp.diff(a[i], s[j])
            got = res.coefficient([f"dx{i + 1}", f"dx{j + 1}"])
            assert sp.expand(to_sympy(got) - (iv - da)) == 0


def test_symmetry_dimensions(r4):
    *_, sym_g, sym_gt = r4
    assert sym_g.dimension == 5
    assert sym_gt.dimension == 5 and len(sym_gt.gammas) == 10
    assert solve_symmetries(graph_of_bivector(r2_symplectic()), None, 2).dimension == 9


def test_r4_symmetry_basis_members(r4):
    P, H, frame, E, sym_g, _ = r4
    x, one = xs(4)
    z = Poly.zero(4)
    expected = [[x[0] * x[1], z, one, z], [z, z, z, one], [z, z, z, x[3]],
                [Poly.const(4, 2), z, z, x[0] * x[0]], [z, z, z, x[3] * x[3]]]
    alphas = [s.alpha for s in sym_g.generalized]
    # same span over the rationals
    ctx = form_context(4)
    basis = [one_form(ctx, a) for a in alphas]
    for a in expected:
        assert in_span(one_form(ctx, a), basis)
    for s in sym_g.generalized:
        assert membership_g(s, frame, H).passed
        assert oracle_sample(theta_at(s.v, s.alpha, {(0, 1, 3): -x[0]}, 4), nvars=4).passed


def test_symmetry_sections_pass_sympy_oracle(r4):
    P, H, frame, E, sym_g, _ = r4
    s = sym(4)
    for sec in sym_g.generalized:
        v, a = [to_sympy(p) for p in sec.v], [to_sympy(p) for p in sec.alpha]
        # iota_v H for H = -x1 dx1 dx2 dx4, against d alpha
        iv = {(0, 1): -s[0] * v[3], (0, 3): s[0] * v[1], (1, 3): -s[0] * v[0]}
        for i in range(4):
            for j in range(i + 1, 4):
                da = sp.diff(a[j], s[i]) - sp.diff(a[i], s[j])
                assert sp.expand(iv.get((i, j), 0) - da) == 0


def test_sign_flipped_h_relation_is_not_a_symmetry(r4):
    """alpha = g dx1 + h dx4 with v = g d2 - h d3 lies in D; the symmetry condition
    forces h_1 = x1 g + g_4, so the member built from h_1 = -x1 g + g_4 fails."""
    P, H, frame, *_ = r4
    x, one = xs(4)
    z = Poly.zero(4)
    half = Fraction(1, 2)

    def member(g, h):
        return GeneralizedSection([z, g, -h, z], [g, z, z, h])

    good = member(one, (x[0] * x[0]).scale(half))
    bad = member(one, (x[0] * x[0]).scale(-half))
    assert membership_g(good, frame, H).passed
    res = membership_g(bad, frame, H)
    assert not res.passed
    assert res.residual is not None and res.residual.coefficient(["dx1", "dx4"]) == x[0] + x[0]
    # independently: d(-x1^2/2 dx4) = -x1 dx1 dx4, while iota_v H = x1 dx1 dx4 for v = d2 + x1^2/2 d3
    s = sym(4)
    d_alpha = sp.diff(-s[0] ** 2 / 2, s[0])
    iota = s[0]
    assert sp.expand(iota - d_alpha) == 2 * s[0]


def test_gamma_generators_have_symmetric_tilde(r4):
    P, H, frame, E, _, sym_gt = r4
    for g in sym_gt.gammas:
        assert all(not p for p in gamma_antisymmetric_part(g, frame).values())
        assert membership_gtilde(GeneralizedSection.zero(4), g, frame, H).passed


def test_antisymmetric_gamma_is_rejected(r4):
    P, H, frame, *_ = r4
    x, one = xs(4)
    z = Poly.zero(4)
    # tau is the identity on the dx parts of the graph frame
    g = [[z, one, z, z], [-one, z, z, z], [z, z, z, z], [z, z, z, z]]
    assert not membership_gtilde(GeneralizedSection.zero(4), g, frame, H).passed
