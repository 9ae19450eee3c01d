from fractions import Fraction

import pytest
import sympy as sp

from diracgauge.cli.oracle import oracle_sample, standard_at
from diracgauge.equivariant import (DEGREE_CAVEAT, ORBIT_CAVEAT, ORBIT_UNCHECKED, check_E_extension,
                                    check_standard_extension, embed_form, exact_direction, solve_extension,
                                    standard_extension)
from diracgauge.gengeo import graph_of_bivector, three_form
from diracgauge.qmanifold import (AlgebroidData, ExtendedSymmetry, algebroid_from_frame, build_Q, lift_Qtilde,
                                  solve_symmetries)
from diracgauge.symkernel import GradedElement, Poly

from conftest import r2_symplectic, r4_extension, sym, xs

x, one = xs(3)
z = Poly.zero(3)
VOL = {(0, 1, 2): one}


def rotation():
    E = AlgebroidData.action(3, [[-x[1], x[0], z]], [[[0]]])
    alpha = [z, z, (x[0] * x[0] + x[1] * x[1]).scale(Fraction(-1, 2))]
    return E, three_form(3, VOL), alpha


def unit_sections(E):
    return [ExtendedSymmetry.pure_section([Poly.const(E.n, int(a == b)) for b in range(E.rank)], E.n)
            for a in range(E.rank)]


def test_rotation_passes_all_four_conditions():
    E, H, alpha = rotation()
    rep = check_standard_extension(H, [alpha], E)
    assert rep.conditions == {"restriction": True, "closure": True, "equivariance": True, "isotropy": True}
    C = [[[Fraction(0)]]]
    assert oracle_sample(standard_at(E.rho, [alpha], C, VOL, 3), nvars=3).passed


def test_rotation_closure_with_sympy():
    s = sym(3)
    v = [-s[1], s[0], 0]
    a3 = -(s[0] ** 2 + s[1] ** 2) / 2
    # iota_v(dx1 dx2 dx3) against d(a3 dx3), component by component
    iota = {(0, 1): v[2], (0, 2): -v[1], (1, 2): v[0]}
    d = {(0, 1): 0, (0, 2): sp.diff(a3, s[0]), (1, 2): sp.diff(a3, s[1])}
    assert all(sp.expand(iota[k] - d[k]) == 0 for k in iota)


PERTURBATIONS = [
    ("x3 dx1", [x[2], z, z], {"closure", "equivariance", "isotropy"}),
    ("x1 dx3", [z, z, x[0]], {"closure", "equivariance"}),
    ("x2 dx1 - x1 dx2", [x[1], -x[0], z], {"closure", "isotropy"}),
    ("x1 dx1 + x2 dx2", [x[0], x[1], z], set()),
    ("dx3", [z, z, one], set()),
]


@pytest.mark.parametrize("label,delta,failing", PERTURBATIONS, ids=[p[0] for p in PERTURBATIONS])
def test_perturbed_rotation_flags_conditions(label, delta, failing):
    E, H, alpha = rotation()
    pert = [a + b for a, b in zip(alpha, delta)]
    rep = check_standard_extension(H, [pert], E)
    assert set(rep.failed) == failing
    pointwise = oracle_sample(standard_at(E.rho, [pert], [[[Fraction(0)]]], VOL, 3), nvars=3)
    assert pointwise.passed == (not failing)


@pytest.mark.parametrize("label,delta,failing", PERTURBATIONS, ids=[p[0] for p in PERTURBATIONS])
def test_standard_conditions_match_E_extension(label, delta, failing):
    E, H, alpha = rotation()
    pert = [a + b for a, b in zip(alpha, delta)]
    Ht = standard_extension(H, [pert], E)
    assert check_E_extension(Ht, E, unit_sections(E), H).passed == (not failing)


def so3_standard():
    """so(3) acting on R^3 with H = 0 and alpha = 0 is trivially equivariant."""
    vecs = [[z, -x[2], x[1]], [x[2], z, -x[0]], [-x[1], x[0], z]]
    C = [[[0] * 3 for _ in range(3)] for _ in range(3)]
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        C[c][a][b], C[c][b][a] = -1, 1
    return AlgebroidData.action(3, vecs, C)


def test_so3_with_radial_alphas():
    E = so3_standard()
    r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    # alpha_a = 0 passes; alpha_a = r^2 dx^a breaks equivariance and closure
    zero = [[z, z, z]] * 3
    assert check_standard_extension(None, zero, E).passed
    bad = [[r2 if i == a else z for i in range(3)] for a in range(3)]
    rep = check_standard_extension(None, bad, E)
    assert "closure" in rep.failed


def test_standard_extension_rejects_open_H():
    x4, _ = xs(4)
    z4 = Poly.zero(4)
    E4 = AlgebroidData.action(4, [[x4[1], z4, z4, z4]], [[[0]]])
    with pytest.raises(ValueError):
        check_standard_extension(three_form(4, {(0, 1, 2): x4[3]}), [[z4] * 4], E4)


def test_standard_extension_needs_constant_structure(r4):
    E = r4[3]
    assert not E.is_constant()
    with pytest.raises(ValueError):
        check_standard_extension(None, [[Poly.zero(4)] * 4] * 4, E)


def test_E_extension_rejects_wrong_degree():
    E, H, alpha = rotation()
    with pytest.raises(ValueError):
        check_E_extension(GradedElement.gen(E.ctx, "theta1"), E, [], H)


# -- solver ----------------------------------------------------------------------------


@pytest.mark.parametrize("with_gamma", [False, True])
def test_psm_extension_is_the_symplectic_form(with_gamma):
    frame = graph_of_bivector(r2_symplectic())
    E = algebroid_from_frame(frame, None)
    S = solve_symmetries(frame, None, 2, with_gamma=with_gamma).symmetries(2)
    rep = solve_extension(None, E, S, 2)
    assert rep.dimension == 1
    omega = GradedElement.word(E.ctx, ["theta1", "psi1"]) + GradedElement.word(E.ctx, ["theta2", "psi2"])
    assert rep.solutions_contain(omega)
    assert check_E_extension(omega, E, S).passed


def test_extension_caveats():
    frame = graph_of_bivector(r2_symplectic())
    E = algebroid_from_frame(frame, None)
    S = solve_symmetries(frame, None, 2).symmetries(2)
    plain = solve_extension(None, E, S, 2)
    asserted = solve_extension(None, E, S, 2, assert_orbit_nondegenerate=True)
    assert DEGREE_CAVEAT.format(d=2) in plain.caveats
    assert ORBIT_UNCHECKED in plain.caveats and ORBIT_CAVEAT in asserted.caveats


def test_r4_extension_counts(r4):
    g, gt = r4_extension("g"), r4_extension("gtilde")
    assert g.status == "family" and g.dimension == 17
    assert gt.status == "unique" and gt.dimension == 0
    assert g.degree_used == gt.degree_used == 3


def test_r4_extensions_satisfy_conditions(r4):
    P, H, frame, E, sym_g, sym_gt = r4
    gt = r4_extension("gtilde")
    assert check_E_extension(gt.particular, E, sym_gt.symmetries(4), H).passed
    # fewer symmetries means fewer conditions: the gtilde solution also solves the g problem
    assert check_E_extension(gt.particular, E, sym_g.symmetries(4), H).passed
    g = r4_extension("g")
    for b in g.basis:
        assert check_E_extension(b, E, sym_g.symmetries(4)).passed


def test_r4_restriction_is_H(r4):
    P, H, frame, E, *_ = r4
    gt = r4_extension("gtilde")
    thetas = [f"theta{i + 1}" for i in range(4)]
    pure = gt.particular.filter(lambda m: all(E.ctx.generators[g].name in thetas for g in m))
    assert pure == embed_form(H, E)


@pytest.mark.parametrize("power", [0, 1, 2])
def test_ambiguity_directions(power, r4):
    P, H, frame, E, sym_g, _ = r4
    x4, one4 = xs(4)
    f = one4
    for _ in range(power):
        f = f * x4[0]
    beta = exact_direction(E, sym_g.symmetries(4), {("eta2", "eta3"): f}, 2)
    assert beta is not None
    assert beta.coefficient(["eta2", "eta3"]) == f
    direction = lift_Qtilde(build_Q(E)).apply(beta)
    assert direction
    assert r4_extension("g").solutions_contain(direction)
    assert check_E_extension(direction, E, sym_g.symmetries(4)).passed


def test_ambiguity_direction_breaks_gtilde(r4):
    P, H, frame, E, _, sym_gt = r4
    x4, one4 = xs(4)
    beta = exact_direction(E, sym_gt.symmetries(4), {("eta2", "eta3"): one4}, 2)
    # whatever potential survives the gamma symmetries is closed, so it moves nothing
    assert beta is None or not lift_Qtilde(build_Q(E)).apply(beta)


def test_lower_degree_bound_widens():
    frame = graph_of_bivector(r2_symplectic())
    E = algebroid_from_frame(frame, None)
    rep = solve_extension(None, E, [], 0)
    assert rep.degree_used == 0 and rep.dimension > 0
