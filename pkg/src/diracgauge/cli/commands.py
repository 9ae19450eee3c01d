"""Command dispatch: ModelSpec -> Report."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional

from ..cartan import SymTensor2
from ..equivariant import (check_E_extension, check_standard_extension, solve_extension,
                           standard_extension)
from ..gauge_compiler import (NotExactError, Worldsheet, dsm_assemble, emit, gauge_action, hpsm_integrand,
                              jacobi_trivector_term)
from ..gengeo import (Bivector, DiracFrame, GeneralizedSection, OOperator, dirac_from_o,
                      gjac_check, graph_of_bivector, is_dirac, o_from_dirac, three_form, twisted_poisson_check)
from ..qmanifold import (AlgebroidData, AlgebroidError, ExtendedSymmetry, algebroid_from_frame, build_Q,
                         extended_field, lift_Qtilde, membership_g, membership_gtilde, q_square,
                         solve_symmetries)
from ..symkernel import GradedElement, Poly
from .dsl import ModelSpec
from .oracle import (frame_residuals, gjac_at, graph_sections, oracle_sample, pointwise, standard_at, termwise,
                     theta_at)

SCHEMA = 1
EXIT_CODES = {"pass": 0, "unique": 0, "family": 0, "fail": 1, "none": 1, "error": 1,
              "parse-error": 2, "model-error": 2, "inconclusive": 3}
CONFIRMED = ("pass", "unique", "family")
ORACLE_SAMPLES = 20


class ModelError(ValueError):
    """The model parses but cannot be used for the requested command."""


@dataclass
class Report:
    command: str
    model: str
    status: str = "pass"
    residuals: Dict[str, str] = field(default_factory=dict)
    result: Dict[str, object] = field(default_factory=dict)
    caveats: List[str] = field(default_factory=list)
    oracle: Optional[dict] = None
    timing: Optional[float] = None
    claims: List = field(default_factory=list, repr=False)
    emitted: Optional[str] = field(default=None, repr=False)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES.get(self.status, 1)

    def as_dict(self) -> dict:
        out = {"schema": SCHEMA, "command": self.command, "model": self.model, "status": self.status,
               "residuals": self.residuals, "result": self.result, "caveats": self.caveats,
               "oracle": self.oracle}
        if self.timing is not None:
            out["timing"] = round(self.timing, 3)
        return out

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, ensure_ascii=False)


# -- model assembly ----------------------------------------------------------------


def _shift(key) -> tuple:
    return tuple(k - 1 for k in key)


def _label(key) -> str:
    return "(" + ",".join(str(k + 1) for k in key) + ")"


def model_H(spec: ModelSpec) -> Optional[GradedElement]:
    if spec.threeform is None or not spec.threeform[1]:
        return None
    return three_form(spec.dim, {_shift(k): v for k, v in spec.threeform[1].items()})


def raw_H(spec: ModelSpec) -> Dict:
    return {} if spec.threeform is None else {_shift(k): v for k, v in spec.threeform[1].items()}


def model_metric(spec: ModelSpec) -> SymTensor2:
    n = spec.dim
    if spec.metric is None:
        return SymTensor2.identity(n)
    m = [[Poly.zero(n) for _ in range(n)] for _ in range(n)]
    for (i, j), v in spec.metric.items():
        m[i - 1][j - 1] = m[j - 1][i - 1] = Poly.const(n, v)
    return SymTensor2(m)


def model_bivector(spec: ModelSpec) -> Bivector:
    if spec.bivector is None:
        raise ModelError("this command needs a bivector")
    return Bivector(spec.dim, {_shift(k): v for k, v in spec.bivector[1].items()})


def model_ooperator(spec: ModelSpec) -> OOperator:
    n = spec.dim
    g = model_metric(spec)
    if spec.ooperator is not None:
        _, den, comps = spec.ooperator
        num = [[comps.get((i + 1, j + 1), Poly.zero(n)) for j in range(n)] for i in range(n)]
        try:
            return OOperator(num, g, den)
        except ValueError as exc:
            raise ModelError(str(exc)) from None
    try:
        return o_from_dirac(model_frame(spec), g)
    except ValueError as exc:
        raise ModelError(str(exc)) from None


def model_frame(spec: ModelSpec) -> DiracFrame:
    if spec.bivector is not None:
        return graph_of_bivector(model_bivector(spec))
    if spec.ooperator is not None:
        return dirac_from_o(model_ooperator(spec))
    if spec.frame is not None:
        try:
            return DiracFrame([GeneralizedSection(v, a) for v, a in spec.frame[1]])
        except ValueError as exc:
            raise ModelError(str(exc)) from None
    raise ModelError("this command needs a Dirac structure")


def model_action(spec: ModelSpec) -> AlgebroidData:
    act = spec.action
    if act is None:
        raise ModelError("this command needs an action block")
    r = len(act.vectors)
    C = [[[Fraction(0)] * r for _ in range(r)] for _ in range(r)]
    for (a, b, c), k in act.constants.items():
        C[a - 1][b - 1][c - 1] = k
        C[a - 1][c - 1][b - 1] = -k
    E = AlgebroidData.action(spec.dim, act.vectors, C)
    if not q_square(build_Q(E)).is_zero():
        raise ModelError("structure constants are not compatible with the generator vector fields")
    return E


# -- rendering -----------------------------------------------------------------------


def _render_map(residual: Dict, coords) -> Dict[str, str]:
    out = {}
    for k in sorted(residual):
        v = residual[k]
        if isinstance(v, GradedElement):
            if v:
                out[_label(k)] = v.render(coords)
        elif v:
            out[_label(k)] = v.render(coords)
    return out


def _section_dict(s: GeneralizedSection, coords) -> dict:
    return {"v": [p.render(coords) for p in s.v], "alpha": [p.render(coords) for p in s.alpha]}


def _elem(e: Optional[GradedElement], coords) -> Optional[str]:
    return None if e is None else e.render(coords)


# -- independent pointwise identities --------------------------------------------------


def _graph_identity(spec: ModelSpec):
    P = {_shift(k): v for k, v in spec.bivector[1].items()}
    return frame_residuals(graph_sections(P, spec.dim), raw_H(spec), spec.dim)


def _frame_identity(spec: ModelSpec, frame: DiracFrame):
    return frame_residuals([(s.v, s.alpha) for s in frame.sections], raw_H(spec), spec.dim)


def _gjac_identity(spec: ModelSpec, O: OOperator):
    G = [[x.constant_term() for x in row] for row in O.g_matrix()]
    return gjac_at(O.num, O.den, G, raw_H(spec), spec.dim)


def _span_identity(s: GeneralizedSection, frame: DiracFrame):
    @pointwise(frame.n)
    def f(pt):
        return [sum(s.alpha[i].evaluate(pt) * e.v[i].evaluate(pt) + e.alpha[i].evaluate(pt) * s.v[i].evaluate(pt)
                    for i in range(frame.n)) for e in frame.sections]
    return f


def _standard_identity(spec: ModelSpec, E: AlgebroidData):
    C = [[[c.constant_term() for c in row] for row in plane] for plane in E.C]
    return standard_at(spec.action.vectors, spec.action.alphas, C, raw_H(spec), spec.dim)


# -- commands ------------------------------------------------------------------------


def cmd_check(spec: ModelSpec, what: str, rep: Report, **_):
    H = model_H(spec)
    if what == "poisson":
        res = twisted_poisson_check(model_bivector(spec), H)
        rep.status = res.status
        rep.residuals = _render_map(res.residual, spec.coords)
        rep.claims = res.zero_claims() + [_graph_identity(spec)]
        rep.result = {"twisted": H is not None}
    elif what == "dirac":
        frame = model_frame(spec)
        res = is_dirac(frame, H)
        rep.status = res.status
        rep.residuals = {**{"isotropy" + _label(k): v.render(spec.coords) for k, v in sorted(res.isotropy.items()) if v},
                         **{"courant" + _label(k): v.render(spec.coords) for k, v in sorted(res.courant.items()) if v}}
        rep.claims = res.zero_claims() + [_frame_identity(spec, frame)]
        if res.passed:
            rep.result["structure_functions"] = "polynomial" if res.structure is not None else "not polynomial"
        if res.note:
            rep.result["note"] = res.note
        if res.witness is not None:
            rep.result["witness"] = _label(res.witness)
    elif what == "gjac":
        O = model_ooperator(spec)
        res = gjac_check(O, H)
        rep.status = res.status
        rep.residuals = _render_map(res.residual, spec.coords)
        rep.claims = res.zero_claims() + [_gjac_identity(spec, O)]
        rep.result = {"denominator": O.den.render(spec.coords)}
    else:
        raise ModelError(f"unknown check {what!r}")


def _symmetries(spec: ModelSpec, frame: DiracFrame, H, degree: int, algebra: str):
    return solve_symmetries(frame, H, degree, with_gamma=(algebra == "gtilde"))


def cmd_symmetries(spec: ModelSpec, rep: Report, degree: int, algebra: str = "g", **_):
    frame = model_frame(spec)
    H = model_H(spec)
    basis = _symmetries(spec, frame, H, degree, algebra)
    sections, bad = [], 0
    for s in basis.generalized:
        m = membership_g(s, frame, H)
        rep.claims.extend(m.zero_claims())
        rep.claims.append(theta_at(s.v, s.alpha, raw_H(spec), spec.dim))
        rep.claims.append(_span_identity(s, frame))
        if not m.passed:
            bad += 1
        sections.append(_section_dict(s, spec.coords))
    gammas = []
    for g in basis.gammas:
        m = membership_gtilde(GeneralizedSection.zero(spec.dim), g, frame, H)
        rep.claims.extend(m.zero_claims())
        if not m.passed:
            bad += 1
        gammas.append([[p.render(spec.coords) for p in row] for row in g])
    rep.status = "pass" if not bad else "fail"
    rep.result = {"algebra": algebra, "degree": degree, "dimension": basis.dimension, "sections": sections}
    if algebra == "gtilde":
        rep.result["gamma_generators"] = gammas
        if basis.pruned:
            rep.caveats.append("gamma generators are constant symmetric forms pulled back through the frame; "
                               "they generate all others over functions")
    rep.caveats.append(f"complete up to degree {degree}")


def _extension(spec: ModelSpec, degree: int, algebra: str, assert_orbit: bool, slack: Optional[int] = None):
    frame = model_frame(spec)
    H = model_H(spec)
    try:
        E = algebroid_from_frame(frame, H)
    except AlgebroidError as exc:
        return None, None, None, str(exc)
    S = _symmetries(spec, frame, H, degree, algebra).symmetries(spec.dim)
    res = solve_extension(H, E, S, degree, slack=slack, assert_orbit_nondegenerate=assert_orbit)
    return E, S, res, None


def cmd_extend(spec: ModelSpec, rep: Report, degree: int, algebra: str = "g", assert_orbit: bool = False,
               slack: Optional[int] = None, **_):
    assert_orbit = assert_orbit or "orbit_nondegenerate" in spec.assertions
    H = model_H(spec)
    E, S, res, err = _extension(spec, degree, algebra, assert_orbit, slack)
    if res is None:
        rep.status = "inconclusive"
        rep.result = {"reason": err}
        return
    rep.status = res.status
    rep.caveats.extend(res.caveats)
    rep.result = {"algebra": algebra, "degree_bound": res.degree_bound, "degree_used": res.degree_used,
                  "symmetries": res.symmetry_count, "dimension": res.dimension,
                  "particular": _elem(res.particular, spec.coords),
                  "homogeneous": [b.render(spec.coords) for b in res.basis]}
    if res.witness:
        rep.result["witness"] = res.witness
    if res.particular is not None:
        fields = [lift_Qtilde(build_Q(E))] + [extended_field(E, s) for s in S]
        rep.claims.extend(check_E_extension(res.particular, E, S, H).zero_claims())
        rep.claims.append(termwise(fields, res.particular))
        for b in res.basis:
            rep.claims.extend(check_E_extension(b, E, S, None).zero_claims())
            rep.claims.append(termwise(fields, b))


def normalized(b: GradedElement) -> GradedElement:
    """Scale b so that its first constant theta-psi coefficient is 1."""
    ctx = b.ctx
    for m, p in b.items():
        names = [ctx.generators[g].name for g in m]
        if len(names) == 2 and names[0].startswith("theta") and names[1].startswith("psi") and p.is_constant():
            return b.scale(1 / p.constant_term())
    return b


def cmd_gauge(spec: ModelSpec, rep: Report, degree: int, emit_format: Optional[str] = None,
              assert_orbit: bool = False, **_):
    H = model_H(spec)
    if spec.ooperator is not None:
        O = model_ooperator(spec)
        dsm = dsm_assemble(O, H)
        rep.status = "pass" if dsm.agree else "fail"
        rep.claims = list(dsm.residual.polys())
        action = dsm.split_form
        rep.result = {"theory": "dirac sigma model", "forms_agree": dsm.agree,
                      "denominator": O.den.render(spec.coords)}
    else:
        assert_orbit = assert_orbit or "orbit_nondegenerate" in spec.assertions
        E, S, res, err = _extension(spec, degree, "gtilde", assert_orbit)
        if res is None:
            rep.status, rep.result = "inconclusive", {"reason": err}
            return
        rep.caveats.extend(res.caveats)
        if res.status in ("none", "inconclusive"):
            rep.status, rep.result = res.status, {"extension": res.status}
            return
        if H is None:
            if not res.basis:
                rep.status, rep.result = "none", {"extension": "only the zero extension"}
                return
            Ht = normalized(res.basis[0])
            if res.dimension > 1:
                rep.caveats.append(f"extension family of dimension {res.dimension}; the first basis element was used")
        else:
            Ht = res.particular
            if res.dimension:
                rep.caveats.append(f"extension family of dimension {res.dimension}; the particular solution was used")
        try:
            action = gauge_action(Ht, E, H)
        except NotExactError as exc:
            rep.status, rep.result = "fail", {"reason": str(exc)}
            return
        W = Worldsheet(E, lower=True)
        rep.claims = list(action.consistency(W.pullback(Ht)).polys())
        rep.claims.append(termwise([lift_Qtilde(build_Q(E))] + [extended_field(E, s) for s in S], Ht))
        rep.status = "pass"
        rep.result = {"theory": "gauged sigma model", "extension": res.status, "degree_used": res.degree_used,
                      "extension_used": Ht.render(spec.coords)}
        if spec.bivector is not None:
            P = model_bivector(spec)
            rep.result["matches_twisted_psm"] = action.boundary == hpsm_integrand(P, action.ctx)
            if H is None:
                jac = jacobi_trivector_term(P, action.ctx)
                rep.result["jacobi_term_vanishes"] = not jac
                if not jac:
                    rep.claims.extend(jac.polys())
    rep.result["latex"] = emit(action, "latex")
    rep.emitted = emit(action, emit_format) if emit_format else None


def cmd_standard_extend(spec: ModelSpec, rep: Report, **_):
    E = model_action(spec)
    H = model_H(spec)
    alphas = spec.action.alphas
    cond = check_standard_extension(H, alphas, E)
    rep.status = "pass" if cond.passed else "fail"
    rep.claims = cond.zero_claims() + [_standard_identity(spec, E)]
    for name in cond.failed:
        items = cond.residuals[name]
        items = items if isinstance(items, list) else [items]
        rendered = [x.render(spec.coords) for x in items if x]
        if rendered:
            rep.residuals[name] = "; ".join(rendered)
    Ht = standard_extension(H, alphas, E)
    S = [ExtendedSymmetry.pure_section([Poly.const(spec.dim, int(a == b)) for b in range(E.rank)], spec.dim)
         for a in range(E.rank)]
    echeck = check_E_extension(Ht, E, S, H)
    rep.result = {"conditions": dict(cond.conditions), "failed": cond.failed,
                  "extension": Ht.render(spec.coords), "E_extension": dict(echeck.conditions)}
    if cond.passed:
        rep.claims.extend(echeck.zero_claims())


def primary_claims(spec: ModelSpec):
    """The residuals of the model's defining check, and whether they vanish symbolically."""
    H = model_H(spec)
    if spec.action is not None and spec.dirac_source() is None:
        cond = check_standard_extension(H, spec.action.alphas, model_action(spec))
        items = []
        for v in cond.residuals.values():
            items.extend(v if isinstance(v, list) else [v])
        return "standard extension", items + [_standard_identity(spec, model_action(spec))], cond.passed
    if spec.bivector is not None:
        res = twisted_poisson_check(model_bivector(spec), H)
        return "twisted poisson", list(res.residual.values()) + [_graph_identity(spec)], res.passed
    if spec.ooperator is not None:
        O = model_ooperator(spec)
        res = gjac_check(O, H)
        return "gjac", list(res.residual.values()) + [_gjac_identity(spec, O)], res.passed
    frame = model_frame(spec)
    res = is_dirac(frame, H, need_structure=False)
    return "dirac", list(res.isotropy.values()) + list(res.courant.values()) + [_frame_identity(spec, frame)], \
        res.passed


def cmd_oracle(spec: ModelSpec, rep: Report, samples: int = ORACLE_SAMPLES, seed: int = 0, **_):
    name, claims, symbolic = primary_claims(spec)
    res = oracle_sample(claims, samples, seed, nvars=spec.dim)
    rep.status = "pass" if res.passed else "fail"
    rep.result = {"identity": name, "symbolic_zero": symbolic, "agrees": res.passed == symbolic}
    rep.oracle = res.as_dict()


COMMANDS = {
    "check": cmd_check,
    "symmetries": cmd_symmetries,
    "extend": cmd_extend,
    "gauge": cmd_gauge,
    "standard-extend": cmd_standard_extend,
    "oracle": cmd_oracle,
}


def run(command: str, spec: ModelSpec, seed: int = 0, timing: bool = False, **opts) -> Report:
    """Run a command and confirm every symbolic pass with the point-sampling oracle."""
    label = command if command != "check" else f"check {opts.get('what')}"
    rep = Report(label, spec.name)
    opts.setdefault("degree", spec.degree)
    start = time.perf_counter()
    try:
        if command == "check":
            cmd_check(spec, opts.pop("what"), rep, **opts)
        elif command == "oracle":
            cmd_oracle(spec, rep, seed=seed, **opts)
        else:
            COMMANDS[command](spec, rep, **opts)
    except ValueError as exc:  # ModelError, NotClosedError, AlgebroidError and invalid inputs
        rep.status, rep.result = "model-error", {"error": str(exc)}
    if command != "oracle" and rep.status in CONFIRMED:
        res = oracle_sample(rep.claims, ORACLE_SAMPLES, seed, nvars=spec.dim)
        rep.oracle = res.as_dict()
        if not res.passed:
            rep.status = "error"
            rep.caveats.append("a symbolic zero failed the sampling oracle")
    if timing:
        rep.timing = time.perf_counter() - start
    return rep
