import math
from fractions import Fraction

import numpy as np
import pytest

from cstarpres import bounds, fcalc, repsearch
from cstarpres.bounds import Ival
from cstarpres.exact import Coeff, XS
from cstarpres.fcalc import (LemmaError, MacroError, builtin_registry,
                             exp_bounds, expand_macro, geq_zero_body,
                             instantiate_schema, leq_body,
                             load_registry_file, match_geq_body,
                             norm_le_body)
from cstarpres.parser import format_term, parse_term
from cstarpres.terms import NormedSet, adj_nf, gen_nf, star


def test_exp_bounds_sandwich():
    for q in [Fraction(0), Fraction(1), Fraction(-3), Fraction(7, 2),
              Fraction(-1, 4)]:
        lo, hi = exp_bounds(q)
        assert lo <= hi
        assert float(lo) <= math.exp(float(q)) <= float(hi)
        assert float(hi) - float(lo) < 1e-6
    lo, hi = exp_bounds(Fraction(1), terms=40)
    assert float(hi - lo) < 1e-40


def test_function_range_maps(reg):
    p = reg.function("p")
    assert p.range_on(Ival(XS(-2), XS(3)), ()) == Ival(XS(0), XS(3))
    sq = reg.function("sqrt")
    assert sq.range_on(Ival(XS(1), XS(4)), ()) == Ival(XS(1), XS(2))
    iv = sq.range_on(Ival(XS(0), XS(2)), ())
    assert iv.lo == XS(0) and iv.hi.cmp(XS(0, 1, 2)) >= 0
    inv = reg.function("inv_lb")
    assert inv.range_on(Ival(XS(1), XS(4)), (XS(1),)) == \
        Ival(XS(Fraction(1, 4)), XS(1))
    ex = reg.function("exp")
    got = ex.range_on(Ival(XS(0), XS(1)), ())
    assert float(got.lo) <= 1.0 and math.e <= float(got.hi) <= math.e + 1e-6


def test_exact_values_at_rationals(reg):
    assert reg.exact_value("p", Coeff(Fraction(-2)), ()) == Coeff(0)
    assert reg.exact_value("p", Coeff(Fraction(5, 2)), ()) == Coeff(Fraction(5, 2))
    assert reg.exact_value("sqrt", Coeff(Fraction(9, 4)), ()) == Coeff(Fraction(3, 2))
    assert reg.exact_value("sqrt", Coeff(Fraction(2)), ()) is None
    assert reg.exact_value("inv_lb", Coeff(Fraction(2)), (XS(1),)) == \
        Coeff(Fraction(1, 2))
    assert reg.exact_value("exp", Coeff(Fraction(0)), ()) == Coeff(1)
    assert reg.exact_value("exp", Coeff(Fraction(1)), ()) is None


def test_macro_expansions_frozen(reg):
    g = NormedSet()
    g.add("x", XS(1))
    x = gen_nf("x")
    assert format_term(geq_zero_body(x * x, reg), g) == \
        "-p(1/2 x x + 1/2 x* x*) + x x"
    assert format_term(norm_le_body(x, XS(0, Fraction(1, 2), 3), reg), g) == \
        "-p(3/4 x* x - x* x x* x) + 3/4 x* x - x* x x* x"
    got = expand_macro("left_inv", x, XS(1), reg)
    assert [(s, format_term(b, g)) for s, b in got] == \
        [("", "-1 - p(-1 + x* x) + x* x")]
    got = expand_macro("inv", x, XS(2), reg)
    assert [(s, format_term(b, g)) for s, b in got] == \
        [("_l", "-1 - p(-1 + 4 x* x) + 4 x* x"),
         ("_r", "-1 - p(-1 + 4 x x*) + 4 x x*")]
    with pytest.raises(MacroError):
        expand_macro("norm_ge", x, XS(1), reg)
    with pytest.raises(MacroError):
        leq_body(x, x * x, reg)  # x is not self-adjoint


def test_match_geq_body_round_trip(reg):
    g = NormedSet()
    g.add("x", XS(2))
    for text in ["x* x - 1", "1 - x* x", "x + x*"]:
        a = parse_term(text, g, reg)
        body = geq_zero_body(a, reg)
        assert match_geq_body(body, reg) == a
    assert match_geq_body(gen_nf("x") * adj_nf("x"), reg) is None


def test_fparam_breakpoint_and_branches(reg):
    s = fcalc._fparam_breakpoint(XS(2))
    assert s == XS(0, Fraction(1, 2), 3)
    fn = reg.function("f_param")
    # first branch is the identity
    assert fn.exact_value(Coeff(Fraction(1, 2)), (XS(2),)) == Coeff(Fraction(1, 2))
    # above the break the decreasing branch hits 0 at 1
    assert fn.exact_value(Coeff(Fraction(1)), (XS(2),)) == Coeff(0)
    lam = 2.0
    sf = (1 - 1 / (lam * lam)) ** 0.5
    f = fn.scalar_fn
    assert abs(f(sf - 1e-9, (lam,)) - f(sf + 1e-9, (lam,))) < 1e-7
    assert f(0.0, (lam,)) == 0.0
    assert f(1.0, (lam,)) == pytest.approx(0.0, abs=1e-12)
    # range over the whole domain is [0, s]
    iv = fn.range_on(Ival(XS(0), XS(1)), (XS(2),))
    assert iv.lo == XS(0)
    assert iv.hi == s
    with pytest.raises(ValueError):
        fn.validate_params((XS(Fraction(1, 2)),))


def _reject(why):
    _reject.counts[why] = _reject.counts.get(why, 0) + 1
    return False


_reject.counts = {}


def _instance_ok(rep, data, registry):
    for req in data.requires:
        if repsearch.op_norm(repsearch.eval_term(rep, req, registry)) > 1e-9:
            return _reject("requires")
    for a in data.sa:
        m = repsearch.eval_term(rep, a, registry)
        if repsearch.op_norm(m - m.conj().T) > 1e-9:
            return _reject("sa")
    for a in data.positive:
        m = repsearch.eval_term(rep, a, registry)
        if repsearch.op_norm(m - m.conj().T) > 1e-9:
            return _reject("sa")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -1e-9:
            return _reject("positive")
    for a, cap in data.norm_les:
        if repsearch.op_norm(repsearch.eval_term(rep, a, registry)) > \
                float(cap) + 1e-9:
            return _reject("norm")
    return True


def test_every_schema_validates_on_200_samples(reg):
    """Random matrix models satisfying the hypotheses satisfy the conclusions."""
    rng = np.random.default_rng(20260814)
    worst = 0.0
    for name, schema in sorted(reg.schemata.items()):
        assert schema.sampler is not None, name
        accepted = 0
        attempts = 0
        while accepted < 200:
            attempts += 1
            assert attempts < 1200, "sampler for %s rejects too often" % name
            d = int(rng.integers(2, 7))
            scalars, mats = schema.sampler(rng, d)
            dim = next(iter(mats.values())).shape[0]
            bindings = dict(scalars)
            for v in schema.term_vars:
                bindings[v] = gen_nf(v)
            data = schema.build(bindings, reg)
            rep = repsearch.MatrixRep(dim, mats)
            if not _instance_ok(rep, data, reg):
                continue
            accepted += 1
            for body in data.gives:
                r = repsearch.op_norm(repsearch.eval_term(rep, body, reg))
                worst = max(worst, r)
                assert r < 1e-6, (name, r)
    assert worst < 1e-6


def test_instantiate_schema_success_and_errors(reg):
    g = NormedSet()
    g.add("x", XS(1))
    x = gen_nf("x")
    sa_body = x - star(x)
    ctx = bounds.context_from_relations(g, reg, [sa_body])
    # 1 + x*x is provably positive: instance carries its identity
    inst = instantiate_schema(reg, "sqrt_square",
                              {"A": parse_term("1 + x* x", g, reg)},
                              [("sa_x", sa_body)], ctx)
    assert inst.schema == "sqrt_square"
    assert len(inst.gives) == 1
    with pytest.raises(LemmaError):
        instantiate_schema(reg, "no_such_schema", {}, [], ctx)
    with pytest.raises(LemmaError):
        instantiate_schema(reg, "sqrt_square", {}, [], ctx)  # missing A
    with pytest.raises(LemmaError):
        # x - x* has enclosure straddling 0: positivity not dischargeable
        instantiate_schema(reg, "sqrt_square", {"A": x + star(x)},
                           [("sa_x", sa_body)], ctx)


def test_instantiate_schema_requires_matching(reg, corpus):
    from cstarpres.presentation import load_presentation
    p = load_presentation(str(corpus / "idempotent.pres"), reg)
    g = NormedSet(p.gens.items())
    g.add("r", XS(1))
    x, r = gen_nf("x"), gen_nf("r")
    ambient = [(rel.name, rel.body) for rel in p.relations]
    ambient.append(("def_r", r - fcalc.range_projection_formula(x, reg)))
    ctx = bounds.context_from_relations(g, reg, [b for _, b in ambient])
    inst = instantiate_schema(
        reg, "projection_from_idempotent_range",
        {"P": r, "Y": x}, ambient, ctx)
    assert inst.requires_matched == ["idem", "def_r"]
    assert len(inst.gives) == 2  # r^2 = r and r* = r
    with pytest.raises(LemmaError):
        instantiate_schema(
            reg, "projection_from_idempotent_range",
            {"P": r, "Y": x}, ambient[:1], ctx)


def test_user_registry_file(reg, tmp_path):
    path = tmp_path / "user.reg"
    path.write_text(
        "# a clamp function and a trivial schema\n"
        "function clamp01:\n"
        "  domain selfadjoint\n"
        "  piece 0 1 : 0 1\n"
        "\n"
        "schema shift_cancel:\n"
        "  vars A\n"
        "  requires ?A - ?A\n"
        "  gives (?A + 1) - (?A + 1)\n")
    ext = load_registry_file(str(path), reg)
    fn = ext.function("clamp01")
    assert fn is not None
    assert fn.exact_value(Coeff(Fraction(1, 2)), ()) == Coeff(Fraction(1, 2))
    assert ext.schema("shift_cancel") is not None
    assert reg.function("clamp01") is None  # base registry untouched
    # digest reflects content; stripping schemata changes it back differently
    assert ext.digest() != reg.digest()
    bare = ext.without_schemata()
    assert bare.schema("shift_cancel") is None
    assert bare.function("clamp01") is not None
    g = NormedSet()
    g.add("x", XS(1))
    x = gen_nf("x")
    ctx = bounds.Context(g, reg)
    inst = instantiate_schema(ext, "shift_cancel", {"A": x},
                              [("z", x - x)], ctx)
    assert inst.gives[0].is_zero


def test_registry_digest_is_stable(reg):
    assert reg.digest() == builtin_registry().digest()
    assert len(reg.digest()) == 16
