"""Functional-calculus registry: function symbols, order macros, lemma schemata.

Function symbols are spectral functions applied through the continuous
functional calculus (p, sqrt, inv_lb, f_param, user piecewise
polynomials) plus the entire functions exp/sin/cos.  Each symbol knows

  * its exact values at exact scalars (used by the augmentation character),
  * a sound range map on spectral intervals,
  * a scalar evaluator and clamping window for numeric representations.

Macros expand order sugar into plain relation bodies; lemma schemata are
the trusted functional-calculus identities a derivation may cite.  Every
shipped schema carries a sampler so the test suite can validate it
numerically on random matrix instantiations.
"""

from __future__ import annotations

import hashlib
import math as _math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .exact import XS, Coeff
from .terms import CALL, NF, NormedSet, call_nf, nf_coerce, star
from . import bounds
from .bounds import Ival, Context


class LemmaError(ValueError):
    pass


class MacroError(ValueError):
    pass


# -- directed rational bounds for exp ------------------------------------

def exp_bounds(x: Fraction, terms: int = 0) -> tuple[Fraction, Fraction]:
    """Rational lo <= e^x <= hi."""
    if x < 0:
        lo, hi = exp_bounds(-x, terms)
        return 1 / hi, 1 / lo
    n = terms or max(24, 4 * (int(x) + 1))
    s = Fraction(0)
    term = Fraction(1)
    for k in range(n + 1):
        s += term
        term = term * x / (k + 1)
    # remainder: term is x^(n+1)/(n+1)!; geometric tail ratio x/(n+2)
    ratio = x / (n + 2)
    if ratio >= 1:
        return exp_bounds(x, 2 * n)
    rem = term / (1 - ratio)
    return s, s + rem


# -- function symbols -----------------------------------------------------

@dataclass
class FunctionSymbol:
    name: str
    n_params: int
    domain: str  # 'selfadjoint' | 'positive' | 'entire'
    range_fn: Callable[[Ival, tuple[XS, ...]], Ival]
    exact_fn: Callable[[Coeff, tuple[XS, ...]], Coeff | None]
    scalar_fn: Callable[[float, tuple[float, ...]], float]
    window_fn: Callable[[tuple[XS, ...]], tuple[XS | None, XS | None]] = \
        lambda params: (None, None)
    majorant_fn: Callable[[XS, tuple[XS, ...]], XS] | None = None
    param_check: Callable[[tuple[XS, ...]], None] = lambda params: None

    def range_on(self, iv: Ival, params: tuple[XS, ...]) -> Ival:
        return self.range_fn(iv, params)

    def exact_value(self, v: Coeff, params: tuple[XS, ...]) -> Coeff | None:
        return self.exact_fn(v, params)

    def norm_majorant(self, nb: XS, params: tuple[XS, ...]) -> XS:
        if self.majorant_fn is not None:
            return self.majorant_fn(nb, params)
        iv = self.range_on(Ival(-nb, nb), params)
        r = iv.max_abs()
        if r is None:
            raise ValueError("no norm majorant for %s" % self.name)
        return r

    def domain_window(self, params: tuple[XS, ...]) -> tuple[XS | None, XS | None]:
        return self.window_fn(params)

    def validate_params(self, params: tuple[XS, ...]):
        self.param_check(params)

    def clamp_window(self, params: tuple[XS, ...]) -> tuple[float | None, float | None]:
        lo, hi = self.window_fn(params)
        return (None if lo is None else float(lo),
                None if hi is None else float(hi))


def _p_range(iv: Ival, params) -> Ival:
    lo = XS(0)
    if iv.lo is not None and iv.lo.sign() > 0:
        lo = iv.lo
    hi = iv.hi
    if hi is not None and hi.sign() < 0:
        hi = XS(0)
    return Ival(lo, hi)


def _p_exact(v: Coeff, params) -> Coeff | None:
    if not v.is_real:
        return None
    return Coeff(v.re) if v.re > 0 else Coeff(0)


def _sqrt_range(iv: Ival, params) -> Ival:
    lo = XS(0)
    if iv.lo is not None and iv.lo.sign() > 0:
        lo = iv.lo.sqrt_outward(up=False)
    hi = None if iv.hi is None else \
        (XS(0) if iv.hi.sign() < 0 else iv.hi.sqrt_outward(up=True))
    return Ival(lo, hi)


def _sqrt_exact(v: Coeff, params) -> Coeff | None:
    if not v.is_real or v.re < 0:
        return None
    r = XS.sqrt_of(v.re)
    return Coeff(r.as_fraction()) if r.is_rational else None


def _inv_check(params: tuple[XS, ...]):
    (m,) = params
    if not m.is_rational or m.as_fraction() <= 0:
        raise ValueError("inv_lb needs a positive rational lower bound")


def _inv_range(iv: Ival, params) -> Ival:
    (m,) = params
    lo = iv.lo if iv.lo is not None and iv.lo.cmp(m) > 0 else m
    hi = iv.hi
    out_hi = lo.inverse()
    out_lo = XS(0) if hi is None else hi.inverse()
    return Ival(out_lo, out_hi)


def _inv_exact(v: Coeff, params) -> Coeff | None:
    (m,) = params
    if not v.is_real or XS(v.re).cmp(m) < 0:
        return None
    return Coeff(1) / Coeff(v.re)


def _fparam_breakpoint(lam: XS) -> XS:
    lam_q = lam.as_fraction()
    return XS.sqrt_of(1 - 1 / (lam_q * lam_q))


def _fparam_check(params: tuple[XS, ...]):
    (lam,) = params
    if not lam.is_rational or lam.as_fraction() < 1:
        raise ValueError("f_param needs a rational parameter >= 1")


def _fparam_g(nu: XS, s: XS) -> XS:
    """Second branch: s*(1-nu)/(1-s), the decreasing line from (s,s) to (1,0)."""
    one = XS(1)
    if s.sign() == 0:
        return XS(0)
    return s * (one - nu) * (one - s).inverse()


def _fparam_range(iv: Ival, params) -> Ival:
    (lam,) = params
    s = _fparam_breakpoint(lam)
    lo = iv.lo if iv.lo is not None and iv.lo.sign() > 0 else XS(0)
    hi = iv.hi if iv.hi is not None and iv.hi.cmp(XS(1)) < 0 else XS(1)
    if hi.cmp(lo) < 0:
        hi = lo
    out: Ival | None = None
    if lo.cmp(s) <= 0:
        a = lo
        b = hi if hi.cmp(s) <= 0 else s
        out = Ival(a, b)
    if hi.cmp(s) > 0:
        a0 = lo if lo.cmp(s) > 0 else s
        branch = Ival(_fparam_g(hi, s), _fparam_g(a0, s))
        out = branch if out is None else out.hull(branch)
    return out if out is not None else Ival(XS(0), s)


def _fparam_exact(v: Coeff, params) -> Coeff | None:
    (lam,) = params
    if not v.is_real or v.re < 0 or v.re > 1:
        return None
    s = _fparam_breakpoint(lam)
    x = XS(v.re)
    if x.cmp(s) <= 0:
        return Coeff(v.re)
    g = _fparam_g(x, s)
    return Coeff(g.as_fraction()) if g.is_rational else None


def _fparam_scalar(t: float, params: tuple[float, ...]) -> float:
    (lam,) = params
    s = (1 - 1 / (lam * lam)) ** 0.5
    t = min(max(t, 0.0), 1.0)
    if t <= s:
        return t
    if s >= 1.0:
        return s
    return s * (1 - t) / (1 - s)


def _exp_range(iv: Ival, params) -> Ival:
    lo = XS(0)
    if iv.lo is not None:
        lo = XS(exp_bounds(iv.lo.lower())[0])
    hi = None if iv.hi is None else XS(exp_bounds(iv.hi.upper())[1])
    return Ival(lo, hi)


def _trig_range(iv: Ival, params) -> Ival:
    return Ival(XS(-1), XS(1))


def _entire_exact(fn_name: str):
    table = {"exp": Coeff(1), "sin": Coeff(0), "cos": Coeff(1)}

    def exact(v: Coeff, params) -> Coeff | None:
        if v.is_zero:
            return table[fn_name]
        return None
    return exact


def _exp_majorant(nb: XS, params) -> XS:
    return XS(exp_bounds(nb.upper())[1])


def builtin_functions() -> dict[str, FunctionSymbol]:
    fns = {}
    fns["p"] = FunctionSymbol(
        "p", 0, "selfadjoint", _p_range, _p_exact,
        lambda t, pr: max(t, 0.0))
    sqrt_sym = FunctionSymbol(
        "sqrt", 0, "positive", _sqrt_range, _sqrt_exact,
        lambda t, pr: _math.sqrt(max(t, 0.0)),
        window_fn=lambda pr: (XS(0), None))
    fns["sqrt"] = sqrt_sym
    fns["pow_half"] = FunctionSymbol(
        "pow_half", 0, "positive", _sqrt_range, _sqrt_exact,
        lambda t, pr: _math.sqrt(max(t, 0.0)),
        window_fn=lambda pr: (XS(0), None))
    fns["inv_lb"] = FunctionSymbol(
        "inv_lb", 1, "positive", _inv_range, _inv_exact,
        lambda t, pr: 1.0 / max(t, pr[0]),
        window_fn=lambda pr: (pr[0], None),
        param_check=_inv_check)
    fns["f_param"] = FunctionSymbol(
        "f_param", 1, "positive", _fparam_range, _fparam_exact,
        _fparam_scalar,
        window_fn=lambda pr: (XS(0), XS(1)),
        param_check=_fparam_check)
    fns["exp"] = FunctionSymbol(
        "exp", 0, "entire", _exp_range, _entire_exact("exp"),
        lambda t, pr: _math.exp(t), majorant_fn=_exp_majorant)
    fns["sin"] = FunctionSymbol(
        "sin", 0, "entire", _trig_range, _entire_exact("sin"),
        lambda t, pr: _math.sin(t), majorant_fn=_exp_majorant)
    fns["cos"] = FunctionSymbol(
        "cos", 0, "entire", _trig_range, _entire_exact("cos"),
        lambda t, pr: _math.cos(t), majorant_fn=_exp_majorant)
    return fns


# -- piecewise polynomial user functions ----------------------------------

@dataclass
class Piece:
    lo: Fraction
    hi: Fraction
    coeffs: list[Fraction]  # c0 + c1 t + c2 t^2 + ...

    def eval_exact(self, t: Fraction) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * t + c
        return acc

    def range_on(self, lo: Fraction, hi: Fraction) -> Ival:
        """Sound Horner interval evaluation on [lo, hi]."""
        acc = Ival.point(XS(0))
        box = Ival(XS(lo), XS(hi))
        for c in reversed(self.coeffs):
            cands = [u * v for u in (acc.lo, acc.hi) for v in (box.lo, box.hi)]
            acc = Ival(min(cands) + XS(c), max(cands) + XS(c))
        return acc


def piecewise_symbol(name: str, pieces: list[Piece], domain: str) -> FunctionSymbol:
    pieces = sorted(pieces, key=lambda p: p.lo)
    dom_lo, dom_hi = pieces[0].lo, pieces[-1].hi

    def range_fn(iv: Ival, params) -> Ival:
        lo = dom_lo if iv.lo is None else max(dom_lo, iv.lo.lower())
        hi = dom_hi if iv.hi is None else min(dom_hi, iv.hi.upper())
        out = None
        for pc in pieces:
            a, b = max(pc.lo, lo), min(pc.hi, hi)
            if a > b:
                continue
            r = pc.range_on(a, b)
            out = r if out is None else out.hull(r)
        return out if out is not None else Ival.point(XS(pieces[0].eval_exact(dom_lo)))

    def exact_fn(v: Coeff, params) -> Coeff | None:
        if not v.is_real or v.re < dom_lo or v.re > dom_hi:
            return None
        for pc in pieces:
            if pc.lo <= v.re <= pc.hi:
                return Coeff(pc.eval_exact(v.re))
        return None

    def scalar_fn(t: float, params) -> float:
        t = min(max(t, float(dom_lo)), float(dom_hi))
        for pc in pieces:
            if float(pc.lo) <= t <= float(pc.hi):
                return float(sum(float(c) * t ** k for k, c in enumerate(pc.coeffs)))
        return 0.0

    return FunctionSymbol(name, 0, domain, range_fn, exact_fn, scalar_fn,
                          window_fn=lambda pr: (XS(dom_lo), XS(dom_hi)))


# -- order macros -----------------------------------------------------------

MACRO_NAMES = ("norm_le", "left_inv", "right_inv", "inv")


def geq_zero_body(a: NF, registry) -> NF:
    """a >= 0 becomes a - p((a + a*)/2)."""
    half = Coeff(Fraction(1, 2))
    re_a = (a + star(a, registry.entire_fns)) * half
    return a - call_nf("p", re_a)


def leq_body(a: NF, b: NF, registry) -> NF:
    ent = registry.entire_fns
    if star(a, ent) != a or star(b, ent) != b:
        raise MacroError("both sides of an order relation must be self-adjoint")
    return geq_zero_body(b - a, registry)


def match_geq_body(body: NF, registry) -> NF | None:
    """Inverse of geq_zero_body: recover a from a - p((a + a*)/2), or None."""
    calls = [(m, c) for m, c in body.items()
             if len(m) == 1 and m[0].kind == CALL and m[0].sym == "p"]
    for mono, c in calls:
        if c != -Coeff.ONE:
            continue
        a = body + NF({mono: Coeff.ONE})
        if geq_zero_body(a, registry) == body:
            return a
    return None


def _require_normvalue(c: XS, who: str) -> Fraction:
    if not c.is_norm_value() or c.sign() < 0:
        raise MacroError("%s needs a nonnegative rational-or-sqrt scalar" % who)
    sq = c * c
    return sq.as_fraction()


def norm_le_body(a: NF, c: XS, registry) -> NF:
    """||a|| <= c encoded as c^2 a*a - (a*a)^2 >= 0."""
    c2 = _require_normvalue(c, "norm_le")
    aa = star(a, registry.entire_fns) * a
    return geq_zero_body(aa * Coeff(c2) - aa * aa, registry)


def left_inv_body(a: NF, c: XS, registry) -> NF:
    """left-invertible with a left inverse of norm <= c: c^2 a*a - 1 >= 0."""
    c2 = _require_normvalue(c, "left_inv")
    aa = star(a, registry.entire_fns) * a
    return geq_zero_body(aa * Coeff(c2) - nf_coerce(1), registry)


def right_inv_body(a: NF, c: XS, registry) -> NF:
    c2 = _require_normvalue(c, "right_inv")
    aa = a * star(a, registry.entire_fns)
    return geq_zero_body(aa * Coeff(c2) - nf_coerce(1), registry)


def expand_macro(name: str, a: NF, c: XS, registry) -> list[tuple[str, NF]]:
    """Expand a macro into (suffix, body) pairs; most give a single body."""
    if name == "norm_le":
        return [("", norm_le_body(a, c, registry))]
    if name == "left_inv":
        return [("", left_inv_body(a, c, registry))]
    if name == "right_inv":
        return [("", right_inv_body(a, c, registry))]
    if name == "inv":
        return [("_l", left_inv_body(a, c, registry)),
                ("_r", right_inv_body(a, c, registry))]
    raise MacroError("unknown macro %r" % name)


# -- lemma schemata ----------------------------------------------------------

@dataclass
class SchemaData:
    requires: list[NF]
    gives: list[NF]
    positive: list[NF] = field(default_factory=list)
    sa: list[NF] = field(default_factory=list)
    norm_les: list[tuple[NF, XS]] = field(default_factory=list)


@dataclass
class LemmaSchema:
    name: str
    term_vars: tuple[str, ...]
    scalar_vars: tuple[str, ...]
    build: Callable[[dict, "Registry"], SchemaData]
    sampler: Callable | None = None  # (rng, dim) -> (scalar bindings, matrices)
    doc: str = ""


def range_projection_formula(y: NF, registry) -> NF:
    """y y* (1 + (y - y*)*(y - y*))^(-1), the range support of an idempotent."""
    ent = registry.entire_fns
    d = y - star(y, ent)
    inner = nf_coerce(1) + star(d, ent) * d
    return y * star(y, ent) * call_nf("inv_lb", inner, (XS(1),))


def polar_isometry_formula(x: NF, mu: XS, m: XS, registry) -> NF:
    """mu x (p(mu sqrt(x*x) - 1) + 1)^(-1)."""
    ent = registry.entire_fns
    q = call_nf("sqrt", star(x, ent) * x)
    inner = call_nf("p", q * Coeff(mu.as_fraction()) - nf_coerce(1)) + nf_coerce(1)
    return x * Coeff(mu.as_fraction()) * call_nf("inv_lb", inner, (m,))


def two_projection_x_formula(r: NF, k: NF, lam: XS, m: XS, registry) -> NF:
    """(1 - f_lam(r k* k r*))^(-1) (r - r k)."""
    ent = registry.entire_fns
    core = r * star(k, ent) * k * star(r, ent)
    inner = nf_coerce(1) - call_nf("f_param", core, (lam,))
    return call_nf("inv_lb", inner, (m,)) * (r - r * k)


def _b_sqrt_square(b: dict, reg: "Registry") -> SchemaData:
    a = b["A"]
    s = call_nf("sqrt", a)
    return SchemaData(requires=[], gives=[s * s - a], positive=[a])


def _b_positive_from_interval(b: dict, reg: "Registry") -> SchemaData:
    a = b["A"]
    return SchemaData(requires=[], gives=[geq_zero_body(a, reg)],
                      positive=[a], sa=[a])


def _b_projection_range(b: dict, reg: "Registry") -> SchemaData:
    p_, y = b["P"], b["Y"]
    ent = reg.entire_fns
    return SchemaData(
        requires=[y - y * y, p_ - range_projection_formula(y, reg)],
        gives=[p_ * p_ - p_, star(p_, ent) - p_])


def _b_polar_isometry(b: dict, reg: "Registry") -> SchemaData:
    x, u = b["X"], b["U"]
    mu, m = b["mu"], b["m"]
    ent = reg.entire_fns
    mu2 = Coeff(mu.as_fraction() ** 2)
    geq = geq_zero_body(star(x, ent) * x * mu2 - nf_coerce(1), reg)
    return SchemaData(
        requires=[geq, u - polar_isometry_formula(x, mu, m, reg)],
        gives=[star(u, ent) * u - nf_coerce(1)])


def _b_recover_x_polar(b: dict, reg: "Registry") -> SchemaData:
    x, u, q = b["X"], b["U"], b["Q"]
    mu, m = b["mu"], b["m"]
    ent = reg.entire_fns
    mu2 = Coeff(mu.as_fraction() ** 2)
    geq = geq_zero_body(star(x, ent) * x * mu2 - nf_coerce(1), reg)
    return SchemaData(
        requires=[geq,
                  q - call_nf("sqrt", star(x, ent) * x),
                  u - polar_isometry_formula(x, mu, m, reg)],
        gives=[x - u * q])


def _b_polar_recovery(b: dict, reg: "Registry") -> SchemaData:
    x, u, q = b["X"], b["U"], b["Q"]
    mu, m = b["mu"], b["m"]
    ent = reg.entire_fns
    mu2 = Coeff(mu.as_fraction() ** 2)
    muq = q * Coeff(mu.as_fraction())
    return SchemaData(
        requires=[x - u * q,
                  star(u, ent) * u - nf_coerce(1),
                  geq_zero_body(muq - nf_coerce(1), reg)],
        gives=[geq_zero_body(star(x, ent) * x * mu2 - nf_coerce(1), reg),
               q - call_nf("sqrt", star(x, ent) * x),
               u - polar_isometry_formula(x, mu, m, reg)])


def _b_projection_pair_norm(b: dict, reg: "Registry") -> SchemaData:
    x, r, k = b["X"], b["R"], b["K"]
    lam = b["lambda"]
    c = (XS(1) - XS(1) / (lam * lam)).sqrt_outward(up=True)  # exact: rational lam
    return SchemaData(
        requires=[x - x * x,
                  r - range_projection_formula(x, reg),
                  k - range_projection_formula(nf_coerce(1) - x, reg)],
        gives=[norm_le_body(r * k, c, reg)],
        norm_les=[(x, lam)])


def _b_recover_x_two_projections(b: dict, reg: "Registry") -> SchemaData:
    x, r, k = b["X"], b["R"], b["K"]
    lam, m = b["lambda"], b["m"]
    return SchemaData(
        requires=[x - x * x,
                  r - range_projection_formula(x, reg),
                  k - range_projection_formula(nf_coerce(1) - x, reg)],
        gives=[x - two_projection_x_formula(r, k, lam, m, reg)],
        norm_les=[(x, lam)])


def _b_two_projection_model(b: dict, reg: "Registry") -> SchemaData:
    x, r, k = b["X"], b["R"], b["K"]
    lam, m = b["lambda"], b["m"]
    ent = reg.entire_fns
    c = (XS(1) - XS(1) / (lam * lam)).sqrt_outward(up=True)
    return SchemaData(
        requires=[r * r - r, star(r, ent) - r,
                  k * k - k, star(k, ent) - k,
                  norm_le_body(r * k, c, reg),
                  x - two_projection_x_formula(r, k, lam, m, reg)],
        gives=[r - range_projection_formula(x, reg),
               k - range_projection_formula(nf_coerce(1) - x, reg),
               x - x * x])


# numeric samplers live next to the schemata so tests can validate them

def _rng_complex(rng, d):
    import numpy as np
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def _rng_unitary(rng, d):
    import numpy as np
    q, _ = np.linalg.qr(_rng_complex(rng, d))
    return q


def _rng_psd(rng, d, scale=1.0):
    w = _rng_complex(rng, d) * scale
    return w @ w.conj().T


def _s_sqrt_square(rng, d):
    return {}, {"A": _rng_psd(rng, d)}


def _s_positive(rng, d):
    return {}, {"A": _rng_psd(rng, d)}


def _np_range_projection(y):
    import numpy as np
    d = y - y.conj().T
    inner = np.eye(y.shape[0]) + d.conj().T @ d
    return y @ y.conj().T @ np.linalg.inv(inner)


def _rng_idempotent(rng, d, lam: float):
    """Random idempotent with norm <= lam (block construction, d even)."""
    import numpy as np
    m = d // 2
    t_free = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    tmax = (lam * lam - 1.0) ** 0.5
    nrm = np.linalg.norm(t_free, 2)
    if nrm > 0:
        t_free = t_free * (tmax * rng.uniform(0.1, 0.98) / nrm)
    x = np.zeros((d, d), dtype=complex)
    x[:m, :m] = np.eye(m)
    x[:m, m:] = t_free
    u = _rng_unitary(rng, d)
    return u @ x @ u.conj().T


def _s_projection_range(rng, d):
    d = d if d % 2 == 0 else d + 1
    y = _rng_idempotent(rng, d, 2.0)
    return {}, {"Y": y, "P": _np_range_projection(y)}


def _np_polar_u(x, mu):
    import numpy as np
    import scipy.linalg
    h = scipy.linalg.sqrtm(x.conj().T @ x)
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    p_part = v @ np.diag(np.maximum(mu * w - 1, 0.0)) @ v.conj().T
    return mu * x @ np.linalg.inv(p_part + np.eye(x.shape[0]))


def _s_polar(rng, d):
    import numpy as np
    mu = [XS(1), XS(2), XS(Fraction(1, 2))][rng.integers(0, 3)]
    muf = float(mu)
    v = _rng_unitary(rng, d)
    q = np.eye(d) / muf + _rng_psd(rng, d, 0.5)
    x = v @ q
    u = _np_polar_u(x, muf)
    import scipy.linalg
    qm = scipy.linalg.sqrtm(x.conj().T @ x)
    return {"mu": mu, "m": XS(1)}, {"X": x, "U": u, "Q": (qm + qm.conj().T) / 2}


def _s_polar_recovery(rng, d):
    import numpy as np
    mu = [XS(1), XS(2), XS(Fraction(1, 2))][rng.integers(0, 3)]
    muf = float(mu)
    u = _rng_unitary(rng, d)
    q = np.eye(d) / muf + _rng_psd(rng, d, 0.5)
    return {"mu": mu, "m": XS(1)}, {"U": u, "Q": q, "X": u @ q}


_LAM_M = {2: Fraction(1, 8), 3: Fraction(1, 32)}


def _s_two_proj_from_x(rng, d):
    lam = [2, 3][rng.integers(0, 2)]
    d = d if d % 2 == 0 else d + 1
    x = _rng_idempotent(rng, d, float(lam))
    r = _np_range_projection(x)
    import numpy as np
    k = _np_range_projection(np.eye(d) - x)
    return ({"lambda": XS(lam), "m": XS(_LAM_M[lam])},
            {"X": x, "R": r, "K": k})


def _s_two_proj_model(rng, d):
    import numpy as np
    lam = [2, 3][rng.integers(0, 2)]
    c = (1 - 1 / lam ** 2) ** 0.5
    d = d if d % 2 == 0 else d + 1
    m = d // 2
    r = np.zeros((d, d), dtype=complex)
    k = np.zeros((d, d), dtype=complex)
    for i in range(m):
        ci = c * rng.uniform(0.05, 0.98)
        si = (1 - ci * ci) ** 0.5
        r[2 * i, 2 * i] = 1.0
        blk = np.array([[ci * ci, ci * si], [ci * si, si * si]])
        k[2 * i:2 * i + 2, 2 * i:2 * i + 2] = blk
    u = _rng_unitary(rng, d)
    r = u @ r @ u.conj().T
    k = u @ k @ u.conj().T
    s = (1 - 1 / lam ** 2) ** 0.5
    core = r @ k.conj().T @ k @ r.conj().T
    w, v = np.linalg.eigh((core + core.conj().T) / 2)
    fw = np.array([_fparam_scalar(t, (float(lam),)) for t in w])
    f_mat = v @ np.diag(fw) @ v.conj().T
    x = np.linalg.inv(np.eye(d) - f_mat) @ (r - r @ k)
    return ({"lambda": XS(lam), "m": XS(_LAM_M[lam])},
            {"X": x, "R": r, "K": k})


def builtin_schemata() -> dict[str, LemmaSchema]:
    out = {}

    def reg(name, tvars, svars, build, sampler, doc):
        out[name] = LemmaSchema(name, tvars, svars, build, sampler, doc)

    reg("sqrt_square", ("A",), (), _b_sqrt_square, _s_sqrt_square,
        "sqrt(A)^2 = A for positive A")
    reg("positive_from_interval", ("A",), (), _b_positive_from_interval,
        _s_positive,
        "A >= 0 when a sound spectral enclosure of A stays nonnegative")
    reg("projection_from_idempotent_range", ("P", "Y"), (),
        _b_projection_range, _s_projection_range,
        "the range support of an idempotent is a projection")
    reg("polar_isometry", ("X", "U"), ("mu", "m"), _b_polar_isometry,
        _s_polar, "the polar factor of a bounded-below x is an isometry")
    reg("recover_x_polar", ("X", "U", "Q"), ("mu", "m"), _b_recover_x_polar,
        _s_polar, "x = u q for the polar data of a bounded-below x")
    reg("polar_recovery", ("X", "U", "Q"), ("mu", "m"), _b_polar_recovery,
        _s_polar_recovery,
        "x = u q with u an isometry and mu q >= 1 recovers the polar data")
    reg("projection_pair_norm_bound", ("X", "R", "K"), ("lambda",),
        _b_projection_pair_norm, _s_two_proj_from_x,
        "range/kernel projections of a norm-lam idempotent satisfy "
        "||r k|| <= sqrt(1 - lam^-2)")
    reg("recover_x_two_projections", ("X", "R", "K"), ("lambda", "m"),
        _b_recover_x_two_projections, _s_two_proj_from_x,
        "x = (1 - f_lam(r k* k r*))^-1 (r - r k)")
    reg("two_projection_model", ("X", "R", "K"), ("lambda", "m"),
        _b_two_projection_model, _s_two_proj_model,
        "a projection pair with the norm bound rebuilds the idempotent")
    return out


# -- registry ---------------------------------------------------------------

class Registry:
    def __init__(self, functions: dict[str, FunctionSymbol] | None = None,
                 schemata: dict[str, LemmaSchema] | None = None):
        self.functions = functions if functions is not None else builtin_functions()
        self.schemata = schemata if schemata is not None else builtin_schemata()
        self.entire_fns = frozenset(
            n for n, f in self.functions.items() if f.domain == "entire")

    def function(self, name: str) -> FunctionSymbol | None:
        return self.functions.get(name)

    def schema(self, name: str) -> LemmaSchema | None:
        return self.schemata.get(name)

    def exact_value(self, name: str, v: Coeff, params: tuple[XS, ...]) -> Coeff | None:
        fn = self.functions.get(name)
        return None if fn is None else fn.exact_value(v, params)

    def without_schemata(self) -> "Registry":
        return Registry(self.functions, {})

    def digest(self) -> str:
        h = hashlib.sha256()
        for name in sorted(self.functions):
            f = self.functions[name]
            h.update(("fn:%s/%d/%s;" % (name, f.n_params, f.domain)).encode())
        for name in sorted(self.schemata):
            s = self.schemata[name]
            h.update(("schema:%s/%s/%s;" % (name, ",".join(s.term_vars),
                                            ",".join(s.scalar_vars))).encode())
        return h.hexdigest()[:16]


_BUILTIN: Registry | None = None


def builtin_registry() -> Registry:
    global _BUILTIN
    if _BUILTIN is None:
        _BUILTIN = Registry()
    return _BUILTIN


# -- schema instantiation ----------------------------------------------------

@dataclass
class LemmaInstance:
    schema: str
    bindings: dict
    requires_matched: list[str]  # ambient relation names used
    gives: list[NF]
    checks: list[str]            # human-readable discharged side conditions


def instantiate_schema(registry: Registry, name: str, bindings: dict,
                       ambient: list[tuple[str, NF]], ctx: Context,
                       sa_prover=None) -> LemmaInstance:
    """Check a schema instance against ambient relation bodies.

    `ambient` is (name, body) pairs; every required body must match one of
    them exactly (as normal forms).  Side conditions are discharged with
    the sound interval estimator over `ctx`.
    """
    schema = registry.schema(name)
    if schema is None:
        raise LemmaError("unknown or disabled lemma schema %r" % name)
    missing = [v for v in schema.term_vars if v not in bindings]
    missing += [v for v in schema.scalar_vars if v not in bindings]
    if missing:
        raise LemmaError("schema %s: missing bindings %s" % (name, missing))
    data = schema.build(bindings, registry)
    matched = []
    for req in data.requires:
        hit = None
        for rel_name, body in ambient:
            if body == req:
                hit = rel_name
                break
        if hit is None:
            raise LemmaError(
                "schema %s: required relation not present in ambient set "
                "(needs a relation with body matching one of the schema "
                "hypotheses)" % name)
        matched.append(hit)
    checks = []
    for a in data.positive:
        iv = bounds.interval(a, ctx)
        if iv.lo is None or iv.lo.sign() < 0:
            raise LemmaError(
                "schema %s: positivity side condition not discharged; "
                "enclosure %s" % (name, iv))
        checks.append("positive: enclosure %s" % iv)
    for a in data.sa:
        if bounds.is_sa_mod(a, ctx):
            checks.append("self-adjoint (structural)")
            continue
        ent = registry.entire_fns
        diff = a - star(a, ent)
        if sa_prover is not None and sa_prover(diff):
            checks.append("self-adjoint (certified)")
            continue
        raise LemmaError(
            "schema %s: operand not self-adjoint modulo ambient relations" % name)
    for a, cap in data.norm_les:
        nb = bounds.norm_bound(a, ctx)
        if nb.cmp(cap) > 0:
            raise LemmaError(
                "schema %s: norm side condition needs <= %s, bound gives %s"
                % (name, cap, nb))
        checks.append("norm bound %s <= %s" % (nb, cap))
    return LemmaInstance(name, dict(bindings), matched, data.gives, checks)


# -- user registry extension files -------------------------------------------

def load_registry_file(path: str, base: Registry | None = None) -> Registry:
    """Extend a registry from a small text format.

    function NAME:
      domain positive|selfadjoint
      piece LO HI : C0 C1 C2 ...     (polynomial coefficients, rationals)

    schema NAME:
      vars A B ...
      requires TEMPLATE              (term DSL with ?A placeholders)
      positive TEMPLATE
      gives TEMPLATE
    """
    base = base if base is not None else builtin_registry()
    fns = dict(base.functions)
    schemata = dict(base.schemata)
    cur = None  # ("function", name, domain, pieces) | ("schema", name, dict)
    with open(path) as fh:
        lines = fh.readlines()

    def flush():
        nonlocal cur
        if cur is None:
            return
        if cur[0] == "function":
            _, name, info = cur
            fns[name] = piecewise_symbol(name, info["pieces"], info["domain"])
        else:
            _, name, info = cur
            schemata[name] = _text_schema(name, info)
        cur = None

    for raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("function ") and line.endswith(":"):
            flush()
            cur = ("function", line[len("function "):-1].strip(),
                   {"domain": "selfadjoint", "pieces": []})
            continue
        if line.startswith("schema ") and line.endswith(":"):
            flush()
            cur = ("schema", line[len("schema "):-1].strip(),
                   {"vars": [], "requires": [], "positive": [], "gives": []})
            continue
        if cur is None:
            raise ValueError("registry file: directive outside a block: %r" % line)
        if cur[0] == "function":
            info = cur[2]
            if line.startswith("domain "):
                info["domain"] = line.split(None, 1)[1].strip()
            elif line.startswith("piece "):
                head, coeffs = line[len("piece "):].split(":", 1)
                lo_s, hi_s = head.split()
                info["pieces"].append(Piece(
                    Fraction(lo_s), Fraction(hi_s),
                    [Fraction(c) for c in coeffs.split()]))
            else:
                raise ValueError("registry file: bad function line %r" % line)
        else:
            info = cur[2]
            if line.startswith("vars "):
                info["vars"] = line.split()[1:]
            elif line.startswith("requires "):
                info["requires"].append(line[len("requires "):])
            elif line.startswith("positive "):
                info["positive"].append(line[len("positive "):])
            elif line.startswith("gives "):
                info["gives"].append(line[len("gives "):])
            else:
                raise ValueError("registry file: bad schema line %r" % line)
    flush()
    return Registry(fns, schemata)


def _text_schema(name: str, info: dict) -> LemmaSchema:
    tvars = tuple(info["vars"])

    def build(bindings: dict, reg: Registry) -> SchemaData:
        from .parser import format_term, parse_term

        def subst(template: str) -> NF:
            txt = template
            names = []
            for v in tvars:
                nf = bindings[v]
                names.extend(nf.symbols())
                txt = txt.replace("?" + v, "(" + format_term(nf, NormedSet()) + ")")
            gens = NormedSet((s, XS(10 ** 6)) for s in sorted(set(names)))
            return parse_term(txt, gens, reg, check_domains=False)

        return SchemaData(
            requires=[subst(t) for t in info["requires"]],
            gives=[subst(t) for t in info["gives"]],
            positive=[subst(t) for t in info["positive"]])

    return LemmaSchema(name, tvars, (), build, None, "user schema")
