"""Sound spectral enclosures and norm upper bounds.

Everything here is one-sided by design: intervals enclose the spectrum
of a self-adjoint element in *every* representation compatible with the
generator norm caps (and, when a context carries them, with ambient
relation facts), and norm bounds dominate the universal norm.  Widening
always rounds outward; no float enters any comparison.

The estimator understands:
  * generator caps  ||x|| <= f(x),
  * declared self-adjointness (relation x - x*),
  * definitional relations s - t (spectrum and norm transfer from t),
  * isometry relations s*s - 1 (cap improves to 1),
  * positivity facts A - p((A+A*)/2) coming from order-macro bodies,
  * syntactic squares: palindromic monomials w* v w and homogeneous
    Gram decompositions (exact rational PSD test),
  * range maps of functional-calculus symbols.
"""

from __future__ import annotations

from fractions import Fraction

from .exact import XS, Coeff, xs_add_outward, xs_mul_outward
from .terms import (NF, Atom, GEN, ADJ, CALL, UNIT, Monomial, NormedSet,
                    nf_coerce, star, star_monomial)

_ZERO = XS(0)


class Ival:
    """Closed real interval with optional infinite endpoints (None)."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: XS | None, hi: XS | None):
        if lo is not None and hi is not None and lo.cmp(hi) > 0:
            raise ValueError("empty interval [%s, %s]" % (lo, hi))
        self.lo = lo
        self.hi = hi

    @staticmethod
    def point(v: XS) -> "Ival":
        return Ival(v, v)

    @staticmethod
    def sym(r: XS) -> "Ival":
        return Ival(-r, r)

    def __add__(self, other: "Ival") -> "Ival":
        lo = None if self.lo is None or other.lo is None else \
            xs_add_outward(self.lo, other.lo, up=False)
        hi = None if self.hi is None or other.hi is None else \
            xs_add_outward(self.hi, other.hi, up=True)
        return Ival(lo, hi)

    def shift(self, c: XS) -> "Ival":
        return self + Ival.point(c)

    def __neg__(self) -> "Ival":
        return Ival(None if self.hi is None else -self.hi,
                    None if self.lo is None else -self.lo)

    def scale(self, c: XS) -> "Ival":
        if c.sign() == 0:
            return Ival.point(_ZERO)
        if c.sign() < 0:
            return (-self).scale(-c)
        lo = None if self.lo is None else xs_mul_outward(c, self.lo, up=False)
        hi = None if self.hi is None else xs_mul_outward(c, self.hi, up=True)
        return Ival(lo, hi)

    def intersect(self, other: "Ival") -> "Ival | None":
        lo = self.lo if other.lo is None else \
            (other.lo if self.lo is None else (self.lo if self.lo.cmp(other.lo) >= 0 else other.lo))
        hi = self.hi if other.hi is None else \
            (other.hi if self.hi is None else (self.hi if self.hi.cmp(other.hi) <= 0 else other.hi))
        if lo is not None and hi is not None and lo.cmp(hi) > 0:
            return None
        return Ival(lo, hi)

    def hull(self, other: "Ival") -> "Ival":
        lo = None if self.lo is None or other.lo is None else \
            (self.lo if self.lo.cmp(other.lo) <= 0 else other.lo)
        hi = None if self.hi is None or other.hi is None else \
            (self.hi if self.hi.cmp(other.hi) >= 0 else other.hi)
        return Ival(lo, hi)

    def max_abs(self) -> XS | None:
        if self.lo is None or self.hi is None:
            return None
        a, b = abs(self.lo), abs(self.hi)
        return a if a.cmp(b) >= 0 else b

    def contains(self, v: float, slack: float = 0.0) -> bool:
        if self.lo is not None and v < float(self.lo) - slack:
            return False
        if self.hi is not None and v > float(self.hi) + slack:
            return False
        return True

    def __eq__(self, other):
        if not isinstance(other, Ival):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        lo = "-inf" if self.lo is None else str(self.lo)
        hi = "+inf" if self.hi is None else str(self.hi)
        return "[%s, %s]" % (lo, hi)


class Context:
    """Bounding context: caps plus facts harvested from ambient relations."""

    def __init__(self, gens: NormedSet, registry):
        self.gens = gens
        self.registry = registry
        self.sa: set[str] = set()
        self.caps: dict[str, XS] = {s: gens.norm(s) for s in gens}
        self.sym_ival: dict[str, Ival] = {}
        self.elem_facts: list[tuple[NF, Ival]] = []
        self._elem_keys: set[NF] = set()

    def cap(self, s: str) -> XS:
        return self.caps[s]

    def tighten_cap(self, s: str, v: XS):
        if v.cmp(self.caps[s]) < 0:
            self.caps[s] = v

    def tighten_sym(self, s: str, iv: Ival):
        cur = self.sym_ival.get(s, Ival.sym(self.caps[s]))
        got = cur.intersect(iv)
        if got is not None:
            self.sym_ival[s] = got

    def add_elem_fact(self, key: NF, iv: Ival):
        if key in self._elem_keys:
            for i, (k, old) in enumerate(self.elem_facts):
                if k == key:
                    merged = old.intersect(iv)
                    if merged is not None:
                        self.elem_facts[i] = (k, merged)
                    return
        self._elem_keys.add(key)
        self.elem_facts.append((key, iv))


# -- self-adjointness modulo declared facts ------------------------------

def sa_normalize(t: NF, ctx: Context) -> NF:
    """Rewrite s* -> s for every symbol declared self-adjoint."""
    if not ctx.sa:
        return t
    out: dict[Monomial, Coeff] = {}
    for m, c in t.items():
        nm = tuple(_sa_atom(a, ctx) for a in m)
        s = out.get(nm)
        out[nm] = c if s is None else s + c
    return NF(out)


def _sa_atom(a: Atom, ctx: Context) -> Atom:
    if a.kind == ADJ and a.sym in ctx.sa:
        return Atom(GEN, a.sym)
    if a.kind == CALL:
        return Atom(CALL, a.sym, sa_normalize(a.arg, ctx), a.params)
    return a


def _star_mod(m: Monomial, ctx: Context) -> Monomial:
    sm = star_monomial(m, ctx.registry.entire_fns)
    return tuple(_sa_atom(a, ctx) for a in sm)


def is_sa_mod(t: NF, ctx: Context) -> bool:
    tn = sa_normalize(t, ctx)
    return sa_normalize(star(t, ctx.registry.entire_fns), ctx) == tn


# -- exact PSD test for homogeneous Gram matrices -------------------------

def _psd_check(g: list[list[Coeff]]) -> bool:
    """Exact PSD test for a Hermitian Gaussian-rational matrix (LDL*)."""
    n = len(g)
    a = [row[:] for row in g]
    for k in range(n):
        d = a[k][k]
        if not d.is_real or d.re < 0:
            return False
        if d.re == 0:
            if any(not a[k][j].is_zero for j in range(k + 1, n)):
                return False
            continue
        for i2 in range(k + 1, n):
            for j2 in range(k + 1, n):
                a[i2][j2] = a[i2][j2] - a[i2][k] * a[k][j2] / d
    return True


def _homogeneous_square(t: NF, ctx: Context) -> bool:
    """True when t is exactly sum_{jk} G_{jk} u_j* u_k with G PSD, for
    words u of one common length (so every monomial splits uniquely)."""
    if t.is_zero:
        return True
    lens = {len(m) for m in t}
    if len(lens) != 1:
        return False
    ln = lens.pop()
    if ln == 0 or ln % 2 != 0:
        return False
    half = ln // 2
    basis: list[Monomial] = []
    index: dict[Monomial, int] = {}
    entries: dict[tuple[int, int], Coeff] = {}
    for m, c in t.items():
        left = _star_mod(m[:half], ctx)  # u_j with u_j* = m[:half]
        right = m[half:]
        for w in (left, right):
            if w not in index:
                index[w] = len(basis)
                basis.append(w)
        entries[(index[left], index[right])] = c
    n = len(basis)
    g = [[Coeff.ZERO] * n for _ in range(n)]
    for (i2, j2), c in entries.items():
        g[i2][j2] = c
    # Hermitian check (should follow from self-adjointness of t)
    for i2 in range(n):
        for j2 in range(n):
            if g[j2][i2] != g[i2][j2].conj():
                return False
    return _psd_check(g)


# -- norm bounds and intervals ---------------------------------------------

def _nb_atom(a: Atom, ctx: Context, depth: int) -> XS:
    if a.kind in (GEN, ADJ):
        return ctx.cap(a.sym)
    fn = ctx.registry.function(a.sym)
    if fn.domain == "entire" and not is_sa_mod(a.arg, ctx):
        return fn.norm_majorant(norm_bound(a.arg, ctx, _square=False, _depth=depth + 1), a.params)
    iv = fn.range_on(interval(a.arg, ctx, _depth=depth + 1), a.params)
    r = iv.max_abs()
    if r is None:  # pragma: no cover - builtin range maps are bounded
        return fn.norm_majorant(norm_bound(a.arg, ctx, _square=False, _depth=depth + 1), a.params)
    return r


def _nb_mono(m: Monomial, ctx: Context, depth: int) -> XS:
    out = XS(1)
    for a in m:
        out = xs_mul_outward(out, _nb_atom(a, ctx, depth), up=True)
    return out


def _triangle(t: NF, ctx: Context, depth: int) -> XS:
    out = XS(0)
    for m, c in t.items():
        out = xs_add_outward(out, xs_mul_outward(c.abs_xs(), _nb_mono(m, ctx, depth), up=True), up=True)
    return out


def norm_bound(t: NF, ctx: Context, _square: bool = True, _depth: int = 0) -> XS:
    """Sound upper bound on the universal norm of t under ctx."""
    t = sa_normalize(t, ctx)
    best = _triangle(t, ctx, _depth)
    if _depth < 8 and is_sa_mod(t, ctx):
        iv = interval(t, ctx, _depth=_depth + 1)
        r = iv.max_abs()
        if r is not None and r.cmp(best) < 0:
            best = r
    if _square and len(t) <= 8 and _depth < 8:
        sq = star(t, ctx.registry.entire_fns) * t
        if len(sq) <= 64:
            iv = interval(sq, ctx, _depth=_depth + 1)
            if iv.hi is not None:
                r = iv.hi.sqrt_outward(up=True)
                if r.cmp(best) < 0:
                    best = r
    return best


def _mono_interval(m: Monomial, ctx: Context, depth: int) -> Ival:
    """Enclosure for a monomial fixed by the (sa-modified) involution."""
    if len(m) == 0:
        return Ival.point(XS(1))
    if len(m) == 1:
        a = m[0]
        if a.kind == GEN:
            cap = ctx.cap(a.sym)
            iv = ctx.sym_ival.get(a.sym, Ival.sym(cap))
            got = iv.intersect(Ival.sym(cap))
            return got if got is not None else iv
        if a.kind == CALL:
            fn = ctx.registry.function(a.sym)
            return fn.range_on(interval(a.arg, ctx, _depth=depth + 1), a.params)
        return Ival.sym(_nb_atom(a, ctx, depth))
    # palindromic splits: m = w* v w with v self-adjoint (possibly empty)
    for k in range(len(m) // 2, 0, -1):
        if m[:k] == _star_mod(m[-k:], ctx):
            b = _nb_mono(m[-k:], ctx, depth)
            b2 = xs_mul_outward(b, b, up=True)
            mid = m[k:len(m) - k]
            if len(mid) == 0:
                return Ival(XS(0), b2)
            if _star_mod(mid, ctx) == mid:
                iv = _mono_interval(mid, ctx, depth + 1)
                if iv.lo is not None and iv.hi is not None:
                    lo = _ZERO if iv.lo.sign() >= 0 else xs_mul_outward(iv.lo, b2, up=False)
                    hi = _ZERO if iv.hi.sign() <= 0 else xs_mul_outward(iv.hi, b2, up=True)
                    return Ival(lo, hi)
            break
    r = _nb_mono(m, ctx, depth)
    return Ival.sym(r)


def interval(t: NF, ctx: Context, _depth: int = 0) -> Ival:
    """Sound enclosure of the universal spectrum of a self-adjoint t.

    For terms that are not structurally self-adjoint (modulo declared
    facts) this degrades to the symmetric norm ball, which is still a
    sound enclosure of the real part of any spectral value.
    """
    t = sa_normalize(t, ctx)
    if t.is_zero:
        return Ival.point(_ZERO)
    if _depth > 16:
        return Ival.sym(_triangle(t, ctx, _depth))
    out = Ival.sym(_triangle(t, ctx, _depth))

    c0 = t.scalar_part()
    if not c0.is_real:
        return out
    c0x = XS(c0.re)
    body = t - c0

    # element facts, up to a scalar shift
    for key, iv in ctx.elem_facts:
        diff = (t - key).as_scalar()
        if diff is not None and diff.is_real:
            got = out.intersect(iv.shift(XS(diff.re)))
            if got is not None:
                out = got

    if body.is_zero:
        got = out.intersect(Ival.point(c0x))
        return got if got is not None else Ival.point(c0x)

    # homogeneous sum-of-squares: body (or -body) PSD as a Gram form
    if is_sa_mod(body, ctx):
        nb_body = _triangle(body, ctx, _depth)
        if _homogeneous_square(body, ctx):
            got = out.intersect(Ival(c0x, xs_add_outward(c0x, nb_body, up=True)))
            if got is not None:
                out = got
        elif _homogeneous_square(-body, ctx):
            got = out.intersect(Ival(xs_add_outward(c0x, -nb_body, up=False), c0x))
            if got is not None:
                out = got

    # monomial-by-monomial decomposition
    acc = Ival.point(c0x)
    seen: set[Monomial] = set()
    ok = True
    for m, c in body.items():
        if m in seen:
            continue
        sm = _star_mod(m, ctx)
        if sm == m:
            if not c.is_real:
                ok = False
                break
            seen.add(m)
            acc = acc + _mono_interval(m, ctx, _depth).scale(XS(c.re))
        else:
            if sm not in body or body[sm] != c.conj():
                ok = False
                break
            seen.add(m)
            seen.add(sm)
            r = xs_mul_outward(XS(2) * c.abs_xs(), _nb_mono(m, ctx, _depth), up=True)
            acc = acc + Ival.sym(r)
    if ok:
        got = out.intersect(acc)
        if got is not None:
            out = got
    return out


def spectral_interval(t: NF, gens: NormedSet, registry,
                      ctx: Context | None = None) -> Ival:
    """Public entry point: relation-free unless a context is supplied."""
    if ctx is None:
        ctx = Context(gens, registry)
    return interval(t, ctx)


def norm_upper(t: NF, gens: NormedSet, registry,
               ctx: Context | None = None) -> XS:
    if ctx is None:
        ctx = Context(gens, registry)
    return norm_bound(t, ctx)


# -- fact harvesting --------------------------------------------------------

def _two_monomials(b: NF) -> list[tuple[Monomial, Coeff]] | None:
    if len(b) != 2:
        return None
    return list(b.items())


def _absorb_relation(body: NF, ctx: Context):
    reg = ctx.registry
    # x - x* : declared self-adjoint
    pair = _two_monomials(body)
    if pair is not None:
        for (ma, ca), (mb, cb) in ((pair[0], pair[1]), (pair[1], pair[0])):
            if (len(ma) == 1 and len(mb) == 1 and ma[0].kind == GEN
                    and mb[0].kind == ADJ and ma[0].sym == mb[0].sym
                    and ca == -cb):
                ctx.sa.add(ma[0].sym)
        # s*s - 1 or s s* - 1 : cap(s) <= 1
        for (ma, ca), (mb, cb) in ((pair[0], pair[1]), (pair[1], pair[0])):
            if (mb == UNIT and len(ma) == 2 and ca == -cb
                    and ma[0].kind in (GEN, ADJ) and ma[1].kind in (GEN, ADJ)
                    and ma[0].sym == ma[1].sym and ma[0].kind != ma[1].kind):
                ctx.tighten_cap(ma[0].sym, XS(1))
        # s s - s with s self-adjoint: spectrum in [0, 1]
        for (ma, ca), (mb, cb) in ((pair[0], pair[1]), (pair[1], pair[0])):
            if (len(ma) == 2 and len(mb) == 1 and ca == -cb
                    and ma[0].kind == GEN and ma[1].kind == GEN
                    and mb[0].kind == GEN and ma[0].sym == ma[1].sym == mb[0].sym
                    and mb[0].sym in ctx.sa):
                ctx.tighten_cap(mb[0].sym, XS(1))
                ctx.tighten_sym(mb[0].sym, Ival(XS(0), XS(1)))

    # definitional: body = c*s + rest, s not in rest
    for s in ctx.gens:
        c = body.get((Atom(GEN, s),))
        if c is None or c.is_zero:
            continue
        t_def = (nf_coerce(c) * NF({(Atom(GEN, s),): Coeff.ONE}) - body) * (Coeff.ONE / c)
        if s in t_def.symbols():
            continue
        ctx.tighten_cap(s, norm_bound(t_def, ctx, _square=True))
        if is_sa_mod(t_def, ctx):
            ctx.sa.add(s)
            ctx.tighten_sym(s, interval(t_def, ctx))

    # order-macro shape: body = c*(A - p((A + A*)/2)), giving A >= 0
    for m0, c0 in list(body.items()):
        if len(m0) != 1 or m0[0].kind != CALL or m0[0].sym != "p":
            continue
        w = m0[0].arg
        c = -c0
        if c.is_zero:
            continue
        a_nf = body * (Coeff.ONE / c) + NF({m0: Coeff.ONE})
        half = Coeff(Fraction(1, 2))
        if (a_nf + star(a_nf, reg.entire_fns)) * half != w:
            continue
        nb = norm_bound(a_nf, ctx)
        key = sa_normalize(a_nf, ctx)
        ctx.add_elem_fact(key, Ival(XS(0), nb))
        # affine in one generator: alpha*s + beta*1 >= 0 pins the symbol
        mono = [(m, cc) for m, cc in a_nf.items() if m != UNIT]
        if len(mono) == 1:
            (mm, alpha) = mono[0]
            beta = a_nf.scalar_part()
            if (len(mm) == 1 and mm[0].kind == GEN and alpha.is_real
                    and not alpha.is_zero and beta.is_real):
                s = mm[0].sym
                ctx.sa.add(s)
                iv = Ival(XS(0), nb).shift(XS(-beta.re)).scale(XS(1 / alpha.re))
                ctx.tighten_sym(s, iv)


def context_from_relations(gens: NormedSet, registry,
                           bodies: list[NF], rounds: int = 3) -> Context:
    ctx = Context(gens, registry)
    for _ in range(rounds):
        for b in bodies:
            _absorb_relation(b, ctx)
    return ctx
