"""Elementary presentation moves with machine-checkable justifications.

The kernel accepts two kinds of positive evidence that a relation is
redundant: an exact ideal-membership certificate (a finite sum
sum_i a_i r_i b_i, optionally with starred relations, that normalizes to
the target) and an instance of a registered functional-calculus lemma
schema.  Oracle-pending markers are admitted in permissive mode only and
always surface in the report.

Norm side conditions on generator moves are discharged with the sound
interval estimator, fed by the relations in force; when the bound is too
wide the move carries an `unverified-norm-gap` marker (an error in
strict mode).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .exact import XS, Coeff
from .terms import (ADJ, NF, Atom, GEN, Monomial, NormedSet, UNIT, gen_nf,
                    nf_coerce, star, substitute, monomial_key, valid_ident)
from .presentation import Presentation, Relation, _fresh, structural_equal
from . import bounds, fcalc


class MoveError(ValueError):
    pass


# -- justifications ---------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    """target = sum of a * rel^(optional star) * b."""
    summands: tuple[tuple[NF, str, bool, NF], ...]


@dataclass(frozen=True)
class LemmaCitation:
    schema: str
    bindings: tuple[tuple[str, object], ...]  # var -> NF or XS, sorted by var

    def binding_dict(self) -> dict:
        return dict(self.bindings)


@dataclass(frozen=True)
class OraclePending:
    note: str = ""


def lemma_citation(schema: str, **bindings) -> LemmaCitation:
    return LemmaCitation(schema, tuple(sorted(bindings.items())))


# -- moves -------------------------------------------------------------------

@dataclass(frozen=True)
class AddRelations:
    items: tuple  # of (Relation, justification)
    kind = "addrel"


@dataclass(frozen=True)
class RemoveRelations:
    items: tuple  # of (name, justification)
    kind = "delrel"


@dataclass(frozen=True)
class AddGenerators:
    items: tuple  # of (symbol, cap XS, defining NF over the old generators)
    kind = "addgen"


@dataclass(frozen=True)
class RemoveGenerators:
    items: tuple  # of (symbol, defining relation name)
    kind = "delgen"


@dataclass(frozen=True)
class Derivation:
    start: Presentation
    steps: tuple
    claimed_end: Presentation


@dataclass
class StepReport:
    index: int
    kind: str
    detail: str
    status: str = "ok"  # ok | fail
    gaps: list = field(default_factory=list)  # (gap kind, description)
    notes: list = field(default_factory=list)
    substitutions: dict | None = None


@dataclass
class DerivationReport:
    mode: str
    steps: list
    overall: str = "PASS"  # PASS | FAIL
    end_note: str = ""
    images: dict = field(default_factory=dict)  # start generator -> NF

    @property
    def gap_count(self) -> int:
        return sum(len(s.gaps) for s in self.steps)


# -- certificate checking -----------------------------------------------------

def expand_certificate(p: Presentation, cert: Certificate,
                       registry) -> NF:
    ent = registry.entire_fns
    acc = nf_coerce(0)
    for a, rel_name, starred, b in cert.summands:
        rel = p.relation(rel_name)
        if rel is None:
            raise MoveError("certificate cites unknown relation %r" % rel_name)
        body = star(rel.body, ent) if starred else rel.body
        acc = acc + a * body * b
    return acc


def check_certificate(p: Presentation, cert: Certificate, target: NF,
                      registry) -> bool:
    """Exact: the expanded sum must normalize to the target."""
    return expand_certificate(p, cert, registry) == target


# -- certificate auto-search ---------------------------------------------------

def _words_upto(gens: NormedSet, degree: int) -> list[Monomial]:
    atoms = []
    for s in gens.names():
        atoms.append(Atom(GEN, s))
        atoms.append(Atom(ADJ, s))
    sym_index = {s: i for i, s in enumerate(gens.names())}
    words: list[Monomial] = [UNIT]
    layer: list[Monomial] = [UNIT]
    for _ in range(degree):
        layer = [w + (a,) for w in layer for a in atoms]
        words.extend(layer)
    words.sort(key=lambda m: monomial_key(m, sym_index))
    return words


def search_certificate(relations, target: NF, gens: NormedSet, registry,
                       max_degree: int = 1,
                       max_candidates: int = 6000) -> Certificate | None:
    """Bounded-degree ideal-membership search, exact over Gaussian rationals.

    `relations` is (name, body) pairs.  Factor monomials are generator
    words with total degree (left + right) at most max_degree; the linear
    system over the monomial basis is solved by sparse elimination.
    Deterministic: candidates are enumerated lowest degree first, then in
    word order, and the first-found combination is returned.
    """
    if target.is_zero:
        return Certificate(())
    ent = registry.entire_fns
    sym_index = {s: i for i, s in enumerate(gens.names())}

    def nf_vec(t: NF) -> dict:
        return dict(t.items())

    # pivots: leading monomial -> (vector, combo over candidate index)
    pivots: dict[Monomial, tuple[dict, dict]] = {}
    mono_order: dict[Monomial, object] = {}

    def key_of(m: Monomial):
        k = mono_order.get(m)
        if k is None:
            k = monomial_key(m, sym_index)
            mono_order[m] = k
        return k

    def reduce_vec(vec: dict, combo: dict):
        changed = True
        while changed and vec:
            changed = False
            lead = max(vec, key=key_of)
            hit = pivots.get(lead)
            if hit is not None:
                pvec, pcombo = hit
                ratio = vec[lead] / pvec[lead]
                for m, c in pvec.items():
                    nc = vec.get(m, Coeff.ZERO) - ratio * c
                    if nc.is_zero:
                        vec.pop(m, None)
                    else:
                        vec[m] = nc
                for i, c in pcombo.items():
                    nc = combo.get(i, Coeff.ZERO) - ratio * c
                    if nc.is_zero:
                        combo.pop(i, None)
                    else:
                        combo[i] = nc
                changed = True
        return vec, combo

    candidates: list[tuple[Monomial, int, bool, Monomial]] = []
    rel_list = list(relations)
    star_bodies = [star(body, ent) for _, body in rel_list]

    for degree in range(max_degree + 1):
        words = _words_upto(gens, degree)
        new: list[tuple[Monomial, int, bool, Monomial]] = []
        for wa in words:
            for wb in words:
                if len(wa) + len(wb) > degree:
                    continue
                for ri in range(len(rel_list)):
                    new.append((wa, ri, False, wb))
                    if star_bodies[ri] != rel_list[ri][1]:
                        new.append((wa, ri, True, wb))
        # keep only candidates of exactly this total degree (lower ones
        # were already processed in earlier rounds)
        new = [c for c in new if len(c[0]) + len(c[3]) == degree]
        if len(candidates) + len(new) > max_candidates:
            return None
        for cand in new:
            idx = len(candidates)
            candidates.append(cand)
            wa, ri, starred, wb = cand
            body = star_bodies[ri] if starred else rel_list[ri][1]
            expanded = NF({wa: Coeff.ONE}) * body * NF({wb: Coeff.ONE})
            vec, combo = reduce_vec(nf_vec(expanded), {idx: Coeff.ONE})
            if vec:
                lead = max(vec, key=key_of)
                pivots[lead] = (vec, combo)
        bvec, bcombo = reduce_vec(nf_vec(target), {})
        if not bvec:
            summands = []
            for idx, c in sorted(bcombo.items()):
                wa, ri, starred, wb = candidates[idx]
                summands.append((NF({wa: -c}), rel_list[ri][0], starred,
                                 NF({wb: Coeff.ONE})))
            cert = Certificate(tuple(summands))
            return cert
    return None


# -- justification checking ----------------------------------------------------

def _context_for(p: Presentation, registry) -> bounds.Context:
    return bounds.context_from_relations(p.gens, registry, p.bodies())


def _check_justification(ambient: Presentation, target: NF, just, registry,
                         mode: str, label: str, report: StepReport):
    if isinstance(just, Certificate):
        got = expand_certificate(ambient, just, registry)
        if got != target:
            raise MoveError(
                "%s: certificate expands to a different element" % label)
        report.notes.append("%s: certificate ok (%d summands)"
                            % (label, len(just.summands)))
        return
    if isinstance(just, LemmaCitation):
        if registry.schema(just.schema) is None:
            if mode == "strict":
                raise MoveError(
                    "%s: lemma schema %r is not available in this registry"
                    % (label, just.schema))
            report.gaps.append(("schema-unavailable",
                                "%s: schema %r not checked" % (label,
                                                               just.schema)))
            return
        ctx = _context_for(ambient, registry)
        amb = [(r.name, r.body) for r in ambient.relations]

        def sa_prover(diff: NF) -> bool:
            return search_certificate(amb, diff, ambient.gens, registry,
                                      max_degree=1) is not None

        try:
            inst = fcalc.instantiate_schema(registry, just.schema,
                                            just.binding_dict(), amb, ctx,
                                            sa_prover=sa_prover)
        except fcalc.LemmaError as e:
            raise MoveError("%s: %s" % (label, e))
        if target not in inst.gives:
            raise MoveError(
                "%s: schema %s instantiates to a different identity"
                % (label, just.schema))
        report.notes.append("%s: lemma %s ok (%s)"
                            % (label, just.schema,
                               "; ".join(inst.checks) or "no side conditions"))
        return
    if isinstance(just, OraclePending):
        if mode == "strict":
            raise MoveError("%s: oracle-pending is not admissible in strict "
                            "mode" % label)
        report.gaps.append(("oracle-pending", "%s: %s" % (label,
                                                          just.note or "unproven")))
        return
    raise MoveError("%s: unknown justification type %r" % (label, type(just)))


def _norm_condition(sym: str, cap: XS, defining: NF, ctx, mode: str,
                    label: str, report: StepReport):
    ub = bounds.norm_bound(defining, ctx)
    if ub.cmp(cap) <= 0:
        report.notes.append("%s: norm bound %s <= cap %s" % (label, ub, cap))
        return
    if mode == "strict":
        raise MoveError(
            "%s: norm cap %s for %s not discharged (sound upper bound %s)"
            % (label, cap, sym, ub))
    report.gaps.append(("unverified-norm-gap",
                        "%s: cap %s vs sound upper bound %s"
                        % (label, cap, ub)))


# -- applying moves -------------------------------------------------------------

def apply_move(p: Presentation, move, mode: str, registry,
               index: int = 0) -> tuple[Presentation, StepReport]:
    if mode not in ("strict", "permissive"):
        raise ValueError("mode must be strict or permissive")
    report = StepReport(index, move.kind, describe_move(move))
    if isinstance(move, AddRelations):
        names = set(p.relation_names())
        new = list(p.relations)
        for rel, just in move.items:
            if rel.name in names:
                raise MoveError("addrel %s: name already present" % rel.name)
            for s in rel.body.symbols():
                if s not in p.gens:
                    raise MoveError("addrel %s: unknown generator %r"
                                    % (rel.name, s))
            _check_justification(p, rel.body, just, registry, mode,
                                 "addrel %s" % rel.name, report)
            names.add(rel.name)
            new.append(rel)
        return p.with_relations(tuple(new)), report

    if isinstance(move, RemoveRelations):
        removed = {}
        for name, _ in move.items:
            rel = p.relation(name)
            if rel is None:
                raise MoveError("delrel %s: no such relation" % name)
            removed[name] = rel.body
        remaining = p.with_relations(tuple(
            r for r in p.relations if r.name not in removed))
        for name, just in move.items:
            _check_justification(remaining, removed[name], just, registry,
                                 mode, "delrel %s" % name, report)
        return remaining, report

    if isinstance(move, AddGenerators):
        gens = p.gens.copy()
        rels = list(p.relations)
        names = set(p.relation_names())
        ctx = _context_for(p, registry)
        for sym, cap, defining in move.items:
            if sym in gens:
                raise MoveError("addgen %s: symbol already declared" % sym)
            if not valid_ident(sym):
                raise MoveError("addgen: bad symbol %r" % sym)
            for s in defining.symbols():
                if s not in p.gens:
                    raise MoveError(
                        "addgen %s: defining term must be over the existing "
                        "generators (mentions %r)" % (sym, s))
            _norm_condition(sym, cap, defining, ctx, mode,
                            "addgen %s" % sym, report)
            gens.add(sym, cap)
            rel_name = "def_" + sym
            if rel_name in names:
                raise MoveError("addgen %s: relation name %s already taken"
                                % (sym, rel_name))
            names.add(rel_name)
            rels.append(Relation(rel_name, gen_nf(sym) - defining, "derived"))
        return Presentation(p.flavor, gens, tuple(rels), p.notes), report

    if isinstance(move, RemoveGenerators):
        cur = p
        later = [sym for sym, _ in move.items]
        subs_all: dict[str, NF] = {}
        ent = registry.entire_fns
        for sym, via in move.items:
            later = later[1:]
            rel = cur.relation(via)
            if rel is None:
                raise MoveError("delgen %s: no relation named %r" % (sym, via))
            if sym not in cur.gens:
                raise MoveError("delgen %s: no such generator" % sym)
            c = rel.body.get((Atom(GEN, sym),))
            if c is None or c.is_zero:
                raise MoveError(
                    "delgen %s: relation %s has no linear %s monomial"
                    % (sym, via, sym))
            t = gen_nf(sym) - rel.body * (Coeff.ONE / c)
            t_syms = t.symbols()
            if sym in t_syms:
                raise MoveError(
                    "delgen %s: relation %s is not of eliminable shape "
                    "(defining term still mentions %s)" % (sym, via, sym))
            for other in later:
                if other in t_syms:
                    raise MoveError(
                        "delgen %s: defining term references %s, removed "
                        "later in the same move" % (sym, other))
            rest = [r for r in cur.relations if r.name != via]
            ctx = bounds.context_from_relations(
                cur.gens, registry, [r.body for r in rest])
            _norm_condition(sym, cur.gens.norm(sym), t, ctx, mode,
                            "delgen %s via %s" % (sym, via), report)
            sub = {sym: t}
            new_rels = tuple(
                Relation(r.name, substitute(r.body, sub, ent), r.origin)
                for r in rest)
            for r in new_rels:
                assert sym not in r.body.symbols()
            cur = Presentation(cur.flavor, cur.gens.without(sym), new_rels,
                               cur.notes)
            for g in list(subs_all):
                subs_all[g] = substitute(subs_all[g], sub, ent)
            subs_all[sym] = t
        report.notes.append("substitutions: " +
                            ", ".join(sorted(subs_all)))
        report.substitutions = subs_all
        return cur, report

    raise MoveError("unknown move %r" % type(move))


def describe_move(move) -> str:
    if isinstance(move, AddRelations):
        return "addrel " + ", ".join(rel.name for rel, _ in move.items)
    if isinstance(move, RemoveRelations):
        return "delrel " + ", ".join(name for name, _ in move.items)
    if isinstance(move, AddGenerators):
        return "addgen " + ", ".join(sym for sym, _, _ in move.items)
    if isinstance(move, RemoveGenerators):
        return "delgen " + ", ".join(sym for sym, _ in move.items)
    return str(move)



# -- derivation replay -----------------------------------------------------------

def check_derivation(d: Derivation, mode: str, registry) -> DerivationReport:
    report = DerivationReport(mode, [])
    cur = d.start
    ent = registry.entire_fns
    images = {g: gen_nf(g) for g in d.start.gens.names()}
    for i, move in enumerate(d.steps, 1):
        try:
            cur, step = apply_move(cur, move, mode, registry, index=i)
        except MoveError as e:
            step = StepReport(i, move.kind, describe_move(move), "fail")
            step.notes.append(str(e))
            report.steps.append(step)
            report.overall = "FAIL"
            report.end_note = "stopped at step %d: %s" % (i, e)
            return report
        report.steps.append(step)
        if step.substitutions:
            images = {g: substitute(t, step.substitutions, ent)
                      for g, t in images.items()}
    report.images = images
    if structural_equal(cur, d.claimed_end):
        report.end_note = "end presentation matches"
    else:
        report.overall = "FAIL"
        report.end_note = ("end presentation does not match the claimed "
                           "result")
    return report


# -- auto-justification and bridge ------------------------------------------------

def auto_justify(ambient: Presentation, target: NF, registry,
                 degree: int = 1):
    """Certificate search, then the positivity schema, then oracle-pending."""
    rels = [(r.name, r.body) for r in ambient.relations]
    cert = search_certificate(rels, target, ambient.gens, registry,
                              max_degree=degree)
    if cert is not None:
        return cert
    a = fcalc.match_geq_body(target, registry)
    if a is not None and registry.schema("positive_from_interval") is not None:
        cit = lemma_citation("positive_from_interval", A=a)
        try:
            ctx = _context_for(ambient, registry)
            amb = [(r.name, r.body) for r in ambient.relations]
            inst = fcalc.instantiate_schema(registry, cit.schema,
                                            cit.binding_dict(), amb, ctx)
            if target in inst.gives:
                return cit
        except fcalc.LemmaError:
            pass
    return OraclePending("no certificate found at degree <= %d" % degree)


class BridgeError(ValueError):
    pass


def _disjointed(p1: Presentation, p2: Presentation, dict1: dict, dict2: dict,
                registry) -> tuple[Presentation, dict, dict]:
    """Rename p2's generators/relations away from p1's (x -> x_2 rule)."""
    ent = registry.entire_fns
    taken = set(p1.gens.names())
    ren: dict[str, NF] = {}
    gens = NormedSet()
    for s, cap in p2.gens.items():
        new = _fresh(s, taken | set(gens.names()))
        if new != s:
            ren[s] = gen_nf(new)
        gens.add(new, cap)
    rel_taken = set(p1.relation_names())
    rels = []
    for r in p2.relations:
        new = _fresh(r.name, rel_taken)
        rel_taken.add(new)
        body = substitute(r.body, ren, ent) if ren else r.body
        rels.append(Relation(new, body, r.origin))
    if not ren and all(r.name == s.name for r, s in zip(rels, p2.relations)):
        return p2, dict1, dict2
    new_name = {s: next(iter(ren[s].symbols())) if s in ren else s
                for s in p2.gens.names()}
    d1 = {s: substitute(t, ren, ent) for s, t in dict1.items()}
    d2 = {new_name[s]: t for s, t in dict2.items()}
    return Presentation(p2.flavor, gens, tuple(rels), p2.notes), d1, d2


def bridge(p1: Presentation, p2: Presentation, dict1: dict, dict2: dict,
           registry, mode: str = "strict", degree: int = 1):
    """Joint presentation plus derivation skeletons p1 -> joint <- p2.

    dict1 maps p1 generators to terms over p2's generators and dict2 the
    reverse.  Each skeleton adds the other side's generators with their
    dictionary definitions, then the other side's relations and the
    remaining dictionary relations, auto-justified where possible.
    """
    if p1.flavor != "unital" or p2.flavor != "unital":
        raise BridgeError("bridge is defined for unital presentations")
    for s in p1.gens.names():
        if s not in dict1:
            raise BridgeError("dict1 missing image of %r" % s)
    for s in p2.gens.names():
        if s not in dict2:
            raise BridgeError("dict2 missing image of %r" % s)
    p2, dict1, dict2 = _disjointed(p1, p2, dict1, dict2, registry)

    gens = NormedSet()
    for n, c in p1.gens.items():
        gens.add(n, c)
    for n, c in p2.gens.items():
        gens.add(n, c)
    taken = set(p1.relation_names()) | set(p2.relation_names())
    def_name: dict[str, str] = {}
    for s in gens.names():
        def_name[s] = _fresh("def_" + s, taken)
        taken.add(def_name[s])
    m1 = [Relation(def_name[s], gen_nf(s) - dict2[s], "derived")
          for s in p2.gens.names()]
    m2 = [Relation(def_name[s], gen_nf(s) - dict1[s], "derived")
          for s in p1.gens.names()]
    joint = Presentation("unital", gens,
                         tuple(list(p1.relations) + m1 + list(p2.relations)
                               + m2))

    # norm caps of dictionary images, in the source presentations
    for src, d, tgt in ((p1, dict2, p2), (p2, dict1, p1)):
        ctx = _context_for(src, registry)
        for s, img in d.items():
            ub = bounds.norm_bound(img, ctx)
            if ub.cmp(tgt.gens.norm(s)) > 0 and mode == "strict":
                raise BridgeError(
                    "dictionary image of %s has bound %s above its cap %s"
                    % (s, ub, tgt.gens.norm(s)))

    def skeleton(src: Presentation, other: Presentation, d: dict,
                 m_other: list) -> Derivation:
        steps = [AddGenerators(tuple(
            (s, other.gens.norm(s), d[s]) for s in other.gens.names()))]
        # apply_move names the defining relations def_<sym>; mirror that so
        # the certificates below can cite them
        mid_rels = list(src.relations) + [
            Relation("def_" + s, gen_nf(s) - d[s], "derived")
            for s in other.gens.names()]
        mid = Presentation("unital", gens, tuple(mid_rels))
        taken = set(r.name for r in mid_rels)
        items = []
        for rel in list(other.relations) + m_other:
            nm = _fresh(rel.name, taken)
            taken.add(nm)
            items.append((Relation(nm, rel.body, rel.origin),
                          auto_justify(mid, rel.body, registry, degree)))
        steps.append(AddRelations(tuple(items)))
        return Derivation(src, tuple(steps), joint)

    drv1 = skeleton(p1, p2, dict2, m2)
    drv2 = skeleton(p2, p1, dict1, m1)
    return joint, drv1, drv2


# -- bounded simplification ---------------------------------------------------------

def auto_simplify(p: Presentation, registry, max_degree: int = 1,
                  max_steps: int = 40,
                  mode: str = "strict") -> tuple[Presentation, Derivation]:
    """Greedy removal of certificate-redundant relations and of generators
    with an eliminable defining relation; takes only gap-free moves, so the
    emitted derivation re-checks in the same mode."""
    cur = p
    steps = []
    while len(steps) < max_steps:
        move = None
        for rel in cur.relations:
            others = [(r.name, r.body) for r in cur.relations
                      if r.name != rel.name]
            cert = search_certificate(others, rel.body, cur.gens, registry,
                                      max_degree=max_degree)
            if cert is not None:
                move = RemoveRelations(((rel.name, cert),))
                break
        if move is None:
            for rel in cur.relations:
                done = False
                for sym in cur.gens.names():
                    c = rel.body.get((Atom(GEN, sym),))
                    if c is None or c.is_zero:
                        continue
                    t = gen_nf(sym) - rel.body * (Coeff.ONE / c)
                    if sym in t.symbols():
                        continue
                    rest = [r.body for r in cur.relations
                            if r.name != rel.name]
                    ctx = bounds.context_from_relations(cur.gens, registry,
                                                        rest)
                    ub = bounds.norm_bound(t, ctx)
                    if ub.cmp(cur.gens.norm(sym)) > 0:
                        continue
                    move = RemoveGenerators(((sym, rel.name),))
                    done = True
                    break
                if done:
                    break
        if move is None:
            break
        cur, _ = apply_move(cur, move, mode, registry)
        steps.append(move)
    return cur, Derivation(p, tuple(steps), cur)
