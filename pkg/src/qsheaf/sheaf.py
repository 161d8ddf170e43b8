"""Sheaf conditions over covered thin sites, checked two independent ways.

The first checker enumerates compatible families and counts gluings,
cross-checking itself against the literal equalizer diagram (built with
the finite-set kernel) whenever the diagram is small. The second checker
tests orthogonality against canonical sieve inclusions by enumerating
natural transformations on both sides. The two must always agree; any
disagreement is reported as a defect of this library, never of the input.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import finset
from .coverage import CoverFamily, Coverage
from .errors import (
    NotCompatible,
    NotLocale,
    QsheafError,
    SectionOutOfSet,
    SiteMismatch,
)
from .finset import FinMap, FinSetObj, UnionFind, label_key
from .moncat import ThinCategory, canon, pseudo_pullback
from .presheaf import (
    Presheaf,
    PresheafMorphism,
    hom_presheaves,
    sieve_of,
    yoneda,
)

_SEP = "\x1f"

VERDICT_SHEAF = "sheaf"
VERDICT_SEPARATED = "separated"
VERDICT_PRESHEAF = "presheaf"

_GRADE = {VERDICT_SHEAF: 2, VERDICT_SEPARATED: 1, VERDICT_PRESHEAF: 0}


def _overlap(site, cache, a, b):
    """The pseudo-pullback apex of two cover legs, cached per object pair."""
    key = (canon(a.dom), canon(b.dom), canon(a.cod))
    if key not in cache:
        cache[key] = pseudo_pullback(site, a, b).obj
    return cache[key]


def is_compatible(f: Presheaf, cover: CoverFamily, sections) -> bool:
    """Do the sections agree on every pairwise overlap?"""
    site = f.site
    legs = cover.legs
    if len(sections) != len(legs):
        raise SectionOutOfSet(
            f"expected {len(legs)} sections, got {len(sections)}"
        )
    for leg, x in zip(legs, sections):
        if x not in f.value(leg.dom):
            raise SectionOutOfSet(
                f"section {x!r} is not in the value set at {canon(leg.dom)}"
            )
    cache = {}
    for i in range(len(legs)):
        for j in range(i + 1, len(legs)):
            t = _overlap(site, cache, legs[i], legs[j])
            lhs = f.restrict(t, legs[i].dom)(sections[i])
            rhs = f.restrict(t, legs[j].dom)(sections[j])
            if lhs != rhs:
                return False
    return True


def compatible_families(f: Presheaf, cover: CoverFamily) -> list:
    """All compatible section tuples for a cover, by backtracking."""
    site = f.site
    legs = cover.legs
    cache = {}
    out = []
    chosen = []

    def extend(k):
        if k == len(legs):
            out.append(tuple(chosen))
            return
        for x in f.value(legs[k].dom):
            ok = True
            for i in range(k):
                t = _overlap(site, cache, legs[i], legs[k])
                if f.restrict(t, legs[i].dom)(chosen[i]) != f.restrict(
                    t, legs[k].dom
                )(x):
                    ok = False
                    break
            if ok:
                chosen.append(x)
                extend(k + 1)
                chosen.pop()

    extend(0)
    return out


def glue(f: Presheaf, cover: CoverFamily, sections) -> list:
    """Every section over the target restricting to the given family."""
    if not is_compatible(f, cover, sections):
        raise NotCompatible("sections disagree on an overlap")
    target = cover.target
    out = []
    for z in f.value(target):
        if all(
            f.restrict(leg.dom, target)(z) == x
            for leg, x in zip(cover.legs, sections)
        ):
            out.append(z)
    return out


@dataclass(frozen=True)
class CoverOutcome:
    cover: CoverFamily
    families: int
    unglued: int
    ambiguous: int

    @property
    def verdict(self) -> str:
        if self.ambiguous:
            return VERDICT_PRESHEAF
        if self.unglued:
            return VERDICT_SEPARATED
        return VERDICT_SHEAF


@dataclass
class SheafReport:
    method: str
    verdict: str
    outcomes: list = field(default_factory=list)
    cross_checked: int = 0
    witness: str | None = None

    @property
    def ok(self) -> bool:
        return self.verdict == VERDICT_SHEAF

    def summary(self) -> str:
        lines = [f"{self.method}: {self.verdict}"]
        for o in self.outcomes:
            if o.verdict != VERDICT_SHEAF:
                lines.append(
                    f"  {o.cover!r}: {o.families} families, "
                    f"{o.unglued} without gluing, {o.ambiguous} ambiguous"
                )
        if self.cross_checked:
            lines.append(f"  equalizer diagrams cross-checked: {self.cross_checked}")
        if self.witness:
            lines.append(f"  witness: {self.witness}")
        return "\n".join(lines)


def _glue_buckets(f: Presheaf, cover: CoverFamily) -> dict:
    """Restriction signature -> sections over the target realizing it."""
    target = cover.target
    maps = [f.restrict(leg.dom, target) for leg in cover.legs]
    buckets = {}
    for z in f.value(target):
        sig = tuple(m(z) for m in maps)
        buckets.setdefault(sig, []).append(z)
    return buckets


def _diagram_crosscheck(f: Presheaf, cover: CoverFamily, outcome, threshold):
    """Build the literal equalizer diagram and compare verdicts."""
    site = f.site
    legs = cover.legs
    leg_sizes = [len(f.value(leg.dom)) for leg in legs]
    prod = 1
    for s in leg_sizes:
        prod *= s
    if prod > threshold or len(legs) > 8:
        return False
    cache = {}
    overlaps = [
        [_overlap(site, cache, a, b) for b in legs] for a in legs
    ]
    tuples = list(itertools.product(*(f.value(leg.dom) for leg in legs)))
    leg_obj = FinSetObj([_SEP.join(t) for t in tuples])
    pair_tables = {}
    first_table, second_table = {}, {}
    pair_labels = []
    for t in tuples:
        row = []
        for i in range(len(legs)):
            for j in range(len(legs)):
                w = overlaps[i][j]
                row.append(f.restrict(w, legs[i].dom)(t[i]))
        first_table[_SEP.join(t)] = _SEP.join(row)
        row2 = []
        for i in range(len(legs)):
            for j in range(len(legs)):
                w = overlaps[i][j]
                row2.append(f.restrict(w, legs[j].dom)(t[j]))
        second_table[_SEP.join(t)] = _SEP.join(row2)
        pair_labels.extend([first_table[_SEP.join(t)], second_table[_SEP.join(t)]])
    pair_obj = FinSetObj(sorted(set(pair_labels), key=label_key))
    first = FinMap(leg_obj, pair_obj, first_table)
    second = FinMap(leg_obj, pair_obj, second_table)
    sub, _ = finset.equalizer(first, second)
    target = cover.target
    e_table = {
        z: _SEP.join(
            f.restrict(leg.dom, target)(z) for leg in legs
        )
        for z in f.value(target)
    }
    image = set(e_table.values())
    injective = len(image) == len(e_table)
    onto = image == set(sub.elements)
    diagram_verdict = (
        VERDICT_SHEAF
        if injective and onto
        else VERDICT_SEPARATED
        if injective
        else VERDICT_PRESHEAF
    )
    if diagram_verdict != outcome.verdict:
        raise QsheafError(
            "internal defect: family count and equalizer diagram disagree "
            f"on {cover!r} ({outcome.verdict} vs {diagram_verdict})"
        )
    return True


def check_sheaf_equalizer(
    f: Presheaf, coverage: Coverage, crosscheck_threshold: int = 4096
) -> SheafReport:
    """Count gluings of every compatible family of every assigned cover."""
    if f.site != coverage.site:
        raise SiteMismatch("presheaf and coverage live on different sites")
    report = SheafReport("equalizer", VERDICT_SHEAF)
    for cover in coverage.all_families():
        buckets = _glue_buckets(f, cover)
        families = compatible_families(f, cover)
        unglued = ambiguous = 0
        for fam in families:
            n = len(buckets.get(fam, []))
            if n == 0:
                unglued += 1
            elif n > 1:
                ambiguous += 1
        outcome = CoverOutcome(cover, len(families), unglued, ambiguous)
        report.outcomes.append(outcome)
        if _diagram_crosscheck(f, cover, outcome, crosscheck_threshold):
            report.cross_checked += 1
        if _GRADE[outcome.verdict] < _GRADE[report.verdict]:
            report.verdict = outcome.verdict
            report.witness = f"cover {cover!r}"
    return report


def check_sheaf_orthogonal(f: Presheaf, coverage: Coverage) -> SheafReport:
    """Test unique lifting against every canonical sieve inclusion."""
    if f.site != coverage.site:
        raise SiteMismatch("presheaf and coverage live on different sites")
    site = f.site
    report = SheafReport("orthogonal", VERDICT_SHEAF)
    y_cache, hom_y_cache = {}, {}
    for cover in coverage.all_families():
        cu = canon(cover.target)
        if cu not in y_cache:
            y_cache[cu] = yoneda(site, cover.target)
            hom_y_cache[cu] = hom_presheaves(y_cache[cu], f)
        sv = sieve_of(site, cover)
        homs_sieve = hom_presheaves(sv.presheaf, f)
        precomposed = [sv.canonical.then(m) for m in hom_y_cache[cu]]
        unglued = len(set(homs_sieve) - set(precomposed))
        ambiguous = len(precomposed) - len(set(precomposed))
        outcome = CoverOutcome(cover, len(homs_sieve), unglued, ambiguous)
        report.outcomes.append(outcome)
        if _GRADE[outcome.verdict] < _GRADE[report.verdict]:
            report.verdict = outcome.verdict
            report.witness = f"cover {cover!r}"
    return report


def check_separated(f: Presheaf, coverage: Coverage) -> bool:
    """Are sections over each target distinguished by their restrictions?"""
    if f.site != coverage.site:
        raise SiteMismatch("presheaf and coverage live on different sites")
    for cover in coverage.all_families():
        buckets = _glue_buckets(f, cover)
        if any(len(zs) > 1 for zs in buckets.values()):
            return False
    return True


def check_sheaf(f: Presheaf, coverage: Coverage, method: str = "both"):
    """Run one or both checkers; with both, disagreement is an internal bug."""
    if method == "equalizer":
        return check_sheaf_equalizer(f, coverage)
    if method == "orthogonal":
        return check_sheaf_orthogonal(f, coverage)
    if method != "both":
        raise QsheafError(f"unknown sheaf check method {method!r}")
    first = check_sheaf_equalizer(f, coverage)
    second = check_sheaf_orthogonal(f, coverage)
    if first.verdict != second.verdict:
        raise QsheafError(
            "internal defect: sheaf checkers disagree "
            f"({first.verdict} vs {second.verdict})"
        )
    return first


# ---------------------------------------------------------------------------
# constructions on sheaves


def shift_presheaf(f: Presheaf, u) -> Presheaf:
    """The presheaf v -> f(u * v); shifts of sheaves stay sheaves."""
    site = f.site
    at, res = {}, {}
    for v in site.objects():
        at[canon(v)] = f.value(site.tensor_obj(u, v))
    for v in site.objects():
        for v2 in site.objects():
            if not site.leq(v2, v) or canon(v2) == canon(v):
                continue
            res[(canon(v2), canon(v))] = f.restrict(
                site.tensor_obj(u, v2), site.tensor_obj(u, v)
            )
    return Presheaf(site, at, res)


def product_sheaf(f: Presheaf, g: Presheaf) -> Presheaf:
    """The pointwise product presheaf on the product site."""
    site = ThinCategory.product(f.site, g.site)
    at, res = {}, {}
    for (a, b) in site.objects():
        labels = [
            finset.pair_label(x, y)
            for x in f.value(a)
            for y in g.value(b)
        ]
        at[canon((a, b))] = FinSetObj(labels)
    for (a, b) in site.objects():
        for (a2, b2) in site.objects():
            if not site.leq((a2, b2), (a, b)):
                continue
            if canon((a2, b2)) == canon((a, b)):
                continue
            fm, gm = f.restrict(a2, a), g.restrict(b2, b)
            table = {
                finset.pair_label(x, y): finset.pair_label(fm(x), gm(y))
                for x in f.value(a)
                for y in g.value(b)
            }
            res[(canon((a2, b2)), canon((a, b)))] = FinMap(
                at[canon((a, b))], at[canon((a2, b2))], table
            )
    return Presheaf(site, at, res)


# ---------------------------------------------------------------------------
# the plus construction (locales only)


def _down_set_supports(site, quantale, u):
    """Down-closed subsets of the principal down-set of u joining to u."""
    below = [w for w in site.objects() if site.leq(w, u)]
    below.sort(key=canon)
    supports = []
    for mask in itertools.product([False, True], repeat=len(below)):
        chosen = [w for w, keep in zip(below, mask) if keep]
        names = {canon(w) for w in chosen}
        if any(
            canon(v) not in names
            for w in chosen
            for v in site.objects()
            if site.leq(v, w)
        ):
            continue
        if quantale.join(sorted(names)) != canon(u):
            continue
        supports.append(tuple(sorted(names)))
    return supports


def _matching_families(f: Presheaf, site, support):
    """Functions picking one section per support member, matching downward."""
    objs = {canon(w): w for w in site.objects()}
    members = [objs[name] for name in support]
    rank = {
        canon(w): sum(1 for v in members if site.leq(v, w)) for w in members
    }
    order = sorted(members, key=lambda w: (-rank[canon(w)], canon(w)))
    out = []
    chosen = {}

    def extend(k):
        if k == len(order):
            out.append(tuple(sorted(chosen.items())))
            return
        w = order[k]
        forced = None
        dead = False
        for w2 in order[:k]:
            if not site.leq(w, w2):
                continue
            want = f.restrict(w, w2)(chosen[canon(w2)])
            if forced is None:
                forced = want
            elif forced != want:
                dead = True
                break
        if dead:
            return
        candidates = [forced] if forced is not None else list(f.value(w))
        for x in candidates:
            chosen[canon(w)] = x
            extend(k + 1)
            del chosen[canon(w)]

    extend(0)
    return out


def plus_with_unit(f: Presheaf, coverage: Coverage):
    """One densification step: classes of matching families over covers.

    Returns the new presheaf together with the comparison sending a
    section to the class of its restriction germ. Only available on
    locales with their canonical coverage, where restriction along
    overlaps is independent of all choices.
    """
    site = f.site
    if f.site != coverage.site:
        raise SiteMismatch("presheaf and coverage live on different sites")
    if not getattr(site, "is_cartesian", False) or not getattr(
        coverage, "join_rule", False
    ):
        raise NotLocale(
            "the one-step densification needs a locale with its "
            "canonical coverage"
        )
    quantale = coverage.quantale
    objs = {canon(w): w for w in site.objects()}

    germs_at = {}
    for u in site.objects():
        germs = []
        for support in _down_set_supports(site, quantale, u):
            for fam in _matching_families(f, site, support):
                germs.append((support, fam))
        germs.sort()
        germs_at[canon(u)] = germs

    def agree(g1, g2):
        s1, s2 = set(g1[0]), set(g2[0])
        d1, d2 = dict(g1[1]), dict(g2[1])
        return all(d1[name] == d2[name] for name in s1 & s2)

    uf_at, labels_at = {}, {}
    for u in site.objects():
        cu = canon(u)
        germs = germs_at[cu]
        keys = [repr(g) for g in germs]
        uf = UnionFind(keys)
        for i in range(len(germs)):
            for j in range(i + 1, len(germs)):
                if uf.find(keys[i]) != uf.find(keys[j]) and agree(
                    germs[i], germs[j]
                ):
                    uf.union(keys[i], keys[j])
        reps = sorted({uf.find(k) for k in keys}, key=label_key)
        labels_at[cu] = {rep: f"c{idx}" for idx, rep in enumerate(reps)}
        uf_at[cu] = uf

    def restrict_germ(germ, v):
        support, fam = germ
        d = dict(fam)
        sub = []
        for name in support:
            if site.leq(objs[name], v):
                sub.append((name, d[name]))
        return (tuple(name for name, _ in sub), tuple(sub))

    def class_of(germ, cv):
        return labels_at[cv][uf_at[cv].find(repr(germ))]

    at = {
        cu: FinSetObj(sorted(labels.values()))
        for cu, labels in labels_at.items()
    }
    res = {}
    for u in site.objects():
        cu = canon(u)
        for v in site.objects():
            cv = canon(v)
            if cv == cu or not site.leq(v, u):
                continue
            table = {}
            for germ in germs_at[cu]:
                src = class_of(germ, cu)
                dst = class_of(restrict_germ(germ, v), cv)
                if table.get(src, dst) != dst:
                    raise QsheafError(
                        "internal defect: densification restriction is "
                        f"ill-defined at {cv} <= {cu}"
                    )
                table[src] = dst
            res[(cv, cu)] = FinMap(at[cu], at[cv], table)
    plus = Presheaf(site, at, res)

    comps = {}
    for u in site.objects():
        cu = canon(u)
        below = tuple(
            sorted(canon(w) for w in site.objects() if site.leq(w, u))
        )
        table = {}
        for x in f.value(u):
            fam = tuple(
                sorted((name, f.restrict(objs[name], u)(x)) for name in below)
            )
            table[x] = class_of((below, fam), cu)
        comps[cu] = FinMap(f.value(u), plus.value(u), table)
    unit = PresheafMorphism(f, plus, comps)
    return plus, unit


def plus_construction(f: Presheaf, coverage: Coverage) -> Presheaf:
    """One densification step, dropping the comparison morphism."""
    return plus_with_unit(f, coverage)[0]
