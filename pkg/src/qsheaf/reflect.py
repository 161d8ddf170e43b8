"""Reflection into sheaves by bounded forcing, and what it preserves.

Sheafification repeatedly scans every assigned cover: compatible
families without a gluing get a fresh glue point attached (a pushout
against the cover's sieve inclusion), and sections that agree on every
leg get merged (a coequalizer). Each sweep applies all forcing steps
simultaneously and canonically relabels; a sweep with nothing to do is
the fixpoint. The construction is certified, never trusted: the result
must pass both sheaf checks and the unit must induce hom-set bijections
against an exhaustively enumerated battery of small sheaves.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import finset
from .coverage import Coverage
from .errors import (
    InvalidSpec,
    MulNotAssociative,
    NotConverged,
    QsheafError,
    SiteMismatch,
    UnverifiedInput,
)
from .finset import FinMap, FinSetObj, label_key
from .moncat import canon
from .presheaf import (
    Presheaf,
    PresheafMorphism,
    day_convolve,
    day_projection1,
    day_projection2,
    hasse_edges,
    hom_presheaves,
    identity_morphism,
    iso_presheaves,
    terminal_presheaf,
)
from .quantale import _closure, parse_raw
from .sheaf import (
    VERDICT_SHEAF,
    _glue_buckets,
    check_sheaf_equalizer,
    check_sheaf_orthogonal,
    compatible_families,
)


class _DSU:
    """Index-based union-find; roots are the least index of each class."""

    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            if rj < ri:
                ri, rj = rj, ri
            self.parent[rj] = ri


@dataclass
class ReflectionResult:
    sheaf: Presheaf
    unit: PresheafMorphism
    iterations: int
    converged: bool
    history: list = field(default_factory=list)


def _forcing_ops(f: Presheaf, coverage: Coverage):
    """Missing gluings and ambiguous gluings, scanned over all covers."""
    exist, unify = [], []
    for cover in coverage.all_families():
        buckets = _glue_buckets(f, cover)
        for sig in sorted(buckets):
            zs = buckets[sig]
            for z in zs[1:]:
                unify.append((cover.target, zs[0], z))
        for fam in compatible_families(f, cover):
            if fam not in buckets:
                exist.append((cover.target, cover.legs, fam))
    return exist, unify


def _fresh_labels(count, used):
    out, n = [], 0
    while len(out) < count:
        cand = f"+{n}"
        while cand in used:
            cand += "'"
        out.append(cand)
        used.add(cand)
        n += 1
    return out


def _forcing_step(f: Presheaf, exist, unify):
    """Apply all forcing operations at once; returns (next, step unit)."""
    site = f.site
    tags_at, dsu_at, label_at = {}, {}, {}
    for u in site.objects():
        cu = canon(u)
        tags = [("o", x) for x in f.value(u)]
        for k, (target, _, _) in enumerate(exist):
            if site.leq(u, target):
                tags.append(("g", k))
        index = {t: i for i, t in enumerate(tags)}
        dsu = _DSU(len(tags))
        for k, (target, legs, fam) in enumerate(exist):
            if not site.leq(u, target):
                continue
            for leg, x in zip(legs, fam):
                if site.leq(u, leg.dom):
                    dsu.union(
                        index[("g", k)],
                        index[("o", f.restrict(u, leg.dom)(x))],
                    )
        for target, z1, z2 in unify:
            if site.leq(u, target):
                dsu.union(
                    index[("o", f.restrict(u, target)(z1))],
                    index[("o", f.restrict(u, target)(z2))],
                )
        roots = {}
        for i, t in enumerate(tags):
            roots.setdefault(dsu.find(i), []).append(t)
        labels, fresh_roots, used = {}, [], set()
        for root in sorted(roots):
            olds = [x for kind, x in roots[root] if kind == "o"]
            if olds:
                labels[root] = min(olds, key=label_key)
                used.add(labels[root])
            else:
                fresh_roots.append(root)
        for root, lab in zip(fresh_roots, _fresh_labels(len(fresh_roots), used)):
            labels[root] = lab
        tags_at[cu], dsu_at[cu], label_at[cu] = (tags, index), dsu, labels

    def label_of(cu, tag):
        tags, index = tags_at[cu]
        return label_at[cu][dsu_at[cu].find(index[tag])]

    at = {
        cu: FinSetObj(sorted(set(labels.values()), key=label_key))
        for cu, labels in label_at.items()
    }
    res = {}
    for u in site.objects():
        cu = canon(u)
        for v in site.objects():
            cv = canon(v)
            if cv == cu or not site.leq(v, u):
                continue
            table = {}
            for tag in tags_at[cu][0]:
                if tag[0] == "o":
                    down = ("o", f.restrict(v, u)(tag[1]))
                else:
                    down = tag
                src, dst = label_of(cu, tag), label_of(cv, down)
                if table.get(src, dst) != dst:
                    raise QsheafError(
                        "internal defect: forcing step restriction is "
                        f"ill-defined at {cv} <= {cu}"
                    )
                table[src] = dst
            res[(cv, cu)] = FinMap(at[cu], at[cv], table)
    nxt = Presheaf(site, at, res)
    comps = {
        canon(u): FinMap(
            f.value(u),
            nxt.value(u),
            {x: label_of(canon(u), ("o", x)) for x in f.value(u)},
        )
        for u in site.objects()
    }
    return nxt, PresheafMorphism(f, nxt, comps)


def sheafify(f: Presheaf, coverage: Coverage, max_iter: int = 16) -> ReflectionResult:
    """Bounded orthogonal forcing; never raises on hitting the bound."""
    if f.site != coverage.site:
        raise SiteMismatch("presheaf and coverage live on different sites")
    current, unit = f, identity_morphism(f)
    history = []
    for step in range(max_iter + 1):
        exist, unify = _forcing_ops(current, coverage)
        if not exist and not unify:
            return ReflectionResult(current, unit, step, True, history)
        if step == max_iter:
            break
        history.append((len(exist), len(unify)))
        current, step_unit = _forcing_step(current, exist, unify)
        unit = unit.then(step_unit)
    return ReflectionResult(current, unit, max_iter, False, history)


# ---------------------------------------------------------------------------
# the battery: every small sheaf, enumerated bottom-up


def _ascending_objects(site):
    objs = list(site.objects())
    rank = {canon(u): sum(1 for v in objs if site.leq(v, u)) for u in objs}
    return sorted(objs, key=lambda u: (rank[canon(u)], canon(u)))


def enumerate_sheaves(site, coverage: Coverage, max_size: int = 2) -> list:
    """All sheaf tables with value sets of at most the given size."""
    if site != coverage.site:
        raise SiteMismatch("coverage lives on a different site")
    labels = [f"v{i}" for i in range(max_size)]
    order = _ascending_objects(site)
    children = {
        canon(u): [v for (v, u2) in hasse_edges(site) if canon(u2) == canon(u)]
        for u in order
    }
    covers_by_target = {
        canon(u): [
            c for c in coverage.all_families() if canon(c.target) == canon(u)
        ]
        for u in order
    }
    at, res = {}, {}
    results = []

    def rst(w, u):
        cw, cu = canon(w), canon(u)
        if cw == cu:
            return finset.identity(at[cu])
        return res[(cw, cu)]

    def sheaf_ok_at(u):
        for cover in covers_by_target[canon(u)]:
            maps = [rst(leg.dom, u) for leg in cover.legs]
            buckets = {}
            for z in at[canon(u)]:
                buckets.setdefault(tuple(m(z) for m in maps), []).append(z)
            if any(len(zs) > 1 for zs in buckets.values()):
                return False
            legs = cover.legs
            overlaps = [
                [site.tensor_obj(a.dom, b.dom) for b in legs] for a in legs
            ]

            def families(k, chosen):
                if k == len(legs):
                    yield tuple(chosen)
                    return
                for x in at[canon(legs[k].dom)]:
                    if all(
                        rst(overlaps[i][k], legs[i].dom)(chosen[i])
                        == rst(overlaps[i][k], legs[k].dom)(x)
                        for i in range(k)
                    ):
                        chosen.append(x)
                        yield from families(k + 1, chosen)
                        chosen.pop()

            if any(fam not in buckets for fam in families(0, [])):
                return False
        return True

    def rec(k):
        if k == len(order):
            results.append(Presheaf(site, dict(at), dict(res)))
            return
        u = order[k]
        cu = canon(u)
        strict_below = [
            w for w in order[:k] if site.leq(w, u) and canon(w) != cu
        ]
        kids = children[cu]
        for size in range(max_size + 1):
            at[cu] = FinSetObj(labels[:size])
            options = []
            for v in kids:
                tables = [
                    dict(zip(at[cu].elements, targets))
                    for targets in itertools.product(
                        at[canon(v)].elements, repeat=size
                    )
                ]
                options.append(
                    [FinMap(at[cu], at[canon(v)], t) for t in tables]
                )
            for combo in itertools.product(*options):
                added = []
                consistent = True
                for v, m in zip(kids, combo):
                    res[(canon(v), cu)] = m
                    added.append((canon(v), cu))
                for w in strict_below:
                    cw = canon(w)
                    if (cw, cu) in res:
                        continue
                    derived = None
                    for v, m in zip(kids, combo):
                        if not site.leq(w, v):
                            continue
                        cand = finset.compose(rst(w, v), m)
                        if derived is None:
                            derived = cand
                        elif derived != cand:
                            consistent = False
                            break
                    if not consistent:
                        break
                    res[(cw, cu)] = derived
                    added.append((cw, cu))
                if consistent and sheaf_ok_at(u):
                    rec(k + 1)
                for key in added:
                    res.pop(key, None)
            del at[cu]

    rec(0)
    for p in results:
        if not check_sheaf_equalizer(p, coverage).ok:
            raise QsheafError("internal defect: battery admitted a non-sheaf")
    return results


@dataclass(frozen=True)
class CertEntry:
    name: str
    ok: bool
    witness: str | None = None


@dataclass
class CertificationReport:
    entries: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def summary(self) -> str:
        return "\n".join(
            f"{'pass' if e.ok else 'FAIL'} {e.name}"
            + (f" [{e.witness}]" if e.witness else "")
            for e in self.entries
        )


def certify_reflection(
    f: Presheaf,
    result: ReflectionResult,
    coverage: Coverage,
    battery: list | None = None,
) -> CertificationReport:
    """Check the universal property, not just the sheaf condition."""
    report = CertificationReport()
    report.entries.append(CertEntry("converged", result.converged))
    report.entries.append(
        CertEntry(
            "result-sheaf-equalizer",
            check_sheaf_equalizer(result.sheaf, coverage).verdict
            == VERDICT_SHEAF,
        )
    )
    report.entries.append(
        CertEntry(
            "result-sheaf-orthogonal",
            check_sheaf_orthogonal(result.sheaf, coverage).verdict
            == VERDICT_SHEAF,
        )
    )
    report.entries.append(CertEntry("unit-natural", result.unit.is_natural()))
    if battery is None:
        battery = enumerate_sheaves(f.site, coverage, max_size=2)
    bad = None
    for idx, g in enumerate(battery):
        into = hom_presheaves(result.sheaf, g)
        through = [result.unit.then(m) for m in into]
        direct = hom_presheaves(f, g)
        if len(set(through)) != len(through):
            bad = f"battery[{idx}]: unit precomposition not injective"
            break
        if set(through) != set(direct):
            bad = f"battery[{idx}]: unit precomposition not onto"
            break
    report.entries.append(
        CertEntry(f"battery-bijections ({len(battery)} sheaves)", bad is None, bad)
    )
    return report


# ---------------------------------------------------------------------------
# monoidal structure carried through the reflection


def sheaf_tensor(f: Presheaf, g: Presheaf, coverage: Coverage,
                 max_iter: int = 16) -> Presheaf:
    """Reflect the convolution back into sheaves."""
    result = sheafify(day_convolve(f, g), coverage, max_iter)
    if not result.converged:
        raise NotConverged("tensor reflection hit the iteration bound")
    return result.sheaf


@dataclass
class TerminalReport:
    ok: bool
    sizes: dict
    converged: bool


def preserves_terminal(coverage: Coverage, max_iter: int = 16) -> TerminalReport:
    """Does reflecting the terminal presheaf change it?"""
    t = terminal_presheaf(coverage.site)
    result = sheafify(t, coverage, max_iter)
    sizes = {
        canon(u): len(result.sheaf.value(u)) for u in coverage.site.objects()
    }
    ok = result.converged and all(n == 1 for n in sizes.values())
    return TerminalReport(ok, sizes, result.converged)


# ---------------------------------------------------------------------------
# subobjects


@dataclass
class SubobjectLattice:
    ambient: Presheaf
    coverage: Coverage
    members: list
    inclusions: list

    def index_of(self, sub: Presheaf) -> int:
        for i, m in enumerate(self.members):
            if m == sub:
                return i
        raise QsheafError("presheaf is not a member of this lattice")

    def leq(self, i: int, j: int) -> bool:
        a, b = self.members[i], self.members[j]
        return all(
            set(a.value(u).elements) <= set(b.value(u).elements)
            for u in self.ambient.objects()
        )

    def meet(self, i: int, j: int) -> int:
        a, b = self.members[i], self.members[j]
        want = {
            canon(u): set(a.value(u).elements) & set(b.value(u).elements)
            for u in self.ambient.objects()
        }
        for k, m in enumerate(self.members):
            if all(
                set(m.value(u).elements) == want[canon(u)]
                for u in self.ambient.objects()
            ):
                return k
        raise QsheafError(
            "internal defect: subsheaves are not closed under intersection"
        )

    def join(self, i: int, j: int) -> int:
        uppers = [
            k
            for k in range(len(self.members))
            if self.leq(i, k) and self.leq(j, k)
        ]
        least = [
            k for k in uppers if all(self.leq(k, other) for other in uppers)
        ]
        if len(least) != 1:
            raise QsheafError(
                "internal defect: join of subsheaves is not unique"
            )
        return least[0]


def _subpresheaves(f: Presheaf, size_cap: int = 1 << 16):
    site = f.site
    order = list(reversed(_ascending_objects(site)))
    ups = {
        canon(v): [u for (v2, u) in hasse_edges(site) if canon(v2) == canon(v)]
        for v in site.objects()
    }
    total = 1
    for u in site.objects():
        total *= 2 ** len(f.value(u))
        if total > size_cap:
            raise UnverifiedInput(
                "subobject enumeration would be too large; refusing to guess"
            )
    chosen = {}
    out = []

    def rec(k):
        if k == len(order):
            at = {cu: FinSetObj(sorted(xs, key=label_key))
                  for cu, xs in chosen.items()}
            res = {}
            for u in site.objects():
                cu = canon(u)
                for v in site.objects():
                    cv = canon(v)
                    if cv == cu or not site.leq(v, u):
                        continue
                    m = f.restrict(v, u)
                    res[(cv, cu)] = FinMap(
                        at[cu], at[cv], {x: m(x) for x in at[cu]}
                    )
            out.append(Presheaf(site, at, res))
            return
        u = order[k]
        cu = canon(u)
        forced = set()
        for up in ups[cu]:
            m = f.restrict(u, up)
            forced.update(m(x) for x in chosen[canon(up)])
        free = sorted(set(f.value(u).elements) - forced, key=label_key)
        for r in range(len(free) + 1):
            for extra in itertools.combinations(free, r):
                chosen[cu] = forced | set(extra)
                rec(k + 1)
        del chosen[cu]

    rec(0)
    return out


def subsheaf_lattice(f: Presheaf, coverage: Coverage,
                     size_cap: int = 1 << 16) -> SubobjectLattice:
    """All subpresheaves that pass the sheaf check, ordered pointwise."""
    if not check_sheaf_equalizer(f, coverage).ok:
        raise UnverifiedInput("subobject lattices are built over sheaves")
    members = [
        p
        for p in _subpresheaves(f, size_cap)
        if check_sheaf_equalizer(p, coverage).ok
    ]
    members.sort(key=lambda p: (p.total_size(), repr(p.to_raw())))
    inclusions = []
    for p in members:
        comps = {
            canon(u): FinMap(
                p.value(u), f.value(u), {x: x for x in p.value(u)}
            )
            for u in f.objects()
        }
        inclusions.append(PresheafMorphism(p, f, comps, check=False))
    return SubobjectLattice(f, coverage, members, inclusions)


@dataclass
class ExtremalFactorization:
    epi: PresheafMorphism
    mono: PresheafMorphism
    epi_certified: bool
    battery_size: int


def extremal_factorize(
    m: PresheafMorphism,
    coverage: Coverage,
    lattice: SubobjectLattice | None = None,
    battery: list | None = None,
) -> ExtremalFactorization:
    """Corestrict onto the least subsheaf containing the image."""
    f = m.dst
    if lattice is None:
        lattice = subsheaf_lattice(f, coverage)
    image = {
        canon(u): {m.component(u)(x) for x in m.src.value(u)}
        for u in f.objects()
    }
    candidates = [
        i
        for i, s in enumerate(lattice.members)
        if all(
            image[canon(u)] <= set(s.value(u).elements) for u in f.objects()
        )
    ]
    if not candidates:
        raise QsheafError(
            "internal defect: ambient sheaf does not contain the image"
        )
    least = candidates[0]
    for i in candidates[1:]:
        least = lattice.meet(least, i)
    target = lattice.members[least]
    comps = {
        canon(u): FinMap(
            m.src.value(u),
            target.value(u),
            {x: m.component(u)(x) for x in m.src.value(u)},
        )
        for u in f.objects()
    }
    epi = PresheafMorphism(m.src, target, comps)
    mono = lattice.inclusions[least]
    if battery is None:
        battery = enumerate_sheaves(f.site, coverage, max_size=2)
    certified = True
    for g in battery:
        seen = {}
        for alpha in hom_presheaves(target, g):
            key = epi.then(alpha)
            if seen.setdefault(key, alpha) != alpha:
                certified = False
                break
        if not certified:
            break
    return ExtremalFactorization(epi, mono, certified, len(battery))


def _extend_along_unit(result: ReflectionResult, psi: PresheafMorphism):
    """The unique map out of the reflection agreeing with psi on the unit."""
    matches = [
        m
        for m in hom_presheaves(result.sheaf, psi.dst)
        if result.unit.then(m) == psi
    ]
    if len(matches) != 1:
        raise QsheafError(
            f"internal defect: expected one extension, found {len(matches)}"
        )
    return matches[0]


def star(
    left: PresheafMorphism,
    right: PresheafMorphism,
    coverage: Coverage,
    lattice: SubobjectLattice | None = None,
    battery: list | None = None,
    max_iter: int = 16,
) -> ExtremalFactorization:
    """The subobject reached by tensoring two subobjects inside a sheaf.

    Convolve the two sources, reflect, equalize the two induced maps back
    into the ambient sheaf, then take the extremal image.
    """
    if left.dst != right.dst:
        raise SiteMismatch("star needs two subobjects of one sheaf")
    if not left.is_mono() or not right.is_mono():
        raise UnverifiedInput("star needs mono inclusions")
    f = left.dst
    conv = day_convolve(left.src, right.src)
    p1 = day_projection1(left.src, right.src, conv)
    p2 = day_projection2(left.src, right.src, conv)
    result = sheafify(conv, coverage, max_iter)
    if not result.converged:
        raise NotConverged("star reflection hit the iteration bound")
    phi1 = _extend_along_unit(result, p1.then(left))
    phi2 = _extend_along_unit(result, p2.then(right))
    site = f.site
    r = result.sheaf
    at = {}
    for u in site.objects():
        cu = canon(u)
        at[cu] = FinSetObj(
            [
                e
                for e in r.value(u)
                if phi1.component(u)(e) == phi2.component(u)(e)
            ]
        )
    res = {}
    for u in site.objects():
        cu = canon(u)
        for v in site.objects():
            cv = canon(v)
            if cv == cu or not site.leq(v, u):
                continue
            m = r.restrict(v, u)
            table = {}
            for e in at[cu]:
                if m(e) not in at[cv].elements:
                    raise QsheafError(
                        "internal defect: equalizer is not restriction-closed"
                    )
                table[e] = m(e)
            res[(cv, cu)] = FinMap(at[cu], at[cv], table)
    eq = Presheaf(site, at, res)
    comps = {
        canon(u): FinMap(
            eq.value(u),
            f.value(u),
            {e: phi1.component(u)(e) for e in eq.value(u)},
        )
        for u in site.objects()
    }
    into_f = PresheafMorphism(eq, f, comps)
    return extremal_factorize(into_f, coverage, lattice, battery)


# ---------------------------------------------------------------------------
# the down-set criterion


@dataclass
class LoposReport:
    ok: bool
    down_sets: int
    checked: int
    witness: dict | None = None

    def summary(self) -> str:
        if self.ok:
            return (
                f"pass: joins commute with the induced product on all "
                f"{self.down_sets} down-sets ({self.checked} pairs)"
            )
        w = self.witness
        return (
            "FAIL: down-sets "
            f"D={sorted(w['D'])} E={sorted(w['E'])}: "
            f"sup(D.E)={w['lhs']} but sup(D).sup(E)={w['rhs']}"
        )


def lopos_check(raw: dict, size_cap: int = 16) -> LoposReport:
    """Does the down-set algebra of a multiplicative poset stay lattice-like?

    Joins must commute with the product induced on down-sets. For a
    complete poset with an associative multiplication this holds exactly
    when the original data is a quantale, and a failure pins a concrete
    witness pair of down-sets.
    """
    norm = parse_raw(raw)
    elements, mul = norm["elements"], norm["mul"]
    if len(elements) > size_cap:
        raise UnverifiedInput("down-set enumeration would be too large")
    leq = _closure(elements, norm["pairs"])
    for a, b in itertools.combinations(elements, 2):
        if (a, b) in leq and (b, a) in leq:
            raise InvalidSpec(f"order is not antisymmetric at {a!r}, {b!r}")
    for a, b, c in itertools.product(elements, repeat=3):
        if mul[(mul[(a, b)], c)] != mul[(a, mul[(b, c)])]:
            raise MulNotAssociative(
                f"({a}.{b}).{c} != {a}.({b}.{c}); the criterion needs "
                "an associative product"
            )

    def sup(items):
        ubs = [u for u in elements if all((x, u) in leq for x in items)]
        least = [u for u in ubs if all((u, v) in leq for v in ubs)]
        if not least:
            raise InvalidSpec(
                f"poset lacks a least upper bound for {sorted(items)}"
            )
        return least[0]

    down_sets = []
    for mask in itertools.product([False, True], repeat=len(elements)):
        chosen = frozenset(
            e for e, keep in zip(elements, mask) if keep
        )
        if all(
            d in chosen
            for e in chosen
            for d in elements
            if (d, e) in leq
        ):
            down_sets.append(chosen)
    down_sets.sort(key=lambda s: (len(s), tuple(sorted(s))))

    def down_close(items):
        return frozenset(
            d for d in elements if any((d, e) in leq for e in items)
        )

    checked = 0
    for d_set, e_set in itertools.product(down_sets, repeat=2):
        checked += 1
        product = down_close(
            {mul[(d, e)] for d in d_set for e in e_set}
        )
        lhs = sup(product)
        rhs = mul[(sup(d_set), sup(e_set))]
        if lhs != rhs:
            return LoposReport(
                False,
                len(down_sets),
                checked,
                {"D": sorted(d_set), "E": sorted(e_set), "lhs": lhs, "rhs": rhs},
            )
    return LoposReport(True, len(down_sets), checked)


def pointwise_pullback(phi1: PresheafMorphism, phi2: PresheafMorphism):
    """Pullback of two presheaf morphisms with a common codomain.

    Computed objectwise: sections are the pairs whose images agree in
    the shared codomain, restrictions act componentwise. Returns the
    pullback presheaf together with its two projection morphisms.
    """
    if phi1.dst != phi2.dst:
        raise SiteMismatch("pullback needs morphisms into a common codomain")
    left, right = phi1.src, phi2.src
    site = left.site
    at = {}
    for u in site.objects():
        cu = canon(u)
        labels = [
            finset.pair_label(x, y)
            for x in left.value(u).elements
            for y in right.value(u).elements
            if phi1.component(u)(x) == phi2.component(u)(y)
        ]
        at[cu] = FinSetObj(labels)
    res = {}
    for u in site.objects():
        for v in site.objects():
            if not site.leq(v, u) or canon(u) == canon(v):
                continue
            lr = left.restrict(v, u)
            rr = right.restrict(v, u)
            table = {}
            for x in left.value(u).elements:
                for y in right.value(u).elements:
                    key = finset.pair_label(x, y)
                    if key in at[canon(u)].elements:
                        table[key] = finset.pair_label(lr(x), rr(y))
            res[(canon(v), canon(u))] = FinMap(
                at[canon(u)], at[canon(v)], table
            )
    apex = Presheaf(site, at, res)
    proj1 = PresheafMorphism(apex, left, {
        canon(u): FinMap(apex.value(u), left.value(u), {
            finset.pair_label(x, y): x
            for x in left.value(u).elements
            for y in right.value(u).elements
            if finset.pair_label(x, y) in apex.value(u).elements
        })
        for u in site.objects()
    })
    proj2 = PresheafMorphism(apex, right, {
        canon(u): FinMap(apex.value(u), right.value(u), {
            finset.pair_label(x, y): y
            for x in left.value(u).elements
            for y in right.value(u).elements
            if finset.pair_label(x, y) in apex.value(u).elements
        })
        for u in site.objects()
    })
    return apex, proj1, proj2


def probe_pullback_preservation(
    phi1: PresheafMorphism,
    phi2: PresheafMorphism,
    coverage: Coverage,
    max_iter: int = 16,
) -> dict:
    """Record whether reflection commutes with one pullback instance.

    Compares the reflection of the presheaf-level pullback of
    ``phi1, phi2`` against the pullback of their reflected extensions.
    This is an observation, not a law: the outcome is returned as data
    (``preserved`` is None when a reflection fails to converge) and
    nothing is asserted.
    """
    apex, _, _ = pointwise_pullback(phi1, phi2)
    r_left = sheafify(phi1.src, coverage, max_iter)
    r_right = sheafify(phi2.src, coverage, max_iter)
    r_mid = sheafify(phi1.dst, coverage, max_iter)
    r_apex = sheafify(apex, coverage, max_iter)
    record = {
        "converged": all(
            r.converged for r in (r_left, r_right, r_mid, r_apex)
        ),
        "apex_sizes": {
            canon(u): len(apex.value(u)) for u in apex.site.objects()
        },
    }
    if not record["converged"]:
        record["preserved"] = None
        return record
    ext1 = _extend_along_unit(r_left, phi1.then(r_mid.unit))
    ext2 = _extend_along_unit(r_right, phi2.then(r_mid.unit))
    sheaf_apex, _, _ = pointwise_pullback(ext1, ext2)
    iso = iso_presheaves(r_apex.sheaf, sheaf_apex)
    record["reflected_apex_sizes"] = {
        canon(u): len(r_apex.sheaf.value(u))
        for u in r_apex.sheaf.site.objects()
    }
    record["sheaf_pullback_sizes"] = {
        canon(u): len(sheaf_apex.value(u))
        for u in sheaf_apex.site.objects()
    }
    record["preserved"] = iso is not None
    return record
