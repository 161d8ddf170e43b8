"""Set-valued presheaves on thin sites.

A presheaf assigns a finite set to every object and a restriction map to
every comparable pair, contravariantly. Everything downstream (sheaf
checks, sieves, Day convolution, sheafification) works with the literal
tables built here. Natural transformations are enumerated by fiber
filtering along the Hasse diagram, which is complete because naturality
on covering edges composes to naturality on all comparable pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import finset
from .coverage import CoverFamily
from .errors import (
    InvalidSpec,
    MissingRestriction,
    NotSemicartesian,
    NotThinSite,
    SiteMismatch,
)
from .finset import FinMap, FinSetObj, UnionFind, label_key
from .moncat import ThinCategory, canon, is_semicartesian, pseudo_pullback


def _require_thin(site):
    if not getattr(site, "is_thin", False):
        raise NotThinSite("presheaf machinery needs a thin site")


class Presheaf:
    """Object-indexed finite sets with contravariant restriction maps."""

    def __init__(self, site: ThinCategory, at: dict, res: dict):
        _require_thin(site)
        self.site = site
        self._at = {}
        for u in site.objects():
            cu = canon(u)
            if cu not in at:
                raise InvalidSpec(f"no value set for object {cu}")
            value = at[cu]
            if not isinstance(value, FinSetObj):
                value = FinSetObj(value)
            self._at[cu] = value
        self._res = {}
        for u in site.objects():
            cu = canon(u)
            for v in site.objects():
                cv = canon(v)
                if not site.leq(v, u):
                    continue
                if cv == cu:
                    self._res[(cv, cu)] = finset.identity(self._at[cu])
                    continue
                if (cv, cu) not in res:
                    raise MissingRestriction(f"no restriction for {cv} <= {cu}")
                m = res[(cv, cu)]
                if not isinstance(m, FinMap):
                    m = FinMap(self._at[cu], self._at[cv], m)
                if m.dom != self._at[cu] or m.cod != self._at[cv]:
                    raise MissingRestriction(
                        f"restriction for {cv} <= {cu} has wrong endpoints"
                    )
                self._res[(cv, cu)] = m

    def value(self, u) -> FinSetObj:
        return self._at[canon(u)]

    def restrict(self, v, u) -> FinMap:
        """The map F(u) -> F(v) for v <= u."""
        key = (canon(v), canon(u))
        if key not in self._res:
            raise MissingRestriction(f"no restriction for {key[0]} <= {key[1]}")
        return self._res[key]

    def objects(self):
        return self.site.objects()

    def total_size(self) -> int:
        return sum(len(v) for v in self._at.values())

    def to_raw(self) -> dict:
        at = {cu: list(v.elements) for cu, v in sorted(self._at.items())}
        res = {}
        for (cv, cu), m in sorted(self._res.items()):
            if cv == cu:
                continue
            res[f"{cv}<={cu}"] = {x: m(x) for x in m.dom}
        return {"at": at, "res": res}

    def __eq__(self, other):
        return (
            isinstance(other, Presheaf)
            and self.site == other.site
            and self._at == other._at
            and self._res == other._res
        )

    def __hash__(self):
        return hash(tuple(sorted((k, v) for k, v in self._at.items())))

    def __repr__(self):
        sizes = ",".join(
            f"{cu}:{len(v)}" for cu, v in sorted(self._at.items())
        )
        return f"Presheaf({sizes})"


@dataclass(frozen=True)
class PresheafCheck:
    kind: str
    ok: bool
    witness: str | None = None


@dataclass
class PresheafValidation:
    presheaf: Presheaf | None
    entries: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.presheaf is not None and all(e.ok for e in self.entries)

    def summary(self) -> str:
        lines = []
        for e in self.entries:
            status = "pass" if e.ok else "FAIL"
            tail = f" [{e.witness}]" if e.witness else ""
            lines.append(f"{status} {e.kind}{tail}")
        return "\n".join(lines)


def parse_presheaf(site: ThinCategory, raw: dict) -> Presheaf:
    if not isinstance(raw, dict) or "at" not in raw:
        raise InvalidSpec("presheaf spec needs an 'at' table")
    names = {canon(u) for u in site.objects()}
    at = {}
    for cu, labels in raw["at"].items():
        if cu not in names:
            raise InvalidSpec(f"unknown object {cu!r} in presheaf spec")
        at[cu] = FinSetObj(labels)
    missing = names - set(at)
    if missing:
        raise InvalidSpec(f"presheaf spec misses objects {sorted(missing)}")
    res = {}
    for key, table in raw.get("res", {}).items():
        if "<=" not in key:
            raise InvalidSpec(f"restriction key {key!r} is not 'v<=u'")
        cv, cu = key.split("<=", 1)
        if cv not in names or cu not in names:
            raise InvalidSpec(f"restriction key {key!r} names unknown objects")
        res[(cv, cu)] = FinMap(at[cu], at[cv], dict(table))
    return Presheaf(site, at, res)


def validate_presheaf(site: ThinCategory, raw_or_presheaf) -> PresheafValidation:
    """Functoriality audit: identities and all composition triangles."""
    if isinstance(raw_or_presheaf, Presheaf):
        p = raw_or_presheaf
    else:
        try:
            p = parse_presheaf(site, raw_or_presheaf)
        except (InvalidSpec, MissingRestriction) as exc:
            out = PresheafValidation(None)
            out.entries.append(PresheafCheck("structure", False, str(exc)))
            return out
    out = PresheafValidation(p)
    objs = site.objects()
    for u in objs:
        if p.restrict(u, u) != finset.identity(p.value(u)):
            out.entries.append(
                PresheafCheck("identity", False, f"res({canon(u)}) is not id")
            )
    bad = None
    for u in objs:
        for v in objs:
            if not site.leq(v, u):
                continue
            for w in objs:
                if not site.leq(w, v):
                    continue
                lhs = finset.compose(p.restrict(w, v), p.restrict(v, u))
                if lhs != p.restrict(w, u):
                    bad = f"{canon(w)} <= {canon(v)} <= {canon(u)}"
                    break
            if bad:
                break
        if bad:
            break
    out.entries.append(PresheafCheck("composition", bad is None, bad))
    if not out.entries or all(e.kind != "identity" for e in out.entries):
        out.entries.insert(0, PresheafCheck("identity", True))
    return out


# ---------------------------------------------------------------------------
# standard presheaves


def yoneda(site: ThinCategory, u) -> Presheaf:
    """y(u): singleton below u, empty elsewhere, forced restrictions."""
    _require_thin(site)
    at, res = {}, {}
    for w in site.objects():
        at[canon(w)] = FinSetObj(["*"] if site.leq(w, u) else [])
    for a in site.objects():
        for b in site.objects():
            if site.leq(a, b) and canon(a) != canon(b):
                table = {"*": "*"} if site.leq(b, u) and site.leq(a, u) else {}
                res[(canon(a), canon(b))] = FinMap(
                    at[canon(b)], at[canon(a)], table
                )
    return Presheaf(site, at, res)


def terminal_presheaf(site: ThinCategory) -> Presheaf:
    at = {canon(u): FinSetObj(["*"]) for u in site.objects()}
    res = {
        (canon(v), canon(u)): {"*": "*"}
        for u in site.objects()
        for v in site.objects()
        if site.leq(v, u) and canon(v) != canon(u)
    }
    return Presheaf(site, at, res)


def empty_presheaf(site: ThinCategory) -> Presheaf:
    at = {canon(u): FinSetObj([]) for u in site.objects()}
    res = {
        (canon(v), canon(u)): {}
        for u in site.objects()
        for v in site.objects()
        if site.leq(v, u) and canon(v) != canon(u)
    }
    return Presheaf(site, at, res)


# ---------------------------------------------------------------------------
# natural transformations


class PresheafMorphism:
    """A natural transformation given by one component map per object."""

    __slots__ = ("src", "dst", "components", "_key")

    def __init__(self, src: Presheaf, dst: Presheaf, components: dict,
                 check=True):
        if src.site != dst.site:
            raise SiteMismatch("morphism endpoints live on different sites")
        comps = {}
        for u in src.objects():
            cu = canon(u)
            if cu not in components:
                raise InvalidSpec(f"missing component at {cu}")
            m = components[cu]
            if not isinstance(m, FinMap):
                m = FinMap(src.value(u), dst.value(u), m)
            if m.dom != src.value(u) or m.cod != dst.value(u):
                raise InvalidSpec(f"component at {cu} has wrong endpoints")
            comps[cu] = m
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "components", comps)
        object.__setattr__(
            self,
            "_key",
            tuple(
                (cu, tuple(sorted((x, m(x)) for x in m.dom)))
                for cu, m in sorted(comps.items())
            ),
        )
        if check and not self.is_natural():
            raise InvalidSpec("components are not natural")

    def __setattr__(self, name, value):
        raise AttributeError("PresheafMorphism is immutable")

    def component(self, u) -> FinMap:
        return self.components[canon(u)]

    def is_natural(self) -> bool:
        site = self.src.site
        for u in site.objects():
            for v in site.objects():
                if not site.leq(v, u):
                    continue
                lhs = finset.compose(
                    self.dst.restrict(v, u), self.component(u)
                )
                rhs = finset.compose(
                    self.component(v), self.src.restrict(v, u)
                )
                if lhs != rhs:
                    return False
        return True

    def is_mono(self) -> bool:
        return all(m.is_injective() for m in self.components.values())

    def is_iso(self) -> bool:
        return all(m.is_bijective() for m in self.components.values())

    def then(self, other: "PresheafMorphism") -> "PresheafMorphism":
        """other after self."""
        if self.dst != other.src:
            raise SiteMismatch("composition endpoints do not match")
        comps = {
            cu: finset.compose(other.components[cu], m)
            for cu, m in self.components.items()
        }
        return PresheafMorphism(self.src, other.dst, comps, check=False)

    def __eq__(self, other):
        return (
            isinstance(other, PresheafMorphism)
            and self.src == other.src
            and self.dst == other.dst
            and self._key == other._key
        )

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        return f"PresheafMorphism({self.src!r} -> {self.dst!r})"


def identity_morphism(p: Presheaf) -> PresheafMorphism:
    comps = {canon(u): finset.identity(p.value(u)) for u in p.objects()}
    return PresheafMorphism(p, p, comps, check=False)


def hasse_edges(site: ThinCategory):
    """Covering pairs (v, u) with v < u and nothing strictly between."""
    objs = site.objects()
    edges = []
    for u in objs:
        for v in objs:
            if canon(v) == canon(u) or not site.leq(v, u):
                continue
            if any(
                site.leq(v, w) and site.leq(w, u)
                and canon(w) not in (canon(v), canon(u))
                for w in objs
            ):
                continue
            edges.append((v, u))
    return edges


def _descending_objects(site: ThinCategory):
    """A linear extension listing every object before anything below it."""
    objs = site.objects()
    remaining = list(objs)
    out = []
    while remaining:
        for u in remaining:
            if all(
                not site.leq(u, v) or canon(v) == canon(u) for v in remaining
            ):
                out.append(u)
                remaining.remove(u)
                break
        else:
            raise InvalidSpec("site order is not antisymmetric")
    return out


def hom_presheaves(f: Presheaf, g: Presheaf) -> list:
    """All natural transformations f -> g, via downward fiber filtering."""
    if f.site != g.site:
        raise SiteMismatch("hom needs presheaves on one site")
    site = f.site
    order = _descending_objects(site)
    ups = {
        canon(v): [u for (v2, u) in hasse_edges(site) if canon(v2) == canon(v)]
        for v in site.objects()
    }
    results = []
    assignment = {}

    def extend(k):
        if k == len(order):
            results.append(
                PresheafMorphism(f, g, dict(assignment), check=False)
            )
            return
        v = order[k]
        cv = canon(v)
        fibers = []
        for x in f.value(v):
            forced = None
            ok = True
            for u in ups[cv]:
                comp_u = assignment[canon(u)]
                fv, gv = f.restrict(v, u), g.restrict(v, u)
                for y in f.value(u):
                    if fv(y) != x:
                        continue
                    want = gv(comp_u(y))
                    if forced is None:
                        forced = want
                    elif forced != want:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                fibers.append((x, []))
            elif forced is not None:
                fibers.append((x, [forced]))
            else:
                fibers.append((x, list(g.value(v))))
        if any(not cands for _, cands in fibers):
            return
        for combo in itertools.product(*(c for _, c in fibers)):
            table = {x: y for (x, _), y in zip(fibers, combo)}
            assignment[cv] = FinMap(f.value(v), g.value(v), table)
            extend(k + 1)
        assignment.pop(cv, None)

    extend(0)
    results.sort(key=lambda m: m._key)
    return results


def iso_presheaves(f: Presheaf, g: Presheaf):
    """An isomorphism f -> g if one exists, else None."""
    sizes_f = sorted((cu, len(v)) for cu, v in f._at.items())
    sizes_g = sorted((cu, len(v)) for cu, v in g._at.items())
    if sizes_f != sizes_g:
        return None
    for m in hom_presheaves(f, g):
        if m.is_iso():
            return m
    return None


# ---------------------------------------------------------------------------
# Day convolution


def _day_tag(cv, cw, x, y):
    return f"{cv}|{cw}|{x}|{y}"


def day_convolve(f: Presheaf, g: Presheaf) -> Presheaf:
    """Pointwise coend: factorizations u <= v*w, quotiented by restriction."""
    if f.site != g.site:
        raise SiteMismatch("convolution needs presheaves on one site")
    site = f.site
    _require_thin(site)
    objs = site.objects()

    def tags_at(u):
        out = []
        for v in objs:
            for w in objs:
                if not site.leq(u, site.tensor_obj(v, w)):
                    continue
                for x in f.value(v):
                    for y in g.value(w):
                        out.append((v, w, x, y))
        return out

    classes = {}
    uf_by_obj = {}
    for u in objs:
        tags = tags_at(u)
        labels = [_day_tag(canon(v), canon(w), x, y) for v, w, x, y in tags]
        uf = UnionFind(labels)
        for v, w, x, y in tags:
            lab = _day_tag(canon(v), canon(w), x, y)
            for v2 in objs:
                if not site.leq(v2, v):
                    continue
                for w2 in objs:
                    if not site.leq(w2, w):
                        continue
                    if not site.leq(u, site.tensor_obj(v2, w2)):
                        continue
                    x2 = f.restrict(v2, v)(x)
                    y2 = g.restrict(w2, w)(y)
                    uf.union(lab, _day_tag(canon(v2), canon(w2), x2, y2))
        uf_by_obj[canon(u)] = uf
        classes[canon(u)] = sorted(
            {uf.find(lab) for lab in labels}, key=label_key
        )

    at = {cu: FinSetObj(reps) for cu, reps in classes.items()}
    res = {}
    for u in objs:
        cu = canon(u)
        for u2 in objs:
            cu2 = canon(u2)
            if cu2 == cu or not site.leq(u2, u):
                continue
            table = {
                rep: uf_by_obj[cu2].find(rep) for rep in classes[cu]
            }
            res[(cu2, cu)] = FinMap(at[cu], at[cu2], table)
    return Presheaf(site, at, res)


def _day_parts(f: Presheaf, g: Presheaf, u):
    """Tag label -> (v, w, x, y) for every factorization of u."""
    site = f.site
    out = {}
    for v in site.objects():
        for w in site.objects():
            if not site.leq(u, site.tensor_obj(v, w)):
                continue
            for x in f.value(v):
                for y in g.value(w):
                    out[_day_tag(canon(v), canon(w), x, y)] = (v, w, x, y)
    return out


def day_projection1(f: Presheaf, g: Presheaf, conv: Presheaf = None):
    """The map (f*g)(u) -> f(u) restricting the left factor down to u."""
    site = f.site
    if not is_semicartesian(site):
        raise NotSemicartesian("convolution projections need u <= v*w <= v")
    if conv is None:
        conv = day_convolve(f, g)
    comps = {}
    for u in site.objects():
        parts = _day_parts(f, g, u)
        table = {}
        for rep in conv.value(u):
            v, _, x, _ = parts[rep]
            table[rep] = f.restrict(u, v)(x)
        comps[canon(u)] = FinMap(conv.value(u), f.value(u), table)
    return PresheafMorphism(conv, f, comps)


def day_projection2(f: Presheaf, g: Presheaf, conv: Presheaf = None):
    """The map (f*g)(u) -> g(u) restricting the right factor down to u."""
    site = f.site
    if not is_semicartesian(site):
        raise NotSemicartesian("convolution projections need u <= v*w <= w")
    if conv is None:
        conv = day_convolve(f, g)
    comps = {}
    for u in site.objects():
        parts = _day_parts(f, g, u)
        table = {}
        for rep in conv.value(u):
            _, w, _, y = parts[rep]
            table[rep] = g.restrict(u, w)(y)
        comps[canon(u)] = FinMap(conv.value(u), g.value(u), table)
    return PresheafMorphism(conv, g, comps)


# ---------------------------------------------------------------------------
# sieves


@dataclass
class Sieve:
    cover: CoverFamily
    presheaf: Presheaf
    canonical: PresheafMorphism


def sieve_of(site: ThinCategory, cover: CoverFamily) -> Sieve:
    """Pointwise coequalizer of the pseudo-pullback legs of a cover.

    At each object w the two parallel maps send the tag (i,j) of an
    arrow into the pseudo-pullback of legs i and j to the tags i and j;
    their coequalizer classes form the sieve's value at w.
    """
    _require_thin(site)
    legs = cover.legs
    target = cover.target
    at, res, uf_by_obj = {}, {}, {}
    for w in site.objects():
        cw = canon(w)
        pieces = [
            FinSetObj(["*"] if site.leq(w, leg.dom) else []) for leg in legs
        ]
        total, _ = finset.coproduct(pieces)
        pair_tags = []
        for i, j in itertools.product(range(len(legs)), repeat=2):
            ppb = pseudo_pullback(site, legs[i], legs[j])
            if site.leq(w, ppb.obj):
                pair_tags.append((i, j))
        pairs = FinSetObj([f"{i},{j}" for i, j in pair_tags])
        first = FinMap(
            pairs, total, {f"{i},{j}": finset.tag_label(i, "*") for i, j in pair_tags}
        )
        second = FinMap(
            pairs, total, {f"{i},{j}": finset.tag_label(j, "*") for i, j in pair_tags}
        )
        quotient, q = finset.coequalizer(first, second)
        at[cw] = quotient
        uf_by_obj[cw] = q
    for u in site.objects():
        cu = canon(u)
        for v in site.objects():
            cv = canon(v)
            if cv == cu or not site.leq(v, u):
                continue
            table = {rep: uf_by_obj[cv](rep) for rep in at[cu]}
            res[(cv, cu)] = FinMap(at[cu], at[cv], table)
    s = Presheaf(site, at, res)
    target_y = yoneda(site, target)
    comps = {}
    for w in site.objects():
        cw = canon(w)
        table = {rep: "*" for rep in at[cw]}
        comps[cw] = FinMap(at[cw], target_y.value(w), table)
    canonical = PresheafMorphism(s, target_y, comps)
    return Sieve(cover, s, canonical)


def is_mono(m: PresheafMorphism) -> bool:
    return m.is_mono()
