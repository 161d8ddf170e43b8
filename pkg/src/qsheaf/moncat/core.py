"""Semicartesian monoidal instances with equalizers.

Three instance families share one interface:

- `ThinCategory`: at most one arrow between objects; backed by a
  quantale, an ordered monoid, or a product of thin instances.
- `FinSetCategory`: finite sets under cartesian product, truncated to a
  generator list of sizes 0..max_size. Structure morphisms are stored
  on the instance and can be overridden, so deliberately broken
  instances can be injected for mutation testing.
- `ProductCategory`: the componentwise pairing of two instances.

On top of the interface: projections out of a tensor, pseudo-pullbacks
(the equalizer of the two projections pushed along a cospan), the
preservation question for tensoring against equalizers, and the
factorization searches used by the coverage axioms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .. import finset
from ..errors import (
    CodomainMismatch,
    DomainMismatch,
    InvalidSpec,
    NotSemicartesian,
    QsheafError,
)
from ..finset import FinMap, FinSetObj, label_key


def canon(obj) -> str:
    """Canonical display string for an object of any instance."""
    if isinstance(obj, FinSetObj):
        return "{" + ",".join(str(x) for x in obj.elements) + "}"
    if isinstance(obj, tuple):
        return "(" + ",".join(canon(x) for x in obj) + ")"
    return str(obj)


def _data_key(data):
    if data is None:
        return ""
    if isinstance(data, FinMap):
        return repr(data)
    if isinstance(data, tuple):
        return "(" + "|".join(_data_key(d.data) for d in data) + ")"
    return repr(data)


class Mor:
    """A morphism handle: domain, codomain, instance-specific payload."""

    __slots__ = ("dom", "cod", "data")

    def __init__(self, dom, cod, data=None):
        object.__setattr__(self, "dom", dom)
        object.__setattr__(self, "cod", cod)
        object.__setattr__(self, "data", data)

    def __setattr__(self, name, value):
        raise AttributeError("Mor is immutable")

    def __eq__(self, other):
        return (
            isinstance(other, Mor)
            and self.dom == other.dom
            and self.cod == other.cod
            and self.data == other.data
        )

    def __hash__(self):
        data = self.data
        if isinstance(data, tuple):
            data = tuple(hash(d) for d in data)
        return hash((canon(self.dom), canon(self.cod), data))

    def key(self):
        return (canon(self.dom), canon(self.cod), _data_key(self.data))

    def __repr__(self):
        return f"Mor({canon(self.dom)} -> {canon(self.cod)})"


class MonoidalCategory:
    """Interface shared by the three instance families."""

    is_thin = False
    is_cartesian = False
    unit_obj = None

    @property
    def unit(self):
        if self.unit_obj is None:
            raise QsheafError("instance has no unit object")
        return self.unit_obj

    def objects(self) -> list:
        raise NotImplementedError

    def hom(self, a, b) -> list:
        raise NotImplementedError

    def identity(self, a) -> Mor:
        raise NotImplementedError

    def compose(self, g: Mor, f: Mor) -> Mor:
        """The composite g after f."""
        raise NotImplementedError

    def tensor_obj(self, a, b):
        raise NotImplementedError

    def tensor_mor(self, f: Mor, g: Mor) -> Mor:
        raise NotImplementedError

    def associator(self, x, y, z) -> Mor:
        raise NotImplementedError

    def left_unitor(self, a) -> Mor:
        raise NotImplementedError

    def right_unitor(self, a) -> Mor:
        raise NotImplementedError

    def braiding(self, a, b):
        return None

    def terminal(self, x) -> Mor:
        """The unique arrow x -> unit; raises if the unit is not terminal."""
        raise NotImplementedError

    def equalizer(self, f: Mor, g: Mor):
        raise NotImplementedError

    def is_iso(self, m: Mor) -> bool:
        raise NotImplementedError

    def factor_through_mono(self, m: Mor, h: Mor):
        """The unique u with m . u = h, or None."""
        raise NotImplementedError

    def solve(self, dom, cod, constraints, limit=None) -> list:
        """All f: dom -> cod with post . f = target for each (post, target)."""
        out = []
        for f in self.hom(dom, cod):
            if all(self.compose(post, f) == target for post, target in constraints):
                out.append(f)
                if limit is not None and len(out) >= limit:
                    break
        return out

    def _check_composable(self, g, f):
        if f.cod != g.dom:
            raise DomainMismatch(
                f"cannot compose {canon(g.dom)} after {canon(f.cod)}"
            )

    def _check_parallel(self, f, g):
        if f.dom != g.dom:
            raise DomainMismatch("parallel pair needs equal domains")
        if f.cod != g.cod:
            raise CodomainMismatch("parallel pair needs equal codomains")


def is_semicartesian(c: MonoidalCategory) -> bool:
    """Unit terminal over the instance's generator objects."""
    try:
        return all(len(c.hom(x, c.unit)) == 1 for x in c.objects())
    except QsheafError:
        return False


# ---------------------------------------------------------------------------
# thin instances


class ThinCategory(MonoidalCategory):
    """A poset with a monotone associative tensor; at most one arrow."""

    is_thin = True

    def __init__(self, elements, leq_pairs, mul, unit=None, quantale=None,
                 components=None):
        self._elements = list(elements)
        self._leq = frozenset(leq_pairs)
        self._mul = dict(mul)
        self.unit_obj = unit
        self.quantale = quantale
        self.components = components
        eset = set(self._elements)
        for (a, b), c in self._mul.items():
            if a not in eset or b not in eset or c not in eset:
                raise InvalidSpec("mul table mentions unknown element")
        for a, b, c in itertools.product(self._elements, repeat=3):
            if self._mul[(self._mul[(a, b)], c)] != self._mul[(a, self._mul[(b, c)])]:
                raise InvalidSpec(f"tensor not associative at ({a},{b},{c})")
        for a, b in self._leq:
            for v in self._elements:
                if not self.leq(self._mul[(v, a)], self._mul[(v, b)]) or not self.leq(
                    self._mul[(a, v)], self._mul[(b, v)]
                ):
                    raise InvalidSpec(f"tensor not monotone at ({a},{b}) with {v}")
        if unit is not None:
            for a in self._elements:
                if self._mul[(unit, a)] != a or self._mul[(a, unit)] != a:
                    raise InvalidSpec(f"unit law fails at {a}")
        self._commutative = all(
            self._mul[(a, b)] == self._mul[(b, a)]
            for a, b in itertools.product(self._elements, repeat=2)
        )
        self.is_cartesian = self._tensor_is_meet()

    @classmethod
    def from_quantale(cls, q):
        return cls(
            q.elements,
            q._leq,
            q._mul,
            unit=q.unit,
            quantale=q,
        )

    @classmethod
    def from_ordered_monoid(cls, elements, leq_pairs, mul, unit):
        closure = {(a, a) for a in elements}
        closure.update(tuple(p) for p in leq_pairs)
        changed = True
        while changed:
            changed = False
            for (a, b), (c, d) in itertools.product(list(closure), repeat=2):
                if b == c and (a, d) not in closure:
                    closure.add((a, d))
                    changed = True
        return cls(elements, closure, mul, unit=unit)

    @classmethod
    def product(cls, s1: "ThinCategory", s2: "ThinCategory"):
        elements = [
            (a, b) for a in s1._elements for b in s2._elements
        ]
        leq = {
            ((a, b), (c, d))
            for (a, b) in elements
            for (c, d) in elements
            if s1.leq(a, c) and s2.leq(b, d)
        }
        mul = {
            ((a, b), (c, d)): (s1.tensor_obj(a, c), s2.tensor_obj(b, d))
            for (a, b) in elements
            for (c, d) in elements
        }
        unit = None
        if s1.unit_obj is not None and s2.unit_obj is not None:
            unit = (s1.unit_obj, s2.unit_obj)
        return cls(elements, leq, mul, unit=unit, components=(s1, s2))

    def _tensor_is_meet(self) -> bool:
        for a, b in itertools.product(self._elements, repeat=2):
            lbs = [
                v for v in self._elements if self.leq(v, a) and self.leq(v, b)
            ]
            m = self._mul[(a, b)]
            if m not in lbs or not all(self.leq(v, m) for v in lbs):
                return False
        return True

    def leq(self, a, b) -> bool:
        return (a, b) in self._leq

    def objects(self):
        return sorted(self._elements, key=canon)

    def hom(self, a, b):
        return [Mor(a, b)] if self.leq(a, b) else []

    def arrow(self, a, b) -> Mor:
        if not self.leq(a, b):
            raise DomainMismatch(f"no arrow {canon(a)} -> {canon(b)}")
        return Mor(a, b)

    def identity(self, a):
        return Mor(a, a)

    def compose(self, g, f):
        self._check_composable(g, f)
        return Mor(f.dom, g.cod)

    def tensor_obj(self, a, b):
        return self._mul[(a, b)]

    def tensor_mor(self, f, g):
        return Mor(self.tensor_obj(f.dom, g.dom), self.tensor_obj(f.cod, g.cod))

    def associator(self, x, y, z):
        lhs = self.tensor_obj(self.tensor_obj(x, y), z)
        rhs = self.tensor_obj(x, self.tensor_obj(y, z))
        assert lhs == rhs
        return Mor(lhs, rhs)

    def left_unitor(self, a):
        return Mor(self.tensor_obj(self.unit, a), a)

    def right_unitor(self, a):
        return Mor(self.tensor_obj(a, self.unit), a)

    def braiding(self, a, b):
        if not self._commutative:
            return None
        return Mor(self.tensor_obj(a, b), self.tensor_obj(b, a))

    def terminal(self, x):
        if not self.leq(x, self.unit):
            raise NotSemicartesian(
                f"unit is not terminal: no arrow from {canon(x)}"
            )
        return Mor(x, self.unit)

    def equalizer(self, f, g):
        self._check_parallel(f, g)
        return f.dom, self.identity(f.dom)

    def is_iso(self, m):
        return m.dom == m.cod

    def factor_through_mono(self, m, h):
        if h.cod != m.cod:
            raise CodomainMismatch("factorization needs a common codomain")
        if self.leq(h.dom, m.dom):
            return Mor(h.dom, m.dom)
        return None

    def __eq__(self, other):
        return (
            isinstance(other, ThinCategory)
            and self._elements == other._elements
            and self._leq == other._leq
            and self._mul == other._mul
            and self.unit_obj == other.unit_obj
        )

    def __hash__(self):
        return hash((tuple(map(canon, self._elements)), self.unit_obj is None))

    def __repr__(self):
        kind = "product thin" if self.components else "thin"
        return f"ThinCategory({kind}, {len(self._elements)} objects)"


# ---------------------------------------------------------------------------
# finite sets under cartesian product


class FinSetCategory(MonoidalCategory):
    """Finite sets and all maps, tensor = cartesian product.

    Generator objects are the canonical sets of sizes 0..max_size; the
    operations are total on arbitrary FinSetObj. Structure morphisms are
    taken from the constructor so broken ones can be injected.
    """

    is_cartesian = True

    def __init__(self, max_size=3, associator_fn=None, braiding_fn=None,
                 left_unitor_fn=None, right_unitor_fn=None, equalizer_fn=None):
        if not 0 <= max_size <= 4:
            raise InvalidSpec("max_size must be between 0 and 4")
        base = [f"s{i}" for i in range(max_size)]
        self._objects = [FinSetObj(base[:k]) for k in range(max_size + 1)]
        self.max_size = max_size
        self.unit_obj = FinSetObj(("*",))
        self._associator_fn = associator_fn
        self._braiding_fn = braiding_fn
        self._left_unitor_fn = left_unitor_fn
        self._right_unitor_fn = right_unitor_fn
        self._equalizer_fn = equalizer_fn

    def objects(self):
        return list(self._objects)

    def hom(self, a, b):
        return [Mor(a, b, m) for m in finset.all_maps(a, b)]

    def identity(self, a):
        return Mor(a, a, finset.identity(a))

    def compose(self, g, f):
        self._check_composable(g, f)
        return Mor(f.dom, g.cod, finset.compose(g.data, f.data))

    def tensor_obj(self, a, b):
        obj, _, _ = finset.product(a, b)
        return obj

    def tensor_mor(self, f, g):
        dom = self.tensor_obj(f.dom, g.dom)
        cod = self.tensor_obj(f.cod, g.cod)
        assignment = {}
        for x in f.dom:
            for y in g.dom:
                assignment[finset.pair_label(x, y)] = finset.pair_label(
                    f.data(x), g.data(y)
                )
        return Mor(dom, cod, FinMap(dom, cod, assignment))

    def associator(self, x, y, z):
        if self._associator_fn is not None:
            return self._associator_fn(self, x, y, z)
        dom = self.tensor_obj(self.tensor_obj(x, y), z)
        cod = self.tensor_obj(x, self.tensor_obj(y, z))
        assignment = {}
        for p in x:
            for q in y:
                for r in z:
                    assignment[
                        finset.pair_label(finset.pair_label(p, q), r)
                    ] = finset.pair_label(p, finset.pair_label(q, r))
        return Mor(dom, cod, FinMap(dom, cod, assignment))

    def braiding(self, a, b):
        if self._braiding_fn is not None:
            return self._braiding_fn(self, a, b)
        dom = self.tensor_obj(a, b)
        cod = self.tensor_obj(b, a)
        assignment = {
            finset.pair_label(x, y): finset.pair_label(y, x) for x in a for y in b
        }
        return Mor(dom, cod, FinMap(dom, cod, assignment))

    def left_unitor(self, a):
        if self._left_unitor_fn is not None:
            return self._left_unitor_fn(self, a)
        dom = self.tensor_obj(self.unit, a)
        assignment = {finset.pair_label("*", x): x for x in a}
        return Mor(dom, a, FinMap(dom, a, assignment))

    def right_unitor(self, a):
        if self._right_unitor_fn is not None:
            return self._right_unitor_fn(self, a)
        dom = self.tensor_obj(a, self.unit)
        assignment = {finset.pair_label(x, "*"): x for x in a}
        return Mor(dom, a, FinMap(dom, a, assignment))

    def terminal(self, x):
        return Mor(x, self.unit, FinMap(x, self.unit, {p: "*" for p in x}))

    def equalizer(self, f, g):
        self._check_parallel(f, g)
        if self._equalizer_fn is not None:
            return self._equalizer_fn(self, f, g)
        sub, incl = finset.equalizer(f.data, g.data)
        return sub, Mor(sub, f.dom, incl)

    def is_iso(self, m):
        return m.data.is_bijective()

    def factor_through_mono(self, m, h):
        if h.cod != m.cod:
            raise CodomainMismatch("factorization needs a common codomain")
        preimage = {}
        for y in m.dom:
            preimage.setdefault(m.data(y), y)
        assignment = {}
        for x in h.dom:
            val = h.data(x)
            if val not in preimage:
                return None
            assignment[x] = preimage[val]
        u = Mor(h.dom, m.dom, FinMap(h.dom, m.dom, assignment))
        if self.compose(m, u) != h:
            return None
        return u

    def solve(self, dom, cod, constraints, limit=None):
        """Pointwise fiber search; exhaustive but never materializes hom."""
        fibers = []
        for x in dom:
            cands = [
                w
                for w in cod
                if all(post.data(w) == target.data(x) for post, target in constraints)
            ]
            if not cands:
                return []
            fibers.append((x, cands))
        out = []
        for combo in itertools.product(*(c for _, c in fibers)):
            assignment = {x: w for (x, _), w in zip(fibers, combo)}
            out.append(Mor(dom, cod, FinMap(dom, cod, assignment)))
            if limit is not None and len(out) >= limit:
                break
        return out

    def __repr__(self):
        return f"FinSetCategory(max_size={self.max_size})"


# ---------------------------------------------------------------------------
# componentwise products


class ProductCategory(MonoidalCategory):
    """The product of two instances; everything is componentwise."""

    def __init__(self, c1: MonoidalCategory, c2: MonoidalCategory):
        self.c1 = c1
        self.c2 = c2
        self.is_thin = c1.is_thin and c2.is_thin
        self.is_cartesian = c1.is_cartesian and c2.is_cartesian
        if c1.unit_obj is not None and c2.unit_obj is not None:
            self.unit_obj = (c1.unit, c2.unit)

    def objects(self):
        return [(a, b) for a in self.c1.objects() for b in self.c2.objects()]

    def _pair(self, m1, m2):
        return Mor((m1.dom, m2.dom), (m1.cod, m2.cod), (m1, m2))

    def hom(self, a, b):
        return [
            self._pair(m1, m2)
            for m1 in self.c1.hom(a[0], b[0])
            for m2 in self.c2.hom(a[1], b[1])
        ]

    def identity(self, a):
        return self._pair(self.c1.identity(a[0]), self.c2.identity(a[1]))

    def compose(self, g, f):
        self._check_composable(g, f)
        return self._pair(
            self.c1.compose(g.data[0], f.data[0]),
            self.c2.compose(g.data[1], f.data[1]),
        )

    def tensor_obj(self, a, b):
        return (self.c1.tensor_obj(a[0], b[0]), self.c2.tensor_obj(a[1], b[1]))

    def tensor_mor(self, f, g):
        return self._pair(
            self.c1.tensor_mor(f.data[0], g.data[0]),
            self.c2.tensor_mor(f.data[1], g.data[1]),
        )

    def associator(self, x, y, z):
        return self._pair(
            self.c1.associator(x[0], y[0], z[0]),
            self.c2.associator(x[1], y[1], z[1]),
        )

    def left_unitor(self, a):
        return self._pair(self.c1.left_unitor(a[0]), self.c2.left_unitor(a[1]))

    def right_unitor(self, a):
        return self._pair(self.c1.right_unitor(a[0]), self.c2.right_unitor(a[1]))

    def braiding(self, a, b):
        b1 = self.c1.braiding(a[0], b[0])
        b2 = self.c2.braiding(a[1], b[1])
        if b1 is None or b2 is None:
            return None
        return self._pair(b1, b2)

    def terminal(self, x):
        return self._pair(self.c1.terminal(x[0]), self.c2.terminal(x[1]))

    def equalizer(self, f, g):
        self._check_parallel(f, g)
        o1, e1 = self.c1.equalizer(f.data[0], g.data[0])
        o2, e2 = self.c2.equalizer(f.data[1], g.data[1])
        return (o1, o2), self._pair(e1, e2)

    def is_iso(self, m):
        return self.c1.is_iso(m.data[0]) and self.c2.is_iso(m.data[1])

    def factor_through_mono(self, m, h):
        u1 = self.c1.factor_through_mono(m.data[0], h.data[0])
        u2 = self.c2.factor_through_mono(m.data[1], h.data[1])
        if u1 is None or u2 is None:
            return None
        return self._pair(u1, u2)

    def solve(self, dom, cod, constraints, limit=None):
        sols1 = self.c1.solve(
            dom[0], cod[0], [(p.data[0], t.data[0]) for p, t in constraints]
        )
        if not sols1:
            return []
        sols2 = self.c2.solve(
            dom[1], cod[1], [(p.data[1], t.data[1]) for p, t in constraints]
        )
        out = []
        for m1 in sols1:
            for m2 in sols2:
                out.append(self._pair(m1, m2))
                if limit is not None and len(out) >= limit:
                    return out
        return out

    def __repr__(self):
        return f"ProductCategory({self.c1!r}, {self.c2!r})"


# ---------------------------------------------------------------------------
# projections and pseudo-pullbacks


def projection1(c: MonoidalCategory, a, b) -> Mor:
    """First projection a (x) b -> a: right unitor after (id (x) !)."""
    return c.compose(c.right_unitor(a), c.tensor_mor(c.identity(a), c.terminal(b)))


def projection2(c: MonoidalCategory, a, b) -> Mor:
    """Second projection a (x) b -> b: left unitor after (! (x) id)."""
    return c.compose(c.left_unitor(b), c.tensor_mor(c.terminal(a), c.identity(b)))


@dataclass(frozen=True)
class PseudoPullback:
    obj: object
    into: Mor  # the equalizer mono into the tensor
    p1: Mor
    p2: Mor
    tensor: object


def pseudo_pullback(c: MonoidalCategory, f: Mor, g: Mor) -> PseudoPullback:
    """Equalizer of f . proj1 and g . proj2 over dom(f) (x) dom(g)."""
    if f.cod != g.cod:
        raise CodomainMismatch("pseudo-pullback needs a cospan")
    t = c.tensor_obj(f.dom, g.dom)
    pi1 = projection1(c, f.dom, g.dom)
    pi2 = projection2(c, f.dom, g.dom)
    obj, into = c.equalizer(c.compose(f, pi1), c.compose(g, pi2))
    return PseudoPullback(
        obj=obj,
        into=into,
        p1=c.compose(pi1, into),
        p2=c.compose(pi2, into),
        tensor=t,
    )


def tensor_preserves_equalizers(c: MonoidalCategory, u, f: Mor, g: Mor):
    """Compare u (x) Eq(f,g) with Eq(id_u (x) f, id_u (x) g).

    Returns (preserved, comparison morphism). The comparison is the
    unique factorization of id_u (x) e through the second equalizer;
    preservation means it is invertible.
    """
    _, e = c.equalizer(f, g)
    id_u = c.identity(u)
    _, e2 = c.equalizer(c.tensor_mor(id_u, f), c.tensor_mor(id_u, g))
    gamma = c.factor_through_mono(e2, c.tensor_mor(id_u, e))
    if gamma is None:
        return False, None
    return c.is_iso(gamma), gamma


def exists_l_r_factorizations(c: MonoidalCategory, legs, v):
    """Search for the two tensor-stability factorizations for each leg pair.

    For legs f_i, f_j into a common object and any v, looks for
    l from the pseudo-pullback of (id_v (x) f_i, id_v (x) f_j) into
    v (x) (pseudo-pullback of f_i, f_j) commuting with both projections,
    and the mirror-image r. Returns (ok, details).
    """
    legs = list(legs)
    if not legs:
        return True, []
    target_cod = legs[0].cod
    if any(m.cod != target_cod for m in legs):
        raise CodomainMismatch("legs must share a codomain")
    id_v = c.identity(v)
    details = []
    ok = True
    for i, j in itertools.product(range(len(legs)), repeat=2):
        base = pseudo_pullback(c, legs[i], legs[j])
        left = pseudo_pullback(
            c, c.tensor_mor(id_v, legs[i]), c.tensor_mor(id_v, legs[j])
        )
        l_target = c.tensor_obj(v, base.obj)
        l_sols = c.solve(
            left.obj,
            l_target,
            [
                (c.tensor_mor(id_v, base.p1), left.p1),
                (c.tensor_mor(id_v, base.p2), left.p2),
            ],
            limit=1,
        )
        right = pseudo_pullback(
            c, c.tensor_mor(legs[i], id_v), c.tensor_mor(legs[j], id_v)
        )
        r_target = c.tensor_obj(base.obj, v)
        r_sols = c.solve(
            right.obj,
            r_target,
            [
                (c.tensor_mor(base.p1, id_v), right.p1),
                (c.tensor_mor(base.p2, id_v), right.p2),
            ],
            limit=1,
        )
        found = bool(l_sols) and bool(r_sols)
        ok = ok and found
        details.append(
            {
                "pair": (i, j),
                "l": l_sols[0] if l_sols else None,
                "r": r_sols[0] if r_sols else None,
            }
        )
    return ok, details


def trivial_equalizer(instance, f, g):
    """A deliberately wrong equalizer: the whole object with identity.

    Used to build adversarial instances on which the projection
    factorizations genuinely fail to exist.
    """
    return f.dom, instance.identity(f.dom)
