"""Finite sets with chosen limits and colimits.

Objects are finite sets of string or integer labels, kept in a
canonical sorted order. Maps are total assignments. Each construction
(equalizer, coequalizer, binary product, pullback, finite coproduct)
returns the constructed object together with its structure maps; the
universal properties are audited exhaustively in the test suite via
`all_maps`.

Constructed labels are strings: pairs become "(a,b)", tagged copies
become "i:a", quotient classes are named after their least member.
"""

from __future__ import annotations

import itertools

from .errors import CodomainMismatch, DomainMismatch, InvalidSpec

Label = str | int


def label_key(label):
    """Sort key placing integer labels before string labels."""
    if isinstance(label, bool) or not isinstance(label, (int, str)):
        raise InvalidSpec(f"labels must be str or int, got {label!r}")
    if isinstance(label, int):
        return (0, label, "")
    return (1, 0, label)


class FinSetObj:
    """A finite set of distinct labels in canonical sorted order."""

    __slots__ = ("elements",)

    def __init__(self, labels):
        elems = tuple(sorted(labels, key=label_key))
        if len(set(elems)) != len(elems):
            raise InvalidSpec(f"duplicate labels in {elems!r}")
        object.__setattr__(self, "elements", elems)

    def __setattr__(self, name, value):
        raise AttributeError("FinSetObj is immutable")

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, label):
        return label in self.elements

    def __eq__(self, other):
        return isinstance(other, FinSetObj) and self.elements == other.elements

    def __hash__(self):
        return hash(self.elements)

    def __repr__(self):
        inner = ",".join(str(x) for x in self.elements)
        return f"FinSetObj({{{inner}}})"


EMPTY = FinSetObj(())


class FinMap:
    """A total map between two FinSetObj, given by an assignment dict."""

    __slots__ = ("dom", "cod", "assignment", "_key")

    def __init__(self, dom: FinSetObj, cod: FinSetObj, assignment: dict):
        if set(assignment) != set(dom.elements):
            raise DomainMismatch(
                f"assignment keys {sorted(assignment, key=label_key)} "
                f"do not match domain {dom!r}"
            )
        for x, y in assignment.items():
            if y not in cod:
                raise CodomainMismatch(f"value {y!r} at {x!r} not in codomain {cod!r}")
        object.__setattr__(self, "dom", dom)
        object.__setattr__(self, "cod", cod)
        object.__setattr__(self, "assignment", dict(assignment))
        key = tuple(assignment[x] for x in dom.elements)
        object.__setattr__(self, "_key", (dom.elements, cod.elements, key))

    def __setattr__(self, name, value):
        raise AttributeError("FinMap is immutable")

    def __call__(self, x):
        try:
            return self.assignment[x]
        except KeyError:
            raise DomainMismatch(f"{x!r} not in domain of {self!r}") from None

    def __eq__(self, other):
        return isinstance(other, FinMap) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __repr__(self):
        pairs = ",".join(f"{x}->{self.assignment[x]}" for x in self.dom.elements)
        return f"FinMap({pairs})"

    def then(self, g: "FinMap") -> "FinMap":
        """Diagrammatic composite: self followed by g."""
        return compose(g, self)

    def is_injective(self) -> bool:
        return len(set(self.assignment.values())) == len(self.dom)

    def is_surjective(self) -> bool:
        return set(self.assignment.values()) == set(self.cod.elements)

    def is_bijective(self) -> bool:
        return self.is_injective() and self.is_surjective()

    def inverse(self) -> "FinMap":
        if not self.is_bijective():
            raise DomainMismatch(f"{self!r} is not invertible")
        return FinMap(self.cod, self.dom, {y: x for x, y in self.assignment.items()})


def identity(a: FinSetObj) -> FinMap:
    return FinMap(a, a, {x: x for x in a})


def compose(g: FinMap, f: FinMap) -> FinMap:
    """The composite g after f."""
    if f.cod != g.dom:
        raise DomainMismatch(f"cannot compose: {f.cod!r} != {g.dom!r}")
    return FinMap(f.dom, g.cod, {x: g(f(x)) for x in f.dom})


def all_maps(a: FinSetObj, b: FinSetObj):
    """Every map a -> b, in deterministic order. |b|^|a| of them."""
    if len(a) == 0:
        yield FinMap(a, b, {})
        return
    if len(b) == 0:
        return
    for values in itertools.product(b.elements, repeat=len(a)):
        yield FinMap(a, b, dict(zip(a.elements, values)))


def pair_label(x, y) -> str:
    return f"({x},{y})"


def tag_label(i: int, x) -> str:
    return f"{i}:{x}"


def _check_parallel(f: FinMap, g: FinMap):
    if f.dom != g.dom:
        raise DomainMismatch(f"parallel pair needs equal domains: {f.dom!r}, {g.dom!r}")
    if f.cod != g.cod:
        raise CodomainMismatch(
            f"parallel pair needs equal codomains: {f.cod!r}, {g.cod!r}"
        )


def equalizer(f: FinMap, g: FinMap):
    """Equalizer of a parallel pair: (subset object, inclusion map)."""
    _check_parallel(f, g)
    sub = FinSetObj([x for x in f.dom if f(x) == g(x)])
    return sub, FinMap(sub, f.dom, {x: x for x in sub})


class UnionFind:
    """Union-find over labels; representatives are least by label_key."""

    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x, y):
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return
        if label_key(ry) < label_key(rx):
            rx, ry = ry, rx
        self.parent[ry] = rx

    def classes(self) -> dict:
        """Map each item to its least-label representative."""
        return {x: self.find(x) for x in self.parent}


def coequalizer(f: FinMap, g: FinMap):
    """Coequalizer of a parallel pair: (quotient object, projection map).

    Classes are labeled by their least member.
    """
    _check_parallel(f, g)
    uf = UnionFind(f.cod.elements)
    for x in f.dom:
        uf.union(f(x), g(x))
    reps = uf.classes()
    quo = FinSetObj(sorted(set(reps.values()), key=label_key))
    return quo, FinMap(f.cod, quo, reps)


def product(a: FinSetObj, b: FinSetObj):
    """Binary product with canonical pair labels: (object, proj1, proj2)."""
    labels, p1, p2 = [], {}, {}
    for x in a:
        for y in b:
            lab = pair_label(x, y)
            labels.append(lab)
            p1[lab] = x
            p2[lab] = y
    if len(set(labels)) != len(labels):
        raise InvalidSpec("pair labels collide; use simpler element labels")
    obj = FinSetObj(labels)
    return obj, FinMap(obj, a, p1), FinMap(obj, b, p2)


def pullback(f: FinMap, g: FinMap):
    """Pullback of f: A -> C, g: B -> C: (object, to A, to B)."""
    if f.cod != g.cod:
        raise CodomainMismatch(f"pullback needs a cospan: {f.cod!r} != {g.cod!r}")
    labels, p1, p2 = [], {}, {}
    for x in f.dom:
        for y in g.dom:
            if f(x) == g(y):
                lab = pair_label(x, y)
                labels.append(lab)
                p1[lab] = x
                p2[lab] = y
    obj = FinSetObj(labels)
    return obj, FinMap(obj, f.dom, p1), FinMap(obj, g.dom, p2)


def coproduct(objs: list):
    """Finite coproduct with tagged labels: (object, list of injections)."""
    labels = []
    for i, a in enumerate(objs):
        labels.extend(tag_label(i, x) for x in a)
    obj = FinSetObj(labels)
    injections = [
        FinMap(a, obj, {x: tag_label(i, x) for x in a}) for i, a in enumerate(objs)
    ]
    return obj, injections
