"""Finite weakly transitive Kripke models.

Worlds are dense indices carrying string labels; the accessibility relation
is stored as one successor bitmask per world, and valuations map proposition
names to bitmasks.  Models are immutable after construction; the cluster
structure is computed lazily and cached.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional, Sequence

STRICT = "strict"
WEAK = "weak"
NONE = "none"


class ModelFormatError(ValueError):
    pass


def weak_closure_masks(succ: Sequence[int]) -> tuple[int, ...]:
    """Least weakly transitive relation containing the input: whenever
    a -> b -> c with a != c, add a -> c.  Existing reflexive edges are kept."""
    succ = list(succ)
    n = len(succ)
    changed = True
    while changed:
        changed = False
        for a in range(n):
            add = 0
            rest = succ[a]
            while rest:
                b = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                add |= succ[b]
            add &= ~(1 << a)
            if add & ~succ[a]:
                succ[a] |= add
                changed = True
    return tuple(succ)


class KripkeModel:
    def __init__(self, labels: Sequence[str], edges: Iterable[tuple[int, int]],
                 valuation: Optional[Mapping[str, Iterable[int]]] = None,
                 _masks: Optional[tuple] = None):
        self.labels = tuple(labels)
        self.n = len(self.labels)
        if len(set(self.labels)) != self.n:
            raise ModelFormatError("duplicate world labels")
        if _masks is not None:
            succ, val = _masks
            self.succ = tuple(succ)
            self.val = dict(val)
        else:
            succ = [0] * self.n
            for a, b in edges:
                succ[a] |= 1 << b
            self.succ = tuple(succ)
            self.val = {}
            for name, worlds in (valuation or {}).items():
                mask = 0
                for w in worlds:
                    mask |= 1 << w
                self.val[name] = mask
        self._pred = None
        self._clusters = None
        self._cluster_id = None
        self._above = None

    # -- basic views ---------------------------------------------------

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def worlds(self) -> range:
        return range(self.n)

    def val_mask(self, name: str) -> int:
        return self.val.get(name, 0)

    def pred(self) -> tuple[int, ...]:
        if self._pred is None:
            pred = [0] * self.n
            for a in range(self.n):
                rest = self.succ[a]
                while rest:
                    b = (rest & -rest).bit_length() - 1
                    rest &= rest - 1
                    pred[b] |= 1 << a
            self._pred = tuple(pred)
        return self._pred

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ModelFormatError(f"unknown world label {label!r}") from None

    def mask_labels(self, mask: int) -> list[str]:
        return [self.labels[w] for w in range(self.n) if mask >> w & 1]

    def __repr__(self):
        return f"KripkeModel(n={self.n})"

    # -- derived structure ---------------------------------------------

    def clusters(self) -> tuple[tuple[int, ...], ...]:
        """Partition into maximal clusters: u and v share one iff they are
        equal or related in both directions."""
        if self._clusters is None:
            parent = list(range(self.n))

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for u in range(self.n):
                for v in range(u + 1, self.n):
                    if self.succ[u] >> v & 1 and self.succ[v] >> u & 1:
                        parent[find(u)] = find(v)
            groups: dict[int, list[int]] = {}
            for w in range(self.n):
                groups.setdefault(find(w), []).append(w)
            clusters = tuple(tuple(sorted(g)) for g in
                             sorted(groups.values(), key=lambda g: g[0]))
            cid = [0] * self.n
            for i, c in enumerate(clusters):
                for w in c:
                    cid[w] = i
            self._clusters = clusters
            self._cluster_id = tuple(cid)
        return self._clusters

    def cluster_id(self, w: int) -> int:
        self.clusters()
        return self._cluster_id[w]

    def cluster_of(self, w: int) -> tuple[int, ...]:
        return self.clusters()[self.cluster_id(w)]

    def cluster_mask(self, w: int) -> int:
        mask = 0
        for u in self.cluster_of(w):
            mask |= 1 << u
        return mask

    def cluster_above(self) -> tuple[frozenset[int], ...]:
        """above[i] = ids of clusters strictly above cluster i (transitive)."""
        if self._above is None:
            clusters = self.clusters()
            k = len(clusters)
            above = [set() for _ in range(k)]
            for i in range(k):
                for j in range(k):
                    if i != j and self.succ[clusters[i][0]] >> clusters[j][0] & 1:
                        above[i].add(j)
            self._above = tuple(frozenset(s) for s in above)
        return self._above

    # -- construction helpers --------------------------------------------

    def close(self) -> "KripkeModel":
        return KripkeModel(self.labels, (), _masks=(weak_closure_masks(self.succ), self.val))

    def restrict(self, mask: int) -> "KripkeModel":
        """Submodel induced by the worlds in `mask` (labels preserved)."""
        keep = [w for w in range(self.n) if mask >> w & 1]
        remap = {w: i for i, w in enumerate(keep)}
        succ = []
        for w in keep:
            m = 0
            rest = self.succ[w] & mask
            while rest:
                b = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                m |= 1 << remap[b]
            succ.append(m)
        val = {}
        for name, vm in self.val.items():
            m = 0
            for w in keep:
                if vm >> w & 1:
                    m |= 1 << remap[w]
            val[name] = m
        return KripkeModel([self.labels[w] for w in keep], (), _masks=(succ, val))

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        edges = []
        for a in range(self.n):
            rest = self.succ[a]
            while rest:
                b = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                edges.append([self.labels[a], self.labels[b]])
        edges.sort()
        val = {name: sorted(self.mask_labels(mask))
               for name, mask in sorted(self.val.items()) if mask}
        return {"worlds": list(self.labels), "edges": edges, "val": val}

    @classmethod
    def from_dict(cls, data: Mapping) -> "KripkeModel":
        try:
            labels = list(data["worlds"])
        except (KeyError, TypeError):
            raise ModelFormatError("model object needs a 'worlds' list") from None
        index = {lab: i for i, lab in enumerate(labels)}
        if len(index) != len(labels):
            raise ModelFormatError("duplicate world labels")
        edges = []
        for pair in data.get("edges", ()):
            if len(pair) != 2 or pair[0] not in index or pair[1] not in index:
                raise ModelFormatError(f"bad edge {pair!r}")
            edges.append((index[pair[0]], index[pair[1]]))
        val = {}
        for name, worlds in (data.get("val") or {}).items():
            ws = []
            for lab in worlds:
                if lab not in index:
                    raise ModelFormatError(f"valuation of {name!r} mentions unknown world {lab!r}")
                ws.append(index[lab])
            val[name] = ws
        model = cls(labels, edges, val)
        if data.get("close"):
            model = model.close()
        return model


def validate_wk4(model: KripkeModel) -> Optional[tuple[int, int, int]]:
    """None if weakly transitive, otherwise a violating triple (a, b, c)."""
    for a in range(model.n):
        rest = model.succ[a]
        while rest:
            b = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            missing = model.succ[b] & ~model.succ[a] & ~(1 << a)
            if missing:
                c = (missing & -missing).bit_length() - 1
                return (a, b, c)
    return None


def cluster_le(model: KripkeModel, lower: Iterable[int], upper: Iterable[int]) -> str:
    """Order between world sets: STRICT if every upper world is strictly above
    some lower world, else WEAK for the reflexive version, else NONE."""
    lower = list(lower)
    upper = list(upper)
    strict = all(any(model.succ[u] >> v & 1 and not model.succ[v] >> u & 1
                     for u in lower) for v in upper)
    if strict:
        return STRICT
    weak = all(any(u == v or model.succ[u] >> v & 1 for u in lower)
               for v in upper)
    return WEAK if weak else NONE


def _cluster_heights(model: KripkeModel, counted: frozenset[int]) -> list[int]:
    """Longest chain of `counted` clusters strictly above each cluster."""
    above = model.cluster_above()
    k = len(model.clusters())
    memo: dict[int, int] = {}

    def height(i: int) -> int:
        got = memo.get(i)
        if got is not None:
            return got
        best = 0
        for j in above[i]:
            best = max(best, height(j) + 1 if j in counted else height(j))
        memo[i] = best
        return best

    return [height(i) for i in range(k)]


def depth(model: KripkeModel, worlds: Iterable[int]) -> int:
    """Length of the longest strict cluster chain above the given set."""
    heights = _cluster_heights(model, frozenset(range(len(model.clusters()))))
    ws = list(worlds)
    if not ws:
        return 0
    return max(heights[model.cluster_id(w)] for w in ws)


# ---------------------------------------------------------------------------
# stacking and unions


def _merge_labels(parts: Sequence[Sequence[str]]) -> list[str]:
    seen: set[str] = set()
    out = []
    for labels in parts:
        for lab in labels:
            new = lab
            k = 1
            while new in seen:
                new = f"{lab}.{k}"
                k += 1
            seen.add(new)
            out.append(new)
    return out


def disjoint_union(parts: Sequence[KripkeModel]) -> KripkeModel:
    labels = _merge_labels([p.labels for p in parts])
    succ = []
    val: dict[str, int] = {}
    offset = 0
    for p in parts:
        succ.extend(m << offset for m in p.succ)
        for name, mask in p.val.items():
            val[name] = val.get(name, 0) | (mask << offset)
        offset += p.n
    return KripkeModel(labels, (), _masks=(succ, val))


def stack(upper: KripkeModel, lower: KripkeModel) -> KripkeModel:
    """Place `lower` underneath `upper`: every lower world sees every upper
    world, both internal relations and valuations are preserved."""
    labels = _merge_labels([lower.labels, upper.labels])
    up_all = upper.full_mask << lower.n
    succ = [m | up_all for m in lower.succ]
    succ.extend(m << lower.n for m in upper.succ)
    val: dict[str, int] = dict(lower.val)
    for name, mask in upper.val.items():
        val[name] = val.get(name, 0) | (mask << lower.n)
    return KripkeModel(labels, (), _masks=(succ, val))


# ---------------------------------------------------------------------------
# canonical clusters

ABSENT = "absent"
ONE = "one"
SAT = "sat"


@dataclass(frozen=True, order=True)
class CanonicalCluster:
    """A cluster up to bisimulation: per propositional valuation, either one
    irreflexive world or a saturated class (realized as two irreflexive
    worlds, so every smaller multiplicity embeds as a subcluster)."""

    props: tuple[str, ...]
    entries: tuple[tuple[tuple[str, ...], str], ...]

    def multiplicity(self, valuation: Iterable[str]) -> str:
        key = tuple(sorted(valuation))
        for val, mult in self.entries:
            if val == key:
                return mult
        return ABSENT

    def valuations(self) -> list[frozenset[str]]:
        return [frozenset(val) for val, _ in self.entries]

    def realize(self) -> KripkeModel:
        labels = []
        vals: list[tuple[str, ...]] = []
        for i, (val, mult) in enumerate(self.entries):
            copies = 1 if mult == ONE else 2
            for j in range(copies):
                labels.append(f"c{i}" if copies == 1 else f"c{i}{'ab'[j]}")
                vals.append(val)
        n = len(labels)
        edges = [(a, b) for a in range(n) for b in range(n) if a != b]
        valuation = {p: [w for w in range(n) if p in vals[w]] for p in self.props}
        return KripkeModel(labels, edges, valuation)


def enumerate_canonical_clusters(props: Iterable[str], cap: int = 20000) -> list[CanonicalCluster]:
    props = tuple(sorted(props))
    count = 3 ** (2 ** len(props)) - 1
    if count > cap:
        raise ClusterEnumerationError(
            f"{count} canonical clusters over {len(props)} atoms exceeds cap {cap}")
    valuations = [tuple(sorted(c)) for r in range(len(props) + 1)
                  for c in itertools.combinations(props, r)]
    valuations.sort()
    out = []
    for mults in itertools.product((ABSENT, ONE, SAT), repeat=len(valuations)):
        entries = tuple((val, m) for val, m in zip(valuations, mults) if m != ABSENT)
        if entries:
            out.append(CanonicalCluster(props, entries))
    out.sort()
    return out


class ClusterEnumerationError(RuntimeError):
    pass


def canonical_of_cluster(model: KripkeModel, worlds: Iterable[int],
                         props: Iterable[str]) -> CanonicalCluster:
    props = tuple(sorted(props))
    groups: dict[tuple[str, ...], list[int]] = {}
    for w in worlds:
        val = tuple(sorted(p for p in props if model.val_mask(p) >> w & 1))
        groups.setdefault(val, []).append(w)
    entries = []
    for val in sorted(groups):
        ws = groups[val]
        if len(ws) == 1 and not model.succ[ws[0]] >> ws[0] & 1:
            entries.append((val, ONE))
        else:
            entries.append((val, SAT))
    return CanonicalCluster(props, tuple(entries))


# ---------------------------------------------------------------------------
# model generation


def _permuted_relation(succ: Sequence[int], perm: Sequence[int]) -> tuple[int, ...]:
    n = len(succ)
    out = [0] * n
    for a in range(n):
        for b in range(n):
            if succ[a] >> b & 1:
                out[perm[a]] |= 1 << perm[b]
    return tuple(out)


def _wk4_relations(n: int) -> list[tuple[int, ...]]:
    """All weakly transitive successor-mask tuples on n labeled worlds."""
    rels = []
    for bits in range(1 << (n * n)):
        succ = tuple((bits >> (a * n)) & ((1 << n) - 1) for a in range(n))
        ok = True
        for a in range(n):
            rest = succ[a]
            while rest and ok:
                b = (rest & -rest).bit_length() - 1
                rest &= rest - 1
                if succ[b] & ~succ[a] & ~(1 << a):
                    ok = False
            if not ok:
                break
        if ok:
            rels.append(succ)
    return rels


_wk4_cache: dict[int, list[tuple[tuple[int, ...], list[tuple[int, ...]]]]] = {}


def _wk4_canonical(n: int) -> list[tuple[tuple[int, ...], list[tuple[int, ...]]]]:
    """Canonical wK4 relations on n worlds with their automorphism groups."""
    if n not in _wk4_cache:
        perms = list(itertools.permutations(range(n)))
        seen: set[tuple[int, ...]] = set()
        out = []
        for succ in _wk4_relations(n):
            images = [_permuted_relation(succ, p) for p in perms]
            canon = min(images)
            if canon in seen:
                continue
            seen.add(canon)
            auts = [p for p, img in zip(perms, [_permuted_relation(canon, p) for p in perms])
                    if img == canon]
            out.append((canon, auts))
        _wk4_cache[n] = out
    return _wk4_cache[n]


def enumerate_models(props: Iterable[str], max_worlds: int,
                     guard: int = 6) -> Iterator[KripkeModel]:
    """All weakly transitive models with 1..max_worlds worlds over the given
    atoms, up to isomorphism.  Deterministic order."""
    props = tuple(sorted(props))
    if max_worlds > guard:
        raise ClusterEnumerationError(
            f"exhaustive enumeration capped at {guard} worlds")
    for n in range(1, max_worlds + 1):
        labels = [str(i) for i in range(n)]
        for succ, auts in _wk4_canonical(n):
            seen_vals: set[tuple[int, ...]] = set()
            for masks in itertools.product(range(1 << n), repeat=len(props)):
                canon = min(tuple(_permute_mask(m, p, n) for m in masks)
                            for p in auts)
                if canon in seen_vals:
                    continue
                seen_vals.add(canon)
                val = {p: [w for w in range(n) if canon[i] >> w & 1]
                       for i, p in enumerate(props)}
                yield KripkeModel(labels, _edges_of(succ), val)


def _permute_mask(mask: int, perm: Sequence[int], n: int) -> int:
    out = 0
    for w in range(n):
        if mask >> w & 1:
            out |= 1 << perm[w]
    return out


def _edges_of(succ: Sequence[int]) -> list[tuple[int, int]]:
    edges = []
    for a in range(len(succ)):
        rest = succ[a]
        while rest:
            b = (rest & -rest).bit_length() - 1
            rest &= rest - 1
            edges.append((a, b))
    return edges


def random_model(props: Iterable[str], size: int, seed: int) -> KripkeModel:
    """Seed-deterministic random weakly transitive model (closure applied)."""
    rng = random.Random(seed)
    props = tuple(sorted(props))
    density = rng.uniform(0.08, 0.45)
    succ = [0] * size
    for a in range(size):
        for b in range(size):
            if rng.random() < density:
                succ[a] |= 1 << b
    succ = weak_closure_masks(succ)
    val = {p: [w for w in range(size) if rng.random() < 0.5] for p in props}
    return KripkeModel([str(i) for i in range(size)], _edges_of(succ), val)
