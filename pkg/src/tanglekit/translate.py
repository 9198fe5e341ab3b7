"""Translation of mu-calculus formulas into the tangle language.

The construction works over a closure set Sigma.  A *pair* summarizes a
rooted semifinal model by its root cluster (up to bisimulation) and the set
of depth facts visible strictly above the root; pairs are enumerated bottom
up by stacking a canonical cluster under disjoint unions of already-realized
witnesses, so every pair carries a recipe for a concrete witness model.
*Chains* are strictly descending sequences of pairs subject to a
non-collapse condition, and the structural formulas built over them pin
down, inside the tangle language, which pairs and chains sit above a world.
The characteristic formula of a member is a disjunction over all root
situations in which it holds.

Scaling notes, all semantically transparent:

- Closure members are used up to identity of their closed forms, with a
  fixed point further identified with its unfolding; facts of identified
  members coincide in every model, so tables and formulas only shrink.
- Root truths of a pair are computed from the cluster block plus
  "true somewhere strictly above" bits for the finite set of closed
  subformula instances, instead of model-checking the assembled witness;
  the witness itself stays available as a recipe (`materialize_witness`)
  and `verify_pair` replays the summary computation against it.
- Semi-rooted chains are not materialized one by one: their contribution to
  the split formula is grouped per (prefix chain, root cluster), with the
  disjunction over root-fact sets collapsed through the fact formulas, which
  are constant on clusters.
"""

from __future__ import annotations

from typing import Iterable, Optional

from . import formulas as fm
from . import semantics as sem
from .formulas import MuFormula, TangleFormula
from .models import (ONE, SAT, CanonicalCluster, KripkeModel, disjoint_union,
                     enumerate_canonical_clusters, stack)

CHAIN_STRICT = "strict"
CHAIN_REFL = "refl"
CHAIN_NONE = "none"


class TranslationGuardError(RuntimeError):
    def __init__(self, table: str, detail: str):
        super().__init__(f"{table} guard exceeded: {detail}")
        self.table = table


class TranslationGuards:
    def __init__(self, max_depth: int = 16, max_pairs: int = 30000,
                 max_thetas: int = 30000, max_chains: int = 30000,
                 max_witness_worlds: int = 200000):
        self.max_depth = max_depth
        self.max_pairs = max_pairs
        self.max_thetas = max_thetas
        self.max_chains = max_chains
        self.max_witness_worlds = max_witness_worlds


class SatPair:
    """Canonical root cluster plus the depth facts strictly above it.

    `truths` holds, per root valuation class, the member representatives
    true there; `sky` is the bitmask of closed-instance formulas true
    somewhere in the whole witness; `components` is the witness recipe."""

    __slots__ = ("cluster", "theta", "depth", "components", "final", "truths",
                 "theta_c", "sky", "_witness")

    def __init__(self, cluster, theta, depth, components, final, truths,
                 theta_c, sky):
        self.cluster = cluster
        self.theta = theta
        self.depth = depth
        self.components = components
        self.final = final
        self.truths = truths
        self.theta_c = theta_c
        self.sky = sky
        self._witness = None

    def satisfied_somewhere(self, member: MuFormula) -> bool:
        return any(member in tr for tr in self.truths.values())

    def __repr__(self):
        kind = "sat" if self.final else "semi"
        return f"SatPair(depth={self.depth}, {kind}, |theta|={len(self.theta)})"


class Chain:
    """Witnessing chain: a satisfaction pair extending a shorter chain
    (parent is None for depth 0).  Index i sits at depth i; the root is the
    deepest pair."""

    __slots__ = ("parent", "root", "depth")

    def __init__(self, parent: Optional["Chain"], root: SatPair):
        self.parent = parent
        self.root = root
        self.depth = 0 if parent is None else parent.depth + 1

    def pairs(self) -> tuple[SatPair, ...]:
        out = []
        c: Optional[Chain] = self
        while c is not None:
            out.append(c.root)
            c = c.parent
        return tuple(reversed(out))

    def __repr__(self):
        return f"Chain(depth={self.depth})"


class _Block:
    """Root-cluster realization: all-irreflexive mutually related worlds."""

    __slots__ = ("vals", "others", "full", "val_bits")

    def __init__(self, cluster: CanonicalCluster):
        vals = []
        for val, mult in cluster.entries:
            copies = 1 if mult == ONE else 2
            vals.extend([frozenset(val)] * copies)
        n = len(vals)
        self.vals = vals
        self.full = (1 << n) - 1
        self.others = [self.full & ~(1 << w) for w in range(n)]
        self.val_bits = {}
        for w, val in enumerate(vals):
            for p in val:
                self.val_bits[p] = self.val_bits.get(p, 0) | (1 << w)


class Translator:
    """Pair and chain tables for one closure, plus the structural formulas."""

    def __init__(self, sigma: fm.SigmaClosure,
                 guards: Optional[TranslationGuards] = None):
        self.sigma = sigma
        self.guards = guards or TranslationGuards()
        self.atoms = tuple(sorted(sigma.atoms))
        self.clusters = enumerate_canonical_clusters(self.atoms)
        self.rep_of, self.members = self._dedupe_members()
        self._member_index = {m: i for i, m in enumerate(self.members)}
        self._floors = {m: fm.floor(m) for m in self.members}
        self._kindex: dict[MuFormula, int] = {}
        self._kpos: list[MuFormula] = []
        self._closing_memo: dict = {}
        self._collect_memo: set = set()
        self._build_k()
        self.pairs: list[dict[tuple, SatPair]] = []
        self.sat_pairs: list[list[SatPair]] = []
        self.semi_pairs: list[list[SatPair]] = []
        self.chains: list[list[Chain]] = []
        self._semi_split: list[list[TangleFormula]] = []
        self._semi_counts: list[int] = []
        self._lattice: list[dict[frozenset, tuple[SatPair, ...]]] = []
        self._stack_bisim_memo: dict[tuple, bool] = {}
        self._tau_memo: dict = {}
        self._a_memo: dict = {}
        self._slice_memo: dict = {}
        self._tau_chain_memo: dict = {}
        self._alpha_memo: dict = {}
        self._delta_memo: dict = {}
        self._depth_memo: dict = {}
        self._split_memo: dict = {}
        self._options_memo: dict = {}
        self._sibling_memo: dict = {}
        self._group_or_memo: dict = {}
        self._built = False

    # -- member identification ------------------------------------------------

    def _dedupe_members(self) -> tuple[dict[MuFormula, MuFormula], tuple[MuFormula, ...]]:
        """Identify members whose closed forms coincide, also identifying a
        fixed point with its one-step unfolding (valid on every model).
        Identification respects the reflexive-modal prefix and negation."""
        parent: dict = {}

        def find(x):
            while parent.setdefault(x, x) is not x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra is not rb:
                parent[ra] = rb

        cores = set()
        floored = {}
        for m in self.sigma:
            f = fm.floor(m)
            floored[m] = f
            word, core = fm.split_prefix(f)
            cores.add(core)
            cores.add(fm.negate(core))
        for core in list(cores):
            if core.kind in (fm.MU, fm.NU):
                unfolded = fm.unfold_fixpoint(core)
                if unfolded in cores:
                    union(unfolded, core)
                    union(fm.negate(unfolded), fm.negate(core))
        # rebuild each member's identity from (prefix word, core class)
        keyed: dict[tuple, list[MuFormula]] = {}
        for m in self.sigma:
            word, core = fm.split_prefix(floored[m])
            keyed.setdefault((word, find(core)), []).append(m)
        rep_of: dict[MuFormula, MuFormula] = {}
        reps = []
        for _, group in sorted(keyed.items(),
                               key=lambda kv: min((fm.size(g), fm.print_mu(g)) for g in kv[1])):
            rep = min(group, key=lambda g: (fm.size(g), fm.print_mu(g)))
            reps.append(rep)
            for g in group:
                rep_of[g] = rep
        return rep_of, tuple(reps)

    # -- closed-instance set and block evaluation ------------------------------

    def _closing(self, f: MuFormula, env_close: tuple) -> MuFormula:
        fv = fm.free_vars(f)
        if not fv:
            return f
        items = tuple((v, b) for v, b in env_close if v in fv)
        key = (f, items)
        got = self._closing_memo.get(key)
        if got is None:
            got = f
            for v, b in items:
                got = fm.substitute(got, v, b)
            self._closing_memo[key] = got
        return got

    def _kadd(self, f: MuFormula) -> int:
        idx = self._kindex.get(f)
        if idx is None:
            idx = len(self._kpos)
            self._kindex[f] = idx
            self._kpos.append(f)
            self._collect(f, ())
        return idx

    def _collect(self, f: MuFormula, env_close: tuple) -> None:
        key = (f, tuple((v, b) for v, b in env_close if v in fm.free_vars(f)))
        if key in self._collect_memo:
            return
        self._collect_memo.add(key)
        kind = f.kind
        if kind in (fm.DIA, fm.BOX):
            closed = self._closing(f.arg, env_close)
            self._kadd(closed)
            self._kadd(fm.negate(closed))
            self._collect(f.arg, env_close)
        elif kind in (fm.MU, fm.NU):
            closed_binder = self._closing(f, env_close)
            self._collect(f.body, env_close + ((f.var, closed_binder),))
        else:
            for c in f.children():
                self._collect(c, env_close)

    def _build_k(self) -> None:
        for m in self.members:
            self._kadd(self._floors[m])

    def _eval_block(self, f: MuFormula, env: dict, env_close: tuple,
                    block: _Block, sky: int, memo: dict) -> int:
        fv = fm.free_vars(f)
        key = (f, tuple(sorted((v, env[v]) for v in fv if v in env)),
               tuple((v, b) for v, b in env_close if v in fv))
        got = memo.get(key)
        if got is not None:
            return got
        kind = f.kind
        if kind == fm.TOP:
            out = block.full
        elif kind == fm.BOT:
            out = 0
        elif kind == fm.PROP:
            out = block.val_bits.get(f.name, 0)
        elif kind == fm.NEGPROP:
            out = block.full & ~block.val_bits.get(f.name, 0)
        elif kind == fm.VAR:
            out = env[f.name]
        elif kind == fm.AND:
            out = (self._eval_block(f.left, env, env_close, block, sky, memo)
                   & self._eval_block(f.right, env, env_close, block, sky, memo))
        elif kind == fm.OR:
            out = (self._eval_block(f.left, env, env_close, block, sky, memo)
                   | self._eval_block(f.right, env, env_close, block, sky, memo))
        elif kind == fm.DIA:
            inner = self._eval_block(f.arg, env, env_close, block, sky, memo)
            above = sky >> self._kindex[self._closing(f.arg, env_close)] & 1
            out = block.full if above else 0
            if not above:
                for w in range(len(block.vals)):
                    if inner & block.others[w]:
                        out |= 1 << w
        elif kind == fm.BOX:
            inner = self._eval_block(f.arg, env, env_close, block, sky, memo)
            neg_idx = self._kindex[fm.negate(self._closing(f.arg, env_close))]
            if sky >> neg_idx & 1:
                out = 0
            else:
                out = 0
                for w in range(len(block.vals)):
                    if not block.others[w] & ~inner:
                        out |= 1 << w
        else:  # MU, NU
            closed_binder = self._closing(f, env_close)
            env_close2 = env_close + ((f.var, closed_binder),)
            current = 0 if kind == fm.MU else block.full
            while True:
                env2 = dict(env)
                env2[f.var] = current
                nxt = self._eval_block(f.body, env2, env_close2, block, sky, memo)
                if nxt == current:
                    break
                current = nxt
            out = current
        memo[key] = out
        return out

    # -- table construction ----------------------------------------------------

    def build(self) -> "Translator":
        if self._built:
            return self
        self._build_depth(0)
        d = 0
        while self.sat_pairs[d] and self.chains[d]:
            if d + 1 > min(self.guards.max_depth, len(self.members) + 1):
                raise TranslationGuardError("depth", f"tables still growing at depth {d + 1}")
            self._build_depth(d + 1)
            d += 1
        self._built = True
        return self

    def realized_depth(self) -> int:
        """Deepest level with a witnessing chain."""
        return max((d for d in range(len(self.chains)) if self.chains[d]), default=-1)

    def _theta_key(self, theta: frozenset) -> tuple:
        return tuple(sorted((m, self._member_index[psi]) for m, psi in theta))

    def _build_depth(self, d: int) -> None:
        table: dict[tuple, SatPair] = {}
        if d == 0:
            for cluster in self.clusters:
                table[(cluster, frozenset())] = self._make_pair(cluster, frozenset(), 0, ())
        else:
            lattice = self._extend_lattice(d - 1)
            cands = {theta: recipe for theta, recipe in lattice.items()
                     if max(m for m, _ in theta) == d - 1}
            for theta in sorted(cands, key=self._theta_key):
                for cluster in self.clusters:
                    if len(table) >= self.guards.max_pairs:
                        raise TranslationGuardError(
                            "pairs", f"more than {self.guards.max_pairs} pairs at depth {d}")
                    table[(cluster, theta)] = self._make_pair(
                        cluster, theta, d, cands[theta])
        self.pairs.append(table)
        self.sat_pairs.append([p for p in table.values() if p.final])
        self.semi_pairs.append([p for p in table.values() if not p.final])
        self._build_chains(d)

    def _build_chains(self, d: int) -> None:
        chains: list[Chain] = []
        semi_split: list[TangleFormula] = []
        semi_count = 0
        if d == 0:
            for pair in self.sat_pairs[0]:
                chains.append(Chain(None, pair))
        else:
            lattice = self._lattice[d - 1]
            for parent in self.chains[d - 1]:
                base = parent.root.theta_c
                options = self._options_memo.get(base)
                if options is None:
                    thetas = {base}
                    thetas.update(base | extra for extra in lattice)
                    options = sorted(thetas, key=self._theta_key)
                    self._options_memo[base] = options
                for cluster in self.clusters:
                    collapse = self._stack_bisimilar(parent.root.cluster, cluster)
                    semis: list[SatPair] = []
                    finals: list[SatPair] = []
                    for theta in options:
                        pair = self.pairs[d].get((cluster, theta))
                        assert pair is not None, "chain extension escaped the pair table"
                        if collapse and theta == base:
                            continue
                        if pair.final:
                            finals.append(pair)
                            if len(chains) >= self.guards.max_chains:
                                raise TranslationGuardError(
                                    "chains",
                                    f"more than {self.guards.max_chains} chains at depth {d}")
                            chains.append(Chain(parent, pair))
                        else:
                            semis.append(pair)
                    semi_count += len(semis)
                    semi_split.extend(self._semi_alphas(
                        parent, cluster, base, semis, finals, collapse))
        self.chains.append(chains)
        self._semi_split.append(semi_split)
        self._semi_counts.append(semi_count)

    def _extend_lattice(self, d: int) -> dict[frozenset, tuple[SatPair, ...]]:
        """Closure under union of the visible-fact profiles of satisfaction
        pairs of depth <= d, with a generating recipe per element."""
        while len(self._lattice) <= d:
            level = len(self._lattice)
            lattice = dict(self._lattice[level - 1]) if level else {}
            singles: list[SatPair] = []
            covered: set[frozenset] = set()
            for dd in range(level + 1):
                for pair in self.sat_pairs[dd]:
                    if pair.theta_c not in covered:
                        covered.add(pair.theta_c)
                        singles.append(pair)
            for pair in singles:
                if pair.theta_c not in lattice:
                    lattice[pair.theta_c] = (pair,)
            queue = sorted(lattice, key=self._theta_key)
            while queue:
                theta = queue.pop()
                for pair in singles:
                    if pair.theta_c <= theta:
                        continue
                    union = theta | pair.theta_c
                    if union not in lattice:
                        if len(lattice) >= self.guards.max_thetas:
                            raise TranslationGuardError(
                                "thetas", f"fact-profile lattice beyond {self.guards.max_thetas}")
                        lattice[union] = lattice[theta] + (pair,)
                        queue.append(union)
            self._lattice.append(lattice)
        return self._lattice[d]

    def _shrink_recipe(self, theta: frozenset,
                       recipe: tuple[SatPair, ...]) -> tuple[SatPair, ...]:
        ordered = sorted(recipe, key=lambda p: (-len(p.theta_c),
                                                self._theta_key(p.theta_c)))
        kept: list[SatPair] = []
        acc: set = set()
        for p in ordered:
            if p.theta_c - acc:
                kept.append(p)
                acc |= p.theta_c
        assert frozenset(acc) == theta
        return tuple(kept)

    def _make_pair(self, cluster: CanonicalCluster, theta: frozenset,
                   depth: int, recipe: tuple[SatPair, ...]) -> SatPair:
        if recipe:
            recipe = self._shrink_recipe(theta, recipe)
        sky_above = 0
        for p in recipe:
            sky_above |= p.sky
        block = _Block(cluster)
        memo: dict = {}
        bits: list[int] = []
        for f in self._kpos:
            bits.append(self._eval_block(f, {}, (), block, sky_above, memo))
        sky = sky_above
        for i, b in enumerate(bits):
            if b:
                sky |= 1 << i
        truths = {}
        w = 0
        final_classes = set()
        for val, mult in cluster.entries:
            rep_bits = frozenset(
                m for m in self.members
                if bits[self._kindex[self._floors[m]]] >> w & 1)
            if mult == SAT:
                twin = frozenset(
                    m for m in self.members
                    if bits[self._kindex[self._floors[m]]] >> (w + 1) & 1)
                assert twin == rep_bits, "bisimilar copies disagree"
            truths[frozenset(val)] = rep_bits
            if any(not sky_above >> self._kindex[self._floors[m]] & 1
                   for m in rep_bits):
                final_classes.add(frozenset(val))
            w += 1 if mult == ONE else 2
        assert len(final_classes) in (0, len(cluster.entries)), \
            "finality must be cluster-wide"
        is_final = len(final_classes) == len(cluster.entries)
        if is_final:
            theta_c = theta | {(depth, m) for tr in truths.values() for m in tr}
        else:
            theta_c = theta
        return SatPair(cluster, theta, depth, recipe, is_final, truths,
                       theta_c, sky)

    def _stack_bisimilar(self, upper: CanonicalCluster,
                         lower: CanonicalCluster) -> bool:
        """Does stacking `lower` underneath `upper` collapse, up to
        bisimulation, to `upper` alone?"""
        key = (upper, lower)
        got = self._stack_bisim_memo.get(key)
        if got is None:
            up = upper.realize()
            got = sem.bisimilar(stack(up, lower.realize()), up, self.atoms) is not None
            self._stack_bisim_memo[key] = got
        return got

    # -- witness materialization (verification hook) ---------------------------

    def materialize_witness(self, pair: SatPair) -> KripkeModel:
        """Concrete model realizing the pair: its cluster stacked underneath
        the disjoint union of the component witnesses."""
        if pair._witness is None:
            rooted = pair.cluster.realize()
            if pair.components:
                parts = [self.materialize_witness(p) for p in pair.components]
                witness = stack(disjoint_union(parts), rooted)
            else:
                witness = rooted
            if witness.n > self.guards.max_witness_worlds:
                raise TranslationGuardError(
                    "witness", f"witness model with {witness.n} worlds")
            pair._witness = witness
        return pair._witness

    def verify_pair(self, pair: SatPair) -> None:
        """Model-check the materialized witness and compare every piece of
        summary data the pair carries; raises AssertionError on mismatch."""
        witness = self.materialize_witness(pair)
        cache: dict = {}
        depths, final = sem.sigma_world_depths(witness, self.sigma, cache)
        rooted_n = pair.cluster.realize().n
        root_mask = (1 << rooted_n) - 1
        assert depths[0] == pair.depth, "witness depth mismatch"
        root_final = final & root_mask
        assert root_final in (0, root_mask), "finality must be cluster-wide"
        assert (root_final == root_mask) == pair.final, "finality mismatch"
        facts = set()
        for member in self.members:
            mask = sem.eval_mu(witness, self._floors[member], None, cache)
            for v in sem._bits(final & mask):
                if depths[v] < pair.depth:
                    facts.add((depths[v], member))
        assert frozenset(facts) == pair.theta, "fact profile mismatch"
        w = 0
        for val, mult in pair.cluster.entries:
            expect = pair.truths[frozenset(val)]
            got = frozenset(
                m for m in self.members
                if sem.eval_mu(witness, self._floors[m], None, cache) >> w & 1)
            assert got == expect, "root truth mismatch"
            w += 1 if mult == ONE else 2

    # -- chain orders -----------------------------------------------------------

    def chain_order(self, c1: Chain, c2: Chain) -> str:
        """CHAIN_STRICT when c1's root cluster strictly embeds into c2's with
        equal prefixes and facts; CHAIN_REFL when the chains coincide."""
        if c1.depth != c2.depth or c1.parent is not c2.parent:
            return CHAIN_NONE
        if c1.root.theta != c2.root.theta:
            return CHAIN_NONE
        emb = sem.cluster_embeds(c1.root.cluster, c2.root.cluster)
        if emb == sem.EMBED_STRICT:
            return CHAIN_STRICT
        if emb == sem.EMBED_BISIMILAR:
            return CHAIN_REFL
        return CHAIN_NONE

    def _chain_le(self, c1: Chain, c2: Chain) -> bool:
        return self.chain_order(c1, c2) != CHAIN_NONE

    # -- structural formulas -----------------------------------------------------

    def tau_formula(self, valuation: Iterable[str]) -> TangleFormula:
        val = frozenset(valuation)
        key = tuple(sorted(val))
        got = self._tau_memo.get(key)
        if got is None:
            got = fm.t_big_and([fm.t_prop(p) if p in val else fm.t_not(fm.t_prop(p))
                                for p in self.atoms])
            self._tau_memo[key] = got
        return got

    def _level_slice(self, m: int, present: frozenset) -> TangleFormula:
        key = (m, present)
        got = self._slice_memo.get(key)
        if got is None:
            parts = []
            for member in self.members:
                f = self.depth_formula(m, member)
                parts.append(f if member in present else fm.t_not(f))
            got = fm.t_big_and(parts)
            self._slice_memo[key] = got
        return got

    def a_formula(self, theta: frozenset) -> TangleFormula:
        """Exact fact profile up to theta's own root depth: positives from
        theta, negations for everything else at those levels (empty set: T)."""
        got = self._a_memo.get(theta)
        if got is None:
            root_depth = max((m for m, _ in theta), default=-1) + 1
            slices = []
            for m in range(root_depth):
                present = frozenset(psi for mm, psi in theta if mm == m)
                slices.append(self._level_slice(m, present))
            got = fm.t_big_and(slices)
            self._a_memo[theta] = got
        return got

    def ir_flag(self, chain: Chain) -> bool:
        """The root pair collapses into its predecessor's augmented pair and
        the root cluster has a uniquely-valued irreflexive point."""
        if chain.depth == 0:
            return False
        return self._ir_parts(chain.parent, chain.root.cluster, chain.root.theta)

    def _ir_parts(self, parent: Chain, cluster: CanonicalCluster,
                  theta: frozenset) -> bool:
        if theta != parent.root.theta_c:
            return False
        if sem.cluster_embeds(cluster, parent.root.cluster) == sem.EMBED_NO:
            return False
        return any(mult == ONE for _, mult in cluster.entries)

    def tau_chain_formula(self, chain: Chain, valuation: frozenset) -> TangleFormula:
        key = (chain, tuple(sorted(valuation)))
        got = self._tau_chain_memo.get(key)
        if got is None:
            got = self._tau_chain_shape(valuation, self.a_formula(chain.root.theta),
                                        chain.parent, self.ir_flag(chain))
            self._tau_chain_memo[key] = got
        return got

    def _tau_chain_shape(self, valuation: frozenset, facts: TangleFormula,
                         parent: Optional[Chain], ir: bool) -> TangleFormula:
        parts = [self.tau_formula(valuation), facts]
        if parent is not None:
            inner = self.delta_formula(parent)
            if ir:
                parts.append(fm.t_dia(fm.t_big_and([self.tau_formula(valuation), inner])))
            else:
                parts.append(fm.t_dia(inner))
        return fm.t_big_and(parts)

    def _alpha_shape(self, cluster: CanonicalCluster, facts: TangleFormula,
                     parent: Optional[Chain], ir: bool) -> TangleFormula:
        ms = []
        for val, mult in cluster.entries:
            t = self._tau_chain_shape(frozenset(val), facts, parent, ir)
            ms.append(t)
            if mult == SAT:
                ms.append(t)
        return fm.t_tangle(ms)

    def alpha_formula(self, chain: Chain) -> TangleFormula:
        got = self._alpha_memo.get(chain)
        if got is None:
            got = self._alpha_shape(chain.root.cluster,
                                    self.a_formula(chain.root.theta),
                                    chain.parent, self.ir_flag(chain))
            self._alpha_memo[chain] = got
        return got

    def _semi_alphas(self, parent: Chain, cluster: CanonicalCluster,
                     base: frozenset, semis: list[SatPair],
                     finals: list[SatPair], collapse: bool) -> list[TangleFormula]:
        """Contribution of the semi-rooted chains extending `parent` with
        `cluster`: one merged alpha covering all their fact sets at once,
        plus a separate alpha for the collapse-flagged base fact set.

        The merged fact description replaces the disjunction over the
        admissible sets T by: the base facts are visible, and the exact
        profile is none of the final-classified or excluded ones.  On any
        world where the surrounding depth guards hold, the actual profile of
        a cluster is one of the enumerated candidates, so the two readings
        agree everywhere the formula is used."""
        if not semis:
            return []
        out = []
        ir_base = (not collapse) and self._ir_parts(parent, cluster, base)
        merged = [p for p in semis if not (ir_base and p.theta == base)]
        if merged:
            parts = [self.depth_formula(m, psi) for m, psi in
                     sorted(base, key=lambda f: (f[0], self._member_index[f[1]]))]
            excluded = [p.theta for p in finals]
            if collapse or ir_base:
                excluded.append(base)
            parts.extend(fm.t_not(self.a_formula(t))
                         for t in sorted(set(excluded), key=self._theta_key))
            facts = fm.t_big_and(parts)
            out.append(self._alpha_shape(cluster, facts, parent, False))
        if ir_base and any(p.theta == base for p in semis):
            out.append(self._alpha_shape(cluster, self.a_formula(base),
                                         parent, True))
        return out

    def _siblings(self, chain: Chain) -> dict[frozenset, list[Chain]]:
        """Same-prefix chains of the same depth, grouped by root facts.  The
        chain orders relate prefix-equal chains only, so the alternatives the
        guard formulas quantify over all live here."""
        key = id(chain.parent)
        got = self._sibling_memo.get(key)
        if got is None:
            got = {}
            for c in self.chains[chain.depth]:
                if c.parent is chain.parent:
                    got.setdefault(c.root.theta, []).append(c)
            self._sibling_memo[key] = got
        return got

    def beta_formula(self, chain: Chain) -> TangleFormula:
        lowers = [self.alpha_formula(c)
                  for c in self._siblings(chain).get(chain.root.theta, ())
                  if self.chain_order(c, chain) == CHAIN_STRICT]
        return fm.t_box(fm.t_implies(fm.t_big_or(lowers),
                                     self.alpha_formula(chain)))

    def gamma_formula(self, chain: Chain) -> TangleFormula:
        # grouped disjunction (associative regrouping only): whole same-prefix
        # groups with other facts, plus the incomparable part of the own group
        parts = []
        for theta, group in self._siblings(chain).items():
            if theta == chain.root.theta:
                parts.extend(self.alpha_formula(c) for c in group
                             if not self._chain_le(c, chain))
            else:
                key = (id(chain.parent), theta)
                shared = self._group_or_memo.get(key)
                if shared is None:
                    shared = fm.t_big_or([self.alpha_formula(c) for c in group])
                    self._group_or_memo[key] = shared
                parts.append(shared)
        return fm.t_not(fm.t_big_or(parts))

    def delta_formula(self, chain: Chain) -> TangleFormula:
        got = self._delta_memo.get(chain)
        if got is None:
            got = fm.t_big_and([self.alpha_formula(chain),
                                self.beta_formula(chain),
                                self.gamma_formula(chain)])
            self._delta_memo[chain] = got
        return got

    def depth_formula(self, n: int, member: Optional[MuFormula] = None) -> TangleFormula:
        """The depth-n observation: some witnessing chain of depth n sits
        above, rooted where `member` holds (None means T: any root)."""
        if member is not None:
            member = self.rep_of[member]
        key = (n, member)
        got = self._depth_memo.get(key)
        if got is None:
            chains = self.chains[n] if 0 <= n < len(self.chains) else []
            if member is None:
                supp = chains
            else:
                supp = [c for c in chains if c.root.satisfied_somewhere(member)]
            got = fm.t_big_or([fm.t_dot_dia(self.delta_formula(c)) for c in supp])
            self._depth_memo[key] = got
        return got

    def split_formula(self, n: int) -> TangleFormula:
        """Two distinct depth-n root situations visible at once, or a
        semi-rooted depth-(n+1) situation; detects non-finality at level n."""
        got = self._split_memo.get(n)
        if got is None:
            parts = []
            chains = self.chains[n] if 0 <= n < len(self.chains) else []
            by_pair: dict[int, tuple[SatPair, list[Chain]]] = {}
            for c in chains:
                by_pair.setdefault(id(c.root), (c.root, []))[1].append(c)
            # distributed over the root pairs (boolean regrouping only)
            groups = [fm.t_big_or([fm.t_dot_dia(self.delta_formula(c)) for c in cs])
                      for _, cs in by_pair.values()]
            for i in range(len(groups)):
                for j in range(i + 1, len(groups)):
                    parts.append(fm.t_big_and([groups[i], groups[j]]))
            if 0 <= n + 1 < len(self._semi_split):
                parts.extend(self._semi_split[n + 1])
            got = fm.t_big_or(parts)
            self._split_memo[n] = got
        return got

    # -- the characteristic formula ----------------------------------------------

    def eval_triples(self, phi: MuFormula) -> list[tuple[frozenset, Optional[Chain], frozenset]]:
        """All root situations satisfying phi: (root valuation, witnessing
        chain or None, visible facts).  A chain means the root is final in
        some witness; None means it is not, and the facts then carry the
        whole profile."""
        if not self._built:
            self.build()
        member = self.rep_of[self.sigma.member_of(phi)]
        triples = []
        for d in range(len(self.chains)):
            for chain in self.chains[d]:
                for val, _ in chain.root.cluster.entries:
                    if member in chain.root.truths[frozenset(val)]:
                        triples.append((frozenset(val), chain, chain.root.theta))
        for d in range(1, len(self.pairs)):
            for pair in self.semi_pairs[d]:
                for val, _ in pair.cluster.entries:
                    if member in pair.truths[frozenset(val)]:
                        triples.append((frozenset(val), None, pair.theta))
        return triples

    def characteristic(self, phi: MuFormula) -> TangleFormula:
        """Tangle formula equivalent to phi over all finite weakly transitive
        models; phi must belong to the closure (the seed always does)."""
        parts = []
        for val, chain, theta in self.eval_triples(phi):
            if chain is not None:
                n = chain.depth
                parts.append(fm.t_big_and([
                    self.depth_formula(n),
                    fm.t_not(self.depth_formula(n + 1)),
                    fm.t_not(self.split_formula(n)),
                    self.tau_formula(val),
                    fm.t_dot_dia(self.delta_formula(chain)),
                ]))
            else:
                n = max(m for m, _ in theta)
                parts.append(fm.t_big_and([
                    self.depth_formula(n),
                    fm.t_not(self.depth_formula(n + 1)),
                    self.split_formula(n),
                    self.tau_formula(val),
                    self.a_formula(theta),
                ]))
        return fm.t_big_or(parts)

    # -- reporting ------------------------------------------------------------------

    def report(self, chi: Optional[TangleFormula] = None) -> dict:
        out = {
            "sigma_size": len(self.sigma),
            "distinct_members": len(self.members),
            "atoms": list(self.atoms),
            "canonical_clusters": len(self.clusters),
            "pairs": [[len(self.sat_pairs[d]), len(self.semi_pairs[d])]
                      for d in range(len(self.pairs))],
            "chains": [[len(self.chains[d]), self._semi_counts[d]]
                       for d in range(len(self.chains))],
        }
        if chi is not None:
            tree = fm.tangle_tree_size(chi)
            out["dag_nodes"] = fm.tangle_dag_nodes(chi)
            out["log2_tree_size"] = tree.bit_length() - 1
            out["tree_size_digits"] = len(str(tree))
        return out


def translate(phi: MuFormula,
              guards: Optional[TranslationGuards] = None) -> tuple[TangleFormula, Translator]:
    """Characteristic tangle formula of a closed mu-calculus formula."""
    sigma = fm.sigma_closure(phi)
    translator = Translator(sigma, guards)
    translator.build()
    return translator.characteristic(phi), translator


# ---------------------------------------------------------------------------
# size bound


def size_bound_exponent(phi: MuFormula) -> int:
    """Upper bound on log2 of the translation's tree size: (14n+1)*2^(14n+6)."""
    n = fm.size(phi)
    return (14 * n + 1) << (14 * n + 6)


def size_bound_ok(phi: MuFormula, chi: TangleFormula) -> bool:
    """Exact check that tree-size(chi) <= 2^bound, without materializing the
    right-hand side."""
    tree = fm.tangle_tree_size(chi)
    bound = size_bound_exponent(phi)
    log_floor = tree.bit_length() - 1
    if log_floor < bound:
        return True
    return log_floor == bound and tree & (tree - 1) == 0


# ---------------------------------------------------------------------------
# shared-DAG text output


def format_tangle_dag(f: TangleFormula, min_size: int = 3) -> str:
    """Render a tangle formula with `let` definitions for shared subterms."""
    counts: dict[TangleFormula, int] = {}
    order: list[TangleFormula] = []

    def visit(g: TangleFormula) -> None:
        counts[g] = counts.get(g, 0) + 1
        if counts[g] > 1:
            return
        for c in g.children():
            visit(c)
        order.append(g)

    visit(f)
    names: dict[TangleFormula, str] = {}
    for g in order:
        if g is f or counts[g] < 2 or g.kind in (fm.TOP, fm.PROP) or g is fm.t_bot():
            continue
        if fm.tangle_dag_nodes(g) < min_size:
            continue
        names[g] = f"d{len(names)}"

    def pp(g: TangleFormula, prec: int, root: bool = False) -> str:
        if not root and g in names:
            return names[g]
        kind = g.kind
        if kind == fm.TOP:
            return "T"
        if g is fm.t_bot():
            return "F"
        if kind == fm.PROP:
            return g.name
        if kind == fm.NOT:
            s = f"~{pp(g.arg, 3)}"
            return f"({s})" if prec > 3 else s
        if kind == fm.AND:
            s = f"{pp(g.left, 2)} & {pp(g.right, 3)}"
            return f"({s})" if prec > 2 else s
        if kind == fm.OR:
            s = f"{pp(g.left, 1)} | {pp(g.right, 2)}"
            return f"({s})" if prec > 1 else s
        if kind == fm.DIA:
            s = f"<> {pp(g.arg, 3)}"
            return f"({s})" if prec > 3 else s
        if kind == fm.BOX:
            s = f"[] {pp(g.arg, 3)}"
            return f"({s})" if prec > 3 else s
        return "<inf>{" + ", ".join(pp(m, 0) for m in g.members) + "}"

    lines = [f"let {names[g]} = {pp(g, 0, root=True)}"
             for g in order if g in names]
    lines.append(f"chi = {pp(f, 0, root=True)}")
    return "\n".join(lines)
