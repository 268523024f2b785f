"""Set partitions and the tree/forest combinatorics behind the weight bounds.

Trees here are bounding skeletons, not Feynman diagrams.  Three families:

* surface trees: s labelled external vertices y_1..y_s, one surface vertex
  (the wall at z=0), anonymous internal vertices of incidence >= 2;
* rooted trees: a distinguished root vertex instead of a surface vertex;
* bulk trees: external vertices only (plus internals), no wall, no root.

The number v2 of internal incidence-2 vertices is tied to the loop budget l:
v2 <= 3l - 2 + s/2 for l >= 1 and v2 = 0 at l = 0 (rooted trees count the
root once more when it has incidence 1).  A forest attaches one surface tree
to every block of a set partition of {1..s}.

Two graph surgeries mirror the linear and quadratic terms of the flow
equations: *reduction* cuts two external legs and prunes dangling internal
chains; *merging* glues a bulk tree onto a forest either by a direct new
internal line (mode "a") or through a fresh incidence-2 vertex (mode "b").
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

SURFACE = ("o",)
ROOT = ("r",)


def ext(label: int):
    return ("y", label)


def is_ext(v) -> bool:
    return isinstance(v, tuple) and v[0] == "y"


def is_internal(v) -> bool:
    return isinstance(v, tuple) and v[0] == "z"


# ---------------------------------------------------------------------------
# Partitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    """Set partition in canonical (sorted) form.

    The ground set is normally {1..s}; merging operations may temporarily
    produce partitions over other integer label sets, so the ground set is
    stored explicitly.
    """
    ground: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...]

    @staticmethod
    def of(blocks, ground_size=None) -> "Partition":
        """Canonical partition of the contiguous ground set {1..s}."""
        blks = tuple(sorted(tuple(sorted(b)) for b in blocks))
        elems = sorted(x for b in blks for x in b)
        if ground_size is None:
            ground_size = len(elems)
        if elems != list(range(1, ground_size + 1)):
            raise ValueError("blocks must partition {1..%d} exactly" % ground_size)
        if any(len(b) == 0 for b in blks):
            raise ValueError("empty block")
        return Partition(tuple(elems), blks)

    @staticmethod
    def over(blocks) -> "Partition":
        """Canonical partition of an arbitrary integer label set."""
        blks = tuple(sorted(tuple(sorted(b)) for b in blocks))
        elems = sorted(x for b in blks for x in b)
        if len(set(elems)) != len(elems):
            raise ValueError("blocks overlap")
        if any(len(b) == 0 for b in blks):
            raise ValueError("empty block")
        return Partition(tuple(elems), blks)

    @property
    def ground_size(self) -> int:
        return len(self.ground)

    def __iter__(self):
        return iter(self.blocks)


def enumerate_partitions(s: int) -> list[Partition]:
    """All set partitions of {1..s}, canonical order, Bell(s) of them."""
    if s < 1:
        raise ValueError("empty ground set")

    def rec(elements):
        if not elements:
            yield []
            return
        first, rest = elements[0], elements[1:]
        for sub in rec(rest):
            for i in range(len(sub)):
                yield sub[:i] + [[first] + sub[i]] + sub[i + 1:]
            yield [[first]] + sub

    parts = [Partition.of(b, s) for b in rec(list(range(1, s + 1)))]
    return sorted(parts, key=lambda p: p.blocks)


def reduce_partition(p: Partition) -> Partition:
    """Drop the two largest elements from their blocks, removing emptied blocks."""
    if p.ground_size < 3:
        raise ValueError("reduction needs ground size >= 3")
    cut = set(p.ground[-2:])
    blocks = [tuple(x for x in b if x not in cut) for b in p.blocks]
    blocks = [b for b in blocks if b]
    return Partition.over(blocks)


# ---------------------------------------------------------------------------
# Trees
# ---------------------------------------------------------------------------

class Tree:
    """Undirected labelled tree with role-tagged vertices.

    Vertices are tuples: ("y", i) external, ("o",) surface, ("r",) root,
    ("z", k) internal.  Immutable by convention: surgeries return copies.
    """

    def __init__(self, kind: str, l: int, adj: dict):
        if kind not in ("surface", "rooted", "bulk"):
            raise ValueError("unknown tree kind %r" % kind)
        self.kind = kind
        self.l = l
        self.adj = {v: set(nb) for v, nb in adj.items()}

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def from_edges(kind, l, edges) -> "Tree":
        adj: dict = {}
        for u, v in edges:
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        return Tree(kind, l, adj)

    def copy(self) -> "Tree":
        return Tree(self.kind, self.l, self.adj)

    # -- basic queries -------------------------------------------------------

    def vertices(self):
        return list(self.adj)

    def edges(self):
        seen = set()
        for u, nbs in self.adj.items():
            for v in nbs:
                e = frozenset((u, v))
                if e not in seen:
                    seen.add(e)
                    yield tuple(sorted(e, key=repr))

    def incidence(self, v) -> int:
        return len(self.adj[v])

    def external_labels(self) -> tuple[int, ...]:
        return tuple(sorted(v[1] for v in self.adj if is_ext(v)))

    @property
    def s(self) -> int:
        n = sum(1 for v in self.adj if is_ext(v))
        return n + (1 if self.kind == "rooted" else 0)

    def internal_vertices(self):
        return [v for v in self.adj if is_internal(v)]

    @property
    def v2(self) -> int:
        return sum(1 for v in self.internal_vertices() if len(self.adj[v]) == 2)

    @property
    def root_incidence(self) -> int:
        if self.kind != "rooted":
            raise ValueError("not a rooted tree")
        return len(self.adj[ROOT])

    # -- invariants ----------------------------------------------------------

    def v2_budget(self) -> float:
        return 0.0 if self.l == 0 else 3 * self.l - 2 + self.s / 2.0

    def v2_usage(self) -> int:
        used = self.v2
        if self.kind == "rooted" and self.root_incidence == 1:
            used += 1
        return used

    def validate(self) -> None:
        """Raise ValueError on any violated structural invariant."""
        verts = set(self.adj)
        if not verts:
            raise ValueError("empty tree")
        # connected and acyclic
        n_edges = sum(len(nb) for nb in self.adj.values()) // 2
        if n_edges != len(verts) - 1:
            raise ValueError("edge count does not match a tree")
        stack, seen = [next(iter(verts))], set()
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(self.adj[v])
        if seen != verts:
            raise ValueError("tree not connected")
        # roles
        if self.kind == "surface":
            if SURFACE not in verts:
                raise ValueError("surface tree without surface vertex")
            if ROOT in verts:
                raise ValueError("surface tree cannot carry a root")
            if len(self.adj[SURFACE]) != 1:
                raise ValueError("surface vertex must have incidence 1")
        elif self.kind == "rooted":
            if ROOT not in verts or SURFACE in verts:
                raise ValueError("rooted tree needs root and no surface vertex")
        else:
            if ROOT in verts or SURFACE in verts:
                raise ValueError("bulk tree has externals and internals only")
        for v in verts:
            deg = len(self.adj[v])
            if is_ext(v) and deg != 1:
                raise ValueError("external vertex of incidence %d" % deg)
            if is_internal(v) and deg < 2:
                raise ValueError("internal vertex of incidence %d" % deg)
        if self.kind == "surface" and not self.internal_vertices():
            raise ValueError("surface tree needs at least one internal vertex")
        if self.v2_usage() > self.v2_budget():
            raise ValueError(
                "incidence-2 count %d exceeds budget %.1f at l=%d, s=%d"
                % (self.v2_usage(), self.v2_budget(), self.l, self.s))

    def is_valid(self) -> bool:
        try:
            self.validate()
        except ValueError:
            return False
        return True

    # -- canonical form ------------------------------------------------------

    def _anchor(self):
        if self.kind == "surface":
            return SURFACE
        if self.kind == "rooted":
            return ROOT
        return min(v for v in self.adj if is_ext(v))

    def canonical_code(self):
        """Isomorphism-invariant code; internal vertices are anonymous."""
        def code(v, parent):
            children = sorted(code(w, v) for w in self.adj[v] if w != parent)
            tag = v if not is_internal(v) else ("z",)
            return (tag, tuple(children))
        return (self.kind, self.l, code(self._anchor(), None))

    def __eq__(self, other):
        return isinstance(other, Tree) and self.canonical_code() == other.canonical_code()

    def __hash__(self):
        return hash(self.canonical_code())

    def __repr__(self):
        return "Tree(%s, l=%d, ext=%s, internal=%d, v2=%d)" % (
            self.kind, self.l, self.external_labels(),
            len(self.internal_vertices()), self.v2)


# ---------------------------------------------------------------------------
# Forests
# ---------------------------------------------------------------------------

@dataclass
class Forest:
    """A surface tree for every block of a partition of the external labels."""
    partition: Partition
    trees: dict[tuple[int, ...], Tree] = field(default_factory=dict)
    l: int = 0

    def validate(self) -> None:
        labels: list[int] = []
        for block in self.partition:
            t = self.trees.get(block)
            if t is None:
                raise ValueError("missing tree for block %r" % (block,))
            if t.kind != "surface":
                raise ValueError("forest trees must be surface trees")
            if t.external_labels() != block:
                raise ValueError("tree externals %r != block %r"
                                 % (t.external_labels(), block))
            if t.l != self.l:
                raise ValueError("tree loop budget differs from forest budget")
            t.validate()
            labels.extend(block)
        if tuple(sorted(labels)) != self.partition.ground:
            raise ValueError("blocks do not cover the ground set")

    def is_valid(self) -> bool:
        try:
            self.validate()
        except ValueError:
            return False
        return True

    def all_trees(self):
        return [self.trees[b] for b in self.partition]


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

def _leaf_topologies(leaves):
    """Series-reduced trees (internal degree >= 3) on the given leaf set.

    Built incrementally: each new leaf is attached either to an existing
    internal vertex or to the middle of an existing edge (creating a new
    degree-3 vertex); this yields every topology exactly once.
    """
    leaves = list(leaves)
    if len(leaves) < 2:
        raise ValueError("need at least two leaves")
    counter = itertools.count()

    def clone(adj):
        return {v: set(nb) for v, nb in adj.items()}

    base = {leaves[0]: {leaves[1]}, leaves[1]: {leaves[0]}}
    tops = [base]
    for leaf in leaves[2:]:
        new = []
        for adj in tops:
            internal = [v for v in adj if is_internal(v)]
            edges = set()
            for u, nbs in adj.items():
                for v in nbs:
                    edges.add(frozenset((u, v)))
            for v in internal:
                a2 = clone(adj)
                a2[v].add(leaf)
                a2[leaf] = {v}
                new.append(a2)
            for e in edges:
                u, v = tuple(e)
                w = ("z", next(counter))
                a2 = clone(adj)
                a2[u].discard(v)
                a2[v].discard(u)
                a2[u].add(w)
                a2[v].add(w)
                a2[w] = {u, v, leaf}
                a2[leaf] = {w}
                new.append(a2)
        tops = new
    return tops


def _distribute(total_max, n_slots):
    """All tuples of n_slots nonnegative ints with sum <= total_max."""
    if n_slots == 0:
        yield ()
        return
    for first in range(total_max + 1):
        for rest in _distribute(total_max - first, n_slots - 1):
            yield (first,) + rest


def _subdivide(adj, per_edge, counter):
    """Insert the requested number of incidence-2 vertices on each edge."""
    out = {v: set(nb) for v, nb in adj.items()}
    for (u, v), t in per_edge.items():
        if t == 0:
            continue
        chain = [("z", next(counter)) for _ in range(t)]
        path = [u] + chain + [v]
        out[u].discard(v)
        out[v].discard(u)
        for w in chain:
            out[w] = set()
        for a, b in zip(path, path[1:]):
            out[a].add(b)
            out[b].add(a)
    return out


def _chain_variants(adj, kind, l, max_internal, extra_v2=0):
    """Decorate a topology with incidence-2 chains within the budgets."""
    n_hub = sum(1 for v in adj if is_internal(v))
    s_eff = sum(1 for v in adj if is_ext(v)) + (1 if kind == "rooted" else 0)
    vmax = 0 if l == 0 else int(3 * l - 2 + s_eff / 2.0)
    vmax = max(0, vmax - extra_v2)
    vmax = min(vmax, max(0, max_internal - n_hub))
    edges = [tuple(sorted(e)) for e in
             {frozenset((u, v)) for u, nbs in adj.items() for v in nbs}]
    counter = itertools.count(10_000)
    seen = set()
    for dist in _distribute(vmax, len(edges)):
        a2 = _subdivide(adj, dict(zip(edges, dist)), counter)
        t = Tree(kind, l, a2)
        if not t.is_valid():
            continue
        code = t.canonical_code()
        if code in seen:
            continue
        seen.add(code)
        yield t


def enumerate_surface_trees(s: int, l: int, max_internal: int = 8,
                            labels=None) -> list[Tree]:
    """All canonical surface trees with externals y_1..y_s (or `labels`)."""
    if s < 1 or l < 0:
        raise ValueError("need s >= 1, l >= 0")
    labels = list(labels) if labels is not None else list(range(1, s + 1))
    leaves = [ext(i) for i in labels] + [SURFACE]
    out = []
    for adj in _leaf_topologies(leaves):
        out.extend(_chain_variants(adj, "surface", l, max_internal))
    return sorted(out, key=lambda t: t.canonical_code())


def enumerate_bulk_trees(s: int, l: int, max_internal: int = 8,
                         labels=None) -> list[Tree]:
    """All canonical bulk trees with s externals (the bare line included)."""
    if s < 2 or l < 0:
        raise ValueError("need s >= 2, l >= 0")
    labels = list(labels) if labels is not None else list(range(1, s + 1))
    leaves = [ext(i) for i in labels]
    out = []
    for adj in _leaf_topologies(leaves):
        out.extend(_chain_variants(adj, "bulk", l, max_internal))
    return sorted(out, key=lambda t: t.canonical_code())


def enumerate_rooted_trees(s: int, l: int, max_internal: int = 8,
                           labels=None) -> list[Tree]:
    """Rooted trees with root plus externals y_2..y_s (s counts the root).

    The root may sit anywhere: as a pendant vertex (incidence 1, which then
    eats one unit of the incidence-2 budget), on an edge (incidence 2, not
    counted in v2 since the root is not internal), or at a branching vertex.
    """
    if s < 2 or l < 0:
        raise ValueError("need s >= 2 (the s=1 rooted weight is the constant 1)")
    labels = list(labels) if labels is not None else list(range(2, s + 1))
    out: dict = {}

    def add(t: Tree):
        if t.is_valid():
            out.setdefault(t.canonical_code(), t)

    # root as a pendant leaf
    leaves = [ROOT] + [ext(i) for i in labels]
    for adj in _leaf_topologies(leaves):
        for t in _chain_variants(adj, "rooted", l, max_internal):
            add(t)
    # root at an internal position of a topology on the externals alone
    if len(labels) >= 2:
        for adj in _leaf_topologies([ext(i) for i in labels]):
            hubs = [v for v in adj if is_internal(v)]
            for hub in hubs:
                a2 = {(ROOT if v == hub else v):
                      {ROOT if w == hub else w for w in nb}
                      for v, nb in adj.items()}
                for t in _chain_variants(a2, "rooted", l, max_internal):
                    add(t)
            edges = {frozenset((u, v)) for u, nbs in adj.items() for v in nbs}
            for e in edges:
                u, v = tuple(e)
                a2 = {x: set(nb) for x, nb in adj.items()}
                a2[u].discard(v)
                a2[v].discard(u)
                a2[u].add(ROOT)
                a2[v].add(ROOT)
                a2[ROOT] = {u, v}
                for t in _chain_variants(a2, "rooted", l, max_internal):
                    add(t)
    return sorted(out.values(), key=lambda t: t.canonical_code())


def enumerate_forests(s: int, l: int, max_internal: int = 8, labels=None):
    """Generator over all forests of surface trees for every partition.

    `labels` renames the ground set away from {1..s} (used when a forest has
    to coexist with a bulk tree holding some of the labels).
    """
    name = {i + 1: lab for i, lab in enumerate(labels)} if labels else None
    tree_cache: dict[tuple[int, ...], list[Tree]] = {}
    for part in enumerate_partitions(s):
        blocks = [tuple(name[x] for x in b) for b in part] if name \
            else list(part.blocks)
        per_block = []
        for block in blocks:
            if block not in tree_cache:
                tree_cache[block] = enumerate_surface_trees(
                    len(block), l, max_internal, labels=block)
            per_block.append(tree_cache[block])
        if any(not trees for trees in per_block):
            continue
        out_part = Partition.over(blocks)
        for combo in itertools.product(*per_block):
            yield Forest(out_part, dict(zip(blocks, combo)), l)


# ---------------------------------------------------------------------------
# Reduction and merging
# ---------------------------------------------------------------------------

def _cut_leg(tree: Tree, label: int) -> tuple[Tree, bool]:
    """Remove the external leg `label` and prune dangling internal chains.

    Returns (new tree, emptied) where emptied means the whole tree died
    (nothing but the pruned chain and the surface vertex remained).
    """
    v = ext(label)
    if v not in tree.adj:
        raise ValueError("label %d is not external in this tree" % label)
    adj = {x: set(nb) for x, nb in tree.adj.items()}
    (attach,) = adj[v]
    adj[attach].discard(v)
    del adj[v]
    cur = attach
    while is_internal(cur) and len(adj[cur]) == 1:
        (nxt,) = adj[cur]
        adj[nxt].discard(cur)
        del adj[cur]
        cur = nxt
    if not is_internal(cur) and len(adj.get(cur, ())) == 0:
        # everything collapsed down to a bare non-internal vertex
        return Tree(tree.kind, tree.l, {}), True
    return Tree(tree.kind, tree.l, adj), False


def _collapse_chains(adj):
    """Contract edges joining two adjacent incidence-2 internal vertices.

    A run of incidence-2 vertices carries the same weight as a single line
    up to a per-vertex constant (the chain estimate), so the canonical
    representative of a cut or glued structure keeps at most one such
    vertex per run.  Without this normalization the incidence-2 budget can
    be exceeded by structures that are equivalent to admissible ones.
    """
    adj = {v: set(nb) for v, nb in adj.items()}
    changed = True
    while changed:
        changed = False
        for v in list(adj):
            if not is_internal(v) or len(adj.get(v, ())) != 2:
                continue
            for w in list(adj[v]):
                if is_internal(w) and len(adj[w]) == 2:
                    others = adj[w] - {v}
                    adj[v].discard(w)
                    for x in others:
                        adj[x].discard(w)
                        adj[x].add(v)
                        adj[v].add(x)
                    del adj[w]
                    changed = True
                    break
            if changed:
                break
    return adj


def reduce_forest(forest: Forest, a: int, b: int):
    """Cut the external legs a and b; prune; bump the loop budget by one.

    Returns (reduced_forest, removed_blocks) where removed_blocks lists
    blocks whose tree disappeared entirely (the two-external-vertex case).
    """
    if a == b:
        raise ValueError("the two cut labels must differ")
    forest.validate()
    cut = {a, b}
    if not cut <= set(forest.partition.ground):
        raise ValueError("cut labels must belong to the forest")
    removed = []
    new_blocks = []
    new_trees = {}
    keep_labels = [x for x in forest.partition.ground if x not in cut]
    relabel = {old: i + 1 for i, old in enumerate(keep_labels)}
    for block in forest.partition:
        t = forest.trees[block]
        emptied = False
        for lab in sorted(cut & set(block)):
            t, emptied = _cut_leg(t, lab)
            if emptied:
                break
        keep = tuple(relabel[x] for x in block if x not in cut)
        if emptied or not keep:
            removed.append(block)
            continue
        adj = _collapse_chains(t.adj)
        t2 = Tree(t.kind, t.l + 1,
                  {_relabel_vertex(v, relabel): {_relabel_vertex(w, relabel)
                                                 for w in nb}
                   for v, nb in adj.items()})
        new_blocks.append(keep)
        new_trees[keep] = t2
    part = Partition.over(new_blocks)
    return Forest(part, new_trees, forest.l + 1), removed


def _relabel_vertex(v, relabel):
    if is_ext(v):
        return ext(relabel[v[1]])
    return v


def merge(mode: str, bulk_tree: Tree, forest: Forest,
          cut_bulk_label: int, cut_forest_label: int) -> Forest:
    """Glue a bulk tree onto one tree of a forest.

    Removes the external leg `cut_bulk_label` from the bulk tree and
    `cut_forest_label` from its forest tree, then joins the two attachment
    vertices directly (mode "a") or through a new incidence-2 vertex
    (mode "b"); runs of adjacent incidence-2 vertices are then contracted
    to their canonical single-vertex form, so the incidence-2 count grows
    by at most one for mode "b".  The surviving external label sets must
    be disjoint.
    """
    if mode not in ("a", "b"):
        raise ValueError("mode must be 'a' or 'b'")
    if bulk_tree.kind != "bulk":
        raise ValueError("first structure must be a bulk tree")
    vb = ext(cut_bulk_label)
    if vb not in bulk_tree.adj:
        raise ValueError("label %d not external in the bulk tree" % cut_bulk_label)
    (zb,) = bulk_tree.adj[vb]
    if not is_internal(zb):
        raise ValueError("cut leg must attach to an internal vertex")
    target_block = None
    for block in forest.partition:
        if cut_forest_label in block:
            target_block = block
    if target_block is None:
        raise ValueError("label %d not in the forest" % cut_forest_label)
    tf = forest.trees[target_block]
    vf = ext(cut_forest_label)
    (zf,) = tf.adj[vf]
    if not is_internal(zf):
        raise ValueError("cut leg must attach to an internal vertex")

    # disjointly rename internal vertices of the two graphs
    def rename(adj, tag):
        m = {}
        for v in adj:
            m[v] = ("z", (tag, v[1])) if is_internal(v) else v
        return {m[v]: {m[w] for w in nb} for v, nb in adj.items()}, m

    ab, mb = rename(bulk_tree.adj, "b")
    af, mf = rename(tf.adj, "f")
    zb2, zf2 = mb[zb], mf[zf]
    adj = {**ab, **af}
    bulk_ext = set(bulk_tree.external_labels()) - {cut_bulk_label}
    forest_ext = set(tf.external_labels()) - {cut_forest_label}
    if bulk_ext & forest_ext:
        raise ValueError("external labels collide after the cut")
    adj[zb2].discard(ext(cut_bulk_label))
    adj[zf2].discard(ext(cut_forest_label))
    adj.pop(ext(cut_bulk_label))
    adj.pop(ext(cut_forest_label))
    if mode == "a":
        adj[zb2].add(zf2)
        adj[zf2].add(zb2)
    else:
        u = ("z", ("u", 0))
        adj[u] = {zb2, zf2}
        adj[zb2].add(u)
        adj[zf2].add(u)
    l_out = bulk_tree.l + forest.l
    merged = Tree("surface", l_out, _collapse_chains(adj))

    new_blocks = []
    new_trees = {}
    merged_block = tuple(sorted(bulk_ext | forest_ext))
    new_blocks.append(merged_block)
    new_trees[merged_block] = merged
    for block in forest.partition:
        if block == target_block:
            continue
        keep = tuple(b for b in block)
        t = forest.trees[block]
        new_trees[keep] = Tree(t.kind, l_out, t.adj)
        new_blocks.append(keep)
    part = Partition.over(new_blocks)
    return Forest(part, new_trees, l_out)
