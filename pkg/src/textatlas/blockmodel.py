"""Hierarchical type-pure partitions and the description-length objective.

The objective, in nats, for one hierarchy level and one layer with block-pair
weights e_rs and block totals e_r is

    F = sum_{r<s} e_rs * ln(e_rs / (e_r * e_s))          (0 ln 0 = 0)
    P = B_pairs * ln(E + 1) + sum_t N_t * ln(B_t)

where B_pairs counts the block pairs that carry edges in the layer (each
realized pair's weight costs up to ln(E + 1) nats to transmit), E is the
layer's total edge weight, N_t the entities of type t at that level (types
word/doc for the text layer; word/code/category for metadata), and B_t the
type's block count. A layer with no edges contributes nothing. The total is
the sum over levels and layers of (-F + P); lower is better. Level l >= 1
applies the same form to the block multigraph of level l - 1.

Counting only realized pairs keeps the penalty proportional to the structure
actually present; a dense all-pairs product swamps the likelihood on corpus-
scale graphs and collapses every bottom-up fit.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log

from .errors import EmptyDocument, InvalidLevel, InvalidMove, InvalidPartition
from .network import CATEGORY, CODE, DOC, META, TEXT, WORD, ContractedNetwork

N_TYPES = 4
LAYERS = (TEXT, META)
# node types that can carry edges per layer, and the block-pair products
_LAYER_TYPES = {TEXT: (WORD, DOC), META: (WORD, CODE, CATEGORY)}


def _xlogy(x: float, y: float) -> float:
    return x * log(y) if x > 0.0 else 0.0


def _pair_term(e: float, dr: float, ds: float) -> float:
    return e * log(e / (dr * ds)) if e > 0.0 else 0.0


@dataclass
class ObjectiveValue:
    """Total description length with its per-level, per-layer breakdown."""

    total: float
    breakdown: list[dict[str, dict[str, float]]]

    def to_json(self) -> dict:
        return {"total": self.total, "breakdown": self.breakdown}


class Partition:
    """A stack of type-pure assignments.

    ``levels[0][t][i]`` is the block id (within type t, 0..B_t-1) of the i-th
    level-0 entity of type t; ``levels[l][t][j]`` assigns block j of level
    l - 1. Entity counts per type at level 0 are fixed at construction.
    """

    def __init__(self, levels: list[list[list[int]]]):
        if not levels:
            raise InvalidPartition("partition needs at least one level")
        self.levels = levels

    @property
    def height(self) -> int:
        return len(self.levels)

    def block_counts(self, level: int) -> list[int]:
        counts = []
        for t in range(N_TYPES):
            assign = self.levels[level][t]
            counts.append(1 + max(assign) if assign else 0)
        return counts

    def validate(self, n_entities: list[int]) -> None:
        """Check totality and per-type surjectivity level by level."""
        expected = list(n_entities)
        for level, assigns in enumerate(self.levels):
            if len(assigns) != N_TYPES:
                raise InvalidPartition(f"level {level}: expected {N_TYPES} type lists")
            next_expected = []
            for t in range(N_TYPES):
                assign = assigns[t]
                if len(assign) != expected[t]:
                    raise InvalidPartition(
                        f"level {level}, type {t}: {len(assign)} assignments "
                        f"for {expected[t]} entities"
                    )
                if assign:
                    b = 1 + max(assign)
                    seen = set(assign)
                    if min(assign) < 0 or seen != set(range(b)):
                        raise InvalidPartition(
                            f"level {level}, type {t}: block ids not contiguous"
                        )
                    next_expected.append(b)
                else:
                    next_expected.append(0)
            expected = next_expected

    def cluster_of(self, node_type: int, entity: int, level: int) -> int:
        """Composed block id of a level-0 entity at the given level."""
        if not (0 <= level < self.height):
            raise InvalidLevel(f"level {level} outside 0..{self.height - 1}")
        block = self.levels[0][node_type][entity]
        for l in range(1, level + 1):
            block = self.levels[l][node_type][block]
        return block

    def clusters_at(self, node_type: int, level: int) -> list[int]:
        """Composed block ids for every level-0 entity of a type."""
        if not (0 <= level < self.height):
            raise InvalidLevel(f"level {level} outside 0..{self.height - 1}")
        out = list(self.levels[0][node_type])
        for l in range(1, level + 1):
            table = self.levels[l][node_type]
            out = [table[b] for b in out]
        return out

    def copy(self) -> "Partition":
        return Partition([[list(a) for a in lvl] for lvl in self.levels])

    def to_levels_json(self) -> list[list[int]]:
        """Each level flattened in type order (words, docs, codes, categories)."""
        return [[b for t in range(N_TYPES) for b in lvl[t]] for lvl in self.levels]


def expand_partition(partition: Partition, network: ContractedNetwork) -> Partition:
    """Rewrite level-0 word assignments from atoms to original word ids."""
    n_words = max(w for atom in network.atoms for w in atom) + 1 if network.atoms else 0
    word_assign = [0] * n_words
    for wid in range(n_words):
        word_assign[wid] = partition.levels[0][WORD][network.atom_of[wid]]
    levels = [[list(a) for a in lvl] for lvl in partition.levels]
    levels[0][WORD] = word_assign
    return Partition(levels)


class BlockState:
    """Mutable single-level partition over a typed two-layer multigraph.

    Tracks block-pair weights, block totals, sizes, and per-type block counts
    so that single-node moves and block merges evaluate in time proportional
    to the affected block rows. Block ids are globally unique ints; use
    ``canonical_assignments`` to export per-type contiguous labels.
    """

    def __init__(self, node_type: list[int],
                 adjacency: list[list[list[tuple[int, float]]]],
                 totals: tuple[float, float],
                 init_blocks: list[int] | None = None):
        self.node_type = node_type
        self.adj = adjacency
        self.E = totals
        n = len(node_type)
        self.n_entities = [0] * N_TYPES
        for t in node_type:
            self.n_entities[t] += 1
        if init_blocks is None:
            init_blocks = list(range(n))
        self.b = list(init_blocks)
        self.mrs: list[dict[int, dict[int, float]]] = [{}, {}]
        self.er: list[dict[int, float]] = [{}, {}]
        self.size: dict[int, int] = {}
        self.btype: dict[int, int] = {}
        self.members: dict[int, set[int]] = {}
        self.nb = [0] * N_TYPES
        self.type_blocks: list[list[int]] = [[] for _ in range(N_TYPES)]
        self._block_pos: dict[int, int] = {}
        for i, blk in enumerate(self.b):
            if blk not in self.size:
                self._register_block(blk, node_type[i])
            elif self.btype[blk] != node_type[i]:
                raise InvalidPartition("type-mixed block in initial assignment")
            self.size[blk] += 1
            self.members[blk].add(i)
        self.next_block = 1 + max(self.b) if self.b else 0
        self.n_pairs = [0, 0]
        for layer in LAYERS:
            rows = self.mrs[layer]
            deg = self.er[layer]
            for i in range(n):
                bi = self.b[i]
                for j, w in self.adj[i][layer]:
                    if i <= j:  # count each undirected edge once
                        bj = self.b[j]
                        rows.setdefault(bi, {})
                        rows.setdefault(bj, {})
                        if bj not in rows[bi]:
                            self.n_pairs[layer] += 1
                        rows[bi][bj] = rows[bi].get(bj, 0.0) + w
                        if bi != bj:
                            rows[bj][bi] = rows[bj].get(bi, 0.0) + w
                        deg[bi] = deg.get(bi, 0.0) + w
                        deg[bj] = deg.get(bj, 0.0) + w

    def _register_block(self, blk: int, t: int) -> None:
        self.size[blk] = 0
        self.btype[blk] = t
        self.members[blk] = set()
        self.nb[t] += 1
        self._block_pos[blk] = len(self.type_blocks[t])
        self.type_blocks[t].append(blk)

    def _unregister_block(self, blk: int) -> None:
        t = self.btype.pop(blk)
        del self.size[blk]
        del self.members[blk]
        self.nb[t] -= 1
        lst = self.type_blocks[t]
        pos = self._block_pos.pop(blk)
        last = lst.pop()
        if last != blk:
            lst[pos] = last
            self._block_pos[last] = pos
        for layer in LAYERS:
            self.mrs[layer].pop(blk, None)
            self.er[layer].pop(blk, None)

    # -- objective --------------------------------------------------------------

    def likelihood(self, layer: int) -> float:
        rows = self.mrs[layer]
        deg = self.er[layer]
        total = 0.0
        for r, row in rows.items():
            dr = deg.get(r, 0.0)
            for s, e in row.items():
                if r < s:
                    total += _pair_term(e, dr, deg.get(s, 0.0))
        return total

    def penalty(self, layer: int) -> float:
        if self.E[layer] <= 0.0:
            return 0.0
        p = self.n_pairs[layer] * log(self.E[layer] + 1.0)
        for t in _LAYER_TYPES[layer]:
            if self.nb[t] > 0:
                p += _xlogy(self.n_entities[t], self.nb[t])
        return p

    def level_dl(self) -> float:
        total = 0.0
        for layer in LAYERS:
            if self.E[layer] > 0.0:
                total += -self.likelihood(layer) + self.penalty(layer)
        return total

    def breakdown(self) -> dict[str, dict[str, float]]:
        out = {}
        for layer, name in ((TEXT, "text"), (META, "meta")):
            if self.E[layer] > 0.0:
                out[name] = {"F": self.likelihood(layer), "P": self.penalty(layer)}
        return out

    def _label_delta(self, t: int, delta_blocks: int) -> float:
        """Change in the per-layer node-label costs when type t's block count
        moves by delta_blocks."""
        if delta_blocks == 0:
            return 0.0
        delta = 0.0
        n = self.n_entities[t]
        b2 = self.nb[t] + delta_blocks
        for layer in LAYERS:
            if self.E[layer] > 0.0 and t in _LAYER_TYPES[layer]:
                delta += _xlogy(n, b2) - _xlogy(n, self.nb[t])
        return delta

    # -- single-node moves ---------------------------------------------------------

    def node_block_weights(self, i: int, layer: int) -> dict[int, float]:
        out: dict[int, float] = {}
        b = self.b
        for j, w in self.adj[i][layer]:
            bj = b[j]
            out[bj] = out.get(bj, 0.0) + w
        return out

    def move_delta(self, i: int, target: int) -> float:
        """Exact DL change of moving node i to ``target`` (may be fresh)."""
        r = self.b[i]
        if target == r:
            return 0.0
        fresh = target not in self.size
        if not fresh and self.btype[target] != self.node_type[i]:
            raise InvalidMove(
                f"node of type {self.node_type[i]} cannot join a "
                f"type-{self.btype[target]} block"
            )
        delta = 0.0
        for layer in LAYERS:
            if self.E[layer] <= 0.0:
                continue
            ki = self.node_block_weights(i, layer)
            K = sum(ki.values())
            deg = self.er[layer]
            rows = self.mrs[layer]
            er_r = deg.get(r, 0.0)
            er_s = deg.get(target, 0.0)
            er_r2 = er_r - K
            er_s2 = er_s + K
            old = 0.0
            new = 0.0
            d_pairs = 0
            row_r = rows.get(r, {})
            row_s = rows.get(target, {})
            seen_s = set()
            for x, e in row_r.items():
                ex = deg.get(x, 0.0)
                old += _pair_term(e, er_r, ex)
                e2 = e - ki.get(x, 0.0)
                if e2 > 1e-12:
                    new += _pair_term(e2, er_r2, ex)
                else:
                    d_pairs -= 1
            for x, e in row_s.items():
                ex = deg.get(x, 0.0)
                seen_s.add(x)
                old += _pair_term(e, er_s, ex)
                new += _pair_term(e + ki.get(x, 0.0), er_s2, ex)
            for x, kx in ki.items():
                if x not in seen_s and kx > 0.0:
                    new += _pair_term(kx, er_s2, deg.get(x, 0.0))
                    d_pairs += 1
            delta += old - new  # DL carries -F
            delta += d_pairs * log(self.E[layer] + 1.0)
        t = self.node_type[i]
        delta_blocks = (1 if fresh else 0) - (1 if self.size[r] == 1 else 0)
        delta += self._label_delta(t, delta_blocks)
        return delta

    def apply_move(self, i: int, target: int) -> None:
        r = self.b[i]
        if target == r:
            return
        t = self.node_type[i]
        if target not in self.size:
            self._register_block(target, t)
            if target >= self.next_block:
                self.next_block = target + 1
        elif self.btype[target] != t:
            raise InvalidMove("type mismatch")
        for layer in LAYERS:
            ki = self.node_block_weights(i, layer)
            if not ki:
                continue
            K = sum(ki.values())
            rows = self.mrs[layer]
            deg = self.er[layer]
            row_r = rows.get(r, {})
            row_s = rows.setdefault(target, {})
            for x, kx in ki.items():
                e = row_r.get(x, 0.0) - kx
                if e <= 1e-12:
                    if x in row_r:
                        self.n_pairs[layer] -= 1
                    row_r.pop(x, None)
                    if x != r:
                        self.mrs[layer].get(x, {}).pop(r, None)
                else:
                    row_r[x] = e
                    if x != r:
                        self.mrs[layer][x][r] = e
                if x not in row_s:
                    self.n_pairs[layer] += 1
                e2 = row_s.get(x, 0.0) + kx
                row_s[x] = e2
                if x != target:
                    self.mrs[layer].setdefault(x, {})[target] = e2
            deg[r] = deg.get(r, 0.0) - K
            if deg[r] <= 1e-12:
                deg.pop(r, None)
            deg[target] = deg.get(target, 0.0) + K
        self.b[i] = target
        self.size[target] += 1
        self.members[target].add(i)
        self.size[r] -= 1
        self.members[r].discard(i)
        if self.size[r] == 0:
            self._unregister_block(r)

    # -- block merges ---------------------------------------------------------------

    def merge_delta(self, a: int, bblk: int) -> float:
        if a == bblk:
            return 0.0
        if self.btype[a] != self.btype[bblk]:
            raise InvalidMove("cannot merge blocks of different types")
        delta = 0.0
        for layer in LAYERS:
            if self.E[layer] <= 0.0:
                continue
            rows = self.mrs[layer]
            deg = self.er[layer]
            row_a = rows.get(a, {})
            row_b = rows.get(bblk, {})
            da = deg.get(a, 0.0)
            db = deg.get(bblk, 0.0)
            dm = da + db
            old = 0.0
            new = 0.0
            overlap = 0
            seen = set()
            for x, e in row_a.items():
                seen.add(x)
                ex = deg.get(x, 0.0)
                old += _pair_term(e, da, ex)
                eb = row_b.get(x, 0.0)
                if eb > 0.0:
                    overlap += 1
                new += _pair_term(e + eb, dm, ex)
            for x, e in row_b.items():
                ex = deg.get(x, 0.0)
                old += _pair_term(e, db, ex)
                if x not in seen:
                    new += _pair_term(e, dm, ex)
            delta += old - new
            delta -= overlap * log(self.E[layer] + 1.0)
        delta += self._label_delta(self.btype[a], -1)
        return delta

    def apply_merge(self, a: int, bblk: int) -> None:
        """Fold block a into block b."""
        if a == bblk:
            return
        for layer in LAYERS:
            rows = self.mrs[layer]
            deg = self.er[layer]
            row_a = rows.get(a, {})
            row_b = rows.setdefault(bblk, {})
            for x, e in row_a.items():
                if x in row_b:
                    self.n_pairs[layer] -= 1
                row_b[x] = row_b.get(x, 0.0) + e
                if x not in (a, bblk):
                    xrow = rows[x]
                    xrow.pop(a, None)
                    xrow[bblk] = row_b[x]
            da = deg.get(a, 0.0)
            if da:
                deg[bblk] = deg.get(bblk, 0.0) + da
            if not row_b:
                rows.pop(bblk, None)
        for i in self.members[a]:
            self.b[i] = bblk
        self.members[bblk].update(self.members[a])
        self.size[bblk] += self.size[a]
        self.size[a] = 0
        self._unregister_block(a)

    # -- exports ----------------------------------------------------------------------

    def blocks_of_type(self, t: int) -> list[int]:
        return self.type_blocks[t]

    def canonical_assignments(self) -> list[list[int]]:
        """Per-type contiguous labels in first-occurrence (node order) form."""
        relabel: dict[int, int] = {}
        counters = [0] * N_TYPES
        out: list[list[int]] = [[] for _ in range(N_TYPES)]
        for i, blk in enumerate(self.b):
            t = self.node_type[i]
            if blk not in relabel:
                relabel[blk] = counters[t]
                counters[t] += 1
            out[t].append(relabel[blk])
        return out

    def block_graph(self) -> tuple[list[int], list[list[list[tuple[int, float]]]]]:
        """Collapse blocks to nodes: returns (node_type, adjacency) for the
        next level, with block nodes ordered canonically (type, then first
        occurrence)."""
        assigns = self.canonical_assignments()
        counts = [(1 + max(a)) if a else 0 for a in assigns]
        offsets = [0] * N_TYPES
        for t in range(1, N_TYPES):
            offsets[t] = offsets[t - 1] + counts[t - 1]
        # map global block id -> new node index
        relabel: dict[int, int] = {}
        counters = [0] * N_TYPES
        for i, blk in enumerate(self.b):
            t = self.node_type[i]
            if blk not in relabel:
                relabel[blk] = offsets[t] + counters[t]
                counters[t] += 1
        n = sum(counts)
        node_type = [0] * n
        for t in range(N_TYPES):
            for k in range(counts[t]):
                node_type[offsets[t] + k] = t
        adjacency: list[list[list[tuple[int, float]]]] = [[[], []] for _ in range(n)]
        for layer in LAYERS:
            for r, row in self.mrs[layer].items():
                for s, e in row.items():
                    if r < s:
                        u, v = relabel[r], relabel[s]
                        adjacency[u][layer].append((v, e))
                        adjacency[v][layer].append((u, e))
        return node_type, adjacency


def _states_for(network: ContractedNetwork, partition: Partition) -> list[BlockState]:
    """One BlockState per level, each built on the previous level's block graph."""
    n_entities = [network.n_atoms, network.n_docs, network.n_codes, network.n_categories]
    partition.validate(n_entities)
    node_type = list(network.node_type)
    adjacency = network.adjacency
    totals = network.totals
    states = []
    for level in range(partition.height):
        assigns = partition.levels[level]
        counts = [(1 + max(a)) if a else 0 for a in assigns]
        offsets = [0] * N_TYPES
        for t in range(1, N_TYPES):
            offsets[t] = offsets[t - 1] + counts[t - 1]
        init = [0] * len(node_type)
        cursor = [0] * N_TYPES
        for i, t in enumerate(node_type):
            init[i] = offsets[t] + assigns[t][cursor[t]]
            cursor[t] += 1
        state = BlockState(node_type, adjacency, totals, init)
        states.append(state)
        node_type, adjacency = state.block_graph()
    return states


def description_length(network: ContractedNetwork, partition: Partition) -> ObjectiveValue:
    """Evaluate the hierarchy objective; deterministic for identical inputs."""
    breakdown = []
    total = 0.0
    for state in _states_for(network, partition):
        entry = state.breakdown()
        breakdown.append(entry)
        for layer in entry.values():
            total += -layer["F"] + layer["P"]
    return ObjectiveValue(total=total, breakdown=breakdown)


def apply_move_to_partition(partition: Partition, network: ContractedNetwork,
                            node: int, target_block: int) -> Partition:
    """Partition after moving one level-0 node to ``target_block`` (its type's
    block id; pass the current block count for a fresh block).

    A fresh block inherits the source block's upper-level assignment; an
    emptied block is dropped from every level above, cascading, and block ids
    are re-canonicalized.
    """
    t = network.node_type[node]
    type_offsets = [0, network.n_atoms, network.n_atoms + network.n_docs,
                    network.n_atoms + network.n_docs + network.n_codes]
    entity = node - type_offsets[t]
    levels = [[list(a) for a in lvl] for lvl in partition.levels]
    assign = levels[0][t]
    source = assign[entity]
    n_blocks = 1 + max(assign)
    if target_block == source:
        return Partition(levels)
    if not (0 <= target_block <= n_blocks):
        raise InvalidMove(f"target block {target_block} outside 0..{n_blocks}")
    assign[entity] = target_block
    if target_block == n_blocks and partition.height > 1:
        levels[1][t].append(levels[1][t][source])
    # drop emptied blocks level by level, renumbering canonically
    for level in range(partition.height):
        assign = levels[level][t]
        if not assign:
            break
        present = sorted(set(assign))
        relabel = {old: new for new, old in enumerate(present)}
        levels[level][t] = [relabel[x] for x in assign]
        if level + 1 < partition.height:
            levels[level + 1][t] = [levels[level + 1][t][old] for old in present]
    return Partition(levels)


def delta_dl(network: ContractedNetwork, partition: Partition,
             node: int, target_block: int) -> float:
    """DL(after) - DL(before) for a single level-0 node move."""
    if not (0 <= node < network.n_nodes):
        raise InvalidMove(f"node {node} outside the network")
    after = apply_move_to_partition(partition, network, node, target_block)
    return description_length(network, after).total - description_length(
        network, partition
    ).total


def word_cluster_of(partition: Partition, word_id: int, level: int) -> int:
    """Cluster id of a word at a level (expanded partitions index real words)."""
    return partition.cluster_of(WORD, word_id, level)


def doc_cluster_of(partition: Partition, doc_index: int, level: int) -> int:
    return partition.cluster_of(DOC, doc_index, level)


def doc_cluster_prob(network: ContractedNetwork, partition: Partition,
                     doc_id: str, word_cluster_id: int, level: int) -> float:
    """Fraction of the document's tokens lying in one word cluster at a level.

    ``partition`` is over contracted nodes (atom resolution); membership of an
    atom decides membership of all its words, so the expanded and contracted
    readings agree.
    """
    node = network.doc_node.get(doc_id)
    if node is None:
        raise EmptyDocument(f"document {doc_id!r} is not in the model")
    edges = network.adjacency[node][TEXT]
    total = sum(w for _, w in edges)
    if total <= 0:
        raise EmptyDocument(f"document {doc_id!r} has no tokens")
    atom_clusters = partition.clusters_at(WORD, level)
    inside = sum(w for atom, w in edges if atom_clusters[atom] == word_cluster_id)
    return inside / total
