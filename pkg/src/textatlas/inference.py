"""Fitting hierarchical partitions: agglomerative init plus annealed MCMC.

Each hierarchy level is fit on its own block multigraph, greedily from the
bottom: start from singletons, repeatedly apply the best of m sampled
candidate merges while it lowers the objective, then run single-node
Metropolis sweeps with temperature annealed linearly from 1 to 0. The level's
blocks become the next level's nodes until one block per type remains (or the
level cap forces a final merge). The best of several seeded restarts, by
total description length, wins. Fully deterministic given the seed.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from math import exp
from typing import Callable

from .blockmodel import (
    LAYERS,
    N_TYPES,
    BlockState,
    ObjectiveValue,
    Partition,
    description_length,
)
from .network import ContractedNetwork


@dataclass(frozen=True)
class InferenceConfig:
    seed: int = 0
    restarts: int = 5
    sweeps_per_level: int = 100
    agglomerate_candidates: int = 20
    max_levels: int = 5
    min_levels: int = 3
    omega: float = 1.0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.sweeps_per_level < 0:
            raise ValueError("sweeps_per_level must be >= 0")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")

    def digest(self) -> dict:
        return {
            "seed": self.seed,
            "restarts": self.restarts,
            "sweeps_per_level": self.sweeps_per_level,
            "agglomerate_candidates": self.agglomerate_candidates,
            "max_levels": self.max_levels,
            "min_levels": self.min_levels,
            "omega": self.omega,
        }


def temperature(sweep: int, total_sweeps: int) -> float:
    """Linear 1 -> 0 over the sweep schedule."""
    if total_sweeps <= 1:
        return 0.0
    return 1.0 - sweep / (total_sweeps - 1)


def accept_probability(delta: float, t: float) -> float:
    """Metropolis rule: downhill always, uphill with exp(-delta/T)."""
    if delta < 0.0:
        return 1.0
    if t <= 0.0:
        return 0.0
    arg = -delta / t
    if arg < -700.0:
        return 0.0
    return min(1.0, exp(arg))


def _would_fully_collapse(state: BlockState, t: int) -> bool:
    """True when removing one block of type t leaves one block per type."""
    if state.nb[t] != 2:
        return False
    return all(state.nb[u] <= 1 for u in range(N_TYPES) if u != t)


def _sample_merge_pair(state: BlockState, t: int, rng: random.Random):
    blocks = state.type_blocks[t]
    r = blocks[rng.randrange(len(blocks))]
    # prefer a partner sharing a neighbor block with r
    for layer in LAYERS:
        row = state.mrs[layer].get(r)
        if row:
            x = rng.choice(list(row))
            xrow = state.mrs[layer].get(x, {})
            partners = [s for s in xrow if s != r and state.btype.get(s) == t]
            if partners:
                return r, rng.choice(partners)
            break
    while True:
        s = blocks[rng.randrange(len(blocks))]
        if s != r:
            return r, s


def _informed_target(state: BlockState, i: int, rng: random.Random) -> int | None:
    """A same-type block reachable through one neighbor: blocks of i's
    neighbors' neighbors, where profile overlap makes moves informative."""
    t = state.node_type[i]
    for layer in LAYERS:
        adj = state.adj[i][layer]
        if not adj:
            continue
        j, _ = adj[rng.randrange(len(adj))]
        row = state.mrs[layer].get(state.b[j])
        if not row:
            continue
        pick = rng.randrange(len(row))
        for k, blk in enumerate(row):
            if k == pick:
                return blk if state.btype.get(blk) == t else None
    return None


def _equilibrate_pass(state: BlockState, rng: random.Random,
                      allow_total_collapse: bool) -> None:
    """One greedy pass of informed single-node moves (running DL never rises)."""
    order = list(range(len(state.b)))
    rng.shuffle(order)
    for i in order:
        target = _informed_target(state, i, rng)
        current = state.b[i]
        if target is None or target == current:
            continue
        if (
            not allow_total_collapse
            and state.size[current] == 1
            and _would_fully_collapse(state, state.node_type[i])
        ):
            continue
        if state.move_delta(i, target) < 0.0:
            state.apply_move(i, target)


def _agglomerate(state: BlockState, rng: random.Random, m: int,
                 allow_total_collapse: bool) -> None:
    # re-equilibrate each time the block count falls below this watermark,
    # so early mis-merges are repaired while the structure is still coarse
    checkpoint = len(state.size) / 1.25
    misses = 0
    while True:
        if len(state.size) < checkpoint:
            _equilibrate_pass(state, rng, allow_total_collapse)
            _equilibrate_pass(state, rng, allow_total_collapse)
            checkpoint = len(state.size) / 1.25
        types = [t for t in range(N_TYPES) if state.nb[t] >= 2]
        if not types:
            return
        total_pairs = sum(state.nb[t] * (state.nb[t] - 1) // 2 for t in types)
        candidates: list[tuple[int, int]] = []
        if total_pairs <= m:
            for t in types:
                blocks = sorted(state.type_blocks[t])
                for i in range(len(blocks)):
                    for j in range(i + 1, len(blocks)):
                        candidates.append((blocks[i], blocks[j]))
        else:
            # draw types proportionally to their mergeable block counts so a
            # nearly-converged type cannot monopolize the candidate budget
            weights = [state.nb[t] - 1 for t in types]
            total_weight = sum(weights)
            for _ in range(m):
                pick = rng.randrange(total_weight)
                for t, w in zip(types, weights):
                    pick -= w
                    if pick < 0:
                        break
                candidates.append(_sample_merge_pair(state, t, rng))
        best_key: tuple[float, int, int] | None = None
        best_pair: tuple[int, int] | None = None
        for r, s in candidates:
            if not allow_total_collapse and _would_fully_collapse(state, state.btype[r]):
                continue
            # fold the higher id into the lower for stable tie-breaking
            a, bblk = (s, r) if r < s else (r, s)
            delta = state.merge_delta(a, bblk)
            key = (delta, bblk, a)
            if best_key is None or key < best_key:
                best_key = key
                best_pair = (a, bblk)
        if best_key is None or best_key[0] >= 0.0:
            # the stop condition is sampled, so tolerate a few empty rounds
            # before concluding no downhill merge remains
            misses += 1
            if misses >= 3 or total_pairs <= m:
                return
            continue
        misses = 0
        state.apply_merge(best_pair[0], best_pair[1])


def _sweeps(state: BlockState, rng: random.Random, n_sweeps: int,
            allow_total_collapse: bool) -> None:
    n = len(state.b)
    if n == 0:
        return
    order = list(range(n))
    for sweep in range(n_sweeps):
        t_temp = temperature(sweep, n_sweeps)
        rng.shuffle(order)
        for i in order:
            t = state.node_type[i]
            blocks = state.type_blocks[t]
            choice = rng.randrange(len(blocks) + 1)
            target = state.next_block if choice == len(blocks) else blocks[choice]
            current = state.b[i]
            if target == current:
                continue
            if (
                not allow_total_collapse
                and state.size[current] == 1
                and target != state.next_block
                and _would_fully_collapse(state, t)
            ):
                continue
            delta = state.move_delta(i, target)
            p = accept_probability(delta, t_temp)
            if p >= 1.0 or (p > 0.0 and rng.random() < p):
                state.apply_move(i, target)


@dataclass
class FitReport:
    """Fitted hierarchy with its objective and per-level block counts."""

    partition: Partition
    objective: ObjectiveValue
    block_counts: list[list[int]] = field(default_factory=list)


def _level_dls(objective: ObjectiveValue) -> tuple[float, ...]:
    return tuple(
        sum(-layer["F"] + layer["P"] for layer in level.values())
        for level in objective.breakdown
    )


def fit_hierarchy(network: ContractedNetwork, config: InferenceConfig | None = None,
                  progress: Callable[[float], None] | None = None) -> FitReport:
    """Best-of-restarts greedy hierarchy fit over the contracted network.

    Restarts are compared by their per-level objective values, lexicographically
    from level 0 up: the base partition describes the data, upper levels only
    summarize it, so a restart never wins on hierarchy bookkeeping while losing
    on the level that matters.
    """
    config = config or InferenceConfig()
    best: tuple[tuple[float, ...], Partition] | None = None
    for restart in range(config.restarts):
        rng = random.Random(config.seed * 1_000_003 + restart)
        partition = _fit_once(network, config, rng)
        key = _level_dls(description_length(network, partition))
        if best is None or key < best[0]:
            best = (key, partition)
        if progress is not None:
            progress((restart + 1) / config.restarts)
    assert best is not None
    partition = best[1]
    objective = description_length(network, partition)
    counts = [partition.block_counts(level) for level in range(partition.height)]
    return FitReport(partition=partition, objective=objective, block_counts=counts)


def _fit_once(network: ContractedNetwork, config: InferenceConfig,
              rng: random.Random) -> Partition:
    node_type = list(network.node_type)
    adjacency = network.adjacency
    totals = network.totals
    levels: list[list[list[int]]] = []
    force_merge = False
    while True:
        state = BlockState(node_type, adjacency, totals)
        # the final permitted slot always closes the hierarchy
        if force_merge or len(levels) == config.max_levels - 1:
            _force_full_merge(state)
        else:
            # level 0 is fit unconstrained; above it, hold the hierarchy open
            # until the preferred minimum height is reachable
            allow_collapse = (
                len(levels) == 0 or len(levels) + 1 >= config.min_levels
            )
            n_before = len(state.size)
            _agglomerate(state, rng, config.agglomerate_candidates, allow_collapse)
            _sweeps(state, rng, config.sweeps_per_level, allow_collapse)
            if len(state.size) == n_before:
                if levels:
                    # an identity level would stall the recursion and only
                    # add penalty: close the hierarchy here instead
                    _force_full_merge(state)
                else:
                    force_merge = True
        levels.append(state.canonical_assignments())
        if all(state.nb[t] <= 1 for t in range(N_TYPES)):
            break
        node_type, adjacency = state.block_graph()
    return Partition(levels)


def _force_full_merge(state: BlockState) -> None:
    for t in range(N_TYPES):
        blocks = sorted(state.type_blocks[t])
        for blk in blocks[1:]:
            state.apply_merge(blk, blocks[0])
