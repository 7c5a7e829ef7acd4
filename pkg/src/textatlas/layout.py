"""Hexagonal corpus map: Gosper-curve cell order, document placement,
region boundaries, and annotation pins.

Documents are laid onto consecutive cells of a Gosper (flowsnake) curve in
depth-first hierarchy order, so every cluster occupies a contiguous curve run
and therefore a connected, organically shaped map region. Axial coordinates
use pointy-top hexes of unit circumradius; plane coordinates put x east and
y south.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .annotations import AnnotationStore
from .blockmodel import Partition
from .errors import OrderTooLarge
from .network import DOC

# axial steps counterclockwise starting east; turning left is index +1
_DIRECTIONS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))
_SQRT3 = math.sqrt(3.0)

_RULES = {"A": "A-B--B+A++AA+B-", "B": "+A-BB--B-A++A+B"}
MAX_ORDER = 8


def gosper_curve(order: int) -> list[tuple[int, int]]:
    """Axial coordinates of the 7**order cells along the flowsnake curve."""
    if order < 0:
        raise ValueError("order must be >= 0")
    if order > MAX_ORDER:
        raise OrderTooLarge(f"order {order} exceeds the {MAX_ORDER} cell-count guard")
    program = "A"
    for _ in range(order):
        program = "".join(_RULES.get(ch, ch) for ch in program)
    q, r = 0, 0
    heading = 0
    cells: list[tuple[int, int]] = []
    for ch in program:
        if ch == "+":
            heading = (heading + 1) % 6
        elif ch == "-":
            heading = (heading - 1) % 6
        else:
            cells.append((q, r))
            dq, dr = _DIRECTIONS[heading]
            q += dq
            r += dr
    return cells


def axial_to_plane(q: int, r: int) -> tuple[float, float]:
    """Center of a pointy-top unit-circumradius hex."""
    return (_SQRT3 * (q + r / 2.0), 1.5 * r)


def hex_corner(q: int, r: int, corner: int) -> tuple[float, float]:
    """Corner k at angle 30 + 60k degrees from the center."""
    cx, cy = axial_to_plane(q, r)
    angle = math.radians(30.0 + 60.0 * corner)
    return (cx + math.cos(angle), cy + math.sin(angle))


@dataclass
class GosperLayout:
    """Document-to-cell assignment plus everything needed for boundaries."""

    order: int
    cells: list[tuple[int, int]]
    doc_cells: dict[str, int]
    doc_order: list[str]                      # documents in curve order
    doc_clusters: list[dict[str, int]]        # per level: doc id -> cluster id
    cell_index: dict[tuple[int, int], int] = field(init=False)

    def __post_init__(self):
        self.cell_index = {cell: i for i, cell in enumerate(self.cells)}

    @property
    def height(self) -> int:
        return len(self.doc_clusters)

    def cluster_cells(self, level: int) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for doc_id, cell in self.doc_cells.items():
            out.setdefault(self.doc_clusters[level][doc_id], []).append(cell)
        return out


def smallest_order(n_documents: int) -> int:
    order = 0
    while 7 ** order < n_documents:
        order += 1
    return order


def layout_documents(partition: Partition, doc_ids: list[str]) -> GosperLayout:
    """Assign documents to curve cells in depth-first hierarchy order.

    Clusters are visited by descending document count then ascending cluster
    id; inside a level-0 cluster documents follow ascending id. Contiguous
    curve runs make every cluster a connected region at every level.
    """
    n = len(doc_ids)
    order = smallest_order(n)
    if order > MAX_ORDER:
        raise OrderTooLarge(f"{n} documents need order {order} > {MAX_ORDER}")
    cells = gosper_curve(order)
    height = partition.height
    clusters_by_level = [partition.clusters_at(DOC, level) for level in range(height)]

    def subtree_docs(level: int, cluster: int, parent_pool: list[int]) -> list[int]:
        return [i for i in parent_pool if clusters_by_level[level][i] == cluster]

    ordered: list[int] = []

    def walk(level: int, pool: list[int]) -> None:
        if level < 0:
            ordered.extend(sorted(pool, key=lambda i: doc_ids[i]))
            return
        groups: dict[int, list[int]] = {}
        for i in pool:
            groups.setdefault(clusters_by_level[level][i], []).append(i)
        for cluster in sorted(groups, key=lambda c: (-len(groups[c]), c)):
            walk(level - 1, groups[cluster])

    walk(height - 1, list(range(n)))
    assert len(ordered) == n

    doc_cells = {doc_ids[i]: pos for pos, i in enumerate(ordered)}
    doc_clusters = [
        {doc_ids[i]: clusters_by_level[level][i] for i in range(n)}
        for level in range(height)
    ]
    return GosperLayout(
        order=order,
        cells=cells,
        doc_cells=doc_cells,
        doc_order=[doc_ids[i] for i in ordered],
        doc_clusters=doc_clusters,
    )


def _corner_key(point: tuple[float, float]) -> tuple[int, int]:
    return (round(point[0] * 1e6), round(point[1] * 1e6))


def region_boundaries(layout: GosperLayout, level: int) -> dict[int, list[list[tuple[float, float]]]]:
    """Closed boundary polygons per cluster at one hierarchy level.

    A boundary segment is a hex side whose two cells belong to different
    clusters (or cluster vs empty). Segments are oriented with the region
    interior on the left and stitched into rings; a region with an enclosed
    hole yields one outer ring plus one ring per hole.
    """
    cluster_of_cell: dict[tuple[int, int], int] = {}
    for doc_id, cell_idx in layout.doc_cells.items():
        cluster_of_cell[layout.cells[cell_idx]] = layout.doc_clusters[level][doc_id]

    edges_by_cluster: dict[int, list[tuple[tuple[float, float], tuple[float, float]]]] = {}
    for (q, r), cluster in cluster_of_cell.items():
        for d, (dq, dr) in enumerate(_DIRECTIONS):
            neighbor = (q + dq, r + dr)
            if cluster_of_cell.get(neighbor) == cluster:
                continue
            # direction d points at angle -60d; its side is flanked by
            # corners -d-1 and -d, ordered so the region stays on one side
            c_from = hex_corner(q, r, (-d - 1) % 6)
            c_to = hex_corner(q, r, (-d) % 6)
            edges_by_cluster.setdefault(cluster, []).append((c_from, c_to))

    polygons: dict[int, list[list[tuple[float, float]]]] = {}
    for cluster, edges in edges_by_cluster.items():
        outgoing: dict[tuple[int, int], list[tuple[tuple[float, float], tuple[float, float]]]] = {}
        for edge in edges:
            outgoing.setdefault(_corner_key(edge[0]), []).append(edge)
        rings: list[list[tuple[float, float]]] = []
        for edge in edges:
            start_key = _corner_key(edge[0])
            bucket = outgoing.get(start_key)
            if not bucket or edge not in bucket:
                continue
            ring: list[tuple[float, float]] = []
            current = edge
            while True:
                bucket = outgoing[_corner_key(current[0])]
                bucket.remove(current)
                ring.append(current[0])
                next_key = _corner_key(current[1])
                candidates = outgoing.get(next_key)
                if not candidates:
                    break
                current = candidates[0]
            rings.append(ring)
        polygons[cluster] = rings
    return polygons


def boundary_edge_count(layout: GosperLayout, level: int) -> int:
    """Direct per-cell recount of boundary sides (oracle for the polygons)."""
    cluster_of_cell = {}
    for doc_id, cell_idx in layout.doc_cells.items():
        cluster_of_cell[layout.cells[cell_idx]] = layout.doc_clusters[level][doc_id]
    count = 0
    for (q, r), cluster in cluster_of_cell.items():
        for dq, dr in _DIRECTIONS:
            if cluster_of_cell.get((q + dq, r + dr)) != cluster:
                count += 1
    return count


@dataclass
class Pin:
    doc_id: str
    cell: int
    unique_category_count: int
    category_color_indexes: list[int]

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "cell": self.cell,
            "unique_category_count": self.unique_category_count,
            "category_color_indexes": self.category_color_indexes,
        }


def pin_overlay(layout: GosperLayout, store: AnnotationStore,
                filters: Iterable[str] | None = None) -> list[Pin]:
    """One pin per mapped document with a passing highlight.

    ``filters`` of None shows every code; an explicit set keeps only those
    codes, so the empty set removes all pins. Uncategorized codes count as
    one extra category rendered with color index -1.
    """
    allowed = None if filters is None else set(filters)
    by_doc: dict[str, set[int]] = {}
    for h in store.highlights.values():
        if allowed is not None and h.code_id not in allowed:
            continue
        if h.doc_id not in layout.doc_cells:
            continue
        code = store.codes[h.code_id]
        if code.category_id and code.category_id in store.categories:
            color = store.categories[code.category_id].color_index
        else:
            color = -1
        by_doc.setdefault(h.doc_id, set()).add(color)
    pins = []
    for doc_id in sorted(by_doc):
        colors = sorted(by_doc[doc_id])
        pins.append(Pin(
            doc_id=doc_id,
            cell=layout.doc_cells[doc_id],
            unique_category_count=len(colors),
            category_color_indexes=colors,
        ))
    return pins
