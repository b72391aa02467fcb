"""Layered {p,q} tilings grown outward from a central tile.

Layer ``n`` holds the tiles at edge-distance ``n`` from the central (TOP) tile.
A tile glued to the previous layer along one edge is an edge polygon (EP); one
glued along two edges sharing a vertex is a vertex polygon (VP). Legs are
numbered ``1..p`` counterclockwise, inward legs first.

The growth keeps the boundary as a cyclic list of outward legs together with,
for each boundary vertex, the number of already placed tiles around it. A vertex
that has ``q - 1`` tiles is closed by a VP in the next layer; every other
boundary edge receives an EP.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

TOP, EP, VP = "TOP", "EP", "VP"
GOLDEN = (1 + math.sqrt(5)) / 2
GROWTH = (3 + math.sqrt(5)) / 2


class TilingGraph:
    """Immutable layered tiling with integer tile indices.

    Tiles are indexed in construction order (layer by layer, counterclockwise
    within a layer). Public ids are ``(layer, position)`` pairs.

    Attributes:
        p: Polygon size.
        q: Polygons per vertex.
        roles: Role per tile index.
        layers: Layer per tile index.
        boundary: Cyclic list of dangling ``(tile, leg)`` slots.
    """

    def __init__(self, p, q, roles, layers, positions, inward, boundary):
        self.p = p
        self.q = q
        self.roles = tuple(roles)
        self.layers = tuple(layers)
        self.positions = tuple(positions)
        self._inward = tuple(tuple(x) for x in inward)
        self.boundary = tuple(boundary)
        self._link = {}
        for t, legs in enumerate(self._inward):
            for leg, (u, ul) in enumerate(legs, start=1):
                self._link[(t, leg)] = (u, ul)
                self._link[(u, ul)] = (t, leg)
        self._index = {(self.layers[t], self.positions[t]): t for t in range(len(self.roles))}

    # -- basic queries -----------------------------------------------------
    @property
    def n_tiles(self) -> int:
        return len(self.roles)

    @property
    def n_layers(self) -> int:
        return max(self.layers)

    def tile_id(self, t: int) -> tuple[int, int]:
        return (self.layers[t], self.positions[t])

    def index_of(self, tile_id) -> int:
        return self._index[tuple(tile_id)]

    def n_inward(self, t: int) -> int:
        return len(self._inward[t])

    def inward(self, t: int) -> tuple:
        """``(parent, parent_leg)`` for inward legs ``1..n_inward(t)``."""
        return self._inward[t]

    def parents(self, t: int) -> tuple[int, ...]:
        return tuple(u for u, _ in self._inward[t])

    def outward_legs(self, t: int) -> range:
        return range(self.n_inward(t) + 1, self.p + 1)

    def neighbor(self, t: int, leg: int):
        """The ``(tile, leg)`` glued to ``(t, leg)``, or ``None`` if dangling."""
        return self._link.get((t, leg))

    def tiles_in_layer(self, n: int) -> list[int]:
        return [t for t in range(self.n_tiles) if self.layers[t] == n]

    @property
    def tiles(self) -> list[tuple]:
        """``(id, layer, role)`` per tile."""
        return [(self.tile_id(t), self.layers[t], self.roles[t]) for t in range(self.n_tiles)]

    @property
    def edges(self) -> list[tuple]:
        """``(tile_a, leg_a, tile_b, leg_b)`` with ``a`` the inner tile."""
        out = []
        for t, legs in enumerate(self._inward):
            for leg, (u, ul) in enumerate(legs, start=1):
                out.append((self.tile_id(u), ul, self.tile_id(t), leg))
        return out

    def boundary_owner(self, site: int) -> int:
        return self.boundary[site][0]

    # -- derived structures ------------------------------------------------
    def ancestors(self, tiles) -> set[int]:
        """``tiles`` together with everything reachable along inward legs."""
        seen = set(tiles)
        stack = list(tiles)
        while stack:
            t = stack.pop()
            for u in self.parents(t):
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return seen

    def subgraph(self, tiles) -> "TilingGraph":
        """Restriction to an ancestor-closed tile set; the boundary is re-walked."""
        keep = sorted(set(tiles))
        if not keep or self.roles[keep[0]] != TOP:
            raise ValueError("subgraph must contain the TOP tile")
        if self.ancestors(keep) != set(keep):
            raise ValueError("subgraph tile set must be closed under parents")
        new = {t: k for k, t in enumerate(keep)}
        inward = [[(new[u], ul) for u, ul in self._inward[t]] for t in keep]
        sub = TilingGraph(self.p, self.q, [self.roles[t] for t in keep],
                          [self.layers[t] for t in keep], [self.positions[t] for t in keep],
                          inward, [])
        sub.boundary = tuple(sub.walk_boundary())
        return sub

    def walk_boundary(self, start=None) -> list[tuple[int, int]]:
        """Traverse the dangling slots counterclockwise.

        From a dangling slot ``(t, k)`` the next candidate is ``(t, k+1)``; when a
        candidate is glued to ``(u, m)`` the walk continues with ``(u, m+1)``.
        """
        if start is None:
            start = next((t, k) for t in range(self.n_tiles) for k in range(1, self.p + 1)
                         if (t, k) not in self._link)
        out = [start]
        t, k = start
        limit = self.n_tiles * self.p + 1
        while True:
            k = k % self.p + 1
            steps = 0
            while (t, k) in self._link:
                t, k = self._link[(t, k)]
                k = k % self.p + 1
                steps += 1
                if steps > limit:
                    raise RuntimeError("boundary walk did not terminate")
            if (t, k) == start:
                return out
            out.append((t, k))
            if len(out) > limit:
                raise RuntimeError("boundary walk did not close")

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "layers": self.n_layers,
            "tiles": [[list(i), n, r] for i, n, r in self.tiles],
            "edges": [[list(a), la, list(b), lb] for a, la, b, lb in self.edges],
            "boundary": [[list(self.tile_id(t)), k] for t, k in self.boundary],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "TilingGraph":
        ids = [tuple(i) for i, _, _ in data["tiles"]]
        index = {tid: k for k, tid in enumerate(ids)}
        inward = [[] for _ in ids]
        for a, la, b, lb in data["edges"]:
            slot = inward[index[tuple(b)]]
            while len(slot) < lb:
                slot.append(None)
            slot[lb - 1] = (index[tuple(a)], la)
        g = cls(data["p"], data["q"], [r for _, _, r in data["tiles"]],
                [n for _, n, _ in data["tiles"]], [i[1] for i in ids], inward,
                [(index[tuple(t)], k) for t, k in data["boundary"]])
        return g

    @classmethod
    def from_json(cls, text: str) -> "TilingGraph":
        return cls.from_dict(json.loads(text))


def build_tiling(p: int, q: int, layers: int) -> TilingGraph:
    """Grow ``layers`` layers of the {p,q} tiling around a central tile.

    Args:
        p: Polygon size (at least 3).
        q: Polygons meeting at each vertex; must be even.
        layers: Number of layers beyond the central tile.

    Raises:
        ValueError: For Euclidean/spherical ``(p, q)``, odd ``q``, or a growth
            step that would need a tile glued along three or more edges.
    """
    if p < 3 or q < 3 or (p - 2) * (q - 2) <= 4:
        raise ValueError(f"{{{p},{q}}} is not a hyperbolic tiling")
    if q % 2:
        raise ValueError("odd q is not supported")
    if layers < 0:
        raise ValueError("layers must be non-negative")
    roles, lays, pos, inward = [TOP], [0], [0], [[]]
    bnd = [(0, k) for k in range(1, p + 1)]
    corners = [1] * p  # tiles around the vertex after each boundary edge
    closing = q - 1
    for n in range(1, layers + 1):
        m = len(bnd)
        start = next(i for i in range(m) if corners[i - 1] < closing)
        new_bnd, new_corners = [], []
        i, position = 0, 0
        while i < m:
            run = [(start + i) % m]
            while corners[run[-1]] == closing:
                run.append((run[-1] + 1) % m)
            r = len(run)
            if r > 2 or r >= p - 1:
                raise ValueError(f"{{{p},{q}}} needs tiles glued along {r} edges; unsupported")
            t = len(roles)
            roles.append(EP if r == 1 else VP)
            lays.append(n)
            pos.append(position)
            position += 1
            inward.append([bnd[e] for e in reversed(run)])
            new_bnd += [(t, leg) for leg in range(r + 1, p + 1)]
            new_corners += [1] * (p - r - 1) + [corners[run[-1]] + 2]
            i += r
        bnd, corners = new_bnd, new_corners
    return TilingGraph(p, q, roles, lays, pos, inward, bnd)


def layer_counts(g: TilingGraph) -> list[tuple[int, int]]:
    """``(EP count, VP count)`` per layer ``0..n_layers``; TOP is not counted."""
    counts = [[0, 0] for _ in range(g.n_layers + 1)]
    for role, n in zip(g.roles, g.layers):
        if role == EP:
            counts[n][0] += 1
        elif role == VP:
            counts[n][1] += 1
    return [tuple(c) for c in counts]


def boundary_distance(g: TilingGraph, i: int, j: int) -> int:
    """Cyclic index distance between boundary sites."""
    m = len(g.boundary)
    d = abs(i - j) % m
    return min(d, m - d)


@dataclass(frozen=True)
class MeetingDepth:
    """Ascent steps until two causal cones share a tile, with the log estimate."""

    depth: int
    estimate: float


def layers_for_separation(i: int, j: int, g: TilingGraph) -> MeetingDepth:
    """Number of layers two boundary sites ascend before their cones meet.

    The estimate is ``log|i-j| / log((3+sqrt 5)/2)`` with the cyclic separation.
    """
    if i == j:
        raise ValueError("sites must differ")
    a, b = {g.boundary_owner(i)}, {g.boundary_owner(j)}
    depth = 0
    while not a & b:
        a = {u for t in a for u in g.parents(t)}
        b = {u for t in b for u in g.parents(t)}
        depth += 1
    sep = boundary_distance(g, i, j)
    return MeetingDepth(depth, math.log(sep) / math.log(GROWTH))


def cone_layers(g: TilingGraph, site: int) -> list[set[int]]:
    """Tiles of the ascending cone of ``site``, outermost layer first."""
    cur = {g.boundary_owner(site)}
    out = [cur]
    while any(g.layers[t] > 0 for t in cur):
        cur = {u for t in cur for u in g.parents(t)}
        out.append(cur)
    return out


def well_separated(g: TilingGraph, i: int, j: int, min_layers: int = 2) -> bool:
    """Cones of ``i`` and ``j`` stay disjoint for at least ``min_layers`` ascents."""
    return layers_for_separation(i, j, g).depth >= min_layers
