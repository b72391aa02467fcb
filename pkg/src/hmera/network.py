"""Tensor networks on a layered tiling and their contraction.

Each tile carries a two-copy tensor with five planar legs of dimension 4:

* TOP: two copies of the top tensor,
* EP: the imperfect tensor with logical legs at ``|0_L 0_L>``,
* VP: two copies of the perfect tensor with bulk state ``|phi>|phi>``.

Tile tensors are stored as normalized states scaled by ``sqrt(D_in)`` where
``D_in`` is the dimension of the inward legs, so every tile is an isometry
from its inward legs to its outward legs and the boundary state has unit norm.
Reduced density matrices are obtained by contracting the ket/bra double layer
of the ascending causal cone only; every other tile cancels against its
conjugate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import opt_einsum as oe

from . import tensors as tz
from .tiling import EP, TOP, VP, TilingGraph

MAX_FULL_SITES = 12
MAX_RDM_SITES = 4


def bulk_qubit(alpha: float, beta: float) -> np.ndarray:
    """``cos(alpha)|0> + exp(i beta) sin(alpha)|1>``."""
    return np.array([np.cos(alpha), np.exp(1j * beta) * np.sin(alpha)])


@dataclass
class BulkConfig:
    """Logical states on the tiles.

    Attributes:
        alpha: Polar angle of the bulk qubit on VP tiles and TOP (both copies).
        beta: Azimuthal angle of that qubit.
        ep_logical: Logical state of imperfect tiles, e.g. ``"00"``.
        overrides: Tile index -> ``(alpha, beta)`` replacing the default qubit.
        open_tiles: Tile indices whose logical legs stay open (encoding map).
    """

    alpha: float = math.pi / 3
    beta: float = 0.0
    ep_logical: str = "00"
    overrides: dict = field(default_factory=dict)
    open_tiles: frozenset = frozenset()

    def qubit(self, t: int) -> np.ndarray:
        a, b = self.overrides.get(t, (self.alpha, self.beta))
        return bulk_qubit(a, b)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "ep_logical": self.ep_logical,
                "overrides": {str(k): list(v) for k, v in self.overrides.items()},
                "open_tiles": sorted(self.open_tiles)}


@dataclass
class NetworkInstance:
    """Tiling plus one tensor per tile.

    Attributes:
        graph: The tiling.
        params: Shared tensor angles.
        bulk: Logical-state configuration.
        theta: Per-tile imperfect angle (EP tiles only).
        regular: Whether every tile is a two-copy perfect tensor.
        tensors: Per-tile arrays; open logical axes (two of dimension 2) come
            first, followed by planar legs ``1..5``.
    """

    graph: TilingGraph
    params: tz.TensorParams
    bulk: BulkConfig
    theta: dict
    regular: bool
    tensors: list

    @property
    def boundary_sites(self) -> int:
        return len(self.graph.boundary)

    def site_of(self) -> dict:
        """``(tile, leg) -> boundary index``."""
        return {slot: s for s, slot in enumerate(self.graph.boundary)}

    def role_tensor_kind(self, t: int) -> str:
        if self.regular:
            return "perfect-2copy"
        return {TOP: "top-2copy", EP: "imperfect", VP: "perfect-2copy"}[self.graph.roles[t]]

    def describe(self) -> dict:
        g = self.graph
        return {
            "regular": self.regular,
            "params": {"theta": self.params.theta, "phi0": self.params.phi0,
                       "phi": list(self.params.phi), "top_paulis": self.params.top_paulis},
            "bulk": self.bulk.to_dict(),
            "tiles": [{"id": list(g.tile_id(t)), "role": g.roles[t], "tensor": self.role_tensor_kind(t),
                       "theta": self.theta.get(t)} for t in range(g.n_tiles)],
            "boundary_sites": self.boundary_sites,
        }


def _tile_tensor(kind: str, theta: float, params: tz.TensorParams, qubit, n_in: int,
                 open_bulk: bool, ep_logical: str) -> np.ndarray:
    if kind == "imperfect":
        p = tz.TensorParams(theta=theta, theta_ij=params.theta_ij if theta == params.theta else None)
        full = tz.imperfect_tensor(p, logical=None).data
        logical = tuple(tz._logical_vector(s) for s in ep_logical)
    elif kind == "top-2copy":
        full = tz.double_top_tensor(params).data
        logical = (qubit, qubit)
    else:
        full = tz.double_perfect_tensor().data
        logical = (qubit, qubit)
    if open_bulk:
        data = full
    else:
        data = np.einsum("abijklm,a,b->ijklm", full, logical[0], logical[1])
        data = data / np.linalg.norm(data)
    return data * math.sqrt(4 ** n_in)


def build_network(g: TilingGraph, params: tz.TensorParams | None = None,
                  bulk: BulkConfig | None = None, theta_by_tile: dict | None = None,
                  regular: bool = False) -> NetworkInstance:
    """Place tensors on every tile of ``g``.

    Args:
        g: Tiling (full or an ancestor-closed subgraph).
        params: Angles; ``params.theta`` is the default EP angle.
        bulk: Logical states; defaults to ``BulkConfig()``.
        theta_by_tile: Optional tile index -> angle overrides for EP tiles.
        regular: Put two-copy perfect tensors on every tile (no substitution).
    """
    params = params or tz.TensorParams()
    bulk = bulk or BulkConfig()
    if g.p != 5:
        raise ValueError("tensors are defined for pentagon tiles only")
    theta = {}
    tensors = []
    cache = {}
    for t in range(g.n_tiles):
        role = g.roles[t]
        kind = "perfect-2copy" if regular else {TOP: "top-2copy", EP: "imperfect", VP: "perfect-2copy"}[role]
        th = 0.0
        if kind == "imperfect":
            th = float((theta_by_tile or {}).get(t, params.theta))
            theta[t] = th
        n_in = g.n_inward(t)
        open_bulk = t in bulk.open_tiles
        a, b = bulk.overrides.get(t, (bulk.alpha, bulk.beta))
        key = (kind, th, a, b, n_in, open_bulk)
        if key not in cache:
            cache[key] = _tile_tensor(kind, th, params, bulk_qubit(a, b), n_in, open_bulk, bulk.ep_logical)
        tensors.append(cache[key])
    return NetworkInstance(g, params, bulk, theta, regular, tensors)


def _bulk_axes(n: NetworkInstance, t: int) -> int:
    return 2 if t in n.bulk.open_tiles else 0


def contract_full(n: NetworkInstance, max_sites: int = MAX_FULL_SITES) -> np.ndarray:
    """Dense boundary state by sequential contraction of every tile.

    Returns:
        The boundary vector (sites in boundary order, each of dimension 4). If
        some tiles have open logical legs, a matrix of shape
        ``(4**sites, 4**n_open)`` is returned instead (the encoding map, with
        logical axes ordered by tile index, copy 1 before copy 2).

    Raises:
        ValueError: If the boundary has more than ``max_sites`` sites.
    """
    g = n.graph
    if n.boundary_sites > max_sites:
        raise ValueError(f"{n.boundary_sites} boundary sites exceed the limit of {max_sites}")
    psi = n.tensors[0]
    open_legs = [(0, "b1"), (0, "b2")][: _bulk_axes(n, 0)] + [(0, k) for k in range(1, 6)]
    for t in range(1, g.n_tiles):
        nb = _bulk_axes(n, t)
        axes_self, axes_psi = [], []
        for leg, slot in enumerate(g.inward(t), start=1):
            axes_self.append(nb + leg - 1)
            axes_psi.append(open_legs.index(slot))
        psi = np.tensordot(psi, n.tensors[t], axes=(axes_psi, axes_self))
        open_legs = [x for i, x in enumerate(open_legs) if i not in axes_psi]
        open_legs += [(t, "b1"), (t, "b2")][:nb]
        open_legs += [(t, k) for k in range(1, 6) if nb + k - 1 not in axes_self]
    bulk_order = [i for i, x in enumerate(open_legs) if isinstance(x[1], str)]
    site_order = [open_legs.index(slot) for slot in g.boundary]
    psi = np.transpose(psi, site_order + bulk_order)
    if bulk_order:
        return psi.reshape(4 ** len(site_order), -1)
    return psi.reshape(-1)


def causal_cone(g: TilingGraph, sites) -> set[int]:
    """Tiles reachable along inward legs from the tiles owning ``sites``."""
    return g.ancestors({g.boundary_owner(s) for s in sites})


class _Labels:
    def __init__(self):
        self._ids = {}

    def __call__(self, key) -> int:
        if key not in self._ids:
            self._ids[key] = len(self._ids)
        return self._ids[key]


def double_layer(n: NetworkInstance, region=(), insertions=None, open_bulk=(),
                 prune: bool = True) -> np.ndarray:
    """Contract the ket/bra double layer with open and operator-decorated sites.

    Args:
        n: The network.
        region: Boundary sites left open; the result carries their ket indices
            followed by their bra indices.
        insertions: Site -> 4x4 operator ``O``; contributes ``Tr(rho O)`` factors.
        open_bulk: Tiles (with open logical legs) whose logical indices stay
            open; appended after the region indices as ket then bra axes.
        prune: Restrict to the causal cone (exact for isometric tiles).

    Returns:
        Array with axes ``region ket, region bra, bulk ket, bulk bra``.
    """
    g = n.graph
    insertions = dict(insertions or {})
    region = list(region)
    if set(region) & set(insertions):
        raise ValueError("a site cannot be both open and decorated")
    seeds = {g.boundary_owner(s) for s in region} | {g.boundary_owner(s) for s in insertions}
    seeds |= set(open_bulk)
    cone = g.ancestors(seeds) if prune else set(range(g.n_tiles))
    sites = n.site_of()
    lab = _Labels()
    operands = []
    for t in sorted(cone):
        nb = _bulk_axes(n, t)
        ket, bra = [], []
        for c in range(nb):
            if t in open_bulk:
                ket.append(lab(("bk", t, c)))
                bra.append(lab(("bb", t, c)))
            else:
                ket.append(lab(("bt", t, c)))
                bra.append(ket[-1])
        for k in range(1, 6):
            nbr = g.neighbor(t, k)
            if nbr is not None:
                if nbr[0] in cone:
                    key = min((t, k), nbr)
                    ket.append(lab(("ek", key)))
                    bra.append(lab(("eb", key)))
                else:
                    ket.append(lab(("tr", t, k)))
                    bra.append(ket[-1])
                continue
            s = sites[(t, k)]
            if s in region:
                ket.append(lab(("rk", s)))
                bra.append(lab(("rb", s)))
            elif s in insertions:
                ket.append(lab(("ik", s)))
                bra.append(lab(("ib", s)))
                operands += [np.asarray(insertions[s], dtype=complex), [bra[-1], ket[-1]]]
            else:
                ket.append(lab(("tr", t, k)))
                bra.append(ket[-1])
        operands += [n.tensors[t], ket, n.tensors[t].conj(), bra]
    out = [lab(("rk", s)) for s in region] + [lab(("rb", s)) for s in region]
    out += [lab(("bk", t, c)) for t in open_bulk for c in range(2)]
    out += [lab(("bb", t, c)) for t in open_bulk for c in range(2)]
    operands.append(out)
    return oe.contract(*operands, optimize="greedy")


@dataclass(frozen=True)
class ReducedState:
    """Density matrix of boundary sites (each of dimension 4).

    Attributes:
        region: Boundary sites in the order of the tensor factors.
        matrix: ``4**k x 4**k`` density matrix.
    """

    region: tuple
    matrix: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        """Real eigenvalues in descending order."""
        h = (self.matrix + self.matrix.conj().T) / 2
        return np.sort(np.linalg.eigvalsh(h))[::-1]

    def rank(self, tol: float = 1e-10) -> int:
        return int(np.sum(self.eigenvalues() > tol))

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def entropy(self) -> float:
        """Von Neumann entropy in nats."""
        ev = self.eigenvalues()
        ev = ev[ev > 1e-14]
        return float(-np.sum(ev * np.log(ev)))

    def partial_trace(self, keep) -> "ReducedState":
        """Reduce to the sites ``keep`` (a subset of ``region``), in that order."""
        k = len(self.region)
        pos = [self.region.index(s) for s in keep]
        rest = [i for i in range(k) if i not in pos]
        t = self.matrix.reshape((4,) * (2 * k))
        letters = [oe.get_symbol(i) for i in range(2 * k)]
        for i in rest:
            letters[k + i] = letters[i]
        out = [letters[i] for i in pos] + [letters[k + i] for i in pos]
        red = np.einsum("".join(letters) + "->" + "".join(out), t)
        d = 4 ** len(keep)
        return ReducedState(tuple(keep), red.reshape(d, d))

    def to_dict(self) -> dict:
        return {
            "region": list(self.region),
            "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in self.matrix],
            "eigenvalues": [float(x) for x in self.eigenvalues()],
        }


def is_contiguous(sites, n_sites: int) -> bool:
    """Whether ``sites`` form one cyclic interval of the boundary."""
    s = sorted(set(sites))
    if len(s) <= 1 or len(s) == n_sites:
        return True
    gaps = sum(1 for a, b in zip(s, s[1:] + [s[0] + n_sites]) if b - a != 1)
    return gaps == 1


def reduced_density_matrix(n: NetworkInstance, region, prune: bool = True,
                           max_sites: int = MAX_RDM_SITES) -> ReducedState:
    """Boundary reduced state of ``region`` from its causal cone.

    Non-contiguous regions are allowed (with a warning); the cone is the union
    of the sites' cones.
    """
    region = tuple(int(s) for s in region)
    if not region or len(set(region)) != len(region):
        raise ValueError("region must be a non-empty list of distinct sites")
    if len(region) > max_sites:
        raise ValueError(f"region larger than {max_sites} sites")
    if any(not 0 <= s < n.boundary_sites for s in region):
        raise ValueError("site index out of range")
    if not is_contiguous(region, n.boundary_sites):
        warnings.warn("non-contiguous region: using the union of causal cones", stacklevel=2)
    if n.bulk.open_tiles:
        raise ValueError("reduced states need all logical legs fixed")
    t = double_layer(n, region=region, prune=prune)
    d = 4 ** len(region)
    return ReducedState(region, t.reshape(d, d))


def expectation(n: NetworkInstance, insertions: dict, prune: bool = True) -> complex:
    """``<psi| prod_s O_s |psi>`` for operators on distinct boundary sites."""
    return complex(double_layer(n, insertions=insertions, prune=prune))


def tile_legs_sites(n: NetworkInstance, t: int, legs) -> list[int]:
    """Boundary sites of the given dangling legs of tile ``t``."""
    sites = n.site_of()
    return [sites[(t, k)] for k in legs]


def flat_spectrum_region(g: TilingGraph, role: str = EP) -> tuple[int, list[int]]:
    """A tile of the outermost layer and three contiguous outward boundary sites.

    For an EP tile these are legs 2, 3, 4 (legs 1 and 5 traced). For a VP tile
    they are legs 3, 4, 5 (both inward legs traced), and the VP is chosen with
    two sibling parents so that its inward legs cut two legs of one EP tile.
    """
    outer = g.n_layers
    candidates = [t for t in range(g.n_tiles) if g.layers[t] == outer and g.roles[t] == role]
    if role == VP:
        candidates = [t for t in candidates
                      if len({u for p in g.parents(t) for u in g.parents(p)}) == 1
                      and all(g.roles[p] == EP for p in g.parents(t))]
    if not candidates:
        raise ValueError(f"no suitable {role} tile in the outermost layer")
    t = candidates[0]
    legs = (2, 3, 4) if role == EP else (3, 4, 5)
    sites = {slot: s for s, slot in enumerate(g.boundary)}
    return t, [sites[(t, k)] for k in legs]
