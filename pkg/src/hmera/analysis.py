"""Boundary correlation functions, information bounds and operator pushing."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .network import NetworkInstance, double_layer, reduced_density_matrix
from .pauli import PauliOperator, five_qubit_code, multiply
from .superop import imperfect_superop, site_paulis
from .tiling import EP, TOP, VP, TilingGraph, boundary_distance, layers_for_separation

MAX_MI_SITES = 4


def qudit_basis(normalized: bool = True) -> tuple[tuple[str, ...], np.ndarray]:
    """Labels and matrices of the 16 two-copy Pauli operators on one site.

    With ``normalized`` the matrices are divided by 2 so that each has unit
    Hilbert-Schmidt norm.
    """
    labels, mats = site_paulis(4)
    return labels, mats / 2 if normalized else mats


@dataclass(frozen=True)
class CorrelatorResult:
    """Two-point function of single-site operators.

    Attributes:
        site_i: First boundary site.
        site_j: Second boundary site.
        op_a: Label of the operator at ``site_i``.
        op_b: Label of the operator at ``site_j``.
        value: ``<O_A O_B>``.
        connected: ``<O_A O_B> - <O_A><O_B>``.
        separation: Cyclic boundary distance between the sites.
    """

    site_i: int
    site_j: int
    op_a: str
    op_b: str
    value: complex
    connected: complex
    separation: int

    def row(self) -> list:
        return [self.site_i, self.site_j, self.separation, self.op_a, self.op_b,
                self.value.real, self.value.imag, self.connected.real, self.connected.imag]


CSV_COLUMNS = ["i", "j", "sep", "op_a", "op_b", "re", "im", "connected_re", "connected_im"]


def pair_state(n: NetworkInstance, i: int, j: int) -> np.ndarray:
    """Two-site density matrix of sites ``i`` and ``j`` (site ``i`` first)."""
    if i == j:
        raise ValueError("sites must differ")
    t = double_layer(n, region=(i, j))
    return t.reshape(16, 16)


def _operator(op) -> tuple[str, np.ndarray]:
    if isinstance(op, str):
        labels, mats = qudit_basis()
        return op, mats[labels.index(op)]
    mat = np.asarray(op, dtype=complex)
    if mat.shape != (4, 4):
        raise ValueError("single-site operators are 4x4 matrices")
    return "custom", mat


def correlators_from_state(rho: np.ndarray, ops_a, ops_b) -> tuple[np.ndarray, np.ndarray]:
    """``<A_a B_b>`` and connected parts for stacks of single-site operators."""
    r = rho.reshape(4, 4, 4, 4)
    joint = np.einsum("ijkl,aki,blj->ab", r, np.asarray(ops_a), np.asarray(ops_b))
    rho_a = np.einsum("ijkj->ik", r)
    rho_b = np.einsum("ijil->jl", r)
    ea = np.einsum("ik,aki->a", rho_a, np.asarray(ops_a))
    eb = np.einsum("jl,blj->b", rho_b, np.asarray(ops_b))
    return joint, joint - np.outer(ea, eb)


def connected_correlator(n: NetworkInstance, i: int, j: int, op_a, op_b) -> CorrelatorResult:
    """Connected two-point function from the two-site state of the joint causal cone.

    Args:
        n: Network with fixed bulk states.
        i: First boundary site.
        j: Second boundary site (distinct from ``i``).
        op_a: Label (e.g. ``"XI"``, Hilbert-Schmidt normalized) or 4x4 matrix.
        op_b: Same for site ``j``.
    """
    la, ma = _operator(op_a)
    lb, mb = _operator(op_b)
    rho = pair_state(n, i, j)
    joint, conn = correlators_from_state(rho, ma[None], mb[None])
    return CorrelatorResult(i, j, la, lb, complex(joint[0, 0]), complex(conn[0, 0]),
                            boundary_distance(n.graph, i, j))


def correlator_scan(n: NetworkInstance, pairs, jobs: int = 1) -> list[CorrelatorResult]:
    """All traceless normalized operator pairs (15 x 15) at every site pair."""
    labels, mats = qudit_basis()
    labels, mats = labels[1:], mats[1:]

    def one(pair):
        i, j = pair
        joint, conn = correlators_from_state(pair_state(n, i, j), mats, mats)
        sep = boundary_distance(n.graph, i, j)
        return [CorrelatorResult(i, j, labels[a], labels[b], complex(joint[a, b]), complex(conn[a, b]), sep)
                for a in range(len(labels)) for b in range(len(labels))]

    pairs = list(pairs)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(one, pairs))
    else:
        chunks = [one(p) for p in pairs]
    return [r for c in chunks for r in c]


def max_connected_by_pair(results) -> dict:
    """``(i, j) -> max |connected|`` over the operator pairs of a scan."""
    out = {}
    for r in results:
        key = (r.site_i, r.site_j)
        out[key] = max(out.get(key, 0.0), abs(r.connected))
    return out


def well_separated_pairs(g: TilingGraph, min_layers: int = 2, max_sep: int | None = None) -> list[tuple[int, int]]:
    """Site pairs whose causal cones stay disjoint for ``min_layers`` ascents."""
    m = len(g.boundary)
    out = []
    for i in range(m):
        for j in range(i + 1, m):
            if max_sep is not None and boundary_distance(g, i, j) > max_sep:
                continue
            if layers_for_separation(i, j, g).depth >= min_layers:
                out.append((i, j))
    return out


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of ``|C| = prefactor / sep**exponent``.

    Attributes:
        exponent: Decay exponent (``None`` when trivial).
        prefactor: Amplitude (``None`` when trivial).
        residual: RMS residual of the log-log fit.
        trivial: True when every connected value vanishes.
        n_points: Number of separations used.
    """

    exponent: float | None
    prefactor: float | None
    residual: float | None
    trivial: bool
    n_points: int

    def to_dict(self) -> dict:
        if self.trivial:
            return {"status": "trivial", "n_points": self.n_points}
        return {"status": "fit", "exponent": self.exponent, "prefactor": self.prefactor,
                "residual": self.residual, "n_points": self.n_points}


def power_law_fit(results, zero_tol: float = 1e-12) -> PowerLawFit:
    """Fit ``log|connected|`` against ``log separation``.

    The largest ``|connected|`` at each separation enters the fit.

    Raises:
        ValueError: If fewer than four separations carry nonzero values.
    """
    best = {}
    for r in results:
        best[r.separation] = max(best.get(r.separation, 0.0), abs(r.connected))
    if all(v <= zero_tol for v in best.values()):
        return PowerLawFit(None, None, None, True, len(best))
    pts = sorted((s, v) for s, v in best.items() if v > zero_tol and s > 0)
    if len(pts) < 4:
        raise ValueError("a power-law fit needs at least 4 separations with nonzero correlators")
    x = np.log([s for s, _ in pts])
    y = np.log([v for _, v in pts])
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return PowerLawFit(float(-slope), float(np.exp(icpt)), resid, False, len(pts))


# -- information bound ---------------------------------------------------------------

@dataclass(frozen=True)
class MutualInformationCheck:
    """Both sides of ``(1/2) C^2 <= I(A:B)``.

    Attributes:
        lhs: ``|<O_A O_B> - <O_A><O_B>|^2 / 2``.
        mutual_information: ``I(A:B)`` in nats.
        holds: Whether ``lhs <= I`` up to ``1e-12``.
    """

    lhs: float
    mutual_information: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.mutual_information - self.lhs


def mutual_information_check(n: NetworkInstance, region_a, region_b, op_a, op_b) -> MutualInformationCheck:
    """Compare a connected correlator with the mutual information of its regions.

    Args:
        n: Network with fixed bulk states.
        region_a: Boundary sites of ``A``.
        region_b: Boundary sites of ``B``, disjoint from ``A``.
        op_a: Operator on ``A`` (``4**|A|`` square matrix, operator norm <= 1).
        op_b: Operator on ``B``.

    Raises:
        ValueError: Overlapping or empty regions, too many sites, wrong shapes,
            or operator norm above 1.
    """
    a, b = tuple(region_a), tuple(region_b)
    if not a or not b or set(a) & set(b):
        raise ValueError("regions must be non-empty and disjoint")
    if len(a) + len(b) > MAX_MI_SITES:
        raise ValueError(f"at most {MAX_MI_SITES} sites in total")
    oa, ob = np.asarray(op_a, dtype=complex), np.asarray(op_b, dtype=complex)
    if oa.shape != (4 ** len(a),) * 2 or ob.shape != (4 ** len(b),) * 2:
        raise ValueError("operator shapes do not match the regions")
    for o in (oa, ob):
        if np.linalg.norm(o, 2) > 1 + 1e-12:
            raise ValueError("operators must have operator norm at most 1")
    rho = reduced_density_matrix(n, a + b)
    ra, rb = rho.partial_trace(a), rho.partial_trace(b)
    mi = ra.entropy() + rb.entropy() - rho.entropy()
    joint = np.trace(rho.matrix @ np.kron(oa, ob))
    conn = joint - np.trace(ra.matrix @ oa) * np.trace(rb.matrix @ ob)
    lhs = 0.5 * abs(conn) ** 2
    return MutualInformationCheck(float(lhs), float(mi), bool(lhs <= mi + 1e-12))


# -- structural predicates ---------------------------------------------------------------

def single_insertions_annihilated(theta: float = 0.0, atol: float = 1e-12) -> bool:
    """Whether every traceless single-leg insertion on an EP tile ascends to zero."""
    for leg in (2, 3, 4, 5):
        s = imperfect_superop(theta, (leg,)).matrix
        if np.abs(s[:, 1:]).max() > atol:
            return False
    return True


def required_isometry_degree(p: int, q: int) -> int:
    """Smallest isometry degree of the inward-to-outward map that makes every tile contractible.

    Tiles touch the previous layer along at most two edges for ``q >= 4``, and
    along up to three edges when ``q = 3``.
    """
    if (p - 2) * (q - 2) <= 4:
        raise ValueError(f"{{{p},{q}}} is not hyperbolic")
    return 3 if q == 3 else 2


# -- operator pushing ---------------------------------------------------------------------

LOGICAL_ALIASES = {"I": "II", "Xbar": "XI", "Ybar": "YI", "Zbar": "ZI"}


def parse_logical(op: str) -> str:
    """Normalize a logical operator name to two letters (copy 1, copy 2)."""
    text = LOGICAL_ALIASES.get(op, op)
    if len(text) != 2 or any(c not in "IXYZ" for c in text):
        raise ValueError(f"logical operator must be Xbar, Ybar, Zbar, I or two letters, got {op!r}")
    return text


def parse_tile(g: TilingGraph, spec) -> int:
    """Tile index from an integer or a ``"L<layer>T<position>"`` id."""
    if isinstance(spec, (int, np.integer)):
        return int(spec)
    text = str(spec).upper()
    if text.startswith("L") and "T" in text:
        layer, pos = text[1:].split("T")
        return g.index_of((int(layer), int(pos)))
    return int(text)


@dataclass
class PushResult:
    """Boundary representative of a bulk logical operator.

    Attributes:
        source: Tile carrying the logical operator.
        logical: Two-letter logical operator (copy 1, copy 2).
        boundary_ops: Boundary site -> two-letter Pauli (copy 1, copy 2).
        phase: Overall phase ``i**phase`` of the boundary operator.
        residual_error: ``||B E - E L||_F / ||E||_F``.
        path: Tiles the operator passed through.
    """

    source: int
    logical: str
    boundary_ops: dict
    phase: int
    residual_error: float
    path: list = field(default_factory=list)

    @property
    def boundary_support(self) -> list[int]:
        return sorted(self.boundary_ops)

    def boundary_matrices(self) -> dict:
        """Site -> 4x4 matrix; the global phase is folded into the first site."""
        out = {}
        _, mats = site_paulis(4)
        labels = site_paulis(4)[0]
        for k, s in enumerate(self.boundary_support):
            m = mats[labels.index(self.boundary_ops[s])].astype(complex)
            if k == 0:
                m = m * 1j ** self.phase
            out[s] = m
        return out

    def to_dict(self) -> dict:
        return {"source": self.source, "logical": self.logical,
                "boundary_support": self.boundary_support,
                "boundary_ops": {str(k): v for k, v in sorted(self.boundary_ops.items())},
                "phase": ["+1", "+i", "-1", "-i"][self.phase % 4],
                "residual_error": self.residual_error, "path": self.path}


def _tile_group(role: str, open_source: bool) -> list[PauliOperator]:
    code = five_qubit_code()
    extra = [] if open_source or role != EP else [code.logical_ops[0][1]]
    return code.group_elements(extra)


def _push_through(incoming: PauliOperator, inward: set[int], group) -> PauliOperator:
    """Outward-supported ``Q`` with ``incoming |T> = Q |T>`` for a stabilizer state ``T``."""
    target = incoming.unsigned()
    best = None
    for s in group:
        if s.restrict(sorted(inward)).unsigned().letters != target.restrict(sorted(inward)).letters:
            continue
        q = multiply(s, incoming)
        if best is None or q.sort_key() < best.sort_key():
            best = q
    if best is None:
        raise ValueError("no stabilizer moves the operator off the inward legs")
    return best


def _logical_representative(role: str, letter: str, n_inward: int) -> PauliOperator:
    code = five_qubit_code()
    xl, zl = code.logical_ops[0]
    base = {"I": PauliOperator.identity(5), "X": xl, "Z": zl, "Y": multiply(xl, zl).with_phase(
        (multiply(xl, zl).phase + 1) % 4)}[letter]
    inward = set(range(n_inward))
    reps = [multiply(base, s) for s in code.group_elements()]
    reps = [r for r in reps if not set(r.support) & inward]
    if not reps:
        raise ValueError("logical operator cannot be cleaned off the inward legs")
    return min(reps, key=PauliOperator.sort_key)


def push_operator(n: NetworkInstance, bulk_site, logical_op: str = "Zbar") -> PushResult:
    """Push a bulk logical operator to the boundary with stabilizer rules.

    Every tile is treated as its undeformed stabilizer state: VP and TOP tiles
    are stabilized by the [[5,1,3]] group, EP tiles additionally by ``Z_bar``
    (logical ``|0_L>``). A Pauli on a parent's outward leg equals its transpose
    on the child's inward leg; the child then trades it for the lowest-weight
    outward operator with the same action. Each copy is pushed separately. The
    residual is evaluated on the actual network, so it is nonzero only where
    tiles deviate from the stabilizer rules.

    Args:
        n: Network whose ``bulk_site`` tile has open logical legs.
        bulk_site: Tile index or ``"L<layer>T<position>"`` id.
        logical_op: ``"Xbar"``, ``"Ybar"``, ``"Zbar"``, ``"I"`` (copy 1) or two letters.

    Raises:
        ValueError: If the tile's logical legs are not open or no push exists.
    """
    g = n.graph
    t0 = parse_tile(g, bulk_site)
    if t0 not in n.bulk.open_tiles:
        raise ValueError("the source tile must have open logical legs")
    logical = parse_logical(logical_op)
    pending = {}  # (tile, leg) -> [copy1 letter, copy2 letter, phase]
    boundary_ops, phase, path = {}, 0, [t0]
    sites = n.site_of()

    def emit(t, op_by_copy):
        nonlocal phase
        for k in range(1, 6):
            letters = [op_by_copy[c].letters[k - 1] for c in range(2)]
            if letters == ["I", "I"]:
                continue
            nb = g.neighbor(t, k)
            if nb is None:
                boundary_ops[sites[(t, k)]] = "".join(letters)
            else:
                pending[nb] = letters
        phase = (phase + sum(o.phase for o in op_by_copy)) % 4

    emit(t0, [_logical_representative(g.roles[t0], c, g.n_inward(t0)) for c in logical])
    for t in range(t0 + 1, g.n_tiles):
        legs = [k for k in range(1, g.n_inward(t) + 1) if (t, k) in pending]
        if not legs:
            continue
        path.append(t)
        inward = set(range(g.n_inward(t)))
        group = _tile_group(g.roles[t], False)
        out = []
        for c in range(2):
            letters = ["I"] * 5
            for k in legs:
                letters[k - 1] = pending[(t, k)][c]
            incoming = PauliOperator.from_string("".join(letters)).transpose()
            out.append(_push_through(incoming, inward, group))
        emit(t, out)
    res = push_residual(n, t0, logical, boundary_ops, phase)
    return PushResult(t0, logical, boundary_ops, phase, res, path)


def push_residual(n: NetworkInstance, tile: int, logical: str, boundary_ops: dict, phase: int) -> float:
    """``||B E - E L||_F / ||E||_F`` for a Pauli boundary operator ``B``."""
    labels, mats = site_paulis(4)
    ins = {s: mats[labels.index(op)] for s, op in boundary_ops.items()}
    if ins:
        first = min(ins)
        ins[first] = ins[first] * 1j ** phase
    lmat = np.kron(*(site_paulis(2)[1]["IXYZ".index(c)] for c in logical))
    norm = np.real(np.trace(double_layer(n, open_bulk=(tile,)).reshape(4, 4)))
    if ins:
        m = double_layer(n, insertions=ins, open_bulk=(tile,)).reshape(4, 4)
    else:
        m = double_layer(n, open_bulk=(tile,)).reshape(4, 4) * 1j ** phase
    overlap = np.sum(lmat.conj().T * m)
    val = 2.0 - 2.0 * np.real(overlap) / norm
    return float(math.sqrt(max(val, 0.0)))


def fixed_point_discrepancy(n: NetworkInstance, fixed_point: np.ndarray, site: int = 0) -> float:
    """Trace distance between a single-site boundary state and a reference state."""
    diff = reduced_density_matrix(n, (site,)).matrix - fixed_point
    ev = np.linalg.eigvalsh((diff + diff.conj().T) / 2)
    return float(0.5 * np.sum(np.abs(ev)))
