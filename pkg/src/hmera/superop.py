"""Ascending superoperators, their spectra, and coarse-graining statistics.

A tile state ``T`` with ``r`` inward legs defines the isometry
``W = sqrt(D_in) T`` from the inward legs to the outward legs, and the
ascending map ``O -> W^dag (O (x) I) W`` sends an operator on some outward legs
to an operator on the inward legs. Superoperators are stored as Pauli transfer
matrices ``S[k, l] = Tr(Q_k Phi(P_l)) / D_in`` with unnormalized Pauli strings
``P_l`` (input) and ``Q_k`` (output). For maps between spaces of equal dimension
this is the matrix in the Hilbert-Schmidt-normalized Pauli basis; in general
its columns have the normalized Hilbert-Schmidt norm of the image, and the
identity column is exactly the unit vector ``e_0``.

Sites are qubits (``site_dim=2``, labels ``I X Y Z``) or two-copy qudits
(``site_dim=4``, two-letter labels, copy 1 first).
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp
from scipy.sparse.linalg import LinearOperator, svds

from . import tensors as tz
from .network import bulk_qubit
from .pauli import LETTERS, PAULI_MATRICES
from .tiling import EP, GROWTH, TOP, VP, TilingGraph

TRANSITIONS = [(1, 1), (1, 2), (2, 1), (2, 2), (2, 3), (3, 2), (3, 3)]


@lru_cache(maxsize=None)
def site_paulis(site_dim: int) -> tuple[tuple[str, ...], np.ndarray]:
    """Labels and matrices of the Pauli basis on one site (qubit or qudit)."""
    if site_dim == 2:
        labels = tuple(LETTERS)
        mats = np.array([PAULI_MATRICES[c] for c in LETTERS])
    elif site_dim == 4:
        labels = tuple(a + b for a in LETTERS for b in LETTERS)
        mats = np.array([np.kron(PAULI_MATRICES[a], PAULI_MATRICES[b]) for a in LETTERS for b in LETTERS])
    else:
        raise ValueError("site dimension must be 2 or 4")
    return labels, mats


def pauli_basis(site_dim: int, n_sites: int) -> tuple[list[str], np.ndarray]:
    """Product Pauli basis on ``n_sites`` sites, first site slowest."""
    labels, mats = site_paulis(site_dim)
    if n_sites == 0:
        return [""], np.ones((1, 1, 1), dtype=complex)
    out_labels = [".".join(c) for c in itertools.product(labels, repeat=n_sites)]
    out = mats
    for _ in range(n_sites - 1):
        out = np.einsum("aij,bkl->abikjl", out, mats).reshape(len(out) * len(mats),
                                                                out.shape[1] * mats.shape[1], -1)
    return out_labels, out


@dataclass
class SuperOperator:
    """Pauli transfer matrix of an ascending map.

    Attributes:
        matrix: ``S[k, l]``, output basis index ``k``, input basis index ``l``.
        in_legs: Outward legs (per tile) carrying the input operator.
        out_legs: Inward legs carrying the image.
        site_dim: 2 for single-copy qubits, 4 for two-copy qudits.
        kind: Panel number 1..8 when the map is one of the coarse-graining panels.
        metadata: Free-form description (tiles, angles, conventions).
    """

    matrix: np.ndarray
    in_legs: tuple
    out_legs: tuple
    site_dim: int
    kind: int | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def in_weight(self) -> int:
        return len(self.in_legs)

    @property
    def out_weight(self) -> int:
        return len(self.out_legs)

    def in_labels(self) -> list[str]:
        return pauli_basis(self.site_dim, self.in_weight)[0]

    def out_labels(self) -> list[str]:
        return pauli_basis(self.site_dim, self.out_weight)[0]

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues sorted by decreasing modulus (square maps only)."""
        m = self.matrix
        if m.shape[0] != m.shape[1]:
            raise ValueError("eigenvalues need a square transfer matrix")
        ev = np.linalg.eigvals(m)
        return ev[np.argsort(-np.abs(ev), kind="stable")]

    def image_norms(self) -> np.ndarray:
        """Normalized Hilbert-Schmidt norm of the image of each input basis element."""
        return np.linalg.norm(self.matrix, axis=0)

    def traceless_block(self) -> np.ndarray:
        """Matrix with the identity row and column removed."""
        return self.matrix[1:, 1:]

    def leading_traceless_singular_value(self) -> float:
        return float(np.linalg.norm(self.traceless_block(), 2))

    def dominant_nonunit_eigenvalue(self) -> complex:
        """Largest-modulus eigenvalue of the traceless block."""
        ev = np.linalg.eigvals(self.traceless_block())
        return complex(ev[np.argmax(np.abs(ev))])


def tile_transfer_matrix(state: np.ndarray, n_inward: int, in_legs, site_dim: int) -> np.ndarray:
    """Transfer matrix of ``O -> W^dag O W`` for one tile.

    Args:
        state: Normalized tile state with planar legs ``1..p`` as axes.
        n_inward: Number of inward legs (legs ``1..n_inward``), the output.
        in_legs: Outward legs carrying the input operator, in basis order.
        site_dim: Leg dimension.
    """
    p = state.ndim
    in_legs = list(in_legs)
    rest = [k for k in range(n_inward + 1, p + 1) if k not in in_legs]
    order = list(range(n_inward)) + [k - 1 for k in in_legs] + [k - 1 for k in rest]
    d_out = site_dim ** n_inward
    d_in = site_dim ** len(in_legs)
    t = np.transpose(state, order).reshape(d_out, d_in, -1)
    # Phi(O)[i, j] = d_out * sum_{a,b,c} conj(t[i,a,c]) O[a,b] t[j,b,c]
    r = np.einsum("iac,jbc->abij", t.conj(), t) * d_out
    _, qmats = pauli_basis(site_dim, n_inward)
    _, pmats = pauli_basis(site_dim, len(in_legs))
    s = np.einsum("kji,lab,abij->kl", qmats, pmats, r, optimize=True)
    return s / d_out


def perfect_state(alpha: float, beta: float, copies: int = 1) -> np.ndarray:
    """Normalized perfect-tensor state with the logical qubit fixed to ``|phi>``."""
    v = tz.perfect_tensor().data
    phi = bulk_qubit(alpha, beta)
    if copies == 1:
        st = np.tensordot(phi, v, axes=([0], [0]))
    else:
        st = np.einsum("abijklm,a,b->ijklm", tz.merge_copies(v, v), phi, phi)
    return st / np.linalg.norm(st)


def imperfect_state(theta: float, theta_ij=None) -> np.ndarray:
    """Normalized imperfect-tensor state at logical ``|0_L 0_L>``."""
    return tz.imperfect_tensor(tz.TensorParams(theta=theta, theta_ij=theta_ij)).data


def perfect_superop(alpha: float, beta: float, in_legs=(3, 4), copies: int = 1) -> SuperOperator:
    """Ascending map of a VP tile (inward legs 1, 2).

    With ``in_legs=(3, 4)`` and one copy this is the 16x16 matrix whose output
    legs ``(1, 2)`` are identified in order with the input legs ``(3, 4)``.
    """
    if any(k not in (3, 4, 5) for k in in_legs) or not in_legs:
        raise ValueError("perfect-tensor inputs live on legs 3, 4, 5")
    d = 2 if copies == 1 else 4
    m = tile_transfer_matrix(perfect_state(alpha, beta, copies), 2, in_legs, d)
    return SuperOperator(m, tuple(in_legs), (1, 2), d, None,
                         {"tile": VP, "alpha": alpha, "beta": beta, "copies": copies})


def imperfect_superop(theta: float, in_legs=(2, 3), theta_ij=None) -> SuperOperator:
    """Ascending map of an EP tile (inward leg 1) for inputs on ``in_legs``."""
    if any(k not in (2, 3, 4, 5) for k in in_legs) or not in_legs:
        raise ValueError("imperfect-tensor inputs live on legs 2..5")
    m = tile_transfer_matrix(imperfect_state(theta, theta_ij), 1, in_legs, 4)
    return SuperOperator(m, tuple(in_legs), (1,), 4, None, {"tile": EP, "theta": theta})


def reflect_legs(legs, role: str) -> tuple:
    """Image of ``legs`` under the tile reflection (EP: 2<->5, 3<->4; VP: 1<->2, 3<->5)."""
    mapping = {EP: {1: 1, 2: 5, 3: 4, 4: 3, 5: 2}, VP: {1: 2, 2: 1, 3: 5, 4: 4, 5: 3}}[role]
    return tuple(mapping[k] for k in legs)


# -- coarse-graining panels ----------------------------------------------------

PANELS = {
    1: ((1, 1), [(EP, (3,))]),
    2: ((1, 2), [(VP, (4,))]),
    3: ((2, 1), [(EP, (3, 4))]),
    4: ((2, 2), [(EP, (5,)), (EP, (2,))]),
    5: ((2, 3), [(EP, (5,)), (VP, (3,))]),
    6: ((3, 3), [(VP, (5,)), (EP, (2, 3))]),
    7: ((3, 3), [(EP, (5,)), (VP, (3, 4))]),
    8: ((3, 2), [(EP, (5,)), (EP, (2, 3))]),
}


def panel_factors(kind: int, theta: float, alpha: float = math.pi / 3, beta: float = 0.0):
    """Per-tile two-copy transfer matrices of panel ``kind``, left tile first."""
    _, tiles = PANELS[kind]
    out = []
    for role, legs in tiles:
        if role == EP:
            out.append(imperfect_superop(theta, legs))
        else:
            out.append(perfect_superop(alpha, beta, legs, copies=2))
    return out


def _kron_traceless_norm(mats) -> float:
    """Largest singular value of ``kron(mats)`` with the identity row/column removed."""
    shape_out = [m.shape[0] for m in mats]
    shape_in = [m.shape[1] for m in mats]
    n_out, n_in = int(np.prod(shape_out)), int(np.prod(shape_in))
    if n_out * n_in <= 2 ** 22:
        full = mats[0]
        for m in mats[1:]:
            full = np.kron(full, m)
        return float(np.linalg.norm(full[1:, 1:], 2))

    def apply(ms, x, shp_in):
        x = x.reshape(shp_in).copy()
        x.flat[0] = 0.0
        for ax, m in enumerate(ms):
            x = np.moveaxis(np.tensordot(m, x, axes=([1], [ax])), 0, ax)
        y = x.reshape(-1)
        y[0] = 0.0
        return y

    adj = [m.conj().T for m in mats]
    op = LinearOperator((n_out, n_in), dtype=complex,
                        matvec=lambda x: apply(mats, x, shape_in),
                        rmatvec=lambda y: apply(adj, y, shape_out))
    v0 = np.ones(min(n_out, n_in)) / math.sqrt(min(n_out, n_in))
    s = svds(op, k=1, return_singular_vectors=False, v0=v0, tol=1e-12)
    return float(s[0])


def panel_lambda(kind: int, theta: float, alpha: float = math.pi / 3, beta: float = 0.0) -> float:
    """Contraction factor of a panel.

    Panel 1 (weight 1 -> 1) is an endomorphism and uses the largest modulus of
    its non-unit eigenvalues. The weight-changing panels have no eigen-operators
    and use the largest singular value restricted to the traceless sector.
    """
    factors = panel_factors(kind, theta, alpha, beta)
    if kind == 1:
        return float(abs(factors[0].dominant_nonunit_eigenvalue()))
    return _kron_traceless_norm([f.matrix for f in factors])


def panel_spectra(theta: float, alpha: float = math.pi / 3, beta: float = 0.0) -> dict:
    """``lambda`` per transition; the two weight-3 stable panels combine by their maximum."""
    lam = {k: panel_lambda(k, theta, alpha, beta) for k in PANELS}
    out = {}
    for kind, ((a, b), _) in PANELS.items():
        out[(a, b)] = max(out.get((a, b), 0.0), lam[kind])
    return out


# -- transition probabilities -----------------------------------------------------

@dataclass
class TransitionTable:
    """Exact coarse-graining probabilities.

    Attributes:
        conditional: Label -> exact sympy value.
        unconditional: ``(i, j)`` -> exact sympy value of ``p(i -> j)``.
    """

    conditional: dict = field(default_factory=dict)
    unconditional: dict = field(default_factory=dict)

    def conditional_floats(self) -> dict:
        return {k: float(v) for k, v in self.conditional.items()}

    def unconditional_floats(self) -> dict:
        return {k: float(v) for k, v in self.unconditional.items()}

    def to_dict(self) -> dict:
        return {
            "conditional": {k: {"exact": str(v), "value": float(v)} for k, v in self.conditional.items()},
            "unconditional": {f"{a}->{b}": {"exact": str(v), "value": float(v)}
                              for (a, b), v in self.unconditional.items()},
        }


def _asymptotic_counts():
    """Leading-order ``f(n)/lambda^n`` and ``g(n)/lambda^n`` and the growth ``lambda``."""
    s5 = sp.sqrt(5)
    return (5 - s5) / 2, (3 * s5 - 5) / 2, (3 + s5) / 2


def conditional_probabilities() -> TransitionTable:
    """Exact conditional transition probabilities from the asymptotic layer counts."""
    f, g, lam = _asymptotic_counts()

    def simp(x):
        return sp.nsimplify(sp.radsimp(sp.simplify(x)), [sp.sqrt(5)])

    p12_1 = simp(g / (2 * f + g))
    p0_12 = simp(3 * g / (4 * f + 3 * g))
    p22_12 = simp(f / lam ** 2 / g)
    p23_12 = simp(2 * g / lam / g)
    cond = {
        "P0(1->2)": p0_12,
        "P0(1->1)": simp(1 - p0_12),
        "P(1->2|1)": p12_1,
        "P(1->1|1)": simp(1 - p12_1),
        "P(2->2|1->2)": simp(p22_12 / (p22_12 + p23_12)),
        "P(2->3|1->2)": simp(p23_12 / (p22_12 + p23_12)),
        "P(2->1|2->2)": sp.Integer(1),
        "P(2->1|3->2)": sp.Integer(1),
        "P(3->2|3)": simp(p22_12 / (p22_12 + p23_12)),
        "P(3->3|3)": simp(p23_12 / (p22_12 + p23_12)),
    }
    return TransitionTable(conditional=cond)


def unconditional_probabilities() -> TransitionTable:
    """Solve the stationary balance relations for ``p(i -> j)`` exactly."""
    table = conditional_probabilities()
    c = table.conditional
    x, y = sp.symbols("x y", positive=True)
    p = {(1, 1): x, (3, 3): y}
    p[(1, 2)] = c["P(1->2|1)"] / c["P(1->1|1)"] * x
    p[(3, 2)] = c["P(3->2|3)"] / c["P(3->3|3)"] * y
    p[(2, 1)] = p[(1, 2)]
    p[(2, 3)] = p[(3, 2)]
    p[(2, 2)] = c["P(2->2|1->2)"] / c["P(2->3|1->2)"] * p[(2, 3)]
    equations = [
        sp.Eq(sum(p.values()), 1),
        # every 1->2 step is followed by 2->2 or 2->3
        sp.Eq(p[(1, 2)], p[(2, 2)] + p[(2, 3)]),
    ]
    sol = sp.solve(equations, [x, y], dict=True)[0]
    exact = {k: sp.nsimplify(sp.radsimp(sp.simplify(v.subs(sol))), [sp.sqrt(5)]) for k, v in p.items()}
    table.unconditional = {k: exact[k] for k in TRANSITIONS}
    return table


def graph_conditional_probabilities(counts, n: int) -> dict:
    """Finite-``n`` conditional probabilities from per-layer ``(f, g)`` counts."""
    f = [c[0] for c in counts]
    g = [c[1] for c in counts]
    p22 = f[n - 2] / g[n]
    p23 = 2 * g[n - 1] / g[n]
    return {
        "P(1->2|1)": g[n] / (2 * f[n] + g[n]),
        "P0(1->2)": 3 * g[n] / (4 * f[n] + 3 * g[n]),
        "P(2->2|1->2)": p22 / (p22 + p23),
        "P(2->3|1->2)": p23 / (p22 + p23),
    }


@dataclass(frozen=True)
class AverageLambda:
    """Weighted geometric mean of panel contraction factors.

    Attributes:
        value: ``prod_a lambda_a ** p_a``.
        delta: ``log(value)`` (``-inf`` if some factor vanishes).
        predicted_exponent: ``-2 * delta / log((3+sqrt 5)/2)``, the power-law
            exponent in the boundary separation.
    """

    value: float
    delta: float
    predicted_exponent: float


def average_lambda(table: TransitionTable, spectra: dict) -> AverageLambda:
    """Combine per-transition factors ``lambda_a`` with the probabilities ``p_a``."""
    probs = table.unconditional_floats()
    delta = 0.0
    for key, pa in probs.items():
        lam = float(spectra[key])
        if not 0.0 <= lam <= 1.0 + 1e-12:
            raise ValueError(f"lambda for {key} must lie in [0, 1], got {lam}")
        if lam == 0.0:
            return AverageLambda(0.0, -math.inf, math.inf)
        delta += pa * math.log(lam)
    return AverageLambda(math.exp(delta), delta, -2.0 * delta / math.log(GROWTH))


# -- Monte Carlo over ascending paths -------------------------------------------------

@dataclass
class MonteCarloResult:
    """Transition frequencies over a window of ascent steps.

    Attributes:
        samples: Number of boundary insertions.
        counts: ``(i, j)`` -> number of tallied steps.
        frequencies: ``(i, j)`` -> fraction of tallied steps.
        stderr: Cluster (per-path) standard error of each frequency.
        panel_counts: Panel number -> tallied steps.
        window: ``(first_step, stop_step)`` with steps counted from the boundary.
    """

    samples: int
    counts: dict
    frequencies: dict
    stderr: dict
    panel_counts: dict
    window: tuple

    def z_scores(self, reference: dict) -> dict:
        return {k: (self.frequencies[k] - float(reference[k])) / self.stderr[k]
                if self.stderr[k] > 0 else 0.0 for k in reference}

    def to_dict(self) -> dict:
        key = lambda k: f"{k[0]}->{k[1]}"  # noqa: E731
        return {
            "samples": self.samples,
            "window": list(self.window),
            "counts": {key(k): v for k, v in self.counts.items()},
            "frequencies": {key(k): v for k, v in self.frequencies.items()},
            "stderr": {key(k): v for k, v in self.stderr.items()},
            "panel_counts": {str(k): v for k, v in sorted(self.panel_counts.items())},
        }


_PANEL_OF_TRANSITION = {(1, 1): 1, (1, 2): 2, (2, 1): 3, (2, 2): 4, (2, 3): 5, (3, 2): 8}


def trace_path(g: TilingGraph, site: int) -> list[tuple[int, int, int | None]]:
    """Weight transitions of the support of an operator inserted at ``site``.

    Returns one ``(w_old, w_new, panel)`` per ascent step, from the boundary to
    the TOP tile; the weight is the number of legs carrying the operator.
    """
    touched = {g.boundary_owner(site)}
    w = 1
    steps = []
    while True:
        legs = [slot for t in touched for slot in g.inward(t)]
        if not legs:
            break
        parents = Counter(u for u, _ in legs)
        w_new = len(legs)
        panel = _PANEL_OF_TRANSITION.get((w, w_new))
        if (w, w_new) == (3, 3):
            # the tile receiving a single leg decides between panels 6 and 7
            single = [u for u, c in parents.items() if c == 1]
            panel = 6 if single and g.roles[single[0]] == VP else 7
        steps.append((w, w_new, panel))
        touched = set(parents)
        w = w_new
    return steps


def _chunk_rows(g: TilingGraph, sites, first: int, stop: int):
    rows = []
    panels = Counter()
    for s in sites:
        cnt = Counter()
        for d, (a, b, panel) in enumerate(trace_path(g, int(s))):
            if first <= d < stop:
                cnt[(a, b)] += 1
                panels[panel] += 1
        rows.append([cnt[k] for k in TRANSITIONS])
    return rows, panels


def sample_transitions(g: TilingGraph, samples: int, seed: int, burn_in: int = 6,
                       top_margin: int = 3, chunks: int = 16, jobs: int = 1) -> MonteCarloResult:
    """Tally weight transitions along ascending paths from random boundary sites.

    Only ascent steps ``burn_in <= d < n_layers - top_margin`` (``d = 0`` is the
    first step above the boundary) are tallied, so that boundary and top effects
    are excluded. Insertion points are drawn uniformly in ``chunks`` fixed
    blocks, each with its own stream spawned from ``seed``; results do not depend
    on ``jobs``.
    """
    stop = g.n_layers - top_margin
    if burn_in >= stop:
        raise ValueError("empty tally window")
    streams = np.random.SeedSequence(seed).spawn(chunks)
    sizes = [samples // chunks + (1 if k < samples % chunks else 0) for k in range(chunks)]
    m = len(g.boundary)
    blocks = [np.random.default_rng(st).integers(0, m, size=n) for st, n in zip(streams, sizes)]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(lambda b: _chunk_rows(g, b, burn_in, stop), blocks))
    else:
        parts = [_chunk_rows(g, b, burn_in, stop) for b in blocks]
    rows = np.array([r for part, _ in parts for r in part], dtype=float)
    panels = Counter()
    for _, pc in parts:
        panels.update(pc)
    per_path = rows.sum(axis=1)
    total = per_path.sum()
    counts, freqs, errs = {}, {}, {}
    for j, key in enumerate(TRANSITIONS):
        col = rows[:, j]
        p = col.sum() / total
        resid = col - p * per_path
        counts[key] = int(col.sum())
        freqs[key] = float(p)
        errs[key] = float(np.sqrt(resid.var() / len(rows)) / per_path.mean())
    return MonteCarloResult(samples, counts, freqs, errs, dict(panels), (burn_in, stop))


def fixed_point_state(theta: float) -> np.ndarray:
    """Fixed point of the descending dual of the weight-1 imperfect map.

    The ascending weight-1 map is unital, so its dual is trace preserving and has
    a density-matrix fixed point; returned as a 4x4 matrix.
    """
    s = imperfect_superop(theta, (3,)).matrix
    ev, vecs = np.linalg.eig(s.conj().T)
    k = int(np.argmin(np.abs(ev - 1.0)))
    coeff = vecs[:, k] / vecs[0, k]
    _, mats = site_paulis(4)
    rho = np.einsum("k,kij->ij", coeff, mats) / 4
    return (rho + rho.conj().T) / 2
