"""Perfect, imperfect and top tensors built from the [[5,1,3]] code.

Single-copy tensors carry a logical leg ``"L"`` (dim 2) followed by planar legs
``1..5`` (dim 2). Two-copy tensors carry logical legs ``"L1"``, ``"L2"`` and
planar legs ``1..5`` of dimension 4, the merged index being ``2*copy1 + copy2``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .pauli import PauliOperator, five_qubit_code, logical_basis

PLANAR = (1, 2, 3, 4, 5)
NORM_TOL = 1e-10
ISOMETRY_TOL = 1e-10


@dataclass(frozen=True)
class DenseTensor:
    """Complex tensor with labelled legs.

    Attributes:
        legs: Ordered ``(label, dim)`` pairs; ``data`` axes follow this order.
        data: Complex array of shape ``dims``.
        tags: Free-form metadata.
    """

    legs: tuple
    data: np.ndarray
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        legs = tuple((lab, int(d)) for lab, d in self.legs)
        object.__setattr__(self, "legs", legs)
        data = np.asarray(self.data, dtype=complex)
        if data.size != int(np.prod([d for _, d in legs], dtype=np.int64)):
            raise ValueError("entry count does not match the leg dimensions")
        data = data.reshape(tuple(d for _, d in legs))
        object.__setattr__(self, "data", data)
        labels = [lab for lab, _ in legs]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate leg labels")

    @property
    def labels(self) -> list:
        return [lab for lab, _ in self.legs]

    @property
    def dims(self) -> list[int]:
        return [d for _, d in self.legs]

    def dim(self, label) -> int:
        return dict(self.legs)[label]

    def axis(self, label) -> int:
        return self.labels.index(label)

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def conj(self) -> "DenseTensor":
        return DenseTensor(self.legs, self.data.conj(), dict(self.tags))

    def transpose(self, labels) -> "DenseTensor":
        """Reorder legs to ``labels``."""
        order = [self.axis(lab) for lab in labels]
        legs = tuple(self.legs[i] for i in order)
        return DenseTensor(legs, np.transpose(self.data, order), dict(self.tags))

    def fix(self, label, vector) -> "DenseTensor":
        """Contract leg ``label`` with ``vector`` (no conjugation)."""
        ax = self.axis(label)
        data = np.tensordot(self.data, np.asarray(vector, dtype=complex), axes=([ax], [0]))
        legs = tuple(leg for i, leg in enumerate(self.legs) if i != ax)
        return DenseTensor(legs, data, dict(self.tags))

    def contract(self, other: "DenseTensor") -> "DenseTensor":
        """Sum over every label shared by ``self`` and ``other``.

        Remaining legs of ``self`` come first, then those of ``other``.
        """
        shared = [lab for lab in self.labels if lab in other.labels]
        for lab in shared:
            if self.dim(lab) != other.dim(lab):
                raise ValueError(f"bond dimension mismatch on leg {lab!r}")
        data = np.tensordot(self.data, other.data,
                            axes=([self.axis(l) for l in shared], [other.axis(l) for l in shared]))
        legs = tuple(leg for leg in self.legs if leg[0] not in shared)
        legs += tuple(leg for leg in other.legs if leg[0] not in shared)
        return DenseTensor(legs, data)

    def relabel(self, mapping: dict) -> "DenseTensor":
        legs = tuple((mapping.get(lab, lab), d) for lab, d in self.legs)
        return DenseTensor(legs, self.data, dict(self.tags))

    def to_json(self) -> str:
        """Header plus row-major ``[re, im]`` entries, first leg slowest."""
        flat = self.data.reshape(-1)
        payload = {
            "legs": [[lab, d] for lab, d in self.legs],
            "dims": self.dims,
            "tags": self.tags,
            "entries": [[float(z.real), float(z.imag)] for z in flat],
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "DenseTensor":
        payload = json.loads(text)
        entries = np.array(payload["entries"], dtype=float)
        data = entries[:, 0] + 1j * entries[:, 1]
        legs = tuple((lab, d) for lab, d in payload["legs"])
        return cls(legs, data.reshape(payload["dims"]), payload.get("tags", {}))


@dataclass(frozen=True)
class TensorParams:
    """Angles defining the imperfect and top tensors.

    Attributes:
        theta: Weight of the ``Z_i Z_j`` insertions in the imperfect tensor.
        theta_ij: Optional 5x5 table of pair angles (diagonal ignored). When
            omitted, ``sin(theta_ij) = sin(theta) / sqrt(20)``.
        phi0: Angle of the unperturbed term of the top tensor.
        phi: Five angles of the single-Pauli terms of the top tensor.
        top_paulis: Letter applied on each planar leg in the top tensor.
    """

    theta: float = 0.0
    theta_ij: tuple | None = None
    phi0: float = 0.0
    phi: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)
    top_paulis: str = "ZZZZZ"

    def __post_init__(self):
        if self.theta_ij is not None:
            table = np.asarray(self.theta_ij, dtype=float)
            if table.shape != (5, 5):
                raise ValueError("theta_ij must be a 5x5 table")
            object.__setattr__(self, "theta_ij", tuple(map(tuple, table)))
        object.__setattr__(self, "phi", tuple(float(x) for x in self.phi))
        if len(self.phi) != 5:
            raise ValueError("phi needs one angle per planar leg")
        if len(self.top_paulis) != 5 or any(c not in "XYZ" for c in self.top_paulis):
            raise ValueError("top_paulis must be five letters from X, Y, Z")

    @classmethod
    def symmetric_top(cls, phi: float, **kwargs) -> "TensorParams":
        """All ``phi_i = phi`` with ``phi0`` chosen so the coefficients are normalized."""
        rest = 1.0 - 5.0 * np.sin(phi) ** 2
        if rest < 0:
            raise ValueError("5 sin^2(phi) exceeds 1")
        return cls(phi0=float(np.arccos(np.sqrt(rest))), phi=(phi,) * 5, **kwargs)

    def pair_sines(self) -> np.ndarray:
        """5x5 matrix of ``sin(theta_ij)`` with zero diagonal."""
        if self.theta_ij is None:
            s = np.full((5, 5), np.sin(self.theta) / np.sqrt(20.0))
        else:
            s = np.sin(np.asarray(self.theta_ij, dtype=float))
        np.fill_diagonal(s, 0.0)
        return s

    def imperfect_norm_error(self) -> float:
        return abs(np.cos(self.theta) ** 2 + np.sum(self.pair_sines() ** 2) - 1.0)

    def top_weight(self) -> float:
        """``cos^2(phi0) + sum_i sin^2(phi_i)``."""
        return float(np.cos(self.phi0) ** 2 + np.sum(np.sin(self.phi) ** 2))


@lru_cache(maxsize=1)
def encoding_map() -> np.ndarray:
    """The [[5,1,3]] encoding isometry as an array of shape ``(2,)*5 + (2,)``."""
    basis = logical_basis(five_qubit_code())  # (2, 32)
    return basis.T.reshape((2,) * 5 + (2,))


def _pauli_on_legs(letters_by_leg: dict) -> np.ndarray:
    """Dense 32x32 operator with the given letters on planar legs 1..5."""
    text = "".join(letters_by_leg.get(k, "I") for k in PLANAR)
    return PauliOperator.from_string(text).to_matrix()


def _single_copy(vmat: np.ndarray, tags: dict) -> DenseTensor:
    """Wrap a ``(32, 2)`` map as a 6-leg tensor (logical leg first)."""
    data = vmat.T.reshape((2,) * 6)
    return DenseTensor((("L", 2),) + tuple((k, 2) for k in PLANAR), data, tags)


def perfect_tensor() -> DenseTensor:
    """Single-copy perfect tensor: the encoding map with the logical leg first."""
    return _single_copy(encoding_map().reshape(32, 2), {"role": "perfect"})


def merge_copies(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Combine two single-copy ``(2, 2,2,2,2,2)`` arrays into a two-copy array.

    The result has shape ``(2, 2, 4, 4, 4, 4, 4)``: logical legs of copy 1 and
    copy 2, then merged planar legs.
    """
    out = np.einsum("aijklm,bnopqr->abinjokplqmr", a, b)
    return out.reshape((2, 2) + (4,) * 5)


def _two_copy_tensor(data: np.ndarray, logical, tags: dict) -> DenseTensor:
    planar = tuple((k, 4) for k in PLANAR)
    if logical is None:
        return DenseTensor((("L1", 2), ("L2", 2)) + planar, data, tags)
    v1, v2 = logical
    fixed = np.einsum("abijklm,a,b->ijklm", data, np.asarray(v1), np.asarray(v2))
    return DenseTensor(planar, fixed, tags)


def _logical_vector(spec) -> np.ndarray:
    if isinstance(spec, str):
        if spec not in ("0", "1"):
            raise ValueError(f"logical state must be '0' or '1', got {spec!r}")
        v = np.zeros(2, dtype=complex)
        v[int(spec)] = 1.0
        return v
    v = np.asarray(spec, dtype=complex)
    if v.shape != (2,):
        raise ValueError("logical state vectors have dimension 2")
    return v


def double_perfect_tensor(logical=None) -> DenseTensor:
    """Two copies of the perfect tensor on merged dimension-4 legs.

    Args:
        logical: ``None`` keeps both logical legs; otherwise a pair of states
            (``'0'``, ``'1'`` or 2-vectors) fixing copy 1 and copy 2.
    """
    v = perfect_tensor().data
    data = merge_copies(v, v)
    vecs = None if logical is None else tuple(_logical_vector(s) for s in logical)
    return _two_copy_tensor(data, vecs, {"role": "perfect-2copy"})


def imperfect_tensor(params: TensorParams, logical="00") -> DenseTensor:
    """Imperfect tensor: two perfect copies plus ``Z_i``/``Z_j`` cross insertions.

    Args:
        params: Angles; must satisfy the imperfect normalization.
        logical: Two-character string such as ``"00"`` or ``"11"`` fixing the
            logical legs, or ``None`` to keep them open.
    """
    err = params.imperfect_norm_error()
    if err > NORM_TOL:
        raise ValueError(f"imperfect-tensor normalization violated by {err:.3e}")
    v = perfect_tensor().data
    sines = params.pair_sines()
    data = np.cos(params.theta) * merge_copies(v, v)
    z = np.diag([1.0, -1.0])
    for i in range(5):
        zi = np.tensordot(z, v, axes=([1], [i + 1]))
        zi = np.moveaxis(zi, 0, i + 1)
        for j in range(5):
            if i == j or sines[i, j] == 0.0:
                continue
            zj = np.tensordot(z, v, axes=([1], [j + 1]))
            zj = np.moveaxis(zj, 0, j + 1)
            data = data + sines[i, j] * merge_copies(zi, zj)
    vecs = None if logical is None else tuple(_logical_vector(s) for s in logical)
    tags = {"role": "imperfect", "theta": float(params.theta), "logical": logical}
    return _two_copy_tensor(data, vecs, tags)


def top_tensor(params: TensorParams, renormalize: bool = False) -> DenseTensor:
    """Single-copy top tensor ``cos(phi0) V + sum_i sin(phi_i) P_i V``.

    Args:
        params: Angles and per-leg Pauli letters.
        renormalize: Divide by ``sqrt(cos^2 phi0 + sum sin^2 phi_i)`` instead of
            rejecting unnormalized coefficients.
    """
    weight = params.top_weight()
    if not renormalize and abs(weight - 1.0) > NORM_TOL:
        raise ValueError(f"top-tensor normalization violated by {abs(weight - 1.0):.3e}")
    vmat = encoding_map().reshape(32, 2)
    out = np.cos(params.phi0) * vmat
    for i, leg in enumerate(PLANAR):
        if params.phi[i] != 0.0:
            out = out + np.sin(params.phi[i]) * _pauli_on_legs({leg: params.top_paulis[i]}) @ vmat
    if renormalize:
        out = out / np.sqrt(weight)
    tags = {"role": "top", "phi0": float(params.phi0), "phi": list(params.phi),
            "paulis": params.top_paulis}
    return _single_copy(out, tags)


def double_top_tensor(params: TensorParams, logical=None, renormalize: bool = False) -> DenseTensor:
    """Two copies of :func:`top_tensor` on merged legs."""
    t = top_tensor(params, renormalize).data
    vecs = None if logical is None else tuple(_logical_vector(s) for s in logical)
    return _two_copy_tensor(merge_copies(t, t), vecs, {"role": "top-2copy"})


@dataclass(frozen=True)
class IsometryCheck:
    """Result of :func:`check_isometry`."""

    ok: bool
    deviation: float

    def __bool__(self) -> bool:
        return self.ok


def isometry_deviation(t: DenseTensor, in_legs) -> float:
    """Frobenius distance between the normalized Gram matrix on ``in_legs`` and identity.

    The tensor is contracted with its conjugate over every other leg and scaled
    by ``D_in / |t|^2`` so that overall normalization does not matter.
    """
    in_legs = list(in_legs)
    labels = t.labels
    missing = [lab for lab in in_legs if lab not in labels]
    if missing:
        raise ValueError(f"unknown legs {missing}")
    if not in_legs:
        raise ValueError("in_legs must be non-empty")
    rest = [lab for lab in labels if lab not in in_legs]
    if not rest:
        raise ValueError("complement of in_legs is empty")
    mat = t.transpose(in_legs + rest).data
    d_in = int(np.prod([t.dim(lab) for lab in in_legs]))
    mat = mat.reshape(d_in, -1)
    gram = mat @ mat.conj().T
    norm2 = np.real(np.trace(gram))
    if norm2 == 0:
        return float("inf")
    gram = gram * d_in / norm2
    return float(np.linalg.norm(gram - np.eye(d_in)))


def check_isometry(t: DenseTensor, in_legs, tol: float = ISOMETRY_TOL) -> IsometryCheck:
    """Whether ``t`` maps ``in_legs`` isometrically onto the remaining legs."""
    dev = isometry_deviation(t, in_legs)
    return IsometryCheck(dev <= tol, dev)


def check_permutation_invariance(t: DenseTensor, ell: int, legs=None,
                                 tol: float = ISOMETRY_TOL) -> bool:
    """True iff every ``ell``-subset of ``legs`` (default: all legs) passes :func:`check_isometry`."""
    legs = t.labels if legs is None else list(legs)
    if not 0 < ell < len(t.labels):
        raise ValueError("ell must be between 1 and the degree minus one")
    return all(check_isometry(t, list(sub), tol).ok for sub in itertools.combinations(legs, ell))
