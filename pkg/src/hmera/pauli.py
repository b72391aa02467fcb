"""Pauli strings with exact phases and small stabilizer codes.

Operators are stored symplectically: one X bit and one Z bit per qubit plus a
global phase ``i**phase``. The bit pair ``(x, z)`` names the single-qubit
letter directly, so ``(1, 1)`` is ``Y`` (not ``XZ``) and products keep track of
the ``+-i`` factors exactly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

LETTERS = "IXYZ"
_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_LETTER = {v: k for k, v in _BITS.items()}
_PHASE_TOKENS = {"": 0, "+": 0, "+1": 0, "i": 1, "+i": 1, "-": 2, "-1": 2, "-i": 3}
_PHASE_NAMES = ["+", "+i", "-", "-i"]

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _letter_product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent of ``i`` picked up when multiplying two single-qubit letters."""
    if (x1, z1) == (0, 0) or (x2, z2) == (0, 0) or (x1, z1) == (x2, z2):
        return 0
    order = {(1, 0): 0, (1, 1): 1, (0, 1): 2}
    a, b = order[(x1, z1)], order[(x2, z2)]
    # X*Y = iZ, Y*Z = iX, Z*X = iY; reversed order gives -i.
    return 1 if (b - a) % 3 == 1 else 3


@dataclass(frozen=True)
class PauliOperator:
    """An n-qubit Pauli string ``i**phase * P_0 (x) P_1 (x) ...``.

    Attributes:
        n_qubits: Number of qubits.
        x_bits: X component per qubit.
        z_bits: Z component per qubit.
        phase: Exponent of ``i`` (0..3).
    """

    n_qubits: int
    x_bits: tuple[int, ...]
    z_bits: tuple[int, ...]
    phase: int = 0

    def __post_init__(self):
        if len(self.x_bits) != self.n_qubits or len(self.z_bits) != self.n_qubits:
            raise ValueError("bit vectors must have length n_qubits")
        object.__setattr__(self, "x_bits", tuple(int(b) & 1 for b in self.x_bits))
        object.__setattr__(self, "z_bits", tuple(int(b) & 1 for b in self.z_bits))
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def from_string(cls, text: str) -> "PauliOperator":
        """Parse strings like ``"XZZXI"``, ``"-iYZ"`` or ``"+i IXZ"``."""
        text = text.replace(" ", "")
        body_start = len(text)
        for pos, ch in enumerate(text):
            if ch in LETTERS:
                body_start = pos
                break
        prefix, body = text[:body_start], text[body_start:]
        if prefix not in _PHASE_TOKENS:
            raise ValueError(f"bad phase prefix {prefix!r}")
        if not body or any(ch not in LETTERS for ch in body):
            raise ValueError(f"bad Pauli string {text!r}")
        bits = [_BITS[ch] for ch in body]
        return cls(len(body), tuple(b[0] for b in bits), tuple(b[1] for b in bits),
                   _PHASE_TOKENS[prefix])

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n, (0,) * n, (0,) * n, 0)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> "PauliOperator":
        """Letter ``letter`` on ``qubit`` and identity elsewhere."""
        letters = ["I"] * n
        letters[qubit] = letter
        return cls.from_string("".join(letters))

    @property
    def letters(self) -> str:
        return "".join(_LETTER[(x, z)] for x, z in zip(self.x_bits, self.z_bits))

    @property
    def phase_value(self) -> complex:
        return 1j ** self.phase

    @property
    def weight(self) -> int:
        return sum(1 for x, z in zip(self.x_bits, self.z_bits) if x or z)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, (x, z) in enumerate(zip(self.x_bits, self.z_bits)) if x or z)

    def __str__(self) -> str:
        return _PHASE_NAMES[self.phase] + self.letters

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        return multiply(self, other)

    def __neg__(self) -> "PauliOperator":
        return self.with_phase(self.phase + 2)

    def with_phase(self, phase: int) -> "PauliOperator":
        return PauliOperator(self.n_qubits, self.x_bits, self.z_bits, phase)

    def unsigned(self) -> "PauliOperator":
        """Same letters with phase +1."""
        return self.with_phase(0)

    def commutes(self, other: "PauliOperator") -> bool:
        return symplectic_product(self, other) == 0

    def transpose(self) -> "PauliOperator":
        """Matrix transpose; each ``Y`` contributes a sign."""
        n_y = sum(1 for x, z in zip(self.x_bits, self.z_bits) if x and z)
        return self.with_phase(self.phase + 2 * n_y)

    def restrict(self, qubits) -> "PauliOperator":
        """Sub-string on ``qubits`` (in the given order), phase dropped."""
        return PauliOperator(len(qubits), tuple(self.x_bits[q] for q in qubits),
                             tuple(self.z_bits[q] for q in qubits), 0)

    def embed(self, n: int, qubits) -> "PauliOperator":
        """Place this operator on ``qubits`` of an ``n``-qubit register."""
        x, z = [0] * n, [0] * n
        for src, dst in enumerate(qubits):
            x[dst], z[dst] = self.x_bits[src], self.z_bits[src]
        return PauliOperator(n, tuple(x), tuple(z), self.phase)

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix, qubit 0 most significant."""
        mat = reduce(np.kron, (PAULI_MATRICES[ch] for ch in self.letters), np.eye(1))
        return self.phase_value * mat

    def sort_key(self) -> tuple:
        """Key ordering by weight, then letters with ``I < X < Y < Z``."""
        return (self.weight, tuple(LETTERS.index(ch) for ch in self.letters))


def symplectic_product(a: PauliOperator, b: PauliOperator) -> int:
    """0 if ``a`` and ``b`` commute, 1 otherwise."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("qubit count mismatch")
    s = sum(xa * zb + za * xb for xa, za, xb, zb in zip(a.x_bits, a.z_bits, b.x_bits, b.z_bits))
    return s % 2


def multiply(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """Exact product ``a @ b`` including the phase."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("qubit count mismatch")
    phase = a.phase + b.phase
    for xa, za, xb, zb in zip(a.x_bits, a.z_bits, b.x_bits, b.z_bits):
        phase += _letter_product_phase(xa, za, xb, zb)
    x = tuple(xa ^ xb for xa, xb in zip(a.x_bits, b.x_bits))
    z = tuple(za ^ zb for za, zb in zip(a.z_bits, b.z_bits))
    return PauliOperator(a.n_qubits, x, z, phase)


def tensor(*ops: PauliOperator) -> PauliOperator:
    """Tensor product of Pauli strings (phases multiply)."""
    return PauliOperator(
        sum(o.n_qubits for o in ops),
        tuple(b for o in ops for b in o.x_bits),
        tuple(b for o in ops for b in o.z_bits),
        sum(o.phase for o in ops),
    )


def all_paulis(n: int):
    """Iterate over the ``4**n`` unsigned Pauli strings in ``I<X<Y<Z`` order."""
    for letters in itertools.product(LETTERS, repeat=n):
        yield PauliOperator.from_string("".join(letters))


class CodeBasisError(ValueError):
    """Raised when a logical basis cannot be built from the reference state."""


@dataclass(frozen=True)
class StabilizerCode:
    """A stabilizer code given by generators and logical operator pairs.

    Attributes:
        n: Number of physical qubits.
        k: Number of logical qubits.
        generators: Independent commuting stabilizer generators.
        logical_ops: ``(X_bar, Z_bar)`` pair per logical qubit.
    """

    n: int
    k: int
    generators: tuple[PauliOperator, ...]
    logical_ops: tuple[tuple[PauliOperator, PauliOperator], ...] = field(default=())

    def __post_init__(self):
        gens = self.generators
        if any(g.n_qubits != self.n for g in gens):
            raise ValueError("generator length mismatch")
        for a, b in itertools.combinations(gens, 2):
            if not a.commutes(b):
                raise ValueError(f"generators {a} and {b} anticommute")
        if len(self.logical_ops) != self.k:
            raise ValueError("need one (X_bar, Z_bar) pair per logical qubit")
        for j, (xl, zl) in enumerate(self.logical_ops):
            for g in gens:
                if not (xl.commutes(g) and zl.commutes(g)):
                    raise ValueError(f"logical pair {j} does not commute with {g}")
            if xl.commutes(zl):
                raise ValueError(f"logical pair {j} must anticommute")

    def group_elements(self, extra=()) -> list[PauliOperator]:
        """All products of the generators (and ``extra``), with exact phases.

        Elements are listed by generator bitmask, generator 0 least significant.
        """
        gens = list(self.generators) + list(extra)
        out = []
        for mask in range(2 ** len(gens)):
            op = PauliOperator.identity(self.n)
            for j, g in enumerate(gens):
                if mask >> j & 1:
                    op = op * g
            out.append(op)
        return out

    def is_stabilizer(self, op: PauliOperator) -> bool:
        """True if ``op`` (with its phase) is an element of the stabilizer group."""
        return any(op == g for g in self.group_elements())

    def projector(self) -> np.ndarray:
        """Dense projector onto the code space."""
        dim = 2 ** self.n
        proj = np.eye(dim, dtype=complex)
        for g in self.generators:
            proj = proj @ (np.eye(dim) + g.to_matrix()) / 2
        return proj


def five_qubit_code() -> StabilizerCode:
    """The [[5,1,3]] code with cyclic generators and transversal logicals."""
    gens = tuple(PauliOperator.from_string(s) for s in ("XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"))
    logical = ((PauliOperator.from_string("XXXXX"), PauliOperator.from_string("ZZZZZ")),)
    return StabilizerCode(5, 1, gens, logical)


def logical_basis(code: StabilizerCode) -> np.ndarray:
    """Orthonormal logical basis, shape ``(2**k, 2**n)``.

    ``|0...0>_L`` is the normalized projection of ``|0...0>`` onto the joint +1
    eigenspace of the stabilizers and all ``Z_bar``; the other basis states are
    obtained by applying ``X_bar`` operators.
    """
    dim = 2 ** code.n
    proj = code.projector()
    for _, zl in code.logical_ops:
        proj = proj @ (np.eye(dim) + zl.to_matrix()) / 2
    ref = np.zeros(dim, dtype=complex)
    ref[0] = 1.0
    zero = proj @ ref
    norm = np.linalg.norm(zero)
    if norm < 1e-12:
        raise CodeBasisError("reference state has no overlap with the logical zero space")
    zero /= norm
    basis = []
    for bits in itertools.product((0, 1), repeat=code.k):
        vec = zero
        for j, b in enumerate(bits):
            if b:
                vec = code.logical_ops[j][0].to_matrix() @ vec
        basis.append(vec)
    basis = np.array(basis)
    gram = basis.conj() @ basis.T
    if not np.allclose(gram, np.eye(2 ** code.k), atol=1e-10):
        raise CodeBasisError("logical basis is not orthonormal")
    return basis


@dataclass(frozen=True)
class KnillLaflammeResult:
    """Outcome of a Knill-Laflamme test.

    Attributes:
        matrix: ``C[a, b]`` with ``P E_a^dag E_b P = C[a, b] P`` when satisfied.
        blocks: Logical blocks ``<i|E_a^dag E_b|j>``, shape ``(m, m, 2**k, 2**k)``.
        satisfied: Whether every block is proportional to the identity.
        max_deviation: Largest entrywise departure from proportionality.
    """

    matrix: np.ndarray
    blocks: np.ndarray
    satisfied: bool
    max_deviation: float


def knill_laflamme_matrix(code: StabilizerCode, errors, atol: float = 1e-10) -> KnillLaflammeResult:
    """Evaluate the Knill-Laflamme conditions on ``errors``.

    Args:
        code: The stabilizer code.
        errors: Sequence of :class:`PauliOperator` (or strings).
        atol: Tolerance for proportionality to the identity.
    """
    errs = [e if isinstance(e, PauliOperator) else PauliOperator.from_string(e) for e in errors]
    basis = logical_basis(code)
    kets = np.array([[e.to_matrix() @ v for v in basis] for e in errs])  # (m, 2^k, dim)
    blocks = np.einsum("aiv,bjv->abij", kets.conj(), kets)
    d = basis.shape[0]
    matrix = np.einsum("abii->ab", blocks) / d
    dev = np.abs(blocks - matrix[:, :, None, None] * np.eye(d)).max() if errs else 0.0
    return KnillLaflammeResult(matrix, blocks, bool(dev <= atol), float(dev))


def anticommuting_stabilizer(code: StabilizerCode, target: PauliOperator, support=None,
                             include_logical_z: bool = False):
    """Lowest-weight group element supported on ``support`` anticommuting with ``target``.

    Args:
        code: The stabilizer code.
        target: Operator to anticommute with.
        support: Allowed qubit indices (0-based); ``None`` means all qubits.
        include_logical_z: Also multiply in the ``Z_bar`` operators, as appropriate
            when the logical input is fixed to ``|0...0>_L``.

    Returns:
        The group element (with its phase) of minimal weight, ties broken by
        letters in ``I < X < Y < Z`` order, or ``None`` if no element qualifies.
    """
    allowed = set(range(code.n)) if support is None else set(support)
    extra = [zl for _, zl in code.logical_ops] if include_logical_z else []
    candidates = [
        g for g in code.group_elements(extra)
        if g.weight and set(g.support) <= allowed and not g.commutes(target)
    ]
    if not candidates:
        return None
    return min(candidates, key=PauliOperator.sort_key)
