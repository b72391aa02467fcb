import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hmera.pauli import (
    PauliOperator,
    StabilizerCode,
    all_paulis,
    anticommuting_stabilizer,
    five_qubit_code,
    knill_laflamme_matrix,
    logical_basis,
    multiply,
    symplectic_product,
    tensor,
)
from oracles import dense_pauli, five_qubit_dense_basis

pauli_strings = st.text(alphabet="IXYZ", min_size=1, max_size=4)
phases = st.sampled_from(["", "-", "i", "-i"])


def signed(phase, letters):
    return PauliOperator.from_string(phase + letters)


def dense(op):
    return op.phase_value * dense_pauli(op.letters)


@settings(max_examples=60, deadline=None)
@given(phases, pauli_strings, phases, st.data())
def test_product_matches_dense_matrices(pa, a, pb, data):
    b = data.draw(st.text(alphabet="IXYZ", min_size=len(a), max_size=len(a)))
    x, y = signed(pa, a), signed(pb, b)
    assert np.allclose((x * y).to_matrix(), dense(x) @ dense(y))
    assert np.allclose(multiply(x, y).to_matrix(), dense(x) @ dense(y))


@settings(max_examples=60, deadline=None)
@given(pauli_strings, st.data())
def test_commutation_matches_dense(a, data):
    b = data.draw(st.text(alphabet="IXYZ", min_size=len(a), max_size=len(a)))
    x, y = PauliOperator.from_string(a), PauliOperator.from_string(b)
    dx, dy = dense_pauli(a), dense_pauli(b)
    commute = np.allclose(dx @ dy, dy @ dx)
    assert x.commutes(y) == commute
    assert symplectic_product(x, y) == (0 if commute else 1)


@settings(max_examples=40, deadline=None)
@given(phases, pauli_strings)
def test_transpose_matches_dense(phase, a):
    op = signed(phase, a)
    assert np.allclose(op.transpose().to_matrix(), dense(op).T)


@settings(max_examples=40, deadline=None)
@given(phases, pauli_strings)
def test_string_round_trip(phase, a):
    op = signed(phase, a)
    assert PauliOperator.from_string(str(op)) == op


def test_weight_support_and_letters():
    op = PauliOperator.from_string("-iXIZY")
    assert op.weight == 3
    assert op.support == (0, 2, 3)
    assert op.letters == "XIZY"
    assert op.phase_value == -1j


def test_y_bits_name_the_letter_directly():
    y = PauliOperator.single(1, 0, "Y")
    assert np.allclose(y.to_matrix(), np.array([[0, -1j], [1j, 0]]))


def test_tensor_and_embed():
    a, b = PauliOperator.from_string("X"), PauliOperator.from_string("-Z")
    assert tensor(a, b) == PauliOperator.from_string("-XZ")
    assert PauliOperator.from_string("XZ").embed(4, (3, 1)).letters == "IZIX"


def test_all_paulis_counts_and_order():
    ops = list(all_paulis(2))
    assert len(ops) == 16
    assert ops[0].letters == "II" and ops[1].letters == "IX" and ops[-1].letters == "ZZ"


def test_invalid_strings_rejected():
    with pytest.raises(ValueError):
        PauliOperator.from_string("XQ")
    with pytest.raises(ValueError):
        PauliOperator.from_string("")


def test_five_qubit_code_group():
    code = five_qubit_code()
    group = code.group_elements()
    assert len(group) == 16
    assert len({g.letters for g in group}) == 16
    for g in group:
        assert g.phase in (0, 2)
        assert all(g.commutes(h) for h in group)
    assert min(g.weight for g in group if g.weight) == 4


def test_logical_basis_matches_dense_projector_oracle():
    basis = logical_basis(five_qubit_code())
    ref = five_qubit_dense_basis()
    for a, b in zip(basis, ref):
        overlap = np.vdot(b, a)
        assert abs(abs(overlap) - 1) < 1e-12


def test_projector_is_rank_two():
    proj = five_qubit_code().projector()
    assert np.allclose(proj @ proj, proj)
    assert round(np.trace(proj).real) == 2


def test_non_commuting_generators_rejected():
    with pytest.raises(ValueError):
        StabilizerCode(1, 0, (PauliOperator.from_string("X"), PauliOperator.from_string("Z")))


def test_knill_laflamme_weight_one_pairs_hold():
    errs = [p for p in all_paulis(5) if p.weight <= 1]
    res = knill_laflamme_matrix(five_qubit_code(), errs)
    assert res.satisfied
    assert res.max_deviation < 1e-12
    assert res.matrix.shape == (16, 16)


def test_knill_laflamme_fails_for_weight_two_pairs():
    errs = [p for p in all_paulis(5) if p.weight <= 2]
    assert not knill_laflamme_matrix(five_qubit_code(), errs).satisfied


def test_knill_laflamme_blocks_match_dense_oracle():
    basis = five_qubit_dense_basis()
    errs = ["XIIII", "IZIII", "IIYII"]
    res = knill_laflamme_matrix(five_qubit_code(), errs)
    for a, b in itertools.product(range(3), repeat=2):
        block = np.array([[basis[i].conj() @ dense_pauli(errs[a]).conj().T @ dense_pauli(errs[b]) @ basis[j]
                           for j in range(2)] for i in range(2)])
        assert np.allclose(np.abs(block), np.abs(res.blocks[a, b]), atol=1e-12)


def test_anticommuting_stabilizer_with_logical_z():
    code = five_qubit_code()
    target = PauliOperator.from_string("IZIIZ")
    found = anticommuting_stabilizer(code, target, support={1, 2, 3, 4}, include_logical_z=True)
    assert str(found) == "-IIYZY"
    assert not found.commutes(target)


def test_anticommuting_stabilizer_none_without_logical_z():
    code = five_qubit_code()
    target = PauliOperator.from_string("IZIIZ")
    assert anticommuting_stabilizer(code, target, support={1, 2, 3, 4}) is None


def test_anticommuting_stabilizer_unrestricted_is_lowest_weight():
    code = five_qubit_code()
    found = anticommuting_stabilizer(code, PauliOperator.from_string("ZIIII"))
    assert found.weight == 4
