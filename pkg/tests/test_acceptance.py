"""Acceptance criteria 1-11; the terminal summary prints one PASS/FAIL line per criterion."""

import itertools
import math
import warnings

import numpy as np
import pytest
import sympy as sp

from hmera import analysis as an
from hmera import network as nw
from hmera import superop as so
from hmera import tensors as tz
from hmera.pauli import all_paulis, five_qubit_code, knill_laflamme_matrix
from hmera.tiling import EP, GOLDEN, GROWTH, build_tiling, layer_counts
from oracles import (
    copies_to_qudits,
    dense_pauli,
    dense_transfer,
    five_qubit_dense_basis,
    imperfect_state_oracle,
    partial_trace_state,
    qudit_pauli,
)


def test_criterion_01_imperfect_reduces_to_two_perfect_copies():
    got = tz.imperfect_tensor(tz.TensorParams(theta=0.0)).data
    assert np.abs(got - tz.double_perfect_tensor("00").data).max() < 1e-12
    basis = five_qubit_dense_basis()
    ref = copies_to_qudits(np.kron(basis[0], basis[0]), 5)
    phase = np.vdot(got.reshape(-1), ref.reshape(-1))
    assert abs(abs(phase) - 1) < 1e-12
    assert np.abs(got * phase - ref).max() < 1e-12


def test_criterion_02_one_isometry_of_the_imperfect_tensor():
    rng = np.random.default_rng(2)
    thetas = rng.uniform(0, math.pi / 2, 20)
    for theta in thetas:
        params = tz.TensorParams(theta=float(theta))
        zero = tz.imperfect_tensor(params, "00")
        assert tz.check_permutation_invariance(zero, 1, tol=1e-10)
        assert not tz.check_permutation_invariance(zero, 2, tol=1e-10)
    failures = [theta for theta in thetas
                if tz.check_permutation_invariance(tz.imperfect_tensor(tz.TensorParams(theta=float(theta)), "11"), 1,
                                                   tol=1e-10)]
    assert not failures, f"logical |1 1> is a 1-isometry at {len(failures)} of 20 angles"


def test_criterion_03_perfect_superoperator_spectrum():
    alpha = math.pi / 3
    betas = 2 * math.pi * (np.arange(64) + 0.5) / 64
    for k, beta in enumerate(betas):
        s = so.perfect_superop(alpha, float(beta))
        if k % 16 == 0:
            ref = dense_transfer(so.perfect_state(alpha, float(beta)), 2, (3, 4), 2)
            assert np.abs(s.matrix - ref).max() < 1e-12
        vals, vecs = np.linalg.eig(s.matrix)
        mods = np.abs(vals)
        unit = np.flatnonzero(np.abs(mods - 1) <= 1e-10)
        assert len(unit) == 1
        v = vecs[:, unit[0]]
        v = v / v[0]
        assert np.abs(v - np.eye(16)[0]).max() < 1e-8
        assert np.delete(mods, unit).max() <= 1 - 1e-4


def test_criterion_04_imperfect_superoperator_contracts():
    swap = np.arange(256).reshape(16, 16).T.reshape(-1)
    ref_theta = 0.7
    ref = dense_transfer(so.imperfect_state(ref_theta), 1, (3, 4), 4)
    assert np.abs(so.imperfect_superop(ref_theta, (3, 4)).matrix - ref).max() < 1e-12
    for theta in np.linspace(0.02, math.pi / 2 - 0.02, 32):
        for legs in ((2, 3), (3, 4)):
            norms = so.imperfect_superop(float(theta), legs).image_norms()
            assert len(norms) == 256
            assert norms[1:].max() < 1 - 1e-6
        left = so.imperfect_superop(float(theta), (2, 3)).matrix
        right = so.imperfect_superop(float(theta), (4, 5)).matrix
        # reflection sends legs (4, 5) to (3, 2)
        assert np.abs(right[:, swap] - left).max() < 1e-12


def test_criterion_05_transition_probabilities():
    r5 = sp.sqrt(5)
    expected = {(1, 1): 3 * r5 / 5 - 1, (1, 2): 1 - 2 * r5 / 5, (2, 1): 1 - 2 * r5 / 5,
                (2, 2): 9 * r5 / 5 - 4, (2, 3): 5 - 11 * r5 / 5, (3, 2): 5 - 11 * r5 / 5,
                (3, 3): 14 * r5 / 5 - 6}
    table = so.unconditional_probabilities()
    assert set(table.unconditional) == set(expected)
    for key, value in expected.items():
        assert sp.simplify(table.unconditional[key] - value) == 0
        assert abs(float(table.unconditional[key]) - float(value)) < 1e-12
    assert sp.simplify(sum(table.unconditional.values())) == 1
    g = build_tiling(5, 4, 12)
    mc = so.sample_transitions(g, 100_000, seed=0)
    z = mc.z_scores(table.unconditional)
    assert max(abs(v) for v in z.values()) < 3, z


def test_criterion_06_tiling_asymptotics():
    counts = layer_counts(build_tiling(5, 4, 10))
    ep, vp = counts[10]
    assert abs(ep / vp / ((1 + math.sqrt(5)) / 2) - 1) < 0.01
    assert abs((ep + vp) / sum(counts[9]) / ((3 + math.sqrt(5)) / 2) - 1) < 0.01
    assert math.isclose(GOLDEN, (1 + math.sqrt(5)) / 2) and math.isclose(GROWTH, (3 + math.sqrt(5)) / 2)


def test_criterion_07_flat_spectrum_only_at_theta_zero():
    g = build_tiling(5, 4, 2)
    _, region = nw.flat_spectrum_region(g, EP)
    assert len(region) == 3 and nw.is_contiguous(region, len(g.boundary))
    flat = nw.reduced_density_matrix(nw.build_network(g, tz.TensorParams(theta=0.0)), region)
    ev = flat.eigenvalues()
    assert flat.rank() == 16
    assert np.abs(ev[:16] - 1 / 16).max() < 1e-10
    assert np.abs(ev[16:]).max() < 1e-10
    for theta in np.random.default_rng(7).uniform(0.05, math.pi / 2, 3):
        rho = nw.reduced_density_matrix(nw.build_network(g, tz.TensorParams(theta=float(theta))), region)
        nonzero = rho.eigenvalues()[:rho.rank()]
        assert nonzero.max() / nonzero.min() > 1.001


def test_criterion_08_regular_network_has_no_connected_correlations():
    g = build_tiling(5, 4, 2)
    n = nw.build_network(g, regular=True)
    pairs = an.well_separated_pairs(g)
    assert len(pairs) > 100
    results = an.correlator_scan(n, pairs)
    assert len(results) == 225 * len(pairs)
    assert max(abs(r.connected) for r in results) < 1e-10


def test_criterion_09_imperfect_network_has_decaying_correlations():
    g = build_tiling(5, 4, 2)
    n = nw.build_network(g, tz.TensorParams(theta=0.3))
    results = an.correlator_scan(n, an.well_separated_pairs(g))
    assert max(abs(r.connected) for r in results) > 1e-6
    fit = an.power_law_fit(results)
    predicted = so.average_lambda(so.unconditional_probabilities(), so.panel_spectra(0.3)).predicted_exponent
    print(f"fitted exponent {fit.exponent:.4f} over {fit.n_points} separations; "
          f"-2 log(lambda_bar)/log(growth) = {predicted:.4f}")
    assert not fit.trivial
    assert fit.exponent > 0


@pytest.mark.parametrize("theta,regular", [(0.0, False), (0.3, False), (1.1, False), (0.0, True)])
def test_criterion_10_cone_contraction_matches_brute_force(small_graphs, theta, regular):
    rng = np.random.default_rng(10)
    labels = ["XI", "IZ", "YX", "ZZ"]
    for name, g in small_graphs.items():
        n = nw.build_network(g, tz.TensorParams(theta=theta), regular=regular)
        m = len(g.boundary)
        psi = nw.contract_full(n)
        regions = [(s,) for s in range(m)] + [(s, (s + 1) % m) for s in range(m)]
        regions += [(s, (s + 1) % m, (s + 2) % m) for s in range(0, m, 2)]
        regions += [tuple(int(x) for x in rng.choice(m, 2, replace=False)) for _ in range(4)]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            for region in regions:
                rho = nw.reduced_density_matrix(n, region).matrix
                assert np.abs(rho - partial_trace_state(psi, m, list(region))).max() < 1e-10, (name, region)
        for i, j in itertools.combinations(range(0, m, 3), 2):
            a, b = labels[(i + j) % 4], labels[(i * j) % 4]
            res = an.connected_correlator(n, i, j, a, b)
            two = partial_trace_state(psi, m, [i, j])
            oa, ob = qudit_pauli(a) / 2, qudit_pauli(b) / 2
            joint = np.trace(two @ np.kron(oa, ob))
            conn = joint - np.trace(partial_trace_state(psi, m, [i]) @ oa) * \
                np.trace(partial_trace_state(psi, m, [j]) @ ob)
            assert abs(res.connected - conn) < 1e-10, (name, i, j)


def random_contraction(rng, dim):
    h = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = h + h.conj().T
    return h / np.linalg.norm(h, 2)


def test_criterion_11_knill_laflamme_and_mutual_information_bound():
    code = five_qubit_code()
    errors = [p for p in all_paulis(5) if p.weight <= 1]
    assert len(errors) == 16
    assert knill_laflamme_matrix(code, errors).satisfied
    basis = five_qubit_dense_basis()
    for e1, e2 in itertools.product(errors, repeat=2):
        prod = dense_pauli(e1.letters).conj().T @ dense_pauli(e2.letters)
        block = basis.conj() @ prod @ basis.T
        assert np.abs(block - block[0, 0] * np.eye(2)).max() < 1e-12

    g = build_tiling(5, 4, 2)
    m = len(g.boundary)
    rng = np.random.default_rng(11)
    checked = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for theta in (0.0, 0.3):
            n = nw.build_network(g, tz.TensorParams(theta=theta))
            for _ in range(25):
                size_a, size_b = rng.choice([(1, 1), (1, 2), (2, 1), (2, 2)])
                start_a = int(rng.integers(m))
                region_a = tuple((start_a + k) % m for k in range(size_a))
                free = [s for s in range(m) if s not in region_a]
                start_b = int(rng.choice(free))
                region_b = tuple((start_b + k) % m for k in range(size_b))
                if set(region_a) & set(region_b):
                    region_b = (start_b,)
                op_a = random_contraction(rng, 4 ** len(region_a))
                op_b = random_contraction(rng, 4 ** len(region_b))
                chk = an.mutual_information_check(n, region_a, region_b, op_a, op_b)
                assert chk.holds, (theta, region_a, region_b, chk)
                checked += 1
    assert checked == 50
