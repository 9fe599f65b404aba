#!/usr/bin/env python3
"""
Tests for charge-conserving gates, brick-wall layers and circuit dumps
"""
import numpy as np
import pytest

from circuits import (
    DUMP_COLUMNS,
    EVEN,
    ODD,
    ChargeGate,
    CircuitSpec,
    apply_layer,
    apply_modified_layer,
    build_circuit,
    circuit_table,
    cut_bond,
    cut_parity,
    dump_circuit,
    evolve,
    evolve_adjoint,
    gate_stream,
    load_circuit,
    sample_haar_gate,
    sublayer_bonds,
)
from dense_oracle import dense_circuit, dense_layer, embed_gate, is_charge_conserving
from entanglement import schmidt_spectrum
from errors import InvalidArgumentError, UnsupportedConfigurationError
from statevector_core import SiteBasisSign, Statevector, init_product_x, project_zero_at
from transport import cut_sites


def random_state(num_spins, seed):
    rng = np.random.default_rng(seed)
    amplitudes = rng.standard_normal(1 << num_spins) + 1j * rng.standard_normal(1 << num_spins)
    return Statevector(num_spins, amplitudes / np.linalg.norm(amplitudes))


def test_haar_gate_is_unitary_and_conserves_charge():
    for bond in range(1, 20):
        gate = sample_haar_gate(gate_stream(123, 4, bond)).validate()
        matrix = gate.matrix()
        np.testing.assert_allclose(matrix.conj().T @ matrix, np.eye(4), atol=1e-12)
        assert is_charge_conserving(embed_gate(matrix, 2, 1), 2)


def test_gate_streams_are_keyed():
    a = sample_haar_gate(gate_stream(5, 2, 3))
    b = sample_haar_gate(gate_stream(5, 2, 3))
    c = sample_haar_gate(gate_stream(5, 3, 2))
    np.testing.assert_array_equal(a.matrix(), b.matrix())
    assert not np.allclose(a.matrix(), c.matrix())


def test_build_circuit_is_deterministic_and_prefix_stable():
    short = build_circuit(8, 3, 42)
    long = build_circuit(8, 6, 42)
    assert short.same_gates(build_circuit(8, 3, 42))
    assert not short.same_gates(build_circuit(8, 3, 43))
    np.testing.assert_array_equal(short.blocks, long.blocks[:3])


def test_gate_tables_are_read_only():
    spec = build_circuit(4, 2, 0)
    with pytest.raises(ValueError):
        spec.blocks[0, 0, 0, 0] = 0


def test_invalid_circuit_requests():
    with pytest.raises(InvalidArgumentError):
        build_circuit(2, 3, 0)
    with pytest.raises(InvalidArgumentError):
        build_circuit(6, 0, 0)
    with pytest.raises(InvalidArgumentError):
        build_circuit(6, 2, -1)
    with pytest.raises(InvalidArgumentError):
        build_circuit(6, 2, 0).gate(3, 1)


def test_sublayer_structure():
    assert list(sublayer_bonds(8, ODD)) == [1, 3, 5, 7]
    assert list(sublayer_bonds(8, EVEN)) == [2, 4, 6]
    assert cut_bond(build_circuit(6, 1, 0)) == 3
    assert cut_parity(build_circuit(6, 1, 0)) == ODD
    assert cut_parity(build_circuit(8, 1, 0)) == EVEN


@pytest.mark.parametrize("seed", range(20))
def test_layers_match_dense_oracle(seed):
    spec = build_circuit(6, 3, seed)
    state = random_state(6, seed)
    expected = dense_circuit(spec, 3) @ state.amplitudes
    for t in (1, 2, 3):
        before = state.amplitudes.copy()
        apply_layer(state, spec, t)
        np.testing.assert_allclose(state.amplitudes, dense_layer(spec, t) @ before, atol=1e-9)
    np.testing.assert_allclose(state.amplitudes, expected, atol=1e-9)


@pytest.mark.parametrize("num_spins", [6, 8])
def test_modified_layer_matches_dense_oracle(num_spins):
    spec = build_circuit(num_spins, 2, 9)
    state = random_state(num_spins, 1)
    expected = dense_circuit(spec, 2, modified=True) @ state.amplitudes
    evolve(state, spec, 0, 2, modified=True)
    np.testing.assert_allclose(state.amplitudes, expected, atol=1e-9)


def test_strict_parity_rejects_even_n():
    spec = build_circuit(8, 2, 0)
    state = random_state(8, 0)
    with pytest.raises(UnsupportedConfigurationError):
        apply_modified_layer(state, spec, 1, strict_parity=True)
    apply_modified_layer(random_state(6, 0), build_circuit(6, 2, 0), 1, strict_parity=True)


@pytest.mark.parametrize("num_spins", [6, 10])
def test_layer_replacement_on_cut_subspace(num_spins):
    """For odd n, U(t,t-1) and V(t,t-1) agree on states with |00> at the cut"""
    spec = build_circuit(num_spins, 4, 17)
    for t in range(1, 5):
        _, projected = project_zero_at(random_state(num_spins, t), cut_sites(num_spins))
        u_state = Statevector(num_spins, projected.copy())
        v_state = Statevector(num_spins, projected.copy())
        apply_layer(u_state, spec, t)
        apply_modified_layer(v_state, spec, t)
        assert np.linalg.norm(u_state.amplitudes - v_state.amplitudes) <= 1e-10


def test_evolve_adjoint_round_trip():
    spec = build_circuit(8, 5, 3)
    state = random_state(8, 2)
    original = state.amplitudes.copy()
    evolve(state, spec, 0, 5)
    evolve_adjoint(state, spec, 0, 5)
    np.testing.assert_allclose(state.amplitudes, original, atol=1e-12)


def test_evolve_span_checks():
    spec = build_circuit(6, 3, 0)
    with pytest.raises(InvalidArgumentError):
        evolve(random_state(6, 0), spec, 2, 2)
    with pytest.raises(InvalidArgumentError):
        evolve(random_state(6, 0), spec, 0, 4)
    with pytest.raises(InvalidArgumentError):
        evolve(random_state(8, 0), spec, 0, 1)


def test_identity_circuit_leaves_state_alone():
    spec = CircuitSpec.identity(6, 4)
    state = init_product_x([SiteBasisSign.PLUS, SiteBasisSign.MINUS] * 3)
    original = state.amplitudes.copy()
    evolve(state, spec, 0, 4)
    np.testing.assert_array_equal(state.amplitudes, original)


def test_with_gates_override():
    spec = CircuitSpec.identity(4, 2).with_gates({(1, 1): ChargeGate.swap()})
    assert spec.kind == "custom"
    np.testing.assert_array_equal(spec.gate(1, 1).block, ChargeGate.swap().block)
    np.testing.assert_array_equal(spec.gate(2, 1).block, np.eye(2))
    with pytest.raises(InvalidArgumentError):
        spec.with_gates({(1, 1): ChargeGate(2.0, np.eye(2, dtype=complex), 1.0)})


def test_dump_and_load_round_trip(tmp_path):
    spec = build_circuit(6, 3, 77)
    path = dump_circuit(spec, tmp_path / "circuit.csv")
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header.split(",") == DUMP_COLUMNS
    loaded = load_circuit(path)
    assert loaded.kind == "loaded"
    assert loaded.same_gates(spec)
    assert len(circuit_table(spec)) == 3 * 5


def test_load_rejects_foreign_tables(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(InvalidArgumentError):
        load_circuit(path)


def test_haar_block_entry_weight_averages_to_half():
    stream = gate_stream(2024, 0, 0)
    weights = [abs(sample_haar_gate(stream).block[0, 0]) ** 2 for _ in range(100_000)]
    assert np.mean(weights) == pytest.approx(0.5, abs=0.01)


@pytest.mark.parametrize("num_spins", [6, 8, 10])
def test_modified_evolution_keeps_product_across_cut(num_spins):
    spec = build_circuit(num_spins, 6, num_spins)
    state = init_product_x([SiteBasisSign.PLUS, SiteBasisSign.MINUS] * (num_spins // 2))
    evolve(state, spec, 0, 6, modified=True)
    assert schmidt_spectrum(state, num_spins // 2).schmidt_rank == 1
    reference = init_product_x([SiteBasisSign.PLUS, SiteBasisSign.MINUS] * (num_spins // 2))
    evolve(reference, spec, 0, 6)
    assert schmidt_spectrum(reference, num_spins // 2).schmidt_rank > 1
