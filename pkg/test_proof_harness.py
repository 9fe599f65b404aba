#!/usr/bin/env python3
"""
Tests for the defect/overlap chain behind the Renyi growth bound
"""
import itertools
import math

import numpy as np
import pytest

import proof_harness
from circuits import CircuitSpec, build_circuit, evolve
from dense_oracle import dense_evolve, density_eigenvalues
from entanglement import schmidt_spectrum
from errors import InvalidArgumentError, InvariantViolationError, UnsupportedConfigurationError
from proof_harness import (
    ProofTracker,
    ScheduledProofRun,
    bound_vs_measurement,
    ensemble_s_prime,
    layer_replacement_defect,
    m_schedule,
    min_entropy_matches_lambda1,
    p_of_t,
    run_proof_trace,
    verify_overlap_chain,
)
from statevector_core import SiteBasisSign, Statevector, init_product_x, init_zero_block, zero_block_sites
from transport import measure_leakage

PLUS, MINUS = SiteBasisSign.PLUS, SiteBasisSign.MINUS


def signs_for(seed, num_spins):
    rng = np.random.default_rng(seed)
    return [PLUS if bit else MINUS for bit in rng.integers(0, 2, num_spins)]


def test_schedule_and_polynomial():
    assert m_schedule(0, 2.0, 8) == (1, False)
    assert m_schedule(1, 2.0, 8) == (1, False)
    assert m_schedule(2, 2.0, 8) == (3, False)
    assert m_schedule(10, 2.0, 8) == (8, True)
    assert p_of_t(0, 2) == 1.0
    assert p_of_t(5, 2) == 25.0


def test_schedule_with_transport_exponent():
    for t in range(0, 200):
        assert m_schedule(t, 1.7, 500, m_exponent=0.5) == m_schedule(t, 1.7, 500)
    assert m_schedule(4, 1.0, 50, m_exponent=1.0) == (5, False)
    assert m_schedule(16, 2.0, 50, m_exponent=0.25) == (7, False)
    with pytest.raises(InvalidArgumentError):
        m_schedule(4, 1.0, 50, m_exponent=0.0)


def test_identity_circuit_trace():
    spec = CircuitSpec.identity(10, 6)
    trace = run_proof_trace(spec, signs_for(0, 10), m=3, t=6)
    assert trace.delta_norm == 0
    assert trace.overlap_V == pytest.approx(2.0 ** -3, abs=1e-12)
    assert trace.lambda1_measured >= 2.0 ** -3
    assert trace.s_prime_member
    assert trace.ok
    assert all(check.holds for check in verify_overlap_chain(trace))


@pytest.mark.parametrize("num_spins", [8, 10, 12])
def test_unitarity_anchor(num_spins):
    spec = build_circuit(num_spins, 8, 21)
    for m in range(1, num_spins // 2 + 1):
        trace = run_proof_trace(spec, signs_for(m, num_spins), m=m, t=8)
        assert trace.overlap_U == pytest.approx(2.0 ** -m, abs=1e-10)


def test_trace_against_dense_oracle():
    spec = build_circuit(10, 6, 4)
    signs = signs_for(4, 10)
    trace = run_proof_trace(spec, signs, m=3, t=6)

    psi_init = init_product_x(signs)
    psi_zero = init_zero_block(psi_init, 3).amplitudes
    delta = dense_evolve(spec, psi_zero, 6) - dense_evolve(spec, psi_zero, 6, modified=True)
    evolved = dense_evolve(spec, psi_init.amplitudes, 6)
    eigenvalues = density_eigenvalues(evolved, 5)

    assert trace.delta_norm == pytest.approx(np.linalg.norm(delta), abs=1e-9)
    assert trace.defect_overlap == pytest.approx(abs(np.vdot(delta, evolved)), abs=1e-9)
    assert trace.lambda1_measured == pytest.approx(math.sqrt(eigenvalues[0]), abs=1e-9)
    assert trace.lambda1_measured >= trace.overlap_V - 1e-9


@pytest.mark.parametrize("num_spins", [8, 10, 12])
def test_defect_accounting(num_spins):
    """Even and odd n: ||Delta_t|| never exceeds twice the summed cut leakage"""
    for seed in range(5):
        spec = build_circuit(num_spins, 10, seed)
        trace = run_proof_trace(spec, signs_for(seed, num_spins), m=2, t=10)
        assert trace.delta_norm <= 2 * sum(trace.cut_leakage) + 1e-9
        assert len(trace.per_layer_leakage) == 10
        assert len(trace.cut_leakage) == 10
        assert trace.ok


def test_strict_parity():
    with pytest.raises(UnsupportedConfigurationError):
        run_proof_trace(build_circuit(8, 2, 0), signs_for(0, 8), m=1, t=1, strict_parity=True)
    trace = run_proof_trace(build_circuit(10, 2, 0), signs_for(0, 10), m=1, t=1, strict_parity=True)
    assert trace.ok


def test_strict_mode_raises_on_failures(monkeypatch):
    monkeypatch.setattr(proof_harness, "UNITARITY_TOLERANCE", -1.0)
    with pytest.raises(InvariantViolationError) as caught:
        run_proof_trace(build_circuit(6, 2, 0), signs_for(0, 6), m=1, t=2, strict=True)
    assert caught.value.failures


def test_chain_holds_over_many_seeds():
    violations = []
    for seed in range(50):
        spec = build_circuit(12, 6, seed)
        trace = run_proof_trace(spec, signs_for(seed, 12), m=2, t=6)
        violations += [check.name for check in verify_overlap_chain(trace) if not check.holds]
        spectrum = schmidt_spectrum(_evolved(spec, signs_for(seed, 12), 6), 6)
        assert min_entropy_matches_lambda1(spectrum, trace)
    assert violations == []


def _evolved(spec, signs, t):
    state = init_product_x(signs)
    evolve(state, spec, 0, t)
    return state


@pytest.mark.parametrize("num_spins", [6, 10])
def test_layer_replacement_identity(num_spins):
    spec = build_circuit(num_spins, 3, 8)
    rng = np.random.default_rng(num_spins)
    for t in range(1, 4):
        amplitudes = rng.standard_normal(1 << num_spins) + 1j * rng.standard_normal(1 << num_spins)
        phi = Statevector(num_spins, amplitudes / np.linalg.norm(amplitudes))
        assert layer_replacement_defect(spec, t, phi) <= 1e-10


def test_ensemble_for_identity_circuit():
    report = ensemble_s_prime(CircuitSpec.identity(8, 4), signs_for(1, 8), m=2, t=4)
    assert report.exhaustive
    assert report.ensemble_size == 16
    assert report.fraction_below == 1.0
    assert report.markov_holds and report.mean_holds


def test_ensemble_overlaps_match_brute_force():
    spec = build_circuit(8, 5, 12)
    out_signs = signs_for(12, 8)
    m, t = 2, 5
    report = ensemble_s_prime(spec, out_signs, m=m, t=t, p_degree=1)

    tracker = ProofTracker(spec, init_product_x(out_signs), m)
    tracker.advance_to(t)
    delta = tracker.defect()
    overlaps = []
    for choice in itertools.product([PLUS, MINUS], repeat=2 * m):
        signs = list(out_signs)
        for site, sign in zip(zero_block_sites(8, m), choice):
            signs[site - 1] = sign
        overlaps.append(abs(np.vdot(delta, _evolved(spec, signs, t).amplitudes)))
    overlaps = np.array(overlaps)

    assert report.mean_defect_overlap == pytest.approx(overlaps.mean(), abs=1e-12)
    assert report.fraction_below == pytest.approx(np.mean(overlaps <= report.threshold + 1e-14))


@pytest.mark.parametrize("seed", range(10))
def test_exhaustive_ensemble_step(seed):
    report = ensemble_s_prime(build_circuit(12, 8, seed), signs_for(seed, 12), m=3, t=8)
    assert report.exhaustive and report.ensemble_size == 64
    assert report.mean_holds
    assert report.fraction_below >= 1 - 1 / report.p_of_t


def test_sampled_ensemble_step():
    report = ensemble_s_prime(build_circuit(16, 6, 3), signs_for(3, 16), m=7, t=6, sample_size=500)
    assert not report.exhaustive
    assert report.ensemble_size == 500
    assert report.markov_holds


def test_scheduled_run_matches_transport_leakage():
    spec = build_circuit(8, 8, 6)
    psi_init = init_product_x(signs_for(6, 8))
    state = psi_init.copy()
    run = ScheduledProofRun(spec, psi_init, m_const=1.0, p_degree=2)
    traces = []
    for t in range(0, 9):
        if t > 0:
            evolve(state, spec, t - 1, t)
        traces.append(run.trace_at(t, state))
    for trace in traces:
        curve = measure_leakage(spec, psi_init, [trace.m], [trace.t])
        assert trace.leakage == pytest.approx(curve.entries[0].leakage, abs=1e-10)
        assert trace.ok
    assert [trace.m for trace in traces] == sorted(trace.m for trace in traces)


def test_bound_table_for_identity_circuit():
    spec = CircuitSpec.identity(8, 5)
    traces = [run_proof_trace(spec, signs_for(0, 8), m=min(4, t + 1), t=t) for t in range(6)]
    table = bound_vs_measurement(traces)
    assert set(table["alpha"]) == {2.0, 3.0, math.inf}
    np.testing.assert_allclose(table["measured"], 0.0, atol=1e-12)
    assert not table["violated"].any()
    assert (table["bound"] > 0).all()


def test_vacuous_bound_is_excluded():
    spec = build_circuit(8, 10, 1)
    trace = run_proof_trace(spec, signs_for(1, 8), m=1, t=10, p_degree=4)
    assert trace.vacuous
    assert math.isnan(trace.min_entropy_bound)
    assert bound_vs_measurement([trace])["bound"].isna().all()


@pytest.mark.slow
def test_bound_dominates_measurement():
    violations = 0
    for seed in range(20):
        spec = build_circuit(16, 30, seed)
        psi_init = init_product_x(signs_for(seed, 16))
        state = psi_init.copy()
        run = ScheduledProofRun(spec, psi_init, m_const=2.0, p_degree=2)
        traces = []
        for t in range(0, 31):
            if t > 0:
                evolve(state, spec, t - 1, t)
            trace = run.trace_at(t, state)
            assert trace.lambda1_measured >= trace.overlap_V - 1e-9
            traces.append(trace)
        violations += int(bound_vs_measurement(traces)["violated"].sum())
    assert violations == 0


def test_diffusive_exponent_reproduces_default_bound():
    spec = build_circuit(8, 8, 2)
    psi_init = init_product_x(signs_for(2, 8))
    default = ScheduledProofRun(spec, psi_init, m_const=1.0, p_degree=2)
    explicit = ScheduledProofRun(spec, psi_init, m_const=1.0, p_degree=2, m_exponent=0.5)
    state = psi_init.copy()
    for t in range(0, 9):
        if t > 0:
            evolve(state, spec, t - 1, t)
        a, b = default.trace_at(t, state), explicit.trace_at(t, state)
        assert (a.m, a.delta_norm, a.lambda1_bound) == (b.m, b.delta_norm, b.lambda1_bound)
        assert a.min_entropy_bound == b.min_entropy_bound or (a.vacuous and b.vacuous)
