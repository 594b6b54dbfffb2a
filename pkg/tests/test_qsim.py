"""Tests for the dense statevector simulator."""
import numpy as np
import pytest

from inqc.qsim import (
    Gate,
    Register,
    SimulationError,
    StateVector,
    ZeroProbabilityError,
    apply_gate,
    bell_measure,
    extract_substate,
    fidelity,
    from_amplitudes,
    make_epr,
    measure_z,
    product_state,
    states_equal_up_to_phase,
    zero_state,
)

from helpers import (
    ONE_QUBIT,
    PLUS,
    SQ,
    X,
    Z,
    cnot_on,
    equal_up_to_phase,
    op_on,
    random_state,
)


def sv(amps) -> StateVector:
    return from_amplitudes(np.asarray(amps, dtype=complex))


# =============================================================================
# Gate application
# =============================================================================

def test_h_on_zero_gives_plus():
    """H|0> = (|0> + |1>)/sqrt(2)"""
    out = apply_gate(zero_state(1), Gate("H", (0,)))
    assert np.allclose(out.amplitudes, [SQ, SQ])


def test_t_on_one_gives_phase():
    """T|1> = e^{i pi/4}|1>"""
    out = apply_gate(sv([0, 1]), Gate("T", (0,)))
    assert np.allclose(out.amplitudes, [0, np.exp(1j * np.pi / 4)], atol=1e-12)


def test_cnot_control_first():
    """CNOT |j>|k> -> |j>|j^k>: control 1, target 0 flips the target."""
    # control = qubit 0 (value 1), target = qubit 1 (value 0): index 1 -> index 3
    out = apply_gate(sv([0, 1, 0, 0]), Gate("CNOT", (0, 1)))
    assert np.allclose(out.amplitudes, [0, 0, 0, 1])


@pytest.mark.parametrize("kind", ["X", "Z", "P", "H", "T"])
def test_single_qubit_gates_match_matrix_oracle(kind):
    rng = np.random.default_rng(11)
    for qubit in range(3):
        psi = random_state(rng, 3)
        got = apply_gate(sv(psi), Gate(kind, (qubit,))).amplitudes
        want = op_on(3, ONE_QUBIT[kind], qubit) @ psi
        assert np.allclose(got, want, atol=1e-12)


def test_cnot_matches_matrix_oracle_all_pairs():
    rng = np.random.default_rng(12)
    for ctrl in range(3):
        for targ in range(3):
            if ctrl == targ:
                continue
            psi = random_state(rng, 3)
            got = apply_gate(sv(psi), Gate("CNOT", (ctrl, targ))).amplitudes
            assert np.allclose(got, cnot_on(3, ctrl, targ) @ psi, atol=1e-12)


def test_unitarity_norm_preserved():
    """Norm stays 1 within 1e-12 for every gate on random states."""
    rng = np.random.default_rng(13)
    state = sv(random_state(rng, 4))
    for _ in range(60):
        kind = ("X", "Z", "P", "H", "T", "CNOT")[int(rng.integers(6))]
        if kind == "CNOT":
            a, b = rng.choice(4, size=2, replace=False)
            state = apply_gate(state, Gate(kind, (int(a), int(b))))
        else:
            state = apply_gate(state, Gate(kind, (int(rng.integers(4)),)))
        assert abs(state.norm() - 1.0) < 1e-12


def test_gate_validation_errors():
    with pytest.raises(SimulationError):
        Gate("CNOT", (1, 1))
    with pytest.raises(SimulationError):
        Gate("Q", (0,))
    with pytest.raises(SimulationError):
        Gate("X", (0, 1))
    with pytest.raises(SimulationError):
        apply_gate(zero_state(1), Gate("X", (3,)))


# =============================================================================
# Computational-basis measurement
# =============================================================================

def test_measure_plus_forced_one():
    """Forcing |+> to 1 has probability 0.5 and post-state |1>."""
    out, post = measure_z(sv([SQ, SQ]), 0, forced=1)
    assert out.bit == 1 and out.forced
    assert abs(out.probability - 0.5) < 1e-12
    assert np.allclose(post.amplitudes, [0, 1])
    assert post.consumed == {0: 1}


def test_measure_zero_state_deterministic():
    rng = np.random.default_rng(0)
    out, post = measure_z(zero_state(1), 0, rng=rng)
    assert out.bit == 0 and not out.forced
    assert abs(out.probability - 1.0) < 1e-12
    assert np.allclose(post.amplitudes, [1, 0])


def test_measure_epr_correlates():
    """Forcing the first EPR qubit to 0 collapses to |00>."""
    out, post = measure_z(sv([SQ, 0, 0, SQ]), 0, forced=0)
    assert abs(out.probability - 0.5) < 1e-12
    assert np.allclose(post.amplitudes, [1, 0, 0, 0])


def test_measure_branch_probabilities_sum_to_one():
    rng = np.random.default_rng(21)
    psi = random_state(rng, 3)
    for qubit in range(3):
        p0 = measure_z(sv(psi), qubit, forced=0)[0].probability
        p1 = measure_z(sv(psi), qubit, forced=1)[0].probability
        assert abs(p0 + p1 - 1.0) < 1e-12


def test_forcing_zero_probability_branch_raises():
    with pytest.raises(ZeroProbabilityError):
        measure_z(zero_state(1), 0, forced=1)


def test_consumed_qubit_rejects_further_operations():
    _, post = measure_z(sv([SQ, SQ]), 0, forced=0)
    with pytest.raises(SimulationError):
        apply_gate(post, Gate("X", (0,)))
    with pytest.raises(SimulationError):
        measure_z(post, 0, forced=0)


# =============================================================================
# Bell measurement / teleportation
# =============================================================================

def teleport(psi, forced):
    """Teleport a single-qubit state through a fresh EPR pair; returns the
    receiver's amplitudes after a forced outcome."""
    state = sv(psi)
    state, q_send, q_recv = make_epr(state)
    (m_x, m_z), state = bell_measure(state, 0, q_send, forced=forced)
    assert (m_x, m_z) == forced
    return extract_substate(state, [q_recv])


def test_teleport_zero_state_lands_on_m_x():
    """Teleporting |0> leaves the receiver in X^m_x |0> = |m_x>."""
    for m_x in (0, 1):
        for m_z in (0, 1):
            got = teleport([1, 0], (m_x, m_z))
            want = np.zeros(2, dtype=complex)
            want[m_x] = 1.0
            assert equal_up_to_phase(got, want, tol=1e-9)


def test_teleport_plus_outcome_x0_z1_gives_minus():
    """DERIVED oracle: X^0 Z^1 |+> = |->."""
    got = teleport(PLUS, (0, 1))
    assert equal_up_to_phase(got, [SQ, -SQ], tol=1e-9)


def test_teleport_outcomes_uniform_quarter():
    """All four Bell outcomes of teleporting a random state have p = 1/4."""
    rng = np.random.default_rng(31)
    psi = random_state(rng, 1)
    for m_x in (0, 1):
        for m_z in (0, 1):
            state = sv(psi)
            state, q_send, q_recv = make_epr(state)
            rot = apply_gate(state, Gate("CNOT", (0, q_send)))
            rot = apply_gate(rot, Gate("H", (0,)))
            out_z, rot = measure_z(rot, 0, forced=m_z)
            out_x, rot = measure_z(rot, q_send, forced=m_x)
            assert abs(out_z.probability * out_x.probability - 0.25) < 1e-12


def test_teleport_roundtrip_corrections():
    """Z^m_z X^m_x restores the input for 50 random states, all 4 outcomes."""
    rng = np.random.default_rng(32)
    for _ in range(50):
        psi = random_state(rng, 1)
        for m_x in (0, 1):
            for m_z in (0, 1):
                got = teleport(psi, (m_x, m_z))
                fixed = np.linalg.matrix_power(Z, m_z) @ np.linalg.matrix_power(X, m_x) @ got
                assert abs(np.vdot(fixed, psi)) >= 1.0 - 1e-9


def test_bell_measure_forcing_zero_probability_raises():
    # (|00> + |11>)/sqrt(2) projected on q1,q2 has only (m_x=0, m_z=*) support
    # after teleporting |0>: outcome labels come from the receiver-side pad,
    # so force an impossible joint branch instead: |00> has no (1, *) weight.
    state = product_state([(1, 0), (1, 0)])
    with pytest.raises(ZeroProbabilityError):
        bell_measure(state, 0, 1, forced=(1, 1))


# =============================================================================
# EPR creation and state comparison
# =============================================================================

def test_make_epr_from_empty_register():
    state, q1, q2 = make_epr(zero_state(0))
    assert (q1, q2) == (0, 1)
    assert np.allclose(state.amplitudes, [SQ, 0, 0, SQ])


def test_make_epr_measurements_agree():
    rng = np.random.default_rng(41)
    for _ in range(10):
        state, q1, q2 = make_epr(zero_state(0))
        out1, state2 = measure_z(state, q1, rng=rng)
        out2, _ = measure_z(state2, q2, rng=rng)
        assert out1.bit == out2.bit


def test_make_epr_tensors_onto_existing_state():
    rng = np.random.default_rng(42)
    psi = random_state(rng, 2)
    state, q1, q2 = make_epr(sv(psi))
    assert state.num_qubits == 4 and (q1, q2) == (2, 3)
    pair = np.array([SQ, 0, 0, SQ], dtype=complex)
    assert np.allclose(state.amplitudes, np.kron(pair, psi), atol=1e-12)


def test_states_equal_up_to_phase_cases():
    rng = np.random.default_rng(43)
    psi = random_state(rng, 1)
    assert states_equal_up_to_phase(sv(psi), sv(np.exp(1j * np.pi / 4) * psi))
    assert not states_equal_up_to_phase(sv([1, 0]), sv([0, 1]))
    with pytest.raises(SimulationError):
        states_equal_up_to_phase(zero_state(1), zero_state(2))


def test_xz_anticommutes_up_to_phase():
    """DERIVED oracle: X Z |psi> = -(Z X |psi>)."""
    rng = np.random.default_rng(44)
    psi = random_state(rng, 1)
    a = apply_gate(apply_gate(sv(psi), Gate("Z", (0,))), Gate("X", (0,)))
    b = apply_gate(apply_gate(sv(psi), Gate("X", (0,))), Gate("Z", (0,)))
    assert np.allclose(X @ Z @ psi, -(Z @ X @ psi), atol=1e-12)
    assert states_equal_up_to_phase(a, b, tol=1e-9)
    assert np.allclose(a.amplitudes, -b.amplitudes, atol=1e-12)


def test_fidelity_and_extract_substate():
    rng = np.random.default_rng(45)
    psi = random_state(rng, 1)
    state = product_state([(1, 0), tuple(psi)])
    _, state = measure_z(state, 0, forced=0)
    got = extract_substate(state, [1])
    assert fidelity(got, psi) > 1.0 - 1e-12
    with pytest.raises(SimulationError):
        extract_substate(state, [0, 1])  # qubit 0 is consumed


def test_product_state_ordering():
    state = product_state([(0, 1), (1, 0)])  # qubit0 = |1>, qubit1 = |0>
    assert np.allclose(state.amplitudes, [0, 1, 0, 0])


# =============================================================================
# Register: stable handles, lazy pairs, compaction
# =============================================================================

def test_register_lazy_epr_matches_eager():
    rng = np.random.default_rng(51)
    psi = random_state(rng, 1)
    reg = Register()
    w = reg.alloc(*psi)
    h1, h2 = reg.alloc_epr()
    assert reg.sv.num_qubits == 1  # pair not yet materialized
    out = reg.bell(w, h1, forced_x=1, forced_z=0)
    assert (out.m_x, out.m_z) == (1, 0)
    assert abs(out.probability - 0.25) < 1e-12
    got = reg.statevector([h2])
    assert equal_up_to_phase(got, X @ psi, tol=1e-9)


def test_register_handles_survive_drops():
    reg = Register()
    a = reg.alloc(1, 0)
    b = reg.alloc(0, 1)
    c = reg.alloc(*PLUS)
    reg.measure(a, forced=0)
    reg.apply("X", b)  # handle b still valid after a was dropped
    assert reg.bit(a) == 0
    got = reg.statevector([b, c])
    assert np.allclose(got, np.kron(PLUS, [1, 0]), atol=1e-12)  # b=|0> now
    with pytest.raises(SimulationError):
        reg.apply("X", a)


def test_register_statevector_requires_all_live_handles():
    reg = Register()
    reg.alloc(1, 0)
    reg.alloc(0, 1)
    with pytest.raises(SimulationError):
        reg.statevector([0])


def test_register_bell_matches_bell_measure_labels():
    rng = np.random.default_rng(52)
    psi = random_state(rng, 1)
    for m_x in (0, 1):
        for m_z in (0, 1):
            reg = Register()
            w = reg.alloc(*psi)
            h1, h2 = reg.alloc_epr()
            reg.bell(w, h1, forced_x=m_x, forced_z=m_z)
            via_register = reg.statevector([h2])
            via_function = teleport(psi, (m_x, m_z))
            assert np.allclose(via_register, via_function, atol=1e-12)
