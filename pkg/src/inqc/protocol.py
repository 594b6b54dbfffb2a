"""Four-phase two-party protocol over the shared simulator.

SETUP allocates EPR slots and NLB instances. DISTRIBUTE teleports Bob's
input wires to Alice, folding Bell outcomes into Bob's key shares instead of
sending corrections. EVALUATE runs the circuit on the encrypted data: the
five Clifford gates act directly with local key rewrites, each T gate runs
the entanglement gadget (T, CNOT from the shared pair, two local
measurements, one NLB query per side) with zero classical communication.
FINAL_EXCHANGE teleports Bob's quantum outputs back, exchanges decryption
keys in one simultaneous round, decrypts locally, and assembles a run report
checked against the direct-evaluation oracle.

Branch forcing: a run may carry a flat list of outcome bits consumed in
execution order -- (m_x, m_z) per input teleport in wire order, (c, d) per T
gate in program order, (m_x, m_z) per Bob quantum output teleport in wire
order, then one raw bit per classical output and per discarded wire in wire
order. Unforced measurements sample from the run's seeded rng.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circuit import Circuit, circuit_sha256
from .pauli_frame import (
    KeyShare,
    KeyTable,
    apply_t_update,
    clifford_update,
    decrypt_key,
    teleport_update,
)
from .qsim import (
    Gate,
    StateVector,
    ZeroProbabilityError,
    apply_gate,
    extract_substate,
    fidelity,
    measure_z,
    product_state,
)
from .resources import (
    AuditResult,
    Channel,
    CommLedger,
    Phase,
    allocate_resources,
    ledger_audit,
    nlb_invoke,
)

DEFAULT_TOLERANCE = 1e-9


class ProtocolError(RuntimeError):
    """Phase-order violation or a precondition failure."""


@dataclass
class PartyState:
    """One party's local view: its own key shares, the wire map (shared by
    pre-agreed convention), and the gadget outcomes it produced. Never holds
    the other party's shares or outcomes before the final exchange."""

    party: str
    wire_map: dict[int, int]
    keys_view: Callable[[], KeyTable] | None = None
    pending_gadget_outcomes: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def key_shares(self) -> dict[int, KeyShare]:
        table = self.keys_view()
        return {w: table.share(self.party, w) for w in table.wires()}


@dataclass
class OutputReport:
    wire: int
    owner: str
    kind: str
    fidelity: float
    bit: int | None = None
    probability: float | None = None
    oracle_probability: float | None = None

    def to_dict(self) -> dict:
        d: dict = {
            "wire": self.wire,
            "owner": self.owner,
            "kind": self.kind,
            "fidelity": self.fidelity,
        }
        if self.bit is not None:
            d["bit"] = self.bit
            d["probability"] = self.probability
            d["oracle_probability"] = self.oracle_probability
        return d


@dataclass
class RunReport:
    circuit_hash: str
    seed: int
    phase_log: list[str]
    epr_allocated: int
    epr_consumed: int
    nlb_allocated: int
    nlb_consumed: int
    ledger: CommLedger
    audit: AuditResult
    keys_final: list[dict]
    outputs: list[OutputReport]
    oracle_fidelity_min: float
    branch_probability: float
    tolerance: float
    transcript: list[dict]
    passed: bool

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "circuit_hash": self.circuit_hash,
            "seed": self.seed,
            "phase_log": list(self.phase_log),
            "resources": {
                "epr": self.epr_consumed,
                "nlb": self.nlb_consumed,
                "epr_allocated": self.epr_allocated,
                "nlb_allocated": self.nlb_allocated,
            },
            "ledger": [ev.to_dict() for ev in self.ledger.events],
            "audit": self.audit.to_dict(),
            "keys_final": list(self.keys_final),
            "outputs": [o.to_dict() for o in self.outputs],
            "oracle_fidelity_min": self.oracle_fidelity_min,
            "branch_probability": self.branch_probability,
            "tolerance": self.tolerance,
            "transcript": list(self.transcript),
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


@dataclass
class OracleResult:
    """Direct-evaluation result: the joint pre-measurement state (wire w is
    qubit w) and exact Born marginals for classical output wires."""

    state: StateVector
    classical_distributions: dict[int, tuple[float, float]]


def oracle_evaluate(circuit: Circuit) -> OracleResult:
    """Evaluate the circuit directly: no encryption, no teleportation."""
    state = product_state([init.amplitudes for init in circuit.initial_states])
    for op in circuit.gates:
        state = apply_gate(state, Gate(op.kind, op.wires))
    dists: dict[int, tuple[float, float]] = {}
    for w in circuit.classical_output_wires():
        view = state.amplitudes.reshape(-1, 2, 1 << w)
        p1 = min(max(float(np.sum(np.abs(view[:, 1, :]) ** 2)), 0.0), 1.0)
        dists[w] = (1.0 - p1, p1)
    return OracleResult(state=state, classical_distributions=dists)


class ProtocolRun:
    """Deterministic state machine for one protocol execution."""

    def __init__(
        self,
        circuit: Circuit,
        seed: int,
        forced_outcomes: Sequence[int] | None = None,
        tolerance: float = DEFAULT_TOLERANCE,
        bob_gadget_first: bool = False,
    ):
        self.circuit = circuit
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.forced = deque(forced_outcomes) if forced_outcomes is not None else None
        self.tolerance = tolerance
        self.bob_gadget_first = bob_gadget_first

        self.phase = Phase.SETUP
        self.phase_log = [Phase.SETUP.value]
        self.pool, self.reg = allocate_resources(circuit)
        self.ledger = CommLedger()
        for _ in self.pool.epr_slots:
            self.ledger.record(Phase.SETUP, "A", "B", Channel.EPR_SETUP, 0)
        self.keys = KeyTable.fresh(range(circuit.num_wires))
        self.wire_map = {w: w for w in range(circuit.num_wires)}
        self.alice = PartyState("A", self.wire_map, keys_view=lambda: self.keys)
        self.bob = PartyState("B", self.wire_map, keys_view=lambda: self.keys)
        self.gates_done = 0
        self.branch_probability = 1.0
        self.transcript: list[dict] = []
        self._terminal_probs: dict[int, float] = {}
        self._raw_bits: dict[int, int] = {}
        self._advance(Phase.DISTRIBUTE)

    def _advance(self, phase: Phase) -> None:
        self.phase = phase
        self.phase_log.append(phase.value)

    def _require(self, phase: Phase) -> None:
        if self.phase is not phase:
            raise ProtocolError(f"operation requires phase {phase.value}, run is in {self.phase.value}")

    def _pop_forced(self) -> int | None:
        if not self.forced:
            return None
        bit = self.forced.popleft()
        if bit not in (0, 1):
            raise ProtocolError(f"forced outcome bits must be 0/1, got {bit!r}")
        return bit

    def distribute_inputs(self) -> None:
        """Teleport every Bob-owned input wire to Alice; Bob's shares become
        his Bell outcomes, everything else stays zero-keyed."""
        self._require(Phase.DISTRIBUTE)
        for wire in self.circuit.bob_input_wires:
            slot = self.pool.input_slot(wire)
            slot.consume()
            fx, fz = self._pop_forced(), self._pop_forced()
            out = self.reg.bell(
                self.wire_map[wire], slot.bob_qubit, forced_x=fx, forced_z=fz, rng=self.rng
            )
            self.keys = teleport_update(self.keys, "B", wire, out.m_x, out.m_z)
            self.wire_map[wire] = slot.alice_qubit
            self.branch_probability *= out.probability
            self.transcript.append(
                {"type": "teleport_in", "wire": wire, "m_x": out.m_x, "m_z": out.m_z}
            )
        self._advance(Phase.EVALUATE)

    def evaluate_gate(self, gate_index: int) -> None:
        """Run one gate on the encrypted data (gates run in program order)."""
        self._require(Phase.EVALUATE)
        if gate_index != self.gates_done:
            raise ProtocolError(f"gates must run in order; expected {self.gates_done}, got {gate_index}")
        op = self.circuit.gates[gate_index]
        if op.kind == "T":
            self.t_gadget(op.wires[0], gate_index)
        else:
            self.reg.apply(op.kind, *(self.wire_map[w] for w in op.wires))
            self.keys = clifford_update(self.keys, Gate(op.kind, op.wires))
            self.transcript.append(
                {"type": "gate", "index": gate_index, "kind": op.kind, "wires": list(op.wires)}
            )
        self.gates_done += 1

    def evaluate(self) -> None:
        while self.gates_done < len(self.circuit.gates):
            self.evaluate_gate(self.gates_done)

    def t_gadget(self, wire: int, gate_index: int) -> None:
        """Entanglement gadget for one T gate; no classical communication.

        Alice: T on the wire qubit, CNOT from her pair half, measure -> c,
        P^xA on her half (which becomes the wire). Bob: P^xB then H on his
        half, measure -> d. Both query the gate's NLB (Alice with xA ^ c,
        Bob with xB) and rewrite their shares locally.
        """
        self._require(Phase.EVALUATE)
        slot = self.pool.gadget_slot(gate_index)
        nlb = self.pool.nlb_for(gate_index)
        slot.consume()
        fc, fd = self._pop_forced(), self._pop_forced()
        x_a = self.keys.share("A", wire).x
        x_b = self.keys.share("B", wire).x
        outcomes: dict[str, int] = {}
        probs: dict[str, float] = {}

        def alice_steps() -> None:
            wire_q = self.wire_map[wire]
            self.reg.apply("T", wire_q)
            self.reg.apply("CNOT", slot.alice_qubit, wire_q)
            out_c = self.reg.measure(wire_q, forced=fc, rng=self.rng)
            if x_a:
                self.reg.apply("P", slot.alice_qubit)
            outcomes["c"] = out_c.bit
            probs["c"] = out_c.probability

        def bob_steps() -> None:
            if x_b:
                self.reg.apply("P", slot.bob_qubit)
            self.reg.apply("H", slot.bob_qubit)
            out_d = self.reg.measure(slot.bob_qubit, forced=fd, rng=self.rng)
            outcomes["d"] = out_d.bit
            probs["d"] = out_d.probability

        if self.bob_gadget_first:
            bob_steps()
            alice_steps()
        else:
            alice_steps()
            bob_steps()
        c, d = outcomes["c"], outcomes["d"]
        self.branch_probability *= probs["c"] * probs["d"]
        self.wire_map[wire] = slot.alice_qubit

        nlb_a = nlb_invoke(nlb, "A", x_a ^ c, self.rng)
        self.ledger.record(Phase.EVALUATE, "A", "B", Channel.NLB, 0)
        nlb_b = nlb_invoke(nlb, "B", x_b, self.rng)
        self.ledger.record(Phase.EVALUATE, "B", "A", Channel.NLB, 0)
        self.keys = apply_t_update(self.keys, wire, c, d, nlb_a, nlb_b)
        self.alice.pending_gadget_outcomes.append((gate_index, c, nlb_a))
        self.bob.pending_gadget_outcomes.append((gate_index, d, nlb_b))
        self.transcript.append(
            {
                "type": "t_gadget",
                "gate": gate_index,
                "wire": wire,
                "c": c,
                "d": d,
                "nlb_a": nlb_a,
                "nlb_b": nlb_b,
            }
        )

    def finalize(self) -> RunReport:
        """Teleport Bob's quantum outputs, run the one simultaneous classical
        round, decrypt locally, and report against the oracle."""
        self._require(Phase.EVALUATE)
        if self.gates_done != len(self.circuit.gates):
            raise ProtocolError("finalize called before all gates were evaluated")
        self._advance(Phase.FINAL_EXCHANGE)
        circuit = self.circuit

        for wire in circuit.quantum_output_wires("B"):
            slot = self.pool.output_slot(wire)
            slot.consume()
            fx, fz = self._pop_forced(), self._pop_forced()
            out = self.reg.bell(
                self.wire_map[wire], slot.alice_qubit, forced_x=fx, forced_z=fz, rng=self.rng
            )
            self.keys = teleport_update(self.keys, "A", wire, out.m_x, out.m_z)
            self.wire_map[wire] = slot.bob_qubit
            self.branch_probability *= out.probability
            self.transcript.append(
                {"type": "teleport_out", "wire": wire, "m_x": out.m_x, "m_z": out.m_z}
            )

        # Terminal measurements: all still-held-by-Alice non-quantum wires.
        for wire, label in [(w, "classical") for w in circuit.classical_output_wires()] + [
            (w, "discard") for w in circuit.discarded_wires
        ]:
            out = self.reg.measure(self.wire_map[wire], forced=self._pop_forced(), rng=self.rng)
            self._raw_bits[wire] = out.bit
            self._terminal_probs[wire] = out.probability
            self.branch_probability *= out.probability
            self.transcript.append(
                {"type": "measure", "wire": wire, "kind": label, "raw": out.bit}
            )

        # One simultaneous round: both messages are built from pre-barrier
        # state, then delivered together.
        message_ab: list[int] = []
        for wire in circuit.output_wires:
            if circuit.output_owner[wire] != "B":
                continue
            share = self.keys.share("A", wire)
            if circuit.output_kind[wire] == "quantum":
                message_ab.extend((share.x, share.z))
            else:
                message_ab.append(self._raw_bits[wire] ^ share.x)
        message_ba: list[int] = []
        for wire in circuit.output_wires:
            if circuit.output_owner[wire] != "A":
                continue
            share = self.keys.share("B", wire)
            if circuit.output_kind[wire] == "quantum":
                message_ba.extend((share.x, share.z))
            else:
                message_ba.append(share.x)
        self.ledger.record(Phase.FINAL_EXCHANGE, "A", "B", Channel.CLASSICAL, len(message_ab))
        self.ledger.record(Phase.FINAL_EXCHANGE, "B", "A", Channel.CLASSICAL, len(message_ba))

        # Local decryption. Quantum outputs get Z^z X^x; classical bits get
        # the x key XORed in.
        decrypted_bits: dict[int, int] = {}
        for wire in circuit.quantum_output_wires():
            x, z = decrypt_key(self.keys, wire)
            if x:
                self.reg.apply("X", self.wire_map[wire])
            if z:
                self.reg.apply("Z", self.wire_map[wire])
        for wire in circuit.classical_output_wires() + circuit.discarded_wires:
            x, _ = decrypt_key(self.keys, wire)
            decrypted_bits[wire] = self._raw_bits[wire] ^ x

        if self.pool.epr_consumed != len(self.pool.epr_slots):
            raise ProtocolError("unconsumed EPR slots at end of run")
        if any(not n.fully_queried for n in self.pool.nlbs):
            raise ProtocolError("NLB instance not fully queried at end of run")

        report = self._build_report(decrypted_bits)
        self._advance(Phase.DONE)
        return report

    def _build_report(self, decrypted_bits: dict[int, int]) -> RunReport:
        circuit = self.circuit
        oracle = oracle_evaluate(circuit)
        ostate = oracle.state
        conditioning_failed = False
        oracle_probs: dict[int, float] = {}
        for wire in circuit.classical_output_wires() + circuit.discarded_wires:
            bit = decrypted_bits[wire]
            if conditioning_failed:
                oracle_probs[wire] = 0.0
                continue
            try:
                out, ostate = measure_z(ostate, wire, forced=bit)
                oracle_probs[wire] = out.probability
            except ZeroProbabilityError:
                oracle_probs[wire] = 0.0
                conditioning_failed = True

        quantum_wires = circuit.quantum_output_wires()
        joint_fidelity = 1.0
        if quantum_wires:
            if conditioning_failed:
                joint_fidelity = 0.0
            else:
                oracle_sub = extract_substate(ostate, quantum_wires)
                proto_sub = self.reg.statevector([self.wire_map[w] for w in quantum_wires])
                joint_fidelity = fidelity(oracle_sub, proto_sub)

        outputs: list[OutputReport] = []
        for wire in circuit.output_wires:
            owner = circuit.output_owner[wire]
            if circuit.output_kind[wire] == "quantum":
                outputs.append(OutputReport(wire, owner, "quantum", joint_fidelity))
            else:
                p_run = self._terminal_probs[wire]
                p_oracle = oracle_probs[wire]
                ok = not conditioning_failed and abs(p_run - p_oracle) <= max(self.tolerance, 1e-9)
                outputs.append(
                    OutputReport(
                        wire,
                        owner,
                        "classical",
                        1.0 if ok else 0.0,
                        bit=decrypted_bits[wire],
                        probability=p_run,
                        oracle_probability=p_oracle,
                    )
                )
        min_fid = min((o.fidelity for o in outputs), default=1.0)

        audit = ledger_audit(self.ledger)
        keys_final = [
            {
                "wire": w,
                "xA": self.keys.share("A", w).x,
                "zA": self.keys.share("A", w).z,
                "xB": self.keys.share("B", w).x,
                "zB": self.keys.share("B", w).z,
            }
            for w in range(circuit.num_wires)
        ]
        return RunReport(
            circuit_hash=circuit_sha256(circuit),
            seed=self.seed,
            phase_log=list(self.phase_log) + [Phase.DONE.value],
            epr_allocated=len(self.pool.epr_slots),
            epr_consumed=self.pool.epr_consumed,
            nlb_allocated=len(self.pool.nlbs),
            nlb_consumed=self.pool.nlb_consumed,
            ledger=self.ledger,
            audit=audit,
            keys_final=keys_final,
            outputs=outputs,
            oracle_fidelity_min=min_fid,
            branch_probability=self.branch_probability,
            tolerance=self.tolerance,
            transcript=list(self.transcript),
            passed=audit.passed and min_fid >= 1.0 - self.tolerance,
        )


def run_protocol(
    circuit: Circuit,
    seed: int,
    forced_outcomes: Sequence[int] | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    bob_gadget_first: bool = False,
) -> RunReport:
    """Execute all four phases on ``circuit`` and return the report."""
    run = ProtocolRun(
        circuit,
        seed,
        forced_outcomes=forced_outcomes,
        tolerance=tolerance,
        bob_gadget_first=bob_gadget_first,
    )
    run.distribute_inputs()
    run.evaluate()
    return run.finalize()


def run_single_output_variant(
    circuit: Circuit,
    seed: int,
    forced_outcomes: Sequence[int] | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> RunReport:
    """Communication-collapse variant: one output wire, Alice's, Bob owed
    nothing. The final round degenerates to 2 bits Bob->Alice for a quantum
    output (1 bit for classical) and an empty Alice->Bob message."""
    outs = circuit.output_wires
    if len(outs) != 1 or circuit.output_owner[outs[0]] != "A":
        raise ProtocolError(
            "single-output variant requires exactly one output wire, owned by A"
        )
    return run_protocol(circuit, seed, forced_outcomes=forced_outcomes, tolerance=tolerance)
