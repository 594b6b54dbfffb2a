"""Nonlocal-resource bookkeeping and the communication ledger.

EPR slots and nonlocal-box instances are allocated before the run starts,
in a canonical order both parties can derive without talking: input-teleport
slots in wire order, then one T-gadget slot per T gate in program order,
then output-teleport slots in wire order. The ledger records every
cross-party interaction; the audit certifies that classical messages exist
only in the final simultaneous round (one per direction) and that EPR setup
and NLB use carry no classical payload.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .circuit import Circuit
from .qsim import Register


class Phase(str, Enum):
    SETUP = "SETUP"
    DISTRIBUTE = "DISTRIBUTE"
    EVALUATE = "EVALUATE"
    FINAL_EXCHANGE = "FINAL_EXCHANGE"
    DONE = "DONE"


PHASE_ORDER = tuple(Phase)


class Channel(str, Enum):
    EPR_SETUP = "epr_setup"
    NLB = "nlb"
    CLASSICAL = "classical"


class ResourceError(RuntimeError):
    """Double consumption or a malformed resource request."""


@dataclass(frozen=True)
class EprPurpose:
    kind: str  # input_teleport | t_gadget | output_teleport
    index: int  # wire id for teleports, gate index for gadgets


@dataclass
class EprSlot:
    id: int
    purpose: EprPurpose
    alice_qubit: int
    bob_qubit: int
    consumed: bool = False

    def consume(self) -> None:
        if self.consumed:
            raise ResourceError(f"EPR slot {self.id} ({self.purpose.kind}) consumed twice")
        self.consumed = True


@dataclass
class NlbInstance:
    """One Popescu-Rohrlich box: outputs satisfy a ^ b = x & y exactly.

    The first query samples the shared hidden bit and returns it; the later
    query from the other side returns hidden ^ (x & y). Each side may query
    once and learns only its own output.
    """

    id: int
    purpose: int  # index of the T gate this instance serves
    hidden_bit: int | None = None
    inputs: dict[str, int] = field(default_factory=dict)
    outputs: dict[str, int] = field(default_factory=dict)

    @property
    def fully_queried(self) -> bool:
        return len(self.outputs) == 2


def nlb_invoke(instance: NlbInstance, side: str, input_bit: int, rng: np.random.Generator) -> int:
    if side not in ("A", "B"):
        raise ResourceError(f"NLB side must be A or B, got {side!r}")
    if input_bit not in (0, 1):
        raise ResourceError(f"NLB input must be 0/1, got {input_bit!r}")
    if side in instance.inputs:
        raise ResourceError(f"side {side} queried NLB {instance.id} twice")
    instance.inputs[side] = input_bit
    if len(instance.inputs) == 1:
        if instance.hidden_bit is None:
            instance.hidden_bit = int(rng.integers(0, 2))
        out = instance.hidden_bit
    else:
        out = instance.hidden_bit ^ (instance.inputs["A"] & instance.inputs["B"])
    instance.outputs[side] = out
    return out


@dataclass(frozen=True)
class CommEvent:
    seq: int
    phase: str
    from_party: str
    to_party: str
    channel: str
    payload_bits: int

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "phase": self.phase,
            "from": self.from_party,
            "to": self.to_party,
            "channel": self.channel,
            "payload_bits": self.payload_bits,
        }


@dataclass
class CommLedger:
    events: list[CommEvent] = field(default_factory=list)

    def record(
        self, phase: Phase, from_party: str, to_party: str, channel: Channel, payload_bits: int
    ) -> CommEvent:
        event = CommEvent(
            seq=len(self.events),
            phase=phase.value,
            from_party=from_party,
            to_party=to_party,
            channel=channel.value,
            payload_bits=payload_bits,
        )
        self.events.append(event)
        return event


def ledger_record(
    ledger: CommLedger, phase: Phase, from_party: str, to_party: str,
    channel: Channel, payload_bits: int,
) -> CommLedger:
    ledger.record(phase, from_party, to_party, channel, payload_bits)
    return ledger


@dataclass
class AuditResult:
    passed: bool
    violations: list[str]
    events_by_channel: dict[str, int]
    events_by_phase: dict[str, int]
    classical_bits_ab: int
    classical_bits_ba: int

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": list(self.violations),
            "events_by_channel": dict(self.events_by_channel),
            "events_by_phase": dict(self.events_by_phase),
            "classical_bits_ab": self.classical_bits_ab,
            "classical_bits_ba": self.classical_bits_ba,
        }


def ledger_audit(ledger: CommLedger) -> AuditResult:
    """Check the single-simultaneous-round discipline; never raises."""
    violations: list[str] = []
    by_channel: dict[str, int] = {}
    by_phase: dict[str, int] = {}
    bits = {("A", "B"): 0, ("B", "A"): 0}
    classical = {("A", "B"): 0, ("B", "A"): 0}
    phase_rank = {p.value: i for i, p in enumerate(PHASE_ORDER)}
    last_rank = 0

    for ev in ledger.events:
        by_channel[ev.channel] = by_channel.get(ev.channel, 0) + 1
        by_phase[ev.phase] = by_phase.get(ev.phase, 0) + 1
        rank = phase_rank.get(ev.phase)
        if rank is None:
            violations.append(f"event {ev.seq}: unknown phase {ev.phase!r}")
            continue
        if rank < last_rank:
            violations.append(f"event {ev.seq}: phase {ev.phase} after {PHASE_ORDER[last_rank].value}")
        last_rank = max(last_rank, rank)
        if ev.channel == Channel.EPR_SETUP.value and ev.phase != Phase.SETUP.value:
            violations.append(f"event {ev.seq}: epr_setup outside SETUP (in {ev.phase})")
        if ev.channel == Channel.NLB.value and ev.payload_bits != 0:
            violations.append(f"event {ev.seq}: NLB event carries {ev.payload_bits} classical bits")
        if ev.channel == Channel.CLASSICAL.value:
            if ev.phase != Phase.FINAL_EXCHANGE.value:
                violations.append(f"event {ev.seq}: classical message outside FINAL_EXCHANGE (in {ev.phase})")
            key = (ev.from_party, ev.to_party)
            if key not in bits:
                violations.append(f"event {ev.seq}: classical message with parties {key}")
            else:
                classical[key] += 1
                bits[key] += ev.payload_bits

    for key in (("A", "B"), ("B", "A")):
        if classical[key] != 1:
            violations.append(
                f"expected exactly one classical {key[0]}->{key[1]} message, found {classical[key]}"
            )

    return AuditResult(
        passed=not violations,
        violations=violations,
        events_by_channel=by_channel,
        events_by_phase=by_phase,
        classical_bits_ab=bits[("A", "B")],
        classical_bits_ba=bits[("B", "A")],
    )


@dataclass
class ResourcePool:
    epr_slots: list[EprSlot]
    nlbs: list[NlbInstance]

    def _slot(self, kind: str, index: int) -> EprSlot:
        for slot in self.epr_slots:
            if slot.purpose.kind == kind and slot.purpose.index == index:
                return slot
        raise ResourceError(f"no EPR slot for {kind} {index}")

    def input_slot(self, wire: int) -> EprSlot:
        return self._slot("input_teleport", wire)

    def gadget_slot(self, gate_index: int) -> EprSlot:
        return self._slot("t_gadget", gate_index)

    def output_slot(self, wire: int) -> EprSlot:
        return self._slot("output_teleport", wire)

    def nlb_for(self, gate_index: int) -> NlbInstance:
        for nlb in self.nlbs:
            if nlb.purpose == gate_index:
                return nlb
        raise ResourceError(f"no NLB instance for gate {gate_index}")

    @property
    def epr_consumed(self) -> int:
        return sum(1 for s in self.epr_slots if s.consumed)

    @property
    def nlb_consumed(self) -> int:
        return sum(1 for n in self.nlbs if n.fully_queried)


def allocate_resources(circuit: Circuit) -> tuple[ResourcePool, Register]:
    """Build the run's register (wire qubits in wire order) and its resource
    pool (EPR slots and NLBs in canonical order). Pair amplitudes tensor in
    lazily; allocation itself fixes ids and purposes."""
    reg = Register()
    for init in circuit.initial_states:
        reg.alloc(*init.amplitudes)

    slots: list[EprSlot] = []

    def add_slot(kind: str, index: int) -> None:
        h_alice, h_bob = reg.alloc_epr()
        slots.append(EprSlot(len(slots), EprPurpose(kind, index), h_alice, h_bob))

    for wire in circuit.bob_input_wires:
        add_slot("input_teleport", wire)
    for gate_index in circuit.t_gate_indices:
        add_slot("t_gadget", gate_index)
    for wire in circuit.quantum_output_wires("B"):
        add_slot("output_teleport", wire)

    nlbs = [NlbInstance(i, gate_index) for i, gate_index in enumerate(circuit.t_gate_indices)]
    return ResourcePool(slots, nlbs), reg
