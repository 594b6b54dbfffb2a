"""Circuit file format: parsing, validation, pretty-printing, estimates.

Line-oriented UTF-8 text, '#' starts a comment:

    wires <n>
    owner <wire> <A|B>
    out <wire> <A|B|none> [quantum|classical]
    init <wire> <zero|one|plus|minus|i|-i>
    init <wire> amp <re0> <im0> <re1> <im1>
    <GATE> <wire> [<wire2>]

Gates are X, Z, P, H, CNOT, T (R is accepted as an alias for T). Every wire
needs an ``owner`` line; ``out`` defaults to none (discarded) and ``init``
to zero. A classical output is measured exactly once, at the very end, by
the protocol; the file format itself has no measurement statements.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from math import sqrt

_R = 1 / sqrt(2)

INIT_LABELS: dict[str, tuple[complex, complex]] = {
    "zero": (1 + 0j, 0j),
    "one": (0j, 1 + 0j),
    "plus": (_R + 0j, _R + 0j),
    "minus": (_R + 0j, -_R + 0j),
    "i": (_R + 0j, _R * 1j),
    "-i": (_R + 0j, -_R * 1j),
}

GATE_ARITY = {"X": 1, "Z": 1, "P": 1, "H": 1, "T": 1, "CNOT": 2}


class CircuitParseError(ValueError):
    """Parse or validation failure; carries the 1-based line number
    (0 for file-level problems)."""

    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}" if line_no else message)


@dataclass(frozen=True)
class WireInit:
    """Initial single-qubit state: a named label or an explicit pair."""

    label: str | None
    amplitudes: tuple[complex, complex]

    @classmethod
    def from_label(cls, label: str) -> "WireInit":
        return cls(label, INIT_LABELS[label])

    @classmethod
    def from_amplitudes(cls, a0: complex, a1: complex) -> "WireInit":
        return cls(None, (complex(a0), complex(a1)))


@dataclass(frozen=True)
class GateOp:
    kind: str
    wires: tuple[int, ...]


@dataclass(frozen=True)
class Circuit:
    num_wires: int
    input_owner: tuple[str, ...]
    output_owner: tuple[str | None, ...]
    output_kind: tuple[str | None, ...]
    gates: tuple[GateOp, ...]
    initial_states: tuple[WireInit, ...]

    @property
    def bob_input_wires(self) -> list[int]:
        return [w for w in range(self.num_wires) if self.input_owner[w] == "B"]

    @property
    def t_gate_indices(self) -> list[int]:
        return [i for i, g in enumerate(self.gates) if g.kind == "T"]

    @property
    def output_wires(self) -> list[int]:
        return [w for w in range(self.num_wires) if self.output_owner[w] is not None]

    def quantum_output_wires(self, owner: str | None = None) -> list[int]:
        return [
            w
            for w in self.output_wires
            if self.output_kind[w] == "quantum"
            and (owner is None or self.output_owner[w] == owner)
        ]

    def classical_output_wires(self, owner: str | None = None) -> list[int]:
        return [
            w
            for w in self.output_wires
            if self.output_kind[w] == "classical"
            and (owner is None or self.output_owner[w] == owner)
        ]

    @property
    def discarded_wires(self) -> list[int]:
        return [w for w in range(self.num_wires) if self.output_owner[w] is None]


@dataclass(frozen=True)
class ResourceEstimate:
    epr: int
    nlb: int
    classical_bits_ab: int
    classical_bits_ba: int


def _parse_wire(token: str, num_wires: int, line_no: int) -> int:
    try:
        wire = int(token)
    except ValueError:
        raise CircuitParseError(line_no, f"expected a wire index, got {token!r}") from None
    if not 0 <= wire < num_wires:
        raise CircuitParseError(line_no, f"wire {wire} out of range (wires {num_wires})")
    return wire


def parse_circuit(text: str) -> Circuit:
    """Parse circuit text; raises CircuitParseError with a line number."""
    num_wires: int | None = None
    owners: dict[int, str] = {}
    outs: dict[int, tuple[str | None, str | None]] = {}
    inits: dict[int, WireInit] = {}
    gates: list[GateOp] = []

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head, args = tokens[0], tokens[1:]

        if head == "wires":
            if num_wires is not None:
                raise CircuitParseError(line_no, "duplicate wires declaration")
            if len(args) != 1 or not args[0].isdigit() or int(args[0]) < 1:
                raise CircuitParseError(line_no, "wires takes one positive integer")
            num_wires = int(args[0])
            continue
        if num_wires is None:
            raise CircuitParseError(line_no, "wires declaration must come first")

        if head == "owner":
            if len(args) != 2:
                raise CircuitParseError(line_no, "owner takes <wire> <A|B>")
            wire = _parse_wire(args[0], num_wires, line_no)
            if args[1] not in ("A", "B"):
                raise CircuitParseError(line_no, f"owner must be A or B, got {args[1]!r}")
            if wire in owners:
                raise CircuitParseError(line_no, f"duplicate owner declaration for wire {wire}")
            owners[wire] = args[1]
        elif head == "out":
            if len(args) < 2:
                raise CircuitParseError(line_no, "out takes <wire> <A|B|none> [quantum|classical]")
            wire = _parse_wire(args[0], num_wires, line_no)
            if wire in outs:
                raise CircuitParseError(line_no, f"duplicate out declaration for wire {wire}")
            if args[1] == "none":
                if len(args) != 2:
                    raise CircuitParseError(line_no, "out ... none takes no output kind")
                outs[wire] = (None, None)
            elif args[1] in ("A", "B"):
                kind = "quantum"
                if len(args) == 3:
                    kind = args[2]
                    if kind not in ("quantum", "classical"):
                        raise CircuitParseError(
                            line_no, f"output kind must be quantum or classical, got {kind!r}"
                        )
                elif len(args) != 2:
                    raise CircuitParseError(line_no, "out takes <wire> <A|B|none> [quantum|classical]")
                outs[wire] = (args[1], kind)
            else:
                raise CircuitParseError(line_no, f"output owner must be A, B or none, got {args[1]!r}")
        elif head == "init":
            if len(args) < 2:
                raise CircuitParseError(line_no, "init takes <wire> <label|amp re0 im0 re1 im1>")
            wire = _parse_wire(args[0], num_wires, line_no)
            if wire in inits:
                raise CircuitParseError(line_no, f"duplicate init declaration for wire {wire}")
            if args[1] == "amp":
                if len(args) != 6:
                    raise CircuitParseError(line_no, "init ... amp takes four real numbers")
                try:
                    re0, im0, re1, im1 = (float(v) for v in args[2:6])
                except ValueError:
                    raise CircuitParseError(line_no, "init ... amp takes four real numbers") from None
                a0, a1 = complex(re0, im0), complex(re1, im1)
                if abs(abs(a0) ** 2 + abs(a1) ** 2 - 1.0) > 1e-9:
                    raise CircuitParseError(line_no, "initial amplitudes are not normalized")
                inits[wire] = WireInit.from_amplitudes(a0, a1)
            elif args[1] in INIT_LABELS:
                if len(args) != 2:
                    raise CircuitParseError(line_no, "init with a label takes no extra arguments")
                inits[wire] = WireInit.from_label(args[1])
            else:
                raise CircuitParseError(line_no, f"unknown initial state {args[1]!r}")
        else:
            kind = "T" if head == "R" else head
            if kind not in GATE_ARITY:
                raise CircuitParseError(line_no, f"unknown gate name {head!r}")
            if len(args) != GATE_ARITY[kind]:
                raise CircuitParseError(
                    line_no, f"{head} takes {GATE_ARITY[kind]} wire(s), got {len(args)}"
                )
            wires = tuple(_parse_wire(a, num_wires, line_no) for a in args)
            if kind == "CNOT" and wires[0] == wires[1]:
                raise CircuitParseError(line_no, "CNOT targets must be distinct")
            gates.append(GateOp(kind, wires))

    if num_wires is None:
        raise CircuitParseError(0, "missing wires declaration")
    missing = [w for w in range(num_wires) if w not in owners]
    if missing:
        raise CircuitParseError(0, f"missing ownership declaration for wire {missing[0]}")

    return Circuit(
        num_wires=num_wires,
        input_owner=tuple(owners[w] for w in range(num_wires)),
        output_owner=tuple(outs.get(w, (None, None))[0] for w in range(num_wires)),
        output_kind=tuple(outs.get(w, (None, None))[1] for w in range(num_wires)),
        gates=tuple(gates),
        initial_states=tuple(inits.get(w, WireInit.from_label("zero")) for w in range(num_wires)),
    )


def format_circuit(circuit: Circuit) -> str:
    """Canonical text form; parse(format(c)) reproduces c exactly."""
    lines = [f"wires {circuit.num_wires}"]
    for w in range(circuit.num_wires):
        lines.append(f"owner {w} {circuit.input_owner[w]}")
    for w in range(circuit.num_wires):
        owner = circuit.output_owner[w]
        if owner is None:
            lines.append(f"out {w} none")
        else:
            lines.append(f"out {w} {owner} {circuit.output_kind[w]}")
    for w in range(circuit.num_wires):
        init = circuit.initial_states[w]
        if init.label is not None:
            lines.append(f"init {w} {init.label}")
        else:
            a0, a1 = init.amplitudes
            lines.append(f"init {w} amp {a0.real!r} {a0.imag!r} {a1.real!r} {a1.imag!r}")
    for gate in circuit.gates:
        lines.append(" ".join([gate.kind] + [str(w) for w in gate.wires]))
    return "\n".join(lines) + "\n"


def circuit_sha256(circuit: Circuit) -> str:
    return hashlib.sha256(format_circuit(circuit).encode()).hexdigest()


def estimate_resources(circuit: Circuit) -> ResourceEstimate:
    """Nonlocal-resource and classical-bit counts for a protocol run.

    EPR pairs: one per Bob input wire, per T gate, per Bob quantum output
    wire (classical outputs are measured on Alice's side, not teleported).
    NLBs: one per T gate. Classical bits owed in the final round: 2 per
    quantum output wire of the other party, 1 per classical one.
    """
    epr = (
        len(circuit.bob_input_wires)
        + len(circuit.t_gate_indices)
        + len(circuit.quantum_output_wires("B"))
    )
    bits_ab = 2 * len(circuit.quantum_output_wires("B")) + len(circuit.classical_output_wires("B"))
    bits_ba = 2 * len(circuit.quantum_output_wires("A")) + len(circuit.classical_output_wires("A"))
    return ResourceEstimate(
        epr=epr,
        nlb=len(circuit.t_gate_indices),
        classical_bits_ab=bits_ab,
        classical_bits_ba=bits_ba,
    )
