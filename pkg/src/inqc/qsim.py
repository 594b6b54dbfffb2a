"""Dense statevector simulation for the engine's six-gate set.

Gate set: X, Z, P (phase), H, CNOT, T (pi/8); all measurement is in the
computational basis. Qubit k is the k-th least significant bit of the
amplitude index. Measuring a qubit keeps it in the register but flags it
consumed; any later operation on it is an error.

``Register`` layers stable qubit handles on top of ``StateVector``: measured
qubits are dropped from the dense amplitudes (their axis is a definite basis
state) and EPR pairs are tensored in on first touch, so a protocol run stays
small no matter how many pre-shared pairs were allocated. Handles never
renumber.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

NORM_TOL = 1e-12
PHASE_TOL = 1e-9

_SQRT2_INV = 1 / sqrt(2)

GATE_KINDS = ("X", "Z", "P", "H", "CNOT", "T")

GATE_1Q = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "P": np.array([[1, 0], [0, 1j]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT2_INV,
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
}


class SimulationError(ValueError):
    """Invalid gate target, consumed qubit, or malformed state."""


class ZeroProbabilityError(SimulationError):
    """A measurement was forced onto a branch of (near-)zero probability."""


@dataclass(frozen=True)
class Gate:
    """One gate application; ``targets`` are qubit indices (or wire ids when
    used for key tracking)."""

    kind: str
    targets: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise SimulationError(f"unknown gate kind {self.kind!r}")
        arity = 2 if self.kind == "CNOT" else 1
        if len(self.targets) != arity:
            raise SimulationError(
                f"{self.kind} takes {arity} target(s), got {len(self.targets)}"
            )
        if self.kind == "CNOT" and self.targets[0] == self.targets[1]:
            raise SimulationError("CNOT targets must be distinct")


@dataclass(frozen=True)
class MeasurementOutcome:
    bit: int
    probability: float
    forced: bool


@dataclass(frozen=True)
class BellOutcome:
    """Bell measurement result; receiver holds X^m_x Z^m_z (input)."""

    m_x: int
    m_z: int
    probability: float


@dataclass
class StateVector:
    """Pure state of ``num_qubits`` qubits; unit-norm amplitudes of length
    2**num_qubits. ``consumed`` maps measured qubits to their outcome bit."""

    num_qubits: int
    amplitudes: np.ndarray
    consumed: dict[int, int] = field(default_factory=dict)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def zero_state(num_qubits: int) -> StateVector:
    """All-|0> state on ``num_qubits`` qubits (0 gives the empty register)."""
    amps = np.zeros(1 << num_qubits, dtype=complex)
    amps[0] = 1.0
    return StateVector(num_qubits, amps)


def from_amplitudes(amplitudes) -> StateVector:
    amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
    n = int(amps.size).bit_length() - 1
    if amps.size != 1 << n:
        raise SimulationError(f"amplitude length {amps.size} is not a power of 2")
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > 1e-9:
        raise SimulationError("amplitudes are not normalized")
    return StateVector(n, amps / norm)


def product_state(qubit_amps) -> StateVector:
    """Tensor single-qubit states together; entry k becomes qubit k."""
    amps = np.ones(1, dtype=complex)
    for pair in qubit_amps:
        amps = np.kron(np.asarray(pair, dtype=complex), amps)
    return from_amplitudes(amps)


def _check_targets(state: StateVector, targets) -> None:
    for q in targets:
        if not 0 <= q < state.num_qubits:
            raise SimulationError(f"qubit {q} out of range for {state.num_qubits} qubits")
        if q in state.consumed:
            raise SimulationError(f"qubit {q} was already measured")


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Unitary image of ``state`` under ``gate``; norm is preserved."""
    _check_targets(state, gate.targets)
    amps = state.amplitudes
    if gate.kind == "CNOT":
        ctrl, targ = gate.targets
        idx = np.arange(amps.size)
        src = np.where((idx >> ctrl) & 1 == 1, idx ^ (1 << targ), idx)
        new = amps[src]
    else:
        k = gate.targets[0]
        view = amps.reshape(-1, 2, 1 << k)
        new = np.einsum("ab,ibj->iaj", GATE_1Q[gate.kind], view).reshape(-1)
    return StateVector(state.num_qubits, new, dict(state.consumed))


def measure_z(
    state: StateVector,
    qubit: int,
    forced: int | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[MeasurementOutcome, StateVector]:
    """Computational-basis measurement of one qubit.

    Unforced outcomes are sampled from ``rng`` with Born probabilities;
    forcing a branch whose probability is below NORM_TOL raises
    ZeroProbabilityError. The post-measurement state is renormalized and the
    qubit is flagged consumed.
    """
    _check_targets(state, (qubit,))
    view = state.amplitudes.reshape(-1, 2, 1 << qubit)
    p1 = min(max(float(np.sum(np.abs(view[:, 1, :]) ** 2)), 0.0), 1.0)
    if forced is not None:
        bit = int(forced)
        if bit not in (0, 1):
            raise SimulationError(f"forced outcome must be 0 or 1, got {forced!r}")
        prob = p1 if bit else 1.0 - p1
        if prob <= NORM_TOL:
            raise ZeroProbabilityError(
                f"forced outcome {bit} on qubit {qubit} has probability {prob:.3e}"
            )
    else:
        if rng is None:
            raise SimulationError("unforced measurement requires an rng")
        bit = 1 if rng.random() < p1 else 0
        prob = p1 if bit else 1.0 - p1
    post = view.copy()
    post[:, 1 - bit, :] = 0.0
    post = (post / sqrt(prob)).reshape(-1)
    consumed = dict(state.consumed)
    consumed[qubit] = bit
    outcome = MeasurementOutcome(bit=bit, probability=prob, forced=forced is not None)
    return outcome, StateVector(state.num_qubits, post, consumed)


def bell_measure(
    state: StateVector,
    q1: int,
    q2: int,
    forced: tuple[int, int] | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[tuple[int, int], StateVector]:
    """Project (q1, q2) onto the Bell basis; returns ((m_x, m_z), post state).

    Outcomes are labeled so that teleporting |psi> on q1 through an EPR pair
    whose sender half is q2 leaves the receiver half holding
    X^m_x Z^m_z |psi>; the correction Z^m_z X^m_x restores it exactly. Both
    measured qubits are flagged consumed. ``forced`` is (m_x, m_z).
    """
    forced_x, forced_z = forced if forced is not None else (None, None)
    rot = apply_gate(state, Gate("CNOT", (q1, q2)))
    rot = apply_gate(rot, Gate("H", (q1,)))
    out_z, rot = measure_z(rot, q1, forced=forced_z, rng=rng)
    out_x, rot = measure_z(rot, q2, forced=forced_x, rng=rng)
    return (out_x.bit, out_z.bit), rot


def make_epr(state: StateVector) -> tuple[StateVector, int, int]:
    """Append two qubits in (|00> + |11>)/sqrt(2); returns their indices."""
    pair = np.zeros(4, dtype=complex)
    pair[0] = pair[3] = _SQRT2_INV
    new = np.kron(pair, state.amplitudes)
    q1, q2 = state.num_qubits, state.num_qubits + 1
    return StateVector(state.num_qubits + 2, new, dict(state.consumed)), q1, q2


def append_qubit(state: StateVector, amp0: complex, amp1: complex) -> tuple[StateVector, int]:
    """Tensor one qubit (amp0|0> + amp1|1>) onto the top of the register."""
    pair = np.array([amp0, amp1], dtype=complex)
    norm = np.linalg.norm(pair)
    if abs(norm - 1.0) > 1e-9:
        raise SimulationError("appended qubit state is not normalized")
    new = np.kron(pair / norm, state.amplitudes)
    return StateVector(state.num_qubits + 1, new, dict(state.consumed)), state.num_qubits


def drop_qubit(state: StateVector, qubit: int) -> StateVector:
    """Remove a consumed qubit's axis; qubits above it shift down by one."""
    if qubit not in state.consumed:
        raise SimulationError(f"qubit {qubit} is not consumed; cannot drop")
    view = state.amplitudes.reshape(-1, 2, 1 << qubit)
    new = view[:, state.consumed[qubit], :].reshape(-1)
    consumed = {
        (q if q < qubit else q - 1): b
        for q, b in state.consumed.items()
        if q != qubit
    }
    return StateVector(state.num_qubits - 1, new, consumed)


def states_equal_up_to_phase(a: StateVector, b: StateVector, tol: float = PHASE_TOL) -> bool:
    """True iff |<a|b>| >= 1 - tol. Raises on dimension mismatch."""
    if a.num_qubits != b.num_qubits:
        raise SimulationError(
            f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits"
        )
    return abs(np.vdot(a.amplitudes, b.amplitudes)) >= 1.0 - tol


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 for unit vectors."""
    return float(abs(np.vdot(np.asarray(a), np.asarray(b))) ** 2)


def extract_substate(state: StateVector, qubits) -> np.ndarray:
    """Amplitudes over ``qubits`` (entry k -> bit k of the result index).

    Every other qubit must be consumed; their axes are fixed at the recorded
    outcome bits, so the result is the exact pure state of the live qubits.
    """
    qubits = list(qubits)
    live = [q for q in range(state.num_qubits) if q not in state.consumed]
    if sorted(qubits) != live:
        raise SimulationError(
            f"requested qubits {sorted(qubits)} do not match live qubits {live}"
        )
    tensor = state.amplitudes.reshape((2,) * state.num_qubits)
    index = [slice(None)] * state.num_qubits
    for q, bit in state.consumed.items():
        index[state.num_qubits - 1 - q] = bit
    tensor = tensor[tuple(index)]
    current = sorted(qubits, reverse=True)  # axis order after indexing
    perm = [current.index(q) for q in reversed(qubits)]
    return np.transpose(tensor, perm).reshape(-1).copy()


class Register:
    """Stable-handle wrapper around a StateVector.

    ``alloc`` tensors a qubit in immediately; ``alloc_epr`` records a latent
    EPR pair that is materialized on first touch (a fresh pair is in a
    product state with everything else, so deferral is unobservable).
    Measured handles leave the dense state but keep their recorded bit.
    """

    def __init__(self):
        self.sv = zero_state(0)
        self._axis: dict[int, int] = {}
        self._latent: dict[int, int] = {}  # handle -> partner handle
        self._bits: dict[int, int] = {}
        self._next = 0

    def alloc(self, amp0: complex, amp1: complex) -> int:
        self.sv, _ = append_qubit(self.sv, amp0, amp1)
        handle = self._next
        self._next += 1
        self._axis[handle] = self.sv.num_qubits - 1
        return handle

    def alloc_epr(self) -> tuple[int, int]:
        h1, h2 = self._next, self._next + 1
        self._next += 2
        self._latent[h1] = h2
        self._latent[h2] = h1
        return h1, h2

    @property
    def live_handles(self) -> set[int]:
        return set(self._axis) | set(self._latent)

    def bit(self, handle: int) -> int:
        """Recorded outcome of a measured handle."""
        return self._bits[handle]

    def _materialize(self, handle: int) -> None:
        partner = self._latent.pop(handle, None)
        if partner is None:
            return
        del self._latent[partner]
        self.sv, q1, q2 = make_epr(self.sv)
        self._axis[handle], self._axis[partner] = q1, q2

    def _ax(self, handle: int) -> int:
        if handle in self._latent:
            self._materialize(handle)
        if handle not in self._axis:
            if handle in self._bits:
                raise SimulationError(f"qubit handle {handle} was already measured")
            raise SimulationError(f"unknown qubit handle {handle}")
        return self._axis[handle]

    def _drop(self, handle: int, outcome_bit: int) -> None:
        axis = self._axis.pop(handle)
        self.sv = drop_qubit(self.sv, axis)
        self._bits[handle] = outcome_bit
        for h, a in self._axis.items():
            if a > axis:
                self._axis[h] = a - 1

    def apply(self, kind: str, *handles: int) -> None:
        axes = tuple(self._ax(h) for h in handles)
        self.sv = apply_gate(self.sv, Gate(kind, axes))

    def measure(
        self,
        handle: int,
        forced: int | None = None,
        rng: np.random.Generator | None = None,
    ) -> MeasurementOutcome:
        axis = self._ax(handle)
        outcome, self.sv = measure_z(self.sv, axis, forced=forced, rng=rng)
        self._drop(handle, outcome.bit)
        return outcome

    def bell(
        self,
        h1: int,
        h2: int,
        forced_x: int | None = None,
        forced_z: int | None = None,
        rng: np.random.Generator | None = None,
    ) -> BellOutcome:
        """Bell-measure two handles; same labeling as ``bell_measure``."""
        a1, a2 = self._ax(h1), self._ax(h2)
        self.sv = apply_gate(self.sv, Gate("CNOT", (a1, a2)))
        self.sv = apply_gate(self.sv, Gate("H", (a1,)))
        out_z, self.sv = measure_z(self.sv, a1, forced=forced_z, rng=rng)
        out_x, self.sv = measure_z(self.sv, a2, forced=forced_x, rng=rng)
        self._drop(h1, out_z.bit)
        self._drop(h2, out_x.bit)
        return BellOutcome(
            m_x=out_x.bit,
            m_z=out_z.bit,
            probability=out_z.probability * out_x.probability,
        )

    def statevector(self, handles) -> np.ndarray:
        """Dense state over ``handles`` in the given little-endian order; all
        live handles must be listed exactly once."""
        handles = list(handles)
        for h in handles:
            if h in self._latent:
                self._materialize(h)
        if set(handles) != set(self._axis) or len(handles) != len(self._axis):
            raise SimulationError("statevector() must list every live handle exactly once")
        if self._latent:
            raise SimulationError("latent EPR handles not covered by statevector()")
        tensor = self.sv.amplitudes.reshape((2,) * self.sv.num_qubits)
        n = self.sv.num_qubits
        # axis i of the tensor is qubit n-1-i; permute to the requested order
        perm = [n - 1 - self._axis[h] for h in reversed(handles)]
        return np.transpose(tensor, perm).reshape(-1).copy()
