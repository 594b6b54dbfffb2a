"""Two-party instantaneous nonlocal quantum computation engine.

Circuits are evaluated on quantum-one-time-pad-encrypted data with the
(x, z) key bits split between Alice and Bob. Pre-shared EPR pairs carry
inputs, outputs, and the per-T-gate gadget; Popescu-Rohrlich boxes
re-linearize the gadget's cross term; the only classical communication is
one simultaneous key exchange at the end. Every run is verified against a
direct-evaluation oracle and audited for resource counts and communication
discipline.
"""
from .circuit import (
    Circuit,
    CircuitParseError,
    GateOp,
    ResourceEstimate,
    WireInit,
    circuit_sha256,
    estimate_resources,
    format_circuit,
    parse_circuit,
)
from .pauli_frame import (
    KeyShare,
    KeyTable,
    KeyTrackingError,
    apply_t_update,
    clifford_update,
    decrypt_key,
    teleport_update,
)
from .protocol import (
    OracleResult,
    OutputReport,
    PartyState,
    ProtocolError,
    ProtocolRun,
    RunReport,
    oracle_evaluate,
    run_protocol,
    run_single_output_variant,
)
from .qsim import (
    BellOutcome,
    Gate,
    MeasurementOutcome,
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
from .resources import (
    AuditResult,
    Channel,
    CommEvent,
    CommLedger,
    EprPurpose,
    EprSlot,
    NlbInstance,
    Phase,
    ResourceError,
    ResourcePool,
    allocate_resources,
    ledger_audit,
    ledger_record,
    nlb_invoke,
)

__version__ = "0.1.0"
