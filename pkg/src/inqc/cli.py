"""Command-line front end.

Subcommands:
  run       execute the protocol on a circuit file, verify against the oracle
  verify    exhaustive forced-branch verification of one circuit (falls back
            to sampled trials when the branch space is too large)
  estimate  print resource requirements without running
  sweep     run seeded random circuits and aggregate pass/fail

Exit codes: 0 success, 1 verification failure, 2 usage/parse error. The
INQC_SEED environment variable supplies the default --seed.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .circuit import (
    Circuit,
    CircuitParseError,
    GateOp,
    INIT_LABELS,
    WireInit,
    circuit_sha256,
    estimate_resources,
    parse_circuit,
)
from .protocol import RunReport, run_protocol
from .qsim import ZeroProbabilityError

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2

EXHAUSTIVE_BRANCH_BITS = 12  # verify enumerates branches up to 2**this many runs

_CLIFFORDS = ("X", "Z", "P", "H", "CNOT")
_INIT_CHOICES = tuple(INIT_LABELS)


@dataclass
class CliConfig:
    subcommand: str
    circuit_path: str | None = None
    seed: int = 0
    trials: int = 100
    forced_outcomes: list[int] | None = None
    json_output: bool = False
    tolerance: float = 1e-9
    max_wires: int = 6
    max_gates: int = 40

    def validate(self) -> None:
        if self.trials < 1:
            raise ValueError("--trials must be >= 1")
        if not 0.0 < self.tolerance < 1.0:
            raise ValueError("--tolerance must be in (0, 1)")
        if self.seed < 0:
            raise ValueError("--seed must be >= 0")
        if self.max_wires < 2:
            raise ValueError("--max-wires must be >= 2")
        if self.max_gates < 1:
            raise ValueError("--max-gates must be >= 1")


def random_circuit(
    rng: np.random.Generator,
    max_wires: int = 6,
    max_gates: int = 40,
    t_fraction: float = 0.2,
    max_t: int = 10,
) -> Circuit:
    """Random circuit with uniform wire ownership, ~t_fraction T gates
    (capped at max_t), random output owners/kinds, and mixed initial states."""
    n = int(rng.integers(2, max_wires + 1))
    n_gates = int(rng.integers(min(10, max_gates), max_gates + 1))
    owners = tuple("A" if rng.random() < 0.5 else "B" for _ in range(n))

    out_owner: list[str | None] = []
    out_kind: list[str | None] = []
    for _ in range(n):
        r = rng.random()
        if r < 1 / 3:
            out_owner.append(None)
            out_kind.append(None)
        else:
            out_owner.append("A" if r < 2 / 3 else "B")
            out_kind.append("quantum" if rng.random() < 0.5 else "classical")
    if all(o is None for o in out_owner):
        out_owner[0], out_kind[0] = "A", "quantum"

    inits: list[WireInit] = []
    for _ in range(n):
        if rng.random() < 0.5:
            inits.append(WireInit.from_label(_INIT_CHOICES[int(rng.integers(len(_INIT_CHOICES)))]))
        else:
            v = rng.standard_normal(4)
            norm = float(np.sqrt(np.sum(v**2)))
            v = v / norm
            inits.append(WireInit.from_amplitudes(complex(v[0], v[1]), complex(v[2], v[3])))

    gates: list[GateOp] = []
    t_left = max_t
    for _ in range(n_gates):
        if t_left > 0 and rng.random() < t_fraction:
            gates.append(GateOp("T", (int(rng.integers(n)),)))
            t_left -= 1
        else:
            kind = _CLIFFORDS[int(rng.integers(len(_CLIFFORDS)))]
            if kind == "CNOT":
                ctrl = int(rng.integers(n))
                targ = int(rng.integers(n - 1))
                if targ >= ctrl:
                    targ += 1
                gates.append(GateOp(kind, (ctrl, targ)))
            else:
                gates.append(GateOp(kind, (int(rng.integers(n)),)))

    return Circuit(
        num_wires=n,
        input_owner=owners,
        output_owner=tuple(out_owner),
        output_kind=tuple(out_kind),
        gates=tuple(gates),
        initial_states=tuple(inits),
    )


def restrict_to_single_output(circuit: Circuit, wire: int = 0, kind: str = "quantum") -> Circuit:
    """Variant of ``circuit`` whose only output is ``wire``, owned by Alice."""
    owner = tuple("A" if w == wire else None for w in range(circuit.num_wires))
    kinds = tuple(kind if w == wire else None for w in range(circuit.num_wires))
    return Circuit(
        num_wires=circuit.num_wires,
        input_owner=circuit.input_owner,
        output_owner=owner,
        output_kind=kinds,
        gates=circuit.gates,
        initial_states=circuit.initial_states,
    )


def forced_branch_bits(circuit: Circuit) -> int:
    """Number of outcome bits one run consumes when fully forced."""
    return (
        2 * len(circuit.bob_input_wires)
        + 2 * len(circuit.t_gate_indices)
        + 2 * len(circuit.quantum_output_wires("B"))
        + len(circuit.classical_output_wires())
        + len(circuit.discarded_wires)
    )


def _default_seed() -> int:
    raw = os.environ.get("INQC_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"INQC_SEED must be an integer, got {raw!r}") from None


def _parse_bits(text: str) -> list[int]:
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"--force-outcomes must be a nonempty 0/1 string, got {text!r}")
    return [int(ch) for ch in text]


def _load_circuit(path: str) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return parse_circuit(fh.read())


def _print_run_summary(report: RunReport) -> None:
    print(f"circuit {report.circuit_hash[:12]} seed {report.seed}")
    print(
        f"resources: epr={report.epr_consumed}/{report.epr_allocated}"
        f" nlb={report.nlb_consumed}/{report.nlb_allocated}"
    )
    audit = report.audit
    print(
        f"ledger: audit {'PASS' if audit.passed else 'FAIL'}"
        f" (A->B {audit.classical_bits_ab} bits, B->A {audit.classical_bits_ba} bits)"
    )
    for v in audit.violations:
        print(f"  violation: {v}")
    for out in report.outputs:
        line = f"  wire {out.wire} {out.owner} {out.kind} fidelity={out.fidelity:.12f}"
        if out.bit is not None:
            line += f" bit={out.bit} p={out.probability:.6f}"
        print(line)
    print(f"min fidelity: {report.oracle_fidelity_min:.12f} (tolerance {report.tolerance:g})")
    print("PASS" if report.passed else "FAIL")


def cmd_run(config: CliConfig) -> int:
    circuit = _load_circuit(config.circuit_path)
    try:
        report = run_protocol(
            circuit,
            config.seed,
            forced_outcomes=config.forced_outcomes,
            tolerance=config.tolerance,
        )
    except ZeroProbabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    if config.json_output:
        print(report.to_json())
    else:
        _print_run_summary(report)
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_estimate(config: CliConfig) -> int:
    circuit = _load_circuit(config.circuit_path)
    est = estimate_resources(circuit)
    if config.json_output:
        print(
            json.dumps(
                {
                    "schema": 1,
                    "circuit_hash": circuit_sha256(circuit),
                    "epr": est.epr,
                    "nlb": est.nlb,
                    "classical_bits_ab": est.classical_bits_ab,
                    "classical_bits_ba": est.classical_bits_ba,
                },
                separators=(",", ":"),
            )
        )
    else:
        print(
            f"epr={est.epr} nlb={est.nlb}"
            f" bits_ab={est.classical_bits_ab} bits_ba={est.classical_bits_ba}"
        )
    return EXIT_OK


def cmd_verify(config: CliConfig) -> int:
    circuit = _load_circuit(config.circuit_path)
    bits = forced_branch_bits(circuit)
    reports: list[RunReport] = []
    if bits <= EXHAUSTIVE_BRANCH_BITS:
        mode = "exhaustive"
        total = 1 << bits
        probability_total = 0.0
        for branch in range(total):
            forced = [(branch >> i) & 1 for i in range(bits)]
            try:
                report = run_protocol(
                    circuit, config.seed, forced_outcomes=forced, tolerance=config.tolerance
                )
            except ZeroProbabilityError:
                continue
            probability_total += report.branch_probability
            reports.append(report)
        prob_ok = abs(probability_total - 1.0) <= 1e-6
    else:
        mode = "sampled"
        total = config.trials
        for t in range(config.trials):
            reports.append(
                run_protocol(circuit, config.seed + t, tolerance=config.tolerance)
            )
        probability_total = None
        prob_ok = True

    min_fid = min((r.oracle_fidelity_min for r in reports), default=0.0)
    audits_ok = all(r.audit.passed for r in reports)
    passed = bool(reports) and audits_ok and prob_ok and all(r.passed for r in reports)
    payload = {
        "schema": 1,
        "mode": mode,
        "circuit_hash": circuit_sha256(circuit),
        "branch_bits": bits,
        "runs_total": total,
        "runs_checked": len(reports),
        "probability_total": probability_total,
        "min_fidelity": min_fid,
        "audits_passed": audits_ok,
        "passed": passed,
    }
    if config.json_output:
        print(json.dumps(payload, separators=(",", ":")))
    else:
        print(
            f"verify {mode}: {len(reports)}/{total} branches checked,"
            f" min fidelity {min_fid:.12f}"
            + (f", total probability {probability_total:.9f}" if probability_total is not None else "")
        )
        print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_sweep(config: CliConfig) -> int:
    runs = []
    failures = []
    min_fid = 1.0
    for trial in range(config.trials):
        circuit = random_circuit(
            np.random.default_rng([config.seed, trial]),
            max_wires=config.max_wires,
            max_gates=config.max_gates,
        )
        run_seed = config.seed + 1000003 * (trial + 1)
        report = run_protocol(circuit, run_seed, tolerance=config.tolerance)
        est = estimate_resources(circuit)
        est_ok = (
            report.epr_consumed == est.epr
            and report.nlb_consumed == est.nlb
            and report.audit.classical_bits_ab == est.classical_bits_ab
            and report.audit.classical_bits_ba == est.classical_bits_ba
        )
        ok = report.passed and est_ok
        min_fid = min(min_fid, report.oracle_fidelity_min)
        if not ok:
            failures.append(trial)
        runs.append(
            {
                "trial": trial,
                "seed": run_seed,
                "circuit_hash": report.circuit_hash,
                "wires": circuit.num_wires,
                "gates": len(circuit.gates),
                "t_gates": len(circuit.t_gate_indices),
                "epr": report.epr_consumed,
                "nlb": report.nlb_consumed,
                "bits_ab": report.audit.classical_bits_ab,
                "bits_ba": report.audit.classical_bits_ba,
                "min_fidelity": report.oracle_fidelity_min,
                "audit_passed": report.audit.passed,
                "estimate_matched": est_ok,
                "passed": ok,
            }
        )
    payload = {
        "schema": 1,
        "trials": config.trials,
        "seed": config.seed,
        "max_wires": config.max_wires,
        "max_gates": config.max_gates,
        "min_fidelity": min_fid,
        "failures": failures,
        "all_passed": not failures,
        "runs": runs,
    }
    if config.json_output:
        print(json.dumps(payload, separators=(",", ":")))
    else:
        print(
            f"sweep: {config.trials} circuits, min fidelity {min_fid:.12f},"
            f" {len(failures)} failure(s)"
        )
        print("PASS" if not failures else f"FAIL: trials {failures}")
    return EXIT_OK if not failures else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inqc",
        description="Two-party instantaneous nonlocal quantum computation engine",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser, circuit: bool) -> None:
        if circuit:
            p.add_argument("--circuit", required=True, help="circuit file path")
        p.add_argument("--seed", type=int, default=None, help="rng seed (default: $INQC_SEED or 0)")
        p.add_argument("--json", action="store_true", dest="json_output", help="emit JSON")
        p.add_argument("--tolerance", type=float, default=1e-9, help="fidelity tolerance")

    p_run = sub.add_parser("run", help="run the protocol on a circuit file")
    common(p_run, circuit=True)
    p_run.add_argument(
        "--force-outcomes",
        default=None,
        help="bitstring forcing measurement outcomes in execution order",
    )

    p_verify = sub.add_parser("verify", help="verify a circuit across branches or trials")
    common(p_verify, circuit=True)
    p_verify.add_argument("--trials", type=int, default=100, help="sampled runs when not exhaustive")

    p_est = sub.add_parser("estimate", help="print resource requirements")
    p_est.add_argument("--circuit", required=True, help="circuit file path")
    p_est.add_argument("--json", action="store_true", dest="json_output", help="emit JSON")

    p_sweep = sub.add_parser("sweep", help="run random circuits against the oracle")
    common(p_sweep, circuit=False)
    p_sweep.add_argument("--trials", type=int, default=100, help="number of random circuits")
    p_sweep.add_argument("--max-wires", type=int, default=6, help="wire count upper bound")
    p_sweep.add_argument("--max-gates", type=int, default=40, help="gate count upper bound")
    return parser


def _config_from_args(args: argparse.Namespace) -> CliConfig:
    config = CliConfig(
        subcommand=args.subcommand,
        circuit_path=getattr(args, "circuit", None),
        seed=args.seed if getattr(args, "seed", None) is not None else _default_seed(),
        trials=getattr(args, "trials", 100),
        forced_outcomes=(
            _parse_bits(args.force_outcomes)
            if getattr(args, "force_outcomes", None) is not None
            else None
        ),
        json_output=getattr(args, "json_output", False),
        tolerance=getattr(args, "tolerance", 1e-9),
        max_wires=getattr(args, "max_wires", 6),
        max_gates=getattr(args, "max_gates", 40),
    )
    config.validate()
    return config


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    handlers = {
        "run": cmd_run,
        "verify": cmd_verify,
        "estimate": cmd_estimate,
        "sweep": cmd_sweep,
    }
    try:
        return handlers[config.subcommand](config)
    except CircuitParseError as exc:
        name = config.circuit_path or "<circuit>"
        print(f"{name}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
