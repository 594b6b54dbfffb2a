"""Distributed quantum-one-time-pad key tracking.

Each wire carries four key bits, an (x, z) share per party; the pad on wire
i is X^(xA^xB) Z^(zA^zB), so XORing the shares decrypts. Clifford gates
rewrite the shares locally (the same XOR-linear rule applied to each party's
bits independently); teleportation folds the sender's Bell outcome into the
sender's share; the T gate has its own four-assignment rule whose nonlinear
cross term arrives through the nonlocal-box outputs.
"""
from __future__ import annotations

from dataclasses import dataclass

from .qsim import Gate

PARTIES = ("A", "B")


class KeyTrackingError(ValueError):
    """Unknown wire/party or a gate routed to the wrong update rule."""


@dataclass(frozen=True)
class KeyShare:
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.x not in (0, 1) or self.z not in (0, 1):
            raise KeyTrackingError(f"key bits must be 0/1, got ({self.x}, {self.z})")


@dataclass(frozen=True)
class KeyTable:
    """Immutable map (party, wire) -> KeyShare; updates return new tables."""

    shares: dict[tuple[str, int], KeyShare]

    @classmethod
    def fresh(cls, wires) -> "KeyTable":
        return cls({(p, w): KeyShare() for w in wires for p in PARTIES})

    def wires(self) -> list[int]:
        return sorted({w for _, w in self.shares})

    def share(self, party: str, wire: int) -> KeyShare:
        if party not in PARTIES:
            raise KeyTrackingError(f"unknown party {party!r}")
        try:
            return self.shares[(party, wire)]
        except KeyError:
            raise KeyTrackingError(f"wire {wire} is not tracked") from None

    def _with(self, updates: dict[tuple[str, int], KeyShare]) -> "KeyTable":
        merged = dict(self.shares)
        merged.update(updates)
        return KeyTable(merged)


def clifford_update(table: KeyTable, gate: Gate) -> KeyTable:
    """Key rewrite for one Clifford gate, applied to each party's shares
    independently (gate targets are wire ids).

    X, Z: unchanged. H: swap x and z. P: z ^= x.
    CNOT control i target j: x_j ^= x_i and z_i ^= z_j.
    """
    if gate.kind == "T":
        raise KeyTrackingError("T is not Clifford; use apply_t_update")
    if gate.kind in ("X", "Z"):
        for wire in gate.targets:
            table.share("A", wire)  # wire liveness check only
        return table
    updates: dict[tuple[str, int], KeyShare] = {}
    for party in PARTIES:
        if gate.kind == "H":
            (wire,) = gate.targets
            s = table.share(party, wire)
            updates[(party, wire)] = KeyShare(x=s.z, z=s.x)
        elif gate.kind == "P":
            (wire,) = gate.targets
            s = table.share(party, wire)
            updates[(party, wire)] = KeyShare(x=s.x, z=s.z ^ s.x)
        elif gate.kind == "CNOT":
            ci, tj = gate.targets
            sc, st = table.share(party, ci), table.share(party, tj)
            updates[(party, ci)] = KeyShare(x=sc.x, z=sc.z ^ st.z)
            updates[(party, tj)] = KeyShare(x=st.x ^ sc.x, z=st.z)
        else:  # pragma: no cover - Gate() already rejects unknown kinds
            raise KeyTrackingError(f"no key rule for gate {gate.kind!r}")
    return table._with(updates)


def teleport_update(table: KeyTable, party: str, wire: int, m_x: int, m_z: int) -> KeyTable:
    """Fold the sender's Bell outcome into the sender's own share."""
    s = table.share(party, wire)
    return table._with({(party, wire): KeyShare(x=s.x ^ m_x, z=s.z ^ m_z)})


def apply_t_update(
    table: KeyTable, wire: int, c: int, d: int, nlb_a: int, nlb_b: int
) -> KeyTable:
    """Key rewrite after the T gadget on ``wire``.

    With pre-update shares on the right-hand sides:
      xA' = xA ^ c          zA' = nlb_a ^ xA ^ zA ^ (xA & c)
      xB' = xB              zB' = nlb_b ^ xB ^ zB ^ d
    where nlb_a ^ nlb_b = (xA ^ c) & xB carries the cross term.
    """
    a = table.share("A", wire)
    b = table.share("B", wire)
    return table._with(
        {
            ("A", wire): KeyShare(x=a.x ^ c, z=nlb_a ^ a.x ^ a.z ^ (a.x & c)),
            ("B", wire): KeyShare(x=b.x, z=nlb_b ^ b.x ^ b.z ^ d),
        }
    )


def decrypt_key(table: KeyTable, wire: int) -> tuple[int, int]:
    """Global pad bits for ``wire``: the XOR of the two parties' shares."""
    a = table.share("A", wire)
    b = table.share("B", wire)
    return a.x ^ b.x, a.z ^ b.z
