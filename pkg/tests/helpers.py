"""Independent matrix oracles for checking the simulator and key rules.

Everything is rebuilt from the gate definitions with plain numpy so the
package under test never verifies itself.
"""
import numpy as np

SQ = 1 / np.sqrt(2)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
P = np.array([[1, 0], [0, 1j]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) * SQ
T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex)
I2 = np.eye(2, dtype=complex)

ONE_QUBIT = {"X": X, "Z": Z, "P": P, "H": H, "T": T}

PLUS = np.array([SQ, SQ], dtype=complex)
MINUS = np.array([SQ, -SQ], dtype=complex)


def mpow(m: np.ndarray, k: int) -> np.ndarray:
    return np.linalg.matrix_power(m, k)


def pad(x: int, z: int) -> np.ndarray:
    """One-time-pad operator X^x Z^z."""
    return mpow(X, x) @ mpow(Z, z)


def op_on(n: int, u: np.ndarray, qubit: int) -> np.ndarray:
    """Embed a single-qubit operator at bit position ``qubit`` (little-endian):
    the result is ops[n-1] (x) ... (x) ops[0] with u at position ``qubit``."""
    ops = [I2] * n
    ops[qubit] = u
    full = ops[n - 1]
    for q in range(n - 2, -1, -1):
        full = np.kron(full, ops[q])
    return full


def cnot_on(n: int, control: int, target: int) -> np.ndarray:
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        j = i ^ ((((i >> control) & 1)) << target)
        m[j, i] = 1.0
    return m


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    """Elementwise equality after removing one global phase."""
    a, b = np.asarray(a).reshape(-1), np.asarray(b).reshape(-1)
    if a.shape != b.shape:
        return False
    k = int(np.argmax(np.abs(b)))
    if abs(b[k]) < tol:
        return bool(np.max(np.abs(a)) < tol)
    phase = a[k] / b[k]
    if abs(abs(phase) - 1.0) > tol:
        return False
    return bool(np.max(np.abs(a - phase * b)) <= tol)


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return v / np.linalg.norm(v)
