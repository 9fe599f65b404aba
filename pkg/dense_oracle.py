"""
Brute-force dense-matrix reference for small chains (2n <= 12).

Everything here builds full 2^(2n) x 2^(2n) operators with Kronecker products,
so it shares no kernel code with statevector_core and can serve as an oracle.
"""
# Standard library imports
import math
from typing import Sequence

# Third-party library imports
import numpy as np

# Local imports
from circuits import EVEN, ODD, ChargeGate, CircuitSpec, cut_bond, sublayer_bonds
from errors import InvalidArgumentError

MAX_DENSE_SPINS = 12

# Reorders a two-spin matrix from |s_i s_i+1> to the Kronecker order |s_i+1 s_i>.
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128)


def _check_size(num_spins: int):
    if num_spins > MAX_DENSE_SPINS:
        raise InvalidArgumentError(f"Dense oracle is limited to {MAX_DENSE_SPINS} spins, got {num_spins}")


def embed_gate(gate_matrix: np.ndarray, num_spins: int, left_site: int) -> np.ndarray:
    """I (higher spins) x gate on (left_site, left_site+1) x I (lower spins)"""
    _check_size(num_spins)
    high = np.eye(1 << (num_spins - left_site - 1), dtype=np.complex128)
    low = np.eye(1 << (left_site - 1), dtype=np.complex128)
    return np.kron(np.kron(high, _SWAP @ gate_matrix @ _SWAP), low)


def _layer_factors(spec: CircuitSpec, t: int, modified: bool):
    size = 1 << spec.num_spins
    for parity in (ODD, EVEN):
        for bond in sublayer_bonds(spec.num_spins, parity):
            gate = spec.gate(t, bond)
            if modified and bond == cut_bond(spec):
                yield gate.phase0 * np.eye(size, dtype=np.complex128)
            else:
                yield embed_gate(gate.matrix(), spec.num_spins, bond)


def dense_layer(spec: CircuitSpec, t: int, modified: bool = False) -> np.ndarray:
    layer = np.eye(1 << spec.num_spins, dtype=np.complex128)
    for factor in _layer_factors(spec, t, modified):
        layer = factor @ layer
    return layer


def dense_circuit(spec: CircuitSpec, t_to: int, modified: bool = False) -> np.ndarray:
    """U(t_to, 0) (or V(t_to, 0)) as a dense matrix"""
    total = np.eye(1 << spec.num_spins, dtype=np.complex128)
    for t in range(1, t_to + 1):
        total = dense_layer(spec, t, modified) @ total
    return total


def dense_evolve(spec: CircuitSpec, amplitudes: np.ndarray, t_to: int, modified: bool = False) -> np.ndarray:
    """U(t_to, 0) applied to a vector one embedded gate at a time"""
    result = np.array(amplitudes, dtype=np.complex128)
    for t in range(1, t_to + 1):
        for factor in _layer_factors(spec, t, modified):
            result = factor @ result
    return result


def product_state(kets: Sequence[np.ndarray]) -> np.ndarray:
    """kets[i-1] is the state of spin i"""
    state = np.ones(1, dtype=np.complex128)
    for ket in kets:
        state = np.kron(ket, state)
    return state


def reduced_density_matrix(amplitudes: np.ndarray, cut: int) -> np.ndarray:
    """rho_A for A = spins 1..cut"""
    num_spins = int(amplitudes.size).bit_length() - 1
    matrix = amplitudes.reshape(1 << (num_spins - cut), 1 << cut)
    return matrix.T @ matrix.conj()


def density_eigenvalues(amplitudes: np.ndarray, cut: int) -> np.ndarray:
    """Descending eigenvalues of rho_A"""
    return np.sort(np.clip(np.linalg.eigvalsh(reduced_density_matrix(amplitudes, cut)), 0.0, None))[::-1]


def dense_renyi(eigenvalues: np.ndarray, alpha: float) -> float:
    if alpha == math.inf:
        return -math.log(eigenvalues[0])
    if alpha == 1:
        positive = eigenvalues[eigenvalues > 1e-300]
        return float(-np.sum(positive * np.log(positive)))
    return math.log(float(np.sum(eigenvalues ** alpha))) / (1.0 - alpha)


def is_charge_conserving(matrix: np.ndarray, num_spins: int, tolerance: float = 1e-12) -> bool:
    """The operator commutes with the total sigma_z"""
    index = np.arange(1 << num_spins)
    total_z = np.array([num_spins - 2 * bin(i).count("1") for i in index], dtype=np.float64)
    commutator = matrix * total_z[None, :] - total_z[:, None] * matrix
    return float(np.max(np.abs(commutator))) <= tolerance


def gate_from_matrix(matrix: np.ndarray) -> ChargeGate:
    """ChargeGate view of a block-structured 4x4 matrix"""
    return ChargeGate(complex(matrix[0, 0]), matrix[1:3, 1:3].copy(), complex(matrix[3, 3])).validate()
