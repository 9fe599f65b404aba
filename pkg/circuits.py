"""
Charge-conserving two-site gates and the brick-wall circuits built from them.

Layer t applies the odd-bond sub-layer U_t^{1,2} U_t^{3,4} ... first and the
even-bond sub-layer U_t^{2,3} U_t^{4,5} ... second. The modified circuit
V replaces the gate across the middle cut (bond n) by its <00|U|00> entry.
"""
# Standard library imports
from dataclasses import dataclass
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

# Third-party library imports
import numpy as np
import pandas as pd

# Local imports
from errors import InvalidArgumentError, UnsupportedConfigurationError
from result_files import read_round_trip_csv, write_round_trip_csv
from statevector_core import (
    Statevector,
    apply_global_phase,
    apply_two_site_gate,
    apply_two_site_gate_adjoint,
    check_num_spins,
)

logger = logging.getLogger(__name__)

# Parameters
UNITARITY_TOLERANCE = 1e-12
MAX_SEED = 2 ** 64
ODD = "odd"
EVEN = "even"

DUMP_COLUMNS = [
    "layer", "bond",
    "phase0_re", "phase0_im",
    "b00_re", "b00_im", "b01_re", "b01_im",
    "b10_re", "b10_im", "b11_re", "b11_im",
    "phase1_re", "phase1_im",
]


@dataclass(frozen=True, eq=False)
class ChargeGate:
    """
    Phase on |00>, 2x2 unitary block on span{|01>, |10>}, phase on |11>.

    Block rows/columns are ordered (|01>, |10>) where the first label is the
    left spin of the bond.
    """

    phase0: complex
    block: np.ndarray
    phase1: complex

    @classmethod
    def identity(cls) -> "ChargeGate":
        return cls(1.0 + 0.0j, np.eye(2, dtype=np.complex128), 1.0 + 0.0j)

    @classmethod
    def swap(cls) -> "ChargeGate":
        return cls(1.0 + 0.0j, np.array([[0, 1], [1, 0]], dtype=np.complex128), 1.0 + 0.0j)

    def matrix(self) -> np.ndarray:
        """4x4 matrix in the |00>, |01>, |10>, |11> basis"""
        full = np.zeros((4, 4), dtype=np.complex128)
        full[0, 0] = self.phase0
        full[1:3, 1:3] = self.block
        full[3, 3] = self.phase1
        return full

    def adjoint(self) -> "ChargeGate":
        return ChargeGate(np.conj(self.phase0), self.block.conj().T.copy(), np.conj(self.phase1))

    def validate(self, tolerance: float = UNITARITY_TOLERANCE) -> "ChargeGate":
        if self.block.shape != (2, 2):
            raise InvalidArgumentError(f"Gate block must be 2x2, got {self.block.shape}")
        for name, phase in (("phase0", self.phase0), ("phase1", self.phase1)):
            if abs(abs(phase) - 1.0) > tolerance:
                raise InvalidArgumentError(f"{name} is not unit modulus: |{name}| = {abs(phase)!r}")
        deviation = np.max(np.abs(self.block.conj().T @ self.block - np.eye(2)))
        if deviation > tolerance:
            raise InvalidArgumentError(f"Gate block is not unitary (deviation {deviation:.3e})")
        return self


def gate_stream(master_seed: int, layer: int, bond: int) -> np.random.Generator:
    """Counter-based stream keyed by (master_seed, layer, bond)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([master_seed, layer, bond])))


def sample_haar_gate(stream: np.random.Generator) -> ChargeGate:
    """Random phases and a Haar-random U(2) block"""
    phase0 = np.exp(2j * np.pi * stream.random())
    ginibre = (stream.standard_normal((2, 2)) + 1j * stream.standard_normal((2, 2))) / np.sqrt(2.0)
    q, r = np.linalg.qr(ginibre)
    diagonal = np.diagonal(r)
    # Fix the column phases so the distribution is exactly Haar.
    block = q * (diagonal / np.abs(diagonal))
    phase1 = np.exp(2j * np.pi * stream.random())
    return ChargeGate(complex(phase0), np.ascontiguousarray(block), complex(phase1))


@dataclass(frozen=True, eq=False)
class CircuitSpec:
    """All gates U_t^{b,b+1} for layers 1..depth, stored as read-only tables"""

    num_spins: int
    depth: int
    master_seed: Optional[int]
    kind: str
    phase0: np.ndarray
    blocks: np.ndarray
    phase1: np.ndarray

    @property
    def half(self) -> int:
        return self.num_spins // 2

    @property
    def num_bonds(self) -> int:
        return self.num_spins - 1

    def gate(self, t: int, bond: int) -> ChargeGate:
        self._check_layer(t)
        if not 1 <= bond <= self.num_bonds:
            raise InvalidArgumentError(f"Bond {bond} outside 1..{self.num_bonds}")
        return ChargeGate(complex(self.phase0[t - 1, bond - 1]),
                          self.blocks[t - 1, bond - 1],
                          complex(self.phase1[t - 1, bond - 1]))

    def _check_layer(self, t: int):
        if not 1 <= t <= self.depth:
            raise InvalidArgumentError(f"Layer {t} outside 1..{self.depth}")

    def same_gates(self, other: "CircuitSpec") -> bool:
        return (self.num_spins == other.num_spins and self.depth == other.depth
                and np.array_equal(self.phase0, other.phase0)
                and np.array_equal(self.blocks, other.blocks)
                and np.array_equal(self.phase1, other.phase1))

    def with_gates(self, overrides: Dict[Tuple[int, int], ChargeGate]) -> "CircuitSpec":
        """Copy of this circuit with selected (layer, bond) gates replaced"""
        phase0, blocks, phase1 = self.phase0.copy(), self.blocks.copy(), self.phase1.copy()
        for (t, bond), gate in overrides.items():
            self.gate(t, bond)
            gate.validate()
            phase0[t - 1, bond - 1] = gate.phase0
            blocks[t - 1, bond - 1] = gate.block
            phase1[t - 1, bond - 1] = gate.phase1
        return _frozen_spec(self.num_spins, self.depth, self.master_seed, "custom", phase0, blocks, phase1)

    @classmethod
    def identity(cls, num_spins: int, depth: int) -> "CircuitSpec":
        _check_circuit_size(num_spins, depth)
        bonds = num_spins - 1
        blocks = np.broadcast_to(np.eye(2, dtype=np.complex128), (depth, bonds, 2, 2)).copy()
        ones = np.ones((depth, bonds), dtype=np.complex128)
        return _frozen_spec(num_spins, depth, None, "identity", ones, blocks, ones.copy())


def _check_circuit_size(num_spins: int, depth: int):
    check_num_spins(num_spins, minimum=4)
    if depth < 1:
        raise InvalidArgumentError(f"depth must be >= 1, got {depth}")


def _frozen_spec(num_spins, depth, master_seed, kind, phase0, blocks, phase1) -> CircuitSpec:
    for table in (phase0, blocks, phase1):
        table.setflags(write=False)
    return CircuitSpec(num_spins, depth, master_seed, kind, phase0, blocks, phase1)


def build_circuit(num_spins: int, depth: int, master_seed: int) -> CircuitSpec:
    """Haar-random charge-conserving brick-wall circuit, gate by gate from keyed streams"""
    _check_circuit_size(num_spins, depth)
    if not 0 <= master_seed < MAX_SEED:
        raise InvalidArgumentError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
    bonds = num_spins - 1
    phase0 = np.empty((depth, bonds), dtype=np.complex128)
    blocks = np.empty((depth, bonds, 2, 2), dtype=np.complex128)
    phase1 = np.empty((depth, bonds), dtype=np.complex128)
    for t in range(1, depth + 1):
        for bond in range(1, bonds + 1):
            gate = sample_haar_gate(gate_stream(master_seed, t, bond))
            phase0[t - 1, bond - 1] = gate.phase0
            blocks[t - 1, bond - 1] = gate.block
            phase1[t - 1, bond - 1] = gate.phase1
    return _frozen_spec(num_spins, depth, master_seed, "haar", phase0, blocks, phase1)


def cut_bond(spec: CircuitSpec) -> int:
    """The bond (n, n+1) crossing the middle cut"""
    return spec.half


def cut_parity(spec: CircuitSpec) -> str:
    return ODD if cut_bond(spec) % 2 else EVEN


def sublayer_bonds(num_spins: int, parity: str) -> range:
    if parity == ODD:
        return range(1, num_spins, 2)
    if parity == EVEN:
        return range(2, num_spins - 1, 2)
    raise InvalidArgumentError(f"Unknown sub-layer parity {parity!r}")


def _check_state(state: Statevector, spec: CircuitSpec):
    if state.num_spins != spec.num_spins:
        raise InvalidArgumentError(
            f"State has {state.num_spins} spins but the circuit has {spec.num_spins}")


def apply_sublayer(state: Statevector, spec: CircuitSpec, t: int, parity: str, modified: bool = False):
    """Apply one sub-layer of layer t; in modified mode the cut gate becomes its |00> phase"""
    _check_state(state, spec)
    spec._check_layer(t)
    cut = cut_bond(spec)
    for bond in sublayer_bonds(spec.num_spins, parity):
        gate = spec.gate(t, bond)
        if modified and bond == cut:
            apply_global_phase(state, gate.phase0)
        else:
            apply_two_site_gate(state, gate, bond)


def apply_layer(state: Statevector, spec: CircuitSpec, t: int):
    """U(t, t-1): odd sub-layer, then even sub-layer"""
    apply_sublayer(state, spec, t, ODD)
    apply_sublayer(state, spec, t, EVEN)


def apply_modified_layer(state: Statevector, spec: CircuitSpec, t: int, strict_parity: bool = False):
    """
    V(t, t-1): like apply_layer but the cut-crossing gate is replaced by a global phase.

    For even n the cut gate sits in the even sub-layer and is replaced there;
    strict_parity=True only accepts the odd-n reference layout.
    """
    if strict_parity and cut_parity(spec) == EVEN:
        raise UnsupportedConfigurationError(
            f"Modified layer with strict parity needs odd n, got n = {spec.half}")
    apply_sublayer(state, spec, t, ODD, modified=True)
    apply_sublayer(state, spec, t, EVEN, modified=True)


def _check_span(spec: CircuitSpec, t_from: int, t_to: int):
    if not 0 <= t_from < t_to <= spec.depth:
        raise InvalidArgumentError(
            f"Need 0 <= t_from < t_to <= {spec.depth}, got t_from={t_from}, t_to={t_to}")


def evolve(state: Statevector, spec: CircuitSpec, t_from: int, t_to: int, modified: bool = False):
    """Apply layers t_from+1 .. t_to in order"""
    _check_span(spec, t_from, t_to)
    step = apply_modified_layer if modified else apply_layer
    for t in range(t_from + 1, t_to + 1):
        step(state, spec, t)


def evolve_adjoint(state: Statevector, spec: CircuitSpec, t_from: int, t_to: int):
    """Apply U(t_to, t_from)^dagger, i.e. undo layers t_to .. t_from+1"""
    _check_span(spec, t_from, t_to)
    _check_state(state, spec)
    for t in range(t_to, t_from, -1):
        for parity in (EVEN, ODD):
            for bond in sublayer_bonds(spec.num_spins, parity):
                apply_two_site_gate_adjoint(state, spec.gate(t, bond), bond)


def circuit_table(spec: CircuitSpec) -> pd.DataFrame:
    """One row per gate, columns as in DUMP_COLUMNS"""
    rows = []
    for t in range(1, spec.depth + 1):
        for bond in range(1, spec.num_bonds + 1):
            gate = spec.gate(t, bond)
            values = [gate.phase0, *gate.block.reshape(-1), gate.phase1]
            row = [t, bond]
            for value in values:
                row.extend([float(value.real), float(value.imag)])
            rows.append(row)
    return pd.DataFrame(rows, columns=DUMP_COLUMNS)


def dump_circuit(spec: CircuitSpec, path: Union[str, Path]) -> Path:
    return write_round_trip_csv(circuit_table(spec), path)


def load_circuit(path: Union[str, Path]) -> CircuitSpec:
    """Rebuild a circuit from a dump; the seed is not part of the table"""
    table = read_round_trip_csv(path)
    if list(table.columns) != DUMP_COLUMNS:
        raise InvalidArgumentError(f"{path} is not a circuit dump (columns {list(table.columns)})")
    depth = int(table["layer"].max())
    num_spins = int(table["bond"].max()) + 1
    _check_circuit_size(num_spins, depth)
    if len(table) != depth * (num_spins - 1):
        raise InvalidArgumentError(f"{path} has {len(table)} gates, expected {depth * (num_spins - 1)}")

    def complex_column(prefix: str) -> np.ndarray:
        return table[f"{prefix}_re"].to_numpy() + 1j * table[f"{prefix}_im"].to_numpy()

    table = table.sort_values(["layer", "bond"]).reset_index(drop=True)
    shape = (depth, num_spins - 1)
    phase0 = complex_column("phase0").reshape(shape)
    phase1 = complex_column("phase1").reshape(shape)
    blocks = np.stack([complex_column(name) for name in ("b00", "b01", "b10", "b11")], axis=-1)
    blocks = blocks.reshape(shape + (2, 2))
    spec = _frozen_spec(num_spins, depth, None, "loaded", phase0, blocks, phase1)
    for t in range(1, depth + 1):
        for bond in range(1, num_spins):
            spec.gate(t, bond).validate()
    return spec
