"""
Dense statevector of a 2n-spin chain and the low-level kernels acting on it.

Spin i (1-based, left to right) is bit i-1 of the amplitude index.
Bit value 0 is |0> (sigma_z = +1), bit value 1 is |1> (sigma_z = -1).
"""
# Standard library imports
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache, reduce
import logging
from typing import TYPE_CHECKING, Iterable, Optional, Sequence, Tuple

# Third-party library imports
import numpy as np

# Local imports
from errors import InvalidArgumentError

if TYPE_CHECKING:
    from circuits import ChargeGate

logger = logging.getLogger(__name__)

# Parameters
MAX_SPINS = 28
NORM_TOLERANCE = 1e-10
SQRT2_INV = 1.0 / np.sqrt(2.0)

_ZERO_KET = np.array([1.0, 0.0], dtype=np.complex128)


class SiteBasisSign(Enum):
    """sigma_x eigenstate of one spin: |+> or |->"""

    PLUS = 1
    MINUS = -1

    @classmethod
    def parse(cls, token: str) -> "SiteBasisSign":
        token = token.strip()
        if token in ("+", "plus", "PLUS"):
            return cls.PLUS
        if token in ("-", "minus", "MINUS"):
            return cls.MINUS
        raise InvalidArgumentError(f"Unknown sign token {token!r}")

    def ket(self) -> np.ndarray:
        return np.array([SQRT2_INV, self.value * SQRT2_INV], dtype=np.complex128)


# Per-spin factors of a known product state; None marks a spin pinned to |0>.
ProductSigns = Tuple[Optional[SiteBasisSign], ...]


@dataclass
class Statevector:
    """Amplitudes of a 2n-spin chain, indexed by basis bitstrings"""

    num_spins: int
    amplitudes: np.ndarray
    product_signs: Optional[ProductSigns] = None

    def __post_init__(self):
        check_num_spins(self.num_spins, minimum=2)
        if self.amplitudes.shape != (1 << self.num_spins,):
            raise InvalidArgumentError(
                f"Expected {1 << self.num_spins} amplitudes for {self.num_spins} spins, "
                f"got shape {self.amplitudes.shape}"
            )
        if self.amplitudes.dtype != np.complex128:
            self.amplitudes = self.amplitudes.astype(np.complex128)

    @classmethod
    def from_amplitudes(cls, amplitudes: Sequence[complex]) -> "Statevector":
        """Wrap an existing normalized amplitude vector"""
        array = np.array(amplitudes, dtype=np.complex128)
        size = array.shape[0]
        if array.ndim != 1 or size < 4 or size & (size - 1):
            raise InvalidArgumentError(f"Amplitude count {size} is not 2^(2n)")
        num_spins = size.bit_length() - 1
        state = cls(num_spins=num_spins, amplitudes=array)
        if state.norm_drift() > NORM_TOLERANCE:
            raise InvalidArgumentError(f"State is not normalized (norm {state.norm():.12f})")
        return state

    @property
    def half(self) -> int:
        """n, the number of spins on each side of the middle cut"""
        return self.num_spins // 2

    def copy(self) -> "Statevector":
        return Statevector(self.num_spins, self.amplitudes.copy(), self.product_signs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def norm_drift(self) -> float:
        return abs(self.norm() - 1.0)


def check_num_spins(num_spins: int, minimum: int = 2):
    """Even chain length within the desk-scale memory bound"""
    if num_spins < minimum or num_spins % 2 or num_spins > MAX_SPINS:
        raise InvalidArgumentError(
            f"num_spins must be even and in [{minimum}, {MAX_SPINS}], got {num_spins}"
        )


def _check_site(num_spins: int, site: int):
    if not 1 <= site <= num_spins:
        raise InvalidArgumentError(f"Site {site} outside 1..{num_spins}")


def _check_bond(num_spins: int, left_site: int):
    if not 1 <= left_site <= num_spins - 1:
        raise InvalidArgumentError(f"Bond {left_site} outside 1..{num_spins - 1}")


def _product_amplitudes(kets: Sequence[np.ndarray]) -> np.ndarray:
    # Spin 1 is the least significant bit, so it is the rightmost Kronecker factor.
    return reduce(np.kron, reversed(kets)).astype(np.complex128)


def random_signs(rng: np.random.Generator, count: int) -> Tuple[SiteBasisSign, ...]:
    """Independent fair sigma_x signs"""
    draws = rng.integers(0, 2, size=count)
    return tuple(SiteBasisSign.MINUS if bit else SiteBasisSign.PLUS for bit in draws)


def init_product_x(signs: Sequence[SiteBasisSign]) -> Statevector:
    """Product state with spin i in |+> or |-> according to signs[i-1]"""
    signs = tuple(signs)
    if len(signs) == 0 or len(signs) % 2:
        raise InvalidArgumentError(f"Need an even, non-zero number of signs, got {len(signs)}")
    check_num_spins(len(signs))
    amplitudes = _product_amplitudes([sign.ket() for sign in signs])
    return Statevector(len(signs), amplitudes, product_signs=signs)


def init_computational(bits: Sequence[int]) -> Statevector:
    """Computational basis state; bits[i-1] is the value of spin i"""
    bits = [int(b) for b in bits]
    check_num_spins(len(bits))
    if any(b not in (0, 1) for b in bits):
        raise InvalidArgumentError(f"Bits must be 0 or 1, got {bits}")
    amplitudes = np.zeros(1 << len(bits), dtype=np.complex128)
    amplitudes[sum(b << k for k, b in enumerate(bits))] = 1.0
    return Statevector(len(bits), amplitudes)


def zero_block_sites(num_spins: int, m: int) -> range:
    """Spins n-m+1 .. n+m (the "in" region around the middle cut)"""
    n = num_spins // 2
    if not 1 <= m <= n:
        raise InvalidArgumentError(f"m must be in 1..{n}, got {m}")
    return range(n - m + 1, n + m + 1)


def init_zero_block(psi_init: Statevector, m: int) -> Statevector:
    """Pin the 2m spins around the cut to |0>, keeping the outer sigma_x factors"""
    if psi_init.product_signs is None:
        raise InvalidArgumentError("init_zero_block needs a product state with known signs")
    block = zero_block_sites(psi_init.num_spins, m)
    factors = list(psi_init.product_signs)
    for site in block:
        factors[site - 1] = None
    kets = [_ZERO_KET if sign is None else sign.ket() for sign in factors]
    return Statevector(psi_init.num_spins, _product_amplitudes(kets), product_signs=tuple(factors))


def inner_product(a: Statevector, b: Statevector) -> complex:
    """<a|b>, conjugate-linear in a"""
    if a.num_spins != b.num_spins:
        raise InvalidArgumentError(f"Size mismatch: {a.num_spins} vs {b.num_spins} spins")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def _pair_view(amplitudes: np.ndarray, num_spins: int, left_site: int) -> np.ndarray:
    # Axes: (higher bits, spin left_site+1, spin left_site, lower bits)
    low = 1 << (left_site - 1)
    high = 1 << (num_spins - left_site - 1)
    return amplitudes.reshape(high, 2, 2, low)


def _apply_blocks(amplitudes, num_spins, left_site, phase0, block, phase1):
    view = _pair_view(amplitudes, num_spins, left_site)
    a01 = view[:, 1, 0, :].copy()
    a10 = view[:, 0, 1, :].copy()
    view[:, 1, 0, :] = block[0, 0] * a01 + block[0, 1] * a10
    view[:, 0, 1, :] = block[1, 0] * a01 + block[1, 1] * a10
    if phase0 != 1:
        view[:, 0, 0, :] *= phase0
    if phase1 != 1:
        view[:, 1, 1, :] *= phase1


def apply_two_site_gate(state: Statevector, gate: "ChargeGate", left_site: int):
    """Apply a charge-conserving gate to spins (left_site, left_site+1) in place"""
    _check_bond(state.num_spins, left_site)
    _apply_blocks(state.amplitudes, state.num_spins, left_site,
                  gate.phase0, gate.block, gate.phase1)
    state.product_signs = None


def apply_two_site_gate_adjoint(state: Statevector, gate: "ChargeGate", left_site: int):
    """Apply the inverse of a charge-conserving gate in place"""
    _check_bond(state.num_spins, left_site)
    _apply_blocks(state.amplitudes, state.num_spins, left_site,
                  np.conj(gate.phase0), gate.block.conj().T, np.conj(gate.phase1))
    state.product_signs = None


def apply_global_phase(state: Statevector, phase: complex):
    state.amplitudes *= phase
    state.product_signs = None


def project_zero_at(state: Statevector, sites: Iterable[int]) -> Tuple[float, np.ndarray]:
    """
    Keep only amplitudes whose bits at `sites` are all 0.

    Returns (in_weight, projected amplitudes); the projected vector is not renormalized.
    """
    projected = state.amplitudes.copy()
    for site in sorted(set(sites)):
        _check_site(state.num_spins, site)
        view = projected.reshape(1 << (state.num_spins - site), 2, 1 << (site - 1))
        view[:, 1, :] = 0.0
    in_weight = float(np.vdot(projected, projected).real)
    return in_weight, projected


def leakage_norm(state: Statevector, sites: Iterable[int]) -> float:
    """||(1-P) psi|| for P projecting `sites` onto |0>"""
    _, projected = project_zero_at(state, sites)
    return float(np.linalg.norm(state.amplitudes - projected))


def sigma_z_expectation(state: Statevector, site: int) -> float:
    """<sigma_z> at one spin, with |0> -> +1"""
    _check_site(state.num_spins, site)
    probs = np.abs(state.amplitudes) ** 2
    view = probs.reshape(1 << (state.num_spins - site), 2, 1 << (site - 1))
    return float(view[:, 0, :].sum() - view[:, 1, :].sum())


@lru_cache(maxsize=4)
def _hamming_weights(num_spins: int) -> np.ndarray:
    index = np.arange(1 << num_spins, dtype=np.int64)
    weights = np.zeros(1 << num_spins, dtype=np.int64)
    for bit in range(num_spins):
        weights += (index >> bit) & 1
    weights.setflags(write=False)
    return weights


def sector_weights(state: Statevector) -> np.ndarray:
    """Probability weight of each charge sector (number of spins in |1>)"""
    probs = np.abs(state.amplitudes) ** 2
    return np.bincount(_hamming_weights(state.num_spins), weights=probs,
                       minlength=state.num_spins + 1)
