"""
Schmidt spectra across a cut and the entropies built from them.

All logarithms are natural.
"""
# Standard library imports
from dataclasses import dataclass
import logging
import math
from typing import Sequence, Tuple

# Third-party library imports
import numpy as np
from scipy.linalg import svdvals

# Local imports
from errors import InvalidArgumentError
from statevector_core import Statevector

logger = logging.getLogger(__name__)

# Parameters
RELATIVE_CUTOFF = 1e-12
NORMALIZATION_TOLERANCE = 1e-9
SANDWICH_TOLERANCE = 1e-9
MIN_ENTROPY_ALPHA = math.inf


@dataclass(frozen=True, eq=False)
class EntanglementSpectrum:
    """Descending Schmidt coefficients; spins 1..cut_position form subsystem A"""

    coefficients: np.ndarray
    cut_position: int
    tail_weight: float = 0.0

    @property
    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the reduced density matrix"""
        return self.coefficients ** 2

    @property
    def schmidt_rank(self) -> int:
        return int(self.coefficients.size)

    @property
    def lambda1(self) -> float:
        return float(self.coefficients[0])


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.ascontiguousarray(values, dtype=np.float64)
    values.setflags(write=False)
    return values


def spectrum_from_values(values: Sequence[float], cut_position: int = 1) -> EntanglementSpectrum:
    """Build a spectrum from arbitrary Schmidt coefficients (sorted and checked here)"""
    coefficients = np.sort(np.asarray(values, dtype=np.float64))[::-1]
    if coefficients.size == 0 or coefficients[-1] <= 0:
        raise InvalidArgumentError("Schmidt coefficients must be strictly positive")
    total = float(np.sum(coefficients ** 2))
    if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
        raise InvalidArgumentError(f"Squared Schmidt coefficients sum to {total!r}, not 1")
    return EntanglementSpectrum(_frozen(coefficients), cut_position)


def schmidt_spectrum(state: Statevector, cut: int) -> EntanglementSpectrum:
    """Singular values of the 2^cut x 2^(2n-cut) amplitude matrix"""
    if not 1 <= cut <= state.num_spins - 1:
        raise InvalidArgumentError(f"Cut {cut} outside 1..{state.num_spins - 1}")
    # Rows run over the spins right of the cut (high bits), columns over A.
    matrix = state.amplitudes.reshape(1 << (state.num_spins - cut), 1 << cut)
    singular_values = svdvals(matrix, check_finite=False)
    if not singular_values[0] > 0:
        raise InvalidArgumentError("Zero-norm state has no Schmidt spectrum")
    keep = singular_values > RELATIVE_CUTOFF * singular_values[0]
    tail_weight = float(np.sum(singular_values[~keep] ** 2))
    return EntanglementSpectrum(_frozen(singular_values[keep]), cut, tail_weight)


def _check_alpha(alpha: float):
    if alpha <= 0 or alpha == 1:
        raise InvalidArgumentError(f"Renyi index must be in (0,1) or (1,inf), got {alpha}")


def renyi_entropy(spectrum: EntanglementSpectrum, alpha: float) -> float:
    """(1/(1-alpha)) ln sum Lambda_i^alpha; alpha = inf gives the min-entropy"""
    if alpha == MIN_ENTROPY_ALPHA:
        return min_entropy(spectrum)
    _check_alpha(alpha)
    value = math.log(float(np.sum(spectrum.eigenvalues ** alpha))) / (1.0 - alpha)
    return max(value, 0.0)


def von_neumann_entropy(spectrum: EntanglementSpectrum) -> float:
    eigenvalues = spectrum.eigenvalues
    eigenvalues = eigenvalues[eigenvalues > 0]
    return max(float(-np.sum(eigenvalues * np.log(eigenvalues))), 0.0)


def min_entropy(spectrum: EntanglementSpectrum) -> float:
    """-ln(lambda_1^2)"""
    return max(-2.0 * math.log(spectrum.lambda1), 0.0)


def best_rank_D_overlap(spectrum: EntanglementSpectrum, D: int) -> float:
    """Largest overlap of the state with any Schmidt-rank-D state (Eckart-Young)"""
    if D < 1:
        raise InvalidArgumentError(f"Schmidt rank must be >= 1, got {D}")
    return math.sqrt(min(1.0, float(np.sum(spectrum.eigenvalues[:D]))))


def product_state_overlap_bound(spectrum: EntanglementSpectrum) -> float:
    """Largest overlap with a state that is a product across the cut"""
    return best_rank_D_overlap(spectrum, 1)


def renyi_sandwich(spectrum: EntanglementSpectrum, alpha: float) -> Tuple[float, float, float]:
    """(R_inf, R_alpha, alpha/(alpha-1) R_inf) for alpha > 1"""
    if not alpha > 1:
        raise InvalidArgumentError(f"The sandwich needs alpha > 1, got {alpha}")
    r_inf = min_entropy(spectrum)
    upper = r_inf if alpha == MIN_ENTROPY_ALPHA else alpha / (alpha - 1.0) * r_inf
    return r_inf, renyi_entropy(spectrum, alpha), upper


def sandwich_holds(lower: float, value: float, upper: float, tolerance: float = SANDWICH_TOLERANCE) -> bool:
    return lower - tolerance <= value <= upper + tolerance


def entropy_ceiling(num_spins: int, cut: int) -> float:
    """Largest possible entropy across the cut: min(cut, 2n-cut) ln 2"""
    return min(cut, num_spins - cut) * math.log(2.0)
