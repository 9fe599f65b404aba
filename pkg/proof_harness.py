"""
Numerical instance of the argument bounding Renyi entropy growth by sqrt(t ln t).

For a product initial state psi_init in the sigma_x basis the harness builds
psi_0 (the 2m spins around the cut pinned to |0>), evolves it under the real
circuit U and the cut-free circuit V with identical gates, and checks every
inequality linking the defect Delta_t = U psi_0 - V psi_0 to the largest
Schmidt coefficient of U psi_init and from there to R_alpha.
"""
# Standard library imports
from dataclasses import dataclass, field
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

# Third-party library imports
import numpy as np
import pandas as pd

# Local imports
from circuits import (
    EVEN,
    ODD,
    CircuitSpec,
    apply_layer,
    apply_modified_layer,
    apply_sublayer,
    cut_parity,
    evolve,
    evolve_adjoint,
)
from entanglement import (
    MIN_ENTROPY_ALPHA,
    EntanglementSpectrum,
    min_entropy,
    renyi_entropy,
    schmidt_spectrum,
)
from errors import InvalidArgumentError, InvariantViolationError, UnsupportedConfigurationError
from statevector_core import (
    SiteBasisSign,
    Statevector,
    init_product_x,
    init_zero_block,
    project_zero_at,
    zero_block_sites,
)
from transport import cut_leakage, cut_sites

logger = logging.getLogger(__name__)

# Parameters
UNITARITY_TOLERANCE = 1e-10
CHAIN_TOLERANCE = 1e-9
FINAL_BOUND_TOLERANCE = 1e-6
S_PRIME_SLACK = 1e-14
EXHAUSTIVE_LIMIT = 12
DEFAULT_ALPHAS = (2.0, 3.0, MIN_ENTROPY_ALPHA)
DIFFUSIVE_EXPONENT = 0.5

_SIGN_TRANSFORM = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)


def p_of_t(t: int, p_degree: int) -> float:
    """The polynomial p(t) = t^p_degree, with p(0) = 1"""
    if p_degree < 0:
        raise InvalidArgumentError(f"p_degree must be >= 0, got {p_degree}")
    return float(t) ** p_degree if t >= 1 else 1.0


def m_schedule(t: int, m_const: float, n: int, m_exponent: float = DIFFUSIVE_EXPONENT) -> Tuple[int, bool]:
    """
    m(t) = ceil(K t^z sqrt(ln t)) clamped to 1..n; also reports whether it was clamped.

    z = 1/2 is the diffusive schedule ceil(K sqrt(t ln t)). A transport exponent
    fitted from leakage or domain-wall data can be passed as z.
    """
    if not m_exponent > 0:
        raise InvalidArgumentError(f"m_exponent must be positive, got {m_exponent}")
    raw = math.ceil(m_const * math.sqrt(float(t) ** (2.0 * m_exponent) * math.log(t))) if t >= 2 else 1
    m = min(n, max(1, raw))
    return m, m != raw


def alpha_factor(alpha: float) -> float:
    """alpha/(alpha-1), which is 1 for the min-entropy"""
    return 1.0 if alpha == MIN_ENTROPY_ALPHA else alpha / (alpha - 1.0)


@dataclass(frozen=True)
class ProofTrace:
    m: int
    t: int
    delta_norm: float
    per_layer_leakage: Tuple[float, ...]
    cut_leakage: Tuple[float, ...]
    leakage: float
    overlap_U: float
    overlap_V: float
    defect_overlap: float
    lambda1_measured: float
    lambda1_bound: float
    p_of_t: float
    s_prime_member: bool
    renyi: Dict[float, float] = field(default_factory=dict)
    m_clamped: bool = False
    failures: Tuple[str, ...] = ()

    @property
    def threshold(self) -> float:
        """2^-m ||Delta_t|| p(t), the cut-off defining S'"""
        return 2.0 ** -self.m * self.delta_norm * self.p_of_t

    @property
    def vacuous(self) -> bool:
        return self.lambda1_bound <= 0

    @property
    def min_entropy_bound(self) -> float:
        """-2 ln(2^-m (1 - ||Delta_t|| p(t))), NaN when vacuous"""
        return math.nan if self.vacuous else -2.0 * math.log(self.lambda1_bound)

    @property
    def ok(self) -> bool:
        return not self.failures


class ProofTracker:
    """
    Evolves U psi_0 and V psi_0 side by side, one layer at a time.

    The cut leakage of U psi_0 is recorded at every layer boundary and at the
    moment the cut gate of each layer acts (layer start for odd n, after the
    odd sub-layer for even n).
    """

    def __init__(self, spec: CircuitSpec, psi_init: Statevector, m: int):
        self.spec = spec
        self.m = m
        self.psi_zero = init_zero_block(psi_init, m)
        self.u_state = self.psi_zero.copy()
        self.v_state = self.psi_zero.copy()
        self.time = 0
        self.layer_leakage: List[float] = [cut_leakage(self.u_state)]
        self.cut_leakage: List[float] = []
        self._cut_parity = cut_parity(spec)

    def advance(self):
        t = self.time + 1
        for parity in (ODD, EVEN):
            if parity == self._cut_parity:
                self.cut_leakage.append(cut_leakage(self.u_state))
            apply_sublayer(self.u_state, self.spec, t, parity)
            apply_sublayer(self.v_state, self.spec, t, parity, modified=True)
        self.time = t
        self.layer_leakage.append(cut_leakage(self.u_state))
        logger.debug(f"m={self.m} t={t}: leakage {self.layer_leakage[-1]:.3e}")

    def advance_to(self, t: int):
        if t < self.time or t > self.spec.depth:
            raise InvalidArgumentError(f"Cannot move tracker from t={self.time} to t={t}")
        while self.time < t:
            self.advance()

    def defect(self) -> np.ndarray:
        """Delta_t = U(t,0) psi_0 - V(t,0) psi_0"""
        return self.u_state.amplitudes - self.v_state.amplitudes

    def trace(self, evolved_init: Statevector, p_degree: int,
              alphas: Sequence[float] = DEFAULT_ALPHAS,
              spectrum: Optional[EntanglementSpectrum] = None,
              m_clamped: bool = False) -> ProofTrace:
        """ProofTrace at the tracker's current time against U(t,0) psi_init"""
        t = self.time
        delta = self.defect()
        delta_norm = float(np.linalg.norm(delta))
        target = evolved_init.amplitudes

        v_amplitudes = self.v_state.amplitudes / np.linalg.norm(self.v_state.amplitudes)
        overlap_U = abs(np.vdot(self.u_state.amplitudes, target))
        overlap_V = abs(np.vdot(v_amplitudes, target))
        defect_overlap = abs(np.vdot(delta, target))

        if spectrum is None:
            spectrum = schmidt_spectrum(evolved_init, self.spec.half)
        p = p_of_t(t, p_degree)
        scale = 2.0 ** -self.m
        s_prime = defect_overlap <= scale * delta_norm * p + S_PRIME_SLACK

        failures = []
        if abs(overlap_U - scale) > UNITARITY_TOLERANCE:
            failures.append(f"unitarity: |<U psi_0, U psi_init>| = {overlap_U!r}, expected {scale!r}")
        accounted = 2.0 * sum(self.cut_leakage)
        if delta_norm > accounted + CHAIN_TOLERANCE:
            failures.append(f"defect accounting: ||Delta|| = {delta_norm!r} > {accounted!r}")
        if spectrum.lambda1 < overlap_V - CHAIN_TOLERANCE:
            failures.append(f"eckart-young: lambda1 = {spectrum.lambda1!r} < overlap_V = {overlap_V!r}")

        return ProofTrace(
            m=self.m,
            t=t,
            delta_norm=delta_norm,
            per_layer_leakage=tuple(self.layer_leakage[:t]),
            cut_leakage=tuple(self.cut_leakage),
            leakage=self.layer_leakage[t],
            overlap_U=float(overlap_U),
            overlap_V=float(overlap_V),
            defect_overlap=float(defect_overlap),
            lambda1_measured=spectrum.lambda1,
            lambda1_bound=scale * (1.0 - delta_norm * p),
            p_of_t=p,
            s_prime_member=bool(s_prime),
            renyi={float(alpha): renyi_entropy(spectrum, alpha) for alpha in alphas},
            m_clamped=m_clamped,
            failures=tuple(failures),
        )


def _require_reference_parity(spec: CircuitSpec, strict_parity: bool):
    if strict_parity and spec.half % 2 == 0:
        raise UnsupportedConfigurationError(f"Reference configuration needs odd n, got n = {spec.half}")


def run_proof_trace(spec: CircuitSpec, psi_init_signs: Sequence[SiteBasisSign], m: int, t: int,
                    p_degree: int = 2, alphas: Sequence[float] = DEFAULT_ALPHAS,
                    strict_parity: bool = False, strict: bool = False) -> ProofTrace:
    """
    Evolve psi_0 under U and V and psi_init under U up to t and fill a ProofTrace.

    Failed invariants are logged and kept on the trace; strict=True raises instead.
    """
    _require_reference_parity(spec, strict_parity)
    psi_init = init_product_x(psi_init_signs)
    if psi_init.num_spins != spec.num_spins:
        raise InvalidArgumentError(f"{psi_init.num_spins} signs for a {spec.num_spins}-spin circuit")
    tracker = ProofTracker(spec, psi_init, m)
    tracker.advance_to(t)
    evolved = psi_init.copy()
    if t > 0:
        evolve(evolved, spec, 0, t)
    trace = tracker.trace(evolved, p_degree, alphas)
    for failure in trace.failures:
        logger.warning(f"Proof trace m={m} t={t}: {failure}")
    if strict and trace.failures:
        raise InvariantViolationError(f"Proof trace m={m} t={t} failed", list(trace.failures))
    return trace


@dataclass(frozen=True)
class InequalityCheck:
    """lhs <= rhs + tolerance; checks that do not apply are reported with applicable=False"""

    name: str
    lhs: float
    rhs: float
    tolerance: float
    applicable: bool = True

    @property
    def holds(self) -> bool:
        return (not self.applicable) or self.lhs <= self.rhs + self.tolerance

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def verify_overlap_chain(trace: ProofTrace) -> List[InequalityCheck]:
    """Every inequality of the chain, in the order the argument uses them"""
    scale = 2.0 ** -trace.m
    log_lambda1 = -2.0 * math.log(trace.lambda1_measured)
    checks = [
        InequalityCheck("unitarity", abs(trace.overlap_U - scale), 0.0, UNITARITY_TOLERANCE),
        InequalityCheck("defect_accounting", trace.delta_norm, 2.0 * sum(trace.cut_leakage), CHAIN_TOLERANCE),
        InequalityCheck("reverse_triangle", scale - trace.defect_overlap, trace.overlap_V, CHAIN_TOLERANCE),
        InequalityCheck("s_prime_defect", trace.defect_overlap, trace.threshold, S_PRIME_SLACK,
                        applicable=trace.s_prime_member),
        InequalityCheck("eckart_young", trace.overlap_V, trace.lambda1_measured, CHAIN_TOLERANCE),
    ]
    for alpha, value in trace.renyi.items():
        if not alpha > 1:
            continue
        factor = alpha_factor(alpha)
        checks.append(InequalityCheck(f"renyi_vs_lambda1[{alpha:g}]", value, factor * log_lambda1,
                                      CHAIN_TOLERANCE))
        applicable = trace.s_prime_member and not trace.vacuous
        bound = factor * trace.min_entropy_bound if applicable else math.nan
        checks.append(InequalityCheck(f"final_bound[{alpha:g}]", value, bound, FINAL_BOUND_TOLERANCE,
                                      applicable=applicable))
    return checks


def layer_replacement_defect(spec: CircuitSpec, t: int, phi: Statevector) -> float:
    """||(U(t,t-1) - V(t,t-1)) P phi|| with P pinning spins n, n+1 to |00>"""
    _, projected = project_zero_at(phi, cut_sites(phi.num_spins))
    through_u = Statevector(phi.num_spins, projected.copy())
    through_v = Statevector(phi.num_spins, projected.copy())
    apply_layer(through_u, spec, t)
    apply_modified_layer(through_v, spec, t)
    return float(np.linalg.norm(through_u.amplitudes - through_v.amplitudes))


@dataclass(frozen=True)
class EnsembleReport:
    m: int
    t: int
    ensemble_size: int
    exhaustive: bool
    delta_norm: float
    p_of_t: float
    threshold: float
    fraction_below: float
    markov_bound: float
    sampling_error: float
    mean_defect_overlap: float
    mean_bound: float

    @property
    def markov_holds(self) -> bool:
        return self.fraction_below >= self.markov_bound - self.sampling_error - 1e-12

    @property
    def mean_holds(self) -> bool:
        """Mean of |<Delta|U psi_init>| over S is at most 2^-m ||Delta|| (exhaustive only)"""
        return (not self.exhaustive) or self.mean_defect_overlap <= self.mean_bound * (1 + 1e-9) + 1e-15


def _member_overlaps(pulled_back: np.ndarray, num_spins: int, signs: Sequence[SiteBasisSign],
                     in_sites: range) -> np.ndarray:
    """
    <w|psi> for every psi in S, indexed by the in-region sign bits (0 = +, 1 = -),
    bit j belonging to spin in_sites[j].
    """
    # Axis k of the tensor is spin num_spins - k.
    tensor = np.conj(pulled_back).reshape((2,) * num_spins)
    for site in in_sites:
        axis = num_spins - site
        tensor = np.moveaxis(np.tensordot(_SIGN_TRANSFORM, tensor, axes=([1], [axis])), 0, axis)
    for site in range(1, num_spins + 1):
        if site in in_sites:
            continue
        # Increasing site order only ever removes axes above num_spins - site.
        tensor = np.tensordot(tensor, signs[site - 1].ket(), axes=([num_spins - site], [0]))
    return tensor.reshape(-1)


def ensemble_s_prime(spec: CircuitSpec, psi_out_signs: Sequence[SiteBasisSign], m: int, t: int,
                     p_degree: int = 2, sample_size: Optional[int] = None,
                     seed: int = 0) -> EnsembleReport:
    """
    Fix the "out" signs, vary the 2m "in" signs and measure how many members
    satisfy |<Delta_t|U psi_init>| <= 2^-m ||Delta_t|| p(t).

    psi_out_signs has one entry per spin; entries inside the in-region are ignored.
    """
    signs = tuple(psi_out_signs)
    if len(signs) != spec.num_spins:
        raise InvalidArgumentError(f"{len(signs)} signs for a {spec.num_spins}-spin circuit")
    in_sites = zero_block_sites(spec.num_spins, m)
    members = 1 << (2 * m)
    if sample_size is not None and not 1 <= sample_size <= members:
        raise InvalidArgumentError(f"sample_size must be in 1..{members}, got {sample_size}")

    tracker = ProofTracker(spec, init_product_x(signs), m)
    tracker.advance_to(t)
    delta = tracker.defect()
    delta_norm = float(np.linalg.norm(delta))

    # <Delta|U psi> = <U^dagger Delta|psi>: one backward evolution serves every member.
    pulled_back = Statevector(spec.num_spins, delta.copy())
    if t > 0:
        evolve_adjoint(pulled_back, spec, 0, t)
    overlaps = np.abs(_member_overlaps(pulled_back.amplitudes, spec.num_spins, signs, in_sites))

    exhaustive = 2 * m <= EXHAUSTIVE_LIMIT and (sample_size is None or sample_size == members)
    if not exhaustive:
        size = sample_size or min(members, 4096)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, m, t])))
        overlaps = overlaps[rng.integers(0, members, size=size)]

    p = p_of_t(t, p_degree)
    scale = 2.0 ** -m
    threshold = scale * delta_norm * p
    fraction_below = float(np.mean(overlaps <= threshold + S_PRIME_SLACK))
    markov_bound = 1.0 - 1.0 / p
    sampling_error = 0.0 if exhaustive else \
        3.0 * math.sqrt(max(markov_bound * (1.0 - markov_bound), 0.0) / overlaps.size)
    report = EnsembleReport(
        m=m, t=t, ensemble_size=int(overlaps.size), exhaustive=exhaustive,
        delta_norm=delta_norm, p_of_t=p, threshold=threshold,
        fraction_below=fraction_below, markov_bound=markov_bound, sampling_error=sampling_error,
        mean_defect_overlap=float(np.mean(overlaps)), mean_bound=scale * delta_norm,
    )
    logger.info(f"S' at m={m} t={t}: {fraction_below:.4f} of {report.ensemble_size} members "
                f"below threshold (Markov bound {markov_bound:.4f})")
    return report


class ScheduledProofRun:
    """Proof traces along the m(t) schedule for one circuit and one initial state; t must not decrease"""

    def __init__(self, spec: CircuitSpec, psi_init: Statevector, m_const: float,
                 p_degree: int, alphas: Sequence[float] = DEFAULT_ALPHAS,
                 m_exponent: float = DIFFUSIVE_EXPONENT):
        self.spec = spec
        self.psi_init = psi_init
        self.m_const = m_const
        self.m_exponent = m_exponent
        self.p_degree = p_degree
        self.alphas = tuple(alphas)
        self._trackers: Dict[int, ProofTracker] = {}

    def trace_at(self, t: int, evolved_init: Statevector,
                 spectrum: Optional[EntanglementSpectrum] = None) -> ProofTrace:
        m, clamped = m_schedule(t, self.m_const, self.spec.half, self.m_exponent)
        tracker = self._trackers.get(m)
        if tracker is None:
            tracker = ProofTracker(self.spec, self.psi_init, m)
            self._trackers[m] = tracker
        # The schedule never decreases, so smaller blocks are no longer needed.
        for stale in [key for key in self._trackers if key < m]:
            del self._trackers[stale]
        tracker.advance_to(t)
        trace = tracker.trace(evolved_init, self.p_degree, self.alphas, spectrum, m_clamped=clamped)
        for failure in trace.failures:
            logger.warning(f"Proof trace m={m} t={t}: {failure}")
        return trace


def bound_vs_measurement(traces: Sequence[ProofTrace]) -> pd.DataFrame:
    """One row per (trace, alpha > 1): measured R_alpha against alpha/(alpha-1) (-2 ln lambda1-bound)"""
    rows = []
    for trace in traces:
        for alpha, measured in trace.renyi.items():
            if not alpha > 1:
                continue
            usable = trace.s_prime_member and not trace.vacuous
            bound = alpha_factor(alpha) * trace.min_entropy_bound if usable else math.nan
            rows.append({
                "t": trace.t,
                "m": trace.m,
                "alpha": alpha,
                "measured": measured,
                "bound": bound,
                "s_prime": trace.s_prime_member,
                "vacuous": trace.vacuous,
                "violated": bool(usable and measured > bound + FINAL_BOUND_TOLERANCE),
            })
    columns = ["t", "m", "alpha", "measured", "bound", "s_prime", "vacuous", "violated"]
    return pd.DataFrame(rows, columns=columns)


def min_entropy_matches_lambda1(spectrum: EntanglementSpectrum, trace: ProofTrace) -> bool:
    """R_inf from the spectrum equals -2 ln lambda1 from the trace"""
    return abs(min_entropy(spectrum) + 2.0 * math.log(trace.lambda1_measured)) <= 1e-10
