"""
Charge transport diagnostics: profiles, leakage into the zero block at the cut,
domain-wall spreading and the exponent fits built on them
"""
# Standard library imports
from dataclasses import dataclass, field
import logging
from typing import Dict, Iterable, List, Sequence, Tuple

# Third-party library imports
import numpy as np
import pandas as pd

# Local imports
from circuits import CircuitSpec, apply_layer, build_circuit
from errors import FitUnavailableError, InvalidArgumentError
from statevector_core import (
    Statevector,
    init_computational,
    init_zero_block,
    leakage_norm,
    sigma_z_expectation,
)

logger = logging.getLogger(__name__)

# Parameters
LEAKAGE_FLOOR = 1e-8
LEAKAGE_SATURATION = 0.5
MIN_FIT_POINTS = 8
Z_GRID = np.round(np.arange(0.10, 0.9001, 0.01), 2)


@dataclass(frozen=True)
class LeakageEntry:
    m: int
    t: int
    leakage: float


@dataclass(frozen=True)
class LeakageCurve:
    """Leakage ||(1-P) U(t,0) psi_0(m)|| with P pinning spins n, n+1 to |00>"""

    entries: Tuple[LeakageEntry, ...]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([(e.m, e.t, e.leakage) for e in self.entries],
                            columns=["m", "t", "leakage"])

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "LeakageCurve":
        frame = frame.sort_values(["m", "t"])
        return cls(tuple(LeakageEntry(int(m), int(t), float(leak))
                         for m, t, leak in frame[["m", "t", "leakage"]].itertuples(index=False)))


@dataclass(frozen=True)
class TransportFit:
    """ln(leakage) ~ a - c m^2/t, plus the best collapse exponent z"""

    exponent_z: float
    diffusion_coefficient_c: float
    goodness: float
    collapse_residual: float
    window: Dict[str, float]
    num_points: int
    z_scan: Dict[float, float] = field(default_factory=dict)


def cut_sites(num_spins: int) -> Tuple[int, int]:
    """Spins n and n+1, the two spins the projector P acts on"""
    n = num_spins // 2
    return n, n + 1


def charge_profile(state: Statevector) -> np.ndarray:
    """<sigma_z^i> for i = 1..2n"""
    return np.array([sigma_z_expectation(state, site) for site in range(1, state.num_spins + 1)])


def cut_leakage(state: Statevector) -> float:
    return leakage_norm(state, cut_sites(state.num_spins))


def _check_times(spec: CircuitSpec, t_values: Iterable[int]) -> List[int]:
    times = sorted(set(int(t) for t in t_values))
    if not times or times[0] < 0 or times[-1] > spec.depth:
        raise InvalidArgumentError(f"Times must lie in 0..{spec.depth}, got {times}")
    return times


def measure_leakage(spec: CircuitSpec, psi_init: Statevector,
                    m_values: Iterable[int], t_values: Iterable[int]) -> LeakageCurve:
    """Evolve psi_0(m) under U for every m and record the cut leakage at each requested t"""
    times = _check_times(spec, t_values)
    ms = sorted(set(int(m) for m in m_values))
    if not ms or ms[0] < 1 or ms[-1] > spec.half:
        raise InvalidArgumentError(f"m values must lie in 1..{spec.half}, got {ms}")

    entries = []
    for m in ms:
        state = init_zero_block(psi_init, m)
        for t in range(0, times[-1] + 1):
            if t > 0:
                apply_layer(state, spec, t)
            if t in times:
                entries.append(LeakageEntry(m, t, cut_leakage(state)))
        logger.debug(f"m={m}: leakage at t={times[-1]} is {entries[-1].leakage:.3e}")
    return LeakageCurve(tuple(entries))


def mean_leakage(curves: Sequence[LeakageCurve]) -> LeakageCurve:
    """Arithmetic ensemble mean per (m, t)"""
    if not curves:
        raise InvalidArgumentError("No leakage curves to average")
    frame = pd.concat([curve.to_frame() for curve in curves], ignore_index=True)
    averaged = frame.groupby(["m", "t"], as_index=False)["leakage"].mean()
    return LeakageCurve.from_frame(averaged)


def _linear_fit(x: np.ndarray, y: np.ndarray) -> Tuple[float, float, float]:
    """Least squares y = slope x + intercept; returns (slope, intercept, rms residual)"""
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(residual ** 2)))


def fit_diffusive_leakage(curve: LeakageCurve, min_points: int = MIN_FIT_POINTS) -> TransportFit:
    """Fit the constant c in leakage ~ exp(-c m^2/t) and scan z for the best data collapse"""
    frame = curve.to_frame()
    window = frame[(frame["t"] > 0)
                   & (frame["leakage"] > LEAKAGE_FLOOR)
                   & (frame["leakage"] < LEAKAGE_SATURATION)]
    if len(window) < min_points:
        raise FitUnavailableError(
            f"Only {len(window)} leakage points inside ({LEAKAGE_FLOOR}, {LEAKAGE_SATURATION}); "
            f"need {min_points}")

    m = window["m"].to_numpy(dtype=np.float64)
    t = window["t"].to_numpy(dtype=np.float64)
    log_leakage = np.log(window["leakage"].to_numpy())

    c, _, goodness = _linear_fit(-m ** 2 / t, log_leakage)

    collapse_y = np.log(-log_leakage)
    z_scan = {}
    for z in Z_GRID:
        _, _, residual = _linear_fit(np.log(m) - z * np.log(t), collapse_y)
        z_scan[float(z)] = residual
    best_z = min(z_scan, key=z_scan.get)

    fit = TransportFit(
        exponent_z=best_z,
        diffusion_coefficient_c=c,
        goodness=goodness,
        collapse_residual=z_scan[best_z],
        window={"m_min": float(m.min()), "m_max": float(m.max()),
                "t_min": float(t.min()), "t_max": float(t.max())},
        num_points=len(window),
        z_scan=z_scan,
    )
    logger.info(f"Leakage fit: c = {c:.4f}, z = {best_z:.2f} over {len(window)} points")
    return fit


def domain_wall_spread(spec: CircuitSpec, t_values: Iterable[int]) -> List[Tuple[int, float]]:
    """
    Evolve |1^n 0^n> and return (t, variance) of the transferred-charge profile about the cut.

    q_i(t) = (<sigma_z^i(t)> - <sigma_z^i(0)>)/2; the variance is sum |q_i| x_i^2 / sum |q_i|
    with x_i the distance of spin i from the cut.
    """
    times = _check_times(spec, t_values)
    n = spec.half
    state = init_computational([1] * n + [0] * n)
    initial = charge_profile(state)
    distance = np.arange(1, spec.num_spins + 1) - (n + 0.5)

    spread = []
    for t in range(0, times[-1] + 1):
        if t > 0:
            apply_layer(state, spec, t)
        if t not in times:
            continue
        moved = np.abs(charge_profile(state) - initial) / 2.0
        transferred = float(moved.sum())
        variance = float(np.sum(moved * distance ** 2) / transferred) if transferred > 1e-15 else 0.0
        spread.append((t, variance))
    return spread


def fit_log_log_slope(t: Sequence[float], values: Sequence[float]) -> Tuple[float, float]:
    """Slope and intercept of ln(values) against ln(t), positive points only"""
    t = np.asarray(t, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    usable = (t > 0) & (values > 0)
    if usable.sum() < 2:
        raise FitUnavailableError("Need at least two positive points for a log-log fit")
    slope, intercept, _ = _linear_fit(np.log(t[usable]), np.log(values[usable]))
    return slope, intercept


def ensemble_domain_wall_slope(num_spins: int, depth: int, seeds: Sequence[int],
                               t_lo: int, t_hi: int) -> Tuple[float, pd.DataFrame]:
    """Mean domain-wall variance over seeds and its log-log slope over [t_lo, t_hi]"""
    if not 1 <= t_lo < t_hi <= depth:
        raise InvalidArgumentError(f"Need 1 <= t_lo < t_hi <= {depth}, got [{t_lo}, {t_hi}]")
    rows = []
    for seed in seeds:
        spec = build_circuit(num_spins, depth, seed)
        rows.extend((seed, t, variance) for t, variance in domain_wall_spread(spec, range(t_lo, t_hi + 1)))
    frame = pd.DataFrame(rows, columns=["seed", "t", "variance"])
    mean = frame.groupby("t", as_index=False)["variance"].mean()
    slope, _ = fit_log_log_slope(mean["t"], mean["variance"])
    logger.info(f"Domain-wall variance slope {slope:.3f} over t in [{t_lo}, {t_hi}], {len(seeds)} seeds")
    return slope, mean
