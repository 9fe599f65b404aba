"""
Batch orchestration: seeded ensemble runs, entropy time series, proof traces,
transport diagnostics, exponent fits and the run summary.
"""
# Standard library imports
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from itertools import repeat
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence

# Third-party library imports
import numpy as np
import pandas as pd

# Local imports
from circuits import CircuitSpec, apply_layer, build_circuit
from entanglement import (
    renyi_entropy,
    renyi_sandwich,
    sandwich_holds,
    schmidt_spectrum,
    von_neumann_entropy,
)
from errors import FitUnavailableError, InvalidArgumentError
from proof_harness import (
    DEFAULT_ALPHAS,
    ScheduledProofRun,
    alpha_factor,
    bound_vs_measurement,
    verify_overlap_chain,
)
from result_files import write_json, write_round_trip_csv
from run_config import RunConfig, alpha_column, alpha_label
from statevector_core import init_product_x, random_signs, sector_weights
from transport import (
    LeakageCurve,
    domain_wall_spread,
    fit_diffusive_leakage,
    fit_log_log_slope,
    mean_leakage,
    measure_leakage,
)

logger = logging.getLogger(__name__)

# Parameters
SCHEMA_VERSION = 1
DRIFT_WARNING = 1e-9
CHARGE_TOLERANCE = 1e-9
CEILING_TOLERANCE = 1e-9
SATURATION_FRACTION = 0.5
MIN_GROWTH_POINTS = 6
SIGNS_STREAM = 1
BOOTSTRAP_STREAM = 2

PROOF_COLUMNS = ["m", "leakage", "delta_norm", "overlap_v", "bound", "s_prime"]

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_VIOLATION = 3
EXIT_IO = 4
EXIT_NO_DATA = 5


def record_columns(config: RunConfig) -> List[str]:
    columns = ["seed", "realization", "t", "vn"] + [alpha_column(a) for a in config.alphas] + ["lambda1"]
    if config.wants_proof:
        columns += PROOF_COLUMNS
    return columns


def realization_seed(master_seed: int, realization: int) -> int:
    """64-bit circuit seed for one realization"""
    words = np.random.SeedSequence([master_seed, realization]).generate_state(2, dtype=np.uint32)
    return int(words[0]) | (int(words[1]) << 32)


def measured_times(config: RunConfig) -> List[int]:
    return list(range(0, config.depth + 1, config.measure_every))


def realization_circuit(config: RunConfig, seed: int) -> CircuitSpec:
    if config.circuit == "identity":
        return CircuitSpec.identity(config.num_spins, config.depth)
    return build_circuit(config.num_spins, config.depth, seed)


@dataclass
class RealizationResult:
    realization: int
    seed: int
    rows: List[dict] = field(default_factory=list)
    leakage_rows: List[dict] = field(default_factory=list)
    spread_rows: List[dict] = field(default_factory=list)
    bound_rows: List[dict] = field(default_factory=list)
    violations: Dict[str, int] = field(default_factory=dict)

    def count(self, name: str, failed: bool = True):
        self.violations[name] = self.violations.get(name, 0) + int(bool(failed))


def run_realization(config: RunConfig, realization: int) -> RealizationResult:
    """One circuit, one random sigma_x product state, measured layer by layer"""
    seed = realization_seed(config.master_seed, realization)
    result = RealizationResult(realization, seed)
    spec = realization_circuit(config, seed)
    rng = np.random.Generator(np.random.Philox(
        np.random.SeedSequence([config.master_seed, realization, SIGNS_STREAM])))
    psi_init = init_product_x(random_signs(rng, config.num_spins))
    state = psi_init.copy()
    initial_sectors = sector_weights(state)
    ceiling = config.half * math.log(2.0) + CEILING_TOLERANCE

    times = measured_times(config)
    proof_run = ScheduledProofRun(spec, psi_init, config.m_const, config.p_degree, config.alphas,
                                  config.m_exponent) if config.wants_proof else None
    traces = []

    for t in range(0, config.depth + 1):
        if t > 0:
            apply_layer(state, spec, t)
            drift = state.norm_drift()
            if drift > DRIFT_WARNING:
                logger.warning(f"Realization {realization}: norm drift {drift:.2e} at t={t}")
        if t not in times:
            continue

        result.count("charge_conservation",
                     np.max(np.abs(sector_weights(state) - initial_sectors)) > CHARGE_TOLERANCE)
        spectrum = schmidt_spectrum(state, config.half)
        row = {"seed": seed, "realization": realization, "t": t, "vn": von_neumann_entropy(spectrum)}
        for alpha in config.alphas:
            row[alpha_column(alpha)] = renyi_entropy(spectrum, alpha)
            lower, value, upper = renyi_sandwich(spectrum, alpha)
            result.count("sandwich", not sandwich_holds(lower, value, upper))
        row["lambda1"] = spectrum.lambda1
        result.count("entropy_ceiling",
                     max(row[alpha_column(a)] for a in config.alphas) > ceiling or row["vn"] > ceiling)

        if proof_run is not None:
            trace = proof_run.trace_at(t, state, spectrum)
            traces.append(trace)
            for check in verify_overlap_chain(trace):
                kind = check.name.split("[")[0]
                result.count(kind, not check.holds)
            row.update({
                "m": trace.m,
                "leakage": trace.leakage,
                "delta_norm": trace.delta_norm,
                "overlap_v": trace.overlap_V,
                "bound": trace.min_entropy_bound,
                "s_prime": trace.s_prime_member,
            })
        result.rows.append(row)

    if traces:
        bounds = bound_vs_measurement(traces)
        bounds.insert(0, "realization", realization)
        result.bound_rows = bounds.to_dict("records")

    if config.wants_transport:
        curve = measure_leakage(spec, psi_init, range(1, config.half + 1), times)
        result.leakage_rows = [{"seed": seed, "realization": realization, **entry}
                               for entry in curve.to_frame().to_dict("records")]
        result.spread_rows = [{"seed": seed, "realization": realization, "t": t, "variance": variance}
                              for t, variance in domain_wall_spread(spec, times)]

    logger.info(f"Realization {realization} (seed {seed}) done: "
                f"{len(result.rows)} rows, {sum(result.violations.values())} violations")
    return result


@dataclass
class ExperimentResult:
    config: RunConfig
    records: pd.DataFrame
    leakage: pd.DataFrame
    spread: pd.DataFrame
    bounds: pd.DataFrame
    violations: Dict[str, int]
    paths: Dict[str, Path] = field(default_factory=dict)


def _frame(rows: List[dict], columns: Sequence[str], order: Sequence[str]) -> pd.DataFrame:
    frame = pd.DataFrame(rows, columns=list(columns))
    if len(frame):
        frame = frame.sort_values(list(order), kind="mergesort").reset_index(drop=True)
    return frame


def run_experiment(config: RunConfig, write: bool = True) -> ExperimentResult:
    """Run every realization (in a process pool when workers > 1) and write the result files"""
    config.validate()
    logger.info(f"Running {config.ensemble_size} realizations of 2n={config.num_spins}, "
                f"T={config.depth}, mode {config.mode}, {config.workers} worker(s)")
    realizations = range(config.ensemble_size)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(run_realization, repeat(config), realizations))
    else:
        results = [run_realization(config, r) for r in realizations]

    violations: Dict[str, int] = {}
    for result in results:
        for name, count in result.violations.items():
            violations[name] = violations.get(name, 0) + count

    def gather(attr: str) -> List[dict]:
        return [row for result in results for row in getattr(result, attr)]

    experiment = ExperimentResult(
        config=config,
        records=_frame(gather("rows"), record_columns(config), ["realization", "t"]),
        leakage=_frame(gather("leakage_rows"), ["seed", "realization", "m", "t", "leakage"],
                       ["realization", "m", "t"]),
        spread=_frame(gather("spread_rows"), ["seed", "realization", "t", "variance"], ["realization", "t"]),
        bounds=_frame(gather("bound_rows"),
                      ["realization", "t", "m", "alpha", "measured", "bound", "s_prime", "vacuous", "violated"],
                      ["realization", "t", "alpha"]),
        violations=violations,
    )
    if write:
        experiment.paths["records"] = write_round_trip_csv(experiment.records, config.output_path)
        if config.wants_transport:
            experiment.paths["leakage"] = write_round_trip_csv(experiment.leakage, config.side_path("leakage.csv"))
            experiment.paths["spread"] = write_round_trip_csv(experiment.spread, config.side_path("spread.csv"))
    return experiment


@dataclass(frozen=True)
class GrowthFit:
    observable: str
    exponent: float
    ci_low: float
    ci_high: float
    t_lo: int
    t_hi: int
    saturation: float
    num_points: int
    prefactor: float

    def to_dict(self) -> dict:
        return asdict(self)


def _ensemble_curve(frame: pd.DataFrame, observable: str, averaging: str) -> pd.Series:
    if averaging == "log_then_mean":
        positive = frame[frame[observable] > 0]
        return np.exp(positive.groupby("t")[observable].apply(lambda v: np.mean(np.log(v))))
    return frame.groupby("t")[observable].mean()


def fit_growth(records: pd.DataFrame, observable: str, num_spins: int,
               averaging: str = "mean_then_log", bootstrap: int = 200, seed: int = 0) -> GrowthFit:
    """
    Slope of ln(ensemble entropy) against ln t inside the pre-saturation window
    1 <= t, 0 < entropy <= (n ln 2)/2, with a bootstrap over realizations.
    """
    if observable not in records.columns:
        raise InvalidArgumentError(f"No column {observable!r} in the records")
    saturation = SATURATION_FRACTION * (num_spins // 2) * math.log(2.0)
    curve = _ensemble_curve(records, observable, averaging)
    window = curve[(curve.index >= 1) & (curve > 0) & (curve <= saturation)]
    if len(window) < MIN_GROWTH_POINTS:
        raise FitUnavailableError(
            f"{observable}: {len(window)} points in the pre-saturation window, need {MIN_GROWTH_POINTS}")
    times = window.index.to_numpy(dtype=np.float64)
    exponent, intercept = fit_log_log_slope(times, window.to_numpy())

    ci_low = ci_high = exponent
    realizations = records["realization"].unique()
    if bootstrap > 0 and len(realizations) > 1:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, BOOTSTRAP_STREAM])))
        by_realization = {r: part for r, part in records.groupby("realization")}
        estimates = []
        for _ in range(bootstrap):
            picks = rng.choice(realizations, size=len(realizations), replace=True)
            sample = pd.concat([by_realization[r] for r in picks], ignore_index=True)
            resampled = _ensemble_curve(sample, observable, averaging).reindex(window.index)
            try:
                estimates.append(fit_log_log_slope(times, resampled.to_numpy())[0])
            except FitUnavailableError:
                continue
        if estimates:
            ci_low, ci_high = (float(v) for v in np.percentile(estimates, [2.5, 97.5]))

    fit = GrowthFit(observable, exponent, ci_low, ci_high, int(times.min()), int(times.max()),
                    saturation, len(window), float(np.exp(intercept)))
    logger.info(f"Growth fit {observable}: exponent {exponent:.3f} [{ci_low:.3f}, {ci_high:.3f}] "
                f"over t in [{fit.t_lo}, {fit.t_hi}]")
    return fit


def bound_curve(bounds: pd.DataFrame, alpha: float, m_exponent: float = 0.5) -> Optional[dict]:
    """
    Ensemble-mean bound and measured R_alpha per t, the constant C of
    bound ~ C t^z sqrt(ln t) (z = m_exponent) and the number of t where the
    mean measurement crosses either.
    """
    usable = bounds[(bounds["alpha"] == alpha) & bounds["bound"].notna()]
    if usable.empty:
        return None
    curve = usable.groupby("t").agg(bound=("bound", "mean"), measured=("measured", "mean"))
    t = curve.index.to_numpy(dtype=np.float64)
    growth = np.sqrt(t ** (2.0 * m_exponent) * np.log(np.maximum(t, 1.0)))
    fitted = growth > 0
    constant = float(np.sum(curve["bound"].to_numpy()[fitted] * growth[fitted]) / np.sum(growth[fitted] ** 2)) \
        if fitted.any() else math.nan
    return {
        "alpha": alpha_label(alpha),
        "t": [int(v) for v in curve.index],
        "bound": curve["bound"].tolist(),
        "measured": curve["measured"].tolist(),
        "constant": constant,
        "crossings": int(np.sum(curve["measured"].to_numpy() > curve["bound"].to_numpy())),
        "crossings_fitted": int(np.sum(curve["measured"].to_numpy()[fitted] > constant * growth[fitted])),
    }


def _transport_summary(experiment: ExperimentResult) -> dict:
    summary = {"leakage_fit": None, "domain_wall_slope": None}
    if experiment.leakage.empty:
        return summary
    curves = [LeakageCurve.from_frame(part) for _, part in experiment.leakage.groupby("realization")]
    try:
        fit = fit_diffusive_leakage(mean_leakage(curves))
        summary["leakage_fit"] = {
            "exponent_z": fit.exponent_z,
            "diffusion_coefficient_c": fit.diffusion_coefficient_c,
            "goodness": fit.goodness,
            "collapse_residual": fit.collapse_residual,
            "window": fit.window,
            "num_points": fit.num_points,
        }
    except FitUnavailableError as e:
        logger.warning(f"Leakage fit unavailable: {e}")
    spread = experiment.spread.groupby("t", as_index=False)["variance"].mean()
    spread = spread[spread["t"] >= 1]
    try:
        summary["domain_wall_slope"] = fit_log_log_slope(spread["t"], spread["variance"])[0]
    except FitUnavailableError as e:
        logger.warning(f"Domain-wall fit unavailable: {e}")
    return summary


@dataclass(frozen=True)
class Summary:
    report: str
    payload: dict
    exit_code: int


def emit_summary(experiment: ExperimentResult, write: bool = True) -> Summary:
    """Fits, violation counts and the bound curve, as printable text and as JSON"""
    config = experiment.config
    if experiment.records.empty:
        payload = {"schema_version": SCHEMA_VERSION, "status": "no data", "config": config.to_dict()}
        if write:
            write_json(payload, config.side_path("summary.json"))
        return Summary("❌ No data: the run produced no records", payload, EXIT_NO_DATA)

    lines = [f"Run summary: 2n={config.num_spins}, T={config.depth}, "
             f"{config.ensemble_size} realization(s), mode {config.mode}"]

    growth = {}
    for observable in ["vn"] + [alpha_column(a) for a in config.alphas]:
        try:
            fit = fit_growth(experiment.records, observable, config.num_spins,
                             config.averaging, config.bootstrap, config.master_seed)
            growth[observable] = fit.to_dict()
            lines.append(f"  {observable:>5}: exponent {fit.exponent:.3f} "
                         f"[{fit.ci_low:.3f}, {fit.ci_high:.3f}], t in [{fit.t_lo}, {fit.t_hi}]")
        except FitUnavailableError as e:
            logger.warning(f"Growth fit unavailable: {e}")
            growth[observable] = None
            lines.append(f"  {observable:>5}: fit unavailable")

    bound_violations = int(experiment.bounds["violated"].sum()) if not experiment.bounds.empty else 0
    curves = []
    if config.wants_proof:
        for alpha in config.alphas:
            curve = bound_curve(experiment.bounds, alpha, config.m_exponent)
            if curve is not None:
                curves.append(curve)
                lines.append(f"  bound curve R_{curve['alpha']}: C = {curve['constant']:.4f}, "
                             f"{curve['crossings']} crossing(s), {curve['crossings_fitted']} above C t^z sqrt(ln t)")

    violations = dict(sorted(experiment.violations.items()))
    violations["bound"] = bound_violations
    lines.append("Checks:")
    for name, count in violations.items():
        lines.append(f"  {'✅' if count == 0 else '❌'} {name}: {count} violation(s)")
    total = sum(violations.values())
    if total == 0:
        lines.append("✅ All inequalities hold")
    else:
        lines.append(f"❌ {total} violation(s) detected")

    payload = {
        "schema_version": SCHEMA_VERSION,
        "status": "ok" if total == 0 else "violations",
        "config": config.to_dict(),
        "rows": int(len(experiment.records)),
        "growth_fits": growth,
        "violations": violations,
        "bound_curves": curves,
    }
    if config.wants_transport:
        payload["transport"] = _transport_summary(experiment)
        leakage_fit = payload["transport"]["leakage_fit"]
        if leakage_fit:
            lines.insert(1, f"  leakage: c = {leakage_fit['diffusion_coefficient_c']:.4f}, "
                            f"z = {leakage_fit['exponent_z']:.2f}")
        if payload["transport"]["domain_wall_slope"] is not None:
            lines.insert(1, f"  domain-wall variance slope {payload['transport']['domain_wall_slope']:.3f}")

    if write:
        experiment.paths["summary"] = write_json(payload, config.side_path("summary.json"))
    return Summary("\n".join(lines), payload, EXIT_OK if total == 0 else EXIT_VIOLATION)


def records_violate_sandwich(records: pd.DataFrame, alphas: Sequence[float] = DEFAULT_ALPHAS) -> int:
    """Rows whose own columns break R_inf <= R_alpha <= alpha/(alpha-1) R_inf, as read back from a CSV"""
    r_inf = -2.0 * np.log(records["lambda1"].to_numpy())
    broken = np.zeros(len(records), dtype=bool)
    for alpha in alphas:
        column = alpha_column(alpha)
        if column not in records.columns:
            continue
        values = records[column].to_numpy()
        broken |= (values < r_inf - 1e-9) | (values > alpha_factor(alpha) * r_inf + 1e-9)
    return int(broken.sum())
