"""
Run configuration for simulation batches
Supports built-in defaults, a key=value config file, SIMULATE_* environment variables and CLI flags
"""
# Standard library imports
from dataclasses import asdict, dataclass, replace
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

# Third-party library imports
from dotenv import dotenv_values, load_dotenv

# Local imports
from errors import ConfigError
from statevector_core import MAX_SPINS

logger = logging.getLogger(__name__)

MODES = ("entropy", "transport", "proof", "all")
CIRCUITS = ("haar", "identity")
AVERAGING = ("mean_then_log", "log_then_mean")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

ENV_WORKERS = "SIMULATE_WORKERS"
ENV_LOG_LEVEL = "SIMULATE_LOG_LEVEL"


@dataclass(frozen=True)
class RunConfig:
    """Everything a batch run needs; validate() before use"""

    num_spins: int = 12
    depth: int = 20
    ensemble_size: int = 10
    master_seed: int = 0
    alphas: Tuple[float, ...] = (2.0, 3.0, math.inf)
    measure_every: int = 1
    mode: str = "entropy"
    m_const: float = 2.0
    m_exponent: float = 0.5
    p_degree: int = 2
    workers: int = 1
    output_path: Path = Path("results/run.csv")
    circuit: str = "haar"
    averaging: str = "mean_then_log"
    bootstrap: int = 200
    strict_parity: bool = False
    log_level: str = "INFO"

    @property
    def half(self) -> int:
        return self.num_spins // 2

    @property
    def wants_proof(self) -> bool:
        return self.mode in ("proof", "all")

    @property
    def wants_transport(self) -> bool:
        return self.mode in ("transport", "all")

    def side_path(self, suffix: str) -> Path:
        """Sibling output file, e.g. results/run.leakage.csv for suffix 'leakage.csv'"""
        return self.output_path.with_name(f"{self.output_path.stem}.{suffix}")

    def validate(self) -> "RunConfig":
        checks = [
            (4 <= self.num_spins <= MAX_SPINS and self.num_spins % 2 == 0,
             f"spins must be even and in [4, {MAX_SPINS}], got {self.num_spins}"),
            (self.depth >= 1, f"depth must be >= 1, got {self.depth}"),
            (self.ensemble_size >= 1, f"ensemble must be >= 1, got {self.ensemble_size}"),
            (0 <= self.master_seed < 2 ** 64, f"seed must be a 64-bit unsigned integer, got {self.master_seed}"),
            (len(self.alphas) > 0 and all(a > 1 for a in self.alphas),
             f"alphas must all be > 1 (von Neumann is always reported), got {self.alphas}"),
            (len(set(self.alphas)) == len(self.alphas), f"alphas must be distinct, got {self.alphas}"),
            (self.measure_every >= 1, f"measure-every must be >= 1, got {self.measure_every}"),
            (self.mode in MODES, f"mode must be one of {MODES}, got {self.mode!r}"),
            (self.m_const > 0, f"m-const must be positive, got {self.m_const}"),
            (self.m_exponent > 0, f"m-exponent must be positive, got {self.m_exponent}"),
            (self.p_degree >= 0, f"p-degree must be >= 0, got {self.p_degree}"),
            (self.workers >= 1, f"workers must be >= 1, got {self.workers}"),
            (self.circuit in CIRCUITS, f"circuit must be one of {CIRCUITS}, got {self.circuit!r}"),
            (self.averaging in AVERAGING, f"averaging must be one of {AVERAGING}, got {self.averaging!r}"),
            (self.bootstrap >= 0, f"bootstrap must be >= 0, got {self.bootstrap}"),
            (self.log_level in LOG_LEVELS, f"log level must be one of {LOG_LEVELS}, got {self.log_level!r}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        if self.strict_parity and self.wants_proof and self.half % 2 == 0:
            raise ConfigError(f"strict-parity proof runs need odd n, got n = {self.half}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        values = asdict(self)
        values["output_path"] = str(self.output_path)
        values["alphas"] = [alpha_label(a) for a in self.alphas]
        return values


def parse_alphas(text: str) -> Tuple[float, ...]:
    """'2,3,inf' -> (2.0, 3.0, inf)"""
    alphas = []
    for token in str(text).split(","):
        token = token.strip().lower()
        if not token:
            continue
        try:
            alphas.append(math.inf if token in ("inf", "infinity") else float(token))
        except ValueError:
            raise ConfigError(f"Invalid alpha {token!r}")
    return tuple(alphas)


def alpha_label(alpha: float) -> str:
    return "inf" if alpha == math.inf else f"{alpha:g}"


def alpha_column(alpha: float) -> str:
    """CSV column for R_alpha: r2, r3, rinf, r2.5"""
    return f"r{alpha_label(alpha)}"


def _parse_bool(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"Invalid boolean {text!r}")


# Config-file key (long flag name with '-' or '_') -> (field, parser)
_KEYS = {
    "spins": ("num_spins", int),
    "depth": ("depth", int),
    "ensemble": ("ensemble_size", int),
    "seed": ("master_seed", int),
    "alphas": ("alphas", parse_alphas),
    "mode": ("mode", str),
    "measure_every": ("measure_every", int),
    "m_const": ("m_const", float),
    "m_exponent": ("m_exponent", float),
    "p_degree": ("p_degree", int),
    "workers": ("workers", int),
    "out": ("output_path", Path),
    "circuit": ("circuit", str),
    "log_then_mean": ("averaging", lambda text: "log_then_mean" if _parse_bool(text) else "mean_then_log"),
    "bootstrap": ("bootstrap", int),
    "strict_parity": ("strict_parity", _parse_bool),
    "log_level": ("log_level", lambda text: str(text).strip().upper()),
}


def _coerce(source: str, raw: Mapping[str, Optional[str]]) -> Dict[str, Any]:
    values = {}
    for key, text in raw.items():
        normalized = key.strip().lower().replace("-", "_")
        if normalized not in _KEYS:
            raise ConfigError(f"Unknown key {key!r} in {source}")
        if text is None:
            raise ConfigError(f"Key {key!r} in {source} has no value")
        name, parser = _KEYS[normalized]
        try:
            values[name] = parser(text.strip())
        except ValueError as e:
            raise ConfigError(f"Invalid value {text!r} for {key!r} in {source}: {e}") from e
    return values


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Flat key=value file; keys are the long flag names"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file {path} not found")
    return _coerce(str(path), dotenv_values(path))


def environment_overrides() -> Dict[str, Any]:
    """SIMULATE_WORKERS and SIMULATE_LOG_LEVEL, also read from a local .env"""
    load_dotenv()
    raw = {}
    if os.getenv(ENV_WORKERS):
        raw["workers"] = os.getenv(ENV_WORKERS)
    if os.getenv(ENV_LOG_LEVEL):
        raw["log_level"] = os.getenv(ENV_LOG_LEVEL)
    return _coerce("environment", raw)


def build_config(flags: Optional[Mapping[str, Any]] = None,
                 config_path: Optional[Union[str, Path]] = None,
                 use_environment: bool = True) -> RunConfig:
    """
    Merge defaults < config file < environment < flags.

    `flags` maps RunConfig field names to values; None entries mean "not given".
    """
    values: Dict[str, Any] = {}
    if config_path is not None:
        values.update(read_config_file(config_path))
        logger.debug(f"Loaded {len(values)} settings from {config_path}")
    if use_environment:
        values.update(environment_overrides())
    for name, value in (flags or {}).items():
        if value is None:
            continue
        if name not in RunConfig.__dataclass_fields__:
            raise ConfigError(f"Unknown setting {name!r}")
        values[name] = value
    if "output_path" in values:
        values["output_path"] = Path(values["output_path"])
    if "alphas" in values:
        values["alphas"] = tuple(float(a) for a in values["alphas"])
    return RunConfig(**values).validate()


def with_overrides(config: RunConfig, **changes) -> RunConfig:
    return replace(config, **changes).validate()
