"""Process settings from the environment and experiment configuration from TOML files"""

import dataclasses
import logging
import math
import os
import tomllib
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from .errors import ConfigError, InvalidDistributionError
from .models import SignatureDistribution

logger = logging.getLogger(__name__)

LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()
SUPPORT_CAP = int(os.environ.get("SIGCODE_SUPPORT_CAP", "1000000"))
ENUM_CAP = int(os.environ.get("SIGCODE_ENUM_CAP", "10000000"))
# log-det evaluations allowed for one exact rate evaluation
RATE_CAP = int(os.environ.get("SIGCODE_RATE_CAP", "1000000"))
WORKERS = max(1, int(os.environ.get("SIGCODE_WORKERS", "1")))

COMMANDS = ("smg", "rate", "design", "infer", "optimality", "figures")
FIGURES = ("smg-vs-users", "scheme-rates", "best-epsilon", "scheme-gains", "nu-sweep", "mg-vs-nu")
# short figure ids accepted for the descriptive names
FIGURE_ALIASES = {"fig2": "smg-vs-users", "f5": "scheme-rates", "f8": "best-epsilon", "f77": "nu-sweep", "f77c": "mg-vs-nu"}
OUTPUT_FORMATS = ("csv", "json")
RATE_MODES = ("exact", "sampled")


def db_to_linear(gamma_db: float) -> float:
    return 10.0 ** (gamma_db / 10.0)


@dataclass
class ExperimentConfig:
    """Resolved settings of one CLI run"""

    command: str = "smg"
    figure: Optional[str] = None

    # distribution
    K: int = 2
    alphabet: Tuple[int, ...] = (-1, 1)
    pmf: Optional[Tuple[float, ...]] = None
    nu: float = 0.5
    epsilon: float = 1.0

    # network
    n: int = 2
    own_gain_sq: Optional[float] = None
    cross_gains_sq: Optional[Tuple[float, ...]] = None

    # snr (dB)
    gamma_db: float = 30.0
    gamma_db_start: float = 0.0
    gamma_db_stop: float = 60.0
    gamma_db_step: float = 10.0

    # monte carlo
    mode: str = "exact"
    mc_draws: int = 2000
    trials: int = 10000
    seed: int = 0

    # design
    K_values: Tuple[int, ...] = (1, 2, 3, 4)
    nu_step: float = 0.02
    epsilon_values: Tuple[float, ...] = (1.0,)

    # inference
    case: Optional[int] = None
    infer_draws: int = 10

    # smg queries
    two_user_optimum: bool = False
    masking_only_optimum: bool = False
    n_max: int = 8

    # output
    output_path: Optional[str] = None
    output_format: str = "csv"

    def distribution(self) -> SignatureDistribution:
        alphabet = tuple(self.alphabet)
        if self.pmf is not None:
            pmf = tuple(self.pmf)
        elif set(alphabet) == {-1, 1}:
            return SignatureDistribution.binary(self.K, nu=self.nu, epsilon=self.epsilon)
        else:
            pmf = tuple([1.0 / len(alphabet)] * len(alphabet))
        return SignatureDistribution(alphabet=alphabet, pmf=pmf, epsilon=self.epsilon, K=self.K)

    @property
    def gamma(self) -> float:
        return db_to_linear(self.gamma_db)

    def gamma_db_values(self) -> List[float]:
        count = int(math.floor((self.gamma_db_stop - self.gamma_db_start) / self.gamma_db_step + 1e-9)) + 1
        return [round(self.gamma_db_start + i * self.gamma_db_step, 10) for i in range(count)]

    def nu_grid(self) -> Tuple[float, ...]:
        steps = int(round(1.0 / self.nu_step))
        return tuple(round(i * self.nu_step, 10) for i in range(1, steps))

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _coerce(name: str, value: Any) -> Any:
    """Convert a TOML value or a command-line string to the field's type."""
    default = _FIELDS[name].default
    if value is None:
        return None
    if name == "figure":
        return FIGURE_ALIASES.get(value, value)
    if isinstance(value, str) and name not in ("command", "figure", "mode", "output_path", "output_format"):
        text = value.strip()
        if text.lower() in ("none", "null", ""):
            return None
        if isinstance(default, bool):
            if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"{name}: expected a boolean, got {value!r}")
            return text.lower() in ("true", "1", "yes")
        if isinstance(default, tuple) or name in ("pmf", "cross_gains_sq"):
            value = [part for part in text.strip("()[]").split(",") if part.strip()]
        else:
            value = text
    try:
        if name in ("alphabet", "K_values"):
            return tuple(int(v) for v in value)
        if name in ("pmf", "cross_gains_sq", "epsilon_values"):
            return tuple(float(v) for v in value)
        if isinstance(default, bool):
            return bool(value)
        if name in ("case",) or isinstance(default, int):
            return int(value)
        if name in ("own_gain_sq",) or isinstance(default, float):
            return float(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name}: cannot interpret {value!r} ({e})")
    return value


def _flatten(document: Mapping[str, Any]) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in document.items():
        if isinstance(value, dict):
            flat.update(_flatten(value))
        else:
            flat[key] = value
    return flat


def load_config(path: Optional[str] = None, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """Defaults < TOML file < overrides. Unknown keys are rejected."""
    values: Dict[str, Any] = {}
    if path:
        try:
            with open(path, "rb") as f:
                values.update(_flatten(tomllib.load(f)))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"config file {path} is not valid TOML: {e}")
        logger.debug(f"Loaded {len(values)} settings from {path}")
    values.update(overrides or {})

    unknown = sorted(set(values) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    return ExperimentConfig(**{name: _coerce(name, value) for name, value in values.items()})


def parse_overrides(pairs: List[str]) -> Dict[str, str]:
    """Turn ['key=value', ...] into a mapping."""
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value
    return overrides


def validate(config: ExperimentConfig) -> List[str]:
    """Every violated constraint, as a list of messages. Never runs anything."""
    violations = []
    if config.command not in COMMANDS:
        violations.append(f"command must be one of {COMMANDS}, got {config.command!r}")
    if config.command == "figures" and config.figure not in FIGURES:
        violations.append(f"figure must be one of {FIGURES}, got {config.figure!r}")
    if config.K < 1:
        violations.append(f"K must be >= 1, got {config.K}")
    if config.n < 1:
        violations.append(f"n must be >= 1, got {config.n}")
    if config.command in ("rate", "infer") and config.n < 2:
        violations.append(f"{config.command} needs at least two users, got n={config.n}")
    if not (0.0 < config.epsilon <= 1.0):
        violations.append(f"epsilon must lie in (0, 1], got {config.epsilon}")
    if not (0.0 <= config.nu <= 1.0):
        violations.append(f"nu must lie in [0, 1], got {config.nu}")
    try:
        dist = config.distribution()
    except InvalidDistributionError as e:
        violations.append(f"distribution: {e}")
    else:
        support = len(dist.symbols) ** dist.K
        if config.command == "rate" and config.mode == "exact" and support > SUPPORT_CAP:
            violations.append(
                f"support size {support} exceeds SIGCODE_SUPPORT_CAP={SUPPORT_CAP}; use mode=sampled"
            )
    if config.cross_gains_sq is not None:
        if len(config.cross_gains_sq) != config.n - 1:
            violations.append(
                f"cross_gains_sq needs n-1={config.n - 1} entries, got {len(config.cross_gains_sq)}"
            )
        if config.own_gain_sq is None:
            violations.append("cross_gains_sq given without own_gain_sq")
    for name in ("own_gain_sq",):
        value = getattr(config, name)
        if value is not None and (not math.isfinite(value) or value < 0):
            violations.append(f"{name} must be finite and nonnegative, got {value}")
    if config.cross_gains_sq and any(not math.isfinite(g) or g < 0 for g in config.cross_gains_sq):
        violations.append("cross_gains_sq entries must be finite and nonnegative")
    if not math.isfinite(config.gamma_db):
        violations.append(f"gamma_db must be finite, got {config.gamma_db}")
    if config.gamma_db_step <= 0 or config.gamma_db_stop < config.gamma_db_start:
        violations.append("gamma_db range needs step > 0 and stop >= start")
    if config.mode not in RATE_MODES:
        violations.append(f"mode must be one of {RATE_MODES}, got {config.mode!r}")
    if config.mc_draws < 2:
        violations.append(f"mc_draws must be >= 2, got {config.mc_draws}")
    if config.trials < 2:
        violations.append(f"trials must be >= 2, got {config.trials}")
    if config.seed < 0:
        violations.append(f"seed must be nonnegative, got {config.seed}")
    if not config.K_values or any(k < 1 for k in config.K_values):
        violations.append(f"K_values must be positive, got {config.K_values}")
    if not (0.0 < config.nu_step < 1.0):
        violations.append(f"nu_step must lie in (0, 1), got {config.nu_step}")
    if not config.epsilon_values or any(not (0.0 < e <= 1.0) for e in config.epsilon_values):
        violations.append(f"epsilon_values must lie in (0, 1], got {config.epsilon_values}")
    if config.case is not None and config.case not in (1, 2, 3, 4):
        violations.append(f"case must be 1, 2, 3 or 4, got {config.case}")
    if config.infer_draws < 1:
        violations.append(f"infer_draws must be >= 1, got {config.infer_draws}")
    if config.n_max < 2:
        violations.append(f"n_max must be >= 2, got {config.n_max}")
    if config.output_format not in OUTPUT_FORMATS:
        violations.append(f"output_format must be one of {OUTPUT_FORMATS}, got {config.output_format!r}")
    return violations
