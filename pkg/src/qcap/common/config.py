import os
from dataclasses import dataclass, field, fields
from typing import Any, Dict, Optional

import yaml

from qcap.common.errors import DomainError, TrialBudgetError
from qcap.common.logger import logger

# numerical tolerances
HERMITICITY_TOL: float = 1e-10
PSD_TOL: float = 1e-9
TRACE_TOL: float = 1e-9
TIE_TOL: float = 1e-12
RANK_TOL: float = 1e-10
TP_TOL: float = 1e-9
KRAUS_DROP_TOL: float = 1e-12

# dense-matrix guard, total qubits of a sequence member
MAX_QUBITS: int = 12

# solver and search defaults
HMIN_TOL: float = 1e-7
HMIN_MAX_ITER: int = 500
OPERATOR_GRID_POINTS: int = 32
EXHAUSTIVE_TRUNCATION: int = 8
ORACLE_TRIALS: int = 64
SEARCH_TRIALS: int = 8
REFINE_STEPS: int = 8

# Monte-Carlo
DEFAULT_SEED: int = 0
MIN_TRIALS: int = 100

# information spectrum
TOL_WINDOW: float = 0.05
GAMMA_SPAN: float = 2.0
GAMMA_GRID_POINTS: int = 65
MAX_WIDEN: int = 4

ENV_THREADS: str = "ONESHOT_QCAP_THREADS"

COMMANDS = ("bounds", "entropy", "simulate", "spectrum", "per_use")


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit value, else the environment variable, else 1."""
    if threads is None:
        env = os.environ.get(ENV_THREADS)
        if env is None or env.strip() == "":
            return 1
        try:
            threads = int(env)
        except ValueError:
            logger.warning(f"ignore {ENV_THREADS}={env!r}, not an integer")
            return 1
    if threads < 1:
        raise DomainError(f"threads must be positive, got {threads}")
    return threads


def load_yaml_config(config_path: str) -> Dict[str, Any]:
    """Load a YAML file into a dict, an empty file gives an empty dict."""
    with open(config_path, "r") as file:
        config = yaml.safe_load(file)
    if config is None:
        return {}
    if not isinstance(config, dict):
        raise DomainError(f"{config_path} must contain a mapping at top level")
    return config


@dataclass
class RunConfig:
    """Everything one CLI command needs, after merging file and flags."""

    command: str
    channel_path: Optional[str] = None
    state_path: Optional[str] = None
    pair_path: Optional[str] = None
    sequence_path: Optional[str] = None
    epsilon: float = 0.1
    delta: float = 0.0
    seed: int = DEFAULT_SEED
    trials: int = 1000
    n_max: int = 3
    m: Optional[int] = None
    s: Optional[int] = None
    threads: Optional[int] = None
    search_trials: int = SEARCH_TRIALS
    refine_steps: int = REFINE_STEPS
    output_path: Optional[str] = None
    csv_path: Optional[str] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise DomainError(
                f"unknown command {self.command}, expected one of {', '.join(COMMANDS)}"
            )
        for name in ("channel_path", "state_path", "pair_path", "sequence_path"):
            path = getattr(self, name)
            if path is not None and not os.path.isfile(path):
                raise DomainError(f"{name}: file {path} does not exist")
        if not 0.0 <= self.epsilon <= 1.0:
            raise DomainError(f"epsilon must lie in [0, 1], got {self.epsilon}")
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError(f"delta must lie in [0, 1], got {self.delta}")
        if self.command == "simulate" and self.trials < MIN_TRIALS:
            raise TrialBudgetError(
                f"trials must be at least {MIN_TRIALS}, got {self.trials}"
            )
        if self.n_max < 1:
            raise DomainError(f"n_max must be positive, got {self.n_max}")
        if self.search_trials < 1 or self.refine_steps < 0:
            raise DomainError("search budget must have trials >= 1, refine_steps >= 0")
        self.threads = resolve_threads(self.threads)
        return self


def load_run_config(
    command: str, config_path: Optional[str] = None, **overrides
) -> RunConfig:
    """Build a validated RunConfig from an optional YAML file and CLI flags.

    Flags equal to None do not override file values. Unknown keys in the file
    are kept in ``extra``.

    Args:
        command (str): one of COMMANDS.
        config_path (str, optional): YAML file with RunConfig fields.
        **overrides: flag values from the command line.

    Returns:
        RunConfig: the validated configuration.
    """
    known = {f.name for f in fields(RunConfig)}
    values: Dict[str, Any] = {}
    extra: Dict[str, Any] = {}
    if config_path:
        for key, value in load_yaml_config(config_path).items():
            key = key.replace("-", "_")
            if key in known:
                values[key] = value
            else:
                extra[key] = value
    for key, value in overrides.items():
        if value is not None:
            values[key] = value
    values["command"] = command
    values.setdefault("extra", {}).update(extra)
    return RunConfig(**values).validate()
