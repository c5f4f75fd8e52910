import sys
from enum import Enum, unique
from functools import wraps
from typing import List, Optional

import numpy as np
from rich.console import Console

from qcap.common.errors import QcapError
from qcap.common.logger import logger

err_console = Console(stderr=True)


class Unbounded(float):
    """+inf returned on purpose, e.g. for support violations.

    It compares and adds like ``float("inf")`` but ``is_unbounded`` tells it
    apart from an ``inf`` produced by overflow. Negation keeps the sentinel,
    so ``-UNBOUNDED`` is the unbounded value of a negated quantity such as
    H_min = −D_max.
    """

    def __new__(cls, sign: int = 1):
        return super().__new__(cls, "inf" if sign > 0 else "-inf")

    def __neg__(self) -> "Unbounded":
        return Unbounded(-1 if self > 0 else 1)

    def __pos__(self) -> "Unbounded":
        return self

    def __repr__(self) -> str:
        return "UNBOUNDED" if self > 0 else "-UNBOUNDED"

    def __reduce__(self):
        return (Unbounded, (1 if self > 0 else -1,))


UNBOUNDED = Unbounded()


def is_unbounded(value) -> bool:
    return isinstance(value, Unbounded)


@unique
class BallKind(Enum):
    state_ball = "state_ball"
    operator_ball = "operator_ball"

    def __str__(self) -> str:
        return self.value


@unique
class SmoothingMethod(Enum):
    heuristic = "heuristic"
    oracle = "oracle"
    exact = "exact"

    def __str__(self) -> str:
        return self.value


@unique
class Objective(Enum):
    """Subspace search objectives, larger is better for all of them."""

    ic0_state = "Ic0_state"
    ic0_operator = "Ic0_operator"
    ic2 = "Ic2"
    coherent_info = "coherent_info"

    def __str__(self) -> str:
        return self.value


@unique
class SequenceKind(Enum):
    iid = "iid"
    markov_depolarizing = "markov_depolarizing"

    def __str__(self) -> str:
        return self.value


def spawn_seeds(seed: int, count: int) -> List[np.random.SeedSequence]:
    """One independent child seed per trial index."""
    return np.random.SeedSequence(seed).spawn(count)


def make_rng(
    seed: Optional[int | np.random.SeedSequence | np.random.Generator] = None,
) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def exit_on_error(func):
    """
    Decorator for CLI commands, maps failures to exit codes.

    KeyboardInterrupt exits with 0, a QcapError exits with its ``exit_code``
    after printing the message to stderr.

    Args:
        func: The command to be decorated.

    Returns:
        The decorated command.
    """

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except KeyboardInterrupt:
            err_console.print("Cancelled by user")
            sys.exit(0)
        except QcapError as e:
            logger.error(f"{type(e).__name__}: {e}")
            err_console.print(f"[red]{type(e).__name__}[/red]: {e}")
            sys.exit(e.exit_code)

    return wrapper
