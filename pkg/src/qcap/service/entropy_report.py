from typing import List

from qcap.common.config import DEFAULT_SEED, RunConfig
from qcap.common.errors import DomainError, OrthogonalityError
from qcap.common.hardware.cpu import parallel_map
from qcap.common.logger import logger, timed
from qcap.common.utils import UNBOUNDED
from qcap.quantum.entropy import (
    coherent_information,
    cond_H0,
    cond_H2,
    cond_Hmin,
    dmax,
    mutual_information,
    quasi_entropy,
    relative_entropy,
)
from qcap.quantum.smoothing import smooth_Ic0_operator, smooth_Ic0_state, smooth_Ic2_state
from qcap.service.loader import load_states, write_lines


def _quasi(state: dict, alpha: float):
    try:
        return quasi_entropy(state["rho"], state["sigma"], alpha, state["p"])
    except OrthogonalityError as e:
        logger.debug(f"alpha={alpha}: {e}")
        return UNBOUNDED


def entropy_record(
    index: int, state: dict, delta: float = 0.0, seed: int = DEFAULT_SEED
) -> dict:
    """
    Every entropic quantity the inputs of one record allow.

    Conditional entropies need ``factors``; relative quantities need ``sigma``.
    A record's own ``delta`` takes precedence over the command-line one.

    Args:
        index (int): position in the input file.
        state (dict): output of ``state_from_record``.
        delta (float, optional): smoothing radius for the smoothed values.
        seed (int, optional): seed of the state-ball oracle.

    Returns:
        dict: the entropy record.
    """
    rho, factors = state["rho"], state["factors"]
    delta = state["delta"] or delta
    record = {"index": index, "dim": rho.shape[0]}
    if factors is not None:
        record["factors"] = factors.to_dict()
        record["cond_H0"] = cond_H0(rho, factors)
        record["cond_H2"] = cond_H2(rho, factors)
        record["cond_Hmin"] = cond_Hmin(rho, factors)
        record["coherent_information"] = coherent_information(rho, factors)
        record["mutual_information"] = mutual_information(rho, factors)
        if delta > 0:
            record["smoothed"] = {
                "delta": delta,
                "Ic0_state": smooth_Ic0_state(rho, factors, delta, seed=seed),
                "Ic0_operator": smooth_Ic0_operator(rho, factors, delta),
                "Ic2_state": smooth_Ic2_state(rho, factors, delta),
            }
    if state["sigma"] is not None:
        bad = [a for a in state["alphas"] if a < 0]
        if bad:
            raise DomainError(f"record {index}: alphas must be nonnegative, got {bad}")
        record["relative_entropy"] = relative_entropy(rho, state["sigma"])
        record["dmax"] = dmax(rho, state["sigma"])
        record["quasi"] = [
            {"alpha": a, "value": _quasi(state, a)} for a in state["alphas"]
        ]
    return record


def _record_task(task) -> dict:
    return entropy_record(*task)


def run_entropy(config: RunConfig) -> List[dict]:
    """Evaluate every record of ``--state`` and write one JSON line each."""
    if not config.state_path:
        raise DomainError("entropy needs --state")
    tasks = [
        (index, state, config.delta, config.seed)
        for index, state in load_states(config.state_path)
    ]
    with timed("entropy records"):
        records = parallel_map(_record_task, tasks, config.threads)
    logger.info(f"{len(records)} entropy records")
    write_lines(records, "entropy_record", config.output_path)
    return records
