from qcap.common.config import RunConfig
from qcap.common.errors import DomainError
from qcap.common.logger import logger, timed
from qcap.quantum.channel import CodeSubspace
from qcap.quantum.coding import pruning_check, verify_random_coding
from qcap.service.loader import load_channel, write_document

PRUNING_SAMPLES = 200
PRUNING_RESTARTS = 10


def run_simulate(config: RunConfig) -> dict:
    """
    Monte-Carlo random-coding run on the first s input levels.

    s defaults to the input dimension and m to s. An even m also gets a
    pruning check with the Uhlmann decoder of the rank-m code.

    Args:
        config (RunConfig): needs ``channel_path``; uses m, s, delta, trials,
            seed and threads.

    Returns:
        dict: the coding report document.
    """
    if not config.channel_path:
        raise DomainError("simulate needs --channel")
    channel = load_channel(config.channel_path)
    s = config.s or channel.in_dim
    m = config.m or s
    if not 1 <= s <= channel.in_dim:
        raise DomainError(f"s={s} must lie in [1, {channel.in_dim}]")
    subspace = CodeSubspace.first(channel.in_dim, s)
    with timed(f"{config.trials} random-coding trials"):
        report = verify_random_coding(
            channel, subspace, m, config.delta, config.trials, config.seed, config.threads
        )
    document = {
        "command": "simulate",
        "channel": {
            "in_dim": channel.in_dim,
            "out_dim": channel.out_dim,
            "kraus_rank": channel.kraus_rank,
        },
        "subspace": subspace,
        "random_coding": report,
    }
    if m % 2 == 0:
        document["pruning"] = pruning_check(
            channel,
            subspace,
            m,
            samples=PRUNING_SAMPLES,
            restarts=PRUNING_RESTARTS,
            seed=config.seed,
        )
    if not report.passes:
        logger.warning("Monte-Carlo estimate below the random-coding guarantee")
    write_document(document, "coding_report", config.output_path)
    return document
