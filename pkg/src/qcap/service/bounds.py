from qcap.common.config import RunConfig
from qcap.common.errors import DomainError
from qcap.common.logger import logger, timed
from qcap.quantum.capacity import SearchParams, bound_report
from qcap.service.loader import load_channel, write_document


def search_params(config: RunConfig) -> SearchParams:
    """Search budget of a run; ``code_dims``, ``oracle`` and ``delta_scan``
    may come from the YAML file."""
    extra = config.extra
    return SearchParams(
        trials=config.search_trials,
        refine_steps=config.refine_steps,
        seed=config.seed,
        code_dims=extra.get("code_dims"),
        threads=config.threads,
        oracle=bool(extra.get("oracle", False)),
        delta_scan=int(extra.get("delta_scan", 0)),
    )


def run_bounds(config: RunConfig) -> dict:
    """
    Compute the capacity bracket of one channel and write the report.

    Args:
        config (RunConfig): needs ``channel_path`` and ``epsilon``.

    Returns:
        dict: the report document.
    """
    if not config.channel_path:
        raise DomainError("bounds needs --channel")
    channel = load_channel(config.channel_path)
    with timed("bounds"):
        report = bound_report(channel, config.epsilon, search_params(config))
    logger.info(
        f"eps={config.epsilon}: lower {report.lower_bits:.6f}, upper {report.upper_bits:.6f}"
    )
    document = {
        "command": "bounds",
        "channel": {
            "in_dim": channel.in_dim,
            "out_dim": channel.out_dim,
            "kraus_rank": channel.kraus_rank,
        },
        "seed": config.seed,
        "report": report,
    }
    write_document(document, "bound_report", config.output_path)
    return document
