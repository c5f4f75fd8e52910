from qcap.common.config import RunConfig
from qcap.common.errors import DomainError
from qcap.common.export import export_table
from qcap.common.logger import logger
from qcap.quantum.spectrum import (
    BipartiteSequence,
    coherent_rate_table,
    rate_windows,
    stein_trend,
    window_table,
)
from qcap.service.loader import load_pair, load_sequence, write_document


def _pair_table(spec: dict, threads: int = 1):
    target = spec["target"]
    grid, tol = spec["gamma_grid"], spec["tol_window"]
    match spec["kind"]:
        case "iid":
            df = stein_trend(target, spec["n"], grid, tol, strict=False, threads=threads)
        case "markov":
            df = window_table(rate_windows(target, spec["n"], grid, tol, threads))
        case "coherent":
            df = coherent_rate_table(target, spec["n"], grid, tol, threads)
        case _:
            raise ValueError(f"Unsupported pair kind: {spec['kind']}")
    return df


def run_spectrum(config: RunConfig) -> dict:
    """
    Transition windows of a ``--pair`` file, or the spectral coherent rates of
    a ``--sequence`` file for n = 1..n_max.

    Returns:
        dict: the window table document.
    """
    if config.pair_path:
        spec = load_pair(config.pair_path)
        kind = spec["kind"]
        df = _pair_table(spec, config.threads)
    elif config.sequence_path:
        sequence = load_sequence(config.sequence_path, config.n_max)
        kind = "coherent"
        df = coherent_rate_table(
            BipartiteSequence.from_channel_sequence(sequence),
            range(1, config.n_max + 1),
            threads=config.threads,
        )
    else:
        raise DomainError("spectrum needs --pair or --sequence")
    export_table(df, config.csv_path)
    document = {"command": "spectrum", "kind": kind, "windows": df}
    if "distance" in df:
        document["trend_holds"] = bool(
            len(df) < 2 or df["distance"].iloc[-1] < df["distance"].iloc[0]
        )
    logger.info(f"{len(df)} windows")
    write_document(document, "window_table", config.output_path)
    return document
