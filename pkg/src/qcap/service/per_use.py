from qcap.common.config import RunConfig
from qcap.common.errors import DomainError
from qcap.common.export import export_table
from qcap.common.logger import timed
from qcap.quantum.capacity import per_use_rates
from qcap.service.bounds import search_params
from qcap.service.loader import load_sequence, write_document


def run_per_use(config: RunConfig) -> dict:
    """Capacity bounds per channel use of Φ_1..Φ_{n_max} of a ``--sequence``."""
    if not config.sequence_path:
        raise DomainError("per_use needs --sequence")
    sequence = load_sequence(config.sequence_path, config.n_max)
    with timed(f"per-use rates up to n={config.n_max}"):
        df = per_use_rates(sequence, config.epsilon, config.n_max, search_params(config))
    export_table(df, config.csv_path)
    document = {
        "command": "per_use",
        "epsilon": config.epsilon,
        "sequence": sequence.to_dict(),
        "rows": df,
    }
    write_document(document, "rate_table", config.output_path)
    return document
