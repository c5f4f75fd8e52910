"""Input files: channels, states, spectrum pairs and channel sequences.

Every file is JSON and validated against its schema before it is turned into
library objects. Parse errors carry the line and column, schema errors the
path of the offending field.
"""

import json
import os
import sys
from typing import Iterator, List, Optional, Tuple

import numpy as np

from qcap.common.config import TOL_WINDOW
from qcap.common.errors import ChannelFormatError, DimensionError, DomainError
from qcap.common.export import (
    dump_json,
    matrix_from_json,
    validate_document,
    vector_from_json,
)
from qcap.common.logger import logger
from qcap.quantum.channel import (
    ChannelSequence,
    KrausChannel,
    guard_dimension,
    memory_sequence,
)
from qcap.quantum.qmatrix import FactorSpec, ket_to_dm
from qcap.quantum.spectrum import BipartiteSequence, SequencePair


def _parse(text: str, path: str, offset: int = 0):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ChannelFormatError(
            f"{path}: line {e.lineno + offset}, column {e.colno}: {e.msg}"
        ) from None


def load_json_file(path: str, schema_name: str):
    """Read one JSON document and validate it."""
    with open(path, "r") as f:
        document = _parse(f.read(), path)
    return validate_document(document, schema_name)


def load_json_records(path: str, schema_name: str) -> Iterator[Tuple[int, dict]]:
    """One JSON object, or one object per non-empty line (JSON lines)."""
    with open(path, "r") as f:
        text = f.read()
    try:
        yield 0, validate_document(json.loads(text), schema_name)
        return
    except json.JSONDecodeError:
        pass
    index = 0
    for lineno, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        yield index, validate_document(_parse(line, path, lineno), schema_name)
        index += 1


def channel_from_document(document: dict, where: str = "channel") -> KrausChannel:
    """Kraus channel of a schema-valid document.

    Shape and trace-preservation failures are format errors of the file, the
    message names the offending field under ``where``.
    """
    try:
        channel = KrausChannel.from_dict(document)
    except (DimensionError, DomainError) as e:
        field = str(e) if str(e).startswith("kraus") else f"kraus: {e}"
        raise ChannelFormatError(f"{where}: {field}") from None
    guard_dimension(channel.in_dim * channel.out_dim, 1)
    return channel


def load_channel(path: str) -> KrausChannel:
    channel = channel_from_document(load_json_file(path, "channel"), path)
    logger.info(f"loaded {channel} from {path}")
    return channel


def _operator(document: dict, key: str, where: str) -> Optional[np.ndarray]:
    """A density matrix or, under ``<key>_ket``, a pure state."""
    if key in document:
        return matrix_from_json(document[key], f"{where}.{key}")
    if f"{key}_ket" in document:
        return ket_to_dm(vector_from_json(document[f"{key}_ket"], f"{where}.{key}_ket"))
    return None


def state_from_record(record: dict, where: str = "state") -> dict:
    """Operators of one entropy record, with factors checked against ρ."""
    rho = _operator(record, "rho", where)
    if rho is None:
        raise ChannelFormatError(f"{where}: needs 'rho' or 'rho_ket'")
    factors = None
    if "factors" in record:
        factors = FactorSpec.from_dict(record["factors"])
    elif "dims" in record:
        factors = FactorSpec.bipartite(*record["dims"])
    if factors is not None and factors.dim != rho.shape[0]:
        raise DimensionError(f"{where}: factors {factors.dims} do not fit ρ of dim {rho.shape[0]}")
    return {
        "rho": rho,
        "factors": factors,
        "sigma": _operator(record, "sigma", where),
        "p": _operator(record, "p", where),
        "alphas": [float(a) for a in record.get("alphas", [])],
        "delta": float(record.get("delta", 0.0)),
    }


def load_states(path: str) -> Iterator[Tuple[int, dict]]:
    for index, record in load_json_records(path, "state"):
        yield index, state_from_record(record, f"{path}[{index}]")


def load_sequence(path: str, n_max: Optional[int] = None) -> ChannelSequence:
    document = load_json_file(path, "sequence")
    n = int(document.get("n_max", 1) if n_max is None else n_max)
    return memory_sequence(document["kind"], document["params"], n)


def load_pair(path: str) -> dict:
    """Spectrum input: an iid or markov pair, or an iid bipartite state."""
    document = load_json_file(path, "pair")
    n_list: List[int] = [int(n) for n in document.get("n", [4, 6, 8])]
    n_max = max(n_list)
    kind = document.get("kind", "iid")
    grid = document.get("gamma_grid")
    if grid is not None:
        grid = np.linspace(grid["lo"], grid["hi"], int(grid["points"]))
    match kind:
        case "iid":
            rho = _operator(document, "rho", path)
            sigma = _operator(document, "sigma", path)
            target = SequencePair.iid(rho, sigma, n_max)
        case "markov":
            sequence = memory_sequence(
                document["sequence"]["kind"], document["sequence"]["params"], n_max
            )
            target = SequencePair.markov(
                sequence, _operator(document, "rho_in", path), _operator(document, "sigma", path)
            )
        case "coherent":
            rho = _operator(document, "rho", path)
            target = BipartiteSequence.iid(rho, tuple(document["dims"]), n_max)
        case _:
            raise ValueError(f"Unsupported pair kind: {kind}")
    return {
        "kind": kind,
        "target": target,
        "n": n_list,
        "gamma_grid": grid,
        "tol_window": float(document.get("tol_window", TOL_WINDOW)),
    }


def write_document(document, schema_name: str, output_path: Optional[str] = None) -> str:
    """Validate a report, then write it to ``output_path`` or stdout."""
    text = dump_json(document)
    validate_document(json.loads(text), schema_name)
    if output_path:
        folder = os.path.dirname(output_path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        with open(output_path, "w") as f:
            f.write(text + "\n")
        logger.info(f"report written to {output_path}")
    else:
        sys.stdout.write(text + "\n")
    return text


def write_lines(documents, schema_name: str, output_path: Optional[str] = None) -> str:
    """JSON lines, one validated compact document per line."""
    lines = []
    for document in documents:
        text = dump_json(document, indent=None)
        validate_document(json.loads(text), schema_name)
        lines.append(text)
    text = "\n".join(lines) + "\n"
    if output_path:
        folder = os.path.dirname(output_path)
        if folder:
            os.makedirs(folder, exist_ok=True)
        with open(output_path, "w") as f:
            f.write(text)
        logger.info(f"{len(lines)} records written to {output_path}")
    else:
        sys.stdout.write(text)
    return text
