import json
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

from qcap.common.logger import logger, set_level, stream_handler
from qcap.main import QcapCLI, main
from qcap.quantum.channel import identity

MES_KET = [[0.7071067811865476, 0], 0, 0, [0.7071067811865476, 0]]


@pytest.fixture
def cli():
    return QcapCLI()


@pytest.fixture
def channel_file(tmp_path):
    path = tmp_path / "identity.json"
    path.write_text(json.dumps(identity(2).to_dict()))
    return str(path)


@pytest.fixture
def sequence_file(tmp_path):
    path = tmp_path / "sequence.json"
    path.write_text(
        json.dumps({"kind": "iid", "n_max": 2, "params": {"channel": identity(2).to_dict()}})
    )
    return str(path)


@pytest.fixture
def quick_config(tmp_path):
    path = tmp_path / "quick.yaml"
    path.write_text("search_trials: 1\nrefine_steps: 1\nthreads: 1\n")
    return str(path)


def test_bounds_writes_report(cli, channel_file, quick_config, tmp_path):
    out = tmp_path / "bounds.json"
    cli.bounds(channel=channel_file, epsilon=0.1, out=str(out), config=quick_config)
    doc = json.loads(out.read_text())
    assert doc["command"] == "bounds"
    assert doc["channel"]["kraus_rank"] == 1
    report = doc["report"]
    assert 0.0 <= report["lower_bits"] <= report["upper_bits"] <= 1.0 + 1e-9
    assert report["upper_cap_bits"] == pytest.approx(1.0)


def test_bounds_exit_codes(cli, tmp_path, quick_config):
    malformed = tmp_path / "malformed.json"
    malformed.write_text('{"in_dim": 2,')
    with pytest.raises(SystemExit) as e:
        cli.bounds(channel=str(malformed), epsilon=0.1)
    assert e.value.code == 2

    for name, kraus in [
        ("shape.json", [[[1, 0, 0], [0, 1, 0]]]),
        ("lossy.json", [[[0.5, 0], [0, 0.5]]]),
    ]:
        path = tmp_path / name
        path.write_text(json.dumps({"in_dim": 2, "out_dim": 2, "kraus": kraus}))
        with pytest.raises(SystemExit) as e:
            cli.bounds(channel=str(path), epsilon=0.1, config=quick_config)
        assert e.value.code == 2

    large = tmp_path / "large.json"
    large.write_text(json.dumps({"in_dim": 65, "out_dim": 65, "kraus": [np.eye(65).tolist()]}))
    with pytest.raises(SystemExit) as e:
        cli.bounds(channel=str(large), epsilon=0.1, config=quick_config)
    assert e.value.code == 3

    with pytest.raises(SystemExit) as e:
        cli.bounds(epsilon=0.1, config=quick_config)
    assert e.value.code == 1

    with pytest.raises(SystemExit) as e:
        cli.bounds(channel=str(malformed), epsilon=2.0)
    assert e.value.code == 1


def test_simulate(cli, channel_file, tmp_path):
    out = tmp_path / "coding.json"
    cli.simulate(channel=channel_file, trials=100, threads=1, out=str(out))
    doc = json.loads(out.read_text())
    assert doc["random_coding"]["passes"]
    assert doc["random_coding"]["estimate"] == pytest.approx(1.0, abs=1e-9)
    assert doc["pruning"]["consistent"]


def test_simulate_exit_codes(cli, channel_file):
    with pytest.raises(SystemExit) as e:
        cli.simulate(channel=channel_file, trials=10)
    assert e.value.code == 4
    with pytest.raises(SystemExit) as e:
        cli.simulate(channel=channel_file, trials=100, s=3, threads=1)
    assert e.value.code == 1


def test_entropy_writes_json_lines(cli, tmp_path):
    states = tmp_path / "states.jsonl"
    states.write_text(
        "\n".join(
            [
                json.dumps({"rho_ket": MES_KET, "dims": [2, 2]}),
                json.dumps(
                    {"rho": [[1, 0], [0, 0]], "sigma": [[0, 0], [0, 1]], "alphas": [0.5, 2]}
                ),
            ]
        )
    )
    out = tmp_path / "entropy.jsonl"
    cli.entropy(state=str(states), delta=0.1, out=str(out))
    first, second = [json.loads(line) for line in out.read_text().splitlines()]
    assert first["coherent_information"] == pytest.approx(1.0)
    assert first["cond_Hmin"]["value"] == pytest.approx(-1.0, abs=1e-6)
    assert first["smoothed"]["delta"] == 0.1
    assert second["relative_entropy"] == "+inf"
    assert second["dmax"] == "+inf"
    assert [q["value"] for q in second["quasi"]] == ["+inf", "+inf"]
    assert "cond_H0" not in second


def test_entropy_rejects_test_operator_above_identity(cli, tmp_path):
    states = tmp_path / "states.jsonl"
    record = {
        "rho": [[1, 0], [0, 0]],
        "sigma": [[0, 0], [0, 1]],
        "p": [[2, 0], [0, 2]],
        "alphas": [0.5],
    }
    states.write_text(json.dumps(record))
    with pytest.raises(SystemExit) as e:
        cli.entropy(state=str(states), out=str(tmp_path / "out.jsonl"))
    assert e.value.code == 1


def test_entropy_and_spectrum_take_seed_and_threads(cli, tmp_path):
    states = tmp_path / "states.jsonl"
    records = [{"rho_ket": MES_KET, "dims": [2, 2], "delta": d} for d in (0.1, 0.2)]
    states.write_text("\n".join(json.dumps(r) for r in records))
    one, two = tmp_path / "one.jsonl", tmp_path / "two.jsonl"
    cli.entropy(state=str(states), seed=5, threads=1, out=str(one))
    cli.entropy(state=str(states), seed=5, threads=2, out=str(two))
    assert one.read_text() == two.read_text()

    pair = tmp_path / "pair.json"
    pair.write_text(
        json.dumps({"rho": [[0.9, 0], [0, 0.1]], "sigma": [[0.5, 0], [0, 0.5]], "n": [4, 6]})
    )
    one, two = tmp_path / "one.json", tmp_path / "two.json"
    cli.spectrum(pair=str(pair), threads=1, out=str(one))
    cli.spectrum(pair=str(pair), threads=2, out=str(two))
    assert one.read_text() == two.read_text()


def test_spectrum_pair(cli, tmp_path):
    pair = tmp_path / "pair.json"
    pair.write_text(
        json.dumps(
            {"rho": [[0.9, 0], [0, 0.1]], "sigma": [[0.5, 0], [0, 0.5]], "n": [4, 10]}
        )
    )
    out, csv = tmp_path / "windows.json", tmp_path / "windows.csv"
    cli.spectrum(pair=str(pair), out=str(out), csv=str(csv))
    doc = json.loads(out.read_text())
    assert doc["kind"] == "iid"
    assert [w["n"] for w in doc["windows"]] == [4, 10]
    assert doc["trend_holds"]
    assert list(pd.read_csv(csv)["n"]) == [4, 10]


def test_spectrum_sequence(cli, sequence_file, tmp_path):
    out = tmp_path / "windows.json"
    cli.spectrum(sequence=sequence_file, n_max=2, out=str(out))
    doc = json.loads(out.read_text())
    assert doc["kind"] == "coherent"
    for window in doc["windows"]:
        assert window["gamma_lo"] <= 1.0 <= window["gamma_hi"]
    with pytest.raises(SystemExit) as e:
        cli.spectrum()
    assert e.value.code == 1


def test_per_use(cli, sequence_file, quick_config, tmp_path):
    out, csv = tmp_path / "rates.json", tmp_path / "rates.csv"
    cli.per_use(
        sequence=sequence_file,
        epsilon=0.1,
        n_max=2,
        out=str(out),
        csv=str(csv),
        config=quick_config,
    )
    doc = json.loads(out.read_text())
    assert [row["n"] for row in doc["rows"]] == [1, 2]
    assert [row["coherent_rate"] for row in doc["rows"]] == pytest.approx([1.0, 1.0])
    assert len(pd.read_csv(csv)) == 2


def test_help_and_version(cli, capsys):
    cli.help()
    assert "Exit codes" in capsys.readouterr().out
    with patch("sys.argv", ["qcap", "version"]):
        main()
    assert "version" in capsys.readouterr().out


def test_log_level_flags():
    old = logger.level, stream_handler.level
    try:
        QcapCLI(debug=True)
        assert stream_handler.level == 10
        QcapCLI(log_level="warning")
        assert logger.level == 30
    finally:
        set_level(*old)


if __name__ == "__main__":  # pragma: no cover
    pytest.main([__file__])
