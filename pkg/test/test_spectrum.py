import math

import numpy as np
import pytest

from qcap.common.errors import DimensionError, DomainError, TrendError, WindowError
from qcap.quantum.channel import ChannelSequence, dephasing, identity
from qcap.quantum.qmatrix import ket_to_dm, max_entangled, random_density
from qcap.quantum.spectrum import (
    BipartiteSequence,
    SequencePair,
    Window,
    coherent_rate_table,
    default_grid,
    divergence_trace,
    scan_rates,
    spectral_coherent_rate,
    stein_trend,
    transition_window,
    window_table,
)

STEIN_ORACLE = 0.9 * math.log2(1.8) + 0.1 * math.log2(0.2)


@pytest.fixture
def biased_pair():
    return SequencePair.iid(np.diag([0.9, 0.1]), np.eye(2) / 2, 10)


def test_default_grid_contains_integers():
    grid = default_grid()
    assert len(grid) == 65
    assert 0.0 in grid and 1.0 in grid and -1.0 in grid


def test_divergence_trace_limits():
    rho = random_density(3, np.random.default_rng(0))
    sigma = random_density(3, np.random.default_rng(1))
    assert divergence_trace(rho, sigma, -50.0, 2) == pytest.approx(1.0, abs=1e-9)
    assert divergence_trace(rho, sigma, 50.0, 2) == pytest.approx(0.0, abs=1e-9)
    # diagonal inputs
    assert divergence_trace(np.array([0.9, 0.1]), np.array([0.5, 0.5]), 0.0, 1) == (
        pytest.approx(0.4)
    )
    with pytest.raises(DimensionError):
        divergence_trace(rho, np.eye(2), 0.0, 1)


def test_identical_states_window_contains_zero():
    rho = random_density(2, np.random.default_rng(4))
    window = scan_rates(SequencePair.iid(rho, rho, 4), 4)
    assert window.brackets(0.0)
    assert window.gamma_hi == pytest.approx(0.0)
    assert window.oracle == pytest.approx(0.0, abs=1e-9)


def test_stein_windows_bracket_and_shrink(biased_pair):
    table = stein_trend(biased_pair, [4, 6, 8, 10])
    assert list(table["n"]) == [4, 6, 8, 10]
    assert (table["gamma_lo"] <= STEIN_ORACLE).all()
    assert (table["gamma_hi"] >= STEIN_ORACLE).all()
    assert table["width"].iloc[-1] < table["width"].iloc[0]
    assert table["distance"].iloc[-1] < table["distance"].iloc[0]
    assert table["oracle"].iloc[0] == pytest.approx(0.531, abs=1e-3)


def test_stein_trend_failure_is_reported(biased_pair):
    with pytest.raises(TrendError):
        stein_trend(biased_pair, [4, 4])
    table = stein_trend(biased_pair, [4, 4], strict=False)
    assert len(table) == 2


def test_transition_window_arguments():
    rho = np.diag([0.5, 0.5])
    with pytest.raises(DomainError):
        transition_window(rho, rho, 2, tol_window=0.5)
    with pytest.raises(WindowError):
        transition_window(rho, rho, 4, gamma_grid=[50.0, 51.0])


def test_transition_window_widens():
    rho = np.diag([0.5, 0.5])
    window = transition_window(rho, rho, 4, gamma_grid=[0.5, 0.75, 1.0])
    assert window.widened >= 1
    assert window.brackets(0.0)


def test_window_table_and_dict():
    windows = [Window(2, -0.5, 0.5, 0.1), Window(4, -0.25, 0.25, 0.1, label="marginal")]
    table = window_table(windows)
    assert list(table.columns) == ["n", "gamma_lo", "gamma_hi", "oracle", "widened", "width"]
    assert table["width"].tolist() == [1.0, 0.5]
    assert windows[1].to_dict()["sigma"] == "marginal"
    assert windows[0].distance == pytest.approx(0.6)
    assert Window(1, 0.0, 1.0).distance is None


def test_markov_pair():
    params = {"p_states": [0.0, 0.3], "transition": [[0.8, 0.2], [0.3, 0.7]]}
    seq = ChannelSequence("markov_depolarizing", params, 3)
    pair = SequencePair.markov(seq, np.diag([1.0, 0.0]), np.eye(2) / 2)
    window = scan_rates(pair, 3)
    assert window.oracle is None
    assert window.gamma_lo <= window.gamma_hi <= 1.0
    with pytest.raises(DomainError):
        stein_trend(pair, [2, 3])
    with pytest.raises(DomainError):
        pair.at(4)
    with pytest.raises(DimensionError):
        SequencePair.markov(seq, np.diag([1.0, 0.0]), np.eye(3) / 3)


def test_identity_coherent_window_brackets_one():
    seq = BipartiteSequence.iid(ket_to_dm(max_entangled(2, 2)), (2, 2), 4)
    window = spectral_coherent_rate(seq, 4)
    assert seq.oracle == pytest.approx(1.0)
    assert window.brackets(1.0)
    assert window.gamma_hi == pytest.approx(1.0)
    assert window.label


def test_coherent_window_of_channel_sequence():
    seq = BipartiteSequence.from_channel_sequence(
        ChannelSequence("iid", {"channel": identity(2)}, 3)
    )
    assert seq.oracle == pytest.approx(1.0)
    assert spectral_coherent_rate(seq, 3).brackets(1.0)


def test_product_sequence_table():
    seq = BipartiteSequence.product(np.eye(2) / 2, np.eye(2) / 2, 3)
    table = coherent_rate_table(seq, [3, 2])
    assert list(table["n"]) == [2, 3]
    assert seq.oracle == pytest.approx(-1.0)
    assert np.allclose(table["gamma_hi"], -1.0)
    assert (table["gamma_lo"] <= -1.0).all()
    assert "sigma" in table.columns


def test_dephasing_sequence_oracle():
    p = 0.1
    seq = BipartiteSequence.from_channel_sequence(
        ChannelSequence("iid", {"channel": dephasing(p)}, 2)
    )
    binary = -p * math.log2(p) - (1 - p) * math.log2(1 - p)
    assert seq.oracle == pytest.approx(1 - binary)
    rho, factors = seq.state(2)
    assert factors.dims == (4, 4)
    assert np.trace(rho).real == pytest.approx(1.0)
    with pytest.raises(DomainError):
        seq.state(3)


if __name__ == "__main__":  # pragma: no cover
    pytest.main([__file__])
