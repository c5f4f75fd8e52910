import math

import numpy as np
import pytest

from qcap.common.errors import DimensionError, DomainError, TrialBudgetError
from qcap.quantum.channel import (
    CodeSubspace,
    KrausMap,
    amplitude_damping,
    depolarizing,
    identity,
    random_channel,
)
from qcap.quantum.coding import (
    CodeEnsemble,
    avg_fidelity_identity_check,
    coding_guarantee,
    composite_code_map,
    decoded_fidelity,
    decoupling_distance,
    decoupling_fidelity,
    entanglement_fidelity,
    haar_invariance_check,
    pruning_check,
    sample_code,
    uhlmann_decoder,
    verify_random_coding,
)


@pytest.mark.parametrize(
    "m, s, ic2, delta, expected",
    [
        (2, 2, -1.0, 0.0, 1.0),
        (3, 3, -math.log2(3), 0.0, 1.0),
        (2, 2, 0.0, 0.0, 0.0),
        (1, 4, -1.0, 0.05, 1 - 0.2 - math.sqrt(0.25)),
    ],
)
def test_coding_guarantee(m, s, ic2, delta, expected):
    assert coding_guarantee(m, s, ic2, delta) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("s", [2, 3, 4])
def test_noiseless_channel_decodes_perfectly(s):
    report = verify_random_coding(identity(s), CodeSubspace.full(s), s, trials=100, seed=s)
    assert report.ic2 == pytest.approx(-math.log2(s), abs=1e-9)
    assert report.rhs == pytest.approx(1.0, abs=1e-12)
    assert report.estimate == pytest.approx(1.0, abs=1e-9)
    assert report.passes
    assert report.decoder_violations == 0


@pytest.mark.parametrize("p", [0.01, 0.05])
def test_depolarizing_meets_guarantee(p):
    report = verify_random_coding(
        depolarizing(2, p), CodeSubspace.full(2), 2, trials=2000, seed=17
    )
    assert report.passes
    assert report.decoder_violations == 0
    doc = report.to_dict()
    assert doc["trials"] == 2000
    assert doc["estimate"] >= doc["rhs"] - 3 * doc["standard_error"] - 1e-9


def test_decoded_fidelity_dominates_decoupling():
    for seed in range(200):
        channel = random_channel(2, 2, 2, seed=seed)
        ensemble = CodeEnsemble.of(channel, CodeSubspace.full(2))
        sample = sample_code(ensemble, 1 + seed % 2, seed)
        decoder = uhlmann_decoder(sample.rb, sample.psi_ra, sample.rb_factors)
        assert decoder.is_trace_preserving()
        decoded = decoded_fidelity(decoder, sample.rb, sample.psi_ra, sample.m)
        assert decoded >= decoupling_fidelity(sample) - 1e-8
        assert decoded >= 1 - decoupling_distance(sample) - 1e-8


def test_sample_code_marginals():
    channel = random_channel(3, 2, 3, seed=1)
    ensemble = CodeEnsemble.of(channel, CodeSubspace.full(3))
    sample = sample_code(ensemble, 2, seed=4)
    assert np.allclose(sample.r, np.eye(2) / 2)
    assert np.trace(sample.rb).real == pytest.approx(1.0)
    assert np.linalg.norm(sample.psi_ra) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        sample_code(ensemble, 4)
    with pytest.raises(DimensionError):
        sample_code(ensemble, 2, unitary=np.eye(2))


def test_uhlmann_decoder_needs_matching_marginal():
    ensemble = CodeEnsemble.of(identity(2), CodeSubspace.full(2))
    sample = sample_code(ensemble, 2, seed=0)
    wrong = np.array([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(DomainError):
        uhlmann_decoder(sample.rb, wrong, sample.rb_factors)


def test_verify_random_coding_arguments():
    with pytest.raises(TrialBudgetError):
        verify_random_coding(identity(2), CodeSubspace.full(2), 2, trials=50)
    with pytest.raises(DomainError):
        verify_random_coding(identity(2), CodeSubspace.full(2), 3, trials=100)


def test_smoothed_guarantee():
    channel = amplitude_damping(0.2)
    report = verify_random_coding(channel, CodeSubspace.full(2), 1, delta=0.05, trials=100)
    assert report.delta == 0.05
    assert report.rhs == pytest.approx(coding_guarantee(1, 2, report.ic2, 0.05))


def test_entanglement_fidelity():
    assert entanglement_fidelity(identity(3)) == pytest.approx(1.0)
    assert entanglement_fidelity(depolarizing(2, 0.2)) == pytest.approx(1 - 0.75 * 0.2)
    with pytest.raises(DimensionError):
        entanglement_fidelity(KrausMap([np.ones((2, 3))]))


@pytest.mark.parametrize(
    "channel",
    [identity(2), depolarizing(3, 0.3), random_channel(2, 2, 3, seed=6)],
)
def test_average_fidelity_identity(channel):
    report = avg_fidelity_identity_check(channel, trials=5000, seed=2)
    assert report.agrees
    assert report.to_dict()["formula"] == pytest.approx(report.formula)


def test_average_fidelity_needs_trials():
    with pytest.raises(TrialBudgetError):
        avg_fidelity_identity_check(identity(2), trials=10)


def test_haar_invariance_check():
    ensemble = CodeEnsemble.of(random_channel(3, 3, 2, seed=3), CodeSubspace.full(3))
    result = haar_invariance_check(ensemble, 2, samples=200, seed=9)
    assert result["samples"] == 200
    assert result["pvalue"] > 1e-3


def test_composite_of_identity_is_identity():
    code = np.eye(3)[:, :2]
    composite = composite_code_map(identity(3), code, identity(3))
    assert entanglement_fidelity(composite) == pytest.approx(1.0)


@pytest.mark.parametrize("channel", [identity(2), depolarizing(2, 0.05)])
def test_pruning_check(channel):
    report = pruning_check(channel, CodeSubspace.full(2), 2, samples=100, restarts=5)
    assert report.consistent
    assert report.adversarial_min <= report.sampled_min
    assert report.half_basis in ("leading", "dominant_kraus")


def test_pruning_check_needs_even_rank():
    with pytest.raises(DomainError):
        pruning_check(identity(3), CodeSubspace.full(3), 3)
    with pytest.raises(DomainError):
        pruning_check(identity(2), CodeSubspace.full(2), 4)


if __name__ == "__main__":  # pragma: no cover
    pytest.main([__file__])
