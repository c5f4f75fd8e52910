import numpy as np
import pytest

from qcap.common.errors import DimensionError, DomainError
from qcap.quantum.qmatrix import (
    FactorSpec,
    check_density,
    check_psd,
    fidelity,
    gentle_measurement_gap,
    haar_unitary,
    ket_to_dm,
    matrix_power_on_support,
    max_entangled,
    partial_trace,
    permute_factors,
    positive_part_projector,
    purify,
    random_contraction,
    random_density,
    random_hermitian,
    rank,
    reduced_state,
    support_projector,
    trace_distance,
)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def test_factor_spec():
    spec = FactorSpec((2, 3, 4), ("R", "B", "E"))
    assert spec.dim == 24
    assert spec.dim_of("B") == 3
    assert spec.select(["E", "R"]).labels == ("R", "E")
    assert FactorSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(DimensionError):
        FactorSpec((2, 2), ("A", "A"))
    with pytest.raises(DimensionError):
        FactorSpec((2,), ("A", "B"))
    with pytest.raises(DimensionError):
        spec.index("X")


def test_check_density_rejects_bad_operators():
    with pytest.raises(DomainError):
        check_density(np.array([[1.0, 0.5], [0.0, 0.0]]))
    with pytest.raises(DomainError):
        check_density(np.diag([1.2, -0.2]))
    with pytest.raises(DomainError):
        check_density(np.diag([0.5, 0.4]))
    with pytest.raises(DimensionError):
        check_psd(np.ones((2, 3)))
    assert np.allclose(check_density(np.diag([0.5, 0.4]), subnormalized=True), np.diag([0.5, 0.4]))


def test_partial_trace_of_product(rng):
    a, b = random_density(2, rng), random_density(3, rng)
    spec = FactorSpec((2, 3), ("A", "B"))
    assert np.allclose(partial_trace(np.kron(a, b), spec, ["A"]), a)
    assert np.allclose(partial_trace(np.kron(a, b), spec, ["B"]), b)


def test_reduced_state_matches_partial_trace(rng):
    psi = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    psi /= np.linalg.norm(psi)
    spec = FactorSpec((2, 3, 2), ("R", "B", "E"))
    expected = partial_trace(ket_to_dm(psi), spec, ["R", "E"])
    assert np.allclose(reduced_state(psi, spec, ["E", "R"]), expected)


def test_permute_factors(rng):
    a, b = random_density(2, rng), random_density(3, rng)
    op, spec = permute_factors(np.kron(a, b), FactorSpec((2, 3), ("A", "B")), ["B", "A"])
    assert spec.labels == ("B", "A")
    assert np.allclose(op, np.kron(b, a))
    with pytest.raises(DimensionError):
        permute_factors(np.kron(a, b), FactorSpec((2, 3), ("A", "B")), ["A"])


def test_purify_has_rank_sized_purifier(rng):
    rho = random_density(4, rng, rank=2)
    psi, spec = purify(rho)
    assert spec.dims == (4, 2)
    assert np.allclose(partial_trace(ket_to_dm(psi), spec, ["S"]), rho)


def test_support_and_rank():
    rho = np.diag([0.7, 0.3, 0.0])
    assert rank(rho) == 2
    assert np.allclose(support_projector(rho), np.diag([1, 1, 0]))


def test_positive_part_projector_ties_go_to_nonnegative_side():
    a = np.diag([0.5, 0.3, 0.2])
    b = np.diag([0.5, 0.4, 0.1])
    assert np.allclose(positive_part_projector(a, b), np.diag([1, 0, 1]))


def test_trace_distance_and_fidelity(rng):
    rho = random_density(3, rng)
    assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)
    zero, one = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    assert trace_distance(zero, one) == pytest.approx(2.0)
    assert fidelity(zero, one) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DimensionError):
        fidelity(zero, np.eye(3) / 3)


def test_fidelity_of_pure_states(rng):
    u = haar_unitary(3, rng)
    x, y = u[:, 0], (u[:, 0] + u[:, 1]) / np.sqrt(2)
    assert fidelity(ket_to_dm(x), ket_to_dm(y)) == pytest.approx(abs(np.vdot(x, y)))


def test_max_entangled():
    psi = max_entangled(2, 3)
    marginal = reduced_state(psi, FactorSpec((3, 3), ("A", "B")), ["A"])
    assert np.allclose(marginal, np.diag([0.5, 0.5, 0.0]))
    with pytest.raises(DomainError):
        max_entangled(4, 3)


def test_haar_unitary_is_unitary(rng):
    u = haar_unitary(5, rng)
    assert np.allclose(u.conj().T @ u, np.eye(5))


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_gentle_measurement(d):
    rng = np.random.default_rng(d)
    for _ in range(500):
        rho = random_density(d, rng)
        effect = random_contraction(d, rng)
        delta = max(0.0, 1 - np.trace(rho @ effect).real)
        assert gentle_measurement_gap(rho, effect) <= 2 * np.sqrt(delta) + 1e-9


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_trace_distance_is_sandwiched_by_fidelity(d):
    rng = np.random.default_rng(10 + d)
    for _ in range(500):
        rho = random_density(d, rng)
        sigma = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        f = fidelity(rho, sigma)
        half = trace_distance(rho, sigma) / 2
        assert 1 - f <= half + 1e-7
        assert half <= np.sqrt(max(0.0, 1 - f**2)) + 1e-7


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_trace_norm_is_bounded_by_weighted_hilbert_schmidt(d):
    rng = np.random.default_rng(20 + d)
    for _ in range(500):
        x = random_hermitian(d, rng)
        xi = random_density(d, rng) * rng.uniform(0.1, 3.0)
        inv_root = matrix_power_on_support(xi, -0.5)
        norm = np.abs(np.linalg.eigvalsh(x)).sum()
        middle = np.trace(xi).real * np.trace(x @ inv_root @ x @ inv_root).real
        outer = np.trace(xi).real * np.trace(x @ x @ matrix_power_on_support(xi, -1)).real
        assert norm**2 <= middle * (1 + 1e-8) + 1e-8
        assert middle <= outer * (1 + 1e-8) + 1e-8


def test_positive_part_is_optimal(rng):
    for _ in range(1000):
        a, b = random_hermitian(4, rng), random_hermitian(4, rng)
        p = random_contraction(4, rng)
        best = np.trace(positive_part_projector(a, b) @ (a - b)).real
        assert np.trace(p @ (a - b)).real <= best + 1e-10


if __name__ == "__main__":  # pragma: no cover
    pytest.main([__file__])
