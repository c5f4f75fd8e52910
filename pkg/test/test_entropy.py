import math

import numpy as np
import pytest
from scipy.optimize import minimize

from qcap.common.errors import DimensionError, DomainError, OrthogonalityError
from qcap.common.utils import is_unbounded
from qcap.quantum.channel import CodeSubspace, identity, omega_states, random_channel
from qcap.quantum.entropy import (
    QuasiEntropyQuery,
    channel_coherent_information,
    coherent_info_0,
    coherent_information,
    cond_H0,
    cond_H2,
    cond_Hmin,
    conditional_entropy_given,
    dmax,
    mutual_information,
    psi_alpha,
    quasi_entropy,
    relative_entropy,
    s1_P,
    von_neumann,
)
from qcap.quantum.qmatrix import (
    FactorSpec,
    ket_to_dm,
    max_entangled,
    random_contraction,
    random_density,
    support_projector,
)

PAULI = np.array([[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]])
POLISH = {"xatol": 1e-10, "fatol": 1e-13}


@pytest.fixture
def rng():
    return np.random.default_rng(3)


@pytest.fixture
def mes():
    return ket_to_dm(max_entangled(2, 2))


def test_maximally_entangled_values(mes):
    assert cond_H0(mes, (2, 2)) == pytest.approx(-1.0)
    assert cond_H2(mes, (2, 2)) == pytest.approx(-1.0)
    assert coherent_information(mes, (2, 2)) == pytest.approx(1.0)
    assert mutual_information(mes, (2, 2)) == pytest.approx(2.0)
    hmin = cond_Hmin(mes, (2, 2))
    assert hmin.value == pytest.approx(-1.0, abs=1e-7)
    assert hmin.converged
    assert hmin.lower <= hmin.upper


def test_product_state_values(rng):
    rho_a = np.diag([0.7, 0.3])
    rho_b = random_density(3, rng)
    rho = np.kron(rho_a, rho_b)
    assert cond_H0(rho, (2, 3)) == pytest.approx(1.0)
    assert coherent_information(rho, (2, 3)) == pytest.approx(-von_neumann(rho_a))
    assert mutual_information(rho, (2, 3)) == pytest.approx(0.0, abs=1e-9)
    assert cond_Hmin(rho, (2, 3)).value == pytest.approx(-math.log2(0.7), abs=1e-9)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_conditional_entropies_are_ordered(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(4, rng)
    hmin = cond_Hmin(rho, (2, 2))
    h2 = cond_H2(rho, (2, 2))
    h = -coherent_information(rho, (2, 2))
    h0 = cond_H0(rho, (2, 2))
    assert -1 - 1e-9 <= hmin.value <= h2 + 1e-9
    assert h2 <= h + 1e-9
    assert h <= h0 + 1e-9
    assert hmin.upper >= hmin.value


def test_hmin_with_fixed_sigma_is_not_above_optimum(rng):
    rho = random_density(4, rng)
    fixed = cond_Hmin(rho, (2, 2), sigma_b=np.eye(2) / 2)
    assert fixed.value == pytest.approx(-dmax(rho, np.eye(4) / 2))
    assert fixed.value <= cond_Hmin(rho, (2, 2)).value + 1e-9


def test_relative_entropy_support_violation():
    rho = np.diag([0.5, 0.5])
    sigma = np.diag([1.0, 0.0])
    assert is_unbounded(relative_entropy(rho, sigma))
    assert is_unbounded(dmax(rho, sigma))
    assert relative_entropy(sigma, rho) == pytest.approx(1.0)
    with pytest.raises(DimensionError):
        relative_entropy(rho, np.eye(3) / 3)


def test_commuting_quasi_entropies():
    p, q = np.array([0.9, 0.1]), np.array([0.5, 0.5])
    rho, sigma = np.diag(p), np.diag(q)
    assert quasi_entropy(rho, sigma, 2.0) == pytest.approx(math.log2(np.sum(p**2 / q)))
    assert quasi_entropy(rho, sigma, 0.5) == pytest.approx(
        -2 * math.log2(np.sum(np.sqrt(p * q)))
    )
    assert quasi_entropy(rho, sigma, 1.0) == pytest.approx(relative_entropy(rho, sigma))
    assert dmax(rho, sigma) == pytest.approx(math.log2(1.8))


def test_alpha_zero_uses_support_projector():
    rho = np.diag([1.0, 0.0])
    sigma = np.diag([0.25, 0.75])
    assert quasi_entropy(rho, sigma, 0.0) == pytest.approx(2.0)
    query = QuasiEntropyQuery(rho, sigma, 0.0)
    assert quasi_entropy(query) == pytest.approx(2.0)


def test_quasi_entropy_is_monotone_in_alpha(rng):
    rho, sigma = random_density(3, rng), random_density(3, rng)
    values = [quasi_entropy(rho, sigma, a) for a in (0.0, 0.5, 1.0, 1.5, 2.0)]
    assert all(x <= y + 1e-9 for x, y in zip(values, values[1:]))


def test_quasi_entropy_errors():
    rho = np.diag([1.0, 0.0])
    with pytest.raises(DomainError):
        psi_alpha(rho, rho, -0.5)
    with pytest.raises(OrthogonalityError):
        quasi_entropy(rho, np.diag([0.0, 1.0]), 0.5)
    with pytest.raises(OrthogonalityError):
        s1_P(rho, np.diag([0.0, 1.0]))
    assert is_unbounded(quasi_entropy(rho, np.diag([0.0, 1.0]), 2.0))
    with pytest.raises(DomainError) as e:
        quasi_entropy(rho, rho, 0.5, 2 * np.eye(2))
    assert not isinstance(e.value, OrthogonalityError)


def test_s1_with_test_operator(rng):
    rho, sigma = random_density(3, rng), random_density(3, rng)
    assert s1_P(rho, sigma) == pytest.approx(relative_entropy(rho, sigma))
    p = random_contraction(3, rng)
    # finite difference of ψ_α^P at α = 1
    h = 1e-5
    slope = (psi_alpha(rho, sigma, 1 + h, p) - psi_alpha(rho, sigma, 1 - h, p)) / (2 * h)
    assert s1_P(rho, sigma, p) == pytest.approx(slope, abs=1e-5)


def test_conditional_entropy_given(mes):
    value = conditional_entropy_given(mes, FactorSpec((2, 2), ("R", "B")), np.eye(2) / 2, 1.0)
    assert value == pytest.approx(-1.0)
    assert coherent_info_0(mes, (2, 2)) == pytest.approx(1.0)


def test_channel_coherent_information_of_identity():
    value = channel_coherent_information(identity(3), CodeSubspace.full(3))
    assert value == pytest.approx(math.log2(3))


def test_psi_alpha_is_convex(rng):
    alphas = np.arange(0.25, 3.01, 0.25)
    for _ in range(500):
        rho, sigma = random_density(3, rng), random_density(3, rng)
        p = random_contraction(3, rng)
        values = np.array([psi_alpha(rho, sigma, a, p) for a in alphas])
        assert (np.diff(values, 2) >= -1e-9).all()


def test_s1_scaling_and_s2_below_dmax(rng):
    for _ in range(500):
        rho, sigma = random_density(3, rng), random_density(3, rng)
        p = random_contraction(3, rng)
        expected = s1_P(rho, sigma, p) - 2.0
        assert s1_P(rho, 4 * sigma, p) == pytest.approx(expected, abs=1e-9)
        assert quasi_entropy(rho, sigma, 2.0) <= dmax(rho, sigma) + 1e-9


def test_hmin_with_fixed_sigma_outside_support_is_unbounded():
    rho = np.kron(np.diag([1.0, 0.0]), np.diag([1.0, 0.0]))
    result = cond_Hmin(rho, (2, 2), sigma_b=np.diag([0.0, 1.0]))
    assert is_unbounded(result.value)
    assert result.value < 0
    assert is_unbounded(result.lower) and is_unbounded(result.upper)


def _trace_a(m: np.ndarray) -> np.ndarray:
    return np.einsum("abac->bc", m.reshape(2, 2, 2, 2))


def _pauli_components(m: np.ndarray) -> np.ndarray:
    return np.array([np.trace(m @ p).real for p in PAULI])


def _bloch_state(r: np.ndarray) -> np.ndarray:
    return (np.eye(2) + np.einsum("k,kij->ij", r, PAULI)) / 2


def _sphere(n_theta: int = 41, n_phi: int = 80) -> np.ndarray:
    theta, phi = np.meshgrid(
        np.linspace(0, np.pi, n_theta), np.linspace(0, 2 * np.pi, n_phi, endpoint=False)
    )
    return np.stack(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1
    ).reshape(-1, 3)


def _angles(n: np.ndarray) -> np.ndarray:
    return np.array([np.arccos(np.clip(n[2], -1, 1)), np.arctan2(n[1], n[0])])


def _direction(angles: np.ndarray) -> np.ndarray:
    theta, phi = angles
    return np.array(
        [np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)]
    )


@pytest.mark.parametrize("seed", range(100))
def test_cond_H0_matches_bloch_grid_search(seed):
    rng = np.random.default_rng(1000 + seed)
    rho = random_density(4, rng, rank=1 + seed % 3)
    closed = cond_H0(rho, (2, 2))
    # Tr[Π (𝟙⊗σ)] is linear in σ, so pure σ on the sphere suffice
    m = _trace_a(support_projector(rho))
    points = _sphere()
    with np.errstate(divide="ignore"):
        grid = np.log2((np.trace(m).real + points @ _pauli_components(m)) / 2)
    assert grid.max() <= closed + 1e-9

    def objective(angles):
        sigma = _bloch_state(_direction(angles))
        return -conditional_entropy_given(rho, (2, 2), sigma, 0.0)

    start = _angles(points[np.argmax(grid)])
    res = minimize(objective, start, method="Nelder-Mead", options=POLISH)
    assert -res.fun == pytest.approx(closed, abs=1e-6)


@pytest.mark.parametrize("seed", range(100))
def test_cond_H2_matches_bloch_grid_search(seed):
    rng = np.random.default_rng(2000 + seed)
    rho = random_density(4, rng, rank=1 + seed % 4)
    closed = cond_H2(rho, (2, 2))
    # Tr[M σ^{-1}] = 2(Tr M − r·m)/(1 − |r|²) for σ = (𝟙 + r·σ⃗)/2
    m = _trace_a(rho @ rho)
    radii = np.linspace(0.0, 0.995, 60)
    points = (radii[:, None, None] * _sphere(21, 40)[None]).reshape(-1, 3)
    weight = 2 * (np.trace(m).real - points @ _pauli_components(m))
    grid = -np.log2(weight / (1 - np.sum(points**2, axis=1)))
    assert grid.max() <= closed + 1e-9

    def bloch(x):
        norm = np.linalg.norm(x)
        return x if norm == 0 else x * np.tanh(norm) / norm

    def objective(x):
        return -conditional_entropy_given(rho, (2, 2), _bloch_state(bloch(x)), 2.0)

    best = points[np.argmax(grid)]
    norm = np.linalg.norm(best)
    start = best if norm == 0 else best * np.arctanh(norm) / norm
    res = minimize(objective, start, method="Nelder-Mead", options=POLISH)
    assert -res.fun == pytest.approx(closed, abs=1e-6)


@pytest.mark.parametrize("d_out, kraus_rank", [(2, 2), (2, 3), (3, 2), (2, 4), (3, 3)])
def test_min_entropy_given_environment_is_dual_to_zero_entropy(d_out, kraus_rank):
    rng = np.random.default_rng(10 * d_out + kraus_rank)
    for seed in range(25):
        channel = random_channel(2, d_out, kraus_rank, seed=seed)
        omega = omega_states(channel, CodeSubspace.random(2, 2, rng))
        hmin = cond_Hmin(omega.re, omega.re_factors, sigma_b=omega.e)
        assert hmin.value == pytest.approx(-cond_H0(omega.rb, omega.rb_factors), abs=1e-8)


@pytest.mark.parametrize("d", [2, 3, 4, 5, 6])
def test_quasi_entropy_is_monotone_in_alpha_on_grid(d):
    rng = np.random.default_rng(30 + d)
    alphas = np.arange(0.25, 3.01, 0.25)
    for _ in range(100):
        rho, sigma = random_density(d, rng), random_density(d, rng)
        values = [quasi_entropy(rho, sigma, a) for a in alphas]
        assert all(x <= y + 1e-8 for x, y in zip(values, values[1:]))


if __name__ == "__main__":  # pragma: no cover
    pytest.main([__file__])
