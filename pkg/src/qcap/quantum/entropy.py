"""Unsmoothed entropic quantities, all in bits.

Support violations return the ``UNBOUNDED`` sentinel instead of raising.
The optimisations over the conditioning state σ_B are done in closed form
where one exists (H_0, H_2, the S_1^P inner minimum) and by a bracketed
iteration for H_min.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from qcap.common.config import HMIN_MAX_ITER, HMIN_TOL, RANK_TOL
from qcap.common.errors import DomainError, OrthogonalityError
from qcap.common.logger import logger
from qcap.common.utils import UNBOUNDED
from qcap.quantum.channel import CodeSubspace, KrausChannel, omega_states
from qcap.quantum.qmatrix import (
    FactorSpec,
    as_bipartite,
    check_density,
    check_psd,
    check_same_dim,
    dagger,
    eigh,
    log2_on_support,
    matrix_power_on_support,
    partial_trace,
    sqrtm_psd,
    support_projector,
)

# weight outside the support of σ tolerated before calling it a violation
SUPPORT_TOL = 1e-9
# trace below which two operators are treated as orthogonal
ORTHOGONAL_TOL = 1e-14


def _xlogx(w: np.ndarray) -> float:
    w = w[w > 0]
    return float(np.sum(w * np.log2(w)))


def von_neumann(rho: np.ndarray) -> float:
    w = np.clip(np.linalg.eigvalsh(check_psd(rho)), 0, None)
    return -_xlogx(w)


def _outside_support(rho: np.ndarray, sigma: np.ndarray) -> bool:
    """True when ρ carries weight outside supp σ."""
    pi = support_projector(sigma)
    leak = np.trace(rho).real - np.trace(pi @ rho).real
    return leak > SUPPORT_TOL * max(np.trace(rho).real, 1.0)


def relative_entropy(
    rho: np.ndarray, sigma: np.ndarray, subnormalized: bool = False
) -> float:
    """S(ρ‖σ) = Tr ρ log ρ − Tr ρ log σ, UNBOUNDED unless supp ρ ⊆ supp σ."""
    rho = check_density(rho, subnormalized=subnormalized)
    sigma = check_psd(sigma)
    check_same_dim(rho, sigma)
    if _outside_support(rho, sigma):
        return UNBOUNDED
    w = np.clip(np.linalg.eigvalsh(rho), 0, None)
    return _xlogx(w) - float(np.trace(rho @ log2_on_support(sigma)).real)


def _root(p: Optional[np.ndarray], dim: int) -> np.ndarray:
    if p is None:
        return np.eye(dim, dtype=complex)
    p = check_psd(p)
    if np.linalg.eigvalsh(p)[-1] > 1 + 1e-9:
        raise DomainError("test operator P must satisfy P <= 1")
    return sqrtm_psd(p)


def _power(m: np.ndarray, power: float) -> np.ndarray:
    if power == 0:
        return support_projector(m)
    return matrix_power_on_support(m, power)


def psi_alpha(
    rho: np.ndarray, sigma: np.ndarray, alpha: float, p: Optional[np.ndarray] = None
) -> float:
    """ψ_α^P(ρ‖σ) = log Tr[√P ρ^α √P σ^{1−α}]; negative powers act on supp σ."""
    rho, sigma = check_psd(rho), check_psd(sigma)
    check_same_dim(rho, sigma)
    if alpha < 0:
        raise DomainError(f"alpha must be nonnegative, got {alpha}")
    root = _root(p, rho.shape[0])
    tr = np.trace(root @ _power(rho, alpha) @ root @ _power(sigma, 1 - alpha)).real
    if tr <= ORTHOGONAL_TOL:
        raise OrthogonalityError(
            f"sqrt(P) rho^alpha sqrt(P) and sigma^(1-alpha) are orthogonal (trace {tr:.3e})"
        )
    return float(np.log2(tr))


@dataclass(frozen=True)
class QuasiEntropyQuery:
    """Inputs of S_α^P(ρ‖σ); P=None stands for the identity."""

    rho: np.ndarray
    sigma: np.ndarray
    alpha: float
    p: Optional[np.ndarray] = None

    def evaluate(self) -> float:
        alpha = self.alpha
        if alpha == 1:
            return s1_P(self.rho, self.sigma, self.p)
        if alpha == 0:
            return -psi_alpha(self.rho, self.sigma, 0.0, self.p)
        if alpha > 1:
            root = _root(self.p, self.rho.shape[0])
            if _outside_support(root @ self.rho @ root, self.sigma):
                return UNBOUNDED
        return psi_alpha(self.rho, self.sigma, alpha, self.p) / (alpha - 1)


def quasi_entropy(
    rho: np.ndarray | QuasiEntropyQuery,
    sigma: Optional[np.ndarray] = None,
    alpha: Optional[float] = None,
    p: Optional[np.ndarray] = None,
) -> float:
    """S_α^P(ρ‖σ) = ψ_α^P/(α−1); α=0 gives −log Tr[√P Π_ρ √P σ], α=1 the limit."""
    if isinstance(rho, QuasiEntropyQuery):
        return rho.evaluate()
    return QuasiEntropyQuery(rho, sigma, alpha, p).evaluate()


def s1_P(rho: np.ndarray, sigma: np.ndarray, p: Optional[np.ndarray] = None) -> float:
    """d/dα ψ_α^P at α=1:

        (Tr[√P ρ log ρ √P Π_σ] − Tr[√P ρ √P log σ]) / Tr[√P ρ √P Π_σ]

    with log σ taken on the support of σ.
    """
    rho, sigma = check_psd(rho), check_psd(sigma)
    check_same_dim(rho, sigma)
    root = _root(p, rho.shape[0])
    pi_sigma = support_projector(sigma)
    squeezed = root @ rho @ root
    den = np.trace(squeezed @ pi_sigma).real
    if den <= ORTHOGONAL_TOL:
        raise OrthogonalityError(f"Tr[sqrt(P) rho sqrt(P) Pi_sigma] vanishes ({den:.3e})")
    rho_log_rho = rho @ log2_on_support(rho)
    num = np.trace(root @ rho_log_rho @ root @ pi_sigma).real
    num -= np.trace(squeezed @ log2_on_support(sigma)).real
    return float(num / den)


def dmax(rho: np.ndarray, sigma: np.ndarray) -> float:
    """log λ_max(σ^{-1/2} ρ σ^{-1/2}), UNBOUNDED on support violation."""
    rho, sigma = check_psd(rho), check_psd(sigma)
    check_same_dim(rho, sigma)
    if _outside_support(rho, sigma):
        return UNBOUNDED
    inv_root = matrix_power_on_support(sigma, -0.5)
    lam = np.linalg.eigvalsh(inv_root @ rho @ inv_root)[-1]
    if lam <= 0:
        return -math.inf
    return float(np.log2(lam))


@dataclass(frozen=True)
class ConditionalQuery:
    """Bipartite ρ_AB; entropies condition on the second factor."""

    rho: np.ndarray
    factors: FactorSpec

    @classmethod
    def of(cls, rho: np.ndarray, factors) -> "ConditionalQuery":
        factors = as_bipartite(factors)
        rho = check_density(rho, subnormalized=True)
        factors.check(rho)
        return cls(rho, factors)

    @property
    def a(self) -> str:
        return self.factors.labels[0]

    @property
    def b(self) -> str:
        return self.factors.labels[1]

    @property
    def dim_a(self) -> int:
        return self.factors.dims[0]

    @property
    def dim_b(self) -> int:
        return self.factors.dims[1]

    def trace_a(self, op: np.ndarray) -> np.ndarray:
        return partial_trace(op, self.factors, (self.b,))

    def trace_b(self, op: np.ndarray) -> np.ndarray:
        return partial_trace(op, self.factors, (self.a,))

    def lift(self, sigma_b: np.ndarray) -> np.ndarray:
        """𝟙_A ⊗ σ_B."""
        return np.kron(np.eye(self.dim_a), sigma_b)


def cond_H0(rho: np.ndarray, factors) -> float:
    """H_0(A|B) = log λ_max(Tr_A Π_ρ)."""
    q = ConditionalQuery.of(rho, factors)
    lam = np.linalg.eigvalsh(q.trace_a(support_projector(q.rho)))[-1]
    return float(np.log2(lam))


def cond_H2(rho: np.ndarray, factors) -> float:
    """H_2(A|B) = −log (Tr √(Tr_A ρ²))², optimum at σ_B ∝ √(Tr_A ρ²)."""
    q = ConditionalQuery.of(rho, factors)
    w = np.clip(np.linalg.eigvalsh(q.trace_a(q.rho @ q.rho)), 0, None)
    return float(-2 * np.log2(np.sum(np.sqrt(w))))


def conditional_entropy_given(
    rho: np.ndarray, factors, sigma_b: np.ndarray, alpha: float
) -> float:
    """H_α(A|B)_{ρ|σ} = −S_α(ρ‖𝟙_A⊗σ_B) for a fixed σ_B."""
    q = ConditionalQuery.of(rho, factors)
    value = quasi_entropy(q.rho, q.lift(sigma_b), alpha)
    return -value


def coherent_info_0(rho: np.ndarray, factors) -> float:
    return -cond_H0(rho, factors)


def coherent_info_2(rho: np.ndarray, factors) -> float:
    return -cond_H2(rho, factors)


@dataclass
class HminResult:
    """H_min(A|B) with a certified interval [lower, upper]; value = lower."""

    value: float
    lower: float
    upper: float
    sigma: np.ndarray
    converged: bool
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "certified_bounds": [self.lower, self.upper],
            "converged": self.converged,
            "iterations": self.iterations,
            "sigma": self.sigma,
        }


def _hmin_bounds(q: ConditionalQuery, rho, sigma, beta):
    """Primal λ(σ), soft top-eigenspace dual bound and the ascent direction."""
    w_s, v_s = eigh(sigma)
    inv_root_b = (v_s * w_s**-0.5) @ dagger(v_s)
    inv_root = np.kron(np.eye(q.dim_a), inv_root_b)
    lam_vals, vecs = eigh(inv_root @ rho @ inv_root)
    lam = lam_vals[-1]
    weights = np.exp(beta * (lam_vals - lam) / lam)
    weights /= weights.sum()
    omega = (vecs * weights) @ dagger(vecs)
    direction = inv_root_b @ q.trace_a(omega) @ inv_root_b
    # Y = (𝟙⊗σ^{-1/2}) Ω (𝟙⊗σ^{-1/2}) / λ_max(direction) has Tr_A Y ≤ 𝟙
    dual = float(weights @ lam_vals) / np.linalg.eigvalsh(direction)[-1]
    return lam, dual, direction


def _lam(q: ConditionalQuery, rho, sigma) -> float:
    w_s, v_s = eigh(sigma)
    inv_root = np.kron(np.eye(q.dim_a), (v_s * w_s**-0.5) @ dagger(v_s))
    return float(np.linalg.eigvalsh(inv_root @ rho @ inv_root)[-1])


def cond_Hmin(
    rho: np.ndarray,
    factors,
    sigma_b: Optional[np.ndarray] = None,
    tol: float = HMIN_TOL,
    max_iter: int = HMIN_MAX_ITER,
) -> HminResult:
    """Min-conditional entropy H_min(A|B).

    With ``sigma_b`` the value is −D_max(ρ‖𝟙⊗σ_B) exactly. Otherwise σ_B is
    optimised on supp ρ_B by multiplicative (matrix exponentiated) steps on
    λ(σ) = λ_max((𝟙⊗σ)^{-1/2} ρ (𝟙⊗σ)^{-1/2}). Every iterate gives a feasible
    λ (lower end of H_min) and a normalised soft top-eigenspace witness Y
    with Tr_A Y ≤ 𝟙 (upper end). The loop stops when the bracket is narrower
    than ``tol`` bits; otherwise the result is flagged as not converged.
    """
    q = ConditionalQuery.of(rho, factors)
    if sigma_b is not None:
        value = -dmax(q.rho, q.lift(check_psd(sigma_b)))
        return HminResult(value, value, value, np.asarray(sigma_b), True)

    rho_b = q.trace_a(q.rho)
    w_b, v_b = eigh(rho_b)
    keep = w_b > RANK_TOL * max(w_b[-1], 0.0)
    u = v_b[:, keep]
    r = u.shape[1]
    lift_u = np.kron(np.eye(q.dim_a), u)
    rho_c = dagger(lift_u) @ q.rho @ lift_u
    qc = ConditionalQuery(rho_c, FactorSpec((q.dim_a, r), (q.a, q.b)))

    sigma = np.diag(w_b[keep] / w_b[keep].sum()).astype(complex)
    beta, eta = 32.0, 1.0
    best_upper, best_sigma, best_lower = math.inf, sigma, 0.0
    converged, it = False, 0
    lam, dual, direction = _hmin_bounds(qc, rho_c, sigma, beta)
    for it in range(1, max_iter + 1):
        if lam < best_upper:
            best_upper, best_sigma = lam, sigma
        best_lower = max(best_lower, dual)
        gap = np.log2(best_upper / best_lower) if best_lower > 0 else math.inf
        logger.debug(f"H_min iteration {it}: lambda={lam:.12g} gap={gap:.3e}")
        if gap < tol:
            converged = True
            break
        # σ ← exp(log σ + η·M)/Tr, M = σ^{-1/2} Tr_A[Ω] σ^{-1/2}
        while True:
            step = scipy.linalg.expm(scipy.linalg.logm(sigma) + eta * direction)
            step = (step + dagger(step)) / 2
            candidate = step / np.trace(step).real
            new_lam = _lam(qc, rho_c, candidate)
            if new_lam <= lam or eta < 1e-10:
                break
            eta /= 2
        if new_lam <= lam:
            sigma = candidate
            eta = min(1.0, eta * 2)
        else:
            beta = min(beta * 4, 1e12)
            eta = 1.0
        if it % 25 == 0:
            beta = min(beta * 2, 1e12)
        lam, dual, direction = _hmin_bounds(qc, rho_c, sigma, beta)
    else:
        if lam < best_upper:
            best_upper, best_sigma = lam, sigma
        best_lower = max(best_lower, dual)

    if not converged:
        logger.warning(
            f"H_min bracket not closed after {max_iter} iterations: "
            f"[{-np.log2(best_upper):.9f}, {-np.log2(best_lower):.9f}]"
        )
    sigma_full = u @ best_sigma @ dagger(u)
    lower = float(-np.log2(best_upper))
    upper = float(-np.log2(best_lower)) if best_lower > 0 else math.inf
    return HminResult(lower, lower, max(lower, upper), sigma_full, converged, it)


def coherent_information(rho: np.ndarray, factors) -> float:
    """I^c(A⟩B) = S(ρ_B) − S(ρ_AB)."""
    q = ConditionalQuery.of(rho, factors)
    return von_neumann(q.trace_a(q.rho)) - von_neumann(q.rho)


def channel_coherent_information(channel: KrausChannel, subspace: CodeSubspace):
    omega = omega_states(channel, subspace)
    return coherent_information(omega.rb, omega.rb_factors)


def min_relative_entropy_marginal(
    rho: np.ndarray, factors, sigma_a: np.ndarray
) -> float:
    """S(ρ_AB‖σ_A⊗ρ_B), the minimum over ξ_B of S(ρ_AB‖σ_A⊗ξ_B)."""
    q = ConditionalQuery.of(rho, factors)
    return relative_entropy(q.rho, np.kron(check_psd(sigma_a), q.trace_a(q.rho)))


def mutual_information(rho: np.ndarray, factors) -> float:
    """min over both marginals, S(ρ_AB‖ρ_A⊗ρ_B)."""
    q = ConditionalQuery.of(rho, factors)
    return min_relative_entropy_marginal(q.rho, q.factors, q.trace_b(q.rho))
