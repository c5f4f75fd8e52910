"""Dense Hermitian linear algebra on finite-dimensional quantum states.

Operators are plain ``numpy`` arrays. The ``check_*`` helpers validate them
against the tolerances in ``qcap.common.config`` and raise ``DomainError``;
tensor bookkeeping goes through ``FactorSpec``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Callable, Iterable, Sequence, Tuple

import numpy as np
import scipy.linalg

from qcap.common.config import (
    HERMITICITY_TOL,
    PSD_TOL,
    RANK_TOL,
    TIE_TOL,
    TRACE_TOL,
)
from qcap.common.errors import DimensionError, DomainError


@dataclass(frozen=True)
class FactorSpec:
    """Ordered tensor factors of an operator, e.g. R⊗B⊗E."""

    dims: Tuple[int, ...]
    labels: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if len(self.dims) != len(self.labels):
            raise DimensionError(
                f"{len(self.dims)} dims but {len(self.labels)} labels: {self.labels}"
            )
        if any(d < 1 for d in self.dims):
            raise DimensionError(f"factor dims must be positive, got {self.dims}")
        if len(set(self.labels)) != len(self.labels):
            raise DimensionError(f"duplicate factor labels {self.labels}")

    @classmethod
    def bipartite(cls, dim_a: int, dim_b: int, labels=("A", "B")) -> "FactorSpec":
        return cls((dim_a, dim_b), tuple(labels))

    @property
    def dim(self) -> int:
        return prod(self.dims)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DimensionError(f"no factor {label!r} in {self.labels}") from None

    def dim_of(self, label: str) -> int:
        return self.dims[self.index(label)]

    def select(self, keep: Iterable[str]) -> "FactorSpec":
        """Sub-spec of the kept labels, in the original factor order."""
        idx = sorted({self.index(label) for label in keep})
        return FactorSpec(
            tuple(self.dims[i] for i in idx), tuple(self.labels[i] for i in idx)
        )

    def check(self, op: np.ndarray) -> None:
        if op.shape[0] != self.dim:
            raise DimensionError(
                f"operator dim {op.shape[0]} does not match factors {self.dims}"
            )

    def to_dict(self) -> dict:
        return {"dims": list(self.dims), "labels": list(self.labels)}

    @classmethod
    def from_dict(cls, data: dict) -> "FactorSpec":
        return cls(tuple(data["dims"]), tuple(data["labels"]))


def as_bipartite(factors: FactorSpec | Sequence[int]) -> FactorSpec:
    """Accept a two-factor spec or a (d_A, d_B) pair."""
    if not isinstance(factors, FactorSpec):
        factors = FactorSpec.bipartite(*factors)
    if len(factors.dims) != 2:
        raise DimensionError(f"expected a bipartite factor spec, got {factors.labels}")
    return factors


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    return np.outer(psi, psi.conj())


def kron_all(ops: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def check_square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch {a.shape} vs {b.shape}")


def check_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL) -> np.ndarray:
    """Return the Hermitian part of ``m`` after checking ‖M − M†‖_max ≤ tol."""
    m = check_square(m)
    gap = np.max(np.abs(m - dagger(m)))
    if gap > tol:
        raise DomainError(f"operator is not Hermitian, max |M - M^dag| = {gap:.3e}")
    return (m + dagger(m)) / 2


def check_psd(m: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    m = check_hermitian(m)
    low = np.linalg.eigvalsh(m)[0]
    if low < -tol:
        raise DomainError(f"operator is not PSD, smallest eigenvalue {low:.3e}")
    return m


def check_density(
    rho: np.ndarray, subnormalized: bool = False, tol: float = TRACE_TOL
) -> np.ndarray:
    """Validate a (sub)normalized density operator and return its Hermitian part."""
    rho = check_psd(rho)
    tr = np.trace(rho).real
    if subnormalized:
        if tr > 1 + tol:
            raise DomainError(f"subnormalized state has trace {tr:.12f} > 1")
    elif abs(tr - 1) > tol:
        raise DomainError(f"state trace is {tr:.12f}, expected 1")
    return rho


def eigh(m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix, ascending eigenvalues."""
    return scipy.linalg.eigh((m + dagger(m)) / 2)


def matrix_function(m: np.ndarray, func: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply ``func`` to the eigenvalues of a Hermitian matrix."""
    w, v = eigh(m)
    return (v * func(w)) @ dagger(v)


def matrix_power_on_support(m: np.ndarray, power: float, rank_tol: float = RANK_TOL):
    """M^p on the support of a PSD matrix, zero on its kernel."""
    w, v = eigh(m)
    cut = rank_tol * max(w[-1], 0.0)
    keep = w > cut
    if not np.any(keep):
        return np.zeros_like(m, dtype=complex)
    vk = v[:, keep]
    return (vk * w[keep] ** power) @ dagger(vk)


def sqrtm_psd(m: np.ndarray) -> np.ndarray:
    return matrix_function(m, lambda w: np.sqrt(np.clip(w, 0, None)))


def log2_on_support(m: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    w, v = eigh(m)
    cut = rank_tol * max(w[-1], 0.0)
    keep = w > cut
    vk = v[:, keep]
    return (vk * np.log2(w[keep])) @ dagger(vk)


def support_projector(rho: np.ndarray, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Projector onto eigenvectors with eigenvalue above rank_tol·λ_max."""
    rho = check_square(rho)
    w, v = eigh(rho)
    cut = rank_tol * max(w[-1], 0.0)
    vk = v[:, w > cut]
    return vk @ dagger(vk)


def rank(rho: np.ndarray, rank_tol: float = RANK_TOL) -> int:
    w = np.linalg.eigvalsh(check_square(rho))
    return int(np.sum(w > rank_tol * max(w[-1], 0.0)))


def positive_part_projector(
    a: np.ndarray, b: np.ndarray, tie_tol: float = TIE_TOL
) -> np.ndarray:
    """{A ≥ B}: projector onto the nonnegative eigenspace of A − B.

    Eigenvalues within ±tie_tol of zero go to the ≥ side.
    """
    a, b = check_square(a), check_square(b)
    check_same_dim(a, b)
    w, v = eigh(a - b)
    vk = v[:, w >= -tie_tol]
    return vk @ dagger(vk)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """‖A − B‖_1 as the sum of absolute eigenvalues (no factor 1/2)."""
    a, b = check_square(a), check_square(b)
    check_same_dim(a, b)
    return float(np.sum(np.abs(np.linalg.eigvalsh((a - b + dagger(a - b)) / 2))))


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """F(ρ, σ) = Tr√(√ρ σ √ρ), subnormalized inputs allowed."""
    rho, sigma = check_psd(rho), check_psd(sigma)
    check_same_dim(rho, sigma)
    root = sqrtm_psd(rho)
    w = np.linalg.eigvalsh(root @ sigma @ root)
    return float(np.clip(np.sum(np.sqrt(np.clip(w, 0, None))), 0.0, 1.0))


def gentle_measurement_gap(rho: np.ndarray, effect: np.ndarray) -> float:
    """‖ρ − √Λ ρ √Λ‖_1 for an effect 0 ≤ Λ ≤ 𝟙."""
    root = sqrtm_psd(effect)
    return trace_distance(rho, root @ rho @ root)


def _keep_indices(factors: FactorSpec, keep: Iterable[str]) -> list:
    return sorted({factors.index(label) for label in keep})


def partial_trace(
    op: np.ndarray, factors: FactorSpec, keep: Iterable[str]
) -> np.ndarray:
    """Trace out every factor not in ``keep``; kept factors stay in order."""
    op = check_square(op)
    factors.check(op)
    kept = _keep_indices(factors, keep)
    n = len(factors.dims)
    tensor = op.reshape(factors.dims * 2)
    rows = list(range(n))
    cols = [i + n if i in kept else i for i in range(n)]
    out = kept + [i + n for i in kept]
    reduced = np.einsum(tensor, rows + cols, out)
    d = prod(factors.dims[i] for i in kept)
    return reduced.reshape(d, d)


def reduced_state(
    psi: np.ndarray, factors: FactorSpec, keep: Iterable[str]
) -> np.ndarray:
    """Marginal of a pure state without forming |ψ⟩⟨ψ|."""
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.size != factors.dim:
        raise DimensionError(f"state size {psi.size} does not match {factors.dims}")
    kept = _keep_indices(factors, keep)
    rest = [i for i in range(len(factors.dims)) if i not in kept]
    d = prod(factors.dims[i] for i in kept)
    mat = psi.reshape(factors.dims).transpose(kept + rest).reshape(d, -1)
    return mat @ dagger(mat)


def permute_factors(
    op: np.ndarray, factors: FactorSpec, order: Sequence[str]
) -> Tuple[np.ndarray, FactorSpec]:
    """Reorder the tensor factors of an operator, ``order`` lists all labels."""
    op = check_square(op)
    factors.check(op)
    perm = [factors.index(label) for label in order]
    if sorted(perm) != list(range(len(factors.dims))):
        raise DimensionError(f"order {order} is not a permutation of {factors.labels}")
    n = len(perm)
    tensor = op.reshape(factors.dims * 2).transpose(perm + [p + n for p in perm])
    new = FactorSpec(tuple(factors.dims[p] for p in perm), tuple(order))
    return tensor.reshape(new.dim, new.dim), new


def purify(rho: np.ndarray, rank_tol: float = RANK_TOL) -> Tuple[np.ndarray, FactorSpec]:
    """Schmidt-form purification; the purifier has dimension rank(ρ).

    Returns:
        (ψ, factors): vector on system⊗purifier and its factor spec (S, P).
    """
    rho = check_density(rho)
    w, v = eigh(rho)
    keep = w > rank_tol * max(w[-1], 0.0)
    w, v = np.clip(w[keep], 0, None), v[:, keep]
    r = int(keep.sum())
    # ψ = Σ_k √λ_k |v_k⟩|k⟩
    psi = (v * np.sqrt(w)).reshape(rho.shape[0] * r)
    psi = psi / np.linalg.norm(psi)
    return psi, FactorSpec((rho.shape[0], r), ("S", "P"))


def max_entangled(m: int, d: int) -> np.ndarray:
    """Rank-m maximally entangled vector on ℂ^d ⊗ ℂ^d."""
    if m < 1 or d < 1:
        raise DomainError(f"ranks must be positive, got m={m}, d={d}")
    if m > d:
        raise DomainError(f"rank m={m} exceeds dimension d={d}")
    psi = np.zeros(d * d, dtype=complex)
    for i in range(m):
        psi[i * d + i] = 1.0
    return psi / np.sqrt(m)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar unitary: QR of a complex Ginibre matrix with phase-fixed R diagonal."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    phases = np.where(np.abs(diag) > 0, diag / np.abs(diag), 1.0)
    return q * phases


def haar_isometry(d: int, s: int, rng: np.random.Generator) -> np.ndarray:
    """First s columns of a Haar unitary, a d×s isometry."""
    if s > d:
        raise DomainError(f"isometry columns s={s} exceed dimension d={d}")
    return haar_unitary(d, rng)[:, :s]


def random_pure_state(d: int, rng: np.random.Generator) -> np.ndarray:
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return psi / np.linalg.norm(psi)


def random_density(d: int, rng: np.random.Generator, rank: int | None = None):
    """Induced-measure random state of the given rank (full rank by default)."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    rho = g @ dagger(g)
    return rho / np.trace(rho).real


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + dagger(g)) / 2


def random_contraction(d: int, rng: np.random.Generator) -> np.ndarray:
    """Random effect 0 ≤ P ≤ 𝟙 with eigenvalues uniform in [0, 1]."""
    u = haar_unitary(d, rng)
    return (u * rng.uniform(0.0, 1.0, d)) @ dagger(u)
