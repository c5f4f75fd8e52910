"""Smoothed coherent informations over the state ball 𝔟(ρ;δ) and the
operator ball 𝔭(ρ;δ).

Every search evaluates a candidate family that is built from ρ alone and then
filtered by the budget δ. Larger δ admits a superset of candidates, so all
smoothed values are nondecreasing in δ and δ=0 keeps only the unsmoothed
point.

State ball, for the fidelity budget F²(ρ, ρ̄) ≥ 1 − δ²:
  - eigenvalue truncations of ρ (tail sweeps, a greedy removal path and all
    subsets of the smallest support eigenvalues);
  - for small dimensions, seeded random rotations of those truncations.

Operator ball, for the usage budget 1 − Tr[Pρ] ≤ δ:
  - P = (1 − t)(𝟙 − Π_K) over the truncations K and a grid of t;
  - a coordinate ascent path P ← √P(𝟙 − tΠ_cut)√P with cut projectors taken
    from the top eigenvectors of Tr_A[√P Π_ρ √P], the eigenprojectors of ρ
    and Π_ρ itself.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from qcap.common.config import (
    DEFAULT_SEED,
    EXHAUSTIVE_TRUNCATION,
    OPERATOR_GRID_POINTS,
    ORACLE_TRIALS,
    RANK_TOL,
)
from qcap.common.errors import DomainError
from qcap.common.logger import logger
from qcap.common.utils import (
    UNBOUNDED,
    BallKind,
    SmoothingMethod,
    is_unbounded,
    spawn_seeds,
)
from qcap.quantum.channel import KrausMap
from qcap.quantum.entropy import (
    ConditionalQuery,
    cond_H2,
    coherent_information,
    dmax,
    relative_entropy,
)
from qcap.quantum.qmatrix import (
    FactorSpec,
    check_psd,
    dagger,
    eigh,
    fidelity,
    log2_on_support,
    partial_trace,
    purify,
    random_hermitian,
    reduced_state,
    sqrtm_psd,
    support_projector,
)

MEMBERSHIP_TOL = 1e-9
USAGE_TOL = 1e-12
# λ_max below this counts as zero, the objective is then unbounded
VANISHING = 1e-300
# dims up to which the state-ball oracle runs by default / on request
ORACLE_AUTO_DIM = 4
ORACLE_MAX_DIM = 16
ORACLE_SCALES = (0.01, 0.03, 0.1, 0.3)
PATH_STEPS = 24
PATH_T = (1 / 16, 1 / 8, 1 / 4, 1 / 2)
TOP_CUTS = 2
EIGEN_CUTS = 4
# greedy truncation path only removes among this many smallest eigenvalues
GREEDY_POOL = 16


@dataclass(frozen=True)
class SmoothingBudget:
    delta: float
    ball: BallKind = BallKind.state_ball

    def __post_init__(self):
        object.__setattr__(self, "ball", BallKind(self.ball))
        if not 0.0 <= self.delta <= 1.0:
            raise DomainError(f"smoothing delta must lie in [0, 1], got {self.delta}")

    def to_dict(self) -> dict:
        return {"delta": self.delta, "ball": self.ball}


@dataclass
class SmoothedResult:
    """Achieved value with its witness (ρ̄ or P) and a certified bracket."""

    value: float
    witness: np.ndarray
    method: SmoothingMethod
    certified_bounds: Tuple[float, float]
    budget: SmoothingBudget
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        lower, upper = self.certified_bounds
        if not lower <= self.value <= upper:
            raise AssertionError(
                f"certified bounds [{lower}, {upper}] do not bracket {self.value}"
            )

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "certified_bounds": list(self.certified_bounds),
            "budget": self.budget,
            "witness": self.witness,
            **self.extra,
        }


def _budget(delta: float, ball: BallKind) -> SmoothingBudget:
    return SmoothingBudget(float(delta), ball)


def _state_threshold(delta: float) -> float:
    """Largest removed mass m with (1 − m)² ≥ 1 − δ²."""
    return 1.0 - math.sqrt(max(0.0, 1.0 - delta**2))


def state_ball_membership(rho: np.ndarray, candidate: np.ndarray, delta: float) -> bool:
    """ρ̄ ∈ 𝔟(ρ;δ): Tr ρ̄ ≤ 1 and F²(ρ, ρ̄) ≥ 1 − δ², both up to 1e-9."""
    candidate = check_psd(candidate)
    if np.trace(candidate).real > 1 + MEMBERSHIP_TOL:
        return False
    return fidelity(rho, candidate) ** 2 >= 1 - delta**2 - MEMBERSHIP_TOL


def operator_ball_membership(rho: np.ndarray, p: np.ndarray, delta: float) -> bool:
    """P ∈ 𝔭(ρ;δ): 0 ≤ P ≤ 𝟙 and Tr[Pρ] ≥ 1 − δ."""
    w = np.linalg.eigvalsh(check_psd(p))
    if w[-1] > 1 + MEMBERSHIP_TOL:
        return False
    return 1 - np.trace(p @ rho).real <= delta + MEMBERSHIP_TOL


def _ic0_of_support(pi: np.ndarray, factors: FactorSpec) -> float:
    """−log λ_max(Tr_A Π), the state-smoothing objective of a support."""
    lam = np.linalg.eigvalsh(partial_trace(pi, factors, (factors.labels[1],)))[-1]
    if lam <= VANISHING:
        return UNBOUNDED
    return float(-np.log2(lam))


def _key(rho: np.ndarray) -> Tuple[bytes, Tuple[int, ...]]:
    rho = np.ascontiguousarray(rho, dtype=complex)
    return rho.tobytes(), rho.shape


def _from_key(buf: bytes, shape) -> np.ndarray:
    return np.frombuffer(buf, dtype=complex).reshape(shape).copy()


@dataclass(frozen=True)
class Truncation:
    """ρ with the support eigenvectors listed in ``removed`` dropped."""

    removed: Tuple[int, ...]
    mass: float
    projector: np.ndarray
    state: np.ndarray
    ic0: float


class TruncationFamily:
    """Eigenvalue truncations of ρ_AB, ordered by first discovery.

    Index 0 is always ρ itself.
    """

    def __init__(self, rho: np.ndarray, factors: FactorSpec):
        self.factors = factors
        w, v = eigh(rho)
        keep = w > RANK_TOL * max(w[-1], 0.0)
        # support eigenpairs, ascending
        self.weights = np.clip(w[keep], 0, None)
        self.vectors = v[:, keep]
        self.rank = int(keep.sum())
        self.members: List[Truncation] = []
        self._seen = set()
        self._build()

    def _make(self, removed) -> Optional[Truncation]:
        removed = tuple(sorted(removed))
        if removed in self._seen or len(removed) >= self.rank:
            return None
        self._seen.add(removed)
        kept = [k for k in range(self.rank) if k not in removed]
        vk = self.vectors[:, kept]
        pi = vk @ dagger(vk)
        state = (vk * self.weights[kept]) @ dagger(vk)
        mass = float(self.weights[list(removed)].sum()) if removed else 0.0
        member = Truncation(removed, mass, pi, state, _ic0_of_support(pi, self.factors))
        self.members.append(member)
        return member

    def _build(self):
        self._make(())
        for j in range(1, self.rank):
            self._make(range(j))
        small = min(EXHAUSTIVE_TRUNCATION, self.rank)
        for size in range(1, small + 1):
            for removed in itertools.combinations(range(small), size):
                self._make(removed)
        # greedy removal path among the smallest support eigenvalues
        pool = min(GREEDY_POOL, self.rank - 1)
        removed: Tuple[int, ...] = ()
        while len(removed) < pool:
            best, best_key = None, None
            for k in range(pool):
                if k in removed:
                    continue
                trial = tuple(sorted(removed + (k,)))
                member = self._make(trial) or self._lookup(trial)
                key = (member.ic0, -member.mass)
                if best_key is None or key > best_key:
                    best, best_key = trial, key
            removed = best

    def _lookup(self, removed) -> Truncation:
        return next(m for m in self.members if m.removed == removed)

    def within(self, max_mass: float) -> List[Truncation]:
        return [m for m in self.members if m.mass <= max_mass]


@lru_cache(maxsize=64)
def _truncation_family(buf: bytes, shape, factors: FactorSpec) -> TruncationFamily:
    return TruncationFamily(_from_key(buf, shape), factors)


def truncation_family(rho: np.ndarray, factors) -> TruncationFamily:
    q = ConditionalQuery.of(rho, factors)
    return _truncation_family(*_key(q.rho), q.factors)


def _best(values) -> int:
    """Index of the largest value, lowest index on ties."""
    best_i, best_v = 0, -math.inf
    for i, v in enumerate(values):
        if v > best_v:
            best_i, best_v = i, v
    return best_i


@lru_cache(maxsize=64)
def _oracle_candidates(buf: bytes, shape, factors: FactorSpec, seed: int):
    """Rotated truncations W ρ̄ W†, W = exp(i·scale·H), fixed per (ρ, seed)."""
    rho = _from_key(buf, shape)
    family = _truncation_family(buf, shape, factors).members
    out = []
    for i, child in enumerate(spawn_seeds(seed, ORACLE_TRIALS)):
        rng = np.random.default_rng(child)
        member = family[i % len(family)]
        h = random_hermitian(rho.shape[0], rng)
        h /= np.linalg.norm(h)
        w = scipy.linalg.expm(1j * ORACLE_SCALES[i % len(ORACLE_SCALES)] * h)
        state = w @ member.state @ dagger(w)
        state = (state + dagger(state)) / 2
        proj = w @ member.projector @ dagger(w)
        out.append((state, fidelity(rho, state) ** 2, _ic0_of_support(proj, factors)))
    return out


def smooth_Ic0_state(
    rho: np.ndarray,
    factors,
    delta: float,
    oracle: Optional[bool] = None,
    seed: int = DEFAULT_SEED,
) -> SmoothedResult:
    """I^c_{0,δ}(ρ) = max over 𝔟(ρ;δ) of −H_0(ρ̄|B).

    Args:
        rho: bipartite state ρ_AB.
        factors: FactorSpec or (d_A, d_B).
        delta (float): fidelity budget.
        oracle (bool, optional): force the random-rotation oracle on or off.
            Defaults to on for total dimension ≤ 4.
        seed (int, optional): oracle seed.

    Returns:
        SmoothedResult: witness is the subnormalized ρ̄.
    """
    budget = _budget(delta, BallKind.state_ball)
    q = ConditionalQuery.of(rho, factors)
    family = truncation_family(q.rho, q.factors)
    admitted = family.within(_state_threshold(budget.delta))
    i = _best([m.ic0 for m in admitted])
    value, witness = admitted[i].ic0, admitted[i].state
    heuristic = value
    upper = float(np.log2(min(q.dim_a, q.dim_b)))

    run_oracle = q.factors.dim <= ORACLE_AUTO_DIM if oracle is None else oracle
    if run_oracle and q.factors.dim > ORACLE_MAX_DIM:
        raise DomainError(
            f"state-ball oracle limited to total dim {ORACLE_MAX_DIM}, got {q.factors.dim}"
        )
    method = SmoothingMethod.heuristic
    if run_oracle:
        method = SmoothingMethod.oracle
        floor = 1 - budget.delta**2 - MEMBERSHIP_TOL
        for state, f2, ic0 in _oracle_candidates(*_key(q.rho), q.factors, seed):
            if f2 >= floor and ic0 > value:
                value, witness = ic0, state
        if value > heuristic:
            logger.debug(f"state-ball oracle improved {heuristic:.6f} -> {value:.6f}")
    return SmoothedResult(
        value,
        witness,
        method,
        (value, max(upper, value)),
        budget,
        {"heuristic_value": heuristic, "unsmoothed": family.members[0].ic0},
    )


def smooth_Ic2_state(rho: np.ndarray, factors, delta: float) -> SmoothedResult:
    """I^c_{2,δ} = −H_2^δ, the smallest I^c_2(ρ̄) over admitted truncations."""
    budget = _budget(delta, BallKind.state_ball)
    q = ConditionalQuery.of(rho, factors)
    admitted = truncation_family(q.rho, q.factors).within(_state_threshold(budget.delta))
    values = [-cond_H2(m.state, q.factors) for m in admitted]
    i = _best([-v for v in values])
    # Tr√(Tr_A ρ̄²) ≥ (Tr ρ̄)/√(d_A d_B) and Tr ρ̄ ≥ 1 − δ² on the ball
    kept = 1 - budget.delta**2
    lower = (
        2 * math.log2(kept) - math.log2(q.factors.dim) if kept > 0 else -math.inf
    )
    return SmoothedResult(
        values[i],
        admitted[i].state,
        SmoothingMethod.heuristic,
        (min(lower, values[i]), values[i]),
        budget,
        {"unsmoothed": values[0]},
    )


class OperatorCandidate:
    """One test operator P with its usage 1 − Tr[Pρ] and Ĩ^c_0 value.

    P is materialised on first access; ``s1_key`` groups candidates that
    share the S_1^P inner minimum (scalings of one truncation).
    """

    def __init__(self, usage: float, ic0: float, origin: str, make, s1_key=None):
        self.usage = float(usage)
        self.ic0 = ic0
        self.origin = origin
        self.s1_key = s1_key
        self._make = make
        self._p = None

    @property
    def p(self) -> np.ndarray:
        if self._p is None:
            self._p = self._make()
        return self._p

    def __repr__(self) -> str:
        return f"OperatorCandidate({self.origin}, usage={self.usage:.3g}, ic0={self.ic0:.6g})"


def _fixed(p: np.ndarray):
    return lambda: p


class OperatorCandidates:
    """Candidate test operators for the operator ball of one ρ_AB."""

    def __init__(self, rho: np.ndarray, factors: FactorSpec):
        self.rho = rho
        self.factors = factors
        self.query = ConditionalQuery(rho, factors)
        self.pi_rho = support_projector(rho)
        self.rho_log_rho = rho @ log2_on_support(rho)
        self.members: List[OperatorCandidate] = []
        self._s1_cache = {}
        family = _truncation_family(*_key(rho), factors)
        self._from_truncations(family)
        self._ascent_path(family)
        zero = np.zeros_like(self.pi_rho)
        self.members.append(OperatorCandidate(1.0, UNBOUNDED, "zero", _fixed(zero)))

    def usage_of(self, p: np.ndarray) -> float:
        return float(1 - np.trace(p @ self.rho).real)

    def ic0_of(self, p: np.ndarray) -> float:
        """−log λ_max(Tr_A[√P Π_ρ √P])."""
        root = sqrtm_psd(p)
        lam = np.linalg.eigvalsh(self.query.trace_a(root @ self.pi_rho @ root))[-1]
        if lam <= VANISHING:
            return UNBOUNDED
        return float(-np.log2(lam))

    def _from_truncations(self, family: TruncationFamily):
        grid = np.arange(OPERATOR_GRID_POINTS) / OPERATOR_GRID_POINTS
        total = float(np.trace(self.rho).real)
        eye = np.eye(self.rho.shape[0])
        for member in family.members:
            # P = (1 − t)(𝟙 − Π_removed), √P Π_ρ √P = (1 − t) Π_kept
            base = eye - (self.pi_rho - member.projector)
            for t in grid:
                self.members.append(
                    OperatorCandidate(
                        1 - (1 - t) * (total - member.mass),
                        member.ic0 - float(np.log2(1 - t)),
                        f"truncation{member.removed}:t={t:g}",
                        lambda b=base, s=1 - t: s * b,
                        s1_key=member.removed,
                    )
                )

    def _cuts(self, p: np.ndarray) -> List[np.ndarray]:
        root = sqrtm_psd(p)
        _, u = eigh(self.query.trace_a(root @ self.pi_rho @ root))
        cuts = [
            self.query.lift(np.outer(u[:, -k], u[:, -k].conj()))
            for k in range(1, min(TOP_CUTS, u.shape[1]) + 1)
        ]
        w, v = eigh(self.rho)
        support = [k for k in range(len(w)) if w[k] > RANK_TOL * w[-1]]
        cuts += [np.outer(v[:, k], v[:, k].conj()) for k in support[:EIGEN_CUTS]]
        cuts.append(self.pi_rho)
        return cuts

    def _ascent_path(self, family: TruncationFamily):
        """Greedy path from P = 𝟙, best value gain per unit of usage."""
        eye = np.eye(self.rho.shape[0])
        p = eye.astype(complex)
        value, usage = family.members[0].ic0, 0.0
        for step in range(PATH_STEPS):
            root = sqrtm_psd(p)
            best = None
            for cut in self._cuts(p):
                for t in PATH_T:
                    new = root @ (eye - t * cut) @ root
                    new = (new + dagger(new)) / 2
                    new_usage = self.usage_of(new)
                    spent = new_usage - usage
                    if spent <= USAGE_TOL:
                        continue
                    new_value = self.ic0_of(new)
                    rate = (new_value - value) / spent
                    if best is None or rate > best[0]:
                        best = (rate, new, new_usage, new_value)
            if best is None or best[0] <= 0:
                break
            _, p, usage, value = best
            self.members.append(OperatorCandidate(usage, value, f"ascent{step}", _fixed(p)))
            if usage >= 1 - 1e-6 or is_unbounded(value):
                break

    def extra(self, ops: Sequence[np.ndarray]) -> List[OperatorCandidate]:
        """Caller-supplied test operators, e.g. a support projector witnessed
        elsewhere; they are evaluated but not stored."""
        out = []
        for i, p in enumerate(ops):
            p = (np.asarray(p, dtype=complex) + dagger(np.asarray(p, dtype=complex))) / 2
            out.append(OperatorCandidate(self.usage_of(p), self.ic0_of(p), f"extra{i}", _fixed(p)))
        return out

    def within(
        self, delta: float, extra: Sequence[OperatorCandidate] = ()
    ) -> List[OperatorCandidate]:
        return [c for c in list(self.members) + list(extra) if c.usage <= delta + USAGE_TOL]

    def ic1(self, c: OperatorCandidate) -> float:
        if c.origin.startswith("extra"):
            return _s1_min(self.query, self.rho_log_rho, c.p)[0]
        key = c.s1_key if c.s1_key is not None else c.origin
        if key not in self._s1_cache:
            self._s1_cache[key] = _s1_min(self.query, self.rho_log_rho, c.p)[0]
        return self._s1_cache[key]


@lru_cache(maxsize=16)
def _operator_candidates(buf: bytes, shape, factors: FactorSpec) -> OperatorCandidates:
    return OperatorCandidates(_from_key(buf, shape), factors)


def operator_candidates(rho: np.ndarray, factors) -> OperatorCandidates:
    q = ConditionalQuery.of(rho, factors)
    return _operator_candidates(*_key(q.rho), q.factors)


def coherent_info_ceiling(rho: np.ndarray, factors, delta: float) -> float:
    """I^c/(1−δ′) + 4(δ′ log(d_A d_B) + 1)/(1−δ′) with δ′ = 2√δ; +∞ when δ′ ≥ 1."""
    q = ConditionalQuery.of(rho, factors)
    dp = 2 * math.sqrt(delta)
    if dp >= 1:
        return UNBOUNDED
    ic = coherent_information(q.rho, q.factors)
    return ic / (1 - dp) + 4 * (dp * math.log2(q.factors.dim) + 1) / (1 - dp)


def s1_continuity_bound(
    rho: np.ndarray, sigma: np.ndarray, p: np.ndarray, delta: float
) -> float:
    """(S(√Pρ√P‖σ) + 2δ′ log d + 2)/(1 − δ′), δ′ = 2√δ, ceiling of S_1^P(ρ‖σ)."""
    dp = 2 * math.sqrt(delta)
    if dp >= 1:
        return UNBOUNDED
    root = sqrtm_psd(p)
    rel = relative_entropy(root @ rho @ root, sigma, subnormalized=True)
    return (rel + 2 * dp * math.log2(rho.shape[0]) + 2) / (1 - dp)


def _operator_upper(q: ConditionalQuery, delta: float) -> float:
    if delta >= 1:
        return UNBOUNDED
    shrink = -math.log2(1 - delta)
    trivial = math.log2(q.dim_b) + shrink
    return min(trivial, coherent_info_ceiling(q.rho, q.factors, delta) + shrink)


def _certify(value: float, upper: float, what: str) -> Tuple[float, float]:
    if value > upper:
        logger.warning(f"{what}: value {value:.6f} above its ceiling {upper:.6f}")
        upper = value
    return value, upper


def smooth_Ic0_operator(
    rho: np.ndarray, factors, delta: float, extra: Sequence[np.ndarray] = ()
) -> SmoothedResult:
    """Ĩ^c_{0,δ}(ρ) = max over P ∈ 𝔭(ρ;δ) of −log λ_max(Tr_A[√P Π_ρ √P]).

    The witness is the test operator P; δ = 0 admits only P = 𝟙 (and
    ``extra`` operators of zero usage). ``extra`` adds test operators found
    elsewhere to the candidate set.
    """
    budget = _budget(delta, BallKind.operator_ball)
    q = ConditionalQuery.of(rho, factors)
    cands = operator_candidates(q.rho, q.factors)
    admitted = cands.within(budget.delta, cands.extra(extra))
    i = _best([c.ic0 for c in admitted])
    best = admitted[i]
    if is_unbounded(best.ic0):
        logger.warning(f"operator ball saturated at delta={budget.delta}: P = 0 admitted")
    return SmoothedResult(
        best.ic0,
        best.p,
        SmoothingMethod.heuristic,
        _certify(best.ic0, _operator_upper(q, budget.delta), "Ic0_operator"),
        budget,
        {"usage": best.usage, "origin": best.origin, "unsmoothed": cands.members[0].ic0},
    )


def _s1_min(q: ConditionalQuery, rho_log_rho: np.ndarray, p: np.ndarray):
    """min over σ_B ⊇ supp τ of S_1^P(ρ‖𝟙⊗σ_B), attained at σ = τ/Tr τ,
    τ = Tr_A[√P ρ √P]."""
    root = sqrtm_psd(p)
    tau = q.trace_a(root @ q.rho @ root)
    norm = np.trace(tau).real
    if norm <= VANISHING:
        return UNBOUNDED, None
    sigma = tau / norm
    w = np.clip(np.linalg.eigvalsh(sigma), 0, None)
    w = w[w > 0]
    entropy = -float(np.sum(w * np.log2(w)))
    value = np.trace(root @ rho_log_rho @ root).real / norm + entropy
    return float(value), sigma


def s1_inner_min(rho: np.ndarray, factors, p: Optional[np.ndarray] = None):
    """(min_σ S_1^P(ρ‖𝟙⊗σ), σ*) with σ ranging over states whose support
    contains that of Tr_A[√P ρ √P]."""
    q = ConditionalQuery.of(rho, factors)
    p = np.eye(q.factors.dim, dtype=complex) if p is None else check_psd(p)
    return _s1_min(q, q.rho @ log2_on_support(q.rho), p)


def smooth_Ic1_operator(rho: np.ndarray, factors, delta: float) -> SmoothedResult:
    """Ĩ^c_{1,δ}(ρ) = max over P ∈ 𝔭(ρ;δ) of min_σ S_1^P(ρ‖𝟙⊗σ).

    Uses the same admitted candidates as ``smooth_Ic0_operator``; the inner
    minimum is the closed form of ``s1_inner_min``.
    """
    budget = _budget(delta, BallKind.operator_ball)
    q = ConditionalQuery.of(rho, factors)
    cands = operator_candidates(q.rho, q.factors)
    admitted = cands.within(budget.delta)
    values = [cands.ic1(c) for c in admitted]
    i = _best(values)
    best = admitted[i]
    ceiling = coherent_info_ceiling(q.rho, q.factors, budget.delta)
    return SmoothedResult(
        values[i],
        best.p,
        SmoothingMethod.heuristic,
        _certify(values[i], ceiling, "Ic1_operator"),
        budget,
        {"usage": best.usage, "origin": best.origin},
    )


def operator_ordering(rho: np.ndarray, factors, delta: float) -> dict:
    """Compare Ĩ^c_{0,δ} and Ĩ^c_{1,δ} on the shared candidate set.

    At the Ĩ^c_0 witness P̄, convexity of α ↦ ψ_α^P gives
    S_1^P̄ ≥ S_0^P̄ + log Tr[P̄ρ], so Ĩ^c_0 ≤ Ĩ^c_1 + log(1/Tr[P̄ρ]). The
    correction vanishes when Tr[P̄ρ] = 1, in particular at δ = 0.
    """
    ic0 = smooth_Ic0_operator(rho, factors, delta)
    ic1 = smooth_Ic1_operator(rho, factors, delta)
    kept = 1 - ic0.extra["usage"]
    correction = -math.log2(kept) if kept > 0 else UNBOUNDED
    return {
        "delta": delta,
        "ic0": ic0.value,
        "ic1": ic1.value,
        "trace_correction": correction,
        "holds": ic0.value <= ic1.value + correction + 1e-9,
        "strict_holds": ic0.value <= ic1.value + 1e-9,
    }


def smooth_Hmin_fixed(omega_re: np.ndarray, factors, delta: float) -> SmoothedResult:
    """H_min^δ(ω^{RE}|ω^E) = max over 𝔟 of −D_max(ω̄ ‖ 𝟙_R ⊗ ω̄^E).

    ω̄ runs over the truncation family of ω^{RE}. The complementary side is
    obtained by purifying ω^{RE}; the gap to its smoothed I^c_0 is reported
    under ``duality_gap``.
    """
    budget = _budget(delta, BallKind.state_ball)
    q = ConditionalQuery.of(omega_re, factors)
    admitted = truncation_family(q.rho, q.factors).within(_state_threshold(budget.delta))
    values = []
    for member in admitted:
        bar_e = q.trace_a(member.state)
        values.append(-dmax(member.state, q.lift(bar_e)))
    i = _best(values)
    psi, pfac = purify(q.rho / np.trace(q.rho).real)
    # purifier P plays the role of B: ω^{R P}
    d_r, d_e, d_p = q.dim_a, q.dim_b, pfac.dims[1]
    full = FactorSpec((d_r, d_e, d_p), (q.a, q.b, "P"))
    rb = reduced_state(psi, full, (q.a, "P"))
    dual = smooth_Ic0_state(rb, FactorSpec((d_r, d_p), (q.a, "P")), budget.delta, oracle=False)
    upper = float(np.log2(d_r))
    return SmoothedResult(
        values[i],
        admitted[i].state,
        SmoothingMethod.heuristic,
        _certify(values[i], upper, "Hmin_fixed"),
        budget,
        {"dual_Ic0": dual.value, "duality_gap": dual.value - values[i]},
    )


@dataclass
class DataProcessingReport:
    delta: float
    left: float
    right: float
    left_heuristic: float
    left_pulled_back: float
    trace_q: float
    feasible: bool
    holds: bool
    witness_p: np.ndarray
    witness_q: np.ndarray

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "left": self.left,
            "right": self.right,
            "left_heuristic": self.left_heuristic,
            "left_pulled_back": self.left_pulled_back,
            "trace_q": self.trace_q,
            "feasible": self.feasible,
            "holds": self.holds,
        }


def data_processing_check(
    rho: np.ndarray, factors, channel: KrausMap, delta: float
) -> DataProcessingReport:
    """Ĩ^c_{0,2√δ}(ρ_AB) ≥ Ĩ^c_{0,δ}((id⊗Φ)(ρ_AB)) for Φ acting on B.

    The left side is the larger of its own search at 2√δ and the value at the
    pulled-back witness Q = (id⊗Φ*)(√P Π_γ √P), P the right side's witness.
    """
    if not 0 <= delta <= 0.25:
        raise DomainError(f"data processing check needs delta in [0, 0.25], got {delta}")
    q = ConditionalQuery.of(rho, factors)
    gamma = channel.apply_on_factor(q.rho, q.factors, q.b)
    g_factors = FactorSpec((q.dim_a, channel.out_dim), (q.a, q.b))
    right = smooth_Ic0_operator(gamma, g_factors, delta)

    root = sqrtm_psd(right.witness)
    pulled = root @ support_projector(gamma) @ root
    g_factors_c = FactorSpec((q.dim_a, channel.out_dim), (q.a, "C"))
    witness_q = channel.adjoint().apply_on_factor(pulled, g_factors_c, "C")
    witness_q = (witness_q + dagger(witness_q)) / 2
    trace_q = float(np.trace(witness_q @ q.rho).real)
    widened = min(1.0, 2 * math.sqrt(delta))
    feasible = trace_q >= 1 - widened - MEMBERSHIP_TOL

    left_heuristic = smooth_Ic0_operator(q.rho, q.factors, widened).value
    cands = operator_candidates(q.rho, q.factors)
    left_q = cands.ic0_of(witness_q) if feasible else -math.inf
    left = max(left_heuristic, left_q)
    report = DataProcessingReport(
        delta,
        left,
        right.value,
        left_heuristic,
        left_q,
        trace_q,
        feasible,
        left >= right.value - 1e-9,
        right.witness,
        witness_q,
    )
    logger.info(
        f"data processing at delta={delta}: left={left:.6f} right={right.value:.6f}"
    )
    return report
