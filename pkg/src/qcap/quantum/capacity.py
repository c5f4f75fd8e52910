"""One-shot entanglement-transmission capacity bounds.

The lower bound is

    max_S I^c_{0,ε/8}(ω^{RB}_S) + log[1/d + ε²/4] − Δ,

rounded down to the log of a positive integer by Δ. The upper side is the
witnessed value of max_S Ĩ^c_{0,2√ε}(ω^{RB}_S). The maximum over code
subspaces S is searched heuristically, so the upper value is an estimate of
the right-hand side from below; log d is reported next to it as the
unconditional ceiling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from qcap.common.config import DEFAULT_SEED, REFINE_STEPS, SEARCH_TRIALS
from qcap.common.errors import DomainError
from qcap.common.hardware.cpu import parallel_map
from qcap.common.logger import logger
from qcap.common.utils import UNBOUNDED, Objective, SequenceKind, spawn_seeds
from qcap.quantum.channel import ChannelSequence, CodeSubspace, KrausChannel, omega_states
from qcap.quantum.entropy import coherent_information, cond_H2
from qcap.quantum.qmatrix import dagger, haar_isometry, support_projector
from qcap.quantum.smoothing import SmoothedResult, smooth_Ic0_operator, smooth_Ic0_state

# snaps 2^x to an integer it misses by rounding only
FLOOR_SNAP = 1e-9
IMPROVEMENT_TOL = 1e-12


def delta_correction(x: float) -> float:
    """Δ(x) = x − log⌊2^x⌋ for x ≥ 0, always in [0, 1]."""
    if x < 0:
        raise DomainError(f"delta_correction needs x >= 0, got {x}")
    k = max(1, math.floor(2.0**x + FLOOR_SNAP))
    return min(1.0, max(0.0, x - math.log2(k)))


@dataclass
class SearchParams:
    """Budget of the heuristic search over code subspaces.

    ``code_dims`` defaults to every s in 1..d. ``oracle`` enables the
    state-ball random-rotation oracle on small ω^{RB}. ``delta_scan`` adds
    that many extra points of the lower-bound δ scan over [0, ε/4].
    """

    trials: int = SEARCH_TRIALS
    refine_steps: int = REFINE_STEPS
    seed: int = DEFAULT_SEED
    code_dims: Optional[Tuple[int, ...]] = None
    threads: int = 1
    oracle: bool = False
    delta_scan: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise DomainError(f"search needs at least one trial, got {self.trials}")
        if self.refine_steps < 0:
            raise DomainError(f"refine_steps must be nonnegative, got {self.refine_steps}")
        if self.code_dims is not None:
            self.code_dims = tuple(int(s) for s in self.code_dims)

    def dims_for(self, d: int) -> Tuple[int, ...]:
        dims = self.code_dims or tuple(range(1, d + 1))
        bad = [s for s in dims if not 1 <= s <= d]
        if bad:
            raise DomainError(f"code dims {bad} outside [1, {d}]")
        return dims

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "refine_steps": self.refine_steps,
            "seed": self.seed,
            "code_dims": list(self.code_dims) if self.code_dims else None,
            "threads": self.threads,
            "oracle": self.oracle,
            "delta_scan": self.delta_scan,
        }


def _smoothed(channel: KrausChannel, subspace: CodeSubspace, objective, delta, oracle):
    omega = omega_states(channel, subspace)
    match objective:
        case Objective.ic0_state:
            return smooth_Ic0_state(
                omega.rb, omega.rb_factors, delta, oracle=None if oracle else False
            )
        case Objective.ic0_operator:
            return smooth_Ic0_operator(omega.rb, omega.rb_factors, delta)
        case _:
            raise ValueError(f"Objective {objective} has no smoothed form")


def evaluate_subspace(
    channel: KrausChannel,
    subspace: CodeSubspace,
    objective: Objective | str,
    delta: float = 0.0,
    oracle: bool = False,
) -> float:
    """Objective value of one code subspace, larger is better.

    ``Ic2`` scores H_2(ω^{RE}|E) = −I^c_2(ω^{RE}), the quantity that makes the
    random-coding guarantee strong.
    """
    objective = Objective(str(objective))
    match objective:
        case Objective.ic0_state | Objective.ic0_operator:
            return _smoothed(channel, subspace, objective, delta, oracle).value
        case Objective.ic2:
            omega = omega_states(channel, subspace)
            return cond_H2(omega.re, omega.re_factors)
        case Objective.coherent_info:
            omega = omega_states(channel, subspace)
            return coherent_information(omega.rb, omega.rb_factors)
        case _:
            raise ValueError(f"Unsupported objective: {objective}")


@dataclass
class SearchResult:
    subspace: CodeSubspace
    value: float
    objective: Objective
    delta: float
    trial_values: List[float] = field(default_factory=list)
    best_trial: int = 0

    def to_dict(self) -> dict:
        return {
            "subspace": self.subspace,
            "value": self.value,
            "objective": self.objective,
            "delta": self.delta,
            "trial_values": self.trial_values,
            "best_trial": self.best_trial,
        }


def _refine(channel, iso, objective, delta, steps, rng, oracle):
    """Single-vector replacement hill climbing on the isometry columns."""
    d, s = iso.shape
    best = evaluate_subspace(channel, CodeSubspace(iso), objective, delta, oracle)
    if s == d:
        return best, iso
    for step in range(steps):
        j = step % s
        x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        x -= iso @ (dagger(iso) @ x)
        x /= np.linalg.norm(x)
        theta = rng.uniform(0.0, np.pi / 2) / (1 + step // s)
        cand = iso.copy()
        cand[:, j] = np.cos(theta) * iso[:, j] + np.sin(theta) * x
        value = evaluate_subspace(channel, CodeSubspace(cand), objective, delta, oracle)
        if value > best + IMPROVEMENT_TOL:
            best, iso = value, cand
            logger.debug(f"search s={s} step {step}: improved to {value:.9f}")
    return best, iso


def _search_trial(task) -> Tuple[float, np.ndarray]:
    channel, s, objective, delta, steps, index, child, oracle = task
    rng = np.random.default_rng(child)
    d = channel.in_dim
    # trial 0 starts from the first s basis vectors
    iso = np.eye(d, dtype=complex)[:, :s] if index == 0 else haar_isometry(d, s, rng)
    return _refine(channel, iso, objective, delta, steps, rng, oracle)


def _best(values: Sequence[float]) -> int:
    best_i, best_v = 0, -math.inf
    for i, v in enumerate(values):
        if v > best_v:
            best_i, best_v = i, v
    return best_i


def subspace_search(
    channel: KrausChannel,
    s: int,
    objective: Objective | str,
    budget: Optional[SearchParams] = None,
    seed=None,
    delta: float = 0.0,
) -> SearchResult:
    """Best s-dimensional code subspace found for ``objective``.

    Args:
        channel: the channel Φ.
        s (int): code dimension, 1 ≤ s ≤ d.
        objective: one of Ic0_state, Ic0_operator, Ic2, coherent_info.
        budget (SearchParams, optional): trials and refinement steps.
        seed (optional): int or SeedSequence, defaults to ``budget.seed``.
        delta (float, optional): smoothing parameter for smoothed objectives.

    Returns:
        SearchResult: witness subspace with its value; ties go to the lowest
        trial index, so the result depends on the seed only.
    """
    budget = budget or SearchParams()
    objective = Objective(str(objective))
    d = channel.in_dim
    if not 1 <= s <= d:
        raise DomainError(f"code dimension s={s} outside [1, {d}]")
    seed = budget.seed if seed is None else seed
    children = (
        seed.spawn(budget.trials)
        if isinstance(seed, np.random.SeedSequence)
        else spawn_seeds(seed, budget.trials)
    )
    tasks = [
        (channel, s, objective, delta, budget.refine_steps, i, child, budget.oracle)
        for i, child in enumerate(children)
    ]
    results = parallel_map(_search_trial, tasks, budget.threads)
    values = [v for v, _ in results]
    i = _best(values)
    return SearchResult(CodeSubspace(results[i][1]), values[i], objective, delta, values, i)


@dataclass
class BoundSide:
    """One side of the capacity bracket with its witnesses."""

    bits: float
    raw_bits: float
    delta: float
    subspace: Optional[CodeSubspace]
    smoothed: Optional[SmoothedResult]
    candidates: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "bits": self.bits,
            "raw_bits": self.raw_bits,
            "delta": self.delta,
            "subspace": self.subspace,
            "smoothed": self.smoothed,
            "candidates": self.candidates,
        }


def _check_epsilon(epsilon: float) -> float:
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError(f"epsilon must lie in [0, 1], got {epsilon}")
    if epsilon == 0:
        logger.warning("epsilon = 0: degenerate smoothing budget, evaluating at delta = 0")
    return float(epsilon)


def _dim_seeds(search: SearchParams, d: int):
    return spawn_seeds(search.seed, d + 1)


def lower_bound(
    channel: KrausChannel, epsilon: float, search: Optional[SearchParams] = None
) -> BoundSide:
    """max_S I^c_{0,ε/8}(ω^{RB}_S) + log[1/d + ε²/4], rounded by Δ.

    With ``search.delta_scan`` > 0 the witness subspace is re-evaluated on
    δ ∈ [0, ε/4] using log[1/d + (ε − 4δ)²] and the best δ is kept.
    """
    epsilon = _check_epsilon(epsilon)
    search = search or SearchParams()
    d = channel.in_dim
    delta = epsilon / 8
    seeds = _dim_seeds(search, d)
    per_dim = []
    for s in search.dims_for(d):
        res = subspace_search(channel, s, Objective.ic0_state, search, seeds[s], delta)
        per_dim.append({"code_dim": s, "value": res.value, "result": res})
    best = per_dim[_best([r["value"] for r in per_dim])]["result"]

    deltas = [delta]
    if search.delta_scan > 0:
        grid = np.linspace(0.0, epsilon / 4, search.delta_scan + 1)
        deltas += [float(x) for x in grid if not math.isclose(x, delta)]
    scan = []
    for dl in deltas:
        sm = _smoothed(channel, best.subspace, Objective.ic0_state, dl, search.oracle)
        raw = sm.value + math.log2(1 / d + (epsilon - 4 * dl) ** 2)
        scan.append((raw, dl, sm))
    raw, delta, smoothed = scan[_best([r[0] for r in scan])]

    x = max(raw, 0.0)
    bits = x - delta_correction(x)
    candidates = [
        {"code_dim": r["code_dim"], "value": r["value"]} for r in per_dim
    ] + [{"delta": dl, "raw_bits": r} for r, dl, _ in scan[1:]]
    logger.info(f"lower bound at epsilon={epsilon}: {bits:.6f} bits (raw {raw:.6f})")
    return BoundSide(bits, raw, delta, best.subspace, smoothed, candidates)


def upper_bound(
    channel: KrausChannel,
    epsilon: float,
    search: Optional[SearchParams] = None,
    lower: Optional[BoundSide] = None,
) -> BoundSide:
    """Witnessed max_S Ĩ^c_{0,2√ε}(ω^{RB}_S), capped by log d in ``bits``.

    When ``lower`` is given its witness subspace is evaluated too, with the
    support projector of its smoothed state added as a test operator, so the
    result is never below the lower bound. 2√ε ≥ 1 saturates at log d.
    """
    epsilon = _check_epsilon(epsilon)
    search = search or SearchParams()
    d = channel.in_dim
    cap = math.log2(d)
    delta = 2 * math.sqrt(epsilon)
    if delta >= 1:
        logger.warning(f"2*sqrt(epsilon) = {delta:.3f} >= 1: upper bound saturates at log d")
        return BoundSide(cap, UNBOUNDED, min(delta, 1.0), None, None)

    seeds = _dim_seeds(search, d)
    found = []
    for s in search.dims_for(d):
        res = subspace_search(channel, s, Objective.ic0_operator, search, seeds[s], delta)
        found.append((res.value, res.subspace, f"search s={s}"))
    if lower is not None and lower.subspace is not None:
        omega = omega_states(channel, lower.subspace)
        extra = [support_projector(lower.smoothed.witness)] if lower.smoothed else []
        sm = smooth_Ic0_operator(omega.rb, omega.rb_factors, delta, extra)
        found.append((sm.value, lower.subspace, "lower witness"))
    i = _best([f[0] for f in found])
    value, subspace, origin = found[i]
    omega = omega_states(channel, subspace)
    extra = (
        [support_projector(lower.smoothed.witness)]
        if origin == "lower witness" and lower.smoothed
        else []
    )
    smoothed = smooth_Ic0_operator(omega.rb, omega.rb_factors, delta, extra)
    candidates = [{"origin": o, "value": v} for v, _, o in found]
    logger.info(f"upper estimate at epsilon={epsilon}: {value:.6f} bits ({origin})")
    return BoundSide(min(value, cap), value, delta, subspace, smoothed, candidates)


@dataclass
class BoundReport:
    epsilon: float
    input_dim: int
    lower: BoundSide
    upper: BoundSide
    search_budget: SearchParams
    warnings: List[str] = field(default_factory=list)

    @property
    def lower_bits(self) -> float:
        return self.lower.bits

    @property
    def upper_bits(self) -> float:
        return self.upper.bits

    @property
    def upper_cap_bits(self) -> float:
        return math.log2(self.input_dim)

    @property
    def delta_correction(self) -> float:
        return delta_correction(max(self.lower.raw_bits, 0.0))

    @property
    def saturated(self) -> bool:
        return self.upper.subspace is None

    @property
    def slack(self) -> float:
        """How far the lower bound exceeds the upper estimate, 0 when sandwiched."""
        return max(0.0, self.lower_bits - self.upper_bits)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "input_dim": self.input_dim,
            "lower_bits": self.lower_bits,
            "lower_raw_bits": self.lower.raw_bits,
            "upper_bits": self.upper_bits,
            "upper_raw_bits": self.upper.raw_bits,
            "upper_kind": "witnessed lower estimate of the upper-bound expression",
            "upper_cap_bits": self.upper_cap_bits,
            "delta_correction": self.delta_correction,
            "saturated": self.saturated,
            "slack": self.slack,
            "lower_witness": self.lower,
            "upper_witness": self.upper,
            "search_budget": self.search_budget,
            "warnings": self.warnings,
        }


def bound_report(
    channel: KrausChannel, epsilon: float, search: Optional[SearchParams] = None
) -> BoundReport:
    """Both sides of the bracket with shared search seeds."""
    search = search or SearchParams()
    warnings = []
    if epsilon == 0:
        warnings.append("epsilon = 0: lower bound degenerates to the delta = 0 evaluation")
    lower = lower_bound(channel, epsilon, search)
    upper = upper_bound(channel, epsilon, search, lower)
    if upper.subspace is None:
        warnings.append("2*sqrt(epsilon) >= 1: upper bound saturated at log d")
    report = BoundReport(epsilon, channel.in_dim, lower, upper, search, warnings)
    if report.slack > 1e-6:
        logger.warning(f"lower bound exceeds upper estimate by {report.slack:.3e} bits")
    return report


@dataclass
class QminBracket:
    """Q_ent(Φ;ε) − 1 ≤ Q_min(Φ;2ε) ≤ Q_ent(Φ;4ε)."""

    epsilon: float
    lower_bits: float
    upper_bits: float
    upper_cap_bits: float
    saturated: bool

    @property
    def width(self) -> float:
        return self.upper_bits - self.lower_bits

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "lower_bits": self.lower_bits,
            "upper_bits": self.upper_bits,
            "upper_cap_bits": self.upper_cap_bits,
            "saturated": self.saturated,
            "width": self.width,
        }


def qmin_bracket(
    channel: KrausChannel, epsilon: float, search: Optional[SearchParams] = None
) -> QminBracket:
    if epsilon <= 0:
        raise DomainError(f"qmin bracket needs epsilon > 0, got {epsilon}")
    search = search or SearchParams()
    # Q_ent is nondecreasing in ε and every budget ≥ 1 already admits log d
    lower = lower_bound(channel, min(epsilon, 1.0), search)
    upper = upper_bound(channel, min(4 * epsilon, 1.0), search, lower)
    return QminBracket(
        epsilon,
        max(0.0, lower.bits - 1),
        upper.bits,
        math.log2(channel.in_dim),
        upper.subspace is None,
    )


def max_coherent_information(
    channel: KrausChannel, search: Optional[SearchParams] = None
) -> SearchResult:
    """max_S I^c(S, Φ) over the searched code dimensions."""
    search = search or SearchParams()
    d = channel.in_dim
    seeds = _dim_seeds(search, d)
    results = [
        subspace_search(channel, s, Objective.coherent_info, search, seeds[s])
        for s in search.dims_for(d)
    ]
    return results[_best([r.value for r in results])]


def per_use_rates(
    seq: ChannelSequence,
    epsilon: float,
    n_max: Optional[int] = None,
    search: Optional[SearchParams] = None,
) -> pd.DataFrame:
    """Bounds per channel use for Φ_1, ..., Φ_{n_max}.

    Columns: n, input_dim, lower_bits, upper_bits, lower_rate, upper_rate,
    saturated and, for iid sequences, coherent_rate = max_S I^c(S,Φ^{⊗n})/n.
    """
    search = search or SearchParams()
    n_max = seq.n_max if n_max is None else n_max
    if not 1 <= n_max <= seq.n_max:
        raise DomainError(f"n_max must lie in [1, {seq.n_max}], got {n_max}")
    rows = []
    for n in range(1, n_max + 1):
        channel = seq.channel(n)
        report = bound_report(channel, epsilon, search)
        coherent = math.nan
        if seq.kind == SequenceKind.iid:
            coherent = max_coherent_information(channel, search).value / n
        rows.append(
            {
                "n": n,
                "input_dim": channel.in_dim,
                "lower_bits": report.lower_bits,
                "upper_bits": report.upper_bits,
                "lower_rate": report.lower_bits / n,
                "upper_rate": report.upper_bits / n,
                "coherent_rate": coherent,
                "saturated": report.saturated,
            }
        )
        logger.info(f"n={n}: lower/n={rows[-1]['lower_rate']:.6f}")
    return pd.DataFrame(rows)
