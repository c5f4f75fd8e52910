"""Monte-Carlo simulation of random entanglement-transmission codes.

A code of rank m is drawn by rotating the reference system of Ω_S with a
Haar unitary U_g and projecting onto its first m levels,

    |Ω_{m,g}⟩ = √(s/m) (P_m U_g ⊗ 𝟙_B ⊗ 𝟙_E) |Ω_S⟩,

so that ω^R_{m,g} = 𝟙_m/m. Every sample is decoded with the Uhlmann decoder
built from its own ω^{RB}, which makes the simulated fidelity a lower
estimate of the best achievable one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from scipy.stats import ks_2samp

from qcap.common.config import MIN_TRIALS
from qcap.common.errors import DimensionError, DomainError, TrialBudgetError
from qcap.common.hardware.cpu import parallel_map
from qcap.common.logger import logger
from qcap.common.utils import make_rng, spawn_seeds
from qcap.quantum.channel import CodeSubspace, KrausChannel, KrausMap, OmegaStates
from qcap.quantum.entropy import coherent_info_2
from qcap.quantum.qmatrix import (
    FactorSpec,
    as_bipartite,
    dagger,
    eigh,
    fidelity,
    haar_unitary,
    partial_trace,
    purify,
    random_pure_state,
    trace_distance,
)
from qcap.quantum.smoothing import smooth_Ic2_state

MARGINAL_TOL = 1e-8
DECODER_TOL = 1e-8
# slack for estimates that equal the bound up to rounding
ROUNDING_TOL = 1e-9
HILL_STEPS = 60
HILL_STEP_SIZE = 0.3


@dataclass
class CodeEnsemble:
    """Ω_S of a channel restricted to a code subspace, in matrix form.

    ``omega`` has shape (s, d_B, d_E) and ``psi`` shape (s, d_A), both
    indexed by the reference system first.
    """

    omega: np.ndarray
    psi: np.ndarray

    @classmethod
    def of(cls, channel: KrausChannel, subspace: CodeSubspace) -> "CodeEnsemble":
        states = OmegaStates(channel, subspace)
        s, d_b, d_e = states.factors.dims
        omega = states.omega.reshape(s, d_b, d_e)
        psi = states.psi_ra(subspace).reshape(s, subspace.ambient_dim)
        return cls(omega, psi)

    @property
    def code_dim(self) -> int:
        return self.omega.shape[0]

    @property
    def input_dim(self) -> int:
        return self.psi.shape[1]

    def rotated(self, u: np.ndarray) -> "CodeEnsemble":
        """The same ensemble with (U ⊗ 𝟙)Ω_S, U acting on the reference."""
        return CodeEnsemble(np.einsum("rq,qbe->rbe", u, self.omega), u @ self.psi)


@dataclass
class CodeSample:
    """One rank-m code of the ensemble, Ω_{m,g} on R⊗B⊗E and Ψ_{m,g} on R⊗A."""

    g_seed: int
    m: int
    omega: np.ndarray
    psi: np.ndarray

    @property
    def factors(self) -> FactorSpec:
        _, d_b, d_e = self.omega.shape
        return FactorSpec((self.m, d_b, d_e), ("R", "B", "E"))

    @property
    def rb(self) -> np.ndarray:
        rb = np.einsum("rbe,qce->rbqc", self.omega, self.omega.conj())
        d = self.m * self.omega.shape[1]
        return rb.reshape(d, d)

    @property
    def re(self) -> np.ndarray:
        re = np.einsum("rbe,qbf->reqf", self.omega, self.omega.conj())
        d = self.m * self.omega.shape[2]
        return re.reshape(d, d)

    @property
    def r(self) -> np.ndarray:
        return np.einsum("rbe,qbe->rq", self.omega, self.omega.conj())

    @property
    def e(self) -> np.ndarray:
        return np.einsum("rbe,rbf->ef", self.omega, self.omega.conj())

    @property
    def psi_ra(self) -> np.ndarray:
        return self.psi.reshape(-1)

    @property
    def rb_factors(self) -> FactorSpec:
        return self.factors.select(("R", "B"))

    @property
    def re_factors(self) -> FactorSpec:
        return self.factors.select(("R", "E"))


def _seed_label(seed) -> int:
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.spawn_key[-1]) if seed.spawn_key else int(seed.entropy)
    return int(seed)


def sample_code(
    ensemble: CodeEnsemble, m: int, seed=0, unitary: Optional[np.ndarray] = None
) -> CodeSample:
    """Draw the rank-m code for a Haar U_g, or for ``unitary`` when given.

    Args:
        ensemble (CodeEnsemble): Ω_S and Ψ_S of the code subspace.
        m (int): code rank, 1 ≤ m ≤ s.
        seed (int | SeedSequence, optional): seed of U_g.
        unitary (np.ndarray, optional): fixed s×s unitary replacing U_g.

    Returns:
        CodeSample: normalized Ω_{m,g} and Ψ_{m,g}.
    """
    s = ensemble.code_dim
    if not 1 <= m <= s:
        raise DomainError(f"code rank m={m} must lie in [1, s={s}]")
    if unitary is None:
        unitary = haar_unitary(s, make_rng(seed))
    elif unitary.shape != (s, s):
        raise DimensionError(f"unitary of shape {unitary.shape}, expected ({s}, {s})")
    scale = math.sqrt(s / m)
    head = unitary[:m, :]
    omega = scale * np.einsum("rq,qbe->rbe", head, ensemble.omega)
    psi = scale * (head @ ensemble.psi)
    return CodeSample(_seed_label(seed), m, omega, psi)


def decoupling_fidelity(sample: CodeSample) -> float:
    """F²(ω^{RE}_{m,g}, τ^R_m ⊗ ω^E_{m,g})."""
    product = np.kron(np.eye(sample.m) / sample.m, sample.e)
    return fidelity(sample.re, product) ** 2


def decoupling_distance(sample: CodeSample) -> float:
    product = np.kron(np.eye(sample.m) / sample.m, sample.e)
    return trace_distance(sample.re, product)


def uhlmann_decoder(omega_rb: np.ndarray, psi_ra: np.ndarray, factors) -> KrausChannel:
    """Decoder B → A aligning a purification of ω^{RB} with Ψ^{RA} ⊗ χ^{EA'}.

    With Ω^{RBE} purifying ω^{RB} and χ^{EA'} purifying ω^E, the overlap
    ⟨Ψ⊗χ|(𝟙⊗V)|Ω⟩ = Tr[V C] is maximised over contractions by the polar
    part of C, giving ‖C‖_1 = F(ω^{RE}, ω^R⊗ω^E). V is completed to a channel
    by sending the kernel of V†V to |0⟩.

    Args:
        omega_rb (np.ndarray): state on R⊗B.
        psi_ra (np.ndarray): pure state on R⊗A purifying ω^R.
        factors: (R, B) factor spec or (d_R, d_B) pair.

    Returns:
        KrausChannel: the decoder from B to A.
    """
    factors = as_bipartite(factors)
    d_r, d_b = factors.dims
    psi_ra = np.asarray(psi_ra, dtype=complex).reshape(-1)
    if psi_ra.size % d_r:
        raise DimensionError(f"Ψ of size {psi_ra.size} does not factor over d_R={d_r}")
    psi = psi_ra.reshape(d_r, psi_ra.size // d_r)
    d_a = psi.shape[1]
    omega_r = partial_trace(omega_rb, factors, (factors.labels[0],))
    gap = float(np.max(np.abs(omega_r - psi @ dagger(psi))))
    if gap > MARGINAL_TOL:
        raise DomainError(f"Ψ_RA does not purify ω^R, marginal gap {gap:.3e}")
    vec, pf = purify(omega_rb)
    omega = vec.reshape(d_r, d_b, pf.dims[1])
    w, u = eigh(np.einsum("rbe,rbf->ef", omega, omega.conj()))
    keep = w > 0
    # χ[e, k] = √μ_k ⟨e|e_k⟩
    chi = u[:, keep] * np.sqrt(w[keep])
    k = chi.shape[1]
    c = np.einsum("rbe,ra,ek->bak", omega, psi.conj(), chi.conj()).reshape(d_b, d_a * k)
    left, _, right = np.linalg.svd(c, full_matrices=False)
    v = dagger(right) @ dagger(left)
    ops = list(v.reshape(d_a, k, d_b).transpose(1, 0, 2))
    wq, q = eigh(np.eye(d_b) - dagger(v) @ v)
    for j in np.flatnonzero(wq > 0.5):
        op = np.zeros((d_a, d_b), dtype=complex)
        op[0] = q[:, j].conj()
        ops.append(op)
    return KrausChannel(ops)


def decoded_fidelity(
    decoder: KrausMap, omega_rb: np.ndarray, psi_ra: np.ndarray, d_r: int
) -> float:
    """⟨Ψ|(id_R ⊗ D)(ω^{RB})|Ψ⟩."""
    psi = np.asarray(psi_ra).reshape(d_r, decoder.out_dim)
    d_b = decoder.in_dim
    # v_k = (𝟙 ⊗ K_k†)|Ψ⟩ on R⊗B
    v = np.einsum("kab,ra->krb", decoder.kraus.conj(), psi).reshape(-1, d_r * d_b)
    return float(np.einsum("ki,ij,kj->", v.conj(), omega_rb, v).real)


def entanglement_fidelity(channel: KrausMap) -> float:
    """F_e(Λ) = Σ_k |Tr K_k|²/m² for Λ acting on an m-dim space."""
    if channel.in_dim != channel.out_dim:
        raise DimensionError(
            f"entanglement fidelity needs in_dim == out_dim, got "
            f"{channel.in_dim} -> {channel.out_dim}"
        )
    traces = np.trace(channel.kraus, axis1=1, axis2=2)
    return float(np.sum(np.abs(traces) ** 2) / channel.in_dim**2)


def coding_guarantee(m: int, s: int, ic2: float, delta: float = 0.0) -> float:
    """1 − 4δ − √(m·max(0, 2^{I^c_2} − 1/s))."""
    excess = 2.0**ic2 - 1.0 / s
    if excess < 1e-12:
        excess = 0.0
    return 1 - 4 * delta - math.sqrt(m * excess)


def _trial(task) -> dict:
    ensemble, m, seed = task
    sample = sample_code(ensemble, m, seed)
    decoder = uhlmann_decoder(sample.rb, sample.psi_ra, sample.rb_factors)
    return {
        "trial": sample.g_seed,
        "decoded": decoded_fidelity(decoder, sample.rb, sample.psi_ra, m),
        "decoupling": decoupling_fidelity(sample),
        "trace_norm": decoupling_distance(sample),
    }


@dataclass
class RandomCodingReport:
    """Group-averaged decoded fidelity against the random-coding guarantee."""

    m: int
    s: int
    delta: float
    ic2: float
    rhs: float
    trials: int
    seed: int
    samples: pd.DataFrame = field(repr=False)

    @property
    def estimate(self) -> float:
        return float(self.samples["decoded"].mean())

    @property
    def standard_error(self) -> float:
        return float(self.samples["decoded"].std(ddof=1) / math.sqrt(self.trials))

    @property
    def decoupling_mean(self) -> float:
        return float(self.samples["decoupling"].mean())

    @property
    def trace_norm_mean(self) -> float:
        return float(self.samples["trace_norm"].mean())

    @property
    def decoder_violations(self) -> int:
        gap = self.samples["decoupling"] - self.samples["decoded"]
        return int((gap > DECODER_TOL).sum())

    @property
    def passes(self) -> bool:
        return self.estimate >= self.rhs - 3 * self.standard_error - ROUNDING_TOL

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "s": self.s,
            "delta": self.delta,
            "ic2": self.ic2,
            "rhs": self.rhs,
            "estimate": self.estimate,
            "standard_error": self.standard_error,
            "decoupling_mean": self.decoupling_mean,
            "trace_norm_mean": self.trace_norm_mean,
            "decoder_violations": self.decoder_violations,
            "trials": self.trials,
            "seed": self.seed,
            "passes": self.passes,
        }


def verify_random_coding(
    channel: KrausChannel,
    subspace: CodeSubspace,
    m: int,
    delta: float = 0.0,
    trials: int = 1000,
    seed: int = 0,
    threads: int = 1,
) -> RandomCodingReport:
    """Estimate the group-averaged fidelity of rank-m codes inside ``subspace``.

    The guarantee uses I^c_2(ω^{RE}_S), smoothed over the state ball when
    δ > 0. Each trial decodes its own sample with the Uhlmann decoder.

    Args:
        channel (KrausChannel): the channel Φ.
        subspace (CodeSubspace): code space S of dimension s ≥ m.
        m (int): code rank.
        delta (float, optional): smoothing radius. Defaults to 0.
        trials (int, optional): Monte-Carlo samples, at least MIN_TRIALS.
        seed (int, optional): root seed, one child per trial.
        threads (int, optional): worker processes.

    Returns:
        RandomCodingReport: estimate, standard error and the guarantee.
    """
    if trials < MIN_TRIALS:
        raise TrialBudgetError(f"trials must be at least {MIN_TRIALS}, got {trials}")
    if not 0.0 <= delta <= 1.0:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    s = subspace.code_dim
    if not 1 <= m <= s:
        raise DomainError(f"code rank m={m} must lie in [1, s={s}]")
    states = OmegaStates(channel, subspace)
    if delta > 0:
        ic2 = smooth_Ic2_state(states.re, states.re_factors, delta).value
    else:
        ic2 = coherent_info_2(states.re, states.re_factors)
    rhs = coding_guarantee(m, s, ic2, delta)
    ensemble = CodeEnsemble.of(channel, subspace)
    tasks = [(ensemble, m, child) for child in spawn_seeds(seed, trials)]
    rows = parallel_map(_trial, tasks, threads)
    report = RandomCodingReport(m, s, delta, ic2, rhs, trials, seed, pd.DataFrame(rows))
    if report.decoder_violations:
        logger.warning(f"{report.decoder_violations} samples decode below their decoupling fidelity")
    logger.info(
        f"m={m} s={s}: estimate {report.estimate:.6f} ± {report.standard_error:.2e}, "
        f"guarantee {rhs:.6f}"
    )
    return report


def haar_invariance_check(
    ensemble: CodeEnsemble, m: int, samples: int = 500, seed: int = 0
) -> dict:
    """Two-sample KS test of Tr[(ω^E_{m,g})²] under a fixed pre-rotation of Ω_S.

    Returns:
        dict: KS statistic and p-value with the sample size.
    """
    rng = make_rng(seed)
    rotation = haar_unitary(ensemble.code_dim, rng)
    rotated = ensemble.rotated(rotation)
    children = spawn_seeds(seed, 2 * samples)
    plain_seeds, rotated_seeds = children[::2], children[1::2]

    def purities(ens, seeds):
        out = []
        for child in seeds:
            e = sample_code(ens, m, child).e
            out.append(float(np.real(np.trace(e @ e))))
        return np.array(out)

    result = ks_2samp(purities(ensemble, plain_seeds), purities(rotated, rotated_seeds))
    return {"statistic": float(result.statistic), "pvalue": float(result.pvalue), "samples": samples}


@dataclass
class AverageFidelityReport:
    m: int
    trials: int
    mean: float
    standard_error: float
    entanglement_fidelity: float

    @property
    def formula(self) -> float:
        return (self.m * self.entanglement_fidelity + 1) / (self.m + 1)

    @property
    def difference(self) -> float:
        return self.mean - self.formula

    @property
    def agrees(self) -> bool:
        return abs(self.difference) <= 3 * self.standard_error + 1e-12

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "trials": self.trials,
            "mean": self.mean,
            "standard_error": self.standard_error,
            "entanglement_fidelity": self.entanglement_fidelity,
            "formula": self.formula,
            "agrees": self.agrees,
        }


def _pure_fidelities(kraus: np.ndarray, states: np.ndarray) -> np.ndarray:
    """⟨φ|Λ(φ)|φ⟩ = Σ_k |⟨φ|K_k|φ⟩|² for each row φ."""
    amp = np.einsum("ni,kij,nj->nk", states.conj(), kraus, states)
    return np.sum(np.abs(amp) ** 2, axis=1)


def _haar_states(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def avg_fidelity_identity_check(
    channel: KrausMap, trials: int = 5000, seed: int = 0
) -> AverageFidelityReport:
    """Haar average of ⟨φ|Λ(φ)|φ⟩ against (m F_e(Λ) + 1)/(m + 1)."""
    if trials < MIN_TRIALS:
        raise TrialBudgetError(f"trials must be at least {MIN_TRIALS}, got {trials}")
    f_e = entanglement_fidelity(channel)
    m = channel.in_dim
    values = _pure_fidelities(channel.kraus, _haar_states(m, trials, make_rng(seed)))
    se = float(np.std(values, ddof=1) / math.sqrt(trials))
    return AverageFidelityReport(m, trials, float(np.mean(values)), se, f_e)


def composite_code_map(
    channel: KrausChannel, code: np.ndarray, decoder: KrausMap
) -> KrausMap:
    """X ↦ W† D(Φ(W X W†)) W for a code isometry W: m → A."""
    ops = np.einsum("ai,jab,kbc,cl->jkil", code.conj(), decoder.kraus, channel.kraus, code)
    m = code.shape[1]
    return KrausMap(ops.reshape(-1, m, m))


@dataclass
class PruningReport:
    """Sampled evidence about the pruning bound F_min(m/2) ≥ 1 − 2(1 − F_ent(m)).

    Sampled minima overestimate the true minimum, so ``consistent`` is
    evidence in one direction only.
    """

    m: int
    entanglement_fidelity: float
    sampled_min: float
    adversarial_min: float
    half_basis: str
    samples: int
    restarts: int

    @property
    def bound(self) -> float:
        return 1 - 2 * (1 - self.entanglement_fidelity)

    @property
    def consistent(self) -> bool:
        return self.adversarial_min >= self.bound - ROUNDING_TOL

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "entanglement_fidelity": self.entanglement_fidelity,
            "bound": self.bound,
            "sampled_min": self.sampled_min,
            "adversarial_min": self.adversarial_min,
            "half_basis": self.half_basis,
            "samples": self.samples,
            "restarts": self.restarts,
            "consistent": self.consistent,
        }


def _half_bases(composite: KrausMap, h: int) -> dict:
    m = composite.in_dim
    traces = np.trace(composite.kraus, axis1=1, axis2=2)
    dominant = np.einsum("k,kij->ij", traces.conj(), composite.kraus) / m
    _, u = eigh((dominant + dagger(dominant)) / 2)
    return {"leading": np.eye(m)[:, :h], "dominant_kraus": u[:, ::-1][:, :h]}


def _hill_climb(kraus: np.ndarray, basis: np.ndarray, rng: np.random.Generator) -> float:
    h = basis.shape[1]
    c = random_pure_state(h, rng)
    value = _pure_fidelities(kraus, (basis @ c)[None, :])[0]
    step = HILL_STEP_SIZE
    for _ in range(HILL_STEPS):
        trial = c + step * (rng.standard_normal(h) + 1j * rng.standard_normal(h))
        trial /= np.linalg.norm(trial)
        new = _pure_fidelities(kraus, (basis @ trial)[None, :])[0]
        if new < value:
            c, value = trial, new
        else:
            step /= 1.5
    return float(value)


def pruning_check(
    channel: KrausChannel,
    subspace: CodeSubspace,
    m: int,
    decoder: Optional[KrausMap] = None,
    samples: int = 1000,
    restarts: int = 50,
    seed: int = 0,
) -> PruningReport:
    """Estimate the minimum fidelity on a half-dimensional code with a fixed decoder.

    The rank-m code is spanned by the first m columns of ``subspace``; the
    default decoder is the Uhlmann decoder of that code. Two candidate halves
    are sampled and the better one is attacked by hill climbing.
    """
    if m < 2 or m % 2:
        raise DomainError(f"pruning needs an even code rank m >= 2, got {m}")
    if m > subspace.code_dim:
        raise DomainError(f"code rank m={m} exceeds s={subspace.code_dim}")
    code = CodeSubspace(subspace.isometry[:, :m])
    if decoder is None:
        states = OmegaStates(channel, code)
        decoder = uhlmann_decoder(states.rb, states.psi_ra(code), states.rb_factors)
    composite = composite_code_map(channel, code.isometry, decoder)
    f_ent = entanglement_fidelity(composite)
    rng = make_rng(seed)
    h = m // 2
    sampled = {}
    for name, basis in _half_bases(composite, h).items():
        states_h = _haar_states(h, samples, rng) @ basis.T
        sampled[name] = float(np.min(_pure_fidelities(composite.kraus, states_h)))
    best = max(sampled, key=sampled.get)
    basis = _half_bases(composite, h)[best]
    attacked = min(_hill_climb(composite.kraus, basis, rng) for _ in range(restarts))
    report = PruningReport(
        m, f_ent, sampled[best], min(sampled[best], attacked), best, samples, restarts
    )
    logger.debug(f"pruning check: {report.to_dict()}")
    return report
