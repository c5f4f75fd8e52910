"""Quantum channels in Kraus form and the maps derived from them."""

from __future__ import annotations

from itertools import product
from typing import Dict, List, Optional, Sequence

import numpy as np

from qcap.common.config import KRAUS_DROP_TOL, MAX_QUBITS, TP_TOL
from qcap.common.errors import DimensionError, DomainError, ResourceError
from qcap.common.logger import logger
from qcap.common.utils import SequenceKind, make_rng
from qcap.quantum.qmatrix import (
    FactorSpec,
    check_square,
    dagger,
    eigh,
    haar_isometry,
    kron_all,
    reduced_state,
)


class KrausMap:
    """Completely positive map ρ ↦ Σ_k K_k ρ K_k†.

    The operators are stored stacked as an array of shape (k, out_dim, in_dim).
    Operators with Frobenius norm below ``KRAUS_DROP_TOL`` are dropped.
    """

    def __init__(self, kraus_ops: Sequence[np.ndarray] | np.ndarray):
        ops = np.asarray(
            [np.atleast_2d(np.asarray(k, dtype=complex)) for k in kraus_ops]
        )
        if ops.ndim != 3 or ops.shape[0] == 0:
            raise DimensionError("a Kraus map needs a nonempty list of equal-shape matrices")
        norms = np.linalg.norm(ops, axis=(1, 2))
        keep = norms >= KRAUS_DROP_TOL
        if not np.any(keep):
            keep = norms == norms.max()
        self.kraus = ops[keep]
        self.kraus.setflags(write=False)

    @property
    def in_dim(self) -> int:
        return self.kraus.shape[2]

    @property
    def out_dim(self) -> int:
        return self.kraus.shape[1]

    @property
    def kraus_rank(self) -> int:
        return self.kraus.shape[0]

    @property
    def kraus_ops(self) -> List[np.ndarray]:
        return list(self.kraus)

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(in_dim={self.in_dim}, out_dim={self.out_dim}, "
            f"kraus_rank={self.kraus_rank})"
        )

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return self.apply(rho)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = check_square(rho)
        if rho.shape[0] != self.in_dim:
            raise DimensionError(
                f"input dim {rho.shape[0]} does not match channel in_dim {self.in_dim}"
            )
        return np.einsum("kij,jl,kml->im", self.kraus, rho, self.kraus.conj())

    def apply_on_factor(
        self, op: np.ndarray, factors: FactorSpec, label: str
    ) -> np.ndarray:
        """(id ⊗ Φ) on one tensor factor; the factor keeps its position."""
        pos = factors.index(label)
        if factors.dims[pos] != self.in_dim:
            raise DimensionError(
                f"factor {label} has dim {factors.dims[pos]}, channel in_dim {self.in_dim}"
            )
        left = int(np.prod(factors.dims[:pos]))
        right = int(np.prod(factors.dims[pos + 1 :]))
        ops = [kron_all([np.eye(left), k, np.eye(right)]) for k in self.kraus]
        return sum(k @ op @ dagger(k) for k in ops)

    def adjoint(self) -> "KrausMap":
        """Heisenberg-picture map X ↦ Σ_k K_k† X K_k."""
        return KrausMap(dagger(self.kraus))

    def choi(self, normalized: bool = True) -> np.ndarray:
        """Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|) on in⊗out, divided by in_dim when normalized."""
        d_in, d_out = self.in_dim, self.out_dim
        # vec of each Kraus op over (in, out): K[b, a] -> w[a, b]
        vecs = self.kraus.transpose(0, 2, 1).reshape(self.kraus_rank, d_in * d_out)
        j = vecs.T @ vecs.conj()
        return j / d_in if normalized else j

    def is_trace_preserving(self, tol: float = TP_TOL) -> bool:
        gram = np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)
        return bool(np.max(np.abs(gram - np.eye(self.in_dim))) <= tol)

    def is_unital(self, tol: float = TP_TOL) -> bool:
        out = np.einsum("kij,klj->il", self.kraus, self.kraus.conj())
        return bool(np.max(np.abs(out - np.eye(self.out_dim))) <= tol)


class KrausChannel(KrausMap):
    """CPTP map, Σ_k K_k† K_k = 𝟙_in within ``tol``."""

    def __init__(self, kraus_ops: Sequence[np.ndarray] | np.ndarray, tol: float = TP_TOL):
        super().__init__(kraus_ops)
        if not self.is_trace_preserving(tol):
            gram = np.einsum("kji,kjl->il", self.kraus.conj(), self.kraus)
            gap = np.max(np.abs(gram - np.eye(self.in_dim)))
            raise DomainError(f"Kraus operators are not trace preserving, gap {gap:.3e}")

    def stinespring(self) -> np.ndarray:
        """Isometry V: A → B⊗E with V|a⟩ = Σ_e K_e|a⟩ ⊗ |e⟩."""
        k, d_out, d_in = self.kraus.shape
        return self.kraus.transpose(1, 0, 2).reshape(d_out * k, d_in)

    def complement(self) -> "KrausChannel":
        """Channel to the environment, ρ ↦ Tr_B[VρV†]."""
        # F_b[e, a] = K_e[b, a]
        return KrausChannel(self.kraus.transpose(1, 0, 2))

    def restrict(self, subspace: "CodeSubspace") -> "KrausChannel":
        if subspace.ambient_dim != self.in_dim:
            raise DimensionError(
                f"subspace lives in dim {subspace.ambient_dim}, channel in_dim {self.in_dim}"
            )
        return KrausChannel(self.kraus @ subspace.isometry)

    def compose(self, first: "KrausChannel") -> "KrausChannel":
        """self ∘ first."""
        if first.out_dim != self.in_dim:
            raise DimensionError(
                f"cannot compose: {first.out_dim} outputs into {self.in_dim} inputs"
            )
        ops = np.einsum("kij,ljm->klim", self.kraus, first.kraus)
        return KrausChannel(ops.reshape(-1, self.out_dim, first.in_dim)).compressed()

    def tensor(self, other: "KrausChannel") -> "KrausChannel":
        ops = [np.kron(a, b) for a in self.kraus for b in other.kraus]
        return KrausChannel(ops).compressed()

    def compressed(self) -> "KrausChannel":
        """Minimal Kraus form when the list exceeds the Choi rank bound."""
        if self.kraus_rank <= self.in_dim * self.out_dim:
            return self
        return from_choi(self.choi(normalized=False), self.in_dim, self.out_dim)

    def to_dict(self) -> dict:
        from qcap.common.export import matrix_to_json

        return {
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "kraus": [matrix_to_json(k) for k in self.kraus],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KrausChannel":
        from qcap.common.export import matrix_from_json

        ops = [matrix_from_json(k, f"kraus[{i}]") for i, k in enumerate(data["kraus"])]
        for i, k in enumerate(ops):
            if k.shape != (data["out_dim"], data["in_dim"]):
                raise DimensionError(
                    f"kraus[{i}] has shape {k.shape}, expected "
                    f"({data['out_dim']}, {data['in_dim']})"
                )
        return cls(ops)


def from_choi(choi: np.ndarray, in_dim: int, out_dim: int) -> KrausChannel:
    """Kraus form from an unnormalized Choi matrix on in⊗out."""
    w, v = eigh(choi)
    keep = w > KRAUS_DROP_TOL**2 * max(w[-1], 1.0)
    ops = []
    for lam, vec in zip(w[keep][::-1], v[:, keep].T[::-1]):
        ops.append(np.sqrt(lam) * vec.reshape(in_dim, out_dim).T)
    return KrausChannel(ops)


class CodeSubspace:
    """Code space 𝒮 ⊆ ℋ_A given by a d×s isometry."""

    def __init__(self, isometry: np.ndarray, tol: float = 1e-10):
        w = np.asarray(isometry, dtype=complex)
        if w.ndim == 1:
            w = w.reshape(-1, 1)
        if w.ndim != 2 or w.shape[1] > w.shape[0] or w.shape[1] < 1:
            raise DimensionError(f"isometry must be d×s with 1 ≤ s ≤ d, got {w.shape}")
        gap = np.max(np.abs(dagger(w) @ w - np.eye(w.shape[1])))
        if gap > tol:
            raise DomainError(f"columns are not orthonormal, max gap {gap:.3e}")
        self.isometry = w
        self.isometry.setflags(write=False)

    @property
    def ambient_dim(self) -> int:
        return self.isometry.shape[0]

    @property
    def code_dim(self) -> int:
        return self.isometry.shape[1]

    @property
    def projector(self) -> np.ndarray:
        return self.isometry @ dagger(self.isometry)

    @classmethod
    def full(cls, d: int) -> "CodeSubspace":
        return cls(np.eye(d))

    @classmethod
    def first(cls, d: int, s: int) -> "CodeSubspace":
        return cls(np.eye(d)[:, :s])

    @classmethod
    def random(cls, d: int, s: int, rng) -> "CodeSubspace":
        return cls(haar_isometry(d, s, make_rng(rng)))

    def __repr__(self) -> str:
        return f"CodeSubspace(ambient_dim={self.ambient_dim}, code_dim={self.code_dim})"

    def to_dict(self) -> dict:
        from qcap.common.export import matrix_to_json

        return {
            "ambient_dim": self.ambient_dim,
            "code_dim": self.code_dim,
            "isometry": matrix_to_json(self.isometry),
        }


class OmegaStates:
    """Ω^{RBE}_S = (𝟙_R ⊗ V)|Ψ^{RA}_S⟩ and its two marginals.

    R has dimension s, so ω^R = 𝟙_s/s.
    """

    def __init__(self, channel: KrausChannel, subspace: CodeSubspace):
        if subspace.ambient_dim != channel.in_dim:
            raise DimensionError(
                f"subspace lives in dim {subspace.ambient_dim}, channel in_dim {channel.in_dim}"
            )
        s = subspace.code_dim
        d_b, d_e = channel.out_dim, channel.kraus_rank
        # Ω[r, b, e] = (V W)[(b, e), r] / √s
        vw = channel.stinespring() @ subspace.isometry
        self.omega = (vw.T / np.sqrt(s)).reshape(s * d_b * d_e)
        self.factors = FactorSpec((s, d_b, d_e), ("R", "B", "E"))
        self.code_dim = s
        self.rb = reduced_state(self.omega, self.factors, ("R", "B"))
        self.re = reduced_state(self.omega, self.factors, ("R", "E"))
        self.rb_factors = self.factors.select(("R", "B"))
        self.re_factors = self.factors.select(("R", "E"))

    @property
    def r(self) -> np.ndarray:
        return reduced_state(self.omega, self.factors, ("R",))

    @property
    def b(self) -> np.ndarray:
        return reduced_state(self.omega, self.factors, ("B",))

    @property
    def e(self) -> np.ndarray:
        return reduced_state(self.omega, self.factors, ("E",))

    def psi_ra(self, subspace: CodeSubspace) -> np.ndarray:
        """|Ψ^{RA}_S⟩ = s^{-1/2} Σ_i |i⟩|ς_i⟩ on R⊗A."""
        return (subspace.isometry.T / np.sqrt(self.code_dim)).reshape(-1)


def omega_states(channel: KrausChannel, subspace: CodeSubspace) -> OmegaStates:
    return OmegaStates(channel, subspace)


def _check_probability(name: str, value: float) -> float:
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")
    return float(value)


def identity(d: int) -> KrausChannel:
    return KrausChannel([np.eye(d)])


def unitary_channel(u: np.ndarray) -> KrausChannel:
    return KrausChannel([u])


def weyl_operators(d: int) -> List[np.ndarray]:
    """X^a Z^b for a, b in 0..d-1, identity first; Paulis up to phase at d=2."""
    omega = np.exp(2j * np.pi / d)
    shift = np.roll(np.eye(d), 1, axis=0)
    clock = np.diag(omega ** np.arange(d))
    return [
        np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
        for a in range(d)
        for b in range(d)
    ]


def _depolarizing_weights(d: int, p: float) -> np.ndarray:
    """Weights c_j with Dep_p(ρ) = Σ_j c_j W_j ρ W_j†."""
    weights = np.full(d * d, p / d**2)
    weights[0] = 1 - p + p / d**2
    return weights


def depolarizing(d: int, p: float) -> KrausChannel:
    """ρ ↦ (1−p)ρ + p Tr[ρ] 𝟙/d."""
    p = _check_probability("p", p)
    weights = _depolarizing_weights(d, p)
    return KrausChannel([np.sqrt(c) * w for c, w in zip(weights, weyl_operators(d))])


def amplitude_damping(gamma: float) -> KrausChannel:
    gamma = _check_probability("gamma", gamma)
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]])
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]])
    return KrausChannel([k0, k1])


def dephasing(p: float) -> KrausChannel:
    """ρ ↦ (1−p)ρ + p ZρZ."""
    p = _check_probability("p", p)
    return KrausChannel([np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * np.diag([1, -1])])


def random_channel(
    d_in: int, d_out: int, kraus_rank: int, seed: Optional[int] = None
) -> KrausChannel:
    """Channel whose Stinespring isometry is Haar distributed."""
    if d_out * kraus_rank < d_in:
        raise DomainError(
            f"kraus_rank {kraus_rank} too small for an isometry {d_in} -> {d_out}x{kraus_rank}"
        )
    v = haar_isometry(d_out * kraus_rank, d_in, make_rng(seed))
    # V[(b, e), a] = K_e[b, a]
    return KrausChannel(v.reshape(d_out, kraus_rank, d_in).transpose(1, 0, 2))


def mixture(channels: Sequence[KrausChannel], probs: Sequence[float]) -> KrausChannel:
    probs = np.asarray(probs, dtype=float)
    if np.any(probs < 0) or abs(probs.sum() - 1) > TP_TOL:
        raise DomainError(f"mixture weights must be a probability vector, got {probs}")
    ops = [np.sqrt(p) * k for p, ch in zip(probs, channels) for k in ch.kraus if p > 0]
    return KrausChannel(ops).compressed()


def guard_dimension(d: int, n_max: int) -> None:
    """Raise ResourceError when d^n_max exceeds 2^MAX_QUBITS."""
    if n_max * np.log2(d) > MAX_QUBITS + 1e-12:
        raise ResourceError(
            f"n_max={n_max} with d={d} needs {n_max * np.log2(d):.1f} qubits, "
            f"limit is {MAX_QUBITS}"
        )


class ChannelSequence:
    """Truncated channel sequence Φ_1, ..., Φ_{n_max}.

    ``iid`` uses Φ^{⊗n}. ``markov_depolarizing`` modulates depolarizing noise
    by a two-state Markov chain: Φ_n = Σ_path Pr[path] ⊗_i Dep(p_{path_i}).
    """

    def __init__(self, kind: SequenceKind | str, params: Dict, n_max: int):
        self.kind = SequenceKind(str(kind))
        self.params = dict(params)
        self.n_max = int(n_max)
        if self.n_max < 1:
            raise DomainError(f"n_max must be positive, got {n_max}")
        match self.kind:
            case SequenceKind.iid:
                base = self.params["channel"]
                if isinstance(base, dict):
                    base = KrausChannel.from_dict(base)
                if base.in_dim != base.out_dim:
                    logger.debug("iid sequence of a non-square channel")
                self.base = base
                self.dim = base.in_dim
                width = max(base.in_dim, base.out_dim) * base.kraus_rank
            case SequenceKind.markov_depolarizing:
                self.dim = int(self.params.get("d", 2))
                self.strengths = [
                    _check_probability("p", p) for p in self.params["p_states"]
                ]
                if len(self.strengths) != 2:
                    raise DomainError("markov_depolarizing needs exactly two strengths")
                self.transition = np.asarray(self.params["transition"], dtype=float)
                if self.transition.shape != (2, 2) or np.any(self.transition < 0):
                    raise DomainError("transition must be a 2×2 stochastic matrix")
                if np.max(np.abs(self.transition.sum(axis=1) - 1)) > 1e-12:
                    raise DomainError(
                        f"transition rows must sum to 1, got {self.transition.sum(axis=1)}"
                    )
                initial = self.params.get("initial")
                self.initial = (
                    self._stationary() if initial is None else np.asarray(initial, float)
                )
                # d² Weyl strings per use
                width = self.dim**3
            case _:
                raise ValueError(f"Unsupported sequence kind: {kind}")
        # Φ_n keeps (Kraus rank × output dim)^n rows in its Stinespring form
        guard_dimension(max(self.dim, width), self.n_max)
        self._cache: Dict[int, KrausChannel] = {}

    def _stationary(self) -> np.ndarray:
        a, b = self.transition[0, 1], self.transition[1, 0]
        if a + b == 0:
            return np.array([1.0, 0.0])
        return np.array([b, a]) / (a + b)

    def channel(self, n: int) -> KrausChannel:
        if not 1 <= n <= self.n_max:
            raise DomainError(f"n must lie in [1, {self.n_max}], got {n}")
        if n not in self._cache:
            match self.kind:
                case SequenceKind.iid:
                    ch = self.base
                    for _ in range(n - 1):
                        ch = ch.tensor(self.base)
                case SequenceKind.markov_depolarizing:
                    ch = self._markov(n)
            self._cache[n] = ch
        return self._cache[n]

    def path_weights(self, n: int) -> np.ndarray:
        """Weight of each Weyl string W_{j_1}⊗...⊗W_{j_n}, summed over paths."""
        d2 = self.dim**2
        # c[j, x]: weight of W_j when the chain sits in state x
        c = np.stack([_depolarizing_weights(self.dim, p) for p in self.strengths]).T
        # alpha[j_1, ..., j_k, x]: Σ over paths of length k ending in x
        alpha = c * self.initial
        for _ in range(n - 1):
            alpha = np.einsum("...x,xy,jy->...jy", alpha, self.transition, c)
        return alpha.sum(axis=-1).reshape(d2**n)

    def _markov(self, n: int) -> KrausChannel:
        weyl = weyl_operators(self.dim)
        weights = self.path_weights(n)
        ops = []
        for idx, w in zip(product(range(self.dim**2), repeat=n), weights):
            if w > 0:
                ops.append(np.sqrt(w) * kron_all(weyl[j] for j in idx))
        return KrausChannel(ops)

    def to_dict(self) -> dict:
        params = dict(self.params)
        if isinstance(params.get("channel"), KrausChannel):
            params["channel"] = params["channel"].to_dict()
        if "transition" in params:
            params["transition"] = np.asarray(params["transition"]).tolist()
        return {"kind": self.kind.value, "params": params, "n_max": self.n_max}


def memory_sequence(kind: SequenceKind | str, params: Dict, n_max: int) -> ChannelSequence:
    """Truncated channel sequence, ResourceError when Φ_{n_max} exceeds the guard."""
    return ChannelSequence(kind, params, n_max)
