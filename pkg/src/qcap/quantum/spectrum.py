"""Finite-n information-spectrum estimates.

For a pair (ρ_n, σ_n) the divergence trace Tr[{Π_n(γ) ≥ 0} Π_n(γ)] with
Π_n(γ) = ρ_n − 2^{nγ} σ_n falls from Tr ρ_n to 0 as the rate γ grows. The
window [γ_lo, γ_hi] where it does so is a grid estimate of where the sup-
and inf-divergence rates sit; both are finite-n proxies, not limits.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from qcap.common.config import GAMMA_GRID_POINTS, GAMMA_SPAN, MAX_WIDEN, TOL_WINDOW
from qcap.common.errors import DimensionError, DomainError, TrendError, WindowError
from qcap.common.hardware.cpu import parallel_map
from qcap.common.logger import logger
from qcap.common.utils import SequenceKind
from qcap.quantum.channel import (
    ChannelSequence,
    CodeSubspace,
    KrausChannel,
    OmegaStates,
    guard_dimension,
)
from qcap.quantum.entropy import coherent_information, relative_entropy
from qcap.quantum.qmatrix import (
    FactorSpec,
    check_density,
    check_psd,
    kron_all,
    partial_trace,
    permute_factors,
)

# largest exponent handed to 2^{nγ}
MAX_EXPONENT = 1000.0
MIX_WEIGHTS = (0.25, 0.5, 0.75)


def default_grid() -> np.ndarray:
    return np.linspace(-GAMMA_SPAN, GAMMA_SPAN, GAMMA_GRID_POINTS)


def _widen(grid: np.ndarray) -> np.ndarray:
    """Twice the span around the same centre, same spacing."""
    centre, half = (grid[0] + grid[-1]) / 2, (grid[-1] - grid[0]) / 2
    return np.linspace(centre - 2 * half, centre + 2 * half, 2 * len(grid) - 1)


def _is_diagonal(op: np.ndarray) -> bool:
    return op.ndim == 1


def divergence_trace(rho: np.ndarray, sigma: np.ndarray, gamma: float, n: int) -> float:
    """Tr[{Π ≥ 0} Π] for Π = ρ − 2^{nγ} σ.

    One-dimensional inputs are read as the diagonals of a commuting pair.
    """
    rho, sigma = np.asarray(rho), np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise DimensionError(f"ρ of shape {rho.shape} and σ of shape {sigma.shape}")
    scale = 2.0 ** min(n * gamma, MAX_EXPONENT)
    if _is_diagonal(rho):
        return float(np.sum(np.clip(rho - scale * sigma, 0, None)))
    w = np.linalg.eigvalsh(rho - scale * sigma)
    return float(np.sum(w[w > 0]))


@dataclass
class Window:
    """Grid window [γ_lo, γ_hi] of the divergence trace at block length n."""

    n: int
    gamma_lo: float
    gamma_hi: float
    oracle: Optional[float] = None
    widened: int = 0
    label: str = ""

    @property
    def width(self) -> float:
        return self.gamma_hi - self.gamma_lo

    def brackets(self, value: float) -> bool:
        return self.gamma_lo <= value <= self.gamma_hi

    @property
    def distance(self) -> Optional[float]:
        if self.oracle is None:
            return None
        return max(abs(self.gamma_lo - self.oracle), abs(self.gamma_hi - self.oracle))

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "gamma_lo": self.gamma_lo,
            "gamma_hi": self.gamma_hi,
            "oracle": self.oracle,
            "widened": self.widened,
        }
        if self.label:
            out["sigma"] = self.label
        return out


def _locate(traces: np.ndarray, grid: np.ndarray, tol: float):
    high = np.flatnonzero(traces >= 1 - tol)
    low = np.flatnonzero(traces <= tol)
    if len(high) == 0 or len(low) == 0:
        return None
    return float(grid[high[-1]]), float(grid[low[0]])


def transition_window(
    rho: np.ndarray,
    sigma: np.ndarray,
    n: int,
    gamma_grid: Optional[Sequence[float]] = None,
    tol_window: float = TOL_WINDOW,
) -> Window:
    """Locate the window on the grid, widening it up to MAX_WIDEN times.

    Raises:
        WindowError: the window is still open after the last widening.
    """
    if not 0 < tol_window < 0.5:
        raise DomainError(f"tol_window must lie in (0, 0.5), got {tol_window}")
    grid = default_grid() if gamma_grid is None else np.sort(np.asarray(gamma_grid, float))
    for widened in range(MAX_WIDEN + 1):
        traces = np.array([divergence_trace(rho, sigma, g, n) for g in grid])
        found = _locate(traces, grid, tol_window)
        if found is not None:
            return Window(n, found[0], found[1], widened=widened)
        logger.debug(f"n={n}: window open on [{grid[0]:g}, {grid[-1]:g}], widening")
        grid = _widen(grid)
    raise WindowError(
        f"n={n}: no transition window on [{grid[0]:g}, {grid[-1]:g}] "
        f"after {MAX_WIDEN} widenings"
    )


def _window_task(task) -> Window:
    return transition_window(*task)


def _offdiagonal(op: np.ndarray) -> float:
    return float(np.max(np.abs(op - np.diag(np.diag(op)))))


def _power(op: np.ndarray, n: int) -> np.ndarray:
    out = op
    for _ in range(n - 1):
        out = np.kron(out, op)
    return out


class SequencePair:
    """Generators of (ρ_n, σ_n) for n ≤ n_max.

    ``iid`` uses ρ^{⊗n} and σ^{⊗n}; a commuting diagonal pair is kept as
    diagonals. ``markov`` feeds ρ_in^{⊗n} through a channel sequence and
    compares with σ^{⊗n}.
    """

    def __init__(
        self,
        kind: str,
        make: Callable[[int], Tuple[np.ndarray, np.ndarray]],
        n_max: int,
        dim: int,
        base: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    ):
        self.kind = kind
        self._make = make
        self.n_max = int(n_max)
        self.dim = dim
        self.base = base
        guard_dimension(dim, self.n_max)

    @classmethod
    def iid(cls, rho: np.ndarray, sigma: np.ndarray, n_max: int) -> "SequencePair":
        rho, sigma = check_density(rho), check_psd(sigma)
        if rho.shape != sigma.shape:
            raise DimensionError(f"ρ of shape {rho.shape} and σ of shape {sigma.shape}")
        if _offdiagonal(rho) == 0 and _offdiagonal(sigma) == 0:
            p, q = np.diag(rho).real, np.diag(sigma).real
        else:
            p, q = rho, sigma

        def make(n: int):
            return _power(p, n), _power(q, n)

        return cls("iid", make, n_max, rho.shape[0], (rho, sigma))

    @classmethod
    def markov(
        cls, sequence: ChannelSequence, rho_in: np.ndarray, sigma: np.ndarray
    ) -> "SequencePair":
        rho_in, sigma = check_density(rho_in), check_psd(sigma)
        out_dim = sequence.channel(1).out_dim
        if sigma.shape[0] != out_dim:
            raise DimensionError(f"σ has dim {sigma.shape[0]}, channel outputs {out_dim}")

        def make(n: int):
            return sequence.channel(n)(_power(rho_in, n)), _power(sigma, n)

        return cls("markov", make, sequence.n_max, out_dim)

    def at(self, n: int) -> Tuple[np.ndarray, np.ndarray]:
        if not 1 <= n <= self.n_max:
            raise DomainError(f"n must lie in [1, {self.n_max}], got {n}")
        return self._make(n)

    @property
    def oracle(self) -> Optional[float]:
        """S(ρ‖σ) per use for iid pairs."""
        if self.base is None:
            return None
        return relative_entropy(*self.base)


def scan_rates(
    pair: SequencePair,
    n: int,
    gamma_grid: Optional[Sequence[float]] = None,
    tol_window: float = TOL_WINDOW,
) -> Window:
    rho, sigma = pair.at(n)
    window = transition_window(rho, sigma, n, gamma_grid, tol_window)
    window.oracle = pair.oracle
    return window


def rate_windows(
    pair: SequencePair,
    n_list: Sequence[int],
    gamma_grid: Optional[Sequence[float]] = None,
    tol_window: float = TOL_WINDOW,
    threads: int = 1,
) -> List[Window]:
    """``scan_rates`` over ``n_list``, one worker task per n."""
    tasks = [(*pair.at(n), n, gamma_grid, tol_window) for n in n_list]
    windows = parallel_map(_window_task, tasks, threads)
    for window in windows:
        window.oracle = pair.oracle
    return windows


def window_table(windows: Sequence[Window]) -> pd.DataFrame:
    rows = [w.to_dict() for w in windows]
    df = pd.DataFrame(rows, columns=["n", "gamma_lo", "gamma_hi", "oracle", "widened"])
    df["width"] = df["gamma_hi"] - df["gamma_lo"]
    return df


def stein_trend(
    pair: SequencePair,
    n_list: Sequence[int],
    gamma_grid: Optional[Sequence[float]] = None,
    tol_window: float = TOL_WINDOW,
    strict: bool = True,
    threads: int = 1,
) -> pd.DataFrame:
    """Windows over n and their distance to S(ρ‖σ).

    Raises:
        TrendError: the window at the largest n is not closer to S(ρ‖σ)
            than the one at the smallest n. With ``strict`` off this is only
            logged.
    """
    if pair.kind != "iid":
        raise DomainError(f"stein_trend needs an iid pair, got {pair.kind}")
    n_list = sorted(int(n) for n in n_list)
    windows = rate_windows(pair, n_list, gamma_grid, tol_window, threads)
    df = window_table(windows)
    df["distance"] = [w.distance for w in windows]
    if len(windows) > 1 and not df["distance"].iloc[-1] < df["distance"].iloc[0]:
        message = (
            f"distance to S(ρ‖σ)={pair.oracle:.6f} went from "
            f"{df['distance'].iloc[0]:.4f} at n={n_list[0]} to "
            f"{df['distance'].iloc[-1]:.4f} at n={n_list[-1]}"
        )
        if strict:
            raise TrendError(message)
        logger.warning(message)
    return df


class BipartiteSequence:
    """States ρ^{R_nB_n} with the R factors grouped before the B factors."""

    def __init__(
        self,
        kind: str,
        make: Callable[[int], np.ndarray],
        dims: Tuple[int, int],
        n_max: int,
        marginal_b: np.ndarray,
        oracle: Optional[float] = None,
    ):
        self.kind = kind
        self._make = make
        self.dims = (int(dims[0]), int(dims[1]))
        self.n_max = int(n_max)
        self.marginal_b = marginal_b
        self.oracle = oracle
        guard_dimension(self.dims[0] * self.dims[1], self.n_max)

    @classmethod
    def iid(cls, rho: np.ndarray, dims: Tuple[int, int], n_max: int) -> "BipartiteSequence":
        rho = check_density(rho)
        d_r, d_b = dims
        factors = FactorSpec((d_r, d_b), ("R", "B"))
        factors.check(rho)

        def make(n: int) -> np.ndarray:
            spec = FactorSpec(
                (d_r, d_b) * n, tuple(f"{x}{i}" for i in range(n) for x in "RB")
            )
            order = [f"R{i}" for i in range(n)] + [f"B{i}" for i in range(n)]
            return permute_factors(kron_all([rho] * n), spec, order)[0]

        marginal = partial_trace(rho, factors, ("B",))
        return cls("iid", make, dims, n_max, marginal, coherent_information(rho, factors))

    @classmethod
    def product(cls, rho_r: np.ndarray, rho_b: np.ndarray, n_max: int) -> "BipartiteSequence":
        rho_r, rho_b = check_density(rho_r), check_density(rho_b)
        dims = (rho_r.shape[0], rho_b.shape[0])
        oracle = coherent_information(np.kron(rho_r, rho_b), dims)
        return cls(
            "product",
            lambda n: np.kron(_power(rho_r, n), _power(rho_b, n)),
            dims,
            n_max,
            rho_b,
            oracle,
        )

    @classmethod
    def from_channel_sequence(cls, sequence: ChannelSequence) -> "BipartiteSequence":
        """ω^{R_nB_n} of Φ_n on a maximally entangled input."""

        def omega(n: int) -> np.ndarray:
            channel: KrausChannel = sequence.channel(n)
            return OmegaStates(channel, CodeSubspace.full(channel.in_dim)).rb

        first = OmegaStates(sequence.channel(1), CodeSubspace.full(sequence.dim))
        oracle = None
        if sequence.kind == SequenceKind.iid:
            oracle = coherent_information(first.rb, first.rb_factors)
        return cls(
            str(sequence.kind),
            omega,
            first.rb_factors.dims,
            sequence.n_max,
            first.b,
            oracle,
        )

    def state(self, n: int) -> Tuple[np.ndarray, FactorSpec]:
        if not 1 <= n <= self.n_max:
            raise DomainError(f"n must lie in [1, {self.n_max}], got {n}")
        d_r, d_b = self.dims
        return self._make(n), FactorSpec((d_r**n, d_b**n), ("R", "B"))

    def sigma_candidates(self, n: int, rho: np.ndarray, factors: FactorSpec) -> Dict[str, np.ndarray]:
        """Product candidates built from the one-use marginal, plus ρ^{B_n}."""
        d_b = self.dims[1]
        mixed = np.eye(d_b) / d_b
        singles = {"maximally_mixed": mixed, "marginal": self.marginal_b}
        for t in MIX_WEIGHTS:
            singles[f"mix{t:g}"] = t * self.marginal_b + (1 - t) * mixed
        out = {name: _power(s, n) for name, s in singles.items()}
        out["joint_marginal"] = partial_trace(rho, factors, ("B",))
        return out


def spectral_coherent_rate(
    sequence: BipartiteSequence,
    n: int,
    gamma_grid: Optional[Sequence[float]] = None,
    tol_window: float = TOL_WINDOW,
    threads: int = 1,
) -> Window:
    """Window of min_σ of the divergence of ρ^{R_nB_n} from 𝟙_{R_n} ⊗ σ^{B_n}.

    The minimum runs over ``sigma_candidates`` only; each edge takes its own
    minimum, and ``label`` names the candidate with the lowest upper edge.
    """
    rho, factors = sequence.state(n)
    eye_r = np.eye(factors.dims[0])
    candidates = sequence.sigma_candidates(n, rho, factors)
    tasks = [
        (rho, np.kron(eye_r, sigma), n, gamma_grid, tol_window)
        for sigma in candidates.values()
    ]
    windows = dict(zip(candidates, parallel_map(_window_task, tasks, threads)))
    best = min(windows, key=lambda k: windows[k].gamma_hi)
    return Window(
        n,
        min(w.gamma_lo for w in windows.values()),
        windows[best].gamma_hi,
        sequence.oracle,
        max(w.widened for w in windows.values()),
        best,
    )


def coherent_rate_table(
    sequence: BipartiteSequence,
    n_list: Sequence[int],
    gamma_grid: Optional[Sequence[float]] = None,
    tol_window: float = TOL_WINDOW,
    threads: int = 1,
) -> pd.DataFrame:
    windows: List[Window] = [
        spectral_coherent_rate(sequence, n, gamma_grid, tol_window, threads)
        for n in sorted(n_list)
    ]
    df = window_table(windows)
    df["sigma"] = [w.label for w in windows]
    return df
