import logging

import fire
from rich import print

from qcap.__about__ import __version__
from qcap.common.config import load_run_config
from qcap.common.logger import set_level
from qcap.common.utils import exit_on_error
from qcap.service.bounds import run_bounds
from qcap.service.entropy_report import run_entropy
from qcap.service.per_use import run_per_use
from qcap.service.simulate import run_simulate
from qcap.service.spectrum_scan import run_spectrum


class QcapCLI:
    """
    The QcapCLI computes one-shot quantum capacity bounds of finite-dimensional
    channels, the entropic quantities behind them, Monte-Carlo random-coding
    runs and finite-n information-spectrum windows.

    Usage:
      qcap bounds   --channel FILE --epsilon E
      qcap entropy  --state FILE [--delta D]
      qcap simulate --channel FILE --trials N [--m M] [--s S]
      qcap spectrum --pair FILE | --sequence FILE --n_max N
      qcap per_use  --sequence FILE --epsilon E --n_max N
      qcap version
      qcap help

    Options:
      bounds    Lower and upper one-shot capacity bounds of a channel
      entropy   Conditional and relative entropies of states
      simulate  Random-coding fidelity against its guarantee
      spectrum  Divergence-trace transition windows over n
      per_use   Capacity bounds per use of a channel sequence
      version   Show the version of qcap
      help      Show this help message and exit
    """

    def __init__(self, debug: bool = False, log_level: str = None) -> None:  # type: ignore
        if debug:
            set_level(logging.DEBUG, logging.DEBUG)
        if log_level:
            set_level(log_level.upper(), log_level.upper())

    @exit_on_error
    def bounds(
        self,
        channel: str = None,
        epsilon: float = None,
        seed: int = None,
        threads: int = None,
        out: str = None,
        config: str = None,
    ):
        # Lower and upper one-shot capacity bounds
        run_bounds(
            load_run_config(
                "bounds",
                config,
                channel_path=channel,
                epsilon=epsilon,
                seed=seed,
                threads=threads,
                output_path=out,
            )
        )

    @exit_on_error
    def entropy(
        self,
        state: str = None,
        delta: float = None,
        seed: int = None,
        threads: int = None,
        out: str = None,
        config: str = None,
    ):
        # Entropic quantities of every state record
        run_entropy(
            load_run_config(
                "entropy",
                config,
                state_path=state,
                delta=delta,
                seed=seed,
                threads=threads,
                output_path=out,
            )
        )

    @exit_on_error
    def simulate(
        self,
        channel: str = None,
        trials: int = None,
        m: int = None,
        s: int = None,
        delta: float = None,
        seed: int = None,
        threads: int = None,
        out: str = None,
        config: str = None,
    ):
        # Random-coding Monte-Carlo run
        run_simulate(
            load_run_config(
                "simulate",
                config,
                channel_path=channel,
                trials=trials,
                m=m,
                s=s,
                delta=delta,
                seed=seed,
                threads=threads,
                output_path=out,
            )
        )

    @exit_on_error
    def spectrum(
        self,
        pair: str = None,
        sequence: str = None,
        n_max: int = None,
        threads: int = None,
        out: str = None,
        csv: str = None,
        config: str = None,
    ):
        # Information-spectrum windows
        run_spectrum(
            load_run_config(
                "spectrum",
                config,
                pair_path=pair,
                sequence_path=sequence,
                n_max=n_max,
                threads=threads,
                output_path=out,
                csv_path=csv,
            )
        )

    @exit_on_error
    def per_use(
        self,
        sequence: str = None,
        epsilon: float = None,
        n_max: int = None,
        seed: int = None,
        threads: int = None,
        out: str = None,
        csv: str = None,
        config: str = None,
    ):
        # Per-use capacity bounds of a channel sequence
        run_per_use(
            load_run_config(
                "per_use",
                config,
                sequence_path=sequence,
                epsilon=epsilon,
                n_max=n_max,
                seed=seed,
                threads=threads,
                output_path=out,
                csv_path=csv,
            )
        )

    def help(self):
        # Show this help message and exit
        print("[bold]qcap[/bold]: one-shot quantum capacity bounds")
        print("Usage:")
        print("  qcap bounds   --channel FILE --epsilon E [--seed N] [--threads N] [--out FILE]")
        print("  qcap entropy  --state FILE [--delta D] [--seed N] [--out FILE]")
        print("  qcap simulate --channel FILE --trials N [--m M] [--s S] [--delta D]")
        print("  qcap spectrum --pair FILE | --sequence FILE --n_max N [--csv FILE]")
        print("  qcap per_use  --sequence FILE --epsilon E --n_max N [--csv FILE]")
        print("  qcap version")
        print("  qcap help")
        print("Options:")
        print("  --config FILE   YAML run configuration, flags override its values")
        print("  --threads N     Worker processes for every command but version and help")
        print("  --debug         Log everything to the console")
        print("  --log_level L   Console and logger level")
        print("Exit codes:")
        print("  0 success, 1 invalid input, 2 malformed file, 3 dimension guard, 4 too few trials")

    def version(self):
        # Show the version of qcap
        print(f"qcap (one-shot quantum capacity bounds) version {__version__}")
        print("Licensed under the MIT License")


def main():
    fire.Fire(QcapCLI)


if __name__ == "__main__":
    main()
