r"""
# What is qcap?

qcap computes one-shot bounds on the entanglement-transmission capacity of a
finite-dimensional quantum channel given in Kraus form.

The lower bound comes from a smoothed zero-order coherent information of the
channel output, the upper bound from its operator-smoothed counterpart. Both
are maximised over code subspaces by a seeded heuristic search. Around them
the package offers the conditional Rényi-type entropies the bounds are built
from, a Monte-Carlo simulation of random codes with an explicit decoder, and
finite-n information-spectrum windows for channel sequences.
"""
