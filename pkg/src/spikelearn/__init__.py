"""Stochastic spiking neurons trained by information-theoretic costs.

Core pieces: spike patterns and their kernel distance (:mod:`patterns`), the
multi-kernel stochastic neuron (:mod:`neuron`), surprisal-gradient training
(:mod:`supervised`), output-entropy minimization (:mod:`entropy`),
reward-modulated eligibility traces (:mod:`reinforce`), spiking network
graphs with an autoassociative memory builder (:mod:`network`), a grid-world
control environment (:mod:`gridenv`), and brute-force verification oracles
(:mod:`oracles`). The experiment harness lives in :mod:`experiments` and is
exposed on the command line via :mod:`cli`.
"""

from .neuron import AlphaBasis, SmrmConfig, SmrmNeuron
from .patterns import DistanceKernel, SpikePattern, SpikeTrain

__all__ = [
    "AlphaBasis",
    "SmrmConfig",
    "SmrmNeuron",
    "DistanceKernel",
    "SpikePattern",
    "SpikeTrain",
]

__version__ = "0.1.0"
