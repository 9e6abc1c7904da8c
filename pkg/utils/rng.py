"""
Random Streams
Counter-based random streams, one per (run, demand node)
"""
from typing import Sequence

import numpy as np


def stream(seed: int, run: int, node: int) -> np.random.Generator:
    """
    Independent Philox stream for one run and one demand node.
    The stream depends only on (seed, run, node), never on how runs are
    grouped into chunks or workers.

    Args:
        seed: master seed of the experiment
        run: Monte Carlo run index
        node: demand node id

    Returns:
        numpy Generator
    """
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(run, node))
    return np.random.Generator(np.random.Philox(seq))


def batch_normals(seed: int, runs: Sequence[int], node: int, n_steps: int) -> np.ndarray:
    """
    Standard normal increments for several runs, shape (len(runs), n_steps)
    """
    out = np.empty((len(runs), n_steps))
    for row, run in enumerate(runs):
        out[row] = stream(seed, run, node).standard_normal(n_steps)
    return out
