"""Deterministic random substreams and the block-parallel replicate runner.

Replicate ``r`` of stream ``s`` always draws from the child seed sequence
``SeedSequence(seed, spawn_key=(s, r))``, so results depend only on
``(seed, s, r)`` and never on block size or worker count.
"""

import numpy as np
from joblib import Parallel, delayed

from ._validation import check_count

# stream tags, one per independent consumer of a master seed
PROXY_STREAM = 0
TRIAL_STREAM = 1
ORDERSTAT_STREAM = 2
DERANDOM_STREAM = 3

DEFAULT_BLOCK = 64


def check_seed(seed):
    return check_count(seed, "seed", minimum=0)


def substream(seed, stream, replicate):
    """Generator for one replicate of one stream."""
    seq = np.random.SeedSequence(seed, spawn_key=(stream, replicate))
    return np.random.Generator(np.random.PCG64(seq))


def derive_seed(seed, index):
    """A child master seed, e.g. one per model in a multi-model run."""
    seq = np.random.SeedSequence(seed, spawn_key=(1_000_003, index))
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def blocks(total, block_size=DEFAULT_BLOCK):
    return [(start, min(start + block_size, total)) for start in range(0, total, block_size)]


def map_blocks(func, total, n_jobs=1, block_size=DEFAULT_BLOCK):
    """Evaluate ``func(start, stop)`` over replicate blocks and concatenate in order.

    ``func`` must be picklable when ``n_jobs != 1``.
    """
    spans = blocks(total, block_size)
    if n_jobs == 1 or len(spans) <= 1:
        parts = [func(start, stop) for start, stop in spans]
    else:
        parts = Parallel(n_jobs=n_jobs)(delayed(func)(start, stop) for start, stop in spans)
    return np.concatenate(parts, axis=0)
