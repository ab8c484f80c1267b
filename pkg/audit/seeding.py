import hashlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def stream_id(name):
    """stable 64-bit integer for a named random stream"""
    return int.from_bytes(hashlib.sha256(str(name).encode('utf-8')).digest()[:8], 'big')


class SeededRng(object):
    """counter-style seeding: replicate b of a stream always draws the same numbers

    Each replicate gets its own numpy Generator seeded from (seed, stream, b),
    so results do not depend on evaluation order or worker count.
    """

    def __init__(self, seed):
        if seed is None or int(seed) < 0:
            raise ValueError('a non-negative integer seed is required')
        self.seed = int(seed) & (2 ** 64 - 1)

    def __repr__(self):
        return 'SeededRng({})'.format(self.seed)

    def replicate(self, b, stream='default'):
        return np.random.default_rng([self.seed, stream_id(stream), int(b)])

    def map(self, fn, draws, stream='default', workers=1):
        """[fn(b, rng_b) for b in range(draws)] in replicate order"""
        def run(b):
            return fn(b, self.replicate(b, stream))

        if workers is None or workers <= 1:
            return [run(b) for b in range(draws)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, range(draws)))
