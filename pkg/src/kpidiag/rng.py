"""SplitMix64 pseudo-random stream.

The generator is deliberately tiny so the same sequence can be reproduced in
any language: state advances by the golden-gamma constant and each output is
the standard SplitMix64 finaliser of the new state.

* ``next_u64``  -- raw 64-bit output
* ``random``    -- ``(next_u64 >> 11) * 2**-53``, a double in [0, 1)
* ``below(n)``  -- ``(next_u64 * n) >> 64``, an integer in [0, n)
* ``normal``    -- Box-Muller transform of two ``random`` draws (cosine branch)
"""

import math

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed=0):
        self.state = int(seed) & _MASK

    def next_u64(self):
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def random(self):
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n):
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * n) >> 64

    def uniform(self, lo, hi):
        return lo + (hi - lo) * self.random()

    def normal(self):
        u1 = 1.0 - self.random()  # (0, 1]
        u2 = self.random()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def shuffle(self, items):
        """Fisher-Yates shuffle in place; returns ``items``."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def choice(self, seq):
        return seq[self.below(len(seq))]
