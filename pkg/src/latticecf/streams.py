"""Counter-addressed random streams.

Every random vector is a pure function of ``(seed, stream, counter)``: the
stream tag and master seed select a Philox key, and vector number
``counter`` occupies its own fixed window of Philox blocks. Drawing a batch
of vectors is therefore identical to drawing them one at a time, which is
what makes results independent of chunking and worker count.
"""
import hashlib
from dataclasses import dataclass

import numpy as np

_WORDS_PER_BLOCK = 4  # Philox4x64 emits four 64-bit words per counter value
_TO_UNIT = 2.0 ** -53


def _key(seed, stream):
    digest = hashlib.blake2b(f"{int(seed)}\x00{stream}".encode(), digest_size=16).digest()
    return np.frombuffer(digest, dtype=np.uint64).copy()


def counter_uniforms(seed, stream, start, count, dims):
    """Uniform [0, 1) draws, shape (count, dims).

    Row ``t`` depends only on (seed, stream, start + t, dims).
    """
    if count < 0 or dims < 1:
        raise ValueError("count must be >= 0 and dims >= 1")
    blocks = -(-dims // _WORDS_PER_BLOCK)
    width = blocks * _WORDS_PER_BLOCK
    if count == 0:
        return np.empty((0, dims))
    bitgen = np.random.Philox(key=_key(seed, stream), counter=int(start) * blocks)
    raw = bitgen.random_raw(count * width).reshape(count, width)[:, :dims]
    return (raw >> np.uint64(11)).astype(np.float64) * _TO_UNIT


def counter_normals(seed, stream, start, count, dims, std=1.0):
    """Standard normal draws via Box-Muller, shape (count, dims)."""
    pairs = -(-dims // 2)
    u = counter_uniforms(seed, stream, start, count, 2 * pairs)
    radius = np.sqrt(-2.0 * np.log1p(-u[:, :pairs]))
    angle = 2.0 * np.pi * u[:, pairs:]
    z = np.empty((count, 2 * pairs))
    z[:, 0::2] = radius * np.cos(angle)
    z[:, 1::2] = radius * np.sin(angle)
    return std * z[:, :dims]


def counter_integers(seed, stream, start, count, dims, high):
    """Integers uniform on [0, high), shape (count, dims)."""
    u = counter_uniforms(seed, stream, start, count, dims)
    return np.minimum((u * high).astype(np.int64), high - 1)


@dataclass
class DitherSource:
    """A named random stream with a position.

    Same (seed, stream, counter) always gives the same draw; each draw
    advances the counter by the number of vectors taken.
    """

    seed: int
    stream: str
    counter: int = 0

    def at(self, counter):
        return DitherSource(self.seed, self.stream, counter)

    def uniforms(self, dims, count=1):
        out = counter_uniforms(self.seed, self.stream, self.counter, count, dims)
        self.counter += count
        return out

    def normals(self, dims, count=1, std=1.0):
        out = counter_normals(self.seed, self.stream, self.counter, count, dims, std)
        self.counter += count
        return out
