from __future__ import annotations

import zlib

import numpy as np


def _key(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    if part < 0:
        raise ValueError("stream keys must be non-negative")
    return int(part)


def stream(seed: int, *keys: int | str) -> np.random.Generator:
    """Independent generator for ``(seed, *keys)``.

    Streams with different keys never share state, so consumers that draw
    from one cannot shift another's sequence.
    """
    ss = np.random.SeedSequence(entropy=_key(seed), spawn_key=tuple(_key(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))
