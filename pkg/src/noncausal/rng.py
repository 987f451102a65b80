"""Counter-based random streams.

Draw number ``i`` of stream ``(seed, label)`` lives in block ``i // BLOCK``,
and every block gets its own Philox generator keyed by ``(seed, label,
block)``.  Any slice of a stream is therefore reproducible on its own, so
splitting a simulation into batches (or running batches in parallel) never
changes the numbers.
"""

import hashlib

import numpy as np

BLOCK = 1 << 16


def _label_key(label):
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def block_generator(seed, label, block):
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(_label_key(label), int(block)))
    return np.random.Generator(np.random.Philox(ss))


def _draw(seed, label, start, stop, fill):
    start, stop = int(start), int(stop)
    if stop < start:
        raise ValueError("stop < start")
    out = np.empty(stop - start)
    if stop == start:
        return out
    b0, b1 = start // BLOCK, (stop - 1) // BLOCK
    pos = 0
    for b in range(b0, b1 + 1):
        block = fill(block_generator(seed, label, b))
        lo = max(start - b * BLOCK, 0)
        hi = min(stop - b * BLOCK, BLOCK)
        out[pos:pos + hi - lo] = block[lo:hi]
        pos += hi - lo
    return out


def student_t(seed, label, start, stop, dof):
    """Standard Student-t draws ``start..stop-1`` of the stream."""
    return _draw(seed, label, start, stop, lambda g: g.standard_t(dof, BLOCK))


def normal(seed, label, start, stop):
    return _draw(seed, label, start, stop, lambda g: g.standard_normal(BLOCK))


def uniform(seed, label, start, stop):
    return _draw(seed, label, start, stop, lambda g: g.random(BLOCK))


def student_t_matrix(seed, label, row_start, row_stop, ncol, dof):
    """Rows ``row_start..row_stop-1`` of an (infinite) row-major t matrix."""
    flat = student_t(seed, label, row_start * ncol, row_stop * ncol, dof)
    return flat.reshape(row_stop - row_start, ncol)


def normal_matrix(seed, label, row_start, row_stop, ncol):
    flat = normal(seed, label, row_start * ncol, row_stop * ncol)
    return flat.reshape(row_stop - row_start, ncol)
