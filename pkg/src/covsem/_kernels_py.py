"""Pure-Python/numpy versions of the hot kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature
and the same floating-point operation order, so both backends return
bit-identical results.
"""

import numpy as np

BACKEND = "python"


def tree_set(tree, leaf_offset, index, value):
    """Write one leaf of a sum tree and refresh its ancestors."""
    j = leaf_offset + index
    tree[j] = value
    j //= 2
    while j >= 1:
        tree[j] = tree[2 * j] + tree[2 * j + 1]
        j //= 2


def tree_find(tree, leaf_offset, targets, size):
    """Prefix-sum descent for a batch of targets in ``[0, total)``.

    Returns int64 leaf indices clamped to ``size - 1`` (guards against a
    target landing on an empty padding leaf through rounding).
    """
    t = np.array(targets, dtype=np.float64, copy=True)
    j = np.ones(t.shape[0], dtype=np.int64)
    depth = int(leaf_offset).bit_length() - 1
    for _ in range(depth):
        left = tree[2 * j]
        go_left = t < left
        t = np.where(go_left, t, t - left)
        j = 2 * j + (~go_left)
    idx = j - leaf_offset
    np.minimum(idx, size - 1, out=idx)
    return idx


def nearest_mean(sim, received):
    """Mean over rows of the max similarity to any received column.

    ``received`` is a boolean/uint8 vector; an empty reception gives 0.0.
    """
    if not np.any(received):
        return 0.0
    row_max = sim[:, np.asarray(received, dtype=bool)].max(axis=1)
    total = 0.0
    for v in row_max.tolist():
        total += v
    return total / sim.shape[0]


def adam_update(p, g, m, v, lr, b1, b2, c1, c2, eps):
    """Adam step on flat float64 views; p, m and v are updated in place."""
    m *= b1
    m += (1.0 - b1) * g
    v *= b2
    v += (1.0 - b2) * g * g
    p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


def soft_update(target, online, tau):
    target *= 1.0 - tau
    target += tau * online
