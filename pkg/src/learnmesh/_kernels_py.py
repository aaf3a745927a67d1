"""Pure-Python kernels for the per-tick geometry inner loops.

Reference implementation; the compiled twin in _kernels_c.pyx must stay
expression-for-expression identical so both backends produce bit-identical
doubles. Arrival tests and range tests compare squared distances, so the only
rounding-sensitive operation is the sqrt in the movement step, which is
correctly rounded on every platform.
"""

from math import sqrt
from typing import List, Sequence, Tuple


def advance_positions(x, y, tx, ty, speed) -> List[int]:
    """Move every node one step toward its waypoint, in place.

    A node within one step of its waypoint lands exactly on it. Returns the
    indices that arrived this tick, in index order.
    """
    arrived: List[int] = []
    n = len(x)
    for i in range(n):
        dx = tx[i] - x[i]
        dy = ty[i] - y[i]
        dist2 = dx * dx + dy * dy
        s = speed[i]
        if dist2 <= s * s:
            x[i] = tx[i]
            y[i] = ty[i]
            arrived.append(i)
        else:
            d = sqrt(dist2)
            x[i] = x[i] + s * dx / d
            y[i] = y[i] + s * dy / d
    return arrived


def contact_pairs(x, y, radius) -> List[Tuple[int, int]]:
    """Unit-disk contacts: (u, v) with u < v when the gap fits both radii.

    The effective range of a pair is the smaller of the two radii; the
    boundary is inclusive. Pairs come out in lexicographic order.
    """
    pairs: List[Tuple[int, int]] = []
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[j] - x[i]
            dy = y[j] - y[i]
            r = radius[i] if radius[i] <= radius[j] else radius[j]
            if dx * dx + dy * dy <= r * r:
                pairs.append((i, j))
    return pairs


def component_labels(n: int, pairs: Sequence[Tuple[int, int]]) -> List[int]:
    """Connected-component label per node: the smallest index in its component."""
    parent = list(range(n))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in pairs:
        ru, rv = find(u), find(v)
        if ru != rv:
            if ru < rv:
                parent[rv] = ru
            else:
                parent[ru] = rv
    return [find(i) for i in range(n)]
