# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the per-tick geometry inner loops.

Expression-for-expression identical to _kernels_py so both backends produce
bit-identical doubles; only the loop mechanics differ. cdivision is safe here
because all divisions are on doubles.
"""

from libc.math cimport sqrt


def advance_positions(double[::1] x, double[::1] y, double[::1] tx,
                      double[::1] ty, double[::1] speed):
    """Move every node one step toward its waypoint, in place.

    A node within one step of its waypoint lands exactly on it. Returns the
    indices that arrived this tick, in index order.
    """
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double dx, dy, dist2, s, d
    arrived = []
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


def contact_pairs(double[::1] x, double[::1] y, double[::1] radius):
    """Unit-disk contacts: (u, v) with u < v when the gap fits both radii.

    The effective range of a pair is the smaller of the two radii; the
    boundary is inclusive. Pairs come out in lexicographic order.
    """
    cdef Py_ssize_t i, j, n = x.shape[0]
    cdef double dx, dy, r
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[j] - x[i]
            dy = y[j] - y[i]
            r = radius[i] if radius[i] <= radius[j] else radius[j]
            if dx * dx + dy * dy <= r * r:
                pairs.append((i, j))
    return pairs


def component_labels(Py_ssize_t n, pairs):
    """Connected-component label per node: the smallest index in its component."""
    cdef Py_ssize_t i, u, v, ru, rv
    cdef list parent = list(range(n))
    for u_obj, v_obj in pairs:
        u = u_obj
        v = v_obj
        ru = _find(parent, u)
        rv = _find(parent, v)
        if ru != rv:
            if ru < rv:
                parent[rv] = ru
            else:
                parent[ru] = rv
    return [_find(parent, i) for i in range(n)]


cdef Py_ssize_t _find(list parent, Py_ssize_t a):
    while <Py_ssize_t> parent[a] != a:
        parent[a] = parent[<Py_ssize_t> parent[a]]
        a = <Py_ssize_t> parent[a]
    return a
