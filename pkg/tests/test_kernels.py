"""Geometry kernels and random-waypoint mobility.

The compiled and pure backends must agree bit for bit; every test that
compares them is skipped when the extension was not built.
"""

import random

import numpy as np
import pytest

from learnmesh import kernels
from learnmesh._kernels_py import (
    advance_positions as py_advance,
    component_labels as py_labels,
    contact_pairs as py_pairs,
)
from learnmesh.mobility import MotionSpec, RandomWaypointField
from oracles import bfs_components

try:
    from learnmesh import _kernels_c

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

needs_compiled = pytest.mark.skipif(
    not HAVE_COMPILED, reason="compiled kernel extension not built"
)


def random_arrays(rng, n):
    x = np.array([rng.uniform(0, 100) for _ in range(n)])
    y = np.array([rng.uniform(0, 100) for _ in range(n)])
    tx = np.array([rng.uniform(0, 100) for _ in range(n)])
    ty = np.array([rng.uniform(0, 100) for _ in range(n)])
    speed = np.array([rng.uniform(0, 5) for _ in range(n)])
    radius = np.array([rng.uniform(1, 40) for _ in range(n)])
    return x, y, tx, ty, speed, radius


class TestAdvance:
    def test_lands_exactly_on_near_waypoint(self):
        x, y = np.array([0.0]), np.array([0.0])
        arrived = py_advance(x, y, np.array([1.0]), np.array([1.0]), np.array([2.0]))
        assert arrived == [0]
        assert x[0] == 1.0 and y[0] == 1.0

    def test_step_length_equals_speed(self):
        x, y = np.array([0.0]), np.array([0.0])
        py_advance(x, y, np.array([10.0]), np.array([0.0]), np.array([3.0]))
        assert x[0] == pytest.approx(3.0) and y[0] == 0.0

    def test_zero_speed_pins_node(self):
        x, y = np.array([5.0]), np.array([7.0])
        arrived = py_advance(x, y, np.array([90.0]), np.array([90.0]), np.array([0.0]))
        assert arrived == []
        assert x[0] == 5.0 and y[0] == 7.0

    @needs_compiled
    def test_backends_bit_identical(self):
        rng = random.Random(13)
        for _ in range(30):
            n = rng.randint(1, 25)
            arrays = random_arrays(rng, n)
            ours = [a.copy() for a in arrays[:5]]
            theirs = [a.copy() for a in arrays[:5]]
            got_py = py_advance(*ours)
            got_c = _kernels_c.advance_positions(*theirs)
            assert got_py == list(got_c)
            for a, b in zip(ours, theirs):
                assert a.tobytes() == b.tobytes()


class TestContacts:
    def test_boundary_inclusive_on_smaller_radius(self):
        x = np.array([0.0, 3.0])
        y = np.array([0.0, 4.0])  # distance exactly 5
        assert py_pairs(x, y, np.array([5.0, 9.0])) == [(0, 1)]
        assert py_pairs(x, y, np.array([4.999, 9.0])) == []

    def test_single_node_never_in_contact(self):
        assert py_pairs(np.array([1.0]), np.array([1.0]), np.array([10.0])) == []

    def test_lexicographic_order(self):
        x = np.array([0.0, 1.0, 2.0])
        y = np.zeros(3)
        got = py_pairs(x, y, np.array([5.0, 5.0, 5.0]))
        assert got == [(0, 1), (0, 2), (1, 2)]

    @needs_compiled
    def test_backends_identical(self):
        rng = random.Random(29)
        for _ in range(30):
            n = rng.randint(1, 25)
            x, y, _, _, _, radius = random_arrays(rng, n)
            assert py_pairs(x, y, radius) == list(
                map(tuple, _kernels_c.contact_pairs(x, y, radius))
            )


class TestComponents:
    def test_no_edges_all_singletons(self):
        assert py_labels(4, []) == [0, 1, 2, 3]

    def test_label_is_smallest_member(self):
        assert py_labels(5, [(3, 4), (1, 2)]) == [0, 1, 1, 3, 3]

    def test_matches_bfs_oracle_on_random_graphs(self):
        rng = random.Random(5)
        for _ in range(100):
            n = rng.randint(1, 10)
            possible = [(i, j) for i in range(n) for j in range(i + 1, n)]
            edges = [p for p in possible if rng.random() < 0.3]
            got = py_labels(n, edges)
            want = bfs_components(range(n), edges)
            assert got == [want[i] for i in range(n)]

    @needs_compiled
    def test_backends_identical(self):
        rng = random.Random(31)
        for _ in range(50):
            n = rng.randint(1, 15)
            possible = [(i, j) for i in range(n) for j in range(i + 1, n)]
            edges = [p for p in possible if rng.random() < 0.25]
            assert py_labels(n, edges) == list(_kernels_c.component_labels(n, edges))


class TestMobility:
    def specs(self, n, **kw):
        base = dict(speed_min=1.0, speed_max=3.0, pause_min=0, pause_max=2,
                    radio_range=20.0)
        base.update(kw)
        return [MotionSpec(**base) for _ in range(n)]

    def test_same_seed_same_trajectories(self):
        a = RandomWaypointField(100, 100, self.specs(6), random.Random(42))
        b = RandomWaypointField(100, 100, self.specs(6), random.Random(42))
        for _ in range(50):
            a.step(), b.step()
        assert a.positions() == b.positions()
        assert a.contacts() == b.contacts()

    def test_different_seeds_diverge(self):
        a = RandomWaypointField(100, 100, self.specs(6), random.Random(1))
        b = RandomWaypointField(100, 100, self.specs(6), random.Random(2))
        for _ in range(10):
            a.step(), b.step()
        assert a.positions() != b.positions()

    def test_positions_stay_in_field(self):
        field = RandomWaypointField(50, 30, self.specs(8), random.Random(3))
        for _ in range(200):
            field.step()
            for px, py in field.positions():
                assert 0 <= px <= 50 and 0 <= py <= 30

    def test_pinned_node_stays_put(self):
        spec = MotionSpec(0.0, 0.0, 0, 0, 10.0, position=(12.0, 8.0))
        field = RandomWaypointField(100, 100, [spec], random.Random(9))
        for _ in range(30):
            field.step()
        assert field.positions() == [(12.0, 8.0)]

    def run_until_arrival(self, field, limit=100):
        for _ in range(limit):
            if field.step():
                return
        raise AssertionError("node never reached a waypoint")

    def test_pause_zero_departs_next_tick(self):
        spec = MotionSpec(5.0, 5.0, 0, 0, 10.0, position=(0.0, 0.0))
        field = RandomWaypointField(100, 100, [spec], random.Random(7))
        self.run_until_arrival(field)
        assert not field.moving[0] and field.pause[0] == 0
        field.step()  # departs again: a new waypoint was drawn
        assert field.moving[0]

    def test_pause_counts_stationary_ticks(self):
        spec = MotionSpec(5.0, 5.0, 3, 3, 10.0, position=(0.0, 0.0))
        field = RandomWaypointField(100, 100, [spec], random.Random(7))
        self.run_until_arrival(field)
        assert field.pause[0] == 3
        still = [field.positions()[0]]
        for _ in range(3):
            field.step()
            still.append(field.positions()[0])
        assert len(set(still)) == 1  # three whole ticks without motion
        field.step()
        assert field.moving[0]
        assert field.positions()[0] != still[0]

    def test_partition_labels_consistent_with_contacts(self):
        field = RandomWaypointField(100, 100, self.specs(10), random.Random(11))
        for _ in range(20):
            field.step()
        labels = field.partition_labels()
        want = bfs_components(range(10), field.contacts())
        assert labels == [want[i] for i in range(10)]


def test_backend_constant_is_reported():
    assert kernels.BACKEND in ("compiled", "python")
