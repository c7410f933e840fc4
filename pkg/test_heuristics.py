"""
Тесты Heuristics Miner
"""
import os
import random
import sys
import unittest

from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from errors import ConfigError
from eventlog import EventLog
from heuristics import (
    HeuristicsParams,
    bind_splits_joins,
    build_dependency_graph,
    dependency_measure,
    discover_heuristics,
    long_distance_dependencies,
    self_loop_measure,
)

counts = st.integers(min_value=0, max_value=500)


def _log(spec) -> EventLog:
    """[("abc", 5), ...] -> лог с повторами вариантов"""
    return EventLog.from_sequences([tuple(s) for s, n in spec for _ in range(n)])


class TestMeasures(unittest.TestCase):
    def test_examples(self):
        self.assertAlmostEqual(dependency_measure(5, 0), 5 / 6)
        self.assertEqual(dependency_measure(2, 2), 0.0)
        self.assertEqual(dependency_measure(0, 0), 0.0)
        self.assertAlmostEqual(self_loop_measure(3), 0.75)

    @given(counts, counts)
    def test_antisymmetric_and_bounded(self, x, y):
        value = dependency_measure(x, y)
        self.assertEqual(value, -dependency_measure(y, x))
        self.assertGreater(value, -1.0)
        self.assertLess(value, 1.0)

    @given(counts)
    def test_increasing_towards_one(self, x):
        self.assertLess(dependency_measure(x, 0), dependency_measure(x + 1, 0))


class TestParams(unittest.TestCase):
    def test_defaults(self):
        params = HeuristicsParams()
        self.assertEqual(params.dependency_threshold, 0.95)
        self.assertEqual(params.long_distance_threshold, 0.98)
        self.assertEqual(params.to_dict()["and_threshold"], 0.65)

    def test_out_of_range(self):
        with self.assertRaises(ConfigError):
            HeuristicsParams(dependency_threshold=1.5)
        with self.assertRaises(ConfigError):
            HeuristicsParams(min_directly_follows=0)
        with self.assertRaises(ConfigError):
            HeuristicsParams(min_activity_frequency=0)


# ---------- Граф зависимостей ----------
class TestDependencyGraph(unittest.TestCase):
    def test_strong_arc(self):
        graph = build_dependency_graph(_log([("ab", 10)]), HeuristicsParams(dependency_threshold=0.9))
        self.assertEqual(set(graph.arcs), {("a", "b")})
        self.assertAlmostEqual(graph.arcs[("a", "b")], 10 / 11)
        self.assertEqual(graph.repaired, frozenset())

    def test_symmetric_pair_repaired(self):
        """Тест: ab x5, ba x5 - мера 0, связность восстанавливается с пометкой"""
        graph = build_dependency_graph(_log([("ab", 5), ("ba", 5)]), HeuristicsParams(dependency_threshold=0.9))
        self.assertTrue(graph.arcs)
        self.assertEqual(frozenset(graph.arcs), graph.repaired)
        self.assertTrue(all(value == 0.0 for value in graph.arcs.values()))

    def test_empty_log(self):
        graph = build_dependency_graph(EventLog())
        self.assertEqual(graph.nodes, frozenset())
        self.assertEqual(dict(graph.arcs), {})

    def test_unrepaired_arcs_meet_threshold(self):
        params = HeuristicsParams(dependency_threshold=0.8)
        graph = build_dependency_graph(_log([("abcd", 5), ("acbd", 5), ("abd", 1)]), params)
        for arc, value in graph.arcs.items():
            if arc not in graph.repaired:
                self.assertGreaterEqual(value, 0.8)

    def test_self_loop(self):
        graph = build_dependency_graph(_log([("abbc", 5)]), HeuristicsParams(dependency_threshold=0.8))
        self.assertAlmostEqual(graph.arcs[("b", "b")], 5 / 6)

    def test_length_two_loop(self):
        graph = build_dependency_graph(_log([("aba", 10)]), HeuristicsParams(dependency_threshold=0.9))
        self.assertAlmostEqual(graph.arcs[("a", "b")], 10 / 11)
        self.assertAlmostEqual(graph.arcs[("b", "a")], 10 / 11)
        self.assertEqual(graph.repaired, frozenset())

    def test_infrequent_activities_skipped(self):
        params = HeuristicsParams(dependency_threshold=0.8, min_activity_frequency=2)
        graph = build_dependency_graph(_log([("ab", 5), ("ac", 1)]), params)
        self.assertEqual(graph.nodes, frozenset("ab"))
        self.assertNotIn(("a", "c"), graph.frequencies)


# ---------- Связки ----------
class TestBindings(unittest.TestCase):
    params = HeuristicsParams(dependency_threshold=0.8)

    def _cnet(self, spec):
        log = _log(spec)
        return bind_splits_joins(log, build_dependency_graph(log, self.params), self.params)

    def test_and_split(self):
        cnet = self._cnet([("abcd", 5), ("acbd", 5)])
        self.assertEqual(cnet.output_bindings["a"], (frozenset("bc"),))
        self.assertEqual(cnet.input_bindings["d"], (frozenset("bc"),))

    def test_xor_split(self):
        cnet = self._cnet([("abd", 5), ("acd", 5)])
        self.assertEqual(cnet.output_bindings["a"], (frozenset("b"), frozenset("c")))
        self.assertEqual(cnet.input_bindings["d"], (frozenset("b"), frozenset("c")))

    def test_single_path(self):
        cnet = self._cnet([("ab", 1)])
        self.assertEqual(cnet.output_bindings["a"], (frozenset("b"),))
        self.assertEqual(cnet.input_bindings["b"], (frozenset("a"),))
        self.assertEqual(cnet.input_bindings["a"], ())
        self.assertEqual(cnet.output_bindings["b"], ())

    def test_self_loop_binding(self):
        cnet = self._cnet([("abbc", 5)])
        self.assertIn(frozenset("b"), cnet.output_bindings["b"])
        self.assertIn(frozenset("c"), cnet.output_bindings["b"])

    def test_binding_members_are_neighbours(self):
        cnet = self._cnet([("abcd", 5), ("acbd", 3), ("abd", 2)])
        for node in cnet.nodes:
            for binding in cnet.input_bindings[node] + cnet.output_bindings[node]:
                self.assertTrue(binding <= cnet.neighbours(node) | {node})


class TestLongDistance(unittest.TestCase):
    def test_reported(self):
        """Тест: axb x20 -> (a, b) при пороге 0.95 (мера 40/41)"""
        log = _log([("axb", 20)])
        params = HeuristicsParams(long_distance_threshold=0.95)
        graph = build_dependency_graph(log, params)
        self.assertEqual(long_distance_dependencies(log, graph, params), {("a", "b")})
        self.assertEqual(long_distance_dependencies(log, graph, HeuristicsParams()), frozenset())

    def test_weak_pair_not_reported(self):
        log = _log([("axb", 1), ("axc", 1)])
        params = HeuristicsParams(dependency_threshold=0.5, long_distance_threshold=0.6)
        graph = build_dependency_graph(log, params)
        self.assertEqual(long_distance_dependencies(log, graph, params), frozenset())

    def test_empty_log(self):
        log = EventLog()
        self.assertEqual(long_distance_dependencies(log, build_dependency_graph(log)), frozenset())


class TestDiscoverHeuristics(unittest.TestCase):
    def test_two_node_net(self):
        cnet = discover_heuristics(_log([("ab", 10)]))
        self.assertEqual(cnet.nodes, frozenset("ab"))
        self.assertEqual(set(cnet.arcs), {("a", "b")})
        self.assertEqual(cnet.start_activities, frozenset("a"))
        self.assertEqual(cnet.end_activities, frozenset("b"))

    def test_empty_log(self):
        cnet = discover_heuristics(EventLog())
        self.assertEqual(cnet.nodes, frozenset())
        self.assertEqual(dict(cnet.arcs), {})

    @settings(max_examples=30, deadline=None)
    @given(
        st.lists(st.text(alphabet="abcd", min_size=1, max_size=6), min_size=1, max_size=10),
        st.integers(min_value=0, max_value=1000),
    )
    def test_order_invariant(self, sequences, seed):
        shuffled = list(sequences)
        random.Random(seed).shuffle(shuffled)
        first = discover_heuristics(EventLog.from_sequences([tuple(s) for s in sequences]))
        second = discover_heuristics(EventLog.from_sequences([tuple(s) for s in shuffled]))
        self.assertEqual(first, second)


if __name__ == "__main__":
    unittest.main()
