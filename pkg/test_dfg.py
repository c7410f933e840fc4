"""
Тесты графа непосредственного следования
"""
import os
import random
import sys
import unittest

from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from dfg import DirectlyFollowsGraph, build_dfg, dfg_from_sequences, filter_noise, reachable, weak_components
from errors import UnknownActivityError
from eventlog import EventLog

traces = st.lists(st.lists(st.sampled_from("abcd"), max_size=6), max_size=8)


class TestBuildDfg(unittest.TestCase):
    def test_counts(self):
        """Тест подсчета пар на логе [abc x2, acb]"""
        log = EventLog.from_sequences([("a", "b", "c"), ("a", "b", "c"), ("a", "c", "b")])
        dfg = build_dfg(log)
        self.assertEqual(dict(dfg.edges), {("a", "b"): 2, ("b", "c"): 2, ("a", "c"): 1, ("c", "b"): 1})
        self.assertEqual(dict(dfg.start_activities), {"a": 3})
        self.assertEqual(dict(dfg.end_activities), {"c": 2, "b": 1})

    def test_empty_log(self):
        dfg = build_dfg(EventLog())
        self.assertEqual(dfg.nodes, frozenset())
        self.assertEqual(dict(dfg.edges), {})

    def test_single_event(self):
        dfg = build_dfg(EventLog.from_sequences([("a",)]))
        self.assertEqual(dict(dfg.edges), {})
        self.assertEqual(dict(dfg.start_activities), {"a": 1})
        self.assertEqual(dict(dfg.end_activities), {"a": 1})

    def test_empty_traces_ignored(self):
        dfg = build_dfg(EventLog.from_sequences([(), ("a", "a")]))
        self.assertEqual(dfg.nodes, frozenset({"a"}))
        self.assertEqual(dict(dfg.edges), {("a", "a"): 1})

    def test_unknown_edge_node(self):
        with self.assertRaises(ValueError):
            DirectlyFollowsGraph(frozenset({"a"}), {("a", "b"): 1})

    @settings(max_examples=60, deadline=None)
    @given(traces)
    def test_edge_total(self, sequences):
        dfg = build_dfg(EventLog.from_sequences(sequences))
        self.assertEqual(sum(dfg.edges.values()), sum(max(len(s) - 1, 0) for s in sequences))
        non_empty = sum(1 for s in sequences if s)
        self.assertEqual(sum(dfg.start_activities.values()), non_empty)
        self.assertEqual(sum(dfg.end_activities.values()), non_empty)

    @settings(max_examples=40, deadline=None)
    @given(traces, st.integers(min_value=0, max_value=1000))
    def test_order_insensitive(self, sequences, seed):
        shuffled = list(sequences)
        random.Random(seed).shuffle(shuffled)
        self.assertEqual(
            build_dfg(EventLog.from_sequences(sequences)),
            build_dfg(EventLog.from_sequences(shuffled)),
        )


class TestReachability(unittest.TestCase):
    def setUp(self):
        self.chain = dfg_from_sequences({("a", "b", "c"): 1})

    def test_chain(self):
        self.assertTrue(reachable(self.chain, "a", "c"))
        self.assertFalse(reachable(self.chain, "c", "a"))

    def test_no_self_path(self):
        self.assertFalse(reachable(self.chain, "a", "a"))

    def test_cycle_reaches_itself(self):
        dfg = dfg_from_sequences({("a", "b", "a"): 1})
        self.assertTrue(reachable(dfg, "a", "a"))

    def test_unknown_label(self):
        with self.assertRaises(UnknownActivityError):
            reachable(self.chain, "a", "z")


class TestWeakComponents(unittest.TestCase):
    def test_partial_edges(self):
        dfg = DirectlyFollowsGraph(frozenset("abc"), {("a", "b"): 1})
        self.assertEqual(weak_components(dfg), [frozenset("ab"), frozenset("c")])

    def test_no_edges(self):
        dfg = DirectlyFollowsGraph(frozenset("ab"))
        self.assertEqual(weak_components(dfg), [frozenset("a"), frozenset("b")])

    def test_fully_connected(self):
        dfg = dfg_from_sequences({("a", "b", "c", "a"): 1})
        self.assertEqual(weak_components(dfg), [frozenset("abc")])

    def test_restriction_and_filter(self):
        dfg = dfg_from_sequences({("a", "b", "c"): 1})
        self.assertEqual(weak_components(dfg, {"a", "c"}), [frozenset("a"), frozenset("c")])
        split = weak_components(dfg, edge_filter=lambda a, b, n: a != "b")
        self.assertEqual(split, [frozenset("ab"), frozenset("c")])


class TestFilterNoise(unittest.TestCase):
    def test_drops_weak_edges(self):
        dfg = dfg_from_sequences({("a", "b"): 9, ("a", "c"): 1})
        filtered = filter_noise(dfg, 0.2)
        self.assertEqual(dict(filtered.edges), {("a", "b"): 9})
        self.assertEqual(filtered.nodes, dfg.nodes)
        self.assertEqual(filtered.start_activities, dfg.start_activities)

    def test_zero_threshold_is_identity(self):
        dfg = dfg_from_sequences({("a", "b"): 9, ("a", "c"): 1})
        self.assertIs(filter_noise(dfg, 0.0), dfg)


if __name__ == "__main__":
    unittest.main()
