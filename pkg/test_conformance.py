"""
Тесты проверки соответствия: воспроизведение фишек, выравнивания,
точность, обобщение, простота
"""
import os
import random
import sys
import unittest
from collections import deque
from pathlib import Path

from hypothesis import given, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from conformance import (
    CostFunction,
    Move,
    MoveKind,
    align,
    align_log,
    generalization_from_counts,
    precision_escaping,
    quality_report,
    replay_trace,
    simplicity,
    token_replay,
)
from errors import ConfigError, SearchBudgetExceeded
from eventlog import EventLog, read_log
from inductive import discover_inductive
from petri import PetriNet, PetriNetBuilder, enabled, fire, tree_to_petri
from process_tree import parse_tree
from testing_support import log_of, random_conserving_net, random_trace, random_tree_with_language

MINI_LOG = Path(__file__).parent / "data" / "mini_log.xes"


def _net(notation: str) -> PetriNet:
    return tree_to_petri(parse_tree(notation))


def _log(*sequences) -> EventLog:
    return EventLog.from_sequences([tuple(s) for s in sequences])


def _oracle_cost(net: PetriNet, trace) -> int:
    """0-1 BFS по (разметка, позиция): синхронные и тихие ходы - 0, прочие - 1"""
    start = (net.initial_marking, 0)
    best = {start: 0}
    queue = deque([(0, start)])
    while queue:
        cost, state = queue.popleft()
        if cost > best[state]:
            continue
        marking, i = state
        if i == len(trace) and marking == net.final_marking:
            return cost
        steps = []
        for t in enabled(net, marking):
            following = fire(net, marking, t)
            if t.is_silent:
                steps.append(((following, i), 0))
            else:
                steps.append(((following, i), 1))
                if i < len(trace) and t.label == trace[i]:
                    steps.append(((following, i + 1), 0))
        if i < len(trace):
            steps.append(((marking, i + 1), 1))
        for following, step in steps:
            total = cost + step
            if total < best.get(following, total + 1):
                best[following] = total
                if step == 0:
                    queue.appendleft((total, following))
                else:
                    queue.append((total, following))
    raise AssertionError("final marking unreachable")


def _replays(net: PetriNet, alignment, trace) -> bool:
    marking = net.initial_marking
    for tid in alignment.firing_sequence:
        marking = fire(net, marking, tid)
    return marking == net.final_marking and alignment.log_projection == tuple(trace)


# ---------- Воспроизведение фишек ----------
class TestTokenReplay(unittest.TestCase):
    def test_missing_step(self):
        """Тест: Seq(a, b) и трасса <a> -> p=2, c=2, m=1, r=1, fitness 0.5"""
        replay = replay_trace(_net("Seq(a, b)"), ("a",))
        self.assertEqual((replay.produced, replay.consumed, replay.missing, replay.remaining), (2, 2, 1, 1))
        self.assertAlmostEqual(replay.fitness, 0.5)
        self.assertFalse(replay.fits)

    def test_fitting_trace_with_silent_steps(self):
        replay = replay_trace(_net("Seq(a, And(b, c), Xor(d, tau))"), tuple("acb"))
        self.assertTrue(replay.fits)
        self.assertEqual(replay.fitness, 1.0)

    def test_unknown_activity(self):
        replay = replay_trace(_net("a"), ("a", "z"))
        self.assertEqual((replay.missing, replay.remaining), (1, 1))
        self.assertLess(replay.fitness, 1.0)

    def test_log_level_result(self):
        log = _log("ab", "ab", "a")
        result = token_replay(_net("Seq(a, b)"), log)
        self.assertEqual(result.fitting_traces, 2)
        self.assertAlmostEqual(result.fitness, (1.0 + 1.0 + 0.5) / 3)
        self.assertEqual(result.frequencies, {"c3": 1, "c1": 2})
        self.assertEqual(sorted(result.transition_executions.values()), [2, 3])

    def test_empty_log(self):
        self.assertEqual(token_replay(_net("a"), EventLog()).fitness, 1.0)


# ---------- Выравнивания ----------
class TestAlign(unittest.TestCase):
    def test_model_move(self):
        """Тест: Seq(a, b, c) и <a, c> -> стоимость 1, fitness 0.8"""
        net = _net("Seq(a, b, c)")
        alignment = align(net, ("a", "c"))
        self.assertEqual(alignment.cost, 1.0)
        self.assertEqual([str(m) for m in alignment.deviations], ["(>>, b)"])
        report = align_log(net, _log("ac"))
        self.assertEqual(report.model_only_cost, 3.0)
        self.assertAlmostEqual(report.fitness, 0.8)

    def test_log_move(self):
        alignment = align(_net("Seq(a, b)"), ("a", "x", "b"))
        self.assertEqual(alignment.cost, 1.0)
        self.assertEqual(alignment.deviations, [Move(MoveKind.LOG, "x")])

    def test_perfect_fit(self):
        net = _net("Loop(a, b)")
        alignment = align(net, tuple("ababa"))
        self.assertEqual(alignment.cost, 0.0)
        self.assertTrue(_replays(net, alignment, "ababa"))

    def test_custom_costs(self):
        costs = CostFunction(model_move=2.0, log_move=5.0)
        self.assertEqual(align(_net("Seq(a, b)"), ("a",), costs).cost, 2.0)
        self.assertEqual(align(_net("a"), ("a", "z"), costs).cost, 5.0)
        with self.assertRaises(ConfigError):
            CostFunction(log_move=-1.0)

    def test_budget(self):
        with self.assertRaises(SearchBudgetExceeded) as ctx:
            align(_net("Seq(a, b, c)"), tuple("cba"), max_states=2, case_id="x")
        self.assertEqual(ctx.exception.case_id, "x")

    def test_budget_excludes_cases(self):
        net = _net("Seq(a, b, c)")
        with self.assertLogs("conformance", level="WARNING"):
            report = align_log(net, _log("abc", "cba"), max_states=4)
        self.assertTrue(report.partial)
        self.assertEqual(report.excluded, ("c2",))
        self.assertEqual(report.fitness, 1.0)
        self.assertFalse(report.model_only_exceeded)

    def test_budget_below_shortest_model_path(self):
        """Тест: пустая трасса не выравнивается в бюджет -> отчет частичный, без исключения"""
        net = _net("Seq(a, b, c)")
        with self.assertLogs("conformance", level="WARNING") as logs:
            report = align_log(net, _log("abc", "ab"), max_states=1)
        self.assertTrue(any("empty trace" in line for line in logs.output))
        self.assertTrue(report.model_only_exceeded)
        self.assertTrue(report.partial)
        self.assertEqual(report.model_only_cost, 0.0)
        self.assertEqual(report.excluded, ("c1", "c2"))
        self.assertEqual(report.fitness, 0.0)

        with self.assertLogs("conformance", level="WARNING"):
            quality = quality_report(net, _log("abc"), max_states=1)
        self.assertTrue(quality.partial)
        self.assertTrue(quality.to_dict()["partial"])
        self.assertIn("model-only alignment cost exceeded the budget and was taken as 0", quality.notes)

    def test_empty_log(self):
        self.assertEqual(align_log(_net("a"), EventLog()).fitness, 1.0)

    def test_matches_bfs_oracle(self):
        """Тест: стоимость A* совпадает с полным перебором на 200 случайных задачах"""
        for seed in range(200):
            rng = random.Random(seed)
            net = random_conserving_net(rng)
            trace = random_trace(rng)
            with self.subTest(seed=seed):
                alignment = align(net, trace)
                self.assertEqual(alignment.cost, _oracle_cost(net, trace))
                self.assertTrue(_replays(net, alignment, trace))


# ---------- Метрики качества ----------
class TestMetrics(unittest.TestCase):
    def test_precision_concurrency(self):
        """Тест: And(a, b) и лог [<a, b>] -> 1 - 1/3"""
        self.assertAlmostEqual(precision_escaping(_net("And(a, b)"), _log("ab")), 2 / 3)

    def test_precision_exact_model(self):
        self.assertEqual(precision_escaping(_net("Seq(a, Xor(b, c))"), _log("ab", "ac")), 1.0)

    def test_precision_empty_log(self):
        self.assertEqual(precision_escaping(_net("a"), EventLog()), 1.0)

    def test_generalization(self):
        self.assertAlmostEqual(generalization_from_counts({"t1": 1, "t2": 4}, ["t1", "t2"]), 0.25)
        self.assertEqual(generalization_from_counts({}, []), 0.0)
        self.assertEqual(generalization_from_counts({"t1": 0}, ["t1"]), 0.0)

    def test_simplicity(self):
        builder = PetriNetBuilder()
        for place in ("p1", "p2"):
            builder.add_place(place)
        for tid in ("t1", "t2"):
            builder.add_transition(tid, tid)
        for source, target in (("p1", "t1"), ("t1", "p2"), ("p2", "t2"), ("t2", "p1"), ("p1", "t2"), ("t2", "p2")):
            builder.add_arc(source, target)
        self.assertAlmostEqual(simplicity(builder.build({"p1": 1}, {"p2": 1})), 0.5)
        self.assertEqual(simplicity(_net("Seq(a, b)")), 1.0)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=10 ** 6), st.integers(min_value=0, max_value=10 ** 6))
    def test_metrics_in_unit_interval(self, model_seed, log_seed):
        tree, _ = random_tree_with_language(model_seed, max_activities=5, max_traces=50)
        rng = random.Random(log_seed)
        log = log_of(random_trace(rng, labels="abcdef", max_length=5) for _ in range(6))
        report = quality_report(tree_to_petri(tree), log)
        for value in (report.fitness, report.precision, report.generalization,
                      report.simplicity, report.alignment_fitness, report.token_fitness):
            self.assertGreaterEqual(value, 0.0)
            self.assertLessEqual(value, 1.0)


class TestQualityReport(unittest.TestCase):
    def setUp(self):
        self.log = read_log(MINI_LOG)
        self.net = tree_to_petri(discover_inductive(self.log))

    def test_discovered_model_fits(self):
        report = quality_report(self.net, self.log)
        self.assertEqual(report.fitting_traces, 8)
        self.assertAlmostEqual(report.fitness, 1.0)
        self.assertAlmostEqual(report.alignment_fitness, 1.0)
        self.assertFalse(report.partial)
        self.assertIsNone(report.per_trace)

    def test_workers_do_not_change_result(self):
        self.assertEqual(quality_report(self.net, self.log, workers=1), quality_report(self.net, self.log, workers=4))

    def test_diagnostics(self):
        report = quality_report(_net("Seq(a, b)"), _log("ab", "ax"), diagnostics=True)
        data = report.to_dict()
        self.assertEqual(list(data["per_trace"]), ["c1", "c2"])
        self.assertEqual(data["per_trace"]["c2"]["deviations"], ["(x, >>)", "(>>, b)"])
        self.assertTrue(any("absent from the model: x" in note for note in data["notes"]))


if __name__ == "__main__":
    unittest.main()
