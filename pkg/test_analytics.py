"""
Тесты аналитики: варианты, временные рекомендации, правила, когорты
"""
import os
import sys
import unittest
from datetime import datetime, timedelta, timezone
from pathlib import Path

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from analytics import (
    DEFAULT_GUIDELINES,
    Guideline,
    Pathway,
    check_time_guideline,
    classify_pathway,
    cohort_stats,
    cohort_table,
    evaluate_rule,
    extract_variants,
    first_return,
    guideline_table,
    rules_table,
    variant_stats,
    variants_table,
)
from errors import ConfigError, RuleSchemaError
from eventlog import Event, EventLog, Trace, read_log
from rules import default_rules

DATA = Path(__file__).parent / "data"
T0 = datetime(2020, 5, 1, 8, 0, tzinfo=timezone.utc)


def _trace(case_id: str, *steps) -> Trace:
    """Трасса из пар (активность, минуты от начала)"""
    return Trace(case_id, [Event(label, T0 + timedelta(minutes=m)) for label, m in steps])


class MiniLogCase(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.log = read_log(DATA / "mini_log.xes")


# ---------- Варианты ----------
class TestVariants(MiniLogCase):
    def test_ordering(self):
        log = EventLog.from_sequences([("a", "b"), ("b",), ("a", "b"), ("a",)])
        variants = extract_variants(log)
        self.assertEqual([v.signature for v in variants], [("a", "b"), ("a",), ("b",)])
        self.assertEqual(variants[0].case_ids, ("c1", "c3"))
        self.assertEqual(sum(v.frequency for v in variants), 4)

    def test_empty_log(self):
        summary = variant_stats(EventLog())
        self.assertEqual(summary.variant_count, 0)
        self.assertIsNone(summary.longest_trace)
        self.assertEqual(summary.to_dict()["traces"], 0)

    def test_mini_log_summary(self):
        summary = variant_stats(self.log)
        self.assertEqual(summary.trace_count, 8)
        self.assertEqual(summary.event_count, 71)
        self.assertEqual(summary.variant_count, 8)
        self.assertEqual(summary.longest_trace[:2], ("m02", 11))
        self.assertEqual(summary.longest_duration, ("m08", timedelta(hours=9690)))
        self.assertEqual(summary.traces_over_one_day, 6)
        self.assertEqual(summary.top_fifth_cases, 2)

    def test_activity_statistics(self):
        summary = variant_stats(self.log)
        registration = summary.activity("ER Registration")
        self.assertEqual((registration.occurrences, registration.cases, registration.rework), (8, 8, 0))
        self.assertEqual(summary.activity("Admission IC").cases, 3)
        self.assertEqual(summary.activity("Return ER").variants, 4)
        with self.assertRaises(KeyError):
            summary.activity("LacticAcid")

    def test_variants_table_golden(self):
        table = variants_table(variant_stats(self.log).variants)
        self.assertEqual(table, (DATA / "golden" / "mini_variants.txt").read_text(encoding="utf-8"))

    def test_variants_table_limit(self):
        table = variants_table(variant_stats(self.log).variants, limit=3)
        self.assertEqual(len(table.splitlines()), 5)


# ---------- Временные рекомендации ----------
class TestGuidelines(MiniLogCase):
    def test_antibiotics_within_hour(self):
        """Тест: 2 нарушения из 5 оцениваемых, средняя задержка 69 минут"""
        report = check_time_guideline(self.log, "ER Sepsis Triage", "IV Antibiotics", timedelta(hours=1))
        self.assertEqual((report.evaluable, report.compliant, report.violating), (5, 3, 2))
        self.assertEqual(report.non_evaluable, 3)
        self.assertAlmostEqual(report.violation_rate, 0.4)
        self.assertEqual(report.mean_delay, timedelta(minutes=69))
        self.assertEqual(report.violating_cases, ("m02", "m06"))
        self.assertEqual(report.to_dict()["mean_delay_hours"], 1.15)

    def test_limit_is_inclusive(self):
        log = EventLog((_trace("x", ("S", 0), ("B", 60)),))
        self.assertEqual(check_time_guideline(log, "S", "B", timedelta(hours=1)).compliant, 1)

    def test_target_absent(self):
        report = check_time_guideline(self.log, "ER Sepsis Triage", "LacticAcid", timedelta(hours=3))
        self.assertEqual(report.evaluable, 0)
        self.assertEqual(report.violation_rate, 0.0)
        self.assertIsNone(report.mean_delay)
        self.assertIsNone(report.to_dict()["mean_delay_hours"])

    def test_negative_delay_is_violation(self):
        log = EventLog((_trace("x", ("B", 0), ("S", 30)), _trace("y", ("S", 0), ("B", 10))))
        report = check_time_guideline(log, "S", "B", timedelta(hours=1), name="order")
        self.assertEqual((report.violating, report.negative_delays, report.compliant), (1, 1, 1))
        self.assertEqual(report.mean_delay, timedelta(minutes=-10))
        self.assertEqual(report.name, "order")

    def test_first_occurrences_used(self):
        log = EventLog((_trace("x", ("S", 0), ("S", 50), ("B", 70), ("B", 80)),))
        report = check_time_guideline(log, "S", "B", timedelta(hours=1))
        self.assertEqual(report.violating, 1)
        self.assertEqual(report.mean_delay, timedelta(minutes=70))

    def test_guideline_validation(self):
        with self.assertRaises(ConfigError):
            Guideline("g", "a", "a", timedelta(hours=1))
        with self.assertRaises(ConfigError):
            Guideline("g", "a", "b", timedelta(0))
        with self.assertRaises(ConfigError):
            Guideline.from_dict({"name": "g", "anchor": "a", "target": "b"})
        with self.assertRaises(ConfigError):
            Guideline.from_dict({"name": "g", "anchor": "a", "target": "b", "limit_hours": 1, "x": 1})
        parsed = Guideline.from_dict(DEFAULT_GUIDELINES[0].to_dict())
        self.assertEqual(parsed, DEFAULT_GUIDELINES[0])

    def test_table(self):
        reports = [check_time_guideline(self.log, g.anchor, g.target, g.limit, g.name) for g in DEFAULT_GUIDELINES]
        table = guideline_table(reports)
        self.assertIn("antibiotics-within-1h", table)
        self.assertIn("40.0%", table)
        self.assertIn("1.15h", table)


# ---------- Правила ----------
class TestRules(MiniLogCase):
    def _reports(self):
        return {rule.name: evaluate_rule(self.log, rule) for rule in default_rules()}

    def test_default_rules(self):
        reports = self._reports()
        self.assertEqual((reports["sirs-antibiotics"].support, reports["sirs-antibiotics"].satisfied), (6, 5))
        self.assertEqual(reports["sirs-antibiotics"].counterexamples, ("m04",))
        self.assertEqual((reports["sirs-liquid"].support, reports["sirs-liquid"].satisfied), (6, 5))
        transfer = reports["sirs-hypotension-transfer"]
        self.assertEqual((transfer.support, transfer.satisfied), (3, 2))
        self.assertEqual(transfer.counterexamples, ("m04",))

    def test_crp_interval(self):
        report = self._reports()["crp-no-normal-care"]
        self.assertEqual((report.support, report.satisfied), (5, 2))
        self.assertEqual(report.counterexamples, ("m01", "m04", "m07"))
        self.assertAlmostEqual(report.confidence, 0.4)

    def test_unknown_attribute(self):
        with self.assertRaises(RuleSchemaError):
            evaluate_rule(self.log, 'LacticAcidLevel > 2 => contains "IV Antibiotics"')

    def test_no_support(self):
        report = evaluate_rule(self.log, 'Age > 200 => contains "Release A"')
        self.assertEqual(report.support, 0)
        self.assertIsNone(report.confidence)
        self.assertFalse(report.to_dict()["evaluable"])

    def test_counterexamples_capped(self):
        report = evaluate_rule(self.log, 'Age >= 0 => contains "LacticAcid"', max_counterexamples=2)
        self.assertEqual(report.support, 8)
        self.assertEqual(len(report.counterexamples), 2)

    def test_table(self):
        table = rules_table(list(self._reports().values()))
        self.assertIn("83.3%", table)
        self.assertIn("66.7%", table)


# ---------- Когорты ----------
class TestCohorts(MiniLogCase):
    def test_classify(self):
        self.assertIs(classify_pathway(["Admission NC", "Release A"]), Pathway.NC_ONLY)
        self.assertIs(classify_pathway(["Admission NC", "Admission IC"]), Pathway.NC_THEN_IC)
        self.assertIs(classify_pathway(["Admission IC", "Admission NC"]), Pathway.IC_ONLY)
        self.assertIs(classify_pathway(["ER Registration", "Release B"]), Pathway.NO_ADMISSION)
        self.assertIs(classify_pathway(["ER Registration"]), Pathway.NO_RELEASE)

    def test_mini_log(self):
        report = cohort_stats(self.log)
        self.assertEqual(report.total_cases, 8)
        self.assertEqual((report.admitted_nc, report.nc_then_ic, report.no_admission), (3, 3, 2))
        self.assertEqual((report.admitted_ic, report.no_release), (0, 0))
        self.assertEqual((report.any_nc, report.any_ic, report.any_return), (6, 3, 4))
        self.assertEqual((report.returns_28d, report.returns_365d), (2, 3))
        self.assertEqual(report.returns_28d_by_release, {"A": 2})
        self.assertEqual(report.returns_365d_by_release, {"A": 3})

    def test_to_dict(self):
        data = cohort_stats(self.log).to_dict(with_cases=True)
        self.assertEqual(data["pathways"]["nc_only"], 3)
        self.assertEqual(data["returns_28d_rate"], 0.25)
        self.assertEqual(data["case_pathways"]["m03"], "no_admission")
        self.assertNotIn("case_pathways", cohort_stats(self.log).to_dict())

    def test_first_return(self):
        trace = _trace("x", ("Release B", 0), ("Return ER", 60 * 24))
        self.assertEqual(first_return(trace).release, "B")
        self.assertEqual(first_return(trace).delay, timedelta(days=1))
        self.assertIsNone(first_return(_trace("y", ("Release A", 0))))

    def test_return_without_release(self):
        log = EventLog((_trace("x", ("ER Registration", 0), ("Return ER", 5)),))
        with self.assertLogs("analytics", level="WARNING"):
            report = cohort_stats(log)
        self.assertEqual((report.any_return, report.returns_without_release, report.returns_28d), (1, 1, 0))

    def test_table(self):
        table = cohort_table(cohort_stats(self.log))
        self.assertIn("returns <= 28d via Release A", table)
        self.assertIn("37.5%", table)


if __name__ == "__main__":
    unittest.main()
