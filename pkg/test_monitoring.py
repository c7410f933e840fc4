"""
Тесты метрик запуска и JSON-логов
"""
import json
import logging
import os
import sys
import unittest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from monitoring import JSONFormatter, MetricsCollector, MetricsHandler


class TestMetricsCollector(unittest.TestCase):
    def setUp(self):
        self.collector = MetricsCollector()

    def test_counters_and_gauges(self):
        self.collector.increment_counter("traces_replayed", 3)
        self.collector.increment_counter("traces_replayed")
        self.collector.set_gauge("events", 15.0)
        self.assertEqual(self.collector.get_counter("traces_replayed"), 4)
        self.assertEqual(self.collector.get_counter("missing"), 0)
        self.assertEqual(self.collector.get_gauge("events"), 15.0)

    def test_histogram_stats(self):
        """Тест статистики гистограммы"""
        for value in range(1, 101):
            self.collector.observe_histogram("h", float(value))
        stats = self.collector.get_histogram_stats("h")
        self.assertEqual(stats["count"], 100)
        self.assertEqual(stats["min"], 1.0)
        self.assertEqual(stats["max"], 100.0)
        self.assertEqual(stats["avg"], 50.5)
        self.assertEqual(stats["p50"], 51.0)
        self.assertEqual(stats["p95"], 96.0)
        self.assertEqual(self.collector.get_histogram_stats("empty"), {})

    def test_timed_records_on_error(self):
        with self.assertRaises(RuntimeError):
            with self.collector.timed("discover"):
                raise RuntimeError("boom")
        stats = self.collector.get_histogram_stats("discover_seconds")
        self.assertEqual(stats["count"], 1)
        self.assertGreaterEqual(stats["sum"], 0.0)

    def test_summary_and_reset(self):
        self.collector.increment_counter("b")
        self.collector.increment_counter("a")
        with self.collector.timed("ingest"):
            pass
        summary = self.collector.summary()
        self.assertEqual(list(summary["counters"]), ["a", "b"])
        self.assertEqual(list(summary["timings"]), ["ingest_seconds"])

        self.collector.reset()
        self.assertEqual(self.collector.summary(), {"counters": {}, "gauges": {}, "timings": {}})

    def test_log_summary(self):
        with self.collector.timed("conformance"):
            pass
        self.collector.increment_counter("alignment_exclusions", 2)
        with self.assertLogs("monitoring", level="INFO") as logs:
            self.collector.log_summary("conformance")
        self.assertIn("conformance finished: conformance_seconds=", logs.output[0])
        self.assertIn("alignment_exclusions=2", logs.output[0])

        self.collector.reset()
        with self.assertLogs("monitoring", level="INFO") as logs:
            self.collector.log_summary("export")
        self.assertIn("no timings", logs.output[0])


# ---------- Логирование ----------
class TestLogging(unittest.TestCase):
    def _record(self, level=logging.WARNING, **extra):
        record = logging.LogRecord("petri", level, __file__, 10, "net %s is %s", ("n", "degenerate"), None)
        record.__dict__.update(extra)
        return record

    def test_json_formatter(self):
        """Тест JSON-формата записи лога"""
        entry = json.loads(JSONFormatter().format(self._record(case_id="c1")))
        self.assertEqual(entry["level"], "WARNING")
        self.assertEqual(entry["logger"], "petri")
        self.assertEqual(entry["message"], "net n is degenerate")
        self.assertEqual(entry["case_id"], "c1")
        self.assertTrue(entry["timestamp"].endswith("+00:00"))
        self.assertNotIn("args", entry)

    def test_json_formatter_exception(self):
        try:
            raise ValueError("bad")
        except ValueError:
            record = logging.LogRecord("x", logging.ERROR, __file__, 1, "failed", (), sys.exc_info())
        entry = json.loads(JSONFormatter().format(record))
        self.assertIn("ValueError: bad", entry["exception"])

    def test_metrics_handler_counts_warnings(self):
        collector = MetricsCollector()
        handler = MetricsHandler(collector)
        logger = logging.getLogger("test_monitoring.handler")
        logger.addHandler(handler)
        logger.propagate = False
        try:
            logger.info("ignored")
            logger.warning("w1")
            logger.warning("w2")
            logger.error("e1")
        finally:
            logger.removeHandler(handler)
            logger.propagate = True
        self.assertEqual(collector.get_counter("log_warnings"), 2)
        self.assertEqual(collector.get_counter("log_errors"), 1)
        self.assertEqual(collector.get_counter("log_infos"), 0)


if __name__ == "__main__":
    unittest.main()
