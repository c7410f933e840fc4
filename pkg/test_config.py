"""
Тесты конфигурации запуска
"""
import json
import os
import sys
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import RunConfig, build_config, load_config_from_env, validate_config
from errors import ConfigError
from heuristics import HeuristicsParams

DATA = Path(__file__).parent / "data"
_ENV_KEYS = ("LOG_LEVEL", "LOG_FILE", "LOG_FORMAT", "WORKERS", "MAX_ALIGNMENT_STATES")


def _clean_env(**values):
    """Окружение без переменных trajminer, плюс заданные значения"""
    env = {k: v for k, v in os.environ.items() if k not in _ENV_KEYS}
    env.update(values)
    return patch.dict(os.environ, env, clear=True)


class EnvCase(unittest.TestCase):
    def setUp(self):
        dotenv = patch("dotenv.load_dotenv")
        dotenv.start()
        self.addCleanup(dotenv.stop)


# ---------- RunConfig ----------
class TestRunConfig(EnvCase):
    def test_defaults_are_valid(self):
        """Тест конфигурации по умолчанию"""
        config = RunConfig()
        self.assertEqual(validate_config(config), [])
        self.assertEqual(config.algorithm, "inductive")
        self.assertEqual(config.workers, 1)
        self.assertEqual(config.heuristics_params(), HeuristicsParams())
        self.assertEqual([g.name for g in config.guideline_objects()],
                         ["antibiotics-within-1h", "lactic-acid-within-3h"])
        self.assertEqual(len(config.rule_objects()), 4)

    def test_unknown_key(self):
        with self.assertRaises(ConfigError) as ctx:
            RunConfig().from_dict({"workers": 2, "colour": "red"})
        self.assertIn("colour", str(ctx.exception))

    def test_save_and_load(self):
        config = RunConfig()
        config.noise_threshold = 0.3
        config.rules = [{"name": "r", "rule": "Infection => contains \"X\""}]
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "config.json")
            config.save_to_file(path)
            loaded = RunConfig()
            loaded.load_from_file(path)
        self.assertEqual(loaded.to_dict(), config.to_dict())

    def test_load_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            broken = os.path.join(tmp, "broken.json")
            Path(broken).write_text("{not json", encoding="utf-8")
            listing = os.path.join(tmp, "list.json")
            Path(listing).write_text("[1, 2]", encoding="utf-8")
            for path in (os.path.join(tmp, "missing.json"), broken, listing):
                with self.subTest(path=os.path.basename(path)):
                    with self.assertRaises(ConfigError):
                        RunConfig().load_from_file(path)

    def test_column_mapping(self):
        config = RunConfig()
        config.csv_mapping = dict(config.csv_mapping, attribute_columns=[["Age", "integer"]])
        mapping = config.column_mapping()
        self.assertEqual(mapping.attribute_columns, (("Age", "integer"),))

        config.csv_mapping = dict(config.csv_mapping, colour="red")
        with self.assertRaises(ConfigError):
            config.column_mapping()

    def test_rule_keys(self):
        config = RunConfig()
        config.rules = [{"name": "r", "rule": "a => contains \"b\"", "extra": 1}]
        with self.assertRaises(ConfigError):
            config.rule_objects()


# ---------- Источники значений ----------
class TestBuildConfig(EnvCase):
    def test_sepsis_config(self):
        with _clean_env():
            config = build_config(str(DATA / "sepsis_config.json"))
        self.assertEqual(validate_config(config), [])
        self.assertEqual(config.noise_threshold, 0.2)
        self.assertEqual(config.workers, 4)
        self.assertEqual(config.heuristics_params().min_activity_frequency, 30)
        self.assertEqual(config.split_attribute, "org:group")

    def test_precedence(self):
        """Тест порядка: файл < окружение < флаги"""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "run.json")
            Path(path).write_text(json.dumps({"workers": 2, "log_level": "ERROR"}), encoding="utf-8")
            with _clean_env(WORKERS="3", LOG_LEVEL="debug"):
                config = build_config(path)
                self.assertEqual(config.workers, 3)
                self.assertEqual(config.log_level, "DEBUG")

                config = build_config(path, {"workers": 8, "output_dir": None})
                self.assertEqual(config.workers, 8)
                self.assertEqual(config.output_dir, "out")

    def test_env_values(self):
        with _clean_env(LOG_FORMAT="JSON", LOG_FILE="run.log", MAX_ALIGNMENT_STATES="500"):
            config = RunConfig()
            load_config_from_env(config)
        self.assertEqual(config.log_format, "json")
        self.assertEqual(config.log_file, "run.log")
        self.assertEqual(config.max_alignment_states, 500)

    def test_invalid_env_integer_ignored(self):
        with _clean_env(WORKERS="many"):
            with self.assertLogs("config", level="WARNING") as logs:
                config = build_config()
        self.assertEqual(config.workers, 1)
        self.assertIn("WORKERS", logs.output[0])

    def test_unknown_override(self):
        with _clean_env():
            with self.assertRaises(ConfigError):
                build_config(overrides={"threads": 2})


# ---------- Валидация ----------
class TestValidateConfig(unittest.TestCase):
    def _problems(self, **changes):
        config = RunConfig()
        for key, value in changes.items():
            setattr(config, key, value)
        return validate_config(config)

    def test_require_input(self):
        self.assertEqual(validate_config(RunConfig(), require_input=True), ["input_path is required"])

    def test_missing_paths(self):
        problems = self._problems(input_path="/nonexistent/log.xes", model_path="/nonexistent/m.pnml")
        self.assertEqual(len(problems), 2)
        self.assertIn("does not exist", problems[0])

    def test_field_checks(self):
        cases = [
            ({"algorithm": "alpha"}, "algorithm"),
            ({"input_format": "json"}, "input_format"),
            ({"noise_threshold": 1.5}, "noise_threshold"),
            ({"noise_threshold": "low"}, "noise_threshold"),
            ({"workers": 0}, "workers"),
            ({"max_alignment_states": 0}, "max_alignment_states"),
            ({"log_level": "LOUD"}, "log_level"),
            ({"log_format": "xml"}, "log_format"),
            ({"heuristics": {"dependency_threshold": 2.0}}, "dependency_threshold"),
            ({"heuristics": {"speed": 1}}, "heuristics"),
            ({"guidelines": [{"name": "g", "anchor": "A", "target": "A", "limit_hours": 1}]}, "differ"),
            ({"rules": [{"name": "r", "rule": "no arrow"}]}, "invalid rule"),
        ]
        for changes, fragment in cases:
            with self.subTest(changes=changes):
                problems = self._problems(**changes)
                self.assertTrue(problems)
                self.assertTrue(any(fragment in p for p in problems), problems)

    def test_attribute_kind(self):
        config = RunConfig()
        config.csv_mapping = dict(config.csv_mapping, attribute_columns=[["Age", "number"]])
        problems = validate_config(config)
        self.assertTrue(any("['Age', 'number']" in p for p in problems), problems)


if __name__ == "__main__":
    unittest.main()
