"""
Конфигурация запуска
"""
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from analytics import DEFAULT_GUIDELINES, Guideline
from errors import ConfigError, RuleSyntaxError
from eventlog import VALUE_KINDS, ColumnMapping
from heuristics import HeuristicsParams
from rules import DEFAULT_RULES, DecisionRule, parse_rule
from utils import atomic_write, dump_json

logger = logging.getLogger(__name__)

ALGORITHMS = ("inductive", "heuristics")
INPUT_FORMATS = ("auto", "xes", "csv")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")
LOG_FORMATS = ("text", "json")


def _default_csv_mapping() -> Dict[str, Any]:
    mapping = ColumnMapping()
    return {
        "case_column": mapping.case_column,
        "activity_column": mapping.activity_column,
        "timestamp_column": mapping.timestamp_column,
        "timestamp_format": mapping.timestamp_format,
        "attribute_columns": [],
    }


# ---------- Базовые настройки ----------
@dataclass
class RunConfig:
    """Параметры одного воспроизводимого запуска"""

    # Вход
    input_path: str = ""
    input_format: str = "auto"
    csv_mapping: Dict[str, Any] = field(default_factory=_default_csv_mapping)
    fill_attributes: List[str] = field(default_factory=list)

    # Поиск модели
    algorithm: str = "inductive"
    noise_threshold: float = 0.0
    heuristics: Dict[str, Any] = field(default_factory=lambda: HeuristicsParams().to_dict())
    split_attribute: str = ""

    # Модель и отчеты
    model_path: str = ""
    output_dir: str = "out"
    diagnostics: bool = False

    # Аналитика
    guidelines: List[Dict[str, Any]] = field(default_factory=lambda: [g.to_dict() for g in DEFAULT_GUIDELINES])
    rules: List[Dict[str, str]] = field(
        default_factory=lambda: [{"name": k, "rule": v} for k, v in DEFAULT_RULES.items()]
    )

    # Выполнение
    workers: int = 1
    max_alignment_states: int = 200_000

    # Логирование
    log_level: str = "INFO"
    log_file: Optional[str] = None
    log_format: str = "text"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def from_dict(self, data: Dict[str, Any]):
        """Загружает значения из словаря; неизвестные ключи - ошибка"""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        for key, value in data.items():
            setattr(self, key, value)

    def save_to_file(self, filename: str = "config.json") -> None:
        atomic_write(filename, dump_json(self.to_dict()))

    def load_from_file(self, filename: str = "config.json") -> None:
        try:
            with open(filename, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file {filename} not found") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {filename} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {filename} must hold a JSON object")
        self.from_dict(data)

    # ---------- Производные объекты ----------
    def column_mapping(self) -> ColumnMapping:
        data = dict(self.csv_mapping)
        data["attribute_columns"] = tuple(tuple(pair) for pair in data.get("attribute_columns", ()))
        try:
            return ColumnMapping(**data)
        except TypeError as exc:
            raise ConfigError(f"invalid csv_mapping: {exc}") from exc

    def heuristics_params(self) -> HeuristicsParams:
        try:
            return HeuristicsParams(**self.heuristics)
        except TypeError as exc:
            raise ConfigError(f"invalid heuristics parameters: {exc}") from exc

    def guideline_objects(self) -> List[Guideline]:
        return [Guideline.from_dict(item) for item in self.guidelines]

    def rule_objects(self) -> List[DecisionRule]:
        result = []
        for item in self.rules:
            if set(item) != {"name", "rule"}:
                raise ConfigError("each rule needs exactly the keys 'name' and 'rule'")
            result.append(parse_rule(item["rule"], item["name"]))
        return result


# ---------- Загрузка конфигурации из переменных окружения ----------
def _env_int(name: str) -> Optional[int]:
    raw = os.getenv(name)
    if not raw:
        return None
    try:
        return int(raw)
    except ValueError:
        logger.warning("Invalid %s=%r ignored", name, raw)
        return None


def load_config_from_env(config: RunConfig):
    """Применяет переменные окружения (и .env, если есть)"""
    try:
        from dotenv import load_dotenv
        load_dotenv()
    except ImportError:
        logger.warning("python-dotenv not installed, .env file will not be loaded")

    if os.getenv("LOG_LEVEL"):
        config.log_level = os.getenv("LOG_LEVEL").upper()
    if os.getenv("LOG_FILE"):
        config.log_file = os.getenv("LOG_FILE")
    if os.getenv("LOG_FORMAT"):
        config.log_format = os.getenv("LOG_FORMAT").lower()

    workers = _env_int("WORKERS")
    if workers is not None:
        config.workers = workers
    budget = _env_int("MAX_ALIGNMENT_STATES")
    if budget is not None:
        config.max_alignment_states = budget


def build_config(config_file: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Значения по умолчанию < JSON-файл < окружение < флаги командной строки"""
    config = RunConfig()
    if config_file:
        config.load_from_file(config_file)
    load_config_from_env(config)
    if overrides:
        config.from_dict({k: v for k, v in overrides.items() if v is not None})
    return config


# ---------- Валидация конфигурации ----------
def validate_config(config: RunConfig, require_input: bool = False) -> List[str]:
    """Валидирует конфигурацию и возвращает список ошибок"""
    errors = []

    if require_input and not config.input_path:
        errors.append("input_path is required")
    if config.input_path and not Path(config.input_path).exists():
        errors.append(f"input_path {config.input_path} does not exist")
    if config.model_path and not Path(config.model_path).exists():
        errors.append(f"model_path {config.model_path} does not exist")
    if config.input_format not in INPUT_FORMATS:
        errors.append(f"input_format must be one of {', '.join(INPUT_FORMATS)}")

    if config.algorithm not in ALGORITHMS:
        errors.append(f"algorithm must be one of {', '.join(ALGORITHMS)}")
    if not isinstance(config.noise_threshold, (int, float)) or not 0.0 <= config.noise_threshold <= 1.0:
        errors.append("noise_threshold must be between 0.0 and 1.0")

    for check in (config.heuristics_params, config.column_mapping, config.guideline_objects):
        try:
            check()
        except (ConfigError, TypeError, ValueError) as exc:
            errors.append(str(exc))
    try:
        config.rule_objects()
    except (ConfigError, RuleSyntaxError) as exc:
        errors.append(f"invalid rule: {exc}")
    for pair in config.csv_mapping.get("attribute_columns", []):
        if len(pair) != 2 or pair[1] not in VALUE_KINDS:
            errors.append(f"attribute column {pair!r} must be [column, kind]")

    if not isinstance(config.workers, int) or config.workers < 1:
        errors.append("workers must be a positive integer")
    if not isinstance(config.max_alignment_states, int) or config.max_alignment_states < 1:
        errors.append("max_alignment_states must be a positive integer")

    if config.log_level not in LOG_LEVELS:
        errors.append(f"log_level must be one of {', '.join(LOG_LEVELS)}")
    if config.log_format not in LOG_FORMATS:
        errors.append("log_format must be text or json")

    return errors
