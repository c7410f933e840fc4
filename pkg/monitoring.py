"""
Метрики запуска и JSON-формат логов
"""
import json
import logging
import threading
import time
from collections import defaultdict
from contextlib import contextmanager
from datetime import datetime, timezone
from typing import Dict, Iterator, List

logger = logging.getLogger(__name__)


# ---------- Метрики ----------
class MetricsCollector:
    """Счетчики, gauge и гистограммы стадий; в выходные данные не попадают"""

    def __init__(self):
        self.counters: Dict[str, int] = defaultdict(int)
        self.gauges: Dict[str, float] = defaultdict(float)
        self.histograms: Dict[str, List[float]] = defaultdict(list)
        self.lock = threading.Lock()

    def increment_counter(self, name: str, amount: int = 1):
        with self.lock:
            self.counters[name] += amount

    def set_gauge(self, name: str, value: float):
        with self.lock:
            self.gauges[name] = value

    def observe_histogram(self, name: str, value: float):
        with self.lock:
            self.histograms[name].append(value)

    def get_counter(self, name: str) -> int:
        return self.counters.get(name, 0)

    def get_gauge(self, name: str) -> float:
        return self.gauges.get(name, 0.0)

    def get_histogram_stats(self, name: str) -> Dict[str, float]:
        """Возвращает статистику гистограммы"""
        with self.lock:
            values = sorted(self.histograms.get(name, []))
        if not values:
            return {}
        return {
            "count": len(values),
            "sum": sum(values),
            "min": values[0],
            "max": values[-1],
            "avg": sum(values) / len(values),
            "p50": values[len(values) // 2],
            "p95": values[int(len(values) * 0.95)],
            "p99": values[int(len(values) * 0.99)],
        }

    @contextmanager
    def timed(self, stage: str) -> Iterator[None]:
        """Время стадии в секундах -> гистограмма stage_seconds"""
        started = time.perf_counter()
        try:
            yield
        finally:
            self.observe_histogram(f"{stage}_seconds", time.perf_counter() - started)

    def summary(self) -> Dict[str, object]:
        with self.lock:
            names = sorted(self.histograms)
            counters = dict(sorted(self.counters.items()))
            gauges = dict(sorted(self.gauges.items()))
        return {
            "counters": counters,
            "gauges": gauges,
            "timings": {name: self.get_histogram_stats(name) for name in names},
        }

    def log_summary(self, command: str):
        data = self.summary()
        timings = ", ".join(
            f"{name}={stats['sum']:.3f}s" for name, stats in data["timings"].items()
        )
        counters = ", ".join(f"{k}={v}" for k, v in data["counters"].items())
        logger.info("%s finished: %s%s", command, timings or "no timings",
                    f"; {counters}" if counters else "")

    def reset(self):
        with self.lock:
            self.counters.clear()
            self.gauges.clear()
            self.histograms.clear()


# Глобальный коллектор метрик
metrics_collector = MetricsCollector()


# ---------- Логирование ----------
_STANDARD_ATTRS = {
    "name", "msg", "args", "levelname", "levelno", "pathname", "filename",
    "module", "lineno", "funcName", "created", "msecs", "relativeCreated",
    "thread", "threadName", "processName", "process", "exc_info", "exc_text",
    "stack_info", "taskName", "message", "asctime",
}


class JSONFormatter(logging.Formatter):
    """Форматтер для JSON логов"""

    def format(self, record):
        log_entry = {
            "timestamp": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }
        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)
        for key, value in record.__dict__.items():
            if key not in _STANDARD_ATTRS:
                log_entry[key] = value
        return json.dumps(log_entry, ensure_ascii=False, default=str)


class MetricsHandler(logging.Handler):
    """Считает предупреждения и ошибки за запуск"""

    def __init__(self, collector: MetricsCollector = metrics_collector):
        super().__init__(level=logging.WARNING)
        self.collector = collector

    def emit(self, record):
        try:
            self.collector.increment_counter(f"log_{record.levelname.lower()}s")
        except Exception:
            self.handleError(record)
