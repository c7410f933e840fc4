"""
Вспомогательные утилиты
"""
import json
import logging
import os
import sys
import tempfile
from datetime import timedelta
from pathlib import Path
from typing import Any, List, Optional, Sequence, Union

TEXT_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


# ---------- Логирование ----------
def setup_logging(level: str = "INFO", log_file: Optional[str] = None, fmt: str = "text"):
    """Настраивает логирование: диагностика только в stderr (и в файл, если задан)"""
    log_level = getattr(logging, level.upper(), logging.INFO)
    if fmt == "json":
        from monitoring import JSONFormatter
        formatter: logging.Formatter = JSONFormatter()
    else:
        formatter = logging.Formatter(TEXT_FORMAT)

    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))
    for handler in handlers:
        handler.setFormatter(formatter)

    logging.basicConfig(level=log_level, handlers=handlers, force=True)


# ---------- Работа с файлами ----------
def atomic_write(path: Union[str, Path], data: Union[str, bytes]) -> None:
    """Пишет через временный файл и os.replace: частичных файлов не остается"""
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    payload = data.encode("utf-8") if isinstance(data, str) else data
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def dump_json(data: Any) -> str:
    """Детерминированный JSON: отсортированные ключи, перевод строки в конце"""
    return json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True) + "\n"


def load_json_file(filename: Union[str, Path]) -> Any:
    with open(filename, "r", encoding="utf-8") as f:
        return json.load(f)


# ---------- Форматирование ----------
def to_hours(value: timedelta) -> float:
    return value.total_seconds() / 3600.0


def format_hours(value: Optional[timedelta]) -> str:
    """Длительность в часах с двумя знаками"""
    if value is None:
        return "-"
    return f"{to_hours(value):.2f}h"


def format_percentage(value: float, total: float) -> str:
    if total == 0:
        return "0.0%"
    return f"{value / total * 100:.1f}%"


def render_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Таблица с выровненными колонками; числа выравниваются вправо"""
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    numeric = [
        all(isinstance(row[i], (int, float)) for row in rows) if rows else False
        for i in range(len(headers))
    ]

    def line(row: List[str]) -> str:
        parts = [
            cell.rjust(widths[i]) if numeric[i] else cell.ljust(widths[i])
            for i, cell in enumerate(row)
        ]
        return "  ".join(parts).rstrip()

    out = [line(cells[0]), "  ".join("-" * w for w in widths)]
    out.extend(line(row) for row in cells[1:])
    return "\n".join(out) + "\n"


# ---------- Утилиты для работы с ошибками ----------
def format_exception(e: Exception) -> str:
    """Форматирует исключение для логирования"""
    return f"{type(e).__name__}: {str(e)}"
