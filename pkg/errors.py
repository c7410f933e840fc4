"""
Исключения trajectory-miner
"""
from typing import Optional


class TrajectoryMinerError(Exception):
    """Базовый класс всех ошибок пакета"""


# ---------- Ввод данных ----------
class LogParseError(TrajectoryMinerError, ValueError):
    """Некорректный XML/CSV. line - номер строки источника, если известен"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"{message} (line {line})"
        super().__init__(message)


class IngestionError(TrajectoryMinerError, ValueError):
    """Данные разобраны, но нарушают модель лога"""


class ConfigError(TrajectoryMinerError, ValueError):
    """Ошибка конфигурации запуска или маппинга колонок"""


# ---------- Модели ----------
class UnknownActivityError(TrajectoryMinerError, KeyError):
    def __init__(self, label: str):
        self.label = label
        super().__init__(f"unknown activity: {label!r}")

    def __str__(self) -> str:
        return self.args[0]


class FiringError(TrajectoryMinerError, RuntimeError):
    """Попытка сработать незадействованному переходу"""


class ConversionError(TrajectoryMinerError, ValueError):
    pass


class ModelLoadError(TrajectoryMinerError, ValueError):
    pass


class LanguageTooLarge(TrajectoryMinerError, RuntimeError):
    pass


# ---------- Conformance ----------
class SearchBudgetExceeded(TrajectoryMinerError, RuntimeError):
    """Поиск выравнивания превысил лимит состояний"""

    def __init__(self, case_id: str, states: int):
        self.case_id = case_id
        self.states = states
        super().__init__(
            f"alignment search for trace {case_id!r} exceeded {states} states"
        )


# ---------- Нотации ----------
class NotationError(TrajectoryMinerError, ValueError):
    """Синтаксическая ошибка в текстовой нотации (деревья, правила)"""

    def __init__(self, message: str, position: Optional[int] = None):
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class RuleSyntaxError(NotationError):
    pass


class RuleSchemaError(TrajectoryMinerError, ValueError):
    """Правило ссылается на атрибут, которого нет в логе"""
