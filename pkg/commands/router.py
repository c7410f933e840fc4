# Реестр подкоманд trajminer: регистрация и запуск с единой обработкой ошибок

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List

from config import RunConfig, validate_config
from errors import ConfigError, TrajectoryMinerError
from monitoring import metrics_collector
from utils import format_exception

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID_CONFIG = 2

Handler = Callable[[RunConfig, object], None]


@dataclass(frozen=True)
class Command:
    name: str
    help: str
    handler: Handler
    needs_input: bool = True


_COMMANDS: Dict[str, Command] = {}


def register(name: str, help: str, needs_input: bool = True) -> Callable[[Handler], Handler]:
    """Декоратор: добавляет обработчик подкоманды в реестр"""

    def decorator(handler: Handler) -> Handler:
        if name in _COMMANDS:
            raise ValueError(f"command {name!r} is already registered")
        _COMMANDS[name] = Command(name, help, handler, needs_input)
        return handler

    return decorator


def get_command(name: str) -> Command:
    try:
        return _COMMANDS[name]
    except KeyError:
        raise ConfigError(f"unknown command {name!r}") from None


def list_commands() -> List[Command]:
    return [_COMMANDS[name] for name in sorted(_COMMANDS)]


def dispatch_command(name: str, config: RunConfig, args: object = None) -> int:
    """Проверяет конфигурацию и выполняет подкоманду.

    0 - все выходные файлы записаны; 2 - ошибка конфигурации;
    1 - любая другая ошибка (частичных файлов не остается, запись атомарна).
    """
    try:
        command = get_command(name)
    except ConfigError as e:
        logger.error(format_exception(e))
        return EXIT_INVALID_CONFIG

    problems = validate_config(config, require_input=command.needs_input)
    if problems:
        for problem in problems:
            logger.error("Invalid configuration: %s", problem)
        return EXIT_INVALID_CONFIG

    metrics_collector.reset()
    try:
        with metrics_collector.timed(name):
            command.handler(config, args)
    except ConfigError as e:
        logger.error(format_exception(e))
        return EXIT_INVALID_CONFIG
    except (TrajectoryMinerError, OSError) as e:
        logger.error("%s failed: %s", name, format_exception(e))
        return EXIT_FAILURE
    except Exception as e:
        logger.exception("%s crashed: %s", name, format_exception(e))
        return EXIT_FAILURE

    metrics_collector.log_summary(name)
    return EXIT_OK
