import os
import subprocess
from datetime import datetime, timezone
from typing import List, Optional

__version__ = "0.3.0"


def _git(args: List[str]) -> Optional[str]:
    try:
        out = subprocess.check_output(["git", *args], stderr=subprocess.DEVNULL)
    except (OSError, subprocess.CalledProcessError):
        return None
    return out.decode("utf-8").strip() or None


def get_version() -> str:
    """Возвращает строку версии.
    Приоритет:
    1) TRAJMINER_VERSION из окружения
    2) git describe --tags/--always
    3) версия пакета + dev-YYYYmmDDHHMM
    """
    env_ver = os.getenv("TRAJMINER_VERSION")
    if env_ver:
        return env_ver

    described = _git(["describe", "--tags", "--always", "--dirty", "--abbrev=7"])
    if described:
        return described

    stamp = datetime.now(timezone.utc).strftime("%Y%m%d%H%M")
    return f"{__version__}+dev-{stamp}"


def get_build() -> str:
    """Дата последнего коммита + короткий хеш, иначе TRAJMINER_BUILD или метка UTC"""
    env_build = os.getenv("TRAJMINER_BUILD")
    if env_build:
        return env_build

    date_str = _git(["show", "-s", "--format=%cd", "--date=format:%Y-%m-%d-%H%M%S", "HEAD"])
    short = _git(["rev-parse", "--short", "HEAD"])
    if date_str and short:
        return f"{date_str}-{short}"
    return datetime.now(timezone.utc).strftime("%Y-%m-%d-%H%M%S")
