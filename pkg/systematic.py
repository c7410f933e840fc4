"""
Систематическая модель сепсисного маршрута (поставляется файлом data/systematic_model.pnml)
"""
import logging
import os
from pathlib import Path
from typing import Optional, Union

from errors import ModelLoadError
from exporters import import_pnml
from petri import PetriNet

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent / "data"
SYSTEMATIC_MODEL_PATH = DATA_DIR / "systematic_model.pnml"

LAB_ACTIVITIES = ("CRP", "Leukocytes", "LacticAcid")


def load_systematic_model(path: Optional[Union[str, os.PathLike]] = None) -> PetriNet:
    target = Path(path) if path is not None else SYSTEMATIC_MODEL_PATH
    try:
        raw = target.read_bytes()
    except OSError as exc:
        raise ModelLoadError(f"cannot read systematic model {target}: {exc}") from exc
    net = import_pnml(raw)
    missing = [label for label in LAB_ACTIVITIES if label not in net.visible_labels]
    if missing:
        raise ModelLoadError(f"systematic model lacks lab activities: {', '.join(missing)}")
    logger.debug(
        "Loaded systematic model %s: %d places, %d transitions",
        target.name, len(net.places), len(net.transitions),
    )
    return net


def build_systematic_model() -> PetriNet:
    return load_systematic_model()
