"""
Модель журнала событий: типы, чтение XES/CSV, заполнение пропусков,
проекция и фильтрация
"""
import gzip
import io
import logging
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import (
    BinaryIO,
    Callable,
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
    Union,
)

import pandas as pd

from errors import ConfigError, IngestionError, LogParseError

logger = logging.getLogger(__name__)

AttributeValue = Union[str, int, float, bool, datetime]

ACTIVITY_KEY = "concept:name"
TIMESTAMP_KEY = "time:timestamp"

# Типы значений атрибутов и соответствующие им теги XES
KIND_TEXT = "text"
KIND_INTEGER = "integer"
KIND_REAL = "real"
KIND_BOOLEAN = "boolean"
KIND_TIMESTAMP = "timestamp"
VALUE_KINDS = (KIND_TEXT, KIND_INTEGER, KIND_REAL, KIND_BOOLEAN, KIND_TIMESTAMP)

_XES_TAG_KIND = {
    "string": KIND_TEXT,
    "int": KIND_INTEGER,
    "float": KIND_REAL,
    "boolean": KIND_BOOLEAN,
    "date": KIND_TIMESTAMP,
}
_KIND_XES_TAG = {kind: tag for tag, kind in _XES_TAG_KIND.items()}

FILL_UNTOUCHED_KEY = "fill_missing.untouched"


def value_kind(value: AttributeValue) -> str:
    # bool проверяется раньше int: bool - подкласс int
    if isinstance(value, bool):
        return KIND_BOOLEAN
    if isinstance(value, int):
        return KIND_INTEGER
    if isinstance(value, float):
        return KIND_REAL
    if isinstance(value, datetime):
        return KIND_TIMESTAMP
    if isinstance(value, str):
        return KIND_TEXT
    raise TypeError(f"unsupported attribute value: {value!r}")


def normalize_timestamp(value: Union[datetime, pd.Timestamp]) -> datetime:
    """Приводит момент времени к UTC с точностью до миллисекунд"""
    ts = pd.Timestamp(value)
    if ts.tzinfo is None:
        ts = ts.tz_localize("UTC")
    else:
        ts = ts.tz_convert("UTC")
    dt = ts.floor("ms").to_pydatetime()
    return dt.replace(tzinfo=timezone.utc)


def _format_offset(offset: Optional[timedelta]) -> str:
    if offset is None:
        return "UTC"
    minutes = int(offset.total_seconds() // 60)
    sign = "+" if minutes >= 0 else "-"
    minutes = abs(minutes)
    return f"{sign}{minutes // 60:02d}:{minutes % 60:02d}"


# ---------- Типы ----------
@dataclass(frozen=True)
class Event:
    activity: str
    timestamp: datetime
    attributes: Mapping[str, AttributeValue] = field(default_factory=dict)

    def __post_init__(self):
        if not self.activity:
            raise IngestionError("event activity label must be non-empty")
        if not isinstance(self.timestamp, datetime):
            raise IngestionError(f"event {self.activity!r} has no timestamp")
        if self.timestamp.tzinfo is None:
            object.__setattr__(
                self, "timestamp", self.timestamp.replace(tzinfo=timezone.utc)
            )
        object.__setattr__(self, "attributes", MappingProxyType(dict(self.attributes)))

    def get(self, key: str, default: Optional[AttributeValue] = None):
        return self.attributes.get(key, default)


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: Tuple[Event, ...] = ()
    attributes: Mapping[str, AttributeValue] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "attributes", MappingProxyType(dict(self.attributes)))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    @property
    def activities(self) -> Tuple[str, ...]:
        return tuple(event.activity for event in self.events)

    @property
    def duration(self) -> timedelta:
        if not self.events:
            return timedelta(0)
        return self.events[-1].timestamp - self.events[0].timestamp


@dataclass(frozen=True)
class EventLog:
    """Журнал событий. metadata не участвует в сравнении логов"""

    traces: Tuple[Trace, ...] = ()
    metadata: Mapping[str, object] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))
        seen: Set[str] = set()
        for trace in self.traces:
            if trace.case_id in seen:
                raise IngestionError(f"duplicate case id {trace.case_id!r}")
            seen.add(trace.case_id)

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self) -> Iterator[Trace]:
        return iter(self.traces)

    @cached_property
    def activity_alphabet(self) -> FrozenSet[str]:
        return frozenset(e.activity for trace in self.traces for e in trace.events)

    @property
    def event_count(self) -> int:
        return sum(len(trace) for trace in self.traces)

    def sequences(self) -> Counter:
        """Мультимножество последовательностей активностей (варианты)"""
        return Counter(trace.activities for trace in self.traces)

    def attribute_keys(self) -> FrozenSet[str]:
        keys = set()
        for trace in self.traces:
            keys.update(trace.attributes)
            for event in trace.events:
                keys.update(event.attributes)
        return frozenset(keys)

    def with_traces(self, traces: Iterable[Trace], **metadata) -> "EventLog":
        merged = dict(self.metadata)
        merged.update(metadata)
        return EventLog(tuple(traces), merged)

    @classmethod
    def from_sequences(
        cls,
        sequences: Iterable[Sequence[str]],
        start: Optional[datetime] = None,
        step: timedelta = timedelta(minutes=1),
        case_prefix: str = "c",
    ) -> "EventLog":
        """Строит лог из последовательностей меток, время идет с шагом step"""
        start = start or datetime(2020, 1, 1, tzinfo=timezone.utc)
        traces = []
        for index, labels in enumerate(sequences, start=1):
            events = [
                Event(label, start + step * position)
                for position, label in enumerate(labels)
            ]
            traces.append(Trace(f"{case_prefix}{index}", events))
        return cls(tuple(traces), {"source": "sequences"})


@dataclass(frozen=True)
class ColumnMapping:
    case_column: str = "case:concept:name"
    activity_column: str = ACTIVITY_KEY
    timestamp_column: str = TIMESTAMP_KEY
    timestamp_format: Optional[str] = "ISO8601"
    attribute_columns: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(
            self, "attribute_columns", tuple(tuple(p) for p in self.attribute_columns)
        )
        core = [self.case_column, self.activity_column, self.timestamp_column]
        if len(set(core)) != 3:
            raise ConfigError("case, activity and timestamp columns must be distinct")
        for column, kind in self.attribute_columns:
            if kind not in VALUE_KINDS:
                raise ConfigError(f"column {column!r}: unknown value kind {kind!r}")
            if column in core:
                raise ConfigError(f"column {column!r} is already mapped")


class _KindRegistry:
    """Следит, чтобы у ключа был один тип значений во всем логе"""

    def __init__(self):
        self.kinds: Dict[str, str] = {}

    def check(self, key: str, kind: str, where: str) -> None:
        known = self.kinds.setdefault(key, kind)
        if known != kind:
            raise IngestionError(
                f"attribute {key!r} is {kind} in {where} but {known} elsewhere"
            )


# ---------- XES ----------
def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _read_attribute(element: ET.Element, zones: Set[str]) -> Optional[Tuple[str, AttributeValue]]:
    kind = _XES_TAG_KIND.get(_local(element.tag))
    key = element.get("key")
    raw = element.get("value")
    if kind is None or key is None or raw is None:
        return None
    if kind == KIND_TEXT:
        return key, raw
    if kind == KIND_INTEGER:
        return key, int(raw)
    if kind == KIND_REAL:
        return key, float(raw)
    if kind == KIND_BOOLEAN:
        lowered = raw.strip().lower()
        if lowered not in ("true", "false"):
            raise ValueError(f"not a boolean: {raw!r}")
        return key, lowered == "true"
    parsed = pd.Timestamp(raw)
    zones.add(_format_offset(parsed.utcoffset()))
    return key, normalize_timestamp(parsed)


def _read_attributes(
    element: ET.Element, registry: _KindRegistry, where: str, zones: Set[str]
) -> Dict[str, AttributeValue]:
    values: Dict[str, AttributeValue] = {}
    for child in element:
        try:
            item = _read_attribute(child, zones)
        except ValueError as exc:
            raise IngestionError(
                f"bad value for {child.get('key')!r} in {where}: {exc}"
            ) from exc
        if item is None:
            continue
        key, value = item
        registry.check(key, value_kind(value), where)
        values[key] = value
    return values


def parse_xes(source: Union[bytes, BinaryIO]) -> EventLog:
    """Читает XES (подмножество: log/trace/event и типизированные атрибуты)"""
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise LogParseError(f"malformed XES document: {exc}", line=exc.position[0]) from exc
    if _local(root.tag) != "log":
        raise LogParseError(f"expected <log> root element, got <{_local(root.tag)}>")

    registry = _KindRegistry()
    zones: Set[str] = set()
    log_attributes = {}
    traces: List[Trace] = []
    for child in root:
        tag = _local(child.tag)
        if tag in _XES_TAG_KIND:
            item = _read_attribute(child, zones)
            if item is not None:
                log_attributes[item[0]] = item[1]
        if tag != "trace":
            continue
        traces.append(_read_trace(child, len(traces), registry, zones))

    metadata = {
        "source": "xes",
        "timezones": sorted(zones),
        "log_attributes": log_attributes,
    }
    logger.info("Parsed XES log: %d traces", len(traces))
    return EventLog(tuple(traces), metadata)


def _read_trace(
    element: ET.Element, index: int, registry: _KindRegistry, zones: Set[str]
) -> Trace:
    fallback = f"trace-{index + 1}"
    attributes = _read_attributes(element, registry, f"trace #{index + 1}", zones)
    case_id = str(attributes.pop(ACTIVITY_KEY, fallback))

    events = []
    for position, child in enumerate(c for c in element if _local(c.tag) == "event"):
        where = f"event #{position + 1} of trace {case_id!r}"
        values = _read_attributes(child, registry, where, zones)
        activity = values.pop(ACTIVITY_KEY, None)
        timestamp = values.pop(TIMESTAMP_KEY, None)
        if not activity:
            raise IngestionError(f"{where} lacks {ACTIVITY_KEY}")
        if not isinstance(timestamp, datetime):
            raise IngestionError(f"{where} lacks {TIMESTAMP_KEY}")
        events.append(Event(str(activity), timestamp, values))

    # sorted стабилен: равные метки времени сохраняют исходный порядок
    events.sort(key=lambda e: e.timestamp)
    return Trace(case_id, events, attributes)


def _xes_value(value: AttributeValue) -> Tuple[str, str]:
    kind = value_kind(value)
    if kind == KIND_BOOLEAN:
        text = "true" if value else "false"
    elif kind == KIND_TIMESTAMP:
        text = value.astimezone(timezone.utc).isoformat(timespec="milliseconds")
    elif kind == KIND_REAL:
        text = repr(value)
    else:
        text = str(value)
    return _KIND_XES_TAG[kind], text


def _append_attributes(parent: ET.Element, values: Iterable[Tuple[str, AttributeValue]]) -> None:
    for key, value in values:
        tag, text = _xes_value(value)
        ET.SubElement(parent, tag, {"key": key, "value": text})


def write_xes(log: EventLog) -> bytes:
    """Сериализует лог в XES; parse_xes(write_xes(log)) == log"""
    root = ET.Element("log", {"xes.version": "1.0"})
    ET.SubElement(root, "extension", {
        "name": "Concept", "prefix": "concept",
        "uri": "http://www.xes-standard.org/concept.xesext",
    })
    ET.SubElement(root, "extension", {
        "name": "Time", "prefix": "time",
        "uri": "http://www.xes-standard.org/time.xesext",
    })
    for trace in log.traces:
        node = ET.SubElement(root, "trace")
        _append_attributes(node, [(ACTIVITY_KEY, trace.case_id)])
        _append_attributes(node, sorted(trace.attributes.items()))
        for event in trace.events:
            child = ET.SubElement(node, "event")
            _append_attributes(
                child,
                [(ACTIVITY_KEY, event.activity), (TIMESTAMP_KEY, event.timestamp)],
            )
            _append_attributes(child, sorted(event.attributes.items()))
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


# ---------- CSV ----------
def _convert_cell(raw: str, kind: str) -> AttributeValue:
    if kind == KIND_TEXT:
        return raw
    if kind == KIND_INTEGER:
        return int(raw)
    if kind == KIND_REAL:
        return float(raw)
    if kind == KIND_BOOLEAN:
        lowered = raw.strip().lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return normalize_timestamp(pd.Timestamp(raw))


# смещение в конце отметки с временем: Z, +HH, +HHMM, +HH:MM
_CSV_OFFSET = r"\d{2}:\d{2}(?::\d{2})?(?:[.,]\d+)?\s*([Zz]|[+-]\d{2}(?::?\d{2})?)$"


def _csv_offsets(column: pd.Series) -> List[str]:
    """Смещения исходных отметок времени; "naive" - отметки без зоны"""
    tokens = column.str.strip().str.extract(_CSV_OFFSET, expand=False).fillna("naive")
    zones = set()
    for token in tokens.unique():
        if token == "naive":
            zones.add(token)
            continue
        if token in ("Z", "z"):
            zones.add(_format_offset(timedelta(0)))
            continue
        digits = token[1:].replace(":", "")
        offset = timedelta(hours=int(digits[:2]), minutes=int(digits[2:] or 0))
        zones.add(_format_offset(-offset if token[0] == "-" else offset))
    return sorted(zones)


def parse_csv(source: Union[bytes, BinaryIO], mapping: ColumnMapping) -> EventLog:
    """Читает CSV (RFC-4180, UTF-8, строка заголовка)"""
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    try:
        frame = pd.read_csv(
            io.BytesIO(data), dtype=str, keep_default_na=False, encoding="utf-8"
        )
    except pd.errors.EmptyDataError as exc:
        raise LogParseError("CSV source has no header row", line=1) from exc
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise LogParseError(f"malformed CSV: {exc}") from exc

    wanted = [mapping.case_column, mapping.activity_column, mapping.timestamp_column]
    wanted += [column for column, _ in mapping.attribute_columns]
    missing = [column for column in wanted if column not in frame.columns]
    if missing:
        raise ConfigError(f"mapped columns missing from CSV header: {', '.join(missing)}")

    options = {"format": mapping.timestamp_format} if mapping.timestamp_format else {}
    stamps = pd.to_datetime(
        frame[mapping.timestamp_column], utc=True, errors="coerce", **options
    )
    bad = stamps.isna()
    if bad.any():
        row = int(bad.to_numpy().argmax())
        raw = frame[mapping.timestamp_column].iloc[row]
        # строка 1 - заголовок
        raise LogParseError(f"unparseable timestamp {raw!r}", line=row + 2)

    cases: Dict[str, List[Event]] = {}
    columns = [frame[column].tolist() for column in wanted]
    for row, stamp in enumerate(stamps.dt.floor("ms")):
        case_id, activity = columns[0][row], columns[1][row]
        if not case_id or not activity:
            raise IngestionError(f"row {row + 2}: empty case id or activity")
        attributes = {}
        for offset, (column, kind) in enumerate(mapping.attribute_columns, start=3):
            raw = columns[offset][row]
            if raw == "":
                continue
            try:
                attributes[column] = _convert_cell(raw, kind)
            except ValueError as exc:
                raise LogParseError(
                    f"column {column!r}: cannot read {raw!r} as {kind}", line=row + 2
                ) from exc
        event = Event(activity, normalize_timestamp(stamp), attributes)
        cases.setdefault(case_id, []).append(event)

    traces = [
        Trace(case_id, sorted(events, key=lambda e: e.timestamp))
        for case_id, events in cases.items()
    ]
    logger.info("Parsed CSV log: %d rows, %d traces", len(frame), len(traces))
    metadata = {"source": "csv", "timezones": _csv_offsets(frame[mapping.timestamp_column])}
    return EventLog(tuple(traces), metadata)


def read_log(path: Union[str, Path], mapping: Optional[ColumnMapping] = None) -> EventLog:
    """Читает .xes, .csv и их .gz варианты по расширению файла"""
    path = Path(path)
    name = path.name.lower()
    compressed = name.endswith(".gz")
    base = name[:-3] if compressed else name
    if not base.endswith((".xes", ".csv")):
        raise ConfigError(f"cannot infer log format from file name {path.name!r}")
    opener = gzip.open if compressed else open
    with opener(path, "rb") as fh:
        data = fh.read()
    if base.endswith(".xes"):
        return parse_xes(data)
    return parse_csv(data, mapping or ColumnMapping())


# ---------- Предобработка ----------
def _fill_trace(trace: Trace, key: str) -> Optional[Trace]:
    positions = [i for i, e in enumerate(trace.events) if key in e.attributes]
    if not positions:
        return None
    if len(positions) == len(trace.events):
        return trace
    events = list(trace.events)
    current = events[positions[0]].attributes[key]
    for index, event in enumerate(events):
        if key in event.attributes:
            current = event.attributes[key]
            continue
        # до первого замера current уже равен первому значению
        updated = dict(event.attributes)
        updated[key] = current
        events[index] = replace(event, attributes=updated)
    return replace(trace, events=tuple(events))


def fill_missing(log: EventLog, keys: Iterable[str]) -> EventLog:
    """Заполняет пропуски атрибутов внутри каждого случая.

    Значение переносится вперед до следующего замера; события до первого
    замера получают первое значение. Случаи без единого значения ключа не
    меняются и попадают в metadata[FILL_UNTOUCHED_KEY].
    """
    keys = sorted(set(keys))
    present = log.attribute_keys()
    for key in keys:
        if key not in present:
            logger.warning("fill_missing: attribute %r never occurs in the log", key)

    untouched: Dict[str, List[str]] = {key: [] for key in keys}
    traces = []
    for trace in log.traces:
        for key in keys:
            filled = _fill_trace(trace, key)
            if filled is None:
                untouched[key].append(trace.case_id)
            else:
                trace = filled
        traces.append(trace)

    for key, cases in untouched.items():
        if cases:
            logger.warning(
                "fill_missing: %d traces have no %r value, left untouched",
                len(cases), key,
            )
    return log.with_traces(traces, **{FILL_UNTOUCHED_KEY: untouched})


def project(log: EventLog, keep: Iterable[str]) -> EventLog:
    """Удаляет события вне keep; пустые трассы сохраняются"""
    keep = frozenset(keep)
    traces = [
        replace(trace, events=tuple(e for e in trace.events if e.activity in keep))
        for trace in log.traces
    ]
    return log.with_traces(traces)


def filter_cases(log: EventLog, predicate: Callable[[Trace], bool]) -> EventLog:
    return log.with_traces(t for t in log.traces if predicate(t))


def case_attribute(trace: Trace, key: str) -> Optional[AttributeValue]:
    """Атрибут случая: уровень трассы, иначе первое событие с этим ключом"""
    if key in trace.attributes:
        return trace.attributes[key]
    for event in trace.events:
        if key in event.attributes:
            return event.attributes[key]
    return None


def split_by_attribute(log: EventLog, key: str) -> Dict[str, EventLog]:
    """Разбивает лог на подлоги по значению атрибута события (например, org:group).

    В подлог значения v попадают события с key == v; идентификаторы случаев
    сохраняются, события без ключа отбрасываются.
    """
    values = sorted(
        {str(e.attributes[key]) for t in log.traces for e in t.events if key in e.attributes}
    )
    result: Dict[str, EventLog] = {}
    for value in values:
        traces = []
        for trace in log.traces:
            events = tuple(
                e for e in trace.events
                if key in e.attributes and str(e.attributes[key]) == value
            )
            if events:
                traces.append(replace(trace, events=events))
        result[value] = log.with_traces(traces, split_attribute=key, split_value=value)
    return result
