"""
Аналитика по логу: варианты, временные клинические рекомендации,
правила принятия решений, когорты маршрутов пациентов
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import timedelta
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from errors import ConfigError, RuleSchemaError
from eventlog import EventLog, Trace, case_attribute
from rules import DecisionRule, parse_rule
from utils import format_hours, format_percentage, render_table, to_hours

logger = logging.getLogger(__name__)

ONE_DAY = timedelta(hours=24)


def _hours(value: Optional[timedelta]) -> Optional[float]:
    return None if value is None else round(to_hours(value), 2)


# ---------- Варианты ----------
@dataclass(frozen=True)
class DurationStats:
    minimum: timedelta
    mean: timedelta
    maximum: timedelta

    @classmethod
    def of(cls, durations: Sequence[timedelta]) -> "DurationStats":
        total = sum(durations, timedelta(0))
        return cls(min(durations), total / len(durations), max(durations))

    def to_dict(self) -> Dict[str, float]:
        return {
            "min_hours": _hours(self.minimum),
            "mean_hours": _hours(self.mean),
            "max_hours": _hours(self.maximum),
        }


@dataclass(frozen=True)
class Variant:
    signature: Tuple[str, ...]
    case_ids: Tuple[str, ...]
    duration_stats: DurationStats

    @property
    def frequency(self) -> int:
        return len(self.case_ids)

    def to_dict(self) -> Dict[str, object]:
        return {
            "signature": list(self.signature),
            "frequency": self.frequency,
            "case_ids": list(self.case_ids),
            "duration": self.duration_stats.to_dict(),
        }


def extract_variants(log: EventLog) -> List[Variant]:
    """Группировка по точному совпадению последовательности активностей.

    Порядок: частота по убыванию, затем сигнатура.
    """
    groups: Dict[Tuple[str, ...], List[Trace]] = {}
    for trace in log.traces:
        groups.setdefault(trace.activities, []).append(trace)
    variants = [
        Variant(
            signature,
            tuple(t.case_id for t in traces),
            DurationStats.of([t.duration for t in traces]),
        )
        for signature, traces in groups.items()
    ]
    variants.sort(key=lambda v: (-v.frequency, v.signature))
    return variants


@dataclass(frozen=True)
class ActivityStats:
    activity: str
    occurrences: int
    cases: int
    variants: int

    @property
    def rework(self) -> int:
        """Повторы сверх первого выполнения в случае, по всему логу"""
        return self.occurrences - self.cases


@dataclass(frozen=True)
class VariantSummary:
    trace_count: int
    event_count: int
    variants: Tuple[Variant, ...]
    activities: Tuple[ActivityStats, ...]
    longest_trace: Optional[Tuple[str, int, timedelta]] = None
    longest_duration: Optional[Tuple[str, timedelta]] = None
    traces_over_one_day: int = 0
    top_fifth_cases: int = 0

    @property
    def variant_count(self) -> int:
        return len(self.variants)

    def activity(self, label: str) -> ActivityStats:
        for stats in self.activities:
            if stats.activity == label:
                return stats
        raise KeyError(label)

    def to_dict(self) -> Dict[str, object]:
        total = self.trace_count or 1
        data: Dict[str, object] = {
            "traces": self.trace_count,
            "events": self.event_count,
            "variants": self.variant_count,
            "share_over_one_day": round(self.traces_over_one_day / total, 4),
            "traces_over_one_day": self.traces_over_one_day,
            "top_fifth_variant_cases": self.top_fifth_cases,
            "activities": [
                {
                    "activity": a.activity,
                    "occurrences": a.occurrences,
                    "cases": a.cases,
                    "variants": a.variants,
                    "rework": a.rework,
                }
                for a in self.activities
            ],
            "variant_list": [v.to_dict() for v in self.variants],
        }
        if self.longest_trace is not None:
            case_id, events, duration = self.longest_trace
            data["longest_trace"] = {"case_id": case_id, "events": events, "duration_hours": _hours(duration)}
        if self.longest_duration is not None:
            case_id, duration = self.longest_duration
            data["longest_duration"] = {"case_id": case_id, "duration_hours": _hours(duration)}
        return data


def variant_stats(log: EventLog) -> VariantSummary:
    variants = extract_variants(log)
    occurrences: Counter = Counter()
    cases: Counter = Counter()
    in_variants: Counter = Counter()
    for trace in log.traces:
        occurrences.update(trace.activities)
        cases.update(set(trace.activities))
    for variant in variants:
        in_variants.update(set(variant.signature))
    activities = tuple(
        ActivityStats(label, occurrences[label], cases[label], in_variants[label])
        for label in sorted(occurrences, key=lambda a: (-occurrences[a], a))
    )

    longest_trace = longest_duration = None
    if log.traces:
        longest = min(log.traces, key=lambda t: (-len(t), t.case_id))
        longest_trace = (longest.case_id, len(longest), longest.duration)
        slowest = min(log.traces, key=lambda t: (-t.duration, t.case_id))
        longest_duration = (slowest.case_id, slowest.duration)

    top = math.ceil(len(variants) * 0.2)
    return VariantSummary(
        trace_count=len(log.traces),
        event_count=log.event_count,
        variants=tuple(variants),
        activities=activities,
        longest_trace=longest_trace,
        longest_duration=longest_duration,
        traces_over_one_day=sum(1 for t in log.traces if t.duration >= ONE_DAY),
        top_fifth_cases=sum(v.frequency for v in variants[:top]),
    )


def variants_table(variants: Sequence[Variant], limit: Optional[int] = None) -> str:
    shown = variants if limit is None else variants[:limit]
    rows = [
        [rank, v.frequency, format_hours(v.duration_stats.mean), " > ".join(v.signature) or "<empty>"]
        for rank, v in enumerate(shown, start=1)
    ]
    return render_table(["#", "cases", "mean", "variant"], rows)


# ---------- Временные рекомендации ----------
@dataclass(frozen=True)
class Guideline:
    name: str
    anchor: str
    target: str
    limit: timedelta

    def __post_init__(self):
        if self.anchor == self.target:
            raise ConfigError(f"guideline {self.name!r}: anchor and target must differ")
        if self.limit <= timedelta(0):
            raise ConfigError(f"guideline {self.name!r}: limit must be positive")

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "Guideline":
        unknown = set(data) - {"name", "anchor", "target", "limit_hours"}
        if unknown:
            raise ConfigError(f"unknown guideline keys: {', '.join(sorted(unknown))}")
        try:
            return cls(
                str(data["name"]), str(data["anchor"]), str(data["target"]),
                timedelta(hours=float(data["limit_hours"])),
            )
        except KeyError as exc:
            raise ConfigError(f"guideline is missing {exc.args[0]!r}") from exc

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "target": self.target,
            "limit_hours": to_hours(self.limit),
        }


DEFAULT_GUIDELINES = (
    Guideline("antibiotics-within-1h", "ER Sepsis Triage", "IV Antibiotics", timedelta(hours=1)),
    Guideline("lactic-acid-within-3h", "ER Sepsis Triage", "LacticAcid", timedelta(hours=3)),
)


@dataclass(frozen=True)
class GuidelineReport:
    name: str
    anchor: str
    target: str
    limit: timedelta
    evaluable: int
    compliant: int
    violating: int
    negative_delays: int
    non_evaluable: int
    mean_delay: Optional[timedelta] = None
    violating_cases: Tuple[str, ...] = ()

    @property
    def violation_rate(self) -> float:
        return self.violating / self.evaluable if self.evaluable else 0.0

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "target": self.target,
            "limit_hours": to_hours(self.limit),
            "evaluable_cases": self.evaluable,
            "compliant": self.compliant,
            "violating": self.violating,
            "negative_delays": self.negative_delays,
            "non_evaluable": self.non_evaluable,
            "violation_rate": round(self.violation_rate, 4),
            "mean_delay_hours": _hours(self.mean_delay),
        }


def _first_time(trace: Trace, label: str):
    for event in trace.events:
        if event.activity == label:
            return event.timestamp
    return None


def check_time_guideline(
    log: EventLog, anchor: str, target: str, limit: timedelta, name: Optional[str] = None
) -> GuidelineReport:
    """Задержка = первое событие target минус первое событие anchor.

    Отрицательная задержка (target записан раньше anchor) - нарушение порядка
    записи: считается в violating и отдельно в negative_delays.
    """
    guideline = Guideline(name or f"{target} within {to_hours(limit):g}h of {anchor}", anchor, target, limit)
    compliant = violating = negative = non_evaluable = 0
    delays: List[timedelta] = []
    offenders: List[str] = []
    for trace in log.traces:
        start, end = _first_time(trace, anchor), _first_time(trace, target)
        if start is None or end is None:
            non_evaluable += 1
            continue
        delay = end - start
        delays.append(delay)
        if delay < timedelta(0):
            negative += 1
            violating += 1
            offenders.append(trace.case_id)
        elif delay > guideline.limit:
            violating += 1
            offenders.append(trace.case_id)
        else:
            compliant += 1
    mean = sum(delays, timedelta(0)) / len(delays) if delays else None
    return GuidelineReport(
        guideline.name, anchor, target, limit, len(delays), compliant, violating,
        negative, non_evaluable, mean, tuple(offenders),
    )


def guideline_table(reports: Sequence[GuidelineReport]) -> str:
    rows = [
        [r.name, r.evaluable, r.compliant, r.violating, r.negative_delays, r.non_evaluable,
         f"{r.violation_rate * 100:.1f}%", format_hours(r.mean_delay)]
        for r in reports
    ]
    return render_table(
        ["guideline", "evaluable", "compliant", "violating", "negative", "n/a", "rate", "mean delay"], rows
    )


# ---------- Правила ----------
@dataclass(frozen=True)
class RuleReport:
    name: str
    rule: str
    support: int
    satisfied: int
    counterexamples: Tuple[str, ...] = ()

    @property
    def evaluable(self) -> bool:
        return self.support > 0

    @property
    def confidence(self) -> Optional[float]:
        return self.satisfied / self.support if self.support else None

    def to_dict(self) -> Dict[str, object]:
        confidence = self.confidence
        return {
            "name": self.name,
            "rule": self.rule,
            "support": self.support,
            "satisfied": self.satisfied,
            "confidence": None if confidence is None else round(confidence, 4),
            "evaluable": self.evaluable,
            "counterexamples": list(self.counterexamples),
        }


def evaluate_rule(
    log: EventLog, rule: Union[DecisionRule, str], max_counterexamples: int = 10
) -> RuleReport:
    if isinstance(rule, str):
        rule = parse_rule(rule)
    unknown = sorted(rule.attributes - log.attribute_keys())
    if unknown:
        raise RuleSchemaError(f"rule {rule.name!r} references unknown attributes: {', '.join(unknown)}")
    support = satisfied = 0
    counterexamples: List[str] = []
    for trace in log.traces:
        values = {key: case_attribute(trace, key) for key in rule.attributes}
        if not rule.applies(values):
            continue
        support += 1
        if rule.holds(trace.activities):
            satisfied += 1
        elif len(counterexamples) < max_counterexamples:
            counterexamples.append(trace.case_id)
    if not support:
        logger.info("Rule %r matches no case; confidence is undefined", rule.name)
    return RuleReport(rule.name, rule.text, support, satisfied, tuple(counterexamples))


def rules_table(reports: Sequence[RuleReport]) -> str:
    rows = [
        [r.name, r.support, r.satisfied, "n/a" if r.confidence is None else f"{r.confidence * 100:.1f}%"]
        for r in reports
    ]
    return render_table(["rule", "support", "satisfied", "confidence"], rows)


# ---------- Когорты ----------
ADMISSION_NC = "Admission NC"
ADMISSION_IC = "Admission IC"
RETURN_ER = "Return ER"
RELEASE_PREFIX = "Release "


class Pathway(str, Enum):
    NO_ADMISSION = "no_admission"
    NC_ONLY = "nc_only"
    IC_ONLY = "ic_only"
    NC_THEN_IC = "nc_then_ic"
    NO_RELEASE = "no_release"


def classify_pathway(activities: Sequence[str]) -> Pathway:
    """Класс маршрута по первым вхождениям.

    IC_ONLY включает случаи, где IC предшествует NC; без поступления и без
    выписки - NO_RELEASE.
    """
    activities = list(activities)
    has_nc, has_ic = ADMISSION_NC in activities, ADMISSION_IC in activities
    if not has_nc and not has_ic:
        released = any(a.startswith(RELEASE_PREFIX) for a in activities)
        return Pathway.NO_ADMISSION if released else Pathway.NO_RELEASE
    if has_nc and not has_ic:
        return Pathway.NC_ONLY
    if has_nc and activities.index(ADMISSION_NC) < activities.index(ADMISSION_IC):
        return Pathway.NC_THEN_IC
    return Pathway.IC_ONLY


@dataclass(frozen=True)
class ReturnInfo:
    release: Optional[str]
    delay: Optional[timedelta]


def first_return(trace: Trace) -> Optional[ReturnInfo]:
    """Первый Return ER и выписка, непосредственно предшествующая ему"""
    release = None
    for event in trace.events:
        if event.activity.startswith(RELEASE_PREFIX):
            release = event
        elif event.activity == RETURN_ER:
            if release is None:
                return ReturnInfo(None, None)
            return ReturnInfo(release.activity[len(RELEASE_PREFIX):], event.timestamp - release.timestamp)
    return None


@dataclass(frozen=True)
class CohortReport:
    total_cases: int
    pathways: Mapping[str, Pathway] = field(default_factory=dict)
    any_nc: int = 0
    any_ic: int = 0
    any_return: int = 0
    returns_without_release: int = 0
    returns_28d: int = 0
    returns_365d: int = 0
    returns_28d_by_release: Mapping[str, int] = field(default_factory=dict)
    returns_365d_by_release: Mapping[str, int] = field(default_factory=dict)

    def count(self, pathway: Pathway) -> int:
        return sum(1 for p in self.pathways.values() if p is pathway)

    @property
    def no_admission(self) -> int:
        return self.count(Pathway.NO_ADMISSION)

    @property
    def admitted_nc(self) -> int:
        return self.count(Pathway.NC_ONLY)

    @property
    def admitted_ic(self) -> int:
        return self.count(Pathway.IC_ONLY)

    @property
    def nc_then_ic(self) -> int:
        return self.count(Pathway.NC_THEN_IC)

    @property
    def no_release(self) -> int:
        return self.count(Pathway.NO_RELEASE)

    def to_dict(self, with_cases: bool = False) -> Dict[str, object]:
        total = self.total_cases or 1
        classes = {p.value: self.count(p) for p in Pathway}
        data: Dict[str, object] = {
            "total_cases": self.total_cases,
            "pathways": classes,
            "pathway_rates": {k: round(v / total, 4) for k, v in classes.items()},
            "any_nc": self.any_nc,
            "any_ic": self.any_ic,
            "any_return": self.any_return,
            "returns_without_release": self.returns_without_release,
            "returns_28d": self.returns_28d,
            "returns_28d_rate": round(self.returns_28d / total, 4),
            "returns_365d": self.returns_365d,
            "returns_365d_rate": round(self.returns_365d / total, 4),
            "returns_28d_by_release": dict(sorted(self.returns_28d_by_release.items())),
            "returns_365d_by_release": dict(sorted(self.returns_365d_by_release.items())),
        }
        if with_cases:
            data["case_pathways"] = {k: self.pathways[k].value for k in sorted(self.pathways)}
        return data


def cohort_stats(log: EventLog) -> CohortReport:
    pathways: Dict[str, Pathway] = {}
    any_nc = any_ic = any_return = orphan = 0
    within_28 = within_365 = 0
    by_release_28: Counter = Counter()
    by_release_365: Counter = Counter()
    for trace in log.traces:
        activities = trace.activities
        pathways[trace.case_id] = classify_pathway(activities)
        any_nc += ADMISSION_NC in activities
        any_ic += ADMISSION_IC in activities
        info = first_return(trace)
        if info is None:
            continue
        any_return += 1
        if info.release is None:
            orphan += 1
            continue
        if info.delay <= timedelta(days=28):
            within_28 += 1
            by_release_28[info.release] += 1
        if info.delay <= timedelta(days=365):
            within_365 += 1
            by_release_365[info.release] += 1
    if orphan:
        logger.warning("%d case(s) return without a preceding release", orphan)
    return CohortReport(
        total_cases=len(log.traces),
        pathways=pathways,
        any_nc=any_nc,
        any_ic=any_ic,
        any_return=any_return,
        returns_without_release=orphan,
        returns_28d=within_28,
        returns_365d=within_365,
        returns_28d_by_release=dict(by_release_28),
        returns_365d_by_release=dict(by_release_365),
    )


def cohort_table(report: CohortReport) -> str:
    total = report.total_cases
    rows = [[p.value, report.count(p)] for p in Pathway]
    rows.append(["returns <= 28d", report.returns_28d])
    rows.append(["returns <= 365d", report.returns_365d])
    for release, n in sorted(report.returns_28d_by_release.items()):
        rows.append([f"returns <= 28d via Release {release}", n])
    return render_table(
        ["cohort", "cases", "share"], [row + [format_percentage(row[1], total)] for row in rows]
    )
