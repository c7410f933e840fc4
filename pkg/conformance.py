"""
Проверка соответствия лога и модели: воспроизведение фишек, выравнивания,
точность, обобщение, простота
"""
import heapq
import logging
import math
from collections import Counter, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import count
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from errors import ConfigError, SearchBudgetExceeded
from eventlog import EventLog
from petri import Marking, PetriNet, Transition, enabled, fire, is_enabled

logger = logging.getLogger(__name__)

DEFAULT_MAX_STATES = 200_000
SILENT_SEARCH_LIMIT = 10_000
REFERENCE_DEGREE = 2.0

Variant = Tuple[str, ...]


def _variants(log: EventLog) -> Dict[Variant, List[str]]:
    """Варианты в детерминированном порядке (по сигнатуре) с id случаев"""
    grouped: Dict[Variant, List[str]] = {}
    for trace in log.traces:
        grouped.setdefault(trace.activities, []).append(trace.case_id)
    return dict(sorted(grouped.items()))


def _map_variants(fn: Callable, variants: Iterable[Variant], workers: int) -> list:
    variants = list(variants)
    if workers <= 1 or len(variants) < 2:
        return [fn(v) for v in variants]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, variants))


# ---------- Тихие переходы ----------
def _silent_path(
    net: PetriNet,
    marking: Marking,
    goal: Callable[[Marking], bool],
    max_depth: int,
    limit: int = SILENT_SEARCH_LIMIT,
) -> Optional[List[Transition]]:
    """Кратчайшая последовательность тихих переходов до разметки, где goal истинно"""
    if goal(marking):
        return []
    silent = net.silent_transitions
    queue = deque([(marking, 0)])
    parents: Dict[Marking, Tuple[Marking, Transition]] = {marking: None}
    while queue:
        current, depth = queue.popleft()
        if depth >= max_depth:
            continue
        for t in silent:
            if not is_enabled(net, current, t):
                continue
            following = fire(net, current, t)
            if following in parents:
                continue
            parents[following] = (current, t)
            if goal(following):
                path = []
                node = following
                while parents[node] is not None:
                    node, step = parents[node]
                    path.append(step)
                return path[::-1]
            if len(parents) > limit:
                return None
            queue.append((following, depth + 1))
    return None


def silent_closure(net: PetriNet, marking: Marking, limit: int = SILENT_SEARCH_LIMIT) -> List[Marking]:
    """Все разметки, достижимые только тихими переходами (включая исходную)"""
    seen = {marking}
    order = [marking]
    queue = deque([marking])
    while queue and len(seen) <= limit:
        current = queue.popleft()
        for t in net.silent_transitions:
            if is_enabled(net, current, t):
                following = fire(net, current, t)
                if following not in seen:
                    seen.add(following)
                    order.append(following)
                    queue.append(following)
    return order


# ---------- Воспроизведение фишек ----------
@dataclass(frozen=True)
class TraceReplay:
    produced: int
    consumed: int
    missing: int
    remaining: int
    fired: Tuple[str, ...] = ()

    @property
    def fitness(self) -> float:
        missing_part = 1.0 - self.missing / self.consumed if self.consumed else 1.0
        remaining_part = 1.0 - self.remaining / self.produced if self.produced else 1.0
        return 0.5 * missing_part + 0.5 * remaining_part

    @property
    def fits(self) -> bool:
        return self.missing == 0 and self.remaining == 0


@dataclass(frozen=True)
class ReplayResult:
    traces: Mapping[str, TraceReplay] = field(default_factory=dict)
    frequencies: Mapping[str, int] = field(default_factory=dict)
    transition_executions: Mapping[str, int] = field(default_factory=dict)

    @property
    def fitness(self) -> float:
        """Средняя по трассам (вес - частота варианта)"""
        if not self.traces:
            return 1.0
        return sum(r.fitness for r in self.traces.values()) / len(self.traces)

    @property
    def token_fitness(self) -> float:
        """Агрегат по фишкам всего лога"""
        p = sum(r.produced for r in self.traces.values())
        c = sum(r.consumed for r in self.traces.values())
        m = sum(r.missing for r in self.traces.values())
        r_ = sum(r.remaining for r in self.traces.values())
        return 0.5 * (1 - m / c if c else 1.0) + 0.5 * (1 - r_ / p if p else 1.0)

    @property
    def fitting_traces(self) -> int:
        return sum(1 for r in self.traces.values() if r.fits)


def replay_trace(net: PetriNet, activities: Sequence[str]) -> TraceReplay:
    marking = net.initial_marking
    produced = marking.total()
    consumed = missing = remaining = 0
    fired: List[str] = []
    depth = len(net.silent_transitions)

    def step(t: Transition) -> None:
        nonlocal marking, produced, consumed
        marking = fire(net, marking, t)
        consumed += sum(net.preset(t).values())
        produced += sum(net.postset(t).values())
        fired.append(t.id)

    for label in activities:
        candidates = net.with_label(label)
        if not candidates:
            # событие вне алфавита модели: одна недостающая и одна оставшаяся фишка
            missing += 1
            remaining += 1
            consumed += 1
            produced += 1
            continue
        ready = [t for t in candidates if is_enabled(net, marking, t)]
        if not ready:
            path = _silent_path(
                net, marking, lambda mk: any(is_enabled(net, mk, t) for t in candidates), depth
            )
            if path is not None:
                for t in path:
                    step(t)
                ready = [t for t in candidates if is_enabled(net, marking, t)]
        if ready:
            step(ready[0])
            continue
        forced = candidates[0]
        deficit = {p: w - marking.count(p) for p, w in net.preset(forced).items() if marking.count(p) < w}
        missing += sum(deficit.values())
        marking = marking.add(deficit)
        step(forced)

    final = net.final_marking
    path = _silent_path(net, marking, lambda mk: mk == final, depth)
    for t in path or ():
        step(t)
    for place in final:
        have = marking.count(place)
        need = final[place]
        if have < need:
            missing += need - have
        consumed += need
    leftover = Counter(dict(marking))
    leftover.subtract(final)
    remaining += sum(n for n in leftover.values() if n > 0)
    return TraceReplay(produced, consumed, missing, remaining, tuple(fired))


def token_replay(net: PetriNet, log: EventLog, workers: int = 1) -> ReplayResult:
    variants = _variants(log)
    replays = _map_variants(lambda v: replay_trace(net, v), variants, workers)
    traces: Dict[str, TraceReplay] = {}
    executions: Counter = Counter({t.id: 0 for t in net.transitions})
    for (variant, case_ids), replay in zip(variants.items(), replays):
        for case_id in case_ids:
            traces[case_id] = replay
        for tid in replay.fired:
            executions[tid] += len(case_ids)
    frequencies = {v_cases[0]: len(v_cases) for v_cases in variants.values()}
    logger.debug("Token replay: %d traces, %d variants", len(traces), len(variants))
    return ReplayResult(traces, frequencies, dict(executions))


# ---------- Выравнивания ----------
class MoveKind(str, Enum):
    SYNC = "sync"
    MODEL = "model"
    LOG = "log"


@dataclass(frozen=True)
class Move:
    kind: MoveKind
    label: Optional[str] = None
    transition: Optional[str] = None

    @property
    def is_silent(self) -> bool:
        return self.kind is MoveKind.MODEL and self.label is None

    @property
    def is_deviation(self) -> bool:
        return self.kind is MoveKind.LOG or (self.kind is MoveKind.MODEL and self.label is not None)

    def __str__(self) -> str:
        if self.kind is MoveKind.LOG:
            return f"({self.label}, >>)"
        if self.kind is MoveKind.MODEL:
            return f"(>>, {self.label or 'tau'})"
        return f"({self.label}, {self.label})"


@dataclass(frozen=True)
class CostFunction:
    synchronous: float = 0.0
    silent: float = 0.0
    model_move: float = 1.0
    log_move: float = 1.0

    def __post_init__(self):
        for name in ("synchronous", "silent", "model_move", "log_move"):
            if getattr(self, name) < 0:
                raise ConfigError(f"alignment cost {name} must be non-negative")


@dataclass(frozen=True)
class Alignment:
    case_id: str
    moves: Tuple[Move, ...]
    cost: float
    explored_states: int = 0

    @property
    def log_projection(self) -> Tuple[str, ...]:
        return tuple(m.label for m in self.moves if m.kind is not MoveKind.MODEL)

    @property
    def firing_sequence(self) -> Tuple[str, ...]:
        return tuple(m.transition for m in self.moves if m.kind is not MoveKind.LOG)

    @property
    def deviations(self) -> List[Move]:
        return [m for m in self.moves if m.is_deviation]


def align(
    net: PetriNet,
    trace: Sequence[str],
    costs: CostFunction = CostFunction(),
    max_states: int = DEFAULT_MAX_STATES,
    case_id: str = "",
) -> Alignment:
    """A* по синхронному произведению; состояние - (разметка, позиция в трассе).

    Оценка остатка: события, чьих меток нет в модели, обязаны стать ходами лога.
    При равной оценке раньше раскрывается состояние с большей позицией, затем
    порядок порождения: синхронные ходы, ходы модели по id перехода, ход лога.
    """
    trace = tuple(trace)
    n = len(trace)
    alphabet = net.visible_labels
    unmatched = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        unmatched[i] = unmatched[i + 1] + (trace[i] not in alphabet)

    def estimate(i: int) -> float:
        return unmatched[i] * costs.log_move

    start = (net.initial_marking, 0)
    tie = count()
    heap = [(estimate(0), 0, next(tie), 0.0, start)]
    best: Dict[Tuple[Marking, int], float] = {start: 0.0}
    parents: Dict[Tuple[Marking, int], Tuple[Tuple[Marking, int], Move]] = {start: None}
    closed = set()

    while heap:
        _, _, _, g, state = heapq.heappop(heap)
        if state in closed:
            continue
        closed.add(state)
        marking, i = state
        if i == n and marking == net.final_marking:
            moves: List[Move] = []
            node = state
            while parents[node] is not None:
                node, move = parents[node]
                moves.append(move)
            return Alignment(case_id, tuple(reversed(moves)), g, len(closed))
        if len(closed) > max_states:
            raise SearchBudgetExceeded(case_id, len(closed))

        successors: List[Tuple[Tuple[Marking, int], Move, float]] = []
        active = sorted(enabled(net, marking), key=lambda t: t.id)
        if i < n:
            for t in active:
                if t.label == trace[i]:
                    successors.append(((fire(net, marking, t), i + 1), Move(MoveKind.SYNC, t.label, t.id), costs.synchronous))
        for t in active:
            cost = costs.silent if t.is_silent else costs.model_move
            successors.append(((fire(net, marking, t), i), Move(MoveKind.MODEL, t.label, t.id), cost))
        if i < n:
            successors.append(((marking, i + 1), Move(MoveKind.LOG, trace[i]), costs.log_move))

        for following, move, cost in successors:
            if following in closed:
                continue
            g_next = g + cost
            if g_next < best.get(following, math.inf):
                best[following] = g_next
                parents[following] = (state, move)
                heapq.heappush(heap, (g_next + estimate(following[1]), -following[1], next(tie), g_next, following))

    raise SearchBudgetExceeded(case_id, len(closed))


@dataclass(frozen=True)
class AlignmentReport:
    fitness: float
    alignments: Mapping[str, Alignment] = field(default_factory=dict)
    trace_fitness: Mapping[str, float] = field(default_factory=dict)
    excluded: Tuple[str, ...] = ()
    model_only_cost: float = 0.0
    # стоимость пустой трассы не найдена в пределах бюджета и принята за 0
    model_only_exceeded: bool = False

    @property
    def partial(self) -> bool:
        return bool(self.excluded) or self.model_only_exceeded


def _trace_alignment_fitness(alignment: Alignment, length: int, model_only_cost: float) -> float:
    denominator = length * 1.0 + model_only_cost
    if denominator <= 0:
        return 1.0
    return max(0.0, 1.0 - alignment.cost / denominator)


def align_log(
    net: PetriNet,
    log: EventLog,
    costs: CostFunction = CostFunction(),
    max_states: int = DEFAULT_MAX_STATES,
    workers: int = 1,
) -> AlignmentReport:
    """Выравнивания по вариантам; трассы, превысившие бюджет, исключаются"""
    if not log.traces:
        logger.warning("Alignment fitness of an empty log is defined as 1.0")
        return AlignmentReport(1.0)
    model_only_exceeded = False
    try:
        model_only = align(net, (), costs, max_states, case_id="<model-only>").cost
    except SearchBudgetExceeded as exc:
        logger.warning(
            "Alignment budget exceeded for the empty trace (%d states); "
            "model-only cost taken as 0, alignment fitness is partial",
            exc.states,
        )
        model_only, model_only_exceeded = 0.0, True

    variants = _variants(log)

    def run(variant: Variant):
        try:
            return align(net, variant, costs, max_states, case_id=variants[variant][0])
        except SearchBudgetExceeded as exc:
            return exc

    results = _map_variants(run, variants, workers)
    alignments: Dict[str, Alignment] = {}
    per_trace: Dict[str, float] = {}
    excluded: List[str] = []
    for (variant, case_ids), result in zip(variants.items(), results):
        if isinstance(result, SearchBudgetExceeded):
            logger.warning(
                "Alignment budget exceeded for case %s (%d states); %d case(s) excluded",
                result.case_id, result.states, len(case_ids),
            )
            excluded.extend(case_ids)
            continue
        # длина трассы в единицах стоимости хода лога
        value = _trace_alignment_fitness(result, len(variant) * costs.log_move, model_only)
        for case_id in case_ids:
            alignments[case_id] = result
            per_trace[case_id] = value

    if per_trace:
        fitness = sum(per_trace.values()) / len(per_trace)
    else:
        logger.warning("No trace could be aligned within the budget; alignment fitness is 0.0")
        fitness = 0.0
    return AlignmentReport(
        fitness, alignments, per_trace, tuple(sorted(excluded)), model_only, model_only_exceeded
    )


def fitness_alignment(
    net: PetriNet,
    log: EventLog,
    costs: CostFunction = CostFunction(),
    max_states: int = DEFAULT_MAX_STATES,
    workers: int = 1,
) -> float:
    return align_log(net, log, costs, max_states, workers).fitness


# ---------- Точность ----------
def _visible_enabled(net: PetriNet, marking: Marking) -> frozenset:
    labels = set()
    for reached in silent_closure(net, marking):
        labels.update(t.label for t in enabled(net, reached) if not t.is_silent)
    return frozenset(labels)


def precision_escaping(
    net: PetriNet,
    log: EventLog,
    costs: CostFunction = CostFunction(),
    max_states: int = DEFAULT_MAX_STATES,
    workers: int = 1,
    report: Optional[AlignmentReport] = None,
) -> float:
    """1 - сумма убегающих меток / сумма разрешенных, с весом частоты префикса.

    Состояние префикса - разметка сразу после хода, поглотившего его последнее
    событие, по выравниванию трассы.
    """
    report = report or align_log(net, log, costs, max_states, workers)
    prefix_weight: Counter = Counter()
    prefix_state: Dict[Variant, Marking] = {}
    observed: Dict[Variant, set] = {}

    for trace in sorted(log.traces, key=lambda t: (t.activities, t.case_id)):
        alignment = report.alignments.get(trace.case_id)
        if alignment is None:
            continue
        marking = net.initial_marking
        states = [marking]
        for move in alignment.moves:
            if move.kind is not MoveKind.LOG:
                marking = fire(net, marking, move.transition)
            if move.kind is not MoveKind.MODEL:
                states.append(marking)
        activities = trace.activities
        for k, label in enumerate(activities):
            prefix = activities[:k]
            prefix_weight[prefix] += 1
            prefix_state.setdefault(prefix, states[k])
            observed.setdefault(prefix, set()).add(label)

    escaping = total = 0
    for prefix in sorted(prefix_weight):
        allowed = _visible_enabled(net, prefix_state[prefix])
        weight = prefix_weight[prefix]
        total += weight * len(allowed)
        escaping += weight * len(allowed - observed[prefix])
    if total == 0:
        return 1.0
    return 1.0 - escaping / total


# ---------- Обобщение и простота ----------
def generalization_from_counts(executions: Mapping[str, int], transitions: Iterable[str]) -> float:
    transitions = list(transitions)
    if not transitions:
        return 0.0
    penalty = 0.0
    for tid in transitions:
        n = executions.get(tid, 0)
        penalty += 1.0 if n <= 0 else min(1.0, 1.0 / math.sqrt(n))
    return 1.0 - penalty / len(transitions)


def generalization(net: PetriNet, log: EventLog, replay: Optional[ReplayResult] = None, workers: int = 1) -> float:
    replay = replay or token_replay(net, log, workers)
    return generalization_from_counts(replay.transition_executions, (t.id for t in net.transitions))


def simplicity(net: PetriNet) -> float:
    """1 / (1 + max(0, d - 2)), d - средняя степень вершины сети"""
    nodes = net.node_count()
    if nodes == 0:
        logger.warning("Simplicity of an empty net is defined as 1.0")
        return 1.0
    mean_degree = 2.0 * len(net.arcs) / nodes
    return 1.0 / (1.0 + max(0.0, mean_degree - REFERENCE_DEGREE))


# ---------- Сводный отчет ----------
@dataclass(frozen=True)
class QualityReport:
    fitness: float
    precision: float
    generalization: float
    simplicity: float
    alignment_fitness: float
    token_fitness: float
    fitting_traces: int
    total_traces: int
    excluded_cases: Tuple[str, ...] = ()
    notes: Tuple[str, ...] = ()
    per_trace: Optional[Mapping[str, Dict[str, object]]] = None
    model_only_exceeded: bool = False

    @property
    def partial(self) -> bool:
        return bool(self.excluded_cases) or self.model_only_exceeded

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {
            "fitness": round(self.fitness, 6),
            "precision": round(self.precision, 6),
            "generalization": round(self.generalization, 6),
            "simplicity": round(self.simplicity, 6),
            "alignment_fitness": round(self.alignment_fitness, 6),
            "token_fitness": round(self.token_fitness, 6),
            "fitting_traces": self.fitting_traces,
            "total_traces": self.total_traces,
            "partial": self.partial,
            "excluded_cases": list(self.excluded_cases),
            "notes": list(self.notes),
        }
        if self.per_trace is not None:
            data["per_trace"] = {k: self.per_trace[k] for k in sorted(self.per_trace)}
        return data


def quality_report(
    net: PetriNet,
    log: EventLog,
    costs: CostFunction = CostFunction(),
    max_states: int = DEFAULT_MAX_STATES,
    workers: int = 1,
    diagnostics: bool = False,
) -> QualityReport:
    notes = [
        "fitness: token replay, mean over traces",
        "precision: escaping labels weighted by prefix frequency",
    ]
    unknown = sorted(log.activity_alphabet - net.visible_labels)
    if unknown:
        notes.append("log activities absent from the model: " + ", ".join(unknown))
        logger.warning("Log activities absent from the model: %s", ", ".join(unknown))
    replay = token_replay(net, log, workers)
    aligned = align_log(net, log, costs, max_states, workers)
    if aligned.partial:
        notes.append(f"{len(aligned.excluded)} case(s) excluded from alignment-based metrics")
    if aligned.model_only_exceeded:
        notes.append("model-only alignment cost exceeded the budget and was taken as 0")

    per_trace = None
    if diagnostics:
        per_trace = {}
        for case_id, r in replay.traces.items():
            entry: Dict[str, object] = {
                "produced": r.produced,
                "consumed": r.consumed,
                "missing": r.missing,
                "remaining": r.remaining,
                "fitness": round(r.fitness, 6),
            }
            alignment = aligned.alignments.get(case_id)
            if alignment is not None:
                entry["alignment_cost"] = alignment.cost
                entry["deviations"] = [str(m) for m in alignment.deviations]
            else:
                entry["excluded"] = True
            per_trace[case_id] = entry

    return QualityReport(
        fitness=replay.fitness,
        precision=precision_escaping(net, log, costs, max_states, workers, report=aligned),
        generalization=generalization(net, log, replay),
        simplicity=simplicity(net),
        alignment_fitness=aligned.fitness,
        token_fitness=replay.token_fitness,
        fitting_traces=replay.fitting_traces,
        total_traces=len(log.traces),
        excluded_cases=aligned.excluded,
        notes=tuple(notes),
        per_trace=per_trace,
        model_only_exceeded=aligned.model_only_exceeded,
    )
