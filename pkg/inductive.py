"""
Inductive Miner: поиск разрезов по DFG, расщепление лога, базовые случаи
и fall-through правила. Результат - дерево процесса.
"""
import logging
from collections import Counter
from dataclasses import dataclass
from itertools import chain, combinations
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, TypeVar

import networkx as nx

from dfg import DirectlyFollowsGraph, dfg_from_sequences, filter_noise, weak_components
from errors import ConfigError
from eventlog import EventLog, Trace
from process_tree import Operator, ProcessTree, canonical, leaf, loop, parallel, tau, xor

logger = logging.getLogger(__name__)

T = TypeVar("T")
Variants = Mapping[Tuple[str, ...], int]


@dataclass(frozen=True)
class Cut:
    operator: Operator
    partition: Tuple[FrozenSet[str], ...]

    def __post_init__(self):
        groups = tuple(frozenset(g) for g in self.partition)
        object.__setattr__(self, "partition", groups)
        if len(groups) < 2:
            raise ValueError("a cut needs at least two groups")
        if any(not group for group in groups):
            raise ValueError("cut groups must be non-empty")
        if sum(len(g) for g in groups) != len(frozenset().union(*groups)):
            raise ValueError("cut groups must be disjoint")

    @property
    def alphabet(self) -> FrozenSet[str]:
        return frozenset().union(*self.partition)

    def index(self) -> Dict[str, int]:
        return {label: i for i, group in enumerate(self.partition) for label in group}


def _ordered(groups) -> List[FrozenSet[str]]:
    return sorted((frozenset(g) for g in groups), key=sorted)


# ---------- Детекторы разрезов ----------
def _xor_cut(dfg: DirectlyFollowsGraph) -> Optional[Cut]:
    components = weak_components(dfg)
    if len(components) < 2:
        return None
    return Cut(Operator.XOR, tuple(components))


def _sequence_cut(dfg: DirectlyFollowsGraph) -> Optional[Cut]:
    closure = dfg.closure()

    def reach(a: str, b: str) -> bool:
        return b in closure[a]

    merged = nx.utils.UnionFind(sorted(dfg.nodes))
    for a, b in combinations(sorted(dfg.nodes), 2):
        # взаимно достижимые и взаимно недостижимые попадают в одну группу
        if reach(a, b) == reach(b, a):
            merged.union(a, b)
    groups = _ordered(merged.to_sets())

    changed = True
    while changed and len(groups) > 1:
        changed = False
        for i, j in combinations(range(len(groups)), 2):
            g, h = groups[i], groups[j]
            forward_all = all(reach(x, y) for x in g for y in h)
            forward_any = any(reach(x, y) for x in g for y in h)
            backward_all = all(reach(y, x) for x in g for y in h)
            backward_any = any(reach(y, x) for x in g for y in h)
            if (forward_all and not backward_any) or (backward_all and not forward_any):
                continue
            groups = _ordered([g | h] + [k for n, k in enumerate(groups) if n not in (i, j)])
            changed = True
            break

    if len(groups) < 2:
        return None

    def predecessors(group: FrozenSet[str]) -> int:
        sample = next(iter(group))
        return sum(1 for other in groups if other is not group and reach(next(iter(other)), sample))

    return Cut(Operator.SEQUENCE, tuple(sorted(groups, key=predecessors)))


def _concurrent_cut(dfg: DirectlyFollowsGraph) -> Optional[Cut]:
    negated = nx.Graph()
    labels = sorted(dfg.nodes)
    negated.add_nodes_from(labels)
    for a, b in combinations(labels, 2):
        if (a, b) not in dfg.edges or (b, a) not in dfg.edges:
            negated.add_edge(a, b)
    groups = _ordered(nx.connected_components(negated))
    starts, ends = set(dfg.start_activities), set(dfg.end_activities)

    while len(groups) > 1:
        incomplete = next(
            (g for g in groups if not (g & starts) or not (g & ends)), None
        )
        if incomplete is None:
            break
        others = [g for g in groups if g is not incomplete]
        target = others[0]
        groups = _ordered([target | incomplete] + others[1:])

    if len(groups) < 2:
        return None
    return Cut(Operator.PARALLEL, tuple(groups))


def _loop_cut(dfg: DirectlyFollowsGraph) -> Optional[Cut]:
    starts, ends = frozenset(dfg.start_activities), frozenset(dfg.end_activities)
    body = set(starts | ends)
    if not body or body == dfg.nodes:
        return None
    candidates = weak_components(dfg, dfg.nodes - body)

    def admissible(group: FrozenSet[str]) -> bool:
        for a, b in dfg.edges:
            if a in body and b in group and a not in ends:
                return False
            if a in group and b in body and b not in starts:
                return False
        for x in group:
            entered = {e for e in ends if (e, x) in dfg.edges}
            if entered and entered != ends:
                return False
            left = {s for s in starts if (x, s) in dfg.edges}
            if left and left != starts:
                return False
        return True

    changed = True
    while changed:
        changed = False
        for group in candidates:
            if not admissible(group):
                body |= group
                candidates = [g for g in candidates if g is not group]
                changed = True
                break

    if not candidates:
        return None
    return Cut(Operator.LOOP, (frozenset(body),) + tuple(_ordered(candidates)))


_DETECTORS: Tuple[Callable[[DirectlyFollowsGraph], Optional[Cut]], ...] = (
    _xor_cut,
    _sequence_cut,
    _concurrent_cut,
    _loop_cut,
)


def detect_cut(dfg: DirectlyFollowsGraph) -> Optional[Cut]:
    """Пробует детекторы в порядке XOR, Sequence, Concurrent, Loop"""
    if not dfg.nodes:
        return None
    for detector in _DETECTORS:
        cut = detector(dfg)
        if cut is not None:
            return cut
    return None


# ---------- Расщепление ----------
def _split_items(
    items: Sequence[T], activity_of: Callable[[T], str], cut: Cut, index: Dict[str, int]
) -> Tuple[List[List[List[T]]], int]:
    """Раскладывает одну трассу по группам разреза.

    Возвращает для каждой группы список полученных подтрасс и число
    отброшенных событий.
    """
    out: List[List[List[T]]] = [[] for _ in cut.partition]
    groups = [index.get(activity_of(item)) for item in items]
    dropped = sum(1 for g in groups if g is None)
    pairs = [(item, g) for item, g in zip(items, groups) if g is not None]

    if cut.operator is Operator.XOR:
        tally = Counter(g for _, g in pairs)
        target = min(tally, key=lambda g: (-tally[g], g)) if tally else 0
        out[target].append([item for item, g in pairs if g == target])
        dropped += sum(1 for _, g in pairs if g != target)
    elif cut.operator is Operator.SEQUENCE:
        segments: List[List[T]] = [[] for _ in cut.partition]
        pointer = 0
        for item, g in pairs:
            if g < pointer:
                dropped += 1
                continue
            pointer = g
            segments[g].append(item)
        for n, segment in enumerate(segments):
            out[n].append(segment)
    elif cut.operator is Operator.PARALLEL:
        for n in range(len(cut.partition)):
            out[n].append([item for item, g in pairs if g == n])
    else:
        runs: List[Tuple[int, List[T]]] = []
        for item, g in pairs:
            if runs and runs[-1][0] == g:
                runs[-1][1].append(item)
            else:
                runs.append((g, [item]))
        expect_body = True
        for g, run in runs:
            if g == 0:
                out[0].append(run)
                expect_body = False
            else:
                if expect_body:
                    out[0].append([])
                out[g].append(run)
                expect_body = True
        if expect_body:
            out[0].append([])
    return out, dropped


def _split_variants(variants: Variants, cut: Cut) -> Tuple[List[Counter], int]:
    index = cut.index()
    sublogs = [Counter() for _ in cut.partition]
    dropped = 0
    for sequence, count in variants.items():
        parts, lost = _split_items(sequence, lambda label: label, cut, index)
        dropped += lost * count
        for n, subtraces in enumerate(parts):
            for subtrace in subtraces:
                sublogs[n][tuple(subtrace)] += count
    return sublogs, dropped


def split_log(log: EventLog, cut: Cut) -> List[EventLog]:
    """Делит лог на подлоги по разрезу; события вне разбиения отбрасываются"""
    index = cut.index()
    traces: List[List[Trace]] = [[] for _ in cut.partition]
    dropped = 0
    for trace in log.traces:
        parts, lost = _split_items(trace.events, lambda e: e.activity, cut, index)
        dropped += lost
        for n, subtraces in enumerate(parts):
            for k, events in enumerate(subtraces, start=1):
                case_id = trace.case_id
                if cut.operator is Operator.LOOP:
                    case_id = f"{trace.case_id}.{k}"
                traces[n].append(Trace(case_id, events, trace.attributes))
    if dropped:
        logger.warning("split_log: dropped %d events outside the cut partition", dropped)
    return [log.with_traces(group) for group in traces]


# ---------- Базовые случаи и fall-through ----------
def _base_case(variants: Variants) -> Optional[ProcessTree]:
    present = [s for s, c in variants.items() if c > 0]
    if all(len(s) == 0 for s in present):
        return tau()
    if any(len(s) > 1 for s in present):
        return None
    labels = {s[0] for s in present if s}
    if len(labels) != 1:
        return None
    single = leaf(labels.pop())
    if any(len(s) == 0 for s in present):
        return xor(tau(), single)
    return single


def base_case(log: EventLog) -> Optional[ProcessTree]:
    return _base_case(log.sequences())


def _project(variants: Variants, keep: FrozenSet[str]) -> Counter:
    projected: Counter = Counter()
    for sequence, count in variants.items():
        projected[tuple(a for a in sequence if a in keep)] += count
    return projected


class _InductiveMiner:
    def __init__(self, noise_threshold: float = 0.0):
        self.noise_threshold = noise_threshold
        self.dropped_events = 0
        self.dropped_empty = 0

    def _cut(self, variants: Variants) -> Optional[Cut]:
        dfg = dfg_from_sequences(variants)
        return detect_cut(filter_noise(dfg, self.noise_threshold))

    def mine(self, variants: Variants) -> ProcessTree:
        variants = Counter({s: c for s, c in variants.items() if c > 0})
        tree = _base_case(variants)
        if tree is not None:
            return tree

        empty = variants.pop((), 0)
        if empty:
            total = empty + sum(variants.values())
            if empty < self.noise_threshold * total:
                self.dropped_empty += empty
                return self.mine(variants)
            return xor(tau(), self.mine(variants))

        cut = self._cut(variants)
        if cut is not None:
            sublogs, dropped = _split_variants(variants, cut)
            self.dropped_events += dropped
            return ProcessTree(cut.operator, children=[self.mine(s) for s in sublogs])
        return self.fall_through(variants)

    def fall_through(self, variants: Variants) -> ProcessTree:
        variants = Counter({s: c for s, c in variants.items() if c > 0})
        if variants.get(()):
            del variants[()]
            return xor(tau(), self.mine(variants))

        alphabet = sorted(set(chain.from_iterable(variants)))
        if len(alphabet) > 1:
            for activity in alphabet:
                if all(sequence.count(activity) == 1 for sequence in variants):
                    rest = _project(variants, frozenset(alphabet) - {activity})
                    return parallel(leaf(activity), self.mine(rest))
            for activity in alphabet:
                rest = _project(variants, frozenset(alphabet) - {activity})
                if self._cut(Counter({s: c for s, c in rest.items() if s})) is not None:
                    alone = _project(variants, frozenset([activity]))
                    return parallel(self.mine(alone), self.mine(rest))
        return loop(tau(), *(leaf(a) for a in alphabet))


def fall_through(log: EventLog, noise_threshold: float = 0.0) -> ProcessTree:
    """Правила по порядку: пустые трассы, activity-once-per-trace,
    activity-concurrent, цветок"""
    return _InductiveMiner(noise_threshold).fall_through(log.sequences())


def discover_inductive(log: EventLog, noise_threshold: float = 0.0) -> ProcessTree:
    if not 0.0 <= noise_threshold <= 1.0:
        raise ConfigError(f"noise_threshold must be in [0, 1], got {noise_threshold}")
    miner = _InductiveMiner(noise_threshold)
    tree = canonical(miner.mine(log.sequences()))
    if miner.dropped_events or miner.dropped_empty:
        logger.warning(
            "Inductive miner filtered %d events and %d empty traces as noise",
            miner.dropped_events, miner.dropped_empty,
        )
    logger.info("Inductive miner: %d tree nodes, %d activities",
                tree.size(), len(tree.activities))
    return tree
