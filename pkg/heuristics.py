"""
Heuristics Miner: граф зависимостей, AND/XOR связки, дальние зависимости
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

import networkx as nx

from errors import ConfigError
from eventlog import EventLog

logger = logging.getLogger(__name__)

Arc = Tuple[str, str]
Binding = FrozenSet[str]


@dataclass(frozen=True)
class HeuristicsParams:
    dependency_threshold: float = 0.95
    long_distance_threshold: float = 0.98
    and_threshold: float = 0.65
    min_directly_follows: int = 1
    loop_two_threshold: float = 0.9
    min_activity_frequency: int = 1

    def __post_init__(self):
        for name in ("dependency_threshold", "long_distance_threshold",
                     "and_threshold", "loop_two_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if self.min_directly_follows < 1:
            raise ConfigError("min_directly_follows must be >= 1")
        if self.min_activity_frequency < 1:
            raise ConfigError("min_activity_frequency must be >= 1")

    def to_dict(self) -> Dict[str, float]:
        return {
            "dependency_threshold": self.dependency_threshold,
            "long_distance_threshold": self.long_distance_threshold,
            "and_threshold": self.and_threshold,
            "min_directly_follows": self.min_directly_follows,
            "loop_two_threshold": self.loop_two_threshold,
            "min_activity_frequency": self.min_activity_frequency,
        }


@dataclass(frozen=True)
class DependencyGraph:
    nodes: FrozenSet[str] = frozenset()
    arcs: Mapping[Arc, float] = field(default_factory=dict)
    frequencies: Mapping[Arc, int] = field(default_factory=dict)
    repaired: FrozenSet[Arc] = frozenset()
    activity_counts: Mapping[str, int] = field(default_factory=dict)
    start_activities: Mapping[str, int] = field(default_factory=dict)
    end_activities: Mapping[str, int] = field(default_factory=dict)

    def successors(self, label: str) -> List[str]:
        return sorted(b for (a, b) in self.arcs if a == label and b != label)

    def predecessors(self, label: str) -> List[str]:
        return sorted(a for (a, b) in self.arcs if b == label and a != label)


@dataclass(frozen=True)
class CausalNet:
    nodes: FrozenSet[str] = frozenset()
    arcs: Mapping[Arc, float] = field(default_factory=dict)
    input_bindings: Mapping[str, Tuple[Binding, ...]] = field(default_factory=dict)
    output_bindings: Mapping[str, Tuple[Binding, ...]] = field(default_factory=dict)
    long_distance_arcs: FrozenSet[Arc] = frozenset()
    start_activities: FrozenSet[str] = frozenset()
    end_activities: FrozenSet[str] = frozenset()
    repaired: FrozenSet[Arc] = frozenset()

    def neighbours(self, label: str) -> Set[str]:
        result = set()
        for a, b in self.arcs:
            if a == label:
                result.add(b)
            if b == label:
                result.add(a)
        return result


# ---------- Меры ----------
def dependency_measure(count_ab: int, count_ba: int) -> float:
    """(|a>b| - |b>a|) / (|a>b| + |b>a| + 1)"""
    return (count_ab - count_ba) / (count_ab + count_ba + 1)


def self_loop_measure(count_aa: int) -> float:
    return count_aa / (count_aa + 1)


def loop_two_measure(count_aba: int, count_bab: int) -> float:
    return (count_aba + count_bab) / (count_aba + count_bab + 1)


def _primary(counts: Mapping[str, int]) -> Optional[str]:
    if not counts:
        return None
    return min(counts, key=lambda label: (-counts[label], label))


class _LogCounts:
    """Частоты, нужные всем шагам майнера"""

    def __init__(self, log: EventLog, keep: Optional[FrozenSet[str]] = None):
        self.activities: Counter = Counter()
        self.follows: Counter = Counter()
        self.triples: Counter = Counter()
        self.starts: Counter = Counter()
        self.ends: Counter = Counter()
        self.eventually: Counter = Counter()
        for sequence, count in log.sequences().items():
            if keep is not None:
                sequence = tuple(a for a in sequence if a in keep)
            if not sequence:
                continue
            self.starts[sequence[0]] += count
            self.ends[sequence[-1]] += count
            for label in sequence:
                self.activities[label] += count
            for pair in zip(sequence, sequence[1:]):
                self.follows[pair] += count
            for a, b, c in zip(sequence, sequence[1:], sequence[2:]):
                if a == c and a != b:
                    self.triples[(a, b)] += count
            seen: Set[str] = set()
            pairs: Set[Arc] = set()
            for label in sequence:
                for earlier in seen:
                    pairs.add((earlier, label))
                seen.add(label)
            for pair in pairs:
                self.eventually[pair] += count


def _kept_activities(log: EventLog, params: HeuristicsParams) -> FrozenSet[str]:
    counts = Counter(e.activity for trace in log.traces for e in trace.events)
    kept = frozenset(a for a, n in counts.items() if n >= params.min_activity_frequency)
    dropped = sorted(set(counts) - kept)
    if dropped:
        logger.info("Heuristics miner skips infrequent activities: %s", ", ".join(dropped))
    return kept


# ---------- Граф зависимостей ----------
def build_dependency_graph(log: EventLog, params: HeuristicsParams = HeuristicsParams()) -> DependencyGraph:
    kept = _kept_activities(log, params)
    counts = _LogCounts(log)
    nodes = kept
    follows = {arc: n for arc, n in counts.follows.items() if arc[0] in kept and arc[1] in kept}
    starts = {a: n for a, n in counts.starts.items() if a in kept}
    ends = {a: n for a, n in counts.ends.items() if a in kept}

    values: Dict[Arc, float] = {}
    for (a, b), ab in follows.items():
        if a == b:
            values[(a, b)] = self_loop_measure(ab)
            continue
        aba, bab = counts.triples[(a, b)], counts.triples[(b, a)]
        self_loops = follows.get((a, a), 0) or follows.get((b, b), 0)
        two_loop = loop_two_measure(aba, bab)
        if not self_loops and (aba or bab) and two_loop >= params.loop_two_threshold:
            values[(a, b)] = two_loop
        else:
            values[(a, b)] = dependency_measure(ab, follows.get((b, a), 0))

    arcs = {
        arc: value
        for arc, value in values.items()
        if value >= params.dependency_threshold and follows[arc] >= params.min_directly_follows
    }

    repaired: Set[Arc] = set()
    first, last = _primary(starts), _primary(ends)
    for node in sorted(nodes):
        if node != first and not any(b == node and a != node for a, b in arcs):
            arc = _best_candidate([(a, node) for a in nodes if a != node], values, follows)
            if arc is not None:
                arcs[arc] = values[arc]
                repaired.add(arc)
        if node != last and not any(a == node and b != node for a, b in arcs):
            arc = _best_candidate([(node, b) for b in nodes if b != node], values, follows)
            if arc is not None:
                arcs[arc] = values[arc]
                repaired.add(arc)

    logger.debug("Dependency graph: %d arcs, %d repaired", len(arcs), len(repaired))
    return DependencyGraph(
        nodes=nodes,
        arcs=arcs,
        frequencies=follows,
        repaired=frozenset(repaired),
        activity_counts={a: counts.activities[a] for a in nodes},
        start_activities=starts,
        end_activities=ends,
    )


def _best_candidate(
    candidates: Iterable[Arc], values: Mapping[Arc, float], follows: Mapping[Arc, int]
) -> Optional[Arc]:
    present = [arc for arc in candidates if follows.get(arc, 0) >= 1]
    if not present:
        return None
    return min(present, key=lambda arc: (-values[arc], -follows[arc], arc))


# ---------- Связки ----------
def _group_bindings(
    neighbours: List[str], together: Mapping[Arc, int], anchor: Mapping[str, int], threshold: float
) -> Tuple[Binding, ...]:
    graph = nx.Graph()
    graph.add_nodes_from(neighbours)
    for i, b in enumerate(neighbours):
        for c in neighbours[i + 1:]:
            overlap = together.get((b, c), 0) + together.get((c, b), 0)
            measure = overlap / (anchor.get(b, 0) + anchor.get(c, 0) + 1)
            if measure >= threshold:
                graph.add_edge(b, c)
    cliques = [frozenset(clique) for clique in nx.find_cliques(graph)]
    return tuple(sorted(cliques, key=lambda c: (sorted(c), len(c))))


def bind_splits_joins(
    log: EventLog, graph: DependencyGraph, params: HeuristicsParams = HeuristicsParams()
) -> CausalNet:
    """AND, если мера (|b>c| + |c>b|) / (|a>b| + |a>c| + 1) >= and_threshold, иначе XOR"""
    follows = graph.frequencies
    inputs: Dict[str, Tuple[Binding, ...]] = {}
    outputs: Dict[str, Tuple[Binding, ...]] = {}
    for node in sorted(graph.nodes):
        looped = (node, node) in graph.arcs
        outgoing = {b: follows.get((node, b), 0) for b in graph.successors(node)}
        incoming = {a: follows.get((a, node), 0) for a in graph.predecessors(node)}
        out = _group_bindings(sorted(outgoing), follows, outgoing, params.and_threshold)
        into = _group_bindings(sorted(incoming), follows, incoming, params.and_threshold)
        # петля на себя - всегда отдельная XOR-связка
        if looped:
            out += (frozenset([node]),)
            into += (frozenset([node]),)
        outputs[node] = out
        inputs[node] = into
    return CausalNet(
        nodes=graph.nodes,
        arcs=dict(graph.arcs),
        input_bindings=inputs,
        output_bindings=outputs,
        start_activities=frozenset(graph.start_activities),
        end_activities=frozenset(graph.end_activities),
        repaired=graph.repaired,
    )


# ---------- Дальние зависимости ----------
def long_distance_dependencies(
    log: EventLog, graph: DependencyGraph, params: HeuristicsParams = HeuristicsParams()
) -> FrozenSet[Arc]:
    """2 * |a>>b| / (|a| + |b| + 1) >= long_distance_threshold.

    |a>>b| - число трасс, где за a когда-либо следует b. Пары, уже
    связанные прямой дугой графа, не сообщаются.
    """
    counts = _LogCounts(log, keep=graph.nodes)
    found = set()
    for (a, b), together in counts.eventually.items():
        if a == b or (a, b) in graph.arcs:
            continue
        measure = 2 * together / (counts.activities[a] + counts.activities[b] + 1)
        if measure >= params.long_distance_threshold:
            found.add((a, b))
    return frozenset(found)


def discover_heuristics(log: EventLog, params: HeuristicsParams = HeuristicsParams()) -> CausalNet:
    graph = build_dependency_graph(log, params)
    cnet = bind_splits_joins(log, graph, params)
    distant = long_distance_dependencies(log, graph, params)
    logger.info(
        "Heuristics miner: %d activities, %d arcs, %d long-distance",
        len(cnet.nodes), len(cnet.arcs), len(distant),
    )
    return CausalNet(
        nodes=cnet.nodes,
        arcs=cnet.arcs,
        input_bindings=cnet.input_bindings,
        output_bindings=cnet.output_bindings,
        long_distance_arcs=distant,
        start_activities=cnet.start_activities,
        end_activities=cnet.end_activities,
        repaired=cnet.repaired,
    )
