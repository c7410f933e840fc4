"""
Граф непосредственного следования (DFG)
"""
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

import networkx as nx

from errors import UnknownActivityError
from eventlog import EventLog

Edge = Tuple[str, str]
EdgeFilter = Callable[[str, str, int], bool]


@dataclass(frozen=True)
class DirectlyFollowsGraph:
    nodes: FrozenSet[str] = frozenset()
    edges: Mapping[Edge, int] = field(default_factory=dict)
    start_activities: Mapping[str, int] = field(default_factory=dict)
    end_activities: Mapping[str, int] = field(default_factory=dict)
    _closure: Optional[Dict[str, FrozenSet[str]]] = field(
        default=None, init=False, repr=False, compare=False
    )
    _lock: threading.Lock = field(
        default_factory=threading.Lock, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        for a, b in self.edges:
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge ({a!r}, {b!r}) references unknown node")

    def __hash__(self) -> int:
        return hash((self.nodes, frozenset(self.edges.items())))

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(sorted(self.nodes))
        for (a, b), count in sorted(self.edges.items()):
            graph.add_edge(a, b, count=count)
        return graph

    def successors(self, label: str) -> FrozenSet[str]:
        return frozenset(b for (a, b) in self.edges if a == label)

    def closure(self) -> Dict[str, FrozenSet[str]]:
        """Транзитивное замыкание: вершины, достижимые путем длины >= 1"""
        if self._closure is None:
            with self._lock:
                if self._closure is None:
                    object.__setattr__(self, "_closure", self._compute_closure())
        return self._closure

    def _compute_closure(self) -> Dict[str, FrozenSet[str]]:
        graph = self.to_networkx()
        closure = {}
        for node in graph.nodes:
            reach = set()
            for succ in graph.successors(node):
                reach.add(succ)
                reach.update(nx.descendants(graph, succ))
            closure[node] = frozenset(reach)
        return closure


def dfg_from_sequences(sequences: Mapping[Tuple[str, ...], int]) -> DirectlyFollowsGraph:
    """DFG по мультимножеству последовательностей активностей"""
    edges: Counter = Counter()
    starts: Counter = Counter()
    ends: Counter = Counter()
    nodes = set()
    for sequence, count in sequences.items():
        if not sequence:
            continue
        nodes.update(sequence)
        starts[sequence[0]] += count
        ends[sequence[-1]] += count
        for pair in zip(sequence, sequence[1:]):
            edges[pair] += count
    return DirectlyFollowsGraph(frozenset(nodes), dict(edges), dict(starts), dict(ends))


def build_dfg(log: EventLog) -> DirectlyFollowsGraph:
    return dfg_from_sequences(log.sequences())


def reachable(dfg: DirectlyFollowsGraph, a: str, b: str) -> bool:
    for label in (a, b):
        if label not in dfg.nodes:
            raise UnknownActivityError(label)
    return b in dfg.closure()[a]


def weak_components(
    dfg: DirectlyFollowsGraph,
    restricted_to: Optional[Iterable[str]] = None,
    edge_filter: Optional[EdgeFilter] = None,
) -> List[FrozenSet[str]]:
    """Компоненты связности неориентированного вида графа.

    Порядок детерминирован: по отсортированному списку меток компоненты.
    """
    labels = dfg.nodes if restricted_to is None else frozenset(restricted_to)
    graph = nx.Graph()
    graph.add_nodes_from(sorted(labels))
    for (a, b), count in dfg.edges.items():
        if a in labels and b in labels and (edge_filter is None or edge_filter(a, b, count)):
            graph.add_edge(a, b)
    components = [frozenset(c) for c in nx.connected_components(graph)]
    return sorted(components, key=sorted)


def filter_noise(dfg: DirectlyFollowsGraph, threshold: float) -> DirectlyFollowsGraph:
    """Убирает ребра с частотой < threshold * максимальной исходящей частоты источника"""
    if threshold <= 0 or not dfg.edges:
        return dfg
    strongest: Dict[str, int] = {}
    for (a, _), count in dfg.edges.items():
        strongest[a] = max(strongest.get(a, 0), count)
    edges = {
        edge: count
        for edge, count in dfg.edges.items()
        if count >= threshold * strongest[edge[0]]
    }
    return DirectlyFollowsGraph(dfg.nodes, edges, dfg.start_activities, dfg.end_activities)
