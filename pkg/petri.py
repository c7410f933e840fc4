"""
Сети Петри: разметки, семантика срабатывания, построение из деревьев
процессов и каузальных сетей
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import (
    Dict,
    FrozenSet,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Set,
    Tuple,
    Union,
)

from errors import ConversionError, FiringError
from heuristics import CausalNet
from process_tree import Operator, ProcessTree

logger = logging.getLogger(__name__)

SOURCE = "source"
SINK = "sink"


# ---------- Разметка ----------
class Marking(Mapping[str, int]):
    """Неизменяемое мультимножество фишек: место -> число фишек > 0"""

    __slots__ = ("_tokens", "_hash")

    def __init__(self, tokens: Optional[Mapping[str, int]] = None):
        data = {}
        for place, count in dict(tokens or {}).items():
            if count < 0:
                raise ValueError(f"negative token count for place {place!r}")
            if count:
                data[place] = int(count)
        self._tokens = data
        self._hash = hash(frozenset(data.items()))

    def __getitem__(self, place: str) -> int:
        return self._tokens[place]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._tokens))

    def __len__(self) -> int:
        return len(self._tokens)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if isinstance(other, Marking):
            return self._tokens == other._tokens
        if isinstance(other, Mapping):
            return self._tokens == {k: v for k, v in other.items() if v}
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{p}: {n}" for p, n in sorted(self._tokens.items()))
        return f"Marking({{{inner}}})"

    def count(self, place: str) -> int:
        return self._tokens.get(place, 0)

    def total(self) -> int:
        return sum(self._tokens.values())

    def covers(self, other: Mapping[str, int]) -> bool:
        return all(self.count(p) >= n for p, n in other.items())

    def add(self, delta: Mapping[str, int]) -> "Marking":
        merged = Counter(self._tokens)
        for place, count in delta.items():
            merged[place] += count
        return Marking(merged)


# ---------- Сеть ----------
@dataclass(frozen=True)
class Transition:
    id: str
    label: Optional[str] = None

    @property
    def is_silent(self) -> bool:
        return self.label is None

    def __str__(self) -> str:
        return self.label if self.label is not None else f"tau[{self.id}]"


@dataclass(frozen=True)
class Arc:
    source: str
    target: str
    weight: int = 1


TransitionRef = Union[Transition, str]


@dataclass(frozen=True)
class PetriNet:
    places: FrozenSet[str]
    transitions: Tuple[Transition, ...]
    arcs: FrozenSet[Arc]
    initial_marking: Marking
    final_marking: Marking
    name: str = "net"
    flags: FrozenSet[str] = field(default=frozenset(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "places", frozenset(self.places))
        object.__setattr__(self, "transitions", tuple(sorted(self.transitions, key=lambda t: t.id)))
        object.__setattr__(self, "arcs", frozenset(self.arcs))
        object.__setattr__(self, "initial_marking", Marking(self.initial_marking))
        object.__setattr__(self, "final_marking", Marking(self.final_marking))

        by_id = {t.id: t for t in self.transitions}
        if len(by_id) != len(self.transitions):
            raise ValueError("transition ids must be unique")
        if set(by_id) & self.places:
            raise ValueError("place and transition ids must not overlap")
        pre: Dict[str, Dict[str, int]] = {tid: {} for tid in by_id}
        post: Dict[str, Dict[str, int]] = {tid: {} for tid in by_id}
        producers: Dict[str, Set[str]] = {p: set() for p in self.places}
        consumers: Dict[str, Set[str]] = {p: set() for p in self.places}
        for arc in self.arcs:
            if arc.weight < 1:
                raise ValueError(f"arc {arc.source}->{arc.target} has weight < 1")
            if arc.source in self.places and arc.target in by_id:
                pre[arc.target][arc.source] = pre[arc.target].get(arc.source, 0) + arc.weight
                consumers[arc.source].add(arc.target)
            elif arc.source in by_id and arc.target in self.places:
                post[arc.source][arc.target] = post[arc.source].get(arc.target, 0) + arc.weight
                producers[arc.target].add(arc.source)
            else:
                raise ValueError(f"arc {arc.source}->{arc.target} references unknown nodes")
        for marking in (self.initial_marking, self.final_marking):
            unknown = set(marking) - self.places
            if unknown:
                raise ValueError(f"marking references unknown places: {sorted(unknown)}")

        by_label: Dict[str, List[Transition]] = {}
        for t in self.transitions:
            if t.label is not None:
                by_label.setdefault(t.label, []).append(t)
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_pre", pre)
        object.__setattr__(self, "_post", post)
        object.__setattr__(self, "_producers", producers)
        object.__setattr__(self, "_consumers", consumers)
        object.__setattr__(self, "_by_label", {k: tuple(v) for k, v in by_label.items()})

    def _tid(self, transition: TransitionRef) -> str:
        return transition.id if isinstance(transition, Transition) else transition

    def transition(self, tid: str) -> Transition:
        return self._by_id[tid]

    def preset(self, transition: TransitionRef) -> Mapping[str, int]:
        return self._pre[self._tid(transition)]

    def postset(self, transition: TransitionRef) -> Mapping[str, int]:
        return self._post[self._tid(transition)]

    def producers(self, place: str) -> FrozenSet[str]:
        return frozenset(self._producers[place])

    def consumers(self, place: str) -> FrozenSet[str]:
        return frozenset(self._consumers[place])

    def with_label(self, label: str) -> Tuple[Transition, ...]:
        return self._by_label.get(label, ())

    @property
    def visible_labels(self) -> FrozenSet[str]:
        return frozenset(self._by_label)

    @property
    def silent_transitions(self) -> Tuple[Transition, ...]:
        return tuple(t for t in self.transitions if t.is_silent)

    @property
    def source_places(self) -> List[str]:
        return sorted(p for p in self.places if not self._producers[p])

    @property
    def sink_places(self) -> List[str]:
        return sorted(p for p in self.places if not self._consumers[p])

    def node_count(self) -> int:
        return len(self.places) + len(self.transitions)


# ---------- Семантика ----------
def is_enabled(net: PetriNet, marking: Marking, transition: TransitionRef) -> bool:
    return all(marking.count(p) >= n for p, n in net.preset(transition).items())


def enabled(net: PetriNet, marking: Marking) -> FrozenSet[Transition]:
    return frozenset(t for t in net.transitions if is_enabled(net, marking, t))


def fire(net: PetriNet, marking: Marking, transition: TransitionRef) -> Marking:
    t = net.transition(transition) if isinstance(transition, str) else transition
    if not is_enabled(net, marking, t):
        raise FiringError(f"transition {t} is not enabled in {marking!r}")
    delta = Counter(net.postset(t))
    delta.subtract(net.preset(t))
    return marking.add(delta)


# ---------- Построитель ----------
class PetriNetBuilder:
    def __init__(self, name: str = "net"):
        self.name = name
        self.places: List[str] = []
        self.transitions: List[Transition] = []
        self.arcs: Counter = Counter()
        self._ids: Set[str] = set()
        self._counter = 0

    def _next(self, prefix: str) -> str:
        while True:
            self._counter += 1
            candidate = f"{prefix}{self._counter}"
            if candidate not in self._ids:
                return candidate

    def add_place(self, place_id: Optional[str] = None) -> str:
        place_id = place_id or self._next("p")
        if place_id in self._ids:
            raise ValueError(f"duplicate node id {place_id!r}")
        self._ids.add(place_id)
        self.places.append(place_id)
        return place_id

    def add_transition(self, label: Optional[str] = None, transition_id: Optional[str] = None) -> str:
        transition_id = transition_id or self._next("t")
        if transition_id in self._ids:
            raise ValueError(f"duplicate node id {transition_id!r}")
        self._ids.add(transition_id)
        self.transitions.append(Transition(transition_id, label))
        return transition_id

    def add_arc(self, source: str, target: str, weight: int = 1) -> None:
        self.arcs[(source, target)] += weight

    def build(
        self,
        initial: Mapping[str, int],
        final: Mapping[str, int],
        flags: Iterable[str] = (),
    ) -> PetriNet:
        arcs = frozenset(Arc(s, t, w) for (s, t), w in self.arcs.items())
        return PetriNet(
            frozenset(self.places), tuple(self.transitions), arcs,
            Marking(initial), Marking(final), self.name, frozenset(flags),
        )


# ---------- Дерево процесса -> сеть ----------
def tree_to_petri(tree: ProcessTree) -> PetriNet:
    """Рекурсивная блочная конструкция; язык сети совпадает с языком дерева"""
    builder = PetriNetBuilder("process-tree")
    source = builder.add_place(SOURCE)
    sink = builder.add_place(SINK)
    _build_fragment(builder, tree, source, sink)
    return builder.build({source: 1}, {sink: 1})


def _build_fragment(builder: PetriNetBuilder, tree: ProcessTree, entry: str, exit_: str) -> None:
    if tree.is_leaf:
        t = builder.add_transition(tree.label)
        builder.add_arc(entry, t)
        builder.add_arc(t, exit_)
        return

    children = tree.children
    if tree.operator is Operator.SEQUENCE:
        current = entry
        for n, child in enumerate(children):
            target = exit_ if n == len(children) - 1 else builder.add_place()
            _build_fragment(builder, child, current, target)
            current = target
    elif tree.operator is Operator.XOR:
        for child in children:
            _build_fragment(builder, child, entry, exit_)
    elif tree.operator is Operator.PARALLEL:
        split = builder.add_transition()
        join = builder.add_transition()
        builder.add_arc(entry, split)
        builder.add_arc(join, exit_)
        for child in children:
            start, end = builder.add_place(), builder.add_place()
            builder.add_arc(split, start)
            builder.add_arc(end, join)
            _build_fragment(builder, child, start, end)
    else:
        body_start, body_end = builder.add_place(), builder.add_place()
        enter = builder.add_transition()
        leave = builder.add_transition()
        builder.add_arc(entry, enter)
        builder.add_arc(enter, body_start)
        builder.add_arc(body_end, leave)
        builder.add_arc(leave, exit_)
        _build_fragment(builder, children[0], body_start, body_end)
        for redo in children[1:]:
            _build_fragment(builder, redo, body_end, body_start)


# ---------- Каузальная сеть -> сеть ----------
def cnet_to_petri(cnet: CausalNet) -> PetriNet:
    """Каждая связка - тихий переход, на каждую дугу - место.

    После построения тихие переходы вида p -> t -> q, где t - единственный
    потребитель p и единственный производитель q, сливаются.
    """
    if not cnet.nodes:
        logger.warning("Causal net is empty: degenerate net with source = sink")
        builder = PetriNetBuilder("causal-net")
        builder.add_place(SOURCE)
        return builder.build({SOURCE: 1}, {SOURCE: 1}, flags=["degenerate"])

    for node in sorted(cnet.nodes):
        has_input = bool(cnet.input_bindings.get(node)) or node in cnet.start_activities
        has_output = bool(cnet.output_bindings.get(node)) or node in cnet.end_activities
        if not has_input or not has_output:
            raise ConversionError(f"activity {node!r} is disconnected in the causal net")

    builder = PetriNetBuilder("causal-net")
    builder.add_place(SOURCE)
    builder.add_place(SINK)
    arc_places: Dict[Tuple[str, str], str] = {}

    def arc_place(a: str, b: str) -> str:
        if (a, b) not in arc_places:
            arc_places[(a, b)] = builder.add_place(f"{a}->{b}")
        return arc_places[(a, b)]

    for node in sorted(cnet.nodes):
        inbox = builder.add_place(f"i:{node}")
        outbox = builder.add_place(f"o:{node}")
        visible = builder.add_transition(node, f"t:{node}")
        builder.add_arc(inbox, visible)
        builder.add_arc(visible, outbox)

    for node in sorted(cnet.nodes):
        for k, binding in enumerate(cnet.input_bindings.get(node, ()), start=1):
            join = builder.add_transition(None, f"in:{node}:{k}")
            for source in sorted(binding):
                builder.add_arc(arc_place(source, node), join)
            builder.add_arc(join, f"i:{node}")
        for k, binding in enumerate(cnet.output_bindings.get(node, ()), start=1):
            split = builder.add_transition(None, f"out:{node}:{k}")
            builder.add_arc(f"o:{node}", split)
            for target in sorted(binding):
                builder.add_arc(split, arc_place(node, target))
        if node in cnet.start_activities:
            start = builder.add_transition(None, f"start:{node}")
            builder.add_arc(SOURCE, start)
            builder.add_arc(start, f"i:{node}")
        if node in cnet.end_activities:
            end = builder.add_transition(None, f"end:{node}")
            builder.add_arc(f"o:{node}", end)
            builder.add_arc(end, SINK)

    for a, b in sorted(cnet.long_distance_arcs):
        place = builder.add_place(f"ld:{a}->{b}")
        builder.add_arc(f"t:{a}", place)
        builder.add_arc(place, f"t:{b}")

    net = builder.build({SOURCE: 1}, {SINK: 1})
    return reduce_silent(net)


def reduce_silent(net: PetriNet) -> PetriNet:
    """Сливает места вокруг тихих переходов p -> t -> q.

    Условия: у t ровно одно входное и одно выходное место, t - единственный
    потребитель p и единственный производитель q.
    """
    special = {SOURCE, SINK}
    places = set(net.places)
    transitions = {t.id: t for t in net.transitions}
    pre = {tid: Counter(net.preset(tid)) for tid in transitions}
    post = {tid: Counter(net.postset(tid)) for tid in transitions}
    initial, final = Counter(net.initial_marking), Counter(net.final_marking)

    def fusible() -> Optional[Tuple[str, str, str]]:
        for tid in sorted(transitions):
            if not transitions[tid].is_silent:
                continue
            if len(pre[tid]) != 1 or len(post[tid]) != 1:
                continue
            (p, wp), = pre[tid].items()
            (q, wq), = post[tid].items()
            if p == q or wp != 1 or wq != 1 or (p in special and q in special):
                continue
            consumers = [t for t in transitions if p in pre[t]]
            producers = [t for t in transitions if q in post[t]]
            if consumers == [tid] and producers == [tid]:
                return tid, p, q
        return None

    while True:
        found = fusible()
        if found is None:
            break
        tid, p, q = found
        keep, drop = (q, p) if q in special else (p, q)
        del transitions[tid], pre[tid], post[tid]
        for flows in (pre, post):
            for counts in flows.values():
                if drop in counts:
                    counts[keep] += counts.pop(drop)
        for marking in (initial, final):
            if drop in marking:
                marking[keep] += marking.pop(drop)
        places.discard(drop)

    builder = PetriNetBuilder(net.name)
    for place in sorted(places):
        builder.add_place(place)
    for tid in sorted(transitions):
        builder.add_transition(transitions[tid].label, tid)
    for tid in sorted(transitions):
        for place, weight in pre[tid].items():
            builder.add_arc(place, tid, weight)
        for place, weight in post[tid].items():
            builder.add_arc(tid, place, weight)
    return builder.build(initial, final, net.flags)
