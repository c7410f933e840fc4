"""
Генераторы для тестов: случайные деревья процессов, логи их языка,
маленькие сети с сохранением фишек. Все генераторы детерминированы
по random.Random.
"""
import random
from collections import Counter
from typing import List, Optional, Sequence, Tuple

from errors import LanguageTooLarge
from eventlog import EventLog
from petri import Marking, PetriNet, PetriNetBuilder, enabled, fire
from process_tree import Operator, ProcessTree, enumerate_language, leaf, loop, seq, tau, xor

LABELS = "abcdefgh"
_BRANCHING = 3


# ---------- Деревья ----------
def _capacity(depth: int, max_depth: int) -> int:
    """Сколько листьев помещается в поддерево, корень которого на глубине depth"""
    return _BRANCHING ** max(0, max_depth - depth)


def _split(rng: random.Random, total: int, parts: int, cap: int) -> List[int]:
    sizes = [1] * parts
    for _ in range(total - parts):
        room = [i for i, s in enumerate(sizes) if s < cap]
        sizes[rng.choice(room)] += 1
    return sizes


class _TreeBuilder:
    """Деревья с уникальными метками: петли под любым оператором, кроме петли,
    тела петель любого вида, tau в выборах и в петлях"""

    def __init__(self, rng: random.Random, max_depth: int):
        self.rng = rng
        self.max_depth = max_depth
        self.labels = iter(LABELS)

    def leaf(self) -> ProcessTree:
        return leaf(next(self.labels))

    def build(self, budget: int, depth: int, parent: Optional[Operator]) -> ProcessTree:
        rng = self.rng
        room = depth < self.max_depth
        if budget == 1:
            node = self.leaf()
            if room and parent is not Operator.LOOP and rng.random() < 0.1:
                return loop(node, tau())
            if room and parent in (Operator.SEQUENCE, Operator.PARALLEL) and rng.random() < 0.25:
                return xor(tau(), node)
            return node

        cap = _capacity(depth + 1, self.max_depth)
        if parent is not Operator.LOOP and budget <= 2 * cap and rng.random() < 0.2:
            return self._loop(budget, depth, cap)

        if parent in (Operator.SEQUENCE, Operator.PARALLEL) and budget <= cap and depth + 1 < self.max_depth \
                and rng.random() < 0.2:
            return xor(tau(), self.build(budget, depth + 1, Operator.XOR))

        choices = [op for op in (Operator.SEQUENCE, Operator.XOR, Operator.PARALLEL) if op is not parent]
        operator = rng.choice(choices)
        low = max(2, -(-budget // cap))
        parts = rng.randint(low, max(low, min(_BRANCHING, budget)))
        children = [self.build(size, depth + 1, operator) for size in _split(rng, budget, parts, cap)]
        if operator is Operator.XOR and rng.random() < 0.2:
            children.append(tau())
        return ProcessTree(operator, children=children)

    def _loop(self, budget: int, depth: int, cap: int) -> ProcessTree:
        rng = self.rng
        if budget <= cap and rng.random() < 0.3:
            body = self.build(budget, depth + 1, Operator.LOOP)
            return loop(body, tau()) if rng.random() < 0.7 else loop(tau(), body)

        body_budget = rng.randint(max(1, budget - cap), min(cap, budget - 1))
        body = self.build(body_budget, depth + 1, Operator.LOOP)
        rest = budget - body_budget
        sizes = _split(rng, rest, 2, cap) if rest >= 2 and rng.random() < 0.3 else [rest]
        return loop(body, *(self.build(size, depth + 1, Operator.LOOP) for size in sizes))


def random_tree(rng: random.Random, max_activities: int = 8, max_depth: int = 4) -> ProcessTree:
    """Дерево с различными метками (не больше max_activities) и глубиной <= max_depth"""
    budget = rng.randint(2, max_activities)
    return _TreeBuilder(rng, max_depth).build(budget, 1, None)


def random_tree_with_language(
    seed: int, max_activities: int = 8, max_depth: int = 4, max_traces: int = 300
) -> Tuple[ProcessTree, frozenset]:
    """Перебирает деревья от seed, пока язык (2 раскрутки петель) не станет достаточно мал"""
    rng = random.Random(seed)
    while True:
        tree = random_tree(rng, max_activities, max_depth)
        try:
            return tree, enumerate_language(tree, max_loop_unrollings=2, limit=max_traces)
        except LanguageTooLarge:
            continue


def log_of(sequences) -> EventLog:
    """Лог из последовательностей в отсортированном порядке"""
    return EventLog.from_sequences(sorted(tuple(s) for s in sequences))


# ---------- Сети ----------
def random_conserving_net(rng: random.Random, max_transitions: int = 8, labels: str = "abc") -> PetriNet:
    """Сеть, где каждый переход забирает столько же фишек, сколько кладет.

    Пространство разметок конечно; конечная разметка достижима случайным
    прогоном от начальной.
    """
    builder = PetriNetBuilder("random")
    places = [builder.add_place(f"p{i}") for i in range(rng.randint(2, 4))]
    for i in range(rng.randint(1, max_transitions)):
        label = None if rng.random() < 0.2 else rng.choice(labels)
        tid = builder.add_transition(label, f"t{i}")
        width = 1 if rng.random() < 0.75 else 2
        for place in rng.sample(places, width):
            builder.add_arc(place, tid)
        for place, weight in Counter(rng.choice(places) for _ in range(width)).items():
            builder.add_arc(tid, place, weight)

    initial = Counter({places[0]: 1})
    if rng.random() < 0.3:
        initial[places[1]] += 1
    draft = builder.build(initial, initial)
    marking = Marking(initial)
    for _ in range(rng.randint(0, 4)):
        active = sorted(enabled(draft, marking), key=lambda t: t.id)
        if not active:
            break
        marking = fire(draft, marking, rng.choice(active))
    return builder.build(initial, marking)


def random_trace(rng: random.Random, labels: Sequence[str] = "abcd", max_length: int = 6) -> Tuple[str, ...]:
    return tuple(rng.choice(labels) for _ in range(rng.randint(0, max_length)))
