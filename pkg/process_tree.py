"""
Деревья процессов: структура, текстовая нотация, каноническая форма
и перечисление языка
"""
import itertools
import re
from dataclasses import dataclass
from enum import Enum
from typing import FrozenSet, Iterable, List, Optional, Set, Tuple

from errors import LanguageTooLarge, NotationError


class Operator(str, Enum):
    SEQUENCE = "Seq"
    XOR = "Xor"
    PARALLEL = "And"
    LOOP = "Loop"


TAU = "tau"


@dataclass(frozen=True)
class ProcessTree:
    """Узел дерева: оператор с детьми либо лист (label=None - тихий лист)"""

    operator: Optional[Operator] = None
    label: Optional[str] = None
    children: Tuple["ProcessTree", ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if self.operator is None:
            if self.children:
                raise ValueError("leaves have no children")
            if self.label == "":
                raise ValueError("activity label must be non-empty")
        else:
            if self.label is not None:
                raise ValueError("operator nodes carry no label")
            if len(self.children) < 2:
                raise ValueError(f"{self.operator.value} needs at least two children")

    @property
    def is_leaf(self) -> bool:
        return self.operator is None

    @property
    def is_silent(self) -> bool:
        return self.operator is None and self.label is None

    @property
    def activities(self) -> FrozenSet[str]:
        if self.is_leaf:
            return frozenset() if self.label is None else frozenset([self.label])
        return frozenset().union(*(child.activities for child in self.children))

    def size(self) -> int:
        return 1 + sum(child.size() for child in self.children)

    def depth(self) -> int:
        return 1 + max((child.depth() for child in self.children), default=0)

    def __str__(self) -> str:
        return format_tree(self)


# ---------- Конструкторы ----------
def leaf(label: str) -> ProcessTree:
    return ProcessTree(label=label)


def tau() -> ProcessTree:
    return ProcessTree()


def seq(*children: ProcessTree) -> ProcessTree:
    return ProcessTree(Operator.SEQUENCE, children=children)


def xor(*children: ProcessTree) -> ProcessTree:
    return ProcessTree(Operator.XOR, children=children)


def parallel(*children: ProcessTree) -> ProcessTree:
    return ProcessTree(Operator.PARALLEL, children=children)


def loop(body: ProcessTree, *redo: ProcessTree) -> ProcessTree:
    return ProcessTree(Operator.LOOP, children=(body,) + redo)


# ---------- Нотация ----------
_PLAIN_LABEL = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_.:\-]*$")
_OPERATORS = {op.value: op for op in Operator}


def _format_label(label: str) -> str:
    if _PLAIN_LABEL.match(label) and label != TAU and label not in _OPERATORS:
        return label
    escaped = label.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def format_tree(tree: ProcessTree) -> str:
    """Seq(a, And(b, c)), Xor(tau, a), Loop(a, b)"""
    if tree.is_silent:
        return TAU
    if tree.is_leaf:
        return _format_label(tree.label)
    inner = ", ".join(format_tree(child) for child in tree.children)
    return f"{tree.operator.value}({inner})"


_TOKEN = re.compile(
    r'\s*(?:(?P<quoted>"(?:[^"\\]|\\.)*")|(?P<word>[A-Za-z0-9_][A-Za-z0-9_.:\-]*)|(?P<punct>[(),]))'
)


def _tokenize(text: str) -> List[Tuple[str, str, int]]:
    tokens = []
    position = 0
    while position < len(text):
        if text[position:].strip() == "":
            break
        match = _TOKEN.match(text, position)
        if not match:
            raise NotationError("unexpected character", position)
        kind = match.lastgroup
        value = match.group(kind)
        if kind == "quoted":
            value = re.sub(r"\\(.)", r"\1", value[1:-1])
        tokens.append((kind, value, match.start(kind)))
        position = match.end()
    return tokens


def parse_tree(text: str) -> ProcessTree:
    tokens = _tokenize(text)
    index = 0

    def peek() -> Optional[Tuple[str, str, int]]:
        return tokens[index] if index < len(tokens) else None

    def expect(value: str) -> None:
        nonlocal index
        token = peek()
        if token is None or token[0] != "punct" or token[1] != value:
            where = token[2] if token else len(text)
            raise NotationError(f"expected {value!r}", where)
        index += 1

    def node() -> ProcessTree:
        nonlocal index
        token = peek()
        if token is None:
            raise NotationError("unexpected end of input", len(text))
        kind, value, where = token
        index += 1
        if kind == "quoted":
            return leaf(value)
        if kind != "word":
            raise NotationError(f"unexpected {value!r}", where)
        following = peek()
        if value in _OPERATORS and following and following[1] == "(":
            expect("(")
            children = [node()]
            while peek() and peek()[1] == ",":
                expect(",")
                children.append(node())
            expect(")")
            try:
                return ProcessTree(_OPERATORS[value], children=children)
            except ValueError as exc:
                raise NotationError(str(exc), where) from exc
        return tau() if value == TAU else leaf(value)

    tree = node()
    if index != len(tokens):
        raise NotationError("trailing input", tokens[index][2])
    return tree


def canonical(tree: ProcessTree) -> ProcessTree:
    """Сортирует детей Xor/And и redo-части Loop по сериализованной форме"""
    if tree.is_leaf:
        return tree
    children = [canonical(child) for child in tree.children]
    if tree.operator in (Operator.XOR, Operator.PARALLEL):
        children.sort(key=format_tree)
    elif tree.operator is Operator.LOOP:
        children = children[:1] + sorted(children[1:], key=format_tree)
    return ProcessTree(tree.operator, children=children)


# ---------- Язык дерева ----------
Language = FrozenSet[Tuple[str, ...]]


def _interleavings(a: Tuple[str, ...], b: Tuple[str, ...]) -> Set[Tuple[str, ...]]:
    if not a:
        return {b}
    if not b:
        return {a}
    result = {(a[0],) + rest for rest in _interleavings(a[1:], b)}
    result.update((b[0],) + rest for rest in _interleavings(a, b[1:]))
    return result


def _guard(language: Iterable, limit: int) -> None:
    if len(language) > limit:
        raise LanguageTooLarge(f"tree language exceeds {limit} traces")


def enumerate_language(
    tree: ProcessTree, max_loop_unrollings: int = 2, limit: int = 20000
) -> Language:
    """Все трассы дерева; петли повторяются не более max_loop_unrollings раз"""
    if tree.is_silent:
        return frozenset([()])
    if tree.is_leaf:
        return frozenset([(tree.label,)])

    parts = [enumerate_language(c, max_loop_unrollings, limit) for c in tree.children]
    if tree.operator is Operator.XOR:
        result = set().union(*parts)
    elif tree.operator is Operator.SEQUENCE:
        result = {()}
        for part in parts:
            result = {x + y for x in result for y in part}
            _guard(result, limit)
    elif tree.operator is Operator.PARALLEL:
        result = {()}
        for part in parts:
            merged = set()
            for x, y in itertools.product(result, part):
                merged.update(_interleavings(x, y))
                _guard(merged, limit)
            result = merged
    else:
        body, redo = parts[0], set().union(*parts[1:])
        result = set(body)
        frontier = set(body)
        for _ in range(max_loop_unrollings):
            frontier = {x + r + b for x in frontier for r in redo for b in body}
            _guard(frontier, limit)
            result.update(frontier)
    _guard(result, limit)
    return frozenset(result)
