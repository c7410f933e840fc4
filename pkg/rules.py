"""
Правила принятия решений: разбор текстовой записи и вычисление.

Запись правила: <условие на атрибуты случая> => <условие на маршрут>

    SIRSCriteria2OrMore and Hypotensie => "Admission NC" before "Admission IC"
    CRP between 109 and 185 => not contains "Admission NC"
"""
import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple, Union

from errors import RuleSyntaxError

Literal = Union[str, int, float, bool]


# ---------- Узлы выражений ----------
class Node:
    def evaluate(self, context) -> bool:
        raise NotImplementedError

    @property
    def attributes(self) -> FrozenSet[str]:
        return frozenset()


@dataclass(frozen=True)
class AllOf(Node):
    left: Node
    right: Node

    def evaluate(self, context) -> bool:
        return self.left.evaluate(context) and self.right.evaluate(context)

    @property
    def attributes(self) -> FrozenSet[str]:
        return self.left.attributes | self.right.attributes


@dataclass(frozen=True)
class AnyOf(Node):
    left: Node
    right: Node

    def evaluate(self, context) -> bool:
        return self.left.evaluate(context) or self.right.evaluate(context)

    @property
    def attributes(self) -> FrozenSet[str]:
        return self.left.attributes | self.right.attributes


@dataclass(frozen=True)
class Negation(Node):
    operand: Node

    def evaluate(self, context) -> bool:
        return not self.operand.evaluate(context)

    @property
    def attributes(self) -> FrozenSet[str]:
        return self.operand.attributes


# условия на атрибуты: context - словарь значений случая
_COMPARATORS = {
    "==": lambda a, b: a == b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _comparable(value, literal) -> bool:
    if isinstance(literal, bool) or isinstance(value, bool):
        return isinstance(literal, bool) and isinstance(value, bool)
    if isinstance(literal, (int, float)):
        return isinstance(value, (int, float))
    return isinstance(value, str) and isinstance(literal, str)


@dataclass(frozen=True)
class Comparison(Node):
    attribute: str
    operator: str
    literal: Literal

    def evaluate(self, context: Mapping) -> bool:
        value = context.get(self.attribute)
        if value is None or not _comparable(value, self.literal):
            return False
        return _COMPARATORS[self.operator](value, self.literal)

    @property
    def attributes(self) -> FrozenSet[str]:
        return frozenset([self.attribute])


@dataclass(frozen=True)
class Between(Node):
    attribute: str
    low: float
    high: float

    def evaluate(self, context: Mapping) -> bool:
        value = context.get(self.attribute)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False
        return self.low <= value <= self.high

    @property
    def attributes(self) -> FrozenSet[str]:
        return frozenset([self.attribute])


@dataclass(frozen=True)
class Flag(Node):
    attribute: str

    def evaluate(self, context: Mapping) -> bool:
        return context.get(self.attribute) is True

    @property
    def attributes(self) -> FrozenSet[str]:
        return frozenset([self.attribute])


# условия на маршрут: context - последовательность активностей
@dataclass(frozen=True)
class Contains(Node):
    activity: str

    def evaluate(self, context: Sequence[str]) -> bool:
        return self.activity in context


@dataclass(frozen=True)
class Before(Node):
    first: str
    second: str

    def evaluate(self, context: Sequence[str]) -> bool:
        if self.first not in context or self.second not in context:
            return False
        return list(context).index(self.first) < list(context).index(self.second)


# ---------- Разбор ----------
_TOKEN = re.compile(
    r"""\s*(?:
        (?P<string>"(?:[^"\\]|\\.)*")
      | (?P<number>-?\d+(?:\.\d+)?)
      | (?P<arrow>=>)
      | (?P<op>==|!=|<=|>=|<|>|=)
      | (?P<paren>[()])
      | (?P<word>[A-Za-z_][A-Za-z0-9_:.]*)
    )""",
    re.VERBOSE,
)
_KEYWORDS = {"and", "or", "not", "between", "contains", "before", "true", "false"}

Token = Tuple[str, str, int]


def _tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    position = 0
    while text[position:].strip():
        match = _TOKEN.match(text, position)
        if not match:
            raise RuleSyntaxError("unexpected character", position)
        kind = match.lastgroup
        value = match.group(kind)
        if kind == "string":
            value = re.sub(r"\\(.)", r"\1", value[1:-1])
        elif kind == "word" and value.lower() in _KEYWORDS:
            kind, value = "keyword", value.lower()
        tokens.append((kind, value, match.start(kind)))
        position = match.end()
    return tokens


class _Parser:
    def __init__(self, tokens: List[Token], text: str):
        self.tokens = tokens
        self.text = text
        self.index = 0

    def peek(self) -> Optional[Token]:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def take(self) -> Token:
        token = self.peek()
        if token is None:
            raise RuleSyntaxError("unexpected end of rule", len(self.text))
        self.index += 1
        return token

    def accept(self, kind: str, value: Optional[str] = None) -> bool:
        token = self.peek()
        if token and token[0] == kind and (value is None or token[1] == value):
            self.index += 1
            return True
        return False

    def expect(self, kind: str, value: Optional[str] = None) -> Token:
        token = self.peek()
        if not token or token[0] != kind or (value is not None and token[1] != value):
            where = token[2] if token else len(self.text)
            raise RuleSyntaxError(f"expected {value or kind}", where)
        self.index += 1
        return token

    def done(self) -> bool:
        return self.index >= len(self.tokens)

    # общая часть: or > and > not > атом
    def disjunction(self, atom) -> Node:
        node = self.conjunction(atom)
        while self.accept("keyword", "or"):
            node = AnyOf(node, self.conjunction(atom))
        return node

    def conjunction(self, atom) -> Node:
        node = self.negation(atom)
        while self.accept("keyword", "and"):
            node = AllOf(node, self.negation(atom))
        return node

    def negation(self, atom) -> Node:
        if self.accept("keyword", "not"):
            return Negation(self.negation(atom))
        if self.accept("paren", "("):
            node = self.disjunction(atom)
            self.expect("paren", ")")
            return node
        return atom()

    def literal(self) -> Literal:
        kind, value, where = self.take()
        if kind == "number":
            return float(value) if "." in value else int(value)
        if kind == "string":
            return value
        if kind == "keyword" and value in ("true", "false"):
            return value == "true"
        raise RuleSyntaxError(f"expected a value, got {value!r}", where)

    def number(self) -> float:
        kind, value, where = self.take()
        if kind != "number":
            raise RuleSyntaxError(f"expected a number, got {value!r}", where)
        return float(value)

    def condition(self) -> Node:
        kind, name, where = self.take()
        if kind not in ("word", "string"):
            raise RuleSyntaxError(f"expected an attribute name, got {name!r}", where)
        token = self.peek()
        if token and token[0] == "op":
            self.index += 1
            return Comparison(name, token[1], self.literal())
        if self.accept("keyword", "between"):
            low = self.number()
            # "and" внутри between относится к интервалу
            self.expect("keyword", "and")
            high = self.number()
            if low > high:
                raise RuleSyntaxError("empty interval", where)
            return Between(name, low, high)
        return Flag(name)

    def pathway(self) -> Node:
        if self.accept("keyword", "contains"):
            return Contains(self.expect("string")[1])
        first = self.expect("string")[1]
        self.expect("keyword", "before")
        return Before(first, self.expect("string")[1])


@dataclass(frozen=True)
class DecisionRule:
    name: str
    antecedent: Node
    consequent: Node
    text: str = ""

    @property
    def attributes(self) -> FrozenSet[str]:
        return self.antecedent.attributes

    def applies(self, values: Mapping) -> bool:
        return self.antecedent.evaluate(values)

    def holds(self, activities: Sequence[str]) -> bool:
        return self.consequent.evaluate(tuple(activities))


def parse_condition(text: str) -> Node:
    parser = _Parser(_tokenize(text), text)
    node = parser.disjunction(parser.condition)
    if not parser.done():
        raise RuleSyntaxError("trailing input", parser.peek()[2])
    return node


def parse_pathway(text: str) -> Node:
    parser = _Parser(_tokenize(text), text)
    node = parser.disjunction(parser.pathway)
    if not parser.done():
        raise RuleSyntaxError("trailing input", parser.peek()[2])
    return node


def parse_rule(text: str, name: Optional[str] = None) -> DecisionRule:
    tokens = _tokenize(text)
    arrows = [i for i, token in enumerate(tokens) if token[0] == "arrow"]
    if len(arrows) != 1:
        raise RuleSyntaxError("a rule needs exactly one '=>'", tokens[arrows[1]][2] if len(arrows) > 1 else 0)
    split = arrows[0]
    left = _Parser(tokens[:split], text)
    antecedent = left.disjunction(left.condition)
    if not left.done():
        raise RuleSyntaxError("trailing input before '=>'", left.peek()[2])
    right = _Parser(tokens[split + 1:], text)
    consequent = right.disjunction(right.pathway)
    if not right.done():
        raise RuleSyntaxError("trailing input", right.peek()[2])
    return DecisionRule(name or text.strip(), antecedent, consequent, text.strip())


DEFAULT_RULES: Dict[str, str] = {
    "sirs-antibiotics": 'SIRSCriteria2OrMore => contains "IV Antibiotics"',
    "sirs-liquid": 'SIRSCriteria2OrMore => contains "IV Liquid"',
    "sirs-hypotension-transfer": (
        'SIRSCriteria2OrMore and Hypotensie => "Admission NC" before "Admission IC"'
    ),
    "crp-no-normal-care": 'CRP between 109 and 185 => not contains "Admission NC"',
}


def default_rules() -> List[DecisionRule]:
    return [parse_rule(text, name) for name, text in DEFAULT_RULES.items()]
