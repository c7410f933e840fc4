"""
Экспорт моделей: DOT для просмотра, PNML для обмена (в обе стороны)
"""
import logging
import xml.etree.ElementTree as ET
from functools import singledispatch
from itertools import count
from typing import Dict, List, Union

from dfg import DirectlyFollowsGraph
from errors import ModelLoadError
from heuristics import CausalNet
from petri import Arc, Marking, PetriNet, Transition
from process_tree import ProcessTree

logger = logging.getLogger(__name__)

PNML_NET_TYPE = "http://www.pnml.org/version-2009/grammar/ptnet"


def _quote(text: str) -> str:
    escaped = str(text).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{escaped}"'


def _render(name: str, lines: List[str], header: List[str]) -> str:
    body = header + lines if lines else []
    out = [f"digraph {_quote(name)} {{"]
    out.extend(f"  {line}" for line in body)
    out.append("}")
    return "\n".join(out) + "\n"


# ---------- DOT ----------
@singledispatch
def export_dot(model) -> str:
    raise TypeError(f"cannot render {type(model).__name__} as DOT")


@export_dot.register
def _(net: PetriNet) -> str:
    lines = []
    for place in sorted(net.places):
        tokens = net.initial_marking.count(place)
        label = str(tokens) if tokens else ""
        lines.append(f"{_quote(place)} [shape=circle, label={_quote(label)}, xlabel={_quote(place)}];")
    for t in net.transitions:
        if t.is_silent:
            lines.append(f'{_quote(t.id)} [shape=box, style=filled, fillcolor=black, label=""];')
        else:
            lines.append(f"{_quote(t.id)} [shape=box, label={_quote(t.label)}];")
    for arc in sorted(net.arcs, key=lambda a: (a.source, a.target)):
        weight = f" [label={_quote(arc.weight)}]" if arc.weight > 1 else ""
        lines.append(f"{_quote(arc.source)} -> {_quote(arc.target)}{weight};")
    return _render(net.name, lines, ["rankdir=LR;"])


@export_dot.register
def _(dfg: DirectlyFollowsGraph) -> str:
    lines = []
    for node in sorted(dfg.nodes):
        lines.append(f"{_quote(node)} [shape=box];")
    for (a, b), n in sorted(dfg.edges.items()):
        lines.append(f"{_quote(a)} -> {_quote(b)} [label={_quote(n)}];")
    return _render("dfg", lines, ["rankdir=LR;"])


_OPERATOR_SYMBOLS = {"Seq": "->", "Xor": "X", "And": "+", "Loop": "*"}


@export_dot.register
def _(tree: ProcessTree) -> str:
    lines: List[str] = []
    ids = count()

    def visit(node: ProcessTree) -> str:
        node_id = f"n{next(ids)}"
        if node.is_silent:
            lines.append(f'{node_id} [shape=box, style=filled, fillcolor=black, label=""];')
        elif node.is_leaf:
            lines.append(f"{node_id} [shape=box, label={_quote(node.label)}];")
        else:
            symbol = _OPERATOR_SYMBOLS[node.operator.value]
            lines.append(f"{node_id} [shape=circle, label={_quote(symbol)}];")
            for child in node.children:
                lines.append(f"{node_id} -> {visit(child)};")
        return node_id

    visit(tree)
    return _render("process-tree", lines, ["rankdir=TB;"])


@export_dot.register
def _(cnet: CausalNet) -> str:
    lines = []
    for node in sorted(cnet.nodes):
        lines.append(f"{_quote(node)} [shape=box];")
    for (a, b), value in sorted(cnet.arcs.items()):
        style = ", style=dashed" if (a, b) in cnet.repaired else ""
        lines.append(f"{_quote(a)} -> {_quote(b)} [label={_quote(f'{value:.3f}')}{style}];")
    # AND-связки рисуются веером через точку
    for node in sorted(cnet.nodes):
        for k, binding in enumerate(cnet.output_bindings.get(node, ()), start=1):
            if len(binding) > 1:
                fan = _quote(f"and-out:{node}:{k}")
                lines.append(f"{fan} [shape=point];")
                lines.append(f"{_quote(node)} -> {fan} [arrowhead=none, style=dotted];")
                for target in sorted(binding):
                    lines.append(f"{fan} -> {_quote(target)} [style=dotted];")
        for k, binding in enumerate(cnet.input_bindings.get(node, ()), start=1):
            if len(binding) > 1:
                fan = _quote(f"and-in:{node}:{k}")
                lines.append(f"{fan} [shape=point];")
                for source in sorted(binding):
                    lines.append(f"{_quote(source)} -> {fan} [arrowhead=none, style=dotted];")
                lines.append(f"{fan} -> {_quote(node)} [style=dotted];")
    for a, b in sorted(cnet.long_distance_arcs):
        lines.append(f"{_quote(a)} -> {_quote(b)} [style=bold, color=gray];")
    return _render("causal-net", lines, ["rankdir=LR;"])


# ---------- PNML ----------
def _text_element(parent: ET.Element, tag: str, text: str) -> ET.Element:
    element = ET.SubElement(parent, tag)
    ET.SubElement(element, "text").text = text
    return element


def export_pnml(net: PetriNet) -> str:
    """PNML: place/transition/arc, initialMarking, finalmarkings.

    Тихий переход пишется с пустым именем: <name><text/></name>.
    """
    root = ET.Element("pnml")
    net_el = ET.SubElement(root, "net", {"id": net.name, "type": PNML_NET_TYPE})
    _text_element(net_el, "name", net.name)
    page = ET.SubElement(net_el, "page", {"id": "page"})
    for place in sorted(net.places):
        place_el = ET.SubElement(page, "place", {"id": place})
        _text_element(place_el, "name", place)
        tokens = net.initial_marking.count(place)
        if tokens:
            _text_element(place_el, "initialMarking", str(tokens))
    for t in net.transitions:
        t_el = ET.SubElement(page, "transition", {"id": t.id})
        name = ET.SubElement(t_el, "name")
        text = ET.SubElement(name, "text")
        if t.label is not None:
            text.text = t.label
    for n, arc in enumerate(sorted(net.arcs, key=lambda a: (a.source, a.target)), start=1):
        arc_el = ET.SubElement(page, "arc", {"id": f"a{n}", "source": arc.source, "target": arc.target})
        if arc.weight != 1:
            _text_element(arc_el, "inscription", str(arc.weight))
    finals = ET.SubElement(net_el, "finalmarkings")
    marking_el = ET.SubElement(finals, "marking")
    for place in net.final_marking:
        ref = ET.SubElement(marking_el, "place", {"idref": place})
        ET.SubElement(ref, "text").text = str(net.final_marking[place])
    ET.indent(root)
    body = ET.tostring(root, encoding="unicode")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + body + "\n"


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _child(element: ET.Element, name: str):
    for child in element:
        if _local(child.tag) == name:
            return child
    return None


def _text_of(element) -> str:
    if element is None:
        return ""
    text = _child(element, "text")
    return (text.text or "").strip() if text is not None else ""


def _int_text(element, default: int, what: str) -> int:
    raw = _text_of(element)
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ModelLoadError(f"invalid {what}: {raw!r}") from exc


def import_pnml(source: Union[str, bytes]) -> PetriNet:
    """Обратная операция к export_pnml; без finalmarkings - по фишке в каждом стоке"""
    try:
        root = ET.fromstring(source)
    except ET.ParseError as exc:
        raise ModelLoadError(f"malformed PNML: {exc}") from exc
    net_el = root if _local(root.tag) == "net" else _child(root, "net")
    if net_el is None:
        raise ModelLoadError("PNML document has no <net> element")

    places: List[str] = []
    initial: Dict[str, int] = {}
    transitions: List[Transition] = []
    arcs: List[Arc] = []
    final: Dict[str, int] = {}
    final_given = False
    for element in net_el.iter():
        tag = _local(element.tag)
        if tag == "place" and element.get("id"):
            places.append(element.get("id"))
            tokens = _int_text(_child(element, "initialMarking"), 0, "initial marking")
            if tokens:
                initial[element.get("id")] = tokens
        elif tag == "transition":
            label = _text_of(_child(element, "name")) or None
            transitions.append(Transition(element.get("id"), label))
        elif tag == "arc":
            weight = _int_text(_child(element, "inscription"), 1, "arc inscription")
            arcs.append(Arc(element.get("source"), element.get("target"), weight))
        elif tag == "finalmarkings":
            final_given = True
            marking_el = _child(element, "marking")
            for ref in (marking_el if marking_el is not None else []):
                if _local(ref.tag) == "place":
                    final[ref.get("idref")] = _int_text(ref, 1, "final marking")

    name = net_el.get("id") or _text_of(_child(net_el, "name")) or "net"
    try:
        net = PetriNet(frozenset(places), tuple(transitions), frozenset(arcs),
                       Marking(initial), Marking(final), name)
    except (ValueError, TypeError) as exc:
        raise ModelLoadError(f"inconsistent PNML net: {exc}") from exc
    if not final_given:
        sinks = net.sink_places
        logger.info("PNML without final marking: using sink places %s", ", ".join(sinks))
        net = PetriNet(net.places, net.transitions, net.arcs, net.initial_marking,
                       Marking({p: 1 for p in sinks}), net.name)
    return net
