"""
Подкоманды trajminer.

Каждая подкоманда читает лог (кроме export), выполняет одну операцию и
пишет результаты атомарно в config.output_dir. Таблицы дублируются в stdout,
ход работы - только в лог (stderr).
"""
import gzip
import logging
import re
import sys
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from analytics import (
    check_time_guideline,
    cohort_stats,
    cohort_table,
    evaluate_rule,
    guideline_table,
    rules_table,
    variant_stats,
    variants_table,
)
from commands.router import register
from config import RunConfig
from conformance import CostFunction, quality_report
from errors import RuleSchemaError
from eventlog import EventLog, fill_missing, parse_csv, parse_xes, read_log, split_by_attribute, write_xes
from exporters import export_dot, export_pnml, import_pnml
from heuristics import CausalNet, discover_heuristics
from inductive import discover_inductive
from monitoring import metrics_collector
from petri import PetriNet, cnet_to_petri, tree_to_petri
from process_tree import Operator, ProcessTree, format_tree, parse_tree
from systematic import load_systematic_model
from utils import atomic_write, dump_json, format_percentage, render_table

logger = logging.getLogger(__name__)

_UNSAFE = re.compile(r"[^A-Za-z0-9_.-]+")


# ---------- Общие шаги ----------
def load_input(config: RunConfig) -> EventLog:
    """Читает лог по config.input_path и заполняет пропуски fill_attributes"""
    path = Path(config.input_path)
    with metrics_collector.timed("ingest"):
        if config.input_format == "auto":
            log = read_log(path, config.column_mapping())
        else:
            opener = gzip.open if path.name.lower().endswith(".gz") else open
            with opener(path, "rb") as fh:
                data = fh.read()
            if config.input_format == "xes":
                log = parse_xes(data)
            else:
                log = parse_csv(data, config.column_mapping())
        if config.fill_attributes:
            log = fill_missing(log, config.fill_attributes)
    metrics_collector.set_gauge("traces", len(log.traces))
    metrics_collector.set_gauge("events", log.event_count)
    logger.info("Loaded %s: %d traces, %d events", path.name, len(log.traces), log.event_count)
    return log


def load_model(config: RunConfig) -> PetriNet:
    if not config.model_path:
        return load_systematic_model()
    return import_pnml(Path(config.model_path).read_bytes())


def _emit(directory: Path, name: str, text: str) -> None:
    atomic_write(directory / name, text)
    logger.debug("Wrote %s", directory / name)


def _commit(staged: List[Tuple[Path, str]]) -> None:
    """Пишет подготовленные файлы; при ошибке удаляет уже записанные"""
    written: List[Path] = []
    try:
        for path, text in staged:
            _emit(path.parent, path.name, text)
            written.append(path)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise


def _out(config: RunConfig) -> Path:
    return Path(config.output_dir)


def _show(text: str) -> None:
    sys.stdout.write(text)
    sys.stdout.flush()


def _safe_name(value: str) -> str:
    return _UNSAFE.sub("_", value).strip("_") or "_"


# ---------- convert ----------
@register("convert", "read a CSV or XES log and write it as XES")
def cmd_convert(config: RunConfig, args) -> None:
    log = load_input(config)
    target = getattr(args, "output", None) or str(_out(config) / "log.xes")
    atomic_write(target, write_xes(log))
    logger.info("Converted %d traces to %s", len(log.traces), target)


# ---------- discover ----------
def _tree_summary(tree: ProcessTree) -> Dict[str, object]:
    operators: Counter = Counter()
    silent = visible = 0
    stack = [tree]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            silent += node.is_silent
            visible += not node.is_silent
        else:
            operators[node.operator.value] += 1
            stack.extend(node.children)
    return {
        "activities": sorted(tree.activities),
        "activity_count": len(tree.activities),
        "operators": {op.value: operators[op.value] for op in Operator},
        "leaves": visible,
        "silent_leaves": silent,
        "nodes": tree.size(),
        "depth": tree.depth(),
    }


def _cnet_summary(cnet: CausalNet) -> Dict[str, object]:
    return {
        "activities": sorted(cnet.nodes),
        "activity_count": len(cnet.nodes),
        "arcs": len(cnet.arcs),
        "long_distance_arcs": len(cnet.long_distance_arcs),
        "repaired_arcs": len(cnet.repaired),
        "start_activities": sorted(cnet.start_activities),
        "end_activities": sorted(cnet.end_activities),
    }


def _net_summary(net: PetriNet) -> Dict[str, object]:
    return {
        "places": len(net.places),
        "transitions": len(net.transitions),
        "silent_transitions": len(net.silent_transitions),
        "arcs": len(net.arcs),
    }


def _discover_into(
    config: RunConfig, log: EventLog, directory: Path, staged: List[Tuple[Path, str]]
) -> Dict[str, object]:
    summary: Dict[str, object] = {
        "algorithm": config.algorithm,
        "traces": len(log.traces),
        "events": log.event_count,
    }
    with metrics_collector.timed("discover"):
        if config.algorithm == "inductive":
            tree = discover_inductive(log, config.noise_threshold)
            net = tree_to_petri(tree)
            summary["noise_threshold"] = config.noise_threshold
            summary["tree"] = _tree_summary(tree)
            staged.append((directory / "tree.txt", format_tree(tree) + "\n"))
            staged.append((directory / "tree.dot", export_dot(tree)))
        else:
            params = config.heuristics_params()
            cnet = discover_heuristics(log, params)
            net = cnet_to_petri(cnet)
            summary["thresholds"] = params.to_dict()
            summary["causal_net"] = _cnet_summary(cnet)
            staged.append((directory / "cnet.dot", export_dot(cnet)))
    summary["net"] = _net_summary(net)
    staged.append((directory / "model.pnml", export_pnml(net)))
    staged.append((directory / "model.dot", export_dot(net)))
    return summary


@register("discover", "discover a model with the inductive or heuristics miner")
def cmd_discover(config: RunConfig, args) -> None:
    log = load_input(config)
    out = _out(config)
    # файлы пишутся только после того, как посчитаны все модели
    staged: List[Tuple[Path, str]] = []
    summary = _discover_into(config, log, out, staged)
    summary["input"] = Path(config.input_path).name

    rows: List[List[object]] = [["<all>", summary["traces"], _activity_count(summary)]]
    if config.split_attribute:
        groups: Dict[str, object] = {}
        for value, sublog in split_by_attribute(log, config.split_attribute).items():
            directory = out / f"by_{_safe_name(config.split_attribute)}" / _safe_name(value)
            if not sublog.event_count:
                logger.warning("Sub-log %s=%r has no events, skipped", config.split_attribute, value)
                continue
            groups[value] = _discover_into(config, sublog, directory, staged)
            rows.append([value, groups[value]["traces"], _activity_count(groups[value])])
        summary["split"] = {"attribute": config.split_attribute, "groups": groups}

    staged.append((out / "summary.json", dump_json(summary)))
    _commit(staged)
    _show(render_table(["log", "traces", "activities"], rows))


def _activity_count(summary: Dict[str, object]) -> int:
    part = summary.get("tree") or summary.get("causal_net")
    return part["activity_count"]


# ---------- conformance ----------
@register("conformance", "replay and align a log against a model, report quality metrics")
def cmd_conformance(config: RunConfig, args) -> None:
    log = load_input(config)
    net = load_model(config)
    with metrics_collector.timed("conformance"):
        report = quality_report(
            net, log, CostFunction(), config.max_alignment_states,
            config.workers, config.diagnostics,
        )
    metrics_collector.increment_counter("traces_replayed", len(log.traces))
    metrics_collector.increment_counter("alignment_exclusions", len(report.excluded_cases))
    if report.partial:
        logger.warning(
            "Alignment budget exhausted for %d case(s); report is partial",
            len(report.excluded_cases),
        )
    data = report.to_dict()
    data["model"] = net.name
    _emit(_out(config), "conformance.json", dump_json(data))

    rows = [
        ["fitness", f"{report.fitness:.4f}"],
        ["precision", f"{report.precision:.4f}"],
        ["generalization", f"{report.generalization:.4f}"],
        ["simplicity", f"{report.simplicity:.4f}"],
        ["alignment fitness", f"{report.alignment_fitness:.4f}"],
        ["fitting traces", format_percentage(report.fitting_traces, report.total_traces)],
    ]
    table = render_table(["metric", "value"], rows)
    _emit(_out(config), "conformance.txt", table)
    _show(table)


# ---------- аналитика ----------
@register("variants", "trace variants and activity statistics")
def cmd_variants(config: RunConfig, args) -> None:
    log = load_input(config)
    summary = variant_stats(log)
    _emit(_out(config), "variants.json", dump_json(summary.to_dict()))
    _emit(_out(config), "variants.txt", variants_table(summary.variants))
    top: Optional[int] = getattr(args, "top", None)
    _show(variants_table(summary.variants, top))


@register("guidelines", "check time guidelines between two activities")
def cmd_guidelines(config: RunConfig, args) -> None:
    log = load_input(config)
    reports = [
        check_time_guideline(log, g.anchor, g.target, g.limit, g.name)
        for g in config.guideline_objects()
    ]
    entries = []
    for report in reports:
        entry = report.to_dict()
        if config.diagnostics:
            entry["violating_cases"] = list(report.violating_cases)
        entries.append(entry)
    table = guideline_table(reports)
    _emit(_out(config), "guidelines.json", dump_json({"guidelines": entries}))
    _emit(_out(config), "guidelines.txt", table)
    _show(table)


@register("cohorts", "patient pathway cohorts and returns")
def cmd_cohorts(config: RunConfig, args) -> None:
    log = load_input(config)
    report = cohort_stats(log)
    table = cohort_table(report)
    _emit(_out(config), "cohorts.json", dump_json(report.to_dict(with_cases=config.diagnostics)))
    _emit(_out(config), "cohorts.txt", table)
    _show(table)


@register("rules", "evaluate decision rules on case attributes")
def cmd_rules(config: RunConfig, args) -> None:
    log = load_input(config)
    reports, entries = [], []
    for rule in config.rule_objects():
        try:
            report = evaluate_rule(log, rule)
        except RuleSchemaError as e:
            logger.warning("%s", e)
            entries.append({"name": rule.name, "rule": rule.text, "error": str(e)})
            continue
        reports.append(report)
        entries.append(report.to_dict())
    table = rules_table(reports)
    _emit(_out(config), "rules.json", dump_json({"rules": entries}))
    _emit(_out(config), "rules.txt", table)
    _show(table)


# ---------- export ----------
@register("export", "render a PNML model or a process tree as DOT and PNML", needs_input=False)
def cmd_export(config: RunConfig, args) -> None:
    out = _out(config)
    notation = getattr(args, "tree", None)
    if notation:
        tree = parse_tree(notation)
        net = tree_to_petri(tree)
        _emit(out, "tree.dot", export_dot(tree))
    else:
        net = load_model(config)
    _emit(out, "model.pnml", export_pnml(net))
    _emit(out, "model.dot", export_dot(net))
    _show(render_table(["model", "places", "transitions", "arcs"],
                       [[net.name, len(net.places), len(net.transitions), len(net.arcs)]]))
