"""
Operation functions behind the pipeline steps. Each one takes the step inputs keyed by template field and
returns its outputs the same way. Report blocks are lists of (key, value) pairs; a block carrying
("status", "failed") makes the run exit with 1.
"""
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from src.bass_serre import TamePresentation, WindowParams, build_tree_window, tame_presentation
from src.fine_graph import (base_cone_edge, build_K_and_forest, check_fine, check_hyperbolic, parabolic_tree_stabilizers,
                            quotient)
from src.graph_of_groups import GraphOfGroups, validate
from src.graph_of_groups_loader import load_graph_of_groups
from src.graph_visualization import Artifact, export_dot
from src.group_kernel import GroupElement, GroupKind, element_word, format_word
from src.peripheral import (VARIANT_AUTO, PeripheralStructure, check_extension, compute_Q,
                            compute_union_minus_repeats, declared_structure, intersection_witnesses,
                            structures_agree, totality_probe, transfer_quasiconvexity)
from src.pipeline_types import STATUS_FAILED, STATUS_OK, RunConfig
from src.quasiconvex import QuasiconvexityVerdict, QuasiconvexWitness, check_qc_hypotheses, verify_relative_quasiconvexity
from src.toolkit_errors import HypothesisFailure, IoError, IsolationFailure, MaximalityFailure

logger = logging.getLogger(__name__)

Block = List[Tuple[str, str]]

EXACT = "exact"


def _yes(flag: bool) -> str:
    return "yes" if flag else "no"


def _element(x: Optional[GroupElement]) -> str:
    return "none" if x is None else format_word(element_word(x))


def _span(generators: Sequence[str]) -> str:
    return "⟨" + ", ".join(generators) + "⟩"


def _config_window(config: RunConfig) -> WindowParams:
    return WindowParams(config.tree_radius, config.word_window)


def render_report(blocks: Sequence[Block]) -> str:
    """`key: value` lines, one block per check, blocks separated by a blank line."""
    return "\n\n".join("\n".join(f"{key}: {value}" for key, value in block) for block in blocks) + "\n"


def header_block(config: RunConfig) -> Block:
    return [("command", config.command),
            ("input", Path(config.input_path).name),
            ("window", str(_config_window(config))),
            ("circuit bound", str(config.circuit_bound)),
            ("stability step", str(config.stability_step)),
            ("hypotheses", "skipped" if config.skip_hypotheses else "checked")]

# =======================================================================
# Input and validation


def load_input(inputs: dict) -> dict:
    config: RunConfig = inputs["config"]
    g = load_graph_of_groups(config.input_path)
    block = [("step", "input"),
             ("vertices", ", ".join(g.vertices)),
             ("edges", ", ".join(g.edges) or "none"),
             ("base", g.base),
             ("alphabet", " ".join(g.alphabet))]
    return {"graph": g, "blocks": [block]}


def validate_graph(inputs: dict) -> dict:
    g: GraphOfGroups = inputs["graph"]
    config: RunConfig = inputs["config"]
    report = validate(g)
    blocks: List[Block] = []
    for r in report.ends:
        container_malnormal = report.vertex(r.vertex).peripherals_malnormal.holds
        block = [("check", "edge end"), ("edge", r.edge), ("end", r.end), ("vertex", r.vertex),
                 ("container", r.container or "none"),
                 ("parabolic", _yes(r.parabolic)), ("maximal", _yes(r.maximal)), ("total", _yes(r.total.holds)),
                 ("container malnormal", _yes(container_malnormal)),
                 ("summary", f"parabolic: {_yes(r.parabolic)}; maximal: {_yes(r.maximal)}; "
                             f"container malnormal: {_yes(container_malnormal)}")]
        if not r.total.holds:
            block.append(("total witness", _element(r.total.witness)))
        block.append(("window", EXACT))
        blocks.append(block)
    failed = []
    for v in report.vertices:
        block = [("check", "vertex"), ("vertex", v.vertex),
                 ("peripherals almost malnormal", _yes(v.peripherals_malnormal.holds)),
                 ("edge images almost malnormal", _yes(v.edge_images_malnormal.holds))]
        if not v.peripherals_malnormal.holds:
            failed.append(v.vertex)
            block.append(("peripheral witness", _element(v.peripherals_malnormal.witness)))
        if not v.edge_images_malnormal.holds:
            block.append(("edge image witness", _element(v.edge_images_malnormal.witness)))
        block.append(("window", EXACT))
        blocks.append(block)
    status = STATUS_FAILED if failed and not config.skip_hypotheses else STATUS_OK
    summary = [("check", "validation"), ("status", status)]
    if failed:
        summary.append(("detail", f"peripheral families not almost malnormal at {', '.join(failed)}"))
    summary.append(("window", EXACT))
    blocks.append(summary)
    return {"validation": report, "status": status, "blocks": blocks}

# =======================================================================
# Constructions


def build_tree(inputs: dict) -> dict:
    g: GraphOfGroups = inputs["graph"]
    config: RunConfig = inputs["config"]
    t = build_tree_window(g, config.tree_radius, config.word_window)
    block = [("construction", "tree window"),
             ("tree vertices", str(len(t))),
             ("tree edges", str(len(t.edges))),
             ("depth", str(max(v.depth for v in t.vertices))),
             ("cosets", ", ".join(t.label(v.index) for v in t.vertices)),
             ("window", str(t.params))]
    return {"tree": t, "blocks": [block]}


def build_fine_graph(inputs: dict) -> dict:
    g: GraphOfGroups = inputs["graph"]
    config: RunConfig = inputs["config"]
    t = inputs["tree"]
    k, f = build_K_and_forest(g, t, t.params.L, check_malnormal=not config.skip_hypotheses)
    kbar = quotient(k, f)
    block = [("construction", "fine graph"),
             ("K vertices", str(k.graph.number_of_nodes())),
             ("K edges", str(k.graph.number_of_edges())),
             ("forest components", str(len(f.components))),
             ("Kbar vertices", str(kbar.graph.number_of_nodes())),
             ("Kbar edges", str(kbar.graph.number_of_edges())),
             ("window", str(k.params))]
    return {"fine_graph": k, "forest": f, "quotient": kbar, "blocks": [block]}


def count_circuits(inputs: dict) -> dict:
    """Circuits of length ≤ n through the K̄ edge joining the base copy's origin to its peripheral cone."""
    config: RunConfig = inputs["config"]
    k, kbar = inputs["fine_graph"], inputs["quotient"]
    edge = base_cone_edge(k, kbar)
    block: Block = [("check", "fineness"), ("bound", str(config.circuit_bound))]
    if edge is None:
        block += [("edge", "none"), ("circuits", "0")]
    else:
        block += [("edge", f"{kbar.graph.nodes[edge[0]]['label']} -- {kbar.graph.nodes[edge[1]]['label']}"),
                  ("circuits", str(check_fine(kbar.graph, edge, config.circuit_bound)))]
    block.append(("window", str(kbar.params)))
    return {"blocks": [block]}


def measure_delta(inputs: dict) -> dict:
    kbar = inputs["quotient"]
    delta = check_hyperbolic(kbar.graph)
    return {"blocks": [[("check", "hyperbolicity"), ("delta", f"{delta:g}"), ("window", str(kbar.params))]]}

# =======================================================================
# Peripheral structures


def _structure_block(title: str, symbol: str, structure: PeripheralStructure) -> Block:
    members = [m for m in structure.members if not m.finite]
    block = [("structure", title),
             ("result", f"{symbol} = {{{', '.join(_span(m.generator_text()) for m in members)}}}")]
    for m in members:
        suffix = " (truncated)" if m.truncated else ""
        block.append(("member", f"{m.provenance}: {_span(m.generator_text())}{suffix}"))
        if m.conjugator:
            block.append(("normalized", f"{m.provenance} conjugated by {format_word(m.conjugator)}"))
    for r in structure.removed:
        block.append(("removed", f"{r.provenance} into {r.retained} along {', '.join(r.chain)} "
                                 f"by {format_word(r.conjugator)}"))
    block.append(("representatives", "ShortLex-least conjugate found in window"))
    if structure.note:
        block.append(("repeats", structure.note))
    return block


def compute_peripherals(inputs: dict) -> dict:
    g: GraphOfGroups = inputs["graph"]
    q = compute_Q(g, inputs["tree"], inputs["forest"])
    block = _structure_block("Q", "ℚ", q)
    block.append(("window", str(q.params)))
    return {"peripherals": q, "blocks": [block]}


def union_minus_repeats(inputs: dict) -> dict:
    """Union minus repeats; when neither variant applies the structure falls back to ℚ."""
    g: GraphOfGroups = inputs["graph"]
    t, q = inputs["tree"], inputs["peripherals"]
    try:
        union = compute_union_minus_repeats(g, t, VARIANT_AUTO)
    except (MaximalityFailure, IsolationFailure, HypothesisFailure) as e:
        logger.info(f"Union minus repeats falls back to ℚ: {e.name}: {e}")
        block = _structure_block("union minus repeats", "ℚ", q)
        block[1:1] = [("fallback", "compute_Q"), ("reason", f"{e.name}: {e}")]
        block.append(("window", str(t.params)))
        return {"union": q, "blocks": [block]}
    block = _structure_block(f"union minus repeats ({union.variant})", "⋃ℙ - repeats", union)
    block.append(("agrees with Q", _yes(structures_agree(union, q, g))))
    block.append(("window", str(union.params)))
    return {"union": union, "blocks": [block]}


def probe_totality(inputs: dict) -> dict:
    probe = totality_probe(inputs["graph"], inputs["tree"], inputs["peripherals"])
    block = [("check", "totality probe"),
             ("edge groups total", _yes(probe.edges_total)),
             ("vertex groups total", _yes(probe.vertices_total))]
    block += [("anomaly", anomaly) for anomaly in probe.anomalies]
    block.append(("window", str(probe.params)))
    return {"blocks": [block]}


def parabolic_trees(inputs: dict) -> dict:
    g: GraphOfGroups = inputs["graph"]
    t, f = inputs["tree"], inputs["forest"]
    stabilizers = parabolic_tree_stabilizers(f, t, g)
    blocks = []
    for s in stabilizers:
        blocks.append([("parabolic tree", str(s.index)),
                       ("representative", str(s.representative)),
                       ("types", ", ".join(str(x) for x in s.types)),
                       ("stabilizer", _span(s.generator_text())),
                       ("loop edges", ", ".join(s.loop_edges) or "none"),
                       ("finite", _yes(s.finite)),
                       ("truncated", _yes(s.truncated)),
                       ("component", "none" if s.component is None else str(s.component)),
                       ("window", str(t.params))])
    return {"stabilizers": stabilizers, "blocks": blocks}

# =======================================================================
# Hypotheses and quasiconvexity


def check_hypotheses(inputs: dict) -> dict:
    g: GraphOfGroups = inputs["graph"]
    config: RunConfig = inputs["config"]
    if config.skip_hypotheses:
        block = [("check", "hypotheses"), ("route", "skipped"), ("note", "no soundness claim"),
                 ("status", STATUS_OK), ("window", EXACT)]
        return {"hypotheses": None, "status": STATUS_OK, "blocks": [block]}
    report = check_qc_hypotheses(g)
    blocks: List[Block] = []
    for role, checks in (("required", report.checks), ("info", report.info)):
        for c in checks:
            block = [("hypothesis", c.name), ("role", role), ("vertex", c.vertex)]
            if c.edge is not None:
                block += [("edge", c.edge), ("end", c.end)]
            block.append(("holds", _yes(c.holds)))
            if c.witness is not None:
                block.append(("witness", c.witness))
            if c.detail:
                block.append(("detail", c.detail))
            block.append(("window", EXACT))
            blocks.append(block)
    status = STATUS_OK if report.holds else STATUS_FAILED
    summary = [("check", "hypotheses"), ("route", report.route), ("status", status)]
    if report.first_failure is not None:
        summary.append(("failure", report.first_failure.describe()))
    summary.append(("window", EXACT))
    blocks.append(summary)
    return {"hypotheses": report, "status": status, "blocks": blocks}


def selected_presentation(g: GraphOfGroups, config: RunConfig) -> TamePresentation:
    if config.presentation is not None:
        return tame_presentation(g, config.presentation)
    if not g.spec.tame_presentations:
        raise ValueError("qc needs a tame_presentations section in the input")
    return tame_presentation(g, g.spec.tame_presentations[0])


def _witness_block(h: TamePresentation, witness: QuasiconvexWitness) -> Block:
    kappa = witness.kappa
    return [("witness", h.id),
            ("Lbar vertices", str(len(witness.vertices))),
            ("Lbar edges", str(len(witness.edges))),
            ("kappa", str(kappa.kappa) + (" (lower bound)" if kappa.capped else "")),
            ("distortion", f"{kappa.distortion:g}"),
            ("max geodesics per pair", str(kappa.max_geodesics)),
            ("geodesic cap", str(kappa.cap)),
            ("window", str(witness.params))]


def verify_qc(inputs: dict) -> dict:
    g: GraphOfGroups = inputs["graph"]
    config: RunConfig = inputs["config"]
    h = selected_presentation(g, config)
    verdict = verify_relative_quasiconvexity(g, h, config.windows(), config.skip_hypotheses,
                                             config.stability_step, config.max_geodesics)
    blocks = [_witness_block(h, w) for w in verdict.witnesses]
    window = verdict.witnesses[-1].params if verdict.witnesses else _config_window(config)
    blocks.append([("check", "relative quasiconvexity"),
                   ("presentation", h.id),
                   ("generators", _span([format_word(w) for w in h.generator_words()])),
                   ("verdict", verdict.text),
                   ("holds", _yes(verdict.holds)),
                   ("stable", _yes(verdict.stable)),
                   ("windows", "; ".join(str(w.params) for w in verdict.witnesses) or "none"),
                   ("window", str(window))])
    return {"verdict": verdict, "blocks": blocks}


def check_transfer(inputs: dict) -> dict:
    """
    Quasiconvexity relative to the declared peripherals against the structure extended by the undeclared
    edge groups. Without undeclared ends the extension is the identity.
    """
    g: GraphOfGroups = inputs["graph"]
    config: RunConfig = inputs["config"]
    verdict: QuasiconvexityVerdict = inputs["verdict"]
    if not verdict.witnesses:
        return {"blocks": []}
    hw = verdict.witnesses[-1]
    h = selected_presentation(g, config)
    base = declared_structure(g)
    target = hw.subtree.window.g
    if target is g:
        transfer = transfer_quasiconvexity(hw, base, base, {}, g, h)
        return {"blocks": [[("check", "transfer"), ("detail", transfer.text), ("window", str(hw.params))]]}
    ext = declared_structure(target)
    extension = check_extension(base, ext, target, config.windows())
    blocks = [[("check", "extension"),
               ("base", ", ".join(base.provenances()) or "none"),
               ("extension", ", ".join(ext.provenances())),
               ("almost malnormal", _yes(extension.malnormal)
                + (" (bounded search)" if extension.malnormal_bounded else "")),
               ("detail", extension.text),
               ("window", str(hw.params))]]
    if extension.holds:
        intersections = intersection_witnesses(target, h, ext, (hw.params.R, hw.params.L))
        transfer = transfer_quasiconvexity(hw, base, ext, intersections, target, h)
        blocks.append([("check", "transfer"),
                       ("forward", _yes(transfer.forward)),
                       ("backward", _yes(transfer.backward)),
                       ("covered", ", ".join(f"{m}@{c}" for m, c in transfer.covered) or "none"),
                       ("automatic", ", ".join(m for m, _ in transfer.automatic) or "none"),
                       ("detail", transfer.text),
                       ("window", str(hw.params))])
    return {"blocks": blocks}

# =======================================================================
# DOT exports


def _export(config: RunConfig, artifact: Artifact, name: str, suffix: str,
            witness: Optional[QuasiconvexWitness] = None) -> str:
    file_name = f"{config.command}.{name}{suffix}"
    export_dot(artifact, Path(config.out) / file_name, name, witness)
    return file_name


def _export_outputs(files: List[str]) -> dict:
    return {"files": files, "blocks": [[("export", "dot")] + [("file", name) for name in files]]}


def export_cores(inputs: dict) -> dict:
    """Core graphs of the declared peripherals and edge images of free vertex groups."""
    g: GraphOfGroups = inputs["graph"]
    config: RunConfig = inputs["config"]
    files = []
    for vertex in g.vertices.values():
        if vertex.group.kind != GroupKind.FREE:
            continue
        for p in vertex.declared_peripherals:
            files.append(_export(config, p.subgroup.core, f"core.{vertex.id}.{p.id}", inputs["file_suffix"]))
        for edge_end in g.ends_at(vertex.id):
            files.append(_export(config, edge_end.image.core, f"core.{edge_end.edge_id}.{edge_end.end}",
                                 inputs["file_suffix"]))
    return _export_outputs(files)


def export_tree(inputs: dict) -> dict:
    return _export_outputs([_export(inputs["config"], inputs["tree"], "tree", inputs["file_suffix"])])


def export_fine_graph(inputs: dict) -> dict:
    config, suffix = inputs["config"], inputs["file_suffix"]
    return _export_outputs([_export(config, inputs["fine_graph"], "K", suffix),
                            _export(config, inputs["forest"], "forest", suffix),
                            _export(config, inputs["quotient"], "Kbar", suffix)])


def export_quotient(inputs: dict) -> dict:
    return _export_outputs([_export(inputs["config"], inputs["quotient"], "Kbar", inputs["file_suffix"])])


def export_forest(inputs: dict) -> dict:
    return _export_outputs([_export(inputs["config"], inputs["forest"], "forest", inputs["file_suffix"])])


def export_witness(inputs: dict) -> dict:
    """K̄ of the largest window with L̄ highlighted, rebuilt from the window the witness was measured on."""
    verdict: QuasiconvexityVerdict = inputs["verdict"]
    if not verdict.witnesses:
        return _export_outputs([])
    witness = verdict.witnesses[-1]
    t = witness.subtree.window
    k, f = build_K_and_forest(t.g, t, t.params.L, check_malnormal=False)
    return _export_outputs([_export(inputs["config"], quotient(k, f), "Kbar", inputs["file_suffix"], witness)])

# =======================================================================


def write_report_file(config: RunConfig, blocks: Sequence[Block]) -> Path:
    path = config.report_path
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(render_report([header_block(config), *blocks]), encoding="utf-8")
    except OSError as e:
        raise IoError(f"Cannot write report {path}: {e}") from e
    logger.info(f"Wrote report {path}")
    return path


def write_report(inputs: dict) -> dict:
    config: RunConfig = inputs["config"]
    blocks = inputs["blocks"] or []
    failed = any(("status", STATUS_FAILED) in block for block in blocks)
    path = write_report_file(config, blocks)
    return {"report_path": str(path), "exit_status": 1 if failed else 0}


OPERATION_FUNCTIONS: Dict[str, Callable[[dict], dict]] = {
    function.__name__: function for function in (
        load_input, validate_graph, build_tree, build_fine_graph, count_circuits, measure_delta,
        compute_peripherals, union_minus_repeats, probe_totality, parabolic_trees, check_hypotheses,
        verify_qc, check_transfer, export_cores, export_tree, export_fine_graph, export_quotient,
        export_forest, export_witness, write_report,
    )
}
