"""Command-line interface wiring all pipeline pieces together."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from . import __version__
from . import corpus as corpus_mod
from . import dataset as dataset_mod
from . import gazetteer as gaz
from . import kgstore
from . import matcher as matcher_mod
from . import pipeline as pipeline_mod
from . import quality as quality_mod
from . import report as report_mod
from . import review as review_mod
from .errors import ConfigError, RapidNerError


def _fail(message: str) -> "click.exceptions.ClickException":
    return click.ClickException(message)


def _parse_relations(text: str) -> set[int] | None:
    if text.strip().lower() == "all":
        return None
    try:
        return {kgstore.parse_relation(tok) for tok in text.split(",") if tok.strip()}
    except ValueError as exc:
        raise _fail(str(exc)) from None


@click.group()
@click.version_option(__version__)
@click.option("--log-level", default="warning", show_default=True,
              type=click.Choice(["debug", "info", "warning", "error"]))
@click.option("--lenient", is_flag=True,
              help="Skip malformed input rows (with a counter) instead of aborting.")
def main(log_level: str, lenient: bool) -> None:
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )
    ctx = click.get_current_context()
    ctx.ensure_object(dict)
    ctx.obj["strict"] = not lenient


# --------------------------------------------------------------------------
# kg

@main.group()
def kg() -> None:
    """Knowledge-graph loading and sub-graph extraction."""


@kg.command("extract")
@click.option("--statements", "statements_path", required=True, type=click.Path(exists=True))
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--topic", "topic_label", default=None, help="Exact English label of the topic item.")
@click.option("--topic-id", "topic_id", default=None, type=int,
              help="Explicit topic item id (overrides --topic).")
@click.option("--relations", default="31,279", show_default=True,
              help="Comma-separated property ids (31 or P31 forms), or 'all'.")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def kg_extract(ctx, statements_path, items_path, topic_label, topic_id, relations, out_path):
    """Extract the per-relation head sets pointing at one topic item."""
    strict = ctx.obj["strict"]
    rels = _parse_relations(relations)
    if rels is None:
        raise _fail("sub-graph extraction needs an explicit relation set")
    try:
        items = kgstore.load_items(items_path, strict=strict)
        topic = topic_id if topic_id is not None else kgstore.resolve_topic(
            items, topic_label or ""
        )
        store = kgstore.load_statements(statements_path, rels, strict=strict)
        subgraph = kgstore.extract_subgraph(store, topic, sorted(rels))
    except RapidNerError as exc:
        raise _fail(str(exc)) from None
    Path(out_path).write_text(subgraph.to_json(), encoding="utf-8")
    sizes = {f"P{r}": len(h) for r, h in subgraph.heads_by_relation.items()}
    click.echo(f"topic item {topic}: {sizes} -> {out_path}")


# --------------------------------------------------------------------------
# dict

@main.group(name="dict")
def dict_group() -> None:
    """Build and combine entity-type dictionaries."""


@dict_group.command("build")
@click.option("--subgraph", "subgraph_path", required=True, type=click.Path(exists=True))
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--type", "type_name", required=True)
@click.option("--display", default="")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_context
def dict_build(ctx, subgraph_path, items_path, type_name, display, out_path):
    strict = ctx.obj["strict"]
    try:
        etype = gaz.EntityType(type_name, display)
        subgraph = kgstore.SubGraph.from_json(
            Path(subgraph_path).read_text(encoding="utf-8")
        )
        items = kgstore.load_items(items_path, strict=strict)
        build_report = gaz.BuildReport()
        d = gaz.build_dictionary(subgraph, items, etype, report=build_report)
    except (RapidNerError, ValueError) as exc:
        raise _fail(str(exc)) from None
    gaz.save_dictionary(d, out_path)
    click.echo(
        f"{etype.name}: {len(d)} entries "
        f"({build_report.unresolved_heads} unresolved heads, "
        f"{build_report.rejected_surfaces} rejected) -> {out_path}"
    )


@dict_group.command("union")
@click.option("--a", "a_path", required=True, type=click.Path(exists=True))
@click.option("--b", "b_path", required=True, type=click.Path(exists=True))
@click.option("--type", "type_name", default=None, help="Entity type of the result (defaults to a's).")
@click.option("--out", "out_path", required=True, type=click.Path())
def dict_union(a_path, b_path, type_name, out_path):
    a = gaz.load_dictionary(a_path)
    b = gaz.load_dictionary(b_path)
    etype = gaz.EntityType(type_name) if type_name else None
    result = gaz.union(a, b, etype)
    gaz.save_dictionary(result, out_path)
    click.echo(f"{len(a)} + {len(b)} -> {len(result)} entries -> {out_path}")


@dict_group.command("subtract")
@click.option("--a", "a_path", required=True, type=click.Path(exists=True))
@click.option("--b", "b_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def dict_subtract(a_path, b_path, out_path):
    a = gaz.load_dictionary(a_path)
    b = gaz.load_dictionary(b_path)
    result = gaz.subtract(a, b)
    gaz.save_dictionary(result, out_path)
    click.echo(f"{len(a)} - {len(b)} -> {len(result)} entries -> {out_path}")


@dict_group.command("augment")
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
@click.option("--list", "list_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def dict_augment(dict_path, list_path, out_path):
    d = gaz.load_dictionary(dict_path)
    result = gaz.augment_from_list(d, list_path)
    gaz.save_dictionary(result, out_path)
    click.echo(f"{len(d)} + list -> {len(result)} entries -> {out_path}")


# --------------------------------------------------------------------------
# corpus

@main.group()
def corpus() -> None:
    """Corpus cleaning, splitting and capped ingestion."""


@corpus.command("ingest")
@click.option("--in", "in_paths", required=True, multiple=True, type=click.Path(exists=True))
@click.option("--per-page-max", default=10, show_default=True)
@click.option("--per-type-max", default=10_000, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def corpus_ingest(in_paths, per_page_max, per_type_max, out_path):
    caps = corpus_mod.CapConfig(
        per_page_max=per_page_max, per_type_per_source_max=per_type_max
    )

    def docs():
        for path in in_paths:
            yield from corpus_mod.read_documents(path)

    ingest_report = corpus_mod.IngestReport()
    try:
        sentences = corpus_mod.ingest(docs(), caps, report=ingest_report)
    except (RapidNerError, ValueError) as exc:
        raise _fail(str(exc)) from None
    corpus_mod.write_sentences(sentences, out_path)
    click.echo(
        f"{ingest_report.documents} documents -> {len(sentences)} sentences "
        f"({ingest_report.skipped_no_intro} skipped without intro) -> {out_path}"
    )


# --------------------------------------------------------------------------
# annotate

@main.command("annotate")
@click.option("--dicts", "dict_paths", required=True,
              help="Comma-separated dictionary JSON files.")
@click.option("--priority", default=None,
              help="Comma-separated entity type order for exact ties (default: dict order).")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--em-markup", "markup_path", default=None, type=click.Path(),
              help="Also write one <em>-marked line per sentence.")
@click.option("--case-sensitive", is_flag=True)
@click.option("--threads", default=1, show_default=True)
def annotate_cmd(dict_paths, priority, in_path, out_path, markup_path, case_sensitive, threads):
    """Annotate sentences with leftmost-longest dictionary spans."""
    dicts = [gaz.load_dictionary(p.strip()) for p in dict_paths.split(",") if p.strip()]
    order = (
        [p.strip() for p in priority.split(",") if p.strip()]
        if priority
        else [d.entity_type.name for d in dicts]
    )
    try:
        m = matcher_mod.compile(dicts, order, case_sensitive=case_sensitive)
    except RapidNerError as exc:
        raise _fail(str(exc)) from None
    sentences = corpus_mod.read_sentences(in_path)
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            annotated = list(pool.map(m.annotate, sentences))
    else:
        annotated = [m.annotate(s) for s in sentences]
    matcher_mod.write_annotated(annotated, out_path)
    if markup_path:
        with Path(markup_path).open("w", encoding="utf-8") as handle:
            for a in annotated:
                handle.write(matcher_mod.to_em_markup(a) + "\n")
    total = sum(len(a.spans) for a in annotated)
    conflicts = sum(len(a.conflicts) for a in annotated)
    click.echo(
        f"{len(annotated)} sentences, {total} spans, {conflicts} conflicts -> {out_path}"
    )


# --------------------------------------------------------------------------
# review

@main.group()
def review() -> None:
    """Human verification of automatic spans."""


@review.command("init")
@click.option("--annotated", "annotated_path", required=True, type=click.Path(exists=True))
@click.option("--store", "store_path", required=True, type=click.Path())
@click.option("--dicts", "dict_paths", default=None,
              help="Comma-separated dictionaries, used for the entity-type config.")
@click.option("--force", is_flag=True)
def review_init(annotated_path, store_path, dict_paths, force):
    annotated = matcher_mod.read_annotated(annotated_path)
    types: list[gaz.EntityType] = []
    if dict_paths:
        types = [
            gaz.load_dictionary(p.strip()).entity_type
            for p in dict_paths.split(",")
            if p.strip()
        ]
    else:
        names = sorted({s.entity_type for a in annotated for s in a.spans})
        types = [gaz.EntityType(n) for n in names]
    try:
        store = review_mod.init_store(
            annotated, store_path, entity_types=types, force=force
        )
    except RapidNerError as exc:
        raise _fail(str(exc)) from None
    store.close()
    click.echo(f"{len(annotated)} records seeded -> {store_path}")


@review.command("serve")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--bind", default="127.0.0.1:8686", show_default=True)
@click.option("--ui", "ui_dir", default=None, type=click.Path(),
              help="Directory with the built review UI bundle.")
def review_serve(store_path, bind, ui_dir):
    from .webapi import serve

    store = review_mod.open_store(store_path)
    if ui_dir is None and Path("frontend/dist").is_dir():
        ui_dir = "frontend/dist"
    click.echo(f"serving review store {store_path} at http://{bind}/")
    serve(store, bind, ui_dir=ui_dir)


@review.command("compact")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
def review_compact(store_path):
    with review_mod.open_store(store_path) as store:
        store.compact()
        click.echo(f"compacted {store_path} ({len(store)} records)")


@review.command("accept-all")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--annotator", default="auto", show_default=True)
def review_accept_all(store_path, annotator):
    with review_mod.open_store(store_path) as store:
        count = store.accept_all_pending(annotator)
        click.echo(f"accepted {count} pending records")


# --------------------------------------------------------------------------
# export / stats / agreement / eval

def _tagged_from_annotated(path: str) -> list[dataset_mod.TaggedSentence]:
    annotated = matcher_mod.read_annotated(path)
    try:
        return [dataset_mod.spans_to_bio(a) for a in annotated]
    except RapidNerError as exc:
        raise _fail(str(exc)) from None


@main.command("export")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True),
              help="Annotated (verified) JSONL.")
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--stratify-by", "stratify", default=None, type=click.Choice(["source"]))
@click.option("--out-dir", "out_dir", required=True, type=click.Path())
def export_cmd(in_path, ratios, seed, stratify, out_dir):
    """Convert spans to BIO, split, and write CoNLL files."""
    try:
        parts = tuple(float(r) for r in ratios.split(","))
        tagged = _tagged_from_annotated(in_path)
        if stratify == "source":
            split = dataset_mod.stratified_split_dataset(tagged, parts, seed)
        else:
            split = dataset_mod.split_dataset(tagged, parts, seed)
        stats = dataset_mod.compute_stats(tagged)
        written = dataset_mod.export_split(split, out_dir, stats=stats)
    except RapidNerError as exc:
        raise _fail(str(exc)) from None
    click.echo(
        f"train/dev/test = {len(split.train)}/{len(split.dev)}/{len(split.test)} "
        f"-> {written['train'].parent}"
    )


@main.command("stats")
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="table", show_default=True,
              type=click.Choice(["table", "json", "tsv"]))
@click.option("--figures-dir", "figures_dir", default=None, type=click.Path(),
              help="Also render bar-chart PNGs into this directory.")
def stats_cmd(in_path, fmt, figures_dir):
    """Token/entity/sentence counts per entity type and source."""
    tagged = _tagged_from_annotated(in_path)
    stats = dataset_mod.compute_stats(tagged)
    if fmt == "table":
        click.echo(report_mod.stats_table(stats), nl=False)
    elif fmt == "tsv":
        click.echo(report_mod.stats_tsv(stats), nl=False)
    else:
        click.echo(json.dumps(stats.to_dict(), indent=2))
    if figures_dir:
        written = report_mod.render_stats_figures(stats, figures_dir)
        click.echo(f"figures: {', '.join(str(w) for w in written)}", err=True)


@main.command("agreement")
@click.option("--gold", "gold_paths", required=True, multiple=True,
              type=click.Path(exists=True),
              help="One annotated JSONL per annotator (repeat the flag).")
@click.option("--unit", default="token", show_default=True,
              type=click.Choice(["token", "span"]))
@click.option("--figure", "figure_path", default=None, type=click.Path(),
              help="Render a pairwise-kappa heatmap PNG.")
def agreement_cmd(gold_paths, unit, figure_path):
    """Cohen's kappa per annotator pair plus Fleiss' kappa."""
    if len(gold_paths) < 2:
        raise _fail("need at least two --gold files")
    annotations = [
        (Path(p).stem, matcher_mod.read_annotated(p)) for p in gold_paths
    ]
    try:
        agreement = quality_mod.agreement_report(annotations, unit=unit)
    except RapidNerError as exc:
        raise _fail(str(exc)) from None
    click.echo(json.dumps(agreement.to_dict(), indent=2))
    if figure_path:
        report_mod.render_agreement_figure(agreement, figure_path)
        click.echo(f"figure: {figure_path}", err=True)


@main.command("eval")
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="table", show_default=True,
              type=click.Choice(["table", "json"]))
def eval_cmd(gold_path, pred_path, fmt):
    """Span-level exact-match precision/recall/F1 per entity type."""
    gold = matcher_mod.read_annotated(gold_path)
    pred = matcher_mod.read_annotated(pred_path)
    try:
        scores = quality_mod.span_prf(gold, pred)
    except RapidNerError as exc:
        raise _fail(str(exc)) from None
    if fmt == "table":
        click.echo(report_mod.eval_table(scores), nl=False)
    else:
        click.echo(json.dumps({k: v.to_dict() for k, v in scores.items()}, indent=2))


# --------------------------------------------------------------------------
# run / finalize / validate

@main.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--force", is_flag=True, help="Rerun stages even if their outputs are fresh.")
@click.option("--auto-accept", is_flag=True,
              help="Accept every automatic span instead of waiting for review.")
@click.option("--threads", default=1, show_default=True)
@click.pass_context
def run_cmd(ctx, config_path, force, auto_accept, threads):
    """Run all pipeline stages up to the human-review barrier."""
    try:
        config = pipeline_mod.load_config(config_path)
        pipe_report = pipeline_mod.run_pipeline(
            config,
            force=force,
            lenient=not ctx.obj["strict"],
            auto_accept=auto_accept,
            threads=threads,
        )
    except ConfigError as exc:
        raise _fail("invalid config:\n  " + "\n  ".join(exc.problems)) from None
    except pipeline_mod.StageError as exc:
        raise _fail(str(exc)) from None
    for stage in pipe_report.stages:
        marker = "skipped" if stage.skipped else "ran"
        click.echo(f"{stage.name}: {marker} {stage.info if stage.info else ''}".rstrip())
    if not auto_accept:
        click.echo(
            "review store ready; next: rapidner review serve "
            f"--store {pipeline_mod.journal_path(config)}"
        )


@main.command("finalize")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--force", is_flag=True)
@click.option("--auto-accept", is_flag=True,
              help="Accept any still-pending records before exporting.")
def finalize_cmd(config_path, force, auto_accept):
    """Convert verified spans to BIO, split, export CoNLL and statistics."""
    try:
        config = pipeline_mod.load_config(config_path)
        pipe_report = pipeline_mod.finalize(config, force=force, auto_accept=auto_accept)
    except ConfigError as exc:
        raise _fail("invalid config:\n  " + "\n  ".join(exc.problems)) from None
    except pipeline_mod.StageError as exc:
        raise _fail(str(exc)) from None
    for stage in pipe_report.stages:
        marker = "skipped" if stage.skipped else "ran"
        click.echo(f"{stage.name}: {marker} {stage.info if stage.info else ''}".rstrip())


@main.command("validate")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def validate_cmd(config_path):
    """Check the config file without running anything."""
    problems = pipeline_mod.validate_config(config_path)
    if problems:
        for problem in problems:
            click.echo(f"error: {problem}")
        sys.exit(1)
    click.echo("config ok")


if __name__ == "__main__":
    main()
