"""End-to-end orchestration from one project configuration file.

The pipeline runs staged: sub-graphs -> dictionaries -> corpus ->
annotation -> review store; ``finalize`` then turns verified spans into
BIO, splits, and exports CoNLL plus statistics. Every stage writes its
artifact under the configured output directory and is skipped on rerun
while its outputs are newer than its inputs (unless forced). Failed
stages leave ``*.partial`` files behind; finished artifacts are moved
into place atomically, so a half-written file is never consumed.

Human review is an explicit barrier: ``run`` stops after seeding the
review store and prints the serve command; ``finalize`` requires the
store, or ``--auto-accept`` to take every automatic span as-is.
"""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from . import corpus as corpus_mod
from . import dataset as dataset_mod
from . import gazetteer as gaz
from . import kgstore, matcher as matcher_mod, report as report_mod, review as review_mod
from .errors import ConfigError, RapidNerError
from .gazetteer import Dictionary, EntityType

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EntityTypeConfig:
    name: str
    display: str
    topic_label: str | None
    topic_item_id: int | None
    relations: tuple[int, ...]
    union_with: tuple[str | int, ...]
    augment_files: tuple[str, ...]
    subtract: tuple[str, ...]


@dataclass(frozen=True)
class CorpusConfig:
    path: str
    source: str | None
    entity_type_hint: str | None


@dataclass(frozen=True)
class ProjectConfig:
    base_dir: Path
    config_path: Path
    output_dir: Path
    entity_types: tuple[EntityTypeConfig, ...]
    kg_statements: str | None
    kg_items: str | None
    kg_pages: str | None
    corpora: tuple[CorpusConfig, ...]
    caps: corpus_mod.CapConfig
    priority: tuple[str, ...]
    case_sensitive: bool
    ratios: tuple[float, float, float]
    seed: int
    stratify_by: str | None

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def types(self) -> list[EntityType]:
        return [EntityType(t.name, t.display) for t in self.entity_types]


def _load_raw_config(path: Path) -> dict:
    text = path.read_bytes()
    if path.suffix.lower() == ".json":
        return json.loads(text.decode("utf-8"))
    if path.suffix.lower() == ".toml":
        return tomllib.loads(text.decode("utf-8"))
    # no extension hint: try TOML first, then JSON
    try:
        return tomllib.loads(text.decode("utf-8"))
    except tomllib.TOMLDecodeError:
        return json.loads(text.decode("utf-8"))


def load_config(path: str | Path) -> ProjectConfig:
    """Parse and validate; raises ConfigError with per-field diagnostics."""
    config_path = Path(path).resolve()
    if not config_path.exists():
        raise ConfigError([f"config file not found: {config_path}"])
    try:
        raw = _load_raw_config(config_path)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError([f"cannot parse config: {exc}"]) from None
    problems: list[str] = []
    base_dir = config_path.parent

    raw_types = raw.get("entity_types") or []
    if not raw_types:
        problems.append("entity_types: at least one entity type is required")
    seen_names: set[str] = set()
    etypes: list[EntityTypeConfig] = []
    for i, t in enumerate(raw_types):
        name = t.get("name", "")
        try:
            EntityType(name)
        except (ValueError, TypeError):
            problems.append(f"entity_types[{i}].name: invalid name {name!r}")
            continue
        if name in seen_names:
            problems.append(f"entity_types[{i}].name: duplicate {name!r}")
            continue
        seen_names.add(name)
        topic_label = t.get("topic_label")
        topic_item_id = t.get("topic_item_id")
        if topic_label is None and topic_item_id is None:
            problems.append(
                f"entity_types[{i}]: topic_label or topic_item_id is required"
            )
        relations = tuple(
            int(r) for r in t.get("relations", list(kgstore.DEFAULT_RELATIONS))
        )
        if not relations:
            problems.append(f"entity_types[{i}].relations: must be non-empty")
        etypes.append(
            EntityTypeConfig(
                name=name,
                display=t.get("display", name.capitalize()),
                topic_label=topic_label,
                topic_item_id=topic_item_id,
                relations=relations,
                union_with=tuple(t.get("union_with", ())),
                augment_files=tuple(t.get("augment_files", ())),
                subtract=tuple(t.get("subtract", ())),
            )
        )
    for i, t in enumerate(etypes):
        for other in t.subtract:
            if other not in seen_names:
                problems.append(
                    f"entity_types[{i}].subtract: unknown entity type {other!r}"
                )

    kg = raw.get("kg", {})
    corpora_raw = raw.get("corpora") or []
    corpora: list[CorpusConfig] = []
    for i, c in enumerate(corpora_raw):
        if "path" not in c:
            problems.append(f"corpora[{i}].path: required")
            continue
        source = c.get("source")
        if source is not None:
            try:
                corpus_mod.SourceKind(source)
            except ValueError:
                problems.append(f"corpora[{i}].source: unknown source {source!r}")
        hint = c.get("entity_type_hint")
        if hint is not None and hint not in seen_names:
            problems.append(
                f"corpora[{i}].entity_type_hint: unknown entity type {hint!r}"
            )
        corpora.append(CorpusConfig(c["path"], source, hint))

    caps_raw = raw.get("caps", {})
    caps = corpus_mod.CapConfig(
        per_page_max=int(caps_raw.get("per_page_max", 10)),
        per_type_per_source_max=int(caps_raw.get("per_type_per_source_max", 10_000)),
    )
    if caps.per_page_max <= 0 or caps.per_type_per_source_max <= 0:
        problems.append("caps: limits must be positive")

    matcher_raw = raw.get("matcher", {})
    priority = tuple(matcher_raw.get("priority", [t.name for t in etypes]))
    for p in priority:
        if p not in seen_names:
            problems.append(f"matcher.priority: unknown entity type {p!r}")
    for name in seen_names:
        if name not in priority:
            problems.append(f"matcher.priority: entity type {name!r} missing")

    split_raw = raw.get("split", {})
    ratios_raw = split_raw.get("ratios", [0.8, 0.1, 0.1])
    try:
        ratios = dataset_mod.check_ratios([float(r) for r in ratios_raw])
    except (RapidNerError, ValueError, TypeError) as exc:
        problems.append(f"split.ratios: {exc}")
        ratios = (0.8, 0.1, 0.1)
    stratify_by = split_raw.get("stratify_by")
    if stratify_by not in (None, "source"):
        problems.append(f"split.stratify_by: must be omitted or 'source', got {stratify_by!r}")

    config = ProjectConfig(
        base_dir=base_dir,
        config_path=config_path,
        output_dir=(
            Path(raw["output_dir"])
            if Path(raw.get("output_dir", "out")).is_absolute()
            else base_dir / raw.get("output_dir", "out")
        ),
        entity_types=tuple(etypes),
        kg_statements=kg.get("statements"),
        kg_items=kg.get("items"),
        kg_pages=kg.get("pages"),
        corpora=tuple(corpora),
        caps=caps,
        priority=priority,
        case_sensitive=bool(matcher_raw.get("case_sensitive", False)),
        ratios=ratios,
        seed=int(split_raw.get("seed", 0)),
        stratify_by=stratify_by,
    )

    if config.entity_types and config.kg_statements is None:
        problems.append("kg.statements: required")
    if config.entity_types and config.kg_items is None:
        problems.append("kg.items: required")
    for label, value in (
        ("kg.statements", config.kg_statements),
        ("kg.items", config.kg_items),
        ("kg.pages", config.kg_pages),
    ):
        if value is not None and not config.resolve(value).exists():
            problems.append(f"{label}: file not found: {config.resolve(value)}")
    for i, c in enumerate(config.corpora):
        if not config.resolve(c.path).exists():
            problems.append(f"corpora[{i}].path: file not found: {config.resolve(c.path)}")
    for i, t in enumerate(config.entity_types):
        for a in t.augment_files:
            if not config.resolve(a).exists():
                problems.append(
                    f"entity_types[{i}].augment_files: file not found: {config.resolve(a)}"
                )
    if not config.corpora:
        problems.append("corpora: at least one corpus is required")

    if problems:
        raise ConfigError(problems)
    return config


def validate_config(path: str | Path) -> list[str]:
    """Schema and cross-reference diagnostics; empty list means valid."""
    try:
        load_config(path)
    except ConfigError as exc:
        return exc.problems
    return []


# --------------------------------------------------------------------------
# stage machinery

class StageError(RapidNerError):
    def __init__(self, stage: str, path: Path | None, cause: Exception):
        self.stage = stage
        self.path = path
        self.cause = cause
        where = f" ({path})" if path is not None else ""
        super().__init__(f"stage {stage!r} failed{where}: {cause}")


@dataclass
class StageResult:
    name: str
    skipped: bool
    outputs: list[Path] = field(default_factory=list)
    info: dict = field(default_factory=dict)


@dataclass
class PipelineReport:
    stages: list[StageResult] = field(default_factory=list)

    def stage(self, name: str) -> StageResult:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)


def _fresh(inputs: list[Path], outputs: list[Path]) -> bool:
    if not outputs or not all(p.exists() for p in outputs):
        return False
    newest_input = max((p.stat().st_mtime for p in inputs if p.exists()), default=0.0)
    oldest_output = min(p.stat().st_mtime for p in outputs)
    return oldest_output >= newest_input


def _atomic_write_text(path: Path, content: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    partial = path.with_name(path.name + ".partial")
    partial.write_text(content, encoding="utf-8", newline="\n")
    partial.replace(path)


def _run_stage(
    report: PipelineReport,
    name: str,
    inputs: list[Path],
    outputs: list[Path],
    force: bool,
    action: Callable[[], dict],
) -> StageResult:
    if not force and _fresh(inputs, outputs):
        log.info("stage %s: up to date, skipping", name)
        result = StageResult(name, skipped=True, outputs=outputs)
        report.stages.append(result)
        return result
    log.info("stage %s: running", name)
    try:
        info = action()
    except RapidNerError as exc:
        raise StageError(name, outputs[0] if outputs else None, exc) from exc
    result = StageResult(name, skipped=False, outputs=outputs, info=info)
    report.stages.append(result)
    return result


# --------------------------------------------------------------------------
# the pipeline

def _subgraph_paths(config: ProjectConfig, t: EntityTypeConfig) -> list[Path]:
    base = config.output_dir / "kg"
    paths = [base / f"{t.name}.subgraph.json"]
    paths += [base / f"{t.name}.union{i}.subgraph.json" for i in range(len(t.union_with))]
    return paths


def _dict_path(config: ProjectConfig, name: str) -> Path:
    return config.output_dir / "dicts" / f"{name}.json"


def _sentences_path(config: ProjectConfig) -> Path:
    return config.output_dir / "corpus" / "sentences.jsonl"


def _annotated_path(config: ProjectConfig) -> Path:
    return config.output_dir / "annotate" / "annotated.jsonl"


def journal_path(config: ProjectConfig) -> Path:
    return config.output_dir / "review.journal"


def _resolve_topic_ref(
    ref: str | int, items: kgstore.ItemIndex, what: str
) -> int:
    if isinstance(ref, int):
        return ref
    if isinstance(ref, str) and ref.isdigit():
        return int(ref)
    return kgstore.resolve_topic(items, str(ref))


def run_pipeline(
    config: ProjectConfig,
    *,
    force: bool = False,
    lenient: bool = False,
    auto_accept: bool = False,
    threads: int = 1,
) -> PipelineReport:
    """Execute all stages up to (and including) the review-store barrier."""
    report = PipelineReport()
    config.output_dir.mkdir(parents=True, exist_ok=True)
    strict = not lenient
    cfg_file = config.config_path

    statements_path = config.resolve(config.kg_statements or "")
    items_path = config.resolve(config.kg_items or "")
    kg_inputs = [cfg_file, statements_path, items_path]

    # one shared lazy KG load: only pay for it when some stage below runs
    loaded: dict[str, object] = {}

    def kg_store() -> kgstore.TripleStore:
        if "store" not in loaded:
            relations = {r for t in config.entity_types for r in t.relations}
            log.info("loading statements from %s", statements_path)
            loaded["store"] = kgstore.load_statements(
                statements_path, relations, strict=strict
            )
        return loaded["store"]  # type: ignore[return-value]

    def item_index() -> kgstore.ItemIndex:
        if "items" not in loaded:
            log.info("loading items from %s", items_path)
            loaded["items"] = kgstore.load_items(items_path, strict=strict)
        return loaded["items"]  # type: ignore[return-value]

    # -- sub-graphs ---------------------------------------------------
    for t in config.entity_types:
        paths = _subgraph_paths(config, t)

        def build_subgraphs(t=t, paths=paths) -> dict:
            topics: list[str | int] = [
                t.topic_item_id if t.topic_item_id is not None else t.topic_label  # type: ignore[list-item]
            ]
            topics += list(t.union_with)
            info = {}
            for path, topic_ref in zip(paths, topics):
                topic = _resolve_topic_ref(topic_ref, item_index(), t.name)
                subgraph = kgstore.extract_subgraph(kg_store(), topic, t.relations)
                _atomic_write_text(path, subgraph.to_json())
                info[path.name] = {
                    str(rel): len(heads)
                    for rel, heads in subgraph.heads_by_relation.items()
                }
            return info

        _run_stage(
            report, f"subgraph:{t.name}", kg_inputs, paths, force, build_subgraphs
        )

    # -- pages (optional convenience artifact) -------------------------
    if config.kg_pages is not None:
        pages_path = config.resolve(config.kg_pages)
        for t in config.entity_types:
            out_path = config.output_dir / "kg" / f"{t.name}.pages.csv"

            def build_pages(t=t, out_path=out_path) -> dict:
                pages = kgstore.load_pages(pages_path, strict=strict)
                lines = ["item_id,page_id,title"]
                count = 0
                for sub_path in _subgraph_paths(config, t):
                    subgraph = kgstore.SubGraph.from_json(
                        sub_path.read_text(encoding="utf-8")
                    )
                    for heads in subgraph.heads_by_relation.values():
                        for head in sorted(heads):
                            page = pages.by_item(head)
                            if page is not None:
                                title = page.title.replace('"', '""')
                                lines.append(f'{head},{page.page_id},"{title}"')
                                count += 1
                _atomic_write_text(out_path, "\n".join(lines) + "\n")
                return {"pages": count}

            _run_stage(
                report,
                f"pages:{t.name}",
                kg_inputs + [pages_path] + _subgraph_paths(config, t),
                [out_path],
                force,
                build_pages,
            )

    # -- dictionaries ---------------------------------------------------
    dict_inputs = [cfg_file, items_path]
    for t in config.entity_types:
        dict_inputs += _subgraph_paths(config, t)
        dict_inputs += [config.resolve(a) for a in t.augment_files]
    dict_outputs = [_dict_path(config, t.name) for t in config.entity_types]

    def build_dictionaries() -> dict:
        base_dicts: dict[str, Dictionary] = {}
        for t in config.entity_types:
            etype = EntityType(t.name, t.display)
            merged: Dictionary | None = None
            for sub_path in _subgraph_paths(config, t):
                subgraph = kgstore.SubGraph.from_json(
                    sub_path.read_text(encoding="utf-8")
                )
                part = gaz.build_dictionary(subgraph, item_index(), etype)
                merged = part if merged is None else gaz.union(merged, part, etype)
            assert merged is not None
            for augment in t.augment_files:
                merged = gaz.augment_from_list(merged, config.resolve(augment))
            base_dicts[t.name] = merged
        info = {}
        for t in config.entity_types:
            final = base_dicts[t.name]
            for other in t.subtract:
                final = gaz.subtract(final, base_dicts[other])
            gaz.save_dictionary(final, _dict_path(config, t.name))
            info[t.name] = len(final)
        return info

    _run_stage(report, "dictionaries", dict_inputs, dict_outputs, force, build_dictionaries)

    # -- corpus ---------------------------------------------------------
    corpus_inputs = [cfg_file] + [config.resolve(c.path) for c in config.corpora]
    sentences_path = _sentences_path(config)

    def ingest_corpora() -> dict:
        def documents() -> Iterable[corpus_mod.RawDocument]:
            for c in config.corpora:
                default_source = (
                    corpus_mod.SourceKind(c.source) if c.source else None
                )
                for doc in corpus_mod.read_documents(
                    config.resolve(c.path), default_source
                ):
                    # config-level hint fills gaps in the dump
                    if doc.entity_type_hint is None and c.entity_type_hint:
                        doc = corpus_mod.RawDocument(
                            doc_id=doc.doc_id,
                            source=doc.source,
                            sections=doc.sections,
                            entity_type_hint=c.entity_type_hint,
                            page_id=doc.page_id,
                        )
                    yield doc

        ingest_report = corpus_mod.IngestReport()
        sentences = corpus_mod.ingest(documents(), config.caps, report=ingest_report)
        sentences_path.parent.mkdir(parents=True, exist_ok=True)
        partial = sentences_path.with_name(sentences_path.name + ".partial")
        corpus_mod.write_sentences(sentences, partial)
        partial.replace(sentences_path)
        return {
            "documents": ingest_report.documents,
            "sentences": ingest_report.sentences,
            "skipped_no_intro": ingest_report.skipped_no_intro,
        }

    _run_stage(report, "corpus", corpus_inputs, [sentences_path], force, ingest_corpora)

    # -- annotate ---------------------------------------------------------
    annotated_path = _annotated_path(config)

    def annotate_all() -> dict:
        dicts = [gaz.load_dictionary(p) for p in dict_outputs]
        m = matcher_mod.compile(
            dicts, config.priority, case_sensitive=config.case_sensitive
        )
        sentences = corpus_mod.read_sentences(sentences_path)
        if threads > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=threads) as pool:
                annotated = list(pool.map(m.annotate, sentences))
        else:
            annotated = [m.annotate(s) for s in sentences]
        partial = annotated_path.with_name(annotated_path.name + ".partial")
        annotated_path.parent.mkdir(parents=True, exist_ok=True)
        matcher_mod.write_annotated(annotated, partial)
        partial.replace(annotated_path)
        spans = sum(len(a.spans) for a in annotated)
        return {"sentences": len(annotated), "spans": spans}

    _run_stage(
        report,
        "annotate",
        [cfg_file, sentences_path] + dict_outputs,
        [annotated_path],
        force,
        annotate_all,
    )

    # -- review barrier -----------------------------------------------------
    journal = journal_path(config)

    def init_review() -> dict:
        annotated = matcher_mod.read_annotated(annotated_path)
        partial = journal.with_name(journal.name + ".partial")
        if partial.exists():
            partial.unlink()
        store = review_mod.init_store(
            annotated, partial, entity_types=config.types(), force=True
        )
        store.close()
        partial.replace(journal)
        return {"records": len(annotated)}

    _run_stage(
        report, "review-init", [cfg_file, annotated_path], [journal], force, init_review
    )

    if auto_accept:
        with review_mod.open_store(journal) as store:
            pending = store.accept_all_pending()
        report.stages.append(
            StageResult("auto-accept", skipped=False, outputs=[journal], info={"accepted": pending})
        )
    else:
        log.info(
            "review store ready: rapidner review serve --store %s --bind 127.0.0.1:8686",
            journal,
        )
    return report


def finalize(
    config: ProjectConfig,
    *,
    force: bool = False,
    auto_accept: bool = False,
) -> PipelineReport:
    """Verified spans -> BIO -> split -> CoNLL + stats + figures."""
    report = PipelineReport()
    journal = journal_path(config)
    if not journal.exists():
        raise ConfigError(
            [f"review store not found at {journal}; run the pipeline first"]
        )
    dataset_dir = config.output_dir / "dataset"
    outputs = [
        dataset_dir / "train.conll",
        dataset_dir / "dev.conll",
        dataset_dir / "test.conll",
        dataset_dir / "metadata.json",
        dataset_dir / "verified.jsonl",
        dataset_dir / "stats.json",
        dataset_dir / "stats.tsv",
    ]

    def do_finalize() -> dict:
        with review_mod.open_store(journal) as store:
            if auto_accept:
                store.accept_all_pending()
            verified = store.export_verified()
        tagged = [dataset_mod.spans_to_bio(a) for a in verified]
        if config.stratify_by == "source":
            split = dataset_mod.stratified_split_dataset(
                tagged, config.ratios, config.seed
            )
        else:
            split = dataset_mod.split_dataset(tagged, config.ratios, config.seed)
        stats = dataset_mod.compute_stats(tagged)
        dataset_dir.mkdir(parents=True, exist_ok=True)
        dataset_mod.export_split(split, dataset_dir, stats=stats)
        matcher_mod.write_annotated(verified, dataset_dir / "verified.jsonl")
        _atomic_write_text(
            dataset_dir / "stats.json",
            json.dumps(stats.to_dict(), indent=2) + "\n",
        )
        _atomic_write_text(dataset_dir / "stats.tsv", report_mod.stats_tsv(stats))
        figures = report_mod.render_stats_figures(stats, dataset_dir / "figures")
        return {
            "verified": len(verified),
            "train": len(split.train),
            "dev": len(split.dev),
            "test": len(split.test),
            "figures": [str(f) for f in figures],
        }

    _run_stage(
        report,
        "finalize",
        [config.config_path, journal],
        outputs,
        force,
        do_finalize,
    )
    return report
