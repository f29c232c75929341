"""rapidner: build NER datasets from a knowledge graph and raw text corpora.

The pipeline: extract topic sub-graphs from a KG dump, turn head entities
into per-type surface-form dictionaries, ingest and clean text corpora,
annotate entity-mention spans with a compiled multi-pattern matcher,
verify spans with a human-review service, and export a BIO-tagged CoNLL
dataset with quality metrics.
"""

__version__ = "0.1.0"

from .corpus import CapConfig, RawDocument, Section, Sentence, SourceKind, clean_text, ingest, split_sentences
from .dataset import (
    DatasetSplit,
    StatsReport,
    TaggedSentence,
    Token,
    bio_to_spans,
    compute_stats,
    spans_to_bio,
    split_dataset,
    tokenize,
    write_conll,
)
from .gazetteer import (
    DictEntry,
    Dictionary,
    EntityType,
    augment_from_list,
    build_dictionary,
    normalize_entry,
    subtract,
    union,
)
from .kgstore import (
    ItemIndex,
    ItemRecord,
    PageIndex,
    PageRecord,
    SubGraph,
    Triple,
    TripleStore,
    extract_subgraph,
    load_items,
    load_pages,
    load_statements,
    resolve_topic,
)
from .matcher import (
    AnnotatedSentence,
    ConflictNote,
    Matcher,
    Span,
    compile,
    from_em_markup,
    to_em_markup,
)
from .quality import agreement_report, cohen_kappa, fleiss_kappa, span_prf
from .review import ReviewRecord, ReviewStore, init_store, open_store

__all__ = [name for name in dir() if not name.startswith("_")]
