"""Rendering of statistics and agreement reports: text tables, TSV, figures.

Figures are written as PNG files next to the delimited output; matplotlib
runs with the Agg backend so this works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .dataset import StatsReport
from .quality import AgreementReport, PRF


def stats_table(report: StatsReport) -> str:
    """Fixed-width table: one row per entity type, token/entity/sentence cells."""
    sources = report.sources()
    header = ["type"] + [f"{s}(tok/ent/sent)" for s in sources] + ["total(tok/ent/sent)"]
    rows: list[list[str]] = []
    for etype in report.entity_types():
        row = [etype]
        for source in sources:
            cell = report.cell(etype, source)
            row.append(f"{cell.entity_tokens}/{cell.entities}/{cell.sentences}")
        total = report.row_total(etype)
        row.append(f"{total.entity_tokens}/{total.entities}/{total.sentences}")
        rows.append(row)
    totals = report.totals()
    rows.append(
        ["TOTAL"]
        + ["" for _ in sources]
        + [f"{totals.entity_tokens}/{totals.entities}/{totals.sentences}"]
    )
    widths = [
        max(len(header[c]), *(len(r[c]) for r in rows)) for c in range(len(header))
    ]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def stats_tsv(report: StatsReport) -> str:
    """Delimited form: one row per (entity type, source) cell plus totals."""
    lines = ["entity_type\tsource\tentity_tokens\tentities\tsentences"]
    for (etype, source), cell in sorted(report.cells.items()):
        lines.append(
            f"{etype}\t{source}\t{cell.entity_tokens}\t{cell.entities}\t{cell.sentences}"
        )
    totals = report.totals()
    lines.append(
        f"TOTAL\tall\t{totals.entity_tokens}\t{totals.entities}\t{totals.sentences}"
    )
    return "\n".join(lines) + "\n"


def render_stats_figures(report: StatsReport, out_dir: str | Path) -> list[Path]:
    """Bar charts of entities and entity tokens per type, grouped by source."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    types = report.entity_types()
    sources = report.sources()
    written: list[Path] = []
    if not types:
        return written

    for metric, label, filename in (
        ("entities", "entities", "entities_per_type.png"),
        ("entity_tokens", "entity tokens", "entity_tokens_per_type.png"),
        ("sentences", "sentences with entities", "sentences_per_type.png"),
    ):
        fig, ax = plt.subplots(figsize=(8, 4.5))
        width = 0.8 / max(len(sources), 1)
        for i, source in enumerate(sources):
            values = [
                getattr(report.cell(etype, source), metric) for etype in types
            ]
            positions = [t + i * width for t in range(len(types))]
            ax.bar(positions, values, width=width, label=source)
        ax.set_xticks([t + width * (len(sources) - 1) / 2 for t in range(len(types))])
        ax.set_xticklabels(types, rotation=30, ha="right")
        ax.set_ylabel(label)
        ax.set_title(f"{label} per entity type")
        ax.legend()
        fig.tight_layout()
        path = out / filename
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def agreement_table(report: AgreementReport) -> str:
    """Pairwise kappas as percentages, one row per annotator pair."""
    lines = [f"unit: {report.unit}   items: {report.items}"]
    for (a, b), kappa in sorted(report.pairwise.items()):
        lines.append(f"{a} & {b}: {kappa * 100:.1f}%")
    if report.fleiss is not None:
        lines.append(f"Fleiss: {report.fleiss * 100:.1f}%")
    return "\n".join(lines) + "\n"


def render_agreement_figure(report: AgreementReport, path: str | Path) -> Path:
    """Heatmap of pairwise Cohen's kappa."""
    annotators = sorted({a for pair in report.pairwise for a in pair})
    size = len(annotators)
    grid = [[1.0] * size for _ in range(size)]
    index = {a: i for i, a in enumerate(annotators)}
    for (a, b), kappa in report.pairwise.items():
        grid[index[a]][index[b]] = kappa
        grid[index[b]][index[a]] = kappa
    fig, ax = plt.subplots(figsize=(4 + size * 0.4, 3.5 + size * 0.4))
    image = ax.imshow(grid, vmin=-1.0, vmax=1.0, cmap="RdYlGn")
    ax.set_xticks(range(size))
    ax.set_yticks(range(size))
    ax.set_xticklabels(annotators, rotation=45, ha="right")
    ax.set_yticklabels(annotators)
    for i in range(size):
        for j in range(size):
            ax.text(j, i, f"{grid[i][j] * 100:.1f}", ha="center", va="center", fontsize=8)
    fig.colorbar(image, ax=ax, label="Cohen's kappa")
    ax.set_title("pairwise agreement")
    fig.tight_layout()
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120)
    plt.close(fig)
    return out


def eval_table(scores: dict[str, PRF]) -> str:
    """Per-type precision/recall/F1 table in percent."""
    header = ["type", "P", "R", "F1", "TP", "FP", "FN"]
    rows = []
    for etype, prf in scores.items():
        if etype == "micro":
            continue
        rows.append(
            [
                etype,
                f"{prf.precision * 100:.2f}",
                f"{prf.recall * 100:.2f}",
                f"{prf.f1 * 100:.2f}",
                str(prf.tp),
                str(prf.fp),
                str(prf.fn),
            ]
        )
    micro = scores.get("micro")
    if micro is not None:
        rows.append(
            [
                "micro",
                f"{micro.precision * 100:.2f}",
                f"{micro.recall * 100:.2f}",
                f"{micro.f1 * 100:.2f}",
                str(micro.tp),
                str(micro.fp),
                str(micro.fn),
            ]
        )
    widths = [
        max(len(header[c]), *(len(r[c]) for r in rows)) if rows else len(header[c])
        for c in range(len(header))
    ]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return "\n".join(lines) + "\n"
