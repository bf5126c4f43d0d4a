"""Plain-text result tables.

Formatting is deterministic (sorted keys, fixed decimals) so reports produced
from the same artifacts are byte-identical; run metadata records the
methodological choices other implementations might make differently.
"""

from .aggregate import AggregateRow, CrossMetric
from .metrics import CciReport, RsiReport

METHOD_NOTES = (
    "preprocess_order=decode,fps_resample,resolution_adapt,window",
    "bootstrap=stratified-percentile",
    "aggregate_tie_break=better-rsi-rank-first",
)


def _fmt(x, width: int = 8) -> str:
    if x is None:
        return "-".rjust(width)
    return f"{x:.4f}".rjust(width)


def _table(headers: list[str], rows: list[list[str]], widths: list[int]) -> str:
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def format_rsi_table(reports: dict[str, RsiReport]) -> str:
    subset_ids = sorted({sid for rep in reports.values() for sid in rep.per_subset})
    headers = ["model", *subset_ids, "overall", "ci_low", "ci_high", "sig"]
    widths = [max(18, *(len(m) for m in reports))] + [max(8, len(s)) for s in subset_ids] + [8, 8, 8, 4]
    rows = []
    for model in sorted(reports):
        rep = reports[model]
        cells = [model]
        for sid in subset_ids:
            score = rep.per_subset.get(sid)
            cells.append(_fmt(score.fraction if score else None))
        cells.append(_fmt(rep.overall))
        cells.append(_fmt(rep.ci[0] if rep.ci else None))
        cells.append(_fmt(rep.ci[1] if rep.ci else None))
        cells.append("yes" if rep.exceeds_baseline else "no" if rep.exceeds_baseline is not None else "-")
        rows.append(cells)
    return _table(headers, rows, widths)


def format_cci_table(reports: dict[str, CciReport]) -> str:
    headers = ["model", "rsi_causal", "rsi_noncausal", "cci", "ci_low", "ci_high", "sig"]
    widths = [max(18, *(len(m) for m in reports)), 10, 13, 8, 8, 8, 4]
    rows = []
    for model in sorted(reports):
        rep = reports[model]
        rows.append(
            [
                model,
                _fmt(rep.rsi_c.overall, 10),
                _fmt(rep.rsi_nc.overall, 13),
                _fmt(rep.cci),
                _fmt(rep.ci[0] if rep.ci else None),
                _fmt(rep.ci[1] if rep.ci else None),
                "yes" if rep.exceeds_baseline else "no" if rep.exceeds_baseline is not None else "-",
            ]
        )
    return _table(headers, rows, widths)


def format_aggregate_table(rows: list[AggregateRow]) -> str:
    headers = ["final_rank", "model", "rsi_rank", "cci_rank", "rank_sum"]
    widths = [10, max(18, *(len(r.model_id) for r in rows)), 8, 8, 8]
    body = [
        [str(r.final_rank), r.model_id, str(r.rsi_rank), str(r.cci_rank), str(r.rank_sum)]
        for r in sorted(rows, key=lambda r: (r.final_rank, r.model_id))
    ]
    return _table(headers, body, widths)


def format_cross_table(cross: dict[str, CrossMetric]) -> str:
    headers = ["metric", "tau_b", "pearson_r", "n"]
    widths = [max(18, *(len(m) for m in cross)), 8, 9, 4]
    body = []
    for metric in sorted(cross):
        cm = cross[metric]
        body.append([metric, _fmt(cm.tau), _fmt(cm.pearson_r, 9), str(cm.n)])
    return _table(headers, body, widths)


def format_borda_table(scores: dict[str, float], ranks: dict[str, int]) -> str:
    headers = ["rank", "model", "mean_borda"]
    widths = [4, max(18, *(len(m) for m in scores)), 10]
    body = [
        [str(ranks[m]), m, _fmt(scores[m], 10)]
        for m in sorted(scores, key=lambda m: (ranks[m], m))
    ]
    return _table(headers, body, widths)


def render_report(
    rsi_reports: dict[str, RsiReport] | None = None,
    cci_reports: dict[str, CciReport] | None = None,
    aggregate_rows: list[AggregateRow] | None = None,
    cross: dict[str, CrossMetric] | None = None,
    preference: tuple[dict[str, float], dict[str, int]] | None = None,
    extra_sections: list[tuple[str, str]] | None = None,
) -> str:
    parts = ["# yocausal results", ""]
    parts.append("method: " + "; ".join(METHOD_NOTES))
    parts.append("")
    if rsi_reports:
        parts += ["## Reverse surprise (per subset)", "", format_rsi_table(rsi_reports), ""]
    if cci_reports:
        parts += ["## Causality cognition", "", format_cci_table(cci_reports), ""]
    if aggregate_rows:
        parts += ["## Aggregate ranking", "", format_aggregate_table(aggregate_rows), ""]
    if cross:
        parts += ["## Cross-metric correlations", "", format_cross_table(cross), ""]
    if preference:
        parts += ["## Human preference (Borda)", "", format_borda_table(*preference), ""]
    for title, text in extra_sections or []:
        parts += [f"## {title}", "", text, ""]
    return "\n".join(parts)
