"""Rank construction and cross-metric statistics.

The aggregate causality rank sums each model's ranks on the two indices;
rank-sum ties are broken in favor of the better reverse-surprise position,
since arrow-of-time perception is the prerequisite for causal cognition.
Preference rankings are aggregated with averaged-tie Borda counts; agreement
between rankings uses tie-corrected Kendall tau-b.
"""

import datetime
import math
import warnings
from dataclasses import dataclass


class AggregateError(ValueError):
    pass


class UndefinedStatisticError(ValueError):
    """A rank statistic has no defined value (e.g. zero tau-b denominator)."""


@dataclass
class AggregateRow:
    model_id: str
    rsi_rank: int
    cci_rank: int
    rank_sum: int
    final_rank: int


@dataclass
class PreferenceRanking:
    annotator_id: str
    prompt_id: str
    ranks: dict[str, int]  # model_id -> rank position, ties allowed


def rank_models(scores: dict[str, float], higher_is_better: bool = True) -> dict[str, int]:
    """Competition ranking: best score gets rank 1; exact ties share a rank and
    the following rank skips by the tie-group size."""
    if not scores:
        raise AggregateError("no scores to rank")
    for model, value in scores.items():
        if not math.isfinite(value):
            raise AggregateError(f"non-finite score for model '{model}': {value!r}")
    ordered = sorted(scores.items(), key=lambda kv: (-kv[1] if higher_is_better else kv[1], kv[0]))
    ranks: dict[str, int] = {}
    prev_score = None
    prev_rank = 0
    for pos, (model, value) in enumerate(ordered, start=1):
        if prev_score is not None and value == prev_score:
            ranks[model] = prev_rank
        else:
            ranks[model] = pos
            prev_rank = pos
            prev_score = value
    return ranks


def aggregate_rank(rsi_scores: dict[str, float], cci_scores: dict[str, float]) -> list[AggregateRow]:
    """Rank-sum aggregation with the better reverse-surprise rank as tie-break."""
    if set(rsi_scores) != set(cci_scores):
        raise AggregateError(
            f"model sets differ: {sorted(set(rsi_scores) ^ set(cci_scores))}"
        )
    rsi_ranks = rank_models(rsi_scores, higher_is_better=True)
    cci_ranks = rank_models(cci_scores, higher_is_better=True)
    rows = [
        AggregateRow(
            model_id=m,
            rsi_rank=rsi_ranks[m],
            cci_rank=cci_ranks[m],
            rank_sum=rsi_ranks[m] + cci_ranks[m],
            final_rank=0,
        )
        for m in rsi_scores
    ]
    rows.sort(key=lambda r: (r.rank_sum, r.rsi_rank, r.model_id))
    prev_key = None
    prev_rank = 0
    for pos, row in enumerate(rows, start=1):
        key = (row.rank_sum, row.rsi_rank)
        if key == prev_key:
            row.final_rank = prev_rank
        else:
            row.final_rank = pos
            prev_rank = pos
            prev_key = key
    return rows


def kendall_tau(a: dict[str, float], b: dict[str, float]) -> float:
    """Tie-corrected rank correlation (tau-b) between two rankings.

    (concordant - discordant) / sqrt((n0 - T_a)(n0 - T_b)), where n0 is the
    pair count and T the tied-pair counts. Raises UndefinedStatisticError when
    either ranking is fully tied (zero denominator).
    """
    if set(a) != set(b):
        raise AggregateError(f"item sets differ: {sorted(set(a) ^ set(b))}")
    items = sorted(a)
    n = len(items)
    if n < 2:
        raise AggregateError("need at least 2 items")
    concordant = discordant = tied_a = tied_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = a[items[i]] - a[items[j]]
            db = b[items[i]] - b[items[j]]
            if da == 0:
                tied_a += 1
            if db == 0:
                tied_b += 1
            if da == 0 or db == 0:
                continue
            if (da > 0) == (db > 0):
                concordant += 1
            else:
                discordant += 1
    n0 = n * (n - 1) // 2
    if n0 == tied_a or n0 == tied_b:
        raise UndefinedStatisticError("tau-b undefined: a ranking is fully tied")
    return (concordant - discordant) / math.sqrt((n0 - tied_a) * (n0 - tied_b))


def validate_tie_structure(ranks: dict[str, int], n_candidates: int | None = None) -> None:
    """Check a tied ranking occupies consecutive positions starting at 1.

    If k models share rank r they fill positions r..r+k-1, so the next
    distinct rank must be exactly r + k.
    """
    if not ranks:
        raise AggregateError("empty ranking")
    if n_candidates is not None and len(ranks) != n_candidates:
        raise AggregateError(f"ranking covers {len(ranks)} of {n_candidates} candidates")
    counts: dict[int, int] = {}
    for model, r in ranks.items():
        if not isinstance(r, int) or isinstance(r, bool) or r < 1:
            raise AggregateError(f"rank for '{model}' must be an integer >= 1, got {r!r}")
        counts[r] = counts.get(r, 0) + 1
    expected = 1
    for r in sorted(counts):
        if r != expected:
            raise AggregateError(
                f"invalid tie structure: after the positions before it, the next rank "
                f"must be {expected}, found {r}"
            )
        expected = r + counts[r]


def borda_scores(ranking: PreferenceRanking | dict[str, int], N: int) -> dict[str, float]:
    """Averaged-tie Borda points: untied rank r earns N - r; a k-way tie at
    rank r earns the mean of the points for positions r..r+k-1."""
    ranks = ranking.ranks if isinstance(ranking, PreferenceRanking) else ranking
    validate_tie_structure(ranks, n_candidates=N)
    counts: dict[int, int] = {}
    for r in ranks.values():
        counts[r] = counts.get(r, 0) + 1
    return {model: N - r - (counts[r] - 1) / 2.0 for model, r in ranks.items()}


def preference_aggregate(rankings: list[PreferenceRanking]) -> tuple[dict[str, float], dict[str, int]]:
    """Mean Borda points across rankings, plus the induced overall rank."""
    if not rankings:
        raise AggregateError("no rankings to aggregate")
    candidates = set(rankings[0].ranks)
    totals = {m: 0.0 for m in candidates}
    for ranking in rankings:
        if set(ranking.ranks) != candidates:
            raise AggregateError(
                f"ranking by '{ranking.annotator_id}' on '{ranking.prompt_id}' covers "
                f"a different candidate set"
            )
        for model, pts in borda_scores(ranking, len(candidates)).items():
            totals[model] += pts
    means = {m: totals[m] / len(rankings) for m in candidates}
    return means, rank_models(means, higher_is_better=True)


def release_date_ordinal(iso_date: str) -> int:
    return datetime.date.fromisoformat(iso_date).toordinal()


@dataclass
class CrossMetric:
    tau: float | None
    pearson_r: float | None
    n: int
    note: str = ""


def _pearson(xs: list[float], ys: list[float]) -> float | None:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        return None
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


def cross_correlations(
    aggregate_rows: list[AggregateRow],
    external: dict[str, dict[str, float]],
    numeric_series: tuple[str, ...] = (),
) -> dict[str, CrossMetric]:
    """Tau-b between the aggregate ranking and each external metric.

    External values are scores (higher is better) and are converted to
    rankings first. Models missing from an external metric are dropped
    pairwise with a warning. Metrics named in numeric_series additionally get
    a Pearson r against aggregate goodness (inverted final rank), so a
    positive r means larger values go with better aggregate standing.
    """
    agg = {row.model_id: float(row.final_rank) for row in aggregate_rows}
    n_models = len(agg)
    out: dict[str, CrossMetric] = {}
    for metric in sorted(external):
        values = external[metric]
        common = sorted(set(agg) & set(values))
        missing = sorted(set(agg) - set(values))
        if missing:
            warnings.warn(f"metric '{metric}' is missing models {missing}; dropped pairwise")
        if len(common) < 2:
            raise AggregateError(f"metric '{metric}' overlaps fewer than 2 models")
        ext_ranks = rank_models({m: values[m] for m in common}, higher_is_better=True)
        agg_sub = {m: agg[m] for m in common}
        try:
            tau = kendall_tau(agg_sub, {m: float(ext_ranks[m]) for m in common})
        except UndefinedStatisticError:
            out[metric] = CrossMetric(tau=None, pearson_r=None, n=len(common), note="undefined: fully tied")
            warnings.warn(f"metric '{metric}': tau-b undefined (fully tied ranking)")
            continue
        pearson = None
        if metric in numeric_series:
            goodness = [n_models + 1 - agg[m] for m in common]
            pearson = _pearson([values[m] for m in common], goodness)
        out[metric] = CrossMetric(tau=tau, pearson_r=pearson, n=len(common))
    return out


def load_external_rankings(path) -> dict[str, dict[str, float]]:
    """Read `metric_name, model_id, value` rows (CSV with a header)."""
    import csv
    from pathlib import Path

    out: dict[str, dict[str, float]] = {}
    with open(Path(path), newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            metric = row["metric_name"].strip()
            model = row["model_id"].strip()
            raw = row["value"].strip()
            try:
                value = float(raw)
            except ValueError:
                value = float(release_date_ordinal(raw))
            out.setdefault(metric, {})[model] = value
    return out
