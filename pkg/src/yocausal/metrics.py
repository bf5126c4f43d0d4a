"""Reverse-surprise and causality-cognition scoring with bootstrap intervals.

The dataset-level score is a nested average: the mean over thematic subsets of
each subset's fraction of correctly ordered videos. This weights subsets
equally regardless of size, so it is NOT the pooled fraction. The causality
index is the difference between that score restricted to causal videos and
restricted to non-causal videos.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .annotate.records import DirectionJudgment
from .probe.records import PairOutcome
from .seeding import derive_seed

DEFAULT_RESAMPLES = 2000
DEFAULT_CONFIDENCE = 0.90


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class SubsetScore:
    fraction: float
    n: int


@dataclass
class BootstrapResult:
    low: float
    high: float
    exceeds_baseline: bool
    confidence: float
    resamples: int
    seed: int
    stratification: str


@dataclass
class RsiReport:
    per_subset: dict[str, SubsetScore]
    overall: float
    n_total: int
    ci: tuple[float, float] | None = None
    exceeds_baseline: bool | None = None
    confidence: float | None = None

    def to_dict(self) -> dict:
        return {
            "per_subset": {k: {"fraction": v.fraction, "n": v.n} for k, v in sorted(self.per_subset.items())},
            "overall": self.overall,
            "n_total": self.n_total,
            "ci": list(self.ci) if self.ci else None,
            "exceeds_baseline": self.exceeds_baseline,
            "confidence": self.confidence,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RsiReport":
        return cls(
            per_subset={k: SubsetScore(fraction=v["fraction"], n=v["n"]) for k, v in obj["per_subset"].items()},
            overall=obj["overall"],
            n_total=obj["n_total"],
            ci=tuple(obj["ci"]) if obj.get("ci") else None,
            exceeds_baseline=obj.get("exceeds_baseline"),
            confidence=obj.get("confidence"),
        )


@dataclass
class CciReport:
    rsi_c: RsiReport
    rsi_nc: RsiReport
    cci: float
    ci: tuple[float, float] | None = None
    exceeds_baseline: bool | None = None
    confidence: float | None = None

    def to_dict(self) -> dict:
        return {
            "rsi_c": self.rsi_c.to_dict(),
            "rsi_nc": self.rsi_nc.to_dict(),
            "cci": self.cci,
            "ci": list(self.ci) if self.ci else None,
            "exceeds_baseline": self.exceeds_baseline,
            "confidence": self.confidence,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "CciReport":
        return cls(
            rsi_c=RsiReport.from_dict(obj["rsi_c"]),
            rsi_nc=RsiReport.from_dict(obj["rsi_nc"]),
            cci=obj["cci"],
            ci=tuple(obj["ci"]) if obj.get("ci") else None,
            exceeds_baseline=obj.get("exceeds_baseline"),
            confidence=obj.get("confidence"),
        )


def subset_rsi(outcomes: list[PairOutcome]) -> float:
    """Fraction of a subset's videos with strictly higher reversed loss."""
    if not outcomes:
        raise MetricsError("empty subset")
    return sum(1 for o in outcomes if o.correct) / len(outcomes)


def _nested_report(fractions_by_subset: dict[str, SubsetScore]) -> RsiReport:
    if not fractions_by_subset:
        raise MetricsError("no subsets to aggregate")
    overall = float(np.mean([s.fraction for s in fractions_by_subset.values()]))
    return RsiReport(
        per_subset=fractions_by_subset,
        overall=overall,
        n_total=sum(s.n for s in fractions_by_subset.values()),
    )


def dataset_rsi(outcomes_by_subset: dict[str, list[PairOutcome]]) -> RsiReport:
    """Nested average of per-subset correct fractions."""
    scores: dict[str, SubsetScore] = {}
    for sid in sorted(outcomes_by_subset):
        outs = outcomes_by_subset[sid]
        if not outs:
            raise MetricsError(f"subset '{sid}' has no outcomes")
        scores[sid] = SubsetScore(fraction=subset_rsi(outs), n=len(outs))
    return _nested_report(scores)


def _partition_groups(
    outcomes_by_subset: dict[str, list[PairOutcome]],
    labels: dict[str, str],
) -> dict[str, dict[str, list[PairOutcome]]]:
    """Split each subset into causal/noncausal cells; abstentions dropped."""
    parts: dict[str, dict[str, list[PairOutcome]]] = {"causal": {}, "noncausal": {}}
    for sid, outs in outcomes_by_subset.items():
        for o in outs:
            if o.video_id not in labels:
                raise MetricsError(f"video '{o.video_id}' has no causal/non-causal label")
            lab = labels[o.video_id]
            if lab not in ("causal", "noncausal"):
                continue  # abstentions belong to neither partition
            parts[lab].setdefault(sid, []).append(o)
    return parts


def _restricted_rsi(cells: dict[str, list[PairOutcome]], partition_name: str, all_subsets) -> RsiReport:
    if not cells:
        raise MetricsError(f"the {partition_name} partition is empty")
    missing = sorted(set(all_subsets) - set(cells))
    if missing:
        warnings.warn(
            f"subsets {missing} have no {partition_name} videos and are dropped "
            f"from the {partition_name} nested mean"
        )
    scores = {sid: SubsetScore(fraction=subset_rsi(outs), n=len(outs)) for sid, outs in sorted(cells.items())}
    return _nested_report(scores)


def cci(outcomes_by_subset: dict[str, list[PairOutcome]], labels: dict[str, str]) -> CciReport:
    """Causal-restricted minus non-causal-restricted nested score."""
    parts = _partition_groups(outcomes_by_subset, labels)
    rsi_c = _restricted_rsi(parts["causal"], "causal", outcomes_by_subset)
    rsi_nc = _restricted_rsi(parts["noncausal"], "noncausal", outcomes_by_subset)
    return CciReport(rsi_c=rsi_c, rsi_nc=rsi_nc, cci=rsi_c.overall - rsi_nc.overall)


def _bootstrap_fractions(groups: dict, rng: np.random.Generator, B: int) -> dict:
    """Per-group bootstrap resampled fractions, shape (B,) each.

    Groups are resampled independently with replacement, preserving their
    sizes, in sorted key order so seeding is stable.
    """
    fractions = {}
    for key in sorted(groups):
        arr = np.asarray(groups[key], dtype=bool)
        n = arr.shape[0]
        idx = rng.integers(0, n, size=(B, n))
        fractions[key] = arr[idx].mean(axis=1)
    return fractions


def bootstrap_ci(
    outcomes_by_subset: dict[str, list[PairOutcome]],
    statistic: str = "rsi",
    B: int = DEFAULT_RESAMPLES,
    confidence: float = DEFAULT_CONFIDENCE,
    seed: int = 0,
    labels: dict[str, str] | None = None,
) -> BootstrapResult:
    """Stratified percentile bootstrap of the nested statistic.

    Videos are resampled with replacement within each stratum (subset for the
    reverse-surprise score; subset-within-partition cell for the causality
    index), because the statistic is a mean of per-stratum means. The
    baseline check is one-sided at the stated confidence: the (1-confidence)
    quantile must exceed 0.5 (score) or 0 (index).
    """
    if B < 100:
        raise MetricsError("B must be >= 100")
    if not 0.5 < confidence < 1.0:
        raise MetricsError("confidence must lie in (0.5, 1)")
    rng = np.random.default_rng(derive_seed("bootstrap", seed, statistic, B))

    if statistic == "rsi":
        groups = {
            sid: [o.correct for o in outs] for sid, outs in outcomes_by_subset.items()
        }
        for sid, vals in groups.items():
            if not vals:
                raise MetricsError(f"subset '{sid}' has no outcomes")
        fr = _bootstrap_fractions(groups, rng, B)
        stats = np.mean(np.stack([fr[k] for k in sorted(fr)], axis=1), axis=1)
        baseline = 0.5
        stratification = "within-subset"
    elif statistic == "cci":
        if labels is None:
            raise MetricsError("cci bootstrap requires labels")
        parts = _partition_groups(outcomes_by_subset, labels)
        if not parts["causal"] or not parts["noncausal"]:
            raise MetricsError("both partitions must be non-empty")
        groups = {}
        for part, cells in parts.items():
            for sid, outs in cells.items():
                groups[(part, sid)] = [o.correct for o in outs]
        fr = _bootstrap_fractions(groups, rng, B)
        c_keys = sorted(k for k in fr if k[0] == "causal")
        nc_keys = sorted(k for k in fr if k[0] == "noncausal")
        stats = np.mean(np.stack([fr[k] for k in c_keys], axis=1), axis=1) - np.mean(
            np.stack([fr[k] for k in nc_keys], axis=1), axis=1
        )
        baseline = 0.0
        stratification = "within-partition-subset"
    else:
        raise MetricsError(f"unknown bootstrap statistic {statistic!r}")

    alpha = 1.0 - confidence
    low = float(np.quantile(stats, alpha / 2))
    high = float(np.quantile(stats, 1 - alpha / 2))
    one_sided_low = float(np.quantile(stats, alpha))
    return BootstrapResult(
        low=low,
        high=high,
        exceeds_baseline=one_sided_low > baseline,
        confidence=confidence,
        resamples=B,
        seed=seed,
        stratification=stratification,
    )


def dataset_rsi_with_ci(
    outcomes_by_subset: dict[str, list[PairOutcome]],
    B: int = DEFAULT_RESAMPLES,
    confidence: float = DEFAULT_CONFIDENCE,
    seed: int = 0,
) -> RsiReport:
    report = dataset_rsi(outcomes_by_subset)
    boot = bootstrap_ci(outcomes_by_subset, "rsi", B=B, confidence=confidence, seed=seed)
    report.ci = (boot.low, boot.high)
    report.exceeds_baseline = boot.exceeds_baseline
    report.confidence = confidence
    return report


def cci_with_ci(
    outcomes_by_subset: dict[str, list[PairOutcome]],
    labels: dict[str, str],
    B: int = DEFAULT_RESAMPLES,
    confidence: float = DEFAULT_CONFIDENCE,
    seed: int = 0,
) -> CciReport:
    report = cci(outcomes_by_subset, labels)
    boot = bootstrap_ci(outcomes_by_subset, "cci", B=B, confidence=confidence, seed=seed, labels=labels)
    report.ci = (boot.low, boot.high)
    report.exceeds_baseline = boot.exceeds_baseline
    report.confidence = confidence
    return report


def human_rsi(judgments_by_subset: dict[str, list[DirectionJudgment]]) -> RsiReport:
    """Nested score over human judgments; Unknown answers count as 0.5 wins."""
    scores: dict[str, SubsetScore] = {}
    for sid in sorted(judgments_by_subset):
        judgments = judgments_by_subset[sid]
        if not judgments:
            raise MetricsError(f"subset '{sid}' has no judgments")
        total = 0.0
        for j in judgments:
            res = j.resolve()
            total += 1.0 if res == "correct" else 0.5 if res == "unknown" else 0.0
        scores[sid] = SubsetScore(fraction=total / len(judgments), n=len(judgments))
    return _nested_report(scores)
