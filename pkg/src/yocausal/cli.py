"""Pipeline orchestration.

Stages (ingest -> preprocess -> probe -> partition -> rsi/cci -> entropy ->
aggregate -> report) each read and write plain line-delimited files under the
configured output directory, so a long benchmark run can be inspected and
resumed after interruption. All randomness flows from --seed through derived
per-stage seeds.
"""

import argparse
import json
import sys
import threading
import warnings
from pathlib import Path

import numpy as np

from . import catalog as cat
from . import entropyctl, metrics, partition, report
from .aggregate import AggregateError, aggregate_rank, cross_correlations, load_external_rankings
from .lineio import read_lines, write_lines
from .preprocess import ModelSpec, load_model_registry, plan_windows, preprocess_sequence
from .probe import (
    ProbeConfig,
    RemoteAdapter,
    ToyDiffusionAdapter,
    ToyTrainConfig,
    append_loss_record,
    build_toy_catalog,
    outcomes_from_loss_file,
    probe_records,
    toy_train,
)
from .probe.synthetic import toy_generate
from .seeding import stage_seed


class CliError(SystemExit):
    def __init__(self, message: str):
        print(f"error: {message}", file=sys.stderr)
        super().__init__(2)


def load_config(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise CliError(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"config file is not valid JSON: {exc}")
    for key in ("catalog", "output_dir"):
        if key not in cfg:
            raise CliError(f"config is missing required key '{key}'")
    return cfg


def _out(cfg) -> Path:
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _require(path: Path, produced_by: str) -> Path:
    if not path.exists():
        raise CliError(f"missing artifact {path}; run the `{produced_by}` subcommand first")
    return path


def _probe_config(cfg, args) -> ProbeConfig:
    probe_cfg = dict(cfg.get("probe", {}))
    if getattr(args, "prompt_mode", None):
        probe_cfg["prompt_mode"] = args.prompt_mode
    if getattr(args, "seed", None) is not None:
        probe_cfg["base_seed"] = args.seed
    return ProbeConfig(
        K=int(probe_cfg.get("K", 10)),
        n_noise=int(probe_cfg.get("n_noise", 1)),
        base_seed=int(probe_cfg.get("base_seed", 0)),
        prompt_mode=probe_cfg.get("prompt_mode", "caption"),
        t_exclusion=float(probe_cfg.get("t_exclusion", 0.0)),
    )


def build_adapter(spec: ModelSpec):
    kind = spec.adapter.get("type")
    if kind == "toy":
        adapter = ToyDiffusionAdapter.load(spec.adapter["checkpoint"])
        if adapter.spec.model_id != spec.model_id:
            adapter.spec = spec
        return adapter
    if kind == "subprocess":
        return RemoteAdapter(spec, spec.adapter["command"])
    raise CliError(
        f"model '{spec.model_id}' declares no usable adapter (type={kind!r}); "
        "expected 'toy' or 'subprocess'"
    )


def _load_catalog(cfg, require_captions=True) -> cat.Catalog:
    validated = _out(cfg) / "catalog.validated.jsonl"
    source = validated if validated.exists() else Path(cfg["catalog"])
    if not source.exists():
        raise CliError(f"catalog manifest not found: {source}")
    return cat.load_manifest(source, require_captions=require_captions)


def cmd_ingest(cfg, args) -> int:
    prompt_mode = cfg.get("probe", {}).get("prompt_mode", "caption")
    catalog = cat.load_manifest(cfg["catalog"], require_captions=(prompt_mode == "caption"))
    out = _out(cfg)
    cat.save_manifest(out / "catalog.validated.jsonl", catalog)
    sizes = {s.subset_id: len(s.record_ids) for s in catalog.subsets}
    print(f"ingested {len(catalog.records)} records across {len(catalog.subsets)} subsets: {sizes}")
    return 0


def cmd_preprocess(cfg, args) -> int:
    catalog = _load_catalog(cfg)
    registry = load_model_registry(_require(Path(cfg["model_registry"]), "ingest"))
    models = [args.model] if args.model else sorted(registry)
    out = _out(cfg)
    for model_id in models:
        spec = registry[model_id]
        dest = out / "preprocessed" / model_id
        dest.mkdir(parents=True, exist_ok=True)
        done = 0
        for rec in catalog.records:
            target = dest / f"{rec.video_id}.npz"
            if target.exists():
                continue
            seq = preprocess_sequence(cat.decode(rec, "forward"), spec, rec.fps_native)
            plan = plan_windows(seq.num_frames, spec.frame_window)
            np.savez(target, frames=seq.frames, window_count=len(plan.windows))
            done += 1
        print(f"{model_id}: preprocessed {done} new videos into {dest}")
    return 0


def _losses_path(cfg, model_id: str) -> Path:
    return _out(cfg) / "losses" / f"{model_id}.jsonl"


def cmd_probe(cfg, args) -> int:
    catalog = _load_catalog(cfg, require_captions=False)
    registry = load_model_registry(_require(Path(cfg["model_registry"]), "ingest"))
    config = _probe_config(cfg, args)
    models = [args.model] if args.model else sorted(registry)
    for model_id in models:
        spec = registry[model_id]
        adapter = build_adapter(spec)
        losses_path = _losses_path(cfg, model_id)
        done_ids = set()
        if losses_path.exists():
            seen: dict[str, set[str]] = {}
            for row in read_lines(losses_path):
                seen.setdefault(row["video_id"], set()).add(row["direction"])
            done_ids = {vid for vid, dirs in seen.items() if {"forward", "reversed"} <= dirs}
        pending = [r for r in catalog.records if r.video_id not in done_ids]
        cache_dir = _out(cfg) / "preprocessed" / model_id

        def load_cached(video_id: str):
            cached = cache_dir / f"{video_id}.npz"
            if not cached.exists():
                return None
            with np.load(cached) as data:
                return data["frames"]

        write_lock = threading.Lock()

        def save(result):
            with write_lock:  # workers may finish concurrently
                append_loss_record(losses_path, result.forward, config.prompt_mode, config.base_seed)
                append_loss_record(losses_path, result.reversed, config.prompt_mode, config.base_seed)

        probe_records(pending, adapter, config, frames_loader=load_cached, workers=args.workers, on_result=save)
        print(f"{model_id}: probed {len(pending)} videos ({len(done_ids)} already complete)")
    return 0


def cmd_partition(cfg, args) -> int:
    catalog = _load_catalog(cfg, require_captions=False)
    vlm_cfg = cfg.get("vlm", {})
    if not vlm_cfg.get("endpoint"):
        raise CliError("config key vlm.endpoint is required for the partition stage")
    judge_id = vlm_cfg.get("judge_id", "vlm")
    prompt = partition.load_prompt_asset(vlm_cfg.get("prompt_asset"))
    client = partition.HttpVlmClient(vlm_cfg["endpoint"], judge_id)
    cache = partition.LabelCache(_out(cfg) / "labels" / f"{judge_id}.jsonl")
    labels = partition.judge_records(
        catalog.records,
        client,
        judge_id,
        cache=cache,
        prompt=prompt,
        max_frames=int(vlm_cfg.get("max_frames", 16)),
        max_workers=args.workers,
        min_interval_s=float(vlm_cfg.get("min_interval_s", 0.0)),
    )
    counts = {"causal": 0, "noncausal": 0, "abstain": 0}
    for lab in labels:
        counts[lab.label] += 1
    print(f"labeled {len(labels)} videos: {counts}")
    return 0


def _outcomes_by_subset(cfg, model_id: str):
    catalog = _load_catalog(cfg, require_captions=False)
    losses_path = _require(_losses_path(cfg, model_id), "probe")
    outcomes = outcomes_from_loss_file(losses_path)
    grouped: dict[str, list] = {}
    for o in outcomes:
        grouped.setdefault(catalog.subset_of(o.video_id), []).append(o)
    return grouped


def _models_with_losses(cfg) -> list[str]:
    losses_dir = _out(cfg) / "losses"
    if not losses_dir.exists():
        raise CliError("no loss records found; run the `probe` subcommand first")
    return sorted(p.stem for p in losses_dir.glob("*.jsonl"))


def cmd_rsi(cfg, args) -> int:
    out = _out(cfg)
    models = [args.model] if args.model else _models_with_losses(cfg)
    for model_id in models:
        grouped = _outcomes_by_subset(cfg, model_id)
        rep = metrics.dataset_rsi_with_ci(
            grouped, B=args.bootstrap_resamples, confidence=args.confidence, seed=stage_seed(args.seed, "rsi")
        )
        dest = out / "reports" / f"rsi_{model_id}.json"
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
        print(f"{model_id}: rsi={rep.overall:.4f} ci=({rep.ci[0]:.4f},{rep.ci[1]:.4f}) -> {dest}")
    return 0


def _load_label_map(cfg) -> dict[str, str]:
    labels_dir = _out(cfg) / "labels"
    files = sorted(labels_dir.glob("*.jsonl")) if labels_dir.exists() else []
    if not files:
        raise CliError("no causal labels found; run the `partition` subcommand first")
    return partition.labels_as_map(partition.load_labels(files[0]))


def cmd_cci(cfg, args) -> int:
    out = _out(cfg)
    label_map = _load_label_map(cfg)
    models = [args.model] if args.model else _models_with_losses(cfg)
    for model_id in models:
        grouped = _outcomes_by_subset(cfg, model_id)
        rep = metrics.cci_with_ci(
            grouped,
            label_map,
            B=args.bootstrap_resamples,
            confidence=args.confidence,
            seed=stage_seed(args.seed, "cci"),
        )
        dest = out / "reports" / f"cci_{model_id}.json"
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
        print(f"{model_id}: cci={rep.cci:.4f} (c={rep.rsi_c.overall:.4f}, nc={rep.rsi_nc.overall:.4f}) -> {dest}")
    return 0


def cmd_entropy(cfg, args) -> int:
    out = _out(cfg)
    catalog = _load_catalog(cfg, require_captions=False)
    profiles_path = out / "flow_profiles.csv"
    if args.flow_file:
        profiles = entropyctl.load_flow_profiles(args.flow_file)
    elif profiles_path.exists():
        profiles = entropyctl.load_flow_profiles(profiles_path)
    else:
        estimator = entropyctl.BlockMatchingFlow()
        profiles = []
        for rec in catalog.records:
            seq = cat.decode(rec, "forward")
            profiles.append(entropyctl.flow_magnitudes(seq.frames, rec.video_id, estimator))
        entropyctl.write_flow_profiles(profiles_path, profiles)
    retained = set(entropyctl.symmetric_subset(profiles, fraction=args.symmetric_fraction))
    (out / "symmetric_subset.txt").write_text("\n".join(sorted(retained)) + "\n")
    print(f"retained {len(retained)} of {len(profiles)} videos at fraction {args.symmetric_fraction}")

    for model_id in _models_with_losses(cfg):
        grouped = _outcomes_by_subset(cfg, model_id)
        restricted = {}
        for sid, outs in grouped.items():
            kept = [o for o in outs if o.video_id in retained]
            if kept:
                restricted[sid] = kept
            else:
                warnings.warn(f"subset '{sid}' has no retained videos; dropped from the entropy-controlled score")
        if not restricted:
            print(f"{model_id}: no retained videos with probe outcomes; skipping")
            continue
        rep = metrics.dataset_rsi_with_ci(
            restricted, B=args.bootstrap_resamples, confidence=args.confidence, seed=stage_seed(args.seed, "entropy")
        )
        dest = out / "reports" / f"entropy_rsi_{model_id}.json"
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
        print(f"{model_id}: entropy-controlled rsi={rep.overall:.4f} -> {dest}")
    return 0


def cmd_aggregate(cfg, args) -> int:
    out = _out(cfg)
    reports_dir = _require(out / "reports", "rsi")
    rsi_scores, cci_scores = {}, {}
    for path in sorted(reports_dir.glob("rsi_*.json")):
        model_id = path.stem[len("rsi_") :]
        rsi_scores[model_id] = json.loads(path.read_text())["overall"]
    for path in sorted(reports_dir.glob("cci_*.json")):
        model_id = path.stem[len("cci_") :]
        cci_scores[model_id] = json.loads(path.read_text())["cci"]
    if not rsi_scores:
        raise CliError("no rsi reports found; run the `rsi` subcommand first")
    if set(rsi_scores) != set(cci_scores):
        raise CliError(
            f"rsi and cci reports cover different models: {sorted(set(rsi_scores) ^ set(cci_scores))}; "
            "run `cci` for the missing ones"
        )
    rows = aggregate_rank(rsi_scores, cci_scores)
    payload = {
        "rows": [row.__dict__ for row in rows],
        "tie_break": "rank-sum ties broken by better rsi rank",
    }
    cross = None
    if cfg.get("external_rankings"):
        external = load_external_rankings(cfg["external_rankings"])
        numeric = tuple(cfg.get("numeric_series", ("params", "release_date")))
        try:
            cross = cross_correlations(rows, external, numeric_series=numeric)
            payload["cross"] = {
                m: {"tau": c.tau, "pearson_r": c.pearson_r, "n": c.n, "note": c.note} for m, c in cross.items()
            }
        except AggregateError as exc:
            warnings.warn(f"cross-metric correlations skipped: {exc}")
    (out / "reports" / "aggregate.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    for row in rows:
        print(f"#{row.final_rank} {row.model_id} (rsi_rank={row.rsi_rank}, cci_rank={row.cci_rank})")
    return 0


def cmd_report(cfg, args) -> int:
    out = _out(cfg)
    reports_dir = _require(out / "reports", "rsi")
    rsi_reports = {
        p.stem[len("rsi_") :]: metrics.RsiReport.from_dict(json.loads(p.read_text()))
        for p in sorted(reports_dir.glob("rsi_*.json"))
    }
    cci_reports = {
        p.stem[len("cci_") :]: metrics.CciReport.from_dict(json.loads(p.read_text()))
        for p in sorted(reports_dir.glob("cci_*.json"))
    }
    if not rsi_reports:
        raise CliError("no rsi reports found; run the `rsi` subcommand first")
    rows = cross = None
    agg_path = reports_dir / "aggregate.json"
    if agg_path.exists():
        from .aggregate import AggregateRow, CrossMetric

        payload = json.loads(agg_path.read_text())
        rows = [AggregateRow(**row) for row in payload["rows"]]
        if "cross" in payload:
            cross = {m: CrossMetric(**c) for m, c in payload["cross"].items()}
    extra = []
    for path in sorted(reports_dir.glob("entropy_rsi_*.json")):
        model_id = path.stem[len("entropy_rsi_") :]
        rep = metrics.RsiReport.from_dict(json.loads(path.read_text()))
        extra.append(
            (
                f"Entropy-controlled score ({model_id})",
                report.format_rsi_table({model_id: rep}),
            )
        )

    # human baseline and preference table, when annotation logs are present
    annotations = out / "annotations"
    direction_log = annotations / "direction_judgments.jsonl"
    if direction_log.exists():
        from .annotate.records import load_direction_judgments

        catalog = _load_catalog(cfg, require_captions=False)
        grouped: dict[str, list] = {}
        for judgment in load_direction_judgments(direction_log):
            try:
                grouped.setdefault(catalog.subset_of(judgment.video_id), []).append(judgment)
            except KeyError:
                warnings.warn(f"judgment for unknown video '{judgment.video_id}' skipped")
        if grouped:
            rsi_reports = dict(rsi_reports)
            rsi_reports["human"] = metrics.human_rsi(grouped)
    preference = None
    ranking_log = annotations / "preference_rankings.jsonl"
    if ranking_log.exists():
        from .aggregate import PreferenceRanking, preference_aggregate

        rankings = [
            PreferenceRanking(
                annotator_id=str(obj["annotator_id"]),
                prompt_id=str(obj["prompt_id"]),
                ranks={str(k): int(v) for k, v in obj["ranks"].items()},
            )
            for obj in read_lines(ranking_log)
        ]
        if rankings:
            try:
                preference = preference_aggregate(rankings)
            except AggregateError as exc:
                warnings.warn(f"preference table skipped: {exc}")

    text = report.render_report(
        rsi_reports=rsi_reports,
        cci_reports=cci_reports,
        aggregate_rows=rows,
        cross=cross,
        preference=preference,
        extra_sections=extra,
    )
    dest = out / "report.txt"
    dest.write_text(text)
    print(text)
    print(f"report written to {dest}")
    return 0


def cmd_annotate_serve(cfg, args) -> int:
    from .annotate.assignment import AssignmentPlan, plan_assignments
    from .annotate.service import RankingGroup, ServiceConfig, run_service

    catalog = _load_catalog(cfg, require_captions=False)
    ann_cfg = cfg.get("annotate", {})
    groups = [
        RankingGroup(prompt_id=g["prompt_id"], prompt=g["prompt"], candidates=g["candidates"])
        for g in ann_cfg.get("ranking_groups", [])
    ]
    plan = None
    if groups and ann_cfg.get("annotators"):
        plan = plan_assignments(
            ann_cfg["annotators"],
            [g.prompt_id for g in groups],
            rankings_per_group=int(ann_cfg.get("rankings_per_group", 3)),
            groups_per_annotator=int(ann_cfg.get("groups_per_annotator", 6)),
            seed=stage_seed(args.seed, "assignment"),
        )
    service_cfg = ServiceConfig(
        data_dir=ann_cfg.get("data_dir", str(_out(cfg) / "annotations")),
        catalog=catalog,
        seed=stage_seed(args.seed, "annotate"),
        replay_limit=int(ann_cfg.get("replay_limit", 3)),
        ranking_groups=groups,
        plan=plan,
    )
    run_service(service_cfg, host=args.host, port=args.port)
    return 0


def run_toy_e2e(out_dir, seed: int, train_n: int = 400, eval_n: int = 100, epochs: int = 12, workers: int = 1,
                K: int = 10, symmetric_fraction: float = 0.30, bootstrap_resamples: int = 2000,
                confidence: float = 0.90, log=print) -> dict:
    """Generate synthetic data, train the toy adapter, run the whole pipeline.

    Returns the summary dict that is also written to <out>/summary.json.
    Deterministic given the seed.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    log(f"[1/7] generating {train_n} training clips (shatter+smoke)")
    train_seed = stage_seed(seed, "toy-train-data")
    half = train_n // 2
    train_set = [(clip, "a block falls and shatters into scattering fragments")
                 for clip in toy_generate("shatter", half, train_seed)]
    train_set += [(clip, "a puff of smoke spreads slowly outward")
                  for clip in toy_generate("smoke", train_n - half, train_seed)]

    log(f"[2/7] training the toy denoiser for {epochs} epochs")
    adapter = toy_train(train_set, epochs=epochs, seed=stage_seed(seed, "toy-train"),
                        config=ToyTrainConfig(epochs=epochs), log=log)
    checkpoint = out / "toy_model.pt"
    adapter.save(checkpoint)

    registry_path = out / "models.jsonl"
    spec = adapter.spec
    write_lines(registry_path, [{
        "model_id": spec.model_id, "family": spec.family, "params_billions": spec.params_billions,
        "release_date": spec.release_date, "operating_space": spec.operating_space,
        "resolution_mode": {"fixed": list(spec.resolution_mode.sizes[0])},
        "frame_window": spec.frame_window, "target_fps": spec.target_fps,
        "diffusion_steps_T": spec.diffusion_steps_T,
        "adapter": {"type": "toy", "checkpoint": str(checkpoint)},
    }])

    log(f"[3/7] generating the evaluation catalog ({eval_n} irreversible / drift / palindrome)")
    eval_seed = stage_seed(seed, "toy-eval-data")
    catalog = build_toy_catalog(out / "eval_videos", {
        "shatter": ("shatter", eval_n // 2),
        "smoke": ("smoke", eval_n - eval_n // 2),
        "drift": ("drift", eval_n),
        "palindrome": ("palindrome", eval_n),
    }, eval_seed)
    cat.save_manifest(out / "catalog.validated.jsonl", catalog)

    config = ProbeConfig(K=K, base_seed=stage_seed(seed, "probe"), prompt_mode="caption")
    losses_path = out / "losses" / f"{spec.model_id}.jsonl"

    log(f"[4/7] probing {len(catalog.records)} videos forward/reversed")
    def save(result):
        append_loss_record(losses_path, result.forward, config.prompt_mode, config.base_seed)
        append_loss_record(losses_path, result.reversed, config.prompt_mode, config.base_seed)
    if not losses_path.exists():
        probe_records(catalog.records, adapter, config, workers=workers, on_result=save)

    outcomes = outcomes_from_loss_file(losses_path)
    grouped: dict[str, list] = {}
    for o in outcomes:
        grouped.setdefault(catalog.subset_of(o.video_id), []).append(o)

    irreversible = {sid: grouped[sid] for sid in ("shatter", "smoke")}
    rsi_seed = stage_seed(seed, "rsi")
    rsi_irr = metrics.dataset_rsi_with_ci(irreversible, B=bootstrap_resamples, confidence=confidence, seed=rsi_seed)
    rsi_pal = metrics.dataset_rsi({"palindrome": grouped["palindrome"]})
    rsi_drift = metrics.dataset_rsi({"drift": grouped["drift"]})

    labels = {o.video_id: ("causal" if o.video_id.startswith("shatter") else "noncausal")
              for subset in irreversible.values() for o in subset}
    cci_rep = metrics.cci_with_ci(irreversible, labels, B=bootstrap_resamples, confidence=confidence,
                                  seed=stage_seed(seed, "cci"))

    log("[5/7] null-prompt ablation on the irreversible subsets")
    null_config = ProbeConfig(K=K, base_seed=config.base_seed, prompt_mode="null")
    null_losses = out / "losses" / f"{spec.model_id}.null.jsonl"
    def save_null(result):
        append_loss_record(null_losses, result.forward, null_config.prompt_mode, null_config.base_seed)
        append_loss_record(null_losses, result.reversed, null_config.prompt_mode, null_config.base_seed)
    if not null_losses.exists():
        irr_records = [r for r in catalog.records if r.subset_id in ("shatter", "smoke")]
        probe_records(irr_records, adapter, null_config, workers=workers, on_result=save_null)
    null_outcomes = outcomes_from_loss_file(null_losses)
    null_grouped: dict[str, list] = {}
    for o in null_outcomes:
        null_grouped.setdefault(catalog.subset_of(o.video_id), []).append(o)
    rsi_null = metrics.dataset_rsi(null_grouped)

    log("[6/7] entropy-controlled subset")
    estimator = entropyctl.BlockMatchingFlow()
    profiles = []
    for rec in catalog.records:
        seq = cat.decode(rec, "forward")
        profiles.append(entropyctl.flow_magnitudes(seq.frames, rec.video_id, estimator))
    entropyctl.write_flow_profiles(out / "flow_profiles.csv", profiles)
    retained = set(entropyctl.symmetric_subset(profiles, fraction=symmetric_fraction))
    restricted = {}
    for sid, outs in grouped.items():
        kept = [o for o in outs if o.video_id in retained]
        if kept:
            restricted[sid] = kept
    entropy_rsi = metrics.dataset_rsi(restricted) if restricted else None

    log("[7/7] aggregate + report")
    rows = aggregate_rank({spec.model_id: rsi_irr.overall}, {spec.model_id: cci_rep.cci})
    reports_dir = out / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    (reports_dir / f"rsi_{spec.model_id}.json").write_text(
        json.dumps(rsi_irr.to_dict(), indent=2, sort_keys=True) + "\n")
    (reports_dir / f"cci_{spec.model_id}.json").write_text(
        json.dumps(cci_rep.to_dict(), indent=2, sort_keys=True) + "\n")

    summary = {
        "seed": seed,
        "train_n": train_n,
        "eval_n": eval_n,
        "epochs": epochs,
        "loss_curve": adapter.loss_curve,
        "rsi_irreversible": rsi_irr.to_dict(),
        "rsi_palindrome": rsi_pal.to_dict(),
        "rsi_drift": rsi_drift.to_dict(),
        "cci": cci_rep.to_dict(),
        "rsi_irreversible_null": rsi_null.to_dict(),
        "entropy_controlled": {
            "retained": len(retained),
            "total_profiles": len(profiles),
            "rsi": entropy_rsi.to_dict() if entropy_rsi else None,
        },
        "aggregate": [row.__dict__ for row in rows],
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    sections = [
        ("Toy run summary",
         "\n".join([
             f"rsi_irreversible={rsi_irr.overall:.4f} ci=({rsi_irr.ci[0]:.4f},{rsi_irr.ci[1]:.4f}) "
             f"exceeds_baseline={rsi_irr.exceeds_baseline}",
             f"rsi_palindrome={rsi_pal.overall:.4f}",
             f"rsi_drift={rsi_drift.overall:.4f}",
             f"cci={cci_rep.cci:.4f} ci=({cci_rep.ci[0]:.4f},{cci_rep.ci[1]:.4f})",
             f"rsi_irreversible_null={rsi_null.overall:.4f}",
             f"entropy_retained={len(retained)}/{len(profiles)}",
         ])),
    ]
    text = report.render_report(
        rsi_reports={spec.model_id: rsi_irr},
        cci_reports={spec.model_id: cci_rep},
        aggregate_rows=rows,
        extra_sections=sections,
    )
    (out / "report.txt").write_text(text)
    log(f"summary written to {out / 'summary.json'}")
    return summary


def cmd_toy_e2e(cfg, args) -> int:
    out_dir = args.out or (Path(cfg["output_dir"]) if cfg else Path("toy-e2e-out"))
    run_toy_e2e(
        out_dir,
        seed=args.seed,
        train_n=args.train_n,
        eval_n=args.eval_n,
        epochs=args.epochs,
        workers=args.workers,
        symmetric_fraction=args.symmetric_fraction,
        bootstrap_resamples=args.bootstrap_resamples,
        confidence=args.confidence,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="yocausal", description=__doc__)
    parser.add_argument("--config", help="path to the run config (JSON)")
    parser.add_argument("--seed", type=int, default=0, help="base seed for all stages")
    parser.add_argument("--workers", type=int, default=1, help="parallel workers for probe/partition")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", help="validate the catalog manifest")

    p = sub.add_parser("preprocess", help="decode and adapt videos per model spec")
    p.add_argument("--model", help="restrict to one model id")

    p = sub.add_parser("probe", help="compute forward/reversed denoising losses")
    p.add_argument("--model", help="restrict to one model id")
    p.add_argument("--prompt-mode", choices=["caption", "null"], default=None)

    sub.add_parser("partition", help="label videos causal/non-causal via the VLM judge")

    for name in ("rsi", "cci"):
        p = sub.add_parser(name, help=f"compute the {name} reports")
        p.add_argument("--model", help="restrict to one model id")
        p.add_argument("--bootstrap-resamples", type=int, default=2000)
        p.add_argument("--confidence", type=float, default=0.90)

    p = sub.add_parser("entropy", help="entropy-symmetry control subset and restricted score")
    p.add_argument("--flow-file", help="ingest precomputed magnitude sequences instead of estimating")
    p.add_argument("--symmetric-fraction", type=float, default=0.30)
    p.add_argument("--bootstrap-resamples", type=int, default=2000)
    p.add_argument("--confidence", type=float, default=0.90)

    sub.add_parser("aggregate", help="aggregate ranking and cross-metric correlations")
    sub.add_parser("report", help="emit the result tables")

    p = sub.add_parser("annotate-serve", help="run the human-annotation HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8710)

    p = sub.add_parser("toy-e2e", help="synthetic end-to-end run with the built-in toy model")
    p.add_argument("--out", help="output directory (defaults to the config's output_dir)")
    p.add_argument("--train-n", type=int, default=400)
    p.add_argument("--eval-n", type=int, default=100)
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("--symmetric-fraction", type=float, default=0.30)
    p.add_argument("--bootstrap-resamples", type=int, default=2000)
    p.add_argument("--confidence", type=float, default=0.90)
    return parser


COMMANDS = {
    "ingest": cmd_ingest,
    "preprocess": cmd_preprocess,
    "probe": cmd_probe,
    "partition": cmd_partition,
    "rsi": cmd_rsi,
    "cci": cmd_cci,
    "entropy": cmd_entropy,
    "aggregate": cmd_aggregate,
    "report": cmd_report,
    "annotate-serve": cmd_annotate_serve,
    "toy-e2e": cmd_toy_e2e,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = None
    if args.config:
        cfg = load_config(args.config)
    elif args.command != "toy-e2e":
        raise CliError("--config is required for this subcommand")
    elif args.out is None:
        raise CliError("toy-e2e needs either --config or --out")
    return COMMANDS[args.command](cfg, args)


if __name__ == "__main__":
    sys.exit(main())
