"""Subcommand CLI orchestrating the selection pipeline over versioned artifacts.

Every stage reads and writes fixed-name files under the output directory,
so stages can be run one at a time (`synth`/`ingest` -> `build-dataset` ->
`resample` -> `train` -> `rank` -> `filter`/`search` -> `select` /
`baseline` -> `report`) or all at once with `run-all`. Reports are JSON,
traces are CSV. Exit codes: 0 success, 1 usage error, 2 data/invariant
error, 3 internal error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from datetime import date
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .errors import UsageError, VesselRiskError
from .events import CSV_SCHEMAS, EventStore, load_store
from .factors import (FactorCatalog, LabeledDataset, YEAR_DAYS, assemble_dataset)
from .filtering import FilterConfig, correlation_matrix, sliding_filter
from .forest import ForestConfig, RandomForestModel
from . import forest as forest_mod
from .pipeline import MODES, PipelineConfig, rank_factors, run_selection
from .resample import ResampleConfig, smote_tomek
from .selection import (CVConfig, GridSpec, TopNResult, grid_search, top_n_selection)
from .shap_values import (ImportanceRank, ShapMatrix, aggregate_importance,
                          beeswarm_frame, category_aggregate, shap_matrix)
from .synth import HALF_YEAR, SynthConfig, default_datestamps, generate

REPORT_FORMAT = "vesselrisk-report-v1"
BEESWARM_MAX_SAMPLES = 200

# artifact file name -> subcommand that produces it
ARTIFACTS = {
    "store": "synth (or ingest)",
    "catalog.json": "build-dataset",
    "dataset.csv": "build-dataset",
    "resampled.csv": "resample",
    "model.json": "train",
    "rank.json": "rank",
    "filtered.json": "filter",
    "grid.json": "search",
    "selection.json": "select",
    "baseline.json": "baseline",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _read_json(path: Path) -> dict:
    return json.loads(path.read_text())


def _require(outdir: Path, name: str) -> Path:
    path = outdir / name
    if not path.exists():
        producer = ARTIFACTS.get(name, "an earlier stage")
        raise UsageError(
            f"missing artifact {path}; produce it with `vesselrisk {producer}` first")
    return path


def _fresh(outdir: Path, names: list[str], force: bool) -> None:
    existing = [n for n in names if (outdir / n).exists()]
    if existing and not force:
        raise UsageError(
            f"output(s) already exist in {outdir}: {', '.join(existing)}; "
            f"pass --force to overwrite")


def _load_config(args) -> dict:
    if args.config is None:
        return {}
    path = Path(args.config)
    if not path.exists():
        raise UsageError(f"config file not found: {path}")
    try:
        cfg = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise UsageError(f"config {path} is not valid JSON: {e}")
    if not isinstance(cfg, dict):
        raise UsageError("config root must be a JSON object")
    if "inputs" in cfg and "synth" in cfg:
        raise UsageError("config must give exactly one of 'inputs' and 'synth'")
    return cfg


def _master_seed(args, cfg: dict) -> int:
    return args.seed if args.seed is not None else int(cfg.get("seed", 0))


def _mode(args, cfg: dict) -> str:
    raw = args.mode or cfg.get("mode", "nested")
    if raw == "faithful":
        raw = "paper-faithful"
    if raw not in MODES:
        raise UsageError(f"mode must be one of {MODES}, got {raw!r}")
    return raw


def _catalog_from(cfg: dict) -> FactorCatalog:
    return FactorCatalog.from_config(cfg.get("catalog", {}))


def _section(cfg: dict, name: str, cls, seed: int):
    params = dict(cfg.get(name, {}))
    params.setdefault("seed", seed)
    try:
        return cls(**params)
    except TypeError as e:
        raise UsageError(f"bad {name!r} config section: {e}")


def _synth_config(cfg: dict, seed: int) -> SynthConfig:
    params = dict(cfg.get("synth", {}))
    params.setdefault("seed", seed)
    if "start" in params:
        params["start"] = date.fromisoformat(params["start"])
    if "effect_spec" in params:
        params["effect_spec"] = tuple((fid, float(c)) for fid, c in params["effect_spec"])
    try:
        return SynthConfig(**params)
    except TypeError as e:
        raise UsageError(f"bad 'synth' config section: {e}")


def _grid_spec(cfg: dict) -> GridSpec:
    params = cfg.get("grid", {})
    kwargs = {}
    if "tau_values" in params:
        kwargs["tau_values"] = tuple(params["tau_values"])
    if "window_values" in params:
        kwargs["window_values"] = tuple(params["window_values"])
    return GridSpec(**kwargs)


def _filter_config(cfg: dict) -> FilterConfig:
    params = dict(cfg.get("filter", {}))
    try:
        return FilterConfig(**params)
    except TypeError as e:
        raise UsageError(f"bad 'filter' config section: {e}")


def _store_paths(store_dir: Path) -> dict:
    return {kind: store_dir / f"{kind}.csv" for kind in CSV_SCHEMAS}


def _load_store_dir(outdir: Path) -> EventStore:
    store_dir = _require(outdir, "store")
    paths = _store_paths(store_dir)
    missing = [str(p) for p in paths.values() if not p.exists()]
    if missing:
        raise UsageError(f"store directory incomplete, missing: {missing[0]}; "
                         f"re-run `vesselrisk synth` or `vesselrisk ingest`")
    return load_store(paths)


def _datestamps(cfg: dict, store: EventStore) -> list[date]:
    if "datestamps" in cfg:
        return [date.fromisoformat(s) for s in cfg["datestamps"]]
    lo, hi = store.span
    first = lo + 5 * YEAR_DAYS
    last = hi - YEAR_DAYS
    if first > last:
        raise UsageError("store span too short for any datestamp "
                         "(needs 5y of history plus 1y of label window)")
    stamps = []
    d = first
    while d <= last:
        stamps.append(date.fromordinal(d))
        d += HALF_YEAR
    return stamps


def _load_dataset(outdir: Path) -> LabeledDataset:
    catalog = FactorCatalog.from_config(_read_json(_require(outdir, "catalog.json")))
    return LabeledDataset.from_csv(_require(outdir, "dataset.csv"), catalog)


def _load_resampled(outdir: Path) -> LabeledDataset:
    catalog = FactorCatalog.from_config(_read_json(_require(outdir, "catalog.json")))
    return LabeledDataset.from_csv(_require(outdir, "resampled.csv"), catalog)


def _load_rank(outdir: Path, name: str = "rank.json") -> ImportanceRank:
    payload = _read_json(_require(outdir, name))
    return ImportanceRank(payload["factor_ids"], np.array(payload["importance"]))


def _rank_payload(rank: ImportanceRank) -> dict:
    return {"factor_ids": list(rank.factor_ids),
            "importance": [float(v) for v in rank.importance]}


def _store_summary(store: EventStore) -> dict:
    lo, hi = store.span
    return {"counts": store.counts(), "n_vessels": len(store.vessel_ids),
            "span": [date.fromordinal(lo).isoformat(), date.fromordinal(hi).isoformat()],
            "rejected_vessels": sorted(store.rejected_vessels)}


def _metrics_csv(path: Path, trace: list[tuple[int, object]]) -> None:
    rows = []
    for n, ms in trace:
        for metric in ("accuracy", "precision", "recall", "f1", "auc"):
            rows.append((n, metric, getattr(ms, metric)))
    pd.DataFrame(rows, columns=["n", "metric", "value"]).to_csv(path, index=False)


def _selection_payload(top: TopNResult, catalog: FactorCatalog) -> dict:
    return {
        "n": top.n,
        "factor_ids": list(top.factor_ids),
        "factors": [{"id": fid, "category": catalog.get(fid).primary_category,
                     "description": catalog.get(fid).description()}
                    for fid in top.factor_ids],
        "metrics": top.metrics.as_dict(),
        "category_shares": category_aggregate(
            top.factor_ids, np.ones(len(top.factor_ids)), catalog),
    }


# -- stage implementations -------------------------------------------------------


def cmd_synth(args, cfg: dict, outdir: Path) -> None:
    if "synth" not in cfg:
        raise UsageError("`synth` needs a config with a 'synth' section")
    _fresh(outdir, ["store", "ground_truth.json", "store_summary.json"], args.force)
    synth_cfg = _synth_config(cfg, _master_seed(args, cfg))
    catalog = _catalog_from(cfg)
    store, truth = generate(synth_cfg, catalog)
    (outdir / "store").mkdir(parents=True, exist_ok=True)
    store.save_csvs(outdir / "store")
    _write_json(outdir / "store_summary.json", _store_summary(store))
    _write_json(outdir / "ground_truth.json", {
        "informative": truth.informative,
        "vessel_order": truth.vessel_order,
        "latent": {str(k): [float(v) for v in arr] for k, arr in truth.latent.items()},
    })
    print(f"synth: wrote store with {store.counts()} to {outdir / 'store'}")


def cmd_ingest(args, cfg: dict, outdir: Path) -> None:
    if "inputs" not in cfg:
        raise UsageError("`ingest` needs a config with an 'inputs' section mapping "
                         f"each of {sorted(CSV_SCHEMAS)} to a CSV path")
    missing = sorted(set(CSV_SCHEMAS) - set(cfg["inputs"]))
    if missing:
        raise UsageError(f"'inputs' section missing paths for: {missing}")
    _fresh(outdir, ["store", "store_summary.json"], args.force)
    store = load_store({k: Path(v) for k, v in cfg["inputs"].items()})
    (outdir / "store").mkdir(parents=True, exist_ok=True)
    store.save_csvs(outdir / "store")
    _write_json(outdir / "store_summary.json", _store_summary(store))
    print(f"ingest: validated and wrote store to {outdir / 'store'} "
          f"({store.counts()})")


def cmd_build_dataset(args, cfg: dict, outdir: Path) -> None:
    _fresh(outdir, ["dataset.csv", "catalog.json", "dataset_summary.json"], args.force)
    store = _load_store_dir(outdir)
    catalog = _catalog_from(cfg)
    stamps = _datestamps(cfg, store)
    dataset = assemble_dataset(store, catalog, stamps)
    dataset, zero_var = dataset.drop_zero_variance()
    dataset.to_csv(outdir / "dataset.csv")
    _write_json(outdir / "catalog.json", dataset.catalog.to_config())
    _write_json(outdir / "dataset_summary.json", {
        "n_samples": dataset.n_samples,
        "n_factors": len(dataset.catalog),
        "class_counts": dataset.class_counts(),
        "dropped_samples": dataset.dropped_samples,
        "zero_variance_removed": zero_var,
        "datestamps": [d.isoformat() for d in stamps],
    })
    print(f"build-dataset: {dataset.n_samples} samples x {len(dataset.catalog)} factors, "
          f"classes {dataset.class_counts()}")


def cmd_resample(args, cfg: dict, outdir: Path) -> None:
    _fresh(outdir, ["resampled.csv", "resample_summary.json"], args.force)
    dataset = _load_dataset(outdir)
    res_cfg = _section(cfg, "resample", ResampleConfig, _master_seed(args, cfg))
    result = smote_tomek(dataset, res_cfg)
    result.dataset.to_csv(outdir / "resampled.csv", include_synthetic=True)
    _write_json(outdir / "resample_summary.json", {
        "before": dataset.class_counts(),
        "after": result.class_counts,
        "removed_by_tomek": result.removed_by_tomek,
        "n_synthetic": int(result.dataset.synthetic.sum()),
    })
    print(f"resample: {dataset.class_counts()} -> {result.class_counts} "
          f"(tomek removed {result.removed_by_tomek})")


def cmd_train(args, cfg: dict, outdir: Path) -> None:
    _fresh(outdir, ["model.json"], args.force)
    resampled = _load_resampled(outdir)
    forest_cfg = _section(cfg, "forest", ForestConfig, _master_seed(args, cfg))
    model = forest_mod.fit(resampled.X, resampled.y, forest_cfg, n_classes=3)
    model.save(outdir / "model.json")
    print(f"train: {len(model.trees)} trees on {resampled.n_samples} samples "
          f"-> {outdir / 'model.json'}")


def cmd_rank(args, cfg: dict, outdir: Path) -> None:
    _fresh(outdir, ["rank.json", "beeswarm.csv"], args.force)
    resampled = _load_resampled(outdir)
    model = RandomForestModel.load(_require(outdir, "model.json"))
    seed = _master_seed(args, cfg)
    shap_sample = cfg.get("shap_sample")
    X = resampled.X
    if shap_sample is not None and shap_sample < len(X):
        rng = np.random.default_rng(seed)
        X = X[rng.choice(len(X), size=int(shap_sample), replace=False)]
    matrix = shap_matrix(model, X)
    rank = aggregate_importance(matrix, resampled.catalog, "global")
    per_class = {str(c): _rank_payload(aggregate_importance(matrix, resampled.catalog, c))
                 for c in range(matrix.n_classes)}
    _write_json(outdir / "rank.json", {
        **_rank_payload(rank),
        "base_values": [float(v) for v in matrix.base_values],
        "per_class": per_class,
        "category_shares": category_aggregate(rank.factor_ids, rank.importance,
                                              resampled.catalog),
    })
    k = min(matrix.n_samples, BEESWARM_MAX_SAMPLES)
    sliced = ShapMatrix(matrix.values[:k], matrix.base_values)
    beeswarm_frame(sliced, X[:k], resampled.catalog).to_csv(
        outdir / "beeswarm.csv", index=False)
    print(f"rank: top factor {rank.factor_ids[0]} "
          f"(importance {rank.importance[0]:.5f}) over {matrix.n_samples} samples")


def cmd_filter(args, cfg: dict, outdir: Path) -> None:
    _fresh(outdir, ["filtered.json", "filter_trace.csv"], args.force)
    resampled = _load_resampled(outdir)
    rank = _load_rank(outdir)
    fcfg = _filter_config(cfg)
    corr = correlation_matrix(resampled.X, resampled.catalog, fcfg.scope)
    result = sliding_filter(rank, corr, fcfg)
    _write_json(outdir / "filtered.json", {
        **_rank_payload(result.rank),
        "config": dataclasses.asdict(fcfg),
        "removed": result.removed_ids(),
        "trace": result.trace_json(),
    })
    rows = [(r.round, r.anchor, fid, corr_val)
            for r in result.trace for fid, corr_val in r.removed]
    pd.DataFrame(rows, columns=["round", "anchor", "removed_id", "r"]).to_csv(
        outdir / "filter_trace.csv", index=False)
    print(f"filter: {len(rank)} -> {len(result.rank)} factors "
          f"(tau={fcfg.r_tau}, window={fcfg.window})")


def cmd_search(args, cfg: dict, outdir: Path) -> None:
    _fresh(outdir, ["grid.json", "grid_trace.csv"], args.force)
    resampled = _load_resampled(outdir)
    rank = _load_rank(outdir)
    seed = _master_seed(args, cfg)
    fcfg = _filter_config(cfg)
    forest_cfg = _section(cfg, "forest", ForestConfig, seed)
    cv_cfg = _section(cfg, "cv", CVConfig, seed)
    corr = correlation_matrix(resampled.X, resampled.catalog, fcfg.scope)
    result = grid_search(resampled, rank, corr, _grid_spec(cfg), forest_cfg, cv_cfg,
                         fcfg.scope, fcfg.use_absolute, cfg.get("max_n"))
    cell = result.best_cell
    _write_json(outdir / "grid.json", {
        "best_tau": cell.tau, "best_window": cell.window,
        "best_n": cell.best_n, "filtered_len": cell.filtered_len,
        "metrics": cell.metrics.as_dict(),
    })
    rows = [(c.tau, c.window, c.filtered_len, c.best_n, c.metrics.accuracy,
             c.metrics.precision, c.metrics.recall, c.metrics.f1, c.metrics.auc)
            for c in result.trace.values()]
    pd.DataFrame(rows, columns=["tau", "window", "filtered_len", "best_n", "accuracy",
                                "precision", "recall", "f1", "auc"]).to_csv(
        outdir / "grid_trace.csv", index=False)
    print(f"search: best cell tau={cell.tau} window={cell.window} "
          f"n={cell.best_n} f1={cell.metrics.f1:.4f}")


def cmd_select(args, cfg: dict, outdir: Path) -> None:
    _fresh(outdir, ["selection.json", "selection_trace.csv"], args.force)
    resampled = _load_resampled(outdir)
    rank = _load_rank(outdir, "filtered.json")
    seed = _master_seed(args, cfg)
    forest_cfg = _section(cfg, "forest", ForestConfig, seed)
    cv_cfg = _section(cfg, "cv", CVConfig, seed)
    top = top_n_selection(resampled, rank, forest_cfg, cv_cfg, cfg.get("max_n"))
    _write_json(outdir / "selection.json", _selection_payload(top, resampled.catalog))
    _metrics_csv(outdir / "selection_trace.csv", top.trace)
    print(f"select: n={top.n} f1={top.metrics.f1:.4f} key factors: "
          f"{', '.join(top.factor_ids[:5])}{'...' if top.n > 5 else ''}")


def cmd_baseline(args, cfg: dict, outdir: Path) -> None:
    _fresh(outdir, ["baseline.json", "baseline_trace.csv"], args.force)
    resampled = _load_resampled(outdir)
    rank = _load_rank(outdir)
    seed = _master_seed(args, cfg)
    forest_cfg = _section(cfg, "forest", ForestConfig, seed)
    cv_cfg = _section(cfg, "cv", CVConfig, seed)
    top = top_n_selection(resampled, rank, forest_cfg, cv_cfg, cfg.get("max_n"))
    _write_json(outdir / "baseline.json", _selection_payload(top, resampled.catalog))
    _metrics_csv(outdir / "baseline_trace.csv", top.trace)
    print(f"baseline: n={top.n} f1={top.metrics.f1:.4f}")


def cmd_report(args, cfg: dict, outdir: Path) -> None:
    _fresh(outdir, ["report.json"], args.force)
    catalog = FactorCatalog.from_config(_read_json(_require(outdir, "catalog.json")))
    payload = {
        "format": REPORT_FORMAT,
        "version": __version__,
        "config": cfg,
        "mode": _mode(args, cfg),
        "seed": _master_seed(args, cfg),
    }
    for name, key in [("store_summary.json", "store"),
                      ("dataset_summary.json", "dataset"),
                      ("resample_summary.json", "resample"),
                      ("rank.json", "rank"),
                      ("filtered.json", "filter"),
                      ("grid.json", "grid"),
                      ("selection.json", "selection"),
                      ("baseline.json", "baseline")]:
        path = outdir / name
        if path.exists():
            payload[key] = _read_json(path)
    if "selection" not in payload:
        raise UsageError("report needs selection.json; run `vesselrisk select` "
                         "(or `vesselrisk run-all`) first")
    sel = payload["selection"]
    payload["key_factor_table"] = [
        {"rank": i + 1, "id": f["id"], "category": f["category"],
         "description": f["description"]}
        for i, f in enumerate(sel["factors"])
    ]
    _write_json(outdir / "report.json", payload)
    print(f"report: wrote {outdir / 'report.json'} "
          f"({len(payload['key_factor_table'])} key factors)")


def cmd_run_all(args, cfg: dict, outdir: Path) -> None:
    if ("inputs" in cfg) == ("synth" in cfg):
        raise UsageError("run-all needs exactly one of 'inputs' or 'synth' in the config")
    _fresh(outdir, ["report.json"], args.force)
    args.force = True  # inner stages regenerate their own outputs
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    if "synth" in cfg:
        cmd_synth(args, cfg, outdir)
    else:
        cmd_ingest(args, cfg, outdir)
    timings["store"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cmd_build_dataset(args, cfg, outdir)
    timings["dataset"] = time.perf_counter() - t0

    dataset = _load_dataset(outdir)
    seed = _master_seed(args, cfg)
    pipe_cfg = PipelineConfig(
        resample=_section(cfg, "resample", ResampleConfig, seed),
        forest=_section(cfg, "forest", ForestConfig, seed),
        grid=_grid_spec(cfg),
        cv=_section(cfg, "cv", CVConfig, seed),
        scope=cfg.get("filter", {}).get("scope", "WithinCategory"),
        use_absolute=cfg.get("filter", {}).get("use_absolute", True),
        mode=_mode(args, cfg),
        max_n=cfg.get("max_n"),
        shap_sample=cfg.get("shap_sample"),
        seed=seed,
    )
    t0 = time.perf_counter()
    result = run_selection(dataset, pipe_cfg)
    timings["selection_pipeline"] = time.perf_counter() - t0

    # persist the stage artifacts the pipeline produced internally
    resampled = smote_tomek(dataset, pipe_cfg.resample).dataset
    resampled.to_csv(outdir / "resampled.csv", include_synthetic=True)
    _write_json(outdir / "resample_summary.json", {
        "before": result.class_counts, "after": result.resampled_counts})
    _write_json(outdir / "rank.json", {
        **_rank_payload(result.initial_rank),
        "category_shares": category_aggregate(result.initial_rank.factor_ids,
                                              result.initial_rank.importance,
                                              dataset.catalog)})
    _write_json(outdir / "filtered.json", {
        **_rank_payload(result.filter_result.rank),
        "config": dataclasses.asdict(result.grid.best_config),
        "removed": result.filter_result.removed_ids(),
        "trace": result.filter_result.trace_json()})
    cell = result.grid.best_cell
    _write_json(outdir / "grid.json", {
        "best_tau": cell.tau, "best_window": cell.window, "best_n": cell.best_n,
        "filtered_len": cell.filtered_len, "metrics": cell.metrics.as_dict()})
    rows = [(c.tau, c.window, c.filtered_len, c.best_n, c.metrics.accuracy,
             c.metrics.precision, c.metrics.recall, c.metrics.f1, c.metrics.auc)
            for c in result.grid.trace.values()]
    pd.DataFrame(rows, columns=["tau", "window", "filtered_len", "best_n", "accuracy",
                                "precision", "recall", "f1", "auc"]).to_csv(
        outdir / "grid_trace.csv", index=False)
    sel_top = TopNResult(result.selection.n, result.key_factors,
                         result.selection.metrics, result.selection.trace)
    _write_json(outdir / "selection.json", _selection_payload(sel_top, dataset.catalog))
    _metrics_csv(outdir / "selection_trace.csv", result.selection.trace)
    _write_json(outdir / "baseline.json",
                _selection_payload(result.baseline, dataset.catalog))
    _metrics_csv(outdir / "baseline_trace.csv", result.baseline.trace)

    # the report body is deterministic; wall-clock timings live apart
    cmd_report(args, cfg, outdir)
    report = _read_json(outdir / "report.json")
    report["timings"] = {**result.timings, **timings}
    _write_json(outdir / "report.json", report)
    print(f"run-all: done, n={result.selection.n}, "
          f"key factors {result.key_factors[:3]}... -> {outdir / 'report.json'}")


COMMANDS = {
    "ingest": cmd_ingest,
    "build-dataset": cmd_build_dataset,
    "resample": cmd_resample,
    "train": cmd_train,
    "rank": cmd_rank,
    "filter": cmd_filter,
    "search": cmd_search,
    "select": cmd_select,
    "baseline": cmd_baseline,
    "synth": cmd_synth,
    "run-all": cmd_run_all,
    "report": cmd_report,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="vesselrisk",
                     description="Long-term vessel incident-risk feature selection")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", default="out", help="output directory (default: ./out)")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--mode", choices=["faithful", "nested", "paper-faithful"],
                       default=None, help="evaluation mode")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker pool size (reserved; stages are deterministic "
                            "regardless of value)")
        p.add_argument("--force", action="store_true",
                       help="overwrite existing stage outputs")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = _load_config(args)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, cfg, outdir)
        return 0
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except VesselRiskError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 3
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
