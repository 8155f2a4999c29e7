"""Reproducible multi-trial experiments: prepare, train, evaluate, predict.

Directory layout under ``out``::

    config.yaml                 fully resolved experiment config
    stats.json                  dataset statistics
    trial_<seed>/schema.json
    trial_<seed>/{train,val,test}.sfds
    trial_<seed>/test_ids.json  (customer_id, article_id) per test row
    trial_<seed>/<arch>/checkpoint.sfck | model.json
    trial_<seed>/<arch>/train_log.csv, val_report.json, test_report.json
    <arch>_aggregate.json, <arch>_roc_best.csv
"""
from __future__ import annotations

import copy
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .data.cache import load_split, save_split
from .data.records import dataset_stats, get_dialect, parse_jsonl, record_from_json
from .data.schema import _COLUMNS, EncodedDataset, FeatureSchema, build_schema, encode, encode_records
from .data.split import CHRONOLOGICAL, RANDOM, SplitSpec, split_indices
from .errors import CheckpointError, ContractError, TrainingDivergence
from .metrics import aggregate_trials, evaluate, format_aggregate, roc_points, write_roc_csv
from .model.baselines import (
    MarginalModel,
    NBModel,
    load_baseline,
    marginal_fit,
    marginal_predict,
    naive_bayes_fit,
    naive_bayes_predict,
    save_baseline,
)
from .model.checkpoint import load_checkpoint, save_checkpoint
from .model.distributions import truncate_renormalize
from .model.network import predict_proba
from .training import TrainConfig, train, write_log_csv

log = logging.getLogger(__name__)

NEURAL = ("sfnet", "mlp")
BASELINES = ("naive-bayes", "marginal")
ARCHS = NEURAL + BASELINES
SPLIT_ALIASES = {"random": RANDOM, "chrono": CHRONOLOGICAL, "chronological": CHRONOLOGICAL}


@dataclass
class ExperimentConfig:
    dataset: str | None = None
    dialect: str = "modcloth"
    split: dict = field(default_factory=lambda: {
        "mode": RANDOM, "train_fraction": 0.8, "validation_fraction": 0.1, "test_fraction": 0.1,
    })
    arch: str = "sfnet"
    train: dict = field(default_factory=dict)
    exclude_features: list = field(default_factory=list)
    condition_fields: list = field(default_factory=lambda: ["category"])
    out: str = "runs/experiment"
    seeds: list = field(default_factory=lambda: list(range(10)))
    deterministic: bool = False
    workers: int = 1

    def validate(self, need_dataset: bool = False) -> "ExperimentConfig":
        d = get_dialect(self.dialect)
        if self.arch not in ARCHS:
            raise ContractError(f"unknown architecture {self.arch!r}; choose from {ARCHS}")
        bad = set(self.exclude_features) - set(d.sources)
        if bad:
            raise ContractError(f"excluded features {sorted(bad)} are not {d.name} features {d.sources}")
        mode = SPLIT_ALIASES.get(self.split.get("mode", RANDOM))
        if mode is None:
            raise ContractError(f"unknown split mode {self.split.get('mode')!r}")
        self.split = {**self.split, "mode": mode}
        if not self.seeds:
            raise ContractError("at least one trial seed is required")
        self.seeds = [int(s) for s in self.seeds]
        TrainConfig.from_dict(self.train)
        if need_dataset and (self.dataset is None or not Path(self.dataset).is_file()):
            raise ContractError(f"dataset file not found: {self.dataset!r}")
        return self

    def split_spec(self, seed: int) -> SplitSpec:
        s = self.split
        return SplitSpec(
            train_fraction=float(s.get("train_fraction", 0.8)),
            validation_fraction=float(s.get("validation_fraction", 0.1)),
            test_fraction=float(s.get("test_fraction", 0.1)),
            mode=s["mode"],
            seed=seed,
        )

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig.from_dict({**self.train, "seed": seed})

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "dialect": self.dialect,
            "split": dict(self.split),
            "arch": self.arch,
            "train": dict(self.train),
            "exclude_features": list(self.exclude_features),
            "condition_fields": list(self.condition_fields),
            "out": self.out,
            "seeds": list(self.seeds),
            "deterministic": self.deterministic,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls().to_dict())
        unknown = set(d) - known
        if unknown:
            raise ContractError(f"unknown config keys {sorted(unknown)}")
        base = cls()
        merged = {**base.to_dict(), **{k: copy.deepcopy(v) for k, v in d.items() if v is not None}}
        if "split" in d and d["split"]:
            merged["split"] = {**base.split, **d["split"]}
        return cls(**merged)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            d = yaml.safe_load(fh) or {}
        if not isinstance(d, dict):
            raise ContractError(f"{path}: config must be a mapping")
        return cls.from_dict(d)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=True)


def _trial_dir(cfg: ExperimentConfig, seed: int) -> Path:
    return Path(cfg.out) / f"trial_{seed}"


def _write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


@contextmanager
def _single_threaded(enabled: bool):
    if not enabled:
        yield
        return
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover
        yield
        return
    with threadpool_limits(limits=1):
        yield


# -- prepare ------------------------------------------------------------------

def cmd_prepare(cfg: ExperimentConfig) -> dict:
    """Parse the dataset, write stats, and per-seed schema + encoded splits."""
    cfg.validate(need_dataset=True)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.save(out / "config.yaml")
    records = parse_jsonl(cfg.dataset, cfg.dialect)
    if not records:
        raise ContractError(f"{cfg.dataset}: no usable records")
    stats = dataset_stats(records)
    _write_json(stats, out / "stats.json")
    for seed in cfg.seeds:
        tdir = _trial_dir(cfg, seed)
        tdir.mkdir(parents=True, exist_ok=True)
        tr, va, te = split_indices(records, cfg.split_spec(seed))
        train_recs = [records[i] for i in tr]
        schema = build_schema(train_recs, cfg.dialect, exclude=cfg.exclude_features)
        schema.save(tdir / "schema.json")
        for name, idx in (("train", tr), ("val", va), ("test", te)):
            save_split(tdir / f"{name}.sfds", encode_records([records[i] for i in idx], schema), schema.hash)
        _write_json([[records[i].customer_id, records[i].article_id] for i in te], tdir / "test_ids.json")
    return stats


def _caches_ready(cfg: ExperimentConfig) -> bool:
    return all(
        (_trial_dir(cfg, s) / f).is_file()
        for s in cfg.seeds
        for f in ("schema.json", "train.sfds", "val.sfds", "test.sfds")
    )


def _load_trial(cfg: ExperimentConfig, seed: int, parts=("train", "val", "test")):
    tdir = _trial_dir(cfg, seed)
    schema = FeatureSchema.load(tdir / "schema.json")
    data = {p: load_split(tdir / f"{p}.sfds", schema.hash)[0] for p in parts}
    return schema, data


# -- train --------------------------------------------------------------------

def _train_one(cfg_dict: dict, seed: int) -> dict:
    cfg = ExperimentConfig.from_dict(cfg_dict)
    schema, data = _load_trial(cfg, seed, ("train", "val"))
    adir = _trial_dir(cfg, seed) / cfg.arch
    adir.mkdir(parents=True, exist_ok=True)
    tcfg = cfg.train_config(seed)
    with _single_threaded(cfg.deterministic):
        if cfg.arch == "naive-bayes":
            # baselines need no tuning: the validation split is merged into training
            merged = _concat(data["train"], data["val"])
            model = naive_bayes_fit(merged, schema)
            save_baseline(model, adir / "model.json")
            probs = naive_bayes_predict(model, data["val"])
        elif cfg.arch == "marginal":
            merged = _concat(data["train"], data["val"])
            model = marginal_fit(merged, schema, cfg.condition_fields)
            save_baseline(model, adir / "model.json")
            probs = marginal_predict(model, data["val"], schema)
        else:
            try:
                result = train(data["train"], data["val"], schema, cfg.arch, tcfg)
            except TrainingDivergence as exc:
                if exc.log:
                    write_log_csv(exc.log, adir / "train_log.csv")
                return {"seed": seed, "status": "diverged", "error": str(exc)}
            save_checkpoint(result.params, schema, tcfg, adir / "checkpoint.sfck")
            write_log_csv(result.log, adir / "train_log.csv")
            ck = load_checkpoint(adir / "checkpoint.sfck", schema.hash)
            probs = predict_proba(ck.params, data["val"])
    report = evaluate(probs, data["val"].outcome)
    with open(adir / "val_report.json", "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    return {"seed": seed, "status": "ok", "val_auc": report.micro_auc}


def _concat(a, b):
    return EncodedDataset(*(np.concatenate([getattr(a, c), getattr(b, c)]) for c in _COLUMNS))


def cmd_train(cfg: ExperimentConfig) -> list[dict]:
    """Train one model per seed. A diverging trial does not stop the others."""
    cfg.validate()
    if not _caches_ready(cfg):
        cmd_prepare(cfg)
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    cfg.save(Path(cfg.out) / "config.yaml")
    workers = 1 if cfg.deterministic else max(1, int(cfg.workers))
    if workers == 1:
        results = [_train_one(cfg.to_dict(), s) for s in cfg.seeds]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_train_one, [cfg.to_dict()] * len(cfg.seeds), cfg.seeds))
    return results


# -- evaluate / predict --------------------------------------------------------

def load_availability(path, schema: FeatureSchema) -> dict:
    """Map article id -> sorted class indices from a JSON ``{id: [labels]}`` file."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ContractError(f"{path}: availability file must map article ids to label lists")
    out = {}
    for art, labels in raw.items():
        idx = sorted({schema.outcome_vocabulary.index(lab) for lab in labels if lab in schema.outcome_vocabulary})
        if not idx:
            raise ContractError(f"{path}: article {art!r} lists no known outcome labels")
        out[str(art)] = idx
    return out


def apply_availability(probs: np.ndarray, article_ids, availability: dict) -> np.ndarray:
    out = probs.copy()
    for i, art in enumerate(article_ids):
        avail = availability.get(str(art))
        if avail is not None:
            out[i] = truncate_renormalize(probs[i], avail)
    return out


class LoadedModel:
    """A trained network or baseline with the schema it was fitted against."""

    def __init__(self, path, schema: FeatureSchema | None = None, expected_schema_hash=None):
        path = Path(path)
        self.path = path
        if path.suffix == ".json":
            try:
                self.model = load_baseline(path)
            except (ValueError, KeyError, TypeError) as exc:
                raise CheckpointError(f"{path}: not a baseline model file ({exc})") from None
            schema_path = path.parent.parent / "schema.json"
            self.schema = schema or FeatureSchema.load(schema_path)
            if expected_schema_hash is not None and self.schema.hash != expected_schema_hash:
                raise CheckpointError(
                    f"{path}: schema hash mismatch (model {self.schema.hash}, expected {expected_schema_hash})"
                )
            self.kind = "naive-bayes" if isinstance(self.model, NBModel) else "marginal"
        else:
            ck = load_checkpoint(path, expected_schema_hash)
            self.model = ck.params
            self.schema = ck.schema
            self.kind = ck.params.arch.kind

    def predict(self, data) -> np.ndarray:
        if isinstance(self.model, NBModel):
            return naive_bayes_predict(self.model, data)
        if isinstance(self.model, MarginalModel):
            return marginal_predict(self.model, data, self.schema)
        return predict_proba(self.model, data)


def _model_path(cfg: ExperimentConfig, seed: int) -> Path:
    adir = _trial_dir(cfg, seed) / cfg.arch
    return adir / ("model.json" if cfg.arch in BASELINES else "checkpoint.sfck")


def cmd_evaluate(cfg: ExperimentConfig, checkpoints=None, availability_file=None) -> dict:
    """Score each trial's test split; write reports, the aggregate and best-trial ROC."""
    cfg.validate()
    out = Path(cfg.out)
    paths = [Path(p) for p in checkpoints] if checkpoints else [_model_path(cfg, s) for s in cfg.seeds]
    if len(paths) != len(cfg.seeds):
        raise ContractError("need exactly one checkpoint per trial seed")
    reports, rocs = [], []
    for seed, path in zip(cfg.seeds, paths):
        tdir = _trial_dir(cfg, seed)
        schema = FeatureSchema.load(tdir / "schema.json")
        test, _ = load_split(tdir / "test.sfds", schema.hash)
        model = LoadedModel(path, expected_schema_hash=schema.hash)
        probs = model.predict(test)
        if availability_file is not None:
            with open(tdir / "test_ids.json", "r", encoding="utf-8") as fh:
                ids = json.load(fh)
            probs = apply_availability(probs, [a for _, a in ids], load_availability(availability_file, schema))
        report = evaluate(probs, test.outcome)
        with open(path.parent / "test_report.json", "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
            fh.write("\n")
        reports.append(report)
        rocs.append(roc_points(probs, test.outcome))
    best = int(np.argmax([r.micro_auc for r in reports]))
    write_roc_csv(rocs[best], out / f"{cfg.arch}_roc_best.csv")
    summary = {
        "arch": cfg.arch,
        "seeds": cfg.seeds,
        "best_seed": cfg.seeds[best],
        "reports": [r.to_dict() for r in reports],
    }
    if len(reports) >= 2:
        summary["aggregate"] = aggregate_trials(reports)
        summary["formatted"] = format_aggregate(summary["aggregate"])
    _write_json(summary, out / f"{cfg.arch}_aggregate.json")
    return summary


def _query_record(obj: dict, dialect, line_no: int):
    d = get_dialect(dialect)
    obj = dict(obj)
    # queries carry no outcome; any valid label lets the record parse
    obj.setdefault(d.outcome_key, "fit")
    return record_from_json(obj, d, line_no)


def cmd_predict(checkpoint, query_file, availability_file=None, out_file=None) -> list[dict]:
    """Class probabilities per query line; unseen entities use DEFAULT embeddings."""
    model = LoadedModel(checkpoint)
    schema = model.schema
    availability = load_availability(availability_file, schema) if availability_file else None
    results: list[dict] = []
    good_lines, examples, articles = [], [], []
    with open(query_file, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = _query_record(json.loads(line), schema.dialect, line_no)
            except (ValueError, TypeError) as exc:
                results.append({"line": line_no, "error": str(exc)})
                print(f"{query_file}:{line_no}: {exc}", file=sys.stderr)
                continue
            good_lines.append(line_no)
            examples.append(encode(rec, schema, require_outcome=False))
            articles.append(rec.article_id)
    if examples:
        data = EncodedDataset.from_examples(examples, schema)
        data.outcome[:] = 0
        probs = model.predict(data)
        if availability is not None:
            probs = apply_availability(probs, articles, availability)
        for line_no, p in zip(good_lines, probs):
            results.append({"line": line_no, "probs": dict(zip(schema.outcome_vocabulary, map(float, p)))})
    results.sort(key=lambda r: r["line"])
    if out_file is not None:
        with open(out_file, "w", encoding="utf-8") as fh:
            for r in results:
                fh.write(json.dumps(r, sort_keys=True))
                fh.write("\n")
    return results
