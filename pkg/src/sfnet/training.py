"""Mini-batch Adam training of the networks by likelihood maximization."""
from __future__ import annotations

import csv
import dataclasses
import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data.schema import DEFAULT_INDEX, EncodedDataset, FeatureSchema
from .errors import ContractError, TrainingDivergence
from .metrics import evaluate
from .model.network import Architecture, SFNetParams, init_params, predict_proba, record_forward
from .numeric import Tape, backward

log = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "train_loss", "val_auc", "val_accuracy", "val_avg_ll", "wall_seconds")


@dataclass
class TrainConfig:
    batch_size: int = 2048
    max_epochs: int = 50
    min_epochs: int = 15
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    l2_customer_emb: float = 0.1
    l2_article_emb: float = 0.01
    l2_weights: float = 0.0
    default_embedding_rate: float = 0.1
    # None substitutes DEFAULT in every embedded field
    default_embedding_fields: list | None = None
    early_stop_patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        if self.early_stop_patience < 1:
            raise ContractError("early_stop_patience must be >= 1")
        if self.max_epochs < 1 or self.min_epochs < 0:
            raise ContractError("epoch bounds must be positive")
        for name in ("learning_rate", "adam_beta1", "adam_beta2", "default_embedding_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ContractError(f"{name} must lie in [0, 1], got {v}")
        for name in ("l2_customer_emb", "l2_article_emb", "l2_weights", "adam_eps"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be non-negative")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ContractError(f"unknown training options {sorted(unknown)}")
        return cls(**d)


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0
    skipped: int = 0


def adam_step(params: SFNetParams, grads: dict, state: AdamState, config: TrainConfig):
    """Bias-corrected Adam update, in place on ``params.tensors``.

    A step with any non-finite gradient is skipped and counted in
    ``state.skipped``.
    """
    for name, g in grads.items():
        if g.shape != params.tensors[name].shape:
            raise ContractError(f"gradient shape {g.shape} does not match parameter {name!r}")
    if not all(np.all(np.isfinite(g)) for g in grads.values()):
        state.skipped += 1
        warnings.warn(f"skipping Adam step with non-finite gradient (total skipped: {state.skipped})",
                      RuntimeWarning, stacklevel=2)
        return params, state
    state.t += 1
    b1, b2 = config.adam_beta1, config.adam_beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for name, g in grads.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(g)
            state.v[name] = np.zeros_like(g)
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        params.tensors[name] -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.adam_eps)
    return params, state


def apply_default_embedding_dropout(batch: EncodedDataset, config: TrainConfig, epoch_rng,
                                    customer_fields=None, article_fields=None) -> EncodedDataset:
    """Replace categorical indices by DEFAULT independently per (example, field).

    ``customer_fields`` / ``article_fields`` name the columns of the batch so
    that ``config.default_embedding_fields`` can restrict the substitution.
    """
    out = batch.copy()
    rate = config.default_embedding_rate
    for attr, names in (("customer_cat", customer_fields), ("article_cat", article_fields)):
        cat = getattr(out, attr)
        draw = epoch_rng.random(cat.shape) < rate
        if config.default_embedding_fields is not None and names is not None:
            keep = np.asarray([n in config.default_embedding_fields for n in names], dtype=bool)
            draw &= keep[None, :]
        cat[draw] = DEFAULT_INDEX
    return out


def _record_loss(params: SFNetParams, batch: EncodedDataset, config: TrainConfig):
    tape = Tape()
    probs, used = record_forward(tape, params, batch)
    total = tape.mean(tape.cross_entropy(probs, batch.outcome))
    data_term = float(total.value)
    for key, rows in used.items():
        lam = config.l2_customer_emb if key.startswith("emb.customer.") else config.l2_article_emb
        if lam > 0:
            table = tape.params[key]
            pen = tape.scale(tape.sum_squares(tape.gather(table, rows)), lam)
            total = tape.add(total, pen)
    if config.l2_weights > 0:
        for key in params.tensors:
            if key.endswith(".weight") or key.endswith(".skip"):
                w = tape.param(key, params.tensors[key])
                total = tape.add(total, tape.scale(tape.sum_squares(w), config.l2_weights))
    return tape, total, data_term


def batch_loss(params: SFNetParams, batch: EncodedDataset, config: TrainConfig) -> float:
    """Mean cross-entropy plus L2 on the embedding rows the batch touches."""
    if len(batch) == 0:
        raise ContractError("batch is empty")
    _, total, _ = _record_loss(params, batch, config)
    return float(total.value)


def loss_and_grads(params: SFNetParams, batch: EncodedDataset, config: TrainConfig):
    if len(batch) == 0:
        raise ContractError("batch is empty")
    tape, total, data_term = _record_loss(params, batch, config)
    grads = backward(tape, total)
    # tables the batch never reached still need an (all-zero) entry for Adam
    for key, value in params.tensors.items():
        if key not in grads:
            grads[key] = np.zeros_like(value)
    return float(total.value), grads, data_term


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_auc: float
    val_accuracy: float
    val_avg_ll: float
    wall_seconds: float
    best_val_auc: float


@dataclass
class TrainResult:
    params: SFNetParams
    log: list
    best_epoch: int
    best_val_auc: float
    skipped_steps: int


def write_log_csv(entries, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(LOG_COLUMNS)
        for e in entries:
            w.writerow([e.epoch] + [repr(float(getattr(e, c))) for c in LOG_COLUMNS[1:]])


def _as_dataset(data, schema) -> EncodedDataset:
    if isinstance(data, EncodedDataset):
        return data
    return EncodedDataset.from_examples(list(data), schema)


def train(train_set, val_set, schema: FeatureSchema, architecture: str = "sfnet",
          config: TrainConfig | None = None, params: SFNetParams | None = None,
          epoch_callback=None) -> TrainResult:
    """Fit a network; keeps the parameters with the best validation AUC.

    Stops after ``max_epochs`` or once validation AUC has not improved for
    ``early_stop_patience`` epochs (never before ``min_epochs``).
    """
    config = config or TrainConfig()
    train_set = _as_dataset(train_set, schema)
    val_set = _as_dataset(val_set, schema)
    if len(train_set) == 0 or len(val_set) == 0:
        raise ContractError("training and validation sets must be non-empty")
    if params is None:
        params = init_params(Architecture.from_schema(schema, architecture), seed=config.seed)
    cust_fields = [n for n, _ in schema.customer_categorical]
    art_fields = [n for n, _ in schema.article_categorical]

    state = AdamState()
    best_auc = -np.inf
    best_params = params.copy()
    best_epoch = 0
    since_best = 0
    entries: list[EpochLog] = []
    start = time.perf_counter()
    n = len(train_set)

    for epoch in range(1, config.max_epochs + 1):
        rng = np.random.default_rng([config.seed, 1, epoch])
        shuffled = train_set.subset(rng.permutation(n))
        shuffled = apply_default_embedding_dropout(shuffled, config, rng, cust_fields, art_fields)
        loss_sum, loss_n = 0.0, 0
        for lo in range(0, n, config.batch_size):
            batch = shuffled.subset(np.arange(lo, min(lo + config.batch_size, n)))
            loss, grads, _ = loss_and_grads(params, batch, config)
            if np.isfinite(loss):
                loss_sum += loss * len(batch)
                loss_n += len(batch)
            adam_step(params, grads, state, config)
        if loss_n == 0:
            raise TrainingDivergence(f"training loss non-finite for all of epoch {epoch}", log=entries)
        train_loss = loss_sum / loss_n

        probs = predict_proba(params, val_set)
        if np.all(np.isfinite(probs)):
            rep = evaluate(probs, val_set.outcome)
            val_auc, val_acc, val_ll = rep.micro_auc, rep.accuracy, rep.avg_log_likelihood
        else:
            val_auc = val_acc = val_ll = float("nan")
        if val_auc > best_auc:
            best_auc, best_params, best_epoch, since_best = val_auc, params.copy(), epoch, 0
        else:
            since_best += 1
        entry = EpochLog(epoch, train_loss, val_auc, val_acc, val_ll,
                         time.perf_counter() - start, float(best_auc))
        entries.append(entry)
        log.info("epoch %d loss %.5f val_auc %.4f", epoch, train_loss, val_auc)
        if epoch_callback is not None:
            epoch_callback(entry, params)
        if epoch >= config.min_epochs and since_best >= config.early_stop_patience:
            break

    return TrainResult(best_params, entries, best_epoch, float(best_auc), state.skipped)
