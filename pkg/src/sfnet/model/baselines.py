"""Non-neural comparators: Laplace-smoothed Naive Bayes and a conditioned
population marginal."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..data.schema import EncodedDataset, FeatureSchema
from ..errors import ContractError


@dataclass
class NBModel:
    """Categorical Naive Bayes over integer-coded features.

    ``log_cond[f]`` has shape ``(k, vocab_size[f])`` and holds
    ``log((count(c, v) + alpha) / (count(c) + alpha * V_f))``.
    """

    log_prior: np.ndarray
    log_cond: list
    alpha: float

    @property
    def k(self) -> int:
        return self.log_prior.shape[0]

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray, vocab_sizes, k: int, alpha: float = 1.0) -> "NBModel":
        X = np.asarray(X, dtype=np.int64).reshape(len(y), len(vocab_sizes))
        y = np.asarray(y, dtype=np.int64)
        if y.size == 0:
            raise ContractError("Naive Bayes needs at least one training example")
        class_counts = np.bincount(y, minlength=k).astype(np.float64)
        with np.errstate(divide="ignore"):
            log_prior = np.log(class_counts / class_counts.sum())
        log_cond = []
        for j, V in enumerate(vocab_sizes):
            counts = np.zeros((k, V))
            np.add.at(counts, (y, X[:, j]), 1.0)
            log_cond.append(np.log((counts + alpha) / (class_counts[:, None] + alpha * V)))
        return cls(log_prior, log_cond, float(alpha))

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.int64)
        X = X.reshape(X.shape[0] if X.ndim == 2 else -1, len(self.log_cond))
        scores = np.repeat(self.log_prior[None, :], X.shape[0], axis=0)
        for j, table in enumerate(self.log_cond):
            scores = scores + table[:, X[:, j]].T
        scores = scores - scores.max(axis=1, keepdims=True)
        p = np.exp(scores)
        return p / p.sum(axis=1, keepdims=True)

    def to_dict(self) -> dict:
        return {
            "model": "naive-bayes",
            "alpha": self.alpha,
            "log_prior": self.log_prior.tolist(),
            "log_cond": [t.tolist() for t in self.log_cond],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NBModel":
        return cls(np.asarray(d["log_prior"], dtype=np.float64),
                   [np.asarray(t, dtype=np.float64) for t in d["log_cond"]], float(d["alpha"]))


def _categorical_matrix(data: EncodedDataset) -> np.ndarray:
    return np.concatenate([data.customer_cat, data.article_cat], axis=1)


def naive_bayes_fit(train: EncodedDataset, schema: FeatureSchema, alpha: float = 1.0) -> NBModel:
    """Fit on every categorical field of ``schema``; continuous ones are ignored."""
    if len(train) == 0:
        raise ContractError("Naive Bayes needs at least one training example")
    sizes = schema.vocab_sizes("customer") + schema.vocab_sizes("article")
    return NBModel.fit(_categorical_matrix(train), train.outcome, sizes, schema.k, alpha)


def naive_bayes_predict(model: NBModel, data: EncodedDataset) -> np.ndarray:
    return model.predict_proba(_categorical_matrix(data))


@dataclass
class MarginalModel:
    """Smoothed outcome distribution per cell of the conditioning fields."""

    condition_fields: list
    cells: dict  # tuple of indices -> probability vector
    global_dist: np.ndarray

    def predict_keys(self, keys) -> np.ndarray:
        return np.asarray([self.cells.get(tuple(key), self.global_dist) for key in keys])

    def to_dict(self) -> dict:
        return {
            "model": "marginal",
            "condition_fields": list(self.condition_fields),
            "cells": [[list(k), v.tolist()] for k, v in sorted(self.cells.items())],
            "global": self.global_dist.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarginalModel":
        cells = {tuple(k): np.asarray(v, dtype=np.float64) for k, v in d["cells"]}
        return cls(list(d["condition_fields"]), cells, np.asarray(d["global"], dtype=np.float64))


def _condition_columns(data: EncodedDataset, schema: FeatureSchema, fields) -> np.ndarray:
    cust = [n for n, _ in schema.customer_categorical]
    art = [n for n, _ in schema.article_categorical]
    cols = []
    for f in fields:
        if f in cust:
            cols.append(data.customer_cat[:, cust.index(f)])
        elif f in art:
            cols.append(data.article_cat[:, art.index(f)])
        else:
            raise ContractError(f"condition field {f!r} is not a categorical schema field")
    if not cols:
        return np.zeros((len(data), 0), dtype=np.int64)
    return np.stack(cols, axis=1)


def marginal_fit(train: EncodedDataset, schema: FeatureSchema, condition_fields=(), alpha: float = 1.0) -> MarginalModel:
    k = schema.k
    keys = _condition_columns(train, schema, condition_fields)
    y = train.outcome
    global_counts = np.bincount(y, minlength=k).astype(np.float64)
    global_dist = (global_counts + alpha) / (global_counts.sum() + alpha * k)
    cells: dict[tuple, np.ndarray] = {}
    counts: dict[tuple, np.ndarray] = {}
    for key, label in zip(map(tuple, keys.tolist()), y.tolist()):
        counts.setdefault(key, np.zeros(k))[label] += 1.0
    for key, c in counts.items():
        cells[key] = (c + alpha) / (c.sum() + alpha * k)
    return MarginalModel(list(condition_fields), cells, global_dist)


def marginal_predict(model: MarginalModel, data: EncodedDataset, schema: FeatureSchema) -> np.ndarray:
    keys = _condition_columns(data, schema, model.condition_fields)
    return model.predict_keys(keys.tolist())


def save_baseline(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_baseline(path):
    with open(path, "r", encoding="utf-8") as fh:
        d = json.load(fh)
    if d.get("model") == "naive-bayes":
        return NBModel.from_dict(d)
    if d.get("model") == "marginal":
        return MarginalModel.from_dict(d)
    raise ContractError(f"{path}: unknown baseline model {d.get('model')!r}")
