"""Feature schemas and encoding of records into model inputs."""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError, EncodingError
from .records import (
    ARTICLE,
    CATEGORICAL,
    CUSTOMER,
    OUTCOMES,
    InteractionRecord,
    get_dialect,
)

DEFAULT_INDEX = 0
MISSING_INDEX = 1
DEFAULT_TOKEN = "<default>"
MISSING_TOKEN = "<missing>"
SCHEMA_FORMAT = "sfnet-schema"
SCHEMA_VERSION = 1


@dataclass
class FeatureSchema:
    dialect: str
    customer_categorical: list  # [(name, [tokens...])]
    customer_continuous: list  # [(name, mean, std)]
    article_categorical: list
    article_continuous: list
    outcome_vocabulary: list
    _lookup: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def k(self) -> int:
        return len(self.outcome_vocabulary)

    def vocab_index(self, field_name: str) -> dict:
        if field_name not in self._lookup:
            for name, vocab in self.customer_categorical + self.article_categorical:
                if name == field_name:
                    self._lookup[name] = {tok: i for i, tok in enumerate(vocab)}
                    break
            else:
                raise KeyError(field_name)
        return self._lookup[field_name]

    def vocab_sizes(self, entity: str) -> list[int]:
        fields = self.customer_categorical if entity == CUSTOMER else self.article_categorical
        return [len(v) for _, v in fields]

    @property
    def field_names(self) -> list[str]:
        return [n for n, _ in self.customer_categorical] + [n for n, *_ in self.customer_continuous] + [
            n for n, _ in self.article_categorical
        ] + [n for n, *_ in self.article_continuous]

    def to_dict(self) -> dict:
        return {
            "format": SCHEMA_FORMAT,
            "version": SCHEMA_VERSION,
            "dialect": self.dialect,
            "customer_categorical": [[n, list(v)] for n, v in self.customer_categorical],
            "customer_continuous": [[n, m, s] for n, m, s in self.customer_continuous],
            "article_categorical": [[n, list(v)] for n, v in self.article_categorical],
            "article_continuous": [[n, m, s] for n, m, s in self.article_continuous],
            "outcome_vocabulary": list(self.outcome_vocabulary),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        if d.get("format") != SCHEMA_FORMAT or d.get("version") != SCHEMA_VERSION:
            raise ContractError(
                f"unsupported schema document (format={d.get('format')!r}, version={d.get('version')!r})"
            )
        return cls(
            dialect=d["dialect"],
            customer_categorical=[(n, list(v)) for n, v in d["customer_categorical"]],
            customer_continuous=[(n, float(m), float(s)) for n, m, s in d["customer_continuous"]],
            article_categorical=[(n, list(v)) for n, v in d["article_categorical"]],
            article_continuous=[(n, float(m), float(s)) for n, m, s in d["article_continuous"]],
            outcome_vocabulary=list(d["outcome_vocabulary"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "FeatureSchema":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "FeatureSchema":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def _outcome_order(labels) -> list[str]:
    seen = set(labels)
    ordered = [o for o in OUTCOMES if o in seen]
    return ordered + sorted(seen - set(OUTCOMES))


def build_schema(train_records, dialect="modcloth", exclude=()) -> FeatureSchema:
    """Vocabularies and standardization constants from training records only.

    ``exclude`` lists feature source names (e.g. ``"user_id"``) to leave out.
    """
    if not train_records:
        raise ContractError("build_schema needs at least one training record")
    d = get_dialect(dialect)
    exclude = set(exclude)
    unknown = exclude - set(d.sources)
    if unknown:
        raise ContractError(f"cannot exclude unknown features {sorted(unknown)} for {d.name}")
    out = {
        (CUSTOMER, True): [],
        (CUSTOMER, False): [],
        (ARTICLE, True): [],
        (ARTICLE, False): [],
    }
    for f in d.features:
        if f.source in exclude:
            continue
        vals = [r.values.get(f.name) for r in train_records]
        present = [v for v in vals if v is not None]
        if f.kind == CATEGORICAL:
            vocab = [DEFAULT_TOKEN, MISSING_TOKEN] + sorted(set(present))
            out[(f.entity, True)].append((f.name, vocab))
        else:
            if not present:
                warnings.warn(f"dropping continuous feature {f.name!r}: no observed values", stacklevel=2)
                continue
            arr = np.asarray(present, dtype=np.float64)
            std = float(arr.std())
            if not std > 0:
                warnings.warn(f"dropping continuous feature {f.name!r}: zero variance", stacklevel=2)
                continue
            out[(f.entity, False)].append((f.name, float(arr.mean()), std))
    return FeatureSchema(
        dialect=d.name,
        customer_categorical=out[(CUSTOMER, True)],
        customer_continuous=out[(CUSTOMER, False)],
        article_categorical=out[(ARTICLE, True)],
        article_continuous=out[(ARTICLE, False)],
        outcome_vocabulary=_outcome_order(r.outcome_label for r in train_records),
    )


@dataclass
class EncodedExample:
    customer_cat_indices: list
    customer_cont: list
    customer_cont_present: list
    article_cat_indices: list
    article_cont: list
    article_cont_present: list
    outcome_index: int


@dataclass
class EncodedDataset:
    """Column-stacked encoded examples; row ``i`` is one interaction."""

    customer_cat: np.ndarray  # (n, n_cust_cat) int64
    customer_cont: np.ndarray  # (n, n_cust_cont) float64
    customer_present: np.ndarray  # (n, n_cust_cont) float64 0/1
    article_cat: np.ndarray
    article_cont: np.ndarray
    article_present: np.ndarray
    outcome: np.ndarray  # (n,) int64

    def __len__(self) -> int:
        return int(self.outcome.shape[0])

    def subset(self, idx) -> "EncodedDataset":
        idx = np.asarray(idx)
        return EncodedDataset(*(getattr(self, f)[idx] for f in _COLUMNS))

    def copy(self) -> "EncodedDataset":
        return EncodedDataset(*(getattr(self, f).copy() for f in _COLUMNS))

    def example(self, i: int) -> EncodedExample:
        return EncodedExample(
            self.customer_cat[i].tolist(),
            self.customer_cont[i].tolist(),
            self.customer_present[i].astype(int).tolist(),
            self.article_cat[i].tolist(),
            self.article_cont[i].tolist(),
            self.article_present[i].astype(int).tolist(),
            int(self.outcome[i]),
        )

    @classmethod
    def from_examples(cls, examples, schema: FeatureSchema) -> "EncodedDataset":
        n = len(examples)
        widths = (
            len(schema.customer_categorical),
            len(schema.customer_continuous),
            len(schema.article_categorical),
            len(schema.article_continuous),
        )

        def stack(attr, w, dtype):
            if n == 0:
                return np.zeros((0, w), dtype=dtype)
            return np.asarray([getattr(e, attr) for e in examples], dtype=dtype).reshape(n, w)

        return cls(
            stack("customer_cat_indices", widths[0], np.int64),
            stack("customer_cont", widths[1], np.float64),
            stack("customer_cont_present", widths[1], np.float64),
            stack("article_cat_indices", widths[2], np.int64),
            stack("article_cont", widths[3], np.float64),
            stack("article_cont_present", widths[3], np.float64),
            np.asarray([e.outcome_index for e in examples], dtype=np.int64).reshape(n),
        )


_COLUMNS = (
    "customer_cat",
    "customer_cont",
    "customer_present",
    "article_cat",
    "article_cont",
    "article_present",
    "outcome",
)


def _encode_side(values: dict, cat_fields, cont_fields, schema):
    idx = []
    for name, _ in cat_fields:
        v = values.get(name)
        if v is None:
            idx.append(MISSING_INDEX)
        else:
            idx.append(schema.vocab_index(name).get(v, DEFAULT_INDEX))
    cont, present = [], []
    for name, mean, std in cont_fields:
        v = values.get(name)
        if v is None or not np.isfinite(v):
            cont.append(0.0)
            present.append(0)
        else:
            cont.append((float(v) - mean) / std)
            present.append(1)
    return idx, cont, present


def encode(record: InteractionRecord, schema: FeatureSchema, require_outcome: bool = True) -> EncodedExample:
    """Encode one normalized record.

    Unseen categorical values map to the DEFAULT index and absent ones to
    MISSING. With ``require_outcome=False`` an unknown outcome encodes as -1
    (used for prediction queries).
    """
    if record.values is None:
        raise ContractError("record has no parsed values; run normalize_compound_fields first")
    ci, cc, cp = _encode_side(record.values, schema.customer_categorical, schema.customer_continuous, schema)
    ai, ac, ap = _encode_side(record.values, schema.article_categorical, schema.article_continuous, schema)
    try:
        y = schema.outcome_vocabulary.index(record.outcome_label)
    except ValueError:
        if require_outcome:
            raise EncodingError(
                f"outcome {record.outcome_label!r} not in vocabulary {schema.outcome_vocabulary}"
            ) from None
        y = -1
    return EncodedExample(ci, cc, cp, ai, ac, ap, y)


def encode_records(records, schema: FeatureSchema, require_outcome: bool = True) -> EncodedDataset:
    return EncodedDataset.from_examples([encode(r, schema, require_outcome) for r in records], schema)
