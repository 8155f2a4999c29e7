"""The two-pathway size-and-fit network and its single-pathway MLP variant.

Every hidden layer computes ``tanh(h W + b) + shortcut(h)`` where the
shortcut is the identity when input and output widths agree and a learned
linear projection otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data.schema import EncodedDataset, EncodedExample, FeatureSchema
from ..errors import ContractError
from ..numeric import Tape, Var

SFNET = "sfnet"
MLP = "mlp"
ARCHITECTURES = (SFNET, MLP)

EMBEDDING_DIM = 10
PATHWAY_WIDTHS = (25, 15, 10)
TOP_WIDTHS = (50, 100, 200, 500)
EMBEDDING_INIT = 0.05


@dataclass(frozen=True)
class Architecture:
    kind: str
    customer_vocab: tuple  # ((field, vocab_size), ...)
    article_vocab: tuple
    n_customer_cont: int
    n_article_cont: int
    k: int
    embedding_dim: int = EMBEDDING_DIM
    pathway_widths: tuple = PATHWAY_WIDTHS
    top_widths: tuple = TOP_WIDTHS

    def __post_init__(self):
        if self.kind not in ARCHITECTURES:
            raise ContractError(f"unknown architecture {self.kind!r}")
        if self.k < 2:
            raise ContractError("need at least two outcome classes")

    @classmethod
    def from_schema(cls, schema: FeatureSchema, kind: str = SFNET, **overrides) -> "Architecture":
        return cls(
            kind=kind,
            customer_vocab=tuple((n, len(v)) for n, v in schema.customer_categorical),
            article_vocab=tuple((n, len(v)) for n, v in schema.article_categorical),
            n_customer_cont=len(schema.customer_continuous),
            n_article_cont=len(schema.article_continuous),
            k=schema.k,
            **overrides,
        )

    def side_width(self, entity: str) -> int:
        vocab = self.customer_vocab if entity == "customer" else self.article_vocab
        n_cont = self.n_customer_cont if entity == "customer" else self.n_article_cont
        # each continuous feature contributes its value and a presence bit
        return len(vocab) * self.embedding_dim + 2 * n_cont

    def pathways(self) -> dict[str, list[int]]:
        """Layer widths per pathway, input width first."""
        if self.kind == SFNET:
            paths = {
                "customer": [self.side_width("customer"), *self.pathway_widths],
                "article": [self.side_width("article"), *self.pathway_widths],
            }
            top_in = 2 * self.pathway_widths[-1]
        else:
            merged = [2 * w for w in self.pathway_widths]
            paths = {"mlp": [self.side_width("customer") + self.side_width("article"), *merged]}
            top_in = merged[-1]
        paths["top"] = [top_in, *self.top_widths]
        return paths

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "customer_vocab": [list(x) for x in self.customer_vocab],
            "article_vocab": [list(x) for x in self.article_vocab],
            "n_customer_cont": self.n_customer_cont,
            "n_article_cont": self.n_article_cont,
            "k": self.k,
            "embedding_dim": self.embedding_dim,
            "pathway_widths": list(self.pathway_widths),
            "top_widths": list(self.top_widths),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Architecture":
        return cls(
            kind=d["kind"],
            customer_vocab=tuple((n, int(s)) for n, s in d["customer_vocab"]),
            article_vocab=tuple((n, int(s)) for n, s in d["article_vocab"]),
            n_customer_cont=int(d["n_customer_cont"]),
            n_article_cont=int(d["n_article_cont"]),
            k=int(d["k"]),
            embedding_dim=int(d["embedding_dim"]),
            pathway_widths=tuple(d["pathway_widths"]),
            top_widths=tuple(d["top_widths"]),
        )


def embedding_name(entity: str, field_name: str) -> str:
    return f"emb.{entity}.{field_name}"


@dataclass
class SFNetParams:
    """All trainable tensors of one network, in a fixed order."""

    arch: Architecture
    tensors: dict = field(default_factory=dict)

    def copy(self) -> "SFNetParams":
        return SFNetParams(self.arch, {k: v.copy() for k, v in self.tensors.items()})

    @property
    def n_parameters(self) -> int:
        return int(sum(v.size for v in self.tensors.values()))

    def embedding_tables(self, entity: str) -> list[str]:
        return [k for k in self.tensors if k.startswith(f"emb.{entity}.")]


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(arch: Architecture, seed: int = 0) -> SFNetParams:
    rng = np.random.default_rng(seed)
    t = {}
    for entity, vocab in (("customer", arch.customer_vocab), ("article", arch.article_vocab)):
        for name, size in vocab:
            t[embedding_name(entity, name)] = rng.uniform(
                -EMBEDDING_INIT, EMBEDDING_INIT, size=(size, arch.embedding_dim)
            )
    for prefix, widths in arch.pathways().items():
        for i, (w_in, w_out) in enumerate(zip(widths[:-1], widths[1:])):
            t[f"{prefix}.{i}.weight"] = _glorot(rng, w_in, w_out)
            t[f"{prefix}.{i}.bias"] = np.zeros(w_out)
            if w_in != w_out:
                t[f"{prefix}.{i}.skip"] = _glorot(rng, w_in, w_out)
    last = arch.pathways()["top"][-1]
    t["output.weight"] = _glorot(rng, last, arch.k)
    t["output.bias"] = np.zeros(arch.k)
    return SFNetParams(arch, t)


def closed_form_param_count(arch: Architecture) -> int:
    """Parameter count from the layer widths and vocabulary sizes alone."""
    n = sum(s for _, s in arch.customer_vocab + arch.article_vocab) * arch.embedding_dim
    for widths in arch.pathways().values():
        for w_in, w_out in zip(widths[:-1], widths[1:]):
            n += w_in * w_out + w_out + (w_in * w_out if w_in != w_out else 0)
    n += arch.pathways()["top"][-1] * arch.k + arch.k
    return n


def _side_inputs(tape: Tape, params: SFNetParams, entity: str, cat, cont, present, used):
    arch = params.arch
    vocab = arch.customer_vocab if entity == "customer" else arch.article_vocab
    parts = []
    for j, (name, size) in enumerate(vocab):
        idx = cat[:, j]
        if idx.size and (idx.min() < 0 or idx.max() >= size):
            raise ContractError(f"index out of range for {entity} field {name!r} (vocab {size})")
        key = embedding_name(entity, name)
        table = tape.param(key, params.tensors[key])
        parts.append(tape.gather(table, idx))
        used[key] = np.unique(idx)
    if cont.shape[1]:
        parts.append(tape.constant(cont))
        parts.append(tape.constant(present))
    return parts


def _pathway(tape: Tape, params: SFNetParams, prefix: str, h: Var) -> Var:
    widths = params.arch.pathways()[prefix]
    for i, (w_in, w_out) in enumerate(zip(widths[:-1], widths[1:])):
        w = tape.param(f"{prefix}.{i}.weight", params.tensors[f"{prefix}.{i}.weight"])
        b = tape.param(f"{prefix}.{i}.bias", params.tensors[f"{prefix}.{i}.bias"])
        z = tape.tanh(tape.add_bias(tape.matmul(h, w), b))
        if w_in != w_out:
            p = tape.param(f"{prefix}.{i}.skip", params.tensors[f"{prefix}.{i}.skip"])
            shortcut = tape.matmul(h, p)
        else:
            shortcut = h
        h = tape.add(z, shortcut)
    return h


def _check_batch(params: SFNetParams, batch: EncodedDataset):
    a = params.arch
    if batch.customer_cat.shape[1] != len(a.customer_vocab) or batch.article_cat.shape[1] != len(a.article_vocab):
        raise ContractError("batch categorical columns do not match the architecture")
    if batch.customer_cont.shape[1] != a.n_customer_cont or batch.article_cont.shape[1] != a.n_article_cont:
        raise ContractError("batch continuous columns do not match the architecture")


def record_forward(tape: Tape, params: SFNetParams, batch: EncodedDataset):
    """Record the forward pass on ``tape``.

    Returns ``(probs, used)`` where ``probs`` is an ``(n, k)`` Var and
    ``used`` maps each embedding table name to the unique rows the batch
    touched.
    """
    _check_batch(params, batch)
    used: dict[str, np.ndarray] = {}
    cust = _side_inputs(tape, params, "customer", batch.customer_cat, batch.customer_cont,
                        batch.customer_present, used)
    art = _side_inputs(tape, params, "article", batch.article_cat, batch.article_cont,
                       batch.article_present, used)
    if params.arch.kind == SFNET:
        if not cust or not art:
            raise ContractError("both pathways need at least one input feature")
        c_lat = _pathway(tape, params, "customer", tape.concat(cust))
        a_lat = _pathway(tape, params, "article", tape.concat(art))
        h = tape.concat([c_lat, a_lat])
    else:
        h = _pathway(tape, params, "mlp", tape.concat(cust + art))
    h = _pathway(tape, params, "top", h)
    w = tape.param("output.weight", params.tensors["output.weight"])
    b = tape.param("output.bias", params.tensors["output.bias"])
    logits = tape.add_bias(tape.matmul(h, w), b)
    return tape.softmax(logits), used


def predict_proba(params: SFNetParams, data: EncodedDataset, batch_size: int = 8192) -> np.ndarray:
    """Outcome distributions for every row of ``data`` as an ``(n, k)`` array."""
    out = np.empty((len(data), params.arch.k))
    for start in range(0, len(data), batch_size):
        sl = np.arange(start, min(start + batch_size, len(data)))
        probs, _ = record_forward(Tape(), params, data.subset(sl))
        out[sl] = probs.value
    return out


def _single(example: EncodedExample) -> EncodedDataset:
    def row(x, dtype):
        return np.asarray([x], dtype=dtype).reshape(1, len(x))

    return EncodedDataset(
        row(example.customer_cat_indices, np.int64),
        row(example.customer_cont, np.float64),
        row(example.customer_cont_present, np.float64),
        row(example.article_cat_indices, np.int64),
        row(example.article_cont, np.float64),
        row(example.article_cont_present, np.float64),
        np.asarray([max(example.outcome_index, 0)], dtype=np.int64),
    )


def sfnet_forward(params: SFNetParams, example: EncodedExample) -> np.ndarray:
    if params.arch.kind != SFNET:
        raise ContractError("sfnet_forward needs SFnet parameters")
    return predict_proba(params, _single(example))[0]


def mlp_forward(params: SFNetParams, example: EncodedExample) -> np.ndarray:
    if params.arch.kind != MLP:
        raise ContractError("mlp_forward needs MLP parameters")
    return predict_proba(params, _single(example))[0]
