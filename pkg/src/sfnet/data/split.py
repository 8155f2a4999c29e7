"""Random and chronological train/validation/test partitions."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError

RANDOM = "random"
CHRONOLOGICAL = "chronological"


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    validation_fraction: float = 0.1
    test_fraction: float = 0.1
    mode: str = RANDOM
    seed: int | None = 0

    def __post_init__(self):
        fr = (self.train_fraction, self.validation_fraction, self.test_fraction)
        if any(f < 0 for f in fr) or not math.isclose(sum(fr), 1.0, abs_tol=1e-9):
            raise ContractError(f"split fractions must be non-negative and sum to 1, got {fr}")
        if self.mode not in (RANDOM, CHRONOLOGICAL):
            raise ContractError(f"unknown split mode {self.mode!r}")
        if self.mode == RANDOM and self.seed is None:
            raise ContractError("random split requires a seed")


def split_sizes(n: int, spec: SplitSpec) -> tuple[int, int, int]:
    n_train = int(round(n * spec.train_fraction))
    n_val = int(round(n * spec.validation_fraction))
    n_val = min(n_val, n - n_train)
    return n_train, n_val, n - n_train - n_val


def split_indices(records, spec: SplitSpec):
    """Index arrays ``(train, validation, test)`` into ``records``."""
    n = len(records)
    if spec.mode == RANDOM:
        order = np.random.default_rng(spec.seed).permutation(n)
    else:
        stamps = [getattr(r, "timestamp", None) for r in records]
        if any(t is None for t in stamps):
            raise ContractError("chronological split needs a timestamp on every record")
        # stable: equal timestamps keep file order
        order = np.argsort(np.asarray(stamps, dtype=np.float64), kind="stable")
    n_train, n_val, _ = split_sizes(n, spec)
    return order[:n_train], order[n_train:n_train + n_val], order[n_train + n_val:]


def split(records, spec: SplitSpec):
    """Partition ``records`` into ``(train, validation, test)`` lists."""
    tr, va, te = split_indices(records, spec)
    return [records[i] for i in tr], [records[i] for i in va], [records[i] for i in te]
