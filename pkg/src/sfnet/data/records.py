"""Reading the public fit-feedback JSON-lines files.

Two dialects are supported, ``modcloth`` and ``renttherunway``. Each maps
the dataset's raw keys onto named customer and article features; compound
strings (bust size ``"34d"``, heights like ``5' 6"``) are split or converted
by :func:`normalize_compound_fields`.
"""
from __future__ import annotations

import dataclasses
import datetime as _dt
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ContractError, IngestionError

log = logging.getLogger(__name__)

OUTCOMES = ("Small", "Fit", "Large")
_OUTCOME_MAP = {"small": "Small", "fit": "Fit", "large": "Large"}
MALFORMED_LIMIT = 0.01

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"
CUSTOMER = "customer"
ARTICLE = "article"


@dataclass(frozen=True)
class FeatureDef:
    name: str
    entity: str
    kind: str
    # the user-facing feature this column comes from (for --exclude-feature)
    source: str


@dataclass(frozen=True)
class Dialect:
    name: str
    customer_key: str
    article_key: str
    outcome_key: str
    date_key: str | None
    features: tuple[FeatureDef, ...]
    # feature source name -> raw JSON key
    raw_keys: dict

    @property
    def sources(self) -> list[str]:
        seen = []
        for f in self.features:
            if f.source not in seen:
                seen.append(f.source)
        return seen


def _f(name, entity, kind, source=None):
    return FeatureDef(name, entity, kind, source or name)


MODCLOTH = Dialect(
    name="modcloth",
    customer_key="user_id",
    article_key="item_id",
    outcome_key="fit",
    date_key=None,
    features=(
        _f("category", ARTICLE, CATEGORICAL),
        _f("quality", ARTICLE, CONTINUOUS),
        _f("item_id", ARTICLE, CATEGORICAL),
        _f("size", ARTICLE, CONTINUOUS),
        _f("shoe_width", CUSTOMER, CATEGORICAL),
        _f("shoe_size", CUSTOMER, CONTINUOUS),
        _f("waist", CUSTOMER, CONTINUOUS),
        _f("bust", CUSTOMER, CONTINUOUS),
        _f("cup_size", CUSTOMER, CONTINUOUS),
        _f("bra_size", CUSTOMER, CONTINUOUS),
        _f("hips", CUSTOMER, CONTINUOUS),
        _f("height", CUSTOMER, CONTINUOUS),
        _f("user_id", CUSTOMER, CATEGORICAL),
    ),
    raw_keys={
        "category": "category",
        "quality": "quality",
        "item_id": "item_id",
        "size": "size",
        "shoe_width": "shoe width",
        "shoe_size": "shoe size",
        "waist": "waist",
        "bust": "bust",
        "cup_size": "cup size",
        "bra_size": "bra size",
        "hips": "hips",
        "height": "height",
        "user_id": "user_id",
    },
)

RENTTHERUNWAY = Dialect(
    name="renttherunway",
    customer_key="user_id",
    article_key="item_id",
    outcome_key="fit",
    date_key="review_date",
    features=(
        _f("category", ARTICLE, CATEGORICAL),
        _f("rating", ARTICLE, CONTINUOUS),
        _f("rented_for", ARTICLE, CATEGORICAL),
        _f("item_id", ARTICLE, CATEGORICAL),
        _f("size", ARTICLE, CONTINUOUS),
        _f("age", CUSTOMER, CONTINUOUS),
        _f("body_type", CUSTOMER, CATEGORICAL),
        _f("bust_size_cup", CUSTOMER, CATEGORICAL, "bust_size"),
        _f("bust_size_band", CUSTOMER, CONTINUOUS, "bust_size"),
        _f("height", CUSTOMER, CONTINUOUS),
        _f("weight", CUSTOMER, CONTINUOUS),
        _f("user_id", CUSTOMER, CATEGORICAL),
    ),
    raw_keys={
        "category": "category",
        "rating": "rating",
        "rented_for": "rented for",
        "item_id": "item_id",
        "size": "size",
        "age": "age",
        "body_type": "body type",
        "bust_size": "bust size",
        "height": "height",
        "weight": "weight",
        "user_id": "user_id",
    },
)

DIALECTS = {d.name: d for d in (MODCLOTH, RENTTHERUNWAY)}


def get_dialect(name) -> Dialect:
    if isinstance(name, Dialect):
        return name
    try:
        return DIALECTS[name]
    except KeyError:
        raise ContractError(f"unknown dialect {name!r}; expected one of {sorted(DIALECTS)}") from None


@dataclass
class InteractionRecord:
    customer_id: str
    article_id: str
    outcome_label: str
    raw_fields: dict = field(default_factory=dict)
    timestamp: float | None = None
    # parsed feature values keyed by FeatureDef.name; None means missing
    values: dict | None = None

    def __post_init__(self):
        if not (self.customer_id and self.article_id and self.outcome_label):
            raise ContractError("customer_id, article_id and outcome_label must be non-empty")


# -- compound field parsing -------------------------------------------------

_NUM = r"[-+]?\d+(?:\.\d+)?"
_HEIGHT_PATTERNS = (
    re.compile(rf"^\s*({_NUM})\s*(?:'|ft|feet)\s*(?:({_NUM})\s*(?:\"|''|in|inches)?)?\s*$", re.I),
)
_ALNUM = re.compile(rf"^\s*({_NUM})\s*([a-zA-Z+/]+)?\s*$")
_CUP_ORDER = {
    "aa": 0, "a": 1, "b": 2, "c": 3, "d": 4, "dd/e": 5, "dd": 5, "e": 5,
    "ddd/f": 6, "ddd": 6, "f": 6, "dddd/g": 7, "g": 7, "h": 8, "i": 9,
    "j": 10, "k": 11,
}


def parse_number(value) -> float | None:
    """Leading numeric value; ranges like ``"36-38"`` map to their midpoint."""
    if value is None:
        return None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    s = str(value).strip().lower()
    if not s:
        return None
    m = re.match(rf"^({_NUM})\s*-\s*({_NUM})$", s)
    if m:
        return (float(m.group(1)) + float(m.group(2))) / 2.0
    m = re.match(rf"^({_NUM})", s)
    return float(m.group(1)) if m else None


def parse_height(value) -> float | None:
    """Height in inches from ``5' 6"`` or ``5ft 6in`` style strings."""
    if value is None:
        return None
    s = str(value).strip()
    if not s:
        return None
    for pat in _HEIGHT_PATTERNS:
        m = pat.match(s)
        if m:
            inches = float(m.group(2)) if m.group(2) else 0.0
            return 12.0 * float(m.group(1)) + inches
    return None


def split_alnum(value) -> tuple[float | None, str | None]:
    """Split ``"34d"`` into ``(34.0, "d")``; unparseable input gives ``(None, None)``."""
    if value is None:
        return None, None
    m = _ALNUM.match(str(value))
    if not m:
        return None, None
    letters = m.group(2).lower() if m.group(2) else None
    return float(m.group(1)), letters


def parse_cup(value) -> float | None:
    if value is None:
        return None
    return _CUP_ORDER.get(str(value).strip().lower())


def _categorical(value) -> str | None:
    if value is None:
        return None
    s = str(value).strip()
    return s or None


def normalize_compound_fields(record: InteractionRecord, dialect="modcloth") -> InteractionRecord:
    """Return a copy of ``record`` with ``values`` filled from ``raw_fields``."""
    d = get_dialect(dialect)
    raw = record.raw_fields
    values = {}
    for f in d.features:
        key = d.raw_keys[f.source]
        v = raw.get(key)
        if f.name == "bust_size_cup":
            values[f.name] = split_alnum(v)[1]
        elif f.name == "bust_size_band":
            values[f.name] = split_alnum(v)[0]
        elif f.name == "height":
            values[f.name] = parse_height(v)
        elif f.name == "cup_size":
            values[f.name] = parse_cup(v)
        elif f.kind == CATEGORICAL:
            values[f.name] = _categorical(v)
        else:
            values[f.name] = parse_number(v)
    return dataclasses.replace(record, values=values)


# -- file parsing -------------------------------------------------------------

def _parse_date(value) -> float | None:
    if not value:
        return None
    for fmt in ("%B %d, %Y", "%Y-%m-%d"):
        try:
            return float(_dt.datetime.strptime(str(value).strip(), fmt).toordinal())
        except ValueError:
            continue
    return None


def record_from_json(obj: dict, dialect, line_no: int = 0) -> InteractionRecord:
    """Build a normalized record from one decoded JSON object.

    Raises ``ValueError`` when required keys are missing or the outcome is
    not one of small/fit/large.
    """
    d = get_dialect(dialect)
    if not isinstance(obj, dict):
        raise ValueError("line is not a JSON object")
    cust = obj.get(d.customer_key)
    art = obj.get(d.article_key)
    fit = obj.get(d.outcome_key)
    if cust in (None, "") or art in (None, ""):
        raise ValueError("missing customer or article id")
    label = _OUTCOME_MAP.get(str(fit).strip().lower()) if fit is not None else None
    if label is None:
        raise ValueError(f"unrecognized outcome {fit!r}")
    raw = {k: (None if v is None else str(v)) for k, v in obj.items()}
    if d.date_key is not None:
        ts = _parse_date(obj.get(d.date_key))
    else:
        ts = float(line_no)
    rec = InteractionRecord(str(cust), str(art), label, raw, ts)
    return normalize_compound_fields(rec, d)


def parse_jsonl(path, dataset_dialect="modcloth") -> list[InteractionRecord]:
    """Parse a JSON-lines dataset file.

    Blank lines are ignored. Malformed lines are skipped and counted; more
    than 1% malformed lines raises :class:`IngestionError` listing them.
    """
    d = get_dialect(dataset_dialect)
    records: list[InteractionRecord] = []
    bad: list[int] = []
    total = 0
    with open(Path(path), "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            total += 1
            try:
                records.append(record_from_json(json.loads(line), d, line_no))
            except ValueError:
                bad.append(line_no)
    if bad:
        frac = len(bad) / total
        if frac > MALFORMED_LIMIT:
            shown = ", ".join(map(str, bad[:20])) + (" ..." if len(bad) > 20 else "")
            raise IngestionError(
                f"{path}: {len(bad)} of {total} lines malformed ({frac:.1%}); lines {shown}",
                bad,
            )
        log.warning("%s: skipped %d malformed lines", path, len(bad))
    return records


def dataset_stats(records: list[InteractionRecord]) -> dict:
    """Transaction, entity and class-balance counts for a parsed dataset."""
    from collections import Counter

    n = len(records)
    cust = Counter(r.customer_id for r in records)
    art = Counter(r.article_id for r in records)
    labels = Counter(r.outcome_label for r in records)
    pct = {lab: (100.0 * labels.get(lab, 0) / n if n else 0.0) for lab in OUTCOMES}
    return {
        "transactions": n,
        "customers": len(cust),
        "articles": len(art),
        "percent_small": pct["Small"],
        "percent_fit": pct["Fit"],
        "percent_large": pct["Large"],
        "single_transaction_customers": sum(1 for c in cust.values() if c == 1),
        "single_transaction_articles": sum(1 for c in art.values() if c == 1),
    }
