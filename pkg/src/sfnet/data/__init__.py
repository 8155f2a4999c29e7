"""Dataset ingestion, feature schemas, encoding and splits."""
from .cache import load_split, save_split
from .records import (
    DIALECTS,
    InteractionRecord,
    dataset_stats,
    get_dialect,
    normalize_compound_fields,
    parse_height,
    parse_jsonl,
    record_from_json,
    split_alnum,
)
from .schema import (
    DEFAULT_INDEX,
    MISSING_INDEX,
    EncodedDataset,
    EncodedExample,
    FeatureSchema,
    build_schema,
    encode,
    encode_records,
)
from .split import SplitSpec, split, split_indices

__all__ = [
    "DIALECTS",
    "DEFAULT_INDEX",
    "MISSING_INDEX",
    "EncodedDataset",
    "EncodedExample",
    "FeatureSchema",
    "InteractionRecord",
    "SplitSpec",
    "build_schema",
    "dataset_stats",
    "encode",
    "encode_records",
    "get_dialect",
    "load_split",
    "normalize_compound_fields",
    "parse_height",
    "parse_jsonl",
    "record_from_json",
    "save_split",
    "split",
    "split_alnum",
    "split_indices",
]
