import json
import warnings

import numpy as np
import pytest

from conftest import MODCLOTH_FILE, RTR_FILE, records_from
from sfnet.data import (
    DEFAULT_INDEX,
    MISSING_INDEX,
    EncodedDataset,
    FeatureSchema,
    InteractionRecord,
    SplitSpec,
    build_schema,
    dataset_stats,
    encode,
    encode_records,
    load_split,
    normalize_compound_fields,
    parse_height,
    parse_jsonl,
    record_from_json,
    save_split,
    split,
    split_alnum,
)
from sfnet.errors import CheckpointError, ContractError, EncodingError, IngestionError
from sfnet.synthetic import make_fit_records, write_jsonl

RTR_LINE = {
    "fit": "fit", "user_id": "420272", "bust size": "34d", "item_id": "2260466",
    "weight": "137lbs", "rating": "10", "rented for": "vacation", "body type": "hourglass",
    "category": "romper", "height": "5' 8\"", "size": 14, "age": "28",
    "review_date": "April 20, 2016",
}
MODCLOTH_LINE = {
    "item_id": "123373", "waist": "29", "size": 7, "quality": 5, "cup size": "d",
    "hips": "38", "bra size": "34", "category": "new", "bust": "36", "height": "5ft 6in",
    "user_name": "Emily", "length": "just right", "fit": "small", "user_id": "991571",
    "shoe size": None, "shoe width": None,
}


# -- compound fields ----------------------------------------------------------

def test_split_alnum_bust_size():
    assert split_alnum("34d") == (34.0, "d")
    assert split_alnum("32dd") == (32.0, "dd")
    assert split_alnum("") == (None, None)
    assert split_alnum(None) == (None, None)


@pytest.mark.parametrize("text,feet,inches", [("5' 6\"", 5, 6), ("5ft 6in", 5, 6), ("6' 0\"", 6, 0), ("4ft 11in", 4, 11)])
def test_height_to_inches(text, feet, inches):
    assert parse_height(text) == 12 * feet + inches


def test_unparseable_fields_become_missing():
    rec = record_from_json({**RTR_LINE, "bust size": "", "height": "tall", "weight": "?"}, "renttherunway")
    assert rec.values["bust_size_band"] is None and rec.values["bust_size_cup"] is None
    assert rec.values["height"] is None and rec.values["weight"] is None


def test_rtr_record_values():
    rec = record_from_json(RTR_LINE, "renttherunway")
    v = rec.values
    assert rec.outcome_label == "Fit"
    assert (v["bust_size_band"], v["bust_size_cup"]) == (34.0, "d")
    assert v["height"] == 68.0 and v["weight"] == 137.0 and v["age"] == 28.0
    assert v["rented_for"] == "vacation" and v["size"] == 14.0
    assert rec.timestamp is not None
    assert rec.raw_fields["size"] == "14"


def test_modcloth_record_values():
    rec = record_from_json(MODCLOTH_LINE, "modcloth", line_no=7)
    v = rec.values
    assert rec.outcome_label == "Small"
    assert v["height"] == 66.0 and v["cup_size"] == 4.0 and v["waist"] == 29.0
    assert v["shoe_width"] is None and v["shoe_size"] is None
    assert rec.timestamp == 7.0


def test_normalize_is_pure():
    rec = InteractionRecord("c", "a", "Fit", {"bust size": "36b", "height": "5' 2\""})
    out = normalize_compound_fields(rec, "renttherunway")
    assert rec.values is None
    assert out.values["bust_size_band"] == 36.0 and out.values["height"] == 62.0


def test_record_requires_ids():
    with pytest.raises(ContractError):
        InteractionRecord("", "a", "Fit")


# -- parse_jsonl --------------------------------------------------------------

def test_parse_empty_file(tmp_path):
    p = tmp_path / "empty.json"
    p.write_text("")
    assert parse_jsonl(p, "modcloth") == []


def test_parse_counts_and_outcomes(tmp_path):
    p = tmp_path / "d.json"
    write_jsonl(make_fit_records(300, seed=2), p)
    recs = parse_jsonl(p, "modcloth")
    assert len(recs) == 300
    assert {r.outcome_label for r in recs} <= {"Small", "Fit", "Large"}


def test_parse_tolerates_few_malformed_lines(tmp_path):
    p = tmp_path / "d.json"
    lines = [json.dumps(o) for o in make_fit_records(300, seed=2)]
    lines[10] = "{not json"
    p.write_text("\n".join(lines) + "\n")
    assert len(parse_jsonl(p, "modcloth")) == 299


def test_parse_rejects_many_malformed_lines(tmp_path):
    p = tmp_path / "d.json"
    lines = [json.dumps(o) for o in make_fit_records(50, seed=2)]
    lines[3] = "garbage"
    lines[8] = json.dumps({"user_id": "u", "item_id": "i", "fit": "enormous"})
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(IngestionError) as err:
        parse_jsonl(p, "modcloth")
    assert err.value.line_numbers == [4, 9]
    assert "4" in str(err.value)


def test_parse_missing_file(tmp_path):
    with pytest.raises(OSError):
        parse_jsonl(tmp_path / "nope.json", "modcloth")


# -- schema and encoding ------------------------------------------------------

def test_single_record_vocabularies():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        schema = build_schema(records_from([MODCLOTH_LINE | {"shoe width": "wide", "shoe size": "8"}]),
                              "modcloth")
    for _, vocab in schema.customer_categorical + schema.article_categorical:
        assert len(vocab) == 3
        assert vocab[DEFAULT_INDEX] == "<default>" and vocab[MISSING_INDEX] == "<missing>"


def test_single_record_drops_constant_continuous():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        schema = build_schema(records_from([MODCLOTH_LINE]), "modcloth")
    assert schema.customer_continuous == [] and schema.article_continuous == []
    assert any("dropping" in str(w.message) for w in caught)


def test_modcloth_schema_fields(synthetic_split):
    schema = synthetic_split[0]
    assert [n for n, _ in schema.article_categorical] == ["category", "item_id"]
    assert [n for n, _ in schema.customer_categorical] == ["shoe_width", "user_id"]
    assert [n for n, *_ in schema.article_continuous] == ["quality", "size"]
    assert schema.outcome_vocabulary == ["Small", "Fit", "Large"]
    assert all(std > 0 for _, _, std in schema.customer_continuous + schema.article_continuous)


def test_rtr_schema_fields():
    objs = [dict(RTR_LINE, user_id=str(i), item_id=str(i % 3), age=str(20 + i), weight=f"{120 + i}lbs",
                 rating=str(i % 5 * 2), size=i, height=f"5' {i % 12}\"", **{"bust size": f"{32 + i % 4}c"})
            for i in range(12)]
    schema = build_schema(records_from(objs, "renttherunway"), "renttherunway")
    assert [n for n, _ in schema.customer_categorical] == ["body_type", "bust_size_cup", "user_id"]
    assert [n for n, *_ in schema.customer_continuous] == ["age", "bust_size_band", "height", "weight"]
    assert [n for n, _ in schema.article_categorical] == ["category", "rented_for", "item_id"]


def test_exclude_features():
    recs = records_from(make_fit_records(50, seed=1))
    schema = build_schema(recs, "modcloth", exclude=["user_id", "item_id"])
    assert "user_id" not in schema.field_names and "item_id" not in schema.field_names
    with pytest.raises(ContractError):
        build_schema(recs, "modcloth", exclude=["favourite_colour"])


def test_empty_training_set_rejected():
    with pytest.raises(ContractError):
        build_schema([], "modcloth")


def test_encode_unseen_and_missing(synthetic_split, synthetic_records):
    schema = synthetic_split[0]
    rec = record_from_json({"user_id": "never-seen", "item_id": "never-seen", "fit": "fit"}, "modcloth")
    ex = encode(rec, schema)
    cust_names = [n for n, _ in schema.customer_categorical]
    assert ex.customer_cat_indices[cust_names.index("user_id")] == DEFAULT_INDEX
    assert ex.customer_cat_indices[cust_names.index("shoe_width")] == MISSING_INDEX
    assert ex.article_cat_indices == [MISSING_INDEX, DEFAULT_INDEX]
    assert ex.customer_cont == [0.0] * len(schema.customer_continuous)
    assert ex.customer_cont_present == [0] * len(schema.customer_continuous)


def test_encode_all_missing():
    schema = build_schema(records_from(make_fit_records(100, seed=4)), "modcloth", exclude=["user_id", "item_id"])
    rec = InteractionRecord("c", "a", "Fit", {})
    ex = encode(normalize_compound_fields(rec, "modcloth"), schema)
    assert set(ex.customer_cat_indices + ex.article_cat_indices) == {MISSING_INDEX}
    assert set(ex.customer_cont + ex.article_cont) == {0.0}
    assert set(ex.customer_cont_present + ex.article_cont_present) == {0}


def test_encode_mean_is_zero(synthetic_split):
    schema = synthetic_split[0]
    name, mean, _ = schema.customer_continuous[0]
    rec = InteractionRecord("c", "a", "Fit", {}, values={name: mean})
    assert encode(rec, schema).customer_cont[0] == 0.0


def test_encode_known_id_stable(synthetic_split, synthetic_records):
    schema = synthetic_split[0]
    rec = synthetic_records[0]
    first = encode(rec, schema)
    assert first == encode(rec, schema)
    assert min(first.article_cat_indices) >= 2 or rec.values["category"] is None


def test_encode_unknown_outcome(synthetic_split):
    rec = InteractionRecord("c", "a", "Enormous", {}, values={})
    with pytest.raises(EncodingError):
        encode(rec, synthetic_split[0])


def test_schema_rederivation_is_bitwise(synthetic_records):
    tr, _, _ = split(synthetic_records, SplitSpec(seed=3))
    a, b = build_schema(tr, "modcloth"), build_schema(list(tr), "modcloth")
    assert a.to_json() == b.to_json() and a.hash == b.hash


def test_schema_only_sees_train(synthetic_records):
    tr, va, te = split(synthetic_records, SplitSpec(seed=3))
    schema = build_schema(tr, "modcloth")
    train_users = {r.customer_id for r in tr}
    vocab = dict(schema.customer_categorical)["user_id"]
    assert set(vocab[2:]) == train_users


def test_schema_json_roundtrip(tmp_path, synthetic_split):
    schema = synthetic_split[0]
    schema.save(tmp_path / "s.json")
    back = FeatureSchema.load(tmp_path / "s.json")
    assert back.to_json() == schema.to_json()
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["format"] == "sfnet-schema" and doc["version"] == 1


def test_parse_then_encode_deterministic(tmp_path):
    p = tmp_path / "d.json"
    write_jsonl(make_fit_records(80, seed=9), p)
    schema = build_schema(parse_jsonl(p, "modcloth"), "modcloth")
    a = encode_records(parse_jsonl(p, "modcloth"), schema)
    b = encode_records(parse_jsonl(p, "modcloth"), schema)
    for field in ("customer_cat", "customer_cont", "article_cat", "article_cont", "outcome"):
        assert getattr(a, field).tobytes() == getattr(b, field).tobytes()


# -- splits -------------------------------------------------------------------

def _toy(n, stamps=True):
    return [InteractionRecord(f"c{i}", f"a{i}", "Fit", {}, float((i * 37) % n) if stamps else None) for i in range(n)]


def test_random_split_sizes_and_reproducibility():
    recs = _toy(100)
    a = split(recs, SplitSpec(seed=5))
    b = split(recs, SplitSpec(seed=5))
    assert tuple(map(len, a)) == (80, 10, 10)
    assert [[r.customer_id for r in part] for part in a] == [[r.customer_id for r in part] for part in b]


def test_split_partition_property():
    recs = _toy(97)
    tr, va, te = split(recs, SplitSpec(seed=1))
    ids = [set(id(r) for r in part) for part in (tr, va, te)]
    assert len(tr) + len(va) + len(te) == 97
    assert not (ids[0] & ids[1]) and not (ids[0] & ids[2]) and not (ids[1] & ids[2])


def test_ten_seeds_give_distinct_test_sets():
    recs = _toy(200)
    tests = {frozenset(r.customer_id for r in split(recs, SplitSpec(seed=s))[2]) for s in range(10)}
    assert len(tests) == 10


def test_chronological_split_ordering():
    tr, va, te = split(_toy(100), SplitSpec(mode="chronological", seed=None))
    assert max(r.timestamp for r in tr) <= min(r.timestamp for r in va) <= min(r.timestamp for r in te)


def test_chronological_needs_timestamps():
    with pytest.raises(ContractError):
        split(_toy(10, stamps=False), SplitSpec(mode="chronological"))


def test_split_spec_validation():
    with pytest.raises(ContractError):
        SplitSpec(0.8, 0.1, 0.2)
    with pytest.raises(ContractError):
        SplitSpec(seed=None)


# -- binary cache -------------------------------------------------------------

def test_split_cache_roundtrip(tmp_path, synthetic_split):
    schema, train_set, _, _ = synthetic_split
    p = tmp_path / "train.sfds"
    save_split(p, train_set, schema.hash)
    assert p.read_bytes()[:8] == b"SFNETDS1"
    back, digest = load_split(p, schema.hash)
    assert digest == schema.hash
    for field in ("customer_cat", "customer_cont", "customer_present", "article_cat", "article_cont",
                  "article_present", "outcome"):
        np.testing.assert_array_equal(getattr(back, field), getattr(train_set, field))


def test_split_cache_errors(tmp_path, synthetic_split):
    schema, train_set, _, _ = synthetic_split
    p = tmp_path / "train.sfds"
    save_split(p, train_set, schema.hash)
    with pytest.raises(CheckpointError, match="schema hash mismatch"):
        load_split(p, "0" * 64)
    p.write_bytes(p.read_bytes()[:-5])
    with pytest.raises(CheckpointError, match="truncated"):
        load_split(p)


def test_encoded_dataset_examples_roundtrip(synthetic_split):
    schema, train_set, _, _ = synthetic_split
    exs = [train_set.example(i) for i in range(5)]
    back = EncodedDataset.from_examples(exs, schema)
    np.testing.assert_array_equal(back.customer_cont, train_set.customer_cont[:5])
    np.testing.assert_array_equal(back.article_cat, train_set.article_cat[:5])


# -- full public files (only when present) -------------------------------------

@pytest.mark.dataset
@pytest.mark.skipif(not MODCLOTH_FILE.is_file(), reason="ModCloth file not available")
def test_modcloth_summary_counts():
    stats = dataset_stats(parse_jsonl(MODCLOTH_FILE, "modcloth"))
    assert (stats["transactions"], stats["customers"], stats["articles"]) == (82790, 47958, 5012)
    assert abs(stats["percent_small"] - 15.7) <= 0.1 and abs(stats["percent_large"] - 15.8) <= 0.1
    assert stats["single_transaction_customers"] == 31858


@pytest.mark.dataset
@pytest.mark.skipif(not RTR_FILE.is_file(), reason="RentTheRunWay file not available")
def test_rtr_summary_counts():
    stats = dataset_stats(parse_jsonl(RTR_FILE, "renttherunway"))
    assert (stats["transactions"], stats["customers"], stats["articles"]) == (192544, 105571, 30815)
    assert stats["single_transaction_articles"] == 8023
