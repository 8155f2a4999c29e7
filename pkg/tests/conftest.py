import os
from pathlib import Path

import numpy as np
import pytest

from sfnet.data import SplitSpec, build_schema, encode_records, record_from_json, split
from sfnet.synthetic import make_fit_records

DATA_DIR = Path(os.environ.get("SFNET_DATA_DIR", Path(__file__).resolve().parent.parent / "data"))
MODCLOTH_FILE = DATA_DIR / "modcloth_final_data.json"
RTR_FILE = DATA_DIR / "renttherunway_final_data.json"

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def record_criterion(name: str, passed: bool, detail: str = "") -> None:
    _ACCEPTANCE.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}  {detail}")


def records_from(objs, dialect="modcloth"):
    return [record_from_json(o, dialect, i + 1) for i, o in enumerate(objs)]


@pytest.fixture(scope="session")
def synthetic_records():
    return records_from(make_fit_records(1500, n_articles=60, seed=11))


@pytest.fixture(scope="session")
def synthetic_split(synthetic_records):
    tr, va, te = split(synthetic_records, SplitSpec(seed=0))
    schema = build_schema(tr, "modcloth")
    return schema, encode_records(tr, schema), encode_records(va, schema), encode_records(te, schema)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
