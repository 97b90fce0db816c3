import io
import json
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rankaudit.io import IngestError, ingest, read_csv, read_jsonl, write_csv, write_jsonl
from rankaudit.model import Dataset, QueryRecord
from rankaudit.simulate import AdditiveNormal, SimConfig, simulate_dataset

CSV = """query_id,rank,group,outcome
a,1,F,1
a,2,M,0
b,2,F,0.5
b,1,M,2
"""


def test_csv_two_queries():
    data = read_csv(io.StringIO(CSV))
    assert len(data) == 2
    b = data.queries[1]
    assert b.groups == ("M", "F") and b.outcomes == (2.0, 0.5)


@pytest.mark.parametrize(
    "body, match",
    [
        ("a,1,F,1\na,1,M,0\n", "duplicate rank"),
        ("a,1,F,1\na,3,M,0\n", "gaps"),
        ("a,1,F,inf\n", "non-finite"),
        ("a,1,F,x\n", "not a number"),
        ("a,one,F,1\n", "not an integer"),
    ],
)
def test_csv_errors_name_query(body, match):
    with pytest.raises(IngestError, match=match) as err:
        read_csv(io.StringIO("query_id,rank,group,outcome\n" + body))
    assert "'a'" in str(err.value)


def test_csv_missing_column():
    with pytest.raises(IngestError, match="outcome"):
        read_csv(io.StringIO("query_id,rank,group\na,1,F\n"))


def test_csv_unknown_column_warns(caplog):
    with caplog.at_level(logging.WARNING):
        data = read_csv(io.StringIO("query_id,rank,group,outcome,note\na,1,F,1,x\n"))
    assert len(data) == 1
    assert "note" in caplog.text


def test_csv_features():
    text = "query_id,rank,group,outcome,feature:k\na,1,F,1,x\na,2,M,0,y\n"
    q = read_csv(io.StringIO(text)).queries[0]
    assert q.features == ({"k": "x"}, {"k": "y"})


def test_jsonl_duplicate_query():
    line = json.dumps({"query_id": "a", "candidates": [{"rank": 1, "group": "F", "outcome": 1}]})
    with pytest.raises(IngestError, match="'a'"):
        read_jsonl(io.StringIO(line + "\n" + line + "\n"))


def test_jsonl_bad_json():
    with pytest.raises(IngestError, match="line 1"):
        read_jsonl(io.StringIO("{not json\n"))


def test_jsonl_roundtrip_simulated():
    data = simulate_dataset(SimConfig(J=5, Q=40, seed=3, outcome_noise=AdditiveNormal(0.7)))
    buf = io.StringIO()
    write_jsonl(data, buf)
    assert read_jsonl(io.StringIO(buf.getvalue())) == data


def test_csv_roundtrip_simulated():
    data = simulate_dataset(SimConfig(J=4, Q=30, seed=5, outcome_noise=AdditiveNormal(0.7)))
    buf = io.StringIO()
    write_csv(data, buf)
    assert read_csv(io.StringIO(buf.getvalue())) == data


labels = st.text(alphabet="abcXYZ_- ", min_size=1, max_size=4)
finite = st.floats(allow_nan=False, allow_infinity=False)


@st.composite
def queries(draw):
    n = draw(st.integers(1, 5))
    feats = draw(st.booleans())
    return [
        QueryRecord(
            f"q{i}",
            tuple(draw(st.lists(labels, min_size=k, max_size=k))),
            tuple(draw(st.lists(finite, min_size=k, max_size=k))),
            tuple({"f": draw(labels)} for _ in range(k)) if feats else None,
        )
        for i, k in enumerate(draw(st.lists(st.integers(1, 4), min_size=n, max_size=n)))
    ]


@settings(max_examples=100)
@given(queries())
def test_roundtrip_property(qs):
    data = Dataset(qs)
    for write, read in ((write_jsonl, read_jsonl), (write_csv, read_csv)):
        buf = io.StringIO()
        write(data, buf)
        assert read(io.StringIO(buf.getvalue())) == data


def test_ingest_paths(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text(CSV)
    assert len(ingest(str(p))) == 2
    assert len(ingest("-", "csv", io.StringIO(CSV))) == 2
    with pytest.raises(IngestError):
        ingest(str(p), "xml")
