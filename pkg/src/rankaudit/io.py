"""Reading and writing ranked-list logs.

JSONL: one query per line,
``{"query_id": ..., "candidates": [{"rank", "group", "outcome", "features"?}]}``.

CSV (long form): header ``query_id,rank,group,outcome`` plus optional
``feature:<name>`` columns, one row per candidate. Queries keep the order
in which their id first appears.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from typing import Iterable, TextIO

from .model import Dataset, QueryRecord

log = logging.getLogger(__name__)

REQUIRED = ("query_id", "rank", "group", "outcome")


class IngestError(ValueError):
    pass


def _outcome(value, qid) -> float:
    try:
        y = float(value)
    except (TypeError, ValueError):
        raise IngestError(f"query {qid!r}: outcome {value!r} is not a number") from None
    if not math.isfinite(y):
        raise IngestError(f"query {qid!r}: non-finite outcome {value!r}")
    return y


def _rank(value, qid) -> int:
    try:
        r = int(value)
    except (TypeError, ValueError):
        raise IngestError(f"query {qid!r}: rank {value!r} is not an integer") from None
    if isinstance(value, float) and value != r:
        raise IngestError(f"query {qid!r}: rank {value!r} is not an integer")
    return r


def _assemble(qid: str, rows: list[tuple[int, str, float, dict | None]]) -> QueryRecord:
    rows = sorted(rows, key=lambda r: r[0])
    ranks = [r[0] for r in rows]
    seen = set()
    for r in ranks:
        if r in seen:
            raise IngestError(f"query {qid!r}: duplicate rank {r}")
        seen.add(r)
    if ranks != list(range(1, len(ranks) + 1)):
        raise IngestError(f"query {qid!r}: ranks must be 1..{len(ranks)} without gaps, got {ranks}")
    has_features = any(r[3] for r in rows)
    return QueryRecord(
        qid,
        tuple(r[1] for r in rows),
        tuple(r[2] for r in rows),
        tuple(r[3] or {} for r in rows) if has_features else None,
    )


def read_jsonl(fh: TextIO) -> Dataset:
    queries, ids = [], set()
    for lineno, line in enumerate(fh, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise IngestError(f"line {lineno}: {e}") from None
        qid = str(obj["query_id"])
        if qid in ids:
            raise IngestError(f"query {qid!r} appears on more than one line")
        ids.add(qid)
        rows = []
        for c in obj["candidates"]:
            feats = c.get("features")
            rows.append((_rank(c["rank"], qid), str(c["group"]), _outcome(c["outcome"], qid), feats or None))
        if not rows:
            raise IngestError(f"query {qid!r} has no candidates")
        queries.append(_assemble(qid, rows))
    return Dataset(queries)


def read_csv(fh: TextIO) -> Dataset:
    reader = csv.DictReader(fh)
    fields = reader.fieldnames or []
    missing = [c for c in REQUIRED if c not in fields]
    if missing:
        raise IngestError(f"missing column(s): {', '.join(missing)}")
    feature_cols = [c for c in fields if c.startswith("feature:")]
    unknown = [c for c in fields if c not in REQUIRED and c not in feature_cols]
    if unknown:
        log.warning("ignoring unknown column(s): %s", ", ".join(unknown))
    grouped: dict[str, list] = {}
    for row in reader:
        qid = row["query_id"]
        feats = {c[len("feature:"):]: row[c] for c in feature_cols} or None
        grouped.setdefault(qid, []).append(
            (_rank(row["rank"], qid), row["group"], _outcome(row["outcome"], qid), feats)
        )
    return Dataset(_assemble(qid, rows) for qid, rows in grouped.items())


def ingest(path: str, fmt: str | None = None, stream: TextIO | None = None) -> Dataset:
    """Load a dataset; ``path == "-"`` reads ``stream`` (stdin by default)."""
    if fmt is None:
        fmt = "csv" if path.endswith(".csv") else "jsonl"
    if fmt not in ("jsonl", "csv"):
        raise IngestError(f"unknown format {fmt!r}")
    reader = read_jsonl if fmt == "jsonl" else read_csv
    if path == "-":
        import sys

        return reader(stream or sys.stdin)
    with open(path, newline="") as fh:
        return reader(fh)


def query_to_json(q: QueryRecord) -> dict:
    cands = []
    for r, (g, y) in enumerate(zip(q.groups, q.outcomes), start=1):
        c = {"rank": r, "group": g, "outcome": y}
        if q.features is not None and q.features[r - 1]:
            c["features"] = dict(sorted(q.features[r - 1].items()))
        cands.append(c)
    return {"query_id": q.query_id, "candidates": cands}


def write_jsonl(dataset: Dataset | Iterable[QueryRecord], fh: TextIO) -> None:
    queries = dataset.queries if isinstance(dataset, Dataset) else dataset
    for q in queries:
        fh.write(json.dumps(query_to_json(q)) + "\n")


def write_csv(dataset: Dataset, fh: TextIO) -> None:
    names = sorted({k for q in dataset.queries if q.features for f in q.features for k in f})
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(list(REQUIRED) + [f"feature:{k}" for k in names])
    for q in dataset.queries:
        for r, (g, y) in enumerate(zip(q.groups, q.outcomes), start=1):
            f = q.features[r - 1] if q.features else {}
            w.writerow([q.query_id, r, g, repr(y)] + [f.get(k, "") for k in names])
