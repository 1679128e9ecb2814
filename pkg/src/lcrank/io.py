"""Dataset, query, ranking and trace file handling.

All formats are plain UTF-8 CSV/text with LF line endings:

* feature file: header ``id,f1,...,fd``, one point per row
* query file: one point id per line
* ranking file: ``rank,id,score,is_query`` with rank starting at 1
* trace file: ``iter,objective,delta`` (delta empty on the first row)
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

# Scores keep 13 significant digits (trailing zeros preserved), so files
# round-trip to better than 1 ulp at 12 significant digits.
_SCORE_FORMAT = "{:#.13g}"


class DataFormatError(ValueError):
    """Raised for malformed or inconsistent input files."""


@dataclass
class DataSet:
    """A dense feature matrix with one opaque string id per row."""

    points: np.ndarray  # shape (n, d)
    ids: list[str]

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2:
            raise DataFormatError("points must be a 2-d array")
        n, d = self.points.shape
        if n < 1 or d < 1:
            raise DataFormatError("dataset must have at least one point and one feature")
        if len(self.ids) != n:
            raise DataFormatError(f"{len(self.ids)} ids for {n} points")
        if not np.all(np.isfinite(self.points)):
            raise DataFormatError("features must be finite (no NaN/Inf)")
        if len(set(self.ids)) != n:
            raise DataFormatError("ids are not unique")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass
class QueryIndicator:
    """Binary marker of which dataset points are user-supplied queries."""

    values: np.ndarray  # shape (n,), entries in {0, 1}

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 1:
            raise DataFormatError("query indicator must be 1-d")
        if not np.isin(self.values, (0, 1)).all():
            raise DataFormatError("query indicator entries must be 0 or 1")
        self.values = self.values.astype(np.int64)
        if self.values.sum() < 1:
            raise DataFormatError("query set is empty: at least one query is required")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def query_indices(self) -> np.ndarray:
        return np.flatnonzero(self.values)


class RankEntry(NamedTuple):
    id: str
    score: float
    is_query: bool


@dataclass
class RankedResult:
    """Retrieval output: points ordered by non-increasing score."""

    entries: list[RankEntry]
    queries_excluded: bool = False

    def __post_init__(self):
        if not self.entries:
            raise DataFormatError("ranked result must contain at least one entry")
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise DataFormatError("ranked result contains duplicate ids")
        scores = [e.score for e in self.entries]
        if any(b > a for a, b in zip(scores, scores[1:])):
            raise DataFormatError("ranked result scores must be non-increasing")


def _parse_feature_csv(path: str) -> DataSet:
    ids: list[str] = []
    rows: list[list[float]] = []
    seen: dict[str, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: file is empty") from None
        if len(header) < 2 or header[0] != "id":
            raise DataFormatError(
                f"{path}, line 1: header must be 'id,f1,...,fd', got {','.join(header)!r}"
            )
        width = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise DataFormatError(
                    f"{path}, line {lineno}: expected {width} columns, got {len(row)}"
                )
            pid = row[0]
            if pid in seen:
                raise DataFormatError(
                    f"{path}, line {lineno}: duplicate id {pid!r} (first seen on line {seen[pid]})"
                )
            seen[pid] = lineno
            values = []
            for col, cell in enumerate(row[1:], start=2):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataFormatError(
                        f"{path}, line {lineno}, column {col}: non-numeric cell {cell!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataFormatError(
                        f"{path}, line {lineno}, column {col}: non-finite value {cell!r}"
                    )
                values.append(v)
            ids.append(pid)
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return DataSet(points=np.array(rows, dtype=float), ids=ids)


def _parse_query_file(path: str, data: DataSet) -> QueryIndicator:
    position = {pid: i for i, pid in enumerate(data.ids)}
    values = np.zeros(data.n, dtype=np.int64)
    any_line = False
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            qid = line.strip()
            if not qid:
                continue
            any_line = True
            if qid not in position:
                raise DataFormatError(f"{path}, line {lineno}: unknown query id {qid!r}")
            values[position[qid]] = 1
    if not any_line:
        raise DataFormatError(f"{path}: query set is empty")
    return QueryIndicator(values=values)


def load_dataset(path: str, query_path: str) -> tuple[DataSet, QueryIndicator]:
    """Load and validate a feature CSV plus its query id file."""
    data = _parse_feature_csv(path)
    queries = _parse_query_file(query_path, data)
    return data, queries


def write_ranking(result: RankedResult, path: str) -> None:
    """Write a ranked result as ``rank,id,score,is_query`` CSV."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "id", "score", "is_query"])
        for rank, entry in enumerate(result.entries, start=1):
            writer.writerow(
                [rank, entry.id, _SCORE_FORMAT.format(entry.score), int(entry.is_query)]
            )


def load_ranking(path: str) -> RankedResult:
    """Read a ranking CSV back into a validated :class:`RankedResult`."""
    entries: list[RankEntry] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["rank", "id", "score", "is_query"]:
            raise DataFormatError(f"{path}, line 1: not a ranking file")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataFormatError(f"{path}, line {lineno}: expected 4 columns")
            try:
                score = float(row[2])
                is_query = bool(int(row[3]))
            except ValueError:
                raise DataFormatError(f"{path}, line {lineno}: malformed row") from None
            entries.append(RankEntry(id=row[1], score=score, is_query=is_query))
    return RankedResult(entries=entries)


TraceRowTuple = tuple  # (iteration, objective, delta-or-None)


def write_trace(trace: Sequence[TraceRowTuple], path: str) -> None:
    """Write convergence rows as ``iter,objective,delta`` CSV.

    The first row's delta is written as an empty field; iteration numbers
    must increase strictly from 1.
    """
    rows = list(trace)
    if not rows:
        raise DataFormatError("trace must contain at least one row")
    iters = [int(r[0]) for r in rows]
    if iters[0] != 1 or any(b <= a for a, b in zip(iters, iters[1:])):
        raise DataFormatError("trace iterations must increase strictly from 1")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iter", "objective", "delta"])
        for it, objective, delta in rows:
            writer.writerow(
                [it, repr(float(objective)), "" if delta is None else repr(float(delta))]
            )
