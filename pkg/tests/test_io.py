import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcrank import (
    DataFormatError,
    DataSet,
    QueryIndicator,
    RankedResult,
    RankEntry,
    load_dataset,
    load_ranking,
    write_ranking,
    write_trace,
)


def write_files(tmp_path, csv_text, query_text):
    data = tmp_path / "data.csv"
    queries = tmp_path / "queries.txt"
    data.write_text(csv_text)
    queries.write_text(query_text)
    return str(data), str(queries)


CSV_3X2 = "id,f1,f2\na,1.0,2.0\nb,3.0,4.0\nc,5.0,6.0\n"


class TestLoadDataset:
    def test_basic_parse_and_single_query(self, tmp_path):
        data, queries = load_dataset(*write_files(tmp_path, CSV_3X2, "a\n"))
        assert data.n == 3 and data.d == 2
        assert data.ids == ["a", "b", "c"]
        np.testing.assert_array_equal(queries.values, [1, 0, 0])

    def test_all_points_queried(self, tmp_path):
        _, queries = load_dataset(*write_files(tmp_path, CSV_3X2, "a\nb\nc\n"))
        np.testing.assert_array_equal(queries.values, [1, 1, 1])

    def test_unknown_query_id(self, tmp_path):
        with pytest.raises(DataFormatError, match="unknown query id 'z'"):
            load_dataset(*write_files(tmp_path, CSV_3X2, "z\n"))

    def test_empty_query_set(self, tmp_path):
        with pytest.raises(DataFormatError, match="query set is empty"):
            load_dataset(*write_files(tmp_path, CSV_3X2, "\n\n"))

    def test_wrong_column_count_names_line(self, tmp_path):
        bad = "id,f1,f2\na,1.0,2.0\nb,3.0\n"
        with pytest.raises(DataFormatError, match="line 3"):
            load_dataset(*write_files(tmp_path, bad, "a\n"))

    def test_non_numeric_cell_names_line(self, tmp_path):
        bad = "id,f1,f2\na,1.0,x\n"
        with pytest.raises(DataFormatError, match="line 2.*'x'"):
            load_dataset(*write_files(tmp_path, bad, "a\n"))

    def test_duplicate_id(self, tmp_path):
        bad = "id,f1,f2\na,1.0,2.0\na,3.0,4.0\n"
        with pytest.raises(DataFormatError, match="duplicate id 'a'"):
            load_dataset(*write_files(tmp_path, bad, "a\n"))

    @pytest.mark.parametrize("cell", ["nan", "inf", "-inf"])
    def test_non_finite_rejected(self, tmp_path, cell):
        bad = f"id,f1,f2\na,1.0,{cell}\n"
        with pytest.raises(DataFormatError, match="non-finite"):
            load_dataset(*write_files(tmp_path, bad, "a\n"))

    def test_bad_header(self, tmp_path):
        with pytest.raises(DataFormatError, match="header"):
            load_dataset(*write_files(tmp_path, "x,f1\na,1.0\n", "a\n"))


class TestTypes:
    def test_dataset_rejects_duplicate_ids(self):
        with pytest.raises(DataFormatError, match="unique"):
            DataSet(points=np.zeros((2, 1)), ids=["a", "a"])

    def test_dataset_rejects_nan(self):
        with pytest.raises(DataFormatError, match="finite"):
            DataSet(points=np.array([[np.nan]]), ids=["a"])

    def test_indicator_needs_a_query(self):
        with pytest.raises(DataFormatError, match="at least one"):
            QueryIndicator(values=np.zeros(3))

    def test_indicator_rejects_non_binary(self):
        with pytest.raises(DataFormatError, match="0 or 1"):
            QueryIndicator(values=np.array([0, 2, 1]))

    def test_ranked_result_rejects_increasing_scores(self):
        with pytest.raises(DataFormatError, match="non-increasing"):
            RankedResult(entries=[RankEntry("a", 0.1, False), RankEntry("b", 0.9, False)])

    def test_ranked_result_rejects_empty(self):
        with pytest.raises(DataFormatError, match="at least one entry"):
            RankedResult(entries=[])


class TestWriteRanking:
    def test_two_entries(self, tmp_path):
        path = str(tmp_path / "r.csv")
        result = RankedResult(
            entries=[RankEntry("b", 0.9, False), RankEntry("a", 0.1, False)]
        )
        write_ranking(result, path)
        lines = open(path).read().splitlines()
        assert lines[0] == "rank,id,score,is_query"
        assert lines[1].startswith("1,b,0.9")
        assert lines[2].startswith("2,a,0.1")

    def test_single_query_score_one(self, tmp_path):
        path = str(tmp_path / "r.csv")
        write_ranking(RankedResult(entries=[RankEntry("q", 1.0, True)]), path)
        text = open(path).read()
        assert text == "rank,id,score,is_query\n1,q,1.000000000000,1\n"

    def test_file_ends_with_newline(self, tmp_path):
        path = str(tmp_path / "r.csv")
        write_ranking(RankedResult(entries=[RankEntry("a", 0.5, False)]), path)
        assert open(path).read().endswith("\n")

    def test_round_trip_ids_exact_scores_close(self, tmp_path):
        rng = np.random.default_rng(3)
        scores = np.sort(rng.uniform(-5.0, 5.0, size=30))[::-1]
        entries = [RankEntry(f"p{i}", float(s), i % 7 == 0) for i, s in enumerate(scores)]
        path = str(tmp_path / "r.csv")
        write_ranking(RankedResult(entries=entries), path)
        back = load_ranking(path)
        assert [e.id for e in back.entries] == [e.id for e in entries]
        assert [e.is_query for e in back.entries] == [e.is_query for e in entries]
        np.testing.assert_allclose(
            [e.score for e in back.entries], scores, rtol=1e-12, atol=1e-300
        )

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
            min_size=1,
            max_size=8,
        )
    )
    def test_round_trip_any_magnitude(self, tmp_path_factory, raw):
        scores = sorted(raw, reverse=True)
        entries = [RankEntry(f"p{i}", s, False) for i, s in enumerate(scores)]
        path = str(tmp_path_factory.mktemp("rt") / "r.csv")
        write_ranking(RankedResult(entries=entries), path)
        back = load_ranking(path)
        np.testing.assert_allclose(
            [e.score for e in back.entries], scores, rtol=1e-12, atol=1e-12
        )


class TestWriteTrace:
    def test_first_delta_empty(self, tmp_path):
        path = str(tmp_path / "t.csv")
        write_trace([(1, 10.0, None), (2, 9.5, 0.5)], path)
        lines = open(path).read().splitlines()
        assert lines == ["iter,objective,delta", "1,10.0,", "2,9.5,0.5"]

    def test_empty_trace_rejected(self, tmp_path):
        with pytest.raises(DataFormatError, match="at least one row"):
            write_trace([], str(tmp_path / "t.csv"))

    def test_iterations_must_increase_from_one(self, tmp_path):
        with pytest.raises(DataFormatError, match="increase strictly from 1"):
            write_trace([(2, 1.0, None)], str(tmp_path / "t.csv"))
        with pytest.raises(DataFormatError, match="increase strictly from 1"):
            write_trace([(1, 1.0, None), (1, 0.5, 0.5)], str(tmp_path / "t.csv"))

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError):
            write_trace([(1, 1.0, None)], str(tmp_path / "missing" / "t.csv"))
