"""Tests for the command-line interface."""

from pathlib import Path
from typing import List, Sequence, Tuple

import pytest
from click.testing import CliRunner

from turnstilesampler.cli import cli

pytestmark = pytest.mark.integration


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def _write_stream(path: Path, updates: Sequence[Tuple[int, int]]) -> Path:
    path.write_text("# k c\n" + "".join(f"{k} {c}\n" for k, c in updates), encoding="utf-8")
    return path


def _build(runner: CliRunner, stream: Path, out: Path, *extra: str):
    return runner.invoke(
        cli, ["build", "--input", str(stream), "--k", "8", "--seed", "11", "--l0", "exact",
              "--out", str(out), *extra]
    )


def _sample_rows(path: Path) -> List[str]:
    return [line for line in path.read_text(encoding="utf-8").splitlines() if not line.startswith("#")]


def _query_value(output: str) -> str:
    lines = output.splitlines()
    marker = next(i for i, line in enumerate(lines) if line.startswith("# error_bound"))
    return lines[marker - 1]


class TestBuildAndSample:
    def test_round_trip(self, runner, tmp_path):
        stream = _write_stream(tmp_path / "s.txt", [(5, 3), (7, 2), (7, -2)])
        result = _build(runner, stream, tmp_path / "a.tsk")
        assert result.exit_code == 0, result.output

        out = tmp_path / "sample.tsv"
        result = runner.invoke(cli, ["sample", "--sketch", str(tmp_path / "a.tsk"), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert _sample_rows(out) == ["5\t3"]
        assert "# whole_stream\ttrue" in out.read_text(encoding="utf-8")

    def test_deterministic_containers(self, runner, tmp_path):
        stream = _write_stream(tmp_path / "s.txt", [(k, k % 4 + 1) for k in range(1, 300)])
        assert _build(runner, stream, tmp_path / "a.tsk").exit_code == 0
        assert _build(runner, stream, tmp_path / "b.tsk").exit_code == 0
        assert (tmp_path / "a.tsk").read_bytes() == (tmp_path / "b.tsk").read_bytes()

    def test_bad_stream_line(self, runner, tmp_path):
        stream = tmp_path / "s.txt"
        stream.write_text("5 3\n7 x\n", encoding="utf-8")
        result = _build(runner, stream, tmp_path / "a.tsk")
        assert result.exit_code == 2
        assert "line 2" in result.output

    def test_efrs_below_floor(self, runner, tmp_path):
        stream = _write_stream(tmp_path / "s.txt", [(5, 3)])
        result = _build(runner, stream, tmp_path / "a.tsk", "--recovery", "efrs", "--eps", "0.1")
        assert result.exit_code == 2

    def test_capacity_exceeded(self, runner, tmp_path):
        stream = _write_stream(tmp_path / "s.txt", [(5, 3)])
        result = _build(runner, stream, tmp_path / "a.tsk", "--m", str(1 << 40))
        assert result.exit_code == 3

    @pytest.mark.parametrize("flag", ["--m", "--r", "--nmax"])
    def test_explicit_zero_bounds_are_rejected(self, runner, tmp_path, flag):
        stream = _write_stream(tmp_path / "s.txt", [(5, 3)])
        result = _build(runner, stream, tmp_path / "a.tsk", flag, "0")
        assert result.exit_code == 2
        assert not (tmp_path / "a.tsk").exists()

    def test_sample_size_above_k(self, runner, tmp_path):
        stream = _write_stream(tmp_path / "s.txt", [(5, 3)])
        _build(runner, stream, tmp_path / "a.tsk")
        result = runner.invoke(cli, ["sample", "--sketch", str(tmp_path / "a.tsk"), "--size", "9"])
        assert result.exit_code == 2

    def test_corrupted_container(self, runner, tmp_path):
        stream = _write_stream(tmp_path / "s.txt", [(5, 3)])
        _build(runner, stream, tmp_path / "a.tsk")
        data = bytearray((tmp_path / "a.tsk").read_bytes())
        data[10] ^= 0xFF
        (tmp_path / "a.tsk").write_bytes(bytes(data))
        result = runner.invoke(cli, ["sample", "--sketch", str(tmp_path / "a.tsk")])
        assert result.exit_code == 2
        assert "CRC" in result.output


class TestMerge:
    def test_union(self, runner, tmp_path):
        _build(runner, _write_stream(tmp_path / "a.txt", [(5, 3)]), tmp_path / "a.tsk")
        _build(runner, _write_stream(tmp_path / "b.txt", [(9, 1)]), tmp_path / "b.tsk")
        result = runner.invoke(
            cli, ["merge", "--a", str(tmp_path / "a.tsk"), "--b", str(tmp_path / "b.tsk"),
                  "--out", str(tmp_path / "u.tsk")]
        )
        assert result.exit_code == 0, result.output
        out = tmp_path / "u.tsv"
        runner.invoke(cli, ["sample", "--sketch", str(tmp_path / "u.tsk"), "--out", str(out)])
        assert _sample_rows(out) == ["5\t3", "9\t1"]

    def test_self_difference(self, runner, tmp_path):
        stream = _write_stream(tmp_path / "s.txt", [(5, 3), (6, -2)])
        _build(runner, stream, tmp_path / "a.tsk", "--model", "nonstrict")
        result = runner.invoke(
            cli, ["merge", "--a", str(tmp_path / "a.tsk"), "--b", str(tmp_path / "a.tsk"),
                  "--op", "diff", "--out", str(tmp_path / "d.tsk")]
        )
        assert result.exit_code == 0, result.output
        out = tmp_path / "d.tsv"
        runner.invoke(cli, ["sample", "--sketch", str(tmp_path / "d.tsk"), "--out", str(out)])
        assert _sample_rows(out) == []
        assert "# level\tnone" in out.read_text(encoding="utf-8")

    def test_strict_difference_rejected(self, runner, tmp_path):
        _build(runner, _write_stream(tmp_path / "s.txt", [(5, 3)]), tmp_path / "a.tsk")
        result = runner.invoke(
            cli, ["merge", "--a", str(tmp_path / "a.tsk"), "--b", str(tmp_path / "a.tsk"),
                  "--op", "diff", "--out", str(tmp_path / "d.tsk")]
        )
        assert result.exit_code == 2

    def test_seed_mismatch(self, runner, tmp_path):
        stream = _write_stream(tmp_path / "s.txt", [(5, 3)])
        _build(runner, stream, tmp_path / "a.tsk")
        _build(runner, stream, tmp_path / "b.tsk", "--seed", "12")
        result = runner.invoke(
            cli, ["merge", "--a", str(tmp_path / "a.tsk"), "--b", str(tmp_path / "b.tsk"),
                  "--out", str(tmp_path / "u.tsk")]
        )
        assert result.exit_code == 2


class TestQueries:
    @pytest.fixture
    def sketch_path(self, runner, tmp_path) -> Path:
        stream = _write_stream(tmp_path / "s.txt", [(1, 1), (2, 1), (3, 2), (4, 2)])
        _build(runner, stream, tmp_path / "a.tsk")
        return tmp_path / "a.tsk"

    def _query(self, runner, sketch_path, *args: str) -> str:
        result = runner.invoke(cli, ["query", "--sketch", str(sketch_path), *args])
        assert result.exit_code == 0, result.output
        return _query_value(result.output)

    def test_inverse_point(self, runner, sketch_path):
        assert self._query(runner, sketch_path, "inverse-point", "--freq", "1") == "0.5"

    def test_inverse_range(self, runner, sketch_path):
        assert self._query(runner, sketch_path, "inverse-range", "--lo", "1", "--hi", "2") == "1.0"

    def test_heavy(self, runner, sketch_path):
        assert self._query(runner, sketch_path, "heavy", "--phi", "0.5") == "1 2"

    def test_quantile(self, runner, sketch_path):
        assert self._query(runner, sketch_path, "quantile", "--phi", "0.75") == "2"

    def test_frequency_zero_rejected(self, runner, sketch_path):
        result = runner.invoke(
            cli, ["query", "--sketch", str(sketch_path), "inverse-point", "--freq", "0"]
        )
        assert result.exit_code == 2

    def test_empty_sketch(self, runner, tmp_path):
        _build(runner, _write_stream(tmp_path / "s.txt", []), tmp_path / "e.tsk")
        result = runner.invoke(
            cli, ["query", "--sketch", str(tmp_path / "e.tsk"), "quantile", "--phi", "0.5"]
        )
        assert result.exit_code == 4


class TestJaccardAndInspect:
    def test_jaccard_identical(self, runner, tmp_path):
        stream = _write_stream(tmp_path / "s.txt", [(k, 1) for k in range(1, 200)])
        _build(runner, stream, tmp_path / "a.tsk")
        _build(runner, stream, tmp_path / "b.tsk")
        result = runner.invoke(cli, ["jaccard", "--a", str(tmp_path / "a.tsk"), "--b", str(tmp_path / "b.tsk")])
        assert result.exit_code == 0, result.output
        assert _query_value(result.output) == "1.0"

    def test_inspect(self, runner, tmp_path):
        _build(runner, _write_stream(tmp_path / "s.txt", [(5, 3)]), tmp_path / "a.tsk")
        result = runner.invoke(cli, ["inspect", "--sketch", str(tmp_path / "a.tsk")])
        assert result.exit_code == 0, result.output
        assert "capacity" in result.output

    def test_metrics_out(self, runner, tmp_path):
        metrics = tmp_path / "metrics.prom"
        stream = _write_stream(tmp_path / "s.txt", [(5, 3)])
        result = runner.invoke(
            cli, ["--metrics-out", str(metrics), "build", "--input", str(stream), "--k", "8",
                  "--out", str(tmp_path / "a.tsk")]
        )
        assert result.exit_code == 0, result.output
        assert "turnstilesampler_updates_total" in metrics.read_text(encoding="utf-8")
