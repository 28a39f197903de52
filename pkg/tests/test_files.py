"""Tests for staged output writing."""

import os

import pandas as pd
import pytest

from src.clients import files
from src.clients.files import OutputWriter


@pytest.fixture
def existing(tmp_path):
    (tmp_path / "report.csv").write_text("old report\n")
    (tmp_path / "comparison.csv").write_text("old comparison\n")
    return tmp_path


def write_two(target):
    with OutputWriter(target) as out:
        out.write_table("report.csv", pd.DataFrame({"value": [1.0]}))
        out.write_text("comparison.csv", "new comparison\n")
    return out


class TestOutputWriter:
    def test_replaces_files_on_success(self, existing):
        out = write_two(existing)
        assert (existing / "report.csv").read_text() == "value\n1.0\n"
        assert (existing / "comparison.csv").read_text() == "new comparison\n"
        assert out.written == [existing / "report.csv", existing / "comparison.csv"]
        assert sorted(p.name for p in existing.iterdir()) == ["comparison.csv", "report.csv"]

    def test_error_inside_block_writes_nothing(self, existing):
        with pytest.raises(RuntimeError):
            with OutputWriter(existing) as out:
                out.write_text("report.csv", "new report\n")
                raise RuntimeError("boom")
        assert (existing / "report.csv").read_text() == "old report\n"
        assert sorted(p.name for p in existing.iterdir()) == ["comparison.csv", "report.csv"]

    def test_failed_move_restores_previous_files(self, existing, monkeypatch):
        real_replace = os.replace

        def failing_replace(src, dst):
            if str(src).endswith("comparison.csv") and ".previous" not in str(src) and ".staging-" in str(src):
                raise OSError("disk full")
            real_replace(src, dst)

        monkeypatch.setattr(files.os, "replace", failing_replace)
        with pytest.raises(OSError, match="disk full"):
            write_two(existing)

        assert (existing / "report.csv").read_text() == "old report\n"
        assert (existing / "comparison.csv").read_text() == "old comparison\n"
        assert sorted(p.name for p in existing.iterdir()) == ["comparison.csv", "report.csv"]

    def test_failed_move_removes_new_files(self, tmp_path, monkeypatch):
        real_replace = os.replace

        def failing_replace(src, dst):
            if str(src).endswith("comparison.csv"):
                raise OSError("disk full")
            real_replace(src, dst)

        monkeypatch.setattr(files.os, "replace", failing_replace)
        with pytest.raises(OSError):
            write_two(tmp_path)
        assert list(tmp_path.iterdir()) == []
