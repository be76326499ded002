"""Tests for the thread pool helpers."""

import os
from unittest.mock import patch

from src.parallel import THREADS_ENV_VAR, parallel_map, worker_count


class TestWorkerCount:
    """Tests for worker_count."""

    def test_environment_override(self):
        """Test EIGHTPORT_THREADS sets the pool size."""
        with patch.dict(os.environ, {THREADS_ENV_VAR: "3"}):
            assert worker_count() == 3

    def test_invalid_override_falls_back(self, mocker):
        """Test an invalid value is ignored in favor of the CPU count."""
        mocker.patch("src.parallel.os.cpu_count", return_value=2)
        with patch.dict(os.environ, {THREADS_ENV_VAR: "many"}):
            assert worker_count() == 2

    def test_capped_default(self, mocker):
        """Test the default never exceeds eight threads."""
        mocker.patch("src.parallel.os.cpu_count", return_value=64)
        with patch.dict(os.environ, {}, clear=True):
            assert worker_count() == 8


class TestParallelMap:
    """Tests for parallel_map."""

    def test_preserves_order(self):
        """Test results come back in input order."""
        with patch.dict(os.environ, {THREADS_ENV_VAR: "4"}):
            assert parallel_map(lambda x: x * x, range(50)) == [x * x for x in range(50)]

    def test_single_worker(self):
        """Test the serial path."""
        with patch.dict(os.environ, {THREADS_ENV_VAR: "1"}):
            assert parallel_map(str, [1, 2]) == ["1", "2"]

    def test_empty(self):
        """Test an empty input."""
        assert parallel_map(abs, []) == []
