"""Ensure tests can import the local package from source."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

SRC_DIR = Path(__file__).resolve().parents[1] / "src"
if str(SRC_DIR) not in sys.path:
    sys.path.insert(0, str(SRC_DIR))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    for name in ("TIKHONOV_NMF_LOG_LEVEL", "TIKHONOV_NMF_SEED", "TIKHONOV_NMF_WORKERS"):
        monkeypatch.delenv(name, raising=False)
