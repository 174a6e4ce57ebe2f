"""Shared fixtures for the multiseq test suite."""

from pathlib import Path

import numpy as np
import pytest

from multiseq.numerics import precision


@pytest.fixture
def rng():
    """Seeded generator so randomized checks are reproducible."""
    return np.random.default_rng(1234)


@pytest.fixture
def float64():
    """Run the test body with 64-bit tensors."""
    with precision(64):
        yield


def write_lines(path: Path, lines) -> Path:
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    return path


@pytest.fixture
def copy_corpus(tmp_path):
    """Tiny parallel corpus where the target repeats the source."""
    sentences = [
        "a b c",
        "b c d",
        "c d a",
        "d a b",
        "a c",
        "b d",
    ]
    source = write_lines(tmp_path / "train.src", sentences)
    target = write_lines(tmp_path / "train.tgt", sentences)
    return source, target
