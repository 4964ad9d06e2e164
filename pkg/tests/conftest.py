from pathlib import Path

import numpy as np
import pytest

from distmetric import EmbeddingSet

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


def make_set(
    rng: np.random.Generator,
    n: int,
    d: int,
    shift: float = 0.0,
    scale: float = 1.0,
    speakers: int = 1,
) -> EmbeddingSet:
    data = shift + scale * rng.standard_normal((n, d))
    return EmbeddingSet.from_rows(data, speaker_ids=[f"spk{i % speakers}" for i in range(n)])
