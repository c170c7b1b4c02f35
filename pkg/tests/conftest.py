import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fafscreen.grid import compute_features
from fafscreen.svm import Dataset, LabeledSample
from fafscreen.synth import SynthParams, generate_dataset


def features_dataset(synth) -> Dataset:
    samples = tuple(
        LabeledSample(
            compute_features(s.image, s.grid).as_array(),
            s.label,
            s.disease,
            s.sample_id,
        )
        for s in synth.samples
    )
    return Dataset(samples)


@pytest.fixture(scope="session")
def small_synth():
    """Desk-scale synthetic image set shared across test modules."""
    params = SynthParams(image_size=128, n_healthy=10, n_diseased=14, seed=42)
    return generate_dataset(params)


@pytest.fixture(scope="session")
def small_features(small_synth) -> Dataset:
    return features_dataset(small_synth)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
