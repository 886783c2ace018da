from __future__ import annotations

import numpy as np
import pytest

from poolal.core import ClassId, DatasetBundle, Sample


def make_samples(labels, prefix="s", feature_dim=2, rng=None):
    """Samples with the given labels; features are small random vectors."""
    gen = rng or np.random.default_rng(0)
    return [
        Sample(id=f"{prefix}{i}", features=gen.standard_normal(feature_dim), label=int(lab))
        for i, lab in enumerate(labels)
    ]


def make_bundle(train_labels, val_labels, test_labels, num_classes, feature_dim=2, seed=0):
    gen = np.random.default_rng(seed)
    classes = [ClassId(index=i, name=f"class_{i}") for i in range(num_classes)]
    return DatasetBundle.build(
        classes,
        make_samples(train_labels, "tr", feature_dim, gen),
        make_samples(val_labels, "va", feature_dim, gen),
        make_samples(test_labels, "te", feature_dim, gen),
        feature_dim,
    )


@pytest.fixture(scope="session")
def cohort_scale_train():
    """A train collection with the reference cohort's per-class tile counts.

    346016 samples across 5 classes; features are views into one shared
    array to keep the fixture cheap.
    """
    counts = [35105, 65920, 67007, 86978, 91006]
    total = sum(counts)
    features = np.zeros((total, 1))
    samples = []
    k = 0
    for label, n in enumerate(counts):
        for _ in range(n):
            samples.append(Sample(id=f"c{k}", features=features[k], label=label))
            k += 1
    return samples, counts
