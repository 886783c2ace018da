"""Domain types, dataset handling, pool mechanics, and seeded randomness.

Everything downstream (strategies, the learning loop, the generators) moves
samples between two places: a growing training set and per-class pools of
not-yet-drawn samples. The types here own that bookkeeping and the
determinism guarantees the sweep runner relies on.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "ClassId",
    "Sample",
    "DatasetBundle",
    "ClassPools",
    "TrainingSet",
    "RandomSource",
    "split_initial",
    "draw_from_pool",
    "class_balance",
]


@dataclass(frozen=True)
class ClassId:
    """A class in the label set: positional index plus display name."""

    index: int
    name: str


@dataclass(frozen=True, eq=False)
class Sample:
    """One labeled data point.

    ``features`` is a read-only 1-d float vector; ``label`` is the index of a
    registered :class:`ClassId`. Identity is the ``id`` string, which stays
    stable through pool moves and report emission.
    """

    id: str
    features: np.ndarray
    label: int


def _check_samples(split_name: str, samples: Sequence[Sample], feature_dim: int, num_classes: int) -> None:
    for s in samples:
        if s.features.ndim != 1 or s.features.shape[0] != feature_dim:
            raise ConfigurationError(
                f"{split_name}: sample {s.id!r} has feature shape {s.features.shape}, expected ({feature_dim},)"
            )
        if not np.all(np.isfinite(s.features)):
            raise ConfigurationError(f"{split_name}: sample {s.id!r} has non-finite features")
        if not 0 <= s.label < num_classes:
            raise ConfigurationError(f"{split_name}: sample {s.id!r} has unregistered label {s.label}")


@dataclass(frozen=True)
class DatasetBundle:
    """Immutable train/validation/test splits plus class metadata.

    Splits are disjoint by sample id; every label is a registered class.
    Safe to share read-only across concurrently executing runs.
    """

    classes: tuple[ClassId, ...]
    train: tuple[Sample, ...]
    validation: tuple[Sample, ...]
    test: tuple[Sample, ...]
    feature_dim: int

    @classmethod
    def build(
        cls,
        classes: Sequence[ClassId],
        train: Iterable[Sample],
        validation: Iterable[Sample],
        test: Iterable[Sample],
        feature_dim: int,
    ) -> "DatasetBundle":
        """Validate and assemble a bundle; raises ConfigurationError on bad input."""
        classes = tuple(classes)
        if len(classes) < 2:
            raise ConfigurationError(f"need at least 2 classes, got {len(classes)}")
        if [c.index for c in classes] != list(range(len(classes))):
            raise ConfigurationError("class indices must be 0..I-1 in order")
        if feature_dim < 1:
            raise ConfigurationError(f"feature_dim must be >= 1, got {feature_dim}")

        bundle = cls(
            classes=classes,
            train=tuple(train),
            validation=tuple(validation),
            test=tuple(test),
            feature_dim=feature_dim,
        )
        seen: dict[str, str] = {}
        for split_name, samples in (
            ("train", bundle.train),
            ("validation", bundle.validation),
            ("test", bundle.test),
        ):
            _check_samples(split_name, samples, feature_dim, len(classes))
            for s in samples:
                if s.id in seen:
                    raise ConfigurationError(
                        f"sample id {s.id!r} appears in both {seen[s.id]} and {split_name}"
                    )
                seen[s.id] = split_name
        return bundle

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    def class_names(self) -> list[str]:
        return [c.name for c in self.classes]

    def split_counts(self, samples: Sequence[Sample]) -> list[int]:
        """Per-class sample counts of one split."""
        counts = [0] * self.num_classes
        for s in samples:
            counts[s.label] += 1
        return counts


def _key_to_int(key: int | str) -> int:
    """Map a derivation key to a stable 64-bit integer (platform independent)."""
    if isinstance(key, int):
        return key
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class RandomSource:
    """Seeded, derivable randomness.

    Wraps numpy's PCG64 behind a (seed, key-path) pair so that identical
    seeds give identical draw streams across runs and platforms, and so the
    engine can hand each iteration an independent stream derived from
    (seed, iteration) without perturbing the others.
    """

    seed: int
    key: tuple[int, ...] = ()

    def derive(self, *subkeys: int | str) -> "RandomSource":
        """Child source for a sub-task; same (seed, path) always yields the same stream."""
        return RandomSource(self.seed, self.key + tuple(_key_to_int(k) for k in subkeys))

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this source's stream."""
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=self.key))


class ClassPools:
    """Per-class reservoirs of samples not yet in the training set.

    Pool order is randomized once when the pools are built (see
    :func:`split_initial`); draws take the front of the list, so consecutive
    draws are uniform without replacement and O(1) per sample.
    """

    def __init__(self, per_class: Sequence[Sequence[Sample]]):
        self._pools: list[list[Sample]] = [list(p) for p in per_class]
        for i, pool in enumerate(self._pools):
            for s in pool:
                if s.label != i:
                    raise ConfigurationError(f"pool {i} contains sample {s.id!r} with label {s.label}")

    @property
    def num_classes(self) -> int:
        return len(self._pools)

    def remaining(self, class_index: int) -> int:
        self._check_class(class_index)
        return len(self._pools[class_index])

    def remaining_counts(self) -> list[int]:
        return [len(p) for p in self._pools]

    def total_remaining(self) -> int:
        return sum(len(p) for p in self._pools)

    def draw(self, class_index: int, n: int) -> list[Sample]:
        """Remove and return up to ``n`` samples from one class pool.

        Returns fewer than ``n`` when the pool runs short; callers detect the
        shortfall from the length of the result.
        """
        self._check_class(class_index)
        if n < 0:
            raise ConfigurationError(f"draw count must be >= 0, got {n}")
        pool = self._pools[class_index]
        taken = pool[:n]
        del pool[:n]
        return taken

    def give_back(self, samples: Iterable[Sample]) -> None:
        """Return previously drawn samples to the back of their class pools."""
        for s in samples:
            self._check_class(s.label)
            self._pools[s.label].append(s)

    def _check_class(self, class_index: int) -> None:
        if not 0 <= class_index < len(self._pools):
            raise ConfigurationError(
                f"unknown class index {class_index} (have {len(self._pools)} pools)"
            )


def draw_from_pool(pools: ClassPools, class_index: int, n: int) -> tuple[list[Sample], int]:
    """Draw up to ``n`` samples of one class; returns (samples, shortfall)."""
    samples = pools.draw(class_index, n)
    return samples, n - len(samples)


@dataclass
class TrainingSet:
    """The growing labeled set the learner trains on at iteration ``iteration``."""

    samples: list[Sample]
    counts: list[int]
    iteration: int
    _ids: set[str] = field(repr=False, default_factory=set)

    @classmethod
    def from_samples(cls, samples: Iterable[Sample], num_classes: int, iteration: int = 0) -> "TrainingSet":
        ts = cls(samples=[], counts=[0] * num_classes, iteration=iteration)
        ts._append(samples)
        return ts

    @property
    def size(self) -> int:
        return len(self.samples)

    def ids(self) -> frozenset[str]:
        return frozenset(self._ids)

    def _append(self, new_samples: Iterable[Sample]) -> None:
        for s in new_samples:
            if s.id in self._ids:
                raise ConfigurationError(f"sample {s.id!r} already in training set")
            if not 0 <= s.label < len(self.counts):
                raise ConfigurationError(f"sample {s.id!r} has unregistered label {s.label}")
            self.samples.append(s)
            self.counts[s.label] += 1
            self._ids.add(s.id)

    def extended(self, new_samples: Iterable[Sample]) -> "TrainingSet":
        """New TrainingSet with ``new_samples`` appended and the iteration bumped."""
        ts = TrainingSet(
            samples=list(self.samples),
            counts=list(self.counts),
            iteration=self.iteration + 1,
            _ids=set(self._ids),
        )
        ts._append(new_samples)
        return ts


def split_initial(
    train: Sequence[Sample],
    num_classes: int,
    per_class_initial: int,
    rng: RandomSource,
) -> tuple[TrainingSet, ClassPools]:
    """Split the train collection into an initial subset and per-class pools.

    Takes ``min(per_class_initial, available)`` uniformly-random samples per
    class into the initial training set; everything else lands in that
    class's pool, pre-shuffled so later front-of-pool draws stay uniform.
    Classes with fewer than ``per_class_initial`` samples contribute all they
    have (a warning is emitted).
    """
    if not train:
        raise ConfigurationError("cannot split an empty train collection")
    if per_class_initial < 0:
        raise ConfigurationError(f"per_class_initial must be >= 0, got {per_class_initial}")

    by_class: list[list[Sample]] = [[] for _ in range(num_classes)]
    for s in train:
        if not 0 <= s.label < num_classes:
            raise ConfigurationError(f"sample {s.id!r} has unregistered label {s.label}")
        by_class[s.label].append(s)

    gen = rng.generator()
    initial: list[Sample] = []
    pools: list[list[Sample]] = []
    for i, group in enumerate(by_class):
        if 0 < len(group) < per_class_initial:
            warnings.warn(
                f"class {i} has only {len(group)} train samples, fewer than "
                f"per_class_initial={per_class_initial}; taking all of them",
                stacklevel=2,
            )
        order = gen.permutation(len(group))
        shuffled = [group[j] for j in order]
        initial.extend(shuffled[:per_class_initial])
        pools.append(shuffled[per_class_initial:])

    return TrainingSet.from_samples(initial, num_classes, iteration=0), ClassPools(pools)


def class_balance(ts: TrainingSet) -> np.ndarray:
    """Relative class balance of the training set: fraction per class, sums to 1."""
    if ts.size == 0:
        raise ConfigurationError("class balance is undefined for an empty training set")
    return np.asarray(ts.counts, dtype=float) / ts.size
