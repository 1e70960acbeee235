"""Benchmark harness: synthetic generators, drift induction, experiment runs.

The drift-induction protocol: shuffle the rows, partition 60/20/20 into
train/validation/drift sets, rank features with a reference random forest
trained on the train partition, perturb the drift partition on the top or
bottom quarter of the ranking, then ask the detector (trained on the train
partition) for a verdict on the perturbed drift partition. The reference
forest's accuracy drop labels each scenario as real drift (the perturbation
hurts prediction) or virtual drift (it does not).

Two perturbation kinds are supported:

* ``noise``: add i.i.d. Gaussian draws (default N(1, 1)) to each selected
  column, shifting its location.
* ``step``: shuffle the selected feature columns among each other (a cyclic
  rotation in ranking order; a single selected column falls back to a
  within-column row shuffle). The set of per-column value multisets over
  the selected group is preserved; what breaks is which position holds
  which marginal, and the joint structure with the remaining columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from sklearn.ensemble import RandomForestClassifier

from .dataset import Dataset, load_csv
from .detector import DetectorConfig, detect, train
from .errors import (
    DegenerateDataError,
    GsdError,
    InsufficientDataError,
    InvalidParameterError,
)

__all__ = [
    "PerturbationSpec",
    "ExperimentResult",
    "gen_hyperplane",
    "hyperplane_weights",
    "gen_waveform",
    "feature_importance",
    "split_protocol",
    "induce_drift",
    "classify_drift_type",
    "run_experiment",
    "render_results_csv",
    "render_results_text",
]

_FOREST_TREES = 50
_FOREST_DEPTH = 8


def _splitmix64(seed: int, index: int) -> int:
    """Fixed seed derivation: independent 63-bit streams from a master seed."""
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return (z ^ (z >> 31)) & 0x7FFFFFFFFFFFFFFF


@dataclass(frozen=True)
class PerturbationSpec:
    """What to perturb and how.

    ``fraction`` of the features (rounded up) are selected from the top
    (``most_important``) or bottom (``least_important``) of an importance
    ranking.
    """

    kind: str = "noise"
    target: str = "most_important"
    fraction: float = 0.25
    noise_mean: float = 1.0
    noise_std: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("step", "noise"):
            raise InvalidParameterError(f"kind must be 'step' or 'noise', got {self.kind!r}")
        if self.target not in ("most_important", "least_important"):
            raise InvalidParameterError(
                "target must be 'most_important' or 'least_important', "
                f"got {self.target!r}"
            )
        if not 0.0 < self.fraction <= 1.0:
            raise InvalidParameterError(
                f"fraction must be in (0, 1], got {self.fraction}"
            )
        if self.noise_std <= 0.0:
            raise InvalidParameterError(f"noise_std must be > 0, got {self.noise_std}")


@dataclass(frozen=True)
class ExperimentResult:
    """Aggregated outcome of one perturbation scenario over several runs."""

    dataset_name: str
    perturbation: PerturbationSpec
    drift_class: str
    runs: int
    detections: int
    rate: float
    acc_train: float
    acc_validation: float
    acc_drift: float
    per_run_detected: tuple[bool, ...] = field(default=())
    per_run_class: tuple[str, ...] = field(default=())


def hyperplane_weights(seed: int, n_features: int = 10) -> np.ndarray:
    """The (unit-norm, positive) weight vector a seeded hyperplane uses."""
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.0, 1.0, size=n_features)
    w[w < 1e-3] = 1e-3  # keep every feature at least marginally involved
    return w / np.linalg.norm(w)


def gen_hyperplane(seed: int, n_rows: int = 10000, n_features: int = 10) -> Dataset:
    """Linear-threshold synthetic data on the unit cube.

    Rows are uniform in [0,1]^d; the label is 1 when w.x >= w.c for a
    seeded random unit weight vector w and the cube center c. Labels are
    balanced by symmetry.
    """
    if n_rows < 1:
        raise InvalidParameterError(f"n_rows must be >= 1, got {n_rows}")
    w = hyperplane_weights(seed, n_features)
    rng = np.random.default_rng(_splitmix64(seed, 1))
    x = rng.uniform(0.0, 1.0, size=(n_rows, n_features))
    labels = (x @ w >= w.sum() * 0.5).astype(np.int64)
    return Dataset(
        columns=tuple(np.ascontiguousarray(x[:, j]) for j in range(n_features)),
        feature_names=tuple(f"f{j}" for j in range(n_features)),
        labels=labels,
    )


# The three triangular base shapes every waveform sample combines.
_WAVE_BASES = np.zeros((3, 21))
_WAVE_BASES[0, 0:13] = np.concatenate([np.arange(7), np.arange(5, -1, -1)])
_WAVE_BASES[1, 8:21] = np.concatenate([np.arange(7), np.arange(5, -1, -1)])
_WAVE_BASES[2, 4:17] = np.concatenate([np.arange(7), np.arange(5, -1, -1)])


def gen_waveform(seed: int, n_rows: int = 10000) -> Dataset:
    """Waveform synthetic data: 21 combined-wave attributes plus 19 noise ones.

    Each row blends two of three triangular base waves with a uniform
    mixing weight and unit Gaussian noise; the remaining 19 attributes are
    pure unit Gaussian noise. The three-way wave choice is binarized as
    "first combination vs rest", so labels are {0,1} with roughly one third
    positives.
    """
    if n_rows < 1:
        raise InvalidParameterError(f"n_rows must be >= 1, got {n_rows}")
    rng = np.random.default_rng(seed)
    wave_class = rng.integers(0, 3, size=n_rows)
    u = rng.uniform(0.0, 1.0, size=n_rows)
    # Class c blends the two base waves other than... classic pairing:
    # 0 -> (w0, w1), 1 -> (w0, w2), 2 -> (w1, w2).
    pair_a = np.array([0, 0, 1])[wave_class]
    pair_b = np.array([1, 2, 2])[wave_class]
    base = (
        u[:, None] * _WAVE_BASES[pair_a] + (1.0 - u[:, None]) * _WAVE_BASES[pair_b]
    )
    base = base + rng.normal(0.0, 1.0, size=base.shape)
    noise = rng.normal(0.0, 1.0, size=(n_rows, 19))
    x = np.hstack([base, noise])
    labels = (wave_class == 0).astype(np.int64)
    return Dataset(
        columns=tuple(np.ascontiguousarray(x[:, j]) for j in range(x.shape[1])),
        feature_names=tuple(f"a{j}" for j in range(x.shape[1])),
        labels=labels,
    )


def _reference_forest(seed: int) -> RandomForestClassifier:
    return RandomForestClassifier(
        n_estimators=_FOREST_TREES,
        max_depth=_FOREST_DEPTH,
        criterion="gini",
        max_features="sqrt",
        bootstrap=True,
        random_state=seed,
    )


def _fit_reference_forest(data: Dataset, seed: int) -> RandomForestClassifier:
    if data.labels is None:
        raise InvalidParameterError("a labeled dataset is required")
    if len(np.unique(data.labels)) < 2:
        raise DegenerateDataError("cannot fit the reference model on a single class")
    forest = _reference_forest(seed % (2**32))
    forest.fit(data.matrix(), data.labels)
    return forest


def _ranking(forest: RandomForestClassifier) -> list[int]:
    order = np.argsort(-forest.feature_importances_, kind="stable")
    return [int(i) for i in order]


def feature_importance(data: Dataset, seed: int = 0) -> list[int]:
    """Feature indices ranked most-important first.

    Importance is total Gini impurity decrease from a small reference
    random forest (50 trees, depth <= 8), deterministic given the seed.
    """
    return _ranking(_fit_reference_forest(data, seed))


def split_protocol(data: Dataset, seed: int = 0) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded shuffle, then a contiguous 60/20/20 partition.

    Returns (train, validation, drift) subsets; together they cover every
    row exactly once.
    """
    n = data.n_rows
    if n < 100:
        raise InsufficientDataError(f"split_protocol needs >= 100 rows, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_train = int(0.6 * n)
    n_val = int(0.2 * n)
    return (
        data.subset(perm[:n_train]),
        data.subset(perm[n_train : n_train + n_val]),
        data.subset(perm[n_train + n_val :]),
    )


def _selected_features(spec: PerturbationSpec, ranking: list[int]) -> list[int]:
    d = len(ranking)
    k = int(np.ceil(spec.fraction * d))
    if spec.target == "most_important":
        return list(ranking[:k])
    return list(ranking[-k:])


def induce_drift(
    data: Dataset, spec: PerturbationSpec, importance_ranking: list[int]
) -> Dataset:
    """Perturb the selected columns of ``data``; everything else is untouched.

    ``noise`` adds seeded i.i.d. N(noise_mean, noise_std^2) draws per
    selected column. ``step`` rotates the selected columns' contents one
    position along the ranking order (each position receives another
    selected column's values); when only one column is selected it is
    row-shuffled instead. Labels are never modified.
    """
    if sorted(importance_ranking) != list(range(data.n_features)):
        raise InvalidParameterError(
            "importance_ranking must be a permutation of all feature indices"
        )
    selected = _selected_features(spec, importance_ranking)
    rng = np.random.default_rng(spec.seed)

    replacements: dict[int, np.ndarray] = {}
    if spec.kind == "noise":
        for f in selected:
            col = data.column(f)
            replacements[f] = col + rng.normal(
                spec.noise_mean, spec.noise_std, size=col.size
            )
    elif len(selected) == 1:
        f = selected[0]
        replacements[f] = data.column(f)[rng.permutation(data.n_rows)]
    else:
        for pos, f in enumerate(selected):
            source = selected[(pos + 1) % len(selected)]
            replacements[f] = data.column(source).copy()
    return data.with_columns(replacements)


def classify_drift_type(acc_train: float, acc_val: float, acc_drift: float) -> str:
    """Label a perturbation scenario as 'real' or 'virtual' drift.

    Real when the train-to-validation accuracy gap is smaller than the
    validation-to-drift gap (the perturbation hurt the reference model more
    than ordinary generalization error); ties are virtual.
    """
    for name, v in (("acc_train", acc_train), ("acc_val", acc_val), ("acc_drift", acc_drift)):
        if not 0.0 <= v <= 1.0:
            raise InvalidParameterError(f"{name} must be in [0, 1], got {v}")
    return "real" if (acc_train - acc_val) < (acc_val - acc_drift) else "virtual"


def _resolve_source(dataset_source, run_seed: int, n_rows: int | None):
    """Materialize one run's dataset from a source descriptor.

    Accepts a generator name ('hyperplane' / 'waveform'), a CSV path plus
    label column as a (path, label_column) tuple, a Dataset (reused across
    runs; the per-run shuffle still varies), or a callable seed -> Dataset.
    """
    if isinstance(dataset_source, Dataset):
        return dataset_source
    if callable(dataset_source):
        return dataset_source(run_seed)
    if isinstance(dataset_source, str):
        name = dataset_source.lower()
        if name == "hyperplane":
            return gen_hyperplane(run_seed, n_rows or 10000)
        if name == "waveform":
            return gen_waveform(run_seed, n_rows or 10000)
        path = Path(dataset_source)
        if path.exists():
            raise InvalidParameterError(
                "CSV sources need a label column: pass (path, label_column)"
            )
        raise InvalidParameterError(f"unknown dataset source {dataset_source!r}")
    if isinstance(dataset_source, tuple) and len(dataset_source) == 2:
        return load_csv(dataset_source[0], label_column=dataset_source[1],
                        drop_non_numeric=True)
    raise InvalidParameterError(f"unsupported dataset source {dataset_source!r}")


def run_experiment(
    dataset_source,
    spec: PerturbationSpec,
    n_runs: int = 10,
    detector_config: DetectorConfig = DetectorConfig(),
    seed: int = 0,
    dataset_name: str | None = None,
    n_rows: int | None = None,
) -> ExperimentResult:
    """Run one perturbation scenario ``n_runs`` times and aggregate.

    Per run (seeds derived from ``seed``): materialize the dataset, apply
    the 60/20/20 protocol, rank features on the train partition, perturb
    the drift partition, train the detector on the train partition and read
    its verdict on the perturbed drift partition. The same reference forest
    that ranked the features supplies the train/validation/drift accuracies
    that label the scenario real or virtual (majority across runs).

    A run that raises is reported with its run index attached, never
    silently dropped.
    """
    if n_runs < 1:
        raise InvalidParameterError(f"n_runs must be >= 1, got {n_runs}")
    if dataset_name is None:
        dataset_name = (
            dataset_source if isinstance(dataset_source, str) else "dataset"
        )

    detected: list[bool] = []
    classes: list[str] = []
    accs = np.zeros(3)
    for run in range(n_runs):
        run_seed = _splitmix64(seed, run)
        try:
            data = _resolve_source(dataset_source, run_seed, n_rows)
            train_part, val_part, drift_part = split_protocol(
                data, _splitmix64(run_seed, 1)
            )
            # One reference forest per run: it both ranks the features and
            # supplies the accuracies used to label the scenario.
            forest = _fit_reference_forest(train_part, _splitmix64(run_seed, 2))
            ranking = _ranking(forest)
            perturbed = induce_drift(
                drift_part, replace(spec, seed=_splitmix64(run_seed, 3)), ranking
            )

            acc_train = float(
                forest.score(train_part.matrix(), train_part.labels)
            )
            acc_val = float(forest.score(val_part.matrix(), val_part.labels))
            acc_drift = float(forest.score(perturbed.matrix(), perturbed.labels))
            classes.append(classify_drift_type(acc_train, acc_val, acc_drift))
            accs += (acc_train, acc_val, acc_drift)

            model = train(
                train_part,
                n_splits=detector_config.n_splits,
                tau=detector_config.tau,
                em_config=detector_config.em,
                seed=_splitmix64(run_seed, 4),
                calibration_repetitions=detector_config.calibration_repetitions,
            )
            report = detect(model, perturbed.without_labels())
            detected.append(report.drift)
        except GsdError as e:
            raise type(e)(
                f"run {run} of scenario {spec.kind}/{spec.target}: {e}"
            ) from e

    accs /= n_runs
    n_real = sum(1 for c in classes if c == "real")
    return ExperimentResult(
        dataset_name=dataset_name,
        perturbation=spec,
        drift_class="real" if n_real * 2 > len(classes) else "virtual",
        runs=n_runs,
        detections=sum(detected),
        rate=sum(detected) / n_runs,
        acc_train=float(accs[0]),
        acc_validation=float(accs[1]),
        acc_drift=float(accs[2]),
        per_run_detected=tuple(detected),
        per_run_class=tuple(classes),
    )


_CSV_HEADER = (
    "dataset,kind,target,drift_class,runs,detections,rate,"
    "acc_train,acc_val,acc_drift"
)


def render_results_csv(results: list[ExperimentResult]) -> str:
    lines = [_CSV_HEADER]
    for r in results:
        lines.append(
            f"{r.dataset_name},{r.perturbation.kind},{r.perturbation.target},"
            f"{r.drift_class},{r.runs},{r.detections},{r.rate:.4f},"
            f"{r.acc_train:.4f},{r.acc_validation:.4f},{r.acc_drift:.4f}"
        )
    return "\n".join(lines) + "\n"


def render_results_text(results: list[ExperimentResult]) -> str:
    header = (
        f"{'dataset':<12} {'kind':<6} {'target':<16} {'class':<8} "
        f"{'rate':>6} {'det/runs':>9} {'acc_tr':>7} {'acc_val':>8} {'acc_dr':>7}"
    )
    lines = [header, "-" * len(header)]
    for r in results:
        lines.append(
            f"{r.dataset_name:<12} {r.perturbation.kind:<6} "
            f"{r.perturbation.target:<16} {r.drift_class:<8} "
            f"{r.rate:>6.2f} {f'{r.detections}/{r.runs}':>9} "
            f"{r.acc_train:>7.3f} {r.acc_validation:>8.3f} {r.acc_drift:>7.3f}"
        )
    return "\n".join(lines) + "\n"
