"""Ensemble of single Gaussian splits for unsupervised batch drift detection.

Training builds decision stumps the way a random forest would: each split
gets a bootstrap sample and a random feature subset of size ceil(sqrt(d)),
fits per-class Gaussians on every candidate feature, and keeps the feature
whose weighted-density boundary has the smallest misclassification mass.
Features whose weighted densities never cross are dropped.

A per-feature movement tolerance ``beta`` is calibrated on held-out slices
of the training data: repeatedly split 75/25, compute the supervised
boundary on the 75% part, re-estimate it without labels on the 25% part by
EM, and record the absolute boundary shift. ``beta`` is the envelope
(maximum) of those shifts, so a stationary batch rarely beats it by
chance.

Detection re-estimates each used feature's mixture on the unlabeled batch
by the same EM procedure, recomputes the boundary, and counts a split as
drifting when the boundary moved at least ``beta``. Splits whose EM did
not converge or whose re-estimated densities do not cross are excluded
from the drifting count but still counted in the denominator. Drift is
flagged when the drifting ratio reaches ``tau``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .em import EmConfig, MixtureEstimate, assign_components, default_init, em_fit
from .errors import (
    DegenerateDataError,
    InsufficientBatchError,
    InsufficientClassDataError,
    InsufficientDataError,
    InvalidParameterError,
    ModelFormatError,
    SchemaMismatchError,
    UnsupportedVersionError,
    UntrainableDatasetError,
)
from .gmm_core import GaussianClassParams, select_boundary

__all__ = [
    "BayesianSplit",
    "GsdModel",
    "SplitOutcome",
    "DriftReport",
    "BetaCalibration",
    "DetectorConfig",
    "fit_class_gaussians",
    "build_split",
    "train",
    "calibrate_beta",
    "detect",
    "serialize_model",
    "deserialize_model",
]

SCHEMA_VERSION = 1

_MIN_CLASS_SAMPLES = 5
_MIN_TRAIN_ROWS = 40
_MIN_BATCH_ROWS = 20
_BETA_FLOOR_IQR = 1e-3
_SIGMA_FLOOR_RANGE = 1e-9

# A candidate feature is usable only when its boundary beats the trivial
# majority-class error min(p0, p1) by this relative margin. Nearly
# indistinguishable classes produce far-tail density crossings whose
# location is numerical noise; monitoring them detects nothing.
_MIN_RELATIVE_EDGE = 0.10

# The warm-started fit is kept unless the cold-started one beats it by this
# much log-likelihood per sample. Without the margin, two near-equal local
# optima would let sampling noise flip the chosen basin between runs, and
# the basin gap would drown the boundary movement being measured.
_LL_STICKINESS = 0.01


@dataclass(frozen=True)
class BayesianSplit:
    """One trained stump: feature, boundary, error, training class params."""

    feature_index: int
    alpha: float
    error: float
    class0: GaussianClassParams
    class1: GaussianClassParams


@dataclass(frozen=True)
class GsdModel:
    """Trained ensemble plus the calibrated boundary-movement tolerances.

    ``beta`` maps every feature used by some split to its movement
    tolerance; ``beta_fallback`` lists features whose calibration never
    produced a usable boundary estimate, so their beta is the floor value.
    """

    splits: tuple[BayesianSplit, ...]
    beta: dict[int, float]
    tau: float
    em_config: EmConfig
    feature_names: tuple[str, ...]
    seed: int
    beta_fallback: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.splits:
            raise InvalidParameterError("model must contain at least one split")
        if not 0.0 < self.tau <= 1.0:
            raise InvalidParameterError(f"tau must be in (0, 1], got {self.tau}")
        missing = {s.feature_index for s in self.splits} - set(self.beta)
        if missing:
            raise InvalidParameterError(
                f"features {sorted(missing)} used by splits but missing from beta"
            )

    @property
    def feature_indices(self) -> tuple[int, ...]:
        """Distinct features used by the ensemble, in first-use order."""
        seen: dict[int, None] = {}
        for s in self.splits:
            seen.setdefault(s.feature_index, None)
        return tuple(seen)


@dataclass(frozen=True)
class SplitOutcome:
    """Per-split detection outcome.

    ``alpha_hat``/``delta`` are None when the split was excluded (EM did
    not converge, or the re-estimated densities do not cross).
    """

    feature_index: int
    alpha_train: float
    alpha_hat: float | None
    delta: float | None
    exceeded: bool
    em_converged: bool


@dataclass(frozen=True)
class DriftReport:
    """Verdict of one detection pass over a batch."""

    per_split: tuple[SplitOutcome, ...]
    gamma: int
    evaluated: int
    ratio: float
    drift: bool


@dataclass(frozen=True)
class BetaCalibration:
    """Calibrated tolerances plus features that fell back to the floor."""

    beta: dict[int, float]
    fallback: tuple[int, ...]


@dataclass(frozen=True)
class DetectorConfig:
    """Bundle of training knobs, used by the bench harness and the CLI."""

    n_splits: int | None = None
    tau: float = 0.5
    em: EmConfig = field(default_factory=EmConfig)
    calibration_repetitions: int = 8


def fit_class_gaussians(column, labels) -> tuple[GaussianClassParams, GaussianClassParams]:
    """Per-class sample mean/std/proportion for one feature column.

    The standard deviation is floored at 1e-9 times the column's value
    range so constant classes stay representable; a column that is constant
    overall yields two identical shapes, which downstream boundary search
    treats as "no boundary".
    """
    x = np.asarray(column, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if x.size != y.size:
        raise InvalidParameterError(
            f"column has {x.size} rows but labels have {y.size}"
        )
    mask1 = y == 1
    mask0 = y == 0
    n0 = int(mask0.sum())
    n1 = int(mask1.sum())
    if n0 < _MIN_CLASS_SAMPLES or n1 < _MIN_CLASS_SAMPLES:
        raise InsufficientClassDataError(
            f"need >= {_MIN_CLASS_SAMPLES} samples per class, got {n0} and {n1}"
        )
    value_range = float(x.max() - x.min())
    sigma_floor = _SIGMA_FLOOR_RANGE * value_range if value_range > 0.0 else 1e-12

    out = []
    for mask, n in ((mask0, n0), (mask1, n1)):
        vals = x[mask]
        sd = float(vals.std(ddof=1))
        out.append(
            GaussianClassParams(
                mean=float(vals.mean()),
                std_dev=max(sd, sigma_floor),
                proportion=n / x.size,
            )
        )
    return out[0], out[1]


def build_split(
    data: Dataset, candidate_features, rng_seed: int
) -> BayesianSplit | None:
    """Build one stump on a bootstrap of ``data`` over the candidate features.

    Draws a with-replacement row sample of the same size as the input
    (seeded), fits class Gaussians per candidate feature, and keeps the
    feature with the smallest boundary misclassification mass. Features are
    skipped when a class has too little data, the densities never cross, or
    the boundary's error is within 5% of the majority-class error (no
    usable signal); None is returned when every candidate was skipped.
    """
    if data.labels is None:
        raise InvalidParameterError("build_split requires a labeled dataset")
    candidates = sorted(int(f) for f in candidate_features)
    if not candidates:
        raise InvalidParameterError("candidate_features must be non-empty")
    for f in candidates:
        if not 0 <= f < data.n_features:
            raise InvalidParameterError(
                f"candidate feature {f} out of range for {data.n_features} features"
            )
    rng = np.random.default_rng(rng_seed)
    idx = rng.integers(0, data.n_rows, size=data.n_rows)
    y = data.labels[idx]

    best: BayesianSplit | None = None
    for f in candidates:
        try:
            c0, c1 = fit_class_gaussians(data.column(f)[idx], y)
        except InsufficientClassDataError:
            continue
        boundary = select_boundary(c0, c1)
        if boundary is None:
            continue
        ceiling = min(c0.proportion, c1.proportion)
        if boundary.error > (1.0 - _MIN_RELATIVE_EDGE) * ceiling:
            continue
        if best is None or boundary.error < best.error:
            best = BayesianSplit(
                feature_index=f,
                alpha=boundary.alpha,
                error=boundary.error,
                class0=c0,
                class1=c1,
            )
    return best


def calibrate_beta(
    data: Dataset,
    features,
    em_config: EmConfig = EmConfig(),
    seed: int = 0,
    repetitions: int = 8,
) -> BetaCalibration:
    """Per-feature boundary-movement tolerances from held-out slices.

    Each repetition shuffles the rows (seeded) and splits them 75/25. The
    75% part gives the supervised boundary; the 25% part gives an
    unsupervised EM re-estimate, exactly as the detection phase computes
    it. The tolerance is the maximum absolute boundary shift observed
    across repetitions, floored at 1e-3 times the feature's interquartile
    range. Features whose repetitions all failed (no boundary, EM
    non-convergence) get the floor value and are listed in ``fallback``.
    """
    if data.labels is None:
        raise InvalidParameterError("calibrate_beta requires a labeled dataset")
    features = sorted(int(f) for f in features)
    if not features:
        raise InvalidParameterError("features must be non-empty")
    if repetitions < 1:
        raise InvalidParameterError(f"repetitions must be >= 1, got {repetitions}")

    n = data.n_rows
    n_fit = int(round(0.75 * n))
    rng = np.random.default_rng(seed)

    shifts: dict[int, list[float]] = {f: [] for f in features}
    for _ in range(repetitions):
        perm = rng.permutation(n)
        fit_rows, holdout_rows = perm[:n_fit], perm[n_fit:]
        y_fit = data.labels[fit_rows]
        for f in features:
            col = data.column(f)
            try:
                c0, c1 = fit_class_gaussians(col[fit_rows], y_fit)
            except InsufficientClassDataError:
                continue
            trained = select_boundary(c0, c1)
            if trained is None:
                continue
            converged, alpha_hat = _estimate_boundary(
                col[holdout_rows], c0, c1, em_config
            )
            if not converged or alpha_hat is None:
                continue
            shifts[f].append(abs(trained.alpha - alpha_hat))

    beta: dict[int, float] = {}
    fallback: list[int] = []
    for f in features:
        q25, q75 = np.percentile(data.column(f), [25.0, 75.0])
        floor = _BETA_FLOOR_IQR * float(q75 - q25)
        if shifts[f]:
            beta[f] = max(max(shifts[f]), floor)
        else:
            beta[f] = floor
            fallback.append(f)
    return BetaCalibration(beta=beta, fallback=tuple(fallback))


def train(
    data: Dataset,
    n_splits: int | None = None,
    tau: float = 0.5,
    em_config: EmConfig = EmConfig(),
    seed: int = 0,
    calibration_repetitions: int = 8,
) -> GsdModel:
    """Train the split ensemble and calibrate its tolerances.

    ``n_splits`` defaults to max(10, number of features). Every split draws
    its own bootstrap sample and a uniformly random feature subset of size
    ceil(sqrt(d)). All randomness flows from ``seed``.

    Raises UntrainableDatasetError when no split survives (no feature
    admits a boundary anywhere).
    """
    if data.labels is None:
        raise InvalidParameterError("train requires a labeled dataset")
    if data.n_rows < _MIN_TRAIN_ROWS:
        raise InsufficientDataError(
            f"train needs at least {_MIN_TRAIN_ROWS} rows, got {data.n_rows}"
        )
    if not 0.0 < tau <= 1.0:
        raise InvalidParameterError(f"tau must be in (0, 1], got {tau}")
    d = data.n_features
    if n_splits is None:
        n_splits = max(10, d)
    if n_splits < 1:
        raise InvalidParameterError(f"n_splits must be >= 1, got {n_splits}")

    rng = np.random.default_rng(seed)
    subset_size = math.isqrt(d)
    if subset_size * subset_size < d:
        subset_size += 1

    splits: list[BayesianSplit] = []
    for _ in range(n_splits):
        subset = rng.choice(d, size=subset_size, replace=False)
        split_seed = int(rng.integers(0, 2**63))
        split = build_split(data, subset, split_seed)
        if split is not None:
            splits.append(split)
    if not splits:
        raise UntrainableDatasetError(
            "no feature admits a decision boundary on any bootstrap sample"
        )

    calib_seed = int(rng.integers(0, 2**63))
    used = sorted({s.feature_index for s in splits})
    calibration = calibrate_beta(
        data, used, em_config, calib_seed, repetitions=calibration_repetitions
    )
    return GsdModel(
        splits=tuple(splits),
        beta=calibration.beta,
        tau=tau,
        em_config=em_config,
        feature_names=data.feature_names,
        seed=seed,
        beta_fallback=calibration.fallback,
    )


def detect(model: GsdModel, batch: Dataset) -> DriftReport:
    """Run the ensemble drift check on an unlabeled batch.

    One mixture is fitted per distinct feature (splits sharing a feature
    share the fit; the first such split's training parameters anchor the
    component-to-class matching). A split drifts when its boundary moved at
    least its feature's beta; splits without a usable re-estimated boundary
    are excluded from the drifting count but stay in the denominator. Drift
    is flagged when gamma / ensemble size >= tau.
    """
    if batch.n_rows < _MIN_BATCH_ROWS:
        raise InsufficientBatchError(
            f"batch needs at least {_MIN_BATCH_ROWS} rows, got {batch.n_rows}"
        )
    for f in model.feature_indices:
        if f >= batch.n_features:
            name = model.feature_names[f] if f < len(model.feature_names) else str(f)
            raise SchemaMismatchError(
                f"model feature {f} ({name!r}) missing from batch "
                f"with {batch.n_features} columns"
            )
        if (
            f < len(model.feature_names)
            and f < len(batch.feature_names)
            and batch.feature_names[f] != model.feature_names[f]
        ):
            raise SchemaMismatchError(
                f"batch column {f} is named {batch.feature_names[f]!r}, "
                f"model expects {model.feature_names[f]!r}"
            )

    # Shared per-feature re-estimation: (converged, alpha_hat or None).
    feature_fit: dict[int, tuple[bool, float | None]] = {}
    for s in model.splits:
        f = s.feature_index
        if f in feature_fit:
            continue
        feature_fit[f] = _estimate_boundary(
            batch.column(f), s.class0, s.class1, model.em_config
        )

    outcomes: list[SplitOutcome] = []
    gamma = 0
    evaluated = 0
    for s in model.splits:
        converged, alpha_hat = feature_fit[s.feature_index]
        if not converged or alpha_hat is None:
            outcomes.append(
                SplitOutcome(
                    feature_index=s.feature_index,
                    alpha_train=s.alpha,
                    alpha_hat=alpha_hat,
                    delta=None,
                    exceeded=False,
                    em_converged=converged,
                )
            )
            continue
        delta = abs(s.alpha - alpha_hat)
        exceeded = delta >= model.beta[s.feature_index]
        evaluated += 1
        if exceeded:
            gamma += 1
        outcomes.append(
            SplitOutcome(
                feature_index=s.feature_index,
                alpha_train=s.alpha,
                alpha_hat=alpha_hat,
                delta=delta,
                exceeded=exceeded,
                em_converged=True,
            )
        )

    ratio = gamma / len(model.splits)
    return DriftReport(
        per_split=tuple(outcomes),
        gamma=gamma,
        evaluated=evaluated,
        ratio=ratio,
        drift=ratio >= model.tau,
    )


def _estimate_boundary(
    column: np.ndarray,
    class0: GaussianClassParams,
    class1: GaussianClassParams,
    em_config: EmConfig,
) -> tuple[bool, float | None]:
    """EM re-estimate of one feature's boundary; (converged, alpha or None).

    Two starts are tried: warm (the training class parameters, which pulls
    EM toward the class decomposition when that is a likelihood optimum of
    the batch) and cold (the deterministic median-split init, which stays
    robust when the batch has moved far from the training parameters).
    Among the converged fits, one whose densities actually cross beats one
    whose densities do not (an encompassing fit carries no boundary to
    monitor). The warm fit is then preferred unless the cold fit is clearly
    better (see ``_LL_STICKINESS``), so stationary batches keep landing in
    the same likelihood basin that calibration saw. The training parameters
    anchor the component-to-class matching either way.
    """
    n = np.asarray(column).size
    fits: list[tuple[bool, float, float | None]] = []  # (is_warm, ll, alpha)
    for is_warm, init in ((True, (class0, class1)), (False, None)):
        try:
            start = init if init is not None else default_init(column)
            est = em_fit(column, start, em_config)
        except (InsufficientDataError, DegenerateDataError):
            continue
        if not est.converged:
            continue
        e0, e1 = assign_components(est, class0, class1)
        boundary = select_boundary(e0, e1)
        alpha = None if boundary is None else boundary.alpha
        fits.append((is_warm, est.log_likelihood, alpha))
    if not fits:
        return False, None
    crossing = [f for f in fits if f[2] is not None]
    pool = crossing if crossing else fits
    if len(pool) == 2:
        warm, cold = pool[0], pool[1]
        chosen = warm if warm[1] >= cold[1] - _LL_STICKINESS * n else cold
    else:
        chosen = pool[0]
    return True, chosen[2]


# ---------------------------------------------------------------------------
# Serialization: versioned JSON, reals at full round-trip precision.
# ---------------------------------------------------------------------------


def _params_to_dict(p: GaussianClassParams) -> dict:
    return {"mean": p.mean, "std_dev": p.std_dev, "proportion": p.proportion}


def _params_from_dict(obj, where: str) -> GaussianClassParams:
    if not isinstance(obj, dict):
        raise ModelFormatError(f"{where}: expected an object, got {type(obj).__name__}")
    try:
        return GaussianClassParams(
            mean=float(obj["mean"]),
            std_dev=float(obj["std_dev"]),
            proportion=float(obj["proportion"]),
        )
    except KeyError as e:
        raise ModelFormatError(f"{where}: missing key {e.args[0]!r}")
    except (TypeError, ValueError, InvalidParameterError) as e:
        raise ModelFormatError(f"{where}: {e}")


def serialize_model(model: GsdModel) -> str:
    """Render the model as a versioned JSON document.

    Floats are written with shortest round-trip precision, so
    ``deserialize_model(serialize_model(m))`` reproduces every field
    bit-exactly.
    """
    doc = {
        "schema_version": SCHEMA_VERSION,
        "seed": model.seed,
        "tau": model.tau,
        "em_config": {
            "max_iterations": model.em_config.max_iterations,
            "tolerance": model.em_config.tolerance,
            "variance_floor": model.em_config.variance_floor,
        },
        "feature_names": list(model.feature_names),
        "splits": [
            {
                "feature_index": s.feature_index,
                "alpha": s.alpha,
                "error": s.error,
                "class0": _params_to_dict(s.class0),
                "class1": _params_to_dict(s.class1),
            }
            for s in model.splits
        ],
        "beta": {str(f): v for f, v in sorted(model.beta.items())},
        "calibration": {"fallback_features": list(model.beta_fallback)},
    }
    return json.dumps(doc, indent=2)


def _require_key(obj: dict, key: str, where: str):
    if key not in obj:
        raise ModelFormatError(f"{where}: missing key {key!r}")
    return obj[key]


def deserialize_model(text: str) -> GsdModel:
    """Parse a serialized model; inverse of :func:`serialize_model`.

    Raises ModelFormatError with position info on malformed documents and
    UnsupportedVersionError on unknown schema versions.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelFormatError(
            f"malformed model document: {e.msg} at line {e.lineno} "
            f"column {e.colno} (char {e.pos})"
        )
    if not isinstance(doc, dict):
        raise ModelFormatError("model document root must be an object")

    version = _require_key(doc, "schema_version", "document")
    if version != SCHEMA_VERSION:
        raise UnsupportedVersionError(
            f"unsupported schema version {version!r}, this build reads {SCHEMA_VERSION}"
        )

    em_obj = _require_key(doc, "em_config", "document")
    try:
        em_config = EmConfig(
            max_iterations=int(em_obj["max_iterations"]),
            tolerance=float(em_obj["tolerance"]),
            variance_floor=float(em_obj["variance_floor"]),
        )
    except (KeyError, TypeError, ValueError, InvalidParameterError) as e:
        raise ModelFormatError(f"em_config: {e!r}")

    splits_obj = _require_key(doc, "splits", "document")
    if not isinstance(splits_obj, list) or not splits_obj:
        raise ModelFormatError("splits: expected a non-empty array")
    splits = []
    for i, s in enumerate(splits_obj):
        where = f"splits[{i}]"
        if not isinstance(s, dict):
            raise ModelFormatError(f"{where}: expected an object")
        try:
            splits.append(
                BayesianSplit(
                    feature_index=int(_require_key(s, "feature_index", where)),
                    alpha=float(_require_key(s, "alpha", where)),
                    error=float(_require_key(s, "error", where)),
                    class0=_params_from_dict(s.get("class0"), f"{where}.class0"),
                    class1=_params_from_dict(s.get("class1"), f"{where}.class1"),
                )
            )
        except (TypeError, ValueError) as e:
            raise ModelFormatError(f"{where}: {e}")

    beta_obj = _require_key(doc, "beta", "document")
    if not isinstance(beta_obj, dict):
        raise ModelFormatError("beta: expected an object")
    try:
        beta = {int(k): float(v) for k, v in beta_obj.items()}
    except (TypeError, ValueError) as e:
        raise ModelFormatError(f"beta: {e}")

    calib = doc.get("calibration", {})
    fallback = calib.get("fallback_features", []) if isinstance(calib, dict) else []

    try:
        return GsdModel(
            splits=tuple(splits),
            beta=beta,
            tau=float(_require_key(doc, "tau", "document")),
            em_config=em_config,
            feature_names=tuple(
                str(n) for n in _require_key(doc, "feature_names", "document")
            ),
            seed=int(_require_key(doc, "seed", "document")),
            beta_fallback=tuple(int(f) for f in fallback),
        )
    except (TypeError, ValueError, InvalidParameterError) as e:
        raise ModelFormatError(f"document: {e}")
