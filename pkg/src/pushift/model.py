"""Linear-in-parameter decision functions ``g(x) = w . phi(x)``.

Two feature maps are supported: the raw input with a trailing bias, and a
Gaussian kernel basis over fixed centers, also with a trailing bias.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .errors import DimensionError
from .prior_cost import sign

RAW = "raw_with_bias"
GAUSSIAN = "gaussian_kernel"

MAX_CENTERS = 100
BANDWIDTH_FACTORS = (1 / 8, 1 / 4, 1 / 2, 1.0, 2.0, 4.0, 8.0)


def as_patterns(x, dim=None):
    """Coerce ``x`` to a 2-D float array, returning ``(array, was_single)``.

    A 1-D input is one pattern when its length equals ``dim`` (or ``dim`` is
    unknown); for ``dim == 1`` it is read as a batch of scalars.
    """
    arr = np.asarray(x, dtype=float)
    single = False
    if arr.ndim == 0:
        arr, single = arr.reshape(1, 1), True
    elif arr.ndim == 1:
        if dim == 1 and arr.shape[0] != 1:
            arr = arr.reshape(-1, 1)
        else:
            arr, single = arr.reshape(1, -1), True
    elif arr.ndim != 2:
        raise DimensionError(f"patterns must be 1-D or 2-D, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionError(f"expected {dim}-dimensional patterns, got {arr.shape[1]}")
    return arr, single


def gaussian_kernel(x, centers, bandwidth):
    """Matrix of exp(-|x_i - c_k|^2 / (2 sigma^2)) of shape (n, b)."""
    sq = cdist(np.asarray(x, dtype=float), np.asarray(centers, dtype=float), "sqeuclidean")
    return np.exp(-sq / (2.0 * bandwidth * bandwidth))


@dataclass(frozen=True, eq=False)
class FeatureMap:
    kind: str
    input_dim: int
    centers: np.ndarray | None = None
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind not in (RAW, GAUSSIAN):
            raise ValueError(f"unknown feature map kind {self.kind!r}")
        if self.kind == GAUSSIAN:
            centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
            if centers.shape[1] != self.input_dim or len(centers) == 0:
                raise DimensionError("kernel centers must be a non-empty (b, d) array")
            if self.bandwidth is None or not self.bandwidth > 0:
                raise ValueError("bandwidth must be positive")
            centers.setflags(write=False)
            object.__setattr__(self, "centers", centers)
            object.__setattr__(self, "bandwidth", float(self.bandwidth))

    @classmethod
    def raw(cls, input_dim: int) -> "FeatureMap":
        return cls(RAW, int(input_dim))

    @classmethod
    def gaussian(cls, centers, bandwidth: float) -> "FeatureMap":
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        return cls(GAUSSIAN, centers.shape[1], centers, bandwidth)

    @property
    def dim(self) -> int:
        if self.kind == RAW:
            return self.input_dim + 1
        return len(self.centers) + 1

    def transform(self, x) -> np.ndarray:
        """Feature matrix (n, dim) for a batch of patterns."""
        arr, _ = as_patterns(x, self.input_dim)
        if self.kind == RAW:
            basis = arr
        else:
            basis = gaussian_kernel(arr, self.centers, self.bandwidth)
        return np.hstack([basis, np.ones((len(arr), 1))])


def featurize(feature_map: FeatureMap, x) -> np.ndarray:
    arr, single = as_patterns(x, feature_map.input_dim)
    phi = feature_map.transform(arr)
    return phi[0] if single else phi


@dataclass(frozen=True, eq=False)
class LinearModel:
    feature_map: FeatureMap
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        w = np.zeros(self.feature_map.dim) if self.weights is None else np.array(self.weights, dtype=float)
        if w.shape != (self.feature_map.dim,):
            raise DimensionError(
                f"weight vector has shape {w.shape}, feature dimension is {self.feature_map.dim}"
            )
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def with_weights(self, weights) -> "LinearModel":
        return LinearModel(self.feature_map, weights)

    def to_json(self) -> str:
        fm = self.feature_map
        doc = {
            "kind": fm.kind,
            "input_dim": fm.input_dim,
            "centers": None if fm.centers is None else fm.centers.tolist(),
            "bandwidth": fm.bandwidth,
            "weights": self.weights.tolist(),
        }
        # repr of a Python float round-trips exactly (17 significant digits at most)
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "LinearModel":
        doc = json.loads(text)
        if doc["kind"] == RAW:
            fm = FeatureMap.raw(doc.get("input_dim", len(doc["weights"]) - 1))
        else:
            fm = FeatureMap.gaussian(doc["centers"], doc["bandwidth"])
        return cls(fm, doc["weights"])


def predict_score(model: LinearModel, x):
    arr, single = as_patterns(x, model.feature_map.input_dim)
    scores = model.feature_map.transform(arr) @ model.weights
    return float(scores[0]) if single else scores


def predict_label(model: LinearModel, x):
    return sign(predict_score(model, x))


def median_distance(x, rng: np.random.Generator, max_points: int = 500) -> float:
    """Median pairwise Euclidean distance on a random subsample of ``x``."""
    x = np.asarray(x, dtype=float)
    if len(x) > max_points:
        x = x[rng.choice(len(x), max_points, replace=False)]
    dist = pdist(x)
    med = float(np.median(dist)) if dist.size else 0.0
    return med if med > 0 else 1.0


def bandwidth_candidates(x, rng: np.random.Generator):
    med = median_distance(x, rng)
    return [med * f for f in BANDWIDTH_FACTORS]


def choose_centers(x, rng: np.random.Generator, max_centers: int = MAX_CENTERS) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    b = min(max_centers, len(x))
    return x[rng.choice(len(x), b, replace=False)]
