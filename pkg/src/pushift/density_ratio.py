"""Least-squares density-ratio fitting (uLSIF) and ratio-threshold classifiers.

The ratio model is ``w(x) = max(0, sum_k theta_k K(x, c_k))`` with Gaussian
kernels centred on numerator patterns.  Given ``H = mean_de[phi phi^T]`` and
``h = mean_nu[phi]`` the coefficients solve ``(H + lambda I) theta = h``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import DimensionError, DomainError, EmptySampleError, NumericalError
from .model import as_patterns, bandwidth_candidates, choose_centers, gaussian_kernel
from .prior_cost import check_open_unit, sign

log = logging.getLogger(__name__)

P_OVER_U = "p_over_u"
U_OVER_P = "u_over_p"
DIRECTIONS = (P_OVER_U, U_OVER_P)

DEFAULT_LAMBDAS = (1e-3, 1e-2, 1e-1, 1.0, 10.0)


@dataclass(frozen=True)
class UlsifGrid:
    """Model-selection grid; ``bandwidths=None`` means the median heuristic."""

    bandwidths: tuple | None = None
    lambdas: tuple = DEFAULT_LAMBDAS
    folds: int = 5
    max_centers: int = 100

    def __post_init__(self):
        if self.bandwidths is not None:
            if len(self.bandwidths) == 0 or any(not s > 0 for s in self.bandwidths):
                raise ValueError("bandwidth candidates must be a non-empty list of positive reals")
            object.__setattr__(self, "bandwidths", tuple(float(s) for s in self.bandwidths))
        if len(self.lambdas) == 0 or any(not l > 0 for l in self.lambdas):
            raise ValueError("regularization candidates must be a non-empty list of positive reals")
        object.__setattr__(self, "lambdas", tuple(float(l) for l in self.lambdas))
        if int(self.folds) < 2:
            raise ValueError("folds must be at least 2")


@dataclass(frozen=True, eq=False)
class RatioModel:
    direction: str
    centers: np.ndarray
    sigma: float
    lam: float
    theta: np.ndarray
    raw_theta: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"unknown ratio direction {self.direction!r}")
        centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        theta = np.asarray(self.theta, dtype=float).ravel()
        if len(theta) != len(centers):
            raise DimensionError(f"{len(theta)} coefficients for {len(centers)} centers")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def input_dim(self) -> int:
        return self.centers.shape[1]

    def to_json(self) -> str:
        return json.dumps(
            {
                "direction": self.direction,
                "centers": self.centers.tolist(),
                "sigma": self.sigma,
                "lambda": self.lam,
                "theta": self.theta.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "RatioModel":
        doc = json.loads(text)
        return cls(doc["direction"], doc["centers"], doc["sigma"], doc["lambda"], doc["theta"])


def _solve(H, h, lam):
    A = H + lam * np.eye(len(H))
    try:
        return linalg.cho_solve(linalg.cho_factor(A), h)
    except linalg.LinAlgError:
        return None


def _design(x, centers, sigma):
    return gaussian_kernel(x, centers, sigma)


def fit_ulsif(numerator, denominator, direction: str = P_OVER_U, grid: UlsifGrid | None = None, seed: int = 0) -> RatioModel:
    """Fit ``p_numerator / p_denominator`` with cross-validated uLSIF."""
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown ratio direction {direction!r}")
    grid = grid or UlsifGrid()
    x_nu = np.asarray(numerator, dtype=float)
    x_de = np.asarray(denominator, dtype=float)
    if x_nu.size == 0 or x_de.size == 0:
        raise EmptySampleError("numerator and denominator samples must be non-empty")
    x_nu, _ = as_patterns(x_nu if x_nu.ndim == 2 else x_nu.reshape(len(x_nu), -1))
    x_de, _ = as_patterns(x_de if x_de.ndim == 2 else x_de.reshape(len(x_de), -1))
    if x_nu.shape[1] != x_de.shape[1]:
        raise DimensionError("numerator and denominator patterns differ in dimensionality")

    rng = np.random.default_rng(seed)
    centers = choose_centers(x_nu, rng, grid.max_centers)
    if grid.bandwidths is None:
        sigmas = bandwidth_candidates(np.vstack([x_nu, x_de]), rng)
    else:
        sigmas = list(grid.bandwidths)
    lambdas = list(grid.lambdas)

    folds = min(int(grid.folds), len(x_nu), len(x_de))
    if len(sigmas) * len(lambdas) == 1 or folds < 2:
        # nothing to select, or too few patterns to hold any out
        sigma, lam = sigmas[len(sigmas) // 2], lambdas[len(lambdas) // 2]
    else:
        sigma, lam = _select(x_nu, x_de, centers, sigmas, lambdas, folds, rng)

    phi_nu = _design(x_nu, centers, sigma)
    phi_de = _design(x_de, centers, sigma)
    H = phi_de.T @ phi_de / len(x_de)
    h = phi_nu.mean(axis=0)
    theta = _solve(H, h, lam)
    if theta is None:
        raise NumericalError(f"ridge system is singular at sigma={sigma:g}, lambda={lam:g}")
    log.debug("uLSIF %s: sigma=%.4g lambda=%.4g", direction, sigma, lam)
    return RatioModel(direction, centers, sigma, lam, np.maximum(theta, 0.0), raw_theta=theta)


def _select(x_nu, x_de, centers, sigmas, lambdas, folds, rng):
    fold_nu = rng.permutation(len(x_nu)) % folds
    fold_de = rng.permutation(len(x_de)) % folds
    best, best_score = None, np.inf
    for sigma in sigmas:
        phi_nu = _design(x_nu, centers, sigma)
        phi_de = _design(x_de, centers, sigma)
        scores = np.zeros(len(lambdas))
        ok = np.ones(len(lambdas), dtype=bool)
        for k in range(folds):
            tr_nu, ho_nu = phi_nu[fold_nu != k], phi_nu[fold_nu == k]
            tr_de, ho_de = phi_de[fold_de != k], phi_de[fold_de == k]
            H_tr = tr_de.T @ tr_de / len(tr_de)
            h_tr = tr_nu.mean(axis=0)
            H_ho = ho_de.T @ ho_de / len(ho_de)
            h_ho = ho_nu.mean(axis=0)
            for j, lam in enumerate(lambdas):
                theta = _solve(H_tr, h_tr, lam)
                if theta is None:
                    ok[j] = False
                    continue
                theta = np.maximum(theta, 0.0)
                scores[j] += 0.5 * theta @ H_ho @ theta - h_ho @ theta
        for j, lam in enumerate(lambdas):
            if ok[j] and scores[j] / folds < best_score:
                best, best_score = (sigma, lam), scores[j] / folds
    if best is None:
        raise NumericalError("ridge system is singular for every (sigma, lambda) candidate")
    return best


def ratio_at(model: RatioModel, x, upper: float | None = None):
    """Estimated ratio at ``x``; clipped below at 0 and, if given, above at ``upper``."""
    arr, single = as_patterns(x, model.input_dim)
    w = np.maximum(_design(arr, model.centers, model.sigma) @ model.theta, 0.0)
    if upper is not None:
        w = np.minimum(w, upper)
    return float(w[0]) if single else w


def dr_classify(model: RatioModel, train_prior: float, alpha_unif: float, x, clip: bool = True):
    """Threshold the estimated ratio into +1/-1 labels for cost ``alpha_unif``.

    ``p_over_u`` uses sign(pi*w - alpha); ``u_over_p`` uses sign(pi/alpha - w).
    With ``clip`` the ``p_over_u`` estimate is capped at 1/pi first.
    """
    pi = check_open_unit(train_prior, "train_prior")
    a = check_open_unit(alpha_unif, "alpha_unif")
    if model.direction == P_OVER_U:
        w = ratio_at(model, x, upper=1.0 / pi if clip else None)
        return sign(pi * w - a)
    w = ratio_at(model, x)
    return sign(pi / a - w)


@dataclass
class RatioBoundReport:
    direction: str
    bound: float
    n_points: int
    n_violations: int
    clipped: np.ndarray | None = None

    @property
    def violation_fraction(self) -> float:
        return self.n_violations / self.n_points if self.n_points else 0.0


def ratio_bound_violations(values, direction, train_prior, tolerance=0.0, clip=False) -> RatioBoundReport:
    """Count ratio values outside the range a true PU ratio can take.

    p_p/p_u never exceeds 1/pi; p_u/p_p is never below pi.
    """
    pi = check_open_unit(train_prior, "train_prior")
    w = np.atleast_1d(np.asarray(values, dtype=float))
    if direction == P_OVER_U:
        bound = 1.0 / pi
        bad = w > bound + tolerance
        clipped = np.clip(w, 0.0, bound) if clip else None
    elif direction == U_OVER_P:
        bound = pi
        bad = w < bound - tolerance
        clipped = None
    else:
        raise ValueError(f"unknown ratio direction {direction!r}")
    return RatioBoundReport(direction, bound, len(w), int(np.count_nonzero(bad)), clipped)


def check_ratio_bounds(model: RatioModel, train_prior, points, tolerance=0.0, clip=False) -> RatioBoundReport:
    arr, _ = as_patterns(points, model.input_dim)
    return ratio_bound_violations(ratio_at(model, arr), model.direction, train_prior, tolerance, clip)


def shift_ratio_transform(u_over_p_value, train_prior, gamma):
    """Map p_u/p_p to p_t/p_p for a test prior ``train_prior + gamma``."""
    pi = check_open_unit(train_prior, "train_prior")
    gamma = float(gamma)
    if not (-pi < gamma < 1.0 - pi):
        raise DomainError(f"gamma must lie in ({-pi}, {1 - pi}), got {gamma}")
    k = gamma / (1.0 - pi)
    out = k + (1.0 - k) * np.asarray(u_over_p_value, dtype=float)
    return float(out) if out.ndim == 0 else out
