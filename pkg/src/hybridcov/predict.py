"""Simple kriging, Gaussian predictive scores, leave-one-out cross-validation.

Kriging is simple (known zero mean), matching the centered-field model: the
predictor at target t is c_t' S^{-1} z with variance phi(0) - c_t' S^{-1} c_t.
Computed variances are clamped to [0, phi(0)]; the raw values are kept on
the result for inspection.

Scores per point, for a Gaussian predictive N(m, s^2) and actual value y
with standardized error z = (y - m)/s:

    se     = (y - m)^2
    ae     = |y - m|
    lscore = 0.5 log(2 pi s^2) + (y - m)^2 / (2 s^2)
    crps   = s * [ z (2 Phi(z) - 1) + 2 phi(z) - 1/sqrt(pi) ]

Leave-one-out refactorizes each fold's covariance submatrix rather than
downdating, favoring numerical transparency over speed; folds are
independent and aggregation is a plain mean in index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist

from .exceptions import FactorizationError
from .kernels import KernelSpec, evaluate, value_at_zero
from .randfield import DEFAULT_JITTER_LADDER, FieldSample, Locations, covariance_matrix

__all__ = [
    "PredictionSet",
    "CVScores",
    "PointScores",
    "simple_krige",
    "gaussian_scores",
    "loo_cv",
    "write_prediction_csv",
]


@dataclass(frozen=True)
class PredictionSet:
    """Per-target kriging mean and (clamped) variance; raw variances kept."""

    targets: Locations
    means: np.ndarray
    variances: np.ndarray
    raw_variances: np.ndarray

    def __post_init__(self):
        n = len(self.targets)
        for name in ("means", "variances", "raw_variances"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
            object.__setattr__(self, name, arr)
        if np.any(self.variances < 0):
            raise ValueError("clamped variances must be nonnegative")


@dataclass(frozen=True)
class CVScores:
    """Mean scores over a leave-one-out pass; small is better for all four."""

    mse: float
    mae: float
    lscore: float
    crps: float
    n: int

    def __post_init__(self):
        for name in ("mse", "mae", "lscore", "crps"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.mse < 0 or self.mae < 0:
            raise ValueError("mse and mae must be nonnegative")


class PointScores(NamedTuple):
    se: float
    ae: float
    lscore: float
    crps: float


def _chol_with_ladder(sigma: np.ndarray, phi0: float, ladder):
    last_exc = None
    for j in ladder:
        try:
            mat = sigma if j == 0.0 else sigma + (j * phi0) * np.eye(sigma.shape[0])
            return cho_factor(mat, lower=True), j
        except np.linalg.LinAlgError as exc:
            last_exc = exc
    eigs = np.linalg.eigvalsh(sigma)
    cond = float(abs(eigs[-1]) / abs(eigs[0])) if eigs[0] != 0 else math.inf
    raise FactorizationError(
        f"kriging system not factorizable: {last_exc}", tuple(ladder), cond
    )


def simple_krige(
    spec: KernelSpec,
    sample: FieldSample,
    targets: Locations,
    jitter_ladder=DEFAULT_JITTER_LADDER,
) -> PredictionSet:
    """Simple kriging of the sample onto the targets.

    Exact interpolator: at an observed site the mean reproduces the
    observation and the variance vanishes (up to factorization jitter).
    """
    if targets.dim != sample.locations.dim:
        raise ValueError(
            f"targets have dimension {targets.dim}, sample has {sample.locations.dim}"
        )
    sigma = covariance_matrix(spec, sample.locations)
    phi0 = float(sigma[0, 0])
    factor, _ = _chol_with_ladder(sigma, phi0, jitter_ladder)
    cross = np.asarray(
        evaluate(spec, cdist(sample.locations.points, targets.points)), dtype=float
    )
    alpha = cho_solve(factor, sample.values)
    means = cross.T @ alpha
    v = cho_solve(factor, cross)
    raw_var = phi0 - np.sum(cross * v, axis=0)
    variances = np.clip(raw_var, 0.0, phi0)
    return PredictionSet(
        targets=targets, means=means, variances=variances, raw_variances=raw_var
    )


_INV_SQRT_PI = 1.0 / math.sqrt(math.pi)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gaussian_scores(mean: float, variance: float, actual: float) -> PointScores:
    """Squared error, absolute error, log score, and CRPS for one prediction."""
    if not variance > 0:
        raise ValueError(f"variance must be positive, got {variance}")
    err = actual - mean
    sd = math.sqrt(variance)
    z = err / sd
    phi = _INV_SQRT_2PI * math.exp(-0.5 * z * z)
    big_phi = 0.5 * math.erfc(-z / math.sqrt(2.0))
    crps = sd * (z * (2.0 * big_phi - 1.0) + 2.0 * phi - _INV_SQRT_PI)
    return PointScores(
        se=err * err,
        ae=abs(err),
        lscore=0.5 * math.log(2.0 * math.pi * variance) + err * err / (2.0 * variance),
        crps=crps,
    )


def loo_cv(
    spec: KernelSpec,
    sample: FieldSample,
    jitter_ladder=DEFAULT_JITTER_LADDER,
    variance_floor: float = 1e-12,
) -> CVScores:
    """Leave-one-out cross-validation scores under simple kriging.

    The full covariance matrix is assembled once; each fold factorizes the
    submatrix that leaves its site out.  A failing fold aborts with the fold
    index.  Results are invariant to permutations of the sample.
    """
    n = len(sample)
    if n < 3:
        raise ValueError(f"leave-one-out needs at least 3 points, got {n}")
    sigma = covariance_matrix(spec, sample.locations)
    phi0 = float(sigma[0, 0])
    z = sample.values
    floor = variance_floor * phi0
    se = np.empty(n)
    ae = np.empty(n)
    ls = np.empty(n)
    cr = np.empty(n)
    idx = np.arange(n)
    for i in range(n):
        keep = idx != i
        sub = sigma[np.ix_(keep, keep)]
        c = sigma[keep, i]
        try:
            factor, _ = _chol_with_ladder(sub, phi0, jitter_ladder)
        except FactorizationError as exc:
            raise FactorizationError(
                f"fold {i} failed: {exc}", exc.jitter_tried, exc.condition_estimate
            ) from exc
        w = cho_solve(factor, c)
        mean = float(w @ z[keep])
        var = float(np.clip(phi0 - w @ c, floor, phi0))
        s = gaussian_scores(mean, var, float(z[i]))
        se[i], ae[i], ls[i], cr[i] = s
    return CVScores(
        mse=float(np.mean(se)),
        mae=float(np.mean(ae)),
        lscore=float(np.mean(ls)),
        crps=float(np.mean(cr)),
        n=n,
    )


def write_prediction_csv(pred: PredictionSet, path) -> None:
    """CSV with header x1,...,x_d,mean,variance (full-precision round trip)."""
    dim = pred.targets.dim
    header = ",".join([f"x{k + 1}" for k in range(dim)] + ["mean", "variance"])
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row, m, v in zip(pred.targets.points, pred.means, pred.variances):
            fh.write(
                ",".join(repr(float(x)) for x in row)
                + ","
                + repr(float(m))
                + ","
                + repr(float(v))
                + "\n"
            )
