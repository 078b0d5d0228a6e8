"""Spatial locations, covariance matrices, and exact Gaussian field simulation.

Randomness policy
-----------------
Every random quantity comes from a Philox counter-based generator keyed as
``Philox(key=[seed, stream])`` so streams can be split without coupling:

* location sampling uses ``stream = LOCATION_STREAM``;
* replicate ``r`` of a simulation uses ``stream = r``;
* multi-start jitter in the fitting code uses ``stream = FIT_START_STREAM``.

Normal variates are produced by inverse-CDF transform of 53-bit uniforms,
so simulated fields are bit-reproducible across runs and platforms and
independent of any parallel schedule.

Simulation is exact: Cholesky factorization of the covariance matrix, with
a ladder of diagonal jitters (relative to phi(0)) climbed only as far as
factorization requires.  Jitter is a numerical device, not a model term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox
from scipy.spatial.distance import pdist, squareform
from scipy.special import ndtri

from .exceptions import FactorizationError
from .kernels import KernelSpec, evaluate, value_at_zero

__all__ = [
    "LOCATION_STREAM",
    "FIT_START_STREAM",
    "Locations",
    "FieldSample",
    "SimulationConfig",
    "SimulationResult",
    "substream",
    "standard_normals",
    "sample_uniform_locations",
    "covariance_matrix",
    "cholesky_with_jitter",
    "simulate",
    "write_sample_csv",
    "read_sample_csv",
    "DEFAULT_JITTER_LADDER",
]

LOCATION_STREAM = 1 << 63
FIT_START_STREAM = (1 << 63) + 1

DEFAULT_JITTER_LADDER = (0.0, 1e-10, 1e-8, 1e-6)


def substream(seed: int, stream: int) -> Generator:
    """Independent generator for (seed, stream); the key IS the split."""
    return Generator(Philox(key=[int(seed), int(stream)]))


def _uniforms_open(gen: Generator, n: int) -> np.ndarray:
    """Uniforms strictly inside (0, 1) with 53-bit resolution."""
    return (gen.integers(0, 1 << 53, size=n).astype(np.float64) + 0.5) / float(1 << 53)


def standard_normals(gen: Generator, n: int) -> np.ndarray:
    """Standard normals by inverse CDF, for cross-run determinism."""
    return ndtri(_uniforms_open(gen, n))


@dataclass(frozen=True)
class Locations:
    """An ordered set of points in R^dim; points has shape (n, dim)."""

    dim: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise ValueError(f"points must have shape (n, {self.dim}), got {pts.shape}")
        if pts.shape[0] == 0:
            raise ValueError("locations must be nonempty")
        if not np.all(np.isfinite(pts)):
            raise ValueError("locations must be finite")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class FieldSample:
    """Locations plus one real observation per location."""

    locations: Locations
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.shape[0] != len(self.locations):
            raise ValueError(
                f"values must be a vector of length {len(self.locations)}, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SimulationConfig:
    seed: int
    n_replicates: int = 1
    jitter_ladder: tuple = DEFAULT_JITTER_LADDER

    def __post_init__(self):
        if self.n_replicates < 1:
            raise ValueError("n_replicates must be >= 1")
        ladder = tuple(self.jitter_ladder)
        if len(ladder) == 0 or ladder[0] != 0.0 or any(
            b <= a for a, b in zip(ladder, ladder[1:])
        ):
            raise ValueError("jitter ladder must be strictly increasing and start at 0")
        object.__setattr__(self, "jitter_ladder", ladder)


@dataclass(frozen=True)
class SimulationResult:
    """Replicates plus the factorization metadata needed to reproduce them."""

    samples: list
    jitter: float
    phi0: float

    def __iter__(self):
        return iter(self.samples)

    def __len__(self):
        return len(self.samples)


def sample_uniform_locations(n: int, lo, hi, seed: int) -> Locations:
    """n points with coordinate k uniform in [lo_k, hi_k], deterministic in seed."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape:
        raise ValueError(f"lo and hi must have the same dimension, got {lo.shape} vs {hi.shape}")
    if not np.all(lo < hi):
        raise ValueError("need lo < hi componentwise")
    if n < 1:
        raise ValueError("n must be >= 1")
    dim = lo.shape[0]
    gen = substream(seed, LOCATION_STREAM)
    u = _uniforms_open(gen, n * dim).reshape(n, dim)
    return Locations(dim=dim, points=lo + (hi - lo) * u)


def covariance_matrix(spec: KernelSpec, loc: Locations) -> np.ndarray:
    """Covariance matrix over the locations; symmetric by construction.

    The strict upper triangle is evaluated once on the condensed distance
    vector and mirrored, so the result is bitwise symmetric; the diagonal
    is the exact zero-lag value.
    """
    if spec.family == "hybrid_hm" and spec.dim != loc.dim:
        raise ValueError(
            f"hole-effect kernel is declared for dimension {spec.dim}, locations have {loc.dim}"
        )
    n = len(loc)
    phi0 = value_at_zero(spec)
    if n == 1:
        return np.array([[phi0]])
    condensed = pdist(loc.points)
    vals = np.asarray(evaluate(spec, condensed), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("kernel produced nonfinite covariance values")
    mat = squareform(vals)
    np.fill_diagonal(mat, phi0)
    return mat


def cholesky_with_jitter(sigma: np.ndarray, phi0: float, ladder=DEFAULT_JITTER_LADDER):
    """Lower Cholesky factor of sigma + j*phi0*I for the smallest workable j.

    Returns (L, jitter_used).  Raises ``FactorizationError`` carrying the
    ladder and a condition estimate when every level fails.
    """
    n = sigma.shape[0]
    for j in ladder:
        try:
            if j == 0.0:
                L = np.linalg.cholesky(sigma)
            else:
                L = np.linalg.cholesky(sigma + (j * phi0) * np.eye(n))
            return L, j
        except np.linalg.LinAlgError:
            continue
    eigs = np.linalg.eigvalsh(sigma)
    cond = float(abs(eigs[-1]) / abs(eigs[0])) if eigs[0] != 0 else math.inf
    raise FactorizationError(
        "covariance matrix is not positive definite within the jitter ladder",
        tuple(ladder),
        cond,
    )


def simulate(spec: KernelSpec, loc: Locations, config: SimulationConfig) -> SimulationResult:
    """Exact Gaussian simulation: replicate r is L @ eps_r with eps_r from
    the (seed, r) substream.  Deterministic per (seed, replicate index)."""
    sigma = covariance_matrix(spec, loc)
    phi0 = float(sigma[0, 0])
    L, jitter = cholesky_with_jitter(sigma, phi0, config.jitter_ladder)
    n = len(loc)
    samples = []
    for r in range(config.n_replicates):
        eps = standard_normals(substream(config.seed, r), n)
        samples.append(FieldSample(locations=loc, values=L @ eps))
    return SimulationResult(samples=samples, jitter=jitter, phi0=phi0)


# ---------------------------------------------------------------------------
# CSV interchange: header x1,...,x_d,value; full-precision round trip.
# ---------------------------------------------------------------------------


def write_sample_csv(sample: FieldSample, path) -> None:
    dim = sample.locations.dim
    header = ",".join([f"x{k + 1}" for k in range(dim)] + ["value"])
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row, val in zip(sample.locations.points, sample.values):
            fh.write(",".join(repr(float(v)) for v in row) + "," + repr(float(val)) + "\n")


def read_sample_csv(path) -> FieldSample:
    with open(path, "r") as fh:
        header = fh.readline().strip()
        cols = header.split(",")
        if cols[-1] != "value" or any(c != f"x{k + 1}" for k, c in enumerate(cols[:-1])):
            raise ValueError(
                f"expected header x1,...,x_d,value in {path}, got {header!r}"
            )
        dim = len(cols) - 1
        pts, vals = [], []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != dim + 1:
                raise ValueError(f"row with {len(parts)} fields, expected {dim + 1}: {line!r}")
            pts.append([float(x) for x in parts[:dim]])
            vals.append(float(parts[dim]))
    return FieldSample(
        locations=Locations(dim=dim, points=np.asarray(pts)), values=np.asarray(vals)
    )
