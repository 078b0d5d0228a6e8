"""Gaussian likelihood, maximum-likelihood fitting, standard errors, AIC.

The model is the centered Gaussian field: for observations z at n sites with
covariance matrix S built from a kernel,

    nll = 0.5 * (n log 2pi + log det S + z' S^{-1} z),

evaluated through the Cholesky factor.  Fitting runs Nelder-Mead over the
logarithms of the free parameters (every free parameter in scope is
positive), with a small number of jittered restarts; the split point of the
parsimonious hybrid Cauchy-Matern family is always optimized through
xi_tilde = sqrt(xi) * alpha, never through xi directly.

Failed factorizations inside the optimizer yield a large penalty value
(1e12 plus a condition diagnostic) instead of raising, so the simplex can
retreat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize
from scipy.linalg import solve_triangular
from scipy.spatial.distance import pdist, squareform

from .exceptions import FactorizationError
from .kernels import (
    CauchyParams,
    GenCauchyParams,
    KernelSpec,
    MaternParams,
    ParsimoniousCM,
    evaluate,
    value_at_zero,
)
from .randfield import DEFAULT_JITTER_LADDER, FIT_START_STREAM, FieldSample, substream

__all__ = [
    "ParamMask",
    "FitResult",
    "FitOptions",
    "FIT_FAMILIES",
    "build_fit_spec",
    "neg_log_likelihood",
    "fit_mle",
    "std_errors",
    "central_difference_hessian",
    "aic",
    "PENALTY_NLL",
]

PENALTY_NLL = 1e12


@dataclass(frozen=True)
class ParamMask:
    """Which parameters are optimized (free) and which are pinned (fixed)."""

    free: tuple
    fixed: dict

    def __post_init__(self):
        object.__setattr__(self, "free", tuple(self.free))
        object.__setattr__(self, "fixed", dict(self.fixed))
        overlap = set(self.free) & set(self.fixed)
        if overlap:
            raise ValueError(f"parameters cannot be both free and fixed: {sorted(overlap)}")

    def validate_for(self, family: str) -> None:
        names = FIT_FAMILIES[family]
        declared = set(self.free) | set(self.fixed)
        if declared != set(names):
            raise ValueError(
                f"mask must cover exactly {list(names)} for family {family!r}, "
                f"got {sorted(declared)}"
            )


@dataclass(frozen=True)
class FitResult:
    estimates: dict
    loglik: float
    aic: float
    n_iterations: int
    converged: bool
    final_simplex_size: float
    family: str
    mask: ParamMask
    jitter_used: float
    std_errors: dict | None = None

    def __post_init__(self):
        k = len(self.mask.free)
        expected = 2.0 * k - 2.0 * self.loglik
        if abs(self.aic - expected) > 1e-12 * max(1.0, abs(expected)):
            raise ValueError(f"aic={self.aic} inconsistent with 2k - 2 loglik = {expected}")


@dataclass(frozen=True)
class FitOptions:
    n_starts: int = 3
    max_iterations: int = 2000
    simplex_tol: float = 1e-8
    seed: int = 0
    jitter_ladder: tuple = DEFAULT_JITTER_LADDER
    compute_std_errors: bool = True


# Fit-template parameter names, in optimizer order.  The hybrid CM family is
# fitted in its five-parameter parsimonious form.
FIT_FAMILIES = {
    "matern": ("omega", "alpha", "nu"),
    "cauchy": ("omega", "alpha", "nu"),
    "gencauchy": ("omega", "alpha", "nu", "delta"),
    "hybrid_cm": ("omega", "alpha", "nu1", "nu2", "xi_tilde"),
}


def build_fit_spec(family: str, params: dict, dim: int = 2) -> KernelSpec:
    """KernelSpec from a flat name->value map in a fit family's parameterization."""
    if family == "matern":
        p = MaternParams(alpha=params["alpha"], nu=params["nu"], omega=params["omega"])
    elif family == "cauchy":
        p = CauchyParams(alpha=params["alpha"], nu=params["nu"], omega=params["omega"])
    elif family == "gencauchy":
        p = GenCauchyParams(
            alpha=params["alpha"],
            nu=params["nu"],
            delta=params["delta"],
            omega=params["omega"],
        )
    elif family == "hybrid_cm":
        p = ParsimoniousCM(
            omega=params["omega"],
            alpha=params["alpha"],
            nu1=params["nu1"],
            nu2=params["nu2"],
            xi_tilde=params["xi_tilde"],
        )
    else:
        raise ValueError(f"family {family!r} is not fittable; known: {sorted(FIT_FAMILIES)}")
    return KernelSpec(family=family, params=p, dim=dim)


class _NllEvaluator:
    """Caches the distance structure of a sample across likelihood calls."""

    def __init__(self, sample: FieldSample, jitter_ladder=DEFAULT_JITTER_LADDER):
        self.z = sample.values
        self.n = len(sample)
        self.dim = sample.locations.dim
        self.condensed = pdist(sample.locations.points) if self.n > 1 else np.empty(0)
        self.ladder = tuple(jitter_ladder)

    def detail(self, spec: KernelSpec):
        """Returns (nll, jitter, penalized: bool)."""
        phi0 = value_at_zero(spec)
        if self.n == 1:
            sigma = np.array([[phi0]])
        else:
            vals = np.asarray(evaluate(spec, self.condensed), dtype=float)
            if not np.all(np.isfinite(vals)):
                return PENALTY_NLL, math.nan, True
            sigma = squareform(vals)
            np.fill_diagonal(sigma, phi0)
        n = self.n
        for j in self.ladder:
            try:
                L = np.linalg.cholesky(sigma if j == 0.0 else sigma + (j * phi0) * np.eye(n))
            except np.linalg.LinAlgError:
                continue
            w = solve_triangular(L, self.z, lower=True)
            quad_form = float(w @ w)
            logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
            nll = 0.5 * (n * math.log(2.0 * math.pi) + logdet + quad_form)
            return nll, j, False
        # diagnostic: how far from factorizable the matrix is
        eigs = np.linalg.eigvalsh(sigma)
        cond = abs(eigs[-1]) / abs(eigs[0]) if eigs[0] != 0 else math.inf
        diag = math.log10(cond) if math.isfinite(cond) else 400.0
        return PENALTY_NLL + diag, math.nan, True


def neg_log_likelihood(family: str, params: dict, sample: FieldSample) -> float:
    """Negative log likelihood of the centered Gaussian model at ``params``.

    Returns the penalty value (>= 1e12) when the covariance matrix cannot be
    factorized within the jitter ladder.
    """
    spec = build_fit_spec(family, params, dim=sample.locations.dim)
    nll, _, _ = _NllEvaluator(sample).detail(spec)
    return nll


def _masked_params(mask: ParamMask, free_values: np.ndarray) -> dict:
    params = dict(mask.fixed)
    params.update(zip(mask.free, free_values))
    return params


def fit_mle(
    family: str,
    mask: ParamMask,
    sample: FieldSample,
    init: dict,
    options: FitOptions | None = None,
) -> FitResult:
    """Maximum-likelihood fit by Nelder-Mead on log-transformed free parameters.

    ``init`` supplies strictly positive starting values for the free
    parameters.  ``options.n_starts`` jittered restarts (factors in
    [0.5, 1.5], drawn from the (seed, FIT_START_STREAM) substream) guard
    against the flat ridge in the split-point direction; the best optimum
    (ties broken by lowest start index) wins.  ``converged`` reports whether
    the final simplex diameter fell below ``simplex_tol`` in log space.
    """
    opts = options or FitOptions()
    mask.validate_for(family)
    for name in mask.free:
        if name not in init or not init[name] > 0:
            raise ValueError(f"init must give a positive value for free parameter {name!r}")
    for name, value in mask.fixed.items():
        if not value > 0:
            raise ValueError(f"fixed parameter {name!r} must be positive, got {value}")

    evaluator = _NllEvaluator(sample, opts.jitter_ladder)
    dim = sample.locations.dim

    def objective(x_log: np.ndarray) -> float:
        params = _masked_params(mask, np.exp(x_log))
        try:
            spec = build_fit_spec(family, params, dim=dim)
        except ValueError:
            return PENALTY_NLL
        return evaluator.detail(spec)[0]

    x0 = np.log([init[name] for name in mask.free])
    jitter_gen = substream(opts.seed, FIT_START_STREAM)
    starts = [x0]
    for _ in range(1, opts.n_starts):
        factors = 0.5 + jitter_gen.random(len(x0))
        starts.append(x0 + np.log(factors))

    best = None
    for idx, start in enumerate(starts):
        res = optimize.minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={
                "maxiter": opts.max_iterations,
                "xatol": opts.simplex_tol,
                "fatol": 1e-12,
                "disp": False,
            },
        )
        if best is None or res.fun < best[1].fun:
            best = (idx, res)

    _, res = best
    vertices = res.final_simplex[0]
    diameter = float(np.max(np.abs(vertices[1:] - vertices[0])))
    converged = diameter < opts.simplex_tol
    estimates = _masked_params(mask, np.exp(res.x))
    spec = build_fit_spec(family, estimates, dim=dim)
    nll, jitter_used, penalized = evaluator.detail(spec)
    loglik = -nll
    k = len(mask.free)
    result = FitResult(
        estimates=estimates,
        loglik=loglik,
        aic=2.0 * k - 2.0 * loglik,
        n_iterations=int(res.nit),
        converged=bool(converged and not penalized),
        final_simplex_size=diameter,
        family=family,
        mask=mask,
        jitter_used=jitter_used,
        std_errors=None,
    )
    if opts.compute_std_errors and result.converged:
        try:
            ses = std_errors(family, result, sample, jitter_ladder=opts.jitter_ladder)
        except (ValueError, FactorizationError):
            ses = None
        result = replace(result, std_errors=ses)
    return result


def central_difference_hessian(f, x: np.ndarray, step: float) -> np.ndarray:
    """Symmetric Hessian estimate of f at x by second-order central differences."""
    k = len(x)
    hess = np.empty((k, k))
    f0 = f(x)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = step
        hess[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / step**2
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = step
            hess[i, j] = hess[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * step**2)
    return hess


def std_errors(
    family: str,
    fit: FitResult,
    sample: FieldSample,
    step: float = 1e-4,
    jitter_ladder=DEFAULT_JITTER_LADDER,
) -> dict | None:
    """Delta-method standard errors from a central-difference Hessian.

    The Hessian of the negative log likelihood is taken in log-parameter
    space (step 1e-4, which is a relative step for the original scale) and
    inverted; since theta = exp(log theta), the delta method multiplies the
    log-space standard deviations by the estimates.  Returns None with no
    exception when the Hessian is not positive definite.
    """
    if not fit.converged:
        raise ValueError("standard errors require a converged fit")
    mask = fit.mask
    evaluator = _NllEvaluator(sample, jitter_ladder)
    dim = sample.locations.dim

    def f(x_log: np.ndarray) -> float:
        params = _masked_params(mask, np.exp(x_log))
        spec = build_fit_spec(family, params, dim=dim)
        return evaluator.detail(spec)[0]

    x_hat = np.log([fit.estimates[name] for name in mask.free])
    hess = central_difference_hessian(f, x_hat, step)
    try:
        np.linalg.cholesky(hess)
    except np.linalg.LinAlgError:
        return None
    cov_log = np.linalg.inv(hess)
    theta = np.exp(x_hat)
    return {
        name: float(theta[i] * math.sqrt(cov_log[i, i])) for i, name in enumerate(mask.free)
    }


def aic(fit: FitResult) -> float:
    """Akaike information criterion, 2k - 2 loglik with k free parameters."""
    return 2.0 * len(fit.mask.free) - 2.0 * fit.loglik
