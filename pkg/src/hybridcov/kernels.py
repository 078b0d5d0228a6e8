"""Parametric isotropic covariance families.

Implements the Matern, Cauchy and Generalized Cauchy models, their scale
mixing densities, and the two hybrid families built by gluing mixing
densities piecewise on [0, xi1) and [xi2, inf):

* hybrid Cauchy-Matern: Cauchy-type polynomial decay at large distances,
  Matern-type behaviour (and mean-square differentiability) at the origin;
* hybrid Hole-Effect-Matern: Matern-type origin behaviour with a kernel in
  the first mixture segment that lets the covariance dip below zero, valid
  in R^d if and only if 1 < eta < tau^(2/d).

All evaluators accept a scalar or ndarray of distances h >= 0 and return
covariance values (divide by the value at h = 0 to get correlations).
Parameter containers are frozen dataclasses validated on construction;
evaluation is pure and safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .exceptions import ValidityError
from .specfun import reg_gen_inc_gamma, reg_lower_gamma, reg_upper_gamma

__all__ = [
    "MaternParams",
    "CauchyParams",
    "GenCauchyParams",
    "HybridCMParams",
    "HybridHMParams",
    "ParsimoniousCM",
    "KernelSpec",
    "FAMILIES",
    "matern",
    "cauchy",
    "gen_cauchy",
    "mixing_cauchy",
    "mixing_matern",
    "hybrid_cm",
    "hybrid_hm",
    "hm_validity",
    "hm_lower_bound",
    "expand_parsimonious",
    "contract_parsimonious",
    "evaluate",
    "value_at_zero",
    "log_evaluate",
    "tail_exponent",
    "spec_to_dict",
    "spec_from_dict",
]


def _require_positive(**fields):
    for name, value in fields.items():
        if not value > 0:
            raise ValueError(f"{name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class MaternParams:
    """Matern family: scale alpha, smoothness nu, variance multiplier omega."""

    alpha: float
    nu: float
    omega: float = 1.0

    def __post_init__(self):
        _require_positive(alpha=self.alpha, nu=self.nu, omega=self.omega)


@dataclass(frozen=True)
class CauchyParams:
    """Cauchy family: squared-scale alpha, tail exponent nu, multiplier omega."""

    alpha: float
    nu: float
    omega: float = 1.0

    def __post_init__(self):
        _require_positive(alpha=self.alpha, nu=self.nu, omega=self.omega)

    @property
    def hurst(self) -> float:
        """Hurst parameter H = 1 - nu/2, meaningful for nu in (0, 2)."""
        return 1.0 - self.nu / 2.0


@dataclass(frozen=True)
class GenCauchyParams:
    """Generalized Cauchy family with shape delta in (0, 2]."""

    alpha: float
    nu: float
    delta: float
    omega: float = 1.0

    def __post_init__(self):
        _require_positive(alpha=self.alpha, nu=self.nu, omega=self.omega)
        if not 0.0 < self.delta <= 2.0:
            raise ValueError(f"delta must lie in (0, 2], got {self.delta}")


def _plain(p):
    """Reject nested variance multipliers inside hybrid weights."""
    if p.omega != 1.0:
        raise ValueError(
            "component params inside a hybrid family must have omega == 1 "
            "(the hybrid weights omega1/omega2 carry the variance)"
        )
    return p


@dataclass(frozen=True)
class HybridCMParams:
    """Hybrid Cauchy-Matern: Cauchy segment on [0, xi1), Matern on [xi2, inf)."""

    lambda1: CauchyParams
    lambda2: MaternParams
    omega1: float
    omega2: float
    xi1: float
    xi2: float

    def __post_init__(self):
        _require_positive(omega1=self.omega1, omega2=self.omega2, xi1=self.xi1, xi2=self.xi2)
        _plain(self.lambda1)
        _plain(self.lambda2)


@dataclass(frozen=True)
class HybridHMParams:
    """Hybrid Hole-Effect-Matern in dimension ``dim``.

    Requires 1 < eta < tau^(2/dim); construction refuses invalid shapes.
    """

    lambda1: MaternParams
    lambda2: MaternParams
    omega1: float
    omega2: float
    xi1: float
    xi2: float
    tau: float
    eta: float
    dim: int

    def __post_init__(self):
        _require_positive(
            omega1=self.omega1, omega2=self.omega2, xi1=self.xi1, xi2=self.xi2, tau=self.tau
        )
        if self.dim < 1 or int(self.dim) != self.dim:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        _plain(self.lambda1)
        _plain(self.lambda2)
        if not hm_validity(self.tau, self.eta, self.dim):
            raise ValidityError(
                f"hole-effect parameters invalid in R^{self.dim}: need "
                f"1 < eta < tau^(2/d) = {self.tau ** (2.0 / self.dim):.6g}, got eta={self.eta}"
            )


@dataclass(frozen=True)
class ParsimoniousCM:
    """Five-parameter hybrid Cauchy-Matern with shared omega, alpha, xi.

    The split point is carried as xi_tilde = sqrt(xi) * alpha (distance
    units), the parameterization used for fitting; xi = (xi_tilde/alpha)^2.
    """

    omega: float
    alpha: float
    nu1: float
    nu2: float
    xi_tilde: float

    def __post_init__(self):
        _require_positive(
            omega=self.omega,
            alpha=self.alpha,
            nu1=self.nu1,
            nu2=self.nu2,
            xi_tilde=self.xi_tilde,
        )

    @property
    def xi(self) -> float:
        return (self.xi_tilde / self.alpha) ** 2


def expand_parsimonious(p: ParsimoniousCM) -> HybridCMParams:
    """Expand the five-parameter form into the full eight-parameter family."""
    xi = p.xi
    return HybridCMParams(
        lambda1=CauchyParams(alpha=p.alpha, nu=p.nu1),
        lambda2=MaternParams(alpha=p.alpha, nu=p.nu2),
        omega1=p.omega,
        omega2=p.omega,
        xi1=xi,
        xi2=xi,
    )


def contract_parsimonious(p: HybridCMParams) -> ParsimoniousCM:
    """Inverse of :func:`expand_parsimonious`; fails if fields are not shared."""
    if not (
        p.omega1 == p.omega2 and p.lambda1.alpha == p.lambda2.alpha and p.xi1 == p.xi2
    ):
        raise ValueError("hybrid CM parameters are not in parsimonious form")
    return ParsimoniousCM(
        omega=p.omega1,
        alpha=p.lambda1.alpha,
        nu1=p.lambda1.nu,
        nu2=p.lambda2.nu,
        xi_tilde=math.sqrt(p.xi1) * p.lambda1.alpha,
    )


# ---------------------------------------------------------------------------
# Closed-form evaluators
# ---------------------------------------------------------------------------


def _as_h(h):
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0):
        raise ValueError("distances must be nonnegative")
    return h_arr, (h_arr.ndim == 0)


def _ret(values: np.ndarray, scalar: bool):
    return float(values[()]) if scalar else values


def _log_matern_shape(x: np.ndarray, nu: float) -> np.ndarray:
    """log of 2^(1-nu)/Gamma(nu) x^nu K_nu(x) for x > 0, stable in both tails."""
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = (
            (1.0 - nu) * math.log(2.0)
            - math.lgamma(nu)
            + nu * np.log(x)
            + np.log(special.kve(nu, x))
            - x
        )
    # kve overflows only when x^(2 nu) is far below machine epsilon, where the
    # correlation is 1 to double precision.
    return np.where(np.isfinite(out) | (x >= 1.0), out, 0.0)


def matern(h, p: MaternParams):
    """Matern covariance; equals omega * exp(-h/alpha) when nu = 1/2."""
    h_arr, scalar = _as_h(h)
    x = np.atleast_1d(h_arr) / p.alpha
    out = np.ones_like(x)
    pos = x > 0
    if np.any(pos):
        out[pos] = np.exp(_log_matern_shape(x[pos], p.nu))
    out = p.omega * out
    return float(out[0]) if scalar else out.reshape(h_arr.shape)


def cauchy(h, p: CauchyParams):
    """Cauchy covariance omega * (1 + h^2/alpha)^(-nu/2)."""
    h_arr, scalar = _as_h(h)
    return _ret(p.omega * (1.0 + h_arr**2 / p.alpha) ** (-p.nu / 2.0), scalar)


def gen_cauchy(h, p: GenCauchyParams):
    """Generalized Cauchy covariance omega * (1 + h^delta/alpha)^(-nu/delta)."""
    h_arr, scalar = _as_h(h)
    return _ret(p.omega * (1.0 + h_arr**p.delta / p.alpha) ** (-p.nu / p.delta), scalar)


def mixing_cauchy(u, p: CauchyParams):
    """Mixing density behind the Cauchy family: gamma(shape nu/2, rate alpha)."""
    u_arr = np.asarray(u, dtype=float)
    scalar = u_arr.ndim == 0
    if np.any(u_arr <= 0):
        raise ValueError("mixing densities are defined for u > 0")
    a = p.nu / 2.0
    out = np.exp(a * math.log(p.alpha) - math.lgamma(a) + (a - 1.0) * np.log(u_arr) - p.alpha * u_arr)
    return _ret(out, scalar)


def mixing_matern(u, p: MaternParams):
    """Mixing density behind the Matern family: inverse gamma(shape nu, scale 1/(4 alpha^2))."""
    u_arr = np.asarray(u, dtype=float)
    scalar = u_arr.ndim == 0
    if np.any(u_arr <= 0):
        raise ValueError("mixing densities are defined for u > 0")
    with np.errstate(over="ignore"):
        log_out = (
            -math.lgamma(p.nu)
            - 2.0 * p.nu * math.log(2.0 * p.alpha)
            - (p.nu + 1.0) * np.log(u_arr)
            - 1.0 / (4.0 * u_arr * p.alpha**2)
        )
    out = np.where(log_out > -745.0, np.exp(log_out), 0.0)
    return _ret(out, scalar)


def _cm_cauchy_piece(h_arr: np.ndarray, lam: CauchyParams, xi: float) -> np.ndarray:
    """Truncated-Cauchy segment: P(nu/2, (h^2+alpha) xi) * (1 + h^2/alpha)^(-nu/2).

    The incomplete-gamma factor is the CDF of a gamma variable with shape
    nu/2 and rate h^2 + alpha, evaluated at xi.
    """
    cdf = reg_lower_gamma(lam.nu / 2.0, (h_arr**2 + lam.alpha) * xi)
    return cdf * (1.0 + h_arr**2 / lam.alpha) ** (-lam.nu / 2.0)


def _cm_matern_piece(h_arr: np.ndarray, lam: MaternParams, xi: float) -> np.ndarray:
    """Truncated-Matern segment: matern(h) - G(nu; 1/(4 xi a^2); h^2/(4 a^2))/Gamma(nu)."""
    b = 1.0 / (4.0 * xi * lam.alpha**2)
    c = h_arr**2 / (4.0 * lam.alpha**2)
    return matern(h_arr, lam) - reg_gen_inc_gamma(lam.nu, b, c)


def hybrid_cm(h, p: HybridCMParams | ParsimoniousCM):
    """Hybrid Cauchy-Matern covariance (closed form)."""
    if isinstance(p, ParsimoniousCM):
        p = expand_parsimonious(p)
    h_arr, scalar = _as_h(h)
    h_flat = np.atleast_1d(h_arr).ravel()
    out = p.omega1 * _cm_cauchy_piece(h_flat, p.lambda1, p.xi1) + p.omega2 * _cm_matern_piece(
        h_flat, p.lambda2, p.xi2
    )
    return float(out[0]) if scalar else out.reshape(h_arr.shape)


def hm_validity(tau: float, eta: float, dim: int) -> bool:
    """True iff 1 < eta < tau^(2/dim), the positive-definiteness condition."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    return 1.0 < eta < tau ** (2.0 / dim)


def _hm_hole_piece(h_arr: np.ndarray, lam: MaternParams, xi: float, tau: float, eta: float) -> np.ndarray:
    """Hole-effect segment: mixture of tau e^{-u eta h^2} - e^{-u h^2} against
    the inverse-gamma density truncated to [0, xi)."""
    b = 1.0 / (4.0 * xi * lam.alpha**2)
    c_base = h_arr**2 / (4.0 * lam.alpha**2)
    return tau * reg_gen_inc_gamma(lam.nu, b, eta * c_base) - reg_gen_inc_gamma(lam.nu, b, c_base)


def hybrid_hm(h, p: HybridHMParams):
    """Hybrid Hole-Effect-Matern covariance (closed form).

    Refuses evaluation when 1 < eta < tau^(2/dim) fails (the parameter
    container enforces the same condition at construction).
    """
    if not hm_validity(p.tau, p.eta, p.dim):
        raise ValidityError(
            f"hole-effect parameters invalid in R^{p.dim}: eta={p.eta}, tau={p.tau}"
        )
    h_arr, scalar = _as_h(h)
    h_flat = np.atleast_1d(h_arr).ravel()
    out = p.omega1 * _hm_hole_piece(h_flat, p.lambda1, p.xi1, p.tau, p.eta) + p.omega2 * (
        _cm_matern_piece(h_flat, p.lambda2, p.xi2)
    )
    return float(out[0]) if scalar else out.reshape(h_arr.shape)


def hm_lower_bound(p: HybridHMParams) -> float:
    """Sharp lower bound for the hole-effect family.

    The first-segment kernel attains its minimum (tau eta)^(-1/(eta-1)) (1-eta)/eta
    at h* = sqrt(log(tau eta)/(u (eta-1))); multiplying by the truncated
    inverse-gamma mass Q(nu1, 1/(4 xi1 alpha1^2)) gives the bound.
    """
    lam = p.lambda1
    mass = reg_upper_gamma(lam.nu, 1.0 / (4.0 * p.xi1 * lam.alpha**2))
    depth = (p.tau * p.eta) ** (-1.0 / (p.eta - 1.0)) * (1.0 - p.eta) / p.eta
    return p.omega1 * depth * mass


# ---------------------------------------------------------------------------
# KernelSpec: serializable model identity + dispatch
# ---------------------------------------------------------------------------

FAMILIES = ("matern", "cauchy", "gencauchy", "hybrid_cm", "hybrid_hm", "mixture")

_PARAM_TYPES = {
    "matern": MaternParams,
    "cauchy": CauchyParams,
    "gencauchy": GenCauchyParams,
    "hybrid_cm": (HybridCMParams, ParsimoniousCM),
    "hybrid_hm": HybridHMParams,
}


@dataclass(frozen=True)
class KernelSpec:
    """A covariance family tag plus its parameter container and dimension."""

    family: str
    params: object
    dim: int = 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        expected = _PARAM_TYPES.get(self.family)
        if expected is not None and not isinstance(self.params, expected):
            raise TypeError(
                f"family {self.family!r} expects params of type {expected}, "
                f"got {type(self.params).__name__}"
            )
        if self.family == "hybrid_hm" and self.params.dim != self.dim:
            raise ValueError(
                f"hybrid_hm params declare dim={self.params.dim} but spec has dim={self.dim}"
            )


def evaluate(spec: KernelSpec, h):
    """Evaluate the covariance at distance(s) h, dispatching on the family tag."""
    if spec.family == "matern":
        return matern(h, spec.params)
    if spec.family == "cauchy":
        return cauchy(h, spec.params)
    if spec.family == "gencauchy":
        return gen_cauchy(h, spec.params)
    if spec.family == "hybrid_cm":
        return hybrid_cm(h, spec.params)
    if spec.family == "hybrid_hm":
        return hybrid_hm(h, spec.params)
    if spec.family == "mixture":
        from . import mixtures

        h_arr, scalar = _as_h(h)
        h_flat = np.atleast_1d(h_arr)
        vals = np.array([mixtures.eval_mixture(spec.params, hh) for hh in h_flat])
        return float(vals[0]) if scalar else vals.reshape(h_arr.shape)
    raise ValueError(f"unknown family {spec.family!r}")


def value_at_zero(spec: KernelSpec) -> float:
    """Covariance at zero lag, phi(0)."""
    return float(evaluate(spec, 0.0))


def log_evaluate(spec: KernelSpec, h):
    """log covariance, computed in log space where the value itself underflows.

    Only the Matern family needs the dedicated path (exponential decay
    underflows double precision long before its logarithm does); the other
    families stay representable wherever their logarithm is.
    """
    h_arr, scalar = _as_h(h)
    if spec.family == "matern":
        p = spec.params
        x = np.atleast_1d(h_arr) / p.alpha
        out = np.where(x > 0, _log_matern_shape(np.where(x > 0, x, 1.0), p.nu), 0.0)
        out = out + math.log(p.omega)
        return float(out[0]) if scalar else out.reshape(h_arr.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(evaluate(spec, h))


def tail_exponent(spec: KernelSpec, h_lo: float, h_hi: float) -> float:
    """Least-squares slope of log phi vs log h over a fixed 50-point log grid.

    Raises ``ValueError`` when the kernel is not strictly positive on the
    window (tail estimation is undefined for hole-effect models there).
    """
    if not 0 < h_lo < h_hi:
        raise ValueError(f"need 0 < h_lo < h_hi, got ({h_lo}, {h_hi})")
    grid = np.geomspace(h_lo, h_hi, 50)
    log_phi = np.asarray(log_evaluate(spec, grid), dtype=float)
    if not np.all(np.isfinite(log_phi)):
        raise ValueError(
            "kernel is not strictly positive on the requested window; "
            "tail exponent is undefined"
        )
    slope = np.polyfit(np.log(grid), log_phi, 1)[0]
    return float(slope)


# ---------------------------------------------------------------------------
# JSON round trip ({"family": ..., "params": {...}, "dim": ...})
# ---------------------------------------------------------------------------

_PARSIMONIOUS_CM_KEYS = {"omega", "alpha", "nu1", "nu2", "xi_tilde"}
_PARSIMONIOUS_HM_KEYS = {"omega", "alpha", "nu", "xi", "tau", "eta"}


def spec_to_dict(spec: KernelSpec) -> dict:
    """Serialize to the documented JSON structure."""
    p = spec.params
    if spec.family in ("matern", "cauchy"):
        params = {"alpha": p.alpha, "nu": p.nu, "omega": p.omega}
    elif spec.family == "gencauchy":
        params = {"alpha": p.alpha, "nu": p.nu, "delta": p.delta, "omega": p.omega}
    elif spec.family == "hybrid_cm":
        if isinstance(p, ParsimoniousCM):
            params = {
                "omega": p.omega,
                "alpha": p.alpha,
                "nu1": p.nu1,
                "nu2": p.nu2,
                "xi_tilde": p.xi_tilde,
            }
        else:
            params = {
                "lambda1": {"alpha": p.lambda1.alpha, "nu": p.lambda1.nu},
                "lambda2": {"alpha": p.lambda2.alpha, "nu": p.lambda2.nu},
                "omega1": p.omega1,
                "omega2": p.omega2,
                "xi1": p.xi1,
                "xi2": p.xi2,
            }
    elif spec.family == "hybrid_hm":
        params = {
            "lambda1": {"alpha": p.lambda1.alpha, "nu": p.lambda1.nu},
            "lambda2": {"alpha": p.lambda2.alpha, "nu": p.lambda2.nu},
            "omega1": p.omega1,
            "omega2": p.omega2,
            "xi1": p.xi1,
            "xi2": p.xi2,
            "tau": p.tau,
            "eta": p.eta,
        }
    else:
        raise ValueError(f"family {spec.family!r} has no JSON form")
    return {"family": spec.family, "params": params, "dim": spec.dim}


def spec_from_dict(data: dict) -> KernelSpec:
    """Parse the documented JSON structure into a KernelSpec."""
    try:
        family = data["family"]
        params = dict(data["params"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"kernel spec must carry 'family' and 'params': {exc}") from exc
    dim = int(data.get("dim", 2))
    if family in ("matern", "cauchy"):
        cls = MaternParams if family == "matern" else CauchyParams
        p = cls(alpha=params["alpha"], nu=params["nu"], omega=params.get("omega", 1.0))
    elif family == "gencauchy":
        p = GenCauchyParams(
            alpha=params["alpha"],
            nu=params["nu"],
            delta=params["delta"],
            omega=params.get("omega", 1.0),
        )
    elif family == "hybrid_cm":
        if _PARSIMONIOUS_CM_KEYS.issubset(params):
            p = ParsimoniousCM(
                omega=params["omega"],
                alpha=params["alpha"],
                nu1=params["nu1"],
                nu2=params["nu2"],
                xi_tilde=params["xi_tilde"],
            )
        else:
            p = HybridCMParams(
                lambda1=CauchyParams(**params["lambda1"]),
                lambda2=MaternParams(**params["lambda2"]),
                omega1=params["omega1"],
                omega2=params["omega2"],
                xi1=params["xi1"],
                xi2=params["xi2"],
            )
    elif family == "hybrid_hm":
        if _PARSIMONIOUS_HM_KEYS.issubset(params):
            lam = MaternParams(alpha=params["alpha"], nu=params["nu"])
            p = HybridHMParams(
                lambda1=lam,
                lambda2=lam,
                omega1=params["omega"],
                omega2=params["omega"],
                xi1=params["xi"],
                xi2=params["xi"],
                tau=params["tau"],
                eta=params["eta"],
                dim=dim,
            )
        else:
            p = HybridHMParams(
                lambda1=MaternParams(**params["lambda1"]),
                lambda2=MaternParams(**params["lambda2"]),
                omega1=params["omega1"],
                omega2=params["omega2"],
                xi1=params["xi1"],
                xi2=params["xi2"],
                tau=params["tau"],
                eta=params["eta"],
                dim=dim,
            )
    else:
        raise ValueError(f"unknown family {family!r}")
    return KernelSpec(family=family, params=p, dim=dim)
