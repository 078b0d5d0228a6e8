"""Numerical evaluation of piecewise Gaussian scale mixtures.

This module is the ground-truth oracle for the closed-form families: a
covariance is represented as a sum of segments, each an integral of a base
kernel phi(h; u) (Gaussian e^{-u h^2} by default) against a mixing density
over a u-interval.  Two quadrature schemes with different subdivision
strategies are provided so the oracle can be cross-checked against itself:

* ``"kronrod"``   adaptive Gauss-Kronrod on each segment, infinite upper
                  limits mapped through u = u_lo + s/(1-s);
* ``"legendre"``  fixed-order Gauss-Legendre panels on a logarithmic axis,
                  extended outward until panel contributions vanish, with
                  node doubling as the convergence check.

The oracle is deliberately slower and simpler than the closed forms and is
never used inside fitting loops.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .exceptions import ToleranceError
from .kernels import HybridCMParams, ParsimoniousCM, expand_parsimonious, mixing_cauchy, mixing_matern
from .specfun import DEFAULT_QUAD_SETTINGS, QuadratureSettings

__all__ = [
    "MixtureSegment",
    "gaussian_base_kernel",
    "eval_mixture",
    "superposition_mixture",
    "hybrid_cm_segments",
    "hybrid_hm_segments",
]


def gaussian_base_kernel(h: float, u: float) -> float:
    """The Schoenberg base kernel e^{-u h^2}."""
    return math.exp(-u * h * h) if u * h * h < 745.0 else 0.0


@dataclass(frozen=True)
class MixtureSegment:
    """One mixture segment: weight * int_{u_lo}^{u_hi} phi(h;u) g(u) du."""

    u_lo: float
    u_hi: float  # may be math.inf
    weight: float
    mixing: Callable[[float], float]
    base_kernel: Callable[[float, float], float] = gaussian_base_kernel

    def __post_init__(self):
        if not self.u_lo < self.u_hi:
            raise ValueError(f"need u_lo < u_hi, got [{self.u_lo}, {self.u_hi})")
        if self.u_lo < 0:
            raise ValueError(f"u_lo must be nonnegative, got {self.u_lo}")
        if not self.weight > 0:
            raise ValueError(f"weight must be positive, got {self.weight}")


def _segment_kronrod(seg: MixtureSegment, h: float, s: QuadratureSettings):
    f = lambda u: seg.base_kernel(h, u) * seg.mixing(u)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if math.isinf(seg.u_hi):
            lo = seg.u_lo
            val, err = integrate.quad(
                lambda t: f(lo + t / (1.0 - t)) / (1.0 - t) ** 2,
                0.0,
                1.0,
                epsabs=0.5 * s.abs_tol,
                epsrel=s.rel_tol,
                limit=s.max_subdivisions,
            )
        else:
            width = seg.u_hi - seg.u_lo
            # geometric breakpoints keep the adaptive rule from overlooking
            # densities concentrated far from the endpoints of wide segments
            pts = None
            if width > 10.0:
                pts = []
                scale = 1e-3
                while seg.u_lo + scale < seg.u_hi:
                    pts.append(seg.u_lo + scale)
                    scale *= 10.0
            val, err = integrate.quad(
                f,
                seg.u_lo,
                seg.u_hi,
                points=pts,
                epsabs=0.5 * s.abs_tol,
                epsrel=s.rel_tol,
                limit=max(s.max_subdivisions, 10 * (len(pts) + 1) if pts else 0),
            )
    return val, err


_GL_X32, _GL_W32 = np.polynomial.legendre.leggauss(32)
_GL_X64, _GL_W64 = np.polynomial.legendre.leggauss(64)


def _panel_integral(f, y_lo: float, y_hi: float, nodes, weights) -> float:
    half = 0.5 * (y_hi - y_lo)
    mid = 0.5 * (y_hi + y_lo)
    total = 0.0
    for xk, wk in zip(nodes, weights):
        y = mid + half * xk
        u = math.exp(y)
        total += wk * f(u) * u
    return half * total


def _segment_legendre(seg: MixtureSegment, h: float, s: QuadratureSettings):
    """Integrate on the log-u axis with outward panel extension.

    The substitution u = e^y turns both the u -> 0 endpoint (integrable
    density singularities) and the polynomial tail of inverse-gamma-type
    densities into exponentially decaying integrands, which fixed-order
    panels resolve.
    """
    f = lambda u: seg.base_kernel(h, u) * seg.mixing(u)
    y_anchor = math.log(seg.u_lo) if seg.u_lo > 0 else 0.0
    y_lo_bound = math.log(seg.u_lo) if seg.u_lo > 0 else -746.0
    y_hi_bound = math.log(seg.u_hi) if not math.isinf(seg.u_hi) else 746.0
    if not math.isinf(seg.u_hi) and seg.u_lo > 0:
        panels = [(y_lo_bound, y_hi_bound)]
    else:
        # unit-width panels around the anchor, extended until contributions die
        panels = []
        stop = max(s.abs_tol * 1e-3, 1e-300)
        y = min(y_anchor, y_hi_bound)
        while y > y_lo_bound:
            lo = max(y - 1.0, y_lo_bound)
            panels.append((lo, y))
            if abs(_panel_integral(f, lo, y, _GL_X32, _GL_W32)) < stop and y < y_anchor - 30:
                break
            y = lo
        y = min(y_anchor, y_hi_bound)
        while y < y_hi_bound:
            hi = min(y + 1.0, y_hi_bound)
            panels.append((y, hi))
            if abs(_panel_integral(f, y, hi, _GL_X32, _GL_W32)) < stop and y > y_anchor + 5:
                break
            y = hi

    def total_with(nodes, weights, splits: int) -> float:
        acc = 0.0
        for lo, hi in panels:
            edges = np.linspace(lo, hi, splits + 1)
            for k in range(splits):
                acc += _panel_integral(f, edges[k], edges[k + 1], nodes, weights)
        return acc

    prev = total_with(_GL_X32, _GL_W32, 1)
    for splits in (2, 4, 8, 16):
        cur = total_with(_GL_X64, _GL_W64, splits)
        err = abs(cur - prev)
        if err <= max(s.abs_tol, s.rel_tol * abs(cur)) * 4.0:
            return cur, err
        prev = cur
    return cur, err


def eval_mixture(
    segments,
    h: float,
    settings: QuadratureSettings | None = None,
    scheme: str = "kronrod",
) -> float:
    """Evaluate sum_i weight_i * int phi_i(h; u) g_i(u) du at one distance.

    Raises ``ToleranceError`` (with the achieved estimate) when the
    requested accuracy cannot be certified; subdivision exhaustion on a
    non-integrable density surfaces the same way.
    """
    if h < 0:
        raise ValueError("distance must be nonnegative")
    s = settings or DEFAULT_QUAD_SETTINGS
    if scheme not in ("kronrod", "legendre"):
        raise ValueError(f"unknown scheme {scheme!r}")
    total = 0.0
    err = 0.0
    for seg in segments:
        if scheme == "kronrod":
            val, e = _segment_kronrod(seg, float(h), s)
        else:
            val, e = _segment_legendre(seg, float(h), s)
        total += seg.weight * val
        err += seg.weight * e
    requested = max(s.abs_tol, s.rel_tol * abs(total))
    if err > 10.0 * requested:
        raise ToleranceError("mixture quadrature did not meet tolerance", err, requested)
    return total


def hybrid_cm_segments(p: HybridCMParams | ParsimoniousCM) -> tuple:
    """Mixture representation of the hybrid Cauchy-Matern model."""
    if isinstance(p, ParsimoniousCM):
        p = expand_parsimonious(p)
    return (
        MixtureSegment(0.0, p.xi1, p.omega1, lambda u: float(mixing_cauchy(u, p.lambda1))),
        MixtureSegment(p.xi2, math.inf, p.omega2, lambda u: float(mixing_matern(u, p.lambda2))),
    )


def hybrid_hm_segments(p) -> tuple:
    """Mixture representation of the hybrid Hole-Effect-Matern model.

    The first segment replaces the Gaussian base kernel with
    tau e^{-u eta h^2} - e^{-u h^2}, the kernel that admits negative values.
    """

    def hole_kernel(h: float, u: float) -> float:
        return p.tau * gaussian_base_kernel(h * math.sqrt(p.eta), u) - gaussian_base_kernel(h, u)

    return (
        MixtureSegment(
            0.0, p.xi1, p.omega1, lambda u: float(mixing_matern(u, p.lambda1)), hole_kernel
        ),
        MixtureSegment(p.xi2, math.inf, p.omega2, lambda u: float(mixing_matern(u, p.lambda2))),
    )


def superposition_mixture(
    p: HybridCMParams,
    h: float,
    settings: QuadratureSettings | None = None,
    scheme: str = "kronrod",
) -> float:
    """Hybrid Cauchy-Matern with overlapping segments (xi1 >= xi2).

    On [xi2, xi1) both marginal structures contribute; as xi2 -> 0 and
    xi1 -> inf this tends to omega1 * cauchy + omega2 * matern, the greatest
    possible superposition.
    """
    if isinstance(p, ParsimoniousCM):
        p = expand_parsimonious(p)
    if not p.xi1 >= p.xi2:
        raise ValueError(f"superposition requires xi1 >= xi2, got xi1={p.xi1} < xi2={p.xi2}")
    return eval_mixture(hybrid_cm_segments(p), h, settings=settings, scheme=scheme)
