"""Regularized flowing propagators with an infrared scale and a UV cutoff.

A propagator between transverse positions z, z' at 3-momentum magnitude p is
the proper-time integral of a heat kernel against the cutoff function
exp(-lam*(p^2+m^2)):

    C_star^{L,L0}(p; z, z') = Integral_{1/L0^2}^{1/L^2} dlam
                              p_star(lam; z, z') exp(-lam (p^2 + m^2)),

so the bulk/surface split of the kernel carries over additively to the
propagator.  Differentiating in the infrared scale L collapses the integral
to the kernel at lam = 1/L^2:

    d/dL C = Cdot(p) * p_star(1/L^2; z, z'),
    Cdot(p) = -(2/L^3) exp(-(p^2+m^2)/L^2).

Removing both cutoffs gives the familiar exponential closed forms with
decay rate q = sqrt(2 (p^2 + m^2)) (the factor 2 matches the heat-kernel
normalization above), e.g. the Robin one has image coefficient
(q - c)/(q + c).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import nnls
from scipy.special import eval_hermite

from .kernels import BoundaryKind, KernelContext, Wall, bulk, star_kernel, surface_kernel


@dataclass(frozen=True)
class CutoffPair:
    lam: float    # infrared flow scale Lambda >= 0
    lam0: float   # ultraviolet cutoff Lambda_0 > 0

    def __post_init__(self):
        if not (0 <= self.lam and self.lam0 > 0):
            raise ValueError("need 0 <= Lambda and Lambda_0 > 0")
        if self.lam > self.lam0:
            raise ValueError("need Lambda <= Lambda_0")


@dataclass(frozen=True)
class PropagatorQuery:
    p: float
    z: float
    zp: float
    ctx: KernelContext
    cut: CutoffPair

    def __post_init__(self):
        if self.p < 0 or self.z < 0 or self.zp < 0:
            raise ValueError("need p, z, zp >= 0")


class Part(enum.Enum):
    FULL = "full"
    BULK = "bulk"
    SURFACE = "surface"


def _part_kernel(bc: BoundaryKind, part: Part):
    if part is Part.BULK or bc.kind is Wall.BULK:
        return lambda lam, z, zp: bulk(lam, z, zp)
    if part is Part.FULL:
        return lambda lam, z, zp: star_kernel(bc, lam, z, zp)
    return lambda lam, z, zp: surface_kernel(bc, lam, z, zp)


def _lam_upper(cut: CutoffPair, msq: float):
    """Proper-time upper limit; for Lambda=0 an explicit tail cutoff.

    The integrand is bounded by 2 (2 pi lam)^{-1/2} e^{-lam*msq}, so the
    dropped tail beyond lam_max is below 2 e^{-lam_max*msq} /
    (msq sqrt(2 pi lam_max)); lam_max is doubled until that bound is <1e-13.
    """
    if cut.lam > 0:
        return 1.0 / cut.lam ** 2
    lam_max = max(10.0 / cut.lam0 ** 2, 1.0 / msq)
    while 2.0 * math.exp(-lam_max * msq) / (msq * math.sqrt(2 * math.pi * lam_max)) > 1e-13:
        lam_max *= 2.0
    return lam_max


def flowing_propagator(q: PropagatorQuery, part: Part = Part.FULL) -> float:
    """Cutoff propagator by adaptive quadrature in log proper time."""
    msq = q.p ** 2 + q.ctx.mass ** 2
    lo = 1.0 / q.cut.lam0 ** 2
    hi = _lam_upper(q.cut, msq)
    if q.cut.lam == q.cut.lam0:
        return 0.0
    ker = _part_kernel(q.ctx.bc, part)

    def integrand(t):
        lam = math.exp(t)
        return lam * float(ker(lam, q.z, q.zp)) * math.exp(-lam * msq)

    val, _ = quad(integrand, math.log(lo), math.log(hi),
                  epsabs=1e-10, epsrel=1e-10, limit=300)
    return val


def propagator_derivative(q: PropagatorQuery, part: Part = Part.FULL) -> float:
    """d/dLambda of the flowing propagator (closed form, no quadrature)."""
    if q.cut.lam <= 0:
        raise ValueError("derivative needs Lambda > 0")
    ker = _part_kernel(q.ctx.bc, part)
    return cdot(q.p, q.ctx.mass, q.cut.lam) * float(
        ker(1.0 / q.cut.lam ** 2, q.z, q.zp))


def cdot(p, m, lam):
    """Scalar momentum factor Cdot(p) = -(2/L^3) exp(-(p^2+m^2)/L^2)."""
    return -(2.0 / lam ** 3) * np.exp(-(np.asarray(p) ** 2 + m ** 2) / lam ** 2)


def closed_form_propagator(bc: BoundaryKind, p, z, zp, m) -> float:
    """Fully unregularized propagator (Lambda -> 0, Lambda_0 -> inf)."""
    if z < 0 or zp < 0:
        raise ValueError("need z, zp >= 0")
    if m <= 0:
        raise ValueError("mass must be positive")
    q = math.sqrt(2.0 * (p ** 2 + m ** 2))
    direct = math.exp(-q * abs(z - zp))
    image = math.exp(-q * (z + zp))
    if bc.kind is Wall.BULK:
        return direct / q
    if bc.kind is Wall.DIRICHLET:
        return (direct - image) / q
    if bc.kind is Wall.NEUMANN:
        return (direct + image) / q
    c = bc.c
    return (direct + (q - c) / (q + c) * image) / q


def cdot_derivative(p, m, lam, w_order):
    """w-th derivative of Cdot along one momentum axis, evaluated at (p,0,0).

    Cdot is Gaussian in p, so the derivative is a Hermite polynomial times
    the Gaussian: d^n/dp^n e^{-p^2/L^2} = (-1/L)^n H_n(p/L) e^{-p^2/L^2}.
    """
    p = np.asarray(p, dtype=float)
    gauss = cdot(p, m, lam)
    if w_order == 0:
        return gauss
    return (-1.0 / lam) ** w_order * eval_hermite(w_order, p / lam) * gauss


def covariance_bound_check(w_order: int, poly_degree: int, m: float = 1.0,
                           n_p: int = 60, n_lam: int = 40) -> dict:
    """Fit the smallest positive-coefficient polynomial bound on Cdot.

    Verifies |d^w Cdot(p)| <= (L+m)^{-3-w} * Ptilde(p/(L+m)) on a (p, L)
    grid by nonnegative least squares plus a final scale-up so the bound
    covers every grid point.  Returns the coefficients and worst ratio.
    """
    if not 0 <= w_order <= 3:
        raise ValueError("w_order supported up to 3")
    ps = np.linspace(0.0, 8.0 * m, n_p)
    lams = np.geomspace(0.05 * m, 50.0 * m, n_lam)
    P, L = np.meshgrid(ps, lams, indexing="ij")
    f = np.abs(cdot_derivative(P, m, L, w_order)) * (L + m) ** (3 + w_order)
    x = (P / (L + m)).ravel()
    y = f.ravel()
    basis = np.vander(x, poly_degree + 1, increasing=True)
    coef, _ = nnls(basis, y)
    fit = basis @ coef
    # scale so the polynomial dominates everywhere on the grid
    with np.errstate(divide="ignore", invalid="ignore"):
        shortfall = np.where(fit > 0, y / fit, np.inf)
    scale = max(1.0, float(np.max(shortfall[np.isfinite(shortfall)])))
    if not np.all(np.isfinite(shortfall)):
        coef[0] = max(coef[0], float(np.max(y)))
        basisfit = basis @ coef
        scale = max(1.0, float(np.max(y / basisfit)))
    coef = coef * scale
    ratio = y / (basis @ coef)
    return {
        "w_order": w_order,
        "coefficients": coef.tolist(),
        "worst_ratio": float(np.max(ratio)),
        "sup_scaled": float(np.max(f)),
    }
