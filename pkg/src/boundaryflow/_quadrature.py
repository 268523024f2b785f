"""Shared quadrature and random-stream helpers.

Small utilities used across the package: composite Gauss-Legendre rules on
the half line and on log-spaced intervals, the Gaussian half-line integral
with its erf closed form, and counter-based per-index random substreams for
reproducible parallel sweeps.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}

SQRT2PI = np.sqrt(2.0 * np.pi)


def _gl(n):
    try:
        return _GL_CACHE[n]
    except KeyError:
        xw = leggauss(n)
        _GL_CACHE[n] = xw
        return xw


def panel_nodes(edges, n_per_panel=12):
    """Gauss-Legendre nodes/weights on consecutive panels given by `edges`."""
    x, w = _gl(n_per_panel)
    edges = np.asarray(edges, dtype=float)
    a = edges[:-1][:, None]
    b = edges[1:][:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (a + b)
    weights = 0.5 * (b - a) * w[None, :] * np.ones_like(nodes)
    return nodes.ravel(), weights.ravel()


def half_line_nodes(zmax, n_panels=10, n_per_panel=14, zmin_scale=None):
    """Composite Gauss-Legendre rule on [0, zmax].

    Panels grow geometrically away from 0 so that narrow kernels peaked at
    the boundary are resolved.  `zmin_scale` sets the width of the first
    panel (default zmax/2**n_panels).
    """
    if zmin_scale is None:
        zmin_scale = zmax / 2.0 ** n_panels
    zmin_scale = min(zmin_scale, zmax / 2.0)
    edges = [0.0]
    e = zmin_scale
    while e < zmax:
        edges.append(e)
        e *= 2.0
    edges.append(zmax)
    return panel_nodes(np.array(edges), n_per_panel)


def log_nodes(a, b, n_panels=8, n_per_panel=8):
    """Gauss-Legendre rule for ∫_a^b f, with panels log-spaced in [a,b]."""
    if not (0 < a < b):
        raise ValueError("need 0 < a < b")
    edges = np.geomspace(a, b, n_panels + 1)
    return panel_nodes(edges, n_per_panel)


def gauss_halfline(tau, center):
    """∫_0^∞ (2πτ)^{-1/2} exp(-(u-center)²/(2τ)) du  (erf closed form)."""
    from scipy.special import ndtr
    return ndtr(center / np.sqrt(tau))


def gauss_product(tau1, a, tau2, b):
    """Combine p_B(τ1;u,a)·p_B(τ2;u,b) into coef · p_B(τ_h;u,μ).

    Returns (coef, tau_h, mu) with coef = p_B(τ1+τ2;a,b).
    """
    s = tau1 + tau2
    coef = np.exp(-((a - b) ** 2) / (2.0 * s)) / np.sqrt(2.0 * np.pi * s)
    tau_h = tau1 * tau2 / s
    mu = (tau2 * a + tau1 * b) / s
    return coef, tau_h, mu


def pair_halfline(tau1, a, tau2, b):
    """∫_0^∞ p_B(τ1;u,a) p_B(τ2;u,b) du in closed form."""
    coef, tau_h, mu = gauss_product(tau1, a, tau2, b)
    return coef * gauss_halfline(tau_h, mu)


def substream(seed, index):
    """Independent counter-based random stream for sample `index`.

    Keyed Philox streams: the same (seed, index) pair always yields the same
    sample regardless of how the sweep is split across workers.
    """
    return np.random.Generator(np.random.Philox(key=[seed, index]))
