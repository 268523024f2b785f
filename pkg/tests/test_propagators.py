"""Flowing-propagator unit tests: cutoff quadrature against closed forms."""

import math

import numpy as np
import pytest

from boundaryflow.kernels import BoundaryKind, KernelContext, Wall
from boundaryflow.propagators import (CutoffPair, Part, PropagatorQuery,
                                      cdot, cdot_derivative,
                                      closed_form_propagator,
                                      covariance_bound_check,
                                      flowing_propagator,
                                      propagator_derivative)


def _query(bc, p=0.5, z=0.7, zp=1.1, lam=1e-3, lam0=1e3, m=1.0):
    return PropagatorQuery(p=p, z=z, zp=zp,
                           ctx=KernelContext(mass=m, bc=bc),
                           cut=CutoffPair(lam, lam0))


def test_frozen_robin_value():
    # Recipe: 40-digit quadrature of the Robin kernel times
    # exp(-lam (p^2+m^2)) over proper time lam in [1e-6, 1e6] at
    # (c, p, z, zp, m) = (2, 0.5, 0.7, 1.1, 1); the closed form at these
    # cutoffs agrees to all shown digits.
    oracle = 0.33171861257675722733
    q = _query(BoundaryKind(Wall.ROBIN, 2.0))
    assert flowing_propagator(q) == pytest.approx(oracle, abs=1e-10)
    closed = closed_form_propagator(BoundaryKind(Wall.ROBIN, 2.0),
                                    0.5, 0.7, 1.1, 1.0)
    assert closed == pytest.approx(oracle, abs=1e-12)


def test_closed_form_decay_rate():
    # zero-separation bulk value is 1/q with q = sqrt(2 (p^2+m^2))
    val = closed_form_propagator(BoundaryKind(Wall.BULK), 0.3, 1.0, 1.0, 1.0)
    assert val == pytest.approx(1.0 / math.sqrt(2.0 * 1.09), rel=1e-12)


def test_convergence_all_walls():
    for bc in (BoundaryKind(Wall.BULK), BoundaryKind(Wall.DIRICHLET),
               BoundaryKind(Wall.NEUMANN), BoundaryKind(Wall.ROBIN, 0.7)):
        q = _query(bc)
        assert abs(flowing_propagator(q)
                   - closed_form_propagator(bc, 0.5, 0.7, 1.1, 1.0)) < 1e-4


def test_additivity():
    for bc in (BoundaryKind(Wall.DIRICHLET), BoundaryKind(Wall.NEUMANN),
               BoundaryKind(Wall.ROBIN, 1.4)):
        q = _query(bc, lam=0.3, lam0=40.0)
        full = flowing_propagator(q, Part.FULL)
        split = (flowing_propagator(q, Part.BULK)
                 + flowing_propagator(q, Part.SURFACE))
        assert abs(full - split) < 1e-10


def test_derivative_finite_difference():
    bc = BoundaryKind(Wall.ROBIN, 0.5)
    ctx = KernelContext(mass=1.0, bc=bc)
    lam, h = 0.8, 1e-5
    args = dict(p=0.3, z=0.5, zp=0.8, ctx=ctx)
    fd = (flowing_propagator(PropagatorQuery(
            cut=CutoffPair(lam + h, 50.0), **args))
          - flowing_propagator(PropagatorQuery(
              cut=CutoffPair(lam - h, 50.0), **args))) / (2 * h)
    an = propagator_derivative(PropagatorQuery(
        cut=CutoffPair(lam, 50.0), **args))
    assert fd == pytest.approx(an, rel=1e-6)


def test_coincident_cutoffs_vanish():
    q = _query(BoundaryKind(Wall.NEUMANN), lam=2.0, lam0=2.0)
    assert flowing_propagator(q) == 0.0


def test_robin_large_c_matches_dirichlet_closed_form():
    big = closed_form_propagator(BoundaryKind(Wall.ROBIN, 1e8),
                                 0.2, 0.5, 0.9, 1.0)
    dir_ = closed_form_propagator(BoundaryKind(Wall.DIRICHLET),
                                  0.2, 0.5, 0.9, 1.0)
    assert big == pytest.approx(dir_, abs=1e-7)


def test_cdot_values_and_derivatives():
    # Cdot(p) = -(2/L^3) exp(-(p^2+m^2)/L^2)
    assert cdot(0.0, 1.0, 2.0) == pytest.approx(
        -0.25 * math.exp(-0.25), rel=1e-14)
    h = 1e-6
    fd = (cdot(0.5 + h, 1.0, 2.0) - cdot(0.5 - h, 1.0, 2.0)) / (2 * h)
    assert cdot_derivative(0.5, 1.0, 2.0, 1) == pytest.approx(fd, rel=1e-8)
    fd2 = (cdot(0.5 + h, 1.0, 2.0) - 2 * cdot(0.5, 1.0, 2.0)
           + cdot(0.5 - h, 1.0, 2.0)) / h ** 2
    assert cdot_derivative(0.5, 1.0, 2.0, 2) == pytest.approx(fd2, rel=1e-3)


def test_covariance_bound():
    for w in (0, 1, 2):
        rep = covariance_bound_check(w, poly_degree=4)
        assert rep["worst_ratio"] <= 1.0 + 1e-9
        assert all(c >= 0 for c in rep["coefficients"])


def test_validation_errors():
    with pytest.raises(ValueError):
        CutoffPair(-1.0, 10.0)
    with pytest.raises(ValueError):
        CutoffPair(20.0, 10.0)
    with pytest.raises(ValueError):
        _query(BoundaryKind(Wall.BULK), z=-0.5)
    with pytest.raises(ValueError):
        closed_form_propagator(BoundaryKind(Wall.BULK), 0.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        propagator_derivative(_query(BoundaryKind(Wall.BULK), lam=0.0))
