"""Flow tests: frozen quadrature oracles, renormalization conditions,
wall-type limits, extraction fixtures, and error paths."""

import dataclasses
import math

import numpy as np
import pytest

from boundaryflow.kernels import BoundaryKind, Wall
from boundaryflow.flow import (
    GridSpec,
    amputation_comparison,
    bulk_a_value,
    default_schedule,
    dirichlet_surface_check,
    extract_relevant_terms,
    integrate_bulk_tadpole,
    integrate_surface_tadpole,
    momentum_trace,
    one_loop_four_point,
    power_counting_gap,
    power_counting_probe,
    robin_dirichlet_limit,
    surface_moments,
    surface_profile,
    surface_rate_h,
    surface_rates,
    tadpole_object,
    two_point_flow_residual,
    _c_profile,
)

MASS = 1.0
LAM0 = 10.0

# Frozen 40-digit quadrature values.
# A_UV: integral over L in (0, 10) of -L exp(-1/L^2) / (8 sqrt(2) pi^2).
A_UV = -0.42524404348674651633
# S_UV, E_UV: integral over L in (0, 10) of (L/2m) I(L) m_j(L) with the
# even-wall moments m_0 = 1/4, m_1 = 1/(4 L sqrt(2 pi)) and
# I(L) = -exp(-1/L^2)/(4 pi^{3/2}) * L / sqrt(2 pi).
S_UV = -0.046734067995281679486
E_UV = -0.0045202663233275659657

NEUMANN = BoundaryKind(Wall.NEUMANN)
DIRICHLET = BoundaryKind(Wall.DIRICHLET)


def test_momentum_trace_value():
    got = momentum_trace(2.0, MASS)
    assert got == pytest.approx(-math.exp(-0.25) / (4 * math.pi ** 1.5),
                                rel=1e-14)


def test_bulk_tadpole_series_and_roundtrip():
    res = integrate_bulk_tadpole(coupling=1.0, mass=MASS, lam0=LAM0)
    assert res.meta["a_at_lam0"] == pytest.approx(A_UV, rel=1e-9)
    assert res.meta["roundtrip_residual"] < 1e-12
    assert np.all(res.bulk["a"] == res.meta["a_at_lam0"])
    assert np.all(res.bulk["s"] == 0.0) and np.all(res.bulk["b"] == 0.0)
    # the series starts from the zero renormalization condition at scale 0
    assert res.series[-1]["lam"] == 0.0
    assert res.series[-1]["a"] == 0.0


def test_bulk_quadrature_matches_stepper():
    res = integrate_bulk_tadpole(coupling=1.0, mass=MASS, lam0=LAM0)
    lam_grid = np.asarray(res.meta["a_of_lam"]["lam"])
    a_grid = np.asarray(res.meta["a_of_lam"]["a"])
    for lam in (0.5, 2.0, 7.0):
        idx = int(np.argmin(np.abs(lam_grid - lam)))
        direct = bulk_a_value(float(lam_grid[idx]), 1.0, MASS)
        assert direct == pytest.approx(float(a_grid[idx]), rel=1e-7)


def test_surface_tadpole_neumann_oracles():
    res = integrate_surface_tadpole(1.0, MASS, 0.0, "neumann", LAM0)
    assert res.surface["s"] == pytest.approx(S_UV, rel=1e-8)
    assert res.surface["e"] == pytest.approx(E_UV, rel=1e-8)
    assert res.meta["eh_gap"] < 1e-10
    assert res.meta["roundtrip_residual"] < 1e-12


def test_surface_tadpole_growth_exponents():
    lam0s = np.array([10.0, 20.0, 40.0, 80.0])
    s_vals, e_vals = [], []
    for l0 in lam0s:
        r = integrate_surface_tadpole(1.0, MASS, 0.0, "neumann", float(l0))
        s_vals.append(abs(r.surface["s"]))
        e_vals.append(abs(r.surface["e"]))
    slope = np.polyfit(np.log(lam0s), np.log(s_vals), 1)[0]
    assert abs(slope - 1.0) < 0.1
    # e grows like a + b log(lam0): the linear fit in log lam0 is near-exact
    _, res_, *_ = np.polyfit(np.log(lam0s), e_vals, 1, full=True)
    ss_tot = np.sum((e_vals - np.mean(e_vals)) ** 2)
    assert 1 - res_[0] / ss_tot > 0.99


def test_robin_moment_oracles():
    # 40-digit half-line quadrature of the stabilized image integrand at
    # c = 1, lam = 2 (heat time 1/4):
    # f(u) = exp(-2u^2)/sqrt(2 pi) - (1/2) erfcx((2u + 1/2)/sqrt 2) e^{-2u^2}
    # m0 = int f du, m1 = (1/2) int u f du.
    m0, m1 = surface_moments(BoundaryKind(Wall.ROBIN, 1.0), 2.0, MASS)
    assert m0 == pytest.approx(0.099618834720398069828, rel=1e-10)
    assert m1 == pytest.approx(0.025322797589621880344, rel=1e-10)


def test_robin_moment_limits():
    n0, n1 = surface_moments(NEUMANN, 2.0, MASS)
    r0, r1 = surface_moments(BoundaryKind(Wall.ROBIN, 0.0), 2.0, MASS)
    assert (r0, r1) == (n0, n1)
    d0, d1 = surface_moments(DIRICHLET, 2.0, MASS)
    big0, big1 = surface_moments(BoundaryKind(Wall.ROBIN, 1e6), 2.0, MASS)
    assert big0 == pytest.approx(d0, rel=1e-3)
    assert big1 == pytest.approx(d1, rel=1e-3)


def test_rate_h_matches_closed_form_e_rate():
    _, de = surface_rates(NEUMANN, 2.0, 1.0, MASS)
    dh = surface_rate_h(NEUMANN, 2.0, 1.0, MASS)
    assert dh == pytest.approx(de, rel=1e-10)


def test_dirichlet_tadpole_rejected():
    with pytest.raises(ValueError):
        integrate_surface_tadpole(1.0, MASS, 0.0, "dirichlet", LAM0)
    with pytest.raises(ValueError):
        integrate_surface_tadpole(1.0, MASS, 0.0, "free", LAM0)


def test_dirichlet_surface_check_cauchy():
    rep = dirichlet_surface_check(1.0, MASS, 1.0, lam0_list=(20.0, 40.0))
    assert rep["relative_changes"][-1] < 0.25
    assert rep["surface_counterterms"] == {"s": 0.0, "e": 0.0, "h": 0.0}


def test_surface_profile_signs_and_decay():
    zs = np.array([0.1, 0.5, 2.0])
    gn = surface_profile(NEUMANN, 1.0, MASS, 1.0, LAM0, zs)
    gd = surface_profile(DIRICHLET, 1.0, MASS, 1.0, LAM0, zs)
    assert np.all(gn > 0)
    assert np.all(gd < 0)
    assert np.allclose(gn, -gd)
    assert abs(gn[-1]) < abs(gn[0])
    # vanishes when the running scale already sits at the starting scale
    assert np.all(surface_profile(NEUMANN, 1.0, MASS, LAM0, LAM0, zs) == 0)


def test_two_point_rate_splits_exactly():
    z = np.linspace(0.0, 3.0, 50)
    for kind in (NEUMANN, DIRICHLET, BoundaryKind(Wall.ROBIN, 0.7)):
        assert two_point_flow_residual(kind, 1.5, 1.0, MASS, z) < 1e-14


def test_four_point_local_part_renormalized_to_zero():
    z = np.linspace(0.0, 5.0, 16)
    # at or below the infrared renormalization point the coefficient is 0
    assert np.all(_c_profile(z, MASS / 100.0, 20.0, 1.0, MASS) == 0.0)
    v1 = _c_profile(z, 2.0, 20.0, 1.0, MASS)
    v3 = _c_profile(z, 2.0, 20.0, 3.0, MASS)
    # every one-loop four-point term carries two powers of the coupling
    assert np.allclose(v3, 9.0 * v1, rtol=1e-12)


def test_four_point_validation():
    with pytest.raises(ValueError):
        one_loop_four_point(1.0, MASS, "robin")
    with pytest.raises(ValueError):
        one_loop_four_point(1.0, MASS, "bulk", kinematics="generic")


def test_extraction_recovers_bulk_coefficient():
    cts = integrate_bulk_tadpole(1.0, MASS, LAM0)
    obj = tadpole_object(cts, MASS)
    terms = extract_relevant_terms(obj, "bulk")
    assert terms["a"][0] == pytest.approx(A_UV, rel=1e-9)
    assert np.all(terms["s"] == 0.0) and np.all(terms["d"] == 0.0)
    # constant momentum profile -> zero slope
    assert abs(terms["b"][0]) < 1e-10


def test_extraction_momentum_stencil():
    cts = integrate_bulk_tadpole(1.0, MASS, LAM0)
    obj = tadpole_object(cts, MASS)
    obj = dataclasses.replace(obj, p_dependence=lambda p: 0.25 * p * p)
    terms = extract_relevant_terms(obj, "bulk")
    assert terms["b"][0] == pytest.approx(0.25, rel=1e-9)


def test_extraction_requires_zero_momenta():
    cts = integrate_bulk_tadpole(1.0, MASS, LAM0)
    obj = tadpole_object(cts, MASS)
    obj.meta["momenta"] = 0.3
    with pytest.raises(ValueError):
        extract_relevant_terms(obj, "bulk")
    obj.meta["momenta"] = 0.0
    with pytest.raises(ValueError):
        extract_relevant_terms(obj, "everywhere")


def test_robin_dirichlet_limit_report():
    rep = robin_dirichlet_limit(1.0, MASS, 1.0, 20.0,
                                c_list=(10.0, 20.0, 40.0))
    gaps = [r["gap"] for r in rep["rows"]]
    assert rep["gaps_decreasing"]
    assert gaps[-1] < gaps[0]
    assert rep["neumann_gap"] > 0.0
    assert rep["richardson_rel_error"] < 0.25
    with pytest.raises(ValueError):
        robin_dirichlet_limit(1.0, MASS, 1.0, 20.0, c_list=(10.0, 5.0))


def test_amputation_orderings():
    rep = amputation_comparison(s_ct=0.1, e_ct=-0.02, c=1.0, m=MASS,
                                p=0.7, y1=0.6, y2=1.1)
    q = math.sqrt(2.0 * (0.7 ** 2 + MASS ** 2))
    assert rep["decay_rate"] == pytest.approx(q, rel=1e-12)
    assert rep["strict_one"] and rep["strict_both"]
    assert not rep["degenerate_equalities"]
    assert rep["derivative_wall_first"] > 0
    assert rep["derivative_bulk_first"] < 0


def test_amputation_degenerate_equality():
    rep = amputation_comparison(s_ct=0.1, e_ct=0.0, c=1.0, m=MASS,
                                p=0.7, y1=0.6, y2=1.1)
    assert rep["degenerate_equalities"]
    assert rep["equal_one"]
    with pytest.raises(ValueError):
        amputation_comparison(0.1, 0.0, 1.0, MASS, 0.7, 0.6, -1.0)


def test_power_counting_gap_value():
    rep = power_counting_gap(mass=MASS)
    assert abs(rep["gap"] - 1.0) < 0.2


def test_power_counting_bulk_odd_moment_zero():
    rep = power_counting_probe("bulk", r1=1, mass=MASS)
    assert rep.get("identically_zero", False)


def test_power_counting_errors():
    with pytest.raises(ValueError):
        power_counting_probe("bulk", r1=3)
    with pytest.raises(ValueError):
        power_counting_probe("nowhere")
    with pytest.raises(ValueError):
        power_counting_probe("surface", n_points=3)


def test_schedule_and_grid_validation():
    sched = default_schedule(LAM0, MASS)
    assert sched[0] == LAM0
    assert sched[-1] == 0.0
    assert np.all(np.diff(sched) < 0)
    with pytest.raises(ValueError):
        default_schedule(MASS / 200.0, MASS)
    with pytest.raises(ValueError):
        GridSpec(z_nodes=np.array([0.5, 1.0]), p_values=np.array([0.0]),
                 lambda_schedule=np.array([2.0, 1.0, 0.0]))
    with pytest.raises(ValueError):
        GridSpec(z_nodes=np.array([0.0, 1.0]), p_values=np.array([0.0]),
                 lambda_schedule=np.array([1.0, 2.0]))
