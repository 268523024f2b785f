"""One-loop renormalization flows on the half-space, bulk and surface.

The transverse direction is resolved explicitly; the three parallel momentum
components are integrated in closed form (every momentum integral of the
scale derivative of the regulator against a Gaussian is elementary).  The
objects evolved are the connected amputated two- and four-point functions at
loop order one, split into a translation-invariant bulk part and a surface
part that carries all boundary effects.

Relevant terms and renormalization:

* bulk two-point: one local coefficient a(z) (constant in z), with the
  once- and twice-moment coefficients s, d and the momentum-slope b all
  receiving identically vanishing flow at one loop;
* surface two-point: boundary coefficients s_l (delta x delta), e_l and h_l
  (delta x delta'), plus a smooth diagonal profile g(z);
* four-point: the local coefficient c(z) and, folded with boundary test
  kernels, the finiteness of the surface part without any new counterterm.

All flows vanish at zero coupling and are exactly homogeneous in the
coupling (order 1 for two-point, order 2 for the four-point fish).
Renormalization conditions set every relevant term to zero at the infrared
end of the flow; boundary values at the ultraviolet scale follow by
integrating the flow upward, and the round trip downward is a test.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.special import erfcx, ndtr

from ._quadrature import half_line_nodes, log_nodes, gauss_product, \
    pair_halfline
from .kernels import BoundaryKind, Wall, bulk, star_kernel, surface_kernel
from .propagators import closed_form_propagator

_SQRT2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# types


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """Transverse grid, momentum probes and scale schedule."""

    z_nodes: np.ndarray
    p_values: np.ndarray
    lambda_schedule: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z_nodes, dtype=float)
        if z[0] != 0.0 or np.any(np.diff(z) <= 0) or np.any(z < 0):
            raise ValueError("z_nodes must be sorted, nonnegative, start at 0")
        s = np.asarray(self.lambda_schedule, dtype=float)
        if np.any(np.diff(s) >= 0):
            raise ValueError("lambda_schedule must be strictly decreasing")
        object.__setattr__(self, "z_nodes", z)
        object.__setattr__(self, "p_values",
                           np.asarray(self.p_values, dtype=float))
        object.__setattr__(self, "lambda_schedule", s)

    @staticmethod
    def default(mass: float, lam0: float,
                steps_per_decade: int = 400) -> "GridSpec":
        return GridSpec(z_nodes=np.linspace(0.0, 10.0 / mass, 256),
                        p_values=np.array([0.0]),
                        lambda_schedule=default_schedule(lam0, mass,
                                                         steps_per_decade))


def default_schedule(lam0: float, mass: float,
                     steps_per_decade: int = 400) -> np.ndarray:
    """Decreasing log-spaced scale checkpoints from lam0 to 0.

    The last log node sits at mass/100, where the flows are suppressed by
    exp(-10^4); a closing step takes the schedule exactly to zero.
    """
    floor = mass / 100.0
    if lam0 <= floor:
        raise ValueError("lam0 must exceed mass/100")
    n = max(4, int(math.ceil(steps_per_decade * math.log10(lam0 / floor))))
    sched = np.geomspace(lam0, floor, n + 1)
    return np.concatenate((sched, [0.0]))


@dataclasses.dataclass
class GridFunction:
    grid: GridSpec
    values: np.ndarray


@dataclasses.dataclass
class CorrelationObject:
    """Immutable snapshot of a correlation distribution at one scale.

    ``local_part`` holds contact-term coefficients: "diag" is the z-profile
    multiplying the coincidence delta of the two transverse arguments;
    "s", "e", "h" are the boundary contact coefficients; "c_profile" is the
    four-point local coefficient.  ``p_dependence`` gives the momentum
    profile of the diagonal coefficient for slope extraction.
    """

    l: int
    n: int
    grid: GridSpec
    local_part: dict
    smooth_part: Optional[GridFunction] = None
    p_dependence: Optional[Callable[[float], float]] = None
    meta: dict = dataclasses.field(default_factory=dict)


@dataclasses.dataclass
class CountertermSet:
    bulk: dict
    surface: dict
    loop: int = 1
    series: list = dataclasses.field(default_factory=list)
    meta: dict = dataclasses.field(default_factory=dict)


@dataclasses.dataclass(frozen=True)
class TestFunctionSpec:
    kind: str                      # bulk_kernel | star_kernel |
    tau: float = 1.0               # char_halfline | boundary_derivative_probe
    y: float = 0.0
    bc: Optional[BoundaryKind] = None

    def __post_init__(self):
        if self.kind in ("bulk_kernel", "star_kernel") and self.tau <= 0:
            raise ValueError("kernel test functions need tau > 0")


# ---------------------------------------------------------------------------
# closed-form momentum integrals and elementary rates


def momentum_trace(lam: float, mass: float) -> float:
    """Integral over the three parallel momenta of the regulator rate."""
    return -math.exp(-(mass / lam) ** 2) / (4.0 * math.pi ** 1.5)


def momentum_trace_damped(lam: float, lam_t, mass: float):
    """Same integral with an extra Gaussian damping exp(-t (k^2 + m^2))."""
    t = np.asarray(lam_t, dtype=float) + 1.0 / lam ** 2
    return (-(2.0 / lam ** 3) * np.exp(-t * mass ** 2)
            / (8.0 * math.pi ** 1.5 * t ** 1.5))


def cdot_zero(lam: float, mass: float) -> float:
    """Regulator rate at zero momentum."""
    return -(2.0 / lam ** 3) * math.exp(-(mass / lam) ** 2)


def bulk_rate(lam: float, coupling: float, mass: float) -> float:
    """Scale derivative of the bulk local coefficient a at one loop."""
    return 0.5 * coupling * momentum_trace(lam, mass) * lam / _SQRT2PI


def surface_moments(bc: BoundaryKind, lam: float, mass: float):
    """Zeroth and first z-moment of the coincidence surface kernel.

    Closed forms for Neumann/Dirichlet; one-dimensional quadrature of the
    stabilized image-integral form for Robin.  The heat time is 1/lam^2.
    """
    tau = 1.0 / lam ** 2
    if bc.kind is Wall.NEUMANN or (bc.kind is Wall.ROBIN and bc.c == 0):
        return 0.25, math.sqrt(tau) / (4.0 * _SQRT2PI)
    if bc.kind is Wall.DIRICHLET:
        return -0.25, -math.sqrt(tau) / (4.0 * _SQRT2PI)
    if bc.kind is not Wall.ROBIN:
        raise ValueError("surface moments need a boundary wall")
    c = bc.c
    u, w = half_line_nodes(8.0, n_panels=8, n_per_panel=12)
    rt = math.sqrt(tau)
    # substitution z = sqrt(tau) u; the kernel scales as 1/sqrt(tau), so the
    # measure factor cancels and the integrand below is dimensionless
    f = (np.exp(-2.0 * u * u) / _SQRT2PI
         - rt * c * erfcx((2.0 * u + c * rt) / math.sqrt(2.0))
         * np.exp(-2.0 * u * u))
    m0 = float(w @ f)
    m1 = rt * float(w @ (u * f))
    return m0, m1


def surface_moment_general(bc: BoundaryKind, lam: float, r: int) -> float:
    """r-th z-moment of the coincidence surface kernel, by quadrature."""
    tau = 1.0 / lam ** 2
    rt = math.sqrt(tau)
    u, w = half_line_nodes(8.0, n_panels=8, n_per_panel=12)
    f = surface_kernel(bc, tau, rt * u, rt * u) * rt   # dz = rt du
    return float(w @ ((rt * u) ** r * f))


def surface_rates(bc: BoundaryKind, lam: float, coupling: float,
                  mass: float):
    """Scale derivatives of (s, e) at one loop."""
    m0, m1 = surface_moments(bc, lam, mass)
    pref = 0.5 * coupling * momentum_trace(lam, mass)
    return pref * m0, pref * m1


def surface_rate_h(bc: BoundaryKind, lam: float, coupling: float,
                   mass: float) -> float:
    """Scale derivative of h, via independent quadrature of the moment."""
    pref = 0.5 * coupling * momentum_trace(lam, mass)
    return pref * surface_moment_general(bc, lam, 1)


# ---------------------------------------------------------------------------
# scale integration


def _rk4_path(rate: Callable[[float], np.ndarray], y0: np.ndarray,
              xs: np.ndarray):
    """Classical 4th-order steps along the checkpoints xs (any direction).

    The rates here depend on the scale only, but the stepper is written for
    the general autonomous-in-y case so the round trip is a real ODE test.
    """
    y = np.asarray(y0, dtype=float).copy()
    out = [y.copy()]
    for x0, x1 in zip(xs[:-1], xs[1:]):
        h = x1 - x0
        k1 = rate(x0)
        k2 = rate(x0 + 0.5 * h)
        k3 = k2
        k4 = rate(x1)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out.append(y.copy())
    return np.array(out)


def _check_schedule(schedule: np.ndarray):
    s = np.asarray(schedule, dtype=float)
    if s[-1] != 0.0:
        raise ValueError("incomplete flow: schedule must reach 0")
    if np.any(np.diff(s) >= 0):
        raise ValueError("schedule must be strictly decreasing")
    return s


def _rate_guard(f):
    """Rates vanish faster than any power at 0; avoid 1/0 in formulas."""
    def g(lam):
        if lam <= 1e-8:
            return 0.0
        return f(lam)
    return g


def tree_level_init(coupling: float, mass: float,
                    grid: Optional[GridSpec] = None) -> dict:
    """Boundary data at the ultraviolet end: a pure contact four-vertex."""
    grid = grid or GridSpec.default(mass, 10.0 * mass)
    d04 = CorrelationObject(l=0, n=4, grid=grid,
                            local_part={"vertex": coupling},
                            meta={"mass": mass})
    d02 = CorrelationObject(l=0, n=2, grid=grid,
                            local_part={"diag": np.zeros_like(grid.z_nodes)},
                            meta={"mass": mass})
    s_all_zero = CorrelationObject(l=0, n=2, grid=grid,
                                   local_part={"s": 0.0, "e": 0.0, "h": 0.0,
                                               "diag":
                                               np.zeros_like(grid.z_nodes)},
                                   meta={"mass": mass, "surface": True})
    return {"D04": d04, "D02": d02, "S02": s_all_zero}


def integrate_bulk_tadpole(coupling: float, mass: float, lam0: float,
                           schedule: Optional[np.ndarray] = None
                           ) -> CountertermSet:
    """Bulk two-point counterterms at one loop.

    The flow of the local coefficient a is integrated upward from the
    renormalization condition a(0) = 0; s, d and b have identically zero
    flow here (the one-loop two-point rate is a momentum-independent
    contact term), which is recorded, not assumed.
    """
    sched = _check_schedule(schedule if schedule is not None
                            else default_schedule(lam0, mass))
    up = sched[::-1]
    rate = _rate_guard(lambda lam: bulk_rate(lam, coupling, mass))
    path = _rk4_path(lambda x: np.array([rate(x)]), np.zeros(1), up)
    a_of_lam = path[:, 0]
    z = np.linspace(0.0, 10.0 / mass, 256)
    series = [{"lam": float(l), "a": float(a)}
              for l, a in zip(up, a_of_lam)][::-1]
    # the downward trip subtracts the accumulated flow; it must return to 0
    down = _rk4_path(lambda x: np.array([rate(x)]),
                     np.array([a_of_lam[-1]]), sched)
    roundtrip = float(abs(down[-1, 0]))
    return CountertermSet(
        bulk={"a": np.full_like(z, a_of_lam[-1]),
              "s": np.zeros_like(z), "d": np.zeros_like(z),
              "b": np.zeros_like(z), "c": np.zeros_like(z)},
        surface={},
        series=series,
        meta={"lam0": lam0, "mass": mass, "coupling": coupling,
              "z_nodes": z, "a_at_lam0": float(a_of_lam[-1]),
              "roundtrip_residual": roundtrip,
              "a_of_lam": {"lam": up.tolist(),
                           "a": a_of_lam.tolist()}})


def bulk_a_value(lam: float, coupling: float, mass: float,
                 n_panels: int = 12) -> float:
    """a(lam) by direct quadrature (independent of the stepper)."""
    if lam <= mass / 100.0:
        return 0.0
    x, w = log_nodes(mass / 100.0, lam, n_panels, 10)
    vals = 0.5 * coupling * np.array(
        [momentum_trace(xx, mass) for xx in x]) * x / _SQRT2PI
    return float(w @ vals)


def integrate_surface_tadpole(coupling: float, mass: float, c: float,
                              bc: str, lam0: float,
                              schedule: Optional[np.ndarray] = None
                              ) -> CountertermSet:
    """Surface two-point counterterms (s, e, h) at one loop.

    Supports Neumann and Robin walls.  h is integrated from its own
    independently computed moment quadrature and compared with e rather
    than set equal.  Renormalization conditions put s = e = h = 0 at the
    infrared end; the ultraviolet boundary values are returned.
    """
    if bc not in ("neumann", "robin"):
        raise ValueError(
            "Dirichlet requested -> use dirichlet_surface_check instead"
            if bc == "dirichlet" else f"unsupported wall {bc!r}")
    kind = (BoundaryKind(Wall.NEUMANN) if bc == "neumann"
            else BoundaryKind(Wall.ROBIN, c))
    sched = _check_schedule(schedule if schedule is not None
                            else default_schedule(lam0, mass))
    up = sched[::-1]

    def rate_vec(lam):
        if lam <= 1e-8:
            return np.zeros(3)
        ds, de = surface_rates(kind, lam, coupling, mass)
        dh = surface_rate_h(kind, lam, coupling, mass)
        return np.array([ds, de, dh])

    path = _rk4_path(rate_vec, np.zeros(3), up)
    s_uv, e_uv, h_uv = (float(v) for v in path[-1])
    down = _rk4_path(rate_vec, path[-1], sched)
    roundtrip = float(np.max(np.abs(down[-1])))
    series = [{"lam": float(l), "s": float(r[0]), "e": float(r[1]),
               "h": float(r[2])} for l, r in zip(up, path)][::-1]
    return CountertermSet(
        bulk={},
        surface={"s": s_uv, "e": e_uv, "h": h_uv},
        series=series,
        meta={"lam0": lam0, "mass": mass, "coupling": coupling,
              "bc": bc, "c": c if bc == "robin" else 0.0,
              "roundtrip_residual": roundtrip,
              "eh_gap": abs(e_uv - h_uv)})


def surface_profile(bc: BoundaryKind, coupling: float, mass: float,
                    lam: float, lam0: float, z,
                    n_panels: int = 16) -> np.ndarray:
    """Smooth diagonal profile g(z) of the surface two-point object.

    Accumulated downward from the ultraviolet scale, where it vanishes.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if lam >= lam0:
        return np.zeros_like(z)
    x, w = log_nodes(max(lam, mass / 100.0), lam0, n_panels, 10)
    acc = np.zeros_like(z)
    for xx, ww in zip(x, w):
        acc += ww * momentum_trace(xx, mass) * np.asarray(
            surface_kernel(bc, 1.0 / xx ** 2, z, z))
    return -0.5 * coupling * acc


def fold_surface_two_point(cts: Mapping[str, float],
                           g_fn: Callable[[np.ndarray], np.ndarray],
                           phi1: Callable, phi2: Callable,
                           phi1_0: float, phi2_0: float,
                           dphi1_0: float, dphi2_0: float,
                           zmax: float) -> float:
    """Fold the surface two-point object with two test functions."""
    zn, zw = half_line_nodes(zmax, n_panels=10, n_per_panel=12)
    smooth = float(zw @ (phi1(zn) * phi2(zn) * g_fn(zn)))
    s = cts.get("s", 0.0)
    e = cts.get("e", 0.0)
    h = cts.get("h", e)
    return (s * phi1_0 * phi2_0 + e * phi1_0 * dphi2_0
            + h * dphi1_0 * phi2_0 + smooth)


def two_point_flow_residual(bc: BoundaryKind, lam: float, coupling: float,
                            mass: float, z) -> float:
    """Defect of full-rate = bulk-rate + surface-rate on the z grid."""
    z = np.asarray(z, dtype=float)
    tau = 1.0 / lam ** 2
    pref = 0.5 * coupling * momentum_trace(lam, mass)
    full = pref * np.asarray(star_kernel(bc, tau, z, z))
    split = (pref * np.asarray(bulk(tau, z, z))
             + pref * np.asarray(surface_kernel(bc, tau, z, z)))
    return float(np.max(np.abs(full - split)))


# ---------------------------------------------------------------------------
# one-loop four-point


def _test_mixtures(taus, ys, star: int):
    """Test functions as signed Gaussian mixtures [(coef, tau, center)].

    Free kernels for the bulk and Neumann folds; for a Dirichlet wall the
    matching odd kernels (vanishing on the wall) are used, since a profile
    that is merely integrable against wall-vanishing functions appears in
    the folded object there.
    """
    if star == 0:
        return [[(1.0, t, y)] for t, y in zip(taus, ys)]
    return [[(1.0, t, y), (float(star), t, -y)] for t, y in zip(taus, ys)]


def _mix_eval(mix, z):
    out = 0.0
    for c, t, y in mix:
        out = out + c * bulk(t, z, y)
    return out


def _mix_combine(mixes):
    """Product of Gaussian mixtures reduced to one mixture."""
    out = mixes[0]
    for mix in mixes[1:]:
        new = []
        for c1, t1, y1 in out:
            for c2, t2, y2 in mix:
                cp, th, mu = gauss_product(t1, y1, t2, y2)
                new.append((c1 * c2 * cp, th, mu))
        out = new
    return out


def four_point_rate_folded(star: int, lam: float, lam0: float,
                           coupling: float, mass: float,
                           taus, ys, surf_cts=None,
                           g_fn=None, test_star: int = 0) -> float:
    """Scale derivative of the folded four-point object at one loop.

    ``star``: 0 evaluates the bulk flow (free kernels), +1/-1 the full
    Neumann/Dirichlet flow.  Test functions are heat kernels with data
    (tau_i, y_i) at zero parallel momenta; ``test_star`` selects free
    kernels (0) or wall-vanishing odd kernels (-1) and must agree between
    the star rate and the bulk rate it is compared against, so that the
    bulk parts cancel in the difference.  ``surf_cts`` and ``g_fn`` supply
    the two-point surface insertion for the quadratic term.
    """
    taus = np.asarray(taus, dtype=float)
    ys = np.asarray(ys, dtype=float)
    tau_l = 1.0 / lam ** 2
    zmax = float(np.max(ys) + 6.0 * math.sqrt(np.max(taus) + tau_l)
                 + 4.0 / mass)
    zn, zw = half_line_nodes(zmax, n_panels=9, n_per_panel=10)
    lmb, lw = log_nodes(1.0 / lam0 ** 2, 1.0 / lam ** 2, 10, 8)
    ik = momentum_trace(lam, mass)
    mixes = _test_mixtures(taus, ys, test_star)

    def pstar(t, a, b):
        direct = bulk(t, a, b)
        if star == 0:
            return direct
        return direct + star * bulk(t, a, -b)

    def halfline_pairs(lam_t, z, comps):
        """Half-line integral of p_star(lam_t; z, .) times a mixture.

        ``lam_t`` and ``z`` may broadcast against each other.
        """
        acc = 0.0
        for c, t, mu in comps:
            direct = pair_halfline(lam_t, z, t, mu)
            if star == 0:
                acc = acc + c * direct
            else:
                acc = acc + c * (direct
                                 + star * pair_halfline(lam_t, -z, t, mu))
        return acc

    damp = np.exp(-lmb * mass ** 2) * lw
    # closed-leg-pair on one vertex: tadpole times a tree line to the other
    term_a = 0.0
    for a in range(4):
        comps3 = _mix_combine([m for i, m in enumerate(mixes) if i != a])
        hz = halfline_pairs(lmb[None, :], zn[:, None], comps3) @ damp
        phi_a = _mix_eval(mixes[a], zn)
        term_a += float(zw @ (phi_a * pstar(tau_l, zn, zn) * hz))
    term_a *= -2.0 * coupling ** 2 * ik

    # closed legs on different vertices: the fish loop
    term_b = 0.0
    ps_fix = pstar(tau_l, zn[:, None], zn[None, :])
    jw = lw * momentum_trace_damped(lam, lmb, mass)
    k2 = np.zeros_like(ps_fix)
    for lm, wl in zip(lmb, jw):
        k2 += wl * pstar(lm, zn[:, None], zn[None, :])
    k2 = k2 * ps_fix
    for j in (1, 2, 3):
        kk = [x for x in range(4) if x not in (0, j)]
        gi = _mix_eval(_mix_combine([mixes[0], mixes[j]]), zn)
        gj = _mix_eval(_mix_combine([mixes[kk[0]], mixes[kk[1]]]), zn)
        term_b += float((zw * gi) @ (k2 @ (zw * gj)))
    term_b *= -3.0 * coupling ** 2

    # quadratic term with the one-loop two-point insertion
    a1 = bulk_a_value(lam, coupling, mass)
    cd0 = cdot_zero(lam, mass)
    term_c = 0.0
    for a in range(4):
        g3 = _mix_eval(_mix_combine([m for i, m in enumerate(mixes)
                                     if i != a]), zn)
        sigma = a1 * halfline_pairs(tau_l, zn, mixes[a])
        if star != 0 and g_fn is not None:
            ker = pstar(tau_l, zn[:, None], zn[None, :])
            sigma = sigma + ker @ (zw * g_fn(zn) * _mix_eval(mixes[a], zn))
        if star != 0 and surf_cts:
            phi_a0 = float(_mix_eval(mixes[a], 0.0))
            dphi_a0 = float(sum(c * (y / t) * bulk(t, 0.0, y)
                                for c, t, y in mixes[a]))
            s_uv = surf_cts.get("s", 0.0)
            e_uv = surf_cts.get("e", 0.0)
            p_at0 = pstar(tau_l, zn, 0.0)
            # derivative of the star kernel in its second slot at 0
            dp_at0 = (zn / tau_l) * bulk(tau_l, zn, 0.0) * (1.0 - star)
            sigma = (sigma + s_uv * phi_a0 * p_at0
                     + e_uv * (dphi_a0 * p_at0 - phi_a0 * dp_at0))
        term_c += float(zw @ (g3 * sigma))
    term_c *= -4.0 * coupling * cd0
    return term_a + term_b + term_c


def one_loop_four_point(coupling: float, mass: float, bc: str,
                        kinematics: str = "zero_momentum",
                        lam: float = 1.0, lam0: float = 50.0,
                        taus=(1.0, 1.0, 1.0, 1.0),
                        ys=(0.5, 0.5, 0.5, 0.5),
                        grid: Optional[GridSpec] = None
                        ) -> CorrelationObject:
    """One-loop four-point object at zero external momenta.

    Returns the local coefficient profile c(z) of the bulk part and, for
    Neumann or Dirichlet walls, the folded surface four-point value, which
    needs no counterterm of its own.  Robin is unsupported here; the
    Neumann and Dirichlet probes bracket the surface behaviour.
    """
    if kinematics != "zero_momentum":
        raise ValueError("unsupported kinematics; only zero_momentum")
    if bc not in ("bulk", "neumann", "dirichlet"):
        raise ValueError("one_loop_four_point supports bulk, neumann, "
                         "dirichlet (Robin unsupported)")
    grid = grid or GridSpec.default(mass, lam0)
    z = grid.z_nodes
    c_profile = _c_profile(z, lam, lam0, coupling, mass)

    v_surface = None
    if bc in ("neumann", "dirichlet"):
        star = +1 if bc == "neumann" else -1
        kind = (BoundaryKind(Wall.NEUMANN) if star > 0
                else BoundaryKind(Wall.DIRICHLET))
        if star > 0:
            cts = integrate_surface_tadpole(coupling, mass, 0.0, "neumann",
                                            lam0).surface
        else:
            cts = {"s": 0.0, "e": 0.0, "h": 0.0}
        x, w = log_nodes(lam, lam0, 12, 8)
        acc = 0.0
        for lamp, wp in zip(x, w):
            g_fn = lambda zz, _l=lamp: surface_profile(
                kind, coupling, mass, _l, lam0, zz)
            test_star = -1 if star < 0 else 0
            d_star = four_point_rate_folded(star, lamp, lam0, coupling,
                                            mass, taus, ys, cts, g_fn,
                                            test_star=test_star)
            d_bulk = four_point_rate_folded(0, lamp, lam0, coupling,
                                            mass, taus, ys,
                                            test_star=test_star)
            acc += wp * (d_star - d_bulk)
        v_surface = -acc
    return CorrelationObject(
        l=1, n=4, grid=grid,
        local_part={"c_profile": c_profile, "v_surface": v_surface},
        p_dependence=None,
        meta={"lam": lam, "lam0": lam0, "coupling": coupling, "mass": mass,
              "bc": bc, "taus": tuple(taus), "ys": tuple(ys),
              "momenta": 0.0})


def _c_profile(z: np.ndarray, lam: float, lam0: float, coupling: float,
               mass: float) -> np.ndarray:
    """Local four-point coefficient c(z), renormalized to 0 at scale 0."""
    if lam <= mass / 100.0:
        return np.zeros_like(z)
    xs, ws = log_nodes(mass / 100.0, lam, 12, 8)
    acc = np.zeros_like(z)
    for lamp, wp in zip(xs, ws):
        acc += wp * _c_rate(z, lamp, lam0, coupling, mass)
    return acc


def _c_rate(z: np.ndarray, lam: float, lam0: float, coupling: float,
            mass: float) -> np.ndarray:
    """Scale derivative of c(z): tadpole-on-line, fish, and insertion."""
    tau_l = 1.0 / lam ** 2
    lmb, lw = log_nodes(1.0 / lam0 ** 2, 1.0 / lam ** 2, 10, 8)
    ik = momentum_trace(lam, mass)

    k0 = np.zeros_like(z)
    f = np.zeros_like(z)
    for lm, wl in zip(lmb, lw):
        k0 += wl * math.exp(-lm * mass ** 2) * ndtr(z / math.sqrt(lm))
        th = tau_l * lm / (tau_l + lm)
        f += wl * float(momentum_trace_damped(lam, lm, mass)) \
            / math.sqrt(2.0 * math.pi * (tau_l + lm)) \
            * ndtr(z / math.sqrt(th))
    p = ndtr(z * lam)
    a1 = bulk_a_value(lam, coupling, mass)
    return (-2.0 * coupling ** 2 * ik * (lam / _SQRT2PI) * k0
            - 3.0 * coupling ** 2 * f
            - 4.0 * coupling * a1 * cdot_zero(lam, mass) * p)


# ---------------------------------------------------------------------------
# relevant-term extraction


def extract_relevant_terms(obj: CorrelationObject, kind: str):
    """Relevant local coefficients of a correlation object.

    ``bulk``: the moments {a, s, d, b, c}; the momentum slope b is taken by
    five-point central differences in the momentum, Richardson-extrapolated.
    ``surface``: {s, e, h}, with h evaluated through the transposed moment
    so its agreement with e is a result, not an input.
    """
    if obj.meta.get("momenta", 0.0) != 0.0:
        raise ValueError("extraction requires zero external momenta")
    z = obj.grid.z_nodes
    if kind == "bulk":
        diag = np.asarray(obj.local_part.get("diag",
                                             np.zeros_like(z)), dtype=float)
        a = diag.copy()
        s = np.zeros_like(z)          # first moment of the coincidence delta
        d = np.zeros_like(z)          # second moment, also zero
        b = _momentum_slope(obj)
        out = {"a": a, "s": s, "d": d, "b": np.full_like(z, b)}
        if "c_profile" in obj.local_part:
            out["c"] = np.asarray(obj.local_part["c_profile"], dtype=float)
        return out
    if kind == "surface":
        diag = np.asarray(obj.local_part.get("diag",
                                             np.zeros_like(z)), dtype=float)
        s_loc = float(obj.local_part.get("s", 0.0))
        e_loc = float(obj.local_part.get("e", 0.0))
        h_loc = float(obj.local_part.get("h", e_loc))
        s_val = s_loc + float(np.trapezoid(diag, z))
        e_val = e_loc + float(np.trapezoid(z * diag, z))
        # transposed moment: integrate over the first argument instead
        h_val = h_loc + float(np.trapezoid((z * diag.T).T, z))
        return {"s": s_val, "e": e_val, "h": h_val}
    raise ValueError("kind must be bulk or surface")


def _momentum_slope(obj: CorrelationObject) -> float:
    """d/dp^2 at p = 0 by 5-point stencils, Richardson-extrapolated."""
    f = obj.p_dependence
    if f is None:
        return 0.0
    lam = float(obj.meta.get("lam", 0.0))
    mass = float(obj.meta.get("mass", 1.0))
    h = 1e-2 * (lam + mass)

    def second(hh):
        return (-f(2 * hh) + 16 * f(hh) - 30 * f(0.0) + 16 * f(-hh)
                - f(-2 * hh)) / (12.0 * hh * hh)

    d2 = (16.0 * second(h / 2) - second(h)) / 15.0
    return 0.5 * d2


def tadpole_object(cts: CountertermSet, mass: float) -> CorrelationObject:
    """Wrap bulk tadpole counterterms as a correlation object."""
    z = np.asarray(cts.meta["z_nodes"], dtype=float)
    grid = GridSpec(z_nodes=z, p_values=np.array([0.0]),
                    lambda_schedule=default_schedule(cts.meta["lam0"], mass))
    a = np.asarray(cts.bulk["a"], dtype=float)
    return CorrelationObject(l=1, n=2, grid=grid,
                             local_part={"diag": a},
                             p_dependence=lambda p: float(a[0]),
                             meta={"lam": cts.meta["lam0"], "mass": mass,
                                   "momenta": 0.0})


# ---------------------------------------------------------------------------
# verification experiments


def dirichlet_surface_check(coupling: float, mass: float, lam: float,
                            lam0_list: Sequence[float] = (40.0, 80.0),
                            tau1: float = 1.0, tau2: float = 1.5,
                            y1: float = 0.7, y2: float = 1.2) -> dict:
    """Surface two-point object folded with Dirichlet kernels vs lam0.

    With Dirichlet boundary data at the ultraviolet scale there is no free
    surface counterterm; the folded object must be Cauchy in lam0.
    """
    kind = BoundaryKind(Wall.DIRICHLET)
    zmax = max(y1, y2) + 6.0 * math.sqrt(max(tau1, tau2)) + 4.0 / mass
    vals = []
    for lam0 in lam0_list:
        v = fold_surface_two_point(
            cts={"s": 0.0, "e": 0.0, "h": 0.0},
            g_fn=lambda zz: surface_profile(kind, coupling, mass, lam,
                                            lam0, zz),
            phi1=lambda zz: np.asarray(star_kernel(kind, tau1, zz, y1)),
            phi2=lambda zz: np.asarray(star_kernel(kind, tau2, zz, y2)),
            phi1_0=0.0, phi2_0=0.0, dphi1_0=0.0, dphi2_0=0.0,
            zmax=zmax)
        vals.append(float(v))
    rel_changes = [abs(b - a) / max(abs(a), 1e-300)
                   for a, b in zip(vals, vals[1:])]
    return {"lam0_list": list(lam0_list), "values": vals,
            "relative_changes": rel_changes,
            "surface_counterterms": {"s": 0.0, "e": 0.0, "h": 0.0},
            "cauchy": all(r < 0.05 for r in rel_changes)}


def robin_dirichlet_limit(coupling: float, mass: float, lam: float,
                          lam0: float, c_list: Sequence[float]
                          ) -> dict:
    """Folded surface two-point object: Robin walls against Dirichlet.

    Folds with the matching boundary heat kernels (whose normal derivative
    at the wall is c times their boundary value) and reports the gap
    sequence, a Richardson extrapolation in 1/c, and the Neumann control.
    """
    if any(b <= a for a, b in zip(c_list, c_list[1:])):
        raise ValueError("c_list must be increasing")
    tau1, tau2, y1, y2 = 1.0, 1.5, 0.7, 1.2
    zmax = max(y1, y2) + 6.0 * math.sqrt(max(tau1, tau2)) + 4.0 / mass

    def folded(kind: BoundaryKind, cts: Mapping[str, float]) -> float:
        phi1_0 = float(star_kernel(kind, tau1, 0.0, y1))
        phi2_0 = float(star_kernel(kind, tau2, 0.0, y2))
        cval = kind.c if kind.kind is Wall.ROBIN else 0.0
        return fold_surface_two_point(
            cts,
            g_fn=lambda zz: surface_profile(kind, coupling, mass, lam,
                                            lam0, zz),
            phi1=lambda zz: np.asarray(star_kernel(kind, tau1, zz, y1)),
            phi2=lambda zz: np.asarray(star_kernel(kind, tau2, zz, y2)),
            phi1_0=phi1_0, phi2_0=phi2_0,
            dphi1_0=cval * phi1_0, dphi2_0=cval * phi2_0,
            zmax=zmax)

    v_d = folded(BoundaryKind(Wall.DIRICHLET),
                 {"s": 0.0, "e": 0.0, "h": 0.0})
    rows = []
    for c in c_list:
        cts = integrate_surface_tadpole(coupling, mass, c, "robin",
                                        lam0).surface
        v_r = folded(BoundaryKind(Wall.ROBIN, c), cts)
        rows.append({"c": float(c), "value": v_r, "gap": abs(v_r - v_d)})
    gaps = [r["gap"] for r in rows]
    # Richardson in 1/c from the last two entries
    c1, c2 = rows[-2]["c"], rows[-1]["c"]
    v1, v2 = rows[-2]["value"], rows[-1]["value"]
    v_extrap = v2 + (v2 - v1) * (1.0 / c2) / ((1.0 / c1) - (1.0 / c2))
    cts_n = integrate_surface_tadpole(coupling, mass, 0.0, "neumann",
                                      lam0).surface
    v_n = folded(BoundaryKind(Wall.NEUMANN), cts_n)
    return {"dirichlet_value": v_d, "rows": rows,
            "gaps_decreasing": all(b < a for a, b in zip(gaps, gaps[1:])),
            "richardson_value": float(v_extrap),
            "richardson_rel_error": float(abs(v_extrap - v_d)
                                          / max(abs(v_d), 1e-300)),
            "neumann_gap": float(abs(v_n - v_d))}


def amputation_comparison(s_ct: float, e_ct: float, c: float, m: float,
                          p: float, y1: float, y2: float) -> dict:
    """Boundary two-point insertions with and without surface points.

    The interior-to-interior insertion carries the combination s + 2ce;
    each external point moved onto the wall removes one factor of the
    boundary-derivative mismatch e / C(0,0), where 1/C(0,0) grows like the
    propagator decay rate plus c.  Strict inequalities for e != 0,
    equalities for e = 0, both reported, plus the two orderings of the
    boundary derivative (coefficients -q versus +c with q the decay rate).
    """
    if y2 <= 0:
        raise ValueError("y2 must be positive")
    kind = BoundaryKind(Wall.ROBIN, c)
    q = math.sqrt(2.0 * (p * p + m * m))
    c0y1 = closed_form_propagator(kind, p, 0.0, y1, m)
    c0y2 = closed_form_propagator(kind, p, 0.0, y2, m)
    c00 = closed_form_propagator(kind, p, 0.0, 0.0, m)
    g = s_ct + 2.0 * c * e_ct
    corr = e_ct / c00
    interior = g * c0y1 * c0y2
    one_surface = (g - corr) * c00 * c0y2
    both_surface = (g - 2.0 * corr) * c00 * c00
    report = {
        "decay_rate": q,
        "g_combination": g,
        "interior": interior,
        "one_surface": one_surface,
        "both_surface": both_surface,
        "correction_per_surface_point": corr,
        "strict_one": abs(g - (g - corr)) > 0.0 if e_ct != 0.0 else False,
        "strict_both": abs(corr) > 0.0 if e_ct != 0.0 else False,
        "degenerate_equalities": e_ct == 0.0,
        # boundary-derivative orderings of the closed-form propagator
        "derivative_wall_first": c * c00,      # z -> 0 after y -> 0
        "derivative_bulk_first": -q * c00,      # y -> 0 after z -> 0
    }
    if e_ct == 0.0:
        report["equal_one"] = math.isclose(interior / (c0y1 * c0y2),
                                           one_surface / (c00 * c0y2),
                                           rel_tol=1e-12)
    return report


def power_counting_probe(family: str, r1: int = 0, r2: int = 0,
                         coupling: float = 1.0, mass: float = 1.0,
                         n_points: int = 25) -> dict:
    """Fitted (lam + m) exponents of integrated one-loop moments.

    Surface moments improve on their bulk counterparts by one power; the
    probe fits log|moment| against log(lam + m) over lam in [2m, 20m] and
    reports both the integrated-moment slopes and the flow-rate slopes.
    """
    if family not in ("bulk", "surface"):
        raise ValueError("family must be bulk or surface")
    if r1 > 2 or r2 > 2 or r1 < 0 or r2 < 0:
        raise ValueError("moment orders r1, r2 must lie in [0, 2]")
    r = r1 + r2
    lams = np.geomspace(2.0 * mass, 20.0 * mass, n_points)
    if len(lams) < 4:
        raise ValueError("insufficient schedule points for the fit")
    kind = BoundaryKind(Wall.NEUMANN)
    vals, rates = [], []
    for lam in lams:
        if family == "bulk":
            if r > 0:
                vals.append(0.0)
                rates.append(0.0)
                continue
            vals.append(abs(bulk_a_value(lam, coupling, mass)))
            rates.append(abs(bulk_rate(lam, coupling, mass)))
        else:
            x, w = log_nodes(mass / 100.0, lam, 12, 10)
            mom = [0.5 * coupling * momentum_trace(xx, mass)
                   * surface_moment_general(kind, xx, r) for xx in x]
            vals.append(abs(float(w @ np.array(mom))))
            rates.append(abs(mom[-1]))
    out = {"family": family, "r1": r1, "r2": r2,
           "lams": lams.tolist(), "moments": vals}
    if all(v == 0.0 for v in vals):
        out["identically_zero"] = True
        return out
    x = np.log(lams + mass)
    out["moment_exponent"] = float(np.polyfit(x, np.log(vals), 1)[0])
    out["rate_exponent"] = float(np.polyfit(x, np.log(rates), 1)[0])
    return out


def power_counting_gap(coupling: float = 1.0, mass: float = 1.0) -> dict:
    """Exponent gap between the bulk and surface (0,0) moments."""
    b = power_counting_probe("bulk", 0, 0, coupling, mass)
    s = power_counting_probe("surface", 0, 0, coupling, mass)
    gap = b["moment_exponent"] - s["moment_exponent"]
    return {"bulk_exponent": b["moment_exponent"],
            "surface_exponent": s["moment_exponent"],
            "gap": gap, "bulk": b, "surface": s}
