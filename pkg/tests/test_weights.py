"""Weight-factor tests: closed-form oracles, invariants, estimate sweeps."""

import math

import numpy as np
import pytest

from boundaryflow import forests as F
from boundaryflow import weights as W
from boundaryflow.kernels import bulk
from boundaryflow.propagators import CutoffPair


def _simple_query(delta=0.2, lam=1.0, lam0=10.0, root=None):
    return W.WeightQuery(positions={1: 0.9}, tau_set={1: 0.5},
                         cutoffs=CutoffPair(lam, lam0), delta=delta,
                         root=root)


def _single_chain_forest():
    return list(F.enumerate_forests(1, 1))[0]


def test_pointwise_factor_is_kernel_product():
    forest = _single_chain_forest()
    tree = forest.all_trees()[0]
    lines = W.LineParams(internal=2.0, surface=math.sqrt(1.2 / 0.35))
    q = _simple_query()
    u = 0.37
    got = W.weight_factor(forest, lines, q,
                          {tree.internal_vertices()[0]: u})
    # doubled external line time 2*(1+delta)*tau = 1.2, surface line 0.35
    expected = float(bulk(1.2, 0.9, u) * bulk(0.35, u, 0.0))
    assert got == pytest.approx(expected, rel=1e-13)


def test_integrated_chain_oracle():
    # Recipe: 40-digit quadrature of
    # int_0^inf pB(1.2; 0.9, u) pB(0.35; u, 0) du.
    oracle = 0.16085587790292305316
    forest = _single_chain_forest()
    lines = W.LineParams(internal=2.0, surface=math.sqrt(1.2 / 0.35))
    got = W.integrate_positions(forest, lines, _simple_query())
    assert got == pytest.approx(oracle, rel=1e-12)


def test_trivial_globals():
    q = _simple_query()
    assert W.global_weight_factor(0, 1, q, "surface") == 1.0
    assert W.global_weight_factor(1, 0, _simple_query(root=0.4),
                                  "rooted") == 1.0


def test_global_positive_and_refinement_monotone():
    q = _simple_query()
    base = W.global_weight_factor(1, 1, q, "surface")
    refined = W.global_weight_factor(1, 1, q, "surface", refine_sup=True)
    assert base > 0
    assert refined >= base * (1 - 1e-12)


def test_query_validation():
    with pytest.raises(ValueError):
        W.WeightQuery(positions={1: 0.5}, tau_set={1: -1.0},
                      cutoffs=CutoffPair(1.0, 10.0), delta=0.1)
    with pytest.raises(ValueError):
        W.WeightQuery(positions={1: 0.5}, tau_set={1: 1.0},
                      cutoffs=CutoffPair(1.0, 10.0), delta=-0.1)


def test_capacity_guard():
    # a chain with more internal vertices than the supported cap
    path = [F.ext(1)] + [("z", k) for k in range(W.MAX_INTERNAL + 1)] \
        + [F.SURFACE]
    tree = F.Tree.from_edges("surface", 3,
                             list(zip(path[:-1], path[1:])))
    forest = F.Forest(F.Partition.over([(1,)]), {(1,): tree}, 3)
    lines = W.LineParams(internal=1.0, surface=1.0)
    with pytest.raises(W.CapacityError):
        W.integrate_positions(forest, lines, _simple_query())


def test_reduction_sweep_small():
    rep = W.check_reduction_lemma(n_samples=20, seed=1)
    assert rep["n_samples"] == 20
    assert rep["spread"] < 1e3
    assert all(r > 0 for r in rep["ratios"])


def test_fusion_sweeps_small():
    rep = W.check_fusion_lemmas("forest_forest", n_samples=15, seed=2)
    assert rep["violations"] == 0
    rep2 = W.check_fusion_lemmas("tree_forest", n_samples=15, seed=2)
    assert rep2["spread"] < 1e3


def test_chain_collapse_sweep_small():
    rep = W.check_chain_collapse(n_samples=20, seed=3)
    assert rep["violations"] == 0


def test_chain_collapse_bounds_direct():
    tree = W.three_branch_tree(2, 1, 1)
    q = W.WeightQuery(positions={1: 0.6, 2: 1.1, 3: 0.4},
                      tau_set={1: 0.5, 2: 0.8, 3: 0.6},
                      cutoffs=CutoffPair(1.0, 10.0), delta=0.1)
    lines = W.LineParams(internal=1.5, surface=1.2)
    rep = W.chain_collapse(tree, lines, q)
    assert rep["lower_ok"] and rep["upper_ok"]
    assert rep["exact"] <= rep["single_bound"] * (1 + 1e-12)
    assert rep["single_bound"] <= rep["sandwich_factor"] * rep["exact"] \
        * (1 + 1e-12)


def test_testfunction_sweep_small():
    reps = W.check_testfunction_lemmas(n_samples=10, seed=4)
    for name, rep in reps.items():
        if isinstance(rep, dict) and "violations" in rep:
            assert rep["violations"] == 0, name


def test_determinism():
    a = W.check_reduction_lemma(n_samples=5, seed=42)
    b = W.check_reduction_lemma(n_samples=5, seed=42)
    assert a["ratios"] == b["ratios"]
    c = W.check_reduction_lemma(n_samples=5, seed=43)
    assert a["ratios"] != c["ratios"]
