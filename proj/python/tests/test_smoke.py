import math

import numpy as np
import pytest

import toriclab as tl


def test_exp1d_jet_and_weights():
    u = tl.make_exp1d(1.0)
    jet = tl.evaluate_jet(u, np.array([0.0]), 5)
    assert jet.value == pytest.approx(1.0)
    assert jet.hess[0, 0] == pytest.approx(1.0)
    assert jet.fifth.shape == (1,) * 5
    w = u.weights
    assert w.v[0] == 1.0 and w.c == 0.0
    assert abs(tl.ma_residual(jet, w)) < 1e-15


def test_curvature_shapes_on_quartic():
    q = tl.field({"family": "polynomial", "dimension": 2,
                  "terms": [{"coef": 0.5, "exponents": [2, 0]}, {"coef": 0.5, "exponents": [0, 2]},
                            {"coef": 0.1, "exponents": [1, 3]}, {"coef": 0.125, "exponents": [2, 2]}]})
    c = tl.curvature(tl.evaluate_jet(q, np.array([0.1, 0.2]), 3))
    assert c.riemann.shape == (2, 2, 2, 2)
    assert c.christoffel.shape == (2, 2, 2)
    assert np.allclose(c.ricci, c.ricci.T)
    assert c.refined_discrepancy is None
    assert c.to_dict()["riemann"]["shape"] == [2, 2, 2, 2]


def test_diagnose_bochner_slack_half_at_origin():
    u = tl.make_exp1d(1.0)
    d = tl.diagnose(tl.evaluate_jet(u, np.array([0.0]), 5), u.weights, True)
    assert d["bochner"]["slack"] == pytest.approx(0.5, abs=1e-9)
    assert abs(d["ma_residual"]) < 1e-12


def test_reconstruction_and_wrong_weights():
    u = tl.make_product([tl.make_exp1d(1.0), tl.make_xlogx1d(1.0)])
    jet = tl.evaluate_jet(u, np.array([0.2, 0.3]), 3)
    s = tl.assemble_metric(jet, u.weights)
    assert max(abs(r) for r in s["soliton_residual"]) < 1e-10
    assert tl.darboux_check(jet, u.weights)["pass"]
    e = tl.make_exp1d(1.0)
    wrong = tl.WeightData(np.array([2.0]), np.array([0.0]), 0.0)
    assert tl.soliton_residual(tl.evaluate_jet(e, np.array([0.4]), 3), wrong)[0] == pytest.approx(1.0)


def test_solver_recovers_exp1d():
    e = tl.make_exp1d(1.0)
    h = 1.0 / 32
    out = tl.solve_dirichlet(np.array([-1.0]), np.array([1.0]), h, e.weights, e, 1e-10, 25)
    assert out["converged"]
    xs = np.linspace(-1.0, 1.0, out["values"].shape[0])
    assert np.max(np.abs(out["values"] - np.exp(-xs))) <= h * h


def test_scans_and_cutoff():
    e = tl.make_exp1d(1.0)
    r = tl.radial_scan(e, e.weights, np.array([0.0]), np.array([1.0]), 1e-2, 400, False)
    assert r["truncated"]
    assert r["max_radius"] == pytest.approx(2.0, abs=2e-2)
    lv = tl.liouville_scan(e, e.weights, np.array([0.0]), [1.5, 4.0])
    assert lv["bounded"]
    assert [x["feasible"] for x in lv["entries"]] == [True, False]
    p = tl.cutoff_eta(2.0, 0.5, 1001)
    assert p["certified"]


def test_errors_carry_kind():
    u = tl.make_xlogx1d(1.0)
    with pytest.raises(tl.ToricLabError) as info:
        tl.evaluate_jet(u, np.array([-1.0]), 2)
    assert info.value.kind == "PointOutsideDomain"
    with pytest.raises(tl.ToricLabError) as info:
        tl.field({"family": "banana"})
    assert info.value.kind == "ConfigError"


def test_flatness_of_quadratic():
    q = tl.make_quadratic(np.array([[2.0, 0.5], [0.5, 1.0]]))
    pts = tl.sample_interior(q.domain, 10, 3)
    v = tl.flatness_check(q, pts)
    assert v["flat"] and v["variation"] == 0.0
    assert v["verdict"] == "flat (C*)^2 model"
    assert tl.quadratic_rigidity_deviation(q, pts) <= 1e-12
    assert math.isfinite(tl.sigma(tl.evaluate_jet(q, pts[0], 3)))
