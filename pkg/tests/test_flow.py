import dataclasses
import math
import random

import numpy as np
import pytest

from morseq.errors import Mismatch, NonConvergence
from morseq.flow import (TorusChart, classify_xi, count_trajectories, descending_starts,
                         flow_all, integrate, verify_against)
from morseq.instance import builtin, with_records

CHART = TorusChart()


def fd_gradient(chart, t, p, h=1e-5):
    """g^{-1} applied to central differences of f."""
    ft = (chart.f(t + h, p) - chart.f(t - h, p)) / (2 * h)
    fp = (chart.f(t, p + h) - chart.f(t, p - h)) / (2 * h)
    gt, gp = chart.metric(t)
    return np.array([ft / gt, fp / gp])


def test_chart_rejects_bad_radii():
    with pytest.raises(ValueError):
        TorusChart(1.0, 2.0)


def test_critical_values():
    R, r = CHART.R, CHART.r
    vals = {k: float(CHART.f(t, p)) for k, (t, p, _, _) in CHART.critical_points().items()}
    assert vals == pytest.approx({"a": R + r, "b": R - r, "c": -(R - r), "d": -(R + r)})


def test_gradient_vanishes_at_critical_points():
    for t, p, _, _ in CHART.critical_points().values():
        assert np.max(np.abs(CHART.gradient(t, p))) < 1e-15


def test_gradient_against_finite_differences():
    rng = random.Random(0)
    worst = 0.0
    for _ in range(200):
        t, p = rng.uniform(-math.pi, math.pi), rng.uniform(-math.pi, math.pi)
        g = CHART.gradient(t, p)
        fd = fd_gradient(CHART, t, p)
        worst = max(worst, np.linalg.norm(g - fd) / np.linalg.norm(g))
    assert worst <= 1e-6


def test_gradient_tangent_to_fixed_locus():
    for t in (0.0, math.pi):
        for p in np.linspace(-3, 3, 13):
            gt, gp = CHART.gradient(t, p)
            assert abs(gt) < 1e-15
    # at theta = 0, phi = 0 the flow runs along the outer circle
    gt, gp = CHART.gradient(0.0, 0.0)
    assert gt == 0.0 and gp == pytest.approx(1 / (CHART.R + CHART.r))


def test_gradient_is_equivariant():
    rng = random.Random(1)
    for _ in range(100):
        t, p = rng.uniform(-3, 3), rng.uniform(-3, 3)
        a, b = CHART.gradient(t, p), CHART.gradient(-t, p)
        assert abs(a[0] + b[0]) < 1e-12 and abs(a[1] - b[1]) < 1e-12


def test_reflected_starts_give_reflected_runs():
    t0, p0 = np.array([0.3, 1.1, 2.5]), np.array([1.4, 0.2, 1.7])
    a = integrate(CHART, t0, p0, "a", step=1e-2)
    b = integrate(CHART, -t0, p0, "a", step=1e-2)
    assert (a.target == b.target).all()
    assert (a.steps == b.steps).all()
    assert (a.arrive_side == -b.arrive_side).all()
    assert (a.depart_side == -b.depart_side).all()


def test_fixed_circles_are_invariant():
    for t in (0.0, math.pi):
        p0 = np.array([0.3, -0.4, 1.0, 2.0])
        p0 = p0[np.abs(np.cos(p0)) > 0.1]
        run = integrate(CHART, np.full(p0.size, t), p0, "a" if t == 0.0 else "b", step=1e-2)
        assert run.on_locus.all()
        assert (run.arrive_side == 0).all()


def test_descending_starts():
    th, ph = descending_starts(CHART, "a", 8, 1e-2)
    assert th.size == 8
    assert np.allclose(np.hypot(th - 0.0, ph - math.pi / 2), 1e-2)
    assert (th == 0.0).sum() == 2  # the two samples pointing along the fixed circle
    assert descending_starts(CHART, "d", 8, 1e-2)[0].size == 0
    with pytest.raises(ValueError):
        descending_starts(CHART, "a", 6, 1e-2)


@pytest.mark.parametrize("pair,carrier", [(("a", "b"), "ambient"), (("b", "c"), "fixed"),
                                          (("c", "d"), "ambient")])
def test_pair_counts(pair, carrier):
    res = count_trajectories(pair)
    assert res.count(*pair) == 2
    assert {t.carrier for t in res.trajectories} == {carrier}
    if carrier == "ambient":
        assert sorted(t.depart for t in res.trajectories) == [-1, 1]
        assert sorted(t.arrive for t in res.trajectories) == [-1, 1]
    assert res.monotone


def test_xi_classes():
    assert classify_xi(("b", "c")) == ["P", "P"]
    assert classify_xi(("b", "c"), target_orientation=-1) == ["R", "R"]


def test_all_paths_decrease_energy():
    res = flow_all()
    assert res.monotone
    assert res.max_steps > 0


def test_matches_dataset():
    rep = verify_against(builtin("torus"))
    assert rep.matched and rep.diff == []


def test_perturbed_dataset_mismatch():
    t = builtin("torus")
    bad = with_records(t, [dataclasses.replace(r, xi_class="R") if r.id == "v" else r
                           for r in t.trajectories])
    with pytest.raises(Mismatch) as exc:
        verify_against(bad)
    assert any("b->c" in line for line in exc.value.diff)


def test_coarse_step_does_not_converge():
    with pytest.raises(NonConvergence):
        count_trajectories(("c", "d"), step=5.0)
