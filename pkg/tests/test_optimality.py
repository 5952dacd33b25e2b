import math

import numpy as np
import pytest

from subsample_opt.design import SensitivityEvaluator, SubsamplingDesign
from subsample_opt.distributions import exponential, normal, student_t, uniform
from subsample_opt.optimality import check_equivalence, pushforward_upper_mass, threshold, upper_level_set
from subsample_opt.solver import solve_linear_asymmetric, solve_linear_symmetric, solve_optimal


def test_threshold_equals_boundary_sensitivity():
    rep = solve_optimal(uniform(), 2, 0.5)
    psi = SensitivityEvaluator.for_design(rep.design)
    s = threshold(rep.design)
    assert psi(rep.a) == pytest.approx(psi(rep.b), abs=1e-8)
    assert s == pytest.approx(psi(rep.a), abs=1e-8)


def test_linear_symmetric_threshold():
    rep = solve_linear_symmetric(normal(), 0.2)
    psi = SensitivityEvaluator.for_design(rep.design)
    z = normal().isf(0.1)
    assert rep.threshold == pytest.approx(psi(z), abs=1e-9)
    xs = np.linspace(z + 1e-3, 8, 200)
    assert np.all(psi(xs) > rep.threshold)
    assert np.all(psi(-xs) > rep.threshold)


def test_t5_two_interval_threshold():
    rep = solve_optimal(student_t(5), 2, 0.10)
    psi = SensitivityEvaluator.for_design(rep.design)
    assert psi(0.0) <= rep.threshold + 1e-9
    assert rep.threshold == pytest.approx(psi(2.01505), abs=1e-4)


def test_table2_design_passes():
    rep = solve_optimal(normal(), 2, 0.3)
    assert check_equivalence(rep.design, grid=4096).passed


def test_perturbed_design_fails_between_b_and_a():
    rep = solve_optimal(normal(), 2, 0.3)
    d = normal()
    a = rep.a + 0.05
    b = d.quantile(0.5 + (0.3 - 2 * d.sf(a)) / 2)
    bad = SubsamplingDesign(d, 0.3, [(-math.inf, -a), (-b, b), (a, math.inf)], 2)
    r = check_equivalence(bad)
    assert not r.passed
    assert any(b < abs(x) < a and side == "off-support" for x, _, side in r.violations)


def test_two_tail_normal_fails_at_zero():
    d = normal()
    a = d.isf(0.15)
    bad = SubsamplingDesign(d, 0.3, [(-math.inf, -a), (a, math.inf)], 2)
    r = check_equivalence(bad)
    assert not r.passed
    psi = SensitivityEvaluator.for_design(bad)
    assert psi(0.0) > r.threshold
    assert any(abs(x) < 1e-12 for x, _, _ in r.violations)


def test_quantile_shifted_exponential_fails():
    d = exponential()
    lo = d.quantile(0.15)
    hi = d.isf(0.15)
    bad = SubsamplingDesign(d, 0.3, [(0, lo), (hi, math.inf)], 1)
    r = check_equivalence(bad)
    assert not r.passed
    # the design's own upper level set is [0, c1] u [c2, inf), shifted right of [0, lo] u [hi, inf)
    psi = SensitivityEvaluator.for_design(bad)
    c1, c2 = psi.level_crossings(r.threshold)
    assert lo < c1 < hi < c2
    sides = {side for _, _, side in r.violations}
    assert sides == {"off-support", "support"}
    for x, _, side in r.violations:
        if side == "off-support":
            assert lo < x <= c1 + 1e-9
        else:
            assert hi <= x <= c2 + 1e-9


def test_grid_refinement_stability():
    for rep in (solve_optimal(normal(), 2, 0.1), solve_optimal(exponential(), 1, 0.3)):
        assert check_equivalence(rep.design, grid=2048).passed == check_equivalence(rep.design, grid=4096).passed


def test_upper_level_set_recovers_support():
    for dist, q, al in ((normal(), 2, 0.3), (uniform(), 2, 0.1), (exponential(), 1, 0.5), (student_t(5), 2, 0.03)):
        rep = solve_optimal(dist, q, al)
        psi = SensitivityEvaluator.for_design(rep.design)
        got = upper_level_set(psi, rep.threshold, dist.support)
        assert len(got) == len(rep.design.support)
        for (l1, h1), (l2, h2) in zip(got, rep.design.support):
            assert l1 == pytest.approx(l2, abs=1e-7) and h1 == pytest.approx(h2, abs=1e-7)


def test_pushforward_has_no_atoms():
    rep = solve_optimal(normal(), 2, 0.3)
    psi = SensitivityEvaluator.for_design(rep.design)
    for s in (psi(0.0), rep.threshold, float(psi(rep.b) + 0.3), 2 * rep.threshold):
        lower = pushforward_upper_mass(rep.design, psi, s)
        upper = pushforward_upper_mass(rep.design, psi, s + 1e-12)
        assert 0.0 <= lower - upper < 1e-5
