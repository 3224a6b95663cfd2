import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from okdroplet import (
    check_monotonicity,
    double_bubble_area,
    hutchings_lower_bound,
    solve_double_bubble,
    sphere_area,
)
from okdroplet.errors import NegativeMass, NonPositiveMass
from okdroplet.geometry import DEGENERATE_RATIO, SPHERE_CONST

S11 = 9.139421678069336


def test_sphere_area_examples():
    assert sphere_area(1.0) == pytest.approx(4.835975862049408, rel=1e-15)
    assert sphere_area(0.0) == 0.0
    assert sphere_area(8.0) == pytest.approx(4 * SPHERE_CONST, rel=1e-15)
    with pytest.raises(NegativeMass):
        sphere_area(-1.0)


def test_hutchings_examples():
    assert hutchings_lower_bound(1.0, 0.0) == pytest.approx(SPHERE_CONST, rel=1e-15)
    assert hutchings_lower_bound(1.0, 1.0) == pytest.approx(SPHERE_CONST / 2 * (2 + 2 ** (2 / 3)), rel=1e-15)
    assert hutchings_lower_bound(0.0, 0.0) == 0.0
    with pytest.raises(NegativeMass):
        hutchings_lower_bound(-1.0, 1.0)


def test_equal_volumes_give_flat_wall():
    g = solve_double_bubble(1.0, 1.0)
    assert math.isinf(g.r0)
    assert g.r1 == pytest.approx(g.r2, rel=1e-14)


def test_symmetric_area_matches_oracle():
    area = oracles.solve_bubble(1.0, 1.0)[0]
    assert double_bubble_area(1.0, 1.0) == pytest.approx(area, rel=1e-12)
    assert double_bubble_area(1.0, 1.0) == pytest.approx(S11, rel=1e-14)
    assert 8.674 <= S11 <= 9.672


@pytest.mark.parametrize("m1,m2", [(2.0, 1.0), (1.0, 0.3), (0.05, 7.0), (1.0, 1.0 - 1e-7), (3.0, 3.0)])
def test_oracle_equivalence(m1, m2):
    area, r_big, r_small, r0 = oracles.solve_bubble(m1, m2)
    g = solve_double_bubble(m1, m2)
    assert g.area == pytest.approx(area, rel=1e-11)
    big_r = g.r1 if m1 >= m2 else g.r2
    small_r = g.r2 if m1 >= m2 else g.r1
    assert big_r == pytest.approx(r_big, rel=1e-9)
    assert small_r == pytest.approx(r_small, rel=1e-9)


def test_small_second_volume_approaches_sphere():
    area = double_bubble_area(1.0, 1e-6)
    assert area == pytest.approx(sphere_area(1.0) + sphere_area(1e-6), rel=1e-3)
    assert area > sphere_area(1.0)


def test_degenerate_short_circuit_is_continuous():
    big = 1.0
    below = double_bubble_area(big, 0.5 * DEGENERATE_RATIO)
    above = double_bubble_area(big, 2.0 * DEGENERATE_RATIO)
    assert solve_double_bubble(big, 0.5 * DEGENERATE_RATIO).degenerate
    assert not solve_double_bubble(big, 2.0 * DEGENERATE_RATIO).degenerate
    assert above >= below
    assert above - below < 1e-6


def test_r0_sign_follows_bulge():
    # wall bulges into the larger phase
    assert solve_double_bubble(2.0, 1.0).r0 > 0
    assert solve_double_bubble(1.0, 2.0).r0 < 0


def test_zero_volume_is_sphere_and_errors():
    assert double_bubble_area(1.0, 0.0) == sphere_area(1.0)
    assert double_bubble_area(0.0, 3.0) == sphere_area(3.0)
    with pytest.raises(NonPositiveMass):
        solve_double_bubble(0.0, 1.0)
    with pytest.raises(NonPositiveMass):
        double_bubble_area(0.0, 0.0)
    with pytest.raises(NegativeMass):
        double_bubble_area(-1.0, 1.0)


def test_monotonicity_examples():
    assert check_monotonicity(1.0, 1.0, 0.5)
    assert check_monotonicity(1.0, 1.0, 0.0)
    assert check_monotonicity(1.0, 1.0, 1.0)


def test_lobe_sampling_matches_volumes():
    g = solve_double_bubble(1.0, 0.4)
    rng = np.random.default_rng(0)
    for phase, vol in ((1, 1.0), (2, 0.4)):
        rho, lo, hi = g.lobe_box(phase)
        pts = np.column_stack([rng.uniform(-rho, rho, 400_000), rng.uniform(-rho, rho, 400_000),
                               rng.uniform(lo, hi, 400_000)])
        frac = g.contains(pts, phase).mean()
        box = 4 * rho * rho * (hi - lo)
        assert frac * box == pytest.approx(vol, rel=0.01)


def test_fast_area_path_is_identical():
    for m1, m2 in ((1.0, 0.3), (0.2, 5.0), (1.0, 1e-13)):
        assert double_bubble_area(m1, m2, verify=False) == double_bubble_area(m1, m2)


vol = st.floats(1e-3, 10.0)


@given(vol, vol)
def test_residuals_below_tolerance(m1, m2):
    res = solve_double_bubble(m1, m2).residuals()
    assert max(res.values()) < 1e-10


@given(vol, vol)
def test_area_envelope(m1, m2):
    s = double_bubble_area(m1, m2)
    assert s >= hutchings_lower_bound(m1, m2) - 1e-9
    assert s <= sphere_area(m1) + sphere_area(m2) + 1e-9


@given(vol, vol, st.sampled_from([0.1, 2.0, 10.0]))
def test_scaling_homogeneity(m1, m2, lam):
    assert double_bubble_area(lam * m1, lam * m2) == pytest.approx(lam ** (2 / 3) * double_bubble_area(m1, m2),
                                                                   rel=1e-8)


@given(vol, vol)
def test_symmetry(a, b):
    assert double_bubble_area(a, b) == pytest.approx(double_bubble_area(b, a), rel=1e-10)


@given(vol, vol, st.floats(0, 1))
def test_monotonicity_property(m1, m2, f):
    assert check_monotonicity(m1, m2, f * m2)


@given(st.floats(1e-3, 1e3))
def test_sphere_is_tight_for_hutchings(m):
    assert double_bubble_area(m, 0.0) == pytest.approx(SPHERE_CONST * m ** (2 / 3), rel=1e-9)
    assert hutchings_lower_bound(m, 0.0) == pytest.approx(sphere_area(m), rel=1e-12)
