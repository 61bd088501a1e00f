import numpy as np
import pytest
from hypothesis import given, strategies as st

from hppp.fixedpoint import Schedule, hppp_iterate
from hppp.toy import (
    ToyConfig, ToyPoint, in_saddle_set, toy_inner_M, toy_projection, toy_run, toy_T, write_trajectory,
)

MU = Schedule.inverse_shift(1, 2)


@pytest.mark.parametrize("u", [(2.0, 0.0), (1.0, 0.0), (7.5, 0.0)])
def test_saddle_points_are_fixed(u):
    assert toy_T(u) == u


def test_one_step_from_origin():
    assert toy_T((0.0, 0.0)) == (0.0, -1.0)


def test_step_requires_admissible_steps():
    with pytest.raises(ValueError):
        toy_T((0, 0), 2.0, 1.0)


@pytest.mark.parametrize("a,expected", [((12, 10), (2, 0)), ((12, 9), (3, 0)), ((12, 8), (4, 0)), ((0, 0), (1, 0))])
def test_projection_formula(a, expected):
    assert toy_projection(a) == expected


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_projection_lands_in_saddle_set(x, y):
    assert in_saddle_set(toy_projection((x, y)))


@given(st.floats(-100, 100), st.floats(-100, 100))
def test_projection_variational_inequality(xa, ya):
    a = ToyPoint(xa, ya)
    p = toy_projection(a)
    rng = np.random.default_rng(0)
    for xs in 1 + 50 * rng.random(100):
        u = (xs, 0.0)
        assert toy_inner_M((p.x - a.x, p.y - a.y), (u[0] - p.x, u[1] - p.y)) >= -1e-9


@pytest.mark.parametrize("a,limit", [((12, 10), (2, 0)), ((12, 9), (3, 0))])
def test_hppp_converges_to_projection(a, limit):
    run = toy_run(ToyConfig((-6, 6), 1000, mu=MU, anchor=a))
    assert run.limit_claim == limit
    f = run.final
    assert np.hypot(f.x - limit[0], f.y - limit[1]) < 0.05
    assert abs((f.x - f.y) - (limit[0] - limit[1])) < 0.01


def test_ppp_reaches_saddle_set():
    run = toy_run(ToyConfig((0, 0), 1000, relax=Schedule.constant(1.2)), "ppp")
    assert in_saddle_set(run.final, 1e-3)
    assert run.limit_claim == run.final


def test_fast_loop_matches_generic_driver():
    run = toy_run(ToyConfig((-6, 6), 300, mu=MU, anchor=(12, 8)))
    u, _ = hppp_iterate(lambda u: np.array(toy_T(u)), np.array([12.0, 8.0]), np.array([-6.0, 6.0]), MU, 300)
    np.testing.assert_array_equal(run.trajectory[-1], u)


def test_limit_independent_of_init():
    rng = np.random.default_rng(1)
    finals = [toy_run(ToyConfig(tuple(10 * rng.standard_normal(2)), 20000, mu=MU, anchor=(12, 10))).final
              for _ in range(10)]
    xs = np.array(finals)
    assert np.max(np.ptp(xs, axis=0)) < 0.05
    # the spread is also small relative to the final fixed-point residual
    res = toy_run(ToyConfig((-6, 6), 20000, mu=MU, anchor=(12, 10))).fp_residual[-1]
    assert np.max(np.abs(xs[:, None, :] - xs[None, :, :])) <= 10 * res


def test_rate_of_distance_to_limit():
    run = toy_run(ToyConfig((-6, 6), 1001, mu=MU, anchor=(12, 10)))
    k = np.arange(100, 1001)
    d = np.abs(run.trajectory[k, 0] - run.trajectory[k, 1] - 2.0)
    slope = np.polyfit(np.log(k), np.log(d), 1)[0]
    assert slope <= -0.8


def test_config_validation():
    with pytest.raises(ValueError):
        ToyConfig((0, 0), 0)
    with pytest.raises(ValueError):
        ToyConfig((np.inf, 0), 10)
    with pytest.raises(ValueError):
        toy_run(ToyConfig((0, 0), 10), "hppp")
    with pytest.raises(ValueError):
        toy_run(ToyConfig((0, 0), 10), "ppp")
    with pytest.raises(ValueError):
        toy_run(ToyConfig((0, 0), 10, relax=Schedule.constant(1.0)), "km")


def test_trajectory_csv(tmp_path):
    run = toy_run(ToyConfig((-6, 6), 5, mu=MU, anchor=(12, 10)))
    write_trajectory(tmp_path / "t.csv", run.trajectory)
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iter,x,y" and lines[1] == "0,-6.0,6.0" and len(lines) == 7
