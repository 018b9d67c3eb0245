import math

import numpy as np
import pytest

from shapelab.environment import (Constant, Environment, Exponential,
                                  Rotation, TwoValued)
from shapelab.lattice import BoxRegion, norm1
from shapelab.percolation import distance
from shapelab.shape import (default_directions, directional_constant,
                            estimate_shape, generator_sup_field,
                            maximal_bound_rhs, maximal_function,
                            sample_maximal_stats)

from frozen import DOMINATION_CONSTANT


def test_constant_weights_flat_series():
    s = directional_constant(Constant(2.0), range(3), (1, 0), 6, dimension=2)
    assert np.all(s.means == 2.0)
    assert s.estimate == 2.0 and not s.flagged


def test_lower_bound_from_minimum_weight():
    s = directional_constant(TwoValued(1.0, 2.0), range(6), (1, 1), 6,
                             dimension=2)
    assert s.estimate >= 1.0


def test_inf_of_means_monotone_in_horizon():
    model = TwoValued(1.0, 2.0)
    short = directional_constant(model, range(8), (1, 0), 6, dimension=2)
    long = directional_constant(model, range(8), (1, 0), 12, dimension=2)
    assert long.estimate <= short.estimate + 1e-12


def test_rotation_environment_runs_and_triangle():
    # deterministic ergodic weights: estimate completes, and the seminorm
    # triangle inequality holds within three combined standard errors
    model = Rotation(alpha=0.3819660112501051, profiles="shifted")
    est = estimate_shape(model, range(4), [(1, 0), (0, 1), (1, 1)], 8)
    L = {d: s.estimate * norm1(d) for d, s in zip(est.directions, est.series)}
    se = {d: s.estimate_stderr * norm1(d)
          for d, s in zip(est.directions, est.series)}
    assert L[(1, 1)] <= L[(1, 0)] + L[(0, 1)] \
        + 3 * (se[(1, 1)] + se[(1, 0)] + se[(0, 1)])


def test_axis_symmetry_for_symmetric_model():
    model = TwoValued(1.0, 2.0)
    est = estimate_shape(model, range(12), [(1, 0), (-1, 0), (0, 1), (0, -1)],
                         8)
    series = dict(zip(est.directions, est.series))
    for theta in [(1, 0), (0, 1)]:
        minus = tuple(-c for c in theta)
        a, b = series[theta], series[minus]
        gap = abs(a.estimate - b.estimate)
        assert gap <= 2 * (a.estimate_stderr + b.estimate_stderr) + 1e-9


def test_shape_requires_spanning_directions():
    with pytest.raises(ValueError, match="span"):
        estimate_shape(Constant(1.0), range(2), [(1, 0), (2, 0)], 4)


def test_unit_ball_constant_weights():
    est = estimate_shape(Constant(2.0), range(2), default_directions(2, 2), 4)
    verts = est.unit_ball_vertices()
    assert np.max(np.abs(np.sum(np.abs(verts), axis=1) - 0.5)) <= 1e-9


def test_default_directions_primitive_and_spanning():
    dirs = default_directions(2, 2)
    assert (1, 0) in dirs and (0, 1) in dirs and (1, 1) in dirs
    assert all(math.gcd(*[abs(c) for c in d]) == 1 for d in dirs)
    assert len(set(dirs)) == len(dirs)


def test_maximal_function_constant_and_bounded():
    env = Environment(Constant(1.5), seed=0, dimension=2)
    assert maximal_function(env, 4) == 1.5
    envb = Environment(TwoValued(1.0, 2.0), seed=3, dimension=2)
    assert maximal_function(envb, 6) <= 2.0


def test_maximal_function_matches_per_target_queries():
    env = Environment(Exponential(1.0), seed=16, dimension=2)
    W = 4
    got = maximal_function(env, W)
    box = BoxRegion((0, 0), 2 * W, "l1")
    best = 0.0
    for site in BoxRegion((0, 0), W, "l1").sites():
        if site == (0, 0):
            continue
        d = distance(env, (0, 0), site, 0, box=box).value
        best = max(best, d / norm1(site))
    assert got == best


def test_tail_products_bounded_weights_vanish():
    stats = sample_maximal_stats(TwoValued(1.0, 2.0), range(60), 5,
                                 [1.0, 2.5, 4.0], 2)
    rows = stats.tail_products(2)
    assert rows[1][2] == 0.0 and rows[2][2] == 0.0
    assert np.all(np.diff([r[1] for r in rows]) <= 0)


def test_tail_grid_must_start_at_one():
    with pytest.raises(ValueError):
        sample_maximal_stats(Constant(1.0), range(4), 3, [0.5, 1.0], 2)


def test_generator_sup_field_is_incident_max():
    env = Environment(Exponential(1.0), seed=2, dimension=2)
    site = (3, -1)
    got = generator_sup_field(env, [site])[0]
    expect = max(
        env.edge_weight((site, 0)),
        env.edge_weight((site, 1)),
        env.edge_weight(((2, -1), 0)),
        env.edge_weight(((3, -2), 1)),
    )
    assert got == expect


def test_domination_single_step_case():
    env = Environment(Exponential(1.0), seed=8, dimension=2)
    n = (1, 0)
    lhs = distance(env, (0, 0), n, 0,
                   box=BoxRegion((0, 0), 2, "l1")).value
    f0 = generator_sup_field(env, [(0, 0)])[0]
    assert lhs <= f0
    rhs = maximal_bound_rhs(env, n, DOMINATION_CONSTANT[2])
    assert rhs >= lhs


def test_domination_constant_weights():
    env = Environment(Constant(1.0), seed=0, dimension=2)
    for n in [(2, 1), (-3, 0), (1, -4)]:
        lhs = 1.0  # rho(0, n)/|n| is exactly the constant
        assert maximal_bound_rhs(env, n, DOMINATION_CONSTANT[2]) >= lhs


def test_domination_random_grid():
    rng = np.random.default_rng(0)
    for _ in range(60):
        env = Environment(Exponential(1.0), seed=int(rng.integers(1 << 30)),
                          dimension=2)
        n = tuple(int(v) for v in rng.integers(-6, 7, 2))
        if n == (0, 0):
            continue
        N = norm1(n)
        lhs = distance(env, (0, 0), n, 0,
                       box=BoxRegion((0, 0), 2 * N, "l1")).value / N
        assert maximal_bound_rhs(env, n, DOMINATION_CONSTANT[2]) >= lhs


def test_exponential_axis_spread_shrinks():
    # empirical form of the shape convergence: the spread of the tail of
    # the series around its limit tightens as the start index grows
    series = directional_constant(Exponential(1.0), range(100), (1, 0), 32,
                                  dimension=2)
    a = series.means
    L = series.estimate
    spread_from_8 = float(np.max(np.abs(a[7:] - L)))
    spread_from_16 = float(np.max(np.abs(a[15:] - L)))
    spread_from_32 = float(np.abs(a[31] - L))
    assert spread_from_8 >= spread_from_16 >= spread_from_32


def test_two_valued_self_oracle_at_scale():
    # a short run must agree, within combined confidence bands, with an
    # independent run at 4x the horizon and 4x the seeds
    model = TwoValued(1.0, 2.0, 0.5)
    small = directional_constant(model, range(200, 225), (1, 0), 8,
                                 dimension=2)
    big = directional_constant(model, range(100), (1, 0), 32, dimension=2)
    gap = abs(small.estimate - big.estimate)
    band = 1.96 * (small.estimate_stderr + big.estimate_stderr)
    # the short horizon also carries a small systematic excess, since the
    # inf over a longer series can only be lower
    assert small.estimate >= big.estimate - band
    assert gap <= band + 0.05
