"""Parallel-curve slice: membership, propagation, uniqueness, dimensions."""

import numpy as np
import pytest

from sprayjets import (DomainError, InconsistentTrajectoryError, JetPoint,
                       make_flat, make_sphere)
from sprayjets import subspray as sub
from sprayjets.subspray import CONSTRAINTS, MembershipRejection, MembershipResult

SPHERE_X0, SPHERE_V0 = [1.2, 0.4], [0.3, 1.0]


def test_flat_delta_coordinates_frozen():
    f = make_flat(2)
    # zero acceleration: transport blocks reduce to multiples of v0
    want = np.array([0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 3.0, 0.0,
                     1.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0])
    np.testing.assert_allclose(sub.delta_coordinates(f, [0, 0], [1, 0], 2.0, 3.0),
                               want, atol=0.0)
    cfg = sub.configuration_point(f, [0, 0], [1, 0], 2.0, 3.0)
    assert cfg.level == 2
    np.testing.assert_array_equal(cfg.coords, want[:8])


def test_membership_accepts_generated_jet():
    s = make_sphere()
    xi = sub.delta_coordinates(s, SPHERE_X0, SPHERE_V0, 1.7, -0.4)
    res = sub.membership(s, xi)
    assert isinstance(res, MembershipResult)
    assert abs(res.alpha - 1.7) < 1e-12
    assert abs(res.beta + 0.4) < 1e-12
    assert res.residual < 1e-12
    assert set(res.constraints) == set(CONSTRAINTS)


def test_membership_flat_exact():
    f = make_flat(2)
    xi = sub.delta_coordinates(f, [0, 1], [2, 0], 1.0, 3.0)
    res = sub.membership(f, xi)
    assert res.alpha == 1.0 and res.beta == 3.0 and res.residual == 0.0


@pytest.mark.parametrize("name", CONSTRAINTS)
def test_membership_rejects_each_constraint(name):
    s = make_sphere()
    xi = sub.delta_coordinates(s, SPHERE_X0, SPHERE_V0, 1.0, 0.5)
    m = 2
    b = lambda k: slice(k * m, (k + 1) * m)
    v0 = xi[b(1)].copy()
    perp = np.array([-v0[1], v0[0]]) / np.linalg.norm(v0)
    if name == "slashed":
        xi[b(1)] = 0.0
    elif name == "base-velocity":
        xi[b(4)] += 0.3
    elif name == "base-acceleration":
        xi[b(5)] += 0.3
    elif name == "alpha-fit":
        xi[b(2)] += 0.3 * perp
    elif name == "beta-fit":
        xi[b(3)] += 0.3 * perp
    elif name == "fiber-velocity":
        xi[b(6)] += 0.3
    elif name == "fiber-acceleration":
        xi[b(7)] += 0.3
    res = sub.membership(s, xi)
    assert isinstance(res, MembershipRejection)
    assert res.constraint == name
    assert res.residual > 0.1 or name == "slashed"


def test_membership_rejects_double_speed_jet():
    # same curve traversed at double speed: the velocity half no longer
    # differentiates the position half
    s = make_sphere()
    xi = sub.delta_coordinates(s, SPHERE_X0, SPHERE_V0, 1.0, 0.5)
    xi[8:] *= 2.0
    res = sub.membership(s, xi)
    assert isinstance(res, MembershipRejection)
    assert res.constraint == "base-velocity"
    assert res.residual > 0.1


def test_membership_domain_errors():
    s = make_sphere()
    xi = sub.delta_coordinates(s, SPHERE_X0, SPHERE_V0, 1.0, 0.5)
    bad = xi.copy()
    bad[3] = np.nan
    with pytest.raises(DomainError):
        sub.membership(s, bad)
    with pytest.raises(DomainError):
        sub.membership(s, xi[:-1])


def test_flat_parallel_curve_closed_form():
    f = make_flat(2)
    sg = sub.geodesic(f, [0.0, 0.0], [1.0, 0.0], 1.0, 1.0, (0.0, 2.0), 1e-2)
    assert sg.reintegration_deviation < 1e-12
    assert sg.membership_max < 1e-12
    # positions blocks along the line x(t) = (t, 0): field is (1 + t) x'
    t = sg.traj.times
    np.testing.assert_allclose(sg.traj.positions[:, 0], t, atol=1e-12)
    np.testing.assert_allclose(sg.traj.positions[:, 4], 1.0 + t, atol=1e-12)
    np.testing.assert_allclose(sg.traj.positions[:, 6], 1.0, atol=1e-12)


def test_sphere_parallel_curve():
    s = make_sphere()
    sg = sub.geodesic(s, SPHERE_X0, SPHERE_V0, 1.0, 0.5, (0.0, 1.0), 1e-3)
    assert sg.reintegration_deviation < 1e-10
    assert sg.membership_max < 1e-10
    affine = 1.0 + 0.5 * sg.traj.times[: len(sg.recovered_alpha)]
    np.testing.assert_allclose(sg.recovered_alpha, affine, atol=1e-10)
    np.testing.assert_allclose(sg.recovered_beta, 0.5, atol=1e-10)


def test_geodesic_strictness():
    s = make_sphere()
    with pytest.raises(InconsistentTrajectoryError):
        sub.geodesic(s, SPHERE_X0, SPHERE_V0, 1.0, 0.5, (0.0, 1.0), 1e-3, tol=0.0)


def test_project_to_base():
    f = make_flat(2)
    sg = sub.geodesic(f, [0.0, 0.0], [1.0, 0.0], 1.0, 1.0, (0.0, 1.0), 1e-2)
    base = sub.project_to_base(sg)
    assert base is sg.base
    np.testing.assert_allclose(base.positions[:, 0], base.times, atol=1e-13)


def test_uniqueness_of_recovered_scalars():
    s = make_sphere()
    u = sub.uniqueness_check(s, SPHERE_X0, SPHERE_V0, 1.3, -0.7, (0.0, 0.5), 1e-3)
    assert abs(u.alpha_sequential - 1.3) < 1e-8
    assert abs(u.beta_sequential + 0.7) < 1e-8
    assert u.parameter_gap < 1e-8
    assert u.curve_gap < 1e-8


def test_reparametrized_field_matches():
    s = make_sphere()
    sg = sub.geodesic(s, SPHERE_X0, SPHERE_V0, 1.0, 0.5, (0.0, 1.0), 1e-3)
    rep = sub.reparametrized(s, sg, 2.0, 0.2)
    assert abs(rep.alpha - (1.0 + 0.5 * 0.2) / 2.0) < 1e-12
    assert rep.beta == 0.5
    assert rep.field_gap < 1e-10


def test_reparametrized_scalar_map_is_forced():
    # flat line with alpha 0, beta 1: scaling the emitted first scalar by
    # the rate instead of dividing by it breaks the field pointwise
    f = make_flat(2)
    sg = sub.geodesic(f, [0.0, 0.0], [1.0, 0.0], 0.0, 1.0, (0.0, 2.0), 1e-2)
    rep = sub.reparametrized(f, sg, 2.0, 0.4)
    assert rep.alpha == (0.0 + 1.0 * 0.4) / 2.0
    assert rep.field_gap < 1e-12

    x_t0, v_t0 = sg.base.state_at(0.4)
    cand = sub.geodesic(f, x_t0, 2.0 * v_t0, 0.4, 2.0, (0.0, 0.8), 1e-2,
                        tol=np.inf, node_checks=False)
    gap = 0.0
    for k, t in enumerate(cand.traj.times):
        orig = sg.traj.position_at(2.0 * float(t) + 0.4)
        gap = max(gap, float(np.max(np.abs(cand.traj.positions[k, 4:6] - orig[4:6]))))
    assert gap > 1.0


def test_reparametrized_rejects_bad_scale():
    f = make_flat(2)
    sg = sub.geodesic(f, [0.0, 0.0], [1.0, 0.0], 1.0, 0.0, (0.0, 1.0), 1e-2)
    with pytest.raises(DomainError):
        sub.reparametrized(f, sg, -1.0, 0.0)


def _random_family(seed):
    rng = np.random.default_rng(seed)
    x0 = np.array([rng.uniform(0.7, 2.3), rng.uniform(0.0, 2.0)])
    v0 = rng.standard_normal(2)
    v0 /= np.linalg.norm(v0)
    dx, dv = 0.3 * rng.standard_normal(2), 0.3 * rng.standard_normal(2)
    da, db = 0.3 * rng.standard_normal(), 0.3 * rng.standard_normal()
    al, be = rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5)

    def fam(sig):
        return x0 + sig * dx, v0 + sig * dv, al + sig * da, be + sig * db

    return fam


@pytest.mark.parametrize("seed", range(10))
def test_no_conjugate_along_random_families(seed):
    s = make_sphere()
    rep = sub.no_conjugate_check(s, _random_family(seed), (0.0, 4.0), 1e-2)
    assert rep.ok
    assert rep.vacuous
    assert len(rep.zero_times) < 2


def test_constant_family_is_trivial_but_passes():
    s = make_sphere()

    def fam(sig):
        return np.array(SPHERE_X0), np.array(SPHERE_V0), 1.0, 0.5

    rep = sub.no_conjugate_check(s, fam, (0.0, 2.0), 1e-2)
    assert not rep.vacuous
    assert rep.ok
    assert rep.sup_norm == 0.0
    assert len(rep.zero_times) >= 2


def test_parallel_jacobi_curve_values():
    s = make_sphere()
    pj = sub.parallel_jacobi_curve(s, _random_family(3), (0.0, 1.0), 1e-2)
    assert pj.values.shape == (len(pj.times), 8)
    assert pj.sup_norm > 0.0
    assert pj.zero_times == []
    assert pj.center.alpha == pytest.approx(_random_family(3)(0.0)[2])


def test_completeness_probe_flat():
    f = make_flat(2)
    rows = sub.completeness_probe(
        f, [{"label": "line", "x0": [0, 0], "v0": [1, 0], "alpha": 1.0, "beta": 0.5}],
        3.0, 1e-2)
    assert rows[0]["base_exit"] is None and rows[0]["sub_exit"] is None
    assert rows[0]["base_time"] == 3.0 and rows[0]["agree"]


def test_completeness_probe_punctured_chart():
    disk = make_flat(2, domain=lambda x: float(x @ x) < 4.0)
    rows = sub.completeness_probe(
        disk, [{"label": "radial", "x0": [0, 0], "v0": [1, 0], "alpha": 1.0, "beta": 0.0}],
        3.0, 1e-3)
    row = rows[0]
    assert row["base_exit"] == "domain" and row["sub_exit"] == "domain"
    assert row["agree"]
    # unit speed hits the rim of the radius-2 chart at t = 2
    assert abs(row["base_time"] - 2.0) <= 1e-3 + 1e-12


def test_completeness_probe_meridian_hits_pole_margin():
    s = make_sphere(pole_margin=0.05)
    rows = sub.completeness_probe(
        s, [{"label": "meridian", "x0": [np.pi / 2, 0.0], "v0": [1.0, 0.0],
             "alpha": 1.0, "beta": 0.0}],
        3.0, 1e-3)
    row = rows[0]
    assert row["base_exit"] == "domain" and row["sub_exit"] == "domain"
    assert row["agree"]
    assert abs(row["base_time"] - (np.pi / 2 - 0.05)) <= 1e-3 + 1e-12


def test_dimension_probe_ranks():
    s = make_sphere()
    d = sub.dimension_probe(s, SPHERE_X0, SPHERE_V0, 1.0, 0.5)
    assert d.ok
    assert (d.full_jet_rank, d.configuration_rank,
            d.fixed_parameter_rank, d.configuration_rank_without_beta) == (6, 6, 4, 5)
    assert d.parametrization_jacobian.shape == (16, 6)


def test_dimension_probe_flat():
    f = make_flat(3)
    d = sub.dimension_probe(f, [0.0, 0.0, 0.0], [1.0, 0.2, -0.3], 0.8, 0.1)
    assert d.expected == (8, 8, 6, 7)
    assert d.ok
