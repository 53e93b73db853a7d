import numpy as np
import pytest

from smaplab.caloric import (HeatConfig, _phi_coefficients, caloric_frame, caloric_gauge,
                             dist_to_constant, gauge_fields_along_s, gauged_residual,
                             heat_evolve, heat_rhs, verify_A_integral)
from smaplab.data import gaussian_bump_map
from smaplab.grid import make_grid
from smaplab.sphere_map import (NORTH, SmapConfig, SphereField, energy_map, exp_Q,
                                smap_evolve, tangent_basis)


@pytest.fixture(scope="module")
def bump_gauge():
    g = make_grid(64, 20.0)
    u = gaussian_bump_map(g, 0.05)
    cal, gauges = caloric_gauge(u, HeatConfig(ratio=1.1))
    return u, cal, gauges


def test_phi_coefficients_limits():
    c = np.array([0.0, -1e-8, -1.0, -50.0])
    half, f1, f2, f3 = _phi_coefficients(c)
    assert np.allclose([half[0], f1[0], f2[0], f3[0]], [0.5, 1 / 6, 1 / 6, 1 / 6], atol=1e-12)
    x = -1.0
    assert np.isclose(f2[2], (2 + x + np.exp(x) * (x - 2)) / x ** 3, rtol=1e-12)


def test_heat_rhs_constant_and_tangent(grid64):
    assert np.all(heat_rhs(SphereField.constant(grid64)) == 0)
    # |u| = 1 pointwise does not make u . Lap u = -|du|^2 exact on the lattice;
    # the gap is spectral product error and grows like eps^4
    u = gaussian_bump_map(grid64, 0.1)
    r = heat_rhs(u)
    assert np.max(np.abs(np.einsum("i...,i...", u.u, r))) < 1e-10


def test_heat_rhs_linearization(grid64):
    x1, _ = grid64.mesh
    k = 2 * np.pi / grid64.length
    eps = 1e-4
    u = exp_Q(grid64, eps * np.cos(2 * k * x1), 0 * x1)
    r = heat_rhs(u)
    assert np.max(np.abs(r[0] + 4 * k ** 2 * eps * np.cos(2 * k * x1))) < 10 * eps ** 2


def test_heat_config_validation():
    with pytest.raises(ValueError):
        HeatConfig(h0=0)
    with pytest.raises(ValueError):
        HeatConfig(ratio=0.9)
    nodes = HeatConfig(h0=0.1, ratio=2.0).grid_until(1.0)
    assert nodes[0] == 0 and nodes[-1] == 1.0 and np.all(np.diff(nodes) > 0)


def test_constant_map_is_fixed_point(grid64):
    q = SphereField.constant(grid64)
    h = heat_evolve(q, s_max=5.0)
    assert max(float(np.max(np.abs(z - q.u))) for z in h.z) <= 1e-12
    cal = caloric_frame(h)
    e1 = tangent_basis(NORTH)[0]
    assert np.allclose(cal.at_zero.v, e1[:, None, None])


def test_heat_energy_monotone_and_reaches_constant(bump_gauge):
    u, cal, _ = bump_gauge
    h = cal.heat
    assert np.all(np.diff(h.energy) <= 1e-12 * h.energy[0])
    assert h.terminal_dist < 1e-6 and dist_to_constant(h.z[-1]) == h.terminal_dist


def test_heat_evolve_shared_grid(grid64):
    u = gaussian_bump_map(grid64, 0.05)
    nodes = HeatConfig().grid_until(2.0)
    h = heat_evolve(u, s_grid=nodes)
    assert np.array_equal(h.s_grid, nodes)
    with pytest.raises(ValueError):
        heat_evolve(u, s_grid=[0.1, 0.2])
    with pytest.raises(ValueError):
        heat_evolve(u, s_max=-1)


def test_frame_invariants(bump_gauge):
    u, cal, gauges = bump_gauge
    assert cal.orthonormality_defect() <= 1e-10
    assert cal.caloric_defect() <= 1e-8
    assert cal.caloric_defect_fd() < 1e-5
    for i in (0, len(gauges) // 2, -1):
        assert abs(gauges[i].energy() - energy_map(cal.heat.sphere(i))) < 1e-8


def test_degenerate_projection_rejected(grid64):
    h = heat_evolve(SphereField.constant(grid64), s_max=1.0)
    with pytest.raises(ValueError, match="normal"):
        caloric_frame(h, e_inf=(NORTH, None))


def test_e_inf_choice_changes_phase_only(bump_gauge):
    u, cal, gauges = bump_gauge
    e1, e2 = tangent_basis(NORTH)
    other = caloric_frame(cal.heat, e_inf=(e2, -e1))
    g2 = gauge_fields_along_s(other)
    assert np.allclose(np.abs(g2[0].psi1.values), np.abs(gauges[0].psi1.values), atol=1e-10)


def test_A_integral_trapezoid_convergence(grid64):
    u = gaussian_bump_map(grid64, 0.05)
    res = []
    for ratio in (1.1, 1.05):
        cal, g = caloric_gauge(u, HeatConfig(ratio=ratio))
        rep = verify_A_integral(g, cal.heat.s_grid)
        res.append(rep.residual)
        assert rep.tail < 1e-4
    assert res[1] < 1e-3
    assert 2.5 < res[0] / res[1] < 5


def test_A_integral_constant_map(grid64):
    cal, g = caloric_gauge(SphereField.constant(grid64))
    assert verify_A_integral(g, cal.heat.s_grid).residual == 0


def test_gauged_residual_small_and_converging(grid64):
    u0 = gaussian_bump_map(grid64, 0.05)
    out = []
    for dt in (4e-3, 2e-3):
        tr = smap_evolve(u0, SmapConfig(dt, 40 * dt, sample_every=10))
        out.append(gauged_residual(tr.states, 10 * dt, HeatConfig(ratio=1.1)))
    assert out[0].relative < 5e-2
    assert 10 < out[0].relative / out[1].relative < 22
    assert out[1].psi_t_identity < 1e-8
    assert out[1].compatibility < 5e-2
    with pytest.raises(ValueError):
        gauged_residual(tr.states[:3], 0.1)
