import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smaplab.data import gaussian
from smaplab.grid import ComplexField, free_schrodinger, make_grid
from smaplab.nls import (BlowUpError, NlsConfig, Trajectory, band_sup_norms, hamiltonian, mass,
                         nls_evolve, nls_evolve_backward, nls_step, profile_increments,
                         scattering_profile)


def test_config_validation(grid64):
    with pytest.raises(ValueError):
        NlsConfig(0, 1e-3, 1.0, grid64)
    with pytest.raises(ValueError):
        NlsConfig(1, 0.0, 1.0, grid64)
    with pytest.raises(ValueError):
        NlsConfig(1, 1e-3, -1.0, grid64)
    assert NlsConfig(1, 1e-3, 1.0, grid64).n_steps == 1000


def test_zero_data_stays_zero(grid64):
    tr = nls_evolve(ComplexField(grid64, np.zeros((64, 64))), NlsConfig(1, 1e-2, 0.1, grid64))
    assert all(np.all(s.values == 0) for s in tr.states)
    assert np.all(tr.mass == 0)


@pytest.mark.parametrize("mu", [1, -1])
def test_conservation(grid64, mu):
    u0 = gaussian(grid64, amplitude=0.3)
    tr = nls_evolve(u0, NlsConfig(mu, 1e-3, 0.5, grid64, sample_every=100))
    assert np.max(np.abs(tr.mass - tr.mass[0])) / tr.mass[0] < 1e-10
    assert np.max(np.abs(tr.hamiltonian - tr.hamiltonian[0])) / abs(tr.hamiltonian[0]) < 1e-6
    assert tr.times[-1] == pytest.approx(0.5)


def test_strang_second_order(grid64):
    u0 = gaussian(grid64, amplitude=1.0)
    ref = nls_evolve(u0, NlsConfig(1, 1e-3 / 8, 0.2, grid64, sample_every=10 ** 6), False).states[-1]
    errs = []
    for dt in (4e-3, 2e-3, 1e-3):
        out = nls_evolve(u0, NlsConfig(1, dt, 0.2, grid64, sample_every=10 ** 6), False).states[-1]
        errs.append((out - ref).norm())
    assert 3.5 < errs[0] / errs[1] < 4.5 and 3.5 < errs[1] / errs[2] < 4.5


def test_tiny_data_follows_free_flow(grid64):
    u0 = gaussian(grid64, amplitude=1e-6)
    out = nls_step(u0, 0.1, 1)
    assert np.allclose(out.values, free_schrodinger(u0, 0.1).values, atol=1e-17)


def test_backward_evolution_is_time_reversal(grid64):
    u0 = gaussian(grid64, amplitude=0.5, momentum=(1.0, 0.0))
    cfg = NlsConfig(1, 1e-3, 0.1, grid64, sample_every=100)
    back = nls_evolve_backward(u0, cfg)
    assert back.times[0] == pytest.approx(-0.1) and back.times[-1] == 0
    assert np.allclose(back.states[-1].values, u0.values)
    fwd = nls_evolve(back.states[0], cfg, False)
    assert (fwd.states[-1] - u0).norm() < 1e-6 * u0.norm()


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blowup_detection(grid64):
    u0 = gaussian(grid64, amplitude=1e160)
    with pytest.raises(BlowUpError) as err:
        nls_evolve(u0, NlsConfig(-1, 1e-3, 0.01, grid64))
    assert err.value.t > 0


def test_trajectory_validation(grid64):
    f = ComplexField(grid64, np.zeros((64, 64)))
    with pytest.raises(ValueError):
        Trajectory([0.0, 0.0], [f, f])
    with pytest.raises(ValueError):
        Trajectory([0.0], [f, f])
    g2 = make_grid(32, 20.0)
    with pytest.raises(ValueError):
        Trajectory([0.0, 1.0], [f, ComplexField(g2, np.zeros((32, 32)))])


def test_scattering_profile_constant_for_free_data(grid64):
    u0 = gaussian(grid64, amplitude=1e-8)
    tr = nls_evolve(u0, NlsConfig(1, 1e-2, 0.5, grid64, sample_every=10), False)
    w = scattering_profile(tr)
    # only the dealiasing cut of the Gaussian tail (~1e-10 relative) remains
    assert max((x - w[0]).norm() for x in w) < 1e-9 * u0.norm()
    inc = profile_increments(tr, 0.0, 0.5)
    assert max(inc.values()) < 1e-9 * u0.norm()
    sup = band_sup_norms(tr)
    assert max(sup.values()) > 0


@settings(max_examples=10, deadline=None)
@given(amp=st.floats(0.01, 0.5), mu=st.sampled_from([1, -1]), dt=st.floats(1e-3, 2e-2))
def test_single_step_preserves_mass(amp, mu, dt):
    g = make_grid(32, 16.0)
    u0 = gaussian(g, amplitude=amp, momentum=(0.5, -0.3))
    u1 = nls_step(u0, dt, mu, dealias=False)
    assert np.isclose(mass(g, u1.values), mass(g, u0.values), rtol=1e-12)


def test_hamiltonian_of_plane_wave(grid64):
    x1, _ = grid64.mesh
    k = 2 * np.pi / grid64.length
    u = 0.5 * np.exp(1j * 3 * k * x1)
    area = grid64.length ** 2
    expected = (0.25 * 9 * k ** 2 + 0.5 * 0.0625) * area
    assert np.isclose(hamiltonian(grid64, u, 1), expected)
