import numpy as np
import pytest

from smaplab.data import (band_packet, envelope_map, envelope_weights, gaussian,
                          random_band_field, tangent_from_envelope)
from smaplab.grid import lp_norm, make_grid
from smaplab.littlewood_paley import BesovParams, band_norms_array, besov_norm_array
from smaplab.sphere_map import sphere_defect


def test_gaussian_is_periodized(grid64):
    a = gaussian(grid64, center=(9.5, 0.0))
    b = gaussian(grid64, center=(-10.5, 0.0))
    assert np.allclose(a.values, b.values)
    with pytest.raises(ValueError):
        gaussian(grid64, width=0)


def test_random_band_field_deterministic_and_keyed(grid64):
    a = random_band_field(grid64, 1, seed=7, l2=2.0)
    assert np.array_equal(a, random_band_field(grid64, 1, seed=7, l2=2.0))
    assert np.isclose(lp_norm(grid64, a), 2.0)
    assert not np.allclose(a, random_band_field(grid64, 1, seed=8, l2=2.0))
    r = random_band_field(grid64, 0, seed=7, real=True)
    assert np.isrealobj(r)


def test_envelope_weights():
    assert envelope_weights("flat", [0, 1, 2]) == {0: 1.0, 1: 1.0, 2: 1.0}
    assert envelope_weights("single", [0, 1, 2]) == {0: 0.0, 1: 1.0, 2: 0.0}
    w = envelope_weights("bump", [0, 1, 2, 3], center=1, delta=1.0)
    assert w == {0: 0.5, 1: 1.0, 2: 0.5, 3: 0.25}
    with pytest.raises(ValueError):
        envelope_weights("spiky", [0])


def test_envelope_map_size_scales_with_eps(grid64):
    sizes = []
    for eps in (0.01, 0.02):
        u = envelope_map(grid64, eps, seed=1)
        assert sphere_defect(u.u) < 1e-12
        sizes.append(besov_norm_array(grid64, u.u - np.array([0, 0, 1.0])[:, None, None],
                                      BesovParams(1, np.inf, 2)))
    assert np.isclose(sizes[1] / sizes[0], 2.0, rtol=1e-3)


def test_tangent_envelope_peak_band(grid64):
    h1, h2 = tangent_from_envelope(grid64, 1.0, "single", seed=2, bands=[0, 1, 2])
    norms = band_norms_array(grid64, np.stack([h1, h2]), 2)
    assert max(norms, key=lambda j: 2.0 ** j * norms[j]) == 1


def test_band_packet_in_band(grid64):
    p = band_packet(grid64, 1, 3.5, 0.3, 2.0)
    hat = np.abs(np.fft.fft2(p))
    k = grid64.kabs
    assert np.all(hat[(k <= 2) | (k >= 6)] < 1e-12 * hat.max())
