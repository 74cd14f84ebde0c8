import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from hausdorff_lab import battery as B
from hausdorff_lab.gridfn import GridFunction, GridSpec, lp_norm, sample, tensor_product
from hausdorff_lab.kernel import bump_mass, bump_profile
from hausdorff_lab.transforms import (AxisMask, BumpTransform, MaximalConfig, all_hilbert,
                                      default_bump, h1_norm_maximal, hilbert_axis,
                                      hilbert_multiplier, multi_hilbert, poisson_extend,
                                      smooth_maximal, star_norm, star_terms)


def periodic_poisson(a, P):
    return lambda x: (1 / P) * np.sinh(2 * np.pi * a / P) / (
        np.cosh(2 * np.pi * a / P) - np.cos(2 * np.pi * x / P))


def periodic_conjugate(a, P):
    return lambda x: (1 / P) * np.sin(2 * np.pi * x / P) / (
        np.cosh(2 * np.pi * a / P) - np.cos(2 * np.pi * x / P))


def test_multiplier_zero_at_origin_and_nyquist():
    m = hilbert_multiplier(8, 0.25)
    assert m[0] == 0 and m[4] == 0
    np.testing.assert_array_equal(m[1:4], -1j)
    np.testing.assert_array_equal(m[5:], 1j)


def test_cosine_goes_to_sine():
    spec = GridSpec.uniform(1, 2.0, 64)
    g = sample(lambda x: np.cos(2 * np.pi * 3 * x / 4), spec)
    h = hilbert_axis(g, 0)
    assert np.isrealobj(h.samples) or not np.any(h.samples.imag)
    x = spec.axis(0)
    assert np.abs(h.samples - np.sin(2 * np.pi * 3 * x / 4)).max() < 1e-14


def test_periodized_poisson_conjugate_pair():
    L, a = 16.0, 1.0
    spec = GridSpec.uniform(1, L, 2048)
    h = hilbert_axis(sample(periodic_poisson(a, 2 * L), spec), 0)
    exact = periodic_conjugate(a, 2 * L)(spec.axis(0))
    assert np.abs(h.samples - exact).max() < 1e-13


def test_rational_member_interior_agreement(line_grid):
    f = B.odd_rational()
    h = hilbert_axis(sample(f, line_grid), 0)
    x = line_grid.axis(0)
    inner = np.abs(x) < 8
    ref = f.hilbert_function()(x[inner])
    assert np.abs(h.samples[inner] - ref).max() / np.abs(ref).max() < 1e-5


@given(arrays(np.float64, (2, 15), elements=st.floats(-3, 3)))
def test_hilbert_squared_is_minus_identity_on_mean_zero_data(coef):
    spec = GridSpec.uniform(1, 1.5, 32)
    x = spec.axis(0)
    m = np.arange(1, 16)[:, None]
    arg = 2 * np.pi * m * x[None, :] / 3.0
    g = GridFunction(spec, coef[0] @ np.cos(arg) + coef[1] @ np.sin(arg))
    hh = hilbert_axis(hilbert_axis(g, 0), 0)
    assert np.abs(hh.samples + g.samples).max() <= 1e-12 * max(1.0, np.abs(g.samples).max())


def test_all_hilbert_matches_compositions():
    spec = GridSpec((4.0, 3.0), (32, 16))
    rng = np.random.default_rng(3)
    g = GridFunction(spec, rng.normal(size=(32, 16)))
    hs = all_hilbert(g)
    assert len(hs) == 4
    for e, h in hs.items():
        np.testing.assert_allclose(h.samples, multi_hilbert(g, e).samples, atol=1e-13)


def test_mask_validation():
    assert len(AxisMask.all_masks(3)) == 8
    with pytest.raises(ValueError):
        AxisMask((0, 2))
    g = GridFunction(GridSpec.uniform(1, 1.0, 4), np.zeros(4))
    with pytest.raises(ValueError):
        multi_hilbert(g, (1, 0))
    with pytest.raises(ValueError):
        hilbert_axis(g, 1)


def test_star_norm_of_rational_member(line_grid):
    # ||f||_1 = ||Hf||_1 = 1
    g = sample(B.odd_rational(), line_grid)
    terms = star_terms(g)
    assert abs(terms[(0,)] - 1) < 1e-4 and abs(terms[(1,)] - 1) < 1e-4
    assert abs(star_norm(g) - 2) < 1e-4


def test_star_norm_factorizes_over_tensors():
    a = sample(B.odd_rational(), GridSpec.uniform(1, 32.0, 512))
    b = sample(B.odd_gaussian(), GridSpec.uniform(1, 16.0, 256))
    t = tensor_product([a, b])
    assert abs(star_norm(t) - star_norm(a) * star_norm(b)) < 1e-12 * star_norm(t)


def test_star_norm_dilation():
    spec = GridSpec.uniform(1, 64.0, 4096)
    g = sample(B.odd_rational(), spec)
    dil = GridFunction(spec.dilated(3), g.samples)
    assert abs(star_norm(dil) - 3 * star_norm(g)) < 1e-12 * star_norm(dil)


@given(y1=st.floats(0.01, 2.0), y2=st.floats(0.01, 2.0))
def test_poisson_semigroup(y1, y2):
    spec = GridSpec.uniform(1, 32.0, 1024)
    g = sample(B.odd_rational(), spec)
    a = poisson_extend(poisson_extend(g, y1), y2)
    b = poisson_extend(g, y1 + y2)
    assert np.abs(a.samples - b.samples).max() < 1e-5


def test_poisson_extension_of_periodized_profile(line_grid):
    # P_y applied to the (periodic) Poisson profile of width 1 gives width 1 + y
    P = 2 * line_grid.L[0]
    g = sample(periodic_poisson(1.0, P), line_grid)
    out = poisson_extend(g, 0.5)
    exact = periodic_poisson(1.5, P)(line_grid.axis(0))
    assert np.abs(out.samples - exact).max() < 1e-6


def test_poisson_extension_preserves_mass():
    spec = GridSpec.uniform(1, 64.0, 2048)
    g = sample(B.gaussian(), spec)
    out = poisson_extend(g, 0.3)
    assert abs(out.samples.sum() - g.samples.sum()) < 1e-12


def test_poisson_extension_rejects_nonpositive_height():
    with pytest.raises(ValueError):
        poisson_extend(sample(B.gaussian(), GridSpec.uniform(1, 4.0, 32)), 0.0)


def test_bump_transform_against_direct_quadrature():
    bt = default_bump()
    assert abs(bt(0.0) - 1.0) < 1e-12
    for xi in (0.37, 1.5, 4.2):
        ref = integrate.quad(lambda x: bump_profile(np.array([x]))[0] / bump_mass()
                             * math.cos(2 * math.pi * x * xi), -1, 1, limit=200)[0]
        assert abs(bt(xi) - ref) < 1e-9
    assert bt(1e4) == 0


def test_custom_bump_profile():
    # a triangular profile has transform sinc^2
    bt = BumpTransform(lambda x: np.maximum(0.0, 1 - np.abs(x)), xi_max=20, nodes=2000)
    xi = np.array([0.25, 0.5, 1.3])
    np.testing.assert_allclose(bt(xi), np.sinc(xi) ** 2, atol=1e-5)


def test_smooth_maximal_properties():
    spec = GridSpec.uniform(1, 32.0, 1024)
    g = sample(B.odd_rational(), spec)
    cfg = MaximalConfig(rho=2.0, k_min=-4, k_max=4)
    m = smooth_maximal(g, cfg)
    # homogeneity and periodic translation equivariance hold exactly
    np.testing.assert_allclose(smooth_maximal(g * (-3.0), cfg).samples, 3 * m.samples,
                               atol=1e-13 * m.samples.real.max())
    shifted = GridFunction(spec, np.roll(g.samples, 17))
    np.testing.assert_allclose(smooth_maximal(shifted, cfg).samples, np.roll(m.samples, 17),
                               atol=1e-14)
    # a finer lattice contains the coarse one, so it can only increase the maximum
    fine = smooth_maximal(g, cfg.refined())
    assert np.all(fine.samples.real >= m.samples.real - 1e-15)
    assert lp_norm(m, 1) <= h1_norm_maximal(g, cfg.refined()) + 1e-12


def test_smooth_maximal_of_zero():
    g = GridFunction(GridSpec.uniform(1, 4.0, 64), np.zeros(64))
    assert np.all(smooth_maximal(g).samples == 0)


def test_maximal_config_validation():
    with pytest.raises(ValueError):
        MaximalConfig(rho=1.0)
    with pytest.raises(ValueError):
        MaximalConfig(k_min=3, k_max=2)
    assert len(MaximalConfig().lattice) == 41
