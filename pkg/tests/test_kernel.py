import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import gamma

from hausdorff_lab.kernel import (REGISTRY, Kernel, KernelError, bump_mass, make_named_kernel,
                                  moment, reflect, truncate_inner, truncate_scaled)

# values from an independent 30-digit mpmath quadrature
BUMP_MASS = 0.443993816168079437823048921171
BUMP_HALF_MOMENTS = {0.0: 1.0, 0.5: 1.01582003345744405, 1.0: 1.04325259340540981}

FINITE_FAMILIES = [("box", ()), ("hardy", ()), ("exp", (1.0,)), ("exp", (2.5,)),
                   ("power_box", (1.0,)), ("power_box", (-0.5,)), ("bump", (0.5,)),
                   ("bump", (0.1,))]


def test_bump_mass():
    assert abs(bump_mass() - BUMP_MASS) < 1e-13


@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5, 0.9])
def test_box_moment_closed_form(alpha):
    rep = moment(make_named_kernel("box"), alpha, 1e-12)
    assert rep.converged and abs(rep.value - 1 / (1 - alpha)) < 1e-10


def test_box_first_moment_diverges():
    rep = moment(make_named_kernel("box"), 1.0)
    assert rep.diverged and not rep.converged


@pytest.mark.parametrize("alpha", [0.1, 0.5, 1.0])
def test_hardy_moment_closed_form(alpha):
    rep = moment(make_named_kernel("hardy"), alpha, 1e-12)
    assert abs(rep.value - 1 / alpha) < 1e-9


def test_hardy_zeroth_moment_diverges():
    assert moment(make_named_kernel("hardy"), 0.0).diverged


@pytest.mark.parametrize("rate,alpha", [(1.0, 0.5), (2.0, 0.25), (0.5, 0.9)])
def test_exp_moment_is_gamma(rate, alpha):
    rep = moment(make_named_kernel("exp", (rate,)), alpha, 1e-12)
    assert abs(rep.value - gamma(1 - alpha) * rate ** (alpha - 1)) < 1e-9


@pytest.mark.parametrize("beta,alpha", [(1.0, 0.5), (-0.5, 0.25), (2.0, 1.0)])
def test_power_box_moment(beta, alpha):
    rep = moment(make_named_kernel("power_box", (beta,)), alpha, 1e-12)
    assert abs(rep.value - 1 / (beta + 1 - alpha)) < 1e-9


@pytest.mark.parametrize("alpha", sorted(BUMP_HALF_MOMENTS))
def test_bump_moments_against_mpmath(alpha):
    rep = moment(make_named_kernel("bump", (0.5,)), alpha, 1e-12)
    assert abs(rep.value - BUMP_HALF_MOMENTS[alpha]) < 1e-10


def test_tensor_moment_is_product():
    k2 = make_named_kernel("box", n=2)
    assert abs(moment(k2, (0.5, 0.5)).value - 4.0) < 1e-10
    assert abs(moment(k2, (0.5, 0.0)).value - 2.0) < 1e-10


def test_nd_quadrature_agrees_with_separable_path():
    k2 = make_named_kernel("exp", (1.0,), n=2)
    sep = moment(k2, (0.5, 0.25), 1e-10).value
    nd = moment(k2, (0.5, 0.25), 1e-8, force_nd=True).value
    assert abs(sep - nd) < 1e-6 * sep


def test_non_separable_kernel_moment():
    # the unit-square indicator given as a plain evaluator, forcing the n-dimensional path
    k = Kernel(2, lambda t: np.all((t > 0) & (t <= 1), axis=1).astype(float),
               ((0.0, 1.0), (0.0, 1.0)))
    assert abs(moment(k, (0.5, 0.5), 1e-8).value - 4.0) < 1e-6


def test_zero_kernel():
    assert moment(make_named_kernel("zero"), 0.5).value == 0.0


@pytest.mark.parametrize("name,params", FINITE_FAMILIES)
@given(alpha=st.floats(min_value=0.05, max_value=0.95))
def test_reflection_swaps_moment_orders(name, params, alpha):
    k = make_named_kernel(name, params)
    a, b = moment(k, alpha, 1e-11), moment(reflect(k), 1 - alpha, 1e-11)
    if a.diverged:
        assert b.diverged
    else:
        assert abs(a.value - b.value) <= 1e-8 * max(1.0, abs(a.value))


def test_reflection_is_an_involution():
    k = make_named_kernel("exp", (1.5,))
    t = np.linspace(0.01, 20, 200)
    np.testing.assert_allclose(reflect(reflect(k))(t), k(t), rtol=1e-13)


def test_hardy_and_box_are_reflections():
    t = np.linspace(0.01, 30, 500)
    np.testing.assert_allclose(reflect(make_named_kernel("box"))(t),
                               make_named_kernel("hardy")(t), rtol=1e-14)


@given(st.floats(min_value=0.01, max_value=0.99))
def test_truncated_box_mass(delta):
    rep = moment(truncate_inner(make_named_kernel("box"), delta), 0.0, 1e-12)
    assert abs(rep.value - (1 - delta)) < 1e-10


def test_truncate_inner_requires_unit_support():
    with pytest.raises(KernelError):
        truncate_inner(make_named_kernel("exp", (1.0,)), 0.5)
    with pytest.raises(KernelError):
        truncate_inner(make_named_kernel("box"), 1.0)


def test_truncate_scaled_exp():
    # phi_m(t) = e^{-m t} on (0, 1): M_0 = (1 - e^{-m}) / m
    k = truncate_scaled(make_named_kernel("exp", (1.0,)), 3.0)
    assert abs(moment(k, 0.0, 1e-12).value - (1 - math.exp(-3)) / 3) < 1e-11


def test_kernel_sum_and_scaling():
    k = make_named_kernel("box") + make_named_kernel("bump", (0.5,)).scaled(2.0)
    assert abs(moment(k, 0.0, 1e-11).value - 3.0) < 1e-9


@pytest.mark.parametrize("name,params", [("box", (1.0,)), ("power_box", (-1.0,)),
                                         ("exp", (-1.0,)), ("bump", (1.5,)), ("nope", ())])
def test_bad_parameters(name, params):
    with pytest.raises(KernelError):
        make_named_kernel(name, params)


def test_alpha_range_checked():
    with pytest.raises(KernelError):
        moment(make_named_kernel("box"), 1.5)


def test_registry_contents():
    assert {"box", "hardy", "adjoint_hardy", "exp", "power_box", "bump", "zero"} <= set(REGISTRY)
