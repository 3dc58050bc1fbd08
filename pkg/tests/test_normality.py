import math

import numpy as np
import pytest

from ibpfourier.kernels import KernelFunction, bump_density, fiber
from ibpfourier.normality import (NORMAL, QUASI_NORMAL, QUASI_SPLIT_NORMAL, ProbeConfig, certify,
                                  count_zeros_numeric, decay_fit, max_root_ratio, sample_decay,
                                  zero_locus_closed_form)
from ibpfourier.iterated import partial_transforms_3d


def test_closed_form_order2_examples():
    a, b = 0.4, -0.3
    k = KernelFunction.shifted_coulomb([a, b], 0.5)
    # free axis x, fixed y: u = x - a, s = |y - b|
    r = zero_locus_closed_form(k, fiber(k, [(1, b + math.sqrt(2))]), 2)
    np.testing.assert_allclose(r.zeros, [a - 1, a + 1], atol=1e-14)
    assert r.closed_form_used


def test_closed_form_order2_degenerate_fiber():
    k = KernelFunction.shifted_coulomb([0.4, -0.3], 0.5)
    # a fiber through the center hits W; the locus formula itself collapses to u = 0
    f = fiber(k, [(1, -0.3)])
    r = zero_locus_closed_form(k, f, 2)
    np.testing.assert_allclose(r.zeros, [0.4])


def test_closed_form_order4_3d():
    k = KernelFunction.shifted_coulomb([0.0, 0.0, 0.0], 0.5)
    r = zero_locus_closed_form(k, fiber(k, [(1, 1.0), (2, 0.0)]), 4)
    assert r.count == 4
    inner, outer = math.sqrt((6 - math.sqrt(30)) / 4), math.sqrt((6 + math.sqrt(30)) / 4)
    np.testing.assert_allclose(np.sort(np.abs(r.zeros)), [inner, inner, outer, outer], atol=1e-14)
    # printed approximations are truncated to 4 digits
    np.testing.assert_allclose([inner, outer], [0.3616, 1.6938], atol=2e-4)


def test_closed_form_rejects_density():
    k = KernelFunction.density_potential(bump_density(2, n=32))
    with pytest.raises(ValueError):
        zero_locus_closed_form(k, fiber(k, [(1, 3.0)]), 2)


def test_numeric_matches_closed_form_order2():
    a, b = 0.4, -0.3
    k = KernelFunction.shifted_coulomb([a, b], 0.5)
    f = fiber(k, [(1, b + math.sqrt(2))])
    num = count_zeros_numeric(f.derivative(2), (a - 10, a + 10))
    assert num.count == 2
    np.testing.assert_allclose(num.zeros, [a - 1, a + 1], atol=1e-8)


def test_numeric_no_zeros_and_single_zero():
    a, b = 0.4, -0.3
    k = KernelFunction.shifted_coulomb([a, b], 0.5)
    f = fiber(k, [(1, 2.0)])
    assert count_zeros_numeric(f, (-50, 50)).count == 0
    d1 = count_zeros_numeric(f.derivative(1), (-50, 50))
    assert d1.count == 1
    np.testing.assert_allclose(d1.zeros, [a], atol=1e-10)


def test_numeric_rejects_bad_input():
    k = KernelFunction.shifted_coulomb([0.0, 0.0], 0.5)
    f = fiber(k, [(1, 2.0)])
    with pytest.raises(ValueError):
        count_zeros_numeric(f, (-1, 1), samples=10)
    with pytest.raises(ValueError):
        count_zeros_numeric(f, (-np.inf, 1))


def test_closed_and_numeric_agree_on_random_fibers():
    rng = np.random.default_rng(0x5EED)
    n = 0
    while n < 200:
        dim = 2 + n % 2
        k = KernelFunction.shifted_coulomb(rng.uniform(-2, 2, dim), 0.5)
        axis = int(rng.integers(dim))
        fixed = [(a, float(k.center[a] + rng.uniform(-6, 6))) for a in range(dim) if a != axis]
        f = fiber(k, fixed)
        if f.meets_exclusion():
            continue
        order = 1 + n % 4
        cf = zero_locus_closed_form(k, f, order)
        X = max_root_ratio(order) * f.offset + 20 * f.offset + 5
        num = count_zeros_numeric(f.derivative(order), (f.along_center - X, f.along_center + X))
        assert cf.count == num.count
        np.testing.assert_allclose(num.zeros, cf.zeros, atol=1e-8)
        n += 1


def test_certify_coulomb_2d_normal_val2():
    c = certify(KernelFunction.shifted_coulomb([0.3, -0.2], 0.5), 2)
    assert c.kind == NORMAL
    assert c.val == 2
    assert all(p for _, p, _ in c.conditions)


def test_certify_coulomb_3d_normal_val4():
    c = certify(KernelFunction.shifted_coulomb([0.2, -0.1, 0.3], 0.5), 3)
    assert c.kind == NORMAL
    assert c.val == 4


def test_certify_is_monotone():
    c = certify(KernelFunction.shifted_coulomb([0.3, -0.2], 0.5), 2)
    assert set(c.implied_kinds) == {NORMAL, QUASI_NORMAL, QUASI_SPLIT_NORMAL}


def test_certify_bump_quasi_normal_interval():
    M = 1.0
    c = certify(KernelFunction.density_potential(bump_density(2)), 2)
    assert c.kind == QUASI_NORMAL
    d1 = c.interval_data[1]
    np.testing.assert_allclose(d1["endpoints"], [[-(M + 1), M + 1]])
    np.testing.assert_allclose(d1["R"], 2 * (M + 1))
    for data in c.interval_data.values():
        assert data["R_spread"] <= 0.05


def test_certificate_json():
    c = certify(KernelFunction.shifted_coulomb([0.3, -0.2], 0.5), 2)
    d = c.to_dict()
    assert d["kind"] == NORMAL
    assert {"clause", "pass", "evidence"} <= set(d["conditions"][0])


def test_decay_fit_exact_power_law():
    radii = [8, 12, 16, 24, 32, 48, 64]
    c = decay_fit([(r, 1 / r) for r in radii], 1)
    np.testing.assert_allclose(c.fitted_exponent, 1.0, atol=1e-12)
    np.testing.assert_allclose(c.constant, 1.0)
    assert c.passed


def test_decay_fit_3d_coulomb_derivative():
    k = KernelFunction.shifted_coulomb([0.2, -0.1, 0.3], 0.5)
    d = np.array([0.48, 0.6, 0.64])
    vals = [(r, abs(k.partial_derivative((1, 0, 0), r * d))) for r in (8, 12, 16, 24, 32, 48, 64)]
    c = decay_fit(vals, 2)
    assert c.fitted_exponent >= 1.85


def test_decay_fit_rejects_bad_samples():
    with pytest.raises(ValueError):
        decay_fit([(r, 1 / r) for r in (8, 16, 32)], 1)
    with pytest.raises(ValueError):
        decay_fit([(r, 1 / r) for r in (8, 9, 10, 11, 12, 13)], 1)


def test_decay_fit_zero_values_pass():
    c = decay_fit([(r, 0.0) for r in (8, 12, 16, 24, 32, 64)], 3)
    assert math.isinf(c.fitted_exponent)
    assert c.passed


@pytest.mark.slow
def test_decay_fit_single_transform_3d():
    k = KernelFunction.density_potential(bump_density(3))
    fam = partial_transforms_3d(k, (1.0, 1.0, 1.0))
    c = fam.singles["A"].certificate()
    assert c.order == 3
    assert c.fitted_exponent >= 2.7


def test_sample_decay_skips_w():
    k = KernelFunction.shifted_coulomb([8.0, 0.0], 0.5)
    out = sample_decay(k, (0, 0), [8, 16])
    assert np.all(np.isfinite([v for _, v in out]))
    assert ProbeConfig().radii == (8, 12, 16, 24, 32, 48, 64)
