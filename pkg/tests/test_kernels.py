import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ibpfourier.kernels import (DensityGrid, DensityInputError, DomainError, KernelFunction, bump_density,
                                expand_fiber_at_infinity, fiber, kernel_from_descriptor, load_density,
                                write_density)
from ibpfourier.normality import decay_fit, sample_decay


def test_coulomb_eval_examples():
    k2 = KernelFunction.shifted_coulomb([0.0, 0.0], 0.5)
    k3 = KernelFunction.shifted_coulomb([1.0, 1.0, 1.0], 0.5)
    np.testing.assert_allclose(k2.eval([3.0, 4.0]), 0.2, rtol=1e-15)
    np.testing.assert_allclose(k3.eval([1.0, 1.0, 3.0]), 0.5, rtol=1e-15)


def test_coulomb_eval_rejects_points_in_w():
    k2 = KernelFunction.shifted_coulomb([0.0, 0.0], 0.5)
    with pytest.raises(DomainError):
        k2.eval([0.1, 0.2])
    with pytest.raises(DomainError):
        k2.partial_derivative((1, 0), [0.0, 0.4])


def test_density_far_field_equals_mass():
    k = KernelFunction.density_potential(bump_density(3))
    np.testing.assert_allclose(k.eval([10.0, 0.0, 0.0]), 0.1, rtol=1e-3)
    for r in (50.0, 100.0):
        p = r * np.array([0.6, 0.0, 0.8])
        np.testing.assert_allclose(r * k.eval(p), 1.0, rtol=1e-2)


def test_coulomb_first_derivative_closed_form():
    a, b = 0.3, -0.7
    k = KernelFunction.shifted_coulomb([a, b], 0.5)
    for x, y in [(2.0, 1.0), (-3.0, 0.5), (0.3, 4.0)]:
        want = -(x - a) / ((x - a) ** 2 + (y - b) ** 2) ** 1.5
        np.testing.assert_allclose(k.partial_derivative((1, 0), [x, y]), want, rtol=1e-13)
        np.testing.assert_allclose(k.partial_derivative((0, 0), [x, y]), k.eval([x, y]), rtol=1e-15)


def test_coulomb_second_derivative_finite_difference():
    k = KernelFunction.shifted_coulomb([0.2, -0.1, 0.3], 0.5)
    p = np.array([1.7, 2.1, -0.9])
    h = 1e-4
    e = np.array([h, 0, 0])
    fd = (k.partial_derivative((1, 0, 0), p + e) - k.partial_derivative((1, 0, 0), p - e)) / (2 * h)
    np.testing.assert_allclose(k.partial_derivative((2, 0, 0), p), fd, rtol=1e-6)


def test_derivative_order_above_four_rejected():
    k = KernelFunction.shifted_coulomb([0.0, 0.0, 0.0], 0.5)
    with pytest.raises(ValueError):
        k.partial_derivative((3, 2, 0), [2.0, 2.0, 2.0])


def test_density_derivative_matches_finite_difference():
    k = KernelFunction.density_potential(bump_density(3))
    p = np.array([2.0, -1.5, 0.7])
    h = 1e-4
    for axis in range(3):
        e = np.zeros(3)
        e[axis] = h
        fd = (k.eval(p + e) - k.eval(p - e)) / (2 * h)
        mi = [0, 0, 0]
        mi[axis] = 1
        np.testing.assert_allclose(k.partial_derivative(mi, p), fd, rtol=1e-5)


def test_coulomb_orthogonal_invariance():
    c = np.array([0.4, -0.2, 0.1])
    k = KernelFunction.shifted_coulomb(c, 0.5)
    rng = np.random.default_rng(1)
    for _ in range(20):
        v = rng.normal(size=3) * 3
        if np.linalg.norm(v) < 1:
            continue
        ref = k.eval(c + v)
        for perm in itertools.permutations(range(3)):
            for signs in itertools.product((1, -1), repeat=3):
                w = np.array(signs) * v[list(perm)]
                np.testing.assert_allclose(k.eval(c + w), ref, rtol=1e-14)


def test_density_linearity():
    g1 = bump_density(2, n=64)
    # same lattice needed for a pointwise comparison
    g2 = DensityGrid(2, g1.origin, g1.spacing, np.roll(g1.values, 3, axis=0) * 0.5, 1.2)
    alpha, beta = 1.5, -0.75
    k1 = KernelFunction.density_potential(g1)
    k2 = KernelFunction.density_potential(g2)
    k12 = KernelFunction.density_potential(DensityGrid(2, g1.origin, g1.spacing,
                                                       alpha * g1.values + beta * g2.values, 1.2))
    pts = np.array([[3.0, 0.5], [-2.0, 7.0], [0.1, 0.2], [25.0, -40.0]])
    for p in pts:
        np.testing.assert_allclose(k12.eval(p), alpha * k1.eval(p) + beta * k2.eval(p), rtol=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_derivative_decay_exponents(dim):
    # max of |d^m f| over spheres of radius r in [8, 64]
    k = KernelFunction.shifted_coulomb(np.linspace(-0.2, 0.3, dim), 0.5)
    radii = (8, 12, 16, 24, 32, 48, 64)
    for m in range(0, 5):
        for mi in set(itertools.permutations([m] + [0] * (dim - 1))):
            cert = decay_fit(sample_decay(k, mi, radii), max(m + 1, 1))
            assert cert.fitted_exponent >= m + 1 - 0.15


def test_fiber_examples():
    a, b = 0.3, -0.4
    k = KernelFunction.shifted_coulomb([a, b], 0.5)
    x0 = 1.7
    f = fiber(k, [(0, x0)])
    y = np.linspace(-10, 10, 41)
    np.testing.assert_allclose(f(y), 1 / np.sqrt((x0 - a) ** 2 + (y - b) ** 2), rtol=1e-13)
    k3 = KernelFunction.shifted_coulomb([0.1, 0.2, 0.3], 0.5)
    g = fiber(k3, {0: 1.5, 2: -2.0})
    want = 1 / np.sqrt((1.5 - 0.1) ** 2 + (y - 0.2) ** 2 + (-2.0 - 0.3) ** 2)
    np.testing.assert_allclose(g(y), want, rtol=1e-13)


def test_fiber_of_slice_equals_direct_fiber():
    for k in (KernelFunction.shifted_coulomb([0.1, 0.2, 0.3], 0.5),
              KernelFunction.density_potential(bump_density(3, n=32))):
        direct = fiber(k, [(0, 1.5), (2, -2.0)])
        nested = fiber(k.restrict(0, 1.5), [(2, -2.0)])
        y = np.linspace(-6, 6, 25)
        np.testing.assert_allclose(nested(y), direct(y), rtol=1e-14)


def test_fiber_axis_collision():
    k = KernelFunction.shifted_coulomb([0.0, 0.0, 0.0], 0.5)
    with pytest.raises(ValueError):
        fiber(k, [(0, 1.0), (0, 2.0)])
    with pytest.raises(ValueError):
        fiber(k.restrict(0, 1.0), [(0, 2.0)])


def test_expand_fiber_examples():
    k = KernelFunction.shifted_coulomb([0.0, 0.0], 0.5)
    s = expand_fiber_at_infinity(fiber(k, [(0, 0.0)]), "positive", 6)
    np.testing.assert_allclose(s.coefficients, [1, 0, 0, 0, 0, 0], atol=1e-15)
    k = KernelFunction.shifted_coulomb([0.0, 1.0], 0.5)
    s = expand_fiber_at_infinity(fiber(k, [(0, 0.0)]), "positive", 6)
    np.testing.assert_allclose(s.radius, 1 / 3, rtol=1e-15)
    assert s.coefficients[0] == 1.0


@pytest.mark.parametrize("side", ["positive", "negative"])
@pytest.mark.parametrize("kernel", ["coulomb2d", "coulomb3d", "bump3d"])
def test_expand_fiber_matches_direct(side, kernel):
    if kernel == "coulomb2d":
        k = KernelFunction.shifted_coulomb([0.3, -0.5], 0.5)
        f = fiber(k, [(0, 1.2)])
    elif kernel == "coulomb3d":
        k = KernelFunction.shifted_coulomb([0.3, -0.5, 0.2], 0.5)
        f = fiber(k, [(0, 1.2), (2, -0.8)])
    else:
        k = KernelFunction.density_potential(bump_density(3, n=32))
        f = fiber(k, [(0, 0.7), (1, -0.4)])
    s = expand_fiber_at_infinity(f, side, 16)
    y = s.sign * s.radius / 4
    np.testing.assert_allclose(s.evaluate(y), f.exact(1 / y), rtol=1e-8)


def test_density_csv_round_trip(tmp_path):
    g = bump_density(3, n=16)
    p = tmp_path / "rho.csv"
    write_density(g, p)
    h = load_density(p)
    np.testing.assert_array_equal(h.values, g.values)
    assert h.sup_bound == pytest.approx(np.max(np.abs(g.values)))
    assert h.nonnegative


def test_density_support_violation(tmp_path):
    p = tmp_path / "rho.csv"
    # grid point (4, 0) sits at x = 2 = M + 1
    p.write_text("# dim=2 origin=-2,-2 spacing=1,1 support_radius=1\n2,2,1.0\n4,2,0.5\n")
    with pytest.raises(DensityInputError):
        load_density(p)


def test_density_all_zero_rejected(tmp_path):
    p = tmp_path / "rho.csv"
    p.write_text("# dim=2 origin=-1,-1 spacing=1,1 support_radius=1\n1,1,0.0\n")
    with pytest.raises(DensityInputError):
        load_density(p)


def test_density_nan_rejected():
    v = np.zeros((4, 4))
    v[1, 1] = np.nan
    with pytest.raises(DensityInputError):
        DensityGrid(2, (-1.5, -1.5), (1.0, 1.0), v, 2.0)


def test_density_schema_violation(tmp_path):
    p = tmp_path / "rho.csv"
    p.write_text("# dim=3 origin=0 spacing=1 support_radius=5\n1,1,0.5\n")
    with pytest.raises(DensityInputError):
        load_density(p)


def test_kernel_descriptors(tmp_path):
    k = kernel_from_descriptor({"family": "shifted_coulomb", "center": [1, 2]})
    assert k.exclusion_radius == 0.5
    p = tmp_path / "rho.csv"
    write_density(bump_density(2, n=32), p)
    kd = kernel_from_descriptor({"family": "density_potential", "path": str(p)})
    kb = kernel_from_descriptor({"family": "bump", "dim": 2, "n": 32})
    np.testing.assert_allclose(kd.eval([3.0, 1.0]), kb.eval([3.0, 1.0]), rtol=1e-14)
    with pytest.raises(ValueError):
        kernel_from_descriptor({"family": "gaussian"})


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(1, 20), st.floats(0, 2 * np.pi))
def test_coulomb_radial(a, b, r, theta):
    k = KernelFunction.shifted_coulomb([a, b], 0.5)
    p = [a + r * np.cos(theta), b + r * np.sin(theta)]
    np.testing.assert_allclose(k.eval(p), 1 / r, rtol=1e-13)
