import numpy as np
import pytest

from ibpfourier.kernels import DomainError, KernelFunction, ZeroWaveNumberError, bump_density, fiber
from ibpfourier.osc_quad import QuadConfig, fourier_integral_1d
from ibpfourier.iterated import (MONITOR_SLOPE, MONITOR_SPREAD, IteratedConfig, double_limit_table,
                                 full_transform_2d, full_transform_3d, moore_osgood_monitor, outer_rule,
                                 partial_transform_2d, partial_transforms_3d, truncation_scaling_3d)


@pytest.fixture(scope="module")
def bump2():
    return KernelFunction.density_potential(bump_density(2))


@pytest.fixture(scope="module")
def bump3():
    return KernelFunction.density_potential(bump_density(3))


@pytest.fixture(scope="module")
def family111(bump3):
    return partial_transforms_3d(bump3, (1.0, 1.0, 1.0))


@pytest.fixture(scope="module")
def report111(bump3, family111):
    return full_transform_3d(bump3, 1.0, 1.0, 1.0)


def test_outer_rule_covers_interval():
    edges, x, w, h = outer_rule(24.0, 2.0, 2.0)
    assert edges[0] == -24.0 and edges[-1] == 24.0
    np.testing.assert_allclose(w.sum(), 48.0, rtol=1e-14)
    np.testing.assert_allclose(np.sum(w * np.cos(3 * x)), 2 * np.sin(72.0) / 3, atol=1e-10)
    assert np.all(np.diff(edges) <= 2 * np.pi / 2.0 + 1e-12)
    inner = np.diff(edges)[(edges[:-1] >= -2.0) & (edges[1:] <= 2.0)]
    assert np.all(inner <= 0.5 + 1e-12)


def test_partial_2d_decay(bump2):
    F = partial_transform_2d(bump2, 1.0)
    c = F.certificate()
    assert c.order == 2
    assert c.fitted_exponent >= 1.8


def test_partial_2d_conjugate_symmetry(bump2):
    Fp = partial_transform_2d(bump2, 1.0)
    Fm = partial_transform_2d(bump2, -1.0)
    for y in (0.0, 0.7, -3.0, 12.0):
        np.testing.assert_allclose(Fm(y).value, np.conj(Fp(y).value), atol=1e-9)
    # against a direct quadrature of the fiber at -k
    f = fiber(bump2, [(1, 0.7)])
    np.testing.assert_allclose(Fm(0.7).value, fourier_integral_1d(f, -1.0).value, atol=1e-9)


def test_partial_2d_depth_cross_check(bump2):
    F1 = partial_transform_2d(bump2, 1.0, IteratedConfig(quad=QuadConfig(ibp_depth=1)))
    F2 = partial_transform_2d(bump2, 1.0, IteratedConfig(quad=QuadConfig(ibp_depth=2)))
    for y in (0.0, 0.5, 2.0, -6.0):
        r1, r2 = F1(y), F2(y)
        assert abs(r1.value - r2.value) <= r1.error_estimate + r2.error_estimate


def test_partial_2d_rejects_zero_k(bump2):
    with pytest.raises(ZeroWaveNumberError):
        partial_transform_2d(bump2, 0.0)


def test_full_2d_orderings_agree(bump2):
    r = full_transform_2d(bump2, 1.0, 1.0)
    dev = abs(r.values["xy"] - r.values["yx"])
    assert dev <= 1e-4 * max(abs(r.value), 1.0)
    assert r.passed
    assert r.all_converged
    assert r.moore_osgood["spread"] <= MONITOR_SPREAD
    assert all(MONITOR_SLOPE[0] <= s <= MONITOR_SLOPE[1] for s in r.moore_osgood["slopes"])


def test_full_2d_swap_invariance(bump2):
    a = full_transform_2d(bump2, 0.5, 2.0, monitor=False)
    b = full_transform_2d(bump2, 2.0, 0.5, monitor=False)
    np.testing.assert_allclose(a.value, b.value, rtol=1e-6)


def test_full_2d_conjugate_wavevector(bump2):
    a = full_transform_2d(bump2, 1.0, -2.0, monitor=False)
    b = full_transform_2d(bump2, -1.0, 2.0, monitor=False)
    np.testing.assert_allclose(b.value, np.conj(a.value), atol=1e-9)


def test_full_2d_rejects_zero_component(bump2):
    with pytest.raises(ZeroWaveNumberError):
        full_transform_2d(bump2, 1.0, 0.0)


def test_full_transforms_need_density_kernels():
    with pytest.raises(DomainError):
        full_transform_2d(KernelFunction.shifted_coulomb([0.0, 0.0], 0.5), 1.0, 1.0)


def test_double_limit_table_rows_converge(bump2):
    table, limits, m_vals, n_vals = double_limit_table(bump2, 1.0, 1.0)
    assert table.shape == (4, 4)
    assert n_vals[0] >= 4 * m_vals[-1]
    delta = np.abs(table - limits[:, None])
    assert np.all(np.diff(delta, axis=1) < 0)


def test_monitor_constant_table():
    t = np.full((4, 5), 2.0 + 1j)
    mo = moore_osgood_monitor(t, [8, 16, 32, 64, 128])
    assert mo["status"] == "already converged"
    assert mo["pass"]


def test_monitor_synthetic_one_over_n():
    n = np.array([10.0, 20.0, 40.0, 80.0, 160.0])
    m = np.array([1.0, 2.0, 3.0, 4.0])
    t = 1 / n[None, :] + 1 / m[:, None]
    mo = moore_osgood_monitor(t, n, m_values=m)
    np.testing.assert_allclose(mo["slopes"], 1.0, atol=0.05)
    np.testing.assert_allclose(mo["spread"], 1.0, atol=1e-6)
    assert mo["pass"]


def test_monitor_detects_nonuniform_rows():
    n = np.array([10.0, 20.0, 40.0, 80.0])
    t = np.array([c / n for c in (1.0, 2.0, 5.0, 10.0)])
    mo = moore_osgood_monitor(t, n, limits=np.zeros(4))
    assert mo["spread"] > MONITOR_SPREAD
    assert not mo["pass"]


def test_monitor_rejects_degenerate_table():
    with pytest.raises(ValueError):
        moore_osgood_monitor(np.ones((3, 4)), [1, 2, 3, 4])
    with pytest.raises(ValueError):
        moore_osgood_monitor(np.ones((4, 4)), [4, 3, 2, 1])


def test_full_3d_rejects_zero_component(bump3):
    with pytest.raises(ZeroWaveNumberError):
        full_transform_3d(bump3, 1.0, 0.0, 1.0)


@pytest.mark.slow
def test_partials_3d_decay(family111):
    certs = family111.certificates()
    for name in "ABC":
        assert certs[name].order == 3
        assert certs[name].fitted_exponent >= 2.7
    for name in "FGH":
        assert certs[name].order == 2
        assert certs[name].fitted_exponent >= 1.8


@pytest.mark.slow
def test_double_equals_integrated_single(family111):
    # F(k1, k2, z) = int A(k1, y, z) e^{-i k2 y} dy, by an independent Gauss-Legendre rule
    xg, wg = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(-40.0, 40.0, 161)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    y = (mid[:, None] + half[:, None] * xg).ravel()
    w = (half[:, None] * wg).ravel()
    for z in (0.0, 1.3, -4.0):
        a, ea, _ = family111.A(y, np.full_like(y, z))
        direct = np.sum(w * a * np.exp(-1j * y))
        f, ef, _ = family111.F([z])
        assert abs(f[0] - direct) <= ef[0] + np.sum(w * ea) + 1e-10


@pytest.mark.slow
def test_full_3d_six_orderings(report111):
    r = report111
    assert set(r.values) == set("ABCFGH")
    assert r.all_converged
    assert r.max_pairwise_deviation <= max(1e-3 * abs(r.value), r.error_allowance)
    assert r.max_pairwise_deviation <= 1e-3 * abs(r.value)
    assert r.passed


@pytest.mark.slow
def test_full_3d_permutation_invariance(bump3):
    a = full_transform_3d(bump3, 2.0, 1.0, 0.5)
    b = full_transform_3d(bump3, 1.0, 0.5, 2.0)
    np.testing.assert_allclose(a.value, b.value, rtol=1e-4)


@pytest.mark.slow
def test_truncation_scaling_3d(bump3, report111):
    r = truncation_scaling_3d(bump3, (1.0, 1.0, 1.0), reference=report111.value)
    meas = np.array(r["measured"])
    assert r["pass"]
    assert r["max_ratio"] <= 1.5
    assert min(r["constants"]) >= 0
    # quarter-period snapping: s = (2 pi)(j + 1/4)
    np.testing.assert_allclose(np.mod(np.array(r["s"]) / (2 * np.pi), 1.0), 0.25, atol=1e-12)
    # truncation errors shrink along both axes and dwarf the reference error
    assert np.all(np.diff(meas, axis=0) < 0) and np.all(np.diff(meas, axis=1) < 0)
    assert meas.min() > 100 * report111.error_allowance
    # the bump and k = (1,1,1) are symmetric under x <-> y
    np.testing.assert_allclose(meas, meas.T, rtol=1e-6)
