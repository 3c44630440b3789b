"""Covariance tables and spectral kernels against direct-summation oracles."""

import numpy as np
import pytest

from corrspec import (
    CovarianceFunction,
    DimensionError,
    FieldPatch,
    InvalidCovarianceError,
    LinearCoefficients,
    VolterraCoefficients,
    check_conditions,
    gamma_empirical,
    gamma_from_linear,
    gamma_from_volterra,
    spectral_kernel,
)


def brute_gamma_linear(taps: dict, sigma2: float, lag) -> float:
    # oracle: direct summation over the support
    k, l = lag
    return sigma2 * sum(
        a * taps.get((u + k, v + l), 0.0) for (u, v), a in taps.items()
    )


def brute_gamma_volterra(lin: dict, quad: dict, sigma2: float, lag) -> float:
    k, l = lag
    total = brute_gamma_linear(lin, sigma2, lag)
    for (u, v), b in quad.items():
        shifted_u = (u[0] + k, u[1] + l)
        shifted_v = (v[0] + k, v[1] + l)
        total += sigma2 ** 2 * b * quad.get((shifted_u, shifted_v), 0.0)
        total += sigma2 ** 2 * b * quad.get((shifted_v, shifted_u), 0.0)
    return total


# ---------------------------------------------------------------------------
# linear covariance


def test_white_noise_gamma():
    gamma = gamma_from_linear(LinearCoefficients({(0, 0): 1.0}), 1.0)
    assert gamma.value(0, 0) == 1.0
    assert all(v == 0.0 for lag, v in gamma.lags() if lag != (0, 0))


def test_two_tap_gamma_frozen_values():
    gamma = gamma_from_linear(LinearCoefficients({(0, 0): 1.0, (1, 0): 0.5}), 1.0)
    assert gamma.value(0, 0) == 1.25
    assert gamma.value(1, 0) == 0.5
    assert gamma.value(-1, 0) == 0.5
    assert gamma.value(0, 1) == 0.0
    assert gamma.value(0, -1) == 0.0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_linear_gamma_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    taps = {
        (int(k), int(l)): float(rng.standard_normal())
        for k, l in rng.integers(-2, 3, size=(5, 2))
    }
    sigma2 = float(rng.uniform(0.5, 2.0))
    gamma = gamma_from_linear(LinearCoefficients(taps), sigma2)
    r = gamma.radius
    for k in range(-r, r + 1):
        for l in range(-r, r + 1):
            assert gamma.value(k, l) == pytest.approx(
                brute_gamma_linear(taps, sigma2, (k, l)), abs=1e-12
            )


def test_linear_gamma_variance_scaling():
    taps = {(0, 0): 1.0, (1, 1): -0.4}
    g1 = gamma_from_linear(LinearCoefficients(taps), 1.0)
    g2 = gamma_from_linear(LinearCoefficients(taps), 2.0)
    assert np.allclose(g2.table, 2.0 * g1.table, atol=1e-15)


def test_gamma_point_symmetry_exact():
    gamma = gamma_from_linear(
        LinearCoefficients({(0, 0): 1.0, (2, -1): 0.3, (-1, 1): 0.2}), 1.0
    )
    assert np.array_equal(gamma.table, gamma.table[::-1, ::-1])


# ---------------------------------------------------------------------------
# Volterra covariance


def test_volterra_single_quadratic_tap_frozen():
    gamma = gamma_from_volterra(
        VolterraCoefficients({}, {((0, 0), (1, 0)): 1.0}), 1.0
    )
    assert gamma.value(0, 0) == 1.0
    assert gamma.value(1, 0) == 0.0
    assert all(v == 0.0 for lag, v in gamma.lags() if lag != (0, 0))


def test_volterra_reduces_to_linear():
    taps = {(0, 0): 1.0, (0, 1): 0.6}
    lin = gamma_from_linear(LinearCoefficients(taps), 1.3)
    vol = gamma_from_volterra(VolterraCoefficients(taps, {}), 1.3)
    for lag, v in lin.lags():
        assert vol.value(*lag) == pytest.approx(v, abs=1e-15)


@pytest.mark.parametrize("seed", [3, 4])
def test_volterra_gamma_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    lin = {
        (int(k), int(l)): float(rng.standard_normal())
        for k, l in rng.integers(-1, 2, size=(3, 2))
    }
    quad = {}
    while len(quad) < 4:
        u = (int(rng.integers(-1, 2)), int(rng.integers(-1, 2)))
        v = (int(rng.integers(-1, 2)), int(rng.integers(-1, 2)))
        if u != v:
            quad[(u, v)] = float(rng.standard_normal())
    sigma2 = float(rng.uniform(0.5, 2.0))
    gamma = gamma_from_volterra(VolterraCoefficients(lin, quad), sigma2)
    r = gamma.radius
    for k in range(-r, r + 1):
        for l in range(-r, r + 1):
            assert gamma.value(k, l) == pytest.approx(
                brute_gamma_volterra(lin, quad, sigma2, (k, l)), abs=1e-12
            )


def test_separable_volterra_factorizes():
    # with a[u] = a1[u1] a1[u2] and b[u, v] = b1[u1, v1] b1[u2, v2] the
    # covariance factors as A(s)A(t) + B1(s)B1(t) + B2(s)B2(t); A, B1, B2
    # are evaluated here by their own direct summations
    a1 = {0: 1.0, 1: 0.5}
    b1 = {(0, 1): 0.3, (1, 0): -0.2}
    sigma2 = 1.7
    sigma = np.sqrt(sigma2)

    lin = {(u, v): a1[u] * a1[v] for u in a1 for v in a1}
    quad = {}
    for (i, j), x in b1.items():
        for (r, s), y in b1.items():
            u, v = (i, r), (j, s)
            if u != v:
                quad[(u, v)] = x * y
    gamma = gamma_from_volterra(VolterraCoefficients(lin, quad), sigma2)

    def factor_a(t):
        return sigma * sum(a1.get(i, 0.0) * a1.get(i + t, 0.0) for i in a1)

    def factor_b1(t):
        return sigma2 * sum(
            x * b1.get((i + t, r + t), 0.0) for (i, r), x in b1.items()
        )

    def factor_b2(t):
        return sigma2 * sum(
            x * b1.get((r + t, i + t), 0.0) for (i, r), x in b1.items()
        )

    r = gamma.radius
    for s in range(-r, r + 1):
        for t in range(-r, r + 1):
            expect = (
                factor_a(s) * factor_a(t)
                + factor_b1(s) * factor_b1(t)
                + factor_b2(s) * factor_b2(t)
            )
            assert gamma.value(s, t) == pytest.approx(expect, abs=1e-12), (s, t)


# ---------------------------------------------------------------------------
# empirical covariance


def test_gamma_empirical_hand_case():
    values = np.array([[1.0, 2.0, -1.0], [0.5, -0.5, 1.5], [2.0, 1.0, 0.0]])
    gamma = gamma_empirical(FieldPatch(values), max_lag=1)

    def mean_product(k, l):
        acc, count = [], 0
        rows, cols = values.shape
        for i in range(rows):
            for j in range(cols):
                ii, jj = i + k, j + l
                if 0 <= ii < rows and 0 <= jj < cols:
                    acc.append(values[i, j] * values[ii, jj])
        return float(np.mean(acc))

    for k in range(-1, 2):
        for l in range(-1, 2):
            assert gamma.value(k, l) == pytest.approx(mean_product(k, l), abs=1e-12)


def test_gamma_empirical_symmetry_bitwise():
    rng = np.random.default_rng(8)
    gamma = gamma_empirical(FieldPatch(rng.standard_normal((20, 20))), max_lag=3)
    for k in range(-3, 4):
        for l in range(-3, 4):
            assert gamma.value(k, l) == gamma.value(-k, -l)


def test_gamma_empirical_consistency():
    # long-run estimate converges to the model covariance
    from corrspec import InnovationSpec, sample_linear_field

    model = LinearCoefficients({(0, 0): 1.0, (1, 0): 0.5})
    patch = sample_linear_field(model, InnovationSpec(), 400, 400, seed=21)
    target = gamma_from_linear(model, 1.0)
    est = gamma_empirical(patch, max_lag=2)
    for lag, v in target.lags():
        assert est.value(*lag) == pytest.approx(v, abs=0.05), lag


def test_gamma_empirical_needs_room():
    with pytest.raises(DimensionError):
        gamma_empirical(FieldPatch(np.ones((4, 4))), max_lag=2)


# ---------------------------------------------------------------------------
# condition checks


def test_conditions_exchange_symmetric():
    sym = gamma_from_linear(LinearCoefficients({(0, 0): 1.0, (1, 0): 0.3, (0, 1): 0.3}), 1.0)
    assert check_conditions(sym).symmetric_exchange
    one_sided = gamma_from_linear(LinearCoefficients({(0, 0): 1.0, (1, 0): 0.5}), 1.0)
    assert not check_conditions(one_sided).symmetric_exchange


def test_conditions_detects_separable_factor():
    v = {-1: 0.25, 0: 1.0, 1: 0.25}
    gamma = CovarianceFunction.from_dict(
        {(k, l): v[k] * v[l] for k in v for l in v}
    )
    report = check_conditions(gamma)
    assert report.separable
    assert report.factor_even
    assert report.abs_sum == pytest.approx(sum(abs(a * b) for a in v.values() for b in v.values()))


def test_conditions_white_is_separable():
    report = check_conditions(CovarianceFunction.from_dict({(0, 0): 2.0}))
    assert report.separable and report.factor_even


def test_conditions_non_separable():
    gamma = CovarianceFunction.from_dict({(0, 0): 1.0, (1, 1): 0.5, (-1, -1): 0.5})
    assert not check_conditions(gamma).separable


# ---------------------------------------------------------------------------
# spectral kernel


def test_kernel_two_tap_closed_form():
    # gamma = {1.25 at 0, 0.5 at (+-1, 0)} has kernel 1.25 + cos(2 pi x),
    # constant in the second coordinate
    gamma = gamma_from_linear(LinearCoefficients({(0, 0): 1.0, (1, 0): 0.5}), 1.0)
    kernel = spectral_kernel(gamma, 16)
    x = kernel.grid()
    expected = np.add.outer(1.25 + np.cos(2 * np.pi * x), np.zeros(16))
    assert np.allclose(kernel.values, expected, atol=1e-12)


def test_kernel_nonnegative_and_mean():
    gamma = gamma_from_linear(
        LinearCoefficients({(0, 0): 1.0, (1, 0): 0.5, (0, 1): -0.25}), 1.0
    )
    kernel = spectral_kernel(gamma, 32)
    assert kernel.values.min() >= 0.0
    assert kernel.values.mean() == pytest.approx(gamma.value(0, 0), abs=1e-12)


CORPUS = [
    gamma_from_linear(LinearCoefficients({(0, 0): 1.0}), 1.0),
    gamma_from_linear(LinearCoefficients({(0, 0): 1.0, (1, 0): 0.5}), 1.0),
    gamma_from_linear(
        LinearCoefficients({(0, 0): 1.0, (1, 0): 0.3, (0, 1): 0.3, (1, 1): 0.09}), 2.0
    ),
    gamma_from_volterra(VolterraCoefficients({}, {((0, 0), (1, 0)): 1.0}), 1.0),
    gamma_from_volterra(
        VolterraCoefficients({(0, 0): 1.0}, {((0, 1), (1, 0)): 0.7}), 1.0
    ),
    CovarianceFunction.from_dict(
        {(k, l): {-1: 0.25, 0: 1.0, 1: 0.25}[k] * {-1: 0.25, 0: 1.0, 1: 0.25}[l]
         for k in (-1, 0, 1) for l in (-1, 0, 1)}
    ),
]


@pytest.mark.parametrize("gamma", CORPUS, ids=range(len(CORPUS)))
def test_kernel_roundtrip_reproduces_gamma(gamma):
    # inverse transform of the sampled kernel must return every stored lag
    m = max(2 * (2 * gamma.radius + 1), 8)
    kernel = spectral_kernel(gamma, m)
    back = np.fft.ifft2(kernel.values)
    assert np.abs(back.imag).max() < 1e-10
    for (k, l), v in gamma.lags():
        assert back.real[k % m, l % m] == pytest.approx(v, abs=1e-10)


def test_kernel_grid_too_small():
    gamma = gamma_from_linear(LinearCoefficients({(0, 0): 1.0, (1, 0): 0.5}), 1.0)
    with pytest.raises(DimensionError):
        spectral_kernel(gamma, 4)


def test_kernel_rejects_indefinite_table():
    bad = CovarianceFunction.from_dict({(0, 0): 1.0, (1, 0): 0.9, (-1, 0): 0.9})
    with pytest.raises(InvalidCovarianceError):
        spectral_kernel(bad, 16)


def test_separable_kernel_carries_line_samples():
    v = {-1: 0.25, 0: 1.0, 1: 0.25}
    gamma = CovarianceFunction.from_dict({(k, l): v[k] * v[l] for k in v for l in v})
    kernel = spectral_kernel(gamma, 16)
    assert kernel.separable
    line = kernel.line_values
    assert line is not None
    expected = 1.0 + 0.5 * np.cos(2 * np.pi * kernel.grid())
    assert np.allclose(line, expected, atol=1e-12)
    assert np.allclose(kernel.values, np.outer(line, line), atol=1e-12)
