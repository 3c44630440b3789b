"""Spectra, distribution functions, and the distance computations.

The Levy tests certify the returned value against an independent feasibility
check of the sandwich definition rather than recomputing the infimum: the
reported distance plus a hair must be feasible, minus a millionth must not.
"""

import numpy as np
import pytest

from corrspec import (
    DimensionError,
    DistributionFunction,
    DomainError,
    EmpiricalSpectrum,
    NumericError,
    SymmetricEnsemble,
    distribution_distance,
    eigenvalues,
    stieltjes_of_spectrum,
    trace_comparison_bound,
    write_distribution_csv,
    write_spectrum_csv,
)


def sandwich_ok(f: DistributionFunction, g: DistributionFunction, eps: float) -> bool:
    """Exact feasibility of F(x-eps)-eps <= G(x) <= F(x+eps)+eps for step CDFs.

    Each difference F(u) - G(u+eps) only jumps up where F jumps, so its
    supremum is attained at an atom of F; evaluating there avoids the float
    drift of reconstructing u from u+eps.
    """
    slop = 1e-15
    left = float((f.evaluate(f.xs) - g.evaluate(f.xs + eps)).max())
    right = float((g.evaluate(g.xs) - f.evaluate(g.xs + eps)).max())
    return left <= eps + slop and right <= eps + slop


def random_step_cdf(rng, n_atoms: int) -> DistributionFunction:
    xs = np.sort(rng.uniform(-1.0, 2.0, size=n_atoms))
    weights = rng.uniform(0.1, 1.0, size=n_atoms)
    ys = np.cumsum(weights) / weights.sum()
    ys[-1] = 1.0
    return DistributionFunction(xs, ys)


# ---------------------------------------------------------------------------
# spectra and transforms


def test_eigenvalues_hand_case():
    spec = eigenvalues(SymmetricEnsemble(np.array([[2.0, 1.0], [1.0, 2.0]])))
    assert spec.values == pytest.approx([1.0, 3.0], abs=1e-12)


def test_eigenvalues_accepts_plain_square_array():
    spec = eigenvalues(np.diag([3.0, -1.0, 2.0]))
    assert spec.values == pytest.approx([-1.0, 2.0, 3.0], abs=0)


def test_eigenvalues_rejects_nonfinite():
    with pytest.raises(NumericError):
        eigenvalues(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_spectrum_sorts_and_validates():
    spec = EmpiricalSpectrum(np.array([3.0, 1.0, 2.0]))
    assert spec.values.tolist() == [1.0, 2.0, 3.0]
    assert spec.n == 3
    with pytest.raises(DimensionError):
        EmpiricalSpectrum(np.zeros((2, 2)))
    with pytest.raises(DimensionError):
        EmpiricalSpectrum(np.zeros(0))
    with pytest.raises(NumericError):
        EmpiricalSpectrum(np.array([1.0, np.inf]))


def test_stieltjes_single_atom():
    spec = EmpiricalSpectrum(np.array([1.0]))
    assert stieltjes_of_spectrum(spec, 1j) == pytest.approx(0.5 + 0.5j, abs=1e-15)


def test_stieltjes_requires_upper_half_plane():
    spec = EmpiricalSpectrum(np.array([0.0]))
    for z in (1.0 + 0j, 0.5 - 0.1j):
        with pytest.raises(DomainError):
            stieltjes_of_spectrum(spec, z)


def test_stieltjes_herglotz_property():
    rng = np.random.default_rng(7)
    for _ in range(10):
        spec = EmpiricalSpectrum(rng.standard_normal(20))
        z = complex(rng.uniform(-2, 2), rng.uniform(0.05, 2.0))
        assert stieltjes_of_spectrum(spec, z).imag > 0


# ---------------------------------------------------------------------------
# distribution functions


def test_step_cdf_evaluate_sides():
    dist = DistributionFunction.from_spectrum(
        EmpiricalSpectrum(np.array([1.0, 2.0, 2.0, 3.0]))
    )
    assert dist.xs.tolist() == [1.0, 2.0, 3.0]
    assert dist.ys.tolist() == [0.25, 0.75, 1.0]
    assert dist.evaluate(2.0)[0] == 0.75
    assert dist.evaluate(2.0, side="left")[0] == 0.25
    assert dist.evaluate(0.5)[0] == 0.0
    assert dist.evaluate(10.0)[0] == 1.0


def test_linear_cdf_interpolates():
    dist = DistributionFunction(np.array([0.0, 1.0]), np.array([0.0, 1.0]), kind="linear")
    assert dist.evaluate(0.25)[0] == pytest.approx(0.25, abs=0)
    assert dist.evaluate(-1.0)[0] == 0.0
    assert dist.evaluate(2.0)[0] == 1.0


def test_distribution_validation():
    with pytest.raises(DomainError):
        DistributionFunction(np.array([1.0, 0.0]), np.array([0.5, 1.0]))
    with pytest.raises(DomainError):
        DistributionFunction(np.array([0.0, 1.0]), np.array([0.8, 0.5]))
    with pytest.raises(DomainError):
        DistributionFunction(np.array([0.0, 1.0]), np.array([0.2, 0.9]))
    with pytest.raises(DomainError):
        DistributionFunction(np.array([0.0]), np.array([1.0]), kind="spline")


def test_pooled_matches_concatenation():
    a = EmpiricalSpectrum(np.array([0.0, 1.0]))
    b = EmpiricalSpectrum(np.array([1.0, 2.0]))
    pooled = DistributionFunction.pooled([a, b])
    merged = DistributionFunction.from_spectrum(
        EmpiricalSpectrum(np.array([0.0, 1.0, 1.0, 2.0]))
    )
    assert np.array_equal(pooled.xs, merged.xs)
    assert np.array_equal(pooled.ys, merged.ys)
    assert pooled.ys.tolist() == [0.25, 0.75, 1.0]


def test_pooled_requires_equal_sizes():
    with pytest.raises(DimensionError):
        DistributionFunction.pooled(
            [EmpiricalSpectrum(np.zeros(2)), EmpiricalSpectrum(np.zeros(3))]
        )


# ---------------------------------------------------------------------------
# distances


def test_levy_point_masses():
    f = DistributionFunction(np.array([0.0]), np.array([1.0]))
    g = DistributionFunction(np.array([0.3]), np.array([1.0]))
    assert distribution_distance(f, g, "levy") == pytest.approx(0.3, abs=1e-9)
    assert distribution_distance(f, g, "kolmogorov") == 1.0


def test_levy_and_kolmogorov_of_shifted_uniform():
    # shifting a slope-one CDF by 0.4 costs exactly 0.4 in sup norm but only
    # 0.2 in the sandwich metric (split evenly between the two axes)
    f = DistributionFunction(np.array([0.0, 1.0]), np.array([0.0, 1.0]), kind="linear")
    g = DistributionFunction(np.array([0.4, 1.4]), np.array([0.0, 1.0]), kind="linear")
    assert distribution_distance(f, g, "levy") == pytest.approx(0.2, abs=1e-9)
    assert distribution_distance(f, g, "kolmogorov") == pytest.approx(0.4, abs=0)


def test_distance_of_identical_is_zero():
    f = random_step_cdf(np.random.default_rng(0), 8)
    assert distribution_distance(f, f, "levy") == 0.0
    assert distribution_distance(f, f, "kolmogorov") == 0.0


def test_levy_certified_on_random_step_cdfs():
    rng = np.random.default_rng(11)
    for _ in range(25):
        f = random_step_cdf(rng, int(rng.integers(2, 30)))
        g = random_step_cdf(rng, int(rng.integers(2, 30)))
        dist = distribution_distance(f, g, "levy")
        assert sandwich_ok(f, g, dist + 1e-9)
        if dist > 1e-6:
            assert not sandwich_ok(f, g, dist - 1e-6)


def test_levy_symmetric_bitwise():
    rng = np.random.default_rng(12)
    for _ in range(5):
        f = random_step_cdf(rng, 10)
        g = random_step_cdf(rng, 7)
        assert distribution_distance(f, g, "levy") == distribution_distance(g, f, "levy")


def test_levy_triangle_inequality():
    rng = np.random.default_rng(13)
    for _ in range(10):
        f, g, h = (random_step_cdf(rng, int(rng.integers(3, 15))) for _ in range(3))
        fg = distribution_distance(f, g, "levy")
        gh = distribution_distance(g, h, "levy")
        fh = distribution_distance(f, h, "levy")
        assert fh <= fg + gh + 1e-9


def test_levy_never_exceeds_kolmogorov():
    rng = np.random.default_rng(14)
    for _ in range(10):
        f = random_step_cdf(rng, 12)
        g = random_step_cdf(rng, 9)
        levy = distribution_distance(f, g, "levy")
        kol = distribution_distance(f, g, "kolmogorov")
        assert levy <= kol + 1e-9


def test_unknown_distance_kind():
    f = random_step_cdf(np.random.default_rng(15), 4)
    with pytest.raises(DomainError):
        distribution_distance(f, f, "wasserstein")


# ---------------------------------------------------------------------------
# trace comparison


def test_trace_bound_identical_matrices():
    m = SymmetricEnsemble(np.array([[1.0, 0.5], [0.5, -1.0]]))
    gap, bound = trace_comparison_bound(m, m, 1j)
    assert gap == 0.0
    assert bound == 0.0


def test_trace_bound_holds_on_random_pairs():
    rng = np.random.default_rng(21)
    for _ in range(50):
        n = int(rng.integers(4, 33))
        a = rng.standard_normal((n, n))
        b = a + rng.standard_normal((n, n)) * rng.uniform(0.01, 1.0)
        a, b = (a + a.T) / 2, (b + b.T) / 2
        z = complex(rng.uniform(-2, 2), rng.uniform(0.2, 2.0))
        gap, bound = trace_comparison_bound(a, b, z)
        assert gap <= bound + 1e-12 * (1.0 + bound)


def test_trace_bound_validation():
    with pytest.raises(DimensionError):
        trace_comparison_bound(np.eye(2), np.eye(3), 1j)
    with pytest.raises(DomainError):
        trace_comparison_bound(np.eye(2), np.eye(2), 1.0 + 0j)


# ---------------------------------------------------------------------------
# csv output


def test_spectrum_csv_roundtrip(tmp_path):
    spec = EmpiricalSpectrum(np.array([1.0 / 3.0, np.pi, -2.718281828459045]))
    path = tmp_path / "spec.csv"
    write_spectrum_csv(spec, path)
    lines = path.read_text(encoding="utf-8").strip().split("\n")
    assert lines[0] == "eigenvalue"
    back = [float(s) for s in lines[1:]]
    assert np.array_equal(np.array(back), spec.values)


def test_distribution_csv_roundtrip(tmp_path):
    dist = random_step_cdf(np.random.default_rng(30), 6)
    path = tmp_path / "dist.csv"
    write_distribution_csv(dist, path)
    lines = path.read_text(encoding="utf-8").strip().split("\n")
    assert lines[0] == "x,cdf"
    xs, ys = zip(*(tuple(map(float, line.split(","))) for line in lines[1:]))
    assert np.array_equal(np.array(xs), dist.xs)
    assert np.array_equal(np.array(ys), dist.ys)
