"""Autocovariance tables of the field models and their spectral kernels.

The covariance of a finitely supported model is computed exactly by pair
enumeration over the coefficient support, so these tables serve as ground
truth for the samplers.  The spectral kernel is the trigonometric polynomial
f(x, y) = sum_{k,l} gamma[k, l] exp(-2 pi i (k x + l y)) sampled on a uniform
periodic grid over [0, 1)^2; with grid size above twice the support diameter
the sampling is alias free and inverting the DFT reproduces the table.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidCovarianceError, ModelError
from .field_models import FieldPatch, LinearCoefficients, VolterraCoefficients

__all__ = [
    "CovarianceFunction",
    "SpectralKernel",
    "ConditionReport",
    "gamma_from_linear",
    "gamma_from_volterra",
    "gamma_empirical",
    "spectral_kernel",
    "check_conditions",
]


@dataclass
class CovarianceFunction:
    """Dense table of gamma[k, l] for |k|, |l| <= radius, zero outside."""

    radius: int
    table: np.ndarray

    def __post_init__(self):
        if self.radius < 0:
            raise InvalidCovarianceError(f"radius must be >= 0, got {self.radius}")
        self.table = np.asarray(self.table, dtype=float)
        side = 2 * self.radius + 1
        if self.table.shape != (side, side):
            raise DimensionError(
                f"table shape {self.table.shape} does not match radius {self.radius}"
            )
        if not np.all(np.isfinite(self.table)):
            raise InvalidCovarianceError("covariance table contains non-finite values")
        scale = max(1.0, float(np.abs(self.table).max()))
        mirrored = self.table[::-1, ::-1]
        if np.abs(self.table - mirrored).max() > 1e-12 * scale:
            raise InvalidCovarianceError("table violates gamma[k, l] == gamma[-k, -l]")
        # enforce the reflection symmetry exactly; averaging is a no-op when
        # the input was already exact
        self.table = 0.5 * (self.table + mirrored)
        if self.table[self.radius, self.radius] < 0:
            raise InvalidCovarianceError("gamma[0, 0] must be nonnegative")

    def value(self, k: int, l: int) -> float:
        if abs(k) > self.radius or abs(l) > self.radius:
            return 0.0
        return float(self.table[k + self.radius, l + self.radius])

    def abs_sum(self) -> float:
        return float(np.abs(self.table).sum())

    def lags(self):
        """Yield ((k, l), value) over the stored square."""
        r = self.radius
        for k in range(-r, r + 1):
            for l in range(-r, r + 1):
                yield (k, l), float(self.table[k + r, l + r])

    def to_dict(self) -> dict[tuple[int, int], float]:
        return {lag: val for lag, val in self.lags() if val != 0.0}

    @classmethod
    def from_dict(cls, values: dict[tuple[int, int], float]) -> "CovarianceFunction":
        if not values:
            return cls(0, np.zeros((1, 1)))
        radius = max(max(abs(k), abs(l)) for (k, l) in values)
        table = np.zeros((2 * radius + 1, 2 * radius + 1))
        for (k, l), v in values.items():
            table[k + radius, l + radius] = float(v)
        return cls(radius, table)


@dataclass
class SpectralKernel:
    """Samples of f on the periodic grid x_i = i / M, plus the separable trace.

    `line_values` holds the one dimensional factor samples when the table
    factors as gamma[k, l] = V(k) V(l) with even V; then values = outer
    product of line_values with itself.
    """

    grid_size: int
    values: np.ndarray
    separable: bool = False
    line_values: np.ndarray | None = None

    def __post_init__(self):
        if self.grid_size < 2:
            raise DimensionError(f"kernel grid size must be >= 2, got {self.grid_size}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid_size, self.grid_size):
            raise DimensionError("kernel sample array does not match grid size")
        if self.line_values is not None:
            self.line_values = np.asarray(self.line_values, dtype=float)
            if self.line_values.shape != (self.grid_size,):
                raise DimensionError("1-d kernel samples do not match grid size")

    def grid(self) -> np.ndarray:
        return np.arange(self.grid_size) / self.grid_size


@dataclass
class ConditionReport:
    """Summary of the structural conditions a covariance table satisfies."""

    abs_sum: float
    symmetric_exchange: bool
    separable: bool
    factor: np.ndarray | None = None
    factor_even: bool = False


def _mirror_fill(acc: dict[tuple[int, int], float], radius: int) -> np.ndarray:
    """Build the dense table from lags on the canonical half, mirroring exactly."""
    side = 2 * radius + 1
    table = np.zeros((side, side))
    for (k, l), v in acc.items():
        table[k + radius, l + radius] = v
        table[-k + radius, -l + radius] = v
    return table


def _canonical(lag: tuple[int, int]) -> bool:
    return lag[0] > 0 or (lag[0] == 0 and lag[1] >= 0)


def gamma_from_linear(coeffs: LinearCoefficients, variance: float) -> CovarianceFunction:
    """Exact autocovariance sigma^2 * sum_u a[u] a[u + lag] of a linear field."""
    if variance <= 0 or not np.isfinite(variance):
        raise ModelError(f"innovation variance must be finite and > 0, got {variance}")
    items = list(coeffs.values.items())
    if not items:
        return CovarianceFunction(0, np.zeros((1, 1)))
    ks = [k for (k, _), _ in items]
    ls = [l for (_, l), _ in items]
    radius = max(max(ks) - min(ks), max(ls) - min(ls))
    acc: dict[tuple[int, int], float] = {}
    for (k1, l1), a1 in items:
        for (k2, l2), a2 in items:
            lag = (k2 - k1, l2 - l1)
            if _canonical(lag):
                acc[lag] = acc.get(lag, 0.0) + variance * a1 * a2
    return CovarianceFunction(radius, _mirror_fill(acc, radius))


def gamma_from_volterra(coeffs: VolterraCoefficients, variance: float) -> CovarianceFunction:
    """Exact autocovariance of a second order expansion.

    gamma[lag] = sigma^2 sum_u a[u] a[u+lag]
               + sigma^4 sum_{u,v} b[u, v] (b[u+lag, v+lag] + b[v+lag, u+lag]).

    The cross term between the linear and quadratic parts vanishes for any
    centered innovation law because the quadratic part is diagonal free.
    """
    if variance <= 0 or not np.isfinite(variance):
        raise ModelError(f"innovation variance must be finite and > 0, got {variance}")
    offsets = set(coeffs.linear)
    for (u, v) in coeffs.quadratic:
        offsets.add(u)
        offsets.add(v)
    if not offsets:
        return CovarianceFunction(0, np.zeros((1, 1)))
    ks = [o[0] for o in offsets]
    ls = [o[1] for o in offsets]
    radius = max(max(ks) - min(ks), max(ls) - min(ls))

    acc: dict[tuple[int, int], float] = {}

    def add(lag, v):
        if _canonical(lag):
            acc[lag] = acc.get(lag, 0.0) + v

    lin = list(coeffs.linear.items())
    for (k1, l1), a1 in lin:
        for (k2, l2), a2 in lin:
            add((k2 - k1, l2 - l1), variance * a1 * a2)

    quad = list(coeffs.quadratic.items())
    v4 = variance * variance
    for (u1, v1), b1 in quad:
        for (u2, v2), b2 in quad:
            # pairing b[u, v] with b[u + lag, v + lag]
            lag = (u2[0] - u1[0], u2[1] - u1[1])
            if (v2[0] - v1[0], v2[1] - v1[1]) == lag:
                add(lag, v4 * b1 * b2)
            # pairing b[u, v] with b[v + lag, u + lag]
            lag = (u2[0] - v1[0], u2[1] - v1[1])
            if (v2[0] - u1[0], v2[1] - u1[1]) == lag:
                add(lag, v4 * b1 * b2)
    return CovarianceFunction(radius, _mirror_fill(acc, radius))


def gamma_empirical(patch: FieldPatch, max_lag: int) -> CovarianceFunction:
    """Lag covariances of one patch, averaged over the valid positions per lag.

    The estimate is symmetrized structurally: each lag and its negation are
    assigned the identical product average, so gamma[k, l] == gamma[-k, -l]
    holds exactly.
    """
    if max_lag < 0:
        raise DimensionError(f"max_lag must be >= 0, got {max_lag}")
    rows, cols = patch.rows, patch.cols
    if max_lag >= min(rows, cols) / 2:
        raise DimensionError(
            f"max_lag {max_lag} too large for a {rows} x {cols} patch; "
            "need max_lag < min(rows, cols) / 2"
        )
    x = patch.values
    acc: dict[tuple[int, int], float] = {}
    for k in range(0, max_lag + 1):
        l_start = 0 if k == 0 else -max_lag
        for l in range(l_start, max_lag + 1):
            if l >= 0:
                a = x[: rows - k, : cols - l]
                b = x[k:, l:]
            else:
                a = x[: rows - k, -l:]
                b = x[k:, : cols + l]
            acc[(k, l)] = float(np.mean(a * b))
    return CovarianceFunction(max_lag, _mirror_fill(acc, max_lag))


def check_conditions(gamma: CovarianceFunction) -> ConditionReport:
    """Report absolute summability, exchange symmetry, and separability."""
    table = gamma.table
    scale = max(1.0, float(np.abs(table).max()))
    tol = 1e-12 * scale
    exchange = bool(np.abs(table - table.T).max() <= tol)

    separable = False
    factor = None
    factor_even = False
    r = gamma.radius
    g00 = table[r, r]
    if np.abs(table).max() <= tol:
        separable = True
        factor = np.zeros(2 * r + 1)
        factor_even = True
    elif g00 > tol:
        cand = table[:, r] / np.sqrt(g00)
        residual = np.abs(table - np.outer(cand, cand)).max()
        if residual <= 1e-8 * scale:
            separable = True
            factor = cand
            factor_even = bool(np.abs(cand - cand[::-1]).max() <= 1e-8 * max(1.0, np.abs(cand).max()))
    return ConditionReport(
        abs_sum=gamma.abs_sum(),
        symmetric_exchange=exchange,
        separable=separable,
        factor=factor,
        factor_even=factor_even,
    )


def spectral_kernel(gamma: CovarianceFunction, grid_size: int) -> SpectralKernel:
    """Sample the spectral density of `gamma` on the uniform M x M grid.

    Requires grid_size >= 2 * (2 radius + 1) so no stored lag aliases another.
    Rounding-level imaginary parts and negative dips are discarded; a dip
    below -1e-10 times the maximum means the table is not a covariance.
    """
    side = 2 * gamma.radius + 1
    if grid_size < 2 * side:
        raise DimensionError(
            f"grid size {grid_size} too small for support radius {gamma.radius}; "
            f"need at least {2 * side}"
        )
    m = grid_size
    wrapped = np.zeros((m, m))
    r = gamma.radius
    for k in range(-r, r + 1):
        for l in range(-r, r + 1):
            wrapped[k % m, l % m] += gamma.table[k + r, l + r]
    f = np.fft.fft2(wrapped)
    imag_tol = 1e-12 * max(gamma.abs_sum(), 1e-300)
    if np.abs(f.imag).max() > imag_tol:
        raise InvalidCovarianceError(
            "kernel samples have a non-rounding imaginary part; table is asymmetric"
        )
    f = f.real
    top = max(float(f.max()), 0.0)
    neg_floor = -1e-10 * top
    worst = float(f.min())
    if worst < neg_floor:
        raise InvalidCovarianceError(
            f"spectral samples reach {worst:.3e}, below the rounding floor "
            f"{neg_floor:.3e}: table is not positive semidefinite"
        )
    f = np.clip(f, 0.0, None)

    report = check_conditions(gamma)
    line = None
    if report.separable and report.factor_even and report.factor is not None:
        wrapped1 = np.zeros(m)
        for k in range(-r, r + 1):
            wrapped1[k % m] += report.factor[k + r]
        line = np.fft.fft(wrapped1)
        # even factor makes the line samples real
        line = line.real if np.abs(line.imag).max() <= imag_tol else None
    return SpectralKernel(m, f, separable=line is not None, line_values=line)
