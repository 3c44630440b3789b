"""Empirical spectra, their transforms, and distances between distributions.

The Levy distance is evaluated through its sandwich definition: a candidate
epsilon is feasible when F(x - eps) - eps <= G(x) <= F(x + eps) + eps for all
x.  Both suprema are attained at breakpoints of the two distribution
functions (evaluated from the left and from the right), so feasibility is
decided exactly and the infimum is then bisected.  epsilon = 1 is always
feasible, which gives the bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, NumericError
from .ensembles import GramEnsemble, SymmetricEnsemble

__all__ = [
    "EmpiricalSpectrum",
    "DistributionFunction",
    "eigenvalues",
    "stieltjes_of_spectrum",
    "distribution_distance",
    "trace_comparison_bound",
    "write_spectrum_csv",
    "write_distribution_csv",
]


@dataclass
class EmpiricalSpectrum:
    """Eigenvalues of one ensemble realization, sorted ascending."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 1:
            raise DimensionError("spectrum must be a nonempty 1-d array")
        if not np.all(np.isfinite(self.values)):
            raise NumericError("spectrum contains non-finite values")
        self.values = np.sort(self.values)

    @property
    def n(self) -> int:
        return self.values.size


def _ensemble_matrix(ensemble) -> np.ndarray:
    if isinstance(ensemble, SymmetricEnsemble):
        return ensemble.entries
    if isinstance(ensemble, GramEnsemble):
        return ensemble.matrix
    arr = np.asarray(ensemble, dtype=float)
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return arr
    raise DimensionError(f"cannot extract a square matrix from {type(ensemble).__name__}")


def eigenvalues(ensemble) -> EmpiricalSpectrum:
    """Full symmetric eigensolve, checked against the trace identity."""
    a = _ensemble_matrix(ensemble)
    if not np.all(np.isfinite(a)):
        raise NumericError("ensemble matrix contains non-finite entries")
    lam = np.linalg.eigvalsh(a)
    n = a.shape[0]
    scale = float(np.abs(a).max()) if a.size else 0.0
    if abs(float(lam.sum()) - float(np.trace(a))) > 1e-9 * n * max(scale, 1e-300):
        raise NumericError("eigensolve failed the trace identity check")
    return EmpiricalSpectrum(lam)


def stieltjes_of_spectrum(spectrum: EmpiricalSpectrum, z: complex) -> complex:
    """(1/n) sum_i 1 / (lambda_i - z) for z in the open upper half plane."""
    if not z.imag > 0:
        raise DomainError(f"z must satisfy Im z > 0, got {z}")
    return complex(np.mean(1.0 / (spectrum.values - z)))


@dataclass
class DistributionFunction:
    """Distribution function on the line, either a step CDF or a linear one.

    xs are sorted breakpoints; ys are the CDF values at those points.  A step
    function is right continuous with value ys[i] on [xs[i], xs[i+1]); the
    linear kind interpolates between the points and is flat outside them.
    """

    xs: np.ndarray
    ys: np.ndarray
    kind: str = "step"

    def __post_init__(self):
        if self.kind not in ("step", "linear"):
            raise DomainError(f"unknown distribution kind {self.kind!r}")
        self.xs = np.asarray(self.xs, dtype=float)
        self.ys = np.asarray(self.ys, dtype=float)
        if self.xs.ndim != 1 or self.xs.shape != self.ys.shape or self.xs.size < 1:
            raise DimensionError("xs and ys must be matching nonempty 1-d arrays")
        if not (np.all(np.isfinite(self.xs)) and np.all(np.isfinite(self.ys))):
            raise NumericError("distribution function contains non-finite values")
        if np.any(np.diff(self.xs) < 0):
            raise DomainError("breakpoints must be sorted")
        if np.any(np.diff(self.ys) < -1e-12):
            raise DomainError("distribution function must be nondecreasing")
        if self.ys[0] < -1e-12 or abs(self.ys[-1] - 1.0) > 1e-9:
            raise DomainError("distribution function must run from 0 to 1")
        self.ys = np.clip(self.ys, 0.0, 1.0)

    @classmethod
    def from_spectrum(cls, spectrum: EmpiricalSpectrum) -> "DistributionFunction":
        xs, counts = np.unique(spectrum.values, return_counts=True)
        return cls(xs, np.cumsum(counts) / spectrum.n, kind="step")

    @classmethod
    def pooled(cls, spectra) -> "DistributionFunction":
        """Mean of the step CDFs of equally sized spectra (their pooled ESD)."""
        spectra = list(spectra)
        if not spectra:
            raise DimensionError("need at least one spectrum")
        sizes = {s.n for s in spectra}
        if len(sizes) != 1:
            raise DimensionError("pooled requires equally sized spectra")
        merged = np.concatenate([s.values for s in spectra])
        return cls.from_spectrum(EmpiricalSpectrum(merged))

    def evaluate(self, x, side: str = "right") -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == "linear":
            return np.interp(x, self.xs, self.ys)
        pos = np.searchsorted(self.xs, x, side="right" if side == "right" else "left")
        padded = np.concatenate(([0.0], self.ys))
        return padded[pos]


def _sup_shifted_gap(f: DistributionFunction, g: DistributionFunction, eps: float) -> float:
    """sup over x of f(x - eps) - g(x), exact for step / linear functions."""
    cand = np.concatenate((f.xs + eps, g.xs))
    best = -math.inf
    for side in ("right", "left"):
        vals = f.evaluate(cand - eps, side) - g.evaluate(cand, side)
        best = max(best, float(vals.max()))
    return best


def _levy(f: DistributionFunction, g: DistributionFunction, tol: float = 1e-12) -> float:
    def feasible(eps: float) -> bool:
        return (
            _sup_shifted_gap(f, g, eps) <= eps
            and _sup_shifted_gap(g, f, eps) <= eps
        )

    if feasible(0.0):
        return 0.0
    xs_all = np.concatenate((f.xs, g.xs))
    lo, hi = 0.0, 1.0 + float(xs_all.max() - xs_all.min())
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _kolmogorov(f: DistributionFunction, g: DistributionFunction) -> float:
    cand = np.concatenate((f.xs, g.xs))
    best = 0.0
    for side in ("right", "left"):
        vals = np.abs(f.evaluate(cand, side) - g.evaluate(cand, side))
        best = max(best, float(vals.max()))
    return best


def distribution_distance(f: DistributionFunction, g: DistributionFunction, kind: str = "levy") -> float:
    """Levy or Kolmogorov distance between two distribution functions."""
    if kind == "levy":
        return _levy(f, g)
    if kind == "kolmogorov":
        return _kolmogorov(f, g)
    raise DomainError(f"unknown distance kind {kind!r}")


def trace_comparison_bound(a, b, z: complex) -> tuple[float, float]:
    """Squared resolvent-trace gap of two same-order matrices and its bound.

    For symmetric M, N of order n with entries on the normalized scale,
    |S_M(z) - S_N(z)|^2 <= Tr((M - N)^2) / (n Im(z)^4), an instance of the
    quadratic trace comparison for n^(1/2)-scaled matrices.  The inequality
    is deterministic; a violation beyond rounding raises.
    """
    ma, mb = _ensemble_matrix(a), _ensemble_matrix(b)
    if ma.shape != mb.shape:
        raise DimensionError(f"order mismatch: {ma.shape} vs {mb.shape}")
    if z.imag == 0:
        raise DomainError("z must have nonzero imaginary part")
    n = ma.shape[0]
    v = abs(z.imag)
    sa = complex(np.mean(1.0 / (np.linalg.eigvalsh(ma) - z)))
    sb = complex(np.mean(1.0 / (np.linalg.eigvalsh(mb) - z)))
    gap = abs(sa - sb) ** 2
    diff = ma - mb
    bound = float((diff * diff).sum()) / (n * v ** 4)
    if gap > bound + 1e-12 * (1.0 + bound):
        raise NumericError(f"trace comparison inequality violated: {gap} > {bound}")
    return gap, bound


def _format(x: float) -> str:
    return format(float(x), ".17g")


def write_spectrum_csv(spectrum: EmpiricalSpectrum, path) -> None:
    """One eigenvalue per row, single column."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("eigenvalue\n")
        for lam in spectrum.values:
            fh.write(_format(lam) + "\n")


def write_distribution_csv(dist: DistributionFunction, path) -> None:
    """Two columns: x, F(x)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,cdf\n")
        for x, y in zip(dist.xs, dist.ys):
            fh.write(_format(x) + "," + _format(y) + "\n")
