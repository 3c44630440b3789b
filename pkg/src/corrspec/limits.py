"""Limiting spectral distributions via self-consistent resolvent equations.

Symmetric case: h(x, z) = (-z - integral f(x, y) h(y, z) dy)^(-1) on [0, 1],
with S(z) = integral h(x, z) dx.  Gram case with aspect c:
h(x, z) = (-z + integral f(x, s) / (1 + c integral f(u, s) h(u, z) du) ds)^(-1).
When the kernel factors, the symmetric equation collapses to a scalar one
over the distribution of the factor values:
w(z) = integral lambda / (-z - lambda w(z)) d upsilon(lambda).

All three are solved by damped fixed-point iteration, continued in the
imaginary part of z from a safely dissipative height down to the target.
A solution is accepted only inside the admissible class: Im h > 0 on the
upper half plane and Im(z) |h| <= 1 (up to a small margin).
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .covariance import SpectralKernel
from .errors import (
    BranchError,
    ConvergenceError,
    DimensionError,
    DomainError,
    InvalidCovarianceError,
    SupportCoverageError,
)
from .spectra import DistributionFunction

__all__ = [
    "SolverConfig",
    "LimitSolution",
    "SpectralMeasureOnLine",
    "solve_kp",
    "solve_gram_limit",
    "solve_separable",
    "solve_kp_grid",
    "solve_gram_grid",
    "solve_separable_grid",
    "invert_stieltjes",
    "reference_stieltjes",
]

CLASS_MARGIN = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the damped fixed-point solver."""

    grid_size: int = 256
    damping: float = 0.5
    tolerance: float = 1e-9
    max_iterations: int = 10_000
    eta_path: tuple[float, ...] = (2.0, 1.0, 0.5, 0.25, 0.1)

    def __post_init__(self):
        if self.grid_size < 8:
            raise DomainError(f"grid size must be >= 8, got {self.grid_size}")
        if not 0.0 < self.damping <= 1.0:
            raise DomainError(f"damping must lie in (0, 1], got {self.damping}")
        if not self.tolerance > 0:
            raise DomainError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        path = tuple(float(e) for e in self.eta_path)
        if any(e <= 0 for e in path) or any(b >= a for a, b in zip(path, path[1:])):
            raise DomainError("eta_path must be strictly decreasing and positive")
        object.__setattr__(self, "eta_path", path)


@dataclass
class SpectralMeasureOnLine:
    """Discrete measure of kernel factor values: atoms lambda_i with weights."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.atoms = np.asarray(self.atoms, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.atoms.ndim != 1 or self.atoms.shape != self.weights.shape or self.atoms.size < 1:
            raise DimensionError("atoms and weights must be matching nonempty 1-d arrays")
        if np.any(self.atoms < 0):
            raise DomainError("atoms must be nonnegative")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-9:
            raise DomainError("weights must be nonnegative and sum to one")
        order = np.argsort(self.atoms)
        self.atoms = self.atoms[order]
        self.weights = self.weights[order]

    @classmethod
    def point_mass(cls, lam: float) -> "SpectralMeasureOnLine":
        return cls(np.array([lam]), np.array([1.0]))

    @classmethod
    def from_kernel_line(cls, kernel: SpectralKernel) -> "SpectralMeasureOnLine":
        """Distribution of the 1-d factor samples under the uniform grid."""
        if not kernel.separable or kernel.line_values is None:
            raise InvalidCovarianceError("kernel does not carry a separable factor")
        line = np.array(kernel.line_values, dtype=float)
        # the factor is defined up to a global sign; a valid kernel has a
        # single-signed factor, so flip when the negative side dominates
        if -line.min() > line.max():
            line = -line
        scale = max(float(np.abs(line).max()), 1e-300)
        if line.min() < -1e-10 * scale:
            raise InvalidCovarianceError("separable factor changes sign; kernel is not a covariance")
        line = np.clip(line, 0.0, None)
        m = line.size
        return cls(line, np.full(m, 1.0 / m))


@dataclass
class LimitSolution:
    """Solutions along a horizontal line Im z = eta in the upper half plane."""

    kind: str
    energies: np.ndarray
    eta: float
    stieltjes: np.ndarray
    h_values: np.ndarray
    iterations: np.ndarray
    grid_size: int

    def __post_init__(self):
        self.energies = np.asarray(self.energies, dtype=float)
        self.stieltjes = np.asarray(self.stieltjes, dtype=complex)
        self.h_values = np.asarray(self.h_values, dtype=complex)
        self.iterations = np.asarray(self.iterations, dtype=int)
        if self.eta <= 0:
            raise DomainError("eta must be positive")
        if np.any(self.h_values.imag * np.sign(self.eta) < 0):
            raise BranchError("solution leaves the admissible class: Im h < 0")
        if np.any(self.eta * np.abs(self.h_values) > 1.0 + CLASS_MARGIN):
            raise BranchError("solution leaves the admissible class: eta |h| > 1")


def _damped_fixed_point(update, h0, cfg: SolverConfig):
    """Iterate h <- (1 - a) h + a update(h) until the step is below tolerance."""
    h = h0
    change = math.inf
    for it in range(1, cfg.max_iterations + 1):
        hn = (1.0 - cfg.damping) * h + cfg.damping * update(h)
        if not np.all(np.isfinite(hn.view(float))):
            raise ConvergenceError("iteration produced non-finite values", residual=change)
        change = float(np.max(np.abs(hn - h)))
        h = hn
        if change < cfg.tolerance:
            return h, it
    raise ConvergenceError(
        f"no convergence in {cfg.max_iterations} iterations (last step {change:.3e})",
        residual=change,
    )


def _class_check(h, z: complex, strict: bool = True):
    h = np.atleast_1d(np.asarray(h, dtype=complex))
    if strict and np.any(h.imag <= 0):
        raise BranchError(f"solution at z = {z} has nonpositive imaginary part")
    if not strict and np.any(h.imag < -1e-12 * (1.0 + np.abs(h))):
        raise BranchError(f"solution at z = {z} has negative imaginary part")
    if np.any(z.imag * np.abs(h) > 1.0 + CLASS_MARGIN):
        raise BranchError(f"solution at z = {z} violates Im(z) |h| <= 1")


def _require_upper(z: complex) -> complex:
    z = complex(z)
    if not z.imag > 0:
        raise DomainError(f"z must lie in the open upper half plane, got {z}")
    return z


def _symmetrized(kernel: SpectralKernel) -> np.ndarray:
    f = kernel.values
    asym = float(np.abs(f - f.T).max())
    if asym > 1e-8 * max(1.0, float(np.abs(f).max())):
        warnings.warn(
            f"kernel asymmetry {asym:.3e} exceeds tolerance; symmetrizing, "
            "but the underlying covariance likely lacks exchange symmetry",
            stacklevel=3,
        )
    return 0.5 * (f + f.T)


def _continuation_targets(z: complex, cfg: SolverConfig):
    return [complex(z.real, e) for e in cfg.eta_path if e > z.imag] + [z]


def _solve_kp_at(fmat: np.ndarray, z: complex, cfg: SolverConfig, h0: np.ndarray):
    m = fmat.shape[0]

    def update(h):
        return 1.0 / (-z - fmat @ h / m)

    return _damped_fixed_point(update, h0, cfg)


def solve_kp(
    kernel: SpectralKernel,
    z: complex,
    cfg: SolverConfig | None = None,
    warm_start: np.ndarray | None = None,
) -> tuple[np.ndarray, complex]:
    """Solve the symmetric-case equation at one z; returns (h on the grid, S)."""
    cfg = cfg or SolverConfig()
    z = _require_upper(z)
    fmat = _symmetrized(kernel)
    m = kernel.grid_size
    if warm_start is not None:
        h = np.asarray(warm_start, dtype=complex)
        if h.shape != (m,):
            raise DimensionError("warm start shape does not match the kernel grid")
        h, _ = _solve_kp_at(fmat, z, cfg, h)
    else:
        h = None
        for target in _continuation_targets(z, cfg):
            h0 = h if h is not None else np.full(m, -1.0 / target, dtype=complex)
            h, _ = _solve_kp_at(fmat, target, cfg, h0)
    _class_check(h, z)
    return h, complex(h.mean())


def _solve_gram_at(fmat: np.ndarray, c: float, z: complex, cfg: SolverConfig, h0: np.ndarray):
    m = fmat.shape[0]

    def update(h):
        denom = 1.0 + c * (fmat.T @ h) / m
        return 1.0 / (-z + fmat @ (1.0 / denom) / m)

    return _damped_fixed_point(update, h0, cfg)


def solve_gram_limit(
    kernel: SpectralKernel,
    c: float,
    z: complex,
    cfg: SolverConfig | None = None,
    warm_start: np.ndarray | None = None,
) -> tuple[np.ndarray, complex]:
    """Solve the Gram-case equation with aspect c at one z; returns (h, S)."""
    cfg = cfg or SolverConfig()
    z = _require_upper(z)
    if not c > 0:
        raise DomainError(f"aspect ratio must be positive, got {c}")
    fmat = np.asarray(kernel.values, dtype=float)
    m = kernel.grid_size
    if warm_start is not None:
        h = np.asarray(warm_start, dtype=complex)
        if h.shape != (m,):
            raise DimensionError("warm start shape does not match the kernel grid")
        h, _ = _solve_gram_at(fmat, c, z, cfg, h)
    else:
        h = None
        for target in _continuation_targets(z, cfg):
            h0 = h if h is not None else np.full(m, -1.0 / target, dtype=complex)
            h, _ = _solve_gram_at(fmat, c, target, cfg, h0)
    _class_check(h, z)
    return h, complex(h.mean())


def solve_separable(
    measure: SpectralMeasureOnLine,
    z: complex,
    cfg: SolverConfig | None = None,
    warm_start: complex | None = None,
) -> tuple[complex, complex]:
    """Scalar route for separable kernels; returns (h, S).

    h solves h = integral lambda / (-z - lambda h) d upsilon and
    S = integral (-z - lambda h)^(-1) d upsilon.
    """
    cfg = cfg or SolverConfig()
    z = _require_upper(z)
    lam = measure.atoms
    wts = measure.weights
    degenerate = bool(lam.max() == 0.0)

    def make_update(zz):
        def update(h):
            return np.asarray([(wts * lam / (-zz - lam * h[0])).sum()], dtype=complex)

        return update

    if warm_start is not None:
        h0 = np.asarray([warm_start], dtype=complex)
        h, _ = _damped_fixed_point(make_update(z), h0, cfg)
    else:
        h = None
        for target in _continuation_targets(z, cfg):
            h0 = h if h is not None else np.asarray([-lam.mean() / target], dtype=complex)
            h, _ = _damped_fixed_point(make_update(target), h0, cfg)
    _class_check(h, z, strict=not degenerate)
    hval = complex(h[0])
    s = complex((wts / (-z - lam * hval)).sum())
    return hval, s


def _grid_solve(kind, solve_one, energies, eta, grid_size) -> LimitSolution:
    energies = np.asarray(energies, dtype=float)
    if energies.ndim != 1 or energies.size < 1:
        raise DimensionError("energies must be a nonempty 1-d array")
    if np.any(np.diff(energies) <= 0):
        raise DomainError("energies must be strictly increasing")
    if not eta > 0:
        raise DomainError("eta must be positive")
    hs, ss, its = [], [], []
    warm = None
    for e in energies:
        h, s, it = solve_one(complex(e, eta), warm)
        warm = h
        hs.append(np.atleast_1d(h))
        ss.append(s)
        its.append(it)
    return LimitSolution(
        kind=kind,
        energies=energies,
        eta=float(eta),
        stieltjes=np.array(ss),
        h_values=np.column_stack(hs),
        iterations=np.array(its),
        grid_size=grid_size,
    )


def solve_kp_grid(kernel, energies, eta, cfg: SolverConfig | None = None) -> LimitSolution:
    """Sweep the symmetric-case solution along Im z = eta, warm starting in E."""
    cfg = cfg or SolverConfig()
    fmat = _symmetrized(kernel)
    m = kernel.grid_size

    def solve_one(z, warm):
        z = _require_upper(z)
        if warm is None:
            h = None
            total = 0
            for target in _continuation_targets(z, cfg):
                h0 = h if h is not None else np.full(m, -1.0 / target, dtype=complex)
                h, it = _solve_kp_at(fmat, target, cfg, h0)
                total += it
        else:
            h, total = _solve_kp_at(fmat, z, cfg, warm)
        _class_check(h, z)
        return h, complex(h.mean()), total

    return _grid_solve("kp", solve_one, energies, eta, m)


def solve_gram_grid(kernel, c, energies, eta, cfg: SolverConfig | None = None) -> LimitSolution:
    """Sweep the Gram-case solution along Im z = eta, warm starting in E."""
    cfg = cfg or SolverConfig()
    if not c > 0:
        raise DomainError(f"aspect ratio must be positive, got {c}")
    fmat = np.asarray(kernel.values, dtype=float)
    m = kernel.grid_size

    def solve_one(z, warm):
        z = _require_upper(z)
        if warm is None:
            h = None
            total = 0
            for target in _continuation_targets(z, cfg):
                h0 = h if h is not None else np.full(m, -1.0 / target, dtype=complex)
                h, it = _solve_gram_at(fmat, c, target, cfg, h0)
                total += it
        else:
            h, total = _solve_gram_at(fmat, c, z, cfg, warm)
        _class_check(h, z)
        return h, complex(h.mean()), total

    return _grid_solve("gram", solve_one, energies, eta, m)


def solve_separable_grid(measure, energies, eta, cfg: SolverConfig | None = None) -> LimitSolution:
    cfg = cfg or SolverConfig()

    def solve_one(z, warm):
        warm_val = complex(warm[0]) if warm is not None else None
        h, s = solve_separable(measure, z, cfg, warm_start=warm_val)
        return np.asarray([h]), s, 0

    return _grid_solve("separable", solve_one, energies, eta, measure.atoms.size)


def invert_stieltjes(solution: LimitSolution, eta: float) -> tuple[np.ndarray, DistributionFunction]:
    """Recover (density samples, CDF) on the energy grid from S(E + i eta).

    density(E) = Im S(E + i eta) / pi.  The trapezoid mass must land within
    3 percent of one, otherwise the grid does not cover the support; the CDF
    is renormalized to end exactly at one.
    """
    if abs(solution.eta - eta) > 1e-12 * max(1.0, abs(eta)):
        raise DomainError(
            f"solution was computed at eta = {solution.eta}, requested {eta}"
        )
    e = solution.energies
    if e.size < 2:
        raise DimensionError("need at least two energy points to integrate")
    density = solution.stieltjes.imag / math.pi
    mass = float(np.trapezoid(density, e))
    if not 0.97 <= mass <= 1.03:
        raise SupportCoverageError(
            f"recovered mass {mass:.4f} outside [0.97, 1.03]; "
            "the energy grid misses spectral support"
        )
    steps = 0.5 * (density[1:] + density[:-1]) * np.diff(e)
    cdf = np.concatenate(([0.0], np.cumsum(steps))) / mass
    cdf[-1] = 1.0
    return density, DistributionFunction(e, cdf, kind="linear")


def _pick_herglotz(candidates, z: complex) -> complex:
    best = [w for w in candidates if w.imag > 0]
    if len(best) != 1:
        raise BranchError(f"could not isolate the upper-half-plane branch at z = {z}")
    return best[0]


def reference_stieltjes(law: str, params: dict, z: complex) -> complex:
    """Closed-form transforms used as oracles: semicircle and Marchenko-Pastur."""
    z = _require_upper(z)
    if law == "semicircle":
        var = float(params.get("variance", 1.0))
        if not var > 0:
            raise DomainError(f"variance must be positive, got {var}")
        w = cmath.sqrt(z * z - 4.0 * var)
        return _pick_herglotz([(-z + w) / (2 * var), (-z - w) / (2 * var)], z)
    if law == "marchenko_pastur":
        c = float(params["ratio"])
        var = float(params.get("variance", 1.0))
        if not (c > 0 and var > 0):
            raise DomainError(f"need positive ratio and variance, got c = {c}, var = {var}")
        zz = z / var
        w = cmath.sqrt((zz - 1.0 - c) ** 2 - 4.0 * c)
        roots = [((1.0 - c) - zz + w) / (2 * c * zz), ((1.0 - c) - zz - w) / (2 * c * zz)]
        return _pick_herglotz(roots, z) / var
    raise DomainError(f"unknown reference law {law!r}")
