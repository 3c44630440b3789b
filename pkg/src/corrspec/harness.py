"""Monte Carlo experiments tying samplers, ensembles, and limit solvers together.

Replicates are embarrassingly parallel: every replicate derives its own seed
from (root seed, size, replicate index, stream) and results are always
reduced in replicate order, so reports are bitwise reproducible for a fixed
config regardless of the worker count.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .covariance import (
    CovarianceFunction,
    check_conditions,
    gamma_from_linear,
    gamma_from_volterra,
    spectral_kernel,
)
from .ensembles import build_gram, build_wigner
from .errors import (
    CheckFailure,
    ConditionError,
    ConfigError,
    DomainError,
    ModelError,
)
from .field_models import (
    InnovationSpec,
    LinearCoefficients,
    VolterraCoefficients,
    sample_gaussian_matched_field,
    sample_linear_field,
    sample_volterra_field,
)
from .limits import SolverConfig, invert_stieltjes, solve_gram_grid, solve_kp_grid
from .spectra import (
    DistributionFunction,
    distribution_distance,
    eigenvalues,
    stieltjes_of_spectrum,
)

__all__ = [
    "ExperimentConfig",
    "UniversalityReport",
    "LimitComparisonReport",
    "ConcentrationReport",
    "analytic_covariance",
    "sample_spectrum",
    "run_universality",
    "run_limit_comparison",
    "run_concentration",
]

FIELD_STREAM = 0
MATCHED_STREAM = 1


@dataclass
class ExperimentConfig:
    """Everything a harness run depends on, hashable for provenance."""

    model: LinearCoefficients | VolterraCoefficients
    innovation: InnovationSpec
    ensemble: str = "wigner"
    mode: str = "lower_triangle"
    aspect: float = 1.0
    sizes: tuple[int, ...] = (128,)
    replicates: int = 10
    seed: int = 0
    z_points: tuple[complex, ...] = (1j,)
    solver: SolverConfig = field(default_factory=SolverConfig)
    eta: float = 0.02
    energy_points: int = 601
    energy_margin: float = 1.5
    levy_threshold: float | None = None
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.model, (LinearCoefficients, VolterraCoefficients)):
            raise ConfigError("model", f"unsupported model type {type(self.model).__name__}")
        if self.ensemble not in ("wigner", "gram"):
            raise ConfigError("ensemble", f"must be 'wigner' or 'gram', got {self.ensemble!r}")
        if self.ensemble == "gram" and not self.aspect > 0:
            raise ConfigError("aspect", f"must be positive, got {self.aspect}")
        sizes = tuple(int(n) for n in self.sizes)
        if not sizes or any(n < 2 for n in sizes) or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("sizes", "must be a strictly increasing list of orders >= 2")
        self.sizes = sizes
        if self.replicates < 1:
            raise ConfigError("replicates", "must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")
        zs = tuple(complex(z) for z in self.z_points)
        if not zs or any(not z.imag > 0 for z in zs):
            raise ConfigError("z_points", "every z must have Im z > 0")
        self.z_points = zs
        if not self.eta > 0:
            raise ConfigError("eta", "must be positive")
        if self.energy_points < 2:
            raise ConfigError("energy_points", "must be >= 2")
        if self.energy_margin <= 0:
            raise ConfigError("energy_margin", "must be positive")
        if self.levy_threshold is not None and not self.levy_threshold > 0:
            raise ConfigError("levy_threshold", "must be positive when set")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")

    def model_dict(self) -> dict:
        if isinstance(self.model, LinearCoefficients):
            return {
                "kind": "linear",
                "coefficients": sorted([k, l, a] for (k, l), a in self.model.values.items()),
            }
        return {
            "kind": "volterra",
            "linear": sorted([k, l, a] for (k, l), a in self.model.linear.items()),
            "quadratic": sorted(
                [u[0], u[1], v[0], v[1], b] for (u, v), b in self.model.quadratic.items()
            ),
        }

    def digest_dict(self) -> dict:
        return {
            "model": self.model_dict(),
            "innovation": [self.innovation.distribution, self.innovation.variance],
            "ensemble": self.ensemble,
            "mode": self.mode,
            "aspect": self.aspect,
            "sizes": list(self.sizes),
            "replicates": self.replicates,
            "seed": self.seed,
            "z_points": [[z.real, z.imag] for z in self.z_points],
            "solver": {
                "grid_size": self.solver.grid_size,
                "damping": self.solver.damping,
                "tolerance": self.solver.tolerance,
                "max_iterations": self.solver.max_iterations,
                "eta_path": list(self.solver.eta_path),
            },
            "eta": self.eta,
            "energy_points": self.energy_points,
            "energy_margin": self.energy_margin,
            "levy_threshold": self.levy_threshold,
        }

    def digest(self) -> str:
        blob = json.dumps(self.digest_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def seed_info(self) -> dict:
        return {
            "root": self.seed,
            "scheme": "seed_sequence([root, size, replicate, stream])",
        }


def _child_seed(root: int, size: int, replicate: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([root, size, replicate, stream])


def analytic_covariance(model, innovation: InnovationSpec) -> CovarianceFunction:
    if isinstance(model, LinearCoefficients):
        return gamma_from_linear(model, innovation.variance)
    return gamma_from_volterra(model, innovation.variance)


def _sample_model_patch(model, innovation, rows, cols, seed):
    if isinstance(model, LinearCoefficients):
        return sample_linear_field(model, innovation, rows, cols, seed)
    return sample_volterra_field(model, innovation, rows, cols, seed)


def _patch_shape(cfg: ExperimentConfig, n: int) -> tuple[int, int]:
    if cfg.ensemble == "wigner":
        return n, n
    p = max(1, round(n / cfg.aspect))
    return n, p


def _build(cfg: ExperimentConfig, patch, n: int):
    if cfg.ensemble == "wigner":
        return build_wigner(patch, cfg.mode)
    return build_gram(patch)


def _replicate_spectrum(cfg: ExperimentConfig, gamma, n: int, rep: int, stream: int):
    rows, cols = _patch_shape(cfg, n)
    seed = _child_seed(cfg.seed, n, rep, stream)
    if stream == MATCHED_STREAM:
        patch = sample_gaussian_matched_field(gamma, rows, cols, seed)
    else:
        patch = _sample_model_patch(cfg.model, cfg.innovation, rows, cols, seed)
    return eigenvalues(_build(cfg, patch, n))


def sample_spectrum(cfg: ExperimentConfig, size: int, replicate: int = 0, matched: bool = False):
    """One replicate's eigenvalues under the config's seed derivation."""
    gamma = analytic_covariance(cfg.model, cfg.innovation)
    stream = MATCHED_STREAM if matched else FIELD_STREAM
    return _replicate_spectrum(cfg, gamma, size, replicate, stream)


def _map_ordered(fn, items, workers: int):
    """Apply fn preserving item order; thread count never changes the result."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _stieltjes_rows(cfg, gamma, n, stream) -> np.ndarray:
    """(replicates x z_points) table of S values for one ensemble stream."""

    def one(rep):
        spec = _replicate_spectrum(cfg, gamma, n, rep, stream)
        return [stieltjes_of_spectrum(spec, z) for z in cfg.z_points]

    rows = _map_ordered(one, list(range(cfg.replicates)), cfg.workers)
    return np.asarray(rows, dtype=complex)


def _complex_std(values: np.ndarray) -> np.ndarray:
    """Columnwise sqrt of the unbiased mean squared deviation |v - mean|^2."""
    r = values.shape[0]
    if r < 2:
        return np.zeros(values.shape[1])
    centered = values - values.mean(axis=0, keepdims=True)
    return np.sqrt((np.abs(centered) ** 2).sum(axis=0) / (r - 1))


@dataclass
class UniversalityReport:
    sizes: tuple[int, ...]
    z_points: tuple[complex, ...]
    gaps: np.ndarray  # (sizes, z)
    mc_se: np.ndarray  # (sizes, z)
    replicate_gaps: list[np.ndarray]  # per size: (replicates, z)
    config_hash: str
    seeds: dict

    def to_dict(self) -> dict:
        return {
            "kind": "universality",
            "sizes": list(self.sizes),
            "z_points": [[z.real, z.imag] for z in self.z_points],
            "gaps": self.gaps.tolist(),
            "mc_se": self.mc_se.tolist(),
            "replicate_gaps": [a.tolist() for a in self.replicate_gaps],
            "config_hash": self.config_hash,
            "seeds": self.seeds,
        }


def run_universality(cfg: ExperimentConfig) -> UniversalityReport:
    """Compare the field ensemble with its Gaussian-matched twin across sizes.

    For each size the report holds |mean S_X(z) - mean S_G(z)| per z with a
    Monte Carlo standard error; the gap must not grow along the size list by
    more than twice the combined error, otherwise the run fails.
    """
    gamma = analytic_covariance(cfg.model, cfg.innovation)
    gaps, ses, per_rep = [], [], []
    for n in cfg.sizes:
        s_x = _stieltjes_rows(cfg, gamma, n, FIELD_STREAM)
        s_g = _stieltjes_rows(cfg, gamma, n, MATCHED_STREAM)
        mean_x = s_x.mean(axis=0)
        mean_g = s_g.mean(axis=0)
        gaps.append(np.abs(mean_x - mean_g))
        se = np.sqrt(_complex_std(s_x) ** 2 + _complex_std(s_g) ** 2) / math.sqrt(cfg.replicates)
        ses.append(se)
        per_rep.append(np.abs(s_x - mean_g[None, :]))
    gaps = np.asarray(gaps)
    ses = np.asarray(ses)
    for i in range(1, len(cfg.sizes)):
        allowed = gaps[i - 1] + 2.0 * np.sqrt(ses[i - 1] ** 2 + ses[i] ** 2)
        bad = gaps[i] > allowed
        if np.any(bad):
            j = int(np.argmax(bad))
            raise CheckFailure(
                f"universality gap grew from size {cfg.sizes[i - 1]} to {cfg.sizes[i]} "
                f"at z = {cfg.z_points[j]}: {gaps[i][j]:.4e} > {allowed[j]:.4e}"
            )
    return UniversalityReport(
        sizes=cfg.sizes,
        z_points=cfg.z_points,
        gaps=gaps,
        mc_se=ses,
        replicate_gaps=per_rep,
        config_hash=cfg.digest(),
        seeds=cfg.seed_info(),
    )


@dataclass
class LimitComparisonReport:
    sizes: tuple[int, ...]
    levy: list[float]
    kolmogorov: list[float]
    threshold: float | None
    energies: np.ndarray
    density: np.ndarray
    limit_cdf: DistributionFunction
    pooled_values: list[np.ndarray]  # per size, pooled eigenvalues
    config_hash: str
    seeds: dict

    def to_dict(self) -> dict:
        return {
            "kind": "limit_comparison",
            "sizes": list(self.sizes),
            "levy": self.levy,
            "kolmogorov": self.kolmogorov,
            "threshold": self.threshold,
            "config_hash": self.config_hash,
            "seeds": self.seeds,
        }


def run_limit_comparison(cfg: ExperimentConfig) -> LimitComparisonReport:
    """Pooled empirical spectra against the solved limit distribution.

    Levy and Kolmogorov distances are reported per size; the Levy distance at
    the largest size must not exceed the configured threshold.
    """
    gamma = analytic_covariance(cfg.model, cfg.innovation)
    conditions = check_conditions(gamma)
    if cfg.ensemble == "wigner" and not conditions.symmetric_exchange:
        raise ConditionError(
            "symmetric-route limit requires exchange symmetry gamma[k, l] == gamma[l, k]"
        )
    kernel = spectral_kernel(gamma, cfg.solver.grid_size)

    pooled: list[np.ndarray] = []
    cdfs: list[DistributionFunction] = []
    for n in cfg.sizes:
        def one(rep, n=n):
            return _replicate_spectrum(cfg, gamma, n, rep, FIELD_STREAM)

        spectra = _map_ordered(one, list(range(cfg.replicates)), cfg.workers)
        pooled.append(np.concatenate([s.values for s in spectra]))
        cdfs.append(DistributionFunction.pooled(spectra))

    emp_lo = min(float(v.min()) for v in pooled)
    emp_hi = max(float(v.max()) for v in pooled)
    fmax = float(kernel.values.max())
    if cfg.ensemble == "wigner":
        edge = 2.0 * math.sqrt(max(fmax, 0.0))
        lo, hi = min(-edge, emp_lo), max(edge, emp_hi)
    else:
        edge = (1.0 + math.sqrt(cfg.aspect)) ** 2 * max(fmax, 0.0)
        lo, hi = min(0.0, emp_lo), max(edge, emp_hi)
    energies = np.linspace(lo - cfg.energy_margin, hi + cfg.energy_margin, cfg.energy_points)

    if cfg.ensemble == "wigner":
        solution = solve_kp_grid(kernel, energies, cfg.eta, cfg.solver)
    else:
        solution = solve_gram_grid(kernel, cfg.aspect, energies, cfg.eta, cfg.solver)
    density, limit_cdf = invert_stieltjes(solution, cfg.eta)

    levy = [distribution_distance(c, limit_cdf, "levy") for c in cdfs]
    kolm = [distribution_distance(c, limit_cdf, "kolmogorov") for c in cdfs]
    if cfg.levy_threshold is not None and levy[-1] > cfg.levy_threshold:
        raise CheckFailure(
            f"Levy distance {levy[-1]:.4f} at size {cfg.sizes[-1]} exceeds "
            f"threshold {cfg.levy_threshold}"
        )
    return LimitComparisonReport(
        sizes=cfg.sizes,
        levy=levy,
        kolmogorov=kolm,
        threshold=cfg.levy_threshold,
        energies=energies,
        density=density,
        limit_cdf=limit_cdf,
        pooled_values=pooled,
        config_hash=cfg.digest(),
        seeds=cfg.seed_info(),
    )


@dataclass
class ConcentrationReport:
    sizes: tuple[int, ...]
    r_values: tuple[float, ...]
    z: complex
    k_declared: int
    k_effective: int
    frequencies: np.ndarray  # (sizes, r)
    bounds: np.ndarray  # (sizes, r)
    slacks: np.ndarray  # (sizes, r)
    stds: np.ndarray  # (sizes,)
    decay_exponent: float
    config_hash: str
    seeds: dict

    def to_dict(self) -> dict:
        return {
            "kind": "concentration",
            "sizes": list(self.sizes),
            "r_values": list(self.r_values),
            "z": [self.z.real, self.z.imag],
            "k_declared": self.k_declared,
            "k_effective": self.k_effective,
            "frequencies": self.frequencies.tolist(),
            "bounds": self.bounds.tolist(),
            "slacks": self.slacks.tolist(),
            "stds": self.stds.tolist(),
            "decay_exponent": self.decay_exponent,
            "config_hash": self.config_hash,
            "seeds": self.seeds,
        }


def run_concentration(cfg: ExperimentConfig, k_dep: int, r_values) -> ConcentrationReport:
    """Tail frequencies of |S - mean S| against the K-dependent tail bound.

    The field must be K-dependent by construction: a model of support radius
    m is 2m-dependent, so the declared K must be at least 2m.  The bound uses
    max(K, 1); the expectation is estimated by the replicate mean.
    """
    if cfg.replicates < 100:
        raise ConfigError("replicates", "concentration runs need at least 100 replicates")
    r_values = tuple(float(r) for r in r_values)
    if not r_values or any(r <= 0 for r in r_values):
        raise DomainError("r values must be positive")
    radius = cfg.model.support_radius()
    if k_dep < 2 * radius:
        raise ModelError(
            f"declared dependence K = {k_dep} below 2 x support radius = {2 * radius}"
        )
    k_eff = max(int(k_dep), 1)
    z = cfg.z_points[0]
    v = z.imag
    gamma = analytic_covariance(cfg.model, cfg.innovation)

    freqs, bounds, slacks, stds = [], [], [], []
    for n in cfg.sizes:
        table = _stieltjes_rows(cfg, gamma, n, FIELD_STREAM)[:, 0]
        dev = np.abs(table - table.mean())
        row_f, row_b, row_s = [], [], []
        for r in r_values:
            freq = float((dev >= r).mean())
            bound = 4.0 * math.exp(-n * r * r * v * v / (2560.0 * k_eff))
            b = min(bound, 1.0)
            slack = 2.576 * math.sqrt(b * (1.0 - b) / cfg.replicates)
            if freq > bound + slack:
                raise CheckFailure(
                    f"tail frequency {freq:.4f} at n = {n}, r = {r} exceeds "
                    f"bound {bound:.4f} + slack {slack:.4f}"
                )
            row_f.append(freq)
            row_b.append(bound)
            row_s.append(slack)
        freqs.append(row_f)
        bounds.append(row_b)
        slacks.append(row_s)
        centered = table - table.mean()
        stds.append(float(np.sqrt((np.abs(centered) ** 2).sum() / (len(table) - 1))))

    # The tail check above is the contract; the fitted decay rate of std(S)
    # is informational and judged by the caller.
    if len(cfg.sizes) >= 2 and all(s > 0 for s in stds):
        slope = float(np.polyfit(np.log(np.asarray(cfg.sizes, float)), np.log(stds), 1)[0])
    else:
        slope = float("nan")

    return ConcentrationReport(
        sizes=cfg.sizes,
        r_values=r_values,
        z=z,
        k_declared=int(k_dep),
        k_effective=k_eff,
        frequencies=np.asarray(freqs),
        bounds=np.asarray(bounds),
        slacks=np.asarray(slacks),
        stds=np.asarray(stds),
        decay_exponent=slope,
        config_hash=cfg.digest(),
        seeds=cfg.seed_info(),
    )
