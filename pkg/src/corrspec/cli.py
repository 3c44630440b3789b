"""Command line entry points.

Exit codes: 0 on success, 2 on validation errors (bad config, bad model),
3 on numeric failures (divergence, failed bound or distance checks).
Artifacts are computed fully in memory and only written afterwards, so a
failing run never leaves a partial output directory behind.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .covariance import spectral_kernel
from .ensembles import BlockingPlan, SymmetricEnsemble, lindeberg_decomposition_check
from .errors import (
    CheckFailure,
    ConfigError,
    NumericError,
    ValidationError,
)
from .field_models import (
    InnovationSpec,
    LinearCoefficients,
    VolterraCoefficients,
    truncate_to_window,
)
from .harness import (
    ExperimentConfig,
    analytic_covariance,
    run_concentration,
    run_limit_comparison,
    run_universality,
    sample_spectrum,
)
from .limits import (
    SolverConfig,
    invert_stieltjes,
    reference_stieltjes,
    solve_gram_grid,
    solve_gram_limit,
    solve_kp,
    solve_kp_grid,
)
from .spectra import (
    eigenvalues,
    stieltjes_of_spectrum,
    trace_comparison_bound,
    write_distribution_csv,
    write_spectrum_csv,
)

log = logging.getLogger("corrspec")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging():
    raw = os.environ.get("CORRSPEC_LOG", "warn").strip().lower()
    level = _LOG_LEVELS.get(raw, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if raw not in _LOG_LEVELS:
        log.warning("unknown CORRSPEC_LOG value %r, using warn", raw)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _write_rows(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# config parsing


def _parse_lag(text: str, path: str):
    parts = str(text).split(",")
    if len(parts) != 2:
        raise ConfigError(path, f"lag key must look like 'k,l', got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(path, f"lag key must hold two integers, got {text!r}") from None


def _parse_lag_map(raw, path: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(path, "must be an object mapping 'k,l' to a number")
    out = {}
    for key, val in raw.items():
        lag = _parse_lag(key, f"{path}.{key}")
        try:
            out[lag] = float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}.{key}", f"value must be a number, got {val!r}") from None
    return out


def _parse_pair_map(raw, path: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(path, "must be an object mapping 'k,l;k,l' to a number")
    out = {}
    for key, val in raw.items():
        halves = str(key).split(";")
        if len(halves) != 2:
            raise ConfigError(f"{path}.{key}", "offset pair key must look like 'k,l;k,l'")
        u = _parse_lag(halves[0], f"{path}.{key}")
        v = _parse_lag(halves[1], f"{path}.{key}")
        try:
            out[(u, v)] = float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}.{key}", f"value must be a number, got {val!r}") from None
    return out


def _parse_model(raw, path="model"):
    if not isinstance(raw, dict):
        raise ConfigError(path, "must be an object with a 'kind' field")
    kind = raw.get("kind")
    if kind == "linear":
        return LinearCoefficients(_parse_lag_map(raw.get("coefficients", {}), f"{path}.coefficients"))
    if kind == "volterra":
        return VolterraCoefficients(
            _parse_lag_map(raw.get("linear", {}), f"{path}.linear"),
            _parse_pair_map(raw.get("quadratic", {}), f"{path}.quadratic"),
        )
    raise ConfigError(f"{path}.kind", f"must be 'linear' or 'volterra', got {kind!r}")


def _parse_innovation(raw, path="innovation") -> InnovationSpec:
    if raw is None:
        return InnovationSpec()
    if not isinstance(raw, dict):
        raise ConfigError(path, "must be an object")
    return InnovationSpec(
        distribution=raw.get("distribution", "standard_gaussian"),
        variance=float(raw.get("variance", 1.0)),
    )


def _parse_solver(raw, path="solver") -> SolverConfig:
    if raw is None:
        return SolverConfig()
    if not isinstance(raw, dict):
        raise ConfigError(path, "must be an object")
    kwargs = {}
    for field in ("grid_size", "max_iterations"):
        if field in raw:
            kwargs[field] = int(raw[field])
    for field in ("damping", "tolerance"):
        if field in raw:
            kwargs[field] = float(raw[field])
    if "eta_path" in raw:
        kwargs["eta_path"] = tuple(float(e) for e in raw["eta_path"])
    return SolverConfig(**kwargs)


def load_raw_config(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config file: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(str(path), "top level must be a JSON object")
    return raw


def build_experiment(raw: dict, threads=None, seed=None) -> ExperimentConfig:
    if "model" not in raw:
        raise ConfigError("model", "missing required field")
    model = _parse_model(raw["model"])
    if "window" in raw and raw["window"] is not None:
        model = truncate_to_window(model, int(raw["window"]))
    try:
        zs = tuple(complex(z[0], z[1]) for z in raw.get("z_points", [[0.0, 1.0]]))
    except (TypeError, IndexError):
        raise ConfigError("z_points", "must be a list of [re, im] pairs") from None
    return ExperimentConfig(
        model=model,
        innovation=_parse_innovation(raw.get("innovation")),
        ensemble=raw.get("ensemble", "wigner"),
        mode=raw.get("mode", "lower_triangle"),
        aspect=float(raw.get("aspect", 1.0)),
        sizes=tuple(raw.get("sizes", [128])),
        replicates=int(raw.get("replicates", 10)),
        seed=int(seed if seed is not None else raw.get("seed", 0)),
        z_points=zs,
        solver=_parse_solver(raw.get("solver")),
        eta=float(raw.get("eta", 0.02)),
        energy_points=int(raw.get("energy_points", 601)),
        energy_margin=float(raw.get("energy_margin", 1.5)),
        levy_threshold=(
            float(raw["levy_threshold"]) if raw.get("levy_threshold") is not None else None
        ),
        workers=int(threads if threads is not None else raw.get("workers", 1)),
    )


# ---------------------------------------------------------------------------
# artifacts


def _covariance_json(gamma) -> dict:
    return {
        "radius": gamma.radius,
        "values": {f"{k},{l}": v for (k, l), v in sorted(gamma.to_dict().items())},
    }


def _energy_grid(cfg: ExperimentConfig, kernel) -> np.ndarray:
    fmax = max(float(kernel.values.max()), 0.0)
    if cfg.ensemble == "wigner":
        edge = 2.0 * math.sqrt(fmax)
        lo, hi = -edge, edge
    else:
        lo, hi = 0.0, (1.0 + math.sqrt(cfg.aspect)) ** 2 * fmax
    return np.linspace(lo - cfg.energy_margin, hi + cfg.energy_margin, cfg.energy_points)


def _fd_bin_count(values: np.ndarray) -> int:
    """Freedman-Diaconis rule with a floor of 32 bins."""
    q75, q25 = np.percentile(values, [75.0, 25.0])
    iqr = q75 - q25
    span = float(values.max() - values.min())
    if iqr <= 0 or span <= 0:
        return 32
    width = 2.0 * iqr / len(values) ** (1.0 / 3.0)
    return max(32, int(math.ceil(span / width)))


def _density_overlay_rows(report):
    values = report.pooled_values[-1]
    hist, edges = np.histogram(values, bins=_fd_bin_count(values), density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])
    limit = np.interp(centers, report.energies, report.density)
    return [(c, e, t) for c, e, t in zip(centers, hist, limit)]


def _cmd_simulate(cfg: ExperimentConfig):
    artifacts = []
    for n in cfg.sizes:
        spec = sample_spectrum(cfg, n, replicate=0)
        artifacts.append((f"spectrum_n{n}.csv", lambda p, s=spec: write_spectrum_csv(s, p)))
        log.info("simulated size %d: %d eigenvalues", n, spec.n)
    return artifacts


def _cmd_solve(cfg: ExperimentConfig):
    gamma = analytic_covariance(cfg.model, cfg.innovation)
    kernel = spectral_kernel(gamma, cfg.solver.grid_size)
    energies = _energy_grid(cfg, kernel)
    if cfg.ensemble == "wigner":
        solution = solve_kp_grid(kernel, energies, cfg.eta, cfg.solver)
    else:
        solution = solve_gram_grid(kernel, cfg.aspect, energies, cfg.eta, cfg.solver)
    density, cdf = invert_stieltjes(solution, cfg.eta)
    rows = [
        (e, cfg.eta, s.real, s.imag, d)
        for e, s, d in zip(energies, solution.stieltjes, density)
    ]
    return [
        ("solution.csv", lambda p: _write_rows(p, ("energy", "eta", "s_real", "s_imag", "density"), rows)),
        ("limit_cdf.csv", lambda p: write_distribution_csv(cdf, p)),
        ("covariance.json", lambda p: _write_json(p, _covariance_json(gamma))),
    ]


def _cmd_compare(cfg: ExperimentConfig):
    report = run_limit_comparison(cfg)
    dist_rows = [
        (n, lv, ko) for n, lv, ko in zip(report.sizes, report.levy, report.kolmogorov)
    ]
    overlay = _density_overlay_rows(report)
    return [
        ("report.json", lambda p: _write_json(p, report.to_dict())),
        ("distance_vs_n.csv", lambda p: _write_rows(p, ("size", "levy", "kolmogorov"), dist_rows)),
        ("density_overlay.csv", lambda p: _write_rows(
            p, ("energy", "empirical_density", "limit_density"), overlay)),
    ]


def _cmd_universality(cfg: ExperimentConfig):
    report = run_universality(cfg)
    rows = []
    for i, n in enumerate(report.sizes):
        for j, z in enumerate(report.z_points):
            rows.append((n, z.real, z.imag, report.gaps[i, j], report.mc_se[i, j]))
    return [
        ("report.json", lambda p: _write_json(p, report.to_dict())),
        ("universality_gap.csv", lambda p: _write_rows(
            p, ("size", "z_real", "z_imag", "gap", "mc_se"), rows)),
    ]


def _cmd_concentration(cfg: ExperimentConfig, raw: dict):
    section = raw.get("concentration")
    if not isinstance(section, dict):
        raise ConfigError("concentration", "missing object with 'k' and 'r_values'")
    if "k" not in section:
        raise ConfigError("concentration.k", "missing required field")
    if "r_values" not in section:
        raise ConfigError("concentration.r_values", "missing required field")
    report = run_concentration(cfg, int(section["k"]), section["r_values"])
    rows = []
    for i, n in enumerate(report.sizes):
        for j, r in enumerate(report.r_values):
            rows.append((n, r, report.frequencies[i, j], report.bounds[i, j], report.slacks[i, j]))
    return [
        ("report.json", lambda p: _write_json(p, report.to_dict())),
        ("tail_frequency.csv", lambda p: _write_rows(
            p, ("size", "r", "frequency", "bound", "slack"), rows)),
    ]


# ---------------------------------------------------------------------------
# selftest


def _selftest_semicircle():
    kernel = spectral_kernel(analytic_covariance(LinearCoefficients({(0, 0): 1.0}), InnovationSpec()), 16)
    for z in (1j, 0.3 + 0.5j):
        _, s = solve_kp(kernel, z)
        ref = reference_stieltjes("semicircle", {"variance": 1.0}, z)
        if abs(s - ref) > 1e-6:
            raise CheckFailure(f"semicircle transform off by {abs(s - ref):.2e} at z = {z}")


def _selftest_gram():
    kernel = spectral_kernel(analytic_covariance(LinearCoefficients({(0, 0): 1.0}), InnovationSpec()), 16)
    for c in (0.5, 1.0):
        z = 1.0 + 0.5j
        _, s = solve_gram_limit(kernel, c, z)
        ref = reference_stieltjes("marchenko_pastur", {"ratio": c}, z)
        if abs(s - ref) > 1e-6:
            raise CheckFailure(f"gram limit off by {abs(s - ref):.2e} at c = {c}")


def _selftest_kernel_mean():
    model = LinearCoefficients({(0, 0): 1.0, (1, 0): 0.5})
    gamma = analytic_covariance(model, InnovationSpec())
    kernel = spectral_kernel(gamma, 16)
    if abs(float(kernel.values.mean()) - gamma.value(0, 0)) > 1e-12:
        raise CheckFailure("kernel grid mean does not reproduce the zero lag covariance")


def _selftest_trace_bound():
    rng = np.random.default_rng(11)
    for n in (8, 16):
        a = rng.standard_normal((n, n))
        b = a + 0.1 * rng.standard_normal((n, n))
        trace_comparison_bound(
            SymmetricEnsemble((a + a.T) / 2), SymmetricEnsemble((b + b.T) / 2), 0.4 + 0.8j
        )


def _selftest_rank_bound():
    rng = np.random.default_rng(12)
    m = rng.standard_normal((12, 12))
    ens = SymmetricEnsemble((m + m.T) / 2)
    lindeberg_decomposition_check(ens, BlockingPlan(12, 3, 1, tau=2.0), z=1j)


def _selftest_embedding():
    rng = np.random.default_rng(13)
    n_rows, n_cols = 6, 9
    from .ensembles import build_gram, embed_gram_symmetric
    from .field_models import FieldPatch

    patch = FieldPatch(rng.standard_normal((n_rows, n_cols)))
    z = 0.7 + 0.9j
    s_gram = stieltjes_of_spectrum(eigenvalues(build_gram(patch)), z)
    sym = eigenvalues(embed_gram_symmetric(patch))
    root = np.sqrt(complex(z))
    if root.imag < 0:
        root = -root
    s_sym = stieltjes_of_spectrum(sym, root)
    total = n_rows + n_cols
    via = s_sym * total / (2.0 * n_rows * root) + (n_cols - n_rows) / (2.0 * n_rows * z)
    if abs(via - s_gram) > 1e-9:
        raise CheckFailure(f"embedding identity off by {abs(via - s_gram):.2e}")


def _cmd_selftest():
    checks = [
        ("semicircle closed form", _selftest_semicircle),
        ("gram closed form", _selftest_gram),
        ("kernel zero lag mean", _selftest_kernel_mean),
        ("trace comparison bound", _selftest_trace_bound),
        ("block decomposition rank bound", _selftest_rank_bound),
        ("gram embedding identity", _selftest_embedding),
    ]
    failures = []
    for name, fn in checks:
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 - report every check before failing
            failures.append((name, exc))
            print(f"FAIL - {name}: {exc}")
        else:
            print(f"ok - {name}")
    if failures:
        raise CheckFailure(f"{len(failures)} of {len(checks)} selftest checks failed")
    print(f"all {len(checks)} checks passed")


# ---------------------------------------------------------------------------
# wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrspec",
        description="Spectra of random matrices built from correlated random fields.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = [
        ("simulate", "sample field patches and write their spectra"),
        ("solve", "solve the limit equations on an energy grid"),
        ("compare", "empirical spectra against the solved limit"),
        ("universality", "field ensemble against its Gaussian matched twin"),
        ("concentration", "tail frequencies against the dependence aware bound"),
        ("selftest", "run built in consistency checks"),
    ]
    for name, help_text in specs:
        cmd = sub.add_parser(name, help=help_text)
        if name != "selftest":
            cmd.add_argument("--config", required=True, help="path to a JSON config file")
            cmd.add_argument("--out", default="corrspec-out", help="output directory")
            cmd.add_argument("--threads", type=int, default=None, help="worker threads")
            cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
    return parser


def _manifest(command: str, cfg: ExperimentConfig | None, outputs) -> dict:
    return {
        "command": command,
        "config_hash": cfg.digest() if cfg is not None else None,
        "seed": cfg.seed if cfg is not None else None,
        "config": cfg.digest_dict() if cfg is not None else None,
        "outputs": sorted(name for name, _ in outputs),
        "versions": {
            "corrspec": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            _cmd_selftest()
            return 0
        raw = load_raw_config(args.config)
        cfg = build_experiment(raw, threads=args.threads, seed=args.seed)
        log.info("%s: config hash %s", args.command, cfg.digest())
        if args.command == "simulate":
            artifacts = _cmd_simulate(cfg)
        elif args.command == "solve":
            artifacts = _cmd_solve(cfg)
        elif args.command == "compare":
            artifacts = _cmd_compare(cfg)
        elif args.command == "universality":
            artifacts = _cmd_universality(cfg)
        else:
            artifacts = _cmd_concentration(cfg, raw)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, writer in artifacts:
        writer(out / name)
    _write_json(out / "manifest.json", _manifest(args.command, cfg, artifacts))
    print(f"wrote {len(artifacts) + 1} files to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
