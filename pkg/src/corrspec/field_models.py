"""Stationary random fields on the integer lattice.

Three model families produce the matrix entries used elsewhere:

* i.i.d. innovations (white fields),
* linear filters of innovations with finitely many taps,
* second order Volterra expansions with a diagonal-free quadratic part.

Every sampler is a pure function of (model, shape, seed).  Output patches
are exactly stationary: the innovation patch is enlarged by the coefficient
bounding box, so no boundary site is computed from missing innovations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, EmbeddingError, ModelError

__all__ = [
    "InnovationSpec",
    "LinearCoefficients",
    "VolterraCoefficients",
    "FieldPatch",
    "WindowParameter",
    "sample_innovations",
    "sample_linear_field",
    "sample_volterra_field",
    "truncate_to_window",
    "sample_gaussian_matched_field",
]

INNOVATION_LAWS = ("standard_gaussian", "rademacher", "centered_uniform")

Lag = tuple[int, int]


@dataclass(frozen=True)
class InnovationSpec:
    """Law of the i.i.d. innovations: a named distribution scaled to a variance."""

    distribution: str = "standard_gaussian"
    variance: float = 1.0

    def __post_init__(self):
        if self.distribution not in INNOVATION_LAWS:
            raise ModelError(
                f"unknown innovation law {self.distribution!r}; "
                f"choose one of {INNOVATION_LAWS}"
            )
        if not (math.isfinite(self.variance) and self.variance > 0):
            raise ModelError(f"innovation variance must be finite and > 0, got {self.variance}")


def _validated_lag(key) -> Lag:
    if (
        not isinstance(key, tuple)
        or len(key) != 2
        or not all(isinstance(c, (int, np.integer)) for c in key)
    ):
        raise ModelError(f"coefficient offsets must be integer pairs, got {key!r}")
    return (int(key[0]), int(key[1]))


@dataclass(frozen=True)
class LinearCoefficients:
    """Finitely supported filter taps a[(k, l)] of a linear field."""

    values: dict[Lag, float] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for key, val in self.values.items():
            lag = _validated_lag(key)
            val = float(val)
            if not math.isfinite(val):
                raise ModelError(f"coefficient a[{lag}] is not finite")
            if val != 0.0:
                clean[lag] = val
        object.__setattr__(self, "values", clean)

    def support_radius(self) -> int:
        if not self.values:
            return 0
        return max(max(abs(k), abs(l)) for (k, l) in self.values)


@dataclass(frozen=True)
class VolterraCoefficients:
    """Second order expansion: linear taps a[u] plus quadratic taps b[(u, v)].

    The quadratic part is diagonal free (b[(u, u)] = 0), which keeps the
    field centered without any moment correction.
    """

    linear: dict[Lag, float] = field(default_factory=dict)
    quadratic: dict[tuple[Lag, Lag], float] = field(default_factory=dict)

    def __post_init__(self):
        lin = {}
        for key, val in self.linear.items():
            lag = _validated_lag(key)
            val = float(val)
            if not math.isfinite(val):
                raise ModelError(f"coefficient a[{lag}] is not finite")
            if val != 0.0:
                lin[lag] = val
        quad = {}
        for key, val in self.quadratic.items():
            if not isinstance(key, tuple) or len(key) != 2:
                raise ModelError(f"quadratic offsets must be pairs of lags, got {key!r}")
            u, v = _validated_lag(key[0]), _validated_lag(key[1])
            val = float(val)
            if not math.isfinite(val):
                raise ModelError(f"coefficient b[{(u, v)}] is not finite")
            if val == 0.0:
                continue
            if u == v:
                raise ModelError(f"quadratic part must vanish on the diagonal, got b[{(u, u)}] != 0")
            quad[(u, v)] = val
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)

    def support_radius(self) -> int:
        r = 0
        for (k, l) in self.linear:
            r = max(r, abs(k), abs(l))
        for (u, v) in self.quadratic:
            r = max(r, abs(u[0]), abs(u[1]), abs(v[0]), abs(v[1]))
        return r


@dataclass
class FieldPatch:
    """Rectangular window of field values anchored at a lattice origin."""

    values: np.ndarray
    origin: Lag = (0, 0)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] < 1 or self.values.shape[1] < 1:
            raise DimensionError(f"patch must be a 2-d array, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ModelError("patch contains non-finite values")
        self.origin = (int(self.origin[0]), int(self.origin[1]))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class WindowParameter:
    """Half width m of the dependence window [-m, m]^2 used for truncation."""

    m: int

    def __post_init__(self):
        if self.m < 0:
            raise ModelError(f"window half width must be >= 0, got {self.m}")


def _check_shape(rows: int, cols: int):
    if rows < 1 or cols < 1:
        raise DimensionError(f"patch shape must be positive, got {rows} x {cols}")


def sample_innovations(spec: InnovationSpec, rows: int, cols: int, seed) -> FieldPatch:
    """Draw an i.i.d. patch with the marginal law of `spec`."""
    _check_shape(rows, cols)
    rng = np.random.default_rng(seed)
    sigma = math.sqrt(spec.variance)
    if spec.distribution == "standard_gaussian":
        vals = sigma * rng.standard_normal((rows, cols))
    elif spec.distribution == "rademacher":
        vals = sigma * (2.0 * rng.integers(0, 2, size=(rows, cols)).astype(float) - 1.0)
    else:  # centered_uniform on [-sigma*sqrt(3), sigma*sqrt(3)]
        half = sigma * math.sqrt(3.0)
        vals = rng.uniform(-half, half, size=(rows, cols))
    return FieldPatch(vals)


def _offset_extent(offsets, rows: int, cols: int):
    """Innovation rectangle needed so every output site sees true innovations."""
    r_lo = min(o[0] for o in offsets)
    r_hi = max(o[0] for o in offsets)
    c_lo = min(o[1] for o in offsets)
    c_hi = max(o[1] for o in offsets)
    return (r_lo, c_lo, r_hi - r_lo + rows, c_hi - c_lo + cols)


def _anchored_innovations(spec, rows, cols, seed, innovations, extent):
    """Return (array, anchor_row, anchor_col) covering the required extent."""
    r0, c0, height, width = extent
    if innovations is None:
        return sample_innovations(spec, height, width, seed).values, r0, c0
    a_r, a_c = innovations.origin
    if a_r > r0 or a_c > c0 or a_r + innovations.rows < r0 + height or a_c + innovations.cols < c0 + width:
        raise DimensionError(
            "provided innovations do not cover the required extent "
            f"[{r0}, {r0 + height}) x [{c0}, {c0 + width})"
        )
    return innovations.values, a_r, a_c


def sample_linear_field(
    coeffs: LinearCoefficients,
    spec: InnovationSpec,
    rows: int,
    cols: int,
    seed,
    innovations: FieldPatch | None = None,
) -> FieldPatch:
    """Sample X[i, j] = sum_{k,l} a[k, l] * xi[k + i, l + j] on a rows x cols window.

    The finite convolution is evaluated exactly against an innovation patch
    enlarged by the coefficient bounding box.  Passing `innovations` (a patch
    whose origin-aware extent covers the requirement) couples several models
    to one innovation realization; otherwise the patch is drawn from `seed`.
    """
    _check_shape(rows, cols)
    if not coeffs.values:
        return FieldPatch(np.zeros((rows, cols)))
    extent = _offset_extent(list(coeffs.values), rows, cols)
    arr, a_r, a_c = _anchored_innovations(spec, rows, cols, seed, innovations, extent)
    out = np.zeros((rows, cols))
    for (k, l), a in coeffs.values.items():
        r, c = k - a_r, l - a_c
        out += a * arr[r : r + rows, c : c + cols]
    return FieldPatch(out)


def sample_volterra_field(
    coeffs: VolterraCoefficients,
    spec: InnovationSpec,
    rows: int,
    cols: int,
    seed,
    innovations: FieldPatch | None = None,
) -> FieldPatch:
    """Sample X[k] = sum_u a[u] xi[k - u] + sum_{u,v} b[u, v] xi[k - u] xi[k - v]."""
    _check_shape(rows, cols)
    offsets = set()
    for u in coeffs.linear:
        offsets.add((-u[0], -u[1]))
    for (u, v) in coeffs.quadratic:
        offsets.add((-u[0], -u[1]))
        offsets.add((-v[0], -v[1]))
    if not offsets:
        return FieldPatch(np.zeros((rows, cols)))
    extent = _offset_extent(offsets, rows, cols)
    arr, a_r, a_c = _anchored_innovations(spec, rows, cols, seed, innovations, extent)

    def shifted(offset):
        r, c = offset[0] - a_r, offset[1] - a_c
        return arr[r : r + rows, c : c + cols]

    out = np.zeros((rows, cols))
    for u, a in coeffs.linear.items():
        out += a * shifted((-u[0], -u[1]))
    for (u, v), b in coeffs.quadratic.items():
        out += b * shifted((-u[0], -u[1])) * shifted((-v[0], -v[1]))
    return FieldPatch(out)


def truncate_to_window(model, window: WindowParameter | int):
    """Drop every coefficient whose offsets leave [-m, m]^2.

    For these models the result coincides with conditioning each site on the
    innovations inside its window, so the truncated field is 2m-dependent.
    """
    m = window.m if isinstance(window, WindowParameter) else WindowParameter(int(window)).m

    def inside(lag: Lag) -> bool:
        return abs(lag[0]) <= m and abs(lag[1]) <= m

    if isinstance(model, LinearCoefficients):
        return LinearCoefficients({lag: a for lag, a in model.values.items() if inside(lag)})
    if isinstance(model, VolterraCoefficients):
        lin = {lag: a for lag, a in model.linear.items() if inside(lag)}
        quad = {uv: b for uv, b in model.quadratic.items() if inside(uv[0]) and inside(uv[1])}
        return VolterraCoefficients(lin, quad)
    raise ModelError(f"cannot truncate object of type {type(model).__name__}")


def sample_gaussian_matched_field(gamma, rows: int, cols: int, seed) -> FieldPatch:
    """Stationary Gaussian patch whose autocovariance equals `gamma` exactly.

    Uses circulant embedding on a torus of side 2 * (patch side + support
    radius) per axis, large enough that periodization never aliases a lag
    reachable inside the patch.  The torus spectrum is the nonnegative
    spectral density sampled at torus frequencies; eigenvalues more negative
    than a rounding floor mean `gamma` is not embeddable and raise an error.
    """
    _check_shape(rows, cols)
    radius = gamma.radius
    t_r = 2 * (rows + radius)
    t_c = 2 * (cols + radius)
    per = np.zeros((t_r, t_c))
    for k in range(-radius, radius + 1):
        for l in range(-radius, radius + 1):
            per[k % t_r, l % t_c] = gamma.value(k, l)

    lam = np.fft.fft2(per)
    scale = np.abs(per).sum()
    if np.abs(lam.imag).max() > 1e-12 * max(scale, 1.0):
        raise EmbeddingError("torus spectrum of the covariance is not real; table is asymmetric")
    lam = lam.real
    top = max(lam.max(), 0.0)
    floor = -1e-10 * top
    worst = lam.min()
    if worst < floor:
        raise EmbeddingError(
            f"covariance is not embeddable: torus eigenvalue {worst:.3e} "
            f"below rounding floor {floor:.3e}"
        )
    lam = np.clip(lam, 0.0, None)

    rng = np.random.default_rng(seed)
    noise = (rng.standard_normal((t_r, t_c)) + 1j * rng.standard_normal((t_r, t_c))) / math.sqrt(2.0)
    modes = np.sqrt(lam) * noise
    surface = np.fft.ifft2(modes) * math.sqrt(t_r * t_c)
    vals = math.sqrt(2.0) * surface.real
    return FieldPatch(vals[:rows, :cols].copy())
