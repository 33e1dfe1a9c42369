"""Nonlinear least-squares estimation for the two spectral channels.

Lorentzian dip/peak fits with analytic Jacobians and Poisson-motivated
weights, dip-count model selection by BIC, ordinary least-squares regression,
and power-law fitting of precision-vs-integration-time curves.

Fits run through a damped Gauss-Newton loop (:mod:`dualtherm._kernels`) that
is numba-compiled when available.  Failure is never silent: a fit that does
not converge comes back with ``converged = False`` and best-effort
parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import _kernels
from .forward import AxisKind, SpectrumTrace

FloatArray = NDArray[np.float64]

MAX_ITERATIONS = 200
#: stop when the relative decrease of the weighted cost falls below this
COST_RTOL = 1e-10
_STEP_XTOL = 1e-12
#: each dip of a two-dip candidate must clear this many sigma of contrast
MIN_DIP_SIGNIFICANCE = 5.0

PL_PARAM_NAMES = ("center", "fwhm", "amplitude", "background")


@dataclass(frozen=True)
class FitResult:
    """Outcome of one weighted Lorentzian fit.

    ``params``/``std_errors`` are keyed by parameter name; ``covariance`` is
    ordered like ``param_names``.  ``derived`` holds quantities computed from
    the fitted parameters with propagated uncertainty (for dip fits, the dip
    pattern midpoint ``d_center``).
    """

    param_names: tuple[str, ...]
    params: dict[str, float]
    std_errors: dict[str, float]
    covariance: FloatArray
    residual_rms: float
    reduced_chi2: float
    converged: bool
    iterations: int
    derived: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        cov = np.asarray(self.covariance, dtype=np.float64)
        k = len(self.param_names)
        if cov.shape != (k, k):
            raise ValueError(f"covariance shape {cov.shape} does not match {k} parameters")
        if set(self.params) != set(self.param_names) or set(self.std_errors) != set(self.param_names):
            raise ValueError("params and std_errors must be keyed exactly by param_names")
        for i, name in enumerate(self.param_names):
            se = math.sqrt(max(cov[i, i], 0.0))
            if not math.isclose(self.std_errors[name], se, rel_tol=1e-9, abs_tol=1e-30):
                raise ValueError(f"std_errors[{name!r}] is not the covariance diagonal root")
        object.__setattr__(self, "covariance", cov)


@dataclass(frozen=True)
class RegressionResult:
    slope: float
    intercept: float
    r_squared: float
    slope_std_error: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.r_squared <= 1.0:
            raise ValueError(f"r_squared must lie in [0, 1], got {self.r_squared}")


def _edge_median(counts: FloatArray) -> float:
    # flat-level estimate from the outer 10% of samples (5% per end, >= 3 each)
    n_edge = max(3, int(math.ceil(0.05 * counts.size)))
    return float(np.median(np.concatenate([counts[:n_edge], counts[-n_edge:]])))


def _half_prominence_fwhm(
    axis: FloatArray, counts: FloatArray, idx: int, level: float, invert: bool
) -> float:
    """Width between the half-prominence crossings around the extremum at ``idx``.

    ``invert`` selects dip geometry (counts rise toward the crossing level)
    versus peak geometry.  Falls back to twice the one-sided width, then to a
    sixth of the axis span, when a crossing is missing.
    """
    y = counts if not invert else -counts
    lvl = level if not invert else -level
    half: list[float] = []
    for direction in (1, -1):
        j = idx
        crossing = math.nan
        while 0 <= j + direction < y.size:
            nxt = j + direction
            if y[nxt] <= lvl:
                y0, y1 = y[j], y[nxt]
                frac = 0.0 if y1 == y0 else (lvl - y0) / (y1 - y0)
                crossing = abs(axis[nxt] - axis[j]) * frac + abs(axis[j] - axis[idx])
                break
            j = nxt
        half.append(crossing)
    span = float(axis[-1] - axis[0])
    left, right = half
    if math.isnan(left) and math.isnan(right):
        return span / 6.0
    if math.isnan(left):
        return 2.0 * right
    if math.isnan(right):
        return 2.0 * left
    width = left + right
    return width if width > 0 else span / 6.0


def _clip_window(trace: SpectrumTrace, window: tuple[float, float] | None) -> tuple[FloatArray, FloatArray]:
    axis, counts = trace.axis, trace.counts
    if window is None:
        return axis, counts
    lo, hi = window
    if not lo < hi:
        raise ValueError(f"window must satisfy lo < hi, got ({lo}, {hi})")
    mask = (axis >= lo) & (axis <= hi)
    return axis[mask], counts[mask]


def _run_solver(
    axis: FloatArray,
    counts: FloatArray,
    p0: FloatArray,
    kind: int,
    max_iterations: int,
) -> tuple[FloatArray, FloatArray, float, int, bool, FloatArray]:
    weights = 1.0 / np.maximum(counts, 1.0)
    with np.errstate(all="ignore"):
        p, cov_raw, cost, n_iter, converged = _kernels.lm_solve(
            np.ascontiguousarray(axis),
            np.ascontiguousarray(counts),
            weights,
            np.ascontiguousarray(p0),
            kind,
            max_iterations,
            COST_RTOL,
            _STEP_XTOL,
        )
    return p, cov_raw, cost, n_iter, bool(converged), weights


def _finish(
    axis: FloatArray,
    counts: FloatArray,
    p: FloatArray,
    cov_raw: FloatArray,
    cost: float,
    kind: int,
) -> tuple[FloatArray, float, float]:
    n, k = axis.size, p.size
    model = np.empty(n)
    jac = np.empty((n, k))
    with np.errstate(all="ignore"):
        _kernels.eval_model(np.ascontiguousarray(axis), p, kind, model, jac)
    residual_rms = float(np.sqrt(np.mean((counts - model) ** 2)))
    dof = n - k
    reduced_chi2 = cost / dof if dof > 0 else math.inf
    cov = cov_raw * (reduced_chi2 if dof > 0 else 1.0)
    cov = 0.5 * (cov + cov.T)
    return cov, residual_rms, reduced_chi2


def fit_pl_peak(
    trace: SpectrumTrace,
    window: tuple[float, float] | None = None,
    *,
    init: dict[str, float] | None = None,
    max_iterations: int = MAX_ITERATIONS,
) -> FitResult:
    """Fit one Lorentzian emission peak on a flat background.

    ``window`` restricts the fit to a wavelength interval (at least 8
    samples).  ``init`` overrides individual starting values by parameter
    name.  A converged result whose center escaped the fitted interval is
    demoted to ``converged = False``.
    """
    if trace.axis_kind is not AxisKind.WAVELENGTH_NM:
        raise ValueError(f"expected a wavelength-axis trace, got {trace.axis_kind}")
    axis, counts = _clip_window(trace, window)
    if axis.size < 8:
        raise ValueError(f"need at least 8 samples in the fit window, got {axis.size}")

    background = _edge_median(counts)
    idx = int(np.argmax(counts))
    amplitude = max(float(counts[idx]) - background, 1e-6 * max(background, 1.0))
    level = background + 0.5 * (counts[idx] - background)
    fwhm = _half_prominence_fwhm(axis, counts, idx, level, invert=False)
    start = {
        "center": float(axis[idx]),
        "fwhm": float(fwhm),
        "amplitude": amplitude,
        "background": background,
    }
    if init:
        unknown = set(init) - set(PL_PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown init keys: {sorted(unknown)}")
        start.update(init)

    p0 = np.array([start["background"], start["amplitude"], start["center"], start["fwhm"]])
    p, cov_raw, cost, n_iter, converged, _ = _run_solver(axis, counts, p0, _kernels.KIND_PEAK, max_iterations)
    cov_k, residual_rms, reduced_chi2 = _finish(axis, counts, p, cov_raw, cost, _kernels.KIND_PEAK)

    # model is even in the width, so fold sign into the canonical branch
    if p[3] < 0.0:
        p[3] = -p[3]
        cov_k[3, :] *= -1.0
        cov_k[:, 3] *= -1.0

    # kernel order [bg, amp, c, w] -> named order (center, fwhm, amplitude, background)
    perm = np.array([2, 3, 1, 0])
    values = p[perm]
    cov = cov_k[np.ix_(perm, perm)]
    if converged and not (axis[0] <= values[0] <= axis[-1]):
        converged = False

    params = dict(zip(PL_PARAM_NAMES, (float(v) for v in values)))
    std = {name: math.sqrt(max(cov[i, i], 0.0)) for i, name in enumerate(PL_PARAM_NAMES)}
    return FitResult(
        param_names=PL_PARAM_NAMES,
        params=params,
        std_errors=std,
        covariance=cov,
        residual_rms=residual_rms,
        reduced_chi2=reduced_chi2,
        converged=converged,
        iterations=n_iter,
    )


def _odmr_param_names(n_dips: int) -> tuple[str, ...]:
    names = ["baseline"]
    for d in range(1, n_dips + 1):
        names += [f"center_{d}", f"fwhm_{d}", f"contrast_{d}"]
    return tuple(names)


def _odmr_init(axis: FloatArray, counts: FloatArray, n_dips: int) -> dict[str, float]:
    baseline = _edge_median(counts)
    idx = int(np.argmin(counts))
    depth = max(baseline - float(counts[idx]), 1e-6 * max(baseline, 1.0))
    level = baseline - 0.5 * depth
    fwhm = _half_prominence_fwhm(axis, counts, idx, level, invert=True)
    contrast = min(max(depth / max(baseline, 1e-300), 1e-4), 0.8)
    start = {
        "baseline": baseline,
        "center_1": float(axis[idx]),
        "fwhm_1": float(fwhm),
        "contrast_1": contrast,
    }
    if n_dips == 2:
        # second dip: deepest sample at least one width away from the first
        away = np.abs(axis - axis[idx]) >= fwhm
        if np.any(away):
            idx2 = int(np.flatnonzero(away)[np.argmin(counts[away])])
            center_2 = float(axis[idx2])
            depth2 = max(baseline - float(counts[idx2]), 1e-6 * max(baseline, 1.0))
        else:
            on_right = (axis[idx] - axis[0]) < (axis[-1] - axis[idx])
            center_2 = float(axis[idx] + fwhm) if on_right else float(axis[idx] - fwhm)
            depth2 = depth
        start["center_2"] = center_2
        start["fwhm_2"] = float(fwhm)
        start["contrast_2"] = min(max(depth2 / max(baseline, 1e-300), 1e-4), 0.8)
    return start


def fit_odmr_dips(
    trace: SpectrumTrace,
    n_dips: int,
    *,
    init: dict[str, float] | None = None,
    max_iterations: int = MAX_ITERATIONS,
) -> FitResult:
    """Fit one or two Lorentzian absorption dips with a shared flat baseline.

    Dips have independent center/width/contrast.  For ``n_dips = 2`` the dips
    are reported in ascending center order, and ``derived["d_center"]`` holds
    the midpoint of the dip pattern with its propagated 1-sigma uncertainty.
    """
    if trace.axis_kind is not AxisKind.FREQUENCY_MHZ:
        raise ValueError(f"expected a frequency-axis trace, got {trace.axis_kind}")
    if n_dips not in (1, 2):
        raise ValueError(f"n_dips must be 1 or 2, got {n_dips}")
    axis, counts = trace.axis, trace.counts
    if axis.size < 8:
        raise ValueError(f"need at least 8 samples, got {axis.size}")

    names = _odmr_param_names(n_dips)
    start = _odmr_init(axis, counts, n_dips)
    if init:
        unknown = set(init) - set(names)
        if unknown:
            raise ValueError(f"unknown init keys: {sorted(unknown)}")
        start.update(init)

    p0 = np.empty(1 + 3 * n_dips)
    p0[0] = start["baseline"]
    for d in range(n_dips):
        p0[1 + 3 * d] = start[f"center_{d + 1}"]
        p0[2 + 3 * d] = start[f"fwhm_{d + 1}"]
        p0[3 + 3 * d] = start[f"contrast_{d + 1}"]

    p, cov_raw, cost, n_iter, converged, _ = _run_solver(axis, counts, p0, _kernels.KIND_DIPS, max_iterations)
    cov, residual_rms, reduced_chi2 = _finish(axis, counts, p, cov_raw, cost, _kernels.KIND_DIPS)

    # model is even in each width, so fold sign into the canonical branch
    for j in range(2, 1 + 3 * n_dips, 3):
        if p[j] < 0.0:
            p[j] = -p[j]
            cov[j, :] *= -1.0
            cov[:, j] *= -1.0

    if n_dips == 2 and p[1] > p[4]:
        perm = np.array([0, 4, 5, 6, 1, 2, 3])
        p = p[perm]
        cov = cov[np.ix_(perm, perm)]

    params = {"baseline": float(p[0])}
    for d in range(n_dips):
        params[f"center_{d + 1}"] = float(p[1 + 3 * d])
        params[f"fwhm_{d + 1}"] = float(p[2 + 3 * d])
        params[f"contrast_{d + 1}"] = float(p[3 + 3 * d])
    std = {name: math.sqrt(max(cov[i, i], 0.0)) for i, name in enumerate(names)}

    if n_dips == 1:
        d_center = params["center_1"]
        d_sigma = std["center_1"]
    else:
        d_center = 0.5 * (params["center_1"] + params["center_2"])
        i1, i2 = names.index("center_1"), names.index("center_2")
        d_sigma = math.sqrt(max(0.25 * (cov[i1, i1] + cov[i2, i2] + 2.0 * cov[i1, i2]), 0.0))

    return FitResult(
        param_names=names,
        params=params,
        std_errors=std,
        covariance=cov,
        residual_rms=residual_rms,
        reduced_chi2=reduced_chi2,
        converged=converged,
        iterations=n_iter,
        derived={"d_center": (d_center, d_sigma)},
    )


def _dip_pair_admissible(trace: SpectrumTrace, res: FitResult) -> bool:
    """Reject two-dip solutions that cannot describe a real spectrum.

    A second dip with a free center can always buy chi-square by swallowing a
    single low-fluctuating sample, so BIC alone picks phantom dips on a few
    percent of clean spectra.  Both dips must therefore be physical (positive
    sub-unity contrasts summing below 1, centers inside the scanned span,
    widths at least one sample step) and detected at ``MIN_DIP_SIGNIFICANCE``
    sigma, not merely fitted.
    """
    if not res.converged:
        return False
    step = float(np.median(np.diff(trace.axis)))
    lo, hi = float(trace.axis[0]), float(trace.axis[-1])
    total_contrast = 0.0
    for d in (1, 2):
        contrast = res.params[f"contrast_{d}"]
        sigma = res.std_errors[f"contrast_{d}"]
        if not 0.0 < contrast < 1.0:
            return False
        if contrast < MIN_DIP_SIGNIFICANCE * sigma:
            return False
        if not lo <= res.params[f"center_{d}"] <= hi:
            return False
        if res.params[f"fwhm_{d}"] < step:
            return False
        total_contrast += contrast
    return total_contrast < 1.0


def select_dip_count(trace: SpectrumTrace, *, max_iterations: int = MAX_ITERATIONS) -> tuple[int, FitResult]:
    """Choose between the one- and two-dip models by BIC.

    BIC = weighted chi-square + n_params * ln(n_samples); the lower value
    wins and ties go to the single-dip model.  The two-dip candidate is only
    eligible when it passes the physical-admissibility screen (see
    ``_dip_pair_admissible``).
    """
    n = trace.axis.size
    results: dict[int, FitResult] = {}
    bic: dict[int, float] = {}
    for n_dips in (1, 2):
        res = fit_odmr_dips(trace, n_dips, max_iterations=max_iterations)
        k = len(res.param_names)
        chi2 = res.reduced_chi2 * (n - k)
        results[n_dips] = res
        bic[n_dips] = chi2 + k * math.log(n)
    chosen = 2 if bic[2] < bic[1] and _dip_pair_admissible(trace, results[2]) else 1
    return chosen, results[chosen]


def linear_regression(xs: FloatArray, ys: FloatArray) -> RegressionResult:
    """Ordinary least squares of ``ys`` against ``xs`` with intercept.

    ``r_squared`` is defined as 0 when ``ys`` has no variance.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-d sequences of equal length")
    n = x.size
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0.0:
        raise ValueError("xs must not all be equal")
    sxy = float(np.sum((x - x.mean()) * (y - y.mean())))
    slope = sxy / sxx
    intercept = float(y.mean()) - slope * float(x.mean())
    resid = y - (intercept + slope * x)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 0.0 if ss_tot == 0.0 else min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    slope_var = (ss_res / (n - 2)) / sxx
    return RegressionResult(
        slope=slope,
        intercept=intercept,
        r_squared=r_squared,
        slope_std_error=math.sqrt(max(slope_var, 0.0)),
    )


def fit_power_law(
    integration_times_s: FloatArray, sigmas: FloatArray
) -> tuple[float, float]:
    """Fit ``sigma(t) = floor * t**exponent`` by least squares in log space.

    Returns ``(floor, exponent)``; for shot-noise-limited data the exponent
    comes out at -1/2 and the floor is the one-second precision.
    """
    t = np.asarray(integration_times_s, dtype=np.float64)
    s = np.asarray(sigmas, dtype=np.float64)
    if t.shape != s.shape or t.ndim != 1:
        raise ValueError("times and sigmas must be 1-d sequences of equal length")
    if t.size < 3:
        raise ValueError(f"need at least 3 points, got {t.size}")
    if np.any(t <= 0) or np.any(s <= 0):
        raise ValueError("times and sigmas must all be > 0")
    reg = linear_regression(np.log(t), np.log(s))
    return math.exp(reg.intercept), reg.slope
