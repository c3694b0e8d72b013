"""Parameter estimation from observed publication-count series.

The observed quantity is a count per sampling interval; internally the
fit works on the intensity counts/dt (dt inferred as the median sample
spacing) and minimizes the sum of squared residuals against the
composite flow curve over (p, D, q, lam, tau, n0).

Search strategy: a coarse deterministic multi-start grid over the two
timing parameters (lam, tau) with the remaining four parameters refined
per start by Nelder-Mead simplex descent in log space, followed by a
full six-parameter simplex polish of the best starts. No randomness is
used anywhere, so identical inputs give bitwise-identical results.
Candidate starts share no state and are reduced by (residual, start
index), so they may be evaluated in parallel by a caller.

One structural caveat: the rise curve depends on tau and n0 only through
the combination (u_s/n0 - 1)*exp[(p+D)*tau], i.e. sliding the onset
along the curve's own trajectory leaves the model unchanged. The fitter
therefore reports the canonical point on that ridge where the curve
passes one tenth of the background level 1/q (clipped into the
observation window). The fitted curve itself is unaffected.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, minimize

from .errors import NotConverged, TooFewSamples
from .model_core import TopicParams, _flow_values_raw

__all__ = [
    "TimeSeries",
    "FitResult",
    "PhaseLabel",
    "PhaseSegment",
    "ModelFit",
    "fit",
    "classify_phases",
    "compare_models",
]

MIN_SAMPLES = 8


@dataclass(frozen=True)
class TimeSeries:
    """Timestamped nonnegative publication counts per sampling interval."""

    times: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        counts = np.asarray(self.counts, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "counts", counts)
        if times.shape != counts.shape or times.ndim != 1:
            raise ValueError("times and counts must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(counts))):
            raise ValueError("times and counts must be finite")
        if times.size and np.any(np.diff(times) < 0):
            raise ValueError("times must be nondecreasing")
        if counts.size and float(np.min(counts)) < 0:
            raise ValueError("counts must be nonnegative")

    def __len__(self) -> int:
        return int(self.times.size)


@dataclass(frozen=True)
class FitResult:
    """Estimated parameters plus fit diagnostics.

    phase_boundaries carries the estimated (tau, lam) on the observation
    time axis; detail is empty for a clean fit and explains degenerate or
    non-converged outcomes otherwise.
    """

    params: TopicParams
    residual_rms: float
    converged: bool
    iterations: int
    phase_boundaries: tuple[float, float]
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "residual_rms": self.residual_rms,
            "converged": self.converged,
            "iterations": self.iterations,
            "phase_boundaries": {
                "tau": self.phase_boundaries[0],
                "lambda": self.phase_boundaries[1],
            },
            "detail": self.detail,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class PhaseLabel(enum.Enum):
    BACKGROUND = "background"
    RISE = "rise"
    SATURATION = "saturation"
    DECLINE = "decline"
    STABILIZED = "stabilized"


@dataclass(frozen=True)
class PhaseSegment:
    """A contiguous run of samples sharing one lifecycle phase.

    Indices are [start, stop) positions into the classified series.
    """

    label: PhaseLabel
    start: int
    stop: int
    t_start: float
    t_end: float


@dataclass(frozen=True)
class ModelFit:
    """One row of a model-comparison ranking."""

    name: str
    residual_rms: float
    converged: bool


# fitting box defaults; lam/tau bounds come from the observation window
_P_BOUNDS = (1e-4, 10.0)
_D_BOUNDS = (1e-4, 10.0)
_Q_BOUNDS = (1e-6, 1.0)

_STAGE_MAXITER = 140
_POLISH_MAXITER = 900
_RESTART_MAXITER = 1200
_TOP_K = 2


def _sample_interval(times: np.ndarray) -> float:
    gaps = np.diff(times)
    gaps = gaps[gaps > 0]
    if gaps.size == 0:
        raise ValueError("sample times carry no spacing; cannot infer the interval")
    return float(np.median(gaps))


def _cost(theta: np.ndarray, t: np.ndarray, y: np.ndarray) -> float:
    # theta = (log p, log D, log q, lam, tau, log n0)
    p = math.exp(theta[0])
    D = math.exp(theta[1])
    q = math.exp(theta[2])
    n0 = math.exp(theta[5])
    model = _flow_values_raw(p, D, q, theta[3], theta[4], n0, t)
    r = model - y
    return float(np.dot(r, r))


def _start_grid(t: np.ndarray, y: np.ndarray, box: dict) -> list[tuple[float, float]]:
    """Deterministic (lam, tau) candidate pairs.

    The duration candidates center on two cheap estimators: the crest
    position (argmax of a lightly smoothed series) and the decay onset
    (last time the smoothed series sits well above the tail level); the
    latter stays reliable when noise flattens the crest.
    """
    lam_lo, lam_hi = box["lam"]
    tau_lo, tau_hi = box["tau"]
    window = min(5, max(1, y.size // 4))
    smooth = np.convolve(y, np.ones(window) / window, mode="same")
    t_crest = float(t[int(np.argmax(smooth))])
    tail_level = float(np.mean(smooth[-max(2, t.size // 8):]))
    peak_level = float(np.max(smooth))
    high = smooth >= tail_level + 0.7 * (peak_level - tail_level)
    t_drop = float(t[np.nonzero(high)[0][-1]]) if np.any(high) else t_crest
    lam_cands = sorted(
        {
            round(min(max(lam, lam_lo), lam_hi), 9)
            for lam in (
                t_crest,
                0.9 * t_drop,
                t_drop,
                1.1 * t_drop,
                float(np.quantile(t, 0.5)),
                float(np.quantile(t, 0.8)),
            )
        }
    )
    anchor = max(t_drop, t_crest)
    tau_base = (
        float(t[0]),
        0.05 * anchor,
        0.15 * anchor,
        0.35 * anchor,
    )
    starts = []
    for lam in lam_cands:
        for tau in sorted({round(min(max(v, tau_lo), tau_hi), 9) for v in tau_base}):
            if tau < lam:
                starts.append((lam, tau))
    return starts


def _initial_guess(
    t: np.ndarray, y: np.ndarray, lam0: float, tau0: float, box: dict
) -> np.ndarray:
    tail = y[t > lam0]
    vs0 = float(np.mean(tail[-max(3, tail.size // 4):])) if tail.size else float(np.mean(y))
    vs0 = max(vs0, 1e-9)
    us0 = max(float(np.max(y)), vs0 * 1.01)
    q0 = float(np.clip(1.0 / vs0, *box["q"]))
    span = max(float(t[-1]) - lam0, _sample_interval(t))
    p0 = float(np.clip(3.0 / span, *box["p"]))
    d0 = float(np.clip(p0 * (us0 / vs0 - 1.0), *box["D"]))
    n00 = float(np.clip(np.interp(tau0, t, y), 1e-9, box["n0"][1]))
    return np.array([math.log(p0), math.log(d0), math.log(q0), math.log(n00)])


def _canonicalize_onset(
    p: float, D: float, q: float, lam: float, tau: float, n0: float,
    t_lo: float, t_hi: float,
) -> tuple[float, float]:
    """Move (tau, n0) to the canonical ridge point with n0 = (1/q)/10."""
    us = (p + D) / (p * q)
    k = p + D
    c = us / n0 - 1.0
    if c <= 0.0:
        return tau, n0
    log_ridge = math.log(c) + k * tau  # ln of the ridge invariant
    n0_can = 0.1 / q
    tau_can = (log_ridge - math.log(us / n0_can - 1.0)) / k
    tau_can = min(max(tau_can, max(t_lo, 0.0)), min(lam, t_hi))
    n0_can = us / (1.0 + math.exp(min(log_ridge - k * tau_can, 700.0)))
    if n0_can <= 0.0:
        return tau, n0
    return tau_can, n0_can


def _resolve_box(series: TimeSeries, y: np.ndarray, bounds: dict | None) -> dict:
    t = series.times
    box = {
        "p": _P_BOUNDS,
        "D": _D_BOUNDS,
        "q": _Q_BOUNDS,
        "lam": (float(t[0]), float(t[-1])),
        "tau": (float(t[0]), float(t[-1])),
        "n0": (1e-12, max(float(np.max(y)), 1e-9)),
    }
    if bounds:
        for key, pair in bounds.items():
            if key not in box:
                raise ValueError(f"unknown bound {key!r}")
            lo, hi = float(pair[0]), float(pair[1])
            if not lo < hi:
                raise ValueError(f"empty bound for {key!r}: ({lo}, {hi})")
            box[key] = (lo, hi)
    return box


def _degenerate_result(series: TimeSeries, dt: float) -> FitResult:
    y0 = float(series.counts[0]) / dt
    level = y0 if y0 > 0 else 1e-9
    t0, t1 = float(series.times[0]), float(series.times[-1])
    params = TopicParams(
        p=1.0, D=0.0, q=1.0 / level, lam=max((t0 + t1) / 2.0, 1e-9), tau=t0, n0=level
    )
    return FitResult(
        params=params,
        residual_rms=0.0,
        converged=False,
        iterations=0,
        phase_boundaries=(params.tau, params.lam),
        detail="degenerate series: all counts equal, no thematic signal to fit",
    )


def fit(series: TimeSeries, bounds: dict | None = None) -> FitResult:
    """Least-squares estimate of the six model parameters from a series.

    bounds optionally overrides the default parameter box; keys are
    p, D, q, lam, tau, n0 mapped to (low, high) pairs.

    Raises TooFewSamples below 8 samples. A series whose counts are all
    equal is underdetermined: the background-only fallback is returned
    with converged=False rather than raising.
    """
    if len(series) < MIN_SAMPLES:
        raise TooFewSamples(
            f"fitting needs at least {MIN_SAMPLES} samples, got {len(series)}"
        )
    if float(series.times[0]) <= 0.0:
        raise ValueError("the flow model is defined for t > 0; shift the series")
    dt = _sample_interval(series.times)
    if float(np.ptp(series.counts)) == 0.0:
        return _degenerate_result(series, dt)

    t = series.times
    y = series.counts / dt
    box = _resolve_box(series, y, bounds)
    n = t.size

    log_lo = np.log([box["p"][0], box["D"][0], box["q"][0], max(box["n0"][0], 1e-300)])
    log_hi = np.log([box["p"][1], box["D"][1], box["q"][1], box["n0"][1]])

    iterations = 0
    stage_results = []
    for idx, (lam0, tau0) in enumerate(_start_grid(t, y, box)):
        x0 = np.clip(_initial_guess(t, y, lam0, tau0, box), log_lo, log_hi)

        def cost4(x, lam=lam0, tau=tau0):
            return _cost(
                np.array([x[0], x[1], x[2], lam, tau, x[3]]), t, y
            )

        res = minimize(
            cost4,
            x0,
            method="Nelder-Mead",
            bounds=Bounds(log_lo, log_hi),
            options={"maxiter": _STAGE_MAXITER, "xatol": 1e-6, "fatol": 1e-12},
        )
        iterations += int(res.nit)
        stage_results.append((float(res.fun), idx, lam0, tau0, np.asarray(res.x)))

    stage_results.sort(key=lambda item: (item[0], item[1]))

    full_lo = np.array([log_lo[0], log_lo[1], log_lo[2], box["lam"][0], box["tau"][0], log_lo[3]])
    full_hi = np.array([log_hi[0], log_hi[1], log_hi[2], box["lam"][1], box["tau"][1], log_hi[3]])
    best = None
    for rank, (_, idx, lam0, tau0, x4) in enumerate(stage_results[:_TOP_K]):
        x0 = np.clip(
            np.array([x4[0], x4[1], x4[2], lam0, tau0, x4[3]]), full_lo, full_hi
        )
        res = minimize(
            _cost,
            x0,
            args=(t, y),
            method="Nelder-Mead",
            bounds=Bounds(full_lo, full_hi),
            options={"maxiter": _POLISH_MAXITER, "xatol": 1e-10, "fatol": 0.0},
        )
        iterations += int(res.nit)
        if best is None or (float(res.fun), idx) < (best[0], best[1]):
            best = (float(res.fun), idx, np.asarray(res.x))

    # restart the winner once: simplex descent benefits from a fresh simplex
    res = minimize(
        _cost,
        best[2],
        args=(t, y),
        method="Nelder-Mead",
        bounds=Bounds(full_lo, full_hi),
        options={"maxiter": _RESTART_MAXITER, "xatol": 1e-12, "fatol": 0.0},
    )
    iterations += int(res.nit)
    if float(res.fun) <= best[0]:
        best = (float(res.fun), best[1], np.asarray(res.x))

    cost, _, x = best
    p, D, q = math.exp(x[0]), math.exp(x[1]), math.exp(x[2])
    lam, tau, n0 = float(x[3]), float(x[4]), math.exp(x[5])
    tau, n0 = _canonicalize_onset(
        p, D, q, lam, tau, n0, float(t[0]), float(t[-1])
    )
    params = TopicParams(p=p, D=D, q=q, lam=lam, tau=tau, n0=n0)
    residual_rms = math.sqrt(cost / n)
    return FitResult(
        params=params,
        residual_rms=residual_rms,
        converged=True,
        iterations=iterations,
        phase_boundaries=(tau, lam),
    )


def classify_phases(
    series: TimeSeries, fit_result: FitResult, threshold: float = 0.05
) -> list[PhaseSegment]:
    """Label each sample with its lifecycle phase from the fitted curve.

    Phases run background, rise, saturation, decline, stabilized; any may
    be empty. A sample is 'saturation' while the fitted curve is within
    `threshold` (relative) of the saturation level before lam, and
    'stabilized' once within `threshold` of the background level after.
    Raises NotConverged for a failed fit.
    """
    if not fit_result.converged:
        raise NotConverged(f"cannot classify phases: {fit_result.detail or 'fit did not converge'}")
    params = fit_result.params
    us = (params.p + params.D) / (params.p * params.q)
    vs = 1.0 / params.q
    topicless = us <= (1.0 + threshold) * vs
    values = _flow_values_raw(
        params.p, params.D, params.q, params.lam, params.tau, params.n0, series.times
    )
    labels = []
    for t, value in zip(series.times, values):
        if t < params.tau:
            labels.append(PhaseLabel.BACKGROUND)
        elif topicless:
            labels.append(PhaseLabel.STABILIZED)
        elif t <= params.lam:
            if value >= (1.0 - threshold) * us:
                labels.append(PhaseLabel.SATURATION)
            else:
                labels.append(PhaseLabel.RISE)
        elif value > (1.0 + threshold) * vs:
            labels.append(PhaseLabel.DECLINE)
        else:
            labels.append(PhaseLabel.STABILIZED)

    segments = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] is not labels[start]:
            segments.append(
                PhaseSegment(
                    label=labels[start],
                    start=start,
                    stop=i,
                    t_start=float(series.times[start]),
                    t_end=float(series.times[i - 1]),
                )
            )
            start = i
    return segments


def _fit_malthus(t: np.ndarray, y: np.ndarray) -> tuple[float, bool, int]:
    """Exponential-growth least squares; returns (rms, converged, iters)."""
    if float(np.ptp(y)) == 0.0:
        return 0.0, False, 0
    positive = y > 0
    if np.count_nonzero(positive) >= 2:
        slope, intercept = np.polyfit(t[positive], np.log(y[positive]), 1)
    else:
        slope, intercept = 0.0, math.log(max(float(np.mean(y)), 1e-9))

    def cost(x):
        model = math.exp(x[0]) * np.exp(np.minimum(x[1] * t, 700.0))
        r = model - y
        return float(np.dot(r, r))

    res = minimize(
        cost,
        np.array([intercept, slope]),
        method="Nelder-Mead",
        options={"maxiter": 800, "xatol": 1e-10, "fatol": 0.0},
    )
    return math.sqrt(float(res.fun) / t.size), True, int(res.nit)


def compare_models(series: TimeSeries) -> list[ModelFit]:
    """Fit the exponential baseline and the logistic flow to one series.

    Returns entries ranked by residual (best first). On crest-shaped
    data the logistic wins: an exponential is monotone and cannot carry
    a local maximum.
    """
    if len(series) < MIN_SAMPLES:
        raise TooFewSamples(
            f"model comparison needs at least {MIN_SAMPLES} samples, got {len(series)}"
        )
    dt = _sample_interval(series.times)
    y = series.counts / dt
    logistic = fit(series)
    malthus_rms, malthus_ok, _ = _fit_malthus(series.times, y)
    entries = [
        ModelFit("logistic", logistic.residual_rms, logistic.converged),
        ModelFit("malthus", malthus_rms, malthus_ok),
    ]
    entries.sort(key=lambda m: (m.residual_rms, m.name))
    return entries
