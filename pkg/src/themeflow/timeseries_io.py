"""Synthetic series generation, CSV ingestion, and plot-data export.

CSV format (normative for the whole package): header `time,count`,
UTF-8, `.` decimal separator, LF line endings, full round-trip float
precision. Plot exports add a sidecar JSON with the analytic markers
{u_s, v_s, t_inf, lambda}.

Noise sampling is inverse-transform from PCG64 uniforms (Poisson by
sequential CDF search, Gaussian through the normal quantile function),
so a given seed reproduces the same series on any platform.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import NonMonotoneTime, ParseError
from .fitting import TimeSeries
from .model_core import FlowCurve, TopicParams, flow_values
from .ode_engine import Trajectory

__all__ = [
    "GeneratorSpec",
    "generate",
    "read_series",
    "write_series",
    "export_plot_data",
]

_NOISE_KINDS = ("none", "poisson", "gaussian")
# Poisson means above this are split into chunks so exp(-mu) stays
# representable in the sequential CDF walk
_POISSON_CHUNK = 500.0


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for a synthetic series sampled from one flow curve."""

    params: TopicParams
    sample_interval: float
    horizon: float
    noise: str = "none"
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.sample_interval) and self.sample_interval > 0):
            raise ValueError(f"sample_interval must be > 0, got {self.sample_interval!r}")
        if self.horizon <= self.params.lam:
            raise ValueError(
                f"horizon must extend past lam = {self.params.lam}, got {self.horizon!r}"
            )
        if self.noise not in _NOISE_KINDS:
            raise ValueError(f"noise must be one of {_NOISE_KINDS}, got {self.noise!r}")
        if self.noise == "gaussian" and self.sigma < 0:
            raise ValueError(f"gaussian sigma must be >= 0, got {self.sigma!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "sample_interval": self.sample_interval,
            "horizon": self.horizon,
            "noise": self.noise,
            "sigma": self.sigma,
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorSpec":
        try:
            return cls(
                params=TopicParams.from_dict(data["params"]),
                sample_interval=float(data["sample_interval"]),
                horizon=float(data["horizon"]),
                noise=str(data.get("noise", "none")),
                sigma=float(data.get("sigma", 0.0)),
                seed=int(data.get("seed", 0)),
            )
        except KeyError as exc:
            raise ValueError(f"missing generator key {exc.args[0]!r}") from None


def _poisson_one(rng: np.random.Generator, mu: float) -> int:
    # inverse-transform by sequential CDF search; exact for mu <= chunk
    total = 0
    while mu > _POISSON_CHUNK:
        total += _poisson_one(rng, _POISSON_CHUNK)
        mu -= _POISSON_CHUNK
    if mu <= 0.0:
        return total
    u = rng.random()
    prob = math.exp(-mu)
    cum = prob
    k = 0
    cap = int(mu + 40.0 * math.sqrt(mu) + 100.0)
    while u > cum and k < cap:
        k += 1
        prob *= mu / k
        cum += prob
    return total + k


def generate(spec: GeneratorSpec) -> TimeSeries:
    """Sample expected counts at interval midpoints and apply noise.

    Expected count per bin is sample_interval * n(midpoint). Identical
    specs produce identical series.
    """
    dt = spec.sample_interval
    n_bins = int(math.floor(spec.horizon / dt + 1e-9))
    mids = (np.arange(n_bins) + 0.5) * dt
    means = dt * flow_values(spec.params, mids)

    if spec.noise == "none":
        counts = means
    elif spec.noise == "poisson":
        rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
        counts = np.array([float(_poisson_one(rng, mu)) for mu in means])
    else:
        rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
        draws = np.array([float(ndtri(rng.random())) for _ in range(n_bins)])
        counts = np.maximum(means + spec.sigma * draws, 0.0)
    return TimeSeries(times=mids, counts=counts)


def read_series(path) -> TimeSeries:
    """Load a `time,count` CSV, validating shape, sign, and time order."""
    times: list[float] = []
    counts: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["time", "count"]:
            raise ParseError(f"{path}: expected header 'time,count', got {header!r}")
        for row_num, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ParseError(f"{path}:{row_num}: expected 2 columns, got {len(row)}")
            try:
                t = float(row[0])
            except ValueError:
                raise ParseError(f"{path}:{row_num}: column 'time' is not numeric: {row[0]!r}") from None
            try:
                c = float(row[1])
            except ValueError:
                raise ParseError(f"{path}:{row_num}: column 'count' is not numeric: {row[1]!r}") from None
            if not (math.isfinite(t) and math.isfinite(c)):
                raise ParseError(f"{path}:{row_num}: non-finite value")
            if c < 0:
                raise ParseError(f"{path}:{row_num}: negative count {c!r}")
            if times and t < times[-1]:
                raise NonMonotoneTime(
                    f"{path}:{row_num}: time {t!r} decreases below {times[-1]!r}"
                )
            times.append(t)
            counts.append(c)
    return TimeSeries(times=np.array(times), counts=np.array(counts))


def write_series(series: TimeSeries, path) -> None:
    """Write a `time,count` CSV at full round-trip precision."""
    with open(path, "w", newline="") as fh:
        fh.write("time,count\n")
        for t, c in zip(series.times, series.counts):
            fh.write(f"{float(t)!r},{float(c)!r}\n")


def _default_grid(curve: FlowCurve, points: int = 600) -> np.ndarray:
    lam = curve.params.lam
    return np.linspace(3.0 * lam / points, 3.0 * lam, points)


def _markers_path(path) -> str:
    text = str(path)
    stem, dot, _ = text.rpartition(".")
    return (stem if dot else text) + ".markers.json"


def export_plot_data(items, path, grid=None) -> dict:
    """Write aligned plot-ready columns for curves and series.

    items is a sequence of (label, object) pairs where each object is a
    FlowCurve, a TimeSeries, or a Trajectory. All columns share one time
    axis: `grid` if given, else the union of the sampled items' times,
    else a default sweep over (0, 3*lam] of the first curve. Sampled
    items contribute values only at their own times; other cells stay
    blank. When at least one curve is present its analytic markers
    {u_s, v_s, t_inf, lambda} go to a sidecar JSON next to the CSV.

    Returns {"csv": path, "markers": path-or-None}.
    """
    items = list(items)
    if not items:
        raise ValueError("export_plot_data needs at least one item")
    for label, obj in items:
        if not isinstance(obj, (FlowCurve, TimeSeries, Trajectory)):
            raise TypeError(
                f"cannot export {type(obj).__name__} ({label!r}); "
                "pass a curve, series, or trajectory"
            )
    curves = [obj for _, obj in items if isinstance(obj, FlowCurve)]

    if grid is not None:
        axis = np.asarray(grid, dtype=float)
    else:
        sampled = [
            obj.times for _, obj in items if isinstance(obj, (TimeSeries, Trajectory))
        ]
        if sampled:
            axis = np.unique(np.concatenate(sampled))
        elif curves:
            axis = _default_grid(curves[0])
        else:
            raise ValueError("no time axis: pass a grid or include a sampled item")

    columns = []
    for label, obj in items:
        if isinstance(obj, FlowCurve):
            columns.append((label, [repr(float(v)) for v in flow_values(obj.params, axis)]))
        else:
            values = obj.counts if isinstance(obj, TimeSeries) else obj.values
            lookup = {float(t): float(v) for t, v in zip(obj.times, values)}
            columns.append(
                (label, [repr(lookup[float(t)]) if float(t) in lookup else "" for t in axis])
            )

    with open(path, "w", newline="") as fh:
        fh.write("time," + ",".join(label for label, _ in columns) + "\n")
        for i, t in enumerate(axis):
            fh.write(
                f"{float(t)!r}," + ",".join(col[i] for _, col in columns) + "\n"
            )

    markers_file = None
    if curves:
        markers_file = _markers_path(path)
        first = curves[0]
        with open(markers_file, "w", newline="") as fh:
            json.dump(
                {
                    "u_s": first.u_s,
                    "v_s": first.v_s,
                    "t_inf": first.t_inf,
                    "lambda": first.params.lam,
                },
                fh,
            )
            fh.write("\n")
    return {"csv": str(path), "markers": markers_file}
