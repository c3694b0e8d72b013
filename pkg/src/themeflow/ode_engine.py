"""Fixed-step integration of the flow model's differential form.

Serves as an independent numerical oracle for the closed forms in
model_core and as the only evaluator for model variants that lack one.

Rise, in shifted time s = t - tau (the lateness tau is a pure time
translation, so no delay machinery is needed):

    du/ds = p*u*(1 - q*u) + D*u,    u(s=0) = n0

Decay, from the felling handoff at lam:

    dv/dt = p*v*(1 - q*v),          v(lam) = u(lam)

Only fixed-step Euler and classic RK4 are provided; adaptive stepping is
deliberately rejected so trajectories reproduce bit-for-bit on identical
inputs. The time grid always contains the felling point lam exactly,
inserting a short final step if lam is not a multiple of the step size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StepTooLarge
from .model_core import TopicParams

__all__ = ["IntegratorConfig", "Trajectory", "integrate_rise", "integrate_decay", "integrate_flow"]

_METHODS = ("euler", "rk4")


@dataclass(frozen=True)
class IntegratorConfig:
    """Step size and stepping scheme. step <= lam/100 is a sane default."""

    step: float
    method: str = "rk4"

    def __post_init__(self):
        if not (math.isfinite(self.step) and self.step > 0):
            raise ValueError(f"step must be finite and > 0, got {self.step!r}")
        if self.method not in _METHODS:
            raise ValueError(f"method must be one of {_METHODS}, got {self.method!r}")


@dataclass(frozen=True)
class Trajectory:
    """A sampled curve: strictly increasing times, finite nonnegative values."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        if times.shape != values.shape or times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if times.size and np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(values)) or (values.size and float(np.min(values)) < 0):
            raise ValueError("values must be finite and nonnegative")

    def write_csv(self, path) -> None:
        """Two-column CSV (time,value) at full round-trip precision."""
        with open(path, "w", newline="") as fh:
            fh.write("time,value\n")
            for t, v in zip(self.times, self.values):
                fh.write(f"{float(t)!r},{float(v)!r}\n")


def _grid(t0: float, t1: float, h: float) -> np.ndarray:
    """Nodes t0 + i*h, with the final node pinned to t1 exactly."""
    span = t1 - t0
    n_whole = int(math.floor(span / h - 1e-12))
    times = t0 + h * np.arange(n_whole + 1)
    if times[-1] < t1:
        times = np.append(times, t1)
    else:
        times[-1] = t1
    return times


def _step_euler(f, y: float, h: float) -> float:
    return y + h * f(y)

def _step_rk4(f, y: float, h: float) -> float:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)


def _integrate(f, y0: float, times: np.ndarray, method: str) -> np.ndarray:
    stepper = _step_rk4 if method == "rk4" else _step_euler
    values = np.empty_like(times)
    values[0] = y0
    y = y0
    for i in range(1, times.size):
        y = stepper(f, y, float(times[i] - times[i - 1]))
        if not math.isfinite(y) or y < 0.0:
            raise StepTooLarge(
                f"step produced value {y!r} at t = {times[i]}; reduce the step size"
            )
        values[i] = y
    return values


def integrate_rise(params: TopicParams, cfg: IntegratorConfig) -> Trajectory:
    """Integrate the rise equation on the absolute-time grid [tau, lam]."""
    if params.tau >= params.lam:
        raise ValueError("rise window is empty: tau must be below lam")
    p, D, q = params.p, params.D, params.q

    def f(u: float) -> float:
        return p * u * (1.0 - q * u) + D * u

    times = _grid(params.tau, params.lam, cfg.step)
    values = _integrate(f, params.n0, times, cfg.method)
    return Trajectory(times=times, values=values)


def integrate_decay(
    params: TopicParams, u_lambda: float, cfg: IntegratorConfig, horizon: float
) -> Trajectory:
    """Integrate the background relaxation over [lam, lam + horizon].

    u_lambda is the felling value handed over from the rise branch.
    """
    if u_lambda <= 0:
        raise ValueError(f"u_lambda must be > 0, got {u_lambda!r}")
    if horizon <= 0:
        raise ValueError(f"horizon must be > 0, got {horizon!r}")
    p, q = params.p, params.q

    def f(v: float) -> float:
        return p * v * (1.0 - q * v)

    times = _grid(params.lam, params.lam + horizon, cfg.step)
    values = _integrate(f, u_lambda, times, cfg.method)
    return Trajectory(times=times, values=values)


def integrate_flow(
    params: TopicParams, cfg: IntegratorConfig, horizon: float
) -> Trajectory:
    """Chain rise and decay with the felling handoff; grid contains lam."""
    if horizon <= params.lam:
        raise ValueError("horizon must extend past lam")
    rise = integrate_rise(params, cfg)
    decay = integrate_decay(params, float(rise.values[-1]), cfg, horizon - params.lam)
    return Trajectory(
        times=np.concatenate([rise.times, decay.times[1:]]),
        values=np.concatenate([rise.values, decay.values[1:]]),
    )
