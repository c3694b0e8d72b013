"""Multi-topic simulator under a fixed information-space capacity.

The information space emits a constant total of N publications per time
unit. Each scheduled topic demands its standalone flow curve (shifted to
its start time, less its own background floor 1/q); the background flow
receives whatever capacity the topics leave. When the summed demand
exceeds N, demands are scaled proportionally so the step's total is
exactly N and the background gets nothing; such steps are flagged.

The budget is enforced pointwise: background(t) + sum_i topic_i(t) = N
at every grid node, exactly. The integral form (total output over a
window equals N times its length) is kept as an audit in
balance_integral.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .model_core import TopicParams, _flow_values_raw
from .ode_engine import _grid

__all__ = ["BalanceScenario", "BalanceTrace", "simulate", "balance_integral"]


@dataclass(frozen=True)
class BalanceScenario:
    """Capacity, horizon, step, and the scheduled topics (start, params)."""

    capacity: float
    horizon: float
    step: float
    topics: tuple[tuple[float, TopicParams], ...]

    def __post_init__(self):
        if not (math.isfinite(self.capacity) and self.capacity > 0):
            raise ValueError(f"capacity must be > 0, got {self.capacity!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ValueError(f"horizon must be > 0, got {self.horizon!r}")
        if not (math.isfinite(self.step) and self.step > 0):
            raise ValueError(f"step must be > 0, got {self.step!r}")
        object.__setattr__(self, "topics", tuple(self.topics))
        for i, (start, params) in enumerate(self.topics):
            if start < 0:
                raise ValueError(f"topic {i}: start must be >= 0, got {start!r}")
            if start + params.lam > self.horizon:
                warnings.warn(
                    f"topic {i} is truncated: start + lam = {start + params.lam} "
                    f"exceeds the horizon {self.horizon}",
                    stacklevel=2,
                )

    @classmethod
    def from_dict(cls, data: dict) -> "BalanceScenario":
        try:
            topics = tuple(
                (float(entry["start"]), TopicParams.from_dict(entry["params"]))
                for entry in data.get("topics", [])
            )
            return cls(
                capacity=float(data["capacity"]),
                horizon=float(data["horizon"]),
                step=float(data["step"]),
                topics=topics,
            )
        except KeyError as exc:
            raise ValueError(f"missing scenario key {exc.args[0]!r}") from None

    @classmethod
    def from_json_file(cls, path) -> "BalanceScenario":
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("scenario JSON must be an object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class BalanceTrace:
    """Simulation output: per-topic flows, background flow, contention flags.

    capacity is the pointwise budget the trace was allocated against.
    """

    times: np.ndarray
    per_topic: np.ndarray
    background: np.ndarray
    saturated: np.ndarray
    capacity: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        per_topic = np.atleast_2d(np.asarray(self.per_topic, dtype=float))
        if per_topic.size == 0:
            per_topic = per_topic.reshape(0, times.size)
        background = np.asarray(self.background, dtype=float)
        saturated = np.asarray(self.saturated, dtype=bool)
        for name, arr in (("times", times), ("background", background), ("saturated", saturated)):
            if arr.shape != (times.size,):
                raise ValueError(f"{name} must be 1-d of length {times.size}")
        if per_topic.shape[1] != times.size:
            raise ValueError("per_topic must have one column per grid time")
        if not (np.all(np.isfinite(per_topic)) and np.all(np.isfinite(background))):
            raise ValueError("flows must be finite")
        if (per_topic.size and float(per_topic.min()) < 0) or (
            background.size and float(background.min()) < 0
        ):
            raise ValueError("flows must be nonnegative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "per_topic", per_topic)
        object.__setattr__(self, "background", background)
        object.__setattr__(self, "saturated", saturated)

    @property
    def n_topics(self) -> int:
        return int(self.per_topic.shape[0])

    def write_csv(self, path) -> None:
        """Wide CSV: time, background, topic_0, topic_1, ..."""
        header = ["time", "background"] + [f"topic_{i}" for i in range(self.n_topics)]
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for j, t in enumerate(self.times):
                row = [repr(float(t)), repr(float(self.background[j]))]
                row += [repr(float(self.per_topic[i, j])) for i in range(self.n_topics)]
                fh.write(",".join(row) + "\n")


def _demand(start: float, params: TopicParams, times: np.ndarray) -> np.ndarray:
    """Standalone thematic demand: flow above the topic's own floor 1/q."""
    demand = np.zeros_like(times)
    rel = times - start
    active = rel > 0
    if np.any(active):
        flow = _flow_values_raw(
            params.p, params.D, params.q, params.lam, params.tau, params.n0, rel[active]
        )
        demand[active] = np.maximum(flow - 1.0 / params.q, 0.0)
    return demand


def _column_total(background: np.ndarray, alloc: np.ndarray, j: int) -> float:
    """Correctly rounded step total: the conservation invariant's meaning
    of background + sum of per-topic flows."""
    return math.fsum([float(background[j]), *(float(v) for v in alloc[:, j])])


def _close_columns_exactly(
    alloc: np.ndarray, background: np.ndarray, capacity: float
) -> None:
    """Make every step's total output equal the capacity exactly.

    Totals are measured with correctly rounded summation (math.fsum),
    which a naive left-to-right or pairwise sum tracks to within one
    ulp. Columns whose allocations alone exceed the capacity are first
    shaved down monotonically (largest entry first) so the background
    stays nonnegative; the background then absorbs the residue via
    Newton steps with a one-ulp walk as backstop.
    """
    n_topics = alloc.shape[0]
    for j in range(background.size):
        for _ in range(6):
            if n_topics:
                # shave pure over-allocation so the background stays >= 0
                for _ in range(8):
                    excess = _column_total(background, alloc, j) - capacity
                    if excess <= 0.0 or not alloc[:, j].any():
                        break
                    top = int(np.argmax(alloc[:, j]))
                    alloc[top, j] = max(alloc[top, j] - excess, 0.0)
            for _ in range(6):
                gap = capacity - _column_total(background, alloc, j)
                if gap == 0.0:
                    break
                background[j] = max(background[j] + gap, 0.0)
            for _ in range(4):
                total = _column_total(background, alloc, j)
                if total == capacity:
                    break
                background[j] = max(
                    math.nextafter(
                        float(background[j]),
                        math.inf if total < capacity else -math.inf,
                    ),
                    0.0,
                )
            if _column_total(background, alloc, j) == capacity:
                break
            if n_topics == 0 or not alloc[:, j].any():
                break
            # the true total sits exactly on a rounding midpoint for every
            # background value; a one-ulp shave of the largest entry is
            # sub-ulp dust on the total that breaks the tie
            top = int(np.argmax(alloc[:, j]))
            alloc[top, j] = math.nextafter(float(alloc[top, j]), -math.inf)


def simulate(scenario: BalanceScenario) -> BalanceTrace:
    """Allocate capacity across topics and background over the horizon.

    Over-demand never errors: the step is flagged as saturated and all
    topic demands are scaled by N/sum so their ratios are preserved and
    the background gets nothing (up to float-rounding dust of the
    scaling itself).
    """
    capacity = scenario.capacity
    times = _grid(0.0, scenario.horizon, scenario.step)
    n_topics = len(scenario.topics)
    alloc = np.zeros((n_topics, times.size))
    for i, (start, params) in enumerate(scenario.topics):
        alloc[i] = _demand(start, params, times)

    totals = alloc.sum(axis=0) if n_topics else np.zeros(times.size)
    saturated = totals > capacity
    if np.any(saturated):
        alloc[:, saturated] *= capacity / totals[saturated]

    sums = alloc.sum(axis=0) if n_topics else np.zeros(times.size)
    background = np.maximum(capacity - sums, 0.0)
    background[saturated] = 0.0
    _close_columns_exactly(alloc, background, capacity)
    return BalanceTrace(
        times=times,
        per_topic=alloc,
        background=background,
        saturated=saturated,
        capacity=capacity,
    )


def balance_integral(trace: BalanceTrace) -> float:
    """Relative deviation of the trace's total output from its budget.

    Integrates background + all topics over the trace window with the
    trapezoid rule and divides by the same integral of the constant
    capacity level (analytically capacity times the window length). A
    trace whose pointwise totals equal the capacity comes back at
    exactly 0.
    """
    total = trace.background + (
        trace.per_topic.sum(axis=0) if trace.n_topics else 0.0
    )
    integral = float(trapezoid(total, trace.times))
    budget = float(
        trapezoid(np.full(trace.times.size, trace.capacity), trace.times)
    )
    return integral / budget - 1.0
