"""Closed-form curves of the single-topic publication-flow model.

A topic of intensity D and duration lam pushes the publication density
n(t) above its background level. The composite curve is stitched from a
rise branch u and a decay branch v at the boundary lam ("felling"):

    n(t) = u(t)  for 0 < t <= lam,     n(t) = v(t)  for t > lam,
    with u(lam) = v(lam).

Rise (tau is the media-lateness shift; u(tau) = n0):

    u(t) = u_s / (1 + (u_s/n0 - 1) * exp[-(p+D)(t - tau)])
    u_s  = (p + D) / (p * q)                      (saturation level)
    t_inf = ln(u_s/n0 - 1) / (p + D) + tau        (inflection, u = u_s/2)

Decay (background-only relaxation from the felling value u(lam)):

    v(t) = u(lam) / (q*u(lam) + (1 - q*u(lam)) * exp[-p(t - lam)])
    v_s  = 1/q                                    (post-topic asymptote)

and, when the rise saturated before lam (u(lam) = u_s), the equivalent

    v(t) = v_s*(p + D) / (p + D*(1 - exp[-p(t - lam)])).

Two legacy single-purpose comparators are included: pure exponential
growth n0*exp(k*t) and the two-exponential obsolescence share
m(t) = 1 - a*exp(-t) - b*exp(-2t).

Everything here is a pure function of immutable inputs and safe to call
from any number of threads.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import NoInflection, OutOfWindow

__all__ = [
    "TopicParams",
    "FlowCurve",
    "LegacyParams",
    "saturation_level",
    "background_level",
    "inflection_time",
    "eval_u",
    "eval_v",
    "eval_v_saturated",
    "eval_flow",
    "exponential_regime_approx",
    "malthus",
    "obsolescence_share",
    "flow_values",
]

# exp arguments are clamped here; beyond it the closed forms are at their
# analytic limits to double precision anyway
_EXP_CLAMP = 700.0


@dataclass(frozen=True)
class TopicParams:
    """The six parameters of the single-topic model.

    p:   background growth rate (1/time), > 0
    D:   topic intensity (1/time), >= 0, constant over the active window
    q:   inverse asymptotic background level (time/publications), > 0
    lam: topic duration (time), > 0
    tau: media lateness (time), >= 0; pure time shift of the rise
    n0:  publication density at t = tau (publications/time), > 0
    """

    p: float
    D: float
    q: float
    lam: float
    tau: float
    n0: float

    def __post_init__(self):
        for name in ("p", "q", "lam", "n0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        for name in ("D", "tau"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if self.starts_above_saturation:
            warnings.warn(
                "n0 exceeds the saturation level (p+D)/(p*q); the rise branch "
                "decreases toward saturation instead of growing",
                stacklevel=2,
            )

    @property
    def starts_above_saturation(self) -> bool:
        """True when n0 > u_s, i.e. the rise is a logistic from above."""
        return self.n0 > saturation_level(self)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "D": self.D,
            "q": self.q,
            "lambda": self.lam,
            "tau": self.tau,
            "n0": self.n0,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TopicParams":
        try:
            return cls(
                p=float(data["p"]),
                D=float(data["D"]),
                q=float(data["q"]),
                lam=float(data["lambda"]),
                tau=float(data["tau"]),
                n0=float(data["n0"]),
            )
        except KeyError as exc:
            raise ValueError(f"missing parameter key {exc.args[0]!r}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TopicParams":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("parameter JSON must be a flat object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class FlowCurve:
    """A composite rise/decay curve with its derived constants cached.

    t_inf is None when n0 >= u_s (no inflection on the rising branch).
    """

    params: TopicParams
    u_s: float
    v_s: float
    t_inf: float | None

    @classmethod
    def from_params(cls, params: TopicParams) -> "FlowCurve":
        u_s = saturation_level(params)
        try:
            t_inf = inflection_time(params)
        except NoInflection:
            t_inf = None
        return cls(params=params, u_s=u_s, v_s=1.0 / params.q, t_inf=t_inf)


@dataclass(frozen=True)
class LegacyParams:
    """Mixture weights of the two-exponential obsolescence share plus the
    exponential-growth rate k."""

    a: float
    b: float
    k: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("mixture weights a, b must be >= 0")
        if self.a + self.b > 1.0 + 1e-12:
            raise ValueError("mixture weights must satisfy a + b <= 1")
        if not math.isfinite(self.k):
            raise ValueError("rate k must be finite")


def saturation_level(params: TopicParams) -> float:
    """Asymptote of the rise branch, (p+D)/(p*q).

    Independent of n0 and tau; collapses to the background level 1/q
    when D = 0.
    """
    return (params.p + params.D) / (params.p * params.q)


def background_level(params: TopicParams) -> float:
    """Post-topic asymptote 1/q (carrying level of background generation)."""
    return 1.0 / params.q


def inflection_time(params: TopicParams) -> float:
    """Time where the rise branch passes u_s/2 and bends.

    Raises NoInflection when n0 >= u_s: a logistic falling from above has
    no interior bending point.
    """
    u_s = saturation_level(params)
    ratio = u_s / params.n0 - 1.0
    if ratio <= 0.0:
        raise NoInflection(
            f"n0 = {params.n0} is not below the saturation level {u_s}"
        )
    return math.log(ratio) / (params.p + params.D) + params.tau


def _u_closed(params: TopicParams, t: float) -> float:
    # Stable evaluation of the rise closed form for any real t.
    u_s = saturation_level(params)
    c = u_s / params.n0 - 1.0
    k = params.p + params.D
    if c == 0.0:
        return u_s
    arg = -k * (t - params.tau)
    if c > 0.0:
        if arg <= 0.0:
            # t >= tau: the exp term is <= 1, and at t = tau the algebra
            # collapses to n0 exactly
            return u_s / (1.0 + c * math.exp(arg))
        # t < tau: sigmoid form avoids overflow of exp(arg)
        return u_s * float(expit(-arg - math.log(c)))
    # n0 > u_s: decreasing branch; pole at t < tau where 1 + c*exp(...) = 0
    denom = 1.0 + c * math.exp(min(arg, _EXP_CLAMP))
    if denom <= 0.0:
        raise ValueError(
            "rise curve starting above saturation has no physical value "
            f"at t = {t}"
        )
    return u_s / denom


def eval_u(params: TopicParams, t: float) -> float:
    """Rise-branch density at time t, valid for 0 < t <= lam."""
    if not 0.0 < t <= params.lam:
        raise OutOfWindow(f"rise branch is defined on (0, {params.lam}], got t = {t}")
    return _u_closed(params, t)


def _v_closed(params: TopicParams, u_lam: float, t: float) -> float:
    # exponent is <= 0 for t >= lam, so this never overflows
    e = math.exp(-params.p * (t - params.lam))
    return u_lam / (params.q * u_lam + (1.0 - params.q * u_lam) * e)


def eval_v(params: TopicParams, t: float) -> float:
    """Decay-branch density at time t >= lam.

    Starts from the felling value u(lam) and relaxes toward 1/q.
    """
    if t < params.lam:
        raise OutOfWindow(f"decay branch is defined on [{params.lam}, inf), got t = {t}")
    return _v_closed(params, _u_closed(params, params.lam), t)


def eval_v_saturated(params: TopicParams, t: float) -> float:
    """Decay branch under the simplification u(lam) = u_s.

    Exactly equal to eval_v whenever the rise actually saturated before
    lam; a cheap approximation otherwise.
    """
    if t < params.lam:
        raise OutOfWindow(f"decay branch is defined on [{params.lam}, inf), got t = {t}")
    v_s = 1.0 / params.q
    e = math.exp(-params.p * (t - params.lam))
    return v_s * (params.p + params.D) / (params.p + params.D * (1.0 - e))


def eval_flow(curve: FlowCurve, t: float) -> float:
    """Composite density n(t): rise for t <= lam, decay after.

    The model is defined for t > 0 only; t <= 0 raises OutOfWindow.
    """
    if t <= 0.0:
        raise OutOfWindow(f"the flow model is defined for t > 0, got t = {t}")
    params = curve.params
    if t <= params.lam:
        return _u_closed(params, t)
    return _v_closed(params, _u_closed(params, params.lam), t)


def exponential_regime_approx(params: TopicParams, t: float) -> float:
    """Early-time exponential approximation n0 * exp[(p+D)(t - tau)].

    Tracks the rise branch well below the inflection time and degrades
    toward it; at t = tau it returns n0 exactly, like the rise branch.
    """
    arg = min((params.p + params.D) * (t - params.tau), _EXP_CLAMP)
    return params.n0 * math.exp(arg)


def malthus(k: float, n0: float, t: float) -> float:
    """Pure exponential growth n0 * exp(k*t) for t >= 0."""
    if t < 0:
        raise OutOfWindow(f"exponential growth is defined for t >= 0, got t = {t}")
    return n0 * math.exp(k * t)


def obsolescence_share(legacy: LegacyParams, t: float) -> float:
    """Share of still-useful information, 1 - a*exp(-t) - b*exp(-2t).

    Nondecreasing from 1 - a - b at t = 0 toward 1.
    """
    if t < 0:
        raise OutOfWindow(f"obsolescence share is defined for t >= 0, got t = {t}")
    return 1.0 - legacy.a * math.exp(-t) - legacy.b * math.exp(-2.0 * t)


def _flow_values_raw(
    p: float, D: float, q: float, lam: float, tau: float, n0: float,
    t: np.ndarray,
) -> np.ndarray:
    """Vectorized composite curve without validation.

    Fitting's hot path: must stay finite for any positive parameter
    combination, so near-pole values are capped instead of raising.
    """
    t = np.asarray(t, dtype=float)
    u_s = (p + D) / (p * q)
    k = p + D
    c = u_s / n0 - 1.0
    out = np.empty_like(t)

    rise = t <= lam
    if c == 0.0:
        out[rise] = u_s
    elif c > 0.0:
        arg = -k * (t[rise] - tau)
        after = arg <= 0.0
        direct = u_s / (1.0 + c * np.exp(np.minimum(arg, 0.0)))
        sigmoid = u_s * expit(-arg - math.log(c))
        out[rise] = np.where(after, direct, sigmoid)
    else:
        arg = np.minimum(-k * (t[rise] - tau), _EXP_CLAMP)
        denom = np.maximum(1.0 + c * np.exp(arg), 1e-15)
        out[rise] = np.minimum(u_s / denom, 1e15)

    decay = ~rise
    if np.any(decay):
        if c == 0.0:
            u_lam = u_s
        elif c > 0.0:
            arg_lam = -k * (lam - tau)
            if arg_lam <= 0.0:
                u_lam = u_s / (1.0 + c * math.exp(arg_lam))
            else:
                u_lam = u_s * float(expit(-arg_lam - math.log(c)))
        else:
            u_lam = min(u_s / max(1.0 + c * math.exp(min(-k * (lam - tau), _EXP_CLAMP)), 1e-15), 1e15)
        e = np.exp(-p * (t[decay] - lam))
        out[decay] = u_lam / (q * u_lam + (1.0 - q * u_lam) * e)
    return out


def flow_values(params: TopicParams, times) -> np.ndarray:
    """Composite curve evaluated on an array of times (all must be > 0)."""
    t = np.asarray(times, dtype=float)
    if t.size and float(np.min(t)) <= 0.0:
        raise OutOfWindow("the flow model is defined for t > 0")
    return _flow_values_raw(
        params.p, params.D, params.q, params.lam, params.tau, params.n0, t
    )
