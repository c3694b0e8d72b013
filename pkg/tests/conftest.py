from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from themeflow import TopicParams

settings.register_profile(
    "ci",
    max_examples=60,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.filter_too_much],
)
settings.load_profile("ci")

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


@pytest.fixture
def std_params():
    """Small worked example: u_s = 2, v_s = 1, t_inf = ln(9)/2."""
    return TopicParams(p=1.0, D=1.0, q=1.0, lam=10.0, tau=0.0, n0=0.2)


@pytest.fixture
def fit_params():
    """Round-trip fixture: u_s = 150, v_s = 50, t_inf ~ 4.2449."""
    return TopicParams(p=0.5, D=1.0, q=0.02, lam=20.0, tau=2.0, n0=5.0)


def draw_params(
    rng: np.random.Generator,
    p_range=(0.1, 2.0),
    d_range=(0.1, 3.0),
    q_range=(0.005, 0.5),
    floor_fraction=(0.05, 0.9),
    tau_range=(0.0, 2.0),
    rise_span=(3.0, 30.0),
) -> TopicParams:
    """One random valid parameter set.

    n0 is drawn as a fraction of the background level 1/q (so n0 < u_s
    always) and lam is placed so the dimensionless rise span
    (p+D)*(lam-tau) falls in rise_span.
    """
    p = rng.uniform(*p_range)
    D = rng.uniform(*d_range)
    q = rng.uniform(*q_range)
    n0 = rng.uniform(*floor_fraction) / q
    tau = rng.uniform(*tau_range)
    lam = tau + rng.uniform(*rise_span) / (p + D)
    return TopicParams(p=p, D=D, q=q, lam=lam, tau=tau, n0=n0)
