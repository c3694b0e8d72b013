"""Rendering smoke tests: figures build and save without a display."""

import numpy as np

from themeflow import (
    BalanceScenario,
    FlowCurve,
    GeneratorSpec,
    TopicParams,
    classify_phases,
    fit,
    generate,
    simulate,
)
from themeflow.plotting import balance_figure, fit_figure, flow_figure, save_figure


def test_flow_figure(tmp_path, fit_params):
    curve = FlowCurve.from_params(fit_params)
    path = save_figure(flow_figure(curve), tmp_path / "flow.png")
    assert (tmp_path / "flow.png").stat().st_size > 0
    assert path.endswith("flow.png")


def test_fit_figure_with_phases(tmp_path, fit_params):
    series = generate(
        GeneratorSpec(params=fit_params, sample_interval=0.25, horizon=50.0)
    )
    result = fit(series)
    segments = classify_phases(series, result)
    fig = fit_figure(series, FlowCurve.from_params(result.params), segments)
    save_figure(fig, tmp_path / "fit.png")
    assert (tmp_path / "fit.png").stat().st_size > 0


def test_balance_figure(tmp_path):
    topic = TopicParams(p=0.5, D=0.6, q=0.02, lam=8.0, tau=0.5, n0=50.0)
    trace = simulate(
        BalanceScenario(
            capacity=100.0, horizon=30.0, step=0.1,
            topics=((0.0, topic), (5.0, topic)),
        )
    )
    save_figure(balance_figure(trace), tmp_path / "balance.png")
    assert (tmp_path / "balance.png").stat().st_size > 0


def test_flow_figure_with_trajectory(tmp_path, std_params):
    from themeflow import IntegratorConfig, integrate_flow

    traj = integrate_flow(std_params, IntegratorConfig(step=0.05), 25.0)
    curve = FlowCurve.from_params(std_params)
    grid = np.linspace(0.05, 25.0, 300)
    save_figure(flow_figure(curve, grid=grid, trajectory=traj), tmp_path / "cmp.png")
    assert (tmp_path / "cmp.png").stat().st_size > 0
