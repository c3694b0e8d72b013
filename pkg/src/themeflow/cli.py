"""Command-line surface: evaluate, fit, generate, and balance.

Subcommands write delimited plot data (CSV plus a JSON markers sidecar
where a curve is involved) and can render a PNG of the same report next
to it with --plot. Exit codes are stable for scripting: 0 success,
2 input or domain error, 3 I/O failure. THEMEFLOW_LOG=debug|info|...
controls verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .balance_sim import BalanceScenario, balance_integral, simulate
from .errors import DegenerateSeries, ThemeflowError
from .fitting import TimeSeries, classify_phases, fit
from .model_core import FlowCurve, TopicParams, flow_values
from .ode_engine import IntegratorConfig, integrate_flow
from .timeseries_io import GeneratorSpec, export_plot_data, generate, read_series, write_series

log = logging.getLogger("themeflow.cli")

_RK4_STEPS = 2000  # integrator resolution for --method rk4: step = lam/2000


def _load_json(value: str) -> dict:
    """Accept a path to a JSON file, or inline JSON starting with '{'."""
    if value.lstrip().startswith("{"):
        data = json.loads(value)
    else:
        with open(value) as fh:
            data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError("expected a JSON object")
    return data


def _parse_range(text: str, lam: float) -> np.ndarray:
    if text is None:
        step = 3.0 * lam / 600.0
        return np.linspace(step, 3.0 * lam, 600)
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"--range must be t0:t1:dt, got {text!r}")
    t0, t1, dt = (float(part) for part in parts)
    if t0 <= 0.0:
        raise ValueError(
            f"--range starts at t0 = {t0}, but the flow model is defined for t > 0 only"
        )
    if not (t1 > t0 and dt > 0):
        raise ValueError(f"--range needs t1 > t0 and dt > 0, got {text!r}")
    n_steps = int(np.floor((t1 - t0) / dt + 1e-9))
    grid = t0 + dt * np.arange(n_steps + 1)
    if grid[-1] < t1:
        grid = np.append(grid, t1)
    else:
        grid[-1] = t1
    return grid


def _png_path(out: str) -> str:
    stem, dot, _ = out.rpartition(".")
    return (stem if dot else out) + ".png"


def _cmd_eval(args) -> int:
    params = TopicParams.from_dict(_load_json(args.params))
    curve = FlowCurve.from_params(params)
    grid = _parse_range(args.range, params.lam)

    items = [("flow", curve)]
    trajectory = None
    if args.method == "rk4":
        horizon = max(float(grid[-1]), 1.5 * params.lam)
        cfg = IntegratorConfig(step=params.lam / _RK4_STEPS, method="rk4")
        trajectory = integrate_flow(params, cfg, horizon)
        mask = trajectory.times > 0
        closed = flow_values(params, trajectory.times[mask])
        deviation = float(
            np.max(np.abs(trajectory.values[mask] - closed) / np.abs(closed))
        )
        print(f"max relative deviation of rk4 from the closed form: {deviation:.3e}")
        items.append(("rk4", trajectory))

    paths = export_plot_data(items, args.out, grid=None if trajectory else grid)
    log.info("wrote %s", paths["csv"])
    if args.plot:
        from . import plotting

        path = plotting.save_figure(
            plotting.flow_figure(curve, grid=grid, trajectory=trajectory),
            _png_path(args.out),
        )
        log.info("wrote %s", path)
    return 0


def _cmd_fit(args) -> int:
    series = read_series(args.infile)
    result = fit(series)
    if not result.converged:
        raise DegenerateSeries(result.detail or "fit did not converge")
    print(result.to_json())
    segments = classify_phases(series, result)
    for seg in segments:
        print(
            f"phase {seg.label.value:<11} t = {seg.t_start:g} .. {seg.t_end:g} "
            f"({seg.stop - seg.start} samples)"
        )
    if args.out:
        gaps = np.diff(series.times)
        dt = float(np.median(gaps[gaps > 0]))
        intensity = TimeSeries(times=series.times, counts=series.counts / dt)
        curve = FlowCurve.from_params(result.params)
        paths = export_plot_data(
            [("observed_intensity", intensity), ("fitted", curve)], args.out
        )
        log.info("wrote %s", paths["csv"])
        if args.plot:
            from . import plotting

            path = plotting.save_figure(
                plotting.fit_figure(series, curve, segments), _png_path(args.out)
            )
            log.info("wrote %s", path)
    return 0


def _cmd_gen(args) -> int:
    data = _load_json(args.params)
    if args.seed is not None:
        data["seed"] = args.seed
    spec = GeneratorSpec.from_dict(data)
    series = generate(spec)
    write_series(series, args.out)
    log.info("wrote %s (%d samples)", args.out, len(series))
    if args.plot:
        from . import plotting

        curve = FlowCurve.from_params(spec.params)
        path = plotting.save_figure(
            plotting.fit_figure(series, curve), _png_path(args.out)
        )
        log.info("wrote %s", path)
    return 0


def _cmd_balance(args) -> int:
    scenario = BalanceScenario.from_dict(_load_json(args.params))
    trace = simulate(scenario)
    trace.write_csv(args.out)
    log.info("wrote %s", args.out)
    error = balance_integral(trace)
    print(f"balance integral relative error: {error:.3e}")
    if np.any(trace.saturated):
        times = trace.times[trace.saturated]
        print(
            f"contention on {int(np.count_nonzero(trace.saturated))} of "
            f"{trace.times.size} steps (t = {times[0]:g} .. {times[-1]:g}): "
            "demands scaled to capacity"
        )
    else:
        print("no contention: all demands fit the capacity")
    if args.plot:
        from . import plotting

        path = plotting.save_figure(plotting.balance_figure(trace), _png_path(args.out))
        log.info("wrote %s", path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="themeflow",
        description="Logistic rise/decay modeling of thematic publication flows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate a flow curve to plot data")
    p_eval.add_argument("--params", required=True, help="topic parameters (JSON file or inline)")
    p_eval.add_argument("--out", required=True, help="output CSV path")
    p_eval.add_argument("--range", help="time sweep as t0:t1:dt (default spans 3*lam)")
    p_eval.add_argument("--method", choices=("closed", "rk4"), default="closed")
    p_eval.add_argument("--plot", action="store_true", help="also render a PNG")
    p_eval.set_defaults(func=_cmd_eval)

    p_fit = sub.add_parser("fit", help="fit model parameters to a series CSV")
    p_fit.add_argument("--in", dest="infile", required=True, help="series CSV (time,count)")
    p_fit.add_argument("--out", help="overlay plot-data CSV path")
    p_fit.add_argument("--plot", action="store_true", help="also render a PNG")
    p_fit.set_defaults(func=_cmd_fit)

    p_gen = sub.add_parser("gen", help="generate a synthetic series CSV")
    p_gen.add_argument("--params", required=True, help="generator spec (JSON file or inline)")
    p_gen.add_argument("--out", required=True, help="output series CSV path")
    p_gen.add_argument("--seed", type=int, help="override the spec's seed")
    p_gen.add_argument("--plot", action="store_true", help="also render a PNG")
    p_gen.set_defaults(func=_cmd_gen)

    p_bal = sub.add_parser("balance", help="simulate a multi-topic balance scenario")
    p_bal.add_argument("--params", required=True, help="scenario JSON (file or inline)")
    p_bal.add_argument("--out", required=True, help="output trace CSV path")
    p_bal.add_argument("--plot", action="store_true", help="also render a PNG")
    p_bal.set_defaults(func=_cmd_balance)
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("THEMEFLOW_LOG", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ThemeflowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
