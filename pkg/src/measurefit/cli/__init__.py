"""Command-line front end.

::

    measurefit stationary CONFIG       stationary density      -> stationary.csv
    measurefit evolve CONFIG           Fokker-Planck snapshots -> evolution.csv
    measurefit fit-stationary CONFIG   fit to a stationary observation
    measurefit fit-time CONFIG         fit to density snapshots
    measurefit fit CONFIG              fit, dispatching on [fit] mode
    measurefit drift-recover CONFIG    drift reproducing the observation -> drift.csv
    measurefit hellinger A.csv B.csv   print the Hellinger distance

Fits write ``fit_report.txt`` (``key = value`` lines, also echoed to stdout)
and ``scan_trace.csv``.  Exit status: 0 success, 1 usage or input error,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path

from .. import csvio
from ..density import GridDensity, TailMassWarning, hellinger, normalize, resample
from ..errors import InputError, MeasureFitError, NumericalError
from ..estimator import Observation, fit_stationary, fit_time, recover_drift
from ..expr import evaluate
from ..fokker_planck import FpSettings, solve
from ..sde import ScalarFunctionSpec, SdeFamily, SdeModel
from ..stationary import StationarySpec, stationary_density
from .config import RunConfig, parse_config

__all__ = ["main", "run", "build_family", "build_observation", "COMMANDS"]

log = logging.getLogger("measurefit")

COMMANDS = ("stationary", "evolve", "fit-stationary", "fit-time", "fit", "drift-recover")
EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_jobs():
    env = os.environ.get("MEASUREFIT_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring MEASUREFIT_JOBS=%r", env)
    return os.cpu_count() or 1


@contextmanager
def _mapper(jobs):
    if jobs <= 1:
        yield map
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield pool.map


# --------------------------------------------------------------------------
# building library objects from a config

def build_family(cfg: RunConfig) -> SdeFamily:
    m = cfg.model
    if m.parameter is None or m.range is None:
        raise InputError(f"{cfg.where('model')}: fitting needs 'parameter' and 'range'")
    return SdeFamily(m.drift, m.diffusion, m.parameter, m.range, cfg.constants, cfg.grid)


def build_model(cfg: RunConfig) -> SdeModel:
    m = cfg.model
    bindings = dict(cfg.constants)
    if m.parameter is not None:
        if m.value is None:
            raise InputError(f"{cfg.where('model')}: set 'value' for parameter {m.parameter!r}")
        bindings[m.parameter] = m.value
    return SdeModel(ScalarFunctionSpec(m.drift, bindings), ScalarFunctionSpec(m.diffusion, bindings))


def build_observation(cfg: RunConfig) -> Observation:
    o = cfg.observation
    if o is None:
        raise InputError(f"{cfg.path}: this command needs an [observation] section")
    grid = cfg.grid
    if o.expression is not None:
        x = grid.nodes
        if o.kind == "stationary":
            values = evaluate(o.expression, x, cfg.constants)
            return Observation.stationary(_observed(grid, values, cfg), str(o.expression))
        dens = [_observed(grid, evaluate(o.expression, x, {**cfg.constants, "t": t}), cfg)
                for t in o.times]
        return Observation.time_dependent(o.times, dens, str(o.expression))
    if o.kind == "stationary":
        return Observation.stationary(o.data, str(o.csv))
    times, densities = o.data
    by_time = dict(zip(times, densities))
    chosen = []
    for t in o.times:
        match = [s for s in by_time if abs(s - t) <= 1e-9 * max(1.0, abs(t))]
        if not match:
            raise InputError(f"{cfg.where('observation', 'times')}: t={t:g} not in {o.csv}")
        chosen.append(by_time[match[0]])
    return Observation.time_dependent(o.times, chosen, str(o.csv))


def _observed(grid, values, cfg):
    try:
        return normalize(GridDensity(grid, values))
    except MeasureFitError as exc:
        raise InputError(f"{cfg.where('observation', 'expression')}: {exc}") from None


def _settings(cfg: RunConfig) -> FpSettings:
    s = cfg.solver
    return FpSettings(grid=cfg.grid, x0=s.x0, dt=s.dt, dt_late=s.dt_late, t_switch=s.t_switch)


# --------------------------------------------------------------------------
# commands

def _out(cfg, name):
    cfg.output.directory.mkdir(parents=True, exist_ok=True)
    return cfg.output.directory / name


def _cmd_stationary(cfg, jobs):
    p = stationary_density(StationarySpec(build_model(cfg), cfg.grid))
    path = _out(cfg, "stationary.csv")
    csvio.write_density_csv(path, p)
    print(path)


def _cmd_evolve(cfg, jobs):
    times = cfg.solver.times or (cfg.observation.times if cfg.observation else None)
    if not times:
        raise InputError(f"{cfg.path}: evolve needs [solver] times")
    sol = solve(_settings(cfg).problem(build_model(cfg), times))
    path = _out(cfg, "evolution.csv")
    csvio.write_time_csv(path, sol.times, sol.densities)
    print(path)


def _write_fit(cfg, result):
    report = result.report()
    _out(cfg, "fit_report.txt").write_text(report)
    csvio.write_trace_csv(_out(cfg, "scan_trace.csv"), result.scan_trace)
    sys.stdout.write(report)


def _cmd_fit_stationary(cfg, jobs):
    family = build_family(cfg)
    obs = build_observation(cfg)
    if obs.kind != "stationary":
        raise InputError(f"{cfg.where('observation')}: fit-stationary needs a stationary observation")
    with _mapper(jobs) as map_fn:
        result = fit_stationary(family, obs, cfg.grid, cfg.fit.scan_step, map_fn)
    _write_fit(cfg, result)
    if cfg.output.emit_plots:
        csvio.write_density_csv(_out(cfg, "observation.csv"), obs.on_grid(cfg.grid).density)
        model = family.instantiate(result.theta_hat, cfg.grid)
        csvio.write_density_csv(_out(cfg, "fitted_density.csv"),
                                stationary_density(StationarySpec(model, cfg.grid)))


def _cmd_fit_time(cfg, jobs):
    family = build_family(cfg)
    obs = build_observation(cfg)
    if obs.kind != "time_dependent":
        raise InputError(f"{cfg.where('observation')}: fit-time needs a time-dependent observation")
    settings = _settings(cfg)
    with _mapper(jobs) as map_fn:
        result = fit_time(family, obs, settings, cfg.fit.scan_step, map_fn)
    _write_fit(cfg, result)
    if cfg.output.emit_plots:
        on_grid = obs.on_grid(cfg.grid)
        csvio.write_time_csv(_out(cfg, "observation.csv"), on_grid.times, on_grid.densities)
        sol = solve(settings.problem(family.instantiate(result.theta_hat, cfg.grid), obs.times))
        csvio.write_time_csv(_out(cfg, "fitted_evolution.csv"), sol.times, sol.densities)


def _cmd_fit(cfg, jobs):
    mode = cfg.fit.mode
    if mode is None:
        mode = "time" if cfg.observation and cfg.observation.kind == "time_dependent" else "stationary"
    (_cmd_fit_time if mode == "time" else _cmd_fit_stationary)(cfg, jobs)


def _cmd_drift(cfg, jobs):
    obs = build_observation(cfg)
    if obs.kind != "stationary":
        raise InputError(f"{cfg.where('observation')}: drift-recover needs a stationary observation")
    diffusion = build_model(cfg).diffusion if cfg.model.parameter else \
        ScalarFunctionSpec(cfg.model.diffusion, cfg.constants)
    b = recover_drift(obs, diffusion, cfg.grid)
    path = _out(cfg, "drift.csv")
    csvio.write_xy_csv(path, cfg.grid.nodes, b)
    print(path)


_DISPATCH = {
    "stationary": _cmd_stationary,
    "evolve": _cmd_evolve,
    "fit-stationary": _cmd_fit_stationary,
    "fit-time": _cmd_fit_time,
    "fit": _cmd_fit,
    "drift-recover": _cmd_drift,
}


def _report_tail_warnings(caught):
    tails = [w for w in caught if issubclass(w.category, TailMassWarning)]
    for w in caught:
        if w not in tails:
            warnings.showwarning(w.message, w.category, w.filename, w.lineno)
    if tails:
        extra = f" (and {len(tails) - 1} similar)" if len(tails) > 1 else ""
        print(f"warning: {tails[0].message}{extra}", file=sys.stderr)


def run(cmd: str, cfg: RunConfig, jobs: int = 1) -> int:
    """Execute one subcommand; returns the process exit status."""
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                _DISPATCH[cmd](cfg, jobs)
            finally:
                _report_tail_warnings(caught)
    except NumericalError as exc:
        print(f"error: {exc} (config {cfg.path})", file=sys.stderr)
        return EXIT_NUMERICAL
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def _hellinger(a, b) -> int:
    try:
        p = normalize(csvio.read_density_csv(a))
        q = normalize(csvio.read_density_csv(b))
        if q.grid != p.grid:
            q = resample(q, p.grid)
        print(csvio.fmt(hellinger(p, q)))
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main(argv=None) -> int:
    parser = _Parser(prog="measurefit",
                     description="Fit scalar SDEs to observed densities by Hellinger matching.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", type=Path)
        p.add_argument("--jobs", type=int, default=None,
                       help="parallel scan workers (default: $MEASUREFIT_JOBS or CPU count)")
        p.add_argument("--out", type=Path, default=None, help="override [output] directory")
    h = sub.add_parser("hellinger")
    h.add_argument("first", type=Path)
    h.add_argument("second", type=Path)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.command == "hellinger":
        return _hellinger(args.first, args.second)
    try:
        cfg = parse_config(args.config)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out is not None:
        cfg.output.directory = args.out
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    return run(args.command, cfg, max(1, jobs))
