#
# Copyright (2025) The tunnel-tx authors
#
# This program is free software: you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License,
# or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.
# See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program. If not, see <https://www.gnu.org/licenses/>.
#

import os, sys, argparse, json
import logging, time
from dataclasses import dataclass, field

import numpy as np

from units import TunnelingError, DomainError, light_crossing_time
from barrier import BarrierSpec, transmission_amplitude
from poles import enumerate_poles, verify_pole_count
from shutter import ShutterSolution, check_position, psi_free, snapshot
from transients import (WidthRule, DEFAULT_WIDTH_RULE, AnalysisError, density_series, transient_summary,
                        opacity_scan, scan_deviation)
from clocks import clock_table, rank_against, ClockUndefinedError
from oracle import DEFAULT_DX, DEFAULT_DT, GridSpec, compare_with_analytic

VERSION = "0.1.0"
EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3
COMMANDS = ("poles", "density", "snapshot", "clocks", "scan", "validate")

LOG_COLORS = {
    logging.DEBUG: "\033[36m",      # Cyan
    logging.INFO: "\033[32m",       # Green
    logging.WARNING: "\033[33m",    # Yellow
    logging.ERROR: "\033[31m"       # Red
}
RESET_COLOR = "\033[0m"

class ConfigError(Exception):
    pass

class RelativeTimeFormatter(logging.Formatter):
    def __init__(self, fmt=None, t0=0):
        super().__init__(fmt)
        self.t0 = t0
    def formatTime(self, record, datefmt=None):
        elapsed = record.created - self.t0
        return f"{elapsed:07.3f}s"

class ColorFormatter(RelativeTimeFormatter):
    def __init__(self, fmt, t0=0, use_color=True):
        super().__init__(fmt, t0)
        self.use_color = use_color

    def format(self, record):
        message = super().format(record)
        if self.use_color and record.levelno in LOG_COLORS:
            color = LOG_COLORS[record.levelno]
            return f"{color}{message}{RESET_COLOR}"
        return message

def setup_logging(args):
    log = logging.getLogger("tunnel-tx")
    log.setLevel(logging.DEBUG)
    log.handlers.clear()
    log.propagate = False
    level = getattr(logging, args.log_level.upper(), logging.INFO)
    fmt = '%(asctime)s [%(levelname)s] %(message)s'

    if args.log:
        # Log to file only
        handler = logging.FileHandler(args.log)
        handler.setFormatter(RelativeTimeFormatter(fmt, t0=time.time()))
    else:
        # stdout carries the one-line summary
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(ColorFormatter(fmt, t0=time.time(), use_color=sys.stderr.isatty() and args.no_color))
    handler.setLevel(level)
    log.addHandler(handler)
    return log

def thread_cap():
    value = os.environ.get("TTX_THREADS")
    if value is None:
        return None
    try:
        return max(1, int(value))
    except ValueError:
        raise ConfigError(f"TTX_THREADS must be an integer, got {value!r}")

def parse_args(argv):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="Flat 'key = value' file with flag defaults")
    common.add_argument("--v0", type=float, default=0.711, help="Barrier height (eV, default 0.711)")
    common.add_argument("--length", type=float, default=10.0, help="Barrier width (nm, default 10)")
    common.add_argument("--mass", type=float, default=0.067, help="Effective mass / electron mass (default 0.067)")
    common.add_argument("--energy", type=float, default=0.1422, help="Incident energy (eV, default 0.1422)")
    common.add_argument("--truncation", type=int, default=100, help="Poles per family in the resonance sums (default 100)")
    common.add_argument("--t-unit", choices=["fs", "tf"], default="fs", help="Unit of time flags: fs or free passage times")
    common.add_argument("--format", choices=["csv", "json"], default="csv", help="Output format")
    common.add_argument("--output", metavar="PATH", default=None, help="Output file (default <command>.<format>)")
    common.add_argument("--workers", type=int, default=None, help="Worker threads (capped by TTX_THREADS)")
    common.add_argument("--no-color", action="store_false", help="Remove ANSI colors in terminal output")
    common.add_argument("--log", help="Path to log file")
    common.add_argument("--log-level", default="INFO", help="Logging level: DEBUG, INFO, WARNING, ERROR")

    parser = argparse.ArgumentParser(prog="tunnel-tx", description="Quantum shutter tunneling transients")
    parser.add_argument("--version", action="version", version=f"tunnel-tx {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("poles", parents=[common], help="S-matrix poles of the barrier")
    p.add_argument("--count", type=int, default=10, help="Number of fourth-quadrant poles (default 10)")
    p.add_argument("--no-certify", action="store_true", help="Skip the winding-number certificate")

    p = sub.add_parser("density", parents=[common], help="Normalized density |psi(x,t)|^2/|T|^2 versus time")
    p.add_argument("--x", type=float, default=None, help="Position (nm, default L)")
    p.add_argument("--t-max", type=float, default=None, help="End of the time grid (default 20 tau_f)")
    p.add_argument("--t-steps", type=int, default=4000, help="Number of time points (default 4000)")
    p.add_argument("--width-rule", choices=[r.value for r in WidthRule], default=DEFAULT_WIDTH_RULE.value)

    p = sub.add_parser("snapshot", parents=[common], help="Normalized density versus position at fixed time")
    p.add_argument("--tau", type=float, default=None, help="Time (default 2 tau_f)")
    p.add_argument("--x-min", type=float, default=None, help="First position (nm, default L)")
    p.add_argument("--x-max", type=float, default=None, help="Last position (nm, default L+40)")
    p.add_argument("--x-steps", type=int, default=400, help="Number of positions (default 400)")

    p = sub.add_parser("clocks", parents=[common], help="Tunneling times of the stationary beam")
    p.add_argument("--tau-p", type=float, default=None, help="Peak time to rank the clocks against")

    p = sub.add_parser("scan", parents=[common], help="Peak time and Buttiker time versus opacity")
    p.add_argument("--vary", choices=["length", "height"], default="length")
    p.add_argument("--alpha-min", type=float, default=2.0)
    p.add_argument("--alpha-max", type=float, default=10.0)
    p.add_argument("--points", type=int, default=9)
    p.add_argument("--t-steps", type=int, default=800, help="Time points per scan point (default 800)")
    p.add_argument("--width-rule", choices=[r.value for r in WidthRule], default=DEFAULT_WIDTH_RULE.value)

    p = sub.add_parser("validate", parents=[common], help="Compare with the Crank-Nicolson reference at x=L")
    p.add_argument("--t-lo", type=float, default=None, help="Window start (default 0.5 tau_f)")
    p.add_argument("--t-hi", type=float, default=None, help="Window end (default 3 tau_f)")
    p.add_argument("--x-left", type=float, default=None, help="Left wall (nm, default: beyond the reach of the fastest grid wave)")
    p.add_argument("--x-right", type=float, default=None, help="Right wall (nm, default: as for --x-left)")
    p.add_argument("--dx", type=float, default=None, help="Grid spacing (nm, default 0.02)")
    p.add_argument("--dt", type=float, default=None, help="Time step (fs, default 0.0025)")

    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        apply_config(sub.choices.values(), read_config(known.config))

    return parser.parse_args(argv)

def read_config(path):
    values = {}
    try:
        with open(path) as f:
            lines = f.readlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values

def apply_config(subparsers, values):
    # string defaults go through each action's type conversion at parse time
    used = set()
    for sp in subparsers:
        actions = {a.dest: a for a in sp._actions}
        defaults = {}
        for key, value in values.items():
            if key not in actions or key == "config":
                continue
            action = actions[key]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                flag = value.lower() in ("1", "true", "yes", "on")
                # --no-color stores False when given
                value = (not flag) if isinstance(action, argparse._StoreFalseAction) else flag
            defaults[key] = value
            used.add(key)
        sp.set_defaults(**defaults)
    unknown = sorted(set(values) - used)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

@dataclass
class RunConfig:
    command: str
    spec: BarrierSpec
    truncation: int
    fmt: str
    output: str
    workers: int
    options: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, args):
        spec = BarrierSpec(V0=args.v0, L=args.length, mass_ratio=args.mass, E=args.energy)
        if args.truncation < 1:
            raise DomainError(f"truncation must be >= 1, got {args.truncation}")
        cap = thread_cap()
        workers = args.workers if args.workers is not None else (cap or 1)
        if cap is not None:
            workers = min(workers, cap)
        output = args.output or f"{args.command}.{args.format}"
        skip = {"command", "v0", "length", "mass", "energy", "truncation", "format", "output", "workers",
                "config", "log", "log_level", "no_color"}
        options = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
        return cls(args.command, spec, args.truncation, args.format, output, max(1, workers), options)

    def time(self, value, default_tf):
        """A time flag in fs, honoring --t-unit; None selects default_tf free passage times."""
        if value is None:
            return default_tf * self.spec.tau_f
        if self.options["t_unit"] == "tf":
            return value * self.spec.tau_f
        return value

    def params(self):
        out = {"command": self.command, "V0": self.spec.V0, "L": self.spec.L, "mass_ratio": self.spec.mass_ratio,
               "E": self.spec.E, "truncation": self.truncation, "format": self.fmt, "output": self.output}
        out.update(self.options)
        return out

def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return f"{int(value):d}"
    return f"{float(value):.12e}"

def _json_cell(value):
    if isinstance(value, (bool, np.bool_, int, np.integer)):
        return int(value)
    return float(f"{float(value):.12e}")

def write_table(config, meta, columns, rows):
    if config.fmt == "json":
        doc = {"meta": meta, "params": config.params(), "columns": list(columns),
               "rows": [[_json_cell(v) for v in row] for row in rows]}
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    else:
        lines = [f"# {key}: {meta[key]}" for key in sorted(meta)]
        params = config.params()
        lines += [f"# param.{key}: {params[key]}" for key in sorted(params)]
        lines.append(",".join(columns))
        lines += [",".join(_cell(v) for v in row) for row in rows]
        text = "\n".join(lines) + "\n"
    with open(config.output, "w", newline="\n") as f:
        f.write(text)

def base_meta(config, width_rule=None):
    spec = config.spec
    meta = {"tool": "tunnel-tx", "version": VERSION, "command": config.command, "truncation": config.truncation,
            "width_rule": width_rule or DEFAULT_WIDTH_RULE.value, "k": spec.k, "k0": spec.k0, "alpha": spec.alpha,
            "tau_f": spec.tau_f, "tau_0": light_crossing_time(spec.L)}
    meta["T2"] = abs(complex(transmission_amplitude(spec, spec.k))) ** 2
    return meta


def cmd_poles(config, log):
    count = config.options["count"]
    poles = enumerate_poles(config.spec, count, workers=config.workers, logger=log)
    meta = base_meta(config)
    summary = f"{len(poles)} poles, max residual {max(p.residual for p in poles):.2e}"
    status = EXIT_OK
    if not config.options["no_certify"]:
        cert = verify_pole_count(config.spec, poles, logger=log)
        meta["winding_number"] = cert.count
        summary += f", winding number {cert.count}"
        if not cert.ok:
            log.error(f"NUMERICAL ERROR (PoleEnumerationError) in poles: winding number {cert.count} != {len(poles)}")
            status = EXIT_NUMERICAL
    rows = [(p.index, p.k.real, p.k.imag, p.q.real, p.q.imag, p.residual) for p in poles]
    write_table(config, meta, ("n", "re_k", "im_k", "re_q", "im_q", "residual"), rows)
    return status, summary

def cmd_density(config, log):
    spec = config.spec
    opts = config.options
    x = spec.L if opts["x"] is None else opts["x"]
    t_max = config.time(opts["t_max"], 20.0)
    check_position(spec, x)
    sol = ShutterSolution.build(spec, config.truncation, workers=config.workers, logger=log)
    series = density_series(sol, x, t_max, opts["t_steps"], workers=config.workers, logger=log)
    free = np.abs(psi_free(spec.k, spec.mass_ratio, x, series.taus)) ** 2

    meta = base_meta(config, opts["width_rule"])
    meta["x"] = x
    try:
        summary = transient_summary(series, opts["width_rule"])
        meta.update(tau_p=summary.tau_p, delta_tau=summary.delta_tau, peak_value=summary.peak_value)
        line = f"tau_p={summary.tau_p:.4f} fs ({summary.tau_p / spec.tau_f:.3f} tau_f), delta_tau={summary.delta_tau:.4f} fs ({opts['width_rule']})"
    except AnalysisError as e:
        log.warning(f"no transient summary at x={x} nm: {e}")
        line = f"no transient summary ({type(e).__name__})"

    rows = [(t, t / spec.tau_f, v, f, c) for t, v, f, c in zip(series.taus, series.values, free, series.causal)]
    write_table(config, meta, ("tau", "tau_over_tf", "density", "free_density", "causal"), rows)
    return EXIT_OK, line

def cmd_snapshot(config, log):
    spec = config.spec
    opts = config.options
    tau = config.time(opts["tau"], 2.0)
    x_min = spec.L if opts["x_min"] is None else opts["x_min"]
    x_max = spec.L + 40.0 if opts["x_max"] is None else opts["x_max"]
    if opts["x_steps"] < 2 or not x_max > x_min:
        raise DomainError(f"snapshot needs x_max > x_min and at least 2 positions")
    check_position(spec, x_min)
    xs = np.linspace(x_min, x_max, opts["x_steps"])
    sol = ShutterSolution.build(spec, config.truncation, workers=config.workers, logger=log)
    values, stationary = snapshot(sol, tau, xs, workers=config.workers)

    meta = base_meta(config)
    meta["tau"] = tau
    i = int(np.argmax(values))
    write_table(config, meta, ("x", "density", "stationary"), list(zip(xs, values, stationary)))
    return EXIT_OK, f"tau={tau:.4f} fs: maximum {values[i]:.6g} at x={xs[i]:.4f} nm"

def cmd_clocks(config, log):
    meta = base_meta(config)
    status = EXIT_OK
    try:
        table = clock_table(config.spec, logger=log)
    except ClockUndefinedError as e:
        log.error(f"NUMERICAL ERROR (ClockUndefinedError) in clocks: {e}")
        table, status = e.table, EXIT_NUMERICAL
    names = ("tau_f", "tau_LM", "tau_BL", "tau_B", "tau_D", "tau_y", "tau_z")
    line = ", ".join(f"{n}={getattr(table, n):.4f} fs" for n in names[:5])
    if config.options["tau_p"] is not None:
        tau_p = config.time(config.options["tau_p"], 0.0)
        ranking = rank_against(table, tau_p)
        meta["tau_p"] = tau_p
        meta["ranking"] = ",".join(name for name, _ in ranking)
        line += f"; closest to tau_p: {ranking[0][0]}"
    write_table(config, meta, names, [tuple(getattr(table, n) for n in names)])
    return status, line

def cmd_scan(config, log):
    opts = config.options
    points = opacity_scan(config.spec, opts["vary"], (opts["alpha_min"], opts["alpha_max"]), opts["points"],
                          truncation=config.truncation, steps=opts["t_steps"], rule=opts["width_rule"],
                          workers=config.workers, logger=log)
    meta = base_meta(config, opts["width_rule"])
    meta["failed_points"] = sum(1 for p in points if not p.ok)
    rows = [(p.alpha, p.V0, p.L, p.tau_p, p.delta_tau, p.tau_B, p.peak_value, p.ok) for p in points]
    write_table(config, meta, ("alpha", "V0", "L", "tau_p", "delta_tau", "tau_B", "peak_value", "ok"), rows)
    if meta["failed_points"] == len(points):
        raise AnalysisError("every scan point failed")
    deviation = scan_deviation(points)
    return EXIT_OK, f"{len(points) - meta['failed_points']}/{len(points)} points, max |tau_B - tau_p|/tau_p = {deviation:.3f}"

def cmd_validate(config, log):
    spec = config.spec
    opts = config.options
    window = (config.time(opts["t_lo"], 0.5), config.time(opts["t_hi"], 3.0))
    dx = DEFAULT_DX if opts["dx"] is None else opts["dx"]
    dt = DEFAULT_DT if opts["dt"] is None else opts["dt"]
    default = GridSpec.default(spec, window[1], dx=dx, dt=dt)
    grid = GridSpec(default.x_left if opts["x_left"] is None else opts["x_left"],
                    default.x_right if opts["x_right"] is None else opts["x_right"], dx, dt)
    sol = ShutterSolution.build(spec, config.truncation, workers=config.workers, logger=log)
    report = compare_with_analytic(sol, grid, window, logger=log)

    meta = base_meta(config)
    meta.update(linf=report.linf, l2=report.l2, threshold=report.threshold, passed=report.passed)
    write_table(config, meta, ("tau", "analytic", "reference"), list(zip(report.taus, report.analytic, report.reference)))
    line = f"L_inf={report.linf:.3e}, L2={report.l2:.3e}: {'PASS' if report.passed else 'FAIL'}"
    if not report.passed:
        log.error(f"NUMERICAL ERROR (validation) in validate: L_inf {report.linf:.3e} above {report.threshold:g}")
        return EXIT_NUMERICAL, line
    return EXIT_OK, line

HANDLERS = {"poles": cmd_poles, "density": cmd_density, "snapshot": cmd_snapshot,
            "clocks": cmd_clocks, "scan": cmd_scan, "validate": cmd_validate}

def run(argv):
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except ConfigError as e:
        print(f"tunnel-tx: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    log = setup_logging(args)
    try:
        config = RunConfig.from_args(args)
    except (DomainError, ConfigError) as e:
        log.error(f"ARGUMENT ERROR ({type(e).__name__}): {e}")
        return EXIT_USAGE

    log.info(f"{config.command}: {config.spec.describe()}, truncation {config.truncation}, {config.workers} worker(s)")
    try:
        status, line = HANDLERS[config.command](config, log)
    except DomainError as e:
        log.error(f"ARGUMENT ERROR ({type(e).__name__}) in {config.command}: {e}")
        return EXIT_USAGE
    except TunnelingError as e:
        log.error(f"NUMERICAL ERROR ({type(e).__name__}) in {config.command} [{config.spec.describe()}]: {e}")
        return EXIT_NUMERICAL

    print(line)
    return status
