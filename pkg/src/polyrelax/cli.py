"""Command-line front end.

    polyrelax envelope    --density ksd --delta 0.1375 --r 1.1 --query "0.2,0.1;0.1,0.3"
    polyrelax convergence --density double_well --delta 1 --delta 0.5 --r 2 --out dw.csv
    polyrelax sweep       --k 0.3333333333333333 --ell 0.125 --ell 0.109375
    polyrelax bench       --method svpc-lp --method pc-lp --delta 0.1375

Settings come from defaults, then ``--config FILE`` (JSON), then flags.
Exit status is 0 on success, 2 for configuration errors and 3 when the
computation itself fails.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .densities import REGISTRY, DensityParams, get_density
from .exceptions import PolyrelaxError
from .lattice import DEFAULT_CAP, LatticeSpec
from .pipeline import METHODS, PipelineConfig, convergence_study, default_method, run, sweep

COMMANDS = ("envelope", "convergence", "sweep", "bench")
PARAM_KEYS = ("mu", "kappa", "k", "ell")
F_HAT = [[0.2, 0.1], [0.1, 0.3]]

EXIT_CONFIG = 2
EXIT_PIPELINE = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str = "envelope"
    density: str = "ksd"
    d: int = 2
    params: dict = field(default_factory=dict)
    methods: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    radius: Optional[float] = None
    queries: list = field(default_factory=list)
    nus: list = field(default_factory=list)
    threshold: float = 1e-5
    k_grid: list = field(default_factory=list)
    ell_grid: list = field(default_factory=list)
    reps: int = 3
    cap: int = DEFAULT_CAP
    out: Optional[str] = None
    plot: Optional[str] = None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data).validated()

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def validated(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.density not in REGISTRY:
            raise ConfigError(f"unknown density {self.density!r}; choose from {sorted(REGISTRY)}")
        bad = set(self.params) - set(PARAM_KEYS)
        if bad:
            raise ConfigError(f"unknown density parameters: {', '.join(sorted(bad))}")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        try:
            self.d = int(self.d)
            self.params = {k: float(v) for k, v in self.params.items()}
            self.deltas = [float(x) for x in self.deltas]
            self.radius = None if self.radius is None else float(self.radius)
            self.threshold = float(self.threshold)
            self.k_grid = [float(x) for x in self.k_grid]
            self.ell_grid = [float(x) for x in self.ell_grid]
            self.reps = int(self.reps)
            self.cap = int(self.cap)
            self.queries = [[[float(v) for v in row] for row in q] for q in self.queries]
            self.nus = [[float(v) for v in nu] for nu in self.nus]
            self.density_params()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        for q in self.queries:
            if len(q) != self.d or any(len(row) != self.d for row in q):
                raise ConfigError(f"query matrices must be {self.d}x{self.d}")
        for nu in self.nus:
            if len(nu) != self.d:
                raise ConfigError(f"nu queries must have {self.d} entries")
        return self

    def density_params(self):
        return DensityParams(self.density, self.d, **self.params)

    def query_list(self):
        qs = [np.array(q) for q in self.queries] + [np.array(nu) for nu in self.nus]
        if not qs:
            qs = [np.array(F_HAT)] if self.d == 2 else [np.full(self.d, 0.3)]
        return qs

    def method_list(self):
        return self.methods or [default_method(self.d)]

    def delta_list(self):
        if self.deltas:
            return self.deltas
        return [0.09375] if self.command == "sweep" else [0.1375]

    def radius_value(self):
        if self.radius is not None:
            return self.radius
        return 6.0 if self.command == "sweep" else 1.1


def fmt(value):
    """Shortest round-trip decimal; empty for missing values."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


class RowWriter:
    """CSV writer that flushes after every row (LF line endings, UTF-8)."""

    def __init__(self, stream, header):
        self.stream = stream
        self.writer = csv.writer(stream, lineterminator="\n")
        self.writer.writerow(header)
        stream.flush()

    def row(self, *values):
        self.writer.writerow([fmt(v) for v in values])
        self.stream.flush()


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _exact_for(cfg):
    return get_density(cfg.density_params())[1]


def cmd_envelope(cfg: RunConfig, stream):
    w = RowWriter(stream, ["method", "d", "delta", "r", "N_lattice", "query_id", "value",
                           "exact", "abs_error", "wall_seconds"])
    exact_fn = _exact_for(cfg)
    params = cfg.density_params()
    queries = cfg.query_list()
    r = cfg.radius_value()
    for method in cfg.method_list():
        for delta in cfg.delta_list():
            res = run(PipelineConfig(method, params, LatticeSpec(cfg.d, delta, r), queries, cap=cfg.cap))
            for qid, (val, nu) in enumerate(zip(res.values, res.nus)):
                exact = float(exact_fn(nu)) if exact_fn is not None else None
                err = abs(val.value - exact) if exact is not None else None
                w.row(method, cfg.d, delta, r, res.lattice_count, qid, val.value, exact, err, res.wall_seconds)


def gnuplot_script(csv_path, stem):
    return "\n".join([
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set logscale xy",
        "set xlabel 'delta'",
        "set terminal pngcairo size 800,600",
        f"set output '{stem}_error.png'",
        "set ylabel 'absolute error'",
        f"plot '{csv_path}' using 2:5 with linespoints title 'error'",
        f"set output '{stem}_time.png'",
        "set ylabel 'seconds'",
        f"plot '{csv_path}' using 2:6 with linespoints title 'wall time'",
        "",
    ])


def cmd_convergence(cfg: RunConfig, stream):
    if _exact_for(cfg) is None:
        raise ConfigError(f"density {cfg.density!r} has no known exact envelope")
    w = RowWriter(stream, ["method", "delta", "N_lattice", "value", "abs_error", "seconds", "slope"])
    query = cfg.query_list()[0]
    for method in cfg.method_list():
        table = convergence_study(cfg.density_params(), cfg.delta_list(), cfg.radius_value(), query,
                                  method=method, cap=cfg.cap)
        for row in table.rows:
            w.row(method, row.delta, row.n_lattice, row.value, row.abs_error, row.seconds, table.slope)
    plot = cfg.plot
    if plot is None and cfg.out not in (None, "-"):
        plot = str(Path(cfg.out).with_suffix(".gp"))
    if plot is not None:
        if cfg.out in (None, "-"):
            raise ConfigError("a plot script needs --out to point at the CSV file")
        stem = str(Path(cfg.out).with_suffix(""))
        Path(plot).write_text(gnuplot_script(cfg.out, stem), encoding="utf-8")


def cmd_sweep(cfg: RunConfig, stream):
    if cfg.density != "hencky":
        raise ConfigError("sweep runs the hencky density")
    base = cfg.density_params()
    k_grid = cfg.k_grid or [base.k]
    ell_grid = cfg.ell_grid or [base.ell]
    pairs = list(itertools.product(k_grid, ell_grid))
    spec = LatticeSpec(cfg.d, cfg.delta_list()[0], cfg.radius_value())
    w = RowWriter(stream, ["k", "ell", "max_gap", "is_polyconvex"])
    for (k, ell), (flag, gap) in zip(pairs, sweep(pairs, spec, cfg.threshold, mu=base.mu, kappa=base.kappa)):
        w.row(k, ell, gap, bool(flag))


def cmd_bench(cfg: RunConfig, stream):
    w = RowWriter(stream, ["method", "delta", "N_lattice", "wall_seconds"])
    params = cfg.density_params()
    queries = cfg.query_list()
    for method in cfg.method_list():
        for delta in cfg.delta_list():
            spec = LatticeSpec(cfg.d, delta, cfg.radius_value())
            times = []
            for _ in range(cfg.reps):
                t = time.perf_counter()
                res = run(PipelineConfig(method, params, spec, queries, cap=cfg.cap))
                times.append(time.perf_counter() - t)
            w.row(method, delta, res.lattice_count, float(np.mean(times)))


HANDLERS = {"envelope": cmd_envelope, "convergence": cmd_convergence,
            "sweep": cmd_sweep, "bench": cmd_bench}


def _parse_matrix(text):
    try:
        return [[float(v) for v in row.split(",")] for row in text.split(";")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad matrix {text!r}; use 'a,b;c,d'") from None


def _parse_vector(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad vector {text!r}; use 'a,b[,c]'") from None


def _parse_param(text):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"bad parameter {text!r}; use key=value")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {key!r} needs a number") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--density", choices=sorted(REGISTRY))
    common.add_argument("--param", action="append", type=_parse_param, metavar="KEY=VALUE",
                        help="density parameter (mu, kappa, k, ell); repeatable")
    common.add_argument("--d", type=int, choices=(2, 3))
    common.add_argument("--delta", action="append", type=float, help="lattice spacing; repeatable")
    common.add_argument("--r", type=float, dest="radius", help="bounding box radius")
    common.add_argument("--method", action="append", choices=METHODS, help="repeatable")
    common.add_argument("--query", action="append", type=_parse_matrix, help="matrix rows 'a,b;c,d'")
    common.add_argument("--nu", action="append", type=_parse_vector, help="signed singular values 'a,b[,c]'")
    common.add_argument("--threshold", type=float)
    common.add_argument("--k", action="append", type=float, dest="k_grid", help="sweep value of k; repeatable")
    common.add_argument("--ell", action="append", type=float, dest="ell_grid", help="sweep value of ell; repeatable")
    common.add_argument("--reps", type=int)
    common.add_argument("--cap", type=int, help="maximum lattice size")
    common.add_argument("--out", help="CSV path (default: stdout)")
    common.add_argument("--plot", help="gnuplot script path (convergence only)")

    parser = argparse.ArgumentParser(prog="polyrelax", description="Polyconvex envelopes of isotropic densities.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        data = RunConfig.from_json(text).to_dict()
    data["command"] = args.command
    flags = {
        "density": args.density, "d": args.d, "methods": args.method, "deltas": args.delta,
        "radius": args.radius, "queries": args.query, "nus": args.nu, "threshold": args.threshold,
        "k_grid": args.k_grid, "ell_grid": args.ell_grid, "reps": args.reps, "cap": args.cap,
        "out": args.out, "plot": args.plot,
    }
    for key, value in flags.items():
        if value is not None:
            data[key] = value
    if args.param:
        data["params"] = {**data.get("params", {}), **dict(args.param)}
    return RunConfig.from_dict(data)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"polyrelax: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stream, close = _open_out(cfg.out)
    try:
        HANDLERS[cfg.command](cfg, stream)
    except ConfigError as exc:
        print(f"polyrelax: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PolyrelaxError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"polyrelax: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    finally:
        if close:
            stream.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
