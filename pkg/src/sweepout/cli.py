"""``sweepout <subcommand> [--flag value]...``

Every run writes a canonical JSON report; ``--csv`` and ``--svg`` add the
rows as CSV and a diagnostic plot.  ``--check metric:lo..hi`` turns a
summary value into exit code 3 when it falls outside ``[lo, hi]``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from .experiments import EXPERIMENTS
from .report import ConfigError, ExperimentConfig, emit_report, rows_csv
from .svg import Axes, plot_svg

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 2, 3
SEED_ENV = "SWEEPOUT_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="sweepout", description=__doc__.split("\n")[0])
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for exp in EXPERIMENTS.values():
        sp = sub.add_parser(exp.name, help=exp.help)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--config", default=None, help="JSON config file; flags override it")
        sp.add_argument("--out", default=None, help="report path (default <command>.json, - for stdout)")
        sp.add_argument("--csv", default=None, help="write rows as CSV")
        sp.add_argument("--svg", default=None, help="write a plot of the rows")
        sp.add_argument("--check", action="append", default=[], metavar="METRIC:LO..HI")
        sp.add_argument("--timing", action="store_true", help="record wall time in the report")
        for p in exp.params:
            opt = "--" + p.name.replace("_", "-")
            if p.flag:
                sp.add_argument(opt, dest=p.name, action="store_const", const=True, default=None, help=p.help)
            else:
                sp.add_argument(opt, dest=p.name, default=None, help=p.help)
        if exp.name == "report":
            sp.add_argument("files", nargs="*", help="report files to aggregate")
    return top


def parse_check(text):
    name, sep, rng = text.partition(":")
    lo, sep2, hi = rng.partition("..")
    if not sep or not sep2 or not name:
        raise ConfigError(f"bad --check {text!r}; expected metric:lo..hi")
    return name, float(lo) if lo else float("-inf"), float(hi) if hi else float("inf")


def _config(args, exp) -> ExperimentConfig:
    given, seed, outputs = {}, None, {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as err:
            raise ConfigError(f"{args.config}: {err}") from err
        if "params" in data or "command" in data:
            file_cfg = ExperimentConfig.loads(json.dumps(data), {p.name for p in exp.params})
            if file_cfg.command != exp.name:
                raise ConfigError(f"config is for {file_cfg.command!r}, not {exp.name!r}")
            given, seed, outputs = dict(file_cfg.params), file_cfg.seed, dict(file_cfg.outputs)
        else:
            bad = set(data) - {p.name for p in exp.params}
            if bad:
                raise ConfigError(f"unknown parameters: {sorted(bad)}")
            given = dict(data)
    for p in exp.params:
        v = getattr(args, p.name)
        if v is not None:
            given[p.name] = v
    if exp.name == "report" and args.files:
        given["inputs"] = list(args.files)
    if args.seed is not None:
        seed = args.seed
    elif seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            seed = int(env) if env not in (None, "") else 0
        except ValueError as err:
            raise ConfigError(f"{SEED_ENV} must be an integer") from err
    params = exp.resolve(given)
    if exp.name == "report" and not params["inputs"]:
        raise ConfigError("report needs at least one input file")
    outputs["json"] = args.out or outputs.get("json") or f"{exp.name}.json"
    for key in ("csv", "svg"):
        if getattr(args, key):
            outputs[key] = getattr(args, key)
    return ExperimentConfig(exp.name, params, seed, outputs)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    exp = EXPERIMENTS[args.command]
    try:
        checks = [parse_check(c) for c in args.check]
        cfg = _config(args, exp)
        if "svg" in cfg.outputs and exp.plot is None:
            raise ConfigError(f"{exp.name} has no plot")
        t0 = time.perf_counter()
        rep = exp.run(cfg)
        if args.timing:
            rep.wall_time = time.perf_counter() - t0
        for name, _, _ in checks:
            if name not in rep.summary:
                raise ConfigError(f"--check: unknown metric {name!r}; have {sorted(rep.summary)}")
    except ConfigError as err:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"sweepout {args.command}: error: {err}\n")
        return EXIT_USAGE
    if not rep.rows:
        sys.stderr.write(f"sweepout {args.command}: no rows produced\n")
        return 1
    emit_report(rep, cfg.outputs["json"])
    if "csv" in cfg.outputs:
        Path(cfg.outputs["csv"]).write_text(rows_csv(rep.rows), encoding="utf-8")
    if "svg" in cfg.outputs:
        x, y, lx, ly = exp.plot
        plot_svg(rep.rows, Axes(x, y, lx, ly), cfg.outputs["svg"])
    status = EXIT_OK
    for name, lo, hi in checks:
        v = rep.metric(name)
        v = float(v) if v is not None else float("nan")
        ok = lo <= v <= hi
        sys.stderr.write(f"check {name} = {v:.6g} in [{lo:g}, {hi:g}]: {'pass' if ok else 'FAIL'}\n")
        if not ok:
            status = EXIT_CHECK
    return status


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
