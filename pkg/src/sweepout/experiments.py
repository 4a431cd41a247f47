"""Experiment runners behind the command-line interface.

Each runner takes a resolved parameter map and a seed and returns a
:class:`~sweepout.report.Report`.  Parameter specs list the accepted keys,
their parsers and defaults; anything else is rejected.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .report import ConfigError, ExperimentConfig, Report

DETECTION_NOTE = ("coverage searches are numerical proxies; they do not decide whether a "
                  "family detects a cohomology class")


# ---------------------------------------------------------------------------
# parameter parsing
# ---------------------------------------------------------------------------

def parse_int_list(text) -> list:
    """``"4..1024"`` (factor-4 ladder), ``"4..1024:2"`` (factor 2), ``"1,2,3"`` or ``"5"``."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if isinstance(text, int):
        return [text]
    text = str(text).strip()
    if ".." in text:
        lo, rest = text.split("..", 1)
        hi, _, fac = rest.partition(":")
        lo, hi, fac = int(lo), int(hi), int(fac or 4)
        if lo < 1 or hi < lo or fac < 2:
            raise ConfigError(f"bad ladder {text!r}: need 1 <= lo <= hi and factor >= 2")
        out = [lo]
        while out[-1] * fac <= hi:
            out.append(out[-1] * fac)
        return out
    return [int(v) for v in text.split(",") if v.strip()]


def parse_float_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    return [float(v) for v in str(text).split(",") if v.strip()]


def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Param:
    name: str
    parse: Callable
    default: object
    help: str = ""
    flag: bool = False


@dataclass(frozen=True)
class Experiment:
    name: str
    params: tuple
    run: Callable
    plot: tuple | None = None  # (x key, y key, log x, log y)
    help: str = ""

    def resolve(self, given: dict) -> dict:
        names = {p.name for p in self.params}
        bad = set(given) - names
        if bad:
            raise ConfigError(f"unknown parameters for {self.name}: {sorted(bad)}")
        out = {}
        for p in self.params:
            raw = given.get(p.name, p.default)
            try:
                out[p.name] = p.parse(raw) if raw is not None else None
            except (TypeError, ValueError) as err:
                raise ConfigError(f"--{p.name.replace('_', '-')}: {err}") from err
        return out


def _need(cond, msg):
    if not cond:
        raise ConfigError(msg)


# ---------------------------------------------------------------------------
# runners
# ---------------------------------------------------------------------------

def run_scaling(cfg: ExperimentConfig) -> Report:
    from .bounds import BoundConfig, cup_lower_bound, scaling_fit
    from .squeeze import bend_and_cancel, multiscale_scaling

    prm = cfg.params
    construction = prm["construction"]
    rep = Report("scaling", cfg, [])
    if construction == "bent-lines":
        ps = prm["p"]
        _need(len(ps) >= 3, "scaling needs at least 3 values of p")
        bcfg = BoundConfig(2, 1)
        for p in ps:
            res = bend_and_cancel(p, eps=prm["eps"], seed=cfg.seed, budget=prm["budget"])
            low = cup_lower_bound(p, bcfg)
            rep.rows.append({"p": p, "s": res.s, "max_length": res.max_length, "lower": low,
                             "ratio": res.max_length / low, "free_length": res.free_length,
                             "skeleton_mass": res.skeleton_mass})
        slope, icept, r2 = scaling_fit([(r["p"], r["max_length"]) for r in rep.rows])
        rep.add_summary("slope", slope)
        rep.add_summary("intercept", icept)
        rep.add_summary("r2", r2)
        ratios = [r["ratio"] for r in rep.rows]
        rep.add_summary("ratio_spread", max(ratios) / min(ratios))
        rep.add_summary("lower_below_upper", all(r["lower"] <= r["max_length"] for r in rep.rows))
    elif construction == "multiscale":
        fit = multiscale_scaling(prm["qmax"], seed=cfg.seed, budget=prm["budget"], eps=prm["eps"])
        rep.rows = [{"q0": a, "q1": b, "volume": v} for a, b, v in fit.rows]
        rep.add_summary("growth_q0", fit.growth[0])
        rep.add_summary("growth_q1", fit.growth[1])
        rep.add_summary("ratio_q0", fit.growth[0] / 2 ** (2 / 3))
        rep.add_summary("ratio_q1", fit.growth[1] / 2 ** 0.5)
    else:
        raise ConfigError(f"unknown construction {construction!r}")
    return rep


def run_pyramid(cfg: ExperimentConfig) -> Report:
    from .pyramid import ball_polytope, build_pyramid, holder_exact, star_report, growth_rate

    prm = cfg.params
    n, i, k, P = prm["n"], prm["i"], prm["k"], prm["P"]
    try:
        tree = build_pyramid(n, i, k, P, phi_samples=prm["phi_samples"], seed=cfg.seed,
                             search=prm["search"], root=ball_polytope(n, prm["resolution"]))
    except ValueError as err:
        raise ConfigError(str(err)) from err
    rep = Report("pyramid", cfg, [])
    for p in range(P + 1):
        rads = [nd.rad for nd in tree.level(p)]
        rep.rows.append({"p": p, "T_level": 0.5 * math.fsum(r ** k for r in rads),
                         "sum_rad_inv": math.fsum(1 / r for r in rads),
                         "sum_rad_k": math.fsum(r ** k for r in rads), "min_rad": min(rads),
                         "holder_ok": holder_exact(rads, k)})
    rep.add_summary("T", tree.T)
    rep.add_summary("holder_ok", all(r["holder_ok"] for r in rep.rows))
    rep.add_summary("window_violations", sum(len(v) for v in tree.window_violations()))
    if P >= 2:
        lv = list(range(1, P + 1))
        rep.add_summary("T_growth", growth_rate([rep.rows[p]["T_level"] for p in lv]), lv)
        rep.add_summary("rad_inv_growth", growth_rate([rep.rows[p]["sum_rad_inv"] for p in lv]), lv)
    if prm["audit"] and n <= 3 and P >= 1:
        st = star_report(tree, prm["beta"], seed=cfg.seed)
        if st.additivity:
            rep.add_summary("additivity_max_abs", max(a["max_abs_diff"] for a in st.additivity))
        rep.add_summary("min_h", min(h["min_h"] for h in st.h_counts))
        if st.trigger:
            rep.add_summary("trigger_min_ratio", min(t["ratio"] for t in st.trigger))
    return rep


def run_flatdist(cfg: ExperimentConfig) -> Report:
    from .chains import (CubicalGrid, GridChain, all_relative_cycles, area_distance_codim1,
                         flat_norm_bruteforce)

    prm = cfg.params
    grid = CubicalGrid(prm["n"], prm["N"])
    try:
        cycles = all_relative_cycles(grid)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    zero = GridChain.empty(grid, grid.n - 1)
    rep = Report("flatdist", cfg, [])
    for j, z in enumerate(cycles):
        row = {"index": j, "faces": len(z), "area_distance": area_distance_codim1(z, zero)}
        if prm["bruteforce"]:
            row["flat_norm"] = flat_norm_bruteforce(z)
        rep.rows.append(row)
    rep.add_summary("cycles", len(cycles))
    if prm["bruteforce"]:
        diffs = [abs(r["flat_norm"] - r["area_distance"]) for r in rep.rows]
        rep.add_summary("max_abs_diff", max(diffs))
        rep.add_summary("all_equal", max(diffs) == 0)
    return rep


def run_crofton(cfg: ExperimentConfig) -> Report:
    from .algebraic import Poly2, crofton_length

    prm = cfg.params
    rep = Report("crofton", cfg, [])
    if prm["shape"] == "circle":
        r = prm["radius"]
        _need(0 < r < 1, "circle radius must lie in (0, 1)")
        est, err = crofton_length(Poly2.circle(r), prm["lines"], cfg.seed)
        rep.rows.append({"shape": "circle", "radius": r, "estimate": est, "stderr": err,
                         "exact": 2 * math.pi * r})
        rep.add_summary("rel_error", abs(est / (2 * math.pi * r) - 1))
    elif prm["shape"] == "curves":
        rng = np.random.default_rng(cfg.seed)
        for j in range(prm["curves"]):
            d = prm["degree"]
            est, err = crofton_length(Poly2.random(d, rng), prm["lines"], cfg.seed + j + 1)
            rep.rows.append({"shape": "curve", "index": j, "degree": d, "estimate": est, "stderr": err,
                             "bound": math.pi * d})
        rep.add_summary("max_excess", max(r["estimate"] - r["bound"] - 3 * r["stderr"] for r in rep.rows))
    else:
        raise ConfigError(f"unknown shape {prm['shape']!r}")
    return rep


def _random_poly(n, d, rng):
    from .algebraic import Poly1, Poly2

    if n == 1:
        c = rng.standard_normal(d + 1)
        return Poly1(c / np.linalg.norm(c))
    return Poly2.random(d, rng)


def run_sublevel(cfg: ExperimentConfig) -> Report:
    from .algebraic import sublevel_bound, sublevel_volume_mc

    prm = cfg.params
    rng = np.random.default_rng(cfg.seed)
    rep = Report("sublevel", cfg, [])
    for n in prm["dims"]:
        _need(n in (1, 2), "sublevel sets are sampled for n in {1, 2}")
        for d in prm["degrees"]:
            _need(d >= 1, "degrees must be at least 1")
            for j in range(prm["polys"]):
                P = _random_poly(n, d, rng)
                for delta in prm["deltas"]:
                    vol, err = sublevel_volume_mc(P, delta, prm["samples"], cfg.seed + j)
                    bnd = sublevel_bound(P, delta)
                    rep.rows.append({"n": n, "d": d, "poly": j, "delta": delta, "volume": vol,
                                     "stderr": err, "bound": bnd})
    rep.add_summary("max_ratio", max(r["volume"] / r["bound"] for r in rep.rows))
    rep.add_summary("violations", sum(r["volume"] > r["bound"] for r in rep.rows))
    return rep


def run_continuity(cfg: ExperimentConfig) -> Report:
    from .algebraic import continuity_experiment

    prm = cfg.params
    try:
        res = continuity_experiment(prm["d"], prm["etas"], prm["trials"], prm["raster"], cfg.seed)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    rep = Report("continuity", cfg, [{"eta": e, "mean": m, "stderr": s, "trials": t}
                                     for e, m, s, t in res.rows])
    rep.add_summary("epsilon_hat", res.epsilon_hat)
    means = [r["mean"] for r in rep.rows]
    rep.add_summary("monotone", all(b < a for a, b in zip(means, means[1:])))
    rep.add_summary("resampled", res.resampled)
    return rep


def random_disk_points(rng, count):
    r = np.sqrt(rng.random(count)) * 0.999
    a = rng.random(count) * 2 * math.pi
    return np.column_stack([r * np.cos(a), r * np.sin(a)])


def run_coverage(cfg: ExperimentConfig) -> Report:
    from .bounds import antipodal_coverage, point_coverage, random_loop
    from .families import algebraic_family, parallel_tuples, translate, vertical_lines
    from .squeeze import bent_family

    prm = cfg.params
    fam_name, p = prm["family"], prm["p"]
    rng = np.random.default_rng(cfg.seed)
    rep = Report("coverage", cfg, [], notes=[DETECTION_NOTE])
    if fam_name == "antipodal":
        fam = translate(algebraic_family(prm["degree"]))
        for j in range(prm["sets"]):
            loop = random_loop(cfg.seed * 1000003 + j, prm["loop_samples"])
            res = antipodal_coverage(fam, loop, prm["delta"], seed=cfg.seed, budget=prm["budget"])
            rep.rows.append({"trial": j, "points": 2, "success": res.success, "miss": res.miss,
                             "constructive": res.constructive})
    else:
        builders = {"parallel": lambda: parallel_tuples(p),
                    "bent": lambda: bent_family(p, p ** -0.5, "auto", cfg.seed),
                    "vertical": vertical_lines}
        _need(fam_name in builders, f"unknown family {fam_name!r}")
        fam = builders[fam_name]()
        for j in range(prm["sets"]):
            count = int(rng.integers(1, prm["max_points"] + 1))
            pts = random_disk_points(rng, count)
            res = point_coverage(fam, pts, prm["delta"], budget=prm["budget"], seed=cfg.seed + j)
            rep.rows.append({"trial": j, "points": count, "success": res.success, "miss": res.miss,
                             "constructive": res.constructive})
    rep.add_summary("success_rate", sum(r["success"] for r in rep.rows) / len(rep.rows))
    return rep


def run_pack(cfg: ExperimentConfig) -> Report:
    from .bounds import optimal_radii, pack_balls, radii_value

    prm = cfg.params
    n = prm["n"]
    _need(n >= 1, "n must be positive")
    rng = np.random.default_rng(cfg.seed)
    rep = Report("pack", cfg, [])
    for p in prm["p"]:
        r = 0.25 * p ** (-1.0 / n)
        pk = pack_balls([r] * p, n, cfg.seed)
        # optimal radii against random feasible radii for random weights
        V = rng.random(p) + 0.1
        k = prm["k"]
        radii, achieved = optimal_radii(V, n, k)
        best = 0.0
        for _ in range(prm["trials"]):
            w = rng.dirichlet(np.ones(p))
            best = max(best, radii_value(V, 0.25 * w ** (1.0 / n), k))
        rep.rows.append({"p": p, "n": n, "radius": r, "consumed": pk.consumed, "verified": True,
                         "optimal_value": achieved, "best_random_value": best,
                         "optimal_check": radii_value(V, radii, k)})
    rep.add_summary("all_packed", all(r["verified"] for r in rep.rows))
    rep.add_summary("optimal_wins", all(r["optimal_value"] >= r["best_random_value"] for r in rep.rows))
    return rep


def run_report(cfg: ExperimentConfig) -> Report:
    rep = Report("report", cfg, [])
    for path in cfg.params["inputs"]:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, ValueError) as err:
            raise ConfigError(f"{path}: {err}") from err
        for name in sorted(data.get("summary", {})):
            rep.rows.append({"source": str(path), "experiment": data.get("experiment"),
                             "metric": name, "value": data["summary"][name]["value"]})
    _need(rep.rows, "no summaries found in the given reports")
    rep.add_summary("sources", len(cfg.params["inputs"]))
    return rep


def _choice(*opts):
    def parse(v):
        if v not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return v
    return parse


def _eps(v):
    return v if v == "auto" else float(v)


def _paths(v):
    return [str(x) for x in v] if isinstance(v, (list, tuple)) else [s for s in str(v).split(",") if s]


EXPERIMENTS = {e.name: e for e in [
    Experiment("scaling", (
        Param("construction", _choice("bent-lines", "multiscale"), "bent-lines"),
        Param("p", parse_int_list, "4..1024", "values of p (ladder a..b[:factor] or list)"),
        Param("budget", int, 32, "sampled parameters per family"),
        Param("eps", _eps, "auto", "core fraction, or auto"),
        Param("qmax", int, 6, "largest Q0 and Q1 for the multiscale grid"),
    ), run_scaling, ("p", "max_length", True, True), "power-law growth of squeezed families"),
    Experiment("pyramid", (
        Param("n", int, 3), Param("i", int, 1), Param("k", int, 1), Param("P", int, 4),
        Param("phi_samples", int, 64), Param("search", _choice("greedy", "exhaustive", "random"), "greedy"),
        Param("resolution", int, 0, "extra tangent halfspaces of the root polytope"),
        Param("beta", float, 8.0), Param("audit", parse_bool, False, "run projection audits", flag=True),
    ), run_pyramid, ("p", "T_level", False, True), "volume-bisection pyramid thickness"),
    Experiment("flatdist", (
        Param("n", int, 2), Param("N", int, 3),
        Param("bruteforce", parse_bool, False, "also compute the exhaustive flat norm", flag=True),
    ), run_flatdist, None, "flat norm against area distance on small grids"),
    Experiment("crofton", (
        Param("shape", _choice("circle", "curves"), "circle"), Param("radius", float, 0.5),
        Param("lines", int, 100_000), Param("degree", int, 3), Param("curves", int, 50),
    ), run_crofton, None, "Crofton length estimates"),
    Experiment("sublevel", (
        Param("dims", parse_int_list, "1,2"), Param("degrees", parse_int_list, "1,2,3"),
        Param("deltas", parse_float_list, "1e-1,1e-2,1e-3,1e-4"), Param("polys", int, 20),
        Param("samples", int, 200_000),
    ), run_sublevel, ("delta", "volume", True, True), "sublevel-set volumes against the bound"),
    Experiment("continuity", (
        Param("d", int, 3), Param("etas", parse_float_list, "0.3,0.1,0.03,0.01,0.003"),
        Param("trials", int, 50), Param("raster", int, 128),
    ), run_continuity, ("eta", "mean", True, True), "area distance of perturbed zero sets"),
    Experiment("coverage", (
        Param("family", _choice("parallel", "bent", "vertical", "antipodal"), "parallel"),
        Param("p", int, 32), Param("sets", int, 100), Param("max_points", int, 32),
        Param("delta", float, 0.05), Param("budget", int, 64), Param("degree", int, 2),
        Param("loop_samples", int, 256),
    ), run_coverage, None, "point and antipodal coverage proxies"),
    Experiment("pack", (
        Param("n", int, 2), Param("p", parse_int_list, "1..10000:10"), Param("k", int, 1),
        Param("trials", int, 200),
    ), run_pack, None, "greedy ball packing and optimal radii"),
    Experiment("report", (
        Param("inputs", _paths, None, "comma-separated report files"),
    ), run_report, None, "aggregate report summaries"),
]}
