import csv
import io
import json
import math
import re
from pathlib import Path

import jsonschema
import pytest

from sweepout.cli import EXIT_CHECK, EXIT_OK, EXIT_USAGE, SEED_ENV, parse_check, run
from sweepout.experiments import parse_int_list
from sweepout.report import (ConfigError, ExperimentConfig, Report, canonical_json, emit_report,
                             rows_csv, schema)
from sweepout.svg import Axes, render_svg, svg_slope

DATA = Path(__file__).parent / "data"

SMALL_RUNS = {
    "pyramid": ["--P", "2", "--phi-samples", "8", "--audit"],
    "flatdist": ["--n", "2", "--N", "2", "--bruteforce"],
    "crofton": ["--lines", "2000"],
    "sublevel": ["--dims", "1", "--degrees", "1,2", "--deltas", "0.1,0.01", "--polys", "2",
                 "--samples", "2000"],
    "continuity": ["--d", "2", "--etas", "0.1,0.01", "--trials", "3", "--raster", "32"],
    "coverage": ["--family", "parallel", "--sets", "5", "--max-points", "4"],
    "pack": ["--p", "1,10", "--trials", "5"],
    "scaling": ["--p", "4,16,64", "--budget", "2"],
}


def run_to(tmp_path, argv, name="out.json"):
    out = tmp_path / name
    code = run(argv + ["--out", str(out)])
    return code, out


def load(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# documented examples
# ---------------------------------------------------------------------------

def test_depth_zero_pyramid(tmp_path):
    code, out = run_to(tmp_path, ["pyramid", "--n", "3", "--i", "1", "--k", "1", "--P", "0"])
    assert code == EXIT_OK
    assert load(out)["summary"]["T"]["value"] == 0.5


def test_flat_norm_matches_area_distance_on_every_cycle(tmp_path):
    code, out = run_to(tmp_path, ["flatdist", "--n", "2", "--N", "3", "--bruteforce"])
    assert code == EXIT_OK
    rep = load(out)
    assert rep["summary"]["cycles"]["value"] == 256
    assert rep["summary"]["all_equal"]["value"] is True
    assert all(r["flat_norm"] == r["area_distance"] for r in rep["rows"])


def test_bent_lines_slope_check(tmp_path, capsys):
    code, out = run_to(tmp_path, ["scaling", "--construction", "bent-lines", "--p", "4..1024", "--seed", "7",
                                  "--check", "slope:0.4..0.6"])
    assert code == EXIT_OK
    assert 0.4 <= load(out)["summary"]["slope"]["value"] <= 0.6
    assert "pass" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("command", sorted(SMALL_RUNS))
def test_reports_validate_and_repeat(tmp_path, command):
    argv = [command] + SMALL_RUNS[command] + ["--seed", "3"]
    code_a, a = run_to(tmp_path, argv, "a.json")
    code_b, b = run_to(tmp_path, argv, "b.json")
    assert code_a == code_b == EXIT_OK
    text_a = a.read_text(encoding="utf-8")
    # identical except the output path echoed in the config
    assert text_a.replace("a.json", "b.json") == b.read_text(encoding="utf-8")
    assert text_a.endswith("\n") and text_a.count("\n") == 1
    rep = json.loads(text_a)
    jsonschema.validate(rep, schema())
    assert rep["config"]["seed"] == 3
    for s in rep["summary"].values():
        assert all(0 <= j < len(rep["rows"]) for j in s["rows"])


def test_report_aggregates_summaries(tmp_path):
    _, a = run_to(tmp_path, ["pyramid", "--P", "0"], "a.json")
    _, b = run_to(tmp_path, ["pack", "--p", "1,10", "--trials", "2"], "b.json")
    code, out = run_to(tmp_path, ["report", str(a), str(b)], "agg.json")
    assert code == EXIT_OK
    rep = load(out)
    jsonschema.validate(rep, schema())
    assert rep["summary"]["sources"]["value"] == 2
    assert {r["experiment"] for r in rep["rows"]} == {"pyramid", "pack"}


def test_report_needs_inputs(tmp_path):
    assert run_to(tmp_path, ["report"])[0] == EXIT_USAGE
    assert run_to(tmp_path, ["report", str(tmp_path / "missing.json")])[0] == EXIT_USAGE


def test_timing_is_opt_in(tmp_path):
    _, plain = run_to(tmp_path, ["pyramid", "--P", "0"], "plain.json")
    _, timed = run_to(tmp_path, ["pyramid", "--P", "0", "--timing"], "timed.json")
    assert "wall_time" not in load(plain)
    assert load(timed)["wall_time"] >= 0
    jsonschema.validate(load(timed), schema())


def test_stdout_report(capsys):
    assert run(["pyramid", "--P", "0", "--out", "-"]) == EXIT_OK
    rep = json.loads(capsys.readouterr().out)
    assert rep["experiment"] == "pyramid"


def test_empty_reports_are_not_emitted(tmp_path):
    cfg = ExperimentConfig("pyramid", {}, 0)
    with pytest.raises(ValueError):
        emit_report(Report("pyramid", cfg, []), tmp_path / "x.json")
    assert not (tmp_path / "x.json").exists()


def test_emit_report_names_the_path(tmp_path):
    rep = Report("pyramid", ExperimentConfig("pyramid", {}, 0), [{"p": 0}])
    with pytest.raises(OSError, match="nowhere"):
        emit_report(rep, tmp_path / "nowhere" / "x.json")


def test_schema_rejects_empty_rows():
    rep = Report("x", ExperimentConfig("x", {}, 0), [{"a": 1}]).to_json()
    jsonschema.validate(rep, schema())
    rep["rows"] = []
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(rep, schema())


def test_canonical_json():
    text = canonical_json({"b": 1.0 / 3.0, "a": [1, True, None, float("nan"), -0.0], "c": "é"})
    assert text == '{"a":[1,true,null,null,0],"b":0.333333333333,"c":"é"}\n'


# ---------------------------------------------------------------------------
# exit codes and checks
# ---------------------------------------------------------------------------

def test_failed_check_exits_three(tmp_path, capsys):
    code, out = run_to(tmp_path, ["pyramid", "--P", "0", "--check", "T:0.6..1"])
    assert code == EXIT_CHECK
    assert out.exists()
    assert "FAIL" in capsys.readouterr().err


def test_open_ended_check(tmp_path):
    assert run_to(tmp_path, ["pyramid", "--P", "0", "--check", "T:..0.5"])[0] == EXIT_OK
    assert run_to(tmp_path, ["pyramid", "--P", "0", "--check", "T:0.5.."])[0] == EXIT_OK


@pytest.mark.parametrize("argv", [
    ["pyramid", "--P", "0", "--check", "nosuch:0..1"],
    ["pyramid", "--P", "0", "--check", "T0..1"],
    ["pyramid", "--P", "x"],
    ["pyramid", "--P", "20"],
    ["pyramid", "--search", "best"],
    ["pyramid", "--P", "0", "--svg", "x.svg", "--unknown"],
    ["flatdist", "--svg", "x.svg"],
    ["crofton", "--radius", "1.5"],
    ["nosuch"],
    [],
])
def test_usage_errors_exit_two(tmp_path, argv, capsys):
    assert run_to(tmp_path, argv)[0] == EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_parse_check():
    assert parse_check("slope:0.4..0.6") == ("slope", 0.4, 0.6)
    assert parse_check("x:..2") == ("x", -math.inf, 2.0)
    with pytest.raises(ConfigError):
        parse_check(":1..2")


def test_main_exits_with_code(tmp_path):
    from sweepout.cli import main
    with pytest.raises(SystemExit) as exc:
        main(["pyramid", "--P", "0", "--out", str(tmp_path / "r.json")])
    assert exc.value.code == 0


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def test_config_roundtrip_bytes():
    cfg = ExperimentConfig("scaling", {"p": [4, 16], "eps": "auto", "budget": 8}, 2 ** 63 + 5,
                           {"json": "a.json"})
    text = cfg.dumps()
    again = ExperimentConfig.loads(text)
    assert again.dumps() == text
    assert again.seed == 2 ** 63 + 5


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        ExperimentConfig.loads('{"command": "pack", "params": {}, "seed": 1, "colour": 2}')
    with pytest.raises(ConfigError):
        ExperimentConfig.loads('{"command": "pack", "params": {"q": 1}, "seed": 1}', {"p"})


@pytest.mark.parametrize("seed", [-1, 2 ** 64, 1.5])
def test_config_seed_range(seed):
    with pytest.raises(ConfigError):
        ExperimentConfig("pack", {}, seed)


def test_config_file_with_flag_override(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"n": 3, "P": 1, "phi_samples": 8}))
    code, out = run_to(tmp_path, ["pyramid", "--config", str(conf), "--P", "0"])
    assert code == EXIT_OK
    prm = load(out)["config"]["params"]
    assert prm["P"] == 0 and prm["phi_samples"] == 8


def test_config_echo_reruns_identically(tmp_path):
    _, first = run_to(tmp_path, ["pack", "--p", "1,5", "--trials", "3", "--seed", "11"], "first.json")
    before = first.read_bytes()
    conf = tmp_path / "echo.json"
    conf.write_text(json.dumps(load(first)["config"]))
    first.unlink()
    # the echo names first.json as its output, so the rerun writes it again
    assert run(["pack", "--config", str(conf)]) == EXIT_OK
    assert first.read_bytes() == before


def test_config_file_errors(tmp_path):
    bad_key = tmp_path / "bad.json"
    bad_key.write_text(json.dumps({"n": 3, "colour": 1}))
    assert run_to(tmp_path, ["pyramid", "--config", str(bad_key)])[0] == EXIT_USAGE
    other = tmp_path / "other.json"
    other.write_text(json.dumps({"command": "pack", "params": {}, "seed": 0, "outputs": {}}))
    assert run_to(tmp_path, ["pyramid", "--config", str(other)])[0] == EXIT_USAGE
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert run_to(tmp_path, ["pyramid", "--config", str(broken)])[0] == EXIT_USAGE


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "42")
    _, out = run_to(tmp_path, ["pyramid", "--P", "0"], "env.json")
    assert load(out)["config"]["seed"] == 42
    _, out = run_to(tmp_path, ["pyramid", "--P", "0", "--seed", "5"], "flag.json")
    assert load(out)["config"]["seed"] == 5
    monkeypatch.setenv(SEED_ENV, "abc")
    assert run_to(tmp_path, ["pyramid", "--P", "0"])[0] == EXIT_USAGE


def test_default_seed_is_zero(tmp_path, monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)
    _, out = run_to(tmp_path, ["pyramid", "--P", "0"])
    assert load(out)["config"]["seed"] == 0


def test_int_ladders():
    assert parse_int_list("4..1024") == [4, 16, 64, 256, 1024]
    assert parse_int_list("4..20:2") == [4, 8, 16]
    assert parse_int_list("1,2, 3") == [1, 2, 3]
    with pytest.raises(ConfigError):
        parse_int_list("8..4")


# ---------------------------------------------------------------------------
# CSV and SVG
# ---------------------------------------------------------------------------

def test_csv_matches_json_rows(tmp_path):
    csv_path = tmp_path / "rows.csv"
    code, out = run_to(tmp_path, ["pyramid", "--P", "2", "--phi-samples", "8", "--csv", str(csv_path)])
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(csv_path.read_text())))
    ref = load(out)["rows"]
    assert list(rows[0]) == sorted(ref[0])
    assert len(rows) == len(ref)
    for got, want in zip(rows, ref):
        assert float(got["sum_rad_inv"]) == pytest.approx(want["sum_rad_inv"], rel=1e-11)


def test_rows_csv_cells():
    text = rows_csv([{"b": 1.0 / 3.0, "a": [1, 2], "c": None}])
    assert text == 'a,b,c\n"[1,2]",0.333333333333,\n'
    assert rows_csv([]) == ""


SQRT_ROWS = [{"p": p, "value": 2 * p ** 0.5} for p in (4, 16, 64, 256, 1024)]


def test_svg_golden():
    text = render_svg(SQRT_ROWS, Axes("p", "value"))
    assert text == (DATA / "sqrt_rows.svg").read_text(encoding="utf-8")
    assert svg_slope(text) == pytest.approx(0.5, abs=1e-6)


def test_svg_line_through_two_points():
    text = render_svg([{"x": 1.0, "y": 1.0}, {"x": 3.0, "y": 5.0}], Axes("x", "y", False, False))
    circles = [(float(a), float(b)) for a, b in re.findall(r'<circle cx="([\d.]+)" cy="([\d.]+)"', text)]
    line = re.findall(r'<line x1="([\d.]+)" y1="([\d.]+)" x2="([\d.]+)" y2="([\d.]+)" stroke="firebrick"', text)
    (x1, y1, x2, y2), = [tuple(map(float, m)) for m in line]
    assert sorted(circles) == sorted([(x1, y1), (x2, y2)])
    assert svg_slope(text) == pytest.approx(2.0)


def test_svg_is_self_contained():
    text = render_svg(SQRT_ROWS, Axes("p", "value"))
    assert "href" not in text and "<script" not in text
    assert text.startswith("<svg") and text.endswith("</svg>\n")


def test_svg_errors():
    with pytest.raises(ValueError):
        render_svg([], Axes("p", "value"))
    with pytest.raises(ValueError):
        render_svg([{"p": 0, "value": 1}], Axes("p", "value"))
    assert math.isnan(svg_slope("<svg></svg>"))


def test_svg_leaves_out_non_positive_points_on_log_axes():
    rows = SQRT_ROWS + [{"p": 2048, "value": 0.0}]
    text = render_svg(rows, Axes("p", "value"))
    assert text.count("<circle") == len(SQRT_ROWS)
    assert "1 non-positive point not shown" in text
    assert svg_slope(text) == pytest.approx(0.5, abs=1e-6)
    # a linear axis keeps the point
    assert render_svg(rows, Axes("p", "value", False, False)).count("<circle") == len(rows)


def test_cli_plot_with_zero_volumes(tmp_path):
    # at small delta some sublevel sets are empty to sampling, so volume 0 appears
    svg = tmp_path / "s.svg"
    code, out = run_to(tmp_path, ["sublevel", "--svg", str(svg)], "s.json")
    assert code == EXIT_OK
    vols = [r["volume"] for r in load(out)["rows"]]
    shown = svg.read_text(encoding="utf-8").count("<circle")
    assert shown == sum(v > 0 for v in vols) and shown > 0


def test_cli_svg(tmp_path):
    svg = tmp_path / "plot.svg"
    code, _ = run_to(tmp_path, ["pyramid", "--P", "3", "--phi-samples", "8", "--svg", str(svg)])
    assert code == EXIT_OK
    text = svg.read_text()
    assert text.count("<circle") == 4
    assert not math.isnan(svg_slope(text))
