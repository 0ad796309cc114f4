import json

import jsonschema
import pytest

import app
from utils.errors import QuadratureFailure
from utils.export_manager import load_schema

ONB_ARGS = ["finite-wh", "--N", "4", "--a", "1", "--b", "4", "--window", "1,0,0,0"]


def run_cli(args, tmp_path, name="report.json"):
    path = tmp_path / name
    code = app.main(args + ["--output", str(path)])
    return code, path.read_bytes()


def run_json(args, tmp_path, schema=None):
    code, data = run_cli(args, tmp_path)
    assert code == app.EXIT_OK
    report = json.loads(data)
    jsonschema.validate(report, load_schema("run_report"))
    if schema:
        jsonschema.validate(report["results"], load_schema(schema))
    return report


def test_classify_example(tmp_path):
    report = run_json(["classify", "--invariant", "1/2", "--kleppner", "holds"], tmp_path, "verdict")
    results = report["results"]
    assert results["regime"] == "subcritical"
    assert results["claims"] == ["no_separating_vector", "parseval_frame_exists"]
    assert results["kleppner_check"] is None
    assert report["config"]["command"] == "classify"


def test_classify_auto_kleppner_from_basis(tmp_path):
    report = run_json(["classify", "--invariant", "sqrt(2)", "--basis", "sqrt(2),0;0,1"], tmp_path, "verdict")
    results = report["results"]
    assert results["kleppner"] == "holds"
    assert results["kleppner_check"]["status"] == "holds"
    assert results["regime"] == "supercritical"
    assert results["claims"] == ["no_cyclic_vector", "on_sequence_exists"]


def test_classify_auto_kleppner_for_rational_invariant(tmp_path):
    results = run_json(["classify", "--invariant", "1"], tmp_path, "verdict")["results"]
    assert results["kleppner"] == "fails"
    assert results["kleppner_check"]["method"] == "heisenberg_d1"
    assert results["claims"] == []


def test_finite_wh_onb_example(tmp_path):
    results = run_json(ONB_ARGS, tmp_path, "finite_wh")["results"]
    assert results["invariant"] == "1"
    assert results["onb"] is True
    assert results["oracle"]["lower_violation"] <= 1e-9


def test_kleppner_command(tmp_path):
    results = run_json(["kleppner", "--basis", "1/2,0;0,1/3", "--brute-radius", "5"], tmp_path, "kleppner")["results"]
    assert results["covolume"] == "1/6"
    assert results["kleppner"]["witness"] == [6, 0]
    assert results["brute"]["status"] == "holds_up_to_radius"
    assert results["agrees"] is True
    assert results["verdict"]["regime"] == "subcritical"


def test_gabor_command(tmp_path):
    results = run_json(["gabor", "--lattice", "1,0;0,1/2", "--grid", "64"], tmp_path, "gabor")["results"]
    assert results["bounds"]["method"] == "ZibulskiZeevi"
    assert results["sandwich"]["ok"] is True


def test_gabor_box_on_a_dilated_lattice(tmp_path):
    args = ["gabor", "--window", "box", "--lattice", "2,0;0,1/4", "--radius", "1"]
    results = run_json(args, tmp_path, "gabor")["results"]
    assert results["bounds"]["method"] == "TruncatedGram"
    assert results["sandwich"] is None


def test_bergman_command(tmp_path):
    results = run_json(["bergman", "--alpha", "13", "--base", "i", "--radius", "1"], tmp_path, "bergman")["results"]
    assert results["invariant"] == "1"
    assert results["kernel"]["rule"] == "kelly_lyth"
    assert len(results["gram"]["points"]) == 3


def test_bergman_group_file(tmp_path):
    group = tmp_path / "group.json"
    group.write_text(json.dumps({"generators": [[0, -1, 1, 0], [1, 1, 0, 1]], "covolume": 1.0471975511965976}))
    results = run_json(["bergman", "--alpha", "2", "--group-file", str(group), "--radius", "0"], tmp_path, "bergman")[
        "results"
    ]
    assert results["invariant"] is None
    assert results["invariant_float"] == pytest.approx(1 / 12)


def test_missing_command_is_invalid(capsys):
    assert app.main([]) == app.EXIT_INVALID
    payload = json.loads(capsys.readouterr().out)
    jsonschema.validate(payload, load_schema("error"))
    assert payload["errors"][0]["code"] == "config_invalid"


def test_invalid_divisor(capsys):
    assert app.main(["finite-wh", "--N", "4", "--a", "3", "--b", "1", "--window", "random"]) == app.EXIT_INVALID
    payload = json.loads(capsys.readouterr().out)
    assert any("divide" in error["message"] for error in payload["errors"])


def test_unknown_flag_is_invalid(capsys):
    assert app.main(["classify", "--invariant", "1", "--bogus"]) == app.EXIT_INVALID
    jsonschema.validate(json.loads(capsys.readouterr().out), load_schema("error"))


def test_numerical_failure_exit_code(monkeypatch, capsys):
    def broken(params, seed, tolerances):
        raise QuadratureFailure("did not converge")

    monkeypatch.setitem(app.HANDLERS, "classify", broken)
    assert app.main(["classify", "--invariant", "1/2"]) == app.EXIT_NUMERICAL
    payload = json.loads(capsys.readouterr().out)
    assert payload == {"errors": [{"code": "quadrature_failure", "message": "did not converge"}]}


def test_reruns_are_byte_identical(tmp_path):
    args = ["finite-wh", "--N", "6", "--a", "2", "--b", "1", "--window", "random", "--seed", "7"]
    _, first = run_cli(args, tmp_path, "first.json")
    _, second = run_cli(args, tmp_path, "second.json")
    assert first == second

    _, other = run_cli(args[:-1] + ["8"], tmp_path, "other.json")
    assert json.loads(other)["payload_sha256"] != json.loads(first)["payload_sha256"]


def test_csv_output(tmp_path):
    code, data = run_cli(ONB_ARGS + ["--format", "csv"], tmp_path, "report.csv")
    assert code == app.EXIT_OK
    lines = data.split(b"\r\n")
    assert lines[0] == b"N,a,b,invariant,A,B,parseval,onb"
    assert lines[1].startswith(b"4,1,4,1,")
    assert lines[-1] == b""


def test_stdout_output(capsys):
    assert app.main(["classify", "--invariant", "2", "--kleppner", "holds", "--output", "-"]) == app.EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["results"]["regime"] == "supercritical"


def test_timing_adds_wall_time(tmp_path):
    report = run_json(["classify", "--invariant", "1/2", "--timing"], tmp_path)
    assert report["wall_time"] >= 0
    assert "wall_time" not in run_json(["classify", "--invariant", "1/2"], tmp_path)


def test_flags_override_config(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps({"command": "finite-wh", "params": {"N": 4, "a": 1, "b": 4, "window": "1,0,0,0"}, "seed": 3})
    )
    base = run_json(["--config", str(config)], tmp_path)
    assert base["results"]["invariant"] == "1"
    assert base["config"]["seed"] == 3

    overridden = run_json(["finite-wh", "--config", str(config), "--b", "2"], tmp_path)
    assert overridden["results"]["invariant"] == "1/2"
    assert overridden["config"]["params"]["b"] == 2


def test_bad_config_file(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text("[1, 2]")
    assert app.main(["--config", str(config)]) == app.EXIT_INVALID
    assert json.loads(capsys.readouterr().out)["errors"][0]["code"] == "config_invalid"


def test_finite_wh_sweep(tmp_path):
    args = ["sweep", "--target", "finite-wh", "--parameter", "a", "--values", "1,2,4"]
    report = run_json(args + ["--N", "4", "--b", "2", "--window", "random"], tmp_path, "sweep")
    invariants = [point["invariant"] for point in report["results"]["points"]]
    assert invariants == ["1/2", "1", "2"]
    assert report["results"]["points"][2]["oracle"] is None


def test_bergman_sweep(tmp_path):
    report = run_json(["sweep", "--target", "bergman", "--parameter", "alpha", "--values", "2,7,13"], tmp_path, "sweep")
    points = report["results"]["points"]
    assert [p["invariant"] for p in points] == ["1/12", "1/2", "1"]
    assert [p["verdict"]["regime"] for p in points] == ["subcritical", "subcritical", "critical"]


def test_gabor_density_sweep(tmp_path):
    args = ["sweep", "--target", "gabor", "--parameter", "density", "--values", "1/4,1/2,3/4", "--grid", "64"]
    report = run_json(args, tmp_path, "sweep")
    lower = [point["bounds"]["A"] for point in report["results"]["points"]]
    assert lower[0] > lower[1] > lower[2] > 0
    assert all(point["sandwich"]["ok"] for point in report["results"]["points"])


def test_sweep_csv_rows(tmp_path):
    args = ["sweep", "--target", "classify", "--parameter", "invariant", "--values", "1/2,1,2", "--kleppner", "holds"]
    code, data = run_cli(args + ["--format", "csv"], tmp_path, "sweep.csv")
    assert code == app.EXIT_OK
    lines = data.decode().split("\r\n")
    assert lines[0] == "invariant,regime,kleppner,claims"
    assert lines[1] == "1/2,subcritical,holds,no_separating_vector;parseval_frame_exists"
    assert lines[2] == "1,critical,holds,onb_exists"


def test_sweep_rejects_a_bad_value(capsys):
    args = ["sweep", "--target", "finite-wh", "--parameter", "a", "--values", "1,3", "--N", "4", "--b", "1"]
    assert app.main(args + ["--window", "random"]) == app.EXIT_INVALID
    messages = [error["message"] for error in json.loads(capsys.readouterr().out)["errors"]]
    assert any(message.startswith("a=3") for message in messages)


def test_threaded_sweep_matches_serial(tmp_path, monkeypatch):
    args = ["sweep", "--target", "finite-wh", "--parameter", "N", "--values", "4,6,8", "--a", "2", "--b", "2"]
    args += ["--window", "random", "--seed", "11"]
    _, serial = run_cli(args, tmp_path, "serial.json")
    monkeypatch.setenv("DENSITYLAB_THREADS", "2")
    _, threaded = run_cli(args, tmp_path, "threaded.json")
    assert serial == threaded


def test_bad_thread_count(tmp_path, monkeypatch):
    monkeypatch.setenv("DENSITYLAB_THREADS", "many")
    args = ["sweep", "--target", "classify", "--parameter", "invariant", "--values", "1/2"]
    assert app.main(args + ["--output", str(tmp_path / "x.json")]) == app.EXIT_INVALID
