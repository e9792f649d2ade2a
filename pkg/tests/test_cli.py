import json

import pandas as pd
import pytest

from cli.main import main
from src.wedgetrace.errors import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION


def _diagnostic(capsys):
    lines = [line for line in capsys.readouterr().err.splitlines() if line.strip()]
    return json.loads(lines[-1])


def _write_config(path, document):
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


# =============================================================================
# SUCCESSFUL RUNS
# =============================================================================

def test_spectrum_writes_csv(tmp_path):
    out = tmp_path / "out"
    assert main(["spectrum", "--fixture", "classical-m2", "--grid", "4", "--out", str(out)]) == EXIT_OK
    payload = (out / "spectrum.csv").read_bytes()
    assert payload.startswith(b"y,re_sigma,im_sigma,mult,partials,residual,method,curve_id,collision_flag\r\n")
    assert b"\r\n" in payload
    table = pd.read_csv(out / "spectrum.csv")
    assert set(table["method"]) == {"companion", "contour"}
    assert len(table) == 2 * 2 * 4
    assert set(table["partials"].astype(str)) == {"1"}
    assert not table["collision_flag"].any()


def test_fixture_document(tmp_path):
    assert main(["fixture", "--fixture", "classical-m2", "--out", str(tmp_path)]) == EXIT_OK
    document = json.loads((tmp_path / "fixture.json").read_text(encoding="utf-8"))
    assert document["name"] == "classical-m2"
    assert document["strip"] == {"gamma": 0.5, "order": 2}
    assert document["details"]["xdx_eigenvalues"] == [0, 1]


def test_custom_operator_from_config(tmp_path):
    config = _write_config(tmp_path / "run.json", {
        "operator": {"kind": "classical", "classical": {"order": 1}},
    })
    out = tmp_path / "out"
    assert main(["frame", "--config", str(config), "--grid", "4", "--out", str(out)]) == EXIT_OK
    frame = json.loads((out / "frame.json").read_text(encoding="utf-8"))
    assert frame["rank"] == 1
    assert frame["provenance"] == "continued"
    term = frame["elements"][0][0][0]
    assert set(term) == {"sigma", "ell", "coeff"}
    assert len(term["sigma"]) == 2
    assert [len(pair) for pair in term["coeff"]] == [2]
    assert (out / "xdx_eigenvalues.csv").exists()


def test_outputs_do_not_depend_on_threads(tmp_path):
    payloads = []
    for threads in ("1", "2"):
        out = tmp_path / f"threads-{threads}"
        for command in ("spectrum", "frame"):
            argv = [command, "--fixture", "classical-m1", "--grid", "8", "--threads", threads, "--out", str(out)]
            assert main(argv) == EXIT_OK
        payloads.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    assert payloads[0] == payloads[1]


# =============================================================================
# FAILURES
# =============================================================================

def test_invalid_config_writes_nothing(tmp_path, capsys):
    config = _write_config(tmp_path / "bad.json", {"tolerances": {"rank_tol": -1.0}})
    out = tmp_path / "out"
    assert main(["spectrum", "--fixture", "classical-m1", "--config", str(config), "--out", str(out)]) == EXIT_VALIDATION
    assert _diagnostic(capsys)["error"] == "invalid_config"
    assert not out.exists()


def test_config_that_is_not_json(tmp_path, capsys):
    config = tmp_path / "broken.json"
    config.write_text("{not json", encoding="utf-8")
    assert main(["spectrum", "--fixture", "classical-m1", "--config", str(config), "--out", str(tmp_path)]) == EXIT_VALIDATION
    assert _diagnostic(capsys)["error"] == "invalid_input"


@pytest.mark.parametrize("argv", [
    ["spectrum", "--fixture", "classical-m1", "--strip", "1"],
    ["spectrum", "--fixture", "classical-m1", "--strip", "0.5,1.5"],
    ["spectrum", "--fixture", "classical-m1", "--grid", "0"],
    ["spectrum", "--fixture", "nonexistent"],
])
def test_invalid_input(tmp_path, capsys, argv):
    assert main(argv + ["--out", str(tmp_path / "out")]) == EXIT_VALIDATION
    assert _diagnostic(capsys)["error"] == "invalid_input"
    assert not (tmp_path / "out").exists()


def test_unknown_command(capsys):
    assert main(["transmogrify"]) == EXIT_VALIDATION
    assert _diagnostic(capsys)["error"] == "invalid_arguments"


def test_numerical_failure(tmp_path, capsys):
    singular = [[1.0, 1.0], [1.0, 1.0]]
    config = _write_config(tmp_path / "singular.json", {
        "operator": {"kind": "family", "family": {"coefficients": [singular, singular], "gamma": 0.5, "order": 1}},
    })
    out = tmp_path / "out"
    assert main(["spectrum", "--config", str(config), "--out", str(out)]) == EXIT_NUMERICAL
    assert _diagnostic(capsys)["error"] == "degenerate_family"
    assert not out.exists()
