"""Command-line driver: exit codes, provenance headers, reruns."""

import json
import os
import subprocess
import sys

import pytest

from newton_atlas import Polynomial, grid_counts
from newton_atlas.cli import DEFAULT_SEED, main, resolve_seed
from newton_atlas.ensemble import sample_roots


def run_cli(*args, env_extra=None):
    env = dict(os.environ)
    env.pop("NEWTON_ATLAS_SEED", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "newton_atlas.cli", *args],
        capture_output=True,
        text=True,
        env=env,
    )


@pytest.fixture(scope="module")
def poly_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("polys") / "d6.json"
    Polynomial.from_roots(sample_roots(6, 31337)).save(path)
    return str(path)


# -- exit codes --------------------------------------------------------


def test_no_command_is_usage_error():
    res = run_cli()
    assert res.returncode == 1


def test_unknown_flag_is_usage_error():
    res = run_cli("grid", "--degree", "4", "--frobnicate")
    assert res.returncode == 1


def test_version_flag():
    res = run_cli("--version")
    assert res.returncode == 0
    from newton_atlas import __version__

    assert res.stdout.strip() == __version__


def test_missing_poly_file_is_error_not_traceback():
    res = run_cli("solve", "--poly", "/nonexistent/p.json", "--epsilon", "1e-8")
    assert res.returncode == 1
    assert "Traceback" not in res.stderr


def test_bad_poly_content_is_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"degree": 2}')  # neither roots nor coeffs
    res = run_cli("solve", "--poly", str(bad), "--epsilon", "1e-8")
    assert res.returncode == 1
    assert "Traceback" not in res.stderr


# -- seed precedence ---------------------------------------------------


def test_resolve_seed_precedence(monkeypatch):
    monkeypatch.delenv("NEWTON_ATLAS_SEED", raising=False)
    assert resolve_seed(None) == DEFAULT_SEED == 1729
    monkeypatch.setenv("NEWTON_ATLAS_SEED", "42")
    assert resolve_seed(None) == 42
    assert resolve_seed(7) == 7  # flag beats env
    monkeypatch.setenv("NEWTON_ATLAS_SEED", "not-a-number")
    with pytest.raises(ValueError):
        resolve_seed(None)


def test_seed_env_changes_verify_output(tmp_path):
    args = ["verify", "--degree", "8", "--trials", "3"]
    a = run_cli(*args)
    b = run_cli(*args, env_extra={"NEWTON_ATLAS_SEED": "99"})
    c = run_cli(*args, "--seed", "1729", env_extra={"NEWTON_ATLAS_SEED": "99"})
    assert a.returncode == b.returncode == c.returncode == 0
    assert a.stdout != b.stdout
    assert a.stdout == c.stdout  # explicit flag restores the default


# -- grid --------------------------------------------------------------


def test_grid_json_stdout():
    res = run_cli("grid", "--degree", "10")
    assert res.returncode == 0
    doc = json.loads(res.stdout)
    assert next(iter(doc)) == "provenance"
    assert doc["provenance"]["subcommand"] == "grid"
    s, m = grid_counts(10)
    assert len(doc["radii"]) == s
    assert len(doc["points"]) == s * m


def test_grid_csv_file(tmp_path):
    out = tmp_path / "g.csv"
    res = run_cli("grid", "--degree", "6", "--out", str(out))
    assert res.returncode == 0
    first = out.read_text().splitlines()[0]
    assert first.startswith("# provenance: ")
    payload = json.loads(first[len("# provenance: "):])
    assert payload["subcommand"] == "grid"
    assert payload["parameters"]["degree"] == 6


def test_grid_rerun_byte_identical(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert run_cli("grid", "--degree", "7", "--out", str(a)).returncode == 0
    assert run_cli("grid", "--degree", "7", "--out", str(b)).returncode == 0
    assert a.read_bytes() == b.read_bytes()


# -- solve -------------------------------------------------------------


def test_solve_report(poly_file, tmp_path):
    out = tmp_path / "report.json"
    res = run_cli(
        "solve", "--poly", poly_file, "--epsilon", "1e-8", "--out", str(out)
    )
    assert res.returncode == 0
    doc = json.loads(out.read_text())
    assert next(iter(doc)) == "provenance"
    assert doc["degree"] == 6
    assert doc["unresolved_count"] == 0
    assert len(doc["found_roots"]) == 6
    assert len(doc["chosen_starts"]) == 6


def test_solve_traces(poly_file, tmp_path):
    out = tmp_path / "report.json"
    tdir = tmp_path / "traces"
    res = run_cli(
        "solve",
        "--poly",
        poly_file,
        "--epsilon",
        "1e-8",
        "--out",
        str(out),
        "--trace",
        str(tdir),
    )
    assert res.returncode == 0
    doc = json.loads(out.read_text())
    files = sorted(os.listdir(tdir))
    gids = sorted(c["grid_index"] for c in doc["chosen_starts"])
    assert files == [f"orbit_{gi:06d}.jsonl" for gi in gids]
    text = (tdir / files[0]).read_text().splitlines()
    head = json.loads(text[0])  # every line is JSON, headline included
    assert set(head) == {"provenance"}
    assert head["provenance"]["subcommand"] == "solve"
    rec = json.loads(text[1])
    assert set(rec) == {"n", "re", "im", "k", "regime", "disp"}
    last = json.loads(text[-1])
    assert last["disp"] is None


def test_solve_unresolved_exit_code(tmp_path):
    # a double root collapses the quadratic near phase to linear
    # convergence, so orbits stall inside the theorem-shaped iteration
    # budget; the run still completes, writes the report, and signals
    # the shortfall via rc 2
    pf = tmp_path / "double.json"
    Polynomial.from_roots([0.5 + 0j, 0.5 + 0j]).save(pf)
    out = tmp_path / "report.json"
    res = run_cli(
        "solve", "--poly", str(pf), "--epsilon", "1e-8", "--out", str(out)
    )
    assert res.returncode == 2
    doc = json.loads(out.read_text())
    assert doc["unresolved_count"] >= 1
    assert doc["orbit_outcomes"]["stalled"] > 0


# -- verify ------------------------------------------------------------


def test_verify_csv_header(tmp_path):
    out = tmp_path / "cond.csv"
    res = run_cli(
        "verify", "--degree", "8", "--trials", "4", "--out", str(out)
    )
    assert res.returncode == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# provenance: ")
    assert lines[1] == "seed,dc_holds,dc_min,ac_fitted_Cd,digit_max_mult"
    assert len(lines) == 2 + 4


# -- experiment --------------------------------------------------------


def test_experiment_smoke(tmp_path):
    out = tmp_path / "exp"
    res = run_cli(
        "experiment",
        "--degrees",
        "10,14",
        "--trials",
        "10",
        "--epsilon",
        "1e-8",
        "--out",
        str(out),
    )
    assert res.returncode == 0
    names = set(os.listdir(out))
    assert {"rows.csv", "summary.json", "scaling.svg",
            "regimes.svg", "displacements.svg"} <= names
    doc = json.loads((out / "summary.json").read_text())
    assert next(iter(doc)) == "provenance"
    svg = (out / "scaling.svg").read_text()
    head, rest = svg.split("\n", 1)
    assert rest.lstrip().startswith("<!-- provenance: ")


def test_experiment_bad_degrees_list():
    res = run_cli(
        "experiment", "--degrees", "10,banana", "--trials", "10",
        "--epsilon", "1e-8", "--out", "/tmp/x",
    )
    assert res.returncode == 1


# -- in-process entry --------------------------------------------------


def test_main_returns_int(capsys, tmp_path):
    out = tmp_path / "g.json"
    rc = main(["grid", "--degree", "5", "--out", str(out)])
    assert rc == 0
    assert out.exists()
