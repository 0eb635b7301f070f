import csv
import io

import pytest

from chiralspin import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, list(csv.DictReader(io.StringIO(out))), out


def test_spectrum_ferromagnet(capsys):
    code, rows, _ = run(capsys, "spectrum", "--geometry", "ladder-a:6", "--lambda-min", "0")
    assert code == 0
    (row,) = rows
    assert row["e0"] == "-12" and row["degeneracy"] == "7" and row["S"] == "3"
    assert row["momentum_list"] == "" and row["status"] == "ok"


def test_spectrum_torus(capsys):
    code, rows, out = run(capsys, "spectrum", "--geometry", "torus:3x3", "--lambda-min", "100")
    assert out.splitlines()[0] == ",".join(cli.SPECTRUM_COLUMNS)
    (row,) = rows
    assert row["degeneracy"] == "4" and row["S"] == "1/2"
    assert sorted(row["Sz_list"].split(";")) == ["-1/2", "-1/2", "1/2", "1/2"]
    assert len(row["momentum_list"].split(";")) == 4


def test_sweep_jump(capsys, tmp_path):
    out = tmp_path / "sweep.csv"
    code = cli.main(["sweep", "--geometry", "ladder-c:6:open", "--lambda-min", "1.5",
                     "--lambda-max", "1.9", "--lambda-step", "0.05", "--out", str(out), "--workers", "2"])
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["lambda"] for r in rows][:3] == ["1.5", "1.55", "1.6"]
    assert {r["jump_lambda"] for r in rows} == {"1.75"}


def test_deterministic_output(capsys):
    argv = ["sweep", "--geometry", "ring:7", "--lambda-min", "0.9", "--lambda-max", "1.3"]
    a = run(capsys, *argv)[2]
    b = run(capsys, *argv)[2]
    assert a == b


def test_config_file_with_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# ring run\ngeometry = ring:6\nlambda-min = 0\nlambda_max = 0.2\nlambda-step = 0.1\n")
    code, rows, _ = run(capsys, "sweep", "--config", str(cfg), "--lambda-max", "0.1")
    assert code == 0 and [r["lambda"] for r in rows] == ["0", "0.1"]


def test_correlations(capsys):
    code, rows, _ = run(capsys, "correlations", "--geometry", "ladder-a:10", "--lambda-min", "0.2",
                        "--reference", "site:0")
    assert code == 0 and len(rows) == 10
    assert all(abs(float(r["value"])) < 1e-10 for r in rows if r["target"] != "0")


def test_dimer_undefined_cells(capsys):
    code, rows, _ = run(capsys, "correlations", "--geometry", "ring:5", "--lambda-min", "0",
                        "--reference", "bond:0-1")
    assert code == 0
    assert all(r["value"] == "" and r["status"] == "undefined" for r in rows)


def test_witness_state_file(capsys, tmp_path):
    f = tmp_path / "up.txt"
    f.write_text("0 0\n" * 7 + "1 0\n")
    code, rows, _ = run(capsys, "witness", "--state-file", str(f), "--restarts", "10")
    (row,) = rows
    assert code == 0
    assert float(row["chi_raw"]) == 0 and abs(float(row["e_x"])) < 1e-9
    assert row["class"] == "Unclassified-Separable-Consistent"


def test_witness_density_file(capsys, tmp_path):
    f = tmp_path / "mixed.txt"
    f.write_text("\n".join("0.125 0" if r == c else "0 0" for r in range(8) for c in range(8)))
    code, rows, _ = run(capsys, "witness", "--state-file", str(f), "--restarts", "10")
    assert code == 0 and abs(float(rows[0]["chi_max"])) < 1e-9


def test_witness_bad_file(capsys, tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("1 0\n0 0\n")
    assert cli.main(["witness", "--state-file", str(f)]) == 2


def test_witness_ground_state(capsys):
    code, rows, _ = run(capsys, "witness", "--geometry", "ladder-c:9", "--lambda-min", "10",
                        "--reference", "plaquette:3,4,5", "--restarts", "10")
    assert code == 0 and rows[0]["class"] == "BeyondGHZBound"


def test_meanfield(capsys):
    code, rows, _ = run(capsys, "meanfield", "--geometry", "ladder-a:64", "--lambda-min", "0",
                        "--lambda-max", "2", "--lambda-step", "0.1", "--ed-sizes", "8")
    assert code == 0
    assert abs(float(rows[0]["lambda_c"]) - 1.118) < 1e-3
    assert all(float(r["mf_energy_per_site"]) == -2 for r in rows if float(r["lambda"]) < 1.118)
    assert "ed_energy_per_site_8" in rows[0]


def test_meanfield_rejects_other_geometry(capsys):
    assert cli.main(["meanfield", "--geometry", "ring:9"]) == 2


def test_bad_arguments(capsys):
    with pytest.raises(SystemExit):
        cli.main(["spectrum"])
    with pytest.raises(SystemExit):
        cli.main(["sweep", "--geometry", "ring:6", "--lambda-min", "2", "--lambda-max", "1"])
    assert cli.main(["spectrum", "--geometry", "ladder-a:9"]) == 2


def test_row_failure_sets_exit_code(capsys, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("solver exploded")
    monkeypatch.setattr(cli, "ground_manifold", boom)
    code, rows, _ = run(capsys, "spectrum", "--geometry", "ring:6")
    assert code == 1 and rows[0]["status"] == "error: solver exploded"


@pytest.mark.parametrize("text,parsed", [("site:3", ("site", (3,))), ("bond:2-7", ("bond", (2, 7))),
                                         ("plaquette:5,6,10", ("plaquette", (5, 6, 10)))])
def test_parse_reference(text, parsed):
    assert cli.parse_reference(text) == parsed


@pytest.mark.parametrize("text", ["site:x", "bond:1", "edge:1-2", "plaquette:1,2"])
def test_parse_reference_rejects(text):
    with pytest.raises(ValueError):
        cli.parse_reference(text)


def test_formatting():
    assert cli.fmt(1 / 3) == "0.333333333333"
    assert cli.fmt(-0.0) == "0"
    assert cli.fmt(None) == ""
    assert cli.lambda_grid(0, 0.3, 0.1) == [0, 0.1, 0.2, 0.3]
