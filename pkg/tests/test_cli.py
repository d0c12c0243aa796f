import json
import math
import subprocess
import sys

import numpy as np
import pytest

from etgraph.cli import atomic_write, build_parser, main
from etgraph.graph import read_graph
from etgraph.numerics import read_matrix
from etgraph.scatmat import et_five

SUBCOMMANDS = ["construct", "search", "graph", "graph-spectrum", "quantize", "spectrum",
               "gaps", "orbits", "bass-check", "stats"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def k13_file(tmp_path, capsys):
    path = tmp_path / "K13.json"
    assert run(capsys, "graph", "--kind", "complete", "--V", "13", "--out", str(path))[0] == 0
    return path


@pytest.fixture
def reg_file(tmp_path, capsys):
    path = tmp_path / "reg.json"
    code = run(capsys, "graph", "--kind", "regular", "--V", "20", "--v", "5", "--seed", "1",
               "--out", str(path))[0]
    assert code == 0
    return path


def test_construct_et_five(capsys):
    code, out, _ = run(capsys, "construct", "--family", "et-five")
    assert code == 0
    obj = json.loads(out)
    sigma = (np.array(obj["data"])[:, 0] + 1j * np.array(obj["data"])[:, 1]).reshape(5, 5)
    np.testing.assert_array_equal(sigma, et_five().sigma)


@pytest.mark.parametrize("argv", [
    ["--family", "et-hadamard", "--dim", "12"],
    ["--family", "et-character", "--prime", "13"],
    ["--family", "fourier", "--dim", "7"],
    ["--family", "neumann", "--dim", "4"],
])
def test_construct_unitary(tmp_path, capsys, argv):
    path = tmp_path / "m.json"
    assert run(capsys, "construct", *argv, "--out", str(path))[0] == 0
    m = read_matrix(path)
    assert np.linalg.norm(m @ m.conj().T - np.eye(len(m))) < 1e-12


def test_construct_inadmissible_dimension(capsys):
    code, out, err = run(capsys, "construct", "--family", "et-hadamard", "--dim", "6")
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "validation"


def test_search_success_and_failure(capsys):
    code, out, _ = run(capsys, "search", "--dim", "4", "--seed", "0")
    assert code == 0
    code, _, err = run(capsys, "search", "--dim", "3", "--seed", "0", "--max-iters", "300")
    assert code == 3
    detail = json.loads(err)["detail"]
    assert detail["final_residual"] == pytest.approx(math.sqrt(1.5), abs=1e-6)


def test_graph_roundtrip(k13_file, reg_file):
    assert read_graph(k13_file).B == 78
    g = read_graph(reg_file)
    assert g.V == 20 and g.regular_degree() == 5


def test_graph_regular_needs_seed(capsys):
    assert run(capsys, "graph", "--kind", "regular", "--V", "10", "--v", "3")[0] == 2


def test_graph_infeasible_parameters(capsys):
    code, _, err = run(capsys, "graph", "--kind", "regular", "--V", "7", "--v", "3", "--seed", "0")
    assert code == 2  # odd vV
    assert json.loads(err)["error"] == "validation"


def test_generation_failure_exit_3(capsys, monkeypatch):
    from etgraph import graph as gr
    monkeypatch.setattr(gr.random_regular, "__defaults__", (0,))  # no attempts allowed
    code, _, err = run(capsys, "graph", "--kind", "regular", "--V", "20", "--v", "5", "--seed", "0")
    assert code == 3
    assert json.loads(err)["error"] == "generation"


def test_graph_spectrum(capsys, k13_file):
    code, out, _ = run(capsys, "graph-spectrum", "--graph", str(k13_file))
    lines = out.strip().splitlines()
    assert lines[0] == "index,mu" and len(lines) == 14
    assert float(lines[1].split(",")[1]) == pytest.approx(12)


@pytest.mark.parametrize("emit", ["U", "M", "W"])
def test_quantize_roundtrip(tmp_path, capsys, reg_file, emit):
    path = tmp_path / f"{emit}.json"
    code = run(capsys, "quantize", "--graph", str(reg_file), "--family", "et-five",
               "--seed", "3", "--emit", emit, "--out", str(path))[0]
    assert code == 0
    A = read_matrix(path)
    assert A.shape == (100, 100)
    if emit == "U":
        assert np.linalg.norm(A @ A.conj().T - np.eye(100)) < 1e-10
    else:
        np.testing.assert_allclose(A.real.sum(axis=1), 4 if emit == "W" else 1, atol=1e-12)


def test_quantize_U_requires_seed(capsys, reg_file):
    assert run(capsys, "quantize", "--graph", str(reg_file), "--family", "et-five", "--emit", "U")[0] == 2


def test_spectrum_both(capsys, k13_file):
    code, out, _ = run(capsys, "spectrum", "--graph", str(k13_file), "--r", "et")
    assert code == 0
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    assert sum(r[2] == "theorem" for r in rows) == 156 == sum(r[2] == "direct" for r in rows)


def test_spectrum_numeric_r(capsys, k13_file):
    code, out, _ = run(capsys, "spectrum", "--graph", str(k13_file), "--r", "0.3", "--method", "both")
    assert code == 0
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    th = np.array([complex(float(a), float(b)) for a, b, s in rows if s == "theorem"])
    di = np.array([complex(float(a), float(b)) for a, b, s in rows if s == "direct"])
    from etgraph.numerics import match_spectra
    assert match_spectra(th, di, 1e-8)[0]


def test_spectrum_bad_r(capsys, k13_file):
    assert run(capsys, "spectrum", "--graph", str(k13_file), "--r", "banana")[0] == 2
    assert run(capsys, "spectrum", "--graph", str(k13_file), "--r", "1.5")[0] == 2


def test_gaps_k13(capsys, k13_file):
    code, out, _ = run(capsys, "gaps", "--graph", str(k13_file))
    assert code == 0
    fourier = [line for line in out.splitlines() if line.startswith("fourier,")]
    assert len(fourier) == 1
    assert fourier[0].startswith("fourier,0.08333333333333333,0.91666666666666")


def test_orbits(capsys, k13_file):
    code, out, _ = run(capsys, "orbits", "--graph", str(k13_file), "--nmax", "4")
    assert out.splitlines() == ["n,trace_Wn", "1,0", "2,0", "3,1716", "4,17160"]
    assert run(capsys, "orbits", "--graph", str(k13_file), "--nmax", "0")[0] == 2


def test_bass_check(capsys, reg_file):
    code, out, _ = run(capsys, "bass-check", "--graph", str(reg_file))
    rows = out.strip().splitlines()[1:]
    assert code == 0 and len(rows) == 20
    assert max(float(r.split(",")[2]) for r in rows) < 1e-8


def test_stats_outputs(tmp_path, capsys, reg_file):
    out_dir = tmp_path / "st"
    code = run(capsys, "stats", "--graph", str(reg_file), "--family", "et-five",
               "--realizations", "12", "--seed", "4", "--out", str(out_dir))[0]
    assert code == 0
    assert sorted(p.name for p in out_dir.iterdir()) == ["ps.csv", "summary.json", "vl.csv"]
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["n_spacings"] == 1200
    assert summary["config"]["seed"] == 4 and "jobs" not in summary["config"]
    assert summary["ks"]["GOE"] < summary["ks"]["GUE"]
    ps = (out_dir / "ps.csv").read_text().splitlines()
    assert ps[0] == "s_mid,density,goe_ref,gue_ref" and len(ps) == 51


def test_stats_emit_ps_only(tmp_path, capsys, reg_file):
    out_dir = tmp_path / "st"
    run(capsys, "stats", "--graph", str(reg_file), "--family", "et-five", "--emit", "ps",
        "--realizations", "2", "--seed", "4", "--out", str(out_dir))
    assert sorted(p.name for p in out_dir.iterdir()) == ["ps.csv", "summary.json"]


def test_stats_empty_graph_file(tmp_path, capsys):
    empty = tmp_path / "empty.json"
    empty.write_text("")
    code, _, err = run(capsys, "stats", "--graph", str(empty), "--family", "et-five",
                       "--realizations", "2", "--seed", "1", "--out", str(tmp_path / "o"))
    assert code == 2
    assert json.loads(err)["error"] == "validation"
    assert not (tmp_path / "o").exists()


def test_missing_graph_file(tmp_path, capsys):
    assert run(capsys, "gaps", "--graph", str(tmp_path / "nope.json"))[0] == 2


def test_stats_requires_seed(tmp_path, capsys, reg_file):
    code, _, err = run(capsys, "stats", "--graph", str(reg_file), "--family", "et-five",
                       "--realizations", "2", "--out", str(tmp_path))
    assert code == 2 and json.loads(err)["error"] == "usage"


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_unknown_flag_rejected(capsys, cmd):
    code, _, err = run(capsys, cmd, "--definitely-not-a-flag")
    assert code == 2
    assert json.loads(err)["error"] == "usage"


def test_unknown_subcommand(capsys):
    assert run(capsys, "frobnicate")[0] == 2


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_documents_every_flag(capsys, cmd):
    parser = build_parser()
    sub = parser._subparsers._group_actions[0].choices[cmd]
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for action in sub._actions:
        for opt in action.option_strings:
            assert opt in text


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "a" / "b.csv"
    atomic_write(target, "x\n")
    atomic_write(target, "y\n")
    assert target.read_text() == "y\n"
    assert [p.name for p in target.parent.iterdir()] == ["b.csv"]


def test_atomic_write_failure_keeps_old(tmp_path):
    target = tmp_path / "b.csv"
    target.write_text("old\n")
    with pytest.raises(TypeError):
        atomic_write(target, None)
    assert target.read_text() == "old\n"
    assert [p.name for p in tmp_path.iterdir()] == ["b.csv"]


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "etgraph", "construct", "--family", "et-five"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["rows"] == 5
