import subprocess
import sys

from wdmesh.cli import main

HEADER = "run_id,strategy,config"


def test_runs_scenario(tmp_path, capsys):
    sc = tmp_path / "h.cfg"
    sc.write_text("strategy=hybrid\nrole_in_a=GM\nrole_in_b=LC\nruns=4\nseed=3\n")
    out = tmp_path / "out.csv"
    assert main(["--scenario", str(sc), "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith(HEADER) and len(lines) == 5
    assert all(l.split(",")[-1] == "1" for l in lines[1:])


def test_flags_override_file(tmp_path, capsys):
    sc = tmp_path / "s.cfg"
    sc.write_text("runs=50\nseed=1\n")
    assert main(["--scenario", str(sc), "--runs", "2", "--set", "phase.scan.value_s=0.2"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3


def test_config_error_exit(tmp_path, capsys):
    sc = tmp_path / "bad.cfg"
    sc.write_text("role_in_a=GO\nrole_in_b=GO\nwat=1\n")
    assert main(["--scenario", str(sc)]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "GO/GO" in err and "line 3" in err


def test_missing_file(tmp_path, capsys):
    assert main(["--scenario", str(tmp_path / "nope.cfg")]) == 2


def test_bad_set_flag(capsys):
    assert main(["--set", "link.p2p.p_deliver"]) == 2
    assert main(["--set", "link.p2p.p_deliver=7"]) == 2


def test_compare(tmp_path, capsys):
    paths = []
    for name, text in [("ns", "strategy=non_stock\nrole_in_a=LC\nrole_in_b=GM"), ("ts", "strategy=time_sharing")]:
        p = tmp_path / f"{name}.cfg"
        p.write_text(text)
        paths.append(str(p))
    assert main(["--compare", *paths, "--runs", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert "non_stock" in out[1] and "time_sharing" in out[2]


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "wdmesh", "--runs", "1"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith(HEADER)
