import json
import subprocess
import sys

import pytest

from spmcert.cli import EXIT_CERT, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_igm_csv(capsys):
    rc, out, _ = run(capsys, "igm", "--chi", "0", "0", "0")
    assert rc == EXIT_OK
    lines = out.strip().splitlines()
    assert lines[0].startswith("#")
    assert len(lines) == 2 + 8
    assert lines[2].startswith("+++,90,90,90") or lines[2].startswith("+++,90.0")


def test_igm_json_and_no_mode(capsys):
    rc, out, _ = run(capsys, "igm", "--chi", "10", "5", "0", "--format", "json")
    assert rc == EXIT_OK
    json.loads(out)
    rc, _, err = run(capsys, "igm", "--chi", "70", "0", "0")
    assert rc == EXIT_CERT and err


def test_fgm(capsys):
    rc, out, _ = run(capsys, "fgm", "--theta", "90", "90", "90")
    assert rc == EXIT_OK and out
    rc, out, _ = run(capsys, "fgm", "--theta", "80", "95", "100", "--track", "--sigma", "12")
    assert rc == EXIT_OK


def test_pave_and_log(capsys, tmp_path):
    log = tmp_path / "cells.json"
    rc, out, _ = run(capsys, "pave", "--log", str(log))
    assert rc == EXIT_OK
    assert ",67,114," in out
    assert len(json.loads(log.read_text())["cells"]) == 35 * 35


def test_scans(capsys, tmp_path):
    rc, _, _ = run(capsys, "scan-type1", "--n", "11")
    assert rc == EXIT_OK
    rc, _, _ = run(capsys, "scan-type1", "--n", "11", "--chi-max", "50")
    assert rc == EXIT_CERT
    out = tmp_path / "k.csv"
    rc, _, _ = run(capsys, "scan-kanto", "--out", str(out))
    assert rc == EXIT_OK and out.read_text().startswith("#")
    # a coarser lattice puts the estimate too far from the root at the corners
    rc, out_, _ = run(capsys, "scan-kanto", "--step", "1/50")
    assert rc == EXIT_CERT and "failed at" in out_


def test_margin_gci_variety(capsys):
    rc, out, _ = run(capsys, "margin", "--schedule", "1e-5", "1")
    assert rc == EXIT_OK and "1e-05" in out
    rc, out, _ = run(capsys, "gci", "--grid", "10")
    assert rc == EXIT_OK and "GCI" in out
    rc, out, _ = run(capsys, "emit-variety", "--which", "wc")
    assert rc == EXIT_OK and ":" in out


def test_selftest(capsys, tmp_path):
    rc, out, _ = run(capsys, "selftest")
    assert rc == EXIT_OK
    assert out.count("PASS") == 5
    cfg = tmp_path / "d.cfg"
    cfg.write_text("# altered design\nalpha2 = 1/3\n")
    rc, out, _ = run(capsys, "selftest", "--config", str(cfg))
    assert rc == EXIT_CERT and "FAIL" in out


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "bogus")[0] == EXIT_USAGE
    assert run(capsys, "igm")[0] == EXIT_USAGE
    assert run(capsys, "igm", "--chi", "0", "0", "0", "--config", str(tmp_path / "missing"))[0] == EXIT_USAGE
    bad = tmp_path / "bad.cfg"
    bad.write_text("gamma = 1\n")
    assert run(capsys, "igm", "--chi", "0", "0", "0", "--config", str(bad))[0] == EXIT_USAGE
    assert run(capsys, "scan-kanto", "--step", "0")[0] == EXIT_USAGE


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "spmcert", "gci", "--grid", "3"], capture_output=True, text=True)
    assert p.returncode == 0 and "GCI" in p.stdout
