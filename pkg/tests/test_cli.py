import json
import subprocess
import sys

import numpy as np
import pytest

from swnalg.cli import load_config, build_parser, main
from swnalg.kcell import Grid, KLinearMap

REPORT_KEYS = {"check", "parameters", "max_abs_error", "closed_form", "pass", "runtime_ms"}


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_verify_prop3_emits_reports(capsys):
    code, out, err = run(capsys, "verify", "prop3", "--quiet")
    reports = json.loads(out)
    assert code == 0 and err == ""
    assert {r["check"] for r in reports} == {"prop3", "prop3-drift", "phi-state(M)"}
    for r in reports:
        assert set(r) == REPORT_KEYS and r["pass"] == (r["max_abs_error"] <= 1e-10)


def test_progress_goes_to_stderr(capsys):
    code, out, err = run(capsys, "verify", "swn", "prop3")
    assert code == 0
    assert "[verify swn]" in err and "[verify prop3]" in err
    assert json.loads(out)


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lambda": 0.3, "sl2_cutoff": 20, "seed": 3,
                               "grid": {"half_width": 2, "cells": 8}}))
    args = build_parser().parse_args(["verify", "prop3", "--config", str(cfg), "--lambda", "0.7"])
    c, explicit = load_config(args)
    assert c.lam == 0.7 and c.sl2_cutoff == 20 and c.cells == 8 and c.seed == 3
    assert {"lam", "sl2_cutoff", "cells", "half_width", "seed"} <= explicit
    code, out, _ = run(capsys, "verify", "prop3", "--config", str(cfg), "--lambda", "0.7",
                       "--quiet")
    assert json.loads(out)[0]["parameters"]["lambda"] == 0.7
    assert json.loads(out)[0]["parameters"]["sl2_cutoff"] == 20


def test_bad_config_is_an_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lambda": 2.0}))
    code, out, err = run(capsys, "verify", "prop3", "--config", str(cfg))
    assert code == 2 and out == "" and "error" in err


def write_map(path, T):
    path.write_text(json.dumps(T.to_json()))
    return str(path)


def test_classify_endo_valid_and_invalid(tmp_path, capsys):
    g = Grid(2.0, 4)
    T = KLinearMap.permutation(g, [1, 0, 3, 2])
    T0 = T.phase(g.constant(0.25))
    f1, f3 = write_map(tmp_path / "t1.json", T0), write_map(tmp_path / "t3.json", T)
    code, out, _ = run(capsys, "classify-endo", "--t1", f1, "--t2", f1, "--t3", f3, "--quiet")
    rep = json.loads(out)[0]
    assert code == 0 and rep["pass"] and rep["parameters"]["quasifree"]
    assert np.allclose(rep["parameters"]["alpha"]["re"], 0.25)

    f2 = write_map(tmp_path / "t2.json", T0.scale(2.0))
    code, out, _ = run(capsys, "classify-endo", "--t1", f1, "--t2", f2, "--t3", f3, "--quiet")
    rep = json.loads(out)[0]
    assert code == 1 and not rep["pass"]
    assert rep["parameters"]["reason"] == "T1_ne_T2" and rep["parameters"]["condition"] == "T1 = T2"


def test_sweep_over_particle_cutoff(capsys):
    code, out, _ = run(capsys, "sweep", "--vary", "P", "--values", "2,3", "-N", "10", "--quiet")
    reports = json.loads(out)
    # at N = 10 the sl2 tail keeps some KMS residuals above 1e-6, so the exit code is 1
    assert code == (0 if all(r["pass"] for r in reports) else 1) == 1
    assert any(r["check"] == "kms-P-independence" and r["pass"] for r in reports)


def test_sweep_bad_values(capsys):
    code, _, err = run(capsys, "sweep", "--vary", "cells", "--values", "3", "--quiet")
    assert code == 2 and "invalid value" in err


def test_unknown_suite_is_rejected():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["verify", "nonsense"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "swnalg", "verify", "prop3", "--quiet"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0 and proc.stderr == ""
    assert json.loads(proc.stdout)
