import hashlib
import json

import numpy as np
import pytest

import orlext as ox
from orlext.cli import main


@pytest.fixture(scope="module")
def inputs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    spec = {"family": "power", "params": {"p": 2}, "domain_ref": None, "flags": {}}
    phi = tmp / "power2.json"
    phi.write_text(json.dumps(spec))
    disk = ox.disk_domain(1 / 16)
    dom = tmp / "disk.txt"
    disk.to_file(dom)
    u = ox.GridFunction.from_callable(disk, lambda p: p[:, 0])
    ucsv = tmp / "u.csv"
    u.to_csv(ucsv)
    return {"tmp": tmp, "phi": str(phi), "dom": str(dom), "u": str(ucsv),
            "disk": disk}


BUNDLE = ["--beta0", "0.9", "--beta1", "0.9", "--growth-l", "1.05",
          "--q", "2", "--k-quasi", "1.3", "--delta", "0.5"]


def test_phi_eval(inputs, capsys):
    assert main(["phi", "eval", "--phi", inputs["phi"], "--x", "0.1,0.2", "--t", "3"]) == 0
    assert float(capsys.readouterr().out.strip()) == 9.0


def test_phi_inverse(inputs, capsys):
    assert main(["phi", "inverse", "--phi", inputs["phi"], "--x", "0,0", "--tau", "9"]) == 0
    assert float(capsys.readouterr().out.strip()) == 3.0


def test_phi_norm(inputs, capsys):
    rc = main(["phi", "norm", "--phi", inputs["phi"], "--domain", inputs["dom"],
               "--u", inputs["u"], "--k", "1"])
    assert rc == 0
    val = float(capsys.readouterr().out.strip())
    assert np.isfinite(val) and val > 0


def test_conditions_check_json_schema(inputs, capsys):
    out = inputs["tmp"] / "a0.json"
    rc = main(["conditions", "check", "--condition", "a0", "--phi", inputs["phi"],
               "--domain", inputs["dom"], "--beta", "0.9", "--out", str(out)])
    capsys.readouterr()
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["schema_version"] == 1
    assert rep["condition"] == "A0"
    assert rep["verdict"] is True
    assert set(rep) >= {"best_constant", "witnesses", "samples"}


def test_conditions_check_failure_exit_code(inputs, capsys):
    spec = {"family": "dumbbell", "params": {}, "domain_ref": None, "flags": {}}
    dphi = inputs["tmp"] / "dumbbell.json"
    dphi.write_text(json.dumps(spec))
    dom = inputs["tmp"] / "dumbbell_dom.txt"
    ox.dumbbell_domain(0.1).to_file(dom)
    rc = main(["conditions", "check", "--condition", "a0", "--phi", str(dphi),
               "--domain", str(dom), "--beta", "0.9"])
    capsys.readouterr()
    assert rc == 1


def test_domain_analyze(inputs, capsys):
    out = inputs["tmp"] / "analysis.json"
    rc = main(["domain", "analyze", "--domain", inputs["dom"], "--k", "1.2",
               "--delta", "1.0", "--eps", "0.4", "--samples", "48",
               "--out", str(out)])
    capsys.readouterr()
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["components"] == 1
    assert rep["radius"] == pytest.approx(1.0, abs=0.2)
    assert rep["quasi_convex"]["verdict"] and rep["eps_delta"]["verdict"]


def test_phi_extend_writes_record(inputs, capsys):
    out = inputs["tmp"] / "ext.json"
    rc = main(["phi", "extend", "--phi", inputs["phi"], "--domain", inputs["dom"],
               *BUNDLE, "--out", str(out)])
    capsys.readouterr()
    assert rc == 0
    rec = json.loads(out.read_text())
    assert rec["family"] == "power"
    assert 0 < rec["beta"] < 1
    assert all(r["verdict"] for r in rec["verification"])


def test_phi_extend_refuses_dumbbell(inputs, capsys):
    spec = {"family": "dumbbell", "params": {}, "domain_ref": None, "flags": {}}
    dphi = inputs["tmp"] / "db.json"
    dphi.write_text(json.dumps(spec))
    dom = inputs["tmp"] / "db_dom.txt"
    ox.dumbbell_domain(0.1).to_file(dom)
    out = inputs["tmp"] / "refused.json"
    rc = main(["phi", "extend", "--phi", str(dphi), "--domain", str(dom),
               *BUNDLE, "--out", str(out)])
    capsys.readouterr()
    assert rc == 1
    rec = json.loads(out.read_text())
    assert rec["refused"] is True
    assert rec["failing_report"]["condition"] == "A0"
    assert rec["failing_report"]["witnesses"]


def test_extend_sobolev_report(inputs, capsys):
    out = inputs["tmp"] / "sob.json"
    rc = main(["extend", "sobolev", "--u", inputs["u"], "--domain", inputs["dom"],
               "--phi", inputs["phi"], "--report", str(out), *BUNDLE,
               "--refinements", "2"])
    capsys.readouterr()
    rep = json.loads(out.read_text())
    assert len(rep["levels"]) == 2
    assert all(np.isfinite(l["ratio"]) for l in rep["levels"])
    assert rc == (0 if rep["pass"] else 1)


def test_pipeline_full_pass(inputs, capsys):
    out = inputs["tmp"] / "pipe.json"
    rc = main(["pipeline", "--phi", inputs["phi"], "--domain", inputs["dom"],
               *BUNDLE, "--corpus", "3", "--out", str(out)])
    capsys.readouterr()
    assert rc == 0
    rep = json.loads(out.read_text())
    assert rep["pass"] is True
    assert rep["stages"]["gates"]["pass"]
    assert rep["stages"]["verification"]["pass"]
    assert rep["stages"]["boundedness"]["pass"]


def test_pipeline_dumbbell_fails_at_gate(inputs, capsys):
    spec = {"family": "dumbbell", "params": {}, "domain_ref": None, "flags": {}}
    dphi = inputs["tmp"] / "db2.json"
    dphi.write_text(json.dumps(spec))
    dom = inputs["tmp"] / "db2_dom.txt"
    ox.dumbbell_domain(0.1).to_file(dom)
    out = inputs["tmp"] / "pipe_fail.json"
    rc = main(["pipeline", "--phi", str(dphi), "--domain", str(dom),
               *BUNDLE, "--out", str(out)])
    capsys.readouterr()
    assert rc == 1
    rep = json.loads(out.read_text())
    assert rep["stages"]["gates"]["pass"] is False
    assert rep["stages"]["gates"]["failing_report"]["condition"] == "A0"


def test_reproduce_example_deterministic(inputs, capsys):
    digests = []
    for run in (1, 2):
        out = inputs["tmp"] / f"rep{run}.json"
        rc = main(["reproduce", "example", "--seed", "3", "--samples", "96",
                   "--out", str(out)])
        assert rc == 0
        digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
    capsys.readouterr()
    assert digests[0] == digests[1]


def test_error_exit_code(inputs, capsys):
    rc = main(["conditions", "check", "--condition", "a1",
               "--phi", inputs["phi"], "--beta", "0.5"])
    capsys.readouterr()
    assert rc == 2  # a1 without a domain is a usage error
