import json
import os

import pytest

from stablesurf import cli
from stablesurf.cli import RunConfig, main, parse_surface_spec, run
from stablesurf.errors import ConfigError


def test_parse_generator_spec():
    mesh, gen = parse_surface_spec("sphere:3")
    assert gen.kind == "sphere"
    assert mesh.euler_characteristic() == 2


def test_parse_spec_with_params():
    mesh, gen = parse_surface_spec("flat_cylinder:3:circumference=4.0,height=2.0")
    assert gen.params["circumference"] == 4.0


def test_parse_spec_file_roundtrip(tmp_path):
    p = tmp_path / "m.off"
    main(["gen", "sphere", "--level", "2", "--out", str(p)])
    mesh, gen = parse_surface_spec(str(p))
    assert gen is None
    assert mesh.euler_characteristic() == 2


def test_runconfig_rejects_unknown_check():
    with pytest.raises(ConfigError):
        RunConfig(input="sphere:3", checks=[{"name": "bogus"}])


def test_runconfig_rejects_negative_refinement():
    with pytest.raises(ConfigError):
        RunConfig(input="sphere:3", refinement=-1)


def test_run_batch_and_reproducibility(tmp_path):
    def once(d):
        cfg = RunConfig(input="flat_cylinder:4",
                        checks=[{"name": "theorem1", "L": 2.0},
                                {"name": "size_relation", "t": 1.5}],
                        refinement=4, seed=11, output_dir=str(d))
        return run(cfg)

    code, art = once(tmp_path / "a")
    assert code == 0
    doc = json.loads(open(art["report"]).read())
    assert doc["schema_version"] == 1
    names = [r["name"] for r in doc["checks"]]
    assert names == sorted(names)
    code2, art2 = once(tmp_path / "b")
    assert open(art["report"], "rb").read() == open(art2["report"], "rb").read()


def test_run_reports_check_error(tmp_path):
    cfg = RunConfig(input="sphere:3",
                    checks=[{"name": "size_relation", "t": 0.5}],
                    output_dir=str(tmp_path))
    code, art = run(cfg)
    assert code == 2
    doc = json.loads(open(art["report"]).read())
    assert doc["errors"][0]["check"] == "size_relation"
    assert "NonTubeTopology" in doc["errors"][0]["error"]


def test_run_bad_input_writes_error_report(tmp_path):
    cfg = RunConfig(input="no_such_kind:3", output_dir=str(tmp_path))
    code, art = run(cfg)
    assert code == 2
    doc = json.loads(open(art["report"]).read())
    assert "error" in doc


def test_run_parallel_matches_serial(tmp_path, monkeypatch):
    checks = [{"name": "theorem1", "L": 2.0},
              {"name": "flatness", "tol": 0.01},
              {"name": "size_relation", "t": 1.5}]
    cfg = RunConfig(input="flat_cylinder:4", checks=checks,
                    output_dir=str(tmp_path / "serial"))
    run(cfg)
    monkeypatch.setenv("SSL_WORKERS", "3")
    cfg2 = RunConfig(input="flat_cylinder:4", checks=checks,
                     output_dir=str(tmp_path / "par"))
    run(cfg2)
    a = open(tmp_path / "serial" / "report.json", "rb").read()
    b = open(tmp_path / "par" / "report.json", "rb").read()
    assert a == b


def test_cli_check_exit_codes(tmp_path):
    out = tmp_path / "rep.json"
    code = main(["check", "--input", "flat_cylinder:4", "--check",
                 "theorem1", "--L", "2.0", "--out", str(out)])
    assert code == 0
    assert out.exists()


def test_cli_check_fail_exit_code(tmp_path):
    code = main(["check", "--input", "yang_tube:4:eps=0.1,n_theta=32",
                 "--check", "flatness", "--tol", "0.01",
                 "--out", str(tmp_path / "r.json")])
    assert code == 1


def test_cli_missing_file_is_config_error(capsys):
    code = main(["dist", "--input", "/nonexistent/mesh.off"])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_cli_dist_csv(tmp_path):
    out = tmp_path / "d.csv"
    code = main(["dist", "--input", "flat_cylinder:3", "--source",
                 "loops:0", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0].startswith("vertex")
    assert len(lines) > 10


def test_cli_cutlocus_artifacts(tmp_path):
    code = main(["cutlocus", "--input", "flat_torus:4", "--source",
                 "vertex:0", "--L", "0.9", "--out", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "locus.json").read_text())
    assert doc["segments"]
    assert "directions" in doc
    svg = (tmp_path / "locus.svg").read_text()
    assert svg.startswith("<svg")


def test_cli_spectrum(capsys):
    code = main(["spectrum", "--input", "sphere:3"])
    assert code == 0
    out = capsys.readouterr().out
    assert "lambda1" in out


def test_cli_report_and_converge(tmp_path):
    cfg = {"input": "flat_cylinder:4",
           "checks": [{"name": "theorem1", "L": 2.0}],
           "refinement": 4, "seed": 3}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    code = main(["report", "--config", str(cfg_path), "--out",
                 str(tmp_path / "runA")])
    assert code == 0
    assert (tmp_path / "runA" / "report.json").exists()
    assert (tmp_path / "runA" / "plots").exists()

    out = tmp_path / "conv.csv"
    code = main(["converge", "--input", "flat_cylinder:0", "--check",
                 "theorem1", "--levels", "3,4", "--L", "2.0",
                 "--out", str(out)])
    assert code == 0
    rows = out.read_text().strip().splitlines()
    assert len(rows) == 3      # header + two levels
