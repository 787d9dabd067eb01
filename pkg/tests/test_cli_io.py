import csv
import io
import json

import pytest

from kakeya_lab import exponents as ex
from kakeya_lab.cli import run_command
from kakeya_lab.configs import Config
from kakeya_lab.io import ExperimentConfig, InputError, Report, emit_report, load_instance, save_instance
from kakeya_lab.kakeya_grid import full_shading, generate_family
from kakeya_lab.sd_engine import SdInstance
from kakeya_lab.slope_field import INF


def _run(argv, capsys):
    code, rep = run_command(argv)
    out = capsys.readouterr()
    return code, rep, out.out, out.err


def test_exponents_n7(capsys):
    code, rep, out, _ = _run(["exponents", "--n", "7", "--format", "json"], capsys)
    assert code == 0
    pay = json.loads(out)["payload"]
    assert abs(pay["minkowski"] - 4.5818) < 1e-4
    assert abs(pay["hausdorff"] - 4.7574) < 1e-4
    assert pay["maximal_p_exact"] == "31/7" and pay["maximal_q"] == 7.75


def test_exponents_table_csv(capsys):
    code, _, out, _ = _run(["exponents", "--format", "csv"], capsys)
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == list(ex.CSV_COLUMNS) and len(rows) == 24


def test_sd_search_exhaustive(capsys):
    code, _, out, _ = _run(["sd-search", "--p", "5", "--slopes", "0,1,2,inf", "--cap", "2",
                            "--mode", "exhaustive"], capsys)
    assert code == 0 and json.loads(out)["payload"]["exhaustive"] is True


def test_threads_do_not_change_results(capsys):
    base = ["sd-search", "--p", "7", "--slopes", "0,1,2,inf", "--cap", "3", "--mode", "branch_and_bound"]
    _, r1, _, _ = _run(base + ["--threads", "1"], capsys)
    _, r4, _, _ = _run(base + ["--threads", "4"], capsys)
    assert r1.to_json()["payload_hash"] == r4.to_json()["payload_hash"]
    assert r1.config.hash() == r4.config.hash()


def test_same_config_same_payload(capsys):
    argv = ["grid-sixslices", "--seed", "2"]
    _, a, _, _ = _run(argv, capsys)
    _, b, _, _ = _run(argv, capsys)
    ja, jb = a.to_json(), b.to_json()
    assert ja["config_hash"] == jb["config_hash"] and ja["payload_hash"] == jb["payload_hash"]
    assert json.dumps(ja["payload"], sort_keys=True) == json.dumps(jb["payload"], sort_keys=True)
    assert ja["prng"] == "numpy.PCG64"


def test_pipeline_rejects_non_injective_file(tmp_path, capsys):
    f = tmp_path / "g.json"
    f.write_text(json.dumps({"p": 7, "d": 1, "points": [[1, 0], [2, 1]]}))
    code, _, _, err = _run(["sd-pipeline", "--which", "012inf", "--input", str(f)], capsys)
    assert code == 2 and "[1, 0]" in err and "[2, 1]" in err


def test_cap_violation_names_slope(tmp_path, capsys):
    f = tmp_path / "g.json"
    f.write_text(json.dumps({"p": 7, "points": [[1, 0], [2, 3], [0, 5]], "slopes": [0, 1, "inf"], "cap": 2}))
    code, _, _, err = _run(["sd-verify", "--input", str(f)], capsys)
    assert code == 2 and "slope r = 0" in err


def test_unknown_flag_is_exit_2(capsys):
    code, _, _, err = _run(["exponents", "--bogus"], capsys)
    assert code == 2 and "usage" in err
    code, _, _, _ = _run(["nonsense"], capsys)
    assert code == 2


def test_refuted_verify_names_inequality(tmp_path, capsys):
    f = tmp_path / "g.json"
    f.write_text(json.dumps({"p": 5, "points": [[0, 0], [2, 0], [0, 1], [2, 1]], "slopes": [0, "inf"]}))
    code, _, out, _ = _run(["sd-verify", "--input", str(f), "--alpha", "7/4"], capsys)
    pay = json.loads(out)["payload"]
    assert code == 1 and pay["holds"] is False and "2^7/4" in pay["failing_inequality"]


def test_refuted_certificate_names_step(capsys):
    code, _, out, _ = _run(["grid-bush", "--shading", "concentrated", "--sigma", "1/2"], capsys)
    assert code == 1 and json.loads(out)["payload"]["failing_step"] == "two-ends condition"


@pytest.mark.parametrize("cmd", ["grid-validate", "grid-bush", "grid-maximal"])
def test_grid_commands(cmd, capsys):
    code, rep, _, _ = _run([cmd, "--N", "16", "--kind", "bush"], capsys)
    assert code == 0 and rep.payload


def test_pipelines_from_file(tmp_path, capsys):
    G = Config(13, [(0, 0), (3, 1), (5, 2), (9, 4), (1, 7)])
    f = tmp_path / "g.json"
    save_instance(SdInstance(G, []), f)
    for argv in (["--which", "012inf"], ["--which", "conviviality", "--s", "2", "--slopes", "3,5"],
                 ["--which", "iterate", "--s", "2", "--slopes", "3,5"]):
        code, _, out, _ = _run(["sd-pipeline", "--input", str(f)] + argv, capsys)
        steps = json.loads(out)["payload"]["certificate"]["steps"]
        assert code == 0 and all({"desc", "counts", "constant", "ok"} <= set(s) for s in steps)


def test_advanced_pipeline_from_file(tmp_path, capsys):
    f = tmp_path / "g.json"
    save_instance(SdInstance(Config(13, [(0, 0), (3, 1)]), []), f)
    code, _, _, err = _run(["sd-pipeline", "--which", "advanced", "--M", "1", "--input", str(f)], capsys)
    assert code == 2 and "Moebius" in err
    save_instance(SdInstance(Config(31, [(0, 0), (3, 1), (5, 2), (9, 4), (1, 7)]), []), f)
    code, _, out, _ = _run(["sd-pipeline", "--which", "advanced", "--M", "1", "--input", str(f)], capsys)
    assert code == 0 and json.loads(out)["payload"]["certificate"]["verdict"] == "valid"


def test_instance_round_trip_bytes(tmp_path):
    G = Config(7, [(1, 0), (2, 3)])
    f1, f2 = tmp_path / "a.json", tmp_path / "b.json"
    save_instance(SdInstance(G, [INF]), f1)
    inst = load_instance(f1)
    assert inst.R == [INF]
    save_instance(inst, f2)
    assert f1.read_bytes() == f2.read_bytes()


def test_family_round_trip(tmp_path):
    F = generate_family("random", 2, 16, count=5, seed=1)
    f = tmp_path / "fam.json"
    save_instance((F, full_shading(F)), f)
    G, Y = load_instance(f)
    assert len(G) == 5 and Y.mass == full_shading(F).mass


def test_schema_errors(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text("{not json")
    with pytest.raises(InputError, match="line 1"):
        load_instance(f)
    f.write_text(json.dumps({"points": []}))
    with pytest.raises(InputError, match="'p'"):
        load_instance(f)
    with pytest.raises(InputError):
        load_instance(tmp_path / "missing.json")


def test_empty_payload_csv_has_header_only():
    rep = Report(ExperimentConfig("exponents"), {})
    assert emit_report(rep, "csv") == "\n"
    text = emit_report(rep, "json")
    assert json.loads(text)["payload"] == {}


def test_config_defaults():
    c = ExperimentConfig("x", seed=None, budget=None)
    assert c.seed == 0 and c.budget == 10 ** 7
    with pytest.raises(InputError):
        ExperimentConfig("x", format="xml")
