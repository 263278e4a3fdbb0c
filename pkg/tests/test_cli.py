import json

import numpy as np
import pytest

from locmeas import serialize
from locmeas.cli import EXIT_FAILED, EXIT_INPUT, EXIT_INTERNAL, EXIT_OK, main, parse_input_state


@pytest.fixture
def files(tmp_path):
    paths = {k: str(tmp_path / f"{k}.json") for k in ("povm", "enc", "plan")}
    assert main(["generate", "bb84-povm", "-o", paths["povm"]]) == EXIT_OK
    assert main(["generate", "bb84-encoding", "-o", paths["enc"]]) == EXIT_OK
    assert main(["compile", paths["povm"], paths["enc"], "-o", paths["plan"]]) == EXIT_OK
    return paths


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rewrite(path, edit):
    with open(path) as fh:
        doc = json.load(fh)
    edit(doc)
    with open(path, "w") as fh:
        fh.write(serialize.dumps(doc))


def test_compile_bb84_structure(files):
    plan = serialize.plan_from_json(serialize.load_file(files["plan"]))
    assert plan.root.subsystem == 0
    assert all(c.subsystem == 1 for c in plan.root.children)
    assert sorted(plan.labels) == ["00", "01", "10", "11"]


def test_verify_ok(files, capsys):
    code, out, _ = run(capsys, ["verify", files["plan"], files["povm"], files["enc"]])
    doc = json.loads(out)
    assert code == EXIT_OK and doc["passed"] and doc["max_deviation"] < 1e-9


def test_verify_tampered(files, capsys):
    def bump(doc):
        doc["root"]["kraus0"]["entries"][0][0][0] += 1e-3

    rewrite(files["plan"], bump)
    code, out, err = run(capsys, ["verify", files["plan"], files["povm"], files["enc"]])
    assert code == EXIT_FAILED and json.loads(out)["max_deviation"] > 1e-6
    assert "verification failed" in err


def test_verify_feed_forward_violation(files, capsys):
    def reorder(doc):
        doc["root"]["subsystem"] = 1
        doc["root"]["child0"]["subsystem"] = 0

    rewrite(files["plan"], reorder)
    code, out, _ = run(capsys, ["verify", files["plan"], files["povm"], files["enc"]])
    assert code == EXIT_FAILED and not json.loads(out)["audit"]["path_monotonic"]


def test_malformed_povm_names_element(files, capsys, tmp_path):
    def negate(doc):
        doc["elements"][1]["entries"] = [[[-0.25, 0], [0.25, 0]], [[0.25, 0], [-0.25, 0]]]

    rewrite(files["povm"], negate)
    code, _, err = run(capsys, ["compile", files["povm"], files["enc"]])
    assert code == EXIT_INPUT and "element 1" in err


def test_missing_and_broken_files(files, capsys, tmp_path):
    code, _, err = run(capsys, ["compile", str(tmp_path / "nope.json"), files["enc"]])
    assert code == EXIT_INPUT and "nope.json" in err
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(capsys, ["compile", files["povm"], str(bad)])[0] == EXIT_INPUT


def test_compile_error_exit(capsys, tmp_path):
    # valid POVM of the wrong dimension cannot be compiled
    p = tmp_path / "p.json"
    p.write_text(serialize.dumps({**serialize.header("povm"), "elements": [serialize.matrix_to_json(np.eye(3))]}))
    e = tmp_path / "e.json"
    assert main(["generate", "random-encoding", "--dims", "2,2", "-o", str(e)]) == EXIT_OK
    assert run(capsys, ["compile", str(p), str(e)])[0] == EXIT_INTERNAL


def test_simulate_exact(files, capsys):
    code, out, _ = run(capsys, ["simulate", files["plan"], files["enc"], "--input", "0"])
    doc = json.loads(out)
    assert code == EXIT_OK and "counts" not in doc
    for k, v in {"00": 0.5, "01": 0.25, "10": 0.0, "11": 0.25}.items():
        assert abs(doc["distribution"][k] - v) < 1e-12


def test_simulate_reproducible(files, capsys):
    argv = ["simulate", files["plan"], files["enc"], "--n", "100000", "--seed", "7"]
    _, out1, _ = run(capsys, argv)
    _, out2, _ = run(capsys, argv + ["--workers", "3"])
    assert out1 == out2
    assert sum(json.loads(out1)["counts"].values()) == 100000


def test_simulate_outside_subspace(files, capsys):
    code, out, err = run(capsys, ["simulate", files["plan"], files["enc"], "--input", "[1, 0, 0, 0]"])
    doc = json.loads(out)
    assert code == EXIT_OK and doc["outside_subspace"] and "warning" in err


def test_bad_input_state(files, capsys):
    assert run(capsys, ["simulate", files["plan"], files["enc"], "--input", "[1, 0, 0]"])[0] == EXIT_INPUT
    assert run(capsys, ["simulate", files["plan"], files["enc"], "--input", "zz"])[0] == EXIT_INPUT


def test_parse_input_state():
    assert np.allclose(parse_input_state("[[0, 1], 0]", 4), [1j, 0])
    assert np.allclose(parse_input_state("-", 4), np.array([1, -1]) / np.sqrt(2))


def test_demo_bb84(capsys):
    code, out, _ = run(capsys, ["demo", "bb84", "--phi", str(np.pi / 16)])
    doc = json.loads(out)
    assert code == EXIT_OK and doc["strategy"] == "Interior"
    assert abs(doc["distribution"]["00"] - 0.5) < 1e-12
    _, again, _ = run(capsys, ["demo", "bb84", "--phi", str(np.pi / 16)])
    assert again == out


def test_demo_qss(capsys):
    code, out, _ = run(capsys, ["demo", "qss", "--encoding", "generic", "--check", "both"])
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["transfer"]["min_deviation"] > 1e-3 and doc["basis"]["commutator_norm"] > 1e-6
    code, out, _ = run(capsys, ["demo", "qss", "--encoding", "ghz", "--check", "basis"])
    assert "excluded" in json.loads(out)["basis"]


def test_demo_qss_from_file(capsys, tmp_path):
    e = tmp_path / "e.json"
    main(["generate", "random-encoding", "--dims", "2,2", "--seed", "3", "-o", str(e)])
    assert run(capsys, ["demo", "qss", "--encoding", str(e), "--check", "basis"])[0] == EXIT_OK
    main(["generate", "random-encoding", "--dims", "2,2,2", "-o", str(e)])
    assert run(capsys, ["demo", "qss", "--encoding", str(e)])[0] == EXIT_INPUT


def test_random_encoding_plan_round_trip(tmp_path, capsys):
    e, p, plan = (str(tmp_path / n) for n in ("e.json", "p.json", "plan.json"))
    main(["generate", "random-encoding", "--dims", "2,2,2", "--seed", "5", "-o", e])
    main(["generate", "random-povm", "--outcomes", "5", "--seed", "5", "-o", p])
    assert main(["compile", p, e, "-o", plan]) == EXIT_OK
    text = open(plan).read()
    again = serialize.dumps(serialize.plan_to_json(serialize.plan_from_json(json.loads(text))))
    assert again == text
    assert run(capsys, ["verify", plan, p, e])[0] == EXIT_OK


def test_compile_stdout_deterministic(files, capsys):
    _, a, _ = run(capsys, ["compile", files["povm"], files["enc"]])
    _, b, _ = run(capsys, ["compile", files["povm"], files["enc"], "--grouping", "balanced"])
    assert a == b == open(files["plan"]).read()
