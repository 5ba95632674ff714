import json

import pytest

from coarsekit import report as rep
from coarsekit.cli import main
from coarsekit.config import ConfigError, parse_config

TREE = {"kind": "fixture", "name": "rooted-tree", "params": {"branching": 2, "depth": 5}}
STAR = {"kind": "fixture", "name": "star", "params": {"rays": 3, "depth": 40}}
PLANE = {"kind": "normed", "params": {"dimension": 2, "p": 2.0}}

CONFIGS = {
    "check-axioms": {"space": TREE, "product": {"construction": "gromov"}, "ladders": {"R": [1, 2]}},
    "delta": {"space": TREE},
    "compare": {"space": TREE, "products": [{"construction": "gromov"},
                                            {"construction": "family", "params": {"D": 1}}],
                "ladders": {"radii": [3, 4, 5], "keys": [1, 2]}, "sandwich": {"shift": 1}},
    "boundary-profile": {"space": STAR, "product": {"construction": "gromov"},
                         "ladders": {"radii": [10, 20, 40], "n": [2]}},
    "function-test": {"space": PLANE, "product": {"construction": "compactification",
                                                   "params": {"model": "ball"}},
                      "function": {"builtin": "radial"},
                      "sample": {"strategy": "seeded-random", "r_max": 50, "budget": 300},
                      "max_pair_distance": 5},
}


def run_cli(tmp_path, command, doc, *extra, name="cfg.json"):
    cfg = tmp_path / name
    cfg.write_text(json.dumps(dict(doc, command=command)))
    out = tmp_path / "out"
    out.mkdir(exist_ok=True)
    code = main([command, "--config", str(cfg), "--out", str(out), *extra])
    path = out / f"{command}.json"
    return code, (json.loads(path.read_text()) if path.exists() else None), out


@pytest.mark.parametrize("command", sorted(CONFIGS))
def test_commands_pass(tmp_path, command):
    code, doc, _ = run_cli(tmp_path, command, CONFIGS[command])
    assert code == 0, doc["error"]
    assert doc["status"] == "pass" and doc["exit_code"] == 0
    assert doc["command"] == command


def test_fixtures_list(tmp_path, capsys):
    assert main(["fixtures", "list", "--out", str(tmp_path)]) == 0
    names = [f["name"] for f in json.loads(capsys.readouterr().out)["fixtures"]]
    assert {"paper-grid", "paper-Y", "paper-Z", "star", "euclidean"} <= set(names)


def test_violation_exit_code(tmp_path):
    doc = {"space": {"kind": "fixture", "name": "paper-grid"},
           "product": {"construction": "restriction",
                       "params": {"base": {"construction": "gromov"}, "subspace": "paper-Y"}},
           "sample": {"r_max": 200}, "ladders": {"R": [1]}, "cp4": {"cap": 10}}
    code, rpt, _ = run_cli(tmp_path, "check-axioms", doc)
    assert code == 2
    assert rpt["result"]["verdicts"]["cp4"] == "no-witness-within-cap"


@pytest.mark.parametrize("doc,path", [
    ({"space": TREE, "product": {"construction": "family", "params": {"D": 0.5}}}, "product.params.D"),
    ({"space": {"kind": "graph", "params": {"vertices": 3, "edges": [[0, 1, 1], [1, 2, -2]]}}},
     "space.params.edges[1][2]"),
    ({"space": TREE, "bogus": 1}, "bogus"),
    ({"space": TREE, "sample": {"strategy": "seeded-random"}}, "sample.budget"),
    ({"space": PLANE}, "sample.r_max"),
    ({"space": TREE, "seed": -1}, "seed"),
])
def test_config_rejections(doc, path):
    with pytest.raises(ConfigError) as e:
        parse_config(json.dumps(dict(doc, command="check-axioms")))
    assert e.value.path == path


def test_error_exit_writes_report(tmp_path):
    doc = {"space": TREE, "product": {"construction": "family", "params": {"D": 0.5}}}
    code, rpt, _ = run_cli(tmp_path, "check-axioms", doc)
    assert code == 1
    assert rpt["status"] == "error" and "product.params.D" in rpt["error"]


def test_malformed_json(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert main(["delta", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "malformed JSON" in json.loads((tmp_path / "delta.json").read_text())["error"]


def test_refuses_to_overwrite(tmp_path):
    code, first, out = run_cli(tmp_path, "delta", CONFIGS["delta"])
    before = (out / "delta.json").read_text()
    assert run_cli(tmp_path, "delta", CONFIGS["delta"])[0] == 1
    assert (out / "delta.json").read_text() == before
    assert run_cli(tmp_path, "delta", CONFIGS["delta"], "--overwrite")[0] == 0


@pytest.mark.parametrize("command", sorted(CONFIGS))
def test_reports_identical_apart_from_timestamp(tmp_path, command):
    texts = []
    for k, workers in enumerate(("1", "3")):
        d = tmp_path / f"run{k}"
        d.mkdir()
        code, _, out = run_cli(d, command, CONFIGS[command], "--seed", "7", "--workers", workers)
        texts.append((out / f"{command}.json").read_text())
    assert rep.strip_timestamp(texts[0]) == rep.strip_timestamp(texts[1])
    lines = [[ln for ln in t.splitlines() if '"timestamp"' not in ln] for t in texts]
    assert lines[0] == lines[1]


def test_seed_changes_sampled_report(tmp_path):
    texts = []
    for seed in ("1", "2"):
        d = tmp_path / seed
        d.mkdir()
        _, _, out = run_cli(d, "function-test", CONFIGS["function-test"], "--seed", seed)
        texts.append(rep.strip_timestamp((out / "function-test.json").read_text()))
    assert texts[0] != texts[1]


def test_csv_and_dot_outputs(tmp_path):
    code, _, out = run_cli(tmp_path, "check-axioms", CONFIGS["check-axioms"], "--csv")
    assert code == 0
    assert (out / "check-axioms-rho1.csv").read_text().startswith("key,value")
    code, _, out = run_cli(tmp_path, "boundary-profile", CONFIGS["boundary-profile"], "--dot")
    assert code == 0
    dots = list(out.glob("boundary-profile*.dot"))
    assert dots and dots[0].read_text().startswith(("digraph", "graph"))


def test_config_command_mismatch(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "delta", "space": TREE}))
    assert main(["check-axioms", "--config", str(cfg), "--out", str(tmp_path)]) == 1
