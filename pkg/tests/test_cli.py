import json
import subprocess
import sys

import pytest

from kgshield.cli import main
from kgshield.graph import load_graph

FIG1 = "src,dst,weight\nA,B,0.30\nE,B,0.35\nA,D,0.55\nD,E,0.60\nF,E,0.10\n"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def er30(tmp_path, capsys):
    path = tmp_path / "g.csv"
    code, _, _ = run(capsys, "generate", "--model", "erdos", "--n", 30, "--m", 90, "--seed", 3,
                     "--weights", "economic", "-o", path)
    assert code == 0
    return path


def test_generate_erdos_default_edges(tmp_path, capsys):
    out = tmp_path / "g.csv"
    code, text, _ = run(capsys, "generate", "--model", "erdos", "--n", 100, "--seed", 7,
                        "--weights", "uniform", "-o", out)
    assert code == 0
    assert "vertices=100 edges=231 weighted=yes" in text
    g = load_graph(out)
    assert g.num_edges == 231


def test_generate_powerlaw_economic(tmp_path, capsys):
    out = tmp_path / "g.csv"
    assert run(capsys, "generate", "--model", "powerlaw", "--n", 500, "--alpha", 5, "--weights",
               "economic", "--seed", 1, "-o", out)[0] == 0
    g = load_graph(out)
    sums = {}
    for e in g.edges:
        sums[e.dst] = sums.get(e.dst, 0.0) + e.weight
    assert max(sums.values()) <= 1.0


def test_usage_errors_exit_two(tmp_path, capsys):
    assert run(capsys, "generate", "--model", "erdos", "-o", tmp_path / "g.csv")[0] == 2
    assert run(capsys, "generate", "--model", "powerlaw", "--n", 10, "-o", tmp_path / "g.csv")[0] == 2
    g = tmp_path / "f.csv"
    g.write_text(FIG1)
    code, _, err = run(capsys, "anonymize", "-i", g, "-o", tmp_path / "a.csv", "--algo", "kguard", "-k", 2)
    assert code == 2 and "-x" in err
    assert run(capsys, "reason", "-i", g, "--rules", "bogus", "-o", tmp_path / "d.csv")[0] == 2
    assert run(capsys, "anonymize", "-i", g, "-o", tmp_path / "a.csv", "-k", 2, "--queries", "holding:0")[0] == 2


def test_runtime_errors_exit_one(tmp_path, capsys):
    code, _, err = run(capsys, "reason", "-i", tmp_path / "missing.csv", "--rules", "none", "-o", tmp_path / "d.csv")
    assert code == 1 and err
    bad = tmp_path / "bad.csv"
    bad.write_text("A,B,2.0\n")
    assert run(capsys, "reason", "-i", bad, "--rules", "none", "-o", tmp_path / "d.csv")[0] == 1
    unweighted = tmp_path / "u.csv"
    unweighted.write_text("src,dst\nA,B\n")
    assert run(capsys, "reason", "-i", unweighted, "--rules", "control", "-o", tmp_path / "d.csv")[0] == 1


@pytest.mark.parametrize("rules, body, rows", [
    ("control", FIG1, ["A,B,control", "A,D,control", "A,E,control", "D,E,control"]),
    ("none", FIG1, []),
    ("reach", "src,dst,weight\nu,v,0.3\nv,w,0.4\n", ["u,v,reach", "u,w,reach", "v,w,reach"]),
])
def test_reason_rows(tmp_path, capsys, rules, body, rows):
    g = tmp_path / "g.csv"
    g.write_text(body)
    out = tmp_path / "d.csv"
    assert run(capsys, "reason", "-i", g, "--rules", rules, "-o", out)[0] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "src,dst,kind" and lines[1:] == rows


def test_reason_answers(tmp_path, capsys):
    g = tmp_path / "g.csv"
    g.write_text(FIG1)
    ans = tmp_path / "ans.txt"
    code, text, _ = run(capsys, "reason", "-i", g, "--rules", "control", "-o", tmp_path / "d.csv",
                        "--query", "holding:2", "--answers", ans)
    assert code == 0 and "holding:2: 1 answers" in text
    assert ans.read_text() == "A\n"


def test_disconnected_needs_flag(tmp_path, capsys):
    g = tmp_path / "g.csv"
    g.write_text("src,dst,weight\nA,B,0.3\nC,D,0.4\n")
    code, _, err = run(capsys, "anonymize", "-i", g, "-o", tmp_path / "a.csv", "-k", 2, "--rules", "control")
    assert code == 1 and "component sizes: 2, 2" in err
    assert run(capsys, "anonymize", "-i", g, "-o", tmp_path / "a.csv", "-k", 2, "--rules", "control",
               "--per-component")[0] == 0


def test_anonymize_verify_evaluate_round_trip(tmp_path, capsys, er30):
    rel, mp = tmp_path / "a.csv", tmp_path / "map.json"
    code, _, err = run(capsys, "anonymize", "-i", er30, "-o", rel, "--algo", "kguard", "-k", 2, "-x", 3,
                       "--rules", "control", "--queries", "two-owns,two-q-owns:0.5", "-M", 3, "--seed", 42,
                       "--emit-mapping", mp, "--bucket-stats", "--per-component")
    assert code == 0 and "never publish" in err
    man_path = tmp_path / "a.manifest.json"
    man = json.loads(man_path.read_text())
    assert man["params"]["k"] == 2 and man["params"]["x"] == 3 and man["bucket_stats"]
    assert man["replay"][0] == "anonymize"

    code, text, _ = run(capsys, "verify", "--original", er30, "--released", rel, "--manifest", man_path)
    assert code == 0 and json.loads(text)["passed"] is True

    code, text, _ = run(capsys, "evaluate", "--original", er30, "--released", rel, "--manifest", man_path,
                        "--delta")
    doc = json.loads(text)
    assert code == 0 and doc["delta_anonymity"] == 1.0
    assert 0.0 <= doc["utility_sym"] <= 1.0 and doc["nodes_overhead_pct"] > 0

    code, text, _ = run(capsys, "evaluate", "--original", er30, "--released", rel, "--mapping", mp,
                        "-k", 2, "-x", 3, "--sample", 25, "--rules", "control")
    doc = json.loads(text)
    assert code == 0 and doc["sampled"] == 25
    assert set(doc) >= {"utility_u", "utility_sym", "w1_degree", "w1_weight", "nodes_overhead_pct",
                        "delta_anonymity", "augmentation_intact"}


def test_verify_without_mapping_is_usage_error(tmp_path, capsys, er30):
    rel = tmp_path / "a.csv"
    assert run(capsys, "anonymize", "-i", er30, "-o", rel, "-k", 2, "--rules", "control", "-M", 2,
               "--per-component")[0] == 0
    code, _, err = run(capsys, "verify", "--original", er30, "--released", rel, "-k", 2, "-x", 2)
    assert code == 2 and "--mapping" in err
    code, _, err = run(capsys, "evaluate", "--original", er30, "--released", rel, "--queries", "two-owns")
    assert code == 2 and "identity map" in err


def test_evaluate_identity_pair(tmp_path, capsys, er30):
    code, text, _ = run(capsys, "evaluate", "--original", er30, "--released", er30, "--queries", "two-owns",
                        "--rules", "control")
    doc = json.loads(text)
    assert code == 0
    assert doc["utility_u"] == doc["utility_sym"] == 0.0
    assert doc["w1_degree"] == doc["w1_weight"] == 0.0 and doc["nodes_overhead_pct"] == 0.0


def test_failed_verification_exits_one(tmp_path, capsys, er30):
    # the original itself keeps labels and weights, so verification must fail
    code, text, _ = run(capsys, "verify", "--original", er30, "--released", er30, "-k", 2, "-x", 2,
                        "--rules", "control")
    doc = json.loads(text)
    assert code == 1 and doc["passed"] is False
    assert doc["labels_disjoint"]["passed"] is False


def test_seed_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("KGSHIELD_SEED", "5")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run(capsys, "generate", "--model", "erdos", "--n", 20, "-o", a)
    run(capsys, "generate", "--model", "erdos", "--n", 20, "--seed", 5, "-o", b)
    assert a.read_bytes() == b.read_bytes()
    monkeypatch.setenv("KGSHIELD_SEED", "five")
    assert run(capsys, "generate", "--model", "erdos", "--n", 20, "-o", a)[0] == 2


def test_same_flags_same_bytes_and_replay(tmp_path, capsys, er30):
    first, second = tmp_path / "one.csv", tmp_path / "two.csv"
    flags = ["-k", 3, "--rules", "control", "--queries", "two-owns", "-M", 3, "--seed", 9, "--per-component"]
    run(capsys, "anonymize", "-i", er30, "-o", first, *flags)
    run(capsys, "anonymize", "-i", er30, "-o", second, *flags)
    assert first.read_bytes() == second.read_bytes()
    replay = json.loads((tmp_path / "one.manifest.json").read_text())["replay"]
    original = first.read_bytes()
    first.unlink()
    assert main(replay) == 0
    assert first.read_bytes() == original


def test_console_entry_point(tmp_path):
    out = tmp_path / "g.csv"
    proc = subprocess.run([sys.executable, "-m", "kgshield.cli", "generate", "--model", "erdos", "--n", "10",
                           "-o", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0 and out.exists()
    proc = subprocess.run([sys.executable, "-m", "kgshield.cli", "frobnicate"], capture_output=True, text=True)
    assert proc.returncode == 2
