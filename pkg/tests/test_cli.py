import io
import json
import subprocess
import sys

import pytest

from pmg.cli import run


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_parse_worked_example():
    code, out, _ = call("parse", "--grammar", "fixture", "--backend", "trie", "--", "cosa pensi che mangi")
    assert code == 0
    steps = [l for l in out.splitlines() if l[:3].strip().isdigit()]
    assert len(steps) == 21
    assert "root: F (tried C, F)" in out


def test_parse_structured():
    code, out, _ = call("parse", "--trace-format", "structured", "--", "poi lo lava")
    rows = [json.loads(l) for l in out.splitlines()]
    assert code == 0
    assert rows[-1]["verdict"] == "grammatical"
    assert rows[0]["op"] == "init"


def test_parse_ungrammatical():
    code, out, _ = call("parse", "--", "che", "pensi")
    assert code == 1 and "no-parse" in out


def test_generate():
    code, out, _ = call("generate", "--backend", "lifo", "--", "cosa tu pensi che io mangi")
    assert code == 0 and "M:<cosa, io>" in out


def test_generate_unknown_choice_is_usage():
    code, _, err = call("generate", "--", "nonsense")
    assert code == 2 and "nonsense" in err


def test_enumerate():
    code, out, _ = call("enumerate", "--max-steps", "3")
    assert code == 0
    assert out == "gianni\nlo\nmario\nsi\n# 4 sentences\n"


def test_bind():
    code, out, _ = call("bind", "--discourse", "b-bsecond")
    assert code == 0
    assert "s2:lo" in out and "s1:mario" in out


def test_bind_unresolved_exits_1(tmp_path):
    f = tmp_path / "d.txt"
    f.write_text("# lo has nobody to refer to\npoi lo lava\n")
    code, out, _ = call("bind", "--discourse", str(f))
    assert code == 1 and "unresolved" in out


def test_compare_shows_lifo_failure():
    code, out, _ = call("compare", "--grammar", "fixture", "--discourse", "b-bprime")
    assert code == 0
    assert "s2:pro: trie s1:gianni | lifo s1:mario" in out


def test_trie_dump():
    code, out, _ = call("trie-dump", "--", "cosa pensi che mangi")
    assert code == 0 and out.startswith("ε\n") and "fem  ids=cosa(1)" in out
    code, out, _ = call("trie-dump", "--discourse", "b-bprime")
    assert code == 0 and "ids=s1:gianni(1)" in out


def test_metrics():
    code, out, _ = call("metrics", "--", "S.D.2p.pl", "S.D.2p.sg")
    assert code == 0 and "S·D·2p·sg  1" in out and "3/4" in out
    code, _, err = call("metrics", "--", "D.S")
    assert code == 2


@pytest.mark.parametrize("argv", [[], ["parse"], ["bogus"], ["bind"], ["parse", "--max-steps", "0", "--", "x"],
                                  ["bind", "--discourse", "no-such-discourse"]])
def test_usage_errors(argv):
    assert call(*argv)[0] == 2


def test_grammar_errors(tmp_path):
    assert call("parse", "--grammar", "missing.file", "--", "x")[0] == 3
    bad = tmp_path / "bad.pmg"
    bad.write_text("item \"x\" : Q\n")
    code, _, err = call("parse", "--grammar", str(bad), "--", "x")
    assert code == 3 and "line 1" in err


def test_output_is_deterministic():
    for argv in (["parse", "--", "poi si lava"], ["compare", "--discourse", "b-bsecond"],
                 ["enumerate", "--max-steps", "10"]):
        assert call(*argv) == call(*argv)


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "pmg", "bind", "--discourse", "b-bprime"],
                       capture_output=True, text=True)
    assert p.returncode == 0
    assert "s2:si" in p.stdout


def test_step_budget_from_environment():
    import os
    env = dict(os.environ, PMG_MAX_STEPS="5")
    p = subprocess.run([sys.executable, "-m", "pmg", "parse", "--", "cosa pensi che mangi"],
                       capture_output=True, text=True, env=env)
    assert p.returncode == 1
