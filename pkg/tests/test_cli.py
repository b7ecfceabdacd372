from __future__ import annotations

import json
import shutil
import subprocess
from pathlib import Path

import pytest

from norma.cli import CliConfig, UsageError, main

CORPUS = Path(__file__).resolve().parents[1] / "src" / "norma" / "corpus"
GOLDEN = Path(__file__).resolve().parent / "golden"
RUNNING = str(CORPUS / "running.rbr")


def cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_check(capsys):
    code, out, _ = cli(capsys, "check", RUNNING)
    assert code == 0
    assert out.strip() == "ok: 1 data type(s), 5 procedure(s), 7 rule(s)"


def test_run_text(capsys):
    code, out, _ = cli(capsys, "run", RUNNING, "--entry", "main", "--args", "[]", "--trace")
    assert code == 0
    lines = out.splitlines()
    assert lines[:3] == ["outputs: {r': 2}", "steps: 24", "cost: 0"]
    assert lines[3].split()[:4] == ["(1)·ε", "(2)·4", "(1)·ε", "(2)·6"]


def test_run_json(capsys):
    code, out, _ = cli(capsys, "run", RUNNING, "--entry", "factSum", "--args", '[["Cons", 3, ["Nil"]]]', "--json")
    assert code == 0
    data = json.loads(out)
    assert data["outputs"] == {"sum'": 6}


def test_run_budget_exhausted(capsys):
    code, _, err = cli(capsys, "run", str(CORPUS / "ticks.rbr"), "--entry", "walk",
                       "--args", '[["Cons", 1, ["Cons", 2, ["Nil"]]]]', "--budget", "10")
    assert code == 1 and err


def test_infer_json(capsys):
    code, out, _ = cli(capsys, "infer", RUNNING, "--json")
    data = json.loads(out)
    assert code == 0 and data["iterations"] <= 10
    rule4 = data["rules"][3]
    assert set(rule4["vars"]["l"]) == {"Int", "IntList"}


def test_abstract_golden(capsys):
    code, out, _ = cli(capsys, "abstract", RUNNING, "--norm", "max", "--format", "cofloco-like", "--linearize")
    assert code == 0
    assert out == (GOLDEN / "running_max_cofloco.txt").read_text()


def test_abstract_is_deterministic(capsys):
    runs = {cli(capsys, "abstract", RUNNING, "--norm", "sum", "--format", "native-json")[1] for _ in range(3)}
    assert len(runs) == 1


def test_cofloco_needs_linearize(capsys):
    code, _, err = cli(capsys, "abstract", RUNNING, "--norm", "max", "--format", "cofloco-like")
    assert code == 2 and "--linearize" in err


def test_cofloco_rejects_keep(capsys):
    code, _, _ = cli(capsys, "abstract", RUNNING, "--norm", "max", "--format", "cofloco-like",
                     "--linearize", "--neg-inf", "keep")
    assert code == 2


def test_config_defaults():
    with pytest.raises(UsageError):
        CliConfig(fmt="cofloco-like")
    assert CliConfig().abstraction.neg_inf == "keep"


def test_verify(capsys):
    code, out, _ = cli(capsys, "verify", RUNNING, "--norm", "max", "--entry", "main", "--args", "[]")
    assert (code, out.strip()) == (0, "verified: 24 step(s)")
    code, out, _ = cli(capsys, "verify", RUNNING, "--norm", "sum", "--entry", "main", "--args", "[]", "--json")
    assert json.loads(out)["result"] == "verified"


def test_polymorphic_needs_mono(capsys):
    poly = str(CORPUS / "polrunning.rbr")
    code, _, err = cli(capsys, "abstract", poly, "--norm", "max")
    assert code == 2 and "--mono" in err
    code, out, _ = cli(capsys, "verify", poly, "--norm", "max", "--mono", "--entry", "factSum",
                       "--args", '[["Cons", 3, ["Nil"]]]')
    assert code == 0 and out.startswith("verified")


def test_mono(capsys):
    code, out, _ = cli(capsys, "mono", str(CORPUS / "polrunning.rbr"))
    assert code == 0 and "head$Int :: <List$Int> * <Int>" in out


@pytest.mark.parametrize(
    "term,ty,norm,want",
    [
        ("Cons(3, Cons(-3, Nil))", "Int", "max", "3"),
        ("Cons(3, Cons(-3, Nil))", "IntList", "max", "3"),
        ("Nil", "IntList", "max", "1"),
        ("Cons(1, Cons(2, Nil))", "Int", "sum", "3"),
        ("Nil", "Int", "max", "-inf"),
    ],
)
def test_measure(capsys, term, ty, norm, want):
    code, out, _ = cli(capsys, "measure", RUNNING, "--term", term, "--type", ty, "--norm", norm)
    assert (code, out.strip()) == (0, want)


def test_measure_term_size(capsys):
    trees = str(CORPUS / "trees.rbr")
    assert cli(capsys, "measure", trees, "--term", "C(E, C(E, N))", "--norm", "termsize")[:2] == (0, "5\n")
    code, _, err = cli(capsys, "measure", RUNNING, "--term", "Cons(1, Nil)", "--norm", "termsize")
    assert code == 2 and err.startswith("IntegerInTerm")


@pytest.mark.parametrize(
    "argv",
    [
        ["run", RUNNING, "--entry", "nope", "--args", "[]"],
        ["run", RUNNING, "--entry", "main", "--args", "{"],
        ["run", RUNNING, "--entry", "main", "--args", '[["Bogus"]]'],
        ["check", "/nonexistent.rbr"],
        ["measure", RUNNING, "--term", "x", "--norm", "max"],
        ["abstract", RUNNING],
        ["frobnicate"],
    ],
)
def test_usage_errors(capsys, argv):
    assert main(argv) == 2


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.rbr"
    bad.write_text("data = \n")
    code, _, err = cli(capsys, "check", str(bad))
    assert code == 2 and err.startswith("ParseError")


@pytest.mark.skipif(shutil.which("norma") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["norma", "check", RUNNING], capture_output=True, text=True, env={"NORMA_COLOR": "0", "PATH": "/usr/bin:/usr/local/bin"})
    assert res.returncode == 0 and res.stdout.startswith("ok:")
