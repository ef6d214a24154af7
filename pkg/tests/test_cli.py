"""Command line behavior, driven through main() with captured output."""

import json
import subprocess
import sys

import pytest

from hierax.cli import main

from conftest import FIXTURE_DIR, load_fixture

F1 = str(FIXTURE_DIR / "f1_two_gate.json")
F2 = str(FIXTURE_DIR / "f2_xor_hier.json")


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidate:
    def test_clean_schematic(self, capsys):
        code, out, err = run(["validate", F1], capsys)
        assert code == 0
        assert out == "ok\n"

    def test_violations_are_listed(self, tmp_path, capsys):
        doc = load_fixture("f1_two_gate.json")
        doc.pop("connections")
        path = tmp_path / "broken.json"
        path.write_text(json.dumps(doc))
        code, out, err = run(["validate", str(path)], capsys)
        assert code == 1
        assert "dangling-port" in out

    def test_missing_file(self, capsys):
        code, out, err = run(["validate", "/no/such/file.json"], capsys)
        assert code == 1
        assert "cannot read" in err

    def test_duplicate_keys_rejected(self, tmp_path, capsys):
        path = tmp_path / "dup.json"
        path.write_text('{"system_inputs": [], "system_inputs": []}')
        code, out, err = run(["validate", str(path)], capsys)
        assert code == 1
        assert "error:" in err


class TestCompile:
    def test_dump_contains_network_and_tree(self, capsys):
        code, out, err = run(["compile", F2], capsys)
        assert code == 0
        assert "XOR1.out" in out
        assert "level (top)" in out
        assert "link XOR1 merged" in out

    def test_explicit_input_nodes_add_port_variables(self, capsys):
        code, out, err = run(
            ["compile", F1, "--explicit-input-nodes"], capsys
        )
        assert code == 0
        assert "G2.a" in out


class TestDiagnose:
    def test_text_report(self, capsys):
        code, out, err = run(
            ["diagnose", F1, "-e", "I1=1", "-e", "I2=1", "-e", "I3=0",
             "-e", "G2.out=0"],
            capsys,
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "likelihood 0.007437500"
        assert lines[1].startswith("1. G2 [G2.mode]")
        assert "broken=0.840336134" in lines[1]
        assert lines[2].startswith("2. G1 [G1.mode]")

    def test_json_payload_is_canonical(self, capsys):
        code, out, err = run(
            ["diagnose", F1, "--json", "-e", "I1=1", "-e", "I2=1",
             "-e", "I3=0", "-e", "G2.out=0"],
            capsys,
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["likelihood"] == "0.007437500"
        assert payload["posteriors"]["G1.mode"] == [
            "0.831932773", "0.168067227"
        ]
        recoded = json.dumps(
            payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False
        )
        assert out == recoded + "\n"

    def test_expand_opens_the_refinement(self, capsys):
        code, out, err = run(
            ["diagnose", F2, "--json", "--expand", "XOR1", "--scope", "global",
             "-e", "I1=1", "-e", "I2=0", "-e", "XOR1.out=0"],
            capsys,
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["posteriors"]["XOR1.A1.mode"] == [
            "0.663311000", "0.336689000"
        ]

    def test_impossible_observation_exits_two(self, capsys):
        code, out, err = run(
            ["diagnose", F2, "-e", "I1=1", "-e", "I2=1", "-e", "XOR1.out=1"],
            capsys,
        )
        assert code == 2
        assert "impossible evidence" in out

    def test_hidden_variable_needs_expand_first(self, capsys):
        code, out, err = run(
            ["diagnose", F2, "-e", "XOR1.A1.out=0"], capsys
        )
        assert code == 1
        assert "expand" in err

    def test_unknown_evidence_variable(self, capsys):
        code, out, err = run(["diagnose", F1, "-e", "nope=1"], capsys)
        assert code == 1
        assert "error:" in err

    def test_malformed_evidence_flag(self, capsys):
        code, out, err = run(["diagnose", F1, "-e", "I1"], capsys)
        assert code == 1
        assert "VAR=STATE" in err

    def test_expand_atomic_component_fails(self, capsys):
        code, out, err = run(["diagnose", F1, "--expand", "G1"], capsys)
        assert code == 1


class TestOracle:
    def test_prior_marginal_line(self, capsys):
        code, out, err = run(
            ["oracle", F2, "--query", "XOR1.mode"], capsys
        )
        assert code == 0
        assert out == "(0.9509900499, 0.0490099501)\n"

    def test_conditioned_marginal(self, capsys):
        # exact posterior is 10000/29701, checked with fractions by hand
        code, out, err = run(
            ["oracle", F2, "-e", "I1=1", "-e", "I2=0", "-e", "XOR1.out=0",
             "--query", "XOR1.A1.mode"],
            capsys,
        )
        assert code == 0
        assert out == "(0.6633109996, 0.3366890004)\n"

    def test_full_dump_is_sorted(self, capsys):
        code, out, err = run(["oracle", F1], capsys)
        assert code == 0
        names = [line.split(":")[0] for line in out.splitlines()]
        assert names == sorted(names)
        assert "G1.mode" in names

    def test_unknown_query_variable(self, capsys):
        code, out, err = run(["oracle", F1, "--query", "nope"], capsys)
        assert code == 1


def test_usage_error_exits_one(capsys):
    assert main([]) == 1


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "hierax.cli", "oracle", F2,
         "--query", "XOR1.mode"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout == "(0.9509900499, 0.0490099501)\n"
