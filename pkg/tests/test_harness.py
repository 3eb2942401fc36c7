import hashlib
import io
import json
import subprocess
import sys

import jsonschema
import pytest

from chargesim.errors import MalformedInputError, UnknownScenarioError
from chargesim.harness import cli, reports, scenarios
from chargesim.standards import StandardId

from conftest import GOLDEN_DIR

GOLDEN = ("dos-cc", "deadlock", "can-overheat")

TRACE_SCHEMA = {
    "type": "object",
    "required": ["t_ms", "source", "kind", "data"],
    "additionalProperties": False,
    "properties": {
        "t_ms": {"type": "integer", "minimum": 0},
        "source": {"enum": ["ev", "evse", "attacker", "bms", "countermeasure"]},
        "kind": {"type": "string", "minLength": 1},
        "data": {"type": "object"},
    },
}


def invoke(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


class TestLibrary:
    def test_names_unique_and_buildable(self):
        for name in scenarios.LIBRARY:
            sc = scenarios.build(name)
            assert sc.name == name
            assert sc.expected

    def test_unknown(self):
        with pytest.raises(UnknownScenarioError):
            scenarios.build("meltdown")

    @pytest.mark.parametrize("name", list(scenarios.LIBRARY))
    def test_default_standard_passes(self, name):
        sc = scenarios.build(name)
        assert all(r.passed for r in scenarios.check(sc.run(0), sc.expected))

    @pytest.mark.parametrize("std", list(StandardId), ids=str)
    def test_dos_everywhere(self, std):
        sc = scenarios.build("dos-cc", std)
        assert all(r.passed for r in scenarios.check(sc.run(0), sc.expected))

    def test_deadlock_fails_on_ccs_ii(self):
        sc = scenarios.build("deadlock", "ccs-ii")
        [res] = scenarios.check(sc.run(0), sc.expected)
        assert res.name == "gun_removable" and not res.passed


class TestScenarioFiles:
    @pytest.mark.parametrize("name", list(scenarios.LIBRARY))
    def test_dict_round_trip(self, name):
        sc = scenarios.build(name)
        again = scenarios.scenario_from_dict(json.loads(json.dumps(scenarios.scenario_to_dict(sc))))
        assert again.run(3).trace_jsonl() == sc.run(3).trace_jsonl()

    def test_custom_payloads_and_overrides(self, tmp_path):
        doc = {
            "name": "custom", "standard": "GB/T 20234.3", "thermal": "calibrated", "advertised_duty": 85,
            "wiring": {"can_tap": True, "cp_duty_override": None, "cc_override": None},
            "can_payloads": {"0": ["7E0#100C010203040506", "7E0#2107085A0A0B0C0D"]},
            "script": [{"t": 0, "kind": "plug-in"}, {"t": 1000, "kind": "button-press"},
                       {"t": 1500, "kind": "button-release"},
                       {"t": 2000, "kind": "attacker-cmd", "frame": "03000003"},
                       {"t": 7200000, "kind": "tick"}],
            "expected": {"bms_overridden": True, "final_bms_temp_min_c": 56.0},
        }
        path = tmp_path / "s.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        sc = scenarios.load_scenario(path)
        assert sc.standard is StandardId.GBT_20234_3
        assert all(r.passed for r in scenarios.check(sc.run(0), sc.expected))

    @pytest.mark.parametrize("doc", [
        "[]", "{", '{"script": []}', '{"standard": "nacs", "script": [{"t": 0}]}',
        '{"standard": "mars", "script": []}',
        '{"standard": "nacs", "script": [], "expected": {"vibes": 1}}',
        '{"standard": "nacs", "script": [], "thermal": {"alpha": -1}}',
        '{"standard": "nacs", "script": [], "can_payloads": {"0": ["zz"]}}',
    ])
    def test_malformed(self, tmp_path, doc):
        path = tmp_path / "bad.json"
        path.write_text(doc, encoding="utf-8")
        with pytest.raises(MalformedInputError):
            scenarios.load_scenario(path)


class TestReports:
    def test_table1(self):
        rep = reports.verify_table1()
        assert rep.ok and len(rep.cells) == 14
        zero = next(c for c in rep.cells if c.standard == "gbt-20234-3" and c.column == "unpressed")
        assert zero.achieved_ohm == 0 and zero.computed_deviation == 0.0
        assert "14/14" in rep.render()

    def test_matrix(self):
        rep = reports.matrix()
        assert rep.matches_reference, rep.mismatches()
        assert rep.grid["deadlock"][StandardId.CCS_II] is False
        assert rep.grid["can"][StandardId.SAE_J1772] is False

    def test_countermeasure_small(self):
        rep = reports.eval_countermeasure(5, seed=1)
        assert rep.ok and rep.genuine == 70 and rep.spoofers == 140
        assert rep.legacy_flagged == rep.legacy == 70
        with pytest.raises(ValueError):
            reports.eval_countermeasure(0)


class TestCli:
    def test_run_success(self):
        code, out = invoke("run", "dos-cc")
        assert code == 0 and "PASS" in out

    def test_predicate_failure(self):
        assert invoke("run", "deadlock", "--standard", "ccs-ii")[0] == 1

    def test_can_overheat_nacs(self):
        code, out = invoke("--json", "run", "can-overheat", "--standard", "nacs")
        assert code == 0 and json.loads(out)["passed"] is True

    def test_unknown_scenario(self):
        assert invoke("run", "meltdown")[0] == 2

    def test_usage_errors(self):
        assert invoke()[0] == 2
        assert invoke("run", "dos-cc", "--standard", "chademo")[0] == 2
        assert invoke("eval-countermeasure", "--trials", "0")[0] == 2
        assert invoke("frobnicate")[0] == 2

    def test_malformed_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json", encoding="utf-8")
        assert invoke("run", str(bad))[0] == 3
        assert invoke("run", str(tmp_path / "missing.json"))[0] == 3

    def test_file_scenario_with_standard_override(self, tmp_path):
        path = tmp_path / "dl.json"
        path.write_text(json.dumps(scenarios.scenario_to_dict(scenarios.build("deadlock"))), encoding="utf-8")
        assert invoke("run", str(path))[0] == 0
        assert invoke("run", str(path), "--standard", "ccs-ii")[0] == 1

    def test_trace_file(self, tmp_path):
        path = tmp_path / "t.jsonl"
        assert invoke("run", "deadlock", "--trace", str(path))[0] == 0
        assert path.read_text(encoding="utf-8") == scenarios.build("deadlock").run(0).trace_jsonl()

    def test_reports(self, tmp_path):
        assert invoke("verify-table1")[0] == 0
        assert invoke("matrix")[0] == 0
        code, out = invoke("--json", "eval-countermeasure", "--trials", "3", "--seed", "4")
        assert code == 0 and json.loads(out)["false_positives"] == 0
        code, out = invoke("list-standards")
        assert code == 0 and "gbt-20234-3" in out
        target = tmp_path / "profiles.json"
        assert invoke("export-profiles", str(target))[0] == 0
        assert len(json.loads(target.read_text(encoding="utf-8"))) == 7
        assert invoke("list-scenarios")[0] == 0

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "chargesim", "run", "deadlock", "--standard", "ccs-ii"],
                              capture_output=True, text=True)
        assert proc.returncode == 1


class TestTraces:
    @pytest.mark.parametrize("name", list(scenarios.LIBRARY))
    def test_schema(self, name):
        for line in scenarios.build(name).run(0).trace_jsonl().splitlines():
            jsonschema.validate(json.loads(line), TRACE_SCHEMA)

    @pytest.mark.parametrize("name", GOLDEN)
    def test_golden(self, name, update_golden):
        path = GOLDEN_DIR / f"{name}.jsonl"
        text = scenarios.build(name).run(0).trace_jsonl()
        if update_golden:
            path.write_text(text, encoding="utf-8", newline="\n")
        assert text == path.read_text(encoding="utf-8")

    @pytest.mark.parametrize("name", list(scenarios.LIBRARY))
    @pytest.mark.parametrize("seed", [0, 17, 2**63])
    def test_byte_identical_reruns(self, name, seed):
        digest = {hashlib.sha256(scenarios.build(name).run(seed).trace_jsonl().encode()).hexdigest()
                  for _ in range(2)}
        assert len(digest) == 1
