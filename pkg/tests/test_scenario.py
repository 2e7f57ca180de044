import json
import subprocess
import sys

import pytest

from tapo import scenario as scn
from tapo.scenario import (EXIT_ABORTED, EXIT_EXPECTATION_FAILED, EXIT_OK,
                           ScriptedAnswerer, replay, resolve_fuel,
                           run_file, run_scenario, run_scenario_text)

CURRY_V_ANSWERS = ["t", "f", "t",
                   {"trust": "high", "certificates": ["provenance"]},
                   {"trust": "high", "certificates": ["provenance"]},
                   "t"]


class TestFixtures:
    @pytest.mark.parametrize("name", [
        "curry_u.tapo", "curry_v.tapo", "curry_v_lowtrust.tapo",
        "search_refine.tapo", "search_stabilize_fuel.tapo",
        "search_stabilize_final.tapo", "browsing.tapo", "glue_conflict.tapo",
    ])
    def test_fixture_meets_expectations(self, fixture_path, name):
        trace, status = run_scenario(fixture_path(name))
        assert status == EXIT_OK

    @pytest.mark.parametrize("name", [
        "curry_u.tapo", "curry_v.tapo", "browsing.tapo",
        "search_stabilize_fuel.tapo",
    ])
    def test_trace_chain_integrity(self, fixture_path, name):
        trace, status = run_scenario(fixture_path(name))
        assert trace.chain_ok()
        assert trace.events  # something was actually recorded

    def test_failed_expectation_sets_exit_status(self, fixture_text):
        text = fixture_text("curry_u.tapo").replace(
            "final has (u, c1) : Orders @ U",
            "final has (u, c3) : Orders @ U")
        result = run_scenario_text(text)
        assert result.exit_status == EXIT_EXPECTATION_FAILED
        assert any("Orders" in f for f in result.failures)

    def test_browsing_saves_recommended_item(self, fixture_path):
        result = run_file(fixture_path("browsing.tapo"))
        abox = {str(a) for a in result.final_states["U"].abox}
        assert "d1 : SavedCandidate @ U" in abox


class TestInteractive:
    def test_scripted_run_matches_batch(self, fixture_text, fixture_path):
        interactive = run_scenario_text(fixture_text("curry_v_interactive.tapo"),
                                        answerer=ScriptedAnswerer(CURRY_V_ANSWERS))
        batch = run_file(fixture_path("curry_v.tapo"))
        assert interactive.exit_status == EXIT_OK
        assert interactive.final_states == batch.final_states

    def test_replay_reproduces_run(self, fixture_text):
        text = fixture_text("curry_v_interactive.tapo")
        first = run_scenario_text(text, answerer=ScriptedAnswerer(CURRY_V_ANSWERS))
        again = replay(text, first.trace.answers)
        assert again.final_states == first.final_states
        assert [e.to_json() for e in again.trace.events] == \
            [e.to_json() for e in first.trace.events]

    def test_false_risk_answer_routes_to_else(self, fixture_text):
        # answering f to the risk guard takes the preferred-candidate branch
        text = fixture_text("curry_v_interactive.tapo")
        result = run_scenario_text(
            text, answerer=ScriptedAnswerer(
                ["f",
                 {"trust": "high", "certificates": ["provenance"]},
                 {"trust": "high", "certificates": ["provenance"]},
                 "t"]))
        abox = {str(a) for a in result.final_states["U"].abox}
        assert "c2 : BalancedCandidate @ U" in abox

    def test_exhausted_answers_abort(self, fixture_text):
        text = fixture_text("curry_v_interactive.tapo")
        result = run_scenario_text(text, answerer=ScriptedAnswerer(["t"]))
        assert result.exit_status == EXIT_ABORTED

    def test_false_risk_answer_takes_preferred_branch(self, fixture_text):
        # the cautious program asked interactively: answering f to the risk
        # guard promotes the hot dish and the safe fallback instead
        text = fixture_text("curry_u.tapo").replace(
            "run P_u @ U", "run P_u @ U with interactive")
        result = run_scenario_text(text, answerer=ScriptedAnswerer(["f"]))
        abox = {str(a) for a in result.final_states["U"].abox}
        assert "c3 : PreferredCandidate @ U" in abox
        assert "c1 : SafeCandidate @ U" in abox
        assert "(u, c3) : Orders @ U" in abox
        # the fixture's expectations describe the true branch, so they fail
        assert result.exit_status == EXIT_EXPECTATION_FAILED

    def test_eof_on_console_aborts(self, fixture_path):
        proc = subprocess.run(
            [sys.executable, "-m", "tapo.cli", "interactive",
             fixture_path("curry_v_interactive.tapo")],
            input="", capture_output=True, text=True, timeout=60)
        assert proc.returncode == EXIT_ABORTED


EMBEDDED_CONSULT = """
scenario "embedded-consult" {
  kb {
    signature {
      concepts Need, ReviewConsultationNeeded, Fact
      individuals x
    }
    context U
    abox { x : Need @ U }
    pbox {
      program P @ U {
        if x : Need @ U then {
          add x : ReviewConsultationNeeded @ U
        } else {
          skip
        } ;
        consult ask1
      }
    }
    obox {
      frame f @ U {
        levels low, high
        order low < high
        threshold low
        query ask1 "fetch the fact"
        response r answers ask1 trust high {
          import x : Fact @ U
          cert c kind provenance
        }
        policy { default accept }
      }
    }
  }
  consults { x -> ask1 }
  steps { run P @ U }
  expect {
    final has x : Fact @ U
    step 1 outcome final
  }
}
"""


class TestEmbeddedConsult:
    def test_consult_node_inside_a_program(self):
        result = run_scenario_text(EMBEDDED_CONSULT, emit_derivations=True)
        assert result.exit_status == EXIT_OK, result.failures
        consults = [e for e in result.trace.events if e.kind == "consult"]
        assert len(consults) == 1
        assert consults[0].payload["outcome"] == "accept"
        # the emitted proof tree mirrors the embedded consult
        tree = result.summaries[0].derivations[0]

        def rules(node):
            yield node["rule"]
            for child in node["children"]:
                yield from rules(child)

        assert "Consult" in set(rules(tree))

    def test_consult_without_hesitation_fails_the_step(self):
        text = EMBEDDED_CONSULT.replace(
            "add x : ReviewConsultationNeeded @ U", "skip")
        result = run_scenario_text(text)
        assert result.exit_status == EXIT_EXPECTATION_FAILED
        assert any("failed" in f or "derivable" in f for f in result.failures)


class TestFuelResolution:
    def test_cli_wins(self, monkeypatch):
        monkeypatch.setenv(scn.FUEL_ENV_VAR, "5")
        assert resolve_fuel(9, 7) == 9

    def test_scenario_beats_env(self, monkeypatch):
        monkeypatch.setenv(scn.FUEL_ENV_VAR, "5")
        assert resolve_fuel(None, 7) == 7

    def test_env_beats_default(self, monkeypatch):
        monkeypatch.setenv(scn.FUEL_ENV_VAR, "5")
        assert resolve_fuel(None, None) == 5

    def test_default(self, monkeypatch):
        monkeypatch.delenv(scn.FUEL_ENV_VAR, raising=False)
        assert resolve_fuel(None, None) == scn.DEFAULT_FUEL == 1000

    def test_env_fuel_limits_run(self, fixture_text, monkeypatch):
        monkeypatch.setenv(scn.FUEL_ENV_VAR, "3")
        text = fixture_text("search_stabilize_fuel.tapo")
        text = text.replace("fuel 7\n", "").replace("unfoldings 7", "unfoldings 3")
        result = run_scenario_text(text)
        assert result.exit_status == EXIT_OK


class TestCLI:
    def test_run_writes_trace_and_derivations(self, fixture_path, tmp_path):
        trace_file = tmp_path / "trace.json"
        deriv_dir = tmp_path / "derivations"
        proc = subprocess.run(
            [sys.executable, "-m", "tapo.cli", "run", fixture_path("curry_v.tapo"),
             "--trace", str(trace_file), "--emit-derivations", str(deriv_dir)],
            capture_output=True, text=True, timeout=60)
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(trace_file.read_text())
        assert payload["scenario"] == "curry-v"
        kinds = {e["kind"] for e in payload["events"]}
        assert {"guard", "pbox-rule", "consult"} <= kinds
        trees = list(deriv_dir.glob("*.json"))
        assert trees
        tree = json.loads(trees[0].read_text())
        assert "rule" in tree and "judgment" in tree

    def test_check_subcommand(self, fixture_path):
        proc = subprocess.run(
            [sys.executable, "-m", "tapo.cli", "check",
             fixture_path("family_chain.tapo")],
            capture_output=True, text=True, timeout=60)
        assert proc.returncode == 0
        assert "functoriality" in proc.stdout

    def test_check_flags_broken_family(self, fixture_path):
        proc = subprocess.run(
            [sys.executable, "-m", "tapo.cli", "check",
             fixture_path("family_diamond_bad.tapo")],
            capture_output=True, text=True, timeout=60)
        assert proc.returncode == 1

    def test_fuel_flag_overrides_scenario_file(self, fixture_path):
        # the file budgets 7 unfoldings and expects exactly 7; forcing 3
        # makes that expectation fail
        proc = subprocess.run(
            [sys.executable, "-m", "tapo.cli", "run",
             fixture_path("search_stabilize_fuel.tapo"), "--fuel", "3"],
            capture_output=True, text=True, timeout=60)
        assert proc.returncode == EXIT_EXPECTATION_FAILED
        assert "expected 7 unfoldings, got 3" in proc.stdout

    def test_parse_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.tapo"
        bad.write_text("scenario \"x\" { steps { run }")
        proc = subprocess.run(
            [sys.executable, "-m", "tapo.cli", "run", str(bad)],
            capture_output=True, text=True, timeout=60)
        assert proc.returncode == scn.EXIT_ERROR
        assert "error" in proc.stderr
