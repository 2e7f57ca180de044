"""Scenario files and the batch/interactive runners.

A scenario is one reproducible run: an embedded KB, an ordered list of steps
(run a program, consult an oracle, check a goal, glue a cover), per-step
guard providers, and expectations over the reached states. Execution emits a
trace whose state digests chain event to event, and records every
interactive answer so a run can be replayed deterministically.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

from . import derivations, oracle as obx, presheaf, reasoner
from .dsl import KBDocument, KBParser, ParseError
from .guards import (ChannelClosedError, GuardProfile, InteractiveProvider,
                     StateDerivedProvider, StaticProvider)
from .programs import DEFAULT_FUEL, Failed, Final, OutOfFuel, eval_program
from .syntax import (Assertion, KnowledgeState, TapoError, TapoObject,
                     assertion_str, state_digest)

FUEL_ENV_VAR = "TAPO_FUEL"

EXIT_OK = 0
EXIT_EXPECTATION_FAILED = 1
EXIT_ERROR = 2
EXIT_ABORTED = 3


class ScenarioError(TapoError):
    pass


# ---------------------------------------------------------------------------
# Scenario structure
# ---------------------------------------------------------------------------

@dataclass
class ProviderSpec:
    kind: str = "derived"  # derived | entailment | interactive | static
    profile: Optional[GuardProfile] = None


@dataclass
class RunStep:
    program: str
    context: str
    provider: ProviderSpec = field(default_factory=ProviderSpec)


@dataclass
class ConsultStep:
    individual: str
    query: str
    context: str
    frame: Optional[str] = None
    interactive: bool = False


@dataclass
class CheckStep:
    assertion: Assertion


@dataclass
class GlueStep:
    context: str
    cover: list[str]


Step = object


@dataclass
class ExpectAssertion:
    step: Optional[int]  # None means the final state
    present: bool
    assertion: Assertion


@dataclass
class ExpectOutcome:
    step: int
    outcome: str  # final | outoffuel


@dataclass
class ExpectUnfoldings:
    step: int
    count: int


@dataclass
class ExpectOracle:
    step: int
    accepted: bool
    cause: Optional[str] = None


@dataclass
class ExpectGlue:
    step: int
    kind: str  # glued | conflict | notunique


@dataclass
class Scenario:
    name: str
    kb: KBDocument
    steps: list
    expectations: list
    consult_pairs: frozenset[tuple[str, str]] = frozenset()
    fuel: Optional[int] = None


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_HOLD_CAUSES = {
    "below_threshold": obx.HOLD_BELOW_THRESHOLD,
    "rejected": obx.HOLD_REJECTED,
    "deferred": obx.HOLD_DEFERRED,
    "t_incompatible": obx.HOLD_T_INCOMPATIBLE,
    "no_answer": obx.HOLD_NO_ANSWER,
}


class _ScenarioParser(KBParser):
    def scenario(self) -> Scenario:
        self._rebuild_signature()
        self.expect("scenario")
        name = self.expect_string()
        self.expect("{")
        fuel: Optional[int] = None
        steps: list = []
        expectations: list = []
        consult_pairs: set[tuple[str, str]] = set()
        while not self.eat("}"):
            if self.eat("fuel"):
                fuel = self.expect_number()
            elif self.eat("kb"):
                self.expect("{")
                while not self.eat("}"):
                    if not self.try_section():
                        self.fail(f"expected a KB section, found {self.peek().text!r}")
            elif self.eat("consults"):
                self.expect("{")
                while not self.eat("}"):
                    individual = self.expect_ident("individual name")
                    self.expect("->")
                    consult_pairs.add((individual, self.expect_ident("query")))
            elif self.eat("steps"):
                self.expect("{")
                while not self.eat("}"):
                    steps.append(self._step())
            elif self.eat("expect"):
                self.expect("{")
                while not self.eat("}"):
                    expectations.append(self._expectation())
            else:
                self.fail(f"unexpected scenario item {self.peek().text!r}")
        if self.peek().kind != "eof":
            self.fail("trailing input after the scenario block")
        kb = self._finish()
        return Scenario(name, kb, steps, expectations, frozenset(consult_pairs), fuel)

    def _step(self):
        if self.eat("run"):
            prog = self.expect_ident("program name")
            self.expect("@")
            ctx = self.expect_ident("context")
            self._check_context(ctx, self.peek())
            provider = self._provider_spec() if self.eat("with") else ProviderSpec()
            return RunStep(prog, ctx, provider)
        if self.eat("consult"):
            individual = self.expect_ident("individual name")
            query = self.expect_ident("query")
            self.expect("@")
            ctx = self.expect_ident("context")
            frame = self.expect_ident("frame name") if self.eat("frame") else None
            interactive = self.eat("interactive")
            return ConsultStep(individual, query, ctx, frame, interactive)
        if self.eat("check"):
            return CheckStep(self.assertion())
        if self.eat("glue"):
            ctx = self.expect_ident("context")
            self.expect("from")
            return GlueStep(ctx, self.ident_list())
        self.fail(f"expected a step, found {self.peek().text!r}")

    def _provider_spec(self) -> ProviderSpec:
        if self.eat("derived"):
            return ProviderSpec("derived")
        if self.eat("entailment"):
            return ProviderSpec("entailment")
        if self.eat("interactive"):
            return ProviderSpec("interactive")
        if self.eat("static"):
            self.expect("{")
            values = {}
            while not self.eat("}"):
                atom = self._guard_primary()
                self.expect("=")
                word = self.expect_ident("t or f")
                if word not in ("t", "f"):
                    self.fail("static profile values must be t or f")
                values[atom] = word == "t"
            return ProviderSpec("static", GuardProfile.of(values))
        self.fail("expected derived, entailment, interactive, or static {...}")

    def _expectation(self):
        if self.eat("final"):
            present = self._has_or_lacks()
            return ExpectAssertion(None, present, self.assertion())
        self.expect("step")
        step = self.expect_number()
        if self.at("has") or self.at("lacks"):
            present = self._has_or_lacks()
            return ExpectAssertion(step, present, self.assertion())
        if self.eat("outcome"):
            word = self.expect_ident("final or outoffuel")
            if word not in ("final", "outoffuel"):
                self.fail("outcome must be final or outoffuel")
            return ExpectOutcome(step, word)
        if self.eat("unfoldings"):
            return ExpectUnfoldings(step, self.expect_number())
        if self.eat("oracle"):
            word = self.expect_ident("accept or hold")
            if word not in ("accept", "hold"):
                self.fail("oracle expectation must be accept or hold")
            cause = None
            if word == "hold" and self.peek().kind == "ident":
                cause_word = self.expect_ident("hold cause")
                cause = _HOLD_CAUSES.get(cause_word)
                if cause is None:
                    self.fail(f"unknown hold cause {cause_word!r}")
            return ExpectOracle(step, word == "accept", cause)
        if self.eat("glue"):
            word = self.expect_ident("glued, conflict, or notunique")
            if word not in ("glued", "conflict", "notunique"):
                self.fail("glue expectation must be glued, conflict, or notunique")
            return ExpectGlue(step, word)
        self.fail(f"unexpected expectation {self.peek().text!r}")

    def _has_or_lacks(self) -> bool:
        if self.eat("has"):
            return True
        self.expect("lacks")
        return False


def parse_scenario(text: str) -> Scenario:
    return _ScenarioParser(text).scenario()


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as handle:
        return parse_scenario(handle.read())


# ---------------------------------------------------------------------------
# Answer channels
# ---------------------------------------------------------------------------

class ScriptedAnswerer:
    """Feeds prerecorded answers in order; used for replay and testing."""

    def __init__(self, answers: list):
        self.answers = list(answers)

    def _next(self):
        if not self.answers:
            raise ChannelClosedError("no more scripted answers")
        return self.answers.pop(0)

    def ask_guard(self, atom_text: str) -> str:
        return self._next()

    def ask_oracle(self, question: dict) -> dict:
        return self._next()


class ConsoleAnswerer:
    """Prompts on stdout and reads answers line by line from stdin."""

    def ask_guard(self, atom_text: str) -> str:
        print(json.dumps({"kind": "guard", "atom": atom_text}), flush=True)
        line = _read_line()
        return line.strip()

    def ask_oracle(self, question: dict) -> dict:
        print(json.dumps(question), flush=True)
        line = _read_line()
        try:
            return json.loads(line)
        except json.JSONDecodeError as err:
            raise ChannelClosedError(f"bad oracle answer: {err}")


def _read_line() -> str:
    import sys
    line = sys.stdin.readline()
    if line == "":
        raise ChannelClosedError("end of input")
    return line


class _RecordingAnswerer:
    """Wraps an answerer and records every question/answer pair."""

    def __init__(self, inner, record: list):
        self.inner = inner
        self.record = record

    def ask_guard(self, atom_text: str) -> str:
        answer = self.inner.ask_guard(atom_text)
        self.record.append({"kind": "guard", "atom": atom_text, "answer": answer})
        return answer

    def ask_oracle(self, question: dict) -> dict:
        answer = self.inner.ask_oracle(question)
        self.record.append({"kind": "oracle", "question": question, "answer": answer})
        return answer


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

@dataclass
class Event:
    step: int
    kind: str  # pbox-rule | guard | oracle-gate | consult | static-derivation | glue
    payload: dict
    before: str
    after: str

    def to_json(self) -> dict:
        return {"step": self.step, "kind": self.kind, "payload": self.payload,
                "before": self.before, "after": self.after}


@dataclass
class Trace:
    scenario: str
    events: list[Event] = field(default_factory=list)
    answers: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"scenario": self.scenario,
                "events": [e.to_json() for e in self.events],
                "answers": self.answers}

    def chain_ok(self) -> bool:
        return all(self.events[i].after == self.events[i + 1].before
                   for i in range(len(self.events) - 1))


def states_digest(states: dict[str, KnowledgeState]) -> str:
    blob = "|".join(f"{ctx}:{state_digest(states[ctx])}" for ctx in sorted(states))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------

@dataclass
class StepSummary:
    index: int
    kind: str
    outcome: str = "final"  # final | outoffuel | failed | aborted
    unfoldings: int = 0
    oracle_report: Optional[obx.GateReport] = None
    glue_kind: Optional[str] = None
    detail: str = ""
    derivations: list = field(default_factory=list)  # ProofTree JSON dicts


@dataclass
class RunResult:
    scenario: Scenario
    trace: Trace
    exit_status: int
    failures: list[str]
    final_states: dict[str, KnowledgeState]
    summaries: list[StepSummary]

    @property
    def ok(self) -> bool:
        return self.exit_status == EXIT_OK


def resolve_fuel(cli_fuel: Optional[int], scenario_fuel: Optional[int]) -> int:
    if cli_fuel is not None:
        return cli_fuel
    if scenario_fuel is not None:
        return scenario_fuel
    env = os.environ.get(FUEL_ENV_VAR)
    if env is not None and env.isdigit():
        return int(env)
    return DEFAULT_FUEL


class ScenarioRun:
    def __init__(self, scenario: Scenario, fuel: Optional[int] = None,
                 answerer=None, emit_derivations: bool = False):
        self.scenario = scenario
        self.fuel = resolve_fuel(fuel, scenario.fuel)
        self.trace = Trace(scenario.name)
        self.answerer = _RecordingAnswerer(answerer, self.trace.answers) \
            if answerer is not None else None
        self.emit_derivations = emit_derivations
        self.states: dict[str, KnowledgeState] = {
            ctx: obj.state for ctx, obj in scenario.kb.objects.items()}
        self.failures: list[str] = []
        self.summaries: list[StepSummary] = []
        self.snapshots: dict[int, dict[str, KnowledgeState]] = {}
        self.aborted = False

    # -- events ---------------------------------------------------------

    def _emit(self, step: int, kind: str, payload: dict,
              before: dict[str, KnowledgeState], after: dict[str, KnowledgeState]):
        self.trace.events.append(Event(step, kind, payload,
                                       states_digest(before), states_digest(after)))

    # -- providers ------------------------------------------------------

    def _provider(self, spec: ProviderSpec, state: KnowledgeState):
        if spec.kind == "derived":
            return StateDerivedProvider(state)
        if spec.kind == "entailment":
            return StateDerivedProvider(state, by_entailment=True)
        if spec.kind == "static":
            return StaticProvider(spec.profile)
        if spec.kind == "interactive":
            if self.answerer is None:
                raise ScenarioError(
                    "interactive step outside an interactive session")
            return InteractiveProvider(self.answerer)
        raise ScenarioError(f"unknown provider kind {spec.kind!r}")

    # -- oracle helpers ---------------------------------------------------

    def _resolve_frame(self, step: ConsultStep) -> obx.OracleFrame:
        obox = self.scenario.kb.objects[step.context].obox
        if step.frame is not None:
            if step.frame not in obox:
                raise ScenarioError(f"no frame named {step.frame!r} at {step.context}")
            return obox[step.frame]
        if len(obox) == 1:
            return next(iter(obox.values()))
        for frame in obox.values():
            if step.query in frame.queries:
                return frame
        raise ScenarioError(f"no frame at {step.context} answers {step.query!r}")

    def _interactive_frame(self, frame: obx.OracleFrame, query: str) -> obx.OracleFrame:
        """Ask the human for the response's trust level and certificate kinds."""
        declared = frame.answers.get(query)
        if declared is None:
            raise ScenarioError(f"query {query!r} has no declared response to adjust")
        question = {
            "kind": "oracle",
            "query": query,
            "text": frame.queries[query],
            "levels": sorted(frame.trust.levels),
            "certificate_kinds": sorted({c.kind for c in declared.certificates}),
            "payload": sorted(assertion_str(a) for a in declared.payload),
        }
        answer = self.answerer.ask_oracle(question)
        trust = answer.get("trust", declared.trust)
        if trust not in frame.trust.levels:
            raise ScenarioError(f"unknown trust level {trust!r}")
        kinds = answer.get("certificates")
        certificates = declared.certificates if kinds is None else frozenset(
            c for c in declared.certificates if c.kind in kinds)
        adjusted = obx.Response(declared.id, declared.payload, trust, certificates)
        answers = dict(frame.answers)
        answers[query] = adjusted
        return obx.OracleFrame(frame.name, frame.context, dict(frame.queries),
                               answers, frame.trust, frame.policy)

    # -- steps ------------------------------------------------------------

    def run(self) -> RunResult:
        status = EXIT_OK
        try:
            for index, step in enumerate(self.scenario.steps, start=1):
                self._run_step(index, step)
                self.snapshots[index] = dict(self.states)
                if self.aborted:
                    status = EXIT_ABORTED
                    break
        except ChannelClosedError as err:
            self.failures.append(f"session aborted: {err}")
            status = EXIT_ABORTED
        except (TapoError, ParseError) as err:
            self.failures.append(f"run error: {err}")
            status = EXIT_ERROR
        if status == EXIT_OK:
            self._check_expectations()
            if self.failures:
                status = EXIT_EXPECTATION_FAILED
        return RunResult(self.scenario, self.trace, status, self.failures,
                         dict(self.states), self.summaries)

    def _run_step(self, index: int, step) -> None:
        if isinstance(step, RunStep):
            self._run_program_step(index, step)
        elif isinstance(step, ConsultStep):
            self._run_consult_step(index, step)
        elif isinstance(step, CheckStep):
            self._run_check_step(index, step)
        elif isinstance(step, GlueStep):
            self._run_glue_step(index, step)
        else:
            raise ScenarioError(f"unknown step kind: {step!r}")

    def _consult_env(self) -> derivations.CheckEnv:
        frames = {}
        for obj in self.scenario.kb.objects.values():
            frames.update(obj.obox)
        return derivations.CheckEnv(frames=frames,
                                    consult_table=self.scenario.consult_pairs,
                                    fuel=self.fuel)

    def _run_program_step(self, index: int, step: RunStep) -> None:
        obj = self.scenario.kb.objects.get(step.context)
        if obj is None or step.program not in obj.pbox:
            raise ScenarioError(f"no program {step.program!r} at {step.context}")
        prog = obj.pbox[step.program]
        state = self.states[step.context]
        provider = self._provider(step.provider, state)
        summary = StepSummary(index, "run")
        pending_consult: list[obx.GateReport] = []

        def consult_handler(current: KnowledgeState, query: str) -> KnowledgeState:
            frame = None
            for candidate in obj.obox.values():
                if query in candidate.queries:
                    frame = candidate
                    break
            if frame is None:
                raise ScenarioError(f"no frame at {step.context} answers {query!r}")
            individual = None
            for ind, q in sorted(self.scenario.consult_pairs):
                if q == query:
                    individual = ind
                    break
            if individual is None:
                raise ScenarioError(
                    f"query {query!r} is not in the consultation table")
            new_state, _tree = derivations.consult(
                current, obj.pbox, frame, individual, query,
                table=self.scenario.consult_pairs)
            _, report = obx.oracle_transition(frame, current, query)
            pending_consult.append(report)
            return new_state

        def tracer(kind: str, payload: dict, before: KnowledgeState,
                   after: KnowledgeState) -> None:
            before_map = dict(self.states)
            before_map[step.context] = before
            after_map = dict(self.states)
            after_map[step.context] = after
            if payload.get("rule") == "While-T":
                summary.unfoldings += 1
            if payload.get("rule") == "Consult" and pending_consult:
                report = pending_consult.pop(0)
                self._emit(index, "consult",
                           {"query": payload.get("query"), **report.to_json()},
                           before_map, after_map)
                return
            self._emit(index, kind, payload, before_map, after_map)

        try:
            outcome = eval_program(state, prog, provider, self.fuel,
                                   consult=consult_handler, tracer=tracer)
        except ChannelClosedError as err:
            self.aborted = True
            summary.outcome = "aborted"
            summary.detail = str(err)
            self.summaries.append(summary)
            return
        if isinstance(outcome, Final):
            self.states[step.context] = outcome.state
            summary.outcome = "final"
            if self.emit_derivations:
                tree = derivations.derive_transition(
                    state, prog, provider, self.fuel,
                    provider_ref=f"step{index}", env=self._consult_env())
                if tree is not None:
                    summary.derivations.append(tree.to_json())
        elif isinstance(outcome, OutOfFuel):
            self.states[step.context] = outcome.state
            summary.outcome = "outoffuel"
            summary.detail = f"fuel exhausted after {outcome.steps} units"
        elif isinstance(outcome, Failed):
            summary.outcome = "failed"
            summary.detail = outcome.error
            self.failures.append(f"step {index}: program failed: {outcome.error}")
        self.summaries.append(summary)

    def _run_consult_step(self, index: int, step: ConsultStep) -> None:
        frame = self._resolve_frame(step)
        if step.interactive:
            if self.answerer is None:
                raise ScenarioError("interactive consult outside an interactive session")
            frame = self._interactive_frame(frame, step.query)
        state = self.states[step.context]
        summary = StepSummary(index, "consult")
        before_map = dict(self.states)
        obj = self.scenario.kb.objects[step.context]
        try:
            new_state, tree = derivations.consult(
                state, obj.pbox, frame, step.individual, step.query,
                table=self.scenario.consult_pairs)
        except derivations.HesitationNotDerivableError as err:
            self.failures.append(f"step {index}: {err}")
            summary.outcome = "failed"
            summary.detail = str(err)
            self.summaries.append(summary)
            return
        _, report = obx.oracle_transition(frame, state, step.query)
        self.states[step.context] = new_state
        after_map = dict(self.states)
        summary.oracle_report = report
        if self.emit_derivations:
            summary.derivations.append(tree.to_json())
        self._emit(index, "consult",
                   {"individual": step.individual, **report.to_json()},
                   before_map, after_map)
        self.summaries.append(summary)

    def _run_check_step(self, index: int, step: CheckStep) -> None:
        ctx = step.assertion.context
        state = self.states.get(ctx)
        if state is None:
            raise ScenarioError(f"check step names unknown context {ctx!r}")
        tree = reasoner.entails(state, step.assertion)
        summary = StepSummary(index, "check")
        payload = {"assertion": assertion_str(step.assertion),
                   "derivable": tree is not None}
        if tree is not None:
            proof = derivations.derivation_to_prooftree(tree, state)
            payload["derivation"] = proof.to_json()
            payload["trace"] = reasoner.saturation_to_json(
                reasoner.saturate(state))
            if self.emit_derivations:
                summary.derivations.append(proof.to_json())
        else:
            self.failures.append(
                f"step {index}: goal not derivable: {assertion_str(step.assertion)}")
            summary.outcome = "failed"
        self._emit(index, "static-derivation", payload, self.states, self.states)
        self.summaries.append(summary)

    def _run_glue_step(self, index: int, step: GlueStep) -> None:
        doc = self.scenario.kb
        family = presheaf.StateFamily(
            doc.signature.contexts,
            {ctx: TapoObject(self.states[ctx], obj.pbox, obj.obox)
             for ctx, obj in doc.objects.items()},
            doc.restrictions)
        result = presheaf.glue(family, step.cover, step.context)
        summary = StepSummary(index, "glue", glue_kind=result.kind)
        payload = result.to_json()
        payload["cover"] = step.cover
        before_map = dict(self.states)
        if result.kind == "glued":
            self.states[step.context] = result.glued.state
        self._emit(index, "glue", payload, before_map, self.states)
        self.summaries.append(summary)

    # -- expectations -----------------------------------------------------

    def _states_at(self, step: Optional[int]) -> dict[str, KnowledgeState]:
        if step is None:
            return self.states
        if step not in self.snapshots:
            raise ScenarioError(f"expectation references missing step {step}")
        return self.snapshots[step]

    def _summary(self, step: int) -> Optional[StepSummary]:
        for summary in self.summaries:
            if summary.index == step:
                return summary
        return None

    def _check_expectations(self) -> None:
        for expect in self.scenario.expectations:
            if isinstance(expect, ExpectAssertion):
                states = self._states_at(expect.step)
                state = states.get(expect.assertion.context)
                where = "final state" if expect.step is None else f"step {expect.step}"
                if state is None:
                    self.failures.append(f"{where}: unknown context "
                                         f"{expect.assertion.context!r}")
                    continue
                present = expect.assertion in state.abox
                if present != expect.present:
                    verb = "missing" if expect.present else "unexpectedly present"
                    self.failures.append(
                        f"{where}: {assertion_str(expect.assertion)} {verb}")
            elif isinstance(expect, ExpectOutcome):
                summary = self._summary(expect.step)
                if summary is None or summary.outcome != expect.outcome:
                    got = summary.outcome if summary else "no such step"
                    self.failures.append(
                        f"step {expect.step}: expected outcome {expect.outcome}, "
                        f"got {got}")
            elif isinstance(expect, ExpectUnfoldings):
                summary = self._summary(expect.step)
                if summary is None or summary.unfoldings != expect.count:
                    got = summary.unfoldings if summary else "no such step"
                    self.failures.append(
                        f"step {expect.step}: expected {expect.count} unfoldings, "
                        f"got {got}")
            elif isinstance(expect, ExpectOracle):
                summary = self._summary(expect.step)
                report = summary.oracle_report if summary else None
                if report is None:
                    self.failures.append(f"step {expect.step}: no oracle step there")
                    continue
                if report.accepted != expect.accepted:
                    self.failures.append(
                        f"step {expect.step}: expected oracle "
                        f"{'accept' if expect.accepted else 'hold'}, got "
                        f"{'accept' if report.accepted else 'hold'} ({report.cause})")
                elif expect.cause is not None and report.cause != expect.cause:
                    self.failures.append(
                        f"step {expect.step}: expected hold cause {expect.cause}, "
                        f"got {report.cause}")
            elif isinstance(expect, ExpectGlue):
                summary = self._summary(expect.step)
                kind = summary.glue_kind if summary else None
                want = {"glued": "glued", "conflict": "conflict",
                        "notunique": "not-unique"}[expect.kind]
                if kind != want:
                    self.failures.append(
                        f"step {expect.step}: expected glue result {want}, got {kind}")


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def run_scenario_text(text: str, fuel: Optional[int] = None, answerer=None,
                      emit_derivations: bool = False) -> RunResult:
    scenario = parse_scenario(text)
    return ScenarioRun(scenario, fuel, answerer, emit_derivations).run()


def run_scenario(path: str, fuel: Optional[int] = None,
                 emit_derivations: bool = False) -> tuple[Trace, int]:
    """Batch run: execute the scenario file and check its expectations."""
    result = run_file(path, fuel, emit_derivations=emit_derivations)
    return result.trace, result.exit_status


def run_file(path: str, fuel: Optional[int] = None, answerer=None,
             emit_derivations: bool = False) -> RunResult:
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    return run_scenario_text(text, fuel, answerer, emit_derivations)


def interactive_run(path: str, fuel: Optional[int] = None) -> int:
    """Interactive run: guard and oracle questions go to the console; every
    answer is recorded in the trace for replay."""
    result = run_file(path, fuel, answerer=ConsoleAnswerer())
    return result.exit_status


def replay(scenario_text: str, answers: list, fuel: Optional[int] = None) -> RunResult:
    """Re-run an interactive scenario from recorded answers."""
    raw = [entry["answer"] for entry in answers] if answers and \
        isinstance(answers[0], dict) else list(answers)
    return run_scenario_text(scenario_text, fuel, answerer=ScriptedAnswerer(raw))
