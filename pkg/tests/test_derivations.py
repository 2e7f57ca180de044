import dataclasses

import pytest

from tapo import corpus, derivations as dv, oracle as obx, reasoner
from tapo.derivations import (AsrtJudgment, CheckEnv, Corpus, GuardJudgment,
                              HesitationNotDerivableError, OracleJudgment,
                              ProofTree, QueryJudgment, TransJudgment,
                              build_guard_tree, check_derivation, consult,
                              derive_transition, oracle_step_tree,
                              soundness_harness)
from tapo.guards import (AtomA, GTrue, GuardProfile, NotG, StaticProvider,
                         StateDerivedProvider)
from tapo.programs import Add, If, Seq, Skip, While
from tapo.scenario import parse_scenario
from tapo.syntax import Atom, ConceptAssertion, KnowledgeState

A, B = Atom("A"), Atom("B")
ALPHA = ConceptAssertion("a", A, "U")
BETA = ConceptAssertion("b", B, "U")


def state(*assertions, tbox=()):
    return KnowledgeState(tuple(tbox), frozenset(assertions), "U")


class TestCheckDerivation:
    def test_one_node_abox_axiom(self):
        st = state(ALPHA)
        tree = ProofTree(AsrtJudgment(st, ALPHA), reasoner.R_AAX)
        assert check_derivation(tree, CheckEnv()).valid

    def test_ungrounded_axiom_invalid(self):
        st = state()
        tree = ProofTree(AsrtJudgment(st, ALPHA), reasoner.R_AAX)
        verdict = check_derivation(tree, CheckEnv())
        assert not verdict.valid
        assert "ABox" in verdict.reason

    def test_if_true_with_false_guard_child_invalid(self):
        st = state()
        prog = If(GTrue(), Skip(), Skip())
        guard_child = ProofTree(GuardJudgment("default", GTrue(), False),
                                dv.G_FALSE)
        branch = ProofTree(TransJudgment(st, Skip(), st), dv.T_SKIP)
        tree = ProofTree(TransJudgment(st, prog, st), dv.T_IFT,
                         (guard_child, branch))
        verdict = check_derivation(tree, CheckEnv())
        assert not verdict.valid

    def test_oracle_accept_below_threshold_invalid(self, fixture_text):
        scenario = parse_scenario(fixture_text("curry_v_lowtrust.tapo"))
        frame = scenario.kb.objects["U"].obox["reviews"]
        st = scenario.kb.objects["U"].state
        response = frame.answers["q2"]  # trust low in this fixture
        result = st.union(response.payload)
        tree = ProofTree(
            OracleJudgment(st, "reviews", "q2", result), dv.O_ACCEPT,
            (ProofTree(QueryJudgment("reviews", "q2", response.id), dv.O_QUERY),))
        verdict = check_derivation(tree, CheckEnv(frames={"reviews": frame}))
        assert not verdict.valid
        assert "validate" in verdict.reason or "trust" in verdict.reason


class TestDeriveTransition:
    def test_skip_single_node(self):
        st = state()
        tree = derive_transition(st, Skip(), StateDerivedProvider(st))
        assert tree.rule == dv.T_SKIP and tree.children == ()

    def test_seq_two_children(self):
        st = state()
        prog = Seq(Add(BETA), Skip())
        tree = derive_transition(st, prog, StateDerivedProvider(st))
        assert tree.rule == dv.T_SEQ
        assert [c.rule for c in tree.children] == [dv.T_ADD, dv.T_SKIP]
        assert tree.conclusion.result == st.add(BETA)

    def test_while_false_single_node(self):
        st = state()
        prog = While(AtomA(ALPHA), Skip())
        tree = derive_transition(st, prog, StateDerivedProvider(st))
        assert tree.rule == dv.T_WHILEF
        assert [c.rule for c in tree.children] == [dv.G_ATOM]

    def test_none_when_out_of_fuel(self):
        st = state()
        prog = While(GTrue(), Skip())
        assert derive_transition(st, prog, StateDerivedProvider(st), fuel=5) is None

    def test_roundtrip_always_valid(self):
        rng = corpus.make_rng(31)
        checked = 0
        for _ in range(120):
            st = corpus.gen_state(rng)
            prog = corpus.gen_program(rng, st, 4)
            provider = corpus.gen_provider(rng, st, prog)
            tree = derive_transition(st, prog, provider, 40)
            if tree is None:
                continue
            env = CheckEnv(providers={"default": provider})
            verdict = check_derivation(tree, env)
            assert verdict.valid, verdict.reason
            checked += 1
        assert checked > 60


class TestConsult:
    def scenario(self, fixture_text, name="curry_v.tapo"):
        return parse_scenario(fixture_text(name))

    def test_consult_imports_when_validated(self, fixture_text):
        scenario = self.scenario(fixture_text)
        obj = scenario.kb.objects["U"]
        st = obj.state.add(ConceptAssertion("v", Atom("ReviewConsultationNeeded"), "U"))
        new_state, tree = consult(st, obj.pbox, obj.obox["reviews"], "v", "q2",
                                  table=scenario.consult_pairs)
        assert ConceptAssertion("c3", Atom("AdjustableOnRequest"), "U") in new_state.abox
        env = CheckEnv(frames={"reviews": obj.obox["reviews"]},
                       consult_table=scenario.consult_pairs)
        assert check_derivation(tree, env).valid

    def test_consult_hold_keeps_state_and_tree_valid(self, fixture_text):
        scenario = self.scenario(fixture_text, "curry_v_lowtrust.tapo")
        obj = scenario.kb.objects["U"]
        st = obj.state.add(ConceptAssertion("v", Atom("ReviewConsultationNeeded"), "U"))
        new_state, tree = consult(st, obj.pbox, obj.obox["reviews"], "v", "q2",
                                  table=scenario.consult_pairs)
        assert new_state == st
        assert tree.children[1].rule == dv.O_HOLD
        env = CheckEnv(frames={"reviews": obj.obox["reviews"]},
                       consult_table=scenario.consult_pairs)
        assert check_derivation(tree, env).valid

    def test_no_hesitation_raises(self, fixture_text):
        scenario = self.scenario(fixture_text)
        obj = scenario.kb.objects["U"]
        with pytest.raises(HesitationNotDerivableError):
            consult(obj.state, obj.pbox, obj.obox["reviews"], "v", "q2",
                    table=scenario.consult_pairs)

    def test_inadmissible_query(self, fixture_text):
        scenario = self.scenario(fixture_text)
        obj = scenario.kb.objects["U"]
        with pytest.raises(obx.InadmissibleQueryError):
            consult(obj.state, obj.pbox, obj.obox["reviews"], "v", "zz",
                    table=scenario.consult_pairs)

    def test_consult_never_touches_tbox(self, fixture_text):
        scenario = self.scenario(fixture_text)
        obj = scenario.kb.objects["U"]
        st = obj.state.add(ConceptAssertion("v", Atom("ReviewConsultationNeeded"), "U"))
        new_state, _ = consult(st, obj.pbox, obj.obox["reviews"], "v", "q1",
                               table=scenario.consult_pairs)
        assert new_state.tbox == st.tbox


def _mutate_rule(tree: ProofTree) -> ProofTree:
    swap = {dv.T_SKIP: dv.T_ADD, dv.T_ADD: dv.T_DEL, dv.T_DEL: dv.T_ADD,
            dv.T_SEQ: dv.T_SKIP, dv.T_IFT: dv.T_IFF, dv.T_IFF: dv.T_IFT,
            dv.T_WHILEF: dv.T_WHILET, dv.T_WHILET: dv.T_WHILEF,
            reasoner.R_AAX: reasoner.R_RAX}
    return dataclasses.replace(tree, rule=swap.get(tree.rule, dv.T_SKIP))


class TestMutation:
    def make_tree(self):
        st = state(ALPHA)
        prog = Seq(If(AtomA(ALPHA), Add(BETA), Skip()), Skip())
        provider = StateDerivedProvider(st)
        tree = derive_transition(st, prog, provider)
        env = CheckEnv(providers={"default": provider})
        assert check_derivation(tree, env).valid
        return tree, env

    def test_rule_flip_detected(self):
        tree, env = self.make_tree()
        assert not check_derivation(_mutate_rule(tree), env).valid

    def test_conclusion_mutation_detected(self):
        tree, env = self.make_tree()
        bad_result = tree.conclusion.result.add(ConceptAssertion("a", Atom("C"), "U"))
        mutated = dataclasses.replace(
            tree, conclusion=dataclasses.replace(tree.conclusion, result=bad_result))
        assert not check_derivation(mutated, env).valid

    def test_child_mutation_detected(self):
        tree, env = self.make_tree()
        mutated_child = _mutate_rule(tree.children[0])
        mutated = dataclasses.replace(tree, children=(mutated_child, tree.children[1]))
        verdict = check_derivation(mutated, env)
        assert not verdict.valid
        assert verdict.path == (0,)

    def test_guard_value_flip_detected(self):
        st = state(ALPHA)
        provider = StateDerivedProvider(st)
        value, tree = build_guard_tree(provider, NotG(AtomA(BETA)))
        assert value is True
        flipped = dataclasses.replace(
            tree.children[0],
            conclusion=dataclasses.replace(tree.children[0].conclusion, value=True))
        mutated = dataclasses.replace(tree, children=(flipped,))
        env = CheckEnv(providers={"default": provider})
        assert check_derivation(tree, env).valid
        assert not check_derivation(mutated, env).valid


class TestHarness:
    def test_empty_corpus_empty_report(self):
        report = soundness_harness(Corpus())
        assert report.ok
        assert report.transitions_checked == 0

    def test_small_corpus_clean(self):
        report = soundness_harness(corpus.build_corpus(7, 60, 30, 10), fuel=40)
        assert report.ok, report.counterexamples[:3]
        assert report.static_steps_checked > 0

    def test_oracle_tree_matches_transition(self):
        rng = corpus.make_rng(13)
        matched = 0
        for _ in range(60):
            st = corpus.gen_state(rng)
            frame = corpus.gen_frame(rng, st)
            query = rng.choice(sorted(frame.queries))
            result, _ = obx.oracle_transition(frame, st, query)
            tree = oracle_step_tree(frame, st, query)
            if tree is None:
                continue
            assert tree.conclusion.result == result
            matched += 1
        assert matched > 20

    def test_divergent_loop_never_yields_a_tree(self):
        st = state(ConceptAssertion("q", Atom("Go"), "U"))
        stable = ConceptAssertion("q", Atom("Stop"), "U")
        prog = While(NotG(AtomA(stable)), Skip())
        provider = StaticProvider(GuardProfile.of({AtomA(stable): False}))
        for fuel in (0, 10, 300):
            assert derive_transition(st, prog, provider, fuel=fuel) is None

    def test_deep_trees_check_without_recursion_error(self):
        # a 400-deep chain of sequenced skips nests 400 Seq nodes; the
        # checker walks it with an explicit stack
        st = state(ALPHA)
        prog = Skip()
        for _ in range(400):
            prog = Seq(Skip(), prog)
        provider = StateDerivedProvider(st)
        tree = derive_transition(st, prog, provider)
        assert tree is not None
        env = CheckEnv(providers={"default": provider})
        assert check_derivation(tree, env).valid
