import pytest
from hypothesis import given, settings

from tapo import corpus
from tapo.guards import AtomA, GTrue, StateDerivedProvider
from tapo.presheaf import Restriction
from tapo.programs import (Add, Consult, Del, Failed, Final, If, OutOfFuel,
                           ProgramRestrictionError, Seq, Skip, While, denotation,
                           eval_program, restrict_program)
from tapo.syntax import (Atom, ConceptAssertion, KnowledgeState, RoleAssertion)

from .strategies import programs

BETA = ConceptAssertion("a", Atom("A"), "U")
GAMMA = ConceptAssertion("b", Atom("B"), "U")


def state(*assertions, ctx="U"):
    return KnowledgeState((), frozenset(assertions), ctx)


def derived(st):
    return StateDerivedProvider(st)


class TestCoreRules:
    def test_skip_identity(self):
        st = state(BETA)
        assert eval_program(st, Skip(), derived(st)) == Final(st)

    def test_add_is_union(self):
        st = state()
        out = eval_program(st, Add(BETA), derived(st))
        assert out == Final(state(BETA))

    def test_del_is_difference(self):
        st = state(BETA, GAMMA)
        out = eval_program(st, Del(BETA), derived(st))
        assert out == Final(state(GAMMA))

    def test_add_existing_noop(self):
        st = state(BETA)
        assert eval_program(st, Add(BETA), derived(st)) == Final(st)

    def test_del_absent_noop(self):
        st = state(GAMMA)
        assert eval_program(st, Del(BETA), derived(st)) == Final(st)

    def test_while_false_identity(self):
        st = state()
        loop = While(AtomA(BETA), Skip())  # BETA not asserted: guard false
        assert eval_program(st, loop, derived(st)) == Final(st)

    def test_if_true_takes_then(self):
        st = state(BETA)
        prog = If(AtomA(BETA), Add(GAMMA), Del(BETA))
        out = eval_program(st, prog, derived(st))
        assert out == Final(state(BETA, GAMMA))

    def test_context_mismatch_fails(self):
        st = state(ctx="V")
        out = eval_program(st, Add(BETA), derived(st))
        assert isinstance(out, Failed)

    def test_unhandled_consult_fails(self):
        st = state()
        out = eval_program(st, Consult("q1"), derived(st))
        assert isinstance(out, Failed)
        assert "consult" in out.error


class TestFuel:
    def loop(self):
        # guard can never become false: the body never adds StableResultSet
        stable = AtomA(ConceptAssertion("q", Atom("StableResultSet"), "U"))
        from tapo.guards import NotG
        body = Seq(Del(ConceptAssertion("q", Atom("NeedsRefinement"), "U")),
                   Add(ConceptAssertion("q", Atom("ReadyForRetrieval"), "U")))
        return While(NotG(stable), body)

    def test_out_of_fuel_counts_unfoldings(self):
        st = state(ConceptAssertion("q", Atom("NeedsRefinement"), "U"))
        out = eval_program(st, self.loop(), derived(st), fuel=5)
        assert isinstance(out, OutOfFuel)
        assert out.steps == 5

    def test_fuel_monotone(self):
        st = state(BETA)
        prog = If(AtomA(BETA), Seq(Add(GAMMA), Skip()), Skip())
        final = eval_program(st, prog, derived(st), fuel=3)
        assert isinstance(final, Final)
        for fuel in (4, 10, 1000):
            assert eval_program(st, prog, derived(st), fuel=fuel) == final

    def test_divergent_loop_never_final(self):
        st = state()
        loop = While(GTrue(), Skip())
        for fuel in (0, 1, 7, 50):
            out = eval_program(st, loop, derived(st), fuel=fuel)
            assert isinstance(out, OutOfFuel)
            assert denotation(loop, derived(st), fuel)(st) is None


class TestDenotation:
    def test_skip_is_identity(self):
        st = state(BETA)
        assert denotation(Skip(), derived(st))(st) == st

    def test_seq_composes(self):
        rng = corpus.make_rng(21)
        for _ in range(30):
            st = corpus.gen_state(rng)
            p = corpus.gen_program(rng, st, 3)
            q = corpus.gen_program(rng, st, 3)
            provider = StateDerivedProvider(st)
            lhs = eval_program(st, Seq(p, q), provider, 60)
            if not isinstance(lhs, Final):
                continue
            mid = eval_program(st, p, provider, 60)
            assert isinstance(mid, Final)
            rhs = eval_program(mid.state, q, provider, 60)
            assert isinstance(rhs, Final)
            assert lhs.state == rhs.state


class TestRestrictProgram:
    def restriction(self, **kwargs):
        return Restriction("U", "V", **kwargs)

    def test_identity_shape_preserved(self):
        prog = If(AtomA(BETA), Add(GAMMA), Skip())
        out = restrict_program(prog, self.restriction())
        assert isinstance(out, If)
        assert out.then == Add(ConceptAssertion("b", Atom("B"), "V"))

    def test_single_node_relabel(self):
        out = restrict_program(Add(BETA), self.restriction())
        assert out == Add(ConceptAssertion("a", Atom("A"), "V"))

    def test_dropped_assertion_raises(self):
        with pytest.raises(ProgramRestrictionError) as err:
            restrict_program(Add(BETA), self.restriction(
                hidden_individuals=frozenset({"a"})))
        assert "add" in err.value.node


@settings(max_examples=60)
@given(programs(3))
def test_skip_unit_for_seq(p):
    rng = corpus.make_rng(1)
    st = state(BETA, RoleAssertion("a", "b", "r", "U"))
    provider = StateDerivedProvider(st)
    base = eval_program(st, p, provider, 30)
    left = eval_program(st, Seq(Skip(), p), provider, 30)
    right = eval_program(st, Seq(p, Skip()), provider, 30)
    assert left == base
    assert right == base


@settings(max_examples=60)
@given(programs(3))
def test_while_unrolling_equivalence(p):
    from tapo.guards import NotG
    st = state(BETA)
    guard = AtomA(GAMMA)  # becomes true if p adds GAMMA
    loop = While(guard, p)
    unrolled = If(guard, Seq(p, loop), Skip())
    provider = StateDerivedProvider(st)
    lhs = eval_program(st, loop, provider, 40)
    if isinstance(lhs, Final):
        rhs = eval_program(st, unrolled, provider, 40)
        assert rhs == lhs


@settings(max_examples=60)
@given(programs(3))
def test_tbox_never_modified(p):
    from tapo.syntax import TBoxAxiom
    st = KnowledgeState((TBoxAxiom(Atom("A"), Atom("B")),), frozenset({BETA}), "U")
    out = eval_program(st, p, StateDerivedProvider(st), 30)
    if isinstance(out, (Final, OutOfFuel)):
        assert out.state.tbox == st.tbox


@settings(max_examples=40)
@given(programs(3))
def test_deterministic(p):
    st = state(BETA)
    provider = StateDerivedProvider(st)
    assert eval_program(st, p, provider, 30) == eval_program(st, p, provider, 30)
