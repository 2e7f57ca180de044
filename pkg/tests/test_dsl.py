import pytest
from hypothesis import given, settings

from tapo import dsl
from tapo.dsl import ParseError, UnknownNameParseError, parse_kb
from tapo.guards import guard_str
from tapo.programs import program_str
from tapo.syntax import (And, Atom, ConceptAssertion, Exists, RoleAssertion, Top,
                         assertion_str, concept_str)

from .strategies import assertions, concepts, guards, programs

SIG_TEXT = """
signature {
  concepts A, B, C, D, TrustedCue
  roles r, s, hasCue
  individuals a, b, c
}
context U
"""


def sig():
    return dsl.parse_kb_document(SIG_TEXT).signature


class TestConceptParsing:
    def test_top_base_case(self):
        assert dsl.parse_concept("top", sig()) == Top()

    def test_conjunction(self):
        assert dsl.parse_concept("A and B", sig()) == And(Atom("A"), Atom("B"))

    def test_exists(self):
        assert dsl.parse_concept("exists hasCue.TrustedCue", sig()) == \
            Exists("hasCue", Atom("TrustedCue"))

    def test_precedence_not_binds_tight(self):
        c = dsl.parse_concept("not A and B", sig())
        assert c == And(dsl.parse_concept("not A", sig()), Atom("B"))

    def test_syntax_error_position(self):
        with pytest.raises(ParseError) as err:
            dsl.parse_concept("A and", sig())
        assert err.value.line == 1

    def test_unknown_name_reported(self):
        with pytest.raises(UnknownNameParseError) as err:
            dsl.parse_concept("A and Zed", sig())
        assert err.value.name == "Zed"


class TestKBParsing:
    def test_empty_document(self):
        signature, objects = parse_kb("")
        assert objects == []
        assert not signature.concept_names

    def test_duplicate_declaration(self):
        with pytest.raises(ParseError):
            parse_kb("signature { concepts A, A }")

    def test_dangling_context(self):
        with pytest.raises(ParseError):
            parse_kb(SIG_TEXT + "abox { a : A @ V }")

    def test_cross_kind_collision(self):
        with pytest.raises(ParseError):
            parse_kb("signature { concepts A roles A }")

    def test_objects_per_context(self):
        text = SIG_TEXT + "context V\nabox { a : A @ U  b : B @ V }"
        signature, objects = parse_kb(text)
        assert len(objects) == 2
        by_ctx = {o.state.context: o for o in objects}
        assert ConceptAssertion("a", Atom("A"), "U") in by_ctx["U"].state.abox
        assert ConceptAssertion("b", Atom("B"), "V") in by_ctx["V"].state.abox

    def test_program_context_mismatch_rejected(self):
        text = SIG_TEXT + "context V\npbox { program P @ V { add a : A @ U } }"
        with pytest.raises(ParseError):
            parse_kb(text)

    def test_role_assertion(self):
        text = SIG_TEXT + "abox { (a, b) : r @ U }"
        _, objects = parse_kb(text)
        assert RoleAssertion("a", "b", "r", "U") in objects[0].state.abox


class TestCurryFixture:
    def test_curry_kb_content(self, fixture_text):
        scenario_text = fixture_text("curry_v.tapo")
        from tapo.scenario import parse_scenario
        scenario = parse_scenario(scenario_text)
        abox = scenario.kb.objects["U"].state.abox
        assert ConceptAssertion("c1", Atom("LowSpice"), "U") in abox
        assert ConceptAssertion("c2", Atom("MediumSpice"), "U") in abox
        assert ConceptAssertion("c3", Atom("HighSpice"), "U") in abox

    def test_search_fixture_content(self, fixture_text):
        from tapo.scenario import parse_scenario
        scenario = parse_scenario(fixture_text("search_refine.tapo"))
        abox = scenario.kb.objects["U"].state.abox
        assert ConceptAssertion("q", Atom("Query"), "U") in abox
        assert ConceptAssertion("q", Atom("Underspecified"), "U") in abox


@settings(max_examples=150)
@given(concepts())
def test_concept_roundtrip(c):
    assert dsl.parse_concept(concept_str(c), None) == c


@settings(max_examples=100)
@given(assertions())
def test_assertion_roundtrip(a):
    assert dsl.parse_assertion(assertion_str(a)) == a


@settings(max_examples=150)
@given(guards())
def test_guard_roundtrip(g):
    assert dsl.parse_guard(guard_str(g)) == g


@settings(max_examples=150)
@given(programs())
def test_program_roundtrip(p):
    assert dsl.parse_program(program_str(p)) == p
