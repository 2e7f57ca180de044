import pytest

from tapo.dsl import parse_kb_document
from tapo.guards import StateDerivedProvider
from tapo.presheaf import (PresheafError, Restriction, StateFamily,
                           check_functoriality, check_oracle_compat,
                           check_procedure_compat, glue, restrict_state)
from tapo.syntax import (Atom, ConceptAssertion, ContextPoset, Not, TapoObject)


def load_family(text: str) -> StateFamily:
    doc = parse_kb_document(text)
    fam = StateFamily(doc.signature.contexts, doc.objects, doc.restrictions)
    fam.validate()
    return fam


def family_from_fixture(fixture_text, name: str) -> StateFamily:
    return load_family(fixture_text(name))


class TestRestrictState:
    def curry_family(self, fixture_text):
        return family_from_fixture(fixture_text, "curry_family.tapo")

    def test_identity_restriction(self, fixture_text):
        fam = self.curry_family(fixture_text)
        obj = fam.states["U"]
        identity = Restriction("U", "U")
        out = restrict_state(identity, obj)
        assert out.state == obj.state
        assert out.pbox == obj.pbox

    def test_hiding_customers_drops_their_assertions(self, fixture_text):
        fam = self.curry_family(fixture_text)
        obj = fam.states["U"]
        out = restrict_state(fam.restrictions[("U", "V")], obj)
        individuals = {a.individual if isinstance(a, ConceptAssertion) else a.subject
                       for a in out.state.abox}
        assert "u" not in individuals and "v" not in individuals
        assert out.state.abox == fam.states["V"].state.abox

    def test_tbox_passes_through(self, fixture_text):
        fam = family_from_fixture(fixture_text, "family_chain.tapo")
        obj = fam.states["U"]
        out = restrict_state(fam.restrictions[("U", "V")], obj)
        assert out.state.tbox == obj.state.tbox

    def test_program_restriction_failure_names_program(self):
        doc = parse_kb_document("""
            signature { concepts A individuals a }
            context U
            context V refines U
            pbox { program P @ U { add a : A @ U } }
            restriction U -> V { hide a }
        """)
        with pytest.raises(PresheafError) as err:
            restrict_state(doc.restrictions[("U", "V")], doc.objects["U"])
        assert "P" in str(err.value)


class TestFunctoriality:
    def test_single_context_trivially_passes(self):
        fam = load_family("signature { concepts A individuals a }\ncontext U\n"
                          "abox { a : A @ U }")
        assert check_functoriality(fam).ok

    def test_consistent_chain_passes(self, fixture_text):
        fam = family_from_fixture(fixture_text, "family_chain.tapo")
        report = check_functoriality(fam)
        assert report.ok
        assert report.pairs_checked >= 1

    def test_mismatched_diamond_reported(self, fixture_text):
        fam = family_from_fixture(fixture_text, "family_diamond_bad.tapo")
        report = check_functoriality(fam)
        assert not report.ok
        violation = report.violations[0]
        assert violation.source == "U" and violation.target == "W"


class TestProcedureCompat:
    def test_skip_everywhere_passes(self):
        doc = parse_kb_document("""
            signature { concepts A individuals a }
            context U
            context V refines U
            abox { a : A @ U  a : A @ V }
            pbox { program P @ U { skip } program P @ V { skip } }
            restriction U -> V { }
        """)
        fam = StateFamily(doc.signature.contexts, doc.objects, doc.restrictions)
        report = check_procedure_compat(fam, "P", StateDerivedProvider, 100)
        assert report.ok
        assert any(e.status == "ok" for e in report.entries)

    def test_add_surviving_restriction_commutes(self, fixture_text):
        fam = family_from_fixture(fixture_text, "curry_family.tapo")
        report = check_procedure_compat(fam, "P_u", StateDerivedProvider, 100)
        assert report.ok
        assert [e.status for e in report.entries] == ["ok"]

    def test_dropped_assertion_reported_as_restriction_error(self):
        doc = parse_kb_document("""
            signature { concepts A, B individuals a, b }
            context U
            context V refines U
            abox { a : A @ U }
            pbox { program P @ U { add b : B @ U } }
            restriction U -> V { hide b }
        """)
        fam = StateFamily(doc.signature.contexts, doc.objects, doc.restrictions)
        report = check_procedure_compat(fam, "P", StateDerivedProvider, 100)
        assert [e.status for e in report.entries] == ["restriction-error"]


class TestOracleCompat:
    def test_identity_edge_passes(self):
        doc = parse_kb_document("""
            signature { concepts A individuals a }
            context U
            abox { a : A @ U }
            obox {
              frame f @ U {
                levels low, high
                order low < high
                threshold low
                query q "anything?"
                response r answers q trust high {
                  import a : A @ U
                  cert c kind provenance
                }
                policy { default accept }
              }
            }
            restriction U -> U { }
        """)
        fam = StateFamily(doc.signature.contexts, doc.objects, doc.restrictions)
        report = check_oracle_compat(fam, "f")
        assert report.ok
        assert [e.status for e in report.entries] == ["ok"]

    def test_curry_family_commutes(self, fixture_text):
        fam = family_from_fixture(fixture_text, "curry_family.tapo")
        report = check_oracle_compat(fam, "reviews")
        assert report.ok
        assert len(report.entries) == 2  # two queries over one edge

    def test_stricter_lower_threshold_diverges(self, fixture_text):
        text = fixture_text("curry_family.tapo").replace(
            """  frame reviews @ V {
    levels low, medium, high
    order low < medium < high
    threshold medium""",
            """  frame reviews @ V {
    levels low, medium, high
    order low < medium < high
    threshold high""", 1)
        fam = load_family(text)
        report = check_oracle_compat(fam, "reviews")
        assert report.ok  # both responses carry high trust, so still fine
        text2 = text.replace("response r2 answers q2 trust high {\n"
                             "      import c3 : AdjustableOnRequest @ V",
                             "response r2 answers q2 trust medium {\n"
                             "      import c3 : AdjustableOnRequest @ V", 1)
        fam2 = load_family(text2)
        report2 = check_oracle_compat(fam2, "reviews")
        assert not report2.ok
        bad = [e for e in report2.entries if e.status == "mismatch"]
        assert bad and "trust" in bad[0].detail

    def test_missing_frame_is_configuration_error(self):
        doc = parse_kb_document("""
            signature { concepts A individuals a }
            context U
            context V refines U
            abox { a : A @ U }
            obox {
              frame f @ U {
                levels low, high
                order low < high
                threshold low
                query q "anything?"
                policy { default accept }
              }
            }
            restriction U -> V { }
        """)
        fam = StateFamily(doc.signature.contexts, doc.objects, doc.restrictions)
        with pytest.raises(PresheafError):
            check_oracle_compat(fam, "f")


def split_family(doc_text: str, hide_first: str, hide_second: str) -> StateFamily:
    """Split a one-context KB at U into a two-member cover by hiding."""
    base = parse_kb_document(doc_text)
    poset = ContextPoset(frozenset({"U", "V1", "V2", "W"}),
                         frozenset({("V1", "U"), ("V2", "U"),
                                    ("W", "V1"), ("W", "V2")}))
    r1 = Restriction("U", "V1", hidden_individuals=frozenset({hide_first}))
    r2 = Restriction("U", "V2", hidden_individuals=frozenset({hide_second}))
    both = frozenset({hide_first, hide_second})
    rw1 = Restriction("V1", "W", hidden_individuals=both - {hide_first})
    rw2 = Restriction("V2", "W", hidden_individuals=both - {hide_second})
    obj = base.objects["U"]
    v1 = restrict_state(r1, obj)
    v2 = restrict_state(r2, obj)
    return StateFamily(poset,
                       {"U": obj, "V1": v1, "V2": v2},
                       {("U", "V1"): r1, ("U", "V2"): r2,
                        ("V1", "W"): rw1, ("V2", "W"): rw2})


CURRY_STATE_ONLY = """
signature {
  concepts Customer, Curry, LowSpice, MediumSpice, HighSpice, RiskyMenuImpression
  roles Orders
  individuals u, c1, c3
}
context U
abox {
  u : Customer @ U
  c1 : Curry @ U
  c1 : LowSpice @ U
  c3 : Curry @ U
  c3 : HighSpice @ U
  c3 : RiskyMenuImpression @ U
  (u, c1) : Orders @ U
}
"""


class TestGlue:
    def test_singleton_cover_returns_the_state(self):
        doc = parse_kb_document(CURRY_STATE_ONLY)
        poset = ContextPoset(frozenset({"U"}), frozenset())
        fam = StateFamily(poset, {"U": doc.objects["U"]}, {})
        result = glue(fam, ["U"], "U")
        assert result.kind == "glued"
        assert result.glued.state == doc.objects["U"].state

    def test_compatible_split_glues_to_all_dishes(self):
        fam = split_family(CURRY_STATE_ONLY, "c1", "c3")
        result = glue(fam, ["V1", "V2"], "U")
        assert result.kind == "glued"
        assert result.glued.state.abox == fam.states["U"].state.abox

    def test_conflicting_cover_reports_the_pair(self):
        doc1 = parse_kb_document(CURRY_STATE_ONLY)
        fam = split_family(CURRY_STATE_ONLY, "c1", "c3")
        # plant a clash: V1 says risky, V2 says not risky (about u, seen by both)
        risky = ConceptAssertion("u", Atom("RiskyMenuImpression"), "V1")
        unrisky = ConceptAssertion("u", Not(Atom("RiskyMenuImpression")), "V2")
        v1 = fam.states["V1"]
        v2 = fam.states["V2"]
        fam.states["V1"] = TapoObject(v1.state.add(risky), v1.pbox, v1.obox)
        fam.states["V2"] = TapoObject(v2.state.add(unrisky), v2.pbox, v2.obox)
        result = glue(fam, ["V1", "V2"], "U")
        assert result.kind == "conflict"
        assert set(result.evidence) == {
            "u : RiskyMenuImpression @ W",
            "u : not RiskyMenuImpression @ W",
        }

    def test_meetless_pairs_flagged_vacuous(self):
        base = parse_kb_document(CURRY_STATE_ONLY)
        poset = ContextPoset(frozenset({"U", "V1", "V2"}),
                             frozenset({("V1", "U"), ("V2", "U")}))
        r1 = Restriction("U", "V1")
        r2 = Restriction("U", "V2")
        obj = base.objects["U"]
        fam = StateFamily(poset, {"U": obj,
                                  "V1": restrict_state(r1, obj),
                                  "V2": restrict_state(r2, obj)},
                          {("U", "V1"): r1, ("U", "V2"): r2})
        result = glue(fam, ["V1", "V2"], "U")
        assert result.kind == "glued"
        assert result.vacuous_pairs == (("V1", "V2"),)

    def test_not_unique_when_assertion_invisible_everywhere(self):
        fam = split_family(CURRY_STATE_ONLY, "c1", "c3")
        # an assertion only about an individual hidden from both members
        hidden = ConceptAssertion("c9", Atom("Curry"), "U")
        r1 = fam.restrictions[("U", "V1")]
        r2 = fam.restrictions[("U", "V2")]
        fam.restrictions[("U", "V1")] = Restriction(
            "U", "V1", r1.hidden_individuals | {"c9"})
        fam.restrictions[("U", "V2")] = Restriction(
            "U", "V2", r2.hidden_individuals | {"c9"})
        base = fam.states["U"]
        fam.states["U"] = TapoObject(base.state.add(hidden), base.pbox, base.obox)
        result = glue(fam, ["V1", "V2"], "U")
        assert result.kind == "not-unique"
        assert "c9 : Curry @ U" in result.evidence

    def test_cover_member_must_refine(self):
        fam = split_family(CURRY_STATE_ONLY, "c1", "c3")
        with pytest.raises(PresheafError):
            glue(fam, ["U", "V1"], "V2")


def test_glue_after_restrict_is_identity_for_every_two_cover():
    # a cover reconstructs the state exactly when its members jointly see
    # every assertion; a jointly-invisible assertion is flagged not-unique
    from tapo.syntax import assertion_individuals
    individuals = ["u", "c1", "c3"]
    base = parse_kb_document(CURRY_STATE_ONLY).objects["U"]
    for first in individuals:
        for second in individuals:
            if first == second:
                continue
            fam = split_family(CURRY_STATE_ONLY, first, second)
            jointly_faithful = all(
                not ({first} & assertion_individuals(a)
                     and {second} & assertion_individuals(a))
                for a in base.state.abox)
            result = glue(fam, ["V1", "V2"], "U")
            if jointly_faithful:
                assert result.kind == "glued", (first, second, result.evidence)
                assert result.glued.state.abox == fam.states["U"].state.abox
            else:
                assert result.kind == "not-unique"
