import pytest

from tapo.models import ModelSearchTooLarge, find_violations, premises_entail
from tapo.syntax import (And, Atom, Bottom, ConceptAssertion, Exists, Forall,
                         Or, RoleAssertion, TBoxAxiom, Top)

A, B, C = Atom("A"), Atom("B"), Atom("C")


def ca(ind, concept):
    return ConceptAssertion(ind, concept, "U")


class TestEntailment:
    def test_conjunction_projection_tautology(self):
        assert premises_entail([], TBoxAxiom(And(A, B), A))

    def test_axiom_is_not_a_tautology(self):
        assert not premises_entail([], TBoxAxiom(A, B))

    def test_transitivity(self):
        assert premises_entail([TBoxAxiom(A, B), TBoxAxiom(B, C)], TBoxAxiom(A, C))

    def test_tsub_step(self):
        assert premises_entail([TBoxAxiom(A, B), ca("a", A)], ca("a", B))

    def test_exists_intro_step(self):
        premises = [RoleAssertion("a", "b", "r", "U"), ca("b", C)]
        assert premises_entail(premises, ca("a", Exists("r", C)))

    def test_negation_blocks(self):
        assert not premises_entail([ca("a", Or(A, B))], ca("a", A))

    def test_forall_semantics(self):
        premises = [ca("a", Forall("r", C)), RoleAssertion("a", "b", "r", "U")]
        assert premises_entail(premises, ca("b", C))

    def test_bottom_unsatisfiable_base_entails_anything(self):
        assert premises_entail([ca("a", Bottom())], ca("b", C))

    def test_top_always_holds(self):
        assert premises_entail([], ca("a", Top()))


class TestViolations:
    def test_violation_reports_goal_and_domain(self):
        violations = find_violations([ca("a", A)], [ca("a", B)])
        assert violations
        assert violations[0].goal == ca("a", B)
        assert 1 <= violations[0].domain_size <= 3

    def test_first_only_short_circuits(self):
        violations = find_violations([], [ca("a", A), ca("a", B)], first_only=True)
        assert len(violations) == 1

    def test_cell_limit_guard(self):
        constraints = [ca("a", Atom(f"A{i}")) for i in range(12)]
        with pytest.raises(ModelSearchTooLarge):
            find_violations(constraints, [ca("a", A)], cell_limit=1 << 10)
