"""Hypothesis strategies for the core value types."""
from hypothesis import strategies as st

from tapo.guards import AndG, AtomA, AtomSub, GFalse, GTrue, NotG, OrG
from tapo.programs import Add, Del, If, Seq, Skip, While
from tapo.syntax import (And, Atom, Bottom, ConceptAssertion, Exists, Forall,
                         Not, Or, RoleAssertion, Top)

CONTEXT = "U"

atom_names = st.sampled_from(["A", "B", "C", "D"])
role_names = st.sampled_from(["r", "s"])
individual_names = st.sampled_from(["a", "b", "c"])


def concepts(max_depth: int = 3):
    base = st.one_of(
        st.builds(Atom, atom_names),
        st.just(Top()),
        st.just(Bottom()),
    )
    return st.recursive(
        base,
        lambda inner: st.one_of(
            st.builds(And, inner, inner),
            st.builds(Or, inner, inner),
            st.builds(Not, inner),
            st.builds(Exists, role_names, inner),
            st.builds(Forall, role_names, inner),
        ),
        max_leaves=2 ** max_depth,
    )


def assertions():
    return st.one_of(
        st.builds(ConceptAssertion, individual_names, concepts(2), st.just(CONTEXT)),
        st.builds(RoleAssertion, individual_names, individual_names, role_names,
                  st.just(CONTEXT)),
    )


def guard_atoms():
    return st.one_of(
        st.builds(AtomA, assertions()),
        st.builds(AtomSub, concepts(1), concepts(1)),
    )


def guards(max_depth: int = 3):
    base = st.one_of(st.just(GTrue()), st.just(GFalse()), guard_atoms())
    return st.recursive(
        base,
        lambda inner: st.one_of(
            st.builds(AndG, inner, inner),
            st.builds(OrG, inner, inner),
            st.builds(NotG, inner),
        ),
        max_leaves=2 ** max_depth,
    )


def programs(max_depth: int = 4):
    base = st.one_of(
        st.just(Skip()),
        st.builds(Add, assertions()),
        st.builds(Del, assertions()),
    )
    return st.recursive(
        base,
        lambda inner: st.one_of(
            st.builds(Seq, inner, inner),
            st.builds(If, guards(2), inner, inner),
            st.builds(While, guards(2), inner),
        ),
        max_leaves=2 ** max_depth,
    )
