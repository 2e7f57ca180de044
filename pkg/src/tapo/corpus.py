"""Seeded random corpora: small states, programs, guards, and oracle frames
for the soundness harness and the randomized property checks.

Everything is driven by an explicit random.Random so runs are reproducible.
State sizes are kept within the finite-model checker's enumeration budget
(two roles only ever appear alongside a single concept name).
"""
from __future__ import annotations

import random
from itertools import product

from . import oracle as obx
from .derivations import Corpus, OracleCase, TransitionCase
from .guards import (AndG, AtomA, GFalse, GTrue, GuardExpr, GuardProfile, NotG,
                     OrG, StaticProvider, StateDerivedProvider, guard_atoms)
from .programs import Add, Del, If, Program, Seq, Skip, While
from .syntax import (And, Assertion, Atom, Concept, ConceptAssertion, Exists,
                     Forall, KnowledgeState, Not, Or, RoleAssertion, TBoxAxiom,
                     Top, Bottom)

CONTEXT = "U"

ATOM_POOL = ("A", "B", "C")
ROLE_POOL = ("r", "s")
IND_POOL = ("a", "b", "c", "d")

TRUST_CHAIN = ("low", "medium", "high")
CERT_KINDS = ("provenance", "timestamp", "agreement")


def make_rng(seed: int) -> random.Random:
    return random.Random(seed)


# ---------------------------------------------------------------------------
# Concepts, assertions, states
# ---------------------------------------------------------------------------

def gen_concept(rng: random.Random, atoms, roles, depth: int) -> Concept:
    if depth <= 0 or rng.random() < 0.45:
        roll = rng.random()
        if roll < 0.85 or not atoms:
            return Atom(rng.choice(atoms)) if atoms else Top()
        return Top() if roll < 0.93 else Bottom()
    kind = rng.choice(("and", "or", "not", "exists", "forall") if roles
                      else ("and", "or", "not"))
    if kind == "and":
        return And(gen_concept(rng, atoms, roles, depth - 1),
                   gen_concept(rng, atoms, roles, depth - 1))
    if kind == "or":
        return Or(gen_concept(rng, atoms, roles, depth - 1),
                  gen_concept(rng, atoms, roles, depth - 1))
    if kind == "not":
        return Not(gen_concept(rng, atoms, roles, depth - 1))
    role = rng.choice(roles)
    filler = gen_concept(rng, atoms, roles, depth - 1)
    return Exists(role, filler) if kind == "exists" else Forall(role, filler)


def gen_assertion(rng: random.Random, atoms, roles, individuals,
                  concept_depth: int = 2) -> Assertion:
    if roles and rng.random() < 0.3:
        return RoleAssertion(rng.choice(individuals), rng.choice(individuals),
                             rng.choice(roles), CONTEXT)
    return ConceptAssertion(rng.choice(individuals),
                            gen_concept(rng, atoms, roles, concept_depth), CONTEXT)


def gen_state(rng: random.Random, model_checkable: bool = False) -> KnowledgeState:
    """A small random state. With model_checkable=True the occurring names
    stay within the finite-model enumeration budget."""
    if model_checkable:
        roll = rng.random()
        if roll < 0.70:
            atoms, roles, individuals = list(ATOM_POOL[:2]), ["r"], list(IND_POOL[:2])
        elif roll < 0.95:
            atoms, roles, individuals = list(ATOM_POOL), ["r"], list(IND_POOL[:3])
        else:
            atoms, roles, individuals = ["A"], list(ROLE_POOL), list(IND_POOL[:2])
    else:
        atoms = list(ATOM_POOL[:rng.randint(1, 3)])
        roles = list(ROLE_POOL[:rng.randint(1, 2)])
        individuals = list(IND_POOL[:rng.randint(2, 4)])
    tbox = tuple(TBoxAxiom(gen_concept(rng, atoms, roles, 1),
                           gen_concept(rng, atoms, roles, 1))
                 for _ in range(rng.randint(0, 3)))
    abox = frozenset(gen_assertion(rng, atoms, roles, individuals)
                     for _ in range(rng.randint(1, 5)))
    return KnowledgeState(tbox, abox, CONTEXT)


def state_names(state: KnowledgeState):
    atoms: set[str] = set()
    roles: set[str] = set()
    individuals: set[str] = set()
    from .syntax import (assertion_concepts, assertion_individuals, assertion_roles,
                         concept_atoms, concept_roles)
    for ax in state.tbox:
        atoms |= concept_atoms(ax.lhs) | concept_atoms(ax.rhs)
        roles |= concept_roles(ax.lhs) | concept_roles(ax.rhs)
    for a in state.abox:
        atoms |= assertion_concepts(a)
        roles |= assertion_roles(a)
        individuals |= assertion_individuals(a)
    return (sorted(atoms) or ["A"], sorted(roles) or ["r"],
            sorted(individuals) or ["a"])


# ---------------------------------------------------------------------------
# Guards and programs
# ---------------------------------------------------------------------------

def gen_guard(rng: random.Random, atoms: list[GuardExpr], depth: int) -> GuardExpr:
    if depth <= 0 or rng.random() < 0.35:
        roll = rng.random()
        if roll < 0.8 and atoms:
            return rng.choice(atoms)
        return GTrue() if roll < 0.9 else GFalse()
    kind = rng.choice(("and", "or", "not"))
    if kind == "not":
        return NotG(gen_guard(rng, atoms, depth - 1))
    left = gen_guard(rng, atoms, depth - 1)
    right = gen_guard(rng, atoms, depth - 1)
    return AndG(left, right) if kind == "and" else OrG(left, right)


def enumerate_guards(atoms: list[GuardExpr], depth: int) -> list[GuardExpr]:
    """Every guard tree of height <= depth over true, false, and the atoms."""
    seen: list[GuardExpr] = [GTrue(), GFalse(), *atoms]
    known = set(seen)
    for _ in range(depth):
        fresh: list[GuardExpr] = []
        for g in seen:
            candidate = NotG(g)
            if candidate not in known:
                known.add(candidate)
                fresh.append(candidate)
        for left, right in product(seen, repeat=2):
            for ctor in (AndG, OrG):
                candidate = ctor(left, right)
                if candidate not in known:
                    known.add(candidate)
                    fresh.append(candidate)
        seen.extend(fresh)
    return seen


def gen_program(rng: random.Random, state: KnowledgeState, depth: int = 5) -> Program:
    atoms, roles, individuals = state_names(state)
    pool = sorted(state.abox, key=str) + [
        gen_assertion(rng, atoms, roles, individuals) for _ in range(3)]

    def assertion() -> Assertion:
        return rng.choice(pool)

    def guard(levels: int) -> GuardExpr:
        atom_exprs = [AtomA(a) for a in pool]
        return gen_guard(rng, atom_exprs, levels)

    def build(levels: int) -> Program:
        if levels <= 0:
            return rng.choice((Skip(), Add(assertion()), Del(assertion())))
        roll = rng.random()
        if roll < 0.15:
            return Skip()
        if roll < 0.40:
            return Add(assertion())
        if roll < 0.55:
            return Del(assertion())
        if roll < 0.75:
            return Seq(build(levels - 1), build(levels - 1))
        if roll < 0.92:
            return If(guard(min(levels, 2)), build(levels - 1), build(levels - 1))
        return While(guard(min(levels, 2)), build(levels - 1))

    return build(depth)


def program_guard_atoms(prog: Program) -> list[GuardExpr]:
    atoms: list[GuardExpr] = []
    seen: set[GuardExpr] = set()

    def walk(p: Program) -> None:
        if isinstance(p, Seq):
            walk(p.first)
            walk(p.second)
        elif isinstance(p, If):
            for a in guard_atoms(p.guard):
                if a not in seen:
                    seen.add(a)
                    atoms.append(a)
            walk(p.then)
            walk(p.orelse)
        elif isinstance(p, While):
            for a in guard_atoms(p.guard):
                if a not in seen:
                    seen.add(a)
                    atoms.append(a)
            walk(p.body)

    walk(prog)
    return atoms


def gen_provider(rng: random.Random, state: KnowledgeState, prog: Program):
    """Half static profiles (total on the program's atoms), half state-derived."""
    if rng.random() < 0.5:
        return StateDerivedProvider(state)
    profile = GuardProfile(tuple((a, rng.random() < 0.5)
                                 for a in program_guard_atoms(prog)))
    return StaticProvider(profile)


# ---------------------------------------------------------------------------
# Oracle frames
# ---------------------------------------------------------------------------

def gen_frame(rng: random.Random, state: KnowledgeState,
              name: str = "frame") -> obx.OracleFrame:
    atoms, roles, individuals = state_names(state)
    levels = frozenset(TRUST_CHAIN)
    order = frozenset((TRUST_CHAIN[i], TRUST_CHAIN[i + 1])
                      for i in range(len(TRUST_CHAIN) - 1))
    lattice = obx.TrustLattice(levels, order, rng.choice(TRUST_CHAIN))
    queries = {}
    answers = {}
    for i in range(rng.randint(1, 3)):
        qid = f"q{i}"
        queries[qid] = f"generated query {i}"
        if rng.random() < 0.8:
            payload = frozenset(gen_assertion(rng, atoms, roles, individuals)
                                for _ in range(rng.randint(0, 2)))
            certs = frozenset(
                obx.Certificate(f"c{i}{j}", rng.choice(CERT_KINDS))
                for j in range(rng.randint(0, 2)))
            answers[qid] = obx.Response(f"r{i}", payload, rng.choice(TRUST_CHAIN), certs)
    rules = tuple(
        obx.PolicyRule(rng.choice(obx.VERDICTS) if i else obx.ACCEPT,
                       rng.choice(TRUST_CHAIN),
                       frozenset(rng.sample(CERT_KINDS, rng.randint(0, 2))))
        for i in range(rng.randint(1, 3)))
    policy = obx.ValidationPolicy(rules, rng.choice(obx.VERDICTS))
    frame = obx.OracleFrame(name, CONTEXT, queries, answers, lattice, policy)
    frame.validate()
    return frame


# ---------------------------------------------------------------------------
# Harness corpora
# ---------------------------------------------------------------------------

def build_corpus(seed: int, transitions: int = 1000, oracle_steps: int = 500,
                 static_states: int = 0, program_depth: int = 5) -> Corpus:
    rng = make_rng(seed)
    corpus = Corpus()
    for _ in range(transitions):
        state = gen_state(rng)
        prog = gen_program(rng, state, program_depth)
        corpus.transition_cases.append(
            TransitionCase(state, prog, gen_provider(rng, state, prog)))
    for _ in range(oracle_steps):
        state = gen_state(rng)
        frame = gen_frame(rng, state)
        query = rng.choice(sorted(frame.queries))
        corpus.oracle_cases.append(OracleCase(frame, state, query))
    for _ in range(static_states):
        corpus.static_states.append(gen_state(rng, model_checkable=True))
    return corpus
