"""Static reasoning: subsumption derivation, forward-chaining saturation of
assertion rules with full traces, and the TBox-compatibility (clash) check.

The subsumption calculus is deliberately modest: reflexivity, transitivity,
declared axioms, conjunction projections, and the bot/top facts. It is not a
full ALC tableau and makes no completeness claim. Saturation restricts
conjunction introduction to conjunctions occurring as subconcepts of the TBox
or ABox so the closure stays finite; existential introduction is unrestricted
and is bounded by the round limit instead (a truncated run is flagged).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .syntax import (And, Assertion, Bottom, Concept, ConceptAssertion,
                     ContextMismatchError, Exists, KnowledgeState, Not,
                     RoleAssertion, TBoxAxiom, Top, assertion_str, subconcepts)

# Rule tags for derivation steps.
R_TSUB = "T-Sub"
R_ANDI = "AndI"
R_ANDE1 = "AndE1"
R_ANDE2 = "AndE2"
R_EXISTSI = "ExistsI"
R_AAX = "A-Ax"
R_RAX = "R-Ax"
R_SUBREFL = "SubRefl"
R_SUBTRANS = "SubTrans"
R_SUBAXIOM = "SubAxiom"
R_SUBCONJPROJ = "SubConjProj"
R_SUBBOT = "SubBot"
R_SUBTOP = "SubTop"

Fact = Union[Assertion, TBoxAxiom]

DEFAULT_MAX_DEPTH = 32


def fact_str(f: Fact) -> str:
    return str(f) if isinstance(f, TBoxAxiom) else assertion_str(f)


@dataclass(frozen=True)
class DerivationStep:
    rule: str
    premises: tuple[Fact, ...]
    conclusion: Fact


@dataclass(frozen=True)
class DerivationTree:
    step: DerivationStep
    children: tuple["DerivationTree", ...]

    @property
    def rule(self) -> str:
        return self.step.rule

    @property
    def conclusion(self) -> Fact:
        return self.step.conclusion


def _leaf(rule: str, conclusion: Fact) -> DerivationTree:
    return DerivationTree(DerivationStep(rule, (), conclusion), ())


# ---------------------------------------------------------------------------
# Subsumption
# ---------------------------------------------------------------------------

def _one_step_edges(tbox: list[TBoxAxiom], c: Concept):
    """Single-rule subsumption facts with c on the left."""
    for ax in tbox:
        if ax.lhs == c:
            yield ax.rhs, _leaf(R_SUBAXIOM, TBoxAxiom(c, ax.rhs))
    if isinstance(c, And):
        yield c.left, _leaf(R_SUBCONJPROJ, TBoxAxiom(c, c.left))
        yield c.right, _leaf(R_SUBCONJPROJ, TBoxAxiom(c, c.right))


def derive_subsumption(tbox: list[TBoxAxiom], c: Concept, d: Concept
                       ) -> Optional[DerivationTree]:
    """Derivation of c sub d in the implemented calculus, or None.

    Total: never raises on well-formed concepts.
    """
    if c == d:
        return _leaf(R_SUBREFL, TBoxAxiom(c, d))
    if isinstance(c, Bottom):
        return _leaf(R_SUBBOT, TBoxAxiom(c, d))
    if isinstance(d, Top):
        return _leaf(R_SUBTOP, TBoxAxiom(c, d))
    # breadth-first search over one-step edges, rebuilt into SubTrans chains
    parent: dict[Concept, tuple[Concept, DerivationTree]] = {}
    seen = {c}
    frontier = [c]
    found = False
    while frontier and not found:
        nxt: list[Concept] = []
        for x in frontier:
            for y, tree in _one_step_edges(tbox, x):
                if y in seen:
                    continue
                seen.add(y)
                parent[y] = (x, tree)
                if y == d:
                    found = True
                    break
                nxt.append(y)
            if found:
                break
        frontier = nxt
    if not found:
        return None
    # reconstruct the path c -> ... -> d
    chain: list[DerivationTree] = []
    node = d
    while node != c:
        prev, tree = parent[node]
        chain.append(tree)
        node = prev
    chain.reverse()
    out = chain[0]
    for tree in chain[1:]:
        step = DerivationStep(R_SUBTRANS,
                              (out.conclusion, tree.conclusion),
                              TBoxAxiom(c, tree.conclusion.rhs))
        out = DerivationTree(step, (out, tree))
    return out


# ---------------------------------------------------------------------------
# Saturation
# ---------------------------------------------------------------------------

@dataclass
class Saturation:
    base: KnowledgeState
    derived: frozenset[Assertion]
    trace: tuple[DerivationStep, ...]
    depth_used: int
    truncated: bool = False


# Safety valve: existential introduction is unrestricted, so cyclic role facts
# grow nested concepts without bound; past this many facts the run is cut off
# and flagged truncated.
DEFAULT_MAX_FACTS = 512


def _occurring_concepts(state: KnowledgeState) -> set[Concept]:
    occ: set[Concept] = set()
    for ax in state.tbox:
        occ.update(subconcepts(ax.lhs))
        occ.update(subconcepts(ax.rhs))
    for a in state.abox:
        if isinstance(a, ConceptAssertion):
            occ.update(subconcepts(a.concept))
    return occ


def saturate(state: KnowledgeState, max_depth: int = DEFAULT_MAX_DEPTH,
             max_facts: int = DEFAULT_MAX_FACTS) -> Saturation:
    """Least fixed point of the six assertion rules, up to max_depth rounds.

    The trace records one step per newly derived fact, each step's premises
    already derived earlier in the trace. Hitting the round limit or the
    fact cap before the fixpoint flags the result truncated.
    """
    tbox = list(state.tbox)
    ctx = state.context
    occ = sorted(_occurring_concepts(state), key=str)
    conjunctions = [c for c in occ if isinstance(c, And)]
    has_top = any(isinstance(c, Top) for c in occ)

    # subsumption closure over occurring concepts, computed once; concepts
    # built by ExistsI are fresh, so their only nontrivial target is top
    sub_targets: dict[Concept, list] = {}
    for c in occ:
        targets = []
        for d in occ:
            if d == c:
                continue
            tree = derive_subsumption(tbox, c, d)
            if tree is not None:
                targets.append((d, tree))
        sub_targets[c] = targets
    top_tree_cache: dict[Concept, DerivationTree] = {}

    def tsub_targets(c: Concept) -> list:
        if c in sub_targets:
            return sub_targets[c]
        if has_top and not isinstance(c, Top):
            if c not in top_tree_cache:
                top_tree_cache[c] = _leaf(R_SUBTOP, TBoxAxiom(c, Top()))
            return [(Top(), top_tree_cache[c])]
        return []

    conj_by_part: dict[Concept, list[Concept]] = {}
    for conj in conjunctions:
        conj_by_part.setdefault(conj.left, []).append(conj)
        if conj.right != conj.left:
            conj_by_part.setdefault(conj.right, []).append(conj)

    derived: set[Assertion] = set()
    trace: list[DerivationStep] = []
    by_individual: dict[str, set[Concept]] = {}
    # no rule concludes a role assertion, so role facts are fixed at the base
    roles_into: dict[str, list[RoleAssertion]] = {}
    capped = False

    def record(rule: str, premises: tuple[Fact, ...], conclusion: Assertion,
               sink: list) -> None:
        nonlocal capped
        if conclusion in derived:
            return
        if len(derived) >= max_facts:
            capped = True
            return
        derived.add(conclusion)
        trace.append(DerivationStep(rule, premises, conclusion))
        if isinstance(conclusion, ConceptAssertion):
            by_individual.setdefault(conclusion.individual, set()).add(
                conclusion.concept)
        else:
            roles_into.setdefault(conclusion.target, []).append(conclusion)
        sink.append(conclusion)

    def consequences(delta: list[Assertion], sink: list, dry_run: bool) -> bool:
        """Fire every rule instance with a premise in delta; True if any new."""
        found = False

        def emit(rule, premises, conclusion) -> bool:
            nonlocal found
            if conclusion in derived:
                return False
            found = True
            if not dry_run:
                record(rule, premises, conclusion, sink)
            return dry_run  # in dry-run mode one hit is enough

        for fact in delta:
            if isinstance(fact, RoleAssertion):
                for c in sorted(by_individual.get(fact.target, ()), key=str):
                    witness = ConceptAssertion(fact.target, c, ctx)
                    if emit(R_EXISTSI, (fact, witness),
                            ConceptAssertion(fact.subject, Exists(fact.role, c), ctx)):
                        return True
                continue
            concept, ind = fact.concept, fact.individual
            for d, tree in tsub_targets(concept):
                if emit(R_TSUB, (tree.conclusion, fact),
                        ConceptAssertion(ind, d, ctx)):
                    return True
            if isinstance(concept, And):
                for rule, part in ((R_ANDE1, concept.left), (R_ANDE2, concept.right)):
                    if emit(rule, (fact,), ConceptAssertion(ind, part, ctx)):
                        return True
            for conj in conj_by_part.get(concept, ()):
                have = by_individual.get(ind, ())
                if conj.left in have and conj.right in have:
                    left = ConceptAssertion(ind, conj.left, ctx)
                    right = ConceptAssertion(ind, conj.right, ctx)
                    if emit(R_ANDI, (left, right), ConceptAssertion(ind, conj, ctx)):
                        return True
            for role_fact in roles_into.get(ind, ()):
                if emit(R_EXISTSI, (role_fact, fact),
                        ConceptAssertion(role_fact.subject,
                                         Exists(role_fact.role, concept), ctx)):
                    return True
        return found

    pending: list[Assertion] = []
    for a in sorted(state.abox, key=assertion_str):
        record(R_AAX if isinstance(a, ConceptAssertion) else R_RAX, (), a, pending)

    rounds = 0
    truncated = False
    while True:
        if rounds >= max_depth:
            # one more pass would still add facts: flag the truncation
            truncated = consequences(pending, [], dry_run=True)
            break
        fresh: list[Assertion] = []
        consequences(pending, fresh, dry_run=False)
        if not fresh:
            break
        rounds += 1
        pending = fresh

    return Saturation(state, frozenset(derived), tuple(trace), rounds,
                      truncated or capped)


# ---------------------------------------------------------------------------
# Entailment with tree extraction
# ---------------------------------------------------------------------------

def entails(state: KnowledgeState, goal: Assertion,
            max_depth: int = DEFAULT_MAX_DEPTH) -> Optional[DerivationTree]:
    """Derivation tree for goal extracted from saturation, or None."""
    if goal.context != state.context:
        raise ContextMismatchError(state.context, goal.context, "goal")
    sat = saturate(state, max_depth)
    if goal not in sat.derived:
        return None
    return extract_tree(sat, goal)


def extract_tree(sat: Saturation, goal: Fact) -> DerivationTree:
    """Rebuild a derivation tree for a derived fact from a saturation trace."""
    concluding: dict[Fact, DerivationStep] = {}
    for step in sat.trace:
        concluding.setdefault(step.conclusion, step)

    def build(fact: Fact, depth: int) -> DerivationTree:
        step = concluding.get(fact)
        if step is None:
            # subsumption premises are rebuilt by the subsumption engine
            if isinstance(fact, TBoxAxiom):
                tree = derive_subsumption(list(sat.base.tbox), fact.lhs, fact.rhs)
                if tree is not None:
                    return tree
            raise KeyError(f"no step concludes {fact_str(fact)}")
        children = tuple(build(p, depth + 1) for p in step.premises)
        return DerivationTree(step, children)

    return build(goal, 0)


# ---------------------------------------------------------------------------
# TBox compatibility
# ---------------------------------------------------------------------------

def saturation_to_json(sat: Saturation) -> list[dict]:
    """Trace as JSON: rule tag, premises by trace index, conclusion in DSL
    syntax. Subsumption premises rebuilt by the calculus have no trace index
    and are serialized inline."""
    index: dict[Fact, int] = {}
    out = []
    for i, step in enumerate(sat.trace):
        index.setdefault(step.conclusion, i)
        premises: list = []
        for p in step.premises:
            premises.append(index[p] if p in index else fact_str(p))
        out.append({"rule": step.rule, "premises": premises,
                    "conclusion": fact_str(step.conclusion)})
    return out


@dataclass(frozen=True)
class CompatVerdict:
    compatible: bool
    clashes: tuple[Assertion, ...] = ()


def check_t_compatibility(tbox: list[TBoxAxiom], assertions: frozenset[Assertion],
                          max_depth: int = DEFAULT_MAX_DEPTH) -> CompatVerdict:
    """Clash iff saturation derives some a:bot, or a complementary pair
    a:C and a:(not C)."""
    if not assertions:
        return CompatVerdict(True)
    ctx = next(iter(assertions)).context
    state = KnowledgeState(tuple(tbox), frozenset(assertions), ctx)
    sat = saturate(state, max_depth)
    facts: set[tuple[str, Concept]] = set()
    for a in sat.derived:
        if isinstance(a, ConceptAssertion):
            facts.add((a.individual, a.concept))
    clashes: list[Assertion] = []
    for ind, c in sorted(facts, key=lambda ic: (ic[0], str(ic[1]))):
        if isinstance(c, Bottom):
            clashes.append(ConceptAssertion(ind, c, ctx))
        if (ind, Not(c)) in facts:
            clashes.append(ConceptAssertion(ind, c, ctx))
            clashes.append(ConceptAssertion(ind, Not(c), ctx))
    if clashes:
        # deduplicate, preserving order
        unique = list(dict.fromkeys(clashes))
        return CompatVerdict(False, tuple(unique))
    return CompatVerdict(True)
