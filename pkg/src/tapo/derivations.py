"""Explicit proof trees over the five judgment kinds, a checker validating
them against the rule schemata, the consult bridge between the procedural
and oracle layers, and the soundness harness pairing derivations with the
interpreter.

Trees store full judgments at every node so checking needs no reconstruction.
Guard nodes name their provider and record the claimed value; the checker
re-queries the provider, rebinding state-derived providers to the enclosing
transition's input state.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import models, oracle as obx, reasoner
from .guards import (AndG, AtomA, AtomSub, GFalse, GTrue, GuardExpr,
                     GuardProvider, NotG, OrG, guard_str)
from .programs import (Add, Consult, Del, If, Program, Seq, Skip, While,
                       Final, eval_program, program_context, program_str)
from .syntax import (Assertion, Atom, Bottom, Concept, ConceptAssertion,
                     KnowledgeState, RoleAssertion, TBoxAxiom, TapoError, Top,
                     assertion_str, concept_str, state_digest)

HESITATION_CONCEPT = "ReviewConsultationNeeded"

# Guard rule tags
G_TRUE = "GuardTrue"
G_FALSE = "GuardFalse"
G_ATOM = "GuardAtom"
G_AND = "GuardAnd"
G_OR = "GuardOr"
G_NOT = "GuardNot"

# Transition rule tags
T_SKIP = "Skip"
T_ADD = "Add"
T_DEL = "Del"
T_SEQ = "Seq"
T_IFT = "If-T"
T_IFF = "If-F"
T_WHILET = "While-T"
T_WHILEF = "While-F"
T_CONSULT = "Consult"

# Oracle rule tags
O_QUERY = "Query"
O_ACCEPT = "Oracle-Accept"
O_HOLD = "Oracle-Hold"


class DerivationError(TapoError):
    pass


class HesitationNotDerivableError(DerivationError):
    def __init__(self, individual: str):
        super().__init__(
            f"{individual}:{HESITATION_CONCEPT} is not derivable in the current state")
        self.individual = individual


# ---------------------------------------------------------------------------
# Judgments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SubJudgment:
    tbox: tuple[TBoxAxiom, ...]
    lhs: Concept
    rhs: Concept


@dataclass(frozen=True)
class AsrtJudgment:
    state: KnowledgeState
    assertion: Assertion


@dataclass(frozen=True)
class GuardJudgment:
    provider_ref: str
    guard: GuardExpr
    value: bool


@dataclass(frozen=True)
class TransJudgment:
    state: KnowledgeState
    program: Program
    result: KnowledgeState


@dataclass(frozen=True)
class OracleJudgment:
    state: KnowledgeState
    frame: str
    query: str
    result: KnowledgeState


@dataclass(frozen=True)
class QueryJudgment:
    """Leaf form recording ans(q) = r, grounding oracle steps."""
    frame: str
    query: str
    response: str


Judgment = Union[SubJudgment, AsrtJudgment, GuardJudgment, TransJudgment,
                 OracleJudgment, QueryJudgment]


def judgment_str(j: Judgment) -> str:
    if isinstance(j, SubJudgment):
        return f"tbox |- {concept_str(j.lhs)} sub {concept_str(j.rhs)}"
    if isinstance(j, AsrtJudgment):
        return f"{state_digest(j.state)} |- {assertion_str(j.assertion)}"
    if isinstance(j, GuardJudgment):
        return f"{j.provider_ref} |-g {guard_str(j.guard)} : {'t' if j.value else 'f'}"
    if isinstance(j, TransJudgment):
        return (f"{program_str(j.program)} : {state_digest(j.state)}"
                f" ~> {state_digest(j.result)}")
    if isinstance(j, OracleJudgment):
        return (f"{j.frame}.{j.query} : {state_digest(j.state)}"
                f" => {state_digest(j.result)}")
    if isinstance(j, QueryJudgment):
        return f"{j.frame}.{j.query} answered by {j.response}"
    raise TypeError(f"not a judgment: {j!r}")


@dataclass(frozen=True)
class ProofTree:
    conclusion: Judgment
    rule: str
    children: tuple["ProofTree", ...] = ()

    def to_json(self) -> dict:
        return {"rule": self.rule,
                "judgment": judgment_str(self.conclusion),
                "children": [c.to_json() for c in self.children]}


@dataclass
class CheckEnv:
    providers: dict[str, GuardProvider] = field(default_factory=dict)
    frames: dict[str, obx.OracleFrame] = field(default_factory=dict)
    fuel: int = 1000
    consult_table: frozenset[tuple[str, str]] = frozenset()
    max_depth: int = reasoner.DEFAULT_MAX_DEPTH


@dataclass(frozen=True)
class CheckVerdict:
    valid: bool
    path: tuple[int, ...] = ()
    reason: str = ""


# ---------------------------------------------------------------------------
# The checker
# ---------------------------------------------------------------------------

def check_derivation(tree: ProofTree, env: CheckEnv) -> CheckVerdict:
    """Validate every node against its rule schema: premise shapes, side
    conditions, and groundedness of leaves in the environment."""
    stack: list[tuple[ProofTree, tuple[int, ...], Optional[KnowledgeState]]] = [
        (tree, (), None)]
    while stack:
        node, path, bound = stack.pop()
        reason = _check_node(node, env, bound)
        if reason is not None:
            return CheckVerdict(False, path, reason)
        child_bound = _binding_for_children(node, bound)
        for i, child in enumerate(node.children):
            stack.append((child, path + (i,), child_bound))
    return CheckVerdict(True)


def _binding_for_children(node: ProofTree, bound: Optional[KnowledgeState]
                          ) -> Optional[KnowledgeState]:
    if isinstance(node.conclusion, TransJudgment):
        return node.conclusion.state
    return bound


def _same_axioms(a: tuple[TBoxAxiom, ...], b: tuple[TBoxAxiom, ...]) -> bool:
    return a == b


def _check_node(node: ProofTree, env: CheckEnv,
                bound: Optional[KnowledgeState]) -> Optional[str]:
    c = node.conclusion
    rule = node.rule
    kids = node.children

    def arity(n: int) -> Optional[str]:
        if len(kids) != n:
            return f"rule {rule} expects {n} premises, found {len(kids)}"
        return None

    # -- static assertion rules
    if isinstance(c, AsrtJudgment):
        state, goal = c.state, c.assertion
        if goal.context != state.context:
            return "assertion context differs from the state's context"
        if rule == reasoner.R_AAX:
            return (arity(0)
                    or (None if isinstance(goal, ConceptAssertion)
                        and goal in state.abox
                        else "assertion is not in the ABox"))
        if rule == reasoner.R_RAX:
            return (arity(0)
                    or (None if isinstance(goal, RoleAssertion) and goal in state.abox
                        else "role assertion is not in the ABox"))
        if rule == reasoner.R_TSUB:
            err = arity(2)
            if err:
                return err
            sub, asrt = kids[0].conclusion, kids[1].conclusion
            if not isinstance(sub, SubJudgment) or not isinstance(asrt, AsrtJudgment):
                return "T-Sub premises must be a subsumption and an assertion"
            if not _same_axioms(sub.tbox, state.tbox):
                return "subsumption premise uses a different TBox"
            if asrt.state != state:
                return "assertion premise evaluated in a different state"
            if not isinstance(goal, ConceptAssertion) or \
                    not isinstance(asrt.assertion, ConceptAssertion):
                return "T-Sub applies to concept assertions"
            if asrt.assertion.individual != goal.individual:
                return "individual changed across T-Sub"
            if asrt.assertion.concept != sub.lhs or goal.concept != sub.rhs:
                return "subsumption premise does not connect premise to conclusion"
            return None
        if rule == reasoner.R_ANDI:
            err = arity(2)
            if err:
                return err
            left, right = kids[0].conclusion, kids[1].conclusion
            if not (isinstance(left, AsrtJudgment) and isinstance(right, AsrtJudgment)):
                return "AndI premises must be assertions"
            if left.state != state or right.state != state:
                return "AndI premises evaluated in a different state"
            from .syntax import And
            if not isinstance(goal, ConceptAssertion) or not isinstance(goal.concept, And):
                return "AndI concludes a conjunction assertion"
            ok = (isinstance(left.assertion, ConceptAssertion)
                  and isinstance(right.assertion, ConceptAssertion)
                  and left.assertion.individual == goal.individual
                  and right.assertion.individual == goal.individual
                  and left.assertion.concept == goal.concept.left
                  and right.assertion.concept == goal.concept.right)
            return None if ok else "AndI premises do not match the conjuncts"
        if rule in (reasoner.R_ANDE1, reasoner.R_ANDE2):
            err = arity(1)
            if err:
                return err
            prem = kids[0].conclusion
            from .syntax import And
            if not (isinstance(prem, AsrtJudgment) and prem.state == state
                    and isinstance(prem.assertion, ConceptAssertion)
                    and isinstance(prem.assertion.concept, And)):
                return "AndE premise must be a conjunction assertion in the same state"
            if not isinstance(goal, ConceptAssertion) or \
                    prem.assertion.individual != goal.individual:
                return "AndE changes the individual"
            part = (prem.assertion.concept.left if rule == reasoner.R_ANDE1
                    else prem.assertion.concept.right)
            return None if goal.concept == part else "AndE projects the wrong conjunct"
        if rule == reasoner.R_EXISTSI:
            err = arity(2)
            if err:
                return err
            role_p, filler_p = kids[0].conclusion, kids[1].conclusion
            from .syntax import Exists
            if not (isinstance(role_p, AsrtJudgment)
                    and isinstance(role_p.assertion, RoleAssertion)
                    and role_p.state == state):
                return "ExistsI first premise must be a role assertion"
            if not (isinstance(filler_p, AsrtJudgment)
                    and isinstance(filler_p.assertion, ConceptAssertion)
                    and filler_p.state == state):
                return "ExistsI second premise must be a concept assertion"
            ra, ca = role_p.assertion, filler_p.assertion
            if ra.target != ca.individual:
                return "ExistsI witness individual mismatch"
            expected = ConceptAssertion(ra.subject, Exists(ra.role, ca.concept),
                                        state.context)
            return None if goal == expected else "ExistsI conclusion mismatch"
        return f"rule {rule} cannot conclude an assertion judgment"

    # -- subsumption rules
    if isinstance(c, SubJudgment):
        if rule == reasoner.R_SUBREFL:
            return arity(0) or (None if c.lhs == c.rhs else "SubRefl needs equal sides")
        if rule == reasoner.R_SUBAXIOM:
            return (arity(0)
                    or (None if TBoxAxiom(c.lhs, c.rhs) in c.tbox
                        else "axiom not declared in the TBox"))
        if rule == reasoner.R_SUBCONJPROJ:
            from .syntax import And
            ok = isinstance(c.lhs, And) and c.rhs in (c.lhs.left, c.lhs.right)
            return arity(0) or (None if ok else "not a conjunction projection")
        if rule == reasoner.R_SUBBOT:
            return arity(0) or (None if isinstance(c.lhs, Bottom) else "lhs must be bot")
        if rule == reasoner.R_SUBTOP:
            return arity(0) or (None if isinstance(c.rhs, Top) else "rhs must be top")
        if rule == reasoner.R_SUBTRANS:
            err = arity(2)
            if err:
                return err
            first, second = kids[0].conclusion, kids[1].conclusion
            if not (isinstance(first, SubJudgment) and isinstance(second, SubJudgment)):
                return "SubTrans premises must be subsumptions"
            if not (_same_axioms(first.tbox, c.tbox) and _same_axioms(second.tbox, c.tbox)):
                return "SubTrans premises use a different TBox"
            ok = first.lhs == c.lhs and first.rhs == second.lhs and second.rhs == c.rhs
            return None if ok else "SubTrans premises do not chain"
        return f"rule {rule} cannot conclude a subsumption judgment"

    # -- guard rules
    if isinstance(c, GuardJudgment):
        if rule == G_TRUE:
            ok = isinstance(c.guard, GTrue) and c.value is True
            return arity(0) or (None if ok else "true evaluates to t")
        if rule == G_FALSE:
            ok = isinstance(c.guard, GFalse) and c.value is False
            return arity(0) or (None if ok else "false evaluates to f")
        if rule == G_ATOM:
            err = arity(0)
            if err:
                return err
            if not isinstance(c.guard, (AtomA, AtomSub)):
                return "GuardAtom applies to basic atoms"
            provider = env.providers.get(c.provider_ref)
            if provider is None:
                return f"no provider named {c.provider_ref!r}"
            if bound is not None:
                provider = provider.bind(bound)
            try:
                actual = provider.value(c.guard)
            except TapoError as exc:
                return f"provider cannot value the atom: {exc}"
            return None if actual == c.value else \
                f"provider values the atom {'t' if actual else 'f'}"
        if rule == G_NOT:
            err = arity(1)
            if err:
                return err
            prem = kids[0].conclusion
            if not isinstance(c.guard, NotG) or not isinstance(prem, GuardJudgment):
                return "GuardNot premise shape"
            ok = (prem.guard == c.guard.inner and prem.value == (not c.value)
                  and prem.provider_ref == c.provider_ref)
            return None if ok else "GuardNot premise does not flip the value"
        if rule in (G_AND, G_OR):
            node_type = AndG if rule == G_AND else OrG
            if not isinstance(c.guard, node_type):
                return f"{rule} applies to the matching connective"
            witness_value = (rule == G_OR)
            if c.value != witness_value:
                # conjunction true / disjunction false: both sides derived
                err = arity(2)
                if err:
                    return err
                left, right = kids[0].conclusion, kids[1].conclusion
                ok = (isinstance(left, GuardJudgment) and isinstance(right, GuardJudgment)
                      and left.guard == c.guard.left and right.guard == c.guard.right
                      and left.value == c.value and right.value == c.value
                      and left.provider_ref == c.provider_ref
                      and right.provider_ref == c.provider_ref)
                return None if ok else f"{rule} needs both sides at the same value"
            # conjunction false / disjunction true: one witness side
            err = arity(1)
            if err:
                return err
            prem = kids[0].conclusion
            ok = (isinstance(prem, GuardJudgment)
                  and prem.guard in (c.guard.left, c.guard.right)
                  and prem.value == c.value
                  and prem.provider_ref == c.provider_ref)
            return None if ok else f"{rule} witness premise mismatch"
        return f"rule {rule} cannot conclude a guard judgment"

    # -- transition rules
    if isinstance(c, TransJudgment):
        state, prog, result = c.state, c.program, c.result
        if state.tbox != result.tbox:
            return "transitions never modify the TBox"
        if rule == T_SKIP:
            ok = isinstance(prog, Skip) and result == state
            return arity(0) or (None if ok else "skip is the identity")
        if rule == T_ADD:
            if not isinstance(prog, Add):
                return "Add rule applied to a different program"
            expected = state.abox | {prog.assertion}
            ok = prog.assertion.context == state.context and result.abox == expected \
                and result.context == state.context
            return arity(0) or (None if ok else "result is not ABox union")
        if rule == T_DEL:
            if not isinstance(prog, Del):
                return "Del rule applied to a different program"
            expected = state.abox - {prog.assertion}
            ok = result.abox == expected and result.context == state.context
            return arity(0) or (None if ok else "result is not ABox difference")
        if rule == T_SEQ:
            err = arity(2)
            if err:
                return err
            if not isinstance(prog, Seq):
                return "Seq rule applied to a different program"
            first, second = kids[0].conclusion, kids[1].conclusion
            if not (isinstance(first, TransJudgment) and isinstance(second, TransJudgment)):
                return "Seq premises must be transitions"
            ok = (first.state == state and first.program == prog.first
                  and second.state == first.result and second.program == prog.second
                  and second.result == result)
            return None if ok else "Seq premises do not chain"
        if rule in (T_IFT, T_IFF):
            err = arity(2)
            if err:
                return err
            if not isinstance(prog, If):
                return "If rule applied to a different program"
            guard_p, branch_p = kids[0].conclusion, kids[1].conclusion
            if not (isinstance(guard_p, GuardJudgment)
                    and isinstance(branch_p, TransJudgment)):
                return "If premises must be a guard and a transition"
            want = rule == T_IFT
            if guard_p.guard != prog.guard or guard_p.value != want:
                return f"guard premise must conclude {'t' if want else 'f'}"
            branch = prog.then if want else prog.orelse
            ok = (branch_p.state == state and branch_p.program == branch
                  and branch_p.result == result)
            return None if ok else "branch premise mismatch"
        if rule == T_WHILEF:
            err = arity(1)
            if err:
                return err
            if not isinstance(prog, While):
                return "While rule applied to a different program"
            guard_p = kids[0].conclusion
            ok = (isinstance(guard_p, GuardJudgment) and guard_p.guard == prog.guard
                  and guard_p.value is False and result == state)
            return None if ok else "While-F needs a false guard and identity result"
        if rule == T_WHILET:
            err = arity(3)
            if err:
                return err
            if not isinstance(prog, While):
                return "While rule applied to a different program"
            guard_p, body_p, rest_p = (k.conclusion for k in kids)
            if not (isinstance(guard_p, GuardJudgment)
                    and isinstance(body_p, TransJudgment)
                    and isinstance(rest_p, TransJudgment)):
                return "While-T premise shapes"
            ok = (guard_p.guard == prog.guard and guard_p.value is True
                  and body_p.state == state and body_p.program == prog.body
                  and rest_p.state == body_p.result and rest_p.program == prog
                  and rest_p.result == result)
            return None if ok else "While-T premises do not chain"
        if rule == T_CONSULT:
            err = arity(2)
            if err:
                return err
            if not isinstance(prog, Consult):
                return "Consult rule applied to a different program"
            hes_p, oracle_p = kids[0].conclusion, kids[1].conclusion
            if not (isinstance(hes_p, AsrtJudgment) and isinstance(oracle_p, OracleJudgment)):
                return "Consult premises must be a hesitation assertion and an oracle step"
            if hes_p.state != state:
                return "hesitation premise evaluated in a different state"
            a = hes_p.assertion
            if not (isinstance(a, ConceptAssertion)
                    and a.concept == Atom(HESITATION_CONCEPT)):
                return f"hesitation premise must assert {HESITATION_CONCEPT}"
            if (a.individual, prog.query) not in env.consult_table:
                return (f"query {prog.query!r} is not associated with "
                        f"{a.individual!r} in the consultation table")
            ok = (oracle_p.state == state and oracle_p.query == prog.query
                  and oracle_p.result == result)
            return None if ok else "oracle premise mismatch"
        return f"rule {rule} cannot conclude a transition judgment"

    # -- oracle rules
    if isinstance(c, QueryJudgment):
        if rule != O_QUERY:
            return f"rule {rule} cannot conclude a query judgment"
        err = arity(0)
        if err:
            return err
        frame = env.frames.get(c.frame)
        if frame is None:
            return f"no frame named {c.frame!r}"
        if c.query not in frame.queries:
            return f"query {c.query!r} is not admissible"
        response = frame.answers.get(c.query)
        if response is None:
            return f"query {c.query!r} is unanswered"
        return None if response.id == c.response else "response id mismatch"

    if isinstance(c, OracleJudgment):
        if rule not in (O_ACCEPT, O_HOLD):
            return f"rule {rule} cannot conclude an oracle judgment"
        err = arity(1)
        if err:
            return err
        query_p = kids[0].conclusion
        if not isinstance(query_p, QueryJudgment) or query_p.query != c.query \
                or query_p.frame != c.frame:
            return "oracle premise must be the matching query judgment"
        frame = env.frames.get(c.frame)
        if frame is None:
            return f"no frame named {c.frame!r}"
        if frame.context != c.state.context:
            return "frame context differs from the state"
        response = frame.answers.get(c.query)
        if response is None:
            return f"query {c.query!r} is unanswered"
        validated = obx.validate(frame, response).validated
        compatible = True
        if validated:
            compat = reasoner.check_t_compatibility(
                list(c.state.tbox), c.state.abox | response.payload, env.max_depth)
            compatible = compat.compatible
        if rule == O_ACCEPT:
            if not validated:
                return "response does not validate (trust or policy gate fails)"
            if not compatible:
                return "validated payload is not TBox-compatible"
            expected = c.state.abox | response.payload
            ok = c.result.abox == expected and c.result.tbox == c.state.tbox
            return None if ok else "accept result is not the payload union"
        # Oracle-Hold
        if validated and compatible:
            return "response validates and is compatible: hold does not apply"
        return None if c.result == c.state else "hold must leave the state unchanged"

    return f"unrecognized judgment for rule {rule}"


# ---------------------------------------------------------------------------
# Building trees
# ---------------------------------------------------------------------------

def build_guard_tree(provider: GuardProvider, guard: GuardExpr,
                     provider_ref: str = "default") -> tuple[bool, ProofTree]:
    """Evaluate a guard, producing the mirroring guard-judgment tree."""
    if isinstance(guard, GTrue):
        return True, ProofTree(GuardJudgment(provider_ref, guard, True), G_TRUE)
    if isinstance(guard, GFalse):
        return False, ProofTree(GuardJudgment(provider_ref, guard, False), G_FALSE)
    if isinstance(guard, (AtomA, AtomSub)):
        value = provider.value(guard)
        return value, ProofTree(GuardJudgment(provider_ref, guard, value), G_ATOM)
    if isinstance(guard, NotG):
        value, child = build_guard_tree(provider, guard.inner, provider_ref)
        return (not value), ProofTree(
            GuardJudgment(provider_ref, guard, not value), G_NOT, (child,))
    if isinstance(guard, (AndG, OrG)):
        is_and = isinstance(guard, AndG)
        rule = G_AND if is_and else G_OR
        lvalue, ltree = build_guard_tree(provider, guard.left, provider_ref)
        if is_and and not lvalue:
            return False, ProofTree(GuardJudgment(provider_ref, guard, False),
                                    rule, (ltree,))
        if not is_and and lvalue:
            return True, ProofTree(GuardJudgment(provider_ref, guard, True),
                                   rule, (ltree,))
        rvalue, rtree = build_guard_tree(provider, guard.right, provider_ref)
        value = (lvalue and rvalue) if is_and else (lvalue or rvalue)
        if value == (not is_and):
            # the right side alone witnesses the outcome
            return value, ProofTree(GuardJudgment(provider_ref, guard, value),
                                    rule, (rtree,))
        return value, ProofTree(GuardJudgment(provider_ref, guard, value),
                                rule, (ltree, rtree))
    raise TypeError(f"not a guard: {guard!r}")


def derivation_to_prooftree(tree: reasoner.DerivationTree,
                            state: KnowledgeState) -> ProofTree:
    """Lift a static derivation into the proof-tree format."""

    def lift(node: reasoner.DerivationTree) -> ProofTree:
        conclusion = node.conclusion
        if isinstance(conclusion, TBoxAxiom):
            judgment: Judgment = SubJudgment(state.tbox, conclusion.lhs, conclusion.rhs)
        else:
            judgment = AsrtJudgment(state, conclusion)
        return ProofTree(judgment, node.rule, tuple(lift(k) for k in node.children))

    return lift(tree)


class _NoTree(Exception):
    pass


class _TreeFuel:
    def __init__(self, amount: int):
        self.left = amount

    def spend(self) -> None:
        if self.left <= 0:
            raise _NoTree()
        self.left -= 1


def derive_transition(state: KnowledgeState, prog: Program,
                      provider: GuardProvider, fuel: int = 1000,
                      provider_ref: str = "default",
                      env: Optional[CheckEnv] = None) -> Optional[ProofTree]:
    """Proof tree mirroring big-step evaluation; None exactly when evaluation
    does not reach a final state (out of fuel, failure, unhandled consult)."""
    ctx = program_context(prog)
    if ctx is not None and ctx != state.context:
        return None
    budget = _TreeFuel(fuel)
    try:
        _, tree = _derive(state, prog, provider, budget, provider_ref, env)
    except (_NoTree, TapoError):
        return None
    return tree


def _derive(state: KnowledgeState, prog: Program, provider: GuardProvider,
            budget: _TreeFuel, ref: str, env: Optional[CheckEnv]
            ) -> tuple[KnowledgeState, ProofTree]:
    if isinstance(prog, Skip):
        return state, ProofTree(TransJudgment(state, prog, state), T_SKIP)
    if isinstance(prog, Add):
        out = state.add(prog.assertion)
        return out, ProofTree(TransJudgment(state, prog, out), T_ADD)
    if isinstance(prog, Del):
        out = state.remove(prog.assertion)
        return out, ProofTree(TransJudgment(state, prog, out), T_DEL)
    if isinstance(prog, Seq):
        mid, first = _derive(state, prog.first, provider, budget, ref, env)
        out, second = _derive(mid, prog.second, provider, budget, ref, env)
        return out, ProofTree(TransJudgment(state, prog, out), T_SEQ, (first, second))
    if isinstance(prog, If):
        value, guard_tree = build_guard_tree(provider.bind(state), prog.guard, ref)
        branch = prog.then if value else prog.orelse
        out, branch_tree = _derive(state, branch, provider, budget, ref, env)
        return out, ProofTree(TransJudgment(state, prog, out),
                              T_IFT if value else T_IFF, (guard_tree, branch_tree))
    if isinstance(prog, While):
        unfoldings: list[tuple[KnowledgeState, ProofTree, ProofTree]] = []
        current = state
        while True:
            value, guard_tree = build_guard_tree(provider.bind(current), prog.guard, ref)
            if not value:
                tree = ProofTree(TransJudgment(current, prog, current),
                                 T_WHILEF, (guard_tree,))
                break
            budget.spend()
            after, body_tree = _derive(current, prog.body, provider, budget, ref, env)
            unfoldings.append((current, guard_tree, body_tree))
            current = after
        final = current
        for before, guard_tree, body_tree in reversed(unfoldings):
            tree = ProofTree(TransJudgment(before, prog, final), T_WHILET,
                             (guard_tree, body_tree, tree))
        return final, tree
    if isinstance(prog, Consult):
        if env is None:
            raise _NoTree()
        budget.spend()
        individual = _consult_individual(env, prog.query)
        frame = _consult_frame(env, prog.query)
        if individual is None or frame is None:
            raise _NoTree()
        out, tree = consult(state, None, frame, individual, prog.query,
                            env.max_depth, table=env.consult_table)
        return out, tree
    raise TypeError(f"not a program: {prog!r}")


def _consult_individual(env: CheckEnv, query: str) -> Optional[str]:
    for individual, q in sorted(env.consult_table):
        if q == query:
            return individual
    return None


def _consult_frame(env: CheckEnv, query: str) -> Optional[obx.OracleFrame]:
    for name in sorted(env.frames):
        if query in env.frames[name].queries:
            return env.frames[name]
    return None


def oracle_step_tree(frame: obx.OracleFrame, state: KnowledgeState, query: str,
                     max_depth: int = reasoner.DEFAULT_MAX_DEPTH
                     ) -> Optional[ProofTree]:
    """Accept or Hold tree for one oracle step; None when the query has no
    answer (neither rule applies)."""
    response = obx.answer(frame, query)
    if response is None:
        return None
    result, report = obx.oracle_transition(frame, state, query, max_depth)
    query_leaf = ProofTree(QueryJudgment(frame.name, query, response.id), O_QUERY)
    rule = O_ACCEPT if report.accepted else O_HOLD
    return ProofTree(OracleJudgment(state, frame.name, query, result), rule,
                     (query_leaf,))


def consult(state: KnowledgeState, pbox, frame: obx.OracleFrame, individual: str,
            query: str, max_depth: int = reasoner.DEFAULT_MAX_DEPTH,
            table: Optional[frozenset[tuple[str, str]]] = None
            ) -> tuple[KnowledgeState, ProofTree]:
    """The mixed rule: a derivable hesitation assertion triggers an oracle
    step. Holds leave the state unchanged but still yield a valid tree."""
    if query not in frame.queries:
        raise obx.InadmissibleQueryError(query)
    if table is not None and (individual, query) not in table:
        raise DerivationError(
            f"query {query!r} is not associated with {individual!r}")
    hesitation = ConceptAssertion(individual, Atom(HESITATION_CONCEPT), state.context)
    static_tree = reasoner.entails(state, hesitation, max_depth)
    if static_tree is None:
        raise HesitationNotDerivableError(individual)
    oracle_tree = oracle_step_tree(frame, state, query, max_depth)
    if oracle_tree is None:
        # the query is admissible but unanswered: no oracle rule applies
        raise DerivationError(f"query {query!r} has no answer to consult")
    result = oracle_tree.conclusion.result
    tree = ProofTree(TransJudgment(state, Consult(query), result), T_CONSULT,
                     (derivation_to_prooftree(static_tree, state), oracle_tree))
    return result, tree


# ---------------------------------------------------------------------------
# Soundness harness
# ---------------------------------------------------------------------------

@dataclass
class TransitionCase:
    state: KnowledgeState
    program: Program
    provider: GuardProvider
    provider_ref: str = "default"


@dataclass
class OracleCase:
    frame: obx.OracleFrame
    state: KnowledgeState
    query: str


@dataclass
class Corpus:
    transition_cases: list[TransitionCase] = field(default_factory=list)
    oracle_cases: list[OracleCase] = field(default_factory=list)
    static_states: list[KnowledgeState] = field(default_factory=list)


@dataclass
class Counterexample:
    kind: str
    detail: str


@dataclass
class HarnessReport:
    transitions_checked: int = 0
    oracle_steps_checked: int = 0
    static_steps_checked: int = 0
    counterexamples: list[Counterexample] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.counterexamples

    def summary(self) -> str:
        status = "ok" if self.ok else f"{len(self.counterexamples)} counterexamples"
        return (f"transitions={self.transitions_checked} "
                f"oracle={self.oracle_steps_checked} "
                f"static={self.static_steps_checked}: {status}")


def soundness_harness(corpus: Corpus, fuel: int = 1000,
                      max_depth: int = 8,
                      model_domain: int = 3) -> HarnessReport:
    """Cross-check the rule layer against the executable semantics.

    (a) derivation trees agree with the interpreter: a tree exists iff the
        outcome is final, conclusions match, and every tree re-checks valid;
    (b) valid oracle accept/hold trees match the oracle transition exactly;
    (c) every static saturation step is grounded (leaves) or semantically
        valid over all small finite models of its premises.
    """
    report = HarnessReport()

    for case in corpus.transition_cases:
        report.transitions_checked += 1
        outcome = eval_program(case.state, case.program, case.provider, fuel)
        tree = derive_transition(case.state, case.program, case.provider, fuel,
                                 case.provider_ref)
        final = isinstance(outcome, Final)
        if final != (tree is not None):
            report.counterexamples.append(Counterexample(
                "transition",
                f"tree {'exists' if tree else 'missing'} but outcome is "
                f"{type(outcome).__name__} for {program_str(case.program)}"))
            continue
        if tree is None:
            continue
        if tree.conclusion.result != outcome.state:
            report.counterexamples.append(Counterexample(
                "transition",
                f"tree concludes {state_digest(tree.conclusion.result)} but the "
                f"interpreter reaches {state_digest(outcome.state)}"))
            continue
        env = CheckEnv(providers={case.provider_ref: case.provider}, fuel=fuel)
        verdict = check_derivation(tree, env)
        if not verdict.valid:
            report.counterexamples.append(Counterexample(
                "transition",
                f"derived tree re-checks invalid at {verdict.path}: {verdict.reason}"))

    for case in corpus.oracle_cases:
        report.oracle_steps_checked += 1
        result, _ = obx.oracle_transition(case.frame, case.state, case.query)
        tree = oracle_step_tree(case.frame, case.state, case.query)
        if tree is None:
            if result != case.state:
                report.counterexamples.append(Counterexample(
                    "oracle", "no tree exists but the transition changed the state"))
            continue
        env = CheckEnv(frames={case.frame.name: case.frame})
        verdict = check_derivation(tree, env)
        if not verdict.valid:
            report.counterexamples.append(Counterexample(
                "oracle", f"tree invalid at {verdict.path}: {verdict.reason}"))
            continue
        if tree.conclusion.result != result:
            report.counterexamples.append(Counterexample(
                "oracle", "tree conclusion differs from the oracle transition"))

    for state in corpus.static_states:
        sat = reasoner.saturate(state, max_depth)
        for step in sat.trace:
            report.static_steps_checked += 1
            problem = _check_static_step(state, step, model_domain)
            if problem is not None:
                report.counterexamples.append(Counterexample("static", problem))

    return report


def _check_static_step(state: KnowledgeState, step: reasoner.DerivationStep,
                       model_domain: int) -> Optional[str]:
    if step.rule in (reasoner.R_AAX, reasoner.R_RAX):
        if step.conclusion in state.abox:
            return None
        return f"{step.rule} leaf not grounded: {reasoner.fact_str(step.conclusion)}"
    if not models.premises_entail(list(step.premises), step.conclusion,
                                  max_domain=model_domain):
        return (f"{step.rule} step not semantically valid: "
                f"{reasoner.fact_str(step.conclusion)}")
    return None
