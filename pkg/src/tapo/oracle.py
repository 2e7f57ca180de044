"""Strengthened oracle frames: queries, responses, trust, certificates,
rule-list validation policies, gated import into the ABox, soundness
auditing, and frame composition.

A response is imported only when it clears three gates in order: the trust
threshold, the validation policy (on some certificate subset), and TBox
compatibility of the resulting ABox. Anything else is a hold, which leaves
the state untouched.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import reasoner
from .syntax import (Assertion, KnowledgeState, TapoError, assertion_str)

ACCEPT = "accept"
REJECT = "reject"
DEFER = "defer"
VERDICTS = (ACCEPT, REJECT, DEFER)

HOLD_NO_ANSWER = "no-answer"
HOLD_BELOW_THRESHOLD = "below-threshold"
HOLD_REJECTED = "rejected"
HOLD_DEFERRED = "deferred"
HOLD_T_INCOMPATIBLE = "t-incompatible"


class OracleError(TapoError):
    pass


class InadmissibleQueryError(OracleError):
    def __init__(self, query: str):
        super().__init__(f"query not admissible: {query!r}")
        self.query = query


# ---------------------------------------------------------------------------
# Frame data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrustLattice:
    """Preordered trust levels with a chosen threshold."""

    levels: frozenset[str]
    order: frozenset[tuple[str, str]]  # (a, b) means a is at most b
    threshold: str

    def validate(self) -> None:
        if self.threshold not in self.levels:
            raise OracleError(f"threshold {self.threshold!r} not a declared level")
        for a, b in self.order:
            if a not in self.levels or b not in self.levels:
                raise OracleError(f"order pair ({a}, {b}) uses undeclared level")

    def leq(self, a: str, b: str) -> bool:
        if a not in self.levels or b not in self.levels:
            raise OracleError(f"unknown trust level: {a if a not in self.levels else b!r}")
        if a == b:
            return True
        seen = {a}
        frontier = [a]
        while frontier:
            x = frontier.pop()
            for (lo, hi) in self.order:
                if lo == x and hi not in seen:
                    if hi == b:
                        return True
                    seen.add(hi)
                    frontier.append(hi)
        return False

    def meets_threshold(self, level: str) -> bool:
        return self.leq(self.threshold, level)

    def meet(self, a: str, b: str) -> Optional[str]:
        """Greatest lower bound in the preorder closure, if one exists."""
        lower = [x for x in sorted(self.levels) if self.leq(x, a) and self.leq(x, b)]
        for g in lower:
            if all(self.leq(y, g) for y in lower):
                return g
        return None


@dataclass(frozen=True)
class Certificate:
    id: str
    kind: str  # provenance, timestamp, source-agreement, ...
    attributes: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Response:
    id: str
    payload: frozenset[Assertion]
    trust: str
    certificates: frozenset[Certificate] = frozenset()

    def kinds(self) -> set[str]:
        return {c.kind for c in self.certificates}


@dataclass(frozen=True)
class PolicyRule:
    verdict: str
    trust_floor: str
    required_kinds: frozenset[str] = frozenset()

    def matches(self, lattice: TrustLattice, response: Response,
                offered: frozenset[Certificate]) -> bool:
        if not lattice.leq(self.trust_floor, response.trust):
            return False
        kinds = {c.kind for c in offered}
        return self.required_kinds <= kinds


@dataclass(frozen=True)
class ValidationPolicy:
    """First-match rule list with a mandatory default verdict: total and
    deterministic by construction."""

    rules: tuple[PolicyRule, ...]
    default: str = DEFER

    def validate(self) -> None:
        if self.default not in VERDICTS:
            raise OracleError(f"bad default verdict {self.default!r}")
        for rule in self.rules:
            if rule.verdict not in VERDICTS:
                raise OracleError(f"bad verdict {rule.verdict!r}")

    def verdict(self, lattice: TrustLattice, response: Response,
                offered: frozenset[Certificate]) -> str:
        for rule in self.rules:
            if rule.matches(lattice, response, offered):
                return rule.verdict
        return self.default


@dataclass
class OracleFrame:
    name: str
    context: str
    queries: dict[str, str]  # id -> display text
    answers: dict[str, Response]  # partial: query id -> response
    trust: TrustLattice
    policy: ValidationPolicy

    def validate(self) -> None:
        self.trust.validate()
        self.policy.validate()
        for q in self.answers:
            if q not in self.queries:
                raise OracleError(f"answer declared for undeclared query {q!r}")
        for q, r in self.answers.items():
            if r.trust not in self.trust.levels:
                raise OracleError(
                    f"response {r.id!r} uses undeclared trust level {r.trust!r}")
            for a in r.payload:
                if a.context != self.context:
                    raise OracleError(
                        f"response {r.id!r} imports {assertion_str(a)} outside @{self.context}")


# ---------------------------------------------------------------------------
# Answering and validation
# ---------------------------------------------------------------------------

def answer(frame: OracleFrame, query: str) -> Optional[Response]:
    """ans(q) if defined; None when admissible but unanswered."""
    if query not in frame.queries:
        raise InadmissibleQueryError(query)
    return frame.answers.get(query)


@dataclass(frozen=True)
class ValidationResult:
    validated: bool
    witness: frozenset[Certificate] = frozenset()
    reason: str = ""  # below-threshold | rejected | deferred when held


def _witness_candidates(policy: ValidationPolicy, response: Response):
    """Certificate subsets worth offering: one minimal kind-cover per accept
    rule, plus the empty set when the default accepts."""
    by_kind: dict[str, Certificate] = {}
    for cert in sorted(response.certificates, key=lambda c: c.id):
        by_kind.setdefault(cert.kind, cert)
    for rule in policy.rules:
        if rule.verdict != ACCEPT:
            continue
        if not rule.required_kinds <= set(by_kind):
            continue
        yield frozenset(by_kind[k] for k in rule.required_kinds)
    if policy.default == ACCEPT:
        yield frozenset()


def validate(frame: OracleFrame, response: Response) -> ValidationResult:
    """Validated iff trust clears the threshold and some certificate subset
    makes the policy accept; held otherwise with the blocking reason."""
    if not frame.trust.meets_threshold(response.trust):
        return ValidationResult(False, reason=HOLD_BELOW_THRESHOLD)
    for offered in _witness_candidates(frame.policy, response):
        if frame.policy.verdict(frame.trust, response, offered) == ACCEPT:
            return ValidationResult(True, witness=offered)
    verdict = frame.policy.verdict(frame.trust, response, response.certificates)
    reason = HOLD_REJECTED if verdict == REJECT else HOLD_DEFERRED
    return ValidationResult(False, reason=reason)


# ---------------------------------------------------------------------------
# The oracle transition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GateReport:
    """Gate-by-gate breakdown of one oracle step."""

    query: str
    accepted: bool
    cause: str = ""              # hold cause when not accepted
    response_id: str = ""
    answered: bool = False
    trust_ok: bool = False
    policy_verdict: str = ""
    witness_kinds: tuple[str, ...] = ()
    t_compatible: bool = False
    imported: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "query": self.query,
            "outcome": "accept" if self.accepted else "hold",
            "cause": self.cause,
            "response": self.response_id,
            "answered": self.answered,
            "trust_ok": self.trust_ok,
            "policy_verdict": self.policy_verdict,
            "witness_kinds": list(self.witness_kinds),
            "t_compatible": self.t_compatible,
            "imported": list(self.imported),
        }


def oracle_transition(frame: OracleFrame, state: KnowledgeState, query: str,
                      max_depth: int = reasoner.DEFAULT_MAX_DEPTH
                      ) -> tuple[KnowledgeState, GateReport]:
    """Run one query through the gates; hold is the identity transition."""
    if frame.context != state.context:
        raise OracleError(
            f"frame @{frame.context} consulted at context {state.context}")
    response = answer(frame, query)
    if response is None:
        return state, GateReport(query, False, cause=HOLD_NO_ANSWER)
    result = validate(frame, response)
    trust_ok = frame.trust.meets_threshold(response.trust)
    if not result.validated:
        verdict = frame.policy.verdict(frame.trust, response, response.certificates)
        return state, GateReport(
            query, False, cause=result.reason, response_id=response.id,
            answered=True, trust_ok=trust_ok, policy_verdict=verdict)
    compat = reasoner.check_t_compatibility(
        list(state.tbox), state.abox | response.payload, max_depth)
    witness_kinds = tuple(sorted({c.kind for c in result.witness}))
    if not compat.compatible:
        return state, GateReport(
            query, False, cause=HOLD_T_INCOMPATIBLE, response_id=response.id,
            answered=True, trust_ok=True, policy_verdict=ACCEPT,
            witness_kinds=witness_kinds, t_compatible=False)
    new_state = state.union(response.payload)
    return new_state, GateReport(
        query, True, response_id=response.id, answered=True, trust_ok=True,
        policy_verdict=ACCEPT, witness_kinds=witness_kinds, t_compatible=True,
        imported=tuple(sorted(assertion_str(a) for a in response.payload)))


# ---------------------------------------------------------------------------
# Frame auditing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AuditViolation:
    query: str
    response_id: str
    clashes: tuple[str, ...]


def audit_frame_soundness(frame: OracleFrame, tbox, max_depth: int = 32
                          ) -> tuple[AuditViolation, ...]:
    """Every answered query whose response would validate yet import
    TBox-incompatible assertions."""
    violations = []
    for query in sorted(frame.answers):
        response = frame.answers[query]
        if not validate(frame, response).validated:
            continue
        compat = reasoner.check_t_compatibility(list(tbox), frozenset(response.payload),
                                                max_depth)
        if not compat.compatible:
            violations.append(AuditViolation(
                query, response.id,
                tuple(assertion_str(a) for a in compat.clashes)))
    return tuple(violations)


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------

def compose_frames(first: OracleFrame, second: OracleFrame) -> OracleFrame:
    """Stage two frames: pair queries, run first's validation, then second's
    with the certificates carried over from the first response.

    The composite response carries the union of the stage-accepted payloads,
    the meet of the two trusts (first's when no meet exists), and the union
    of the certificates. A second frame with no queries acts as the unit.
    """
    if first.context != second.context:
        raise OracleError("composed frames must share a context")
    if not second.queries:
        return OracleFrame(f"{first.name}__{second.name}", first.context,
                           dict(first.queries), dict(first.answers),
                           first.trust, first.policy)
    collisions = set(first.queries) & set(second.queries)
    if collisions:
        raise OracleError(f"query identifier collision: {sorted(collisions)}")

    lattice = TrustLattice(first.trust.levels | second.trust.levels,
                           first.trust.order | second.trust.order,
                           second.trust.threshold)
    queries: dict[str, str] = {}
    answers: dict[str, Response] = {}
    for q1 in sorted(first.queries):
        for q2 in sorted(second.queries):
            qid = f"{q1}__{q2}"
            queries[qid] = f"{first.queries[q1]} then {second.queries[q2]}"
            r1 = first.answers.get(q1)
            r2 = second.answers.get(q2)
            if r1 is None or r2 is None:
                continue
            payload: frozenset[Assertion] = frozenset()
            if validate(first, r1).validated:
                payload |= r1.payload
            # second stage inspects certificates produced or preserved by the first
            staged = Response(r2.id, r2.payload, r2.trust,
                              r2.certificates | r1.certificates)
            if validate(second, staged).validated:
                payload |= r2.payload
            trust = lattice.meet(r1.trust, r2.trust) or r1.trust
            answers[qid] = Response(f"{r1.id}__{r2.id}", payload, trust,
                                    r1.certificates | r2.certificates)
    composite = OracleFrame(f"{first.name}__{second.name}", first.context,
                            queries, answers, lattice, second.policy)
    composite.validate()
    return composite
