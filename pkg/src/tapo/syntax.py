"""Core data model: signatures, ALC concepts, context-tagged assertions, and
localized knowledge states.

Everything here is an immutable value with structural equality, so states can
be copied, hashed, diffed, and shared between threads freely.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from typing import Iterator


IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

# Surface-syntax keywords; they cannot be used as declared names.
RESERVED_WORDS = frozenset({
    "top", "bot", "and", "or", "not", "exists", "forall", "sub",
    "true", "false", "skip", "add", "del", "if", "then", "else",
    "while", "do", "consult",
    "signature", "context", "refines", "tbox", "abox", "pbox", "obox",
    "restriction", "concepts", "roles", "individuals", "program", "frame",
})


class TapoError(Exception):
    """Base class for all engine errors."""


class SyntaxSpecError(TapoError):
    """A value violates a structural invariant (bad name, bad context tag...)."""


class UnknownNameError(TapoError):
    def __init__(self, name: str, kind: str = "name"):
        super().__init__(f"unknown {kind}: {name!r}")
        self.name = name
        self.kind = kind


class UnknownContextError(TapoError):
    def __init__(self, context: str):
        super().__init__(f"unknown context: {context!r}")
        self.context = context


class ContextMismatchError(TapoError):
    def __init__(self, expected: str, got: str, what: str = "assertion"):
        super().__init__(f"{what} tagged @{got} used at context {expected}")
        self.expected = expected
        self.got = got


def check_ident(name: str, kind: str = "identifier") -> str:
    if not IDENT_RE.match(name):
        raise SyntaxSpecError(f"bad {kind} {name!r}: must match [A-Za-z][A-Za-z0-9_]*")
    if name in RESERVED_WORDS:
        raise SyntaxSpecError(f"bad {kind} {name!r}: reserved word")
    return name


# ---------------------------------------------------------------------------
# Concepts
# ---------------------------------------------------------------------------

class Concept:
    """Base class of the concept grammar. Subclasses are frozen dataclasses."""

    __slots__ = ()

    def __str__(self) -> str:
        return concept_str(self)


@dataclass(frozen=True)
class Top(Concept):
    pass


@dataclass(frozen=True)
class Bottom(Concept):
    pass


@dataclass(frozen=True)
class Atom(Concept):
    name: str


@dataclass(frozen=True)
class And(Concept):
    left: Concept
    right: Concept


@dataclass(frozen=True)
class Or(Concept):
    left: Concept
    right: Concept


@dataclass(frozen=True)
class Not(Concept):
    inner: Concept


@dataclass(frozen=True)
class Exists(Concept):
    role: str
    filler: Concept


@dataclass(frozen=True)
class Forall(Concept):
    role: str
    filler: Concept


TOP = Top()
BOTTOM = Bottom()


def _prec(c: Concept) -> int:
    if isinstance(c, Or):
        return 1
    if isinstance(c, And):
        return 2
    if isinstance(c, (Not, Exists, Forall)):
        return 3
    return 4


def concept_str(c: Concept) -> str:
    """Canonical pretty-printer; parse(concept_str(c)) == c."""
    if isinstance(c, Top):
        return "top"
    if isinstance(c, Bottom):
        return "bot"
    if isinstance(c, Atom):
        return c.name
    if isinstance(c, (And, Or)):
        word = "and" if isinstance(c, And) else "or"
        p = _prec(c)
        # connectives fold left, so the right child needs parens at equal precedence
        left = concept_str(c.left)
        if _prec(c.left) < p:
            left = f"({left})"
        right = concept_str(c.right)
        if _prec(c.right) <= p:
            right = f"({right})"
        return f"{left} {word} {right}"
    if isinstance(c, Not):
        inner = concept_str(c.inner)
        if _prec(c.inner) < 3:
            inner = f"({inner})"
        return f"not {inner}"
    if isinstance(c, (Exists, Forall)):
        word = "exists" if isinstance(c, Exists) else "forall"
        filler = concept_str(c.filler)
        if _prec(c.filler) < 3:
            filler = f"({filler})"
        return f"{word} {c.role}.{filler}"
    raise TypeError(f"not a concept: {c!r}")


def subconcepts(c: Concept) -> Iterator[Concept]:
    """All subtrees of c, including c itself."""
    yield c
    if isinstance(c, (And, Or)):
        yield from subconcepts(c.left)
        yield from subconcepts(c.right)
    elif isinstance(c, Not):
        yield from subconcepts(c.inner)
    elif isinstance(c, (Exists, Forall)):
        yield from subconcepts(c.filler)


def concept_atoms(c: Concept) -> set[str]:
    return {s.name for s in subconcepts(c) if isinstance(s, Atom)}


def concept_roles(c: Concept) -> set[str]:
    return {s.role for s in subconcepts(c) if isinstance(s, (Exists, Forall))}


# ---------------------------------------------------------------------------
# Assertions and TBox axioms
# ---------------------------------------------------------------------------

class Assertion:
    """Base class of context-tagged assertions."""

    __slots__ = ()

    def __str__(self) -> str:
        return assertion_str(self)


@dataclass(frozen=True)
class ConceptAssertion(Assertion):
    individual: str
    concept: Concept
    context: str


@dataclass(frozen=True)
class RoleAssertion(Assertion):
    subject: str
    target: str
    role: str
    context: str


def assertion_str(a: Assertion) -> str:
    if isinstance(a, ConceptAssertion):
        return f"{a.individual} : {concept_str(a.concept)} @ {a.context}"
    if isinstance(a, RoleAssertion):
        return f"({a.subject}, {a.target}) : {a.role} @ {a.context}"
    raise TypeError(f"not an assertion: {a!r}")


def assertion_individuals(a: Assertion) -> set[str]:
    if isinstance(a, ConceptAssertion):
        return {a.individual}
    return {a.subject, a.target}


def assertion_concepts(a: Assertion) -> set[str]:
    if isinstance(a, ConceptAssertion):
        return concept_atoms(a.concept)
    return set()


def assertion_roles(a: Assertion) -> set[str]:
    if isinstance(a, ConceptAssertion):
        return concept_roles(a.concept)
    return {a.role}


@dataclass(frozen=True)
class TBoxAxiom:
    lhs: Concept
    rhs: Concept

    def __str__(self) -> str:
        return f"{concept_str(self.lhs)} sub {concept_str(self.rhs)}"


# ---------------------------------------------------------------------------
# Context poset
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContextPoset:
    """Contexts ordered by refinement; (v, u) in refinements means v <= u.

    The reflexive-transitive closure is computed on demand and never stored.
    """

    elements: frozenset[str]
    refinements: frozenset[tuple[str, str]] = frozenset()

    def validate(self) -> None:
        for v, u in self.refinements:
            if v not in self.elements or u not in self.elements:
                raise UnknownContextError(v if v not in self.elements else u)
        for v in self.elements:
            for u in self.elements:
                if v != u and self.leq(v, u) and self.leq(u, v):
                    raise SyntaxSpecError(
                        f"context poset not antisymmetric: {v} and {u} refine each other")

    def leq(self, v: str, u: str) -> bool:
        if v not in self.elements:
            raise UnknownContextError(v)
        if u not in self.elements:
            raise UnknownContextError(u)
        if v == u:
            return True
        seen = {v}
        frontier = [v]
        while frontier:
            x = frontier.pop()
            for (a, b) in self.refinements:
                if a == x and b not in seen:
                    if b == u:
                        return True
                    seen.add(b)
                    frontier.append(b)
        return False

    def below(self, u: str) -> set[str]:
        """All contexts v with v <= u."""
        return {v for v in self.elements if self.leq(v, u)}

    def meet(self, a: str, b: str) -> str | None:
        """Greatest common refinement of a and b, if one exists."""
        lower = {x for x in self.elements if self.leq(x, a) and self.leq(x, b)}
        for g in sorted(lower):
            if all(self.leq(y, g) for y in lower):
                return g
        return None


def context_leq(poset: ContextPoset, v: str, u: str) -> bool:
    """True iff v refines u in the reflexive-transitive closure."""
    return poset.leq(v, u)


# ---------------------------------------------------------------------------
# Signature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Signature:
    concept_names: frozenset[str]
    role_names: frozenset[str]
    individual_names: frozenset[str]
    contexts: ContextPoset

    def validate(self) -> None:
        for group, kind in ((self.concept_names, "concept name"),
                            (self.role_names, "role name"),
                            (self.individual_names, "individual name"),
                            (self.contexts.elements, "context name")):
            for name in group:
                check_ident(name, kind)
        pairs = [("concept", self.concept_names), ("role", self.role_names),
                 ("individual", self.individual_names)]
        for i in range(len(pairs)):
            for j in range(i + 1, len(pairs)):
                overlap = pairs[i][1] & pairs[j][1]
                if overlap:
                    raise SyntaxSpecError(
                        f"{pairs[i][0]} and {pairs[j][0]} names overlap: {sorted(overlap)}")
        self.contexts.validate()

    def check_concept(self, c: Concept) -> None:
        for sc in subconcepts(c):
            if isinstance(sc, Atom) and sc.name not in self.concept_names:
                raise UnknownNameError(sc.name, "concept name")
            if isinstance(sc, (Exists, Forall)) and sc.role not in self.role_names:
                raise UnknownNameError(sc.role, "role name")

    def check_assertion(self, a: Assertion) -> None:
        if a.context not in self.contexts.elements:
            raise UnknownContextError(a.context)
        if isinstance(a, ConceptAssertion):
            if a.individual not in self.individual_names:
                raise UnknownNameError(a.individual, "individual name")
            self.check_concept(a.concept)
        elif isinstance(a, RoleAssertion):
            for ind in (a.subject, a.target):
                if ind not in self.individual_names:
                    raise UnknownNameError(ind, "individual name")
            if a.role not in self.role_names:
                raise UnknownNameError(a.role, "role name")


EMPTY_SIGNATURE = Signature(frozenset(), frozenset(), frozenset(),
                            ContextPoset(frozenset(), frozenset()))


# ---------------------------------------------------------------------------
# Knowledge states and TAPO objects
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KnowledgeState:
    """Localized state: a shared TBox plus the ABox at one context."""

    tbox: tuple[TBoxAxiom, ...]
    abox: frozenset[Assertion]
    context: str

    def validate(self) -> None:
        for a in self.abox:
            if a.context != self.context:
                raise ContextMismatchError(self.context, a.context)

    def add(self, a: Assertion) -> "KnowledgeState":
        if a.context != self.context:
            raise ContextMismatchError(self.context, a.context)
        return KnowledgeState(self.tbox, self.abox | {a}, self.context)

    def remove(self, a: Assertion) -> "KnowledgeState":
        return KnowledgeState(self.tbox, self.abox - {a}, self.context)

    def union(self, assertions: frozenset[Assertion]) -> "KnowledgeState":
        for a in assertions:
            if a.context != self.context:
                raise ContextMismatchError(self.context, a.context)
        return KnowledgeState(self.tbox, self.abox | assertions, self.context)


@dataclass
class TapoObject:
    """A knowledge state together with its named programs and oracle frames."""

    state: KnowledgeState
    pbox: dict  # name -> Program
    obox: dict  # name -> OracleFrame


def canonical_state_lines(state: KnowledgeState) -> list[str]:
    lines = [f"context {state.context}"]
    lines += [f"tbox {ax}" for ax in state.tbox]
    lines += sorted(f"abox {assertion_str(a)}" for a in state.abox)
    return lines


def state_digest(state: KnowledgeState) -> str:
    """Stable 16-hex-digit digest of the canonical serialization."""
    blob = "\n".join(canonical_state_lines(state)).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
