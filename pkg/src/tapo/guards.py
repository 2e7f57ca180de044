"""Guard expressions and the metalevel guard-evaluation layer.

Branching conditions are not object-level formulas: they are evaluated to t/f
by a provider, which may be a fixed profile, the current knowledge state, or
an interactive answerer. Static and state-derived providers are pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator

from .syntax import (Assertion, Concept, ContextMismatchError, KnowledgeState,
                     TapoError, assertion_str, concept_str)


class GuardError(TapoError):
    pass


class UndefinedAtomError(GuardError):
    def __init__(self, atom: "GuardExpr"):
        super().__init__(f"guard atom not in profile: {guard_str(atom)}")
        self.atom = atom


class ChannelClosedError(GuardError):
    pass


class TooManyAtomsError(GuardError):
    pass


# ---------------------------------------------------------------------------
# Guard expressions
# ---------------------------------------------------------------------------

class GuardExpr:
    __slots__ = ()

    def __str__(self) -> str:
        return guard_str(self)


@dataclass(frozen=True)
class GTrue(GuardExpr):
    pass


@dataclass(frozen=True)
class GFalse(GuardExpr):
    pass


@dataclass(frozen=True)
class AtomA(GuardExpr):
    """An assertion used as a basic guard atom."""
    assertion: Assertion


@dataclass(frozen=True)
class AtomSub(GuardExpr):
    """A subsumption atom, written [C sub D]."""
    lhs: Concept
    rhs: Concept


@dataclass(frozen=True)
class AndG(GuardExpr):
    left: GuardExpr
    right: GuardExpr


@dataclass(frozen=True)
class OrG(GuardExpr):
    left: GuardExpr
    right: GuardExpr


@dataclass(frozen=True)
class NotG(GuardExpr):
    inner: GuardExpr


GUARD_TRUE = GTrue()
GUARD_FALSE = GFalse()


def _gprec(g: GuardExpr) -> int:
    if isinstance(g, OrG):
        return 1
    if isinstance(g, AndG):
        return 2
    if isinstance(g, NotG):
        return 3
    return 4


def guard_str(g: GuardExpr) -> str:
    """Canonical pretty-printer; parse(guard_str(g)) == g."""
    if isinstance(g, GTrue):
        return "true"
    if isinstance(g, GFalse):
        return "false"
    if isinstance(g, AtomA):
        return assertion_str(g.assertion)
    if isinstance(g, AtomSub):
        return f"[{concept_str(g.lhs)} sub {concept_str(g.rhs)}]"
    if isinstance(g, (AndG, OrG)):
        word = "and" if isinstance(g, AndG) else "or"
        p = _gprec(g)
        left = guard_str(g.left)
        if _gprec(g.left) < p:
            left = f"({left})"
        right = guard_str(g.right)
        if _gprec(g.right) <= p:
            right = f"({right})"
        return f"{left} {word} {right}"
    if isinstance(g, NotG):
        inner = guard_str(g.inner)
        if _gprec(g.inner) < 3:
            inner = f"({inner})"
        return f"not {inner}"
    raise TypeError(f"not a guard: {g!r}")


def guard_atoms(g: GuardExpr) -> Iterator[GuardExpr]:
    """Distinct basic atoms of g in first-occurrence order."""
    seen: set[GuardExpr] = set()

    def walk(x: GuardExpr) -> Iterator[GuardExpr]:
        if isinstance(x, (AtomA, AtomSub)):
            if x not in seen:
                seen.add(x)
                yield x
        elif isinstance(x, (AndG, OrG)):
            yield from walk(x.left)
            yield from walk(x.right)
        elif isinstance(x, NotG):
            yield from walk(x.inner)

    return walk(g)


# ---------------------------------------------------------------------------
# Profiles and providers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GuardProfile:
    """A total valuation of a declared atom set."""

    valuation: tuple[tuple[GuardExpr, bool], ...]

    @staticmethod
    def of(mapping: dict) -> "GuardProfile":
        return GuardProfile(tuple(mapping.items()))

    def as_dict(self) -> dict:
        return dict(self.valuation)

    def value(self, atom: GuardExpr) -> bool:
        for a, v in self.valuation:
            if a == atom:
                return v
        raise UndefinedAtomError(atom)


class GuardProvider:
    """Maps basic guard atoms to truth values."""

    name = "provider"

    def value(self, atom: GuardExpr) -> bool:
        raise NotImplementedError

    def bind(self, state: KnowledgeState) -> "GuardProvider":
        """Rebind to a current state; the interpreter calls this at every
        guard evaluation so state-derived providers track the run."""
        return self


class StaticProvider(GuardProvider):
    name = "static"

    def __init__(self, profile: GuardProfile):
        self.profile = profile

    def value(self, atom: GuardExpr) -> bool:
        return self.profile.value(atom)


class StateDerivedProvider(GuardProvider):
    """Values atoms against a knowledge state.

    Assertion atoms are true iff the assertion is literally in the ABox;
    subsumption atoms are true iff the subsumption calculus derives them.
    With by_entailment=True, assertion atoms are valued by entailment instead
    of literal membership (the explicitly labeled extension, off by default).
    """

    name = "state-derived"

    def __init__(self, state: KnowledgeState, max_depth: int = 32,
                 by_entailment: bool = False):
        self.state = state
        self.max_depth = max_depth
        self.by_entailment = by_entailment
        if by_entailment:
            self.name = "entailment-derived"

    def bind(self, state: KnowledgeState) -> "StateDerivedProvider":
        if state == self.state:
            return self
        return StateDerivedProvider(state, self.max_depth, self.by_entailment)

    def value(self, atom: GuardExpr) -> bool:
        from . import reasoner
        if isinstance(atom, AtomA):
            if atom.assertion.context != self.state.context:
                raise ContextMismatchError(self.state.context, atom.assertion.context,
                                           "guard atom")
            if self.by_entailment:
                return reasoner.entails(self.state, atom.assertion, self.max_depth) is not None
            return atom.assertion in self.state.abox
        if isinstance(atom, AtomSub):
            return reasoner.derive_subsumption(list(self.state.tbox), atom.lhs, atom.rhs) is not None
        raise GuardError(f"not a basic atom: {atom!r}")


class InteractiveProvider(GuardProvider):
    """Asks an external answerer; each atom's first answer is cached so a
    single run sees one consistent profile."""

    name = "interactive"

    def __init__(self, channel):
        self.channel = channel
        self._cache: dict[GuardExpr, bool] = {}

    def value(self, atom: GuardExpr) -> bool:
        if atom in self._cache:
            return self._cache[atom]
        answer = self.channel.ask_guard(guard_str(atom))
        if answer not in ("t", "f"):
            raise GuardError(f"bad guard answer {answer!r}: expected 't' or 'f'")
        value = answer == "t"
        self._cache[atom] = value
        return value


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def eval_guard(provider: GuardProvider, guard: GuardExpr) -> bool:
    """Classical evaluation over the provider's atom valuation."""
    if isinstance(guard, GTrue):
        return True
    if isinstance(guard, GFalse):
        return False
    if isinstance(guard, (AtomA, AtomSub)):
        return provider.value(guard)
    if isinstance(guard, AndG):
        return eval_guard(provider, guard.left) and eval_guard(provider, guard.right)
    if isinstance(guard, OrG):
        return eval_guard(provider, guard.left) or eval_guard(provider, guard.right)
    if isinstance(guard, NotG):
        return not eval_guard(provider, guard.inner)
    raise TypeError(f"not a guard: {guard!r}")


def derive_profile(state: KnowledgeState, atoms, max_depth: int = 32) -> GuardProfile:
    """Profile valuing each atom against the state (literal ABox membership
    for assertion atoms, derived subsumption for subsumption atoms)."""
    provider = StateDerivedProvider(state, max_depth)
    return GuardProfile(tuple((a, provider.value(a)) for a in atoms))


MAX_TABLE_ATOMS = 16


@dataclass
class TruthTable:
    atoms: tuple[GuardExpr, ...]
    rows: dict[tuple[bool, ...], bool]


def _table_eval(guard: GuardExpr, row: dict) -> bool:
    # deliberately separate from eval_guard: this is the brute-force oracle
    if isinstance(guard, GTrue):
        return True
    if isinstance(guard, GFalse):
        return False
    if isinstance(guard, (AtomA, AtomSub)):
        return row[guard]
    if isinstance(guard, AndG):
        return _table_eval(guard.left, row) and _table_eval(guard.right, row)
    if isinstance(guard, OrG):
        return _table_eval(guard.left, row) or _table_eval(guard.right, row)
    if isinstance(guard, NotG):
        return not _table_eval(guard.inner, row)
    raise TypeError(f"not a guard: {guard!r}")


def truth_table(guard: GuardExpr) -> TruthTable:
    """Brute-force evaluation of guard under every atom valuation."""
    atoms = tuple(guard_atoms(guard))
    if len(atoms) > MAX_TABLE_ATOMS:
        raise TooManyAtomsError(f"{len(atoms)} atoms exceeds {MAX_TABLE_ATOMS}")
    rows = {}
    for values in product((False, True), repeat=len(atoms)):
        rows[values] = _table_eval(guard, dict(zip(atoms, values)))
    return TruthTable(atoms, rows)
