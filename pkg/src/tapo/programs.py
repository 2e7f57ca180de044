"""The minimal imperative layer: program ASTs and the fuel-bounded big-step
interpreter realizing programs as partial state transformers.

Fuel bounds loop unfoldings (and consult steps); running out of fuel is a
distinct observable outcome, never an error. The interpreter is a pure
function of (state, program, fuel) whenever the guard provider is pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .guards import (AndG, AtomA, AtomSub, ChannelClosedError, GuardExpr,
                     GuardProvider, NotG, OrG, eval_guard, guard_str)
from .syntax import Assertion, KnowledgeState, TapoError, assertion_str


class ProgramError(TapoError):
    pass


class UnhandledConsultError(ProgramError):
    def __init__(self, query: str):
        super().__init__(f"consult {query!r} reached with no consult handler")
        self.query = query


class ProgramRestrictionError(ProgramError):
    """Raised when restriction drops an assertion a program needs."""

    def __init__(self, node: str):
        super().__init__(f"restriction undefined on program node: {node}")
        self.node = node


# ---------------------------------------------------------------------------
# Program AST
# ---------------------------------------------------------------------------

class Program:
    __slots__ = ()

    def __str__(self) -> str:
        return program_str(self)


@dataclass(frozen=True)
class Skip(Program):
    pass


@dataclass(frozen=True)
class Add(Program):
    assertion: Assertion


@dataclass(frozen=True)
class Del(Program):
    assertion: Assertion


@dataclass(frozen=True)
class Seq(Program):
    first: Program
    second: Program


@dataclass(frozen=True)
class If(Program):
    guard: GuardExpr
    then: Program
    orelse: Program


@dataclass(frozen=True)
class While(Program):
    guard: GuardExpr
    body: Program


@dataclass(frozen=True)
class Consult(Program):
    query: str


SKIP = Skip()


def program_str(p: Program) -> str:
    """Canonical pretty-printer; parse(program_str(p)) == p."""
    if isinstance(p, Skip):
        return "skip"
    if isinstance(p, Add):
        return f"add {assertion_str(p.assertion)}"
    if isinstance(p, Del):
        return f"del {assertion_str(p.assertion)}"
    if isinstance(p, Seq):
        # sequencing folds left: brace a nested Seq on the right
        first = program_str(p.first)
        second = program_str(p.second)
        if isinstance(p.second, Seq):
            second = f"{{ {second} }}"
        return f"{first} ; {second}"
    if isinstance(p, If):
        return (f"if {guard_str(p.guard)} then {{ {program_str(p.then)} }}"
                f" else {{ {program_str(p.orelse)} }}")
    if isinstance(p, While):
        return f"while {guard_str(p.guard)} do {{ {program_str(p.body)} }}"
    if isinstance(p, Consult):
        return f"consult {p.query}"
    raise TypeError(f"not a program: {p!r}")


def program_assertions(p: Program) -> set[Assertion]:
    """All assertions embedded in add/del nodes and guard atoms."""
    out: set[Assertion] = set()

    def guard_walk(g: GuardExpr) -> None:
        if isinstance(g, AtomA):
            out.add(g.assertion)
        elif isinstance(g, (AndG, OrG)):
            guard_walk(g.left)
            guard_walk(g.right)
        elif isinstance(g, NotG):
            guard_walk(g.inner)

    def walk(q: Program) -> None:
        if isinstance(q, (Add, Del)):
            out.add(q.assertion)
        elif isinstance(q, Seq):
            walk(q.first)
            walk(q.second)
        elif isinstance(q, If):
            guard_walk(q.guard)
            walk(q.then)
            walk(q.orelse)
        elif isinstance(q, While):
            guard_walk(q.guard)
            walk(q.body)

    walk(p)
    return out


def program_context(p: Program) -> Optional[str]:
    """The single context all embedded assertions live at, if any."""
    contexts = {a.context for a in program_assertions(p)}
    if len(contexts) > 1:
        raise ProgramError(f"program mixes contexts {sorted(contexts)}")
    return next(iter(contexts)) if contexts else None


# ---------------------------------------------------------------------------
# Outcomes
# ---------------------------------------------------------------------------

class Outcome:
    __slots__ = ()


@dataclass(frozen=True)
class Final(Outcome):
    state: KnowledgeState


@dataclass(frozen=True)
class OutOfFuel(Outcome):
    state: KnowledgeState  # state at interruption
    steps: int             # fuel units consumed


@dataclass(frozen=True)
class Failed(Outcome):
    error: str


# ---------------------------------------------------------------------------
# Interpreter
# ---------------------------------------------------------------------------

DEFAULT_FUEL = 1000

ConsultHandler = Callable[[KnowledgeState, str], KnowledgeState]
Tracer = Callable[[str, dict, KnowledgeState, KnowledgeState], None]


class _Fuel:
    def __init__(self, amount: int):
        self.left = amount
        self.used = 0

    def spend(self) -> bool:
        if self.left <= 0:
            return False
        self.left -= 1
        self.used += 1
        return True


class _Exhausted(Exception):
    def __init__(self, state: KnowledgeState):
        self.state = state


def eval_program(state: KnowledgeState, prog: Program, provider: GuardProvider,
                 fuel: int = DEFAULT_FUEL, consult: ConsultHandler | None = None,
                 tracer: Tracer | None = None) -> Outcome:
    """Big-step evaluation of prog on state.

    Each while unfolding and each consult costs one fuel unit; running out
    yields OutOfFuel with the state at interruption. Provider and consult
    errors are captured as Failed.
    """
    ctx = program_context(prog)
    if ctx is not None and ctx != state.context:
        return Failed(f"program over @{ctx} run at context {state.context}")
    budget = _Fuel(fuel)
    try:
        result = _eval(state, prog, provider, budget, consult, tracer)
    except _Exhausted as stop:
        return OutOfFuel(stop.state, budget.used)
    except ChannelClosedError:
        raise  # an interactive session ending is not a program failure
    except TapoError as err:
        return Failed(str(err))
    return Final(result)


def _emit(tracer: Tracer | None, kind: str, payload: dict,
          before: KnowledgeState, after: KnowledgeState) -> None:
    if tracer is not None:
        tracer(kind, payload, before, after)


def _eval(state: KnowledgeState, prog: Program, provider: GuardProvider,
          budget: _Fuel, consult: ConsultHandler | None,
          tracer: Tracer | None) -> KnowledgeState:
    if isinstance(prog, Skip):
        _emit(tracer, "pbox-rule", {"rule": "Skip"}, state, state)
        return state
    if isinstance(prog, Add):
        out = state.add(prog.assertion)
        _emit(tracer, "pbox-rule",
              {"rule": "Add", "assertion": assertion_str(prog.assertion)}, state, out)
        return out
    if isinstance(prog, Del):
        out = state.remove(prog.assertion)
        _emit(tracer, "pbox-rule",
              {"rule": "Del", "assertion": assertion_str(prog.assertion)}, state, out)
        return out
    if isinstance(prog, Seq):
        mid = _eval(state, prog.first, provider, budget, consult, tracer)
        return _eval(mid, prog.second, provider, budget, consult, tracer)
    if isinstance(prog, If):
        value = eval_guard(provider.bind(state), prog.guard)
        _emit(tracer, "guard", {"guard": guard_str(prog.guard), "value": value},
              state, state)
        branch = prog.then if value else prog.orelse
        _emit(tracer, "pbox-rule", {"rule": "If-T" if value else "If-F"}, state, state)
        return _eval(state, branch, provider, budget, consult, tracer)
    if isinstance(prog, While):
        current = state
        while True:
            value = eval_guard(provider.bind(current), prog.guard)
            _emit(tracer, "guard", {"guard": guard_str(prog.guard), "value": value},
                  current, current)
            if not value:
                _emit(tracer, "pbox-rule", {"rule": "While-F"}, current, current)
                return current
            if not budget.spend():
                raise _Exhausted(current)
            _emit(tracer, "pbox-rule", {"rule": "While-T"}, current, current)
            current = _eval(current, prog.body, provider, budget, consult, tracer)
    if isinstance(prog, Consult):
        if consult is None:
            raise UnhandledConsultError(prog.query)
        if not budget.spend():
            raise _Exhausted(state)
        out = consult(state, prog.query)
        _emit(tracer, "pbox-rule", {"rule": "Consult", "query": prog.query}, state, out)
        return out
    raise TypeError(f"not a program: {prog!r}")


def denotation(prog: Program, provider: GuardProvider, fuel: int = DEFAULT_FUEL,
               consult: ConsultHandler | None = None):
    """The partial map induced by evaluation: state -> state where Final,
    None where the outcome is OutOfFuel or Failed."""

    def run(state: KnowledgeState) -> Optional[KnowledgeState]:
        outcome = eval_program(state, prog, provider, fuel, consult)
        return outcome.state if isinstance(outcome, Final) else None

    return run


# ---------------------------------------------------------------------------
# Restriction of programs
# ---------------------------------------------------------------------------

def restrict_program(prog: Program, restriction) -> Program:
    """Relabel every embedded assertion along the restriction, preserving the
    program's shape node-for-node.

    The restriction object must expose map_assertion(Assertion) -> Assertion
    or None; a dropped assertion makes the restricted program ill-formed and
    raises ProgramRestrictionError naming the node.
    """

    def map_assertion(a: Assertion, node: str) -> Assertion:
        image = restriction.map_assertion(a)
        if image is None:
            raise ProgramRestrictionError(node)
        return image

    def guard_walk(g: GuardExpr) -> GuardExpr:
        if isinstance(g, AtomA):
            return AtomA(map_assertion(g.assertion, f"guard atom {guard_str(g)}"))
        if isinstance(g, AtomSub):
            return g
        if isinstance(g, AndG):
            return AndG(guard_walk(g.left), guard_walk(g.right))
        if isinstance(g, OrG):
            return OrG(guard_walk(g.left), guard_walk(g.right))
        if isinstance(g, NotG):
            return NotG(guard_walk(g.inner))
        return g

    def walk(q: Program) -> Program:
        if isinstance(q, Skip):
            return q
        if isinstance(q, Add):
            return Add(map_assertion(q.assertion, f"add {assertion_str(q.assertion)}"))
        if isinstance(q, Del):
            return Del(map_assertion(q.assertion, f"del {assertion_str(q.assertion)}"))
        if isinstance(q, Seq):
            return Seq(walk(q.first), walk(q.second))
        if isinstance(q, If):
            return If(guard_walk(q.guard), walk(q.then), walk(q.orelse))
        if isinstance(q, While):
            return While(guard_walk(q.guard), walk(q.body))
        if isinstance(q, Consult):
            return q
        raise TypeError(f"not a program: {q!r}")

    return walk(prog)
