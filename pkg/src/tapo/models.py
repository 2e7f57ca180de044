"""Finite-model semantics: exhaustive enumeration of interpretations over
small domains, used as an independent oracle against the syntactic rules.

An interpretation assigns each concept name a subset of the domain (a
bitmask), each role name a relation (an n*n bitmask), and each individual a
domain element. Enumeration is vectorized over the atom and role axes with
numpy; individual assignments are looped.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Union

import numpy as np

from .syntax import (And, Assertion, Atom, Bottom, Concept, ConceptAssertion,
                     Exists, Forall, Not, Or, RoleAssertion, TBoxAxiom, TapoError,
                     Top, concept_atoms, concept_roles)

Fact = Union[Assertion, TBoxAxiom]

DEFAULT_MAX_DOMAIN = 3
DEFAULT_CELL_LIMIT = 1 << 22


class ModelSearchTooLarge(TapoError):
    pass


@dataclass(frozen=True)
class ModelViolation:
    goal: Fact
    domain_size: int
    assignment: tuple[tuple[str, int], ...]


def _collect_names(facts: Iterable[Fact]):
    atoms: set[str] = set()
    roles: set[str] = set()
    individuals: set[str] = set()
    for f in facts:
        if isinstance(f, TBoxAxiom):
            atoms |= concept_atoms(f.lhs) | concept_atoms(f.rhs)
            roles |= concept_roles(f.lhs) | concept_roles(f.rhs)
        elif isinstance(f, ConceptAssertion):
            atoms |= concept_atoms(f.concept)
            roles |= concept_roles(f.concept)
            individuals.add(f.individual)
        elif isinstance(f, RoleAssertion):
            roles.add(f.role)
            individuals.add(f.subject)
            individuals.add(f.target)
    return sorted(atoms), sorted(roles), sorted(individuals)


class _Grid:
    """All interpretations of the atom and role names over a fixed domain."""

    def __init__(self, n: int, atoms: list[str], roles: list[str], cell_limit: int):
        self.n = n
        self.full = (1 << n) - 1
        self.atoms = {name: i for i, name in enumerate(atoms)}
        self.roles = {name: i for i, name in enumerate(roles)}
        atom_confs = 1 << (n * len(atoms))
        role_confs = 1 << (n * n * len(roles))
        if atom_confs * role_confs > cell_limit:
            raise ModelSearchTooLarge(
                f"{atom_confs * role_confs} interpretations exceed the cell limit")
        self._atom_idx = np.arange(atom_confs, dtype=np.int64).reshape(-1, 1)
        self._role_idx = np.arange(role_confs, dtype=np.int64).reshape(1, -1)
        self._cache: dict[Concept, np.ndarray] = {}

    def atom_ext(self, name: str) -> np.ndarray:
        return (self._atom_idx >> (self.n * self.atoms[name])) & self.full

    def role_mask(self, name: str) -> np.ndarray:
        bits = self.n * self.n
        return (self._role_idx >> (bits * self.roles[name])) & ((1 << bits) - 1)

    def concept_ext(self, c: Concept) -> np.ndarray:
        if c in self._cache:
            return self._cache[c]
        if isinstance(c, Top):
            out = np.array([[self.full]], dtype=np.int64)
        elif isinstance(c, Bottom):
            out = np.array([[0]], dtype=np.int64)
        elif isinstance(c, Atom):
            out = self.atom_ext(c.name)
        elif isinstance(c, And):
            out = self.concept_ext(c.left) & self.concept_ext(c.right)
        elif isinstance(c, Or):
            out = self.concept_ext(c.left) | self.concept_ext(c.right)
        elif isinstance(c, Not):
            out = self.full & ~self.concept_ext(c.inner)
        elif isinstance(c, (Exists, Forall)):
            role = self.role_mask(c.role)
            filler = self.concept_ext(c.filler)
            out = np.zeros(1, dtype=np.int64)
            for x in range(self.n):
                row = (role >> (x * self.n)) & self.full
                if isinstance(c, Exists):
                    bit = (row & filler) != 0
                else:
                    bit = (row & (self.full & ~filler)) == 0
                out = out | (bit.astype(np.int64) << x)
        else:
            raise TypeError(f"not a concept: {c!r}")
        self._cache[c] = out
        return out

    def axiom_holds(self, ax: TBoxAxiom) -> np.ndarray:
        lhs = self.concept_ext(ax.lhs)
        rhs = self.concept_ext(ax.rhs)
        return (lhs & (self.full & ~rhs)) == 0

    def assertion_holds(self, a: Assertion, assign: dict[str, int]) -> np.ndarray:
        if isinstance(a, ConceptAssertion):
            ext = self.concept_ext(a.concept)
            return ((ext >> assign[a.individual]) & 1) != 0
        if isinstance(a, RoleAssertion):
            mask = self.role_mask(a.role)
            bit = assign[a.subject] * self.n + assign[a.target]
            return ((mask >> bit) & 1) != 0
        raise TypeError(f"not an assertion: {a!r}")

    def fact_holds(self, f: Fact, assign: dict[str, int]) -> np.ndarray:
        if isinstance(f, TBoxAxiom):
            return self.axiom_holds(f)
        return self.assertion_holds(f, assign)


_GRID_CACHE: dict[tuple, "_Grid"] = {}


def _grid_for(n: int, atoms: tuple[str, ...], roles: tuple[str, ...],
              cell_limit: int) -> "_Grid":
    key = (n, atoms, roles, cell_limit)
    if key not in _GRID_CACHE:
        if len(_GRID_CACHE) > 64:
            _GRID_CACHE.clear()
        _GRID_CACHE[key] = _Grid(n, list(atoms), list(roles), cell_limit)
    return _GRID_CACHE[key]


def find_violations(constraints: Iterable[Fact], goals: Iterable[Fact],
                    max_domain: int = DEFAULT_MAX_DOMAIN,
                    cell_limit: int = DEFAULT_CELL_LIMIT,
                    first_only: bool = False) -> list[ModelViolation]:
    """Goals that fail in some interpretation (domain size <= max_domain)
    satisfying every constraint."""
    constraints = list(constraints)
    goals = list(goals)
    atoms, roles, individuals = _collect_names(constraints + goals)
    violations: list[ModelViolation] = []
    broken: set[int] = set()
    for n in range(1, max_domain + 1):
        grid = _grid_for(n, tuple(atoms), tuple(roles), cell_limit)
        axiom_ok = np.array([[True]])
        assertion_constraints = []
        for f in constraints:
            if isinstance(f, TBoxAxiom):
                axiom_ok = axiom_ok & grid.axiom_holds(f)
            else:
                assertion_constraints.append(f)
        if not axiom_ok.any():
            continue
        for values in product(range(n), repeat=len(individuals)):
            assign = dict(zip(individuals, values))
            base_ok = axiom_ok
            for f in assertion_constraints:
                base_ok = base_ok & grid.assertion_holds(f, assign)
                if not base_ok.any():
                    break
            if not base_ok.any():
                continue
            for i, goal in enumerate(goals):
                if i in broken:
                    continue
                goal_ok = grid.fact_holds(goal, assign)
                if (base_ok & ~goal_ok).any():
                    broken.add(i)
                    violations.append(ModelViolation(goal, n, tuple(assign.items())))
                    if first_only:
                        return violations
    return violations


def premises_entail(premises: Iterable[Fact], conclusion: Fact,
                    max_domain: int = DEFAULT_MAX_DOMAIN,
                    cell_limit: int = DEFAULT_CELL_LIMIT) -> bool:
    """True iff the conclusion holds in every small model of the premises."""
    return not find_violations(premises, [conclusion], max_domain, cell_limit,
                               first_only=True)
