"""Context-indexed families of TAPO states: restriction maps, functoriality
checking, procedural and oracle commutation checks, and finite-poset gluing.

Restrictions are declared per refinement edge as hide/rename rules over a
default relabeling, so functoriality is a real check rather than true by
construction. All checks run over finite probe sets (the family's ABoxes).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import oracle as obx
from .programs import (Program, ProgramRestrictionError, eval_program, Final,
                       restrict_program)
from .syntax import (Assertion, ConceptAssertion, ContextPoset, KnowledgeState,
                     RoleAssertion, Signature, TapoError, TapoObject,
                     assertion_concepts, assertion_individuals, assertion_roles,
                     assertion_str, state_digest)

MAX_POSET_SIZE = 64


class PresheafError(TapoError):
    pass


# ---------------------------------------------------------------------------
# Restrictions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Restriction:
    """Partial assertion map along target <= source.

    The default action relabels @source to @target; assertions mentioning a
    hidden symbol are undefined, and renamed individuals are substituted.
    The map is injective where defined.
    """

    source: str
    target: str
    hidden_individuals: frozenset[str] = frozenset()
    hidden_concepts: frozenset[str] = frozenset()
    hidden_roles: frozenset[str] = frozenset()
    renames: tuple[tuple[str, str], ...] = ()

    def validate(self, signature: Optional[Signature] = None) -> None:
        sources = [x for x, _ in self.renames]
        targets = [y for _, y in self.renames]
        if len(set(sources)) != len(sources) or len(set(targets)) != len(targets):
            raise PresheafError(
                f"restriction {self.source}->{self.target}: renames not injective")
        if signature is not None:
            visible = signature.individual_names - self.hidden_individuals
            for x, y in self.renames:
                if y != x and y in visible and y not in sources:
                    raise PresheafError(
                        f"restriction {self.source}->{self.target}: rename target "
                        f"{y!r} collides with a visible individual")

    def _rename(self, name: str) -> str:
        for x, y in self.renames:
            if x == name:
                return y
        return name

    def _unrename(self, name: str) -> str:
        for x, y in self.renames:
            if y == name:
                return x
        return name

    def map_assertion(self, a: Assertion) -> Optional[Assertion]:
        if a.context != self.source:
            raise PresheafError(
                f"restriction {self.source}->{self.target} applied to {assertion_str(a)}")
        if assertion_individuals(a) & self.hidden_individuals:
            return None
        if assertion_concepts(a) & self.hidden_concepts:
            return None
        if assertion_roles(a) & self.hidden_roles:
            return None
        if isinstance(a, ConceptAssertion):
            return ConceptAssertion(self._rename(a.individual), a.concept, self.target)
        if isinstance(a, RoleAssertion):
            return RoleAssertion(self._rename(a.subject), self._rename(a.target),
                                 a.role, self.target)
        raise TypeError(f"not an assertion: {a!r}")

    def preimage_assertion(self, b: Assertion) -> Optional[Assertion]:
        """The unique assertion mapping to b, if any."""
        if b.context != self.target:
            return None
        if isinstance(b, ConceptAssertion):
            candidate: Assertion = ConceptAssertion(
                self._unrename(b.individual), b.concept, self.source)
        elif isinstance(b, RoleAssertion):
            candidate = RoleAssertion(self._unrename(b.subject),
                                      self._unrename(b.target), b.role, self.source)
        else:
            raise TypeError(f"not an assertion: {b!r}")
        return candidate if self.map_assertion(candidate) == b else None


class PathMap:
    """Composite of restrictions along a declared-edge path."""

    def __init__(self, source: str, target: str, steps: tuple[Restriction, ...]):
        self.source = source
        self.target = target
        self.steps = steps

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return tuple((r.source, r.target) for r in self.steps)

    def map_assertion(self, a: Assertion) -> Optional[Assertion]:
        out: Optional[Assertion] = a
        for step in self.steps:
            out = step.map_assertion(out)
            if out is None:
                return None
        return out

    def preimage_assertion(self, b: Assertion) -> Optional[Assertion]:
        out: Optional[Assertion] = b
        for step in reversed(self.steps):
            out = step.preimage_assertion(out)
            if out is None:
                return None
        return out


class InversePathMap:
    """Backward view of a path map; map_assertion is the preimage."""

    def __init__(self, path: PathMap):
        self.path = path

    def map_assertion(self, a: Assertion) -> Optional[Assertion]:
        return self.path.preimage_assertion(a)


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------

@dataclass
class StateFamily:
    poset: ContextPoset
    states: dict[str, TapoObject]
    restrictions: dict[tuple[str, str], Restriction]

    def validate(self) -> None:
        for (u, v), r in self.restrictions.items():
            if r.source != u or r.target != v:
                raise PresheafError(f"restriction stored under wrong edge ({u}, {v})")
            if not self.poset.leq(v, u):
                raise PresheafError(f"restriction {u}->{v} without {v} <= {u}")
            r.validate()
        for (finer, coarser) in self.poset.refinements:
            if (coarser, finer) not in self.restrictions:
                raise PresheafError(
                    f"refinement edge {finer} <= {coarser} has no restriction")

    def paths(self, source: str, target: str) -> list[PathMap]:
        """All simple declared-edge paths source -> target (identity included
        when source == target)."""
        out: list[PathMap] = []
        if source == target:
            out.append(PathMap(source, target, ()))

        def walk(at: str, steps: tuple[Restriction, ...], seen: frozenset[str]):
            for (u, v), r in sorted(self.restrictions.items()):
                if u != at or v in seen:
                    continue
                if v == target:
                    out.append(PathMap(source, target, steps + (r,)))
                elif v != source:
                    walk(v, steps + (r,), seen | {v})

        walk(source, (), frozenset({source}))
        return out


def restrict_state(r: Restriction, x: TapoObject) -> TapoObject:
    """Apply a restriction to a whole TAPO object.

    The TBox passes through unchanged; undefined ABox assertions are dropped;
    a program that loses an assertion is an error naming the program.
    """
    if x.state.context != r.source:
        raise PresheafError(
            f"restriction {r.source}->{r.target} applied to state @{x.state.context}")
    abox = frozenset(img for a in x.state.abox
                     if (img := r.map_assertion(a)) is not None)
    state = KnowledgeState(x.state.tbox, abox, r.target)
    pbox = {}
    for name, prog in x.pbox.items():
        try:
            pbox[name] = restrict_program(prog, r)
        except ProgramRestrictionError as err:
            raise PresheafError(f"program {name!r}: {err}") from err
    obox = {}
    for name, frame in x.obox.items():
        obox[name] = _restrict_frame(frame, r)
    return TapoObject(state, pbox, obox)


def _restrict_frame(frame: obx.OracleFrame, r: Restriction) -> obx.OracleFrame:
    answers = {}
    for q, resp in frame.answers.items():
        payload = frozenset(img for a in resp.payload
                            if (img := r.map_assertion(a)) is not None)
        answers[q] = obx.Response(resp.id, payload, resp.trust, resp.certificates)
    return obx.OracleFrame(frame.name, r.target, dict(frame.queries), answers,
                           frame.trust, frame.policy)


def _unrestrict_frame(frame: obx.OracleFrame, inverse: InversePathMap,
                      context: str) -> Optional[obx.OracleFrame]:
    answers = {}
    for q, resp in frame.answers.items():
        payload = []
        for a in resp.payload:
            pre = inverse.map_assertion(a)
            if pre is None:
                return None
            payload.append(pre)
        answers[q] = obx.Response(resp.id, frozenset(payload), resp.trust,
                                  resp.certificates)
    return obx.OracleFrame(frame.name, context, dict(frame.queries), answers,
                           frame.trust, frame.policy)


# ---------------------------------------------------------------------------
# Functoriality
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FunctorialityViolation:
    source: str
    target: str
    path_a: tuple[tuple[str, str], ...]
    path_b: tuple[tuple[str, str], ...]
    assertion: str
    image_a: Optional[str]
    image_b: Optional[str]


@dataclass
class FunctorialityReport:
    violations: list[FunctorialityViolation] = field(default_factory=list)
    pairs_checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "check": "functoriality",
            "ok": self.ok,
            "pairs_checked": self.pairs_checked,
            "violations": [
                {"source": v.source, "target": v.target,
                 "path_a": list(map(list, v.path_a)), "path_b": list(map(list, v.path_b)),
                 "assertion": v.assertion, "image_a": v.image_a, "image_b": v.image_b}
                for v in self.violations],
        }


def check_functoriality(fam: StateFamily) -> FunctorialityReport:
    """Identity and path-independence of restriction, checked pointwise on
    each source state's ABox."""
    if len(fam.poset.elements) > MAX_POSET_SIZE:
        raise PresheafError(f"poset larger than {MAX_POSET_SIZE} elements")
    report = FunctorialityReport()
    for source in sorted(fam.poset.elements):
        if source not in fam.states:
            continue
        probe = sorted(fam.states[source].state.abox, key=assertion_str)
        for target in sorted(fam.poset.elements):
            paths = fam.paths(source, target)
            if len(paths) < 2:
                continue
            report.pairs_checked += 1
            first = paths[0]
            for other in paths[1:]:
                for a in probe:
                    img_a = first.map_assertion(a)
                    img_b = other.map_assertion(a)
                    if img_a != img_b:
                        report.violations.append(FunctorialityViolation(
                            source, target, first.edges, other.edges,
                            assertion_str(a),
                            None if img_a is None else assertion_str(img_a),
                            None if img_b is None else assertion_str(img_b)))
    return report


# ---------------------------------------------------------------------------
# Procedure and oracle commutation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompatEntry:
    edge: tuple[str, str]
    subject: str  # program or query name
    status: str   # ok | mismatch | vacuous | restriction-error
    detail: str = ""


@dataclass
class CompatReport:
    check: str
    entries: list[CompatEntry] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e.status in ("ok", "vacuous") for e in self.entries)

    def to_json(self) -> dict:
        return {"check": self.check, "ok": self.ok,
                "entries": [{"edge": list(e.edge), "subject": e.subject,
                             "status": e.status, "detail": e.detail}
                            for e in self.entries]}


def _restrict_bare_state(r: Restriction, state: KnowledgeState) -> KnowledgeState:
    abox = frozenset(img for a in state.abox
                     if (img := r.map_assertion(a)) is not None)
    return KnowledgeState(state.tbox, abox, r.target)


def check_procedure_compat(fam: StateFamily, prog_name: str, provider_factory,
                           fuel: int = 1000) -> CompatReport:
    """Compare restrict(run at U) with run-at-V(restrict) on every edge.

    provider_factory maps a knowledge state to the guard provider used for
    the run starting from that state.
    """
    report = CompatReport("procedure-compat")
    for (u, v), r in sorted(fam.restrictions.items()):
        if u not in fam.states:
            continue
        obj_u = fam.states[u]
        if prog_name not in obj_u.pbox:
            continue
        prog_u = obj_u.pbox[prog_name]
        state_u = obj_u.state
        try:
            prog_v = restrict_program(prog_u, r)
        except ProgramRestrictionError as err:
            report.entries.append(CompatEntry((u, v), prog_name,
                                              "restriction-error", str(err)))
            continue
        if v in fam.states and prog_name in fam.states[v].pbox:
            prog_v = fam.states[v].pbox[prog_name]
        out_u = eval_program(state_u, prog_u, provider_factory(state_u), fuel)
        state_v = _restrict_bare_state(r, state_u)
        out_v = eval_program(state_v, prog_v, provider_factory(state_v), fuel)
        if not isinstance(out_u, Final) or not isinstance(out_v, Final):
            report.entries.append(CompatEntry(
                (u, v), prog_name, "vacuous",
                f"upper {type(out_u).__name__}, lower {type(out_v).__name__}"))
            continue
        left = _restrict_bare_state(r, out_u.state)
        right = out_v.state
        if left.abox == right.abox:
            report.entries.append(CompatEntry((u, v), prog_name, "ok"))
        else:
            report.entries.append(CompatEntry(
                (u, v), prog_name, "mismatch",
                f"restrict-then-run {state_digest(right)} vs "
                f"run-then-restrict {state_digest(left)}"))
    return report


def check_oracle_compat(fam: StateFamily, frame_name: str,
                        max_depth: int = 32) -> CompatReport:
    """Compare restrict(oracle step at U) with oracle step at V of the
    restricted state, per edge and admissible query."""
    report = CompatReport("oracle-compat")
    for (u, v), r in sorted(fam.restrictions.items()):
        if u not in fam.states or v not in fam.states:
            continue
        obj_u, obj_v = fam.states[u], fam.states[v]
        if frame_name not in obj_u.obox:
            continue
        if frame_name not in obj_v.obox:
            raise PresheafError(
                f"frame {frame_name!r} not declared at {v}: missing declared map")
        frame_u = obj_u.obox[frame_name]
        frame_v = obj_v.obox[frame_name]
        state_u = obj_u.state
        for q in sorted(frame_u.queries):
            if q not in frame_v.queries:
                raise PresheafError(
                    f"query {q!r} of frame {frame_name!r} has no counterpart at {v}")
            out_u, rep_u = obx.oracle_transition(frame_u, state_u, q, max_depth)
            state_v = _restrict_bare_state(r, state_u)
            out_v, rep_v = obx.oracle_transition(frame_v, state_v, q, max_depth)
            left = _restrict_bare_state(r, out_u)
            if rep_u.accepted != rep_v.accepted:
                gate = "trust" if rep_u.trust_ok != rep_v.trust_ok else \
                    ("answer" if rep_u.answered != rep_v.answered else "policy")
                report.entries.append(CompatEntry(
                    (u, v), q, "mismatch",
                    f"diverges at the {gate} gate: "
                    f"{rep_u.cause or 'accept'} vs {rep_v.cause or 'accept'}"))
            elif left.abox != out_v.abox:
                report.entries.append(CompatEntry(
                    (u, v), q, "mismatch",
                    f"imports differ: {state_digest(left)} vs {state_digest(out_v)}"))
            else:
                report.entries.append(CompatEntry((u, v), q, "ok"))
    return report


# ---------------------------------------------------------------------------
# Gluing
# ---------------------------------------------------------------------------

@dataclass
class GlueResult:
    kind: str  # glued | conflict | not-unique
    glued: Optional[TapoObject] = None
    evidence: tuple = ()
    vacuous_pairs: tuple = ()

    def to_json(self) -> dict:
        return {"check": "glue", "kind": self.kind,
                "evidence": [str(x) for x in self.evidence],
                "vacuous_pairs": [list(p) for p in self.vacuous_pairs]}


def _path_map(fam: StateFamily, source: str, target: str) -> Optional[PathMap]:
    paths = fam.paths(source, target)
    return paths[0] if paths else None


def glue(fam: StateFamily, cover: list[str], context: str) -> GlueResult:
    """Reconstruct the state over context from compatible states over a cover.

    Pairwise compatibility is checked at declared meets (pairs without a meet
    are flagged vacuous); the candidate ABox is the union of preimages, and
    it must restrict back to each local state exactly.
    """
    cover = sorted(dict.fromkeys(cover))
    for v in cover:
        if not fam.poset.leq(v, context):
            raise PresheafError(f"cover member {v} does not refine {context}")
        if v not in fam.states:
            raise PresheafError(f"no state declared at cover member {v}")

    vacuous: list[tuple[str, str]] = []
    for i, v1 in enumerate(cover):
        for v2 in cover[i + 1:]:
            m = fam.poset.meet(v1, v2)
            if m is None:
                vacuous.append((v1, v2))
                continue
            p1 = _path_map(fam, v1, m)
            p2 = _path_map(fam, v2, m)
            if p1 is None or p2 is None:
                vacuous.append((v1, v2))
                continue
            img1 = {b for a in fam.states[v1].state.abox
                    if (b := p1.map_assertion(a)) is not None}
            img2 = {b for a in fam.states[v2].state.abox
                    if (b := p2.map_assertion(a)) is not None}
            if img1 != img2:
                only1 = sorted(img1 - img2, key=assertion_str)
                only2 = sorted(img2 - img1, key=assertion_str)
                evidence = tuple(assertion_str(a) for a in only1 + only2)
                return GlueResult("conflict", evidence=evidence,
                                  vacuous_pairs=tuple(vacuous))

    # candidate ABox: union of preimages along the declared paths
    maps: dict[str, PathMap] = {}
    for v in cover:
        path = _path_map(fam, context, v)
        if path is None:
            raise PresheafError(f"no declared restriction path {context} -> {v}")
        maps[v] = path
    candidate: set[Assertion] = set()
    for v in cover:
        for b in sorted(fam.states[v].state.abox, key=assertion_str):
            pre = maps[v].preimage_assertion(b)
            if pre is None:
                return GlueResult("conflict",
                                  evidence=(f"no preimage at {context}: {assertion_str(b)}",),
                                  vacuous_pairs=tuple(vacuous))
            candidate.add(pre)

    # the candidate must restrict back to each local state exactly
    for v in cover:
        image = {b for a in candidate if (b := maps[v].map_assertion(a)) is not None}
        local = set(fam.states[v].state.abox)
        if image != local:
            extra = sorted(image - local, key=assertion_str)
            missing = sorted(local - image, key=assertion_str)
            evidence = tuple(f"at {v}: " + assertion_str(a) for a in extra + missing)
            return GlueResult("conflict", evidence=evidence,
                              vacuous_pairs=tuple(vacuous))

    # ambiguity: an assertion at the glued context invisible to every member
    if context in fam.states:
        for a in sorted(fam.states[context].state.abox, key=assertion_str):
            if a in candidate:
                continue
            if all(maps[v].map_assertion(a) is None for v in cover):
                return GlueResult(
                    "not-unique",
                    evidence=(assertion_str(a),
                              "both with and without it restrict back exactly"),
                    vacuous_pairs=tuple(vacuous))

    tboxes = {fam.states[v].state.tbox for v in cover}
    if len(tboxes) > 1:
        return GlueResult("conflict", evidence=("cover members disagree on the TBox",),
                          vacuous_pairs=tuple(vacuous))
    tbox = next(iter(tboxes)) if tboxes else ()

    pbox: dict[str, Program] = {}
    obox: dict[str, obx.OracleFrame] = {}
    for v in cover:
        inverse = InversePathMap(maps[v])
        for name, prog in fam.states[v].pbox.items():
            try:
                pre_prog = restrict_program(prog, inverse)
            except ProgramRestrictionError:
                continue
            if name in pbox and pbox[name] != pre_prog:
                return GlueResult("conflict",
                                  evidence=(f"program {name!r} glues inconsistently",),
                                  vacuous_pairs=tuple(vacuous))
            pbox[name] = pre_prog
        for name, frame in fam.states[v].obox.items():
            pre_frame = _unrestrict_frame(frame, inverse, context)
            if pre_frame is None:
                continue
            if name in obox and obox[name] != pre_frame:
                return GlueResult("conflict",
                                  evidence=(f"frame {name!r} glues inconsistently",),
                                  vacuous_pairs=tuple(vacuous))
            obox[name] = pre_frame

    glued = TapoObject(KnowledgeState(tbox, frozenset(candidate), context), pbox, obox)
    return GlueResult("glued", glued=glued, vacuous_pairs=tuple(vacuous))
