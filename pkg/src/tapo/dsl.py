"""Surface syntax: tokenizer and recursive-descent parsers for the KB DSL.

The format is line-oriented UTF-8 with # comments and brace-delimited
sections (signature, context, tbox, abox, pbox, obox, restriction). Names
must be declared before use. The full grammar ships in docs/grammar.ebnf.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import oracle as obx
from .guards import (AndG, AtomA, AtomSub, GFalse, GTrue, GuardExpr, NotG, OrG)
from .presheaf import Restriction
from .programs import (Add, Consult, Del, If, Program, Seq, Skip, While,
                       program_context)
from .syntax import (And, Assertion, Atom, Bottom, Concept, ConceptAssertion,
                     ContextPoset, Exists, Forall, KnowledgeState, Not, Or,
                     RoleAssertion, Signature, TBoxAxiom, TapoError, TapoObject,
                     Top, UnknownContextError, check_ident)


class ParseError(TapoError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class UnknownNameParseError(ParseError):
    def __init__(self, name: str, kind: str, line: int, col: int):
        super().__init__(f"unknown {kind}: {name!r}", line, col)
        self.name = name
        self.kind = kind


@dataclass(frozen=True)
class Token:
    kind: str  # ident, number, string, sym, eof
    text: str
    line: int
    col: int


_SYMBOLS = ("->", ">=", "{", "}", "(", ")", "[", "]", ",", ":", ";", "@", ".",
            "<", "=")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == '"':
            j = i + 1
            out = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    out.append(text[j + 1])
                    j += 2
                else:
                    out.append(text[j])
                    j += 1
            if j >= n:
                raise ParseError("unterminated string", line, col)
            tokens.append(Token("string", "".join(out), line, col))
            col += j - i + 1
            i = j + 1
            continue
        if ch.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("number", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class Parser:
    """Cursor over a token stream with the grammar's building blocks."""

    def __init__(self, text: str, signature: Signature | None = None):
        self.tokens = tokenize(text)
        self.pos = 0
        self.signature = signature

    # -- cursor -------------------------------------------------------------

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.text == text and tok.kind in ("ident", "sym")

    def eat(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.col)
        return self.next()

    def expect_ident(self, kind: str = "identifier") -> str:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(f"expected {kind}, found {tok.text or 'end of input'!r}",
                             tok.line, tok.col)
        self.next()
        return tok.text

    def expect_number(self) -> int:
        tok = self.peek()
        if tok.kind != "number":
            raise ParseError(f"expected number, found {tok.text!r}", tok.line, tok.col)
        self.next()
        return int(tok.text)

    def expect_string(self) -> str:
        tok = self.peek()
        if tok.kind != "string":
            raise ParseError(f"expected string, found {tok.text!r}", tok.line, tok.col)
        self.next()
        return tok.text

    def fail(self, message: str):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.col)

    def ident_list(self) -> list[str]:
        names = [self.expect_ident()]
        while self.eat(","):
            names.append(self.expect_ident())
        return names

    # -- names --------------------------------------------------------------

    def _check_concept_name(self, name: str, tok: Token) -> None:
        if self.signature is not None and name not in self.signature.concept_names:
            raise UnknownNameParseError(name, "concept name", tok.line, tok.col)

    def _check_role_name(self, name: str, tok: Token) -> None:
        if self.signature is not None and name not in self.signature.role_names:
            raise UnknownNameParseError(name, "role name", tok.line, tok.col)

    def _check_individual(self, name: str, tok: Token) -> None:
        if self.signature is not None and name not in self.signature.individual_names:
            raise UnknownNameParseError(name, "individual name", tok.line, tok.col)

    def _check_context(self, name: str, tok: Token) -> None:
        if self.signature is not None and name not in self.signature.contexts.elements:
            raise UnknownNameParseError(name, "context", tok.line, tok.col)

    # -- concepts -----------------------------------------------------------

    def concept(self) -> Concept:
        out = self._concept_and()
        while self.at("or"):
            self.next()
            out = Or(out, self._concept_and())
        return out

    def _concept_and(self) -> Concept:
        out = self._concept_unary()
        while self.at("and"):
            self.next()
            out = And(out, self._concept_unary())
        return out

    def _concept_unary(self) -> Concept:
        if self.eat("not"):
            return Not(self._concept_unary())
        if self.at("exists") or self.at("forall"):
            word = self.next().text
            tok = self.peek()
            role = self.expect_ident("role name")
            self._check_role_name(role, tok)
            self.expect(".")
            filler = self._concept_unary()
            return Exists(role, filler) if word == "exists" else Forall(role, filler)
        return self._concept_primary()

    def _concept_primary(self) -> Concept:
        if self.eat("top"):
            return Top()
        if self.eat("bot"):
            return Bottom()
        if self.eat("("):
            out = self.concept()
            self.expect(")")
            return out
        tok = self.peek()
        name = self.expect_ident("concept name")
        self._check_concept_name(name, tok)
        return Atom(name)

    # -- assertions ---------------------------------------------------------

    def assertion(self) -> Assertion:
        if self.at("("):
            self.expect("(")
            tok = self.peek()
            subject = self.expect_ident("individual name")
            self._check_individual(subject, tok)
            self.expect(",")
            tok = self.peek()
            target = self.expect_ident("individual name")
            self._check_individual(target, tok)
            self.expect(")")
            self.expect(":")
            tok = self.peek()
            role = self.expect_ident("role name")
            self._check_role_name(role, tok)
            self.expect("@")
            tok = self.peek()
            ctx = self.expect_ident("context")
            self._check_context(ctx, tok)
            return RoleAssertion(subject, target, role, ctx)
        tok = self.peek()
        individual = self.expect_ident("individual name")
        self._check_individual(individual, tok)
        self.expect(":")
        concept = self.concept()
        self.expect("@")
        tok = self.peek()
        ctx = self.expect_ident("context")
        self._check_context(ctx, tok)
        return ConceptAssertion(individual, concept, ctx)

    def tbox_axiom(self) -> TBoxAxiom:
        lhs = self.concept()
        self.expect("sub")
        rhs = self.concept()
        return TBoxAxiom(lhs, rhs)

    # -- guards ---------------------------------------------------------

    def guard(self) -> GuardExpr:
        out = self._guard_and()
        while self.at("or"):
            self.next()
            out = OrG(out, self._guard_and())
        return out

    def _guard_and(self) -> GuardExpr:
        out = self._guard_not()
        while self.at("and"):
            self.next()
            out = AndG(out, self._guard_not())
        return out

    def _guard_not(self) -> GuardExpr:
        if self.eat("not"):
            return NotG(self._guard_not())
        return self._guard_primary()

    def _guard_primary(self) -> GuardExpr:
        if self.eat("true"):
            return GTrue()
        if self.eat("false"):
            return GFalse()
        if self.eat("["):
            lhs = self.concept()
            self.expect("sub")
            rhs = self.concept()
            self.expect("]")
            return AtomSub(lhs, rhs)
        if self.at("("):
            # a role assertion looks like "(a," while a grouped guard does not
            if self.peek(1).kind == "ident" and self.peek(2).text == ",":
                return AtomA(self.assertion())
            self.expect("(")
            out = self.guard()
            self.expect(")")
            return out
        return AtomA(self.assertion())

    # -- programs -------------------------------------------------------

    def program(self) -> Program:
        out = self._statement()
        while self.eat(";"):
            out = Seq(out, self._statement())
        return out

    def _block(self) -> Program:
        self.expect("{")
        if self.eat("}"):
            return Skip()
        body = self.program()
        self.expect("}")
        return body

    def _statement(self) -> Program:
        if self.eat("skip"):
            return Skip()
        if self.eat("add"):
            return Add(self.assertion())
        if self.eat("del"):
            return Del(self.assertion())
        if self.eat("consult"):
            return Consult(self.expect_ident("query identifier"))
        if self.eat("if"):
            guard = self.guard()
            self.expect("then")
            then = self._block()
            self.expect("else")
            orelse = self._block()
            return If(guard, then, orelse)
        if self.eat("while"):
            guard = self.guard()
            self.expect("do")
            return While(guard, self._block())
        if self.at("{"):
            return self._block()
        self.fail(f"expected a statement, found {self.peek().text!r}")


# ---------------------------------------------------------------------------
# Single-construct entry points
# ---------------------------------------------------------------------------

def _parse_whole(text: str, signature: Signature | None, method: str):
    parser = Parser(text, signature)
    out = getattr(parser, method)()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input: {tok.text!r}", tok.line, tok.col)
    return out


def parse_concept(text: str, sig: Signature) -> Concept:
    """Parse a concept expression, checking names against the signature."""
    return _parse_whole(text, sig, "concept")


def parse_assertion(text: str, sig: Signature | None = None) -> Assertion:
    return _parse_whole(text, sig, "assertion")


def parse_guard(text: str, sig: Signature | None = None) -> GuardExpr:
    return _parse_whole(text, sig, "guard")


def parse_program(text: str, sig: Signature | None = None) -> Program:
    return _parse_whole(text, sig, "program")


# ---------------------------------------------------------------------------
# KB documents
# ---------------------------------------------------------------------------

@dataclass
class KBDocument:
    signature: Signature
    objects: dict[str, TapoObject]
    restrictions: dict[tuple[str, str], Restriction] = field(default_factory=dict)

    def tapo_objects(self) -> list[TapoObject]:
        return [self.objects[ctx] for ctx in sorted(self.objects)]


class _KBParser(Parser):
    def __init__(self, text: str):
        super().__init__(text)
        self.concepts: set[str] = set()
        self.roles: set[str] = set()
        self.individuals: set[str] = set()
        self.contexts: list[str] = []
        self.refinements: set[tuple[str, str]] = set()
        self.tbox: list[TBoxAxiom] = []
        self.abox: list[Assertion] = []
        self.programs: dict[tuple[str, str], Program] = {}  # (name, context)
        self.frames: dict[tuple[str, str], obx.OracleFrame] = {}
        self.restrictions: dict[tuple[str, str], Restriction] = {}

    def _rebuild_signature(self) -> None:
        self.signature = Signature(
            frozenset(self.concepts), frozenset(self.roles),
            frozenset(self.individuals),
            ContextPoset(frozenset(self.contexts), frozenset(self.refinements)))

    def document(self) -> KBDocument:
        self._rebuild_signature()
        while self.peek().kind != "eof":
            if not self.try_section():
                self.fail(f"expected a section, found {self.peek().text!r}")
        return self._finish()

    def try_section(self) -> bool:
        if self.eat("signature"):
            self._signature_block()
        elif self.eat("context"):
            self._context_decl()
        elif self.eat("tbox"):
            self._tbox_block()
        elif self.eat("abox"):
            self._abox_block()
        elif self.eat("pbox"):
            self._pbox_block()
        elif self.eat("obox"):
            self._obox_block()
        elif self.eat("restriction"):
            self._restriction_block()
        else:
            return False
        return True

    def _declare(self, pool: set[str], name: str, kind: str, tok: Token) -> None:
        check_ident(name, kind)
        for other, what in ((self.concepts, "concept"), (self.roles, "role"),
                            (self.individuals, "individual")):
            if name in other and other is not pool:
                raise ParseError(f"{kind} {name!r} already declared as a {what} name",
                                 tok.line, tok.col)
        if name in pool:
            raise ParseError(f"duplicate declaration of {kind} {name!r}",
                             tok.line, tok.col)
        pool.add(name)

    def _signature_block(self) -> None:
        self.expect("{")
        while not self.eat("}"):
            if self.eat("concepts"):
                pool, kind = self.concepts, "concept name"
            elif self.eat("roles"):
                pool, kind = self.roles, "role name"
            elif self.eat("individuals"):
                pool, kind = self.individuals, "individual name"
            else:
                self.fail("expected 'concepts', 'roles', or 'individuals'")
            tok = self.peek()
            for name in self.ident_list():
                self._declare(pool, name, kind, tok)
        self._rebuild_signature()

    def _context_decl(self) -> None:
        tok = self.peek()
        name = self.expect_ident("context name")
        check_ident(name, "context name")
        if name in self.contexts:
            raise ParseError(f"duplicate declaration of context {name!r}",
                             tok.line, tok.col)
        self.contexts.append(name)
        if self.eat("refines"):
            for coarser in self.ident_list():
                if coarser not in self.contexts:
                    raise ParseError(f"unknown context: {coarser!r}", tok.line, tok.col)
                self.refinements.add((name, coarser))
        self._rebuild_signature()
        self.signature.contexts.validate()

    def _tbox_block(self) -> None:
        self.expect("{")
        while not self.eat("}"):
            self.tbox.append(self.tbox_axiom())

    def _abox_block(self) -> None:
        self.expect("{")
        while not self.eat("}"):
            self.abox.append(self.assertion())

    def _pbox_block(self) -> None:
        self.expect("{")
        while not self.eat("}"):
            self.expect("program")
            tok = self.peek()
            name = self.expect_ident("program name")
            self.expect("@")
            ctx_tok = self.peek()
            ctx = self.expect_ident("context")
            self._check_context(ctx, ctx_tok)
            if (name, ctx) in self.programs:
                raise ParseError(f"duplicate program {name!r} at {ctx}",
                                 tok.line, tok.col)
            self.expect("{")
            if self.eat("}"):
                body: Program = Skip()
            else:
                body = self.program()
                self.expect("}")
            embedded = program_context(body)
            if embedded is not None and embedded != ctx:
                raise ParseError(
                    f"program {name!r} declared @ {ctx} but references @ {embedded}",
                    tok.line, tok.col)
            self.programs[(name, ctx)] = body

    def _obox_block(self) -> None:
        self.expect("{")
        while not self.eat("}"):
            self.expect("frame")
            tok = self.peek()
            name = self.expect_ident("frame name")
            self.expect("@")
            ctx_tok = self.peek()
            ctx = self.expect_ident("context")
            self._check_context(ctx, ctx_tok)
            if (name, ctx) in self.frames:
                raise ParseError(f"duplicate frame {name!r} at {ctx}",
                                 tok.line, tok.col)
            self.frames[(name, ctx)] = self._frame_body(name, ctx)

    def _frame_body(self, name: str, ctx: str) -> obx.OracleFrame:
        self.expect("{")
        levels: set[str] = set()
        order: set[tuple[str, str]] = set()
        threshold: str | None = None
        queries: dict[str, str] = {}
        answers: dict[str, obx.Response] = {}
        rules: list[obx.PolicyRule] = []
        default: str | None = None
        while not self.eat("}"):
            if self.eat("levels"):
                levels.update(self.ident_list())
            elif self.eat("order"):
                lo = self.expect_ident("trust level")
                while self.eat("<"):
                    hi = self.expect_ident("trust level")
                    order.add((lo, hi))
                    lo = hi
            elif self.eat("threshold"):
                threshold = self.expect_ident("trust level")
            elif self.eat("query"):
                qid = self.expect_ident("query identifier")
                queries[qid] = self.expect_string()
            elif self.eat("response"):
                rid = self.expect_ident("response identifier")
                self.expect("answers")
                qtok = self.peek()
                qid = self.expect_ident("query identifier")
                if qid not in queries:
                    raise ParseError(f"response answers undeclared query {qid!r}",
                                     qtok.line, qtok.col)
                if qid in answers:
                    raise ParseError(f"query {qid!r} answered twice", qtok.line, qtok.col)
                self.expect("trust")
                trust = self.expect_ident("trust level")
                answers[qid] = self._response_body(rid, trust)
            elif self.eat("policy"):
                rules, default = self._policy_body()
            else:
                self.fail(f"unexpected frame item {self.peek().text!r}")
        if threshold is None:
            self.fail(f"frame {name!r} declares no threshold")
        if default is None:
            self.fail(f"frame {name!r} declares no policy default")
        frame = obx.OracleFrame(
            name, ctx, queries, answers,
            obx.TrustLattice(frozenset(levels), frozenset(order), threshold),
            obx.ValidationPolicy(tuple(rules), default))
        try:
            frame.validate()
        except obx.OracleError as err:
            self.fail(str(err))
        return frame

    def _response_body(self, rid: str, trust: str) -> obx.Response:
        self.expect("{")
        payload: list[Assertion] = []
        certs: list[obx.Certificate] = []
        while not self.eat("}"):
            if self.eat("import"):
                payload.append(self.assertion())
            elif self.eat("cert"):
                cid = self.expect_ident("certificate id")
                self.expect("kind")
                kind = self.expect_ident("certificate kind")
                attrs = []
                while self.peek().kind == "ident" and self.peek(1).text == "=":
                    key = self.expect_ident()
                    self.expect("=")
                    attrs.append((key, self.expect_string()))
                certs.append(obx.Certificate(cid, kind, tuple(attrs)))
            else:
                self.fail(f"unexpected response item {self.peek().text!r}")
        return obx.Response(rid, frozenset(payload), trust, frozenset(certs))

    def _policy_body(self) -> tuple[list[obx.PolicyRule], str]:
        self.expect("{")
        rules: list[obx.PolicyRule] = []
        default: str | None = None
        while not self.eat("}"):
            if self.eat("default"):
                default = self._verdict()
                continue
            verdict = self._verdict()
            self.expect("if")
            self.expect("trust")
            self.expect(">=")
            floor = self.expect_ident("trust level")
            kinds: frozenset[str] = frozenset()
            if self.eat("with"):
                kinds = frozenset(self.ident_list())
            rules.append(obx.PolicyRule(verdict, floor, kinds))
        if default is None:
            self.fail("policy block has no default verdict")
        return rules, default

    def _verdict(self) -> str:
        tok = self.peek()
        word = self.expect_ident("verdict")
        if word not in obx.VERDICTS:
            raise ParseError(f"bad verdict {word!r}", tok.line, tok.col)
        return word

    def _restriction_block(self) -> None:
        tok = self.peek()
        source = self.expect_ident("context")
        self._check_context(source, tok)
        self.expect("->")
        ttok = self.peek()
        target = self.expect_ident("context")
        self._check_context(target, ttok)
        if not self.signature.contexts.leq(target, source):
            raise ParseError(f"restriction {source} -> {target} without "
                             f"{target} <= {source}", tok.line, tok.col)
        if (source, target) in self.restrictions:
            raise ParseError(f"duplicate restriction {source} -> {target}",
                             tok.line, tok.col)
        hidden_inds: set[str] = set()
        hidden_concepts: set[str] = set()
        hidden_roles: set[str] = set()
        renames: list[tuple[str, str]] = []
        self.expect("{")
        while not self.eat("}"):
            if self.eat("hide"):
                if self.at("concept"):
                    self.next()
                    hidden_concepts.update(self.ident_list())
                elif self.at("role"):
                    self.next()
                    hidden_roles.update(self.ident_list())
                else:
                    hidden_inds.update(self.ident_list())
            elif self.eat("rename"):
                a = self.expect_ident("individual name")
                self.expect("->")
                b = self.expect_ident("individual name")
                renames.append((a, b))
            else:
                self.fail(f"unexpected restriction item {self.peek().text!r}")
        restriction = Restriction(source, target, frozenset(hidden_inds),
                                  frozenset(hidden_concepts), frozenset(hidden_roles),
                                  tuple(renames))
        try:
            restriction.validate(self.signature)
        except TapoError as err:
            raise ParseError(str(err), tok.line, tok.col)
        self.restrictions[(source, target)] = restriction

    def _finish(self) -> KBDocument:
        self._rebuild_signature()
        self.signature.validate()
        tbox = tuple(self.tbox)
        objects: dict[str, TapoObject] = {}
        for ctx in self.contexts:
            abox = frozenset(a for a in self.abox if a.context == ctx)
            state = KnowledgeState(tbox, abox, ctx)
            state.validate()
            objects[ctx] = TapoObject(state, {}, {})
        for a in self.abox:
            if a.context not in objects:
                raise UnknownContextError(a.context)
        for (name, ctx), body in self.programs.items():
            objects[ctx].pbox[name] = body
        for (name, ctx), frame in self.frames.items():
            objects[ctx].obox[name] = frame
        return KBDocument(self.signature, objects, dict(self.restrictions))


KBParser = _KBParser


def parse_kb_document(text: str) -> KBDocument:
    """Parse a full KB document: signature, contexts, layers, restrictions."""
    return _KBParser(text).document()


def parse_kb(text: str) -> tuple[Signature, list[TapoObject]]:
    """Parse a KB document into its signature and one object per context."""
    doc = parse_kb_document(text)
    return doc.signature, doc.tapo_objects()
