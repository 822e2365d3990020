"""Fault-tolerant recursive-descent parser for Solidity 0.4.x-0.5.x.

The parser always returns a root node, even for garbage input: failures
surface as diagnostics plus UnknownStatement nodes that cover the skipped
region. Constructs outside the supported grammar (inline assembly,
do/while, using-for, ...) are consumed into UnknownStatement leaves so the
rest of the file still parses.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .lexer import Diagnostic, LexToken, is_type_keyword, tokenize

NODE_KINDS = frozenset([
    "SourceUnitNode", "PragmaDirective", "ImportDirective",
    "ContractDefinition", "FunctionDefinition", "ModifierDefinition",
    "StateVariableDeclaration", "StructDefinition", "EnumDefinition",
    "EventDefinition", "Block",
    "IfStatement", "ForStatement", "WhileStatement", "ReturnStatement",
    "ExpressionStatement", "VariableDeclarationStatement", "EmitStatement",
    "Assignment", "BinaryOp", "UnaryOp", "FunctionCall", "MemberAccess",
    "IndexAccess", "IdentifierExpr", "LiteralExpr", "TupleExpr",
    "UnknownStatement",
])

# Node kinds that become Statement-granularity fragments.
STATEMENT_KINDS = frozenset([
    "IfStatement", "ForStatement", "WhileStatement", "ReturnStatement",
    "ExpressionStatement", "VariableDeclarationStatement", "EmitStatement",
])

_BIN_PRECEDENCE = {
    "||": 2, "&&": 3,
    "==": 4, "!=": 4,
    "<": 5, ">": 5, "<=": 5, ">=": 5,
    "|": 6, "^": 7, "&": 8,
    "<<": 9, ">>": 9,
    "+": 10, "-": 10,
    "*": 11, "/": 11, "%": 11,
    "**": 12,
}

_ASSIGN_OPS = frozenset(["=", "+=", "-=", "*=", "/=", "%=", "|=", "&=",
                         "^=", "<<=", ">>=", "**="])
_UNARY_PREFIX = frozenset(["!", "~", "-", "+", "++", "--"])
_UNIT_KEYWORDS = frozenset(["wei", "szabo", "finney", "ether", "seconds",
                            "minutes", "hours", "days", "weeks", "years"])
_VISIBILITY = frozenset(["public", "private", "internal", "external"])
_MUTABILITY = frozenset(["pure", "view", "payable", "constant"])
_LOCATIONS = frozenset(["storage", "memory", "calldata", "payable"])


@dataclass(frozen=True)
class SourceUnit:
    """One Solidity source file as submitted to the pipeline."""

    id: str
    path: str
    text: str
    content_hash: str

    @classmethod
    def from_text(cls, text: str, path: str = "<memory>", id: str | None = None) -> "SourceUnit":
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
        return cls(id=id if id is not None else digest[:16], path=path,
                   text=text, content_hash=digest)


@dataclass(frozen=True)
class AstNode:
    """A node of the parse tree.

    kind is always drawn from NODE_KINDS. leaf_lexeme is set only on leaf
    nodes; operator carries the operator/keyword of expression nodes that
    are not leaves (BinaryOp, UnaryOp, Assignment, ContractDefinition).
    Spans are 1-based inclusive (start_line, start_col, end_line, end_col).
    """

    kind: str
    span: tuple[int, int, int, int]
    children: tuple["AstNode", ...] = ()
    leaf_lexeme: str | None = None
    operator: str | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


def walk(node: AstNode):
    """Pre-order traversal."""
    yield node
    for child in node.children:
        yield from walk(child)


def node_name(node: AstNode) -> str | None:
    """Declared name of a definition node (first identifier child)."""
    for child in node.children:
        if child.kind == "IdentifierExpr":
            return child.leaf_lexeme
        break
    return None


def span_contains(outer: tuple[int, int, int, int],
                  inner: tuple[int, int, int, int]) -> bool:
    return ((outer[0], outer[1]) <= (inner[0], inner[1])
            and (inner[2], inner[3]) <= (outer[2], outer[3]))


class _ParseError(Exception):
    def __init__(self, message: str, token: LexToken | None):
        super().__init__(message)
        self.message = message
        self.token = token


class _Parser:
    def __init__(self, tokens: list[LexToken], diags: list[Diagnostic]):
        self.tokens = tokens
        self.pos = 0
        self.diags = diags

    # --- token helpers -------------------------------------------------

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self, offset: int = 0) -> LexToken | None:
        idx = self.pos + offset
        return self.tokens[idx] if idx < len(self.tokens) else None

    def advance(self) -> LexToken:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def check(self, lexeme: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.lexeme == lexeme

    def check_kind(self, kind: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == kind

    def match(self, lexeme: str) -> LexToken | None:
        if self.check(lexeme):
            return self.advance()
        return None

    def expect(self, lexeme: str) -> LexToken:
        tok = self.peek()
        if tok is None or tok.lexeme != lexeme:
            raise _ParseError(f"expected {lexeme!r}", tok)
        return self.advance()

    def expect_identifier(self) -> LexToken:
        tok = self.peek()
        if tok is None or tok.kind != "Identifier":
            raise _ParseError("expected identifier", tok)
        return self.advance()

    def error_here(self, err: _ParseError) -> None:
        if err.token is not None:
            line, col = err.token.line, err.token.col
            what = f"{err.message}, found {err.token.lexeme!r}"
        elif self.tokens:
            last = self.tokens[-1]
            line, col = last.line, last.col + max(len(last.lexeme) - 1, 0)
            what = f"{err.message}, found end of input"
        else:
            line, col = 1, 1
            what = err.message
        self.diags.append(Diagnostic("error", what, line, col))

    # --- node helpers ---------------------------------------------------

    def _span(self, start_idx: int, end_idx: int) -> tuple[int, int, int, int]:
        if not self.tokens:
            return (1, 1, 1, 1)
        start_idx = min(max(start_idx, 0), len(self.tokens) - 1)
        end_idx = min(max(end_idx, start_idx), len(self.tokens) - 1)
        first = self.tokens[start_idx]
        last = self.tokens[end_idx]
        return (first.line, first.col,
                last.line, last.col + max(len(last.lexeme) - 1, 0))

    def node(self, kind: str, start_idx: int, children: list[AstNode] = (),
             leaf_lexeme: str | None = None, operator: str | None = None) -> AstNode:
        return AstNode(kind=kind, span=self._span(start_idx, self.pos - 1),
                       children=tuple(children), leaf_lexeme=leaf_lexeme,
                       operator=operator)

    def leaf_from_token(self, kind: str, tok: LexToken) -> AstNode:
        span = (tok.line, tok.col, tok.line, tok.col + max(len(tok.lexeme) - 1, 0))
        return AstNode(kind=kind, span=span, leaf_lexeme=tok.lexeme)

    # --- recovery --------------------------------------------------------

    def recover_statement(self, start_idx: int) -> AstNode:
        """Skip to the next ';' (inclusive) or balanced '}' and produce an
        UnknownStatement covering the skipped region."""
        depth = 0
        while not self.at_end():
            tok = self.peek()
            if tok.lexeme == "{":
                depth += 1
                self.advance()
            elif tok.lexeme == "}":
                if depth == 0:
                    break
                depth -= 1
                self.advance()
                if depth == 0:
                    break
            elif tok.lexeme == ";" and depth == 0:
                self.advance()
                break
            else:
                self.advance()
        if self.pos == start_idx and not self.at_end() and not self.check("}"):
            self.advance()  # guarantee progress
        return self.node("UnknownStatement", start_idx)

    def recover_top_level(self, start_idx: int) -> AstNode:
        sync = {"pragma", "import", "contract", "interface", "library"}
        if not self.at_end():
            self.advance()
        depth = 0
        while not self.at_end():
            tok = self.peek()
            if tok.lexeme == "{":
                depth += 1
            elif tok.lexeme == "}":
                depth = max(depth - 1, 0)
            elif depth == 0 and tok.lexeme in sync:
                break
            self.advance()
        return self.node("UnknownStatement", start_idx)

    # --- source unit ------------------------------------------------------

    def parse_source_unit(self) -> AstNode:
        children: list[AstNode] = []
        while not self.at_end():
            start_idx = self.pos
            try:
                tok = self.peek()
                if tok.lexeme == "pragma":
                    children.append(self.parse_directive("PragmaDirective"))
                elif tok.lexeme == "import":
                    children.append(self.parse_directive("ImportDirective"))
                elif tok.lexeme in ("contract", "interface", "library"):
                    children.append(self.parse_contract())
                else:
                    raise _ParseError("expected contract, interface, library, "
                                      "pragma or import", tok)
            except _ParseError as err:
                self.error_here(err)
                children.append(self.recover_top_level(start_idx))
        if self.tokens:
            span = self._span(0, len(self.tokens) - 1)
        else:
            span = (1, 1, 1, 1)
        return AstNode(kind="SourceUnitNode", span=span, children=tuple(children))

    def parse_directive(self, kind: str) -> AstNode:
        start_idx = self.pos
        self.advance()  # pragma | import
        parts = []
        while not self.at_end() and not self.check(";"):
            parts.append(self.advance().lexeme)
        if self.match(";") is None:
            raise _ParseError("expected ';' after directive", self.peek())
        # joined content goes in the operator slot, not leaf_lexeme: leaf
        # lexemes always correspond 1:1 to source tokens
        return self.node(kind, start_idx, operator=" ".join(parts))

    # --- contracts ---------------------------------------------------------

    def parse_contract(self) -> AstNode:
        start_idx = self.pos
        keyword = self.advance().lexeme  # contract | interface | library
        name_tok = self.expect_identifier()
        children = [self.leaf_from_token("IdentifierExpr", name_tok)]
        if self.match("is"):
            while True:
                base_start = self.pos
                base_tok = self.expect_identifier()
                base: AstNode = self.leaf_from_token("IdentifierExpr", base_tok)
                if self.check("("):
                    args = self.parse_call_args()
                    base = self.node("FunctionCall", base_start, [base] + args)
                children.append(base)
                if self.match(",") is None:
                    break
        self.expect("{")
        while not self.at_end() and not self.check("}"):
            member_start = self.pos
            try:
                children.append(self.parse_contract_member())
            except _ParseError as err:
                self.error_here(err)
                children.append(self.recover_statement(member_start))
        if self.match("}") is None:
            raise _ParseError("expected '}' to close contract", self.peek())
        return self.node("ContractDefinition", start_idx, children,
                         operator=keyword)

    def parse_contract_member(self) -> AstNode:
        tok = self.peek()
        if tok.lexeme in ("function", "constructor"):
            return self.parse_function()
        if tok.lexeme == "modifier":
            return self.parse_modifier()
        if tok.lexeme == "event":
            return self.parse_event()
        if tok.lexeme == "struct":
            return self.parse_struct()
        if tok.lexeme == "enum":
            return self.parse_enum()
        if tok.lexeme == "using":
            # using-for directive: outside the node catalog
            start_idx = self.pos
            while not self.at_end() and not self.check(";"):
                self.advance()
            self.match(";")
            return self.node("UnknownStatement", start_idx)
        return self.parse_state_variable()

    def parse_function(self) -> AstNode:
        start_idx = self.pos
        keyword = self.advance()  # function | constructor
        children: list[AstNode] = []
        if keyword.lexeme == "constructor":
            children.append(self.leaf_from_token("IdentifierExpr", keyword))
        elif self.check_kind("Identifier"):
            children.append(self.leaf_from_token("IdentifierExpr", self.advance()))
        children.append(self.parse_parameter_list())
        children.extend(self.parse_function_header_items())
        if self.check("{"):
            children.append(self.parse_block())
        else:
            self.expect(";")
        return self.node("FunctionDefinition", start_idx, children)

    def parse_function_header_items(self) -> list[AstNode]:
        """Visibility, mutability, modifier invocations and returns clause."""
        items: list[AstNode] = []
        while not self.at_end():
            tok = self.peek()
            if tok.lexeme in _VISIBILITY or tok.lexeme in _MUTABILITY:
                items.append(self.leaf_from_token("IdentifierExpr", self.advance()))
            elif tok.lexeme == "returns":
                items.append(self.leaf_from_token("IdentifierExpr", self.advance()))
                items.append(self.parse_parameter_list())
            elif tok.kind == "Identifier":
                inv_start = self.pos
                ident = self.leaf_from_token("IdentifierExpr", self.advance())
                if self.check("("):
                    args = self.parse_call_args()
                    items.append(self.node("FunctionCall", inv_start, [ident] + args))
                else:
                    items.append(ident)
            else:
                break
        return items

    def parse_modifier(self) -> AstNode:
        start_idx = self.pos
        self.advance()  # modifier
        name_tok = self.expect_identifier()
        children = [self.leaf_from_token("IdentifierExpr", name_tok)]
        if self.check("("):
            children.append(self.parse_parameter_list())
        children.append(self.parse_block())
        return self.node("ModifierDefinition", start_idx, children)

    def parse_event(self) -> AstNode:
        start_idx = self.pos
        self.advance()  # event
        name_tok = self.expect_identifier()
        children = [self.leaf_from_token("IdentifierExpr", name_tok),
                    self.parse_parameter_list()]
        if self.check("anonymous"):
            children.append(self.leaf_from_token("IdentifierExpr", self.advance()))
        self.expect(";")
        return self.node("EventDefinition", start_idx, children)

    def parse_struct(self) -> AstNode:
        start_idx = self.pos
        self.advance()  # struct
        name_tok = self.expect_identifier()
        children = [self.leaf_from_token("IdentifierExpr", name_tok)]
        self.expect("{")
        while not self.at_end() and not self.check("}"):
            member_start = self.pos
            try:
                type_node = self.parse_type()
                members = [type_node]
                while self.peek() is not None and self.peek().lexeme in _LOCATIONS:
                    members.append(self.leaf_from_token("IdentifierExpr", self.advance()))
                members.append(self.leaf_from_token("IdentifierExpr",
                                                    self.expect_identifier()))
                self.expect(";")
                children.append(self.node("StateVariableDeclaration",
                                          member_start, members))
            except _ParseError as err:
                self.error_here(err)
                children.append(self.recover_statement(member_start))
        if self.match("}") is None:
            raise _ParseError("expected '}' to close struct", self.peek())
        return self.node("StructDefinition", start_idx, children)

    def parse_enum(self) -> AstNode:
        start_idx = self.pos
        self.advance()  # enum
        name_tok = self.expect_identifier()
        children = [self.leaf_from_token("IdentifierExpr", name_tok)]
        self.expect("{")
        while not self.at_end() and not self.check("}"):
            children.append(self.leaf_from_token("IdentifierExpr",
                                                 self.expect_identifier()))
            if self.match(",") is None:
                break
        self.expect("}")
        return self.node("EnumDefinition", start_idx, children)

    def parse_state_variable(self) -> AstNode:
        start_idx = self.pos
        children = [self.parse_type()]
        while not self.at_end():
            tok = self.peek()
            if tok.lexeme in _VISIBILITY or tok.lexeme == "constant" or tok.lexeme in _LOCATIONS:
                children.append(self.leaf_from_token("IdentifierExpr", self.advance()))
            else:
                break
        children.append(self.leaf_from_token("IdentifierExpr", self.expect_identifier()))
        if self.match("="):
            children.append(self.parse_expression())
        self.expect(";")
        return self.node("StateVariableDeclaration", start_idx, children)

    def parse_parameter_list(self) -> AstNode:
        start_idx = self.pos
        self.expect("(")
        params: list[AstNode] = []
        while not self.at_end() and not self.check(")"):
            param_start = self.pos
            items = [self.parse_type()]
            while not self.at_end():
                tok = self.peek()
                if tok.lexeme in _LOCATIONS or tok.lexeme == "indexed":
                    items.append(self.leaf_from_token("IdentifierExpr", self.advance()))
                elif tok.kind == "Identifier":
                    items.append(self.leaf_from_token("IdentifierExpr", self.advance()))
                    break
                else:
                    break
            params.append(self.node("TupleExpr", param_start, items))
            if self.match(",") is None:
                break
        self.expect(")")
        return self.node("TupleExpr", start_idx, params)

    # --- types -------------------------------------------------------------

    def parse_type(self) -> AstNode:
        tok = self.peek()
        if tok is None:
            raise _ParseError("expected type", tok)
        start_idx = self.pos
        if tok.lexeme == "mapping":
            base = self._parse_mapping_type()
        elif tok.lexeme == "function":
            base = self._parse_function_type()
        elif is_type_keyword(tok.lexeme) or tok.lexeme == "var":
            base = self.leaf_from_token("IdentifierExpr", self.advance())
        elif tok.kind == "Identifier":
            base = self.leaf_from_token("IdentifierExpr", self.advance())
            while self.check(".") and self.peek(1) is not None \
                    and self.peek(1).kind == "Identifier":
                self.advance()
                member = self.leaf_from_token("IdentifierExpr", self.advance())
                base = self.node("MemberAccess", start_idx, [base, member])
        else:
            raise _ParseError("expected type", tok)
        while self.check("["):
            self.advance()
            if self.check("]"):
                self.advance()
                base = self.node("IndexAccess", start_idx, [base])
            else:
                size = self.parse_expression()
                self.expect("]")
                base = self.node("IndexAccess", start_idx, [base, size])
        return base

    def _parse_mapping_type(self) -> AstNode:
        start_idx = self.pos
        mapping_tok = self.advance()
        callee = self.leaf_from_token("IdentifierExpr", mapping_tok)
        self.expect("(")
        key = self.parse_type()
        self.expect("=>")
        value = self.parse_type()
        self.expect(")")
        return self.node("FunctionCall", start_idx, [callee, key, value])

    def _parse_function_type(self) -> AstNode:
        start_idx = self.pos
        fn_tok = self.advance()
        callee = self.leaf_from_token("IdentifierExpr", fn_tok)
        children = [callee]
        self.expect("(")
        while not self.at_end() and not self.check(")"):
            children.append(self.parse_type())
            if self.match(",") is None:
                break
        self.expect(")")
        while self.peek() is not None and (self.peek().lexeme in _VISIBILITY
                                           or self.peek().lexeme in _MUTABILITY):
            self.advance()
        if self.check("returns"):
            self.advance()
            self.expect("(")
            while not self.at_end() and not self.check(")"):
                children.append(self.parse_type())
                if self.match(",") is None:
                    break
            self.expect(")")
        return self.node("FunctionCall", start_idx, children)

    # --- statements ----------------------------------------------------------

    def parse_block(self) -> AstNode:
        start_idx = self.pos
        self.expect("{")
        children: list[AstNode] = []
        while not self.at_end() and not self.check("}"):
            children.append(self.parse_statement())
        if self.match("}") is None:
            raise _ParseError("expected '}' to close block", self.peek())
        return self.node("Block", start_idx, children)

    def parse_statement(self) -> AstNode:
        start_idx = self.pos
        try:
            return self._parse_statement_inner()
        except _ParseError as err:
            self.error_here(err)
            return self.recover_statement(start_idx)

    def _parse_statement_inner(self) -> AstNode:
        tok = self.peek()
        if tok is None:
            raise _ParseError("expected statement", tok)
        start_idx = self.pos
        lex = tok.lexeme

        if lex == "{":
            return self.parse_block()
        if lex == "if":
            self.advance()
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            then = self.parse_statement()
            children = [cond, then]
            if self.match("else"):
                children.append(self.parse_statement())
            return self.node("IfStatement", start_idx, children)
        if lex == "while":
            self.advance()
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            body = self.parse_statement()
            return self.node("WhileStatement", start_idx, [cond, body])
        if lex == "for":
            return self.parse_for()
        if lex == "return":
            self.advance()
            children = []
            if not self.check(";"):
                children.append(self.parse_expression())
            self.expect(";")
            return self.node("ReturnStatement", start_idx, children)
        if lex == "emit":
            self.advance()
            call = self.parse_expression()
            self.expect(";")
            return self.node("EmitStatement", start_idx, [call])
        if lex in ("throw", "break", "continue"):
            kw = self.advance()
            self.expect(";")
            return self.node("ExpressionStatement", start_idx,
                             [self.leaf_from_token("IdentifierExpr", kw)])
        if lex in ("assembly", "do"):
            # outside the supported grammar; consume as a unit
            raise _ParseError(f"unsupported construct {lex!r}", tok)
        if lex == "var":
            return self.parse_variable_declaration()
        if lex == "(" and self._looks_like_tuple_declaration():
            return self.parse_variable_declaration()
        if lex == "mapping" or is_type_keyword(lex) or tok.kind == "Identifier":
            # could be a declaration or an expression (cast, call, assignment)
            saved = self.pos
            try:
                return self.parse_variable_declaration()
            except _ParseError:
                self.pos = saved
        expr = self.parse_expression()
        self.expect(";")
        return self.node("ExpressionStatement", start_idx, [expr])

    def _looks_like_tuple_declaration(self) -> bool:
        tok = self.peek(1)
        return tok is not None and (is_type_keyword(tok.lexeme)
                                    or tok.lexeme in ("mapping", "var"))

    def parse_for(self) -> AstNode:
        start_idx = self.pos
        self.advance()  # for
        self.expect("(")
        children: list[AstNode] = []
        if not self.check(";"):
            children.append(self._parse_statement_inner())  # init consumes ';'
        else:
            self.advance()
        if not self.check(";"):
            children.append(self.parse_expression())
        self.expect(";")
        if not self.check(")"):
            children.append(self.parse_expression())
        self.expect(")")
        children.append(self.parse_statement())
        return self.node("ForStatement", start_idx, children)

    def parse_variable_declaration(self) -> AstNode:
        start_idx = self.pos
        tok = self.peek()
        children: list[AstNode] = []
        if tok.lexeme == "var" and self.peek(1) is not None and self.peek(1).lexeme == "(":
            children.append(self.leaf_from_token("IdentifierExpr", self.advance()))
            children.append(self._parse_declaration_tuple(typed=False))
        elif tok.lexeme == "(":
            children.append(self._parse_declaration_tuple(typed=True))
        else:
            children.append(self.parse_type())
            while self.peek() is not None and self.peek().lexeme in _LOCATIONS:
                children.append(self.leaf_from_token("IdentifierExpr", self.advance()))
            children.append(self.leaf_from_token("IdentifierExpr",
                                                 self.expect_identifier()))
        if self.match("="):
            children.append(self.parse_expression())
        self.expect(";")
        return self.node("VariableDeclarationStatement", start_idx, children)

    def _parse_declaration_tuple(self, typed: bool) -> AstNode:
        start_idx = self.pos
        self.expect("(")
        components: list[AstNode] = []
        while not self.at_end() and not self.check(")"):
            if self.check(","):
                self.advance()  # empty component
                continue
            comp_start = self.pos
            if typed:
                items = [self.parse_type()]
                while self.peek() is not None and self.peek().lexeme in _LOCATIONS:
                    items.append(self.leaf_from_token("IdentifierExpr", self.advance()))
                items.append(self.leaf_from_token("IdentifierExpr",
                                                  self.expect_identifier()))
                components.append(self.node("TupleExpr", comp_start, items))
            else:
                components.append(self.leaf_from_token("IdentifierExpr",
                                                       self.expect_identifier()))
            if self.match(",") is None:
                break
        self.expect(")")
        return self.node("TupleExpr", start_idx, components)

    # --- expressions -----------------------------------------------------------

    def parse_expression(self, min_prec: int = 0) -> AstNode:
        start_idx = self.pos
        left = self.parse_unary()
        while True:
            tok = self.peek()
            if tok is None or tok.kind != "Operator":
                break
            lex = tok.lexeme
            if lex in _ASSIGN_OPS and min_prec <= 0:
                self.advance()
                right = self.parse_expression(0)
                left = self.node("Assignment", start_idx, [left, right], operator=lex)
                continue
            if lex == "?" and min_prec <= 1:
                self.advance()
                when_true = self.parse_expression(0)
                self.expect(":")
                when_false = self.parse_expression(1)
                branches = AstNode(kind="BinaryOp",
                                   span=(when_true.span[0], when_true.span[1],
                                         when_false.span[2], when_false.span[3]),
                                   children=(when_true, when_false), operator=":")
                left = self.node("BinaryOp", start_idx, [left, branches], operator="?")
                continue
            prec = _BIN_PRECEDENCE.get(lex)
            if prec is None or prec < max(min_prec, 2):
                break
            self.advance()
            next_min = prec if lex == "**" else prec + 1  # ** is right-assoc
            right = self.parse_expression(next_min)
            left = self.node("BinaryOp", start_idx, [left, right], operator=lex)
        return left

    def parse_unary(self) -> AstNode:
        tok = self.peek()
        if tok is None:
            raise _ParseError("expected expression", tok)
        start_idx = self.pos
        if tok.kind == "Operator" and tok.lexeme in _UNARY_PREFIX:
            op = self.advance().lexeme
            operand = self.parse_unary()
            return self.node("UnaryOp", start_idx, [operand], operator=op)
        if tok.lexeme in ("delete", "new"):
            op = self.advance().lexeme
            operand = self.parse_unary()
            return self.node("UnaryOp", start_idx, [operand], operator=op)
        return self.parse_postfix()

    def parse_postfix(self) -> AstNode:
        start_idx = self.pos
        expr = self.parse_primary()
        while not self.at_end():
            tok = self.peek()
            if tok.lexeme == "(":
                args = self.parse_call_args()
                expr = self.node("FunctionCall", start_idx, [expr] + args)
            elif tok.lexeme == ".":
                self.advance()
                member_tok = self.peek()
                if member_tok is None or member_tok.kind not in ("Identifier", "Keyword"):
                    raise _ParseError("expected member name after '.'", member_tok)
                self.advance()
                member = self.leaf_from_token("IdentifierExpr", member_tok)
                expr = self.node("MemberAccess", start_idx, [expr, member])
            elif tok.lexeme == "[":
                self.advance()
                children = [expr]
                if not self.check("]"):
                    children.append(self.parse_expression())
                self.expect("]")
                expr = self.node("IndexAccess", start_idx, children)
            elif tok.kind == "Operator" and tok.lexeme in ("++", "--"):
                op = self.advance().lexeme
                expr = self.node("UnaryOp", start_idx, [expr], operator=op)
            else:
                break
        return expr

    def parse_call_args(self) -> list[AstNode]:
        self.expect("(")
        args: list[AstNode] = []
        if self.check("{"):
            args.append(self._parse_named_args())
        else:
            while not self.at_end() and not self.check(")"):
                args.append(self.parse_expression())
                if self.match(",") is None:
                    break
        self.expect(")")
        return args

    def _parse_named_args(self) -> AstNode:
        start_idx = self.pos
        self.expect("{")
        pairs: list[AstNode] = []
        while not self.at_end() and not self.check("}"):
            pair_start = self.pos
            name = self.leaf_from_token("IdentifierExpr", self.expect_identifier())
            self.expect(":")
            value = self.parse_expression()
            pairs.append(self.node("BinaryOp", pair_start, [name, value], operator=":"))
            if self.match(",") is None:
                break
        self.expect("}")
        return self.node("TupleExpr", start_idx, pairs)

    def parse_primary(self) -> AstNode:
        tok = self.peek()
        if tok is None:
            raise _ParseError("expected expression", tok)
        start_idx = self.pos

        if tok.kind in ("NumberLiteral", "StringLiteral", "HexLiteral",
                        "AddressLiteral"):
            literal = self.leaf_from_token("LiteralExpr", self.advance())
            unit = self.peek()
            if (tok.kind == "NumberLiteral" and unit is not None
                    and unit.lexeme in _UNIT_KEYWORDS):
                self.advance()
                return self.node("UnaryOp", start_idx, [literal],
                                 operator=unit.lexeme)
            return literal
        if tok.lexeme in ("true", "false"):
            return self.leaf_from_token("LiteralExpr", self.advance())
        if tok.lexeme == "mapping":
            return self._parse_mapping_type()
        if is_type_keyword(tok.lexeme):
            return self.leaf_from_token("IdentifierExpr", self.advance())
        if tok.kind == "Identifier":
            return self.leaf_from_token("IdentifierExpr", self.advance())
        if tok.lexeme == "(":
            self.advance()
            components: list[AstNode] = []
            seen_comma = False
            while not self.at_end() and not self.check(")"):
                if self.check(","):
                    self.advance()
                    seen_comma = True
                    continue
                components.append(self.parse_expression())
            self.expect(")")
            if len(components) == 1 and not seen_comma:
                return components[0]
            return self.node("TupleExpr", start_idx, components)
        if tok.lexeme == "[":
            self.advance()
            components = []
            while not self.at_end() and not self.check("]"):
                components.append(self.parse_expression())
                if self.match(",") is None:
                    break
            self.expect("]")
            return self.node("TupleExpr", start_idx, components)
        raise _ParseError("expected expression", tok)


def parse(unit: SourceUnit) -> tuple[AstNode, list[Diagnostic]]:
    """Parse a source unit into (root, diagnostics). Never raises."""
    tokens, diags = tokenize(unit.text)
    parser = _Parser(tokens, diags)
    root = parser.parse_source_unit()
    return root, parser.diags


def parse_text(text: str) -> tuple[AstNode, list[Diagnostic]]:
    return parse(SourceUnit.from_text(text))


def format_ast(root: AstNode) -> str:
    """Indented one-node-per-line dump: kind@line:col [lexeme]."""
    lines: list[str] = []

    def emit(node: AstNode, depth: int) -> None:
        label = f"{'  ' * depth}{node.kind}@{node.span[0]}:{node.span[1]}"
        shown = node.leaf_lexeme if node.leaf_lexeme is not None else node.operator
        if shown is not None:
            label += f" [{shown}]"
        lines.append(label)
        for child in node.children:
            emit(child, depth + 1)

    emit(root, 0)
    return "\n".join(lines)
