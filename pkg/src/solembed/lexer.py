"""Tokenizer for Solidity source text (0.4.x-0.5.x surface syntax).

Comments and whitespace are consumed and never emitted as tokens. Lexing
never raises on malformed input; problems are reported as diagnostics and
the lexer resumes at the next line.
"""

from __future__ import annotations

from dataclasses import dataclass

KEYWORDS = frozenset([
    "pragma", "import", "as", "contract", "interface", "library",
    "is", "function", "constructor", "modifier", "event", "struct", "enum",
    "mapping", "var", "public", "private", "internal", "external", "pure",
    "view", "payable", "constant", "anonymous", "indexed", "storage",
    "memory", "calldata", "if", "else", "for", "while", "do", "break",
    "continue", "return", "returns", "emit", "new", "delete", "throw",
    "using", "assembly", "true", "false", "wei", "szabo", "finney", "ether",
    "seconds", "minutes", "hours", "days", "weeks", "years", "address",
    "bool", "string", "byte", "bytes", "int", "uint", "fixed", "ufixed",
])

# Elementary type keywords also cover sized variants (uint256, bytes32, ...),
# recognized by _is_sized_type below.
ELEMENTARY_TYPES = frozenset([
    "address", "bool", "string", "var", "byte", "bytes", "int", "uint",
    "fixed", "ufixed",
])

_OPERATORS3 = (">>=", "<<=", "**=")
_OPERATORS2 = ("++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=", "-=",
               "*=", "/=", "%=", "|=", "&=", "^=", "<<", ">>", "**", "=>")
_OPERATORS1 = "+-*/%!~<>=&|^?:"
_PUNCTUATORS = "{}()[];,."

ADDRESS_HEX_DIGITS = 40  # Ethereum address width after the 0x prefix


@dataclass(frozen=True)
class LexToken:
    kind: str  # Keyword | Identifier | NumberLiteral | StringLiteral | HexLiteral | AddressLiteral | Punctuator | Operator
    lexeme: str
    line: int  # 1-based
    col: int   # 1-based


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning
    message: str
    line: int
    col: int


def _is_sized_type(word: str) -> bool:
    for base in ("uint", "int", "bytes", "fixed", "ufixed"):
        if word.startswith(base) and len(word) > len(base):
            return word[len(base):].replace("x", "").isdigit()
    return False


def is_type_keyword(word: str) -> bool:
    """True for elementary type names, sized variants included."""
    return word in ELEMENTARY_TYPES or _is_sized_type(word)


def classify_hex(lexeme: str) -> str:
    """AddressLiteral for exactly 40 hex digits after 0x, else HexLiteral."""
    digits = lexeme[2:]
    if len(digits) == ADDRESS_HEX_DIGITS:
        return "AddressLiteral"
    return "HexLiteral"


def tokenize(text: str) -> tuple[list[LexToken], list[Diagnostic]]:
    """Split source text into tokens.

    Returns the token list and any diagnostics. Unterminated strings and
    comments produce an error diagnostic; lexing resumes at the next line
    (or EOF for a run-off block comment).
    """
    tokens: list[LexToken] = []
    diags: list[Diagnostic] = []
    i = 0
    n = len(text)
    line = 1
    col = 1

    def advance(count: int) -> None:
        nonlocal i, line, col
        for _ in range(count):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    def skip_to_next_line() -> None:
        nonlocal i
        while i < n and text[i] != "\n":
            advance(1)
        if i < n:
            advance(1)

    while i < n:
        ch = text[i]

        if ch in " \t\r\n":
            advance(1)
            continue

        if ch == "/" and i + 1 < n and text[i + 1] == "/":
            skip_to_next_line()
            continue

        if ch == "/" and i + 1 < n and text[i + 1] == "*":
            start_line, start_col = line, col
            advance(2)
            closed = False
            while i < n:
                if text[i] == "*" and i + 1 < n and text[i + 1] == "/":
                    advance(2)
                    closed = True
                    break
                advance(1)
            if not closed:
                diags.append(Diagnostic("error", "unterminated block comment",
                                        start_line, start_col))
            continue

        if ch in "\"'":
            quote = ch
            start_line, start_col = line, col
            start = i
            advance(1)
            closed = False
            while i < n and text[i] != "\n":
                if text[i] == "\\" and i + 1 < n:
                    advance(2)
                    continue
                if text[i] == quote:
                    advance(1)
                    closed = True
                    break
                advance(1)
            if closed:
                tokens.append(LexToken("StringLiteral", text[start:i],
                                       start_line, start_col))
            else:
                diags.append(Diagnostic("error", "unterminated string literal",
                                        start_line, start_col))
                skip_to_next_line()
            continue

        if ch == "0" and i + 1 < n and text[i + 1] in "xX":
            start_line, start_col = line, col
            start = i
            advance(2)
            while i < n and (text[i].isdigit() or text[i] in "abcdefABCDEF"):
                advance(1)
            lexeme = text[start:i]
            tokens.append(LexToken(classify_hex(lexeme), lexeme,
                                   start_line, start_col))
            continue

        if ch.isdigit():
            start_line, start_col = line, col
            start = i
            while i < n and text[i].isdigit():
                advance(1)
            if i < n and text[i] == "." and i + 1 < n and text[i + 1].isdigit():
                advance(1)
                while i < n and text[i].isdigit():
                    advance(1)
            if i < n and text[i] in "eE" and i + 1 < n and (
                    text[i + 1].isdigit()
                    or (text[i + 1] in "+-" and i + 2 < n and text[i + 2].isdigit())):
                advance(2)
                while i < n and text[i].isdigit():
                    advance(1)
            tokens.append(LexToken("NumberLiteral", text[start:i],
                                   start_line, start_col))
            continue

        if ch.isalpha() or ch in "_$":
            start_line, start_col = line, col
            start = i
            while i < n and (text[i].isalnum() or text[i] in "_$"):
                advance(1)
            word = text[start:i]
            kind = "Keyword" if (word in KEYWORDS or _is_sized_type(word)) else "Identifier"
            tokens.append(LexToken(kind, word, start_line, start_col))
            continue

        matched = False
        for group in (_OPERATORS3, _OPERATORS2):
            for op in group:
                if text.startswith(op, i):
                    tokens.append(LexToken("Operator", op, line, col))
                    advance(len(op))
                    matched = True
                    break
            if matched:
                break
        if matched:
            continue

        if ch in _OPERATORS1:
            tokens.append(LexToken("Operator", ch, line, col))
            advance(1)
            continue

        if ch in _PUNCTUATORS:
            tokens.append(LexToken("Punctuator", ch, line, col))
            advance(1)
            continue

        diags.append(Diagnostic("error", f"unexpected character {ch!r}", line, col))
        advance(1)

    return tokens, diags
