"""Line-level Java lexer.

Produces tokens with a coarse syntactic kind (identifier, keyword, operator,
separator, literal classes, annotation). Longest-match lexing over a single
source line; comments and whitespace are discarded; string and character
literals are kept as single tokens including their quotes.

The lexer is deliberately a *lexer only*: generic angle brackets come out as
operators and no parser-level disambiguation is attempted, since downstream
consumers only need token text and kind sequences.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class TokenKind(enum.Enum):
    KEYWORD = "Keyword"
    IDENTIFIER = "Identifier"
    SEPARATOR = "Separator"
    OPERATOR = "Operator"
    INTEGER_LITERAL = "IntegerLiteral"
    FLOAT_LITERAL = "FloatLiteral"
    STRING_LITERAL = "StringLiteral"
    CHAR_LITERAL = "CharLiteral"
    BOOLEAN_LITERAL = "BooleanLiteral"
    NULL_LITERAL = "NullLiteral"
    ANNOTATION = "Annotation"
    OTHER = "Other"


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("token text must be non-empty")


# Reserved words. true/false/null are literals, not keywords, and get their
# own kinds below.
KEYWORDS = frozenset(
    """
    abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package
    private protected public return short static strictfp super switch
    synchronized this throw throws transient try void volatile while
    """.split()
)

# Multi-character operators first so the scanner can take the longest match.
_OPERATORS = sorted(
    [
        ">>>=", ">>>", ">>=", "<<=", "==", ">=", "<=", "!=", "&&", "||",
        "++", "--", "+=", "-=", "*=", "/=", "&=", "|=", "^=", "%=", "<<",
        ">>", "->", "=", ">", "<", "!", "~", "?", ":", "+", "-", "*", "/",
        "&", "|", "^", "%",
    ],
    key=len,
    reverse=True,
)

_SEPARATORS = sorted(
    ["...", "::", "(", ")", "{", "}", "[", "]", ";", ",", ".", "@"],
    key=len,
    reverse=True,
)

_HEX_DIGITS = set("0123456789abcdefABCDEF_")
_ASCII_DIGITS = set("0123456789")


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch in "_$"


def _is_ident_part(ch: str) -> bool:
    return ch.isalnum() or ch in "_$"


def _scan_quoted(line: str, start: int, quote: str) -> int | None:
    """Return the index one past the closing quote, or None if unterminated."""
    i = start + 1
    n = len(line)
    while i < n:
        ch = line[i]
        if ch == "\\" and i + 1 < n:
            i += 2
            continue
        if ch == quote:
            return i + 1
        i += 1
    return None


def _scan_digits(line: str, i: int, allowed: str = "0123456789_") -> int:
    n = len(line)
    while i < n and line[i] in allowed:
        i += 1
    return i


def _scan_number(line: str, start: int) -> tuple[int, TokenKind]:
    """Scan an integer or floating-point literal beginning at ``start``.

    ``start`` points either at a digit or at a '.' that is followed by a
    digit. Hexadecimal floats are not recognized (they lex as a hex integer
    followed by separate tokens), matching their rarity in real code.
    """
    n = len(line)
    i = start

    if line[i] == ".":
        i = _scan_digits(line, i + 1)
        i = _scan_exponent_and_suffix(line, i)
        return i, TokenKind.FLOAT_LITERAL

    if line[i] == "0" and i + 1 < n and line[i + 1] in "xX" and i + 2 < n and line[i + 2] in _HEX_DIGITS:
        i = _scan_digits(line, i + 2, "0123456789abcdefABCDEF_")
        if i < n and line[i] in "lL":
            i += 1
        return i, TokenKind.INTEGER_LITERAL

    if line[i] == "0" and i + 1 < n and line[i + 1] in "bB" and i + 2 < n and line[i + 2] in "01_":
        i = _scan_digits(line, i + 2, "01_")
        if i < n and line[i] in "lL":
            i += 1
        return i, TokenKind.INTEGER_LITERAL

    i = _scan_digits(line, i)
    if i < n and line[i] == ".":
        i = _scan_digits(line, i + 1)
        i = _scan_exponent_and_suffix(line, i)
        return i, TokenKind.FLOAT_LITERAL
    if i < n and line[i] in "eE" and _has_exponent(line, i):
        i = _scan_exponent_and_suffix(line, i)
        return i, TokenKind.FLOAT_LITERAL
    if i < n and line[i] in "fFdD":
        return i + 1, TokenKind.FLOAT_LITERAL
    if i < n and line[i] in "lL":
        return i + 1, TokenKind.INTEGER_LITERAL
    return i, TokenKind.INTEGER_LITERAL


def _has_exponent(line: str, i: int) -> bool:
    n = len(line)
    if i >= n or line[i] not in "eE":
        return False
    j = i + 1
    if j < n and line[j] in "+-":
        j += 1
    return j < n and line[j] in _ASCII_DIGITS


def _scan_exponent_and_suffix(line: str, i: int) -> int:
    n = len(line)
    if _has_exponent(line, i):
        i += 1
        if i < n and line[i] in "+-":
            i += 1
        i = _scan_digits(line, i)
    if i < n and line[i] in "fFdD":
        i += 1
    return i


def tokenize(line: str) -> list[Token]:
    """Lex one source line into tokens; never raises on malformed input.

    Unterminated string/char literals swallow the rest of the line as a
    single Other token. An unterminated block comment discards the rest of
    the line (the comment continues past it).
    """
    tokens: list[Token] = []
    i = 0
    n = len(line)
    while i < n:
        ch = line[i]

        if ch.isspace():
            i += 1
            continue

        if ch == "/" and i + 1 < n and line[i + 1] == "/":
            break
        if ch == "/" and i + 1 < n and line[i + 1] == "*":
            end = line.find("*/", i + 2)
            if end == -1:
                break
            i = end + 2
            continue

        if ch == '"' or ch == "'":
            end = _scan_quoted(line, i, ch)
            if end is None:
                tokens.append(Token(line[i:], TokenKind.OTHER))
                break
            kind = TokenKind.STRING_LITERAL if ch == '"' else TokenKind.CHAR_LITERAL
            tokens.append(Token(line[i:end], kind))
            i = end
            continue

        if ch in _ASCII_DIGITS or (ch == "." and i + 1 < n and line[i + 1] in _ASCII_DIGITS):
            end, kind = _scan_number(line, i)
            tokens.append(Token(line[i:end], kind))
            i = end
            continue

        if _is_ident_start(ch):
            j = i + 1
            while j < n and _is_ident_part(line[j]):
                j += 1
            word = line[i:j]
            if word in KEYWORDS:
                kind = TokenKind.KEYWORD
            elif word in ("true", "false"):
                kind = TokenKind.BOOLEAN_LITERAL
            elif word == "null":
                kind = TokenKind.NULL_LITERAL
            else:
                kind = TokenKind.IDENTIFIER
            tokens.append(Token(word, kind))
            i = j
            continue

        if ch == "@" and i + 1 < n and _is_ident_start(line[i + 1]):
            j = i + 2
            while j < n and _is_ident_part(line[j]):
                j += 1
            tokens.append(Token(line[i:j], TokenKind.ANNOTATION))
            i = j
            continue

        matched = False
        for sep in _SEPARATORS:
            if line.startswith(sep, i):
                tokens.append(Token(sep, TokenKind.SEPARATOR))
                i += len(sep)
                matched = True
                break
        if matched:
            continue
        for op in _OPERATORS:
            if line.startswith(op, i):
                tokens.append(Token(op, TokenKind.OPERATOR))
                i += len(op)
                matched = True
                break
        if matched:
            continue

        tokens.append(Token(ch, TokenKind.OTHER))
        i += 1

    return tokens


def token_texts(line: str) -> list[str]:
    return [t.text for t in tokenize(line)]


def type_sequence(tokens: list[Token]) -> list[TokenKind]:
    return [t.kind for t in tokens]


def syntax_unchanged(bug_tokens: list[Token], patch_tokens: list[Token]) -> bool:
    """True iff both token lists have the same syntactic kind sequence."""
    return type_sequence(bug_tokens) == type_sequence(patch_tokens)
