"""Tolerant JavaScript tokenizer.

Produces a flat token stream good enough for statement-level extraction and
for comment stripping. It never raises: unterminated strings, comments,
templates and regular expressions are closed at end of input and reported
through ``Lexed.errors``.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field

IDENT = "ident"
KEYWORD = "keyword"
PUNCT = "punct"
STRING = "string"
TEMPLATE = "template"
REGEX = "regex"
NUMBER = "number"
COMMENT = "comment"

KEYWORDS = frozenset(
    """
    break case catch class const continue debugger default delete do else export
    extends finally for function if import in instanceof let new return super
    switch this throw try typeof var void while with yield await async static
    get set of null true false
    """.split()
)

# Keywords after which a "/" starts a regular expression literal.
_REGEX_AFTER_KEYWORDS = frozenset(
    "return typeof instanceof in of new delete void throw case do else yield await".split()
)

_PUNCTUATORS = sorted(
    """
    >>>= ... === !== **= <<= >>= >>> &&= ||= ??=
    => == != <= >= && || ?? ?. ++ -- += -= *= /= %= &= |= ^= ** << >>
    { } ( ) [ ] ; , < > + - * / % & | ^ ! ~ ? : = . @ #
    """.split(),
    key=len,
    reverse=True,
)

_LINE_TERMINATORS = "\n\r\u2028\u2029"


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    start: int  # character offset
    end: int  # exclusive character offset
    line: int  # 1-based
    col: int  # 1-based
    newline_before: bool = False


@dataclass
class Lexed:
    tokens: list[Token] = field(default_factory=list)
    errors: list[tuple[int, int, str]] = field(default_factory=list)
    line_starts: list[int] = field(default_factory=lambda: [0])

    def position(self, offset: int) -> tuple[int, int]:
        """1-based (line, col) of a character offset."""
        line = bisect.bisect_right(self.line_starts, offset)
        return line, offset - self.line_starts[line - 1] + 1


def _is_id_start(ch: str) -> bool:
    return ch.isalpha() or ch in "$_" or ord(ch) > 0x7F and ch.isidentifier()


def _is_id_part(ch: str) -> bool:
    return ch.isalnum() or ch in "$_\u200c\u200d" or ord(ch) > 0x7F and ("a" + ch).isidentifier()


class _Scanner:
    def __init__(self, text: str) -> None:
        self.text = text
        self.n = len(text)
        # offsets of line starts, for offset -> (line, col)
        self.out = Lexed()
        self.line_starts = self.out.line_starts
        i = 0
        while i < self.n:
            ch = text[i]
            if ch == "\r" and i + 1 < self.n and text[i + 1] == "\n":
                i += 1
                self.line_starts.append(i + 1)
            elif ch in _LINE_TERMINATORS:
                self.line_starts.append(i + 1)
            i += 1

    def position(self, offset: int) -> tuple[int, int]:
        return self.out.position(offset)

    def error(self, offset: int, message: str) -> None:
        line, col = self.position(offset)
        self.out.errors.append((line, col, message))

    def skip_string(self, i: int) -> int:
        quote = self.text[i]
        i += 1
        while i < self.n:
            ch = self.text[i]
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                return i + 1
            if ch in "\n\r":
                break
            i += 1
        self.error(i if i < self.n else self.n, "unterminated string literal")
        return min(i, self.n)

    def skip_block_comment(self, i: int) -> int:
        end = self.text.find("*/", i + 2)
        if end < 0:
            self.error(i, "unterminated block comment")
            return self.n
        return end + 2

    def skip_line_comment(self, i: int) -> int:
        while i < self.n and self.text[i] not in _LINE_TERMINATORS:
            i += 1
        return i

    def skip_template(self, i: int) -> int:
        start = i
        i += 1
        while i < self.n:
            ch = self.text[i]
            if ch == "\\":
                i += 2
                continue
            if ch == "`":
                return i + 1
            if ch == "$" and i + 1 < self.n and self.text[i + 1] == "{":
                i = self.skip_substitution(i + 2)
                continue
            i += 1
        self.error(start, "unterminated template literal")
        return self.n

    def skip_substitution(self, i: int) -> int:
        """Skip a ``${ ... }`` body; *i* points just past the ``{``."""
        depth = 1
        prev_sig = "("
        while i < self.n:
            ch = self.text[i]
            if ch in "'\"":
                i = self.skip_string(i)
                prev_sig = "a"
            elif ch == "`":
                i = self.skip_template(i)
                prev_sig = "a"
            elif self.text.startswith("//", i):
                i = self.skip_line_comment(i)
            elif self.text.startswith("/*", i):
                i = self.skip_block_comment(i)
            elif ch == "/" and prev_sig in "(,=:[!&|?{};+-*%<>~^":
                i = self.skip_regex(i)
                prev_sig = "a"
            elif ch == "{":
                depth += 1
                prev_sig = ch
                i += 1
            elif ch == "}":
                depth -= 1
                i += 1
                if depth == 0:
                    return i
                prev_sig = ch
            else:
                if not ch.isspace():
                    prev_sig = ch if not _is_id_part(ch) else "a"
                i += 1
        return self.n

    def skip_regex(self, i: int) -> int:
        start = i
        i += 1
        in_class = False
        while i < self.n:
            ch = self.text[i]
            if ch == "\\":
                i += 2
                continue
            if ch in "\n\r":
                break
            if in_class:
                if ch == "]":
                    in_class = False
            elif ch == "[":
                in_class = True
            elif ch == "/":
                i += 1
                while i < self.n and _is_id_part(self.text[i]):
                    i += 1
                return i
            i += 1
        self.error(start, "unterminated regular expression")
        return min(i, self.n)

    def skip_number(self, i: int) -> int:
        text = self.text
        if text.startswith(("0x", "0X", "0b", "0B", "0o", "0O"), i):
            i += 2
            while i < self.n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            return i
        while i < self.n and (text[i].isdigit() or text[i] in "._"):
            i += 1
        if i < self.n and text[i] in "eE":
            j = i + 1
            if j < self.n and text[j] in "+-":
                j += 1
            if j < self.n and text[j].isdigit():
                i = j
                while i < self.n and text[i].isdigit():
                    i += 1
        if i < self.n and text[i] == "n":
            i += 1
        return i

    def regex_allowed(self) -> bool:
        prev = None
        for tok in reversed(self.out.tokens):
            if tok.kind != COMMENT:
                prev = tok
                break
        if prev is None:
            return True
        if prev.kind == PUNCT:
            return prev.value not in (")", "]", "}", "++", "--")
        if prev.kind == KEYWORD:
            return prev.value in _REGEX_AFTER_KEYWORDS
        return False

    def run(self) -> Lexed:
        text, n = self.text, self.n
        i = 0
        if text.startswith("\ufeff"):
            i = 1
        if text.startswith("#!", i):
            i = self.skip_line_comment(i)
        newline = False
        while i < n:
            ch = text[i]
            if ch in _LINE_TERMINATORS:
                newline = True
                i += 1
                continue
            if ch.isspace() or ch == "\ufeff":
                i += 1
                continue
            start = i
            if text.startswith("//", i):
                kind, i = COMMENT, self.skip_line_comment(i)
            elif text.startswith("/*", i):
                kind, i = COMMENT, self.skip_block_comment(i)
                if any(c in _LINE_TERMINATORS for c in text[start:i]):
                    newline = True
            elif ch in "'\"":
                kind, i = STRING, self.skip_string(i)
            elif ch == "`":
                kind, i = TEMPLATE, self.skip_template(i)
            elif ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
                kind, i = NUMBER, self.skip_number(i)
            elif _is_id_start(ch) or ch == "\\":
                i += 1
                while i < n and (_is_id_part(text[i]) or text[i] == "\\"):
                    i += 1
                kind = KEYWORD if text[start:i] in KEYWORDS else IDENT
            elif ch == "/" and self.regex_allowed():
                kind, i = REGEX, self.skip_regex(i)
            else:
                for p in _PUNCTUATORS:
                    if text.startswith(p, i):
                        break
                else:
                    p = ch
                    self.error(i, f"unexpected character {ch!r}")
                kind, i = PUNCT, i + len(p)
            line, col = self.position(start)
            self.out.tokens.append(
                Token(kind, text[start:i], start, i, line, col, newline)
            )
            if kind != COMMENT:
                newline = False
        return self.out


def tokenize(text: str) -> Lexed:
    """Tokenize *text*, comments included."""
    return _Scanner(text).run()


def strip_comments(text: str) -> str:
    """Replace every comment in *text* with a single space."""
    parts: list[str] = []
    last = 0
    for tok in tokenize(text).tokens:
        if tok.kind == COMMENT:
            parts.append(text[last:tok.start])
            parts.append(" ")
            last = tok.end
    parts.append(text[last:])
    return "".join(parts)
