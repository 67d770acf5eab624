"""Construct extraction from JavaScript sources.

Only a statement-level subset of ES2015 is understood: function and class
declarations, ``var``/``let``/``const`` declarators initialised with an object
literal or a function, and top-level member-path assignments of functions
(``exports.formatters.o = function (v) {...}``). Everything else is skipped
one top-level statement at a time, so unsupported syntax costs at most the
statement it occurs in.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .constructs import (
    EMPTY_DIGEST,
    Anonymous,
    Construct,
    ConstructType,
    Fqn,
    FqnError,
    build_fqn,
    normalize_and_digest,
)
from .lexer import COMMENT, IDENT, KEYWORD, NUMBER, PUNCT, REGEX, STRING, TEMPLATE, Token, tokenize

log = logging.getLogger(__name__)

JS_EXTENSIONS = (".js", ".mjs", ".cjs")

ParseError = tuple[int, int, str]

_OPENERS = {"(": ")", "[": "]", "{": "}"}
_CLOSERS = {")", "]", "}"}
# A token with one of these values on a new line continues the previous statement.
_CONTINUERS = frozenset(
    """. ?. , ( [ ? : = == === != !== < > <= >= + - * / % ** & | ^ && || ??
    += -= *= /= %= **= <<= >>= >>>= &= |= ^= &&= ||= ??= << >> >>> => in instanceof
    """.split()
)
_EXPRESSION_ENDERS = frozenset([IDENT, NUMBER, STRING, TEMPLATE, REGEX])
_VALUE_KEYWORDS = frozenset("this super null true false".split())
# Contextual keywords that are usually plain identifiers.
_CONTEXTUAL = frozenset("get set of async static let yield await".split())
_BLOCK_STATEMENTS = frozenset("if for while do try switch with function class".split())
_CLAUSE_CONTINUERS = frozenset("else catch finally while".split())
_METHOD_MODIFIERS = frozenset("static async get set".split())


@dataclass(frozen=True)
class SourceModule:
    package_root: Fqn
    relative_path: tuple[str, ...]  # directory segments + file stem
    source_text: str

    def __post_init__(self) -> None:
        if any(os.sep in s or "/" in s for s in self.relative_path):
            raise ValueError(f"path separator in {self.relative_path!r}")

    @classmethod
    def from_path(cls, package_root: Fqn, rel_path: str, source_text: str) -> "SourceModule":
        """Build from a slash-separated path like ``utils/util_b.js``."""
        parts = [p for p in rel_path.replace(os.sep, "/").split("/") if p]
        parts[-1] = file_stem(parts[-1])
        return cls(package_root, tuple(encode_segment(p) for p in parts), source_text)

    @property
    def fqn(self) -> Fqn:
        return Fqn(self.package_root.segments + self.relative_path)


@dataclass
class ExtractionResult:
    constructs: list[Construct] = field(default_factory=list)
    parse_errors: list[ParseError] = field(default_factory=list)


def file_stem(filename: str) -> str:
    for ext in JS_EXTENSIONS:
        if filename.endswith(ext) and len(filename) > len(ext):
            return filename[: -len(ext)]
    return filename


def encode_segment(name: str) -> str:
    """Percent-escape characters that would break name parsing."""
    return name.replace("%", "%25").replace(".", "%2E")


class _Bail(Exception):
    def __init__(self, tok: Optional[Token], message: str) -> None:
        super().__init__(message)
        self.tok = tok


class _Parser:
    def __init__(self, sm: SourceModule, taken: set[str]) -> None:
        self.sm = sm
        self.text = sm.source_text
        lexed = tokenize(self.text)
        self.lexed = lexed
        self.toks = [t for t in lexed.tokens if t.kind != COMMENT]
        self.n = len(self.toks)
        self.errors: list[ParseError] = list(lexed.errors)
        self.taken = taken
        self.constructs: list[Construct] = []
        self.pending: list[Construct] = []
        self.pending_names: set[str] = set()
        self.module_fqn = sm.fqn

    # token helpers

    def tok(self, i: int) -> Optional[Token]:
        return self.toks[i] if 0 <= i < self.n else None

    def is_(self, i: int, *values: str) -> bool:
        t = self.tok(i)
        return t is not None and t.kind in (PUNCT, KEYWORD, IDENT) and t.value in values

    def is_name(self, i: int) -> bool:
        t = self.tok(i)
        return t is not None and (t.kind == IDENT or t.kind == KEYWORD)

    def expect(self, i: int, value: str) -> int:
        if not self.is_(i, value):
            t = self.tok(i)
            found = "end of input" if t is None else repr(t.value)
            raise _Bail(t, f"expected {value!r}, found {found}")
        return i

    def match_close(self, i: int) -> int:
        """Index of the bracket closing the opener at *i*."""
        stack = [_OPENERS[self.toks[i].value]]
        j = i + 1
        while j < self.n:
            t = self.toks[j]
            if t.kind == PUNCT:
                if t.value in _OPENERS:
                    stack.append(_OPENERS[t.value])
                elif t.value in _CLOSERS:
                    if t.value != stack[-1]:
                        raise _Bail(t, f"mismatched {t.value!r}")
                    stack.pop()
                    if not stack:
                        return j
            j += 1
        raise _Bail(self.toks[i], f"unclosed {self.toks[i].value!r}")

    def ends_statement_at_newline(self, j: int) -> bool:
        """Would automatic semicolon insertion end a statement before token *j*?"""
        t = self.tok(j)
        if t is None or not t.newline_before:
            return False
        prev = self.toks[j - 1]
        prev_ends = (
            prev.kind in _EXPRESSION_ENDERS
            or (prev.kind == KEYWORD and prev.value in _VALUE_KEYWORDS | _CONTEXTUAL)
            or (prev.kind == PUNCT and prev.value in (")", "]", "}", "++", "--"))
        )
        return prev_ends and t.value not in _CONTINUERS

    def statement_end(self, i: int) -> int:
        """Index just past the top-level statement starting at *i*."""
        lead = i
        while self.is_(lead, "export", "default", "async"):
            lead += 1
        block_like = self.is_(lead, *_BLOCK_STATEMENTS) or self.is_(lead, "{")
        j = i
        while j < self.n:
            t = self.toks[j]
            if t.kind == PUNCT and t.value == ";":
                return j + 1
            if t.kind == PUNCT and t.value in _CLOSERS:
                # stray closer; let the caller report it
                return j if j > i else j + 1
            if t.kind == PUNCT and t.value in _OPENERS:
                try:
                    j = self.match_close(j)
                except _Bail as exc:
                    self.error(exc.tok, str(exc))
                    return self.recover(i)
                if t.value == "{" and block_like and not self.is_(j + 1, *_CLAUSE_CONTINUERS):
                    return j + 1
            j += 1
            if self.ends_statement_at_newline(j):
                return j
        return self.n

    def recover(self, i: int) -> int:
        """Brace-balanced skip past a statement that failed to parse."""
        depth = 0
        j = i
        while j < self.n:
            t = self.toks[j]
            if t.kind == PUNCT:
                if t.value == "{":
                    depth += 1
                elif t.value == "}":
                    depth -= 1
                    if depth <= 0:
                        return j + 1
                elif t.value == ";" and depth == 0:
                    return j + 1
            j += 1
        return self.n

    def expression_end(self, i: int) -> int:
        """Index just past an expression starting at *i* inside a declarator list."""
        j = i
        while j < self.n:
            t = self.toks[j]
            if t.kind == PUNCT:
                if t.value in (",", ";") or t.value in _CLOSERS:
                    return j
                if t.value in _OPENERS:
                    j = self.match_close(j)
            j += 1
            if self.ends_statement_at_newline(j):
                return j
        return self.n

    def declarator_ends(self, j: int) -> bool:
        t = self.tok(j)
        if t is None or self.is_(j, ",", ";", "}"):
            return True
        return self.ends_statement_at_newline(j)

    # recording

    def error(self, tok: Optional[Token], message: str) -> None:
        if tok is None:
            line, col = self.lexed.position(len(self.text))
        else:
            line, col = tok.line, tok.col
        self.errors.append((line, col, message))

    def span(self, first: Token, last: Token) -> tuple[int, int, int, int]:
        end_line, end_col = self.lexed.position(last.end)
        return (first.line, first.col, end_line, end_col)

    def source(self, first: Token, last: Token) -> str:
        return self.text[first.start:last.end]

    def unique(self, fqn: Fqn, line: int) -> Fqn:
        def used(f: Fqn) -> bool:
            s = str(f)
            return s in self.taken or s in self.pending_names

        if not used(fqn):
            return fqn
        base = fqn.segments[-1] + f"#L{line}"
        candidate = Fqn(fqn.segments[:-1] + (base,))
        n = 2
        while used(candidate):
            candidate = Fqn(fqn.segments[:-1] + (f"{base}#{n}",))
            n += 1
        return candidate

    def emit(self, ctype: ConstructType, fqn: Fqn, first: Token, last: Token,
             body_first: Token, body_last: Token, parent: Fqn) -> Fqn:
        fqn = self.unique(fqn, first.line)
        self.pending.append(
            Construct(
                ctype,
                fqn,
                self.span(first, last),
                normalize_and_digest(self.source(body_first, body_last)),
                parent,
            )
        )
        self.pending_names.add(str(fqn))
        return fqn

    def commit(self) -> None:
        self.constructs.extend(self.pending)
        self.taken.update(self.pending_names)
        self.pending = []
        self.pending_names = set()

    def rollback(self) -> None:
        self.pending = []
        self.pending_names = set()

    # grammar

    def params(self, i: int) -> tuple[list[str], int]:
        """Parameter names of the list opened at *i*; returns (names, index of ')')."""
        self.expect(i, "(")
        close = self.match_close(i)
        names: list[str] = []
        j = i + 1
        while j < close:
            t = self.toks[j]
            if t.value == "...":
                nxt = self.tok(j + 1)
                names.append("..." + (nxt.value if nxt and nxt.kind in (IDENT, KEYWORD) else "[]"))
            elif t.kind in (IDENT, KEYWORD):
                names.append(t.value)
            elif t.value == "{":
                names.append("{}")
            elif t.value == "[":
                names.append("[]")
            else:
                raise _Bail(t, f"unexpected {t.value!r} in parameter list")
            # skip to the next top-level comma (past defaults and patterns)
            while j < close and self.toks[j].value != ",":
                if self.toks[j].value in _OPENERS and self.toks[j].kind == PUNCT:
                    j = self.match_close(j)
                j += 1
            j += 1
        return names, close

    def function_expression(self, i: int) -> Optional[tuple[list[str], int, int, Token]]:
        """Recognise a function or arrow expression at *i*.

        Returns (params, body start index, body end index, keyword token) or
        None when *i* does not start one.
        """
        j = i
        nxt = self.tok(j + 1)
        if self.is_(j, "async") and nxt is not None and not nxt.newline_before:
            if self.is_(j + 1, "function", "(") or (self.is_name(j + 1) and self.is_(j + 2, "=>")):
                j += 1
        if self.is_(j, "function"):
            k = j + 1
            if self.is_(k, "*"):
                k += 1
            if self.is_name(k) and not self.is_(k, "("):
                k += 1
            args, close = self.params(k)
            self.expect(close + 1, "{")
            return args, close + 1, self.match_close(close + 1), self.toks[i]
        if self.is_name(j) and self.is_(j + 1, "=>") and self.toks[j].value not in _VALUE_KEYWORDS:
            args, arrow = [self.toks[j].value], j + 1
        elif self.is_(j, "("):
            close = self.match_close(j)
            if not self.is_(close + 1, "=>"):
                return None
            args, _ = self.params(j)
            arrow = close + 1
        else:
            return None
        body = arrow + 1
        if self.tok(body) is None:
            raise _Bail(None, "missing arrow function body")
        if self.is_(body, "{"):
            return args, body, self.match_close(body), self.toks[i]
        end = self.expression_end(body)
        if end <= body:
            raise _Bail(self.tok(body), "missing arrow function body")
        return args, body, end - 1, self.toks[i]

    def function_declaration(self, i: int, start: Token) -> int:
        j = i
        if self.is_(j, "async"):
            j += 1
        self.expect(j, "function")
        j += 1
        if self.is_(j, "*"):
            j += 1
        if self.is_name(j) and not self.is_(j, "("):
            name: Union[str, Anonymous] = self.toks[j].value
            j += 1
        else:
            name = Anonymous(start.line, start.col)
        args, close = self.params(j)
        body = self.expect(close + 1, "{")
        end = self.match_close(body)
        fqn = build_fqn(self.module_fqn, ConstructType.FUNC, name, args)
        self.emit(ConstructType.FUNC, fqn, start, self.toks[end],
                  self.toks[body], self.toks[end], self.module_fqn)
        return end + 1

    def class_heritage(self, i: int, brace: int) -> str:
        toks = self.toks[i:brace]
        if toks and len(toks) % 2 == 1 and all(
            (t.kind in (IDENT, KEYWORD)) if k % 2 == 0 else t.value == "."
            for k, t in enumerate(toks)
        ):
            return ".".join(t.value for t in toks[::2])
        return "<expr>"

    def class_declaration(self, i: int, start: Token) -> int:
        j = self.expect(i, "class") + 1
        if self.is_name(j) and not self.is_(j, "extends", "{"):
            name: Union[str, Anonymous] = self.toks[j].value
            j += 1
        else:
            name = Anonymous(start.line, start.col)
        base = None
        if self.is_(j, "extends"):
            k = j + 1
            while k < self.n and not self.is_(k, "{"):
                if self.toks[k].value in ("(", "[") and self.toks[k].kind == PUNCT:
                    k = self.match_close(k)
                k += 1
            base = self.class_heritage(j + 1, k)
            j = k
        body = self.expect(j, "{")
        end = self.match_close(body)
        fqn = build_fqn(self.module_fqn, ConstructType.CLAS, name, base=base)
        fqn = self.emit(ConstructType.CLAS, fqn, start, self.toks[end],
                        self.toks[body], self.toks[end], self.module_fqn)
        self.class_members(body + 1, end, fqn)
        return end + 1

    def class_members(self, j: int, end: int, class_fqn: Fqn) -> None:
        while j < end:
            if self.is_(j, ";"):
                j += 1
                continue
            first = self.toks[j]
            is_static = False
            while self.is_(j, *_METHOD_MODIFIERS) and not self.is_(j + 1, "(", "=", ";", "}"):
                is_static = is_static or self.toks[j].value == "static"
                j += 1
            if self.is_(j, "*"):
                j += 1
            t = self.toks[j]
            name: Optional[str] = None
            if t.kind in (IDENT, KEYWORD, NUMBER):
                name = t.value
            elif t.kind == STRING:
                name = t.value[1:-1]
            elif t.value == "#" and self.is_name(j + 1):
                j += 1
                name = "#" + self.toks[j].value
            elif t.value == "[":
                j = self.match_close(j)
            else:
                raise _Bail(t, f"unexpected {t.value!r} in class body")
            j += 1
            if self.is_(j, "("):
                args, close = self.params(j)
                body = self.expect(close + 1, "{")
                body_end = self.match_close(body)
                if name and "." not in name:
                    ctype = (
                        ConstructType.CONS
                        if name == "constructor" and not is_static
                        else ConstructType.METH
                    )
                    fqn = build_fqn(class_fqn, ctype, name, args)
                    self.emit(ctype, fqn, first, self.toks[body_end],
                              self.toks[body], self.toks[body_end], class_fqn)
                j = body_end + 1
            else:
                # class field: skip to its end
                while j < end and not self.is_(j, ";"):
                    if self.toks[j].value in _OPENERS and self.toks[j].kind == PUNCT:
                        j = self.match_close(j)
                    j += 1
                    if self.ends_statement_at_newline(j):
                        break

    def variable_statement(self, i: int) -> int:
        j = i + 1
        while True:
            t = self.tok(j)
            if t is None:
                raise _Bail(None, "expected a declarator")
            if t.kind in (IDENT, KEYWORD) and t.value not in _VALUE_KEYWORDS:
                name_tok = t
                j += 1
            elif self.is_(j, "{", "["):
                name_tok = None
                j = self.match_close(j) + 1
            else:
                raise _Bail(t, f"unexpected {t.value!r} in declaration")
            if self.is_(j, "="):
                init = j + 1
                j = self.initializer(name_tok, init)
            if self.is_(j, ","):
                j += 1
                continue
            if self.is_(j, ";"):
                return j + 1
            if self.tok(j) is None or self.ends_statement_at_newline(j) or self.is_(j, "}"):
                return j
            raise _Bail(self.tok(j), f"unexpected {self.tok(j).value!r} after declarator")

    def initializer(self, name_tok: Optional[Token], init: int) -> int:
        """Handle ``name = <init>``; returns the index just past the initializer."""
        if name_tok is not None and self.is_(init, "{"):
            close = self.match_close(init)
            if self.declarator_ends(close + 1):
                fqn = build_fqn(self.module_fqn, ConstructType.OBJT, name_tok.value)
                self.emit(ConstructType.OBJT, fqn, name_tok, self.toks[close],
                          self.toks[init], self.toks[close], self.module_fqn)
                return close + 1
        elif name_tok is not None:
            fn = self.function_expression(init)
            if fn is not None:
                args, body, body_end, _ = fn
                if self.declarator_ends(body_end + 1):
                    fqn = build_fqn(self.module_fqn, ConstructType.FUNC, name_tok.value, args)
                    self.emit(ConstructType.FUNC, fqn, name_tok, self.toks[body_end],
                              self.toks[body], self.toks[body_end], self.module_fqn)
                    return body_end + 1
        return self.expression_end(init)

    def member_path(self, i: int) -> tuple[list[str], int]:
        """Parse ``a.b['c'].d``; returns (components, index after the path)."""
        parts = [self.toks[i].value]
        j = i + 1
        while True:
            if self.is_(j, ".") and self.is_name(j + 1):
                parts.append(self.toks[j + 1].value)
                j += 2
            elif (
                self.is_(j, "[")
                and self.tok(j + 1) is not None
                and self.toks[j + 1].kind == STRING
                and self.is_(j + 2, "]")
            ):
                parts.append(self.toks[j + 1].value[1:-1])
                j += 3
            else:
                return parts, j

    def member_assignment(self, i: int) -> Optional[int]:
        parts, j = self.member_path(i)
        if len(parts) < 2 or not self.is_(j, "="):
            return None
        if any(not p or "." in p for p in parts):
            return None
        fn = self.function_expression(j + 1)
        if fn is None:
            return None
        args, body, body_end, _ = fn
        if not self.declarator_ends(body_end + 1) or self.is_(body_end + 1, ","):
            return None
        parent = self.module_fqn
        owner = Fqn(parent.segments + tuple(parts[:-1]))
        fqn = build_fqn(owner, ConstructType.FUNC, parts[-1], args)
        self.emit(ConstructType.FUNC, fqn, self.toks[i], self.toks[body_end],
                  self.toks[body], self.toks[body_end], parent)
        k = body_end + 1
        return k + 1 if self.is_(k, ";") else k

    def statement(self, i: int) -> int:
        j = i
        if self.is_(j, "export"):
            j += 1
            if self.is_(j, "default"):
                j += 1
        start = self.toks[j] if j < self.n else self.toks[i]
        if self.is_(j, "function") or (self.is_(j, "async") and self.is_(j + 1, "function")
                                       and not self.toks[j + 1].newline_before):
            return self.function_declaration(j, start)
        if self.is_(j, "class"):
            return self.class_declaration(j, start)
        if self.is_(j, "var", "let", "const") and (self.is_name(j + 1) or self.is_(j + 1, "{", "[")):
            return self.variable_statement(j)
        t = self.tok(j)
        if j == i and t is not None and (t.kind == IDENT or self.is_(j, "this")):
            end = self.member_assignment(j)
            if end is not None:
                return end
        return self.statement_end(i)

    def run(self) -> ExtractionResult:
        modu_fqn = self.unique(self.module_fqn, 1)
        self.module_fqn = modu_fqn
        end_line, end_col = self.lexed.position(len(self.text))
        module = Construct(
            ConstructType.MODU,
            modu_fqn,
            (1, 1, end_line, end_col),
            normalize_and_digest(self.text),
            Fqn(modu_fqn.segments[:-1]),
        )
        self.constructs.append(module)
        self.taken.add(str(modu_fqn))
        i = 0
        while i < self.n:
            t = self.toks[i]
            if t.kind == PUNCT and t.value == ";":
                i += 1
                continue
            if t.kind == PUNCT and t.value in _CLOSERS:
                self.error(t, f"unexpected {t.value!r}")
                i += 1
                continue
            try:
                nxt = self.statement(i)
                self.commit()
            except (_Bail, FqnError) as exc:
                self.rollback()
                self.error(getattr(exc, "tok", t) or t, str(exc))
                nxt = self.recover(i)
            i = max(nxt, i + 1)
        return ExtractionResult(self.constructs, self.errors)


def parse_module(sm: SourceModule, taken: Optional[set[str]] = None) -> ExtractionResult:
    """Extract the constructs of one module file.

    *taken* holds rendered names already used elsewhere in the package; new
    names colliding with it get a ``#L<line>`` suffix. It is updated in place.
    """
    return _Parser(sm, set() if taken is None else taken).run()


def _iter_sources(package_dir: Path) -> list[str]:
    found = []
    for dirpath, dirnames, filenames in os.walk(package_dir):
        dirnames[:] = sorted(d for d in dirnames if d != "node_modules")
        rel_dir = os.path.relpath(dirpath, package_dir)
        for fn in filenames:
            if fn.endswith(JS_EXTENSIONS):
                rel = fn if rel_dir == "." else os.path.join(rel_dir, fn)
                found.append(rel.replace(os.sep, "/"))
    return sorted(found)


def extract_package(
    package_dir: Union[str, os.PathLike],
    package_root: Union[Fqn, str],
    errors: Optional[list[tuple[str, int, int, str]]] = None,
) -> list[Construct]:
    """Extract every construct of the package rooted at *package_dir*.

    Nested ``node_modules`` directories are not entered. Parse errors are
    appended to *errors* as ``(module fqn, line, col, message)`` when a list
    is supplied, and logged either way.
    """
    package_dir = Path(package_dir)
    if not package_dir.is_dir():
        raise FileNotFoundError(f"package directory not found: {package_dir}")
    root = package_root if isinstance(package_root, Fqn) else Fqn.root(package_root)
    sources = _iter_sources(package_dir)

    directories = {()}
    for rel in sources:
        parts = tuple(encode_segment(p) for p in rel.split("/")[:-1])
        for k in range(1, len(parts) + 1):
            directories.add(parts[:k])

    taken: set[str] = set()
    constructs: list[Construct] = []
    for parts in sorted(directories):
        fqn = Fqn(root.segments + parts)
        parent = None if not parts else Fqn(root.segments + parts[:-1])
        if parent is None and len(root.segments) > 1:
            parent = Fqn(root.segments[:-1])
        constructs.append(Construct(ConstructType.PACK, fqn, (1, 1, 1, 1), EMPTY_DIGEST, parent))
        taken.add(str(fqn))

    for rel in sources:
        problems: list[ParseError] = []
        try:
            raw = (package_dir / rel).read_bytes()
        except OSError as exc:
            raw = b""
            problems.append((1, 1, f"unreadable file: {exc.strerror or exc}"))
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            text = raw.decode("utf-8", errors="replace")
            problems.append((1, 1, f"invalid UTF-8 at byte {exc.start}"))
        result = parse_module(SourceModule.from_path(root, rel, text), taken)
        problems.extend(result.parse_errors)
        constructs.extend(result.constructs)
        modu = str(result.constructs[0].fqn)
        for line, col, message in problems:
            log.debug("%s:%d:%d: %s", modu, line, col, message)
            if errors is not None:
                errors.append((modu, line, col, message))
    return constructs
