"""Program constructs, fully-qualified names and body digests."""
from __future__ import annotations

import enum
import hashlib
import json
import re
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .lexer import strip_comments


class ConstructType(str, enum.Enum):
    PACK = "PACK"  # package or directory
    MODU = "MODU"  # module file
    FUNC = "FUNC"
    CLAS = "CLAS"
    METH = "METH"
    CONS = "CONS"
    OBJT = "OBJT"

    def __str__(self) -> str:
        return self.value


_CALLABLE = {ConstructType.FUNC, ConstructType.METH, ConstructType.CONS}
_BARE = {ConstructType.PACK, ConstructType.MODU, ConstructType.OBJT}

# Legal parent types; None stands for "no parent" (the root package).
PARENT_TYPES = {
    ConstructType.PACK: {ConstructType.PACK, None},
    ConstructType.MODU: {ConstructType.PACK},
    ConstructType.FUNC: {ConstructType.MODU, ConstructType.FUNC},
    ConstructType.CLAS: {ConstructType.MODU, ConstructType.FUNC},
    ConstructType.OBJT: {ConstructType.MODU, ConstructType.FUNC},
    ConstructType.METH: {ConstructType.CLAS},
    ConstructType.CONS: {ConstructType.CLAS},
}


class FqnError(ValueError):
    pass


@dataclass(frozen=True)
class Anonymous:
    """Placeholder name for a construct declared without one."""

    line: int
    col: int

    def __str__(self) -> str:
        return f"<anon:L{self.line}:C{self.col}>"


def split_segments(text: str) -> list[str]:
    """Split on dots that are not nested inside parentheses."""
    segments: list[str] = []
    depth = 0
    current: list[str] = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(depth - 1, 0)
        if ch == "." and depth == 0:
            segments.append("".join(current))
            current = []
        else:
            current.append(ch)
    segments.append("".join(current))
    return segments


@dataclass(frozen=True)
class Fqn:
    segments: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise FqnError("a fully-qualified name needs at least one segment")
        if any(not s for s in self.segments):
            raise FqnError(f"empty segment in {self.segments!r}")

    @classmethod
    def root(cls, package_name: str) -> "Fqn":
        return cls((package_name,))

    @classmethod
    def parse(cls, text: str, root: Optional[str] = None) -> "Fqn":
        """Parse a rendered name.

        The root segment is opaque. Pass *root* when the package name itself
        may contain dots (``lodash.merge``); otherwise the root ends at the
        first top-level dot.
        """
        if root is not None:
            if text == root:
                return cls((root,))
            if not text.startswith(root + "."):
                raise FqnError(f"{text!r} is not rooted at {root!r}")
            return cls((root, *split_segments(text[len(root) + 1:])))
        return cls(tuple(split_segments(text)))

    @property
    def package(self) -> str:
        return self.segments[0]

    def child(self, segment: str) -> "Fqn":
        return Fqn(self.segments + (segment,))

    def is_strict_prefix_of(self, other: "Fqn") -> bool:
        n = len(self.segments)
        return n < len(other.segments) and other.segments[:n] == self.segments

    def __str__(self) -> str:
        return ".".join(self.segments)


def _check_name(name: str) -> None:
    if not name:
        raise FqnError("empty construct name")
    if "." in name:
        raise FqnError(f"construct name {name!r} contains '.'")


def build_fqn(
    parent: Fqn,
    ctype: ConstructType,
    name: Union[str, Anonymous],
    args: Sequence[str] = (),
    base: Optional[str] = None,
) -> Fqn:
    """Extend *parent* by the segment naming one construct.

    Callables render as ``name(a,b)``, classes as ``Name()`` or
    ``Name(Base)``, everything else as the bare name.
    """
    ctype = ConstructType(ctype)
    if isinstance(name, Anonymous):
        label = str(name)
    else:
        _check_name(name)
        label = name
    if ctype in _BARE:
        if args:
            raise FqnError(f"{ctype} constructs take no arguments")
        return parent.child(label)
    if ctype is ConstructType.CLAS:
        return parent.child(f"{label}({base or ''})")
    for a in args:
        if "." in a and not a.startswith("..."):
            raise FqnError(f"argument {a!r} contains '.'")
    return parent.child(f"{label}({','.join(args)})")


def relative_fqn(fqn: Fqn) -> tuple[str, ...]:
    """Drop the package root so repackaged code compares equal."""
    return fqn.segments[1:]


_WS = re.compile(r"\s+")


def normalize(body_source: str) -> str:
    return _WS.sub(" ", strip_comments(body_source)).strip()


def digest_normalized(normalized: str) -> str:
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()


def normalize_and_digest(body_source: str) -> str:
    return digest_normalized(normalize(body_source))


EMPTY_DIGEST = normalize_and_digest("")

Span = tuple[int, int, int, int]


@dataclass(frozen=True)
class Construct:
    ctype: ConstructType
    fqn: Fqn
    span: Span
    body_digest: str
    parent_fqn: Optional[Fqn] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ctype", ConstructType(self.ctype))
        if self.parent_fqn is not None and not self.parent_fqn.is_strict_prefix_of(self.fqn):
            raise FqnError(f"parent {self.parent_fqn} does not enclose {self.fqn}")
        if self.parent_fqn is None and self.ctype is not ConstructType.PACK:
            raise FqnError(f"{self.ctype} {self.fqn} needs a parent")
        l1, c1, l2, c2 = self.span
        if (l1, c1) > (l2, c2):
            raise FqnError(f"span {self.span} is not well ordered")

    @property
    def key(self) -> tuple[str, ConstructType]:
        return str(self.fqn), self.ctype

    def to_json(self) -> dict:
        return {
            "type": self.ctype.value,
            "fqn": str(self.fqn),
            "span": list(self.span),
            "digest": self.body_digest,
            "parent": None if self.parent_fqn is None else str(self.parent_fqn),
        }

    @classmethod
    def from_json(cls, data: dict, root: Optional[str] = None) -> "Construct":
        parent = data.get("parent")
        return cls(
            ConstructType(data["type"]),
            Fqn.parse(data["fqn"], root),
            tuple(data["span"]),
            data["digest"],
            None if parent is None else Fqn.parse(parent, root),
        )


def dumps_constructs(constructs: Sequence[Construct]) -> str:
    """Canonical JSON for a construct list (stable field order)."""
    return json.dumps([c.to_json() for c in constructs], indent=2, ensure_ascii=False) + "\n"


def check_hierarchy(constructs: Sequence[Construct]) -> list[str]:
    """Return a description of every parent-type violation in *constructs*."""
    by_fqn = {str(c.fqn): c.ctype for c in constructs}
    problems = []
    for c in constructs:
        ptype = None if c.parent_fqn is None else by_fqn.get(str(c.parent_fqn), "missing")
        if ptype not in PARENT_TYPES[c.ctype]:
            problems.append(f"{c.ctype} {c.fqn}: illegal parent {ptype}")
    return problems
