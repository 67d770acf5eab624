"""Vulnerability signatures built from pre-fix and post-fix source trees."""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

from .constructs import Construct, ConstructType, Fqn
from .extractor import extract_package

log = logging.getLogger(__name__)


class KBError(Exception):
    pass


class NoCodeChangeError(KBError):
    pass


@dataclass(frozen=True)
class Modification:
    fqn: Fqn
    ctype: ConstructType
    before_digest: str
    after_digest: str

    def to_json(self) -> dict:
        return {
            "fqn": str(self.fqn),
            "type": self.ctype.value,
            "before_digest": self.before_digest,
            "after_digest": self.after_digest,
        }

    @classmethod
    def from_json(cls, data: dict, root: str) -> "Modification":
        return cls(Fqn.parse(data["fqn"], root), ConstructType(data["type"]),
                   data["before_digest"], data["after_digest"])


@dataclass(frozen=True)
class ConstructChanges:
    added: tuple[Construct, ...] = ()
    modified: tuple[Modification, ...] = ()
    removed: tuple[Construct, ...] = ()

    def __bool__(self) -> bool:
        return bool(self.added or self.modified or self.removed)

    def counts(self) -> dict[str, dict[str, int]]:
        """Per change kind, the number of constructs of each type."""
        out: dict[str, dict[str, int]] = {}
        for kind, items in (("added", self.added), ("modified", self.modified),
                            ("removed", self.removed)):
            tally: dict[str, int] = {}
            for item in items:
                tally[item.ctype.value] = tally.get(item.ctype.value, 0) + 1
            out[kind] = tally
        return out

    def to_json(self) -> dict:
        return {
            "added": [c.to_json() for c in self.added],
            "modified": [m.to_json() for m in self.modified],
            "removed": [c.to_json() for c in self.removed],
        }


def _root_of(constructs: Sequence[Construct]) -> set[str]:
    return {c.fqn.package for c in constructs}


def diff_constructs(before: Sequence[Construct], after: Sequence[Construct]) -> ConstructChanges:
    """Added, modified and removed constructs between two extractions of one package."""
    roots = _root_of(before) | _root_of(after)
    if len(roots) > 1:
        raise KBError(f"cannot diff constructs of different packages: {sorted(roots)}")
    old = {c.key: c for c in before if c.ctype is not ConstructType.PACK}
    new = {c.key: c for c in after if c.ctype is not ConstructType.PACK}
    added = tuple(c for k, c in new.items() if k not in old)
    removed = tuple(c for k, c in old.items() if k not in new)
    modified = tuple(
        Modification(c.fqn, c.ctype, old[k].body_digest, c.body_digest)
        for k, c in new.items()
        if k in old and old[k].body_digest != c.body_digest
    )
    return ConstructChanges(added, modified, removed)


@dataclass(frozen=True)
class VulnSignature:
    vuln_id: str
    package_name: str
    changes: ConstructChanges
    provenance: str = ""

    def __post_init__(self) -> None:
        if not self.changes:
            raise NoCodeChangeError(f"{self.vuln_id}: no code change detected")

    def to_json(self) -> dict:
        return {
            "vuln_id": self.vuln_id,
            "package_name": self.package_name,
            "provenance": self.provenance,
            **self.changes.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "VulnSignature":
        root = data["package_name"]
        changes = ConstructChanges(
            tuple(Construct.from_json(c, root) for c in data.get("added", [])),
            tuple(Modification.from_json(m, root) for m in data.get("modified", [])),
            tuple(Construct.from_json(c, root) for c in data.get("removed", [])),
        )
        return cls(data["vuln_id"], root, changes, data.get("provenance", ""))


def diff_trees(before_tree: Union[str, os.PathLike], after_tree: Union[str, os.PathLike],
               package_name: str) -> ConstructChanges:
    return diff_constructs(
        extract_package(before_tree, package_name),
        extract_package(after_tree, package_name),
    )


def build_signature(
    vuln_id: str,
    package_name: str,
    before_tree: Union[str, os.PathLike],
    after_tree: Union[str, os.PathLike],
    provenance: str = "",
) -> VulnSignature:
    """Signature of a fix given the package before its first and after its last fix commit."""
    for tree in (before_tree, after_tree):
        if not Path(tree).is_dir():
            raise KBError(f"{tree}: not a directory")
    changes = diff_trees(before_tree, after_tree, package_name)
    return VulnSignature(vuln_id, package_name, changes, provenance)


def dumps_signature(sig: VulnSignature) -> str:
    return json.dumps(sig.to_json(), indent=2, ensure_ascii=False) + "\n"


def kb_save(sig: VulnSignature, kb_dir: Union[str, os.PathLike]) -> Path:
    if not sig.vuln_id or any(sep in sig.vuln_id for sep in ("/", "\\", os.sep)) \
            or sig.vuln_id.startswith("."):
        raise KBError(f"{sig.vuln_id!r} cannot be used as a file name")
    kb_dir = Path(kb_dir)
    kb_dir.mkdir(parents=True, exist_ok=True)
    path = kb_dir / f"{sig.vuln_id}.json"
    path.write_text(dumps_signature(sig), encoding="utf-8")
    return path


def kb_load(kb_dir: Union[str, os.PathLike]) -> list[VulnSignature]:
    """Load every ``*.json`` signature in *kb_dir*, sorted by vulnerability id.

    Malformed files are skipped with a warning; two files carrying the same
    vulnerability id are an error.
    """
    kb_dir = Path(kb_dir)
    if not kb_dir.is_dir():
        raise KBError(f"{kb_dir}: knowledge base directory not found")
    seen: dict[str, Path] = {}
    sigs = []
    for path in sorted(kb_dir.glob("*.json")):
        try:
            sig = VulnSignature.from_json(json.loads(path.read_text(encoding="utf-8")))
        except (OSError, ValueError, KeyError, TypeError, KBError) as exc:
            log.warning("skipping malformed signature %s: %s", path.name, exc)
            continue
        if sig.vuln_id in seen:
            raise KBError(
                f"duplicate vulnerability id {sig.vuln_id!r} in {seen[sig.vuln_id].name} "
                f"and {path.name}"
            )
        seen[sig.vuln_id] = path
        sigs.append(sig)
    return sorted(sigs, key=lambda s: s.vuln_id)
