"""Match a bill of materials against vulnerability signatures."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .bom import BillOfMaterials
from .constructs import Construct, ConstructType, relative_fqn
from .deps import DIRECT, RUNTIME, TEST, TRANSITIVE, DependencyNode
from .kb import VulnSignature

VULNERABLE = "vulnerable"
FIXED = "fixed"
NAME_ONLY = "name_only"
INCONCLUSIVE = "inconclusive"

CELLS = ((RUNTIME, DIRECT), (RUNTIME, TRANSITIVE), (TEST, DIRECT), (TEST, TRANSITIVE))


@dataclass(frozen=True)
class Match:
    signature_fqn: str
    bom_fqn: str
    ctype: ConstructType
    change: str  # added | modified | removed
    evidence: str

    def to_json(self) -> dict:
        return {
            "signature_fqn": self.signature_fqn,
            "bom_fqn": self.bom_fqn,
            "type": self.ctype.value,
            "change": self.change,
            "evidence": self.evidence,
        }


@dataclass(frozen=True)
class Finding:
    vuln_id: str
    package_name: str  # package the signature was built from
    dependency: DependencyNode
    matches: tuple[Match, ...]

    @property
    def status(self) -> str:
        evidence = {m.evidence for m in self.matches}
        if VULNERABLE in evidence:
            return VULNERABLE
        if evidence == {FIXED}:
            return FIXED
        return INCONCLUSIVE

    def to_json(self) -> dict:
        d = self.dependency
        return {
            "vuln_id": self.vuln_id,
            "signature_package": self.package_name,
            "dependency": {
                "name": d.name,
                "version": d.version,
                "path": d.path,
                "scope": d.scope,
                "depth": d.depth,
            },
            "status": self.status,
            "matches": [m.to_json() for m in self.matches],
        }


def _index(constructs: Iterable[Construct]) -> dict[tuple[tuple[str, ...], ConstructType], Construct]:
    return {(relative_fqn(c.fqn), c.ctype): c for c in constructs
            if c.ctype is not ConstructType.PACK}


def match_signature(sig: VulnSignature, constructs: Sequence[Construct]) -> list[Match]:
    """Evidence for one signature in one package's constructs.

    Names are compared with the package root stripped, so code copied into
    a differently named package still matches.
    """
    found = _index(constructs)
    matches = []

    def lookup(fqn, ctype):
        return found.get((relative_fqn(fqn), ctype))

    for c in sig.changes.removed:
        hit = lookup(c.fqn, c.ctype)
        if hit is not None:
            matches.append(Match(str(c.fqn), str(hit.fqn), c.ctype, "removed", VULNERABLE))
    for m in sig.changes.modified:
        hit = lookup(m.fqn, m.ctype)
        if hit is None:
            continue
        if hit.body_digest == m.before_digest:
            evidence = VULNERABLE
        elif hit.body_digest == m.after_digest:
            evidence = FIXED
        else:
            evidence = NAME_ONLY
        matches.append(Match(str(m.fqn), str(hit.fqn), m.ctype, "modified", evidence))
    for c in sig.changes.added:
        hit = lookup(c.fqn, c.ctype)
        if hit is not None:
            evidence = FIXED if hit.body_digest == c.body_digest else NAME_ONLY
            matches.append(Match(str(c.fqn), str(hit.fqn), c.ctype, "added", evidence))
    return sorted(matches, key=lambda m: (m.signature_fqn, m.ctype.value, m.change))


def detect(bom: BillOfMaterials, kb: Sequence[VulnSignature]) -> list[Finding]:
    findings = []
    for sig in kb:
        for entry in bom.dep_entries:
            matches = match_signature(sig, entry.constructs)
            if matches:
                findings.append(Finding(sig.vuln_id, sig.package_name, entry.node, tuple(matches)))
    return sorted(findings, key=lambda f: (f.vuln_id, f.dependency.path))


def tabulate_findings(
    findings: Sequence[Finding], statuses: Iterable[str] = (VULNERABLE,)
) -> dict[str, dict[tuple[str, str], int]]:
    """Affected dependencies per vulnerability in each scope x depth cell.

    Only findings whose status is in *statuses* are counted.
    """
    wanted = set(statuses)
    table: dict[str, dict[tuple[str, str], int]] = {}
    for f in findings:
        if f.status not in wanted:
            continue
        row = table.setdefault(f.vuln_id, {cell: 0 for cell in CELLS})
        cell = (f.dependency.scope, f.dependency.depth)
        if cell in row:
            row[cell] += 1
    return dict(sorted(table.items()))


def table_to_json(table: dict[str, dict[tuple[str, str], int]]) -> list[dict]:
    return [
        {"vuln_id": vid, **{f"{scope}_{depth}": row[(scope, depth)] for scope, depth in CELLS}}
        for vid, row in table.items()
    ]


def render_table(table: dict[str, dict[tuple[str, str], int]]) -> str:
    """Text matrix with runtime/test groups split into direct and transitive."""
    runtime_total = sum(row[c] for row in table.values() for c in CELLS[:2])
    test_total = sum(row[c] for row in table.values() for c in CELLS[2:])
    body = [[vid, *(row[c] for c in CELLS)] for vid, row in table.items()]
    totals = [sum(row[c] for row in table.values()) for c in CELLS]
    first = max([len("Vulnerability"), *(len(r[0]) for r in body)])
    cell = max([len("Direct"), len("Trans."), *(len(str(v)) for v in totals)])
    group = 2 * cell + 2

    def fmt(label, values):
        return "  ".join([label.ljust(first), *(str(v).rjust(cell) for v in values)]).rstrip()

    lines = [
        "  ".join(["Vulnerability".ljust(first), f"Runtime ({runtime_total})".center(group),
                   f"Test ({test_total})".center(group)]).rstrip(),
        fmt("", ["Direct", "Trans.", "Direct", "Trans."]),
    ]
    rule = "-" * (first + 4 * (cell + 2))
    lines.append(rule)
    lines.extend(fmt(r[0], r[1:]) for r in body)
    lines.append(rule)
    lines.append(fmt("", totals))
    return "\n".join(lines) + "\n"
