"""Bill of materials: constructs of an application and of every installed dependency."""
from __future__ import annotations

import json
import logging
import os
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

from .constructs import Construct, Fqn
from .deps import RUNTIME, TEST, DependencyNode, Manifest, parse_manifest, resolve
from .extractor import extract_package

log = logging.getLogger(__name__)


class BomError(Exception):
    pass


@dataclass(frozen=True)
class DepEntry:
    node: DependencyNode
    constructs: tuple[Construct, ...]


@dataclass(frozen=True)
class BomStats:
    app_count: int
    dep_count: int
    total: int
    dependencies: int
    runtime_dependencies: int
    test_dependencies: int

    def to_json(self) -> dict:
        return {
            "app_count": self.app_count,
            "dep_count": self.dep_count,
            "total": self.total,
            "dependencies": self.dependencies,
            "runtime_dependencies": self.runtime_dependencies,
            "test_dependencies": self.test_dependencies,
        }


@dataclass(frozen=True)
class BillOfMaterials:
    name: str
    version: str
    app_constructs: tuple[Construct, ...]
    dep_entries: tuple[DepEntry, ...]
    warnings: tuple[str, ...] = ()
    parse_errors: tuple[tuple[str, int, int, str], ...] = ()

    @property
    def stats(self) -> BomStats:
        app = len(self.app_constructs)
        dep = sum(len(e.constructs) for e in self.dep_entries)
        return BomStats(
            app_count=app,
            dep_count=dep,
            total=app + dep,
            dependencies=len(self.dep_entries),
            runtime_dependencies=sum(e.node.scope == RUNTIME for e in self.dep_entries),
            test_dependencies=sum(e.node.scope == TEST for e in self.dep_entries),
        )

    def without_test_dependencies(self) -> "BillOfMaterials":
        kept = tuple(e for e in self.dep_entries if e.node.scope != TEST)
        return BillOfMaterials(self.name, self.version, self.app_constructs, kept,
                               self.warnings, self.parse_errors)

    def to_json(self) -> dict:
        return {
            "application": {"name": self.name, "version": self.version},
            "app_constructs": [c.to_json() for c in self.app_constructs],
            "dependencies": [
                {
                    "name": e.node.name,
                    "version": e.node.version,
                    "path": e.node.path,
                    "scope": e.node.scope,
                    "depth": e.node.depth,
                    "constructs": [c.to_json() for c in e.constructs],
                }
                for e in self.dep_entries
            ],
            "stats": self.stats.to_json(),
            "warnings": list(self.warnings),
            "parse_errors": [
                {"module": m, "line": line, "col": col, "message": msg}
                for m, line, col, msg in self.parse_errors
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "BillOfMaterials":
        app = data["application"]
        entries = []
        for dep in data.get("dependencies", []):
            node = DependencyNode(dep["name"], dep.get("version", ""), dep["path"],
                                  dep.get("scope"), dep.get("depth"))
            entries.append(DepEntry(
                node, tuple(Construct.from_json(c, dep["name"]) for c in dep["constructs"])
            ))
        return cls(
            app["name"],
            app.get("version", ""),
            tuple(Construct.from_json(c, app["name"]) for c in data.get("app_constructs", [])),
            tuple(entries),
            tuple(data.get("warnings", [])),
            tuple((e["module"], e["line"], e["col"], e["message"])
                  for e in data.get("parse_errors", [])),
        )


def load_bom(path: Union[str, os.PathLike]) -> BillOfMaterials:
    try:
        return BillOfMaterials.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise BomError(f"{path}: not a bill of materials ({exc})") from None


def build_bom(app_dir: Union[str, os.PathLike]) -> BillOfMaterials:
    """Extract the application, then each dependency in depth-first order."""
    app_dir = Path(app_dir)
    manifest_path = app_dir / "package.json"
    if not manifest_path.is_file():
        raise BomError(f"{manifest_path}: package.json not found")
    manifest: Manifest = parse_manifest(manifest_path.read_text(encoding="utf-8"),
                                        str(manifest_path))
    errors: list[tuple[str, int, int, str]] = []
    app_constructs = extract_package(app_dir, Fqn.root(manifest.name), errors)
    graph, warnings = resolve(app_dir, manifest)
    warnings = list(warnings)

    entries = []
    for index in graph.depth_first():
        node = graph.nodes[index]
        pkg_dir = app_dir / node.path
        if not pkg_dir.is_dir():
            msg = f"{node.path}: dependency {node.name}@{node.version} missing on disk"
            log.warning("%s", msg)
            warnings.append(msg)
            continue
        constructs = extract_package(pkg_dir, Fqn.root(node.name), errors)
        entries.append(DepEntry(node, tuple(constructs)))

    return BillOfMaterials(
        manifest.name,
        manifest.version,
        tuple(app_constructs),
        tuple(entries),
        tuple(warnings),
        tuple(errors),
    )


@dataclass(frozen=True)
class Distribution:
    label: str
    median: float
    min: float
    max: float
    q1: float
    q3: float
    sd: float
    sd_defined: bool = True

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "median": self.median,
            "min": self.min,
            "max": self.max,
            "q1": self.q1,
            "q3": self.q3,
            "sd": self.sd,
            "sd_defined": self.sd_defined,
        }


def describe(label: str, values: Sequence[float]) -> Distribution:
    """Median, range, inclusive quartiles and sample standard deviation.

    With a single value the deviation is undefined; it is reported as 0 and
    flagged through ``sd_defined``.
    """
    if not values:
        raise ValueError("no values to summarise")
    data = sorted(values)
    if len(data) == 1:
        v = data[0]
        return Distribution(label, v, v, v, v, v, 0.0, sd_defined=False)
    q1, _, q3 = statistics.quantiles(data, n=4, method="inclusive")
    return Distribution(
        label,
        statistics.median(data),
        data[0],
        data[-1],
        q1,
        q3,
        statistics.stdev(data),
    )


@dataclass(frozen=True)
class SummaryTable:
    constructs: tuple[Distribution, ...]
    dependencies: tuple[Distribution, ...]
    count: int = 0

    def to_json(self) -> dict:
        return {
            "boms": self.count,
            "constructs": [d.to_json() for d in self.constructs],
            "dependencies": [d.to_json() for d in self.dependencies],
        }


def summarize(boms: Sequence[BillOfMaterials]) -> SummaryTable:
    if not boms:
        raise ValueError("summarize needs at least one bill of materials")
    stats = [b.stats for b in boms]
    return SummaryTable(
        constructs=(
            describe("# App Consts.", [s.app_count for s in stats]),
            describe("# Dep Consts.", [s.dep_count for s in stats]),
            describe("# App + Dep Consts.", [s.total for s in stats]),
        ),
        dependencies=(
            describe("# All Dep.", [s.dependencies for s in stats]),
            describe("# Runtime Dep.", [s.runtime_dependencies for s in stats]),
            describe("# Test Dep.", [s.test_dependencies for s in stats]),
        ),
        count=len(boms),
    )


def _fmt(x: float) -> str:
    if float(x).is_integer():
        return f"{int(x):,}"
    return f"{x:,.2f}"


def render_summary(table: SummaryTable) -> str:
    columns = ["Median", "Min", "Max", "Q1", "Q3", "SD"]
    lines = []
    for title, rows in (("# Dependencies", table.dependencies), ("# Constructs", table.constructs)):
        body = [
            [r.label, *(_fmt(v) for v in (r.median, r.min, r.max, r.q1, r.q3)),
             _fmt(r.sd) + ("" if r.sd_defined else "*")]
            for r in rows
        ]
        header = [title, *columns]
        widths = [max(len(row[k]) for row in [header, *body]) for k in range(len(header))]
        fmt_row = lambda row: "  ".join(  # noqa: E731
            cell.ljust(w) if k == 0 else cell.rjust(w) for k, (cell, w) in enumerate(zip(row, widths))
        )
        lines.append(fmt_row(header))
        lines.append("-" * len(lines[-1]))
        lines.extend(fmt_row(r) for r in body)
        lines.append("")
    if table.count == 1:
        lines.append("* standard deviation undefined for a single application")
    return "\n".join(lines).rstrip() + "\n"
