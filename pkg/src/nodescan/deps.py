"""npm manifests, lockfiles and the resolved dependency graph."""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Union

log = logging.getLogger(__name__)

RUNTIME = "runtime"
TEST = "test"
DIRECT = "direct"
TRANSITIVE = "transitive"


class ManifestError(ValueError):
    pass


class LockfileError(ValueError):
    pass


class UnsupportedLockfileError(LockfileError):
    pass


class DanglingDependencyError(LockfileError):
    def __init__(self, names: Iterable[str], message: str) -> None:
        super().__init__(message)
        self.names = sorted(set(names))


@dataclass(frozen=True)
class Manifest:
    name: str
    version: str = ""
    dependencies: dict[str, str] = field(default_factory=dict)
    dev_dependencies: dict[str, str] = field(default_factory=dict)
    optional_dependencies: dict[str, str] = field(default_factory=dict)
    peer_dependencies: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for dep in sorted(set(self.dependencies) & set(self.dev_dependencies)):
            if self.dependencies[dep] != self.dev_dependencies[dep]:
                raise ManifestError(
                    f"conflicting declaration of {dep!r}: dependencies "
                    f"{self.dependencies[dep]!r} vs devDependencies {self.dev_dependencies[dep]!r}"
                )

    @property
    def declared(self) -> set[str]:
        return set(self.dependencies) | set(self.dev_dependencies)


def _string_map(data: dict, key: str, where: str) -> dict[str, str]:
    value = data.get(key) or {}
    if not isinstance(value, dict):
        raise ManifestError(f"{where}: {key!r} must be an object")
    return {str(k): str(v) for k, v in value.items()}


def manifest_from_dict(data: dict, where: str = "package.json", require_name: bool = True) -> Manifest:
    if not isinstance(data, dict):
        raise ManifestError(f"{where}: top-level value must be an object")
    name = data.get("name")
    if not isinstance(name, str) or not name:
        if require_name:
            raise ManifestError(f"{where}: missing \"name\"")
        name = ""
    version = data.get("version")
    return Manifest(
        name=name,
        version=version if isinstance(version, str) else "",
        dependencies=_string_map(data, "dependencies", where),
        dev_dependencies=_string_map(data, "devDependencies", where),
        optional_dependencies=_string_map(data, "optionalDependencies", where),
        peer_dependencies=_string_map(data, "peerDependencies", where),
    )


def _load_json(text: str, where: str, error: type) -> object:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise error(f"{where}: malformed JSON at byte offset {offset}: {exc.msg}") from None


def parse_manifest(text: str, where: str = "package.json") -> Manifest:
    return manifest_from_dict(_load_json(text, where, ManifestError), where)


@dataclass(frozen=True)
class DependencyNode:
    name: str
    version: str
    path: str  # install path relative to the app, "" for the root
    scope: Optional[str] = None
    depth: Optional[str] = None
    lock_dev: Optional[bool] = field(default=None, compare=False)

    @property
    def identity(self) -> tuple[str, str, str]:
        return self.name, self.version, self.path


@dataclass(frozen=True)
class DependencyGraph:
    """Resolved install tree. ``nodes[0]`` is the application itself."""

    nodes: tuple[DependencyNode, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def root(self) -> DependencyNode:
        return self.nodes[0]

    @property
    def dependencies(self) -> tuple[DependencyNode, ...]:
        return self.nodes[1:]

    @cached_property
    def _adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {}
        for a, b in self.edges:
            adj.setdefault(a, []).append(b)
        for kids in adj.values():
            kids.sort(key=lambda k: (self.nodes[k].name, self.nodes[k].path))
        return adj

    def children(self, index: int) -> list[int]:
        return list(self._adjacency.get(index, ()))

    def depth_first(self) -> list[int]:
        """Dependency indices in depth-first order, children sorted by name."""
        order: list[int] = []
        seen = {0}

        def visit(i: int) -> None:
            for k in self.children(i):
                if k not in seen:
                    seen.add(k)
                    order.append(k)
                    visit(k)

        visit(0)
        return order

    def to_json(self) -> dict:
        return {
            "nodes": [
                {"name": n.name, "version": n.version, "path": n.path,
                 "scope": n.scope, "depth": n.depth}
                for n in self.nodes
            ],
            "edges": [list(e) for e in self.edges],
        }


def _nearest(packages: dict[str, dict], from_path: str, name: str) -> Optional[str]:
    """npm's lookup: nearest enclosing node_modules holding *name*."""
    base = from_path
    while True:
        candidate = f"{base}/node_modules/{name}" if base else f"node_modules/{name}"
        if candidate in packages:
            return candidate
        if not base:
            return None
        cut = base.rfind("/node_modules/")
        base = base[:cut] if cut >= 0 else ""


def _name_from_path(path: str) -> str:
    return path.rsplit("node_modules/", 1)[-1]


def _build_graph(packages: dict[str, dict], strict: bool) -> DependencyGraph:
    """Depth-first construction from a lockfile-style ``packages`` map."""
    index: dict[str, int] = {}
    nodes: list[DependencyNode] = []
    edges: list[tuple[int, int]] = []
    edge_set: set[tuple[int, int]] = set()
    on_stack: set[str] = set()
    dangling: list[str] = []

    def add(path: str) -> int:
        entry = packages[path]
        if path:
            name = entry.get("name") or _name_from_path(path)
        else:
            name = entry.get("name") or ""
        dev = entry.get("dev")
        index[path] = len(nodes)
        nodes.append(
            DependencyNode(name, str(entry.get("version", "")), path,
                           lock_dev=dev if isinstance(dev, bool) else None)
        )
        return index[path]

    def declared(entry: dict, is_root: bool) -> list[tuple[str, bool]]:
        """(name, required) pairs; optional and peer misses are tolerated."""
        out: dict[str, bool] = {}
        for key, required in (("peerDependencies", False), ("optionalDependencies", False),
                              ("dependencies", True)):
            for dep in entry.get(key) or {}:
                out[dep] = out.get(dep, False) or required
        if is_root:
            for dep in entry.get("devDependencies") or {}:
                out[dep] = True
        return sorted(out.items())

    def visit(path: str) -> None:
        me = index[path]
        on_stack.add(path)
        for dep, required in declared(packages[path], not path):
            target = _nearest(packages, path, dep)
            if target is None:
                if required:
                    dangling.append(dep)
                continue
            if target in on_stack:
                log.debug("cycle %s -> %s dropped", path or "<root>", target)
                continue
            fresh = target not in index
            if fresh:
                add(target)
            if (me, index[target]) not in edge_set:
                edge_set.add((me, index[target]))
                edges.append((me, index[target]))
            if fresh:
                visit(target)
        on_stack.discard(path)

    add("")
    visit("")
    if dangling:
        names = sorted(set(dangling))
        message = f"unresolved dependencies: {', '.join(names)}"
        if strict:
            raise DanglingDependencyError(names, message)
        log.warning("%s (not installed?)", message)
    return DependencyGraph(tuple(nodes), tuple(edges))


def _follow_links(packages: dict[str, dict]) -> dict[str, dict]:
    """Replace workspace ``link`` entries by the entry they point at."""
    out = {}
    for path, entry in packages.items():
        if isinstance(entry, dict) and entry.get("link") and entry.get("resolved") in packages:
            entry = {**packages[entry["resolved"]], "name": entry.get("name") or _name_from_path(path)}
        out[path] = entry
    return out


def parse_lockfile(text: str, where: str = "package-lock.json") -> DependencyGraph:
    data = _load_json(text, where, LockfileError)
    if not isinstance(data, dict):
        raise LockfileError(f"{where}: top-level value must be an object")
    version = data.get("lockfileVersion")
    packages = data.get("packages")
    if version not in (2, 3) or not isinstance(packages, dict):
        raise UnsupportedLockfileError(
            f"{where}: lockfileVersion {version!r} is not supported (need 2 or 3 with a "
            "\"packages\" map); scan the installed node_modules tree instead"
        )
    packages = {k: v for k, v in packages.items() if isinstance(v, dict)}
    root = dict(packages.get("", {}))
    root.setdefault("name", data.get("name", ""))
    root.setdefault("version", data.get("version", ""))
    packages[""] = root
    return _build_graph(_follow_links(packages), strict=True)


def _read_manifest_dict(path: Path) -> Optional[dict]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        log.warning("skipping %s: %s", path, exc)
        return None
    return data if isinstance(data, dict) else None


def _installed(node_modules: Path, prefix: str, packages: dict[str, dict]) -> None:
    try:
        entries = sorted(os.scandir(node_modules), key=lambda e: e.name)
    except OSError:
        return
    for entry in entries:
        if entry.name.startswith(".") or not entry.is_dir():
            continue
        if entry.name.startswith("@"):
            scoped = [(f"{entry.name}/{e.name}", Path(e.path))
                      for e in sorted(os.scandir(entry.path), key=lambda e: e.name)
                      if e.is_dir() and not e.name.startswith(".")]
        else:
            scoped = [(entry.name, Path(entry.path))]
        for name, pkg_dir in scoped:
            data = _read_manifest_dict(pkg_dir / "package.json")
            if data is None:
                continue
            path = f"{prefix}node_modules/{name}"
            packages[path] = {
                "name": name,
                "version": data.get("version", ""),
                "dependencies": data.get("dependencies") or {},
                "optionalDependencies": data.get("optionalDependencies") or {},
                "peerDependencies": data.get("peerDependencies") or {},
            }
            if (pkg_dir / "node_modules").is_dir():
                _installed(pkg_dir / "node_modules", path + "/", packages)


def walk_node_modules(app_dir: Union[str, os.PathLike]) -> DependencyGraph:
    """Rebuild the graph from installed packages when no usable lockfile exists."""
    app_dir = Path(app_dir)
    node_modules = app_dir / "node_modules"
    if not node_modules.is_dir():
        raise FileNotFoundError(
            f"{node_modules} not found; install the dependencies (npm install) first"
        )
    manifest = parse_manifest((app_dir / "package.json").read_text(encoding="utf-8"),
                              str(app_dir / "package.json"))
    packages: dict[str, dict] = {
        "": {
            "name": manifest.name,
            "version": manifest.version,
            "dependencies": manifest.dependencies,
            "devDependencies": manifest.dev_dependencies,
            "optionalDependencies": manifest.optional_dependencies,
        }
    }
    _installed(node_modules, "", packages)
    return _build_graph(packages, strict=False)


def classify(graph: DependencyGraph, root_manifest: Manifest) -> DependencyGraph:
    """Fill scope (runtime/test) and depth (direct/transitive) on every dependency.

    A node is direct when the application itself depends on it, and runtime
    when some path from the application reaches it through a production
    (``dependencies``/``optionalDependencies``) edge first.
    """
    production = set(root_manifest.dependencies) | set(root_manifest.optional_dependencies)
    runtime: set[int] = set()
    reached: set[int] = set()
    direct = set(graph.children(0))

    def spread(start: int, into: set[int]) -> None:
        stack = [start]
        while stack:
            i = stack.pop()
            if i in into:
                continue
            into.add(i)
            stack.extend(graph.children(i))

    for child in sorted(direct):
        spread(child, reached)
        if graph.nodes[child].name in production:
            spread(child, runtime)

    nodes = [graph.root]
    for i, node in enumerate(graph.nodes[1:], start=1):
        scope = RUNTIME if i in runtime else TEST
        classified = replace(node, scope=scope, depth=DIRECT if i in direct else TRANSITIVE)
        if node.lock_dev is not None and node.lock_dev != (scope == TEST):
            log.warning(
                "%s: lockfile marks dev=%s but it is reachable as a %s dependency",
                node.path, node.lock_dev, scope,
            )
        nodes.append(classified)
    return DependencyGraph(tuple(nodes), graph.edges)


def resolve(app_dir: Union[str, os.PathLike], manifest: Manifest) -> tuple[DependencyGraph, list[str]]:
    """Resolve the dependency graph of *app_dir*, preferring the lockfile.

    Returns the classified graph and human-readable warnings.
    """
    app_dir = Path(app_dir)
    warnings: list[str] = []
    lock = app_dir / "package-lock.json"
    graph = None
    if lock.is_file():
        try:
            graph = parse_lockfile(lock.read_text(encoding="utf-8"), str(lock.name))
        except UnsupportedLockfileError as exc:
            warnings.append(str(exc))
    if graph is None:
        try:
            graph = walk_node_modules(app_dir)
        except FileNotFoundError as exc:
            if manifest.declared:
                warnings.append(str(exc))
            graph = DependencyGraph((DependencyNode(manifest.name, manifest.version, ""),), ())
    for w in warnings:
        log.warning("%s", w)
    return classify(graph, manifest), warnings
