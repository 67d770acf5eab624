import json
import logging
import shutil

import pytest

from nodescan.deps import (
    DanglingDependencyError,
    DependencyGraph,
    ManifestError,
    UnsupportedLockfileError,
    classify,
    parse_lockfile,
    parse_manifest,
    resolve,
    walk_node_modules,
)

from conftest import PROJECT_A

PROJECT_A_MANIFEST = """{
  "name": "ProjectA",
  "version": "1.0.0",
  "dependencies": {
    "moment": "2.25.3"
  },
  "devDependencies": {
    "debug": "3.0.0"
  }
}"""


def manifest_a():
    return parse_manifest((PROJECT_A / "package.json").read_text())


def lock_a():
    return parse_lockfile((PROJECT_A / "package-lock.json").read_text())


def named_edges(graph):
    return sorted(
        (graph.nodes[a].name + ("@" + graph.nodes[a].version if a else ""),
         graph.nodes[b].name + "@" + graph.nodes[b].version)
        for a, b in graph.edges
    )


def features(graph):
    return {n.name: (n.scope, n.depth) for n in graph.dependencies}


def canonical(graph: DependencyGraph):
    """Index-free form for isomorphism checks (paths are unique per node)."""
    nodes = {(n.name, n.version, n.path, n.scope, n.depth) for n in graph.nodes}
    edges = {(graph.nodes[a].path, graph.nodes[b].path) for a, b in graph.edges}
    return nodes, edges


class TestManifest:
    def test_project_a_manifest(self):
        m = parse_manifest(PROJECT_A_MANIFEST)
        assert m.dependencies == {"moment": "2.25.3"}
        assert m.dev_dependencies == {"debug": "3.0.0"}

    def test_missing_maps_are_empty(self):
        m = parse_manifest('{"name":"x","version":"0.0.1"}')
        assert m.dependencies == {} and m.dev_dependencies == {}

    def test_conflicting_declaration(self):
        with pytest.raises(ManifestError, match="conflicting declaration"):
            parse_manifest('{"name":"x","dependencies":{"a":"1"},"devDependencies":{"a":"2"}}')

    def test_identical_overlap_is_allowed(self):
        m = parse_manifest('{"name":"x","dependencies":{"a":"1"},"devDependencies":{"a":"1"}}')
        assert m.declared == {"a"}

    def test_malformed_json_names_byte_offset(self):
        with pytest.raises(ManifestError, match="byte offset 14"):
            parse_manifest('{"name": "é" x}')

    def test_missing_name(self):
        with pytest.raises(ManifestError, match="name"):
            parse_manifest('{"version": "1.0.0"}')


class TestLockfile:
    def test_project_a_lockfile_edges(self):
        assert named_edges(lock_a()) == [
            ("ProjectA", "debug@4.1.1"),
            ("ProjectA", "moment@2.25.3"),
            ("debug@4.1.1", "ms@2.1.2"),
        ]

    def test_root_only(self):
        g = parse_lockfile('{"lockfileVersion": 3, "packages": {"": {"name": "x"}}}')
        assert len(g.nodes) == 1 and g.edges == ()
        assert classify(g, parse_manifest('{"name":"x"}')).dependencies == ()

    def test_dangling_reference(self):
        text = json.dumps({
            "lockfileVersion": 2,
            "packages": {
                "": {"name": "x", "dependencies": {"debug": "4"}},
                "node_modules/debug": {"version": "4.1.1", "dependencies": {"ms": "^2"}},
            },
        })
        with pytest.raises(DanglingDependencyError, match="ms") as info:
            parse_lockfile(text)
        assert info.value.names == ["ms"]

    def test_missing_optional_is_tolerated(self):
        text = json.dumps({
            "lockfileVersion": 3,
            "packages": {"": {"name": "x", "optionalDependencies": {"fsevents": "2"}}},
        })
        assert len(parse_lockfile(text).nodes) == 1

    def test_version_one_is_unsupported(self):
        with pytest.raises(UnsupportedLockfileError, match="node_modules"):
            parse_lockfile('{"name": "x", "lockfileVersion": 1, "dependencies": {}}')

    def test_nearest_ancestor_resolution(self):
        text = json.dumps({
            "lockfileVersion": 3,
            "packages": {
                "": {"name": "x", "dependencies": {"a": "1", "ms": "1"}},
                "node_modules/a": {"version": "1.0.0", "dependencies": {"ms": "2"}},
                "node_modules/a/node_modules/ms": {"version": "2.0.0"},
                "node_modules/ms": {"version": "1.0.0"},
            },
        })
        g = parse_lockfile(text)
        edges = {(g.nodes[a].path, g.nodes[b].path) for a, b in g.edges}
        assert ("node_modules/a", "node_modules/a/node_modules/ms") in edges
        assert ("", "node_modules/ms") in edges

    def test_cycles_are_broken(self):
        text = json.dumps({
            "lockfileVersion": 3,
            "packages": {
                "": {"name": "x", "dependencies": {"a": "1"}},
                "node_modules/a": {"version": "1.0.0", "dependencies": {"b": "1"}},
                "node_modules/b": {"version": "1.0.0", "dependencies": {"a": "1"}},
            },
        })
        g = parse_lockfile(text)
        assert named_edges(g) == [("a@1.0.0", "b@1.0.0"), ("x", "a@1.0.0")]

    def test_unreachable_entries_are_dropped(self):
        text = json.dumps({
            "lockfileVersion": 3,
            "packages": {"": {"name": "x"}, "node_modules/extraneous": {"version": "1.0.0"}},
        })
        assert len(parse_lockfile(text).nodes) == 1

    def test_scoped_package_names(self):
        text = json.dumps({
            "lockfileVersion": 3,
            "packages": {
                "": {"name": "x", "dependencies": {"@s/p": "1"}},
                "node_modules/@s/p": {"version": "1.0.0"},
            },
        })
        assert parse_lockfile(text).nodes[1].name == "@s/p"


class TestClassify:
    def test_project_a_features(self):
        g = classify(lock_a(), manifest_a())
        assert features(g) == {
            "moment": ("runtime", "direct"),
            "debug": ("test", "direct"),
            "ms": ("test", "transitive"),
        }

    def test_runtime_dominates(self):
        text = json.dumps({
            "lockfileVersion": 3,
            "packages": {
                "": {"name": "x", "dependencies": {"moment": "1"}, "devDependencies": {"debug": "1"}},
                "node_modules/moment": {"version": "1.0.0", "dependencies": {"shared": "1"}},
                "node_modules/debug": {"version": "1.0.0", "dependencies": {"shared": "1"}},
                "node_modules/shared": {"version": "1.0.0"},
            },
        })
        m = parse_manifest('{"name":"x","dependencies":{"moment":"1"},"devDependencies":{"debug":"1"}}')
        assert features(classify(parse_lockfile(text), m))["shared"] == ("runtime", "transitive")

    def test_nested_copy_of_direct_dependency_is_transitive(self):
        text = json.dumps({
            "lockfileVersion": 3,
            "packages": {
                "": {"name": "x", "devDependencies": {"debug": "4", "mocha": "1"}},
                "node_modules/debug": {"version": "4.1.1"},
                "node_modules/mocha": {"version": "1.0.0", "dependencies": {"debug": "3"}},
                "node_modules/mocha/node_modules/debug": {"version": "3.2.6"},
            },
        })
        m = parse_manifest('{"name":"x","devDependencies":{"debug":"4","mocha":"1"}}')
        g = classify(parse_lockfile(text), m)
        got = {n.path: (n.scope, n.depth) for n in g.dependencies}
        assert got["node_modules/debug"] == ("test", "direct")
        assert got["node_modules/mocha/node_modules/debug"] == ("test", "transitive")

    def test_idempotent_and_partitioned(self):
        once = classify(lock_a(), manifest_a())
        assert classify(once, manifest_a()) == once
        scopes = [n.scope for n in once.dependencies]
        assert all(s in ("runtime", "test") for s in scopes)

    def test_direct_nodes_are_declared(self):
        m = manifest_a()
        g = classify(lock_a(), m)
        direct = {n.name for n in g.dependencies if n.depth == "direct"}
        assert direct == m.declared

    def test_dev_flag_mismatch_warns(self, caplog):
        text = json.dumps({
            "lockfileVersion": 3,
            "packages": {
                "": {"name": "x", "dependencies": {"a": "1"}},
                "node_modules/a": {"version": "1.0.0", "dev": True},
            },
        })
        with caplog.at_level(logging.WARNING):
            g = classify(parse_lockfile(text), parse_manifest('{"name":"x","dependencies":{"a":"1"}}'))
        assert g.nodes[1].scope == "runtime"
        assert "dev=True" in caplog.text


class TestWalker:
    def test_isomorphic_to_lockfile(self):
        m = manifest_a()
        assert canonical(classify(walk_node_modules(PROJECT_A), m)) == canonical(classify(lock_a(), m))

    def test_empty_node_modules(self, tmp_path):
        (tmp_path / "package.json").write_text('{"name": "x"}')
        (tmp_path / "node_modules").mkdir()
        g = walk_node_modules(tmp_path)
        assert len(g.nodes) == 1 and g.edges == ()

    def test_missing_node_modules(self, tmp_path):
        (tmp_path / "package.json").write_text('{"name": "x"}')
        with pytest.raises(FileNotFoundError, match="npm install"):
            walk_node_modules(tmp_path)

    def test_nested_copy_wins(self, project_a):
        nested = project_a / "node_modules" / "debug" / "node_modules" / "ms"
        shutil.copytree(project_a / "node_modules" / "ms", nested)
        manifest = json.loads((nested / "package.json").read_text())
        manifest["version"] = "2.0.0"
        (nested / "package.json").write_text(json.dumps(manifest))
        g = walk_node_modules(project_a)
        edges = {(g.nodes[a].path, g.nodes[b].path) for a, b in g.edges}
        assert ("node_modules/debug", "node_modules/debug/node_modules/ms") in edges
        assert ("node_modules/debug", "node_modules/ms") not in edges

    def test_scoped_and_hidden_entries(self, tmp_path):
        (tmp_path / "package.json").write_text('{"name": "x", "dependencies": {"@s/p": "1"}}')
        pkg = tmp_path / "node_modules" / "@s" / "p"
        pkg.mkdir(parents=True)
        (pkg / "package.json").write_text('{"name": "@s/p", "version": "1.0.0"}')
        (tmp_path / "node_modules" / ".bin").mkdir()
        g = walk_node_modules(tmp_path)
        assert [(n.name, n.path) for n in g.dependencies] == [("@s/p", "node_modules/@s/p")]

    def test_resolve_falls_back_to_walker(self, project_a, caplog):
        lock = project_a / "package-lock.json"
        lock.write_text('{"name": "ProjectA", "lockfileVersion": 1, "dependencies": {}}')
        graph, warnings = resolve(project_a, manifest_a())
        assert canonical(graph) == canonical(classify(lock_a(), manifest_a()))
        assert warnings and "lockfileVersion 1" in warnings[0]


def test_graph_json_shape():
    data = classify(lock_a(), manifest_a()).to_json()
    assert data["nodes"][0] == {"name": "ProjectA", "version": "1.0.0", "path": "", "scope": None, "depth": None}
    assert set(data["nodes"][1]) == {"name", "version", "path", "scope", "depth"}
    assert all(len(e) == 2 for e in data["edges"])
