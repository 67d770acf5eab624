import json
import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
PROJECT_A = FIXTURES / "ProjectA"
KB_DIR = FIXTURES / "kb"
VULNS = FIXTURES / "vulns"

# criterion id -> (description, passed)
ACCEPTANCE_RESULTS: dict[str, tuple[str, bool]] = {}


@pytest.fixture
def project_a(tmp_path):
    """A writable copy of the ProjectA application."""
    dest = tmp_path / "ProjectA"
    shutil.copytree(PROJECT_A, dest)
    return dest


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split("-")[1])):
        desc, ok = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {desc}")


def apply_fix(app_dir: Path) -> Path:
    """Replace the installed debug sources with the post-fix tree."""
    src = app_dir / "node_modules" / "debug" / "src"
    shutil.rmtree(src)
    shutil.copytree(VULNS / "CVE-2017-16137" / "after" / "src", src)
    return app_dir


def repackage(app_dir: Path, new_name: str) -> Path:
    """Rename the installed debug package wholesale (directory, manifests, lockfile)."""
    modules = app_dir / "node_modules"
    (modules / "debug").rename(modules / new_name)
    dep_manifest = modules / new_name / "package.json"
    data = json.loads(dep_manifest.read_text())
    data["name"] = new_name
    dep_manifest.write_text(json.dumps(data, indent=2))

    manifest = app_dir / "package.json"
    data = json.loads(manifest.read_text())
    data["devDependencies"] = {new_name: data["devDependencies"].pop("debug")}
    manifest.write_text(json.dumps(data, indent=2))

    lock = app_dir / "package-lock.json"
    data = json.loads(lock.read_text())
    packages = data["packages"]
    packages[""]["devDependencies"] = {new_name: packages[""]["devDependencies"].pop("debug")}
    packages[f"node_modules/{new_name}"] = packages.pop("node_modules/debug")
    lock.write_text(json.dumps(data, indent=2))
    return app_dir


def fake_bom(app: int, deps):
    """A bill of materials with *app* application constructs and one entry per
    ``(scope, construct_count)`` in *deps*; every construct is a directory PACK."""
    from nodescan.bom import BillOfMaterials, DepEntry
    from nodescan.constructs import EMPTY_DIGEST, Construct, ConstructType, Fqn
    from nodescan.deps import DependencyNode

    def packs(root, n):
        top = Fqn.root(root)
        return (Construct(ConstructType.PACK, top, (1, 1, 1, 1), EMPTY_DIGEST),) + tuple(
            Construct(ConstructType.PACK, top.child(f"d{k}"), (1, 1, 1, 1), EMPTY_DIGEST, top)
            for k in range(n - 1)
        )

    entries = tuple(
        DepEntry(DependencyNode(f"p{k}", "1.0.0", f"node_modules/p{k}", scope, "direct"),
                 packs(f"p{k}", size))
        for k, (scope, size) in enumerate(deps)
    )
    return BillOfMaterials("app", "1.0.0", packs("app", app), entries)
