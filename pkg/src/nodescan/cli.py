"""Command-line front end.

Exit codes: 0 success (for ``scan``: no vulnerable finding), 1 ``scan`` found
at least one vulnerable dependency, 2 operational error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .bom import BomError, build_bom, load_bom, render_summary, summarize
from .deps import LockfileError, ManifestError
from .detect import VULNERABLE, detect, render_table, table_to_json, tabulate_findings
from .kb import KBError, build_signature, diff_trees, kb_load, kb_save

log = logging.getLogger("nodescan")

EXIT_OK = 0
EXIT_VULNERABLE = 1
EXIT_ERROR = 2

_OPERATIONAL = (BomError, KBError, ManifestError, LockfileError, OSError, ValueError)


def _dump(data) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False, sort_keys=False) + "\n"


def _write(text: str, output: Optional[str]) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _change_counts(counts: dict[str, dict[str, int]]) -> dict[str, str]:
    return {kind: ", ".join(f"{t}:{n}" for t, n in sorted(tally.items()))
            for kind, tally in counts.items()}


def render_scan_text(report: dict, table) -> str:
    app = report["application"]
    lines = [f"{app['name']}@{app['version']}: {len(report['findings'])} finding(s)", ""]
    for f in report["findings"]:
        d = f["dependency"]
        lines.append(f"[{f['status'].upper()}] {f['vuln_id']} in {d['name']}@{d['version']} "
                     f"({d['path']}; {d['scope']}, {d['depth']})")
        for m in f["matches"]:
            lines.append(f"    {m['change']:<8} {m['type']} {m['bom_fqn']}  -> {m['evidence']}")
    if report["findings"]:
        lines.append("")
    lines.append("Vulnerable dependencies by feature")
    lines.append(render_table(table))
    for w in report["warnings"]:
        lines.append(f"warning: {w}")
    return "\n".join(lines).rstrip() + "\n"


def cmd_scan(args: argparse.Namespace) -> int:
    app_dir, kb_dir = Path(args.app_dir), Path(args.kb)
    if not app_dir.is_dir():
        raise BomError(f"{app_dir}: application directory not found")
    if not kb_dir.is_dir():
        raise KBError(f"{kb_dir}: knowledge base directory not found")
    bom = build_bom(app_dir)
    kb = kb_load(kb_dir)
    if not args.include_dev:
        bom = bom.without_test_dependencies()
    findings = detect(bom, kb)
    table = tabulate_findings(findings)
    report = {
        "application": {"name": bom.name, "version": bom.version},
        "include_dev": args.include_dev,
        "signatures": len(kb),
        "findings": [f.to_json() for f in findings],
        "table": table_to_json(table),
        "summary": {
            status: sum(f.status == status for f in findings)
            for status in ("vulnerable", "fixed", "inconclusive")
        },
        "warnings": list(bom.warnings),
    }
    if args.format == "json":
        text = _dump(report)
    else:
        text = render_scan_text(report, table)
    _write(text, args.output)
    return EXIT_VULNERABLE if any(f.status == VULNERABLE for f in findings) else EXIT_OK


def cmd_bom(args: argparse.Namespace) -> int:
    bom = build_bom(args.app_dir)
    _write(_dump(bom.to_json()), args.output)
    return EXIT_OK


def cmd_kb_diff(args: argparse.Namespace) -> int:
    changes = diff_trees(args.before, args.after, args.package)
    if not changes:
        log.warning("no code change detected between %s and %s", args.before, args.after)
    if args.format == "text":
        counts = _change_counts(changes.counts())
        text = "".join(f"{kind:<9} {counts[kind] or '-'}\n"
                       for kind in ("added", "modified", "removed"))
    else:
        text = _dump({"package_name": args.package, **changes.to_json(),
                      "counts": changes.counts()})
    _write(text, args.output)
    return EXIT_OK


def cmd_kb_add(args: argparse.Namespace) -> int:
    sig = build_signature(args.vuln_id, args.package, args.before, args.after, args.provenance)
    path = kb_save(sig, args.kb)
    counts = _change_counts(sig.changes.counts())
    print(f"{path}: added [{counts['added']}] modified [{counts['modified']}] "
          f"removed [{counts['removed']}]")
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    table = summarize([load_bom(p) for p in args.bom_files])
    text = _dump(table.to_json()) if args.format == "json" else render_summary(table)
    _write(text, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nodescan",
        description="Code-centric detection of known vulnerabilities in Node.js dependencies.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="detect vulnerable code in an application's dependencies")
    p.add_argument("app_dir")
    p.add_argument("--kb", required=True, help="directory of signature files")
    dev = p.add_mutually_exclusive_group()
    dev.add_argument("--include-dev", dest="include_dev", action="store_true", default=True,
                     help="scan test (dev) dependencies too (default)")
    dev.add_argument("--no-dev", dest="include_dev", action="store_false",
                     help="skip test-scope dependencies")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("bom", help="write the bill of materials as JSON")
    p.add_argument("app_dir")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bom)

    kb = sub.add_parser("kb", help="vulnerability knowledge base")
    kb_sub = kb.add_subparsers(dest="kb_command", required=True)
    p = kb_sub.add_parser("diff", help="construct changes between two source trees")
    p.add_argument("before")
    p.add_argument("after")
    p.add_argument("--package", required=True, help="package name used as the name root")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_kb_diff)

    p = kb_sub.add_parser("add", help="build a signature and store it in the knowledge base")
    p.add_argument("vuln_id")
    p.add_argument("before")
    p.add_argument("after")
    p.add_argument("--package", required=True)
    p.add_argument("--kb", required=True)
    p.add_argument("--provenance", default="", help="fix commit references")
    p.set_defaults(func=cmd_kb_add)

    p = sub.add_parser("stats", help="summary statistics over bill-of-materials files")
    p.add_argument("bom_files", nargs="+")
    p.add_argument("--format", choices=("json", "text"), default="text")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except _OPERATIONAL as exc:
        print(f"nodescan: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
