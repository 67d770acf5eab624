"""Code-centric vulnerability detection for Node.js applications.

The pipeline extracts program constructs from an application and its npm
dependencies (the bill of materials), builds vulnerability signatures by
diffing a package before and after its fix, and reports dependencies that
still contain the vulnerable code.
"""

__version__ = "0.1.0"

from .bom import BillOfMaterials, build_bom, summarize
from .constructs import Construct, ConstructType, Fqn, build_fqn, normalize_and_digest, relative_fqn
from .deps import classify, parse_lockfile, parse_manifest, walk_node_modules
from .detect import Finding, detect, tabulate_findings
from .extractor import SourceModule, extract_package, parse_module
from .kb import VulnSignature, build_signature, diff_constructs, kb_load, kb_save

__all__ = [
    "BillOfMaterials", "Construct", "ConstructType", "Finding", "Fqn", "SourceModule",
    "VulnSignature", "build_bom", "build_fqn", "build_signature", "classify", "detect",
    "diff_constructs", "extract_package", "kb_load", "kb_save", "normalize_and_digest",
    "parse_lockfile", "parse_manifest", "parse_module", "relative_fqn", "summarize",
    "tabulate_findings", "walk_node_modules",
]
