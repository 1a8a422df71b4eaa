"""Output files, manifests and the orphan-file audit."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

MANIFEST = "manifest.json"
MANIFEST_SCHEMA_VERSION = 1


def jsonable(obj):
    """Plain JSON types; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dump_json(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    if v is None:
        return ""
    return v


class ArtifactWriter:
    """Writes files under ``root`` and remembers them for one manifest."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.files: list[str] = []

    def path(self, rel: str) -> Path:
        return self.root / rel

    def text(self, rel: str, content: str) -> str:
        p = self.path(rel)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(content)
        self.files.append(rel)
        return rel

    def json(self, rel: str, obj) -> str:
        return self.text(rel, dump_json(obj))

    def csv(self, rel: str, header, rows) -> str:
        return self.text(rel, csv_text(header, rows))

    def svg(self, rel: str, fig) -> str:
        p = self.path(rel)
        p.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(p, format="svg", metadata={"Date": None})
        self.files.append(rel)
        return rel

    def manifest(self, extra: dict) -> Path:
        doc = dict(extra)
        doc["schema_version"] = MANIFEST_SCHEMA_VERSION
        doc["files"] = {rel: sha256_file(self.path(rel)) for rel in sorted(self.files)}
        p = self.path(MANIFEST)
        p.write_text(dump_json(doc))
        return p


def read_manifest(root: Path) -> dict:
    doc = json.loads((Path(root) / MANIFEST).read_text())
    if doc.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise ValueError(f"unsupported manifest schema_version {doc.get('schema_version')!r}")
    return doc


def audit(out_dir: Path) -> list[str]:
    """Problems found: missing or altered files, orphans, double listings."""
    out_dir = Path(out_dir)
    owners: dict[Path, list[Path]] = {}
    problems = []
    manifests = sorted(out_dir.rglob(MANIFEST))
    for m in manifests:
        doc = read_manifest(m.parent)
        for rel, digest in doc["files"].items():
            p = (m.parent / rel).resolve()
            owners.setdefault(p, []).append(m)
            if not p.exists():
                problems.append(f"missing: {p.relative_to(out_dir.resolve())}")
            elif sha256_file(p) != digest:
                problems.append(f"modified: {p.relative_to(out_dir.resolve())}")
    for p, ms in owners.items():
        if len(ms) > 1:
            problems.append(f"listed in {len(ms)} manifests: {p.relative_to(out_dir.resolve())}")
    listed = set(owners)
    for p in sorted(out_dir.rglob("*")):
        if p.is_file() and p.name != MANIFEST and p.resolve() not in listed:
            problems.append(f"orphan: {p.relative_to(out_dir)}")
    return problems
