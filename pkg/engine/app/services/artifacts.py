import csv
import hashlib
import json
import math
import zipfile
from pathlib import Path
from typing import Iterable, Sequence

from .. import __version__

# ZIP entries carry this timestamp so identical runs give identical bundles
BUNDLE_EPOCH = (1980, 1, 1, 0, 0, 0)


def compute_sha256(filepath: Path) -> str:
    """Compute SHA-256 hash of a file"""
    sha256_hash = hashlib.sha256()
    with open(filepath, "rb") as f:
        for byte_block in iter(lambda: f.read(4096), b""):
            sha256_hash.update(byte_block)
    return sha256_hash.hexdigest()


def _plain(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def canonical_json(data) -> str:
    """Sorted keys, compact separators, shortest round-trip floats."""
    return json.dumps(_plain(data), sort_keys=True, separators=(",", ":"))


def content_hash(data) -> str:
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def format_float(value: float) -> str:
    return format(value, ".17g")


def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[dict], config_hash: str) -> Path:
    """CSV with a provenance comment line, 17 significant digits and '\\n' endings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"# config_hash={config_hash} version={__version__}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row[c]) for c in columns])
    return path


def write_json(path: Path, payload: dict, config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"config_hash": config_hash, "version": __version__, **payload}
    text = json.dumps(_plain(document), sort_keys=True, indent=2)
    with open(path, "w", newline="\n", encoding="utf-8") as f:
        f.write(text + "\n")
    return path


def build_bundle(out_dir: Path, files: Sequence[Path], name: str = "bundle.zip") -> tuple[Path, str]:
    """Deterministic ZIP of the run's artifacts; returns (path, sha256)."""
    out_dir = Path(out_dir)
    zip_path = out_dir / name
    with zipfile.ZipFile(zip_path, "w", zipfile.ZIP_DEFLATED) as zipf:
        for path in sorted((Path(p) for p in files), key=lambda p: p.name):
            info = zipfile.ZipInfo(path.name, date_time=BUNDLE_EPOCH)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zipf.writestr(info, path.read_bytes())
    return zip_path, compute_sha256(zip_path)
