"""CSV writing and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

from . import __version__


def fmt(v):
    """17 significant digits for floats; integers and strings unchanged."""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}"
    if hasattr(v, "dtype"):
        return fmt(v.item())
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return Path(path)


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _clean(obj):
    # JSON has no NaN/inf; store them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and hasattr(obj, "dtype"):
        return _clean(obj.item())
    return obj


def write_manifest(out_dir, cfg, metrics, flags, files, wall_time):
    """Write ``manifest.json`` atomically; returns its path."""
    out_dir = Path(out_dir)
    manifest = {
        "command": cfg.command,
        "config": cfg.echo(),
        "config_hash": cfg.config_hash,
        "version": __version__,
        "seed": cfg.seed,
        "metrics": metrics,
        "pass": flags,
        "all_pass": all(flags.values()) if flags else True,
        "wall_time_s": wall_time,
        "files": {Path(f).name: sha256_file(f) for f in files},
    }
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".manifest.", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(_clean(manifest), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, out_dir / "manifest.json")
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return out_dir / "manifest.json"
