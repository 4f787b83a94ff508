"""Delimited output, JSON summaries, gnuplot scripts and run manifests.

Floats are written with ``repr`` so a rerun reproduces files byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import platform
from pathlib import Path

import numpy as np


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_csv(path: Path, header: list[str], rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) if x else np.nan for x in r] for r in rows[1:]])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj))
    return path


def trajectory_rows(times, states):
    for t, p in zip(times, states):
        for k, v in enumerate(p):
            yield (float(t), k, float(v))


def field_rows(times, nodes, fields):
    for t, u in zip(times, fields):
        for x, v in zip(nodes, u):
            yield (float(t), float(x), float(v))


def gnuplot_script(
    data: str,
    columns: list[tuple[int, int, str]],
    xlabel: str,
    ylabel: str,
    title: str,
    logscale: str = "",
    png: str | None = None,
) -> str:
    """A self-contained gnuplot script plotting ``data`` (CSV with a header)."""
    out = png or Path(data).with_suffix(".gp.png").name
    lines = [
        "# gnuplot script; run with: gnuplot " + Path(data).with_suffix(".gp").name,
        "set terminal pngcairo size 800,600",
        f'set output "{out}"',
        'set datafile separator ","',
        f'set title "{title}"',
        f'set xlabel "{xlabel}"',
        f'set ylabel "{ylabel}"',
        "set key top right",
    ]
    if logscale:
        lines.append(f"set logscale {logscale}")
    plots = [f'"{data}" using {x}:{y} every ::1 with linespoints title "{label}"' for x, y, label in columns]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def write_gnuplot(path: Path, *args, **kwargs) -> Path:
    path = Path(path)
    path.write_text(gnuplot_script(*args, **kwargs))
    return path


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict:
    import matplotlib
    import scipy

    from . import __version__

    return {
        "fokkerlab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "python": platform.python_version(),
    }


def write_manifest(outdir: Path, command: str, config: dict, digest: str, wall_time: float | None) -> Path:
    """``manifest.json`` listing the config, versions, wall time and file hashes.

    ``wall_time`` is ``None`` unless timings were requested, which keeps the
    manifest itself reproducible.
    """
    outdir = Path(outdir)
    files = {
        p.name: file_digest(p) for p in sorted(outdir.iterdir()) if p.is_file() and p.name != "manifest.json"
    }
    return write_json(
        outdir / "manifest.json",
        {
            "command": command,
            "config": config,
            "config_digest": digest,
            "versions": versions(),
            "wall_time": wall_time,
            "files": files,
        },
    )
