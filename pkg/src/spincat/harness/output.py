"""Deterministic writers: CSV tables, a JSON sidecar, optional SVG quick-looks.

Float cells use 17 significant digits so equal runs produce byte-identical
files on any platform with IEEE doubles.
"""

from __future__ import annotations

import json
from pathlib import Path

from .experiments import RunRecord


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path: Path, columns, rows) -> None:
    lines = [",".join(columns)]
    lines.extend(",".join(format_cell(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def write_record(record: RunRecord, out_dir, fmt: str = "csv") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "csv":
        main = out / f"{record.experiment}.csv"
        write_csv(main, record.columns, record.rows)
        written.append(main)
        for name, (columns, rows) in sorted(record.extra_tables.items()):
            extra = out / f"{record.experiment}_{name}.csv"
            write_csv(extra, columns, rows)
            written.append(extra)
        sidecar = out / f"{record.experiment}_sidecar.json"
        sidecar.write_text(json.dumps(record.sidecar, indent=2, sort_keys=True) + "\n")
        written.append(sidecar)
    elif fmt == "json":
        payload = {
            "experiment": record.experiment,
            "columns": list(record.columns),
            "rows": [list(r) for r in record.rows],
            "extra_tables": {
                name: {"columns": list(cols), "rows": [list(r) for r in rows]}
                for name, (cols, rows) in record.extra_tables.items()
            },
            "sidecar": record.sidecar,
        }
        main = out / f"{record.experiment}.json"
        main.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        written.append(main)
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    return written


def render_quicklook(record: RunRecord, out_dir) -> Path | None:
    """Static SVG plot of the main table; needs the optional matplotlib extra."""
    try:
        import matplotlib
        matplotlib.use("svg")
        import matplotlib.pyplot as plt
    except ImportError:
        return None

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    cols = record.columns
    if "series" in cols:
        si = cols.index("series")
        xi = 0
        yi = cols.index("error")
        ei = cols.index("error_sigma") if "error_sigma" in cols else None
        for series in sorted({row[si] for row in record.rows}):
            pts = [row for row in record.rows if row[si] == series]
            x = [p[xi] for p in pts]
            y = [p[yi] for p in pts]
            yerr = [p[ei] for p in pts] if ei is not None else None
            ax.errorbar(x, y, yerr=yerr, marker="o", linestyle="-", label=series)
        ax.legend()
        ax.set_xlabel(cols[xi])
        ax.set_ylabel("error")
    else:
        x = [row[0] for row in record.rows]
        y = [row[1] for row in record.rows]
        ax.plot(x, y, marker="o")
        ax.set_xlabel(cols[0])
        ax.set_ylabel(cols[1])
    ax.set_title(record.experiment)
    path = out / f"{record.experiment}.svg"
    fig.savefig(path)
    plt.close(fig)
    return path
