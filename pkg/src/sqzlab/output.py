"""Deterministic file emission for run results.

All floats are written with 12 significant digits so identical runs produce
byte-identical files; every JSON document embeds the config hash and seed.
"""

from __future__ import annotations

import json
from pathlib import Path

FLOAT_DIGITS = 12


def format_float(value: float) -> str:
    return f"{value:.{FLOAT_DIGITS}g}"


def _round_floats(obj):
    """Round every float in a JSON-ready structure to FLOAT_DIGITS digits."""
    if isinstance(obj, float):
        return float(format_float(obj))
    if isinstance(obj, dict):
        return {key: _round_floats(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(value) for value in obj]
    return obj


def dump_json(obj: dict) -> str:
    """Canonical JSON text: rounded floats, sorted keys, fixed layout."""
    return json.dumps(_round_floats(obj), sort_keys=True, indent=2) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_csv(path: Path, columns: list[str], rows: list[list]) -> None:
    lines = [",".join(columns)]
    lines.extend(",".join(_cell(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def write_run_files(payload: dict, out_dir: str) -> list[str]:
    """Write summary.json, table.csv and any record/wigner files.

    Args:
        payload: a RunResponse-shaped dict (the service JSON body).
        out_dir: destination directory, created if needed.

    Returns:
        The written file names.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stamp = {"mode": payload["mode"], "seed": payload["seed"],
             "config_hash": payload["config_hash"]}
    written = []

    summary = dict(stamp)
    summary["summary"] = payload["summary"]
    (out / "summary.json").write_text(dump_json(summary))
    written.append("summary.json")

    table = payload["table"]
    write_csv(out / "table.csv", table["columns"], table["rows"])
    written.append("table.csv")

    record = payload.get("record")
    if record is not None:
        write_csv(out / "record.csv", record["columns"], record["rows"])
        written.append("record.csv")
        sidecar = dict(stamp)
        sidecar["metadata"] = payload.get("record_meta", {})
        (out / "record.json").write_text(dump_json(sidecar))
        written.append("record.json")

    wigner = payload.get("wigner")
    if wigner is not None:
        rows = [[float(v) for v in row] for row in wigner["values"]]
        columns = [f"p{j}" for j in range(wigner["n_p"])]
        write_csv(out / "wigner.csv", columns, rows)
        written.append("wigner.csv")
        header = dict(stamp)
        header["window"] = {key: wigner[key] for key in
                            ("x_min", "x_max", "p_min", "p_max", "n_x", "n_p")}
        (out / "wigner.json").write_text(dump_json(header))
        written.append("wigner.json")
    return written
