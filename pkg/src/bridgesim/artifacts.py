"""Reading and writing run directories.

A run directory holds ``snapshots.csv``, ``windows.csv``, ``counters.csv``,
``stats.json`` and, when requested, ``events.log``.  Every file starts with
a ``#`` header line naming the tool version, seed and config digest.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Optional

from . import __version__
from .protocol import SELF
from .radio import TrafficCounters
from .scenarios import RunArtifacts, SnapshotRow, WindowRow


class MissingArtifactError(FileNotFoundError):
    pass


def header_line(seed: int, digest: str) -> str:
    return f"# bridgesim {__version__} seed={seed} config={digest}\n"


def _edge_text(e) -> str:
    return f"{e[0]}-{e[1]}"


def _parse_edge(text: str):
    a, b = text.split("-")
    return (int(a), int(b))


def _csv_text(header: str, columns: list[str], rows: Iterable[list]) -> str:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _data_lines(text: str) -> list[str]:
    return [ln for ln in text.splitlines() if ln and not ln.startswith("#")]


def write_csv(path: Path, header: str, columns: list[str], rows: Iterable[list]) -> None:
    path.write_text(_csv_text(header, columns, rows), encoding="utf-8")


def write_run(out_dir, art: RunArtifacts, seed: int, digest: str, extra: Optional[dict] = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    head = header_line(seed, digest)
    write_csv(out / "snapshots.csv", head, ["seq", "node", "is_articulation", "bridge_edge_list"],
              ([r.seq, r.node, int(r.is_articulation), ";".join(map(_edge_text, r.bridges))]
               for r in art.snapshots))
    write_csv(out / "windows.csv", head, ["seq", "node", "subject", "window"],
              ([w.seq, w.node, SELF if w.subject == SELF else _edge_text(w.subject),
                ";".join(f"{int(p)}:{c!r}" for p, c in w.window)] for w in art.windows))
    (out / "counters.csv").write_text(art.counters.to_csv(art.nodes, head), encoding="utf-8")
    meta = {
        "header": head.strip(),
        "nodes": art.nodes,
        "snapshot_times": {str(k): v for k, v in sorted(art.snapshot_times.items())},
        "evaluable": None if art.evaluable is None else [list(e) for e in sorted(art.evaluable)],
        "stats": art.stats,
        **(extra or {}),
    }
    (out / "stats.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    if art.event_log is not None:
        (out / "events.log").write_text(head + "\n".join(art.event_log) + "\n", encoding="utf-8")
    return out


def read_run(run_dir) -> RunArtifacts:
    d = Path(run_dir)
    needed = ["snapshots.csv", "counters.csv", "stats.json"]
    missing = [n for n in needed if not (d / n).is_file()]
    if missing:
        raise MissingArtifactError(f"{d}: missing {', '.join(missing)}")
    meta = json.loads((d / "stats.json").read_text(encoding="utf-8"))
    snapshots = []
    for row in csv.DictReader(_data_lines((d / "snapshots.csv").read_text(encoding="utf-8"))):
        edges = tuple(_parse_edge(x) for x in row["bridge_edge_list"].split(";") if x)
        snapshots.append(SnapshotRow(int(row["seq"]), int(row["node"]), row["is_articulation"] == "1", edges))
    windows = []
    if (d / "windows.csv").is_file():
        for row in csv.DictReader(_data_lines((d / "windows.csv").read_text(encoding="utf-8"))):
            subject = SELF if row["subject"] == SELF else _parse_edge(row["subject"])
            window = tuple((p == "1", float(c)) for p, c in (x.split(":") for x in row["window"].split(";") if x))
            windows.append(WindowRow(int(row["seq"]), int(row["node"]), subject, window))
    counters = TrafficCounters.from_csv((d / "counters.csv").read_text(encoding="utf-8"))
    evaluable = meta.get("evaluable")
    return RunArtifacts(
        nodes=list(meta["nodes"]),
        snapshots=snapshots,
        snapshot_times={int(k): v for k, v in meta["snapshot_times"].items()},
        windows=windows,
        counters=counters,
        stats=meta.get("stats", {}),
        evaluable=None if evaluable is None else frozenset(tuple(e) for e in evaluable),
    )
