"""Plain-text matrices, cohort manifests, signal tables and model directories."""
from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import NodeSignal
from .graph import GraphError, check_adjacency

_SPLIT = re.compile(r"[,\s]+")


class ParseError(ValueError):
    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path = str(path)
        self.line = line


class CohortError(ValueError):
    """A manifest entry that parses but violates the cohort invariants."""


class EmptyManifestError(CohortError):
    """The manifest lists no subjects."""


def read_matrix(path) -> np.ndarray:
    """Rows of comma- or whitespace-separated numbers; blank and '#' lines skipped."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(path, None, f"cannot read file ({exc.strerror})") from exc
    rows, width = [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            row = [float(tok) for tok in _SPLIT.split(line) if tok]
        except ValueError as exc:
            raise ParseError(path, lineno, f"non-numeric entry ({exc})") from exc
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(path, lineno, f"expected {width} columns, found {len(row)}")
        rows.append(row)
    if not rows:
        raise ParseError(path, None, "no matrix rows found")
    return np.array(rows, dtype=float)


def write_matrix(path, M) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for row in M:
            fh.write(" ".join("%.17g" % v for v in row) + "\n")


def _sniff_delimiter(header: str) -> str:
    return "\t" if "\t" in header else ","


def _read_rows(path, allow_empty: bool = False) -> tuple[list[str], list[tuple[int, list[str]]]]:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ParseError(path, None, f"cannot read file ({exc.strerror})") from exc
    numbered = [(i, ln) for i, ln in enumerate(lines, start=1)
                if ln.strip() and not ln.lstrip().startswith("#")]
    if not numbered:
        if allow_empty:
            return [], []
        raise ParseError(path, None, "file is empty")
    delim = _sniff_delimiter(numbered[0][1])
    parsed = [(i, [c.strip() for c in next(csv.reader([ln], delimiter=delim))]) for i, ln in numbered]
    return parsed[0][1], parsed[1:]


@dataclass(frozen=True)
class ManifestEntry:
    subject: str
    path: Path
    group: str


@dataclass
class CohortManifest:
    entries: list[ManifestEntry]
    source: Path | None = None
    signals: dict[str, Path] = field(default_factory=dict)

    @property
    def subjects(self) -> list[str]:
        return [e.subject for e in self.entries]

    @property
    def groups(self) -> list[str]:
        return [e.group for e in self.entries]


def read_manifest(path) -> CohortManifest:
    """Delimited table with columns subject_id, adjacency, group.

    Relative adjacency paths resolve against the manifest's directory. Rows
    whose subject_id is ``signal:<modality>`` register a signal table path
    in the adjacency column.
    """
    path = Path(path)
    header, rows = _read_rows(path, allow_empty=True)
    if not header:
        raise EmptyManifestError(f"{path}: manifest is empty")
    cols = [h.lower() for h in header]
    try:
        i_sub, i_adj = cols.index("subject_id"), cols.index("adjacency")
    except ValueError:
        raise ParseError(path, 1, "header must contain subject_id and adjacency columns") from None
    i_grp = cols.index("group") if "group" in cols else None
    entries, signals, seen = [], {}, set()
    for lineno, row in rows:
        if len(row) < len(cols):
            raise ParseError(path, lineno, f"expected {len(cols)} fields, found {len(row)}")
        sub, rel = row[i_sub], row[i_adj]
        target = Path(rel) if Path(rel).is_absolute() else path.parent / rel
        if sub.startswith("signal:"):
            signals[sub.split(":", 1)[1]] = target
            continue
        if sub in seen:
            raise ParseError(path, lineno, f"duplicate subject id {sub!r}")
        seen.add(sub)
        entries.append(ManifestEntry(sub, target, row[i_grp] if i_grp is not None else ""))
    if not entries:
        raise EmptyManifestError(f"{path}: manifest lists no subjects")
    return CohortManifest(entries, path, signals)


def load_cohort(manifest: CohortManifest) -> list[np.ndarray]:
    """Read and validate every adjacency matrix; errors name the subject."""
    if not manifest.entries:
        raise CohortError("manifest lists no subjects")
    mats, shape = [], None
    for e in manifest.entries:
        W = read_matrix(e.path)
        if shape is None:
            shape = W.shape
        elif W.shape != shape:
            raise CohortError(f"subject {e.subject}: matrix shape {W.shape} differs from {shape}")
        try:
            mats.append(check_adjacency(W))
        except GraphError as exc:
            raise CohortError(f"subject {e.subject}: {exc}") from exc
    return mats


def read_signal_table(path, n: int | None = None) -> list[NodeSignal]:
    """Rows of subject id, group label, then n feature values; first row is a header."""
    path = Path(path)
    _, rows = _read_rows(path)
    out = []
    for lineno, row in rows:
        if len(row) < 3:
            raise ParseError(path, lineno, "need subject id, group and at least one value")
        try:
            values = np.array([float(v) for v in row[2:]])
        except ValueError as exc:
            raise ParseError(path, lineno, f"non-numeric feature ({exc})") from exc
        if n is not None and values.size != n:
            raise ParseError(path, lineno, f"expected {n} features, found {values.size}")
        if not np.all(np.isfinite(values)):
            raise ParseError(path, lineno, "non-finite feature value")
        out.append(NodeSignal(row[0], values, row[1]))
    if not out:
        raise ParseError(path, None, "no signal rows found")
    return out


def write_signal_table(path, signals) -> None:
    n = len(signals[0].values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t")
        w.writerow(["subject_id", "group"] + [f"node{i + 1}" for i in range(n)])
        for s in signals:
            w.writerow([s.subject, s.group] + ["%.17g" % v for v in s.values])


def write_table(path, rows: list[dict], fieldnames=None) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    if fieldnames is None:
        fieldnames = list(rows[0]) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames, delimiter="\t")
        w.writeheader()
        for row in rows:
            w.writerow({k: ("%.17g" % v if isinstance(v, float) else v) for k, v in row.items()})


def write_json(path, doc) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(doc, indent=2, default=_jsonable) + "\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


MODEL_FILE = "model.json"


def load_model(directory) -> tuple[np.ndarray, dict]:
    """Common harmonics and metadata from a directory written by ``learn``."""
    directory = Path(directory)
    meta_path = directory / MODEL_FILE
    try:
        meta = json.loads(meta_path.read_text())
    except OSError as exc:
        raise ParseError(meta_path, None, f"cannot read model ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(meta_path, exc.lineno, f"invalid JSON ({exc.msg})") from exc
    return read_matrix(directory / meta["files"]["common"]), meta
