"""Reading the benchmark split files and computing recurrency statistics."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

SPLITS = ("train", "valid", "test")


class DataError(Exception):
    """Raised for unreadable, malformed or inconsistent dataset files."""


@dataclass
class Dataset:
    """Densified splits; each split is an ``(n, 4)`` int64 array of ``s, r, o, t``.

    ``num_rels`` counts forward relations only. Inverses are added on the fly
    by :func:`augment_inverses`.
    """

    name: str
    num_entities: int
    num_rels: int
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    num_timesteps: dict[str, int] = field(default_factory=dict)
    raw_times: np.ndarray | None = None
    relation_labels: dict[int, str] | None = None
    entity_labels: dict[int, str] | None = None

    def split(self, name: str) -> np.ndarray:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}")
        return getattr(self, name)


@dataclass
class DatasetStats:
    dataset: str
    nodes: int
    rels: int
    train: int
    valid: int
    test: int
    drec: float
    rec: float
    timesteps: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = ["dataset", "nodes", "rels", "train", "valid", "test", "drec", "rec"]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        row = asdict(self)
        writer.writerow([row[c] for c in cols])
        return buf.getvalue()

    def table_row(self) -> str:
        return (
            f"{self.dataset:<10} {self.nodes:>7} {self.rels:>5} {self.train:>9} {self.valid:>8} "
            f"{self.test:>8} {self.timesteps:>12} {100 * self.drec:6.1f} {100 * self.rec:6.1f}"
        )


def load_split(path) -> np.ndarray:
    """Parse a whitespace separated ``s r o t [extra]`` file into an ``(n, 4)`` array."""
    path = Path(path)
    rows = []
    try:
        fh = open(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) < 4:
                raise DataError(f"{path}:{lineno}: expected at least 4 columns, got {len(parts)}")
            try:
                rows.append([int(p) for p in parts[:4]])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer field in {line.strip()!r}") from None
    if any(v < 0 for row in rows for v in row):
        raise DataError(f"{path}: negative id or timestamp")
    return np.asarray(rows, dtype=np.int64).reshape(-1, 4)


def densify_timesteps(train, valid, test):
    """Map the sorted unique raw timestamps of all splits onto ``0, 1, 2, ...``.

    Returns the three remapped arrays plus the raw timestamp of each dense index.
    """
    splits = [np.asarray(a, dtype=np.int64).reshape(-1, 4) for a in (train, valid, test)]
    bounds = [(a[:, 3].min(), a[:, 3].max()) for a in splits if len(a)]
    for (_, hi), (lo, _) in zip(bounds, bounds[1:]):
        if lo <= hi:
            raise DataError(
                f"split ordering violated: a later split starts at raw time {lo} "
                f"but an earlier split reaches {hi}"
            )
    raw = np.unique(np.concatenate([a[:, 3] for a in splits]))
    out = []
    for a in splits:
        b = a.copy()
        b[:, 3] = np.searchsorted(raw, a[:, 3])
        out.append(b)
    return out[0], out[1], out[2], raw


def augment_inverses(quads, num_rels: int) -> np.ndarray:
    """Interleave every ``(s, r, o, t)`` with its inverse ``(o, r + num_rels, s, t)``."""
    quads = np.asarray(quads, dtype=np.int64).reshape(-1, 4)
    if len(quads) and quads[:, 1].max() >= num_rels:
        raise ValueError("relation id out of forward range; inverses already added?")
    inv = quads[:, [2, 1, 0, 3]].copy()
    inv[:, 1] += num_rels
    out = np.empty((2 * len(quads), 4), dtype=np.int64)
    out[0::2] = quads
    out[1::2] = inv
    return out


def _read_labels(path: Path) -> dict[int, str] | None:
    if not path.exists():
        return None
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if len(parts) >= 2 and parts[-1].strip().lstrip("-").isdigit():
                labels[int(parts[-1])] = parts[0]
    return labels


def load_dataset(directory, name: str | None = None) -> Dataset:
    """Load ``train.txt``, ``valid.txt`` and ``test.txt`` from ``directory``.

    Vocabulary sizes come from ``stat.txt`` (first two fields) when present,
    otherwise from the largest id seen in any split.
    """
    directory = Path(directory)
    missing = [f"{s}.txt" for s in SPLITS if not (directory / f"{s}.txt").is_file()]
    if missing:
        raise DataError(f"{directory}: missing split file(s): {', '.join(missing)}")
    raw = [load_split(directory / f"{s}.txt") for s in SPLITS]
    train, valid, test, raw_times = densify_timesteps(*raw)
    allq = np.concatenate([train, valid, test])
    if not len(allq):
        raise DataError(f"{directory}: all splits are empty")
    num_entities = int(max(allq[:, 0].max(), allq[:, 2].max())) + 1
    num_rels = int(allq[:, 1].max()) + 1
    stat = directory / "stat.txt"
    if stat.is_file():
        fields = stat.read_text().split()
        try:
            num_entities, num_rels = max(num_entities, int(fields[0])), max(num_rels, int(fields[1]))
        except (IndexError, ValueError):
            logger.warning("ignoring unparsable %s", stat)
    counts = {s: int(len(np.unique(a[:, 3]))) for s, a in zip(SPLITS, (train, valid, test))}
    return Dataset(
        name=name or directory.name,
        num_entities=num_entities,
        num_rels=num_rels,
        train=train,
        valid=valid,
        test=test,
        num_timesteps=counts,
        raw_times=raw_times,
        relation_labels=_read_labels(directory / "relation2id.txt"),
        entity_labels=_read_labels(directory / "entity2id.txt"),
    )


def compute_stats(ds: Dataset) -> DatasetStats:
    """Count sizes and the (direct) recurrency degree of the test split.

    A test fact at ``t`` is recurrent if its triple holds at any earlier
    timestep of train, valid or test; it is directly recurrent if it holds at
    ``t - 1``.
    """
    history = np.concatenate([ds.train, ds.valid])
    last_seen: dict[tuple[int, int, int], int] = {}
    for s, r, o, t in history.tolist():
        key = (s, r, o)
        if last_seen.get(key, -1) < t:
            last_seen[key] = t
    test = ds.test[np.argsort(ds.test[:, 3], kind="stable")]
    rec = drec = 0
    i = 0
    rows = test.tolist()
    while i < len(rows):
        t = rows[i][3]
        j = i
        while j < len(rows) and rows[j][3] == t:
            j += 1
        batch = rows[i:j]
        for s, r, o, _ in batch:
            seen = last_seen.get((s, r, o))
            if seen is not None:
                rec += 1
                # last_seen only holds times < t here, so the last one decides
                drec += seen == t - 1
        for s, r, o, _ in batch:
            last_seen[(s, r, o)] = t
        i = j
    n = len(rows)
    ts = ds.num_timesteps or {k: len(np.unique(ds.split(k)[:, 3])) for k in SPLITS}
    return DatasetStats(
        dataset=ds.name,
        nodes=ds.num_entities,
        rels=ds.num_rels,
        train=len(ds.train),
        valid=len(ds.valid),
        test=n,
        drec=drec / n if n else 0.0,
        rec=rec / n if n else 0.0,
        timesteps=f"{ts.get('train', 0)}/{ts.get('valid', 0)}/{ts.get('test', 0)}",
    )
