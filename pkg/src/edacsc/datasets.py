"""Dataset-level operations: statistics, merging, training schedules.

Statistics are kept as exact integer totals (sentence count, typo count,
summed source length) so that merging two datasets is plain addition; the
average length is derived on demand and only rounded for display.
"""

import json
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from .corpus import AugmentedRecord, ParallelSample, derive_errors
from .errors import ScheduleError

Record = Union[ParallelSample, AugmentedRecord]


@dataclass
class DatasetStats:
    """Sentence count, typo count, and average source length of a corpus."""

    sentences: int = 0
    errors: int = 0
    total_source_chars: int = 0

    def add(self, sample: ParallelSample) -> None:
        self.sentences += 1
        self.errors += len(derive_errors(sample))
        self.total_source_chars += len(sample.source)

    def merged(self, other: "DatasetStats") -> "DatasetStats":
        return DatasetStats(
            sentences=self.sentences + other.sentences,
            errors=self.errors + other.errors,
            total_source_chars=self.total_source_chars + other.total_source_chars,
        )

    @property
    def degenerate(self) -> bool:
        return self.sentences == 0

    @property
    def avg_length(self) -> float:
        if self.sentences == 0:
            return 0.0
        return self.total_source_chars / self.sentences

    def to_json(self) -> dict:
        out = {
            "sentences": self.sentences,
            "avg_length": round(self.avg_length, 1),
            "errors": self.errors,
        }
        if self.degenerate:
            out["degenerate"] = True
        return out


def compute_stats(records: Iterable[Record]) -> DatasetStats:
    """Single-pass statistics over samples or augmented records."""
    stats = DatasetStats()
    for record in records:
        sample = record.sample if isinstance(record, AugmentedRecord) else record
        stats.add(sample)
    return stats


def _with_id(record: Record, new_id: str) -> Record:
    if isinstance(record, AugmentedRecord):
        return replace(record, sample=replace(record.sample, id=new_id))
    return replace(record, id=new_id)


def _record_id(record: Record) -> str:
    return record.id


def merge_corpora(
    a: Iterable[Record],
    b: Iterable[Record],
    collision_ids: Optional[set] = None,
) -> Iterator[Record]:
    """Concatenate two corpora, keeping duplicates and disambiguating ids.

    Merging never deduplicates: the output length is exactly ``len(a) +
    len(b)``.  Ids in ``collision_ids`` (the precomputed intersection of the
    two id sets) are rewritten to ``A:<id>`` / ``B:<id>``.  Without that
    set, collisions are detected against the ids already streamed from
    ``a`` and only the ``b`` side is rewritten; either way the merge of an
    empty corpus with ``b`` is ``b`` itself.
    """
    seen_a: set = set()
    for record in a:
        id_ = _record_id(record)
        if collision_ids is None:
            seen_a.add(id_)
        elif id_ in collision_ids:
            record = _with_id(record, f"A:{id_}")
        yield record
    for record in b:
        id_ = _record_id(record)
        if collision_ids is not None:
            if id_ in collision_ids:
                record = _with_id(record, f"B:{id_}")
        elif id_ in seen_a:
            record = _with_id(record, f"B:{id_}")
        yield record


def find_collisions(ids_a: Iterable[str], ids_b: Iterable[str]) -> set:
    """Ids present on both sides of a merge."""
    return set(ids_a) & set(ids_b)


# Training procedures over the three derived datasets plus the base corpus.
# Single-stage runs train from scratch on one dataset; two-stage runs start
# the second stage from the best checkpoint of the first.  Stage roles are
# named by how the dataset was produced: base (unaugmented), short (split
# segments), reduce (typo-reduced variants), merge (short + reduce).
PROCEDURES: dict[str, tuple[str, ...]] = {
    "a": ("base",),
    "b": ("short",),
    "c": ("reduce",),
    "d": ("merge",),
    "e": ("base", "short"),
    "f": ("short", "reduce"),
    "g": ("reduce", "short"),
}

INIT_FRESH = "fresh"
INIT_BEST = "best_of_previous"


def _stages(paths: Sequence[str]) -> list[dict]:
    return [
        {"dataset": path, "init": INIT_FRESH if i == 0 else INIT_BEST}
        for i, path in enumerate(paths)
    ]


def make_schedule(name: str, paths: Mapping[str, str]) -> dict:
    """Build the manifest for one named procedure.

    ``paths`` maps stage roles to dataset paths; only the roles the chosen
    procedure uses are required.
    """
    if name not in PROCEDURES:
        raise ScheduleError(
            f"unknown procedure {name!r} (expected one of {', '.join(sorted(PROCEDURES))})"
        )
    stage_paths = []
    for role in PROCEDURES[name]:
        path = paths.get(role)
        if not path:
            raise ScheduleError(f"procedure {name!r} needs a dataset path for role {role!r}")
        stage_paths.append(path)
    return {"name": name, "stages": _stages(stage_paths)}


def make_custom_schedule(first: str, second: str) -> dict:
    """Build a two-stage manifest over arbitrary dataset paths."""
    if not first or not second:
        raise ScheduleError("a custom schedule needs two dataset paths")
    return {"name": "custom", "stages": _stages([first, second])}


def write_manifest(manifest: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
