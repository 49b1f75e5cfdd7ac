"""Data model for parallel spelling-correction corpora.

A corpus is a sequence of aligned sentence pairs: ``source`` is the text as
written (possibly containing typos) and ``target`` is the corrected text.
Typos are single-character substitutions, so both sides of a pair always
have the same number of characters and error positions are well defined.
A character is one Unicode code point; Python string indexing already
matches that convention.
"""

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import LengthMismatchError, ValidationError

METHOD_ORIGINAL = "original"
METHOD_SPLIT = "split"
METHOD_REDUCE = "reduce"
METHODS = (METHOD_ORIGINAL, METHOD_SPLIT, METHOD_REDUCE)


@dataclass(frozen=True)
class ParallelSample:
    """One aligned (source, target) sentence pair."""

    id: str
    source: str
    target: str


def derive_errors(sample: ParallelSample) -> tuple[int, ...]:
    """Return the typo positions of ``sample`` in ascending order.

    Error positions are never stored; they are always recomputed from the
    pair so they cannot drift out of sync with the text.
    """
    if len(sample.source) != len(sample.target):
        raise LengthMismatchError(
            f"sample {sample.id!r}: source has {len(sample.source)} characters "
            f"but target has {len(sample.target)}"
        )
    return tuple(
        j for j, (s, t) in enumerate(zip(sample.source, sample.target)) if s != t
    )


@dataclass(frozen=True)
class AugmentedRecord:
    """A sample plus the provenance of the augmentation that produced it.

    ``segment_index`` is set for method ``split`` (zero-based position of the
    segment among the emitted segments of its origin).  ``retained`` is set
    for method ``reduce`` (origin-coordinate typo positions kept in the
    variant).  Records with method ``original`` are unmodified pass-throughs
    and carry neither.
    """

    sample: ParallelSample
    origin_id: str
    method: str
    segment_index: Optional[int] = None
    retained: Optional[tuple[int, ...]] = None

    @property
    def id(self) -> str:
        return self.sample.id


def passthrough(sample: ParallelSample) -> AugmentedRecord:
    """Wrap a sample as its own unmodified augmentation output."""
    return AugmentedRecord(sample=sample, origin_id=sample.id, method=METHOD_ORIGINAL)


@dataclass
class Violation:
    """One validation failure, identified by record id or file line."""

    record_id: str
    reason: str
    message: str

    def to_json(self) -> dict:
        return {"record": self.record_id, "reason": self.reason, "message": self.message}


@dataclass
class ValidationReport:
    """Outcome of validating a corpus stream.

    ``violations`` keeps at most ``max_violations`` entries; ``invalid``
    keeps counting past the cap.
    """

    valid: int = 0
    invalid: int = 0
    max_violations: int = 20
    violations: list = field(default_factory=list)

    def record(self, record_id: str, reason: str, message: str) -> None:
        self.invalid += 1
        if len(self.violations) < self.max_violations:
            self.violations.append(Violation(record_id, reason, message))

    @property
    def ok(self) -> bool:
        return self.invalid == 0

    @property
    def truncated(self) -> bool:
        return self.invalid > len(self.violations)

    def to_json(self) -> dict:
        out = {
            "valid": self.valid,
            "invalid": self.invalid,
            "ok": self.ok,
            "violations": [v.to_json() for v in self.violations],
        }
        if self.truncated:
            out["violations_truncated"] = True
        return out


def validate_corpus(
    samples: Iterable[ParallelSample],
    report: Optional[ValidationReport] = None,
    max_violations: int = 20,
) -> ValidationReport:
    """Check corpus invariants over a stream of samples.

    Streams in one pass; only the set of seen ids is held in memory.
    Checked per sample: non-empty id, non-empty source and target, equal
    source/target length, id unique within the corpus.  A sample counts as
    invalid once even if it breaks several rules.
    """
    if report is None:
        report = ValidationReport(max_violations=max_violations)
    seen: set[str] = set()
    for sample in samples:
        label = sample.id if sample.id else "<missing id>"
        if not sample.id:
            report.record(label, "empty-id", "record has an empty id")
            continue
        if not sample.source or not sample.target:
            report.record(label, "empty-sentence", f"sample {sample.id!r}: source or target is empty")
            continue
        if len(sample.source) != len(sample.target):
            report.record(
                label,
                "length-mismatch",
                f"sample {sample.id!r}: source has {len(sample.source)} characters "
                f"but target has {len(sample.target)}",
            )
            continue
        if sample.id in seen:
            report.record(label, "duplicate-id", f"id {sample.id!r} occurs more than once")
            continue
        seen.add(sample.id)
        report.valid += 1
    return report


def require_valid(samples: Iterable[ParallelSample]) -> None:
    """Raise ``ValidationError`` with the first violation, if any."""
    report = validate_corpus(samples, max_violations=1)
    if not report.ok:
        raise ValidationError(report.violations[0].message)
