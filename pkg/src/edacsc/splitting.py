"""Split long aligned sentences into short aligned segments.

Long sentences with several typos are hard positives; clause-sized pieces
carry at most a typo or two each and add clean segments that rebalance the
corpus.  Splitting happens at punctuation delimiters found in the target
and verified to match the source, so segment pairs stay aligned by
construction.

A split point is a maximal run of adjacent delimiter matches (so "?!" or
"……" followed by "。" cut once, not twice).  When a typo overlaps a
delimiter match, that match cannot serve as a split point; policy ``skip``
drops just that point and counts it, policy ``reject`` discards the whole
sample.
"""

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .base import CorpusTransform, ordered_parallel_map
from .corpus import METHOD_SPLIT, AugmentedRecord, ParallelSample, derive_errors
from .datasets import DatasetStats
from .errors import DelimiterTypoError, ValidationError

# Full-width sentence punctuation, plus the ASCII and ellipsis forms that
# show up in mixed-script corpora.  Longer delimiters must win over their
# prefixes ("......" over "...", "……" over "…").
DEFAULT_DELIMITERS: tuple[str, ...] = (
    "......",
    "……",
    "...",
    "…",
    "。",
    "，",
    "！",
    "？",
    ",",
    ".",
    "!",
    "?",
)

ON_DELIMITER_TYPO = ("skip", "reject")


@dataclass
class SplitCounters:
    """Per-sample accounting a caller can pass in to observe suppression."""

    suppressed_split_points: int = 0


def _prepare_delimiters(delimiters: Optional[Sequence[str]]) -> tuple[str, ...]:
    delims = tuple(delimiters) if delimiters is not None else DEFAULT_DELIMITERS
    if not delims:
        raise ValidationError("delimiter set is empty")
    for d in delims:
        if not d:
            raise ValidationError("delimiter set contains an empty string")
    # Longest first so multi-character delimiters are matched greedily.
    return tuple(sorted(set(delims), key=lambda d: (-len(d), d)))


def _match_delimiter(text: str, i: int, delims: Sequence[str]) -> Optional[str]:
    for d in delims:
        if text.startswith(d, i):
            return d
    return None


def _delimiter_runs(
    sample: ParallelSample,
    delims: Sequence[str],
    on_delimiter_typo: str,
    counters: Optional[SplitCounters],
) -> list[tuple[int, int]]:
    """Locate aligned delimiter runs in the target as (start, end) spans."""
    source, target = sample.source, sample.target
    runs: list[tuple[int, int]] = []
    i, n = 0, len(target)
    while i < n:
        d = _match_delimiter(target, i, delims)
        if d is None:
            i += 1
            continue
        j = i + len(d)
        if source[i:j] != d:
            # The typo sits on the delimiter itself; this position cannot
            # separate two aligned segments.
            if on_delimiter_typo == "reject":
                raise DelimiterTypoError(
                    f"sample {sample.id!r}: typo overlaps delimiter {d!r} at position {i}"
                )
            if counters is not None:
                counters.suppressed_split_points += 1
            i = j
            continue
        if runs and runs[-1][1] == i:
            runs[-1] = (runs[-1][0], j)
        else:
            runs.append((i, j))
        i = j
    return runs


def _segment_spans(
    n: int, runs: Sequence[tuple[int, int]], attach_delimiter: bool
) -> list[tuple[int, int]]:
    spans: list[tuple[int, int]] = []
    prev = 0
    for start, end in runs:
        cut = end if attach_delimiter else start
        if cut > prev:
            spans.append((prev, cut))
        prev = end
    if n > prev:
        spans.append((prev, n))
    return spans


def _merge_short(spans: list[tuple[int, int]], min_chars: int) -> list[tuple[int, int]]:
    """Fold segments shorter than ``min_chars`` into a neighbor.

    A short segment merges into the one that follows it; a short tail
    merges back into the previous one.  Merging takes the span union, so
    with ``attach_delimiter=False`` the delimiters between the two pieces
    reappear inside the merged segment.
    """
    if min_chars <= 1 or len(spans) <= 1:
        return spans
    merged: list[tuple[int, int]] = []
    carry: Optional[int] = None
    last = len(spans) - 1
    for i, (start, end) in enumerate(spans):
        if carry is not None:
            start = carry
            carry = None
        if end - start < min_chars:
            if i < last:
                carry = start
            elif merged:
                merged[-1] = (merged[-1][0], end)
            else:
                merged.append((start, end))
        else:
            merged.append((start, end))
    return merged


def split_sample(
    sample: ParallelSample,
    delimiters: Optional[Sequence[str]] = None,
    attach_delimiter: bool = True,
    min_segment_chars: int = 2,
    emit_error_free_segments: bool = True,
    on_delimiter_typo: str = "skip",
    counters: Optional[SplitCounters] = None,
) -> list[AugmentedRecord]:
    """Split one sample into aligned segment records.

    Segment ids are ``<origin>#s<k>`` with ``k`` the zero-based index among
    the emitted segments.  With the defaults (delimiters attached, no
    minimum length filter active on well-formed text, error-free segments
    kept) concatenating the segments in index order reproduces the origin
    pair exactly.
    """
    if on_delimiter_typo not in ON_DELIMITER_TYPO:
        raise ValidationError(
            f"unknown on_delimiter_typo policy {on_delimiter_typo!r} "
            f"(expected one of {ON_DELIMITER_TYPO})"
        )
    if min_segment_chars < 0:
        raise ValidationError("min_segment_chars must be >= 0")
    delims = _prepare_delimiters(delimiters)
    errors = derive_errors(sample)

    runs = _delimiter_runs(sample, delims, on_delimiter_typo, counters)
    spans = _segment_spans(len(sample.target), runs, attach_delimiter)
    spans = _merge_short(spans, min_segment_chars)

    records: list[AugmentedRecord] = []
    k = 0
    ei = 0
    for start, end in spans:
        while ei < len(errors) and errors[ei] < start:
            ei += 1
        has_typo = ei < len(errors) and errors[ei] < end
        if not emit_error_free_segments and not has_typo:
            continue
        segment = ParallelSample(
            id=f"{sample.id}#s{k}",
            source=sample.source[start:end],
            target=sample.target[start:end],
        )
        records.append(
            AugmentedRecord(
                sample=segment,
                origin_id=sample.id,
                method=METHOD_SPLIT,
                segment_index=k,
            )
        )
        k += 1
    return records


@dataclass
class SplitReport:
    """Corpus-level accounting for one split run."""

    samples_in: int = 0
    records_out: int = 0
    suppressed_split_points: int = 0
    samples_with_suppressed_split: int = 0
    samples_rejected: int = 0
    stats: DatasetStats = field(default_factory=DatasetStats)

    def to_json(self) -> dict:
        return {
            "samples_in": self.samples_in,
            "records_out": self.records_out,
            "suppressed_split_points": self.suppressed_split_points,
            "samples_with_suppressed_split": self.samples_with_suppressed_split,
            "samples_rejected": self.samples_rejected,
            "stats": self.stats.to_json(),
        }


def split_corpus(
    samples: Iterable[ParallelSample],
    delimiters: Optional[Sequence[str]] = None,
    attach_delimiter: bool = True,
    min_segment_chars: int = 2,
    emit_error_free_segments: bool = True,
    on_delimiter_typo: str = "skip",
    report: Optional[SplitReport] = None,
    threads: int = 1,
) -> Iterator[AugmentedRecord]:
    """Split a corpus stream; lazy over input, eager per sample.

    ``report`` (if given) is filled while the generator is consumed.  With
    policy ``reject``, offending samples are dropped and counted rather
    than raised, so one bad sample cannot abort a long run.
    """

    def one(sample: ParallelSample):
        counters = SplitCounters()
        try:
            records = split_sample(
                sample,
                delimiters=delimiters,
                attach_delimiter=attach_delimiter,
                min_segment_chars=min_segment_chars,
                emit_error_free_segments=emit_error_free_segments,
                on_delimiter_typo=on_delimiter_typo,
                counters=counters,
            )
        except DelimiterTypoError:
            return None, counters
        return records, counters

    for records, counters in ordered_parallel_map(one, samples, threads):
        if report is not None:
            report.samples_in += 1
            report.suppressed_split_points += counters.suppressed_split_points
            if counters.suppressed_split_points:
                report.samples_with_suppressed_split += 1
            if records is None:
                report.samples_rejected += 1
        if records is None:
            continue
        for record in records:
            if report is not None:
                report.records_out += 1
                report.stats.add(record.sample)
            yield record


class SentenceSplitter(CorpusTransform):
    """Transformer interface over ``split_sample``.

    ``transform`` maps a sequence of samples to the concatenated list of
    segment records.  Stateless; ``fit`` is a no-op.
    """

    def __init__(
        self,
        delimiters: Optional[Sequence[str]] = None,
        attach_delimiter: bool = True,
        min_segment_chars: int = 2,
        emit_error_free_segments: bool = True,
        on_delimiter_typo: str = "skip",
    ):
        self.delimiters = delimiters
        self.attach_delimiter = attach_delimiter
        self.min_segment_chars = min_segment_chars
        self.emit_error_free_segments = emit_error_free_segments
        self.on_delimiter_typo = on_delimiter_typo

    def _transform_sample(self, sample: ParallelSample) -> list[AugmentedRecord]:
        return split_sample(
            sample,
            delimiters=self.delimiters,
            attach_delimiter=self.attach_delimiter,
            min_segment_chars=self.min_segment_chars,
            emit_error_free_segments=self.emit_error_free_segments,
            on_delimiter_typo=self.on_delimiter_typo,
        )
