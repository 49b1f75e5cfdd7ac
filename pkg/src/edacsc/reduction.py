"""Expand multi-typo samples into lower-typo variants.

A sample with k >= 2 typos becomes one variant per retained subset of its
typo positions: the variant keeps the typo characters at the retained
positions and the corrected characters everywhere else, against the
unchanged target.  Retained subsets run over sizes 1..min(k-1,
max_variant_typos), so every variant is strictly easier than the original;
the original itself is appended as the final output when
``keep_original`` is true.  Samples with fewer than two typos pass through
untouched, as do samples above ``max_origin_typos`` when that cap is set.
"""

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .base import CorpusTransform, ordered_parallel_map
from .corpus import (
    METHOD_REDUCE,
    AugmentedRecord,
    ParallelSample,
    derive_errors,
    passthrough,
)
from .datasets import DatasetStats
from .errors import ValidationError


def enumerate_retained(
    positions: Sequence[int],
    max_variant_typos: int = 2,
    keep_original: bool = True,
    max_origin_typos: Optional[int] = None,
) -> list[tuple[int, ...]]:
    """Canonical list of retained-position subsets for one sample.

    Orders by subset size, then lexicographically by positions.  With
    fewer than two positions there is nothing to reduce and only the
    original survives (when kept); above ``max_origin_typos`` the sample is
    passed through unexpanded regardless of ``keep_original``.
    """
    if max_variant_typos < 1:
        raise ValidationError("max_variant_typos must be >= 1")
    if max_origin_typos is not None and max_origin_typos < 0:
        raise ValidationError("max_origin_typos must be >= 0 when set")
    all_positions = tuple(sorted(positions))
    k = len(all_positions)
    if max_origin_typos is not None and k > max_origin_typos:
        return [all_positions]
    if k <= 1:
        return [all_positions] if keep_original else []
    subsets: list[tuple[int, ...]] = []
    for size in range(1, min(k - 1, max_variant_typos) + 1):
        subsets.extend(itertools.combinations(all_positions, size))
    if keep_original:
        subsets.append(all_positions)
    return subsets


def _retained_source(source: str, target: str, retained: Sequence[int]) -> str:
    chars = list(target)
    for p in retained:
        chars[p] = source[p]
    return "".join(chars)


def reduce_sample(
    sample: ParallelSample,
    max_variant_typos: int = 2,
    keep_original: bool = True,
    max_origin_typos: Optional[int] = None,
) -> list[AugmentedRecord]:
    """Expand one sample into its typo-reduced variants.

    For samples that actually expand, every output (the appended original
    included) gets id ``<origin>#r<j>`` with ``j`` its index in the
    canonical subset order, and carries the retained positions.  Samples
    that do not expand keep their identity untouched.
    """
    errors = derive_errors(sample)
    k = len(errors)
    subsets = enumerate_retained(
        errors,
        max_variant_typos=max_variant_typos,
        keep_original=keep_original,
        max_origin_typos=max_origin_typos,
    )
    if k <= 1 or (max_origin_typos is not None and k > max_origin_typos):
        return [passthrough(sample)] if subsets else []
    records = []
    for j, retained in enumerate(subsets):
        variant = ParallelSample(
            id=f"{sample.id}#r{j}",
            source=_retained_source(sample.source, sample.target, retained),
            target=sample.target,
        )
        records.append(
            AugmentedRecord(
                sample=variant,
                origin_id=sample.id,
                method=METHOD_REDUCE,
                retained=retained,
            )
        )
    return records


@dataclass
class ReduceReport:
    """Corpus-level accounting for one reduction run."""

    samples_in: int = 0
    records_out: int = 0
    variants_out: int = 0
    passthroughs: int = 0
    stats: DatasetStats = field(default_factory=DatasetStats)

    def to_json(self) -> dict:
        return {
            "samples_in": self.samples_in,
            "records_out": self.records_out,
            "variants_out": self.variants_out,
            "passthroughs": self.passthroughs,
            "stats": self.stats.to_json(),
        }


def reduce_corpus(
    samples: Iterable[ParallelSample],
    max_variant_typos: int = 2,
    keep_original: bool = True,
    max_origin_typos: Optional[int] = None,
    report: Optional[ReduceReport] = None,
    threads: int = 1,
) -> Iterator[AugmentedRecord]:
    """Reduce a corpus stream; lazy over input, eager per sample."""

    def one(sample: ParallelSample) -> list[AugmentedRecord]:
        return reduce_sample(
            sample,
            max_variant_typos=max_variant_typos,
            keep_original=keep_original,
            max_origin_typos=max_origin_typos,
        )

    for records in ordered_parallel_map(one, samples, threads):
        if report is not None:
            report.samples_in += 1
        for record in records:
            if report is not None:
                report.records_out += 1
                if record.method == METHOD_REDUCE:
                    report.variants_out += 1
                else:
                    report.passthroughs += 1
                report.stats.add(record.sample)
            yield record


class TypoReducer(CorpusTransform):
    """Transformer interface over ``reduce_sample``.

    Stateless; ``fit`` is a no-op and ``transform`` concatenates the
    variant lists of all input samples.
    """

    def __init__(
        self,
        max_variant_typos: int = 2,
        keep_original: bool = True,
        max_origin_typos: Optional[int] = None,
    ):
        self.max_variant_typos = max_variant_typos
        self.keep_original = keep_original
        self.max_origin_typos = max_origin_typos

    def _transform_sample(self, sample: ParallelSample) -> list[AugmentedRecord]:
        return reduce_sample(
            sample,
            max_variant_typos=self.max_variant_typos,
            keep_original=self.keep_original,
            max_origin_typos=self.max_origin_typos,
        )
