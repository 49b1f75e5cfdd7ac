"""Scikit-learn flavored wrappers around the augmentation functions.

The augmenters are stateless, so ``fit`` only returns ``self``; they exist
as transformers so corpus expansion composes with sklearn pipelines and
``clone``/``get_params`` based tooling.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import AugmentedRecord, ParallelSample
from .errors import ValidationError

T = TypeVar("T")
R = TypeVar("R")


def as_sample(x) -> ParallelSample:
    """Coerce supported inputs to a ParallelSample.

    Accepts ParallelSample, AugmentedRecord (unwrapped to its sample),
    ``{"id", "source", "target"}`` mappings, and (id, source, target)
    sequences.
    """
    if isinstance(x, ParallelSample):
        return x
    if isinstance(x, AugmentedRecord):
        return x.sample
    if isinstance(x, dict):
        try:
            sample = ParallelSample(x["id"], x["source"], x["target"])
        except KeyError as exc:
            raise ValidationError(f"sample mapping is missing key {exc.args[0]!r}") from None
    elif isinstance(x, (tuple, list)) and len(x) == 3:
        sample = ParallelSample(x[0], x[1], x[2])
    else:
        raise ValidationError(f"cannot interpret {type(x).__name__} as a parallel sample")
    for name, value in (("id", sample.id), ("source", sample.source), ("target", sample.target)):
        if not isinstance(value, str):
            raise ValidationError(f"sample field {name!r} is not a string")
    return sample


def check_samples(X: Iterable) -> list[ParallelSample]:
    """Validate and coerce a whole input batch."""
    return [as_sample(x) for x in X]


class CorpusTransform(BaseEstimator, TransformerMixin):
    """Base for stateless sample-to-records transforms."""

    def fit(self, X, y=None):
        # Nothing to learn; kept for pipeline compatibility.
        return self

    def _transform_sample(self, sample: ParallelSample) -> list[AugmentedRecord]:
        raise NotImplementedError

    def transform(self, X) -> list[AugmentedRecord]:
        out: list[AugmentedRecord] = []
        for x in X:
            out.extend(self._transform_sample(as_sample(x)))
        return out


def ordered_parallel_map(
    fn: Callable[[T], R], items: Iterable[T], threads: int = 1
) -> Iterator[R]:
    """Map ``fn`` over ``items`` preserving order.

    With ``threads`` > 1 work runs on a thread pool; results still arrive
    in input order, so output never depends on the thread count.
    """
    if threads is None or threads <= 1:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(fn, items, chunksize=64)
