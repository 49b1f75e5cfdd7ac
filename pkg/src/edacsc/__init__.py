"""Corpus augmentation and evaluation toolkit for Chinese spelling correction.

The package turns one parallel corpus of (source, target) sentence pairs
into easier-to-learn variants (splitting long sentences at punctuation,
reducing multi-typo sentences to lower-typo variants), merges and measures
the resulting datasets, scores corrector output at sentence level, and
drives external corrector processes over a small line-delimited JSON
protocol, optionally with constrained iterative correction.
"""

__version__ = "0.1.0"

from .base import CorpusTransform, as_sample, check_samples
from .bridge import (
    CicIteration,
    CicResult,
    MockCorrector,
    SubprocessCorrector,
    cic_apply,
    serve_stdio,
)
from .corpus import (
    AugmentedRecord,
    ParallelSample,
    ValidationReport,
    derive_errors,
    passthrough,
    validate_corpus,
)
from .datasets import (
    PROCEDURES,
    DatasetStats,
    compute_stats,
    find_collisions,
    make_custom_schedule,
    make_schedule,
    merge_corpora,
    write_manifest,
)
from .errors import (
    CorpusFormatError,
    CorrectorTimeoutError,
    DelimiterTypoError,
    EdacscError,
    LengthMismatchError,
    ProtocolError,
    ScheduleError,
    TransportError,
    ValidationError,
)
from .io import (
    read_augmented,
    read_corpus,
    read_predictions,
    read_texts,
    write_corpus,
    write_predictions,
)
from .metrics import (
    EvalReport,
    EvalSentence,
    auxiliary_filter,
    format_report,
    join_predictions,
    score,
)
from .reduction import (
    ReduceReport,
    TypoReducer,
    enumerate_retained,
    reduce_corpus,
    reduce_sample,
)
from .splitting import (
    DEFAULT_DELIMITERS,
    SentenceSplitter,
    SplitReport,
    split_corpus,
    split_sample,
)

__all__ = [
    "AugmentedRecord",
    "CicIteration",
    "CicResult",
    "CorpusFormatError",
    "CorpusTransform",
    "CorrectorTimeoutError",
    "DEFAULT_DELIMITERS",
    "DatasetStats",
    "DelimiterTypoError",
    "EdacscError",
    "EvalReport",
    "EvalSentence",
    "LengthMismatchError",
    "MockCorrector",
    "PROCEDURES",
    "ParallelSample",
    "ProtocolError",
    "ReduceReport",
    "ScheduleError",
    "SentenceSplitter",
    "SplitReport",
    "SubprocessCorrector",
    "TransportError",
    "TypoReducer",
    "ValidationError",
    "ValidationReport",
    "as_sample",
    "auxiliary_filter",
    "check_samples",
    "cic_apply",
    "compute_stats",
    "derive_errors",
    "enumerate_retained",
    "find_collisions",
    "format_report",
    "join_predictions",
    "make_custom_schedule",
    "make_schedule",
    "merge_corpora",
    "passthrough",
    "read_augmented",
    "read_corpus",
    "read_predictions",
    "read_texts",
    "reduce_corpus",
    "reduce_sample",
    "score",
    "serve_stdio",
    "split_corpus",
    "split_sample",
    "validate_corpus",
    "write_corpus",
    "write_manifest",
    "write_predictions",
]
