"""Corpus file IO: jsonl (one JSON object per line) and 3-column tsv.

jsonl records look like ``{"id": "...", "source": "...", "target": "..."}``;
augmentation provenance is written as extra keys (``origin``, ``method``,
``segment``, ``retained``) and unknown keys are ignored on read.  tsv is
``id<TAB>source<TAB>target`` with no header and cannot carry provenance or
embedded tabs.  Files are UTF-8 with LF line endings throughout.
"""

import json
import os
from typing import Callable, Iterable, Iterator, Optional, Union

from .corpus import (
    METHOD_ORIGINAL,
    METHODS,
    AugmentedRecord,
    ParallelSample,
    passthrough,
)
from .errors import CorpusFormatError, ValidationError

FORMATS = ("jsonl", "tsv")

Record = Union[ParallelSample, AugmentedRecord]


def detect_format(path: str) -> str:
    """Infer a corpus format from the file extension; jsonl by default."""
    ext = os.path.splitext(str(path))[1].lower()
    return "tsv" if ext == ".tsv" else "jsonl"


def _require_str(obj: dict, key: str, where: str) -> str:
    if key not in obj:
        raise CorpusFormatError(f"{where}: missing field {key!r}")
    value = obj[key]
    if not isinstance(value, str):
        raise CorpusFormatError(f"{where}: field {key!r} is not a string")
    return value


def _parse_jsonl(line: str, where: str) -> dict:
    try:
        obj = json.loads(line)
    except ValueError as exc:
        raise CorpusFormatError(f"{where}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise CorpusFormatError(f"{where}: line is not a JSON object")
    return obj


def _sample_from_obj(obj: dict, where: str) -> ParallelSample:
    return ParallelSample(
        id=_require_str(obj, "id", where),
        source=_require_str(obj, "source", where),
        target=_require_str(obj, "target", where),
    )


def _sample_from_tsv(line: str, where: str) -> ParallelSample:
    fields = line.split("\t")
    if len(fields) != 3:
        raise CorpusFormatError(f"{where}: expected 3 tab-separated fields, got {len(fields)}")
    return ParallelSample(id=fields[0], source=fields[1], target=fields[2])


def _iter_lines(path: str):
    with open(path, "r", encoding="utf-8", newline="\n") as fh:
        for lineno, raw in enumerate(fh, start=1):
            yield lineno, raw.rstrip("\n")


def read_corpus(
    path: str,
    fmt: Optional[str] = None,
    strict: bool = True,
    on_skip: Optional[Callable[[int, str], None]] = None,
) -> Iterator[ParallelSample]:
    """Stream samples from a corpus file.

    Structural parse only; alignment and uniqueness are validate_corpus's
    job.  In strict mode a malformed line raises ``CorpusFormatError``
    naming the file and line; otherwise the line is skipped and ``on_skip``
    (if given) is called with the line number and the reason.
    """
    fmt = fmt or detect_format(path)
    if fmt not in FORMATS:
        raise ValidationError(f"unknown corpus format {fmt!r} (expected one of {FORMATS})")
    parse = _sample_from_tsv if fmt == "tsv" else (
        lambda line, where: _sample_from_obj(_parse_jsonl(line, where), where)
    )
    for lineno, line in _iter_lines(path):
        where = f"{path}:{lineno}"
        if not line:
            err = f"{where}: empty line"
            if strict:
                raise CorpusFormatError(err)
            if on_skip is not None:
                on_skip(lineno, err)
            continue
        try:
            yield parse(line, where)
        except CorpusFormatError as exc:
            if strict:
                raise
            if on_skip is not None:
                on_skip(lineno, str(exc))


def _augmented_from_obj(obj: dict, where: str) -> AugmentedRecord:
    sample = _sample_from_obj(obj, where)
    method = obj.get("method", METHOD_ORIGINAL)
    if method not in METHODS:
        raise CorpusFormatError(f"{where}: unknown method {method!r}")
    if method == METHOD_ORIGINAL:
        return passthrough(sample)
    retained = obj.get("retained")
    if retained is not None:
        if not isinstance(retained, list) or not all(isinstance(p, int) for p in retained):
            raise CorpusFormatError(f"{where}: field 'retained' is not a list of integers")
        retained = tuple(retained)
    segment = obj.get("segment")
    if segment is not None and not isinstance(segment, int):
        raise CorpusFormatError(f"{where}: field 'segment' is not an integer")
    return AugmentedRecord(
        sample=sample,
        origin_id=obj.get("origin", sample.id),
        method=method,
        segment_index=segment,
        retained=retained,
    )


def read_augmented(
    path: str,
    fmt: Optional[str] = None,
    strict: bool = True,
    on_skip: Optional[Callable[[int, str], None]] = None,
) -> Iterator[AugmentedRecord]:
    """Like read_corpus but keeps augmentation provenance when present.

    Plain records (and every tsv record) come back as method ``original``.
    """
    fmt = fmt or detect_format(path)
    if fmt == "tsv":
        for sample in read_corpus(path, fmt=fmt, strict=strict, on_skip=on_skip):
            yield passthrough(sample)
        return
    if fmt not in FORMATS:
        raise ValidationError(f"unknown corpus format {fmt!r} (expected one of {FORMATS})")
    for lineno, line in _iter_lines(path):
        where = f"{path}:{lineno}"
        if not line:
            if strict:
                raise CorpusFormatError(f"{where}: empty line")
            if on_skip is not None:
                on_skip(lineno, f"{where}: empty line")
            continue
        try:
            yield _augmented_from_obj(_parse_jsonl(line, where), where)
        except CorpusFormatError as exc:
            if strict:
                raise
            if on_skip is not None:
                on_skip(lineno, str(exc))


def record_to_obj(record: Record) -> dict:
    """Serialize a sample or augmented record to a jsonl-ready dict.

    Provenance keys are emitted only for genuinely augmented records, so a
    corpus that passes through an augmenter untouched round-trips to the
    same bytes.
    """
    if isinstance(record, AugmentedRecord):
        sample = record.sample
        obj = {"id": sample.id, "source": sample.source, "target": sample.target}
        if record.method != METHOD_ORIGINAL:
            obj["origin"] = record.origin_id
            obj["method"] = record.method
            if record.segment_index is not None:
                obj["segment"] = record.segment_index
            if record.retained is not None:
                obj["retained"] = list(record.retained)
        return obj
    return {"id": record.id, "source": record.source, "target": record.target}


def _as_sample_fields(record: Record) -> ParallelSample:
    return record.sample if isinstance(record, AugmentedRecord) else record


def write_corpus(records: Iterable[Record], path: str, fmt: Optional[str] = None) -> int:
    """Write records to ``path``; returns the number written."""
    fmt = fmt or detect_format(path)
    if fmt not in FORMATS:
        raise ValidationError(f"unknown corpus format {fmt!r} (expected one of {FORMATS})")
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            if fmt == "tsv":
                sample = _as_sample_fields(record)
                for name, value in (("id", sample.id), ("source", sample.source), ("target", sample.target)):
                    if "\t" in value:
                        raise ValidationError(
                            f"sample {sample.id!r}: {name} contains a tab, not representable in tsv"
                        )
                    if "\n" in value:
                        raise ValidationError(
                            f"sample {sample.id!r}: {name} contains a newline, not representable in tsv"
                        )
                fh.write(f"{sample.id}\t{sample.source}\t{sample.target}\n")
            else:
                fh.write(json.dumps(record_to_obj(record), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_predictions(path: str) -> Iterator[tuple[str, str]]:
    """Stream (id, prediction) pairs from a predictions jsonl file."""
    for lineno, line in _iter_lines(path):
        where = f"{path}:{lineno}"
        if not line:
            raise CorpusFormatError(f"{where}: empty line")
        obj = _parse_jsonl(line, where)
        yield _require_str(obj, "id", where), _require_str(obj, "prediction", where)


def write_predictions(pairs: Iterable[tuple[str, str]], path: str) -> int:
    """Write (id, prediction) pairs as jsonl; returns the number written."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for id_, prediction in pairs:
            fh.write(json.dumps({"id": id_, "prediction": prediction}, ensure_ascii=False) + "\n")
            n += 1
    return n


def read_texts(path: str, fmt: Optional[str] = None) -> Iterator[tuple[str, str]]:
    """Stream (id, text) pairs for correction input.

    jsonl records may carry the sentence under ``text`` or, for corpus
    files, under ``source``; tsv corpus files use their source column.
    """
    fmt = fmt or detect_format(path)
    if fmt == "tsv":
        for sample in read_corpus(path, fmt=fmt):
            yield sample.id, sample.source
        return
    for lineno, line in _iter_lines(path):
        where = f"{path}:{lineno}"
        if not line:
            raise CorpusFormatError(f"{where}: empty line")
        obj = _parse_jsonl(line, where)
        id_ = _require_str(obj, "id", where)
        if "text" in obj:
            yield id_, _require_str(obj, "text", where)
        else:
            yield id_, _require_str(obj, "source", where)
