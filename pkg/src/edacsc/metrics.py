"""Sentence-level detection and correction scoring.

All metrics are sentence-level: a sentence only counts as a detection hit
when the predicted edit positions equal the true typo positions exactly,
and as a correction hit when the predicted sentence equals the corrected
sentence exactly.  Partial credit does not exist at this level.

With G = positions(source != gold) and E = positions(source != pred) over
n sentences:

    detection  accuracy  = |{E == G}| / n
    detection  precision = |{E != {} and E == G}| / |{E != {}}|
    detection  recall    = |{E != {} and E == G}| / |{G != {}}|
    correction accuracy  = |{pred == gold}| / n
    correction precision = |{E != {} and pred == gold}| / |{E != {}}|
    correction recall    = |{E != {} and pred == gold}| / |{G != {}}|
    fpr                  = |{G == {} and E != {}}| / |{G == {}}|

A ratio with an empty denominator is reported as 0.0 and listed under
``degenerate``.  F1 is the harmonic mean, 0.0 when precision + recall is 0.
"""

from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Mapping, Union

from .corpus import ParallelSample
from .errors import LengthMismatchError, ValidationError


@dataclass(frozen=True)
class EvalSentence:
    """One scored unit: source, gold correction, model prediction."""

    id: str
    source: str
    gold: str
    prediction: str


@dataclass(frozen=True)
class LevelMetrics:
    accuracy: float
    precision: float
    recall: float
    f1: float

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass(frozen=True)
class EvalCounts:
    sentences: int
    with_typos: int
    clean: int
    predicted_edited: int
    detection_hits: int
    correction_hits: int
    false_positives: int

    def to_json(self) -> dict:
        return {
            "sentences": self.sentences,
            "with_typos": self.with_typos,
            "clean": self.clean,
            "predicted_edited": self.predicted_edited,
            "detection_hits": self.detection_hits,
            "correction_hits": self.correction_hits,
            "false_positives": self.false_positives,
        }


@dataclass(frozen=True)
class EvalReport:
    detection: LevelMetrics
    correction: LevelMetrics
    fpr: float
    counts: EvalCounts
    degenerate: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "detection": self.detection.to_json(),
            "correction": self.correction.to_json(),
            "fpr": self.fpr,
            "counts": self.counts.to_json(),
            "degenerate": list(self.degenerate),
        }


def _edit_positions(a: str, b: str) -> tuple[int, ...]:
    return tuple(j for j, (x, y) in enumerate(zip(a, b)) if x != y)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def score(sentences: Iterable[EvalSentence]) -> EvalReport:
    """Score a stream of evaluation sentences.

    Raises ``LengthMismatchError`` when any gold or predicted sentence does
    not have the source's character count; substitution-only corrections
    never change length, so a mismatch means broken input.
    """
    n = 0
    with_typos = 0
    predicted_edited = 0
    det_eq = 0  # E == G, edited or not
    det_hits = 0  # E != {} and E == G
    cor_eq = 0  # pred == gold
    cor_hits = 0  # E != {} and pred == gold
    false_positives = 0
    for s in sentences:
        if len(s.gold) != len(s.source):
            raise LengthMismatchError(
                f"sentence {s.id!r}: gold has {len(s.gold)} characters "
                f"but source has {len(s.source)}"
            )
        if len(s.prediction) != len(s.source):
            raise LengthMismatchError(
                f"sentence {s.id!r}: prediction has {len(s.prediction)} characters "
                f"but source has {len(s.source)}"
            )
        n += 1
        g = _edit_positions(s.source, s.gold)
        e = _edit_positions(s.source, s.prediction)
        if g:
            with_typos += 1
        elif e:
            false_positives += 1
        if e:
            predicted_edited += 1
        if e == g:
            det_eq += 1
            if e:
                det_hits += 1
        if s.prediction == s.gold:
            cor_eq += 1
            if e:
                cor_hits += 1
    clean = n - with_typos

    degenerate: list[str] = []

    def ratio(num: int, den: int, name: str) -> float:
        if den == 0:
            degenerate.append(name)
            return 0.0
        return num / den

    det_acc = ratio(det_eq, n, "detection.accuracy")
    det_pre = ratio(det_hits, predicted_edited, "detection.precision")
    det_rec = ratio(det_hits, with_typos, "detection.recall")
    cor_acc = ratio(cor_eq, n, "correction.accuracy")
    cor_pre = ratio(cor_hits, predicted_edited, "correction.precision")
    cor_rec = ratio(cor_hits, with_typos, "correction.recall")
    fpr = ratio(false_positives, clean, "fpr")

    return EvalReport(
        detection=LevelMetrics(det_acc, det_pre, det_rec, _f1(det_pre, det_rec)),
        correction=LevelMetrics(cor_acc, cor_pre, cor_rec, _f1(cor_pre, cor_rec)),
        fpr=fpr,
        counts=EvalCounts(
            sentences=n,
            with_typos=with_typos,
            clean=clean,
            predicted_edited=predicted_edited,
            detection_hits=det_hits,
            correction_hits=cor_hits,
            false_positives=false_positives,
        ),
        degenerate=tuple(degenerate),
    )


def join_predictions(
    gold: Iterable[ParallelSample],
    predictions: Union[Mapping[str, str], Iterable[tuple[str, str]]],
) -> list[EvalSentence]:
    """Align a gold corpus with a prediction set by id.

    Every gold id must have exactly one prediction and vice versa; anything
    else raises ``ValidationError`` naming the first few offenders.
    """
    if isinstance(predictions, Mapping):
        pred_map = dict(predictions)
    else:
        pred_map = {}
        for id_, text in predictions:
            if id_ in pred_map:
                raise ValidationError(f"duplicate prediction for id {id_!r}")
            pred_map[id_] = text
    sentences = []
    missing = []
    for sample in gold:
        if sample.id not in pred_map:
            missing.append(sample.id)
            continue
        sentences.append(
            EvalSentence(
                id=sample.id,
                source=sample.source,
                gold=sample.target,
                prediction=pred_map.pop(sample.id),
            )
        )
    if missing:
        shown = ", ".join(repr(i) for i in missing[:5])
        raise ValidationError(f"{len(missing)} gold sentence(s) have no prediction: {shown}")
    if pred_map:
        shown = ", ".join(repr(i) for i in list(pred_map)[:5])
        raise ValidationError(f"{len(pred_map)} prediction id(s) not in the gold corpus: {shown}")
    return sentences


def auxiliary_filter(
    sentences: Iterable[EvalSentence], aux_chars: Iterable[str]
) -> Iterator[EvalSentence]:
    """Ignore predicted edits that touch configured auxiliary characters.

    Some test sets annotate a set of near-interchangeable function words so
    inconsistently that edits on them say nothing about the corrector.  At
    every position where the prediction differs from the source and either
    side is such a character, the prediction is reverted to the source
    character before scoring.  Gold stays untouched; an empty character set
    makes this a no-op.
    """
    aux = frozenset(aux_chars)
    for s in sentences:
        if len(s.prediction) != len(s.source):
            raise LengthMismatchError(
                f"sentence {s.id!r}: prediction has {len(s.prediction)} characters "
                f"but source has {len(s.source)}"
            )
        if not aux:
            yield s
            continue
        chars = list(s.prediction)
        changed = False
        for j, (src, out) in enumerate(zip(s.source, s.prediction)):
            if src != out and (src in aux or out in aux):
                chars[j] = src
                changed = True
        yield replace(s, prediction="".join(chars)) if changed else s


def format_report(report: EvalReport) -> str:
    """Render a report as an aligned plain-text table, values in percent."""

    def pct(x: float) -> str:
        return f"{100.0 * x:7.1f}"

    lines = [
        f"{'':<11}{'Acc':>7}{'Pre':>7}{'Rec':>7}{'F1':>7}",
    ]
    for name, level in (("Detection", report.detection), ("Correction", report.correction)):
        lines.append(
            f"{name:<11}"
            f"{pct(level.accuracy)}{pct(level.precision)}{pct(level.recall)}{pct(level.f1)}"
        )
    c = report.counts
    lines.append(f"FPR {100.0 * report.fpr:.1f}")
    lines.append(
        f"sentences {c.sentences} (with typos {c.with_typos}, clean {c.clean}), "
        f"edited by corrector {c.predicted_edited}"
    )
    if report.degenerate:
        lines.append("degenerate (denominator 0): " + ", ".join(report.degenerate))
    return "\n".join(lines)
