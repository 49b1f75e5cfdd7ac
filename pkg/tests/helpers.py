"""Shared test utilities.

``reference_score`` re-derives every metric by brute-force per-sentence
classification, structured nothing like the library implementation, so the
two can check each other.  The corpus generators build aligned pairs with
controlled clause and typo counts from a fixed alphabet.
"""

import random

from edacsc import EvalSentence, ParallelSample

# Filler alphabet, typo alphabet, and delimiters are disjoint by
# construction so generated typos never collide with split points.
CHARS = "的一是在不了有和人这中大为上个国我以要他时来用们生到作地于出就分对成会可主发年动"
TYPO_CHARS = "拿换错别字误偏倒乱差漏抹撞"
DELIMS = ("，", "。", "！", "？")


def make_clause(rng: random.Random, length: int) -> str:
    return "".join(rng.choice(CHARS) for _ in range(length))


def make_pair(
    rng: random.Random,
    n_clauses: int,
    typos_per_clause,
    clause_len=(3, 8),
) -> tuple[str, str]:
    """One aligned pair: clauses end with a delimiter, typos never touch it.

    ``typos_per_clause`` is a callable(rng, clause_index) -> int so callers
    control which clauses stay clean.
    """
    target_parts = []
    source_parts = []
    for ci in range(n_clauses):
        body = make_clause(rng, rng.randint(*clause_len))
        delim = rng.choice(DELIMS)
        chars = list(body)
        n_typos = min(typos_per_clause(rng, ci), len(chars))
        for pos in rng.sample(range(len(chars)), n_typos):
            chars[pos] = rng.choice(TYPO_CHARS)
        target_parts.append(body + delim)
        source_parts.append("".join(chars) + delim)
    return "".join(source_parts), "".join(target_parts)


def make_corpus(rng: random.Random, n: int, max_clauses=4, max_typos=2) -> list[ParallelSample]:
    corpus = []
    for i in range(n):
        source, target = make_pair(
            rng,
            n_clauses=rng.randint(1, max_clauses),
            typos_per_clause=lambda r, ci: r.randint(0, max_typos),
        )
        corpus.append(ParallelSample(f"s{i}", source, target))
    return corpus


def make_eval_corpus(rng: random.Random, n: int) -> list[EvalSentence]:
    """Evaluation sentences covering every corrector behavior mode."""
    sentences = []
    for i in range(n):
        source, gold = make_pair(
            rng,
            n_clauses=rng.randint(1, 3),
            typos_per_clause=lambda r, ci: r.randint(0, 2),
        )
        mode = rng.choice(("perfect", "noop", "partial", "wrong", "overcorrect"))
        pred = list(source)
        diffs = [j for j, (a, b) in enumerate(zip(source, gold)) if a != b]
        if mode == "perfect":
            pred = list(gold)
        elif mode == "partial" and diffs:
            for j in rng.sample(diffs, rng.randint(1, len(diffs))):
                pred[j] = gold[j]
        elif mode == "wrong":
            j = rng.randrange(len(source))
            choices = [c for c in TYPO_CHARS if c != source[j]]
            pred[j] = rng.choice(choices)
        elif mode == "overcorrect":
            for j in diffs:
                pred[j] = gold[j]
            clean = [j for j in range(len(source)) if j not in diffs and source[j] not in DELIMS]
            if clean:
                j = rng.choice(clean)
                choices = [c for c in TYPO_CHARS if c != source[j]]
                pred[j] = rng.choice(choices)
        sentences.append(EvalSentence(f"e{i}", source, gold, "".join(pred)))
    return sentences


def reference_score(sentences) -> dict:
    """Direct-definition sentence classifier, independent of the library.

    Classifies every sentence into explicit boolean facts first, then
    counts; every ratio is written out separately.
    """
    facts = []
    for s in sentences:
        gold_set = {j for j in range(len(s.source)) if s.source[j] != s.gold[j]}
        pred_set = {j for j in range(len(s.source)) if s.source[j] != s.prediction[j]}
        facts.append(
            {
                "has_error": len(gold_set) > 0,
                "edited": len(pred_set) > 0,
                "sets_equal": gold_set == pred_set,
                "fully_corrected": s.prediction == s.gold,
            }
        )

    n = len(facts)
    degenerate = set()

    def div(num, den, name):
        if den == 0:
            degenerate.add(name)
            return 0.0
        return num / den

    det_acc = div(sum(1 for f in facts if f["sets_equal"]), n, "detection.accuracy")
    det_pre = div(
        sum(1 for f in facts if f["edited"] and f["sets_equal"]),
        sum(1 for f in facts if f["edited"]),
        "detection.precision",
    )
    det_rec = div(
        sum(1 for f in facts if f["edited"] and f["sets_equal"]),
        sum(1 for f in facts if f["has_error"]),
        "detection.recall",
    )
    cor_acc = div(sum(1 for f in facts if f["fully_corrected"]), n, "correction.accuracy")
    cor_pre = div(
        sum(1 for f in facts if f["edited"] and f["fully_corrected"]),
        sum(1 for f in facts if f["edited"]),
        "correction.precision",
    )
    cor_rec = div(
        sum(1 for f in facts if f["edited"] and f["fully_corrected"]),
        sum(1 for f in facts if f["has_error"]),
        "correction.recall",
    )
    fpr = div(
        sum(1 for f in facts if not f["has_error"] and f["edited"]),
        sum(1 for f in facts if not f["has_error"]),
        "fpr",
    )

    def f1(p, r):
        return 0.0 if p + r == 0 else 2 * p * r / (p + r)

    return {
        "detection": {
            "accuracy": det_acc,
            "precision": det_pre,
            "recall": det_rec,
            "f1": f1(det_pre, det_rec),
        },
        "correction": {
            "accuracy": cor_acc,
            "precision": cor_pre,
            "recall": cor_rec,
            "f1": f1(cor_pre, cor_rec),
        },
        "fpr": fpr,
        "degenerate": degenerate,
    }
