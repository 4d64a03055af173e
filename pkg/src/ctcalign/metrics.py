"""Evaluation metrics: line-level accuracy, CER, WER, and boundary CER.

Lines are matched strictly by index within a letter; a predicted line
matches when it equals the ground-truth line after trimming trailing
whitespace. Error rates are unit-cost Levenshtein distances normalized
by the ground-truth length; corpus values are micro-averages (summed
operations over summed lengths).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import UndefinedMetricError


def edit_distance(a, b) -> int:
    """Unit-cost Levenshtein distance between two sequences."""
    n, m = len(a), len(b)
    if n > m:
        a, b = b, a
        n, m = m, n
    if n == 0:
        return m
    current = list(range(n + 1))
    for i in range(1, m + 1):
        previous, current = current, [i] + [0] * n
        for j in range(1, n + 1):
            cost = 0 if a[j - 1] == b[i - 1] else 1
            current[j] = min(
                previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost
            )
    return current[n]


def cer(gt: str, pred: str) -> float:
    """Character error rate over Unicode scalar values."""
    if not gt:
        raise UndefinedMetricError("CER is undefined for empty ground truth")
    return edit_distance(gt, pred) / len(gt)


def wer(gt: str, pred: str) -> float:
    """Word error rate; tokens are runs of non-whitespace."""
    gt_tokens = gt.split()
    if not gt_tokens:
        raise UndefinedMetricError("WER is undefined without ground-truth tokens")
    return edit_distance(gt_tokens, pred.split()) / len(gt_tokens)


def _window_ops(gt: str, pred: str, n: int) -> tuple[int, int]:
    """Summed window edits and window lengths for the boundary metric."""
    ops = edit_distance(gt[:n], pred[:n]) + edit_distance(gt[-n:], pred[-n:])
    return ops, 2 * min(n, len(gt))


def cer_n(gt: str, pred: str, n: int) -> float:
    """CER restricted to the first and last ``n`` characters.

    The two windows are taken independently and may overlap on short
    strings; each is clamped to the string length.
    """
    if n < 1:
        raise ValueError("window width must be >= 1")
    if not gt:
        raise UndefinedMetricError("CER_n is undefined for empty ground truth")
    ops, length = _window_ops(gt, pred, n)
    return ops / length


@dataclass(frozen=True)
class LineSet:
    """Ordered line texts of one letter."""

    letter_id: str
    lines: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))


def _lines_match(gt_line: str, pred_line: str) -> bool:
    return gt_line.rstrip() == pred_line.rstrip()


def _pair_by_letter(gt_sets, pred_sets):
    preds = {s.letter_id: s for s in pred_sets}
    if len(preds) != len(pred_sets):
        raise ValueError("duplicate letter_id in predicted sets")
    seen = set()
    for gt in gt_sets:
        if gt.letter_id in seen:
            raise ValueError(f"duplicate letter_id {gt.letter_id!r}")
        seen.add(gt.letter_id)
        if gt.letter_id not in preds:
            raise ValueError(f"letter {gt.letter_id!r} missing from predictions")
        yield gt, preds.pop(gt.letter_id)
    if preds:
        extra = next(iter(preds))
        raise ValueError(f"letter {extra!r} missing from ground truth")


def line_level_accuracy(gt_sets, pred_sets) -> float:
    """Matched lines over all ground-truth lines, letters paired by id.

    Only indices up to the shorter of the two line lists can match; the
    denominator always counts every ground-truth line.
    """
    matched = 0
    total = 0
    for gt, pred in _pair_by_letter(gt_sets, pred_sets):
        total += len(gt.lines)
        for g, p in zip(gt.lines, pred.lines):
            matched += _lines_match(g, p)
    if total == 0:
        raise UndefinedMetricError("no ground-truth lines")
    return matched / total


@dataclass(frozen=True)
class MetricsReport:
    """Corpus-level metrics; ``None`` marks an undefined value."""

    line_accuracy: float | None
    cer: float | None
    wer: float | None
    cer_n: float | None
    n: int
    counts: dict

    def to_dict(self) -> dict:
        return {
            "line_accuracy": self.line_accuracy,
            "cer": self.cer,
            "wer": self.wer,
            "cer_n": self.cer_n,
            "n": self.n,
            "counts": dict(self.counts),
        }


def aggregate(gt_sets, pred_sets, n: int = 6) -> MetricsReport:
    """Micro-averaged corpus report over index-paired lines.

    A ground-truth line without a predicted counterpart counts as fully
    deleted; predicted lines beyond the ground truth contribute pure
    insertions to the character operations.
    """
    if n < 1:
        raise ValueError("window width must be >= 1")
    char_ops = gt_chars = 0
    word_ops = gt_words = 0
    win_ops = win_len = 0
    matched = gt_lines = 0
    for gt, pred in _pair_by_letter(gt_sets, pred_sets):
        gt_lines += len(gt.lines)
        for j in range(max(len(gt.lines), len(pred.lines))):
            g = gt.lines[j] if j < len(gt.lines) else ""
            p = pred.lines[j] if j < len(pred.lines) else ""
            if j < min(len(gt.lines), len(pred.lines)):
                matched += _lines_match(g, p)
            char_ops += edit_distance(g, p)
            gt_chars += len(g)
            word_ops += edit_distance(g.split(), p.split())
            gt_words += len(g.split())
            if g:
                ops, length = _window_ops(g, p, n)
                win_ops += ops
                win_len += length
    return MetricsReport(
        line_accuracy=matched / gt_lines if gt_lines else None,
        cer=char_ops / gt_chars if gt_chars else None,
        wer=word_ops / gt_words if gt_words else None,
        cer_n=win_ops / win_len if win_len else None,
        n=n,
        counts={
            "gt_lines": gt_lines,
            "matched_lines": matched,
            "edit_ops": char_ops,
            "gt_chars": gt_chars,
            "gt_words": gt_words,
        },
    )


def confidence_buckets(
    gt_sets, alignments, num_buckets: int = 10, measure: str = "gamma6"
):
    """Line accuracy per confidence bucket, for accuracy-vs-confidence curves.

    Pairs ground-truth lines with aligned lines by letter and index,
    buckets them by the chosen confidence, and reports per-bucket line
    accuracy. Buckets are [low, high) except the last, which is closed.
    """
    if num_buckets < 1:
        raise ValueError("need at least one bucket")
    if measure not in ("gamma", "gamma6"):
        raise ValueError(f"unknown confidence measure {measure!r}")
    gt_by_id = {s.letter_id: s for s in gt_sets}
    counts = [0] * num_buckets
    hits = [0] * num_buckets
    for result in alignments:
        gt = gt_by_id.get(result.letter_id)
        if gt is None:
            raise ValueError(f"letter {result.letter_id!r} missing from ground truth")
        for g, line in zip(gt.lines, result.lines):
            conf = getattr(line, measure)
            b = min(int(conf * num_buckets), num_buckets - 1)
            counts[b] += 1
            hits[b] += _lines_match(g, line.text)
    return [
        {
            "bucket_low": b / num_buckets,
            "bucket_high": (b + 1) / num_buckets,
            "line_accuracy": hits[b] / counts[b] if counts[b] else None,
            "count": counts[b],
        }
        for b in range(num_buckets)
    ]
